//! End-to-end checks of the batch runners on real directory trees:
//! scheduling-independent outputs, manifest completeness, bit-exact
//! replay, and the promised output layouts.

use std::collections::BTreeMap;
use std::path::Path;

use cuebias_core::corrupt::{corruption_grid, CorruptionContext, CorruptionFamily};
use cuebias_core::eed::EEDPreset;
use cuebias_core::image::{
    load_label_png, load_png, save_label_png, save_png, ImageBuffer, LabelMask,
};
use cuebias_core::manifest::{read_jsonl, ShuffleLine, StylizeLine};
use cuebias_core::pipeline::{
    corrupt_dataset, eed_dataset, replay_stylize, shuffle_dataset, stylize_dataset,
    StylizeParams,
};
use cuebias_core::shuffle::ShuffleSpec;
use cuebias_core::stylize::{StylePool, StyleSource};
use cuebias_core::Error;

/// Deterministic pseudo-noise in [0, 1).
fn lcg(state: &mut u64) -> f64 {
    *state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
    (*state >> 11) as f64 / (1u64 << 53) as f64
}

/// A small RGB image with smooth structure plus noise, on the 1/255 grid
/// so a save/load round trip is exact.
fn test_image(w: usize, h: usize, seed: u64) -> ImageBuffer {
    let mut state = seed.wrapping_mul(2654435761).wrapping_add(1);
    let mut img = ImageBuffer::new(w, h, 3).unwrap();
    for y in 0..h {
        for x in 0..w {
            for ch in 0..3 {
                let smooth = 0.5
                    + 0.3 * ((x as f64 / w as f64 + ch as f64 * 0.2) * std::f64::consts::TAU).sin()
                        * ((y as f64 / h as f64) * std::f64::consts::PI).cos();
                let v = (smooth + 0.2 * (lcg(&mut state) - 0.5)).clamp(0.0, 1.0);
                let byte = (v * 255.0).round() as u8;
                img.set(x, y, ch, byte as f64 / 255.0);
            }
        }
    }
    img
}

/// Write a little nested dataset (two top-level images, one under a
/// subdirectory) and return its ids.
fn write_dataset(dir: &Path, w: usize, h: usize) -> Vec<String> {
    let ids = vec!["frame_a".to_string(), "frame_b".to_string(), "sub/frame_c".to_string()];
    for (i, id) in ids.iter().enumerate() {
        let path = dir.join(format!("{id}.png"));
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        save_png(&test_image(w, h, i as u64 + 1), path).unwrap();
    }
    ids
}

/// Write a style pool of three images with distinct statistics.
fn write_style_pool(dir: &Path) -> StyleSource {
    std::fs::create_dir_all(dir).unwrap();
    for (i, name) in ["warm", "cool", "flat"].iter().enumerate() {
        let mut img = test_image(20, 14, 40 + i as u64);
        for v in img.data_mut() {
            *v = (*v * (0.4 + 0.2 * i as f64) + 0.1 * i as f64).clamp(0.0, 1.0);
        }
        save_png(&img, dir.join(format!("{name}.png"))).unwrap();
    }
    StyleSource::Builtin(StylePool::load(dir).unwrap())
}

/// Every file under `root` as (relative path, bytes), sorted.
fn tree_files(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn visit(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        let mut entries: Vec<_> = std::fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        entries.sort();
        for path in entries {
            if path.is_dir() {
                visit(root, &path, out);
            } else {
                let rel = path
                    .strip_prefix(root)
                    .unwrap()
                    .components()
                    .map(|c| c.as_os_str().to_string_lossy())
                    .collect::<Vec<_>>()
                    .join("/");
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    visit(root, root, &mut out);
    out
}

#[test]
fn stylize_runs_are_identical_across_worker_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("input");
    std::fs::create_dir_all(&input).unwrap();
    write_dataset(&input, 32, 24);
    let source = write_style_pool(&tmp.path().join("styles"));
    let params = StylizeParams {
        n: 7,
        p: 0.5,
        resize: Default::default(),
    };

    let out_serial = tmp.path().join("out1");
    let out_parallel = tmp.path().join("out4");
    stylize_dataset(&input, &out_serial, &source, &params, 1234, Some(1)).unwrap();
    stylize_dataset(&input, &out_parallel, &source, &params, 1234, Some(4)).unwrap();

    let serial = tree_files(&out_serial);
    let parallel = tree_files(&out_parallel);
    assert_eq!(
        serial.keys().collect::<Vec<_>>(),
        parallel.keys().collect::<Vec<_>>()
    );
    for (rel, bytes) in &serial {
        assert_eq!(bytes, &parallel[rel], "{rel} differs between runs");
    }
}

#[test]
fn stylize_manifest_is_complete_and_sorted() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("input");
    std::fs::create_dir_all(&input).unwrap();
    let ids = write_dataset(&input, 28, 20);
    let source = write_style_pool(&tmp.path().join("styles"));
    let params = StylizeParams {
        n: 5,
        p: 0.7,
        resize: Default::default(),
    };
    let out = tmp.path().join("out");
    stylize_dataset(&input, &out, &source, &params, 9, None).unwrap();

    let lines: Vec<StylizeLine> = read_jsonl(out.join("manifest.jsonl")).unwrap();
    let manifest_ids: Vec<&str> = lines.iter().map(|l| l.record.content_id.as_str()).collect();
    assert_eq!(manifest_ids, ids, "one sorted line per input image");

    // Exactly the manifested outputs exist: no orphans in either direction.
    let outputs: Vec<String> = tree_files(&out)
        .into_keys()
        .filter(|rel| rel.ends_with(".png"))
        .collect();
    let mut manifested: Vec<String> = lines.iter().map(|l| l.output_path.clone()).collect();
    manifested.sort();
    assert_eq!(outputs, manifested);
    for line in &lines {
        line.record.validate().unwrap();
        assert_eq!(line.record.seed, 9 ^ cuebias_core::seed::fnv1a64(line.record.content_id.as_bytes()));
    }
}

#[test]
fn manifest_records_replay_saved_outputs_bit_for_bit() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("input");
    std::fs::create_dir_all(&input).unwrap();
    write_dataset(&input, 26, 18);
    let style_dir = tmp.path().join("styles");
    let source = write_style_pool(&style_dir);
    let params = StylizeParams {
        n: 6,
        p: 0.8,
        resize: cuebias_core::pipeline::ResizeProtocol {
            up: Some((39, 27)),
            down: Some((26, 18)),
        },
    };
    let out = tmp.path().join("out");
    stylize_dataset(&input, &out, &source, &params, 4242, None).unwrap();

    // Rebuild the style source from disk, as a later process would.
    let reopened = StyleSource::Builtin(StylePool::load(&style_dir).unwrap());
    let lines: Vec<StylizeLine> = read_jsonl(out.join("manifest.jsonl")).unwrap();
    assert!(lines.iter().any(|l| l.record.stylized.contains(&true)));
    for line in &lines {
        let content = load_png(input.join(format!("{}.png", line.record.content_id))).unwrap();
        let replayed = replay_stylize(&content, &line.record, &reopened, &params.resize).unwrap();
        let replay_path = tmp.path().join("replay.png");
        save_png(&replayed, &replay_path).unwrap();
        assert_eq!(
            std::fs::read(&replay_path).unwrap(),
            std::fs::read(out.join(&line.output_path)).unwrap(),
            "replay of {} drifted",
            line.record.content_id
        );
    }
}

#[test]
fn shuffle_moves_labels_with_their_pixels() {
    let tmp = tempfile::tempdir().unwrap();
    let images = tmp.path().join("images");
    let labels = tmp.path().join("labels");
    std::fs::create_dir_all(&images).unwrap();
    let ids = write_dataset(&images, 30, 22);
    // Labels are a pure function of the red byte, so the pairing must
    // survive any rearrangement that moves pixels and labels together.
    for id in &ids {
        let img = load_png(images.join(format!("{id}.png"))).unwrap();
        let mut mask = LabelMask::filled(img.width(), img.height(), 0).unwrap();
        for y in 0..img.height() {
            for x in 0..img.width() {
                let byte = (img.get(x, y, 0) * 255.0).round() as u8;
                mask.set(x, y, byte % 19);
            }
        }
        let path = labels.join(format!("{id}.png"));
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        save_label_png(&mask, path).unwrap();
    }

    let out = tmp.path().join("out");
    let lines = shuffle_dataset(
        &images,
        &labels,
        &out,
        &ShuffleSpec { k: 6 },
        2024,
        Some(2),
    )
    .unwrap();
    assert_eq!(lines.len(), ids.len());

    for id in &ids {
        let img = load_png(out.join(format!("images/{id}.png"))).unwrap();
        let mask = load_label_png(out.join(format!("labels/{id}.png"))).unwrap();
        for y in 0..img.height() {
            for x in 0..img.width() {
                let byte = (img.get(x, y, 0) * 255.0).round() as u8;
                assert_eq!(mask.get(x, y), byte % 19, "label drifted at ({x}, {y})");
            }
        }
    }

    let manifest: Vec<ShuffleLine> = read_jsonl(out.join("manifest.jsonl")).unwrap();
    assert_eq!(manifest, lines);
    for line in &manifest {
        assert_eq!(line.k, 6);
        let mut perm = line.permutation.clone();
        perm.sort();
        assert_eq!(perm, (0..6).collect::<Vec<_>>());
    }
}

#[test]
fn shuffle_requires_a_label_for_every_image() {
    let tmp = tempfile::tempdir().unwrap();
    let images = tmp.path().join("images");
    let labels = tmp.path().join("labels");
    std::fs::create_dir_all(&images).unwrap();
    std::fs::create_dir_all(&labels).unwrap();
    write_dataset(&images, 12, 10);
    let err = shuffle_dataset(
        &images,
        &labels,
        tmp.path().join("out"),
        &ShuffleSpec { k: 3 },
        1,
        None,
    )
    .unwrap_err();
    assert!(matches!(err, Error::Io { .. }), "got {err}");
}

#[test]
fn corruption_grid_layout_identity_levels_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("input");
    std::fs::create_dir_all(&input).unwrap();
    let ids = write_dataset(&input, 20, 14);
    let specs = corruption_grid(false);
    let out = tmp.path().join("out");
    let lines = corrupt_dataset(
        &input,
        &out,
        &specs,
        &CorruptionContext::default(),
        31415,
        Some(3),
    )
    .unwrap();
    assert_eq!(lines.len(), specs.len() * ids.len());

    for line in &lines {
        assert!(out.join(&line.output_path).is_file(), "{} missing", line.output_path);
    }
    // Identity severities hand the input through byte-exactly.
    for id in &ids {
        let original = std::fs::read(input.join(format!("{id}.png"))).unwrap();
        for rel in [
            format!("contrast/1/{id}.png"),
            format!("uniform-noise/0/{id}.png"),
            format!("phase-noise/0/{id}.png"),
        ] {
            assert_eq!(
                std::fs::read(out.join(&rel)).unwrap(),
                original,
                "{rel} is not an identity"
            );
        }
    }
    // Grid order is preserved within each content id.
    for group in lines.chunks(specs.len()) {
        assert!(group.windows(2).all(|w| w[0].content_id == w[1].content_id));
        for (line, spec) in group.iter().zip(&specs) {
            assert_eq!(line.family, spec.family.name());
            assert_eq!(line.level, spec.level);
        }
    }
    // Severity directories render floats the way the manifest does.
    assert!(out.join("low-pass/40").is_dir());
    assert!(out.join("high-pass/0.45").is_dir());
    let n_phase = lines
        .iter()
        .filter(|l| l.family == CorruptionFamily::PhaseNoise.name())
        .count();
    assert_eq!(n_phase, 7 * ids.len());
}

#[test]
fn corruption_runs_are_identical_across_worker_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("input");
    std::fs::create_dir_all(&input).unwrap();
    write_dataset(&input, 16, 12);
    let specs = corruption_grid(true);
    let ctx = CorruptionContext::default();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    corrupt_dataset(&input, &a, &specs, &ctx, 7, Some(1)).unwrap();
    corrupt_dataset(&input, &b, &specs, &ctx, 7, Some(5)).unwrap();
    assert_eq!(tree_files(&a), tree_files(&b));
}

#[test]
fn eed_mirrors_the_input_layout_deterministically() {
    let tmp = tempfile::tempdir().unwrap();
    let input = tmp.path().join("input");
    std::fs::create_dir_all(&input).unwrap();
    let ids = write_dataset(&input, 18, 14);
    // Preset-shaped parameters with a step count a test can afford.
    let preset = EEDPreset {
        kappa: 1.0 / 15.0,
        kernel_size: 5,
        sigma: 5f64.sqrt(),
        steps: 12,
        tau: 0.2,
    };
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let count = eed_dataset(&input, &a, &preset, Some(1)).unwrap();
    assert_eq!(count, ids.len());
    eed_dataset(&input, &b, &preset, Some(4)).unwrap();
    for id in &ids {
        let rel = format!("{id}.png");
        assert!(a.join(&rel).is_file(), "{rel} missing");
        assert_eq!(
            std::fs::read(a.join(&rel)).unwrap(),
            std::fs::read(b.join(&rel)).unwrap()
        );
        // The diffusion must actually have changed the image.
        assert_ne!(
            std::fs::read(a.join(&rel)).unwrap(),
            std::fs::read(input.join(&rel)).unwrap()
        );
    }
}
