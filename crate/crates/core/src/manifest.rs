//! Manifest records and the JSON-lines format batch runs emit.
//!
//! Every generated output is described by exactly one manifest line. A
//! line is a single-line JSON object with a fixed key order, newline
//! terminated (LF, UTF-8); lines are sorted by `content_id` before the
//! final write so a manifest is a pure function of inputs and seed, not
//! of worker scheduling. Paths inside manifests are relative to the
//! output root, which keeps two runs into different directories
//! byte-comparable.

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{Error, Result};

/// Everything needed to regenerate one stylized output bit for bit
/// (given the content image, the style source and the resize protocol):
/// the per-image seed and the materialized random choices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentationRecord {
    pub content_id: String,
    /// Per-image seed (global seed folded with the content id).
    pub seed: u64,
    /// Number of Voronoi cells.
    pub n: usize,
    /// Per-cell stylization probability.
    pub p: f64,
    /// Cell sites, in the working (post-upscale) pixel frame.
    pub sites: Vec<(usize, usize)>,
    /// Style id drawn for every cell, stylized or not.
    pub styles: Vec<String>,
    /// Which cells were re-textured.
    pub stylized: Vec<bool>,
}

impl AugmentationRecord {
    /// Structural sanity: one site, style and flag per cell.
    pub fn validate(&self) -> Result<()> {
        if self.sites.len() != self.n
            || self.styles.len() != self.n
            || self.stylized.len() != self.n
        {
            return Err(Error::Manifest(format!(
                "record {:?} declares n = {} but carries {} sites, {} styles, {} flags",
                self.content_id,
                self.n,
                self.sites.len(),
                self.styles.len(),
                self.stylized.len()
            )));
        }
        Ok(())
    }
}

/// One stylize manifest line: the record plus where the output landed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StylizeLine {
    #[serde(flatten)]
    pub record: AugmentationRecord,
    /// Output path relative to the output root, `/`-separated.
    pub output_path: String,
}

/// One shuffle manifest line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShuffleLine {
    pub content_id: String,
    /// Per-image seed (global seed folded with the content id).
    pub seed: u64,
    /// Number of patches.
    pub k: usize,
    pub sites: Vec<(usize, usize)>,
    pub permutation: Vec<usize>,
}

/// One corruption manifest line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptLine {
    pub content_id: String,
    pub family: String,
    pub level: f64,
    /// Per-image seed (global seed folded with the content id).
    pub seed: u64,
    /// Output path relative to the output root, `/`-separated.
    pub output_path: String,
}

/// Serialize records as JSON lines (LF-terminated, UTF-8).
pub fn write_jsonl<T: Serialize>(lines: &[T], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    for line in lines {
        let json = serde_json::to_string(line).map_err(|e| Error::Manifest(e.to_string()))?;
        out.write_all(json.as_bytes())
            .and_then(|_| out.write_all(b"\n"))
            .map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Parse a JSON-lines manifest back into records.
pub fn read_jsonl<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = std::io::BufReader::new(file);
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line)
            .map_err(|e| Error::Manifest(format!("{}:{}: {e}", path.display(), i + 1)))?;
        records.push(record);
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_record() -> AugmentationRecord {
        AugmentationRecord {
            content_id: "img_000".into(),
            seed: 123,
            n: 2,
            p: 0.5,
            sites: vec![(1, 2), (3, 4)],
            styles: vec!["a".into(), "b".into()],
            stylized: vec![true, false],
        }
    }

    #[test]
    fn stylize_line_serializes_with_fixed_key_order() {
        let line = StylizeLine {
            record: sample_record(),
            output_path: "img_000.png".into(),
        };
        let json = serde_json::to_string(&line).unwrap();
        assert_eq!(
            json,
            r#"{"content_id":"img_000","seed":123,"n":2,"p":0.5,"sites":[[1,2],[3,4]],"styles":["a","b"],"stylized":[true,false],"output_path":"img_000.png"}"#
        );
    }

    #[test]
    fn shuffle_line_serializes_with_fixed_key_order() {
        let line = ShuffleLine {
            content_id: "img_001".into(),
            seed: 7,
            k: 3,
            sites: vec![(0, 0), (5, 5), (2, 9)],
            permutation: vec![2, 0, 1],
        };
        assert_eq!(
            serde_json::to_string(&line).unwrap(),
            r#"{"content_id":"img_001","seed":7,"k":3,"sites":[[0,0],[5,5],[2,9]],"permutation":[2,0,1]}"#
        );
    }

    #[test]
    fn corrupt_line_serializes_with_fixed_key_order() {
        let line = CorruptLine {
            content_id: "img_002".into(),
            family: "low-pass".into(),
            level: 40.0,
            seed: 9,
            output_path: "low-pass/40/img_002.png".into(),
        };
        assert_eq!(
            serde_json::to_string(&line).unwrap(),
            r#"{"content_id":"img_002","family":"low-pass","level":40.0,"seed":9,"output_path":"low-pass/40/img_002.png"}"#
        );
    }

    #[test]
    fn jsonl_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.jsonl");
        let lines = vec![
            StylizeLine {
                record: sample_record(),
                output_path: "a.png".into(),
            },
            StylizeLine {
                record: AugmentationRecord {
                    content_id: "img_001".into(),
                    ..sample_record()
                },
                output_path: "b.png".into(),
            },
        ];
        write_jsonl(&lines, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(bytes.iter().filter(|&&b| b == b'\n').count(), 2);
        assert!(bytes.ends_with(b"\n"));
        let back: Vec<StylizeLine> = read_jsonl(&path).unwrap();
        assert_eq!(back, lines);
    }

    #[test]
    fn record_validation_checks_lengths() {
        let mut record = sample_record();
        record.validate().unwrap();
        record.styles.pop();
        assert!(record.validate().is_err());
    }

    #[test]
    fn malformed_manifest_lines_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("broken.jsonl");
        std::fs::write(&path, b"{\"content_id\": 3}\n").unwrap();
        assert!(matches!(
            read_jsonl::<StylizeLine>(&path),
            Err(Error::Manifest(_))
        ));
    }
}
