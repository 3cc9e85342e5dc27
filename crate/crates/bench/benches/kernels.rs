//! Criterion benches for the hot kernels: blur, cell assignment,
//! statistics alignment, one diffusion step, phase noise and the patch
//! shuffle.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use cuebias_bench::{noise_image, structured_image};
use cuebias_core::corrupt::apply_phase_noise;
use cuebias_core::eed::{diffusion_tensor, eed_step, structure_tensor, EEDPreset};
use cuebias_core::image::LabelMask;
use cuebias_core::shuffle::{shuffle_voronoi, ShuffleSpec};
use cuebias_core::stylize::{align_statistics, channel_stats, ChannelStats};
use cuebias_core::voronoi::{assign_cells, sample_sites};
use cuebias_core::{GaussianSpec, SeedStream};

fn bench_gaussian_blur(c: &mut Criterion) {
    let img = noise_image(256, 256, 3, 1);
    let spec = GaussianSpec::new(3.0).unwrap();
    c.bench_function("gaussian_blur/256x256x3 sigma=3", |b| {
        b.iter(|| cuebias_core::image::gaussian_blur(black_box(&img), &spec))
    });
}

fn bench_voronoi_assignment(c: &mut Criterion) {
    let mut stream = SeedStream::new(11);
    let sites = sample_sites(&mut stream, 64, 512, 512).unwrap();
    c.bench_function("assign_cells/512x512 n=64", |b| {
        b.iter(|| assign_cells(black_box(&sites), 512, 512).unwrap())
    });
}

fn bench_alignment(c: &mut Criterion) {
    let content = structured_image(512, 512, 3);
    let content_stats = channel_stats(&content);
    let style = ChannelStats::new(vec![0.3, 0.5, 0.7], vec![0.08, 0.12, 0.2]).unwrap();
    c.bench_function("align_statistics/512x512x3", |b| {
        b.iter(|| align_statistics(black_box(&content), &content_stats, &style).unwrap())
    });
}

fn bench_eed_step(c: &mut Criterion) {
    let img = structured_image(128, 128, 7);
    let preset = EEDPreset::mild();
    c.bench_function("eed_step/128x128x3 (tensor + step)", |b| {
        b.iter(|| {
            let field =
                structure_tensor(black_box(&img), preset.sigma, preset.kernel_size).unwrap();
            let tensor = diffusion_tensor(&field, preset.kappa).unwrap();
            eed_step(&img, &tensor, preset.tau).unwrap()
        })
    });
}

fn bench_phase_noise(c: &mut Criterion) {
    let img = structured_image(256, 256, 9);
    c.bench_function("apply_phase_noise/256x256x3 w=90", |b| {
        b.iter(|| {
            let mut stream = SeedStream::new(42);
            apply_phase_noise(black_box(&img), 90.0, &mut stream).unwrap()
        })
    });
}

fn bench_shuffle(c: &mut Criterion) {
    let img = structured_image(512, 512, 13);
    let labels = LabelMask::filled(512, 512, 1).unwrap();
    c.bench_function("shuffle_voronoi/512x512 k=64", |b| {
        b.iter(|| {
            let mut stream = SeedStream::new(21);
            shuffle_voronoi(black_box(&img), &labels, &ShuffleSpec { k: 64 }, &mut stream).unwrap()
        })
    });
}

criterion_group!(
    kernels,
    bench_gaussian_blur,
    bench_voronoi_assignment,
    bench_alignment,
    bench_eed_step,
    bench_phase_noise,
    bench_shuffle
);
criterion_main!(kernels);
