use criterion::{black_box, criterion_group, criterion_main, BatchSize, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sarheight_core::geometry::{min_enclosing_rect_points, Point};
use sarheight_core::pipeline::{deduplicate, tile, SampleExtractor};
use sarheight_core::regressor::{backward, forward, ModelConfig, Normalization};
use sarheight_core::scene_sim::{generate_city, render_amplitude, Speckle};
use sarheight_core::{BuildingSample, SceneSpec, TrainState};

fn polygon(rng: &mut ChaCha8Rng, n: usize) -> Vec<Point> {
    (0..n)
        .map(|k| {
            let t = ((k as f64 + rng.random_range(0.1..0.9)) * 360.0 / n as f64).to_radians();
            Point::new(30.0 * t.cos(), 12.0 * t.sin()).rotated_cw(17.0)
        })
        .collect()
}

fn geometry(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let small = polygon(&mut rng, 8);
    let large = polygon(&mut rng, 256);
    c.bench_function("min_rect_8", |b| b.iter(|| min_enclosing_rect_points(black_box(&small))));
    c.bench_function("min_rect_256", |b| b.iter(|| min_enclosing_rect_points(black_box(&large))));
}

fn scene() -> SceneSpec {
    SceneSpec {
        seed: 2,
        extent_m: [640.0, 640.0],
        n_buildings: 200,
        min_spacing_m: 12.0,
        speckle: Speckle::SingleLook,
        ..SceneSpec::default()
    }
}

fn rendering(c: &mut Criterion) {
    let spec = scene();
    let fps = generate_city(&spec).unwrap();
    c.bench_function("generate_city_200", |b| b.iter(|| generate_city(black_box(&spec)).unwrap()));
    c.bench_function("render_640m", |b| b.iter(|| render_amplitude(black_box(&fps), &spec).unwrap()));
}

fn samples(chip_px: usize) -> Vec<BuildingSample> {
    let spec = scene();
    let fps = generate_city(&spec).unwrap();
    let amp = render_amplitude(&fps, &spec).unwrap();
    let ex = SampleExtractor::new(&amp, &fps, &spec.geom, spec.projection_factor, "bench", chip_px).unwrap();
    let mut all = Vec::new();
    for p in tile(&amp, 256, 0.2).unwrap() {
        all.extend(ex.extract(&p).unwrap().samples);
    }
    deduplicate(all)
}

fn regressor(c: &mut Criterion) {
    let all = samples(48);
    let batch: Vec<&BuildingSample> = all.iter().take(32).collect();
    let config = ModelConfig {
        chip_px: 48,
        normalization: Some(Normalization::fit(&batch).unwrap()),
        ..ModelConfig::default()
    };
    let state = TrainState::new(config).unwrap();
    c.bench_function("forward_32x48", |b| b.iter(|| forward(&state, black_box(&batch)).unwrap()));
    c.bench_function("backward_32x48", |b| b.iter(|| backward(&state, black_box(&batch)).unwrap()));
    c.bench_function("dedup_samples", |b| {
        b.iter_batched(|| all.clone(), deduplicate, BatchSize::SmallInput)
    });
}

criterion_group!(benches, geometry, rendering, regressor);
criterion_main!(benches);
