use std::hint::black_box;

use corridor_core::clustering::neighborhoods;
use corridor_core::footprint::{footprint_raw, GridSpec};
use corridor_core::gp::{
    e_step, BasisSet, Design, ModelParams, NormalizationTransform, TrajectoryModel,
};
use corridor_core::representative::{
    generate_representatives, GenerationSettings, RepresentativeScheme,
};
use corridor_core::synth::{
    default_corridors, generate_corridors, random_model_params, rng, sample_model_tracks,
    SynthConfig,
};
use corridor_core::Exec;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::DMatrix;
use rand::Rng;

const MODES: [(&str, Exec); 2] = [
    ("sequential", Exec::Sequential),
    ("parallel", Exec::Parallel),
];

fn bench_footprint(c: &mut Criterion) {
    let config = SynthConfig {
        per_corridor: 50,
        ..SynthConfig::default()
    };
    let tracks = generate_corridors(&default_corridors(), &config, 1).unwrap();
    let spec = GridSpec::covering(&tracks, 300.0, 100).unwrap();
    let mut group = c.benchmark_group("footprint_raw");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| footprint_raw(black_box(&tracks), &spec, 300.0, tracks.len(), exec).unwrap())
        });
    }
    group.finish();
}

fn bench_e_step(c: &mut Criterion) {
    let basis = BasisSet::uniform(12).unwrap();
    let mut r = rng(2);
    let params = random_model_params(&basis, 2e3, &mut r);
    let tracks = sample_model_tracks(&params, &basis, 150, (30, 80), &mut r).unwrap();
    let designs: Vec<Design> = tracks.iter().map(|t| Design::new(&basis, t)).collect();
    let mut group = c.benchmark_group("e_step");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| e_step(black_box(&params), &designs, exec).unwrap())
        });
    }
    group.finish();
}

fn bench_representatives(c: &mut Criterion) {
    let basis = BasisSet::uniform(18).unwrap();
    let params: ModelParams = random_model_params(&basis, 2e3, &mut rng(3));
    let transform = NormalizationTransform {
        offset: [0.0; 3],
        scale: [8000.0, 8000.0, 500.0],
    };
    let model = TrajectoryModel::from_params(params, basis, transform, 100);
    let scheme = RepresentativeScheme::round();
    let settings = GenerationSettings::default();
    let mut group = c.benchmark_group("generate_representatives");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                generate_representatives(black_box(&model), &scheme, 0, &settings, exec).unwrap()
            })
        });
    }
    group.finish();
}

fn bench_neighborhoods(c: &mut Criterion) {
    let mut r = rng(4);
    let points = DMatrix::from_fn(800, 10, |_, _| r.random_range(-1.0..1.0));
    let mut group = c.benchmark_group("dbscan_neighborhoods");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| neighborhoods(black_box(&points), 0.5, exec))
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    bench_footprint,
    bench_e_step,
    bench_representatives,
    bench_neighborhoods
);
criterion_main!(benches);
