//! Microbenchmarks for the hot paths: eigen-reduction, single Newton steps,
//! full solves and Berry transport.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use conical_core::*;
use std::collections::BTreeMap;
use std::f64::consts::PI;

fn point(coords: &[f64]) -> ParameterPoint {
    ParameterPoint::new(coords.to_vec()).unwrap()
}

fn params(kv: &[(&str, f64)]) -> BTreeMap<String, f64> {
    kv.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn bench_reduce(c: &mut Criterion) {
    let small = builtin("rank-one-4x4", &BTreeMap::new()).unwrap();
    let big = builtin("magnetic-graph-10x10", &BTreeMap::new()).unwrap();
    let r2 = point(&[0.9, 1.2]);
    let r3 = point(&[0.9, 1.2, -0.4]);
    let mode2 = MultiplicityMode::new(ModeKind::Double2D);
    let mode3 = MultiplicityMode::new(ModeKind::HermitianDouble3D);
    c.bench_function("eigensystem_10x10", |b| {
        b.iter(|| eigensystem(&big, black_box(&r3)).unwrap())
    });
    c.bench_function("reduce_4x4_double2d", |b| {
        b.iter(|| reduce(&small, black_box(&r2), &mode2).unwrap())
    });
    c.bench_function("reduce_10x10_hermitian3d", |b| {
        b.iter(|| reduce(&big, black_box(&r3), &mode3).unwrap())
    });
}

fn bench_solve(c: &mut Criterion) {
    let cfg = SolverConfig::default();
    let rank_one = builtin("rank-one-4x4", &BTreeMap::new()).unwrap();
    let graphene = builtin("graphene", &params(&[("p", 0.6)])).unwrap();
    let mode2 = MultiplicityMode::new(ModeKind::Double2D);
    let inv = MultiplicityMode::new(ModeKind::InversionSymmetric2D);
    let start2 = point(&[PI / 3.0 + 0.4, PI / 3.0 - 0.3]);
    let startg = point(&[0.8 * PI, 0.8 * PI]);
    c.bench_function("solve_rank_one_4x4", |b| {
        b.iter(|| solve(&rank_one, black_box(&start2), &mode2, &cfg).unwrap())
    });
    c.bench_function("solve_graphene_p06", |b| {
        b.iter(|| solve(&graphene, black_box(&startg), &inv, &cfg).unwrap())
    });
}

fn bench_berry(c: &mut Criterion) {
    let cone = builtin("canonical-cone", &BTreeMap::new()).unwrap();
    let spec = LoopSpec::new(point(&[0.0, 0.0]), 0.5, 64).unwrap();
    c.bench_function("berry_loop_64_samples", |b| {
        b.iter(|| berry_loop(&cone, black_box(&spec), 1).unwrap())
    });
    let trig = builtin("paper-2x2-trig", &BTreeMap::new()).unwrap();
    let region = Region2D::new(-PI, PI, -PI, PI).unwrap();
    c.bench_function("grid_scan_trig_8x8", |b| {
        b.iter(|| grid_scan(&trig, black_box(&region), 8, 1).unwrap())
    });
}

criterion_group!(benches, bench_reduce, bench_solve, bench_berry);
criterion_main!(benches);
