use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;
use stokes_bgg::assembly::Discretization;
use stokes_bgg::bgg::cohomology_report;
use stokes_bgg::{generate_mesh, MeshFamily};
use stokes_bgg_bench::bench_meshes;

fn local_operators(c: &mut Criterion) {
    let mut g = c.benchmark_group("local_operators");
    for (name, mesh) in bench_meshes() {
        for k in [0, 2] {
            g.bench_with_input(BenchmarkId::new(name, k), &k, |b, &k| {
                b.iter(|| Discretization::new(black_box(&mesh), k).unwrap())
            });
        }
    }
    g.finish();
}

fn global_assembly(c: &mut Criterion) {
    let mut g = c.benchmark_group("global_assembly");
    for (name, mesh) in bench_meshes() {
        let d = Discretization::new(&mesh, 1).unwrap();
        g.bench_function(BenchmarkId::new("sgrad", name), |b| b.iter(|| d.sgrad()));
        g.bench_function(BenchmarkId::new("srot", name), |b| b.iter(|| d.srot()));
        g.bench_function(BenchmarkId::new("hess", name), |b| b.iter(|| d.hess()));
    }
    g.finish();
}

fn cohomology(c: &mut Criterion) {
    let mut g = c.benchmark_group("cohomology");
    g.sample_size(10);
    let mesh = generate_mesh(MeshFamily::RingOneHole, 1).unwrap();
    for k in [0, 1] {
        let d = Discretization::new(&mesh, k).unwrap();
        g.bench_with_input(BenchmarkId::new("ring_one_hole", k), &d, |b, d| b.iter(|| cohomology_report(d).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, local_operators, global_assembly, cohomology);
criterion_main!(benches);
