use std::hint::black_box;

use abr_bench::{painting, stroke};
use abr_core::color::extract_palette;
use abr_core::field::VoxelGrid;
use abr_core::fixtures;
use abr_core::linesynth::{synthesize, SynthesisParams};
use abr_core::mesh::primitives::geodesic_sphere;
use abr_core::mesh::{bake_normal_map, decimate, unwrap_uv_atlas, Aabb, Vec3};
use abr_core::renderer::{render_scene, render_scene_with, RenderOptions};
use abr_core::sampling::{sample_density_mh, ScalarField};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn palette(c: &mut Criterion) {
    let img = painting(512, 512);
    c.bench_function("palette 512²", |b| {
        b.iter(|| extract_palette(black_box(&img), 6).unwrap())
    });
}

fn line_synthesis(c: &mut Criterion) {
    let src = stroke(32, 256);
    let params = SynthesisParams {
        seed: 1,
        ..Default::default()
    };
    c.bench_function("synthesize 256 → 2048 rows", |b| {
        b.iter(|| synthesize(black_box(&src), &params).unwrap())
    });
}

fn mesh(c: &mut Criterion) {
    let mut g = c.benchmark_group("mesh");
    g.sample_size(10);
    for n in [20, 50] {
        let sphere = geodesic_sphere(n);
        g.bench_with_input(
            BenchmarkId::new("decimate to 100", sphere.vertex_count()),
            &sphere,
            |b, m| b.iter(|| decimate(m, 100).unwrap()),
        );
    }
    let original = geodesic_sphere(30);
    let lod = unwrap_uv_atlas(&decimate(&original, 200).unwrap().mesh, 256).mesh;
    g.bench_function("bake 256²", |b| {
        b.iter(|| bake_normal_map(&original, &lod, 256).unwrap())
    });
    g.finish();
}

fn sampling(c: &mut Criterion) {
    let grid = VoxelGrid::from_fn([32, 32, 32], &Aabb::new(Vec3::zeros(), Vec3::repeat(1.0)), |p| {
        1.0 + p.x * p.y
    });
    let mut g = c.benchmark_group("metropolis-hastings");
    g.sample_size(20);
    g.bench_function("200k samples", |b| {
        b.iter(|| sample_density_mh(ScalarField::Voxels(&grid), 200_000, 7).unwrap())
    });
    g.finish();
}

fn render(c: &mut Criterion) {
    let scene = fixtures::gulf_scene();
    let mut g = c.benchmark_group("render gulf");
    g.sample_size(10);
    for size in [256, 1024] {
        let camera = fixtures::gulf_camera(size, size);
        g.bench_with_input(BenchmarkId::from_parameter(size), &camera, |b, cam| {
            b.iter(|| render_scene(&scene, cam, 1).unwrap())
        });
    }
    let camera = fixtures::gulf_camera(512, 512);
    g.bench_function("512 single thread", |b| {
        b.iter(|| render_scene_with(&scene, &camera, 1, &RenderOptions { threads: Some(1) }).unwrap())
    });
    g.finish();
}

criterion_group!(benches, palette, line_synthesis, mesh, sampling, render);
criterion_main!(benches);
