//! Deterministic input files shared by the command-line and acceptance tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use abr_core::fixtures;
use abr_core::mesh::{primitives, write_obj, Vec3};
use abr_core::scene::{PolylineEntry, PolylineFile, ValueType, VolumeHeader};
use image::{Rgb, RgbImage, Rgba, RgbaImage};

pub fn abr() -> Command {
    Command::new(env!("CARGO_BIN_EXE_abr"))
}

pub fn run(dir: &Path, args: &[&str]) -> Output {
    abr()
        .current_dir(dir)
        .args(args)
        .env_remove("ABR_LIBRARY")
        .output()
        .expect("abr runs")
}

/// Runs and insists on exit code 0.
pub fn run_ok(dir: &Path, args: &[&str]) -> Output {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "abr {args:?} failed ({:?}):\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub const BLOCK_COLORS: [[u8; 3]; 3] = [[200, 40, 30], [30, 150, 60], [40, 60, 190]];

/// Three equal vertical blocks of flat color.
pub fn blocks(size: u32) -> RgbImage {
    RgbImage::from_fn(size, size, |x, _| Rgb(BLOCK_COLORS[((x * 3) / size).min(2) as usize]))
}

fn hash(a: u32, b: u32) -> u32 {
    let mut h = a.wrapping_mul(0x9E37_79B1) ^ b.wrapping_mul(0x85EB_CA77);
    h ^= h >> 15;
    h = h.wrapping_mul(0x2C1B_3C6D);
    h ^ (h >> 12)
}

/// A stand-in for a photographed painting: smooth washes of ochre and
/// indigo with paper grain.
pub fn painting(w: u32, h: u32) -> RgbImage {
    RgbImage::from_fn(w, h, |x, y| {
        let u = x as f64 / w as f64;
        let v = y as f64 / h as f64;
        let wash = (0.5 + 0.5 * (6.0 * u + 3.0 * v).sin()).powi(2);
        let grain = (hash(x, y) % 17) as f64 - 8.0;
        let c = |a: f64, b: f64| (a * (1.0 - wash) + b * wash + grain).clamp(0.0, 255.0) as u8;
        Rgb([c(214.0, 52.0), c(168.0, 61.0), c(92.0, 120.0)])
    })
}

/// A narrow brush stroke scan: a dark core that wanders and thins down the
/// rows, on transparent paper.
pub fn stroke(w: u32, h: u32) -> RgbaImage {
    RgbaImage::from_fn(w, h, |x, y| {
        let t = y as f64 / h as f64;
        let center = w as f64 * (0.5 + 0.15 * (t * 9.0).sin());
        let half = w as f64 * (0.22 + 0.1 * (t * 23.0).cos());
        let d = ((x as f64 + 0.5 - center).abs() / half).min(1.5);
        let ink = (1.0 - d).max(0.0);
        let grain = (hash(x, y) % 40) as f64;
        let a = (ink * 255.0 - grain * ink).clamp(0.0, 255.0) as u8;
        Rgba([20, 18, 30, a])
    })
}

/// A lumpy pebble scan lying on its side (its long axis along +X).
pub fn pebble_scan() -> abr_core::mesh::TriMesh {
    let mut m = primitives::blob(7, 0.2, 11);
    for v in &mut m.positions {
        *v = Vec3::new(v.z * 1.5, v.y, -v.x);
    }
    m.normals = None;
    m
}

pub fn write_png(path: &Path, img: impl Into<image::DynamicImage>) {
    img.into().save(path).expect("png writes");
}

/// A nitrate volume over the gulf box as a JSON header and little-endian
/// f32 RAW payload.
pub fn write_volume(dir: &Path) -> PathBuf {
    let dims = [25usize, 8, 15];
    let (lo, hi) = fixtures::GULF_BOUNDS;
    let spacing: [f64; 3] = std::array::from_fn(|k| (hi[k] - lo[k]) / (dims[k] - 1) as f64);
    let mut raw = Vec::with_capacity(dims.iter().product::<usize>() * 4);
    for k in 0..dims[2] {
        for j in 0..dims[1] {
            for i in 0..dims[0] {
                let p = Vec3::new(
                    lo[0] + i as f64 * spacing[0],
                    lo[1] + j as f64 * spacing[1],
                    lo[2] + k as f64 * spacing[2],
                );
                raw.extend_from_slice(&(fixtures::gulf_nitrate(&p) as f32).to_le_bytes());
            }
        }
    }
    std::fs::write(dir.join("ocean.raw"), raw).unwrap();
    let header = VolumeHeader {
        dims,
        spacing,
        origin: lo,
        value_type: ValueType::Float32,
        data: "ocean.raw".into(),
        variable: "nitrate".into(),
    };
    let path = dir.join("ocean.json");
    std::fs::write(&path, serde_json::to_vec_pretty(&header).unwrap()).unwrap();
    path
}

/// A few current lines as a polyline JSON file with a speed variable.
pub fn write_currents(dir: &Path) -> PathBuf {
    let lines = (0..5)
        .map(|i| {
            let z = 15.0 + 22.0 * i as f64;
            let points: Vec<Vec3> = (0..40)
                .map(|k| {
                    let x = 5.0 + k as f64 * 4.8;
                    Vec3::new(x, 30.0 + 8.0 * (x / 25.0 + i as f64).sin(), z + 6.0 * (x / 40.0).cos())
                })
                .collect();
            let speed = (0..40).map(|k| (k as f64 / 39.0) * (1.0 + i as f64)).collect();
            PolylineEntry {
                points,
                scalars: [("speed".to_string(), speed)].into(),
                ..Default::default()
            }
        })
        .collect();
    let path = dir.join("currents.json");
    std::fs::write(&path, serde_json::to_vec_pretty(&PolylineFile { lines }).unwrap()).unwrap();
    path
}

/// Writes every raw input of the end-to-end pipeline into `dir`.
pub fn write_pipeline_inputs(dir: &Path) {
    write_png(&dir.join("painting.png"), painting(192, 128));
    write_png(&dir.join("stroke.png"), stroke(24, 64));
    write_obj(&pebble_scan(), &dir.join("pebble.obj")).unwrap();
    write_volume(dir);
    write_currents(dir);
}

/// The scene that ties the pipeline products together, all by relative path.
pub const PIPELINE_SCENE: &str = r##"{
  "version": 1,
  "data": [
    { "id": "samples", "path": "samples.csv" },
    { "id": "currents", "path": "currents.json", "format": "polylines" },
    { "id": "ocean", "path": "ocean.json", "format": "volume" }
  ],
  "assets": [
    { "id": "painted", "kind": "colormap", "path": "painted.xml" },
    { "id": "stroke", "kind": "lineTexture", "path": "line.png" },
    { "id": "pebble", "kind": "glyph", "path": "pebble" }
  ],
  "layers": [
    {
      "id": "currents", "type": "line", "data": "currents",
      "variables": { "color": "speed" },
      "assets": { "colormap": "painted", "textureSet": "stroke" },
      "style": { "lineStyle": "ribbon", "ribbonWidth": 4.0 }
    },
    {
      "id": "nutrients", "type": "glyph", "data": "samples",
      "variables": { "color": "nitrate", "size": "nitrate" },
      "assets": { "colormap": "painted", "glyph": "pebble" },
      "style": { "glyphSizePercent": 2.5, "axialRadiusRange": [0.4, 1.0] }
    },
    {
      "id": "plume", "type": "volume", "data": "ocean",
      "variables": { "color": "nitrate" },
      "assets": { "colormap": "painted" },
      "style": { "opacityScale": 0.02 }
    }
  ],
  "seed": 7,
  "background": "#f4f1ea"
}
"##;

/// Runs the whole pipeline from raw inputs to a rendered frame and returns
/// the files it produced, relative to `dir`.
pub fn run_pipeline(dir: &Path) -> Vec<&'static str> {
    write_pipeline_inputs(dir);
    run_ok(dir, &["palette", "painting.png", "--out", "palette.json"]);
    run_ok(
        dir,
        &[
            "colormap",
            "--palette",
            "palette.json",
            "--name",
            "painted",
            "--out",
            "painted.xml",
        ],
    );
    run_ok(
        dir,
        &[
            "synthesize",
            "stroke.png",
            "--height",
            "512",
            "--seed",
            "3",
            "--out",
            "line.png",
        ],
    );
    run_ok(
        dir,
        &[
            "mesh",
            "lod",
            "pebble.obj",
            "--targets",
            "300,80,30",
            "--resolution",
            "64",
            "--forward",
            "1,0,0",
            "--out",
            "pebble",
        ],
    );
    run_ok(
        dir,
        &[
            "sample",
            "ocean.json",
            "--method",
            "density",
            "--count",
            "400",
            "--seed",
            "5",
            "--variable",
            "nitrate",
            "--out",
            "samples.csv",
        ],
    );
    std::fs::write(dir.join("scene.json"), PIPELINE_SCENE).unwrap();
    run_ok(
        dir,
        &[
            "render",
            "--scene",
            "scene.json",
            "--size",
            "320x240",
            "--out",
            "frame.png",
            "--ids",
            "frame.ids",
        ],
    );
    vec![
        "palette.json",
        "painted.xml",
        "line.png",
        "line.json",
        "pebble/glyph.json",
        "samples.csv",
        "frame.png",
        "frame.ids",
    ]
}
