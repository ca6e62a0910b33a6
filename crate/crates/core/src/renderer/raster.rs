//! Depth-buffered triangle rasterization into fragment records.
//!
//! The image is cut into horizontal bands; each band walks the full triangle
//! list in submission order, so a pixel's winner never depends on how bands
//! are scheduled across threads.

use rayon::prelude::*;

use crate::mesh::Vec3;

use super::camera::CameraBasis;
use super::material::Batch;

pub(crate) const BAND_ROWS: usize = 16;

/// Winning fragment of a pixel: triangle `tri` of `batch` at barycentric `bary`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Frag {
    pub batch: u32,
    pub tri: u32,
    pub bary: [f64; 3],
}

struct ScreenTri {
    batch: u32,
    tri: u32,
    xy: [[f64; 2]; 3],
    inv_z: [f64; 3],
    /// Barycentrics of each (possibly clipped) vertex in the source triangle.
    src: [[f64; 3]; 3],
}

const CORNERS: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

fn setup(
    batch_index: u32,
    batch: &Batch,
    basis: &CameraBasis,
    eye: &Vec3,
    near: f64,
    width: f64,
    height: f64,
) -> Vec<ScreenTri> {
    let view: Vec<Vec3> = batch.positions.iter().map(|p| basis.to_view(eye, p)).collect();
    let mut out = Vec::new();
    let mut poly: Vec<(Vec3, [f64; 3])> = Vec::with_capacity(4);
    for (ti, t) in batch.triangles.iter().enumerate() {
        let v = [view[t[0] as usize], view[t[1] as usize], view[t[2] as usize]];
        if v.iter().all(|p| p.z < near) {
            continue;
        }
        poly.clear();
        if v.iter().all(|p| p.z >= near) {
            for k in 0..3 {
                poly.push((v[k], CORNERS[k]));
            }
        } else {
            // Sutherland-Hodgman against the near plane.
            for k in 0..3 {
                let (a, b) = ((v[k], CORNERS[k]), (v[(k + 1) % 3], CORNERS[(k + 1) % 3]));
                let (ina, inb) = (a.0.z >= near, b.0.z >= near);
                if ina {
                    poly.push(a);
                }
                if ina != inb {
                    let f = (near - a.0.z) / (b.0.z - a.0.z);
                    let bary = [0, 1, 2].map(|i| a.1[i] + (b.1[i] - a.1[i]) * f);
                    poly.push((a.0 + (b.0 - a.0) * f, bary));
                }
            }
        }
        let projected: Vec<([f64; 2], f64, [f64; 3])> =
            poly.iter().map(|(p, s)| (basis.project(p), 1.0 / p.z, *s)).collect();
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for (xy, _, _) in &projected {
            for a in 0..2 {
                lo[a] = lo[a].min(xy[a]);
                hi[a] = hi[a].max(xy[a]);
            }
        }
        if hi[0] < 0.0 || hi[1] < 0.0 || lo[0] > width || lo[1] > height {
            continue;
        }
        for k in 1..projected.len() - 1 {
            let (a, b, c) = (projected[0], projected[k], projected[k + 1]);
            out.push(ScreenTri {
                batch: batch_index,
                tri: ti as u32,
                xy: [a.0, b.0, c.0],
                inv_z: [a.1, b.1, c.1],
                src: [a.2, b.2, c.2],
            });
        }
    }
    out
}

fn edge(a: &[f64; 2], b: &[f64; 2], p: &[f64; 2]) -> f64 {
    (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0])
}

pub(crate) struct RasterOutput {
    /// View-space depth per pixel, infinite where nothing was drawn.
    pub depth: Vec<f64>,
    pub frags: Vec<Option<Frag>>,
}

/// Rasterizes `batches` in order with a strict less-than depth test; ties
/// keep the earlier fragment. Fragments failing the batch's cutout test are
/// discarded before the depth write.
pub(crate) fn rasterize(
    batches: &[Batch],
    basis: &CameraBasis,
    eye: &Vec3,
    width: usize,
    height: usize,
    near: f64,
) -> RasterOutput {
    let (w, h) = (width as f64, height as f64);
    let tris: Vec<ScreenTri> = batches
        .par_iter()
        .enumerate()
        .map(|(i, b)| setup(i as u32, b, basis, eye, near, w, h))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();

    let bands = height.div_ceil(BAND_ROWS);
    let mut lists: Vec<Vec<u32>> = vec![Vec::new(); bands];
    for (i, t) in tris.iter().enumerate() {
        let y0 = t.xy.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
        let y1 = t.xy.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max);
        let r0 = ((y0 - 0.5).ceil().max(0.0)) as usize;
        let r1 = ((y1 - 0.5).floor().min(h - 1.0)) as isize;
        if r1 < r0 as isize {
            continue;
        }
        for band in lists.iter_mut().take(r1 as usize / BAND_ROWS + 1).skip(r0 / BAND_ROWS) {
            band.push(i as u32);
        }
    }

    let mut depth = vec![f64::INFINITY; width * height];
    let mut frags: Vec<Option<Frag>> = vec![None; width * height];
    depth
        .par_chunks_mut(BAND_ROWS * width)
        .zip(frags.par_chunks_mut(BAND_ROWS * width))
        .zip(lists.par_iter())
        .enumerate()
        .for_each(|(band, ((depth, frags), list))| {
            let row0 = band * BAND_ROWS;
            let rows = depth.len() / width;
            for &ti in list {
                raster_tri(&tris[ti as usize], batches, width, row0, rows, depth, frags);
            }
        });
    RasterOutput { depth, frags }
}

fn raster_tri(
    t: &ScreenTri,
    batches: &[Batch],
    width: usize,
    row0: usize,
    rows: usize,
    depth: &mut [f64],
    frags: &mut [Option<Frag>],
) {
    let area = edge(&t.xy[0], &t.xy[1], &t.xy[2]);
    if !(area.abs() > 1e-12) {
        return;
    }
    let xs = t.xy.map(|p| p[0]);
    let ys = t.xy.map(|p| p[1]);
    let fold = |v: [f64; 3], f: fn(f64, f64) -> f64, init: f64| v.iter().copied().fold(init, f);
    let x0 = (fold(xs, f64::min, f64::INFINITY) - 0.5).ceil().max(0.0) as usize;
    let x1 = (fold(xs, f64::max, f64::NEG_INFINITY) - 0.5)
        .floor()
        .min(width as f64 - 1.0);
    let y0 = ((fold(ys, f64::min, f64::INFINITY) - 0.5).ceil().max(row0 as f64)) as usize;
    let y1 = (fold(ys, f64::max, f64::NEG_INFINITY) - 0.5)
        .floor()
        .min((row0 + rows) as f64 - 1.0);
    if x1 < x0 as f64 || y1 < y0 as f64 {
        return;
    }
    let batch = &batches[t.batch as usize];
    let inv_area = 1.0 / area;
    for py in y0..=y1 as usize {
        let local = (py - row0) * width;
        for px in x0..=x1 as usize {
            let p = [px as f64 + 0.5, py as f64 + 0.5];
            let w0 = edge(&t.xy[1], &t.xy[2], &p) * inv_area;
            let w1 = edge(&t.xy[2], &t.xy[0], &p) * inv_area;
            let w2 = edge(&t.xy[0], &t.xy[1], &p) * inv_area;
            if w0 < 0.0 || w1 < 0.0 || w2 < 0.0 {
                continue;
            }
            let iz = [w0 * t.inv_z[0], w1 * t.inv_z[1], w2 * t.inv_z[2]];
            let sum = iz[0] + iz[1] + iz[2];
            if !(sum > 0.0) {
                continue;
            }
            let z = 1.0 / sum;
            let idx = local + px;
            if !(z < depth[idx]) {
                continue;
            }
            let b = [iz[0] * z, iz[1] * z, iz[2] * z];
            let bary = [0, 1, 2].map(|k| b[0] * t.src[0][k] + b[1] * t.src[1][k] + b[2] * t.src[2][k]);
            if batch.material.cutout && batch.alpha(t.tri as usize, bary) < 0.5 {
                continue;
            }
            depth[idx] = z;
            frags[idx] = Some(Frag {
                batch: t.batch,
                tri: t.tri,
                bary,
            });
        }
    }
}
