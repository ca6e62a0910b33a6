//! Axis-projection UV atlas: triangles are grouped by the dominant axis of
//! their normal (at most six charts), each chart is split into islands whose
//! projections do not overlap, and islands are shelf-packed into the unit
//! square with texel gutters.

use std::collections::{HashMap, VecDeque};

use nalgebra::Point2;

use super::{TriMesh, Vec3};

pub const DEFAULT_ATLAS_RESOLUTION: u32 = 1024;
/// Empty texels kept on each side of an island.
pub const GUTTER_TEXELS: f64 = 2.0;

type P2 = Point2<f64>;

#[derive(Debug, Clone)]
pub struct UvAtlas {
    /// Input mesh split at island borders, with UVs and the pre-split smooth normals.
    pub mesh: TriMesh,
    /// Island index per output triangle.
    pub island_of_triangle: Vec<u32>,
    /// Chart (`2 * axis + negative`) per island.
    pub island_chart: Vec<u8>,
    /// Packed island rectangles in UV space, gutters excluded: `[u0, v0, u1, v1]`.
    pub island_rects: Vec<[f64; 4]>,
}

impl UvAtlas {
    pub fn island_count(&self) -> usize {
        self.island_chart.len()
    }

    pub fn chart_count(&self) -> usize {
        let mut c = self.island_chart.clone();
        c.sort_unstable();
        c.dedup();
        c.len()
    }
}

pub fn unwrap_uv(mesh: &TriMesh) -> TriMesh {
    unwrap_uv_atlas(mesh, DEFAULT_ATLAS_RESOLUTION).mesh
}

/// Chart index of a face normal: dominant axis, plus one if it points negative.
pub fn dominant_chart(n: &Vec3) -> u8 {
    let a = n.abs();
    let axis = if a.x >= a.y && a.x >= a.z {
        0
    } else if a.y >= a.z {
        1
    } else {
        2
    };
    (2 * axis + (n[axis] < 0.0) as usize) as u8
}

/// Planar projection for a chart, oriented so outward faces keep
/// counter-clockwise winding in UV.
fn project(chart: u8, p: &Vec3) -> P2 {
    let s = if chart % 2 == 0 { 1.0 } else { -1.0 };
    match chart / 2 {
        0 => P2::new(s * p.y, p.z),
        1 => P2::new(s * p.z, p.x),
        _ => P2::new(s * p.x, p.y),
    }
}

fn interiors_overlap(a: &[P2; 3], b: &[P2; 3], eps: f64) -> bool {
    for tri in [a, b] {
        for k in 0..3 {
            let e = tri[(k + 1) % 3] - tri[k];
            let axis = nalgebra::Vector2::new(-e.y, e.x);
            let (mut a0, mut a1) = (f64::INFINITY, f64::NEG_INFINITY);
            let (mut b0, mut b1) = (f64::INFINITY, f64::NEG_INFINITY);
            for p in a {
                let d = axis.dot(&p.coords);
                a0 = a0.min(d);
                a1 = a1.max(d);
            }
            for p in b {
                let d = axis.dot(&p.coords);
                b0 = b0.min(d);
                b1 = b1.max(d);
            }
            let tol = eps * axis.norm();
            if a1 <= b0 + tol || b1 <= a0 + tol {
                return false;
            }
        }
    }
    true
}

struct Island {
    chart: u8,
    grid: HashMap<(i64, i64), Vec<usize>>,
    min: P2,
    max: P2,
}

fn cells(tri: &[P2; 3], cell: f64) -> impl Iterator<Item = (i64, i64)> {
    let lo = tri.iter().fold(P2::new(f64::INFINITY, f64::INFINITY), |m, p| {
        P2::new(m.x.min(p.x), m.y.min(p.y))
    });
    let hi = tri.iter().fold(P2::new(f64::NEG_INFINITY, f64::NEG_INFINITY), |m, p| {
        P2::new(m.x.max(p.x), m.y.max(p.y))
    });
    let (x0, x1) = ((lo.x / cell).floor() as i64, (hi.x / cell).floor() as i64);
    let (y0, y1) = ((lo.y / cell).floor() as i64, (hi.y / cell).floor() as i64);
    (x0..=x1).flat_map(move |x| (y0..=y1).map(move |y| (x, y)))
}

/// Shelf packing at `scale`; returns island origins or `None` if they do not fit.
fn shelf_pack(sizes: &[(f64, f64)], order: &[usize], scale: f64, pad: f64) -> Option<Vec<P2>> {
    let mut origin = vec![P2::origin(); sizes.len()];
    let (mut x, mut y, mut shelf) = (0.0, 0.0, 0.0f64);
    for &i in order {
        let w = sizes[i].0 * scale + 2.0 * pad;
        let h = sizes[i].1 * scale + 2.0 * pad;
        if w > 1.0 {
            return None;
        }
        if x + w > 1.0 {
            y += shelf;
            x = 0.0;
            shelf = 0.0;
        }
        if y + h > 1.0 {
            return None;
        }
        origin[i] = P2::new(x + pad, y + pad);
        x += w;
        shelf = shelf.max(h);
    }
    Some(origin)
}

pub fn unwrap_uv_atlas(mesh: &TriMesh, resolution: u32) -> UvAtlas {
    let normals = mesh.vertex_normals();
    let tri_count = mesh.triangles.len();
    let diag = mesh.bounds().diagonal().max(f64::MIN_POSITIVE);
    let eps = 1e-9 * diag;

    let charts: Vec<u8> = (0..tri_count).map(|t| dominant_chart(&mesh.face_cross(t))).collect();
    let projected: Vec<[P2; 3]> = (0..tri_count)
        .map(|t| mesh.triangles[t].map(|i| project(charts[t], &mesh.positions[i as usize])))
        .collect();
    let mut edge_tris: HashMap<(u32, u32), Vec<usize>> = HashMap::new();
    let mut edge_len = 0.0;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            edge_tris.entry((a.min(b), a.max(b))).or_default().push(t);
            edge_len += (mesh.positions[a as usize] - mesh.positions[b as usize]).norm();
        }
    }
    let cell = if tri_count > 0 {
        (edge_len / (3 * tri_count) as f64).max(eps)
    } else {
        1.0
    };

    let mut island_of = vec![u32::MAX; tri_count];
    let mut islands: Vec<Island> = Vec::new();
    for seed in 0..tri_count {
        if island_of[seed] != u32::MAX {
            continue;
        }
        let id = islands.len() as u32;
        let mut island = Island {
            chart: charts[seed],
            grid: HashMap::new(),
            min: P2::new(f64::INFINITY, f64::INFINITY),
            max: P2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
        };
        let mut queue = VecDeque::from([seed]);
        island_of[seed] = id;
        for c in cells(&projected[seed], cell) {
            island.grid.entry(c).or_default().push(seed);
        }
        while let Some(t) = queue.pop_front() {
            let tri = &projected[t];
            for p in tri {
                island.min = P2::new(island.min.x.min(p.x), island.min.y.min(p.y));
                island.max = P2::new(island.max.x.max(p.x), island.max.y.max(p.y));
            }
            let vs = mesh.triangles[t];
            for k in 0..3 {
                let (a, b) = (vs[k], vs[(k + 1) % 3]);
                for &n in &edge_tris[&(a.min(b), a.max(b))] {
                    if island_of[n] != u32::MAX || charts[n] != island.chart {
                        continue;
                    }
                    let cand = &projected[n];
                    let clash = cells(cand, cell).any(|c| {
                        island
                            .grid
                            .get(&c)
                            .is_some_and(|ts| ts.iter().any(|&o| interiors_overlap(cand, &projected[o], eps)))
                    });
                    if !clash {
                        island_of[n] = id;
                        for c in cells(cand, cell) {
                            island.grid.entry(c).or_default().push(n);
                        }
                        queue.push_back(n);
                    }
                }
            }
        }
        islands.push(island);
    }

    let sizes: Vec<(f64, f64)> = islands
        .iter()
        .map(|i| ((i.max.x - i.min.x).max(0.0), (i.max.y - i.min.y).max(0.0)))
        .collect();
    let mut order: Vec<usize> = (0..islands.len()).collect();
    order.sort_by(|&a, &b| sizes[b].1.total_cmp(&sizes[a].1).then(a.cmp(&b)));
    let longest = sizes.iter().fold(0.0f64, |m, s| m.max(s.0).max(s.1));
    let mut pad = GUTTER_TEXELS / resolution.max(1) as f64;
    let (scale, origins) = loop {
        let hi = if longest > 0.0 { 1.0 / longest } else { 1.0 };
        if let Some(o) = shelf_pack(&sizes, &order, hi, pad) {
            break (hi, o);
        }
        let mut lo = 0.0;
        let mut hi = hi;
        let mut best = shelf_pack(&sizes, &order, lo, pad).map(|o| (lo, o));
        if best.is_none() {
            // Too many islands for the gutter budget at this resolution.
            log::warn!(
                "UV atlas: {} islands do not fit with gutters; shrinking gutters",
                islands.len()
            );
            pad *= 0.5;
            if pad < 1e-9 {
                break (0.0, vec![P2::origin(); islands.len()]);
            }
            continue;
        }
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            match shelf_pack(&sizes, &order, mid, pad) {
                Some(o) => {
                    lo = mid;
                    best = Some((mid, o));
                }
                None => hi = mid,
            }
        }
        break best.unwrap();
    };

    let mut remap: HashMap<(u32, u32), u32> = HashMap::new();
    let mut positions = Vec::new();
    let mut out_normals = Vec::new();
    let mut uvs = Vec::new();
    let mut triangles = Vec::with_capacity(tri_count);
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let isl = island_of[t];
        let island = &islands[isl as usize];
        let mut out = [0u32; 3];
        for (k, &v) in tri.iter().enumerate() {
            out[k] = *remap.entry((v, isl)).or_insert_with(|| {
                let p = projected[t][k];
                let o = origins[isl as usize];
                positions.push(mesh.positions[v as usize]);
                out_normals.push(normals[v as usize]);
                let u = (o.x + (p.x - island.min.x) * scale).clamp(0.0, 1.0);
                let w = (o.y + (p.y - island.min.y) * scale).clamp(0.0, 1.0);
                uvs.push(P2::new(u, w));
                (positions.len() - 1) as u32
            });
        }
        triangles.push(out);
    }
    let island_rects = islands
        .iter()
        .zip(&origins)
        .zip(&sizes)
        .map(|((_, o), s)| [o.x, o.y, o.x + s.0 * scale, o.y + s.1 * scale])
        .collect();
    UvAtlas {
        mesh: TriMesh {
            positions,
            normals: Some(out_normals),
            uvs: Some(uvs),
            triangles,
        },
        island_of_triangle: island_of,
        island_chart: islands.iter().map(|i| i.chart).collect(),
        island_rects,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives::{blob, cube, geodesic_sphere};

    /// Texel centers strictly inside each UV triangle; no texel may be claimed twice.
    fn assert_disjoint(mesh: &TriMesh, res: usize) {
        let uvs = mesh.uvs.as_ref().unwrap();
        let mut owner = vec![usize::MAX; res * res];
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let [a, b, c] = tri.map(|i| uvs[i as usize] * res as f64);
            let area = (b - a).perp(&(c - a));
            if area.abs() < 1e-12 {
                continue;
            }
            let x0 = a.x.min(b.x).min(c.x).floor().max(0.0) as usize;
            let x1 = (a.x.max(b.x).max(c.x).ceil() as usize).min(res - 1);
            let y0 = a.y.min(b.y).min(c.y).floor().max(0.0) as usize;
            let y1 = (a.y.max(b.y).max(c.y).ceil() as usize).min(res - 1);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let p = P2::new(x as f64 + 0.5, y as f64 + 0.5);
                    let w0 = (c - b).perp(&(p - b)) / area;
                    let w1 = (a - c).perp(&(p - c)) / area;
                    let w2 = 1.0 - w0 - w1;
                    if w0 > 1e-9 && w1 > 1e-9 && w2 > 1e-9 {
                        let slot = &mut owner[y * res + x];
                        assert_eq!(*slot, usize::MAX, "texel ({x},{y}) covered by {} and {t}", *slot);
                        *slot = t;
                    }
                }
            }
        }
    }

    #[test]
    fn cube_has_six_axis_charts() {
        let atlas = unwrap_uv_atlas(&cube(), 1024);
        assert_eq!(atlas.island_count(), 6);
        assert_eq!(atlas.chart_count(), 6);
        let m = &atlas.mesh;
        assert_eq!(m.vertex_count(), 24);
        let uvs = m.uvs.as_ref().unwrap();
        // Each face is a square projection: its four corners span equal u and v extents.
        for isl in 0..6u32 {
            let vs: Vec<usize> = m
                .triangles
                .iter()
                .enumerate()
                .filter(|(t, _)| atlas.island_of_triangle[*t] == isl)
                .flat_map(|(_, tri)| tri.map(|i| i as usize))
                .collect();
            let us: Vec<f64> = vs.iter().map(|&i| uvs[i].x).collect();
            let ws: Vec<f64> = vs.iter().map(|&i| uvs[i].y).collect();
            let du = us.iter().cloned().fold(f64::MIN, f64::max) - us.iter().cloned().fold(f64::MAX, f64::min);
            let dv = ws.iter().cloned().fold(f64::MIN, f64::max) - ws.iter().cloned().fold(f64::MAX, f64::min);
            assert!((du - dv).abs() < 1e-9 && du > 0.2);
        }
        assert_disjoint(m, 512);
    }

    #[test]
    fn single_triangle_one_chart() {
        let tri = TriMesh::new(vec![Vec3::zeros(), Vec3::x(), Vec3::y()], vec![[0, 1, 2]]);
        let atlas = unwrap_uv_atlas(&tri, 1024);
        assert_eq!(atlas.island_count(), 1);
        let r = atlas.island_rects[0];
        let pad = GUTTER_TEXELS / 1024.0;
        assert!((r[0] - pad).abs() < 1e-12 && (r[1] - pad).abs() < 1e-12);
        assert!(r[2] > 0.99 - 2.0 * pad && r[3] > 0.99 - 2.0 * pad);
    }

    #[test]
    fn blob_islands_are_disjoint_and_in_unit_square() {
        let m = blob(5, 0.35, 11);
        assert_eq!(m.triangle_count(), 500);
        let atlas = unwrap_uv_atlas(&m, 1024);
        let uvs = atlas.mesh.uvs.as_ref().unwrap();
        assert!(uvs
            .iter()
            .all(|p| (0.0..=1.0).contains(&p.x) && (0.0..=1.0).contains(&p.y)));
        assert!(atlas.chart_count() <= 6);
        assert_disjoint(&atlas.mesh, 512);
    }

    #[test]
    fn gutters_between_island_rects() {
        let atlas = unwrap_uv_atlas(&geodesic_sphere(8), 256);
        let gap = 2.0 * GUTTER_TEXELS / 256.0 - 1e-9;
        let rs = &atlas.island_rects;
        for i in 0..rs.len() {
            for j in i + 1..rs.len() {
                let (a, b) = (rs[i], rs[j]);
                let sep = (b[0] - a[2]).max(a[0] - b[2]).max(b[1] - a[3]).max(a[1] - b[3]);
                assert!(sep >= gap, "islands {i} and {j} only {sep} apart");
            }
        }
    }

    #[test]
    fn positions_and_normals_survive_split() {
        let m = geodesic_sphere(4);
        let atlas = unwrap_uv_atlas(&m, 1024);
        let smooth = m.vertex_normals();
        for (t, tri) in atlas.mesh.triangles.iter().enumerate() {
            for k in 0..3 {
                let src = m.triangles[t][k] as usize;
                let dst = tri[k] as usize;
                assert_eq!(atlas.mesh.positions[dst], m.positions[src]);
                assert_eq!(atlas.mesh.normals.as_ref().unwrap()[dst], smooth[src]);
            }
        }
    }
}
