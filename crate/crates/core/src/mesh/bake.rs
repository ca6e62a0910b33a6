//! Bakes the smooth normals of a detailed mesh into the tangent space of a
//! decimated, UV-unwrapped version of it.

use rayon::prelude::*;

use super::{Bvh, MeshError, TriMesh, Vec3};
use crate::texture::{encode_normal, NormalMap};

pub const DEFAULT_BAKE_RESOLUTION: u32 = 1024;
/// Search distance along the LOD normal, as a fraction of the original's bounding diagonal.
pub const RAY_REACH_FRACTION: f64 = 0.02;

/// Orthonormal tangent frame: columns are tangent, bitangent, normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentFrame {
    pub t: Vec3,
    pub b: Vec3,
    pub n: Vec3,
}

impl TangentFrame {
    /// Gram-Schmidt of the UV derivatives against a (possibly interpolated) normal.
    pub fn new(normal: Vec3, dp_du: Vec3, dp_dv: Vec3) -> Self {
        let n = normal.try_normalize(1e-300).unwrap_or_else(Vec3::z);
        let t = (dp_du - n * n.dot(&dp_du))
            .try_normalize(1e-300)
            .unwrap_or_else(|| any_perpendicular(&n));
        let handed = if n.cross(&t).dot(&dp_dv) < 0.0 { -1.0 } else { 1.0 };
        Self {
            t,
            b: n.cross(&t) * handed,
            n,
        }
    }

    pub fn to_world(&self, v: [f64; 3]) -> Vec3 {
        self.t * v[0] + self.b * v[1] + self.n * v[2]
    }

    pub fn to_tangent(&self, w: &Vec3) -> [f64; 3] {
        [w.dot(&self.t), w.dot(&self.b), w.dot(&self.n)]
    }
}

fn any_perpendicular(n: &Vec3) -> Vec3 {
    let helper = if n.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    n.cross(&helper).normalize()
}

/// Position derivatives with respect to u and v over one triangle.
pub fn triangle_uv_derivatives(mesh: &TriMesh, t: usize) -> Option<(Vec3, Vec3)> {
    let uvs = mesh.uvs.as_ref()?;
    let [i0, i1, i2] = mesh.triangles[t].map(|i| i as usize);
    let [p0, p1, p2] = mesh.corners(t);
    let (e1, e2) = (p1 - p0, p2 - p0);
    let d1 = uvs[i1] - uvs[i0];
    let d2 = uvs[i2] - uvs[i0];
    let det = d1.x * d2.y - d2.x * d1.y;
    if det.abs() < 1e-300 {
        return None;
    }
    let r = 1.0 / det;
    Some(((e1 * d2.y - e2 * d1.y) * r, (e2 * d1.x - e1 * d2.x) * r))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct BakeStats {
    /// Texels inside some LOD triangle.
    pub covered: usize,
    /// Covered texels whose ray found the original surface.
    pub hits: usize,
}

/// Texel `(x, y)` has its center at `u = (x + 0.5) / res`, `v = 1 - (y + 0.5) / res`.
pub fn bake_normal_map(original: &TriMesh, lod: &TriMesh, resolution: u32) -> Result<NormalMap, MeshError> {
    bake_normal_map_with_stats(original, lod, resolution).map(|(m, _)| m)
}

pub fn bake_normal_map_with_stats(
    original: &TriMesh,
    lod: &TriMesh,
    resolution: u32,
) -> Result<(NormalMap, BakeStats), MeshError> {
    if resolution == 0 || resolution > 16384 {
        return Err(MeshError::InvalidResolution(resolution));
    }
    let uvs = lod.uvs.as_ref().ok_or(MeshError::MissingUvs)?;
    lod.validate()?;
    original.validate()?;
    let res = resolution as usize;

    let mut coverage: Vec<Option<(u32, [f64; 3])>> = vec![None; res * res];
    for (t, tri) in lod.triangles.iter().enumerate() {
        let [a, b, c] = tri.map(|i| {
            let uv = uvs[i as usize];
            nalgebra::Point2::new(uv.x * res as f64, (1.0 - uv.y) * res as f64)
        });
        let area = (b - a).perp(&(c - a));
        if area.abs() < 1e-300 {
            continue;
        }
        let x0 = (a.x.min(b.x).min(c.x) - 0.5).floor().max(0.0) as usize;
        let y0 = (a.y.min(b.y).min(c.y) - 0.5).floor().max(0.0) as usize;
        let x1 = ((a.x.max(b.x).max(c.x) - 0.5).ceil().max(0.0) as usize).min(res - 1);
        let y1 = ((a.y.max(b.y).max(c.y) - 0.5).ceil().max(0.0) as usize).min(res - 1);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let p = nalgebra::Point2::new(x as f64 + 0.5, y as f64 + 0.5);
                let w0 = (c - b).perp(&(p - b)) / area;
                let w1 = (a - c).perp(&(p - c)) / area;
                let w2 = 1.0 - w0 - w1;
                const EPS: f64 = -1e-9;
                let slot = &mut coverage[y * res + x];
                if slot.is_none() && w0 >= EPS && w1 >= EPS && w2 >= EPS {
                    *slot = Some((t as u32, [w0, w1, w2]));
                }
            }
        }
    }

    let bvh = Bvh::build(original);
    let orig_normals = original.vertex_normals();
    let lod_normals = lod.vertex_normals();
    let derivs: Vec<Option<(Vec3, Vec3)>> = (0..lod.triangles.len())
        .map(|t| triangle_uv_derivatives(lod, t))
        .collect();
    let reach = RAY_REACH_FRACTION * original.bounds().diagonal();
    let flat = encode_normal([0.0, 0.0, 1.0]);

    let mut data = vec![0u8; res * res * 3];
    let hits: usize = data
        .par_chunks_mut(res * 3)
        .enumerate()
        .map(|(y, row)| {
            let mut hits = 0;
            for x in 0..res {
                let px = &mut row[x * 3..x * 3 + 3];
                px.copy_from_slice(&flat);
                let Some((t, w)) = coverage[y * res + x] else { continue };
                let t = t as usize;
                let Some((dpdu, dpdv)) = derivs[t] else { continue };
                let tri = lod.triangles[t].map(|i| i as usize);
                let p: Vec3 = (0..3).map(|k| lod.positions[tri[k]] * w[k]).sum();
                let n: Vec3 = (0..3).map(|k| lod_normals[tri[k]] * w[k]).sum();
                let Some(n) = n.try_normalize(1e-300) else { continue };
                let Some(hit) = bvh.nearest_hit_along(&p, &n, reach) else {
                    continue;
                };
                hits += 1;
                let ot = original.triangles[hit.triangle].map(|i| i as usize);
                let on: Vec3 = (0..3).map(|k| orig_normals[ot[k]] * hit.bary[k]).sum();
                let Some(on) = on.try_normalize(1e-300) else { continue };
                let frame = TangentFrame::new(n, dpdu, dpdv);
                let mut ts = frame.to_tangent(&on);
                ts[2] = ts[2].max(0.0);
                let len = (ts[0] * ts[0] + ts[1] * ts[1] + ts[2] * ts[2]).sqrt();
                if len > 1e-12 {
                    px.copy_from_slice(&encode_normal(ts.map(|c| c / len)));
                }
            }
            hits
        })
        .sum();
    let covered = coverage.iter().filter(|c| c.is_some()).count();
    let pixels = image::RgbImage::from_raw(resolution, resolution, data).expect("buffer sized to resolution");
    Ok((NormalMap { pixels }, BakeStats { covered, hits }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives::{geodesic_sphere, icosahedron};
    use crate::mesh::uv::unwrap_uv_atlas;
    use crate::texture::decode_normal;

    #[test]
    fn frame_is_orthonormal_and_right_handed_for_ccw_uvs() {
        let f = TangentFrame::new(Vec3::new(0.1, 0.0, 1.0), Vec3::x(), Vec3::y());
        assert!((f.t.dot(&f.n)).abs() < 1e-12 && (f.b.dot(&f.n)).abs() < 1e-12);
        assert!((f.t.cross(&f.b) - f.n).norm() < 1e-12);
        let w = Vec3::new(0.3, -0.2, 0.9).normalize();
        assert!((f.to_world(f.to_tangent(&w)) - w).norm() < 1e-12);
        let mirrored = TangentFrame::new(Vec3::z(), Vec3::x(), -Vec3::y());
        assert!((mirrored.b + Vec3::y()).norm() < 1e-12);
    }

    #[test]
    fn self_bake_is_flat() {
        let lod = unwrap_uv_atlas(&geodesic_sphere(6), 256).mesh;
        let (map, stats) = bake_normal_map_with_stats(&lod, &lod, 256).unwrap();
        assert!(stats.covered > 0 && stats.hits == stats.covered);
        for p in map.pixels.pixels() {
            assert!(
                (p[0] as i32 - 128).abs() <= 2 && (p[1] as i32 - 128).abs() <= 2 && p[2] >= 253,
                "{p:?}"
            );
        }
    }

    #[test]
    fn uncovered_texels_and_missing_uvs() {
        let tri = TriMesh::new(vec![Vec3::zeros(), Vec3::x(), Vec3::y()], vec![[0, 1, 2]]);
        let lod = unwrap_uv_atlas(&tri, 64).mesh;
        let map = bake_normal_map(&tri, &lod, 64).unwrap();
        // The upper-right corner lies outside the packed triangle.
        assert_eq!(map.pixels.get_pixel(63, 0).0, [128, 128, 255]);
        assert!(matches!(bake_normal_map(&tri, &tri, 64), Err(MeshError::MissingUvs)));
        assert!(matches!(
            bake_normal_map(&tri, &lod, 0),
            Err(MeshError::InvalidResolution(0))
        ));
    }

    /// Decoded baked normals, mapped back to world space, per covered texel with its surface point.
    fn decoded_world_normals(lod: &TriMesh, map: &NormalMap) -> Vec<(Vec3, Vec3, Vec3)> {
        let res = map.width() as usize;
        let uvs = lod.uvs.as_ref().unwrap();
        let normals = lod.vertex_normals();
        let mut out = Vec::new();
        for (t, tri) in lod.triangles.iter().enumerate() {
            let Some((du, dv)) = triangle_uv_derivatives(lod, t) else {
                continue;
            };
            let [a, b, c] = tri.map(|i| {
                let uv = uvs[i as usize];
                nalgebra::Point2::new(uv.x * res as f64, (1.0 - uv.y) * res as f64)
            });
            let area = (b - a).perp(&(c - a));
            for y in 0..res {
                for x in 0..res {
                    let p = nalgebra::Point2::new(x as f64 + 0.5, y as f64 + 0.5);
                    let w0 = (c - b).perp(&(p - b)) / area;
                    let w1 = (a - c).perp(&(p - c)) / area;
                    let w2 = 1.0 - w0 - w1;
                    if w0 < 1e-6 || w1 < 1e-6 || w2 < 1e-6 {
                        continue;
                    }
                    let w = [w0, w1, w2];
                    let idx = tri.map(|i| i as usize);
                    let pos: Vec3 = (0..3).map(|k| lod.positions[idx[k]] * w[k]).sum();
                    let n: Vec3 = (0..3).map(|k| normals[idx[k]] * w[k]).sum();
                    let frame = TangentFrame::new(n, du, dv);
                    let decoded = frame.to_world(decode_normal(map.pixels.get_pixel(x as u32, y as u32).0));
                    out.push((pos, decoded.normalize(), lod.face_normal(t)));
                }
            }
        }
        out
    }

    #[test]
    fn sphere_onto_icosahedron_matches_analytic_normals() {
        let original = geodesic_sphere(20);
        let lod = unwrap_uv_atlas(&icosahedron(), 128).mesh;
        let map = bake_normal_map(&original, &lod, 128).unwrap();
        let samples = decoded_world_normals(&lod, &map);
        assert!(samples.len() > 1000);
        let mean = samples
            .iter()
            .map(|(p, n, _)| n.dot(&p.normalize()).clamp(-1.0, 1.0).acos().to_degrees())
            .sum::<f64>()
            / samples.len() as f64;
        assert!(mean < 5.0, "mean error {mean} degrees");
    }
}
