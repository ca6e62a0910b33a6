use nalgebra::{Point2, Vector3};

use super::MeshError;

pub type Vec3 = Vector3<f64>;

/// Indexed triangle mesh with optional per-vertex normals and UVs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TriMesh {
    pub positions: Vec<Vec3>,
    pub normals: Option<Vec<Vec3>>,
    pub uvs: Option<Vec<Point2<f64>>>,
    pub triangles: Vec<[u32; 3]>,
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn empty() -> Self {
        Self {
            min: Vec3::repeat(f64::INFINITY),
            max: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    pub fn new(min: Vec3, max: Vec3) -> Self {
        Self { min, max }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Vec3>) -> Self {
        let mut b = Self::empty();
        for p in points {
            b.grow(p);
        }
        b
    }

    pub fn grow(&mut self, p: &Vec3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&other.min),
            max: self.max.sup(&other.max),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x
    }

    pub fn extent(&self) -> Vec3 {
        if self.is_empty() {
            Vec3::zeros()
        } else {
            self.max - self.min
        }
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn diagonal(&self) -> f64 {
        self.extent().norm()
    }

    pub fn largest_extent(&self) -> f64 {
        self.extent().max()
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|k| p[k] >= self.min[k] && p[k] <= self.max[k])
    }

    pub fn squared_distance(&self, p: &Vec3) -> f64 {
        let mut d = 0.0;
        for k in 0..3 {
            let v = if p[k] < self.min[k] {
                self.min[k] - p[k]
            } else if p[k] > self.max[k] {
                p[k] - self.max[k]
            } else {
                0.0
            };
            d += v * v;
        }
        d
    }
}

impl TriMesh {
    pub fn new(positions: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Self {
        Self {
            positions,
            normals: None,
            uvs: None,
            triangles,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn bounds(&self) -> Aabb {
        Aabb::from_points(&self.positions)
    }

    pub fn centroid(&self) -> Vec3 {
        if self.positions.is_empty() {
            return Vec3::zeros();
        }
        self.positions.iter().sum::<Vec3>() / self.positions.len() as f64
    }

    pub fn corners(&self, t: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[t];
        [
            self.positions[a as usize],
            self.positions[b as usize],
            self.positions[c as usize],
        ]
    }

    /// Unnormalized face normal (twice the area in length).
    pub fn face_cross(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.corners(t);
        (b - a).cross(&(c - a))
    }

    pub fn face_normal(&self, t: usize) -> Vec3 {
        self.face_cross(t).try_normalize(0.0).unwrap_or_else(Vec3::z)
    }

    pub fn face_area(&self, t: usize) -> f64 {
        0.5 * self.face_cross(t).norm()
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.face_area(t)).sum()
    }

    /// Checks index ranges and coordinate finiteness.
    pub fn validate(&self) -> Result<(), MeshError> {
        let n = self.positions.len();
        for (i, p) in self.positions.iter().enumerate() {
            if !p.iter().all(|c| c.is_finite()) {
                return Err(MeshError::NonFinite { vertex: i });
            }
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&i| i as usize >= n) {
                return Err(MeshError::IndexOutOfRange {
                    triangle: t,
                    vertices: n,
                });
            }
        }
        if let Some(ns) = &self.normals {
            if ns.len() != n {
                return Err(MeshError::AttributeLength("normals"));
            }
        }
        if let Some(uv) = &self.uvs {
            if uv.len() != n {
                return Err(MeshError::AttributeLength("uvs"));
            }
        }
        Ok(())
    }

    /// Area-weighted smooth vertex normals.
    pub fn compute_vertex_normals(&self) -> Vec<Vec3> {
        let mut acc = vec![Vec3::zeros(); self.positions.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            let n = self.face_cross(t);
            for &i in tri {
                acc[i as usize] += n;
            }
        }
        acc.into_iter()
            .map(|n| n.try_normalize(1e-300).unwrap_or_else(Vec3::z))
            .collect()
    }

    /// Stored normals, or smooth normals when none are stored.
    pub fn vertex_normals(&self) -> Vec<Vec3> {
        match &self.normals {
            Some(n) => n.clone(),
            None => self.compute_vertex_normals(),
        }
    }

    pub fn with_vertex_normals(mut self) -> Self {
        self.normals = Some(self.compute_vertex_normals());
        self
    }

    /// Drops zero-area and repeated-index triangles and unreferenced vertices.
    pub fn cleaned(&self) -> TriMesh {
        let keep: Vec<[u32; 3]> = self
            .triangles
            .iter()
            .enumerate()
            .filter(|(t, tri)| {
                tri[0] != tri[1] && tri[1] != tri[2] && tri[0] != tri[2] && self.face_cross(*t).norm_squared() > 0.0
            })
            .map(|(_, tri)| *tri)
            .collect();
        self.compact_with(keep)
    }

    /// Keeps only the vertices referenced by `triangles`, preserving their order.
    pub(crate) fn compact_with(&self, triangles: Vec<[u32; 3]>) -> TriMesh {
        let mut remap = vec![u32::MAX; self.positions.len()];
        let mut used: Vec<usize> = triangles.iter().flatten().map(|&i| i as usize).collect();
        used.sort_unstable();
        used.dedup();
        for (new, &old) in used.iter().enumerate() {
            remap[old] = new as u32;
        }
        TriMesh {
            positions: used.iter().map(|&i| self.positions[i]).collect(),
            normals: self.normals.as_ref().map(|n| used.iter().map(|&i| n[i]).collect()),
            uvs: self.uvs.as_ref().map(|uv| used.iter().map(|&i| uv[i]).collect()),
            triangles: triangles.into_iter().map(|t| t.map(|i| remap[i as usize])).collect(),
        }
    }

    /// Concatenates meshes, offsetting indices.
    pub fn merge(meshes: &[TriMesh]) -> TriMesh {
        let mut out = TriMesh::default();
        let with_normals = meshes.iter().all(|m| m.normals.is_some());
        let with_uvs = meshes.iter().all(|m| m.uvs.is_some());
        let mut normals = Vec::new();
        let mut uvs = Vec::new();
        for m in meshes {
            let base = out.positions.len() as u32;
            out.positions.extend_from_slice(&m.positions);
            out.triangles.extend(m.triangles.iter().map(|t| t.map(|i| i + base)));
            if with_normals {
                normals.extend_from_slice(m.normals.as_ref().unwrap());
            }
            if with_uvs {
                uvs.extend_from_slice(m.uvs.as_ref().unwrap());
            }
        }
        out.normals = with_normals.then_some(normals);
        out.uvs = with_uvs.then_some(uvs);
        out
    }
}

/// Closest point on triangle `abc` to `p` (Ericson, Real-Time Collision Detection 5.1.5),
/// returned with its barycentric coordinates.
pub fn closest_point_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> (Vec3, [f64; 3]) {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return (*a, [1.0, 0.0, 0.0]);
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return (*b, [0.0, 1.0, 0.0]);
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (a + ab * v, [1.0 - v, v, 0.0]);
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return (*c, [0.0, 0.0, 1.0]);
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (a + ac * w, [1.0 - w, 0.0, w]);
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (b + (c - b) * w, [0.0, 1.0 - w, w]);
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (a + ab * v + ac * w, [1.0 - v - w, v, w])
}
