//! Quadric error metric edge-collapse decimation.
//!
//! Each vertex accumulates the area-weighted plane quadrics of its faces; an
//! edge collapses to the point minimizing the summed quadric. Boundary edges
//! carry an extra perpendicular constraint plane weighted by
//! [`BOUNDARY_PENALTY`] so silhouettes survive. A collapse is rejected when it
//! would break the link condition (non-manifold result) or flip a face.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use nalgebra::Matrix3;

use super::{MeshError, TriMesh, Vec3};

pub const BOUNDARY_PENALTY: f64 = 10.0;
const MIN_TARGET: usize = 4;

#[derive(Debug, Clone)]
pub struct DecimateResult {
    pub mesh: TriMesh,
    pub reached_target: bool,
    pub collapses: usize,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Quadric([f64; 10]);

impl Quadric {
    fn plane(n: Vec3, d: f64, w: f64) -> Self {
        let (a, b, c) = (n.x, n.y, n.z);
        Quadric([
            w * a * a,
            w * a * b,
            w * a * c,
            w * a * d,
            w * b * b,
            w * b * c,
            w * b * d,
            w * c * c,
            w * c * d,
            w * d * d,
        ])
    }

    fn add(&mut self, o: &Quadric) {
        for (a, b) in self.0.iter_mut().zip(o.0.iter()) {
            *a += b;
        }
    }

    fn sum(a: &Quadric, b: &Quadric) -> Quadric {
        let mut q = *a;
        q.add(b);
        q
    }

    fn error(&self, v: &Vec3) -> f64 {
        let q = &self.0;
        let (x, y, z) = (v.x, v.y, v.z);
        q[0] * x * x
            + 2.0 * q[1] * x * y
            + 2.0 * q[2] * x * z
            + 2.0 * q[3] * x
            + q[4] * y * y
            + 2.0 * q[5] * y * z
            + 2.0 * q[6] * y
            + q[7] * z * z
            + 2.0 * q[8] * z
            + q[9]
    }

    fn optimum(&self) -> Option<Vec3> {
        let q = &self.0;
        let a = Matrix3::new(q[0], q[1], q[2], q[1], q[4], q[5], q[2], q[5], q[7]);
        let scale = q[0].abs() + q[4].abs() + q[7].abs();
        if scale <= 0.0 || a.determinant().abs() < 1e-10 * scale * scale * scale {
            return None;
        }
        a.try_inverse().map(|inv| -(inv * Vec3::new(q[3], q[6], q[8])))
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    cost: f64,
    u: u32,
    v: u32,
    ver_u: u32,
    ver_v: u32,
    target: Vec3,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate {
    // Reversed so the max-heap pops the cheapest collapse first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .cost
            .total_cmp(&self.cost)
            .then_with(|| other.u.cmp(&self.u))
            .then_with(|| other.v.cmp(&self.v))
    }
}

struct Decimator {
    pos: Vec<Vec3>,
    quadrics: Vec<Quadric>,
    faces: Vec<[u32; 3]>,
    face_alive: Vec<bool>,
    vert_faces: Vec<Vec<u32>>,
    alive: Vec<bool>,
    locked: Vec<bool>,
    version: Vec<u32>,
    heap: BinaryHeap<Candidate>,
}

impl Decimator {
    fn new(mesh: &TriMesh) -> Self {
        let n = mesh.positions.len();
        let mut quadrics = vec![Quadric::default(); n];
        let mut vert_faces = vec![Vec::new(); n];
        let mut edge_faces: HashMap<(u32, u32), Vec<u32>> = HashMap::new();
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let cross = mesh.face_cross(t);
            let area = 0.5 * cross.norm();
            if let Some(nrm) = cross.try_normalize(0.0) {
                let d = -nrm.dot(&mesh.positions[tri[0] as usize]);
                let q = Quadric::plane(nrm, d, area);
                for &i in tri {
                    quadrics[i as usize].add(&q);
                }
            }
            for &i in tri {
                vert_faces[i as usize].push(t as u32);
            }
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                edge_faces.entry((a.min(b), a.max(b))).or_default().push(t as u32);
            }
        }
        let mut locked = vec![false; n];
        let mut edges: Vec<(u32, u32)> = edge_faces.keys().copied().collect();
        edges.sort_unstable();
        for &(a, b) in &edges {
            let fs = &edge_faces[&(a, b)];
            match fs.len() {
                1 => {
                    let t = fs[0] as usize;
                    let pa = mesh.positions[a as usize];
                    let pb = mesh.positions[b as usize];
                    let e = pb - pa;
                    if let Some(m) = e.cross(&mesh.face_normal(t)).try_normalize(0.0) {
                        let q = Quadric::plane(m, -m.dot(&pa), BOUNDARY_PENALTY * e.norm_squared());
                        quadrics[a as usize].add(&q);
                        quadrics[b as usize].add(&q);
                    }
                }
                2 => {}
                _ => {
                    locked[a as usize] = true;
                    locked[b as usize] = true;
                }
            }
        }
        let mut d = Decimator {
            pos: mesh.positions.clone(),
            quadrics,
            faces: mesh.triangles.clone(),
            face_alive: vec![true; mesh.triangles.len()],
            vert_faces,
            alive: (0..n).map(|_| true).collect(),
            locked,
            version: vec![0; n],
            heap: BinaryHeap::with_capacity(edges.len()),
        };
        // Vertices not referenced by any face are dropped from the count.
        for i in 0..n {
            if d.vert_faces[i].is_empty() {
                d.alive[i] = false;
            }
        }
        for &(a, b) in &edges {
            d.push_edge(a, b);
        }
        d
    }

    fn push_edge(&mut self, u: u32, v: u32) {
        if self.locked[u as usize] || self.locked[v as usize] {
            return;
        }
        let q = Quadric::sum(&self.quadrics[u as usize], &self.quadrics[v as usize]);
        let pu = self.pos[u as usize];
        let pv = self.pos[v as usize];
        let mid = (pu + pv) * 0.5;
        let len = (pv - pu).norm();
        let mut best = [pu, pv, mid]
            .into_iter()
            .map(|p| (q.error(&p), p))
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .unwrap();
        if let Some(opt) = q.optimum() {
            if (opt - mid).norm() <= 2.0 * len {
                let e = q.error(&opt);
                if e <= best.0 {
                    best = (e, opt);
                }
            }
        }
        self.heap.push(Candidate {
            cost: best.0.max(0.0),
            u,
            v,
            ver_u: self.version[u as usize],
            ver_v: self.version[v as usize],
            target: best.1,
        });
    }

    fn neighbors(&self, v: u32) -> Vec<u32> {
        let mut out: Vec<u32> = self.vert_faces[v as usize]
            .iter()
            .flat_map(|&f| self.faces[f as usize])
            .filter(|&w| w != v)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    fn collapse_allowed(&self, u: u32, v: u32, target: &Vec3) -> bool {
        let shared = self.vert_faces[u as usize]
            .iter()
            .filter(|f| self.faces[**f as usize].contains(&v))
            .count();
        if shared == 0 {
            return false;
        }
        let nu = self.neighbors(u);
        let nv = self.neighbors(v);
        let common = nu.iter().filter(|w| nv.binary_search(w).is_ok()).count();
        if common != shared {
            return false;
        }
        for &w in [u, v].iter() {
            for &f in &self.vert_faces[w as usize] {
                let tri = self.faces[f as usize];
                if tri.contains(&u) && tri.contains(&v) {
                    continue;
                }
                let before = self.cross_of(tri, None);
                let after = self.cross_of(tri, Some((w, *target)));
                let bl = before.norm();
                let al = after.norm();
                if al <= 1e-12 * bl.max(1e-300) || before.dot(&after) <= 0.2 * bl * al {
                    return false;
                }
            }
        }
        true
    }

    fn cross_of(&self, tri: [u32; 3], moved: Option<(u32, Vec3)>) -> Vec3 {
        let p = |i: u32| match moved {
            Some((m, q)) if m == i => q,
            _ => self.pos[i as usize],
        };
        let (a, b, c) = (p(tri[0]), p(tri[1]), p(tri[2]));
        (b - a).cross(&(c - a))
    }

    fn remove_face_from(&mut self, vertex: u32, face: u32) {
        let list = &mut self.vert_faces[vertex as usize];
        if let Some(i) = list.iter().position(|&f| f == face) {
            list.swap_remove(i);
        }
    }

    fn collapse(&mut self, u: u32, v: u32, target: Vec3) {
        let v_faces = std::mem::take(&mut self.vert_faces[v as usize]);
        for f in v_faces {
            let tri = self.faces[f as usize];
            if tri.contains(&u) {
                self.face_alive[f as usize] = false;
                for w in tri {
                    if w != v {
                        self.remove_face_from(w, f);
                    }
                }
            } else {
                let slot = tri.iter().position(|&w| w == v).unwrap();
                self.faces[f as usize][slot] = u;
                self.vert_faces[u as usize].push(f);
            }
        }
        self.alive[v as usize] = false;
        self.pos[u as usize] = target;
        let qv = self.quadrics[v as usize];
        self.quadrics[u as usize].add(&qv);
        self.version[u as usize] += 1;
        self.version[v as usize] += 1;
        for w in self.neighbors(u) {
            self.push_edge(u.min(w), u.max(w));
        }
    }
}

/// Collapses edges until at most `target_vertices` remain.
pub fn decimate(mesh: &TriMesh, target_vertices: usize) -> Result<DecimateResult, MeshError> {
    if target_vertices < MIN_TARGET {
        return Err(MeshError::InvalidTarget(target_vertices));
    }
    mesh.validate()?;
    if target_vertices >= mesh.vertex_count() {
        return Ok(DecimateResult {
            mesh: mesh.clone(),
            reached_target: true,
            collapses: 0,
            warnings: Vec::new(),
        });
    }
    let mut d = Decimator::new(mesh);
    let mut count = d.alive.iter().filter(|&&a| a).count();
    let mut collapses = 0;
    while count > target_vertices {
        let Some(c) = d.heap.pop() else { break };
        let (u, v) = (c.u, c.v);
        if !d.alive[u as usize]
            || !d.alive[v as usize]
            || d.version[u as usize] != c.ver_u
            || d.version[v as usize] != c.ver_v
        {
            continue;
        }
        if !d.collapse_allowed(u, v, &c.target) {
            continue;
        }
        d.collapse(u, v, c.target);
        count -= 1;
        collapses += 1;
    }
    let faces: Vec<[u32; 3]> = d
        .faces
        .iter()
        .zip(&d.face_alive)
        .filter(|(_, &a)| a)
        .map(|(f, _)| *f)
        .collect();
    let moved = TriMesh::new(d.pos, faces);
    let mut out = moved.compact_with(moved.triangles.clone()).cleaned();
    if mesh.normals.is_some() {
        out = out.with_vertex_normals();
    }
    let reached = out.vertex_count() <= target_vertices;
    let mut warnings = Vec::new();
    if !reached {
        let msg = format!(
            "target of {target_vertices} vertices unreachable; stopped at {}",
            out.vertex_count()
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }
    Ok(DecimateResult {
        mesh: out,
        reached_target: reached,
        collapses,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives::{blob, geodesic_sphere, grid_plane, icosahedron};

    fn edge_manifold(m: &TriMesh) -> bool {
        let mut count: HashMap<(u32, u32), usize> = HashMap::new();
        for t in &m.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        count.values().all(|&c| c == 2)
    }

    #[test]
    fn target_above_count_is_identity() {
        let ico = icosahedron();
        let r = decimate(&ico, 12).unwrap();
        assert_eq!(r.mesh, ico);
        assert_eq!(decimate(&ico, 500).unwrap().mesh, ico);
    }

    #[test]
    fn rejects_tiny_targets() {
        assert!(matches!(decimate(&icosahedron(), 3), Err(MeshError::InvalidTarget(3))));
    }

    #[test]
    fn sphere_stays_closed_and_round() {
        let sphere = geodesic_sphere(12);
        let r = decimate(&sphere, 100).unwrap();
        assert!(r.reached_target);
        assert!(r.mesh.vertex_count() <= 100);
        assert!(edge_manifold(&r.mesh));
        for p in &r.mesh.positions {
            assert!((p.norm() - 1.0).abs() < 0.08, "{}", p.norm());
        }
        let b0 = sphere.bounds();
        let b1 = r.mesh.bounds();
        assert!((b0.min - b1.min).norm() < 0.01 * b0.diagonal() * 3.0);
        assert!((b0.max - b1.max).norm() < 0.01 * b0.diagonal() * 3.0);
    }

    #[test]
    fn never_increases_count_and_indices_valid() {
        let m = blob(8, 0.15, 3);
        for target in [600, 200, 50, 10] {
            let r = decimate(&m, target).unwrap();
            assert!(r.mesh.vertex_count() <= m.vertex_count());
            r.mesh.validate().unwrap();
        }
    }

    #[test]
    fn open_plane_keeps_its_outline() {
        let plane = grid_plane(20, 20, 1.0, 1.0);
        let r = decimate(&plane, 30).unwrap();
        let b = r.mesh.bounds();
        assert!((b.min - Vec3::zeros()).norm() < 0.01);
        assert!((b.max - Vec3::new(1.0, 1.0, 0.0)).norm() < 0.01);
        assert!((r.mesh.surface_area() - 1.0).abs() < 0.01);
    }

    #[test]
    fn unreachable_target_warns() {
        // A lone tetrahedron-like closed mesh cannot lose vertices without going non-manifold.
        let tet = TriMesh::new(
            vec![Vec3::zeros(), Vec3::x(), Vec3::y(), Vec3::z(), Vec3::new(1.0, 1.0, 1.0)],
            vec![[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 4], [2, 3, 4], [3, 1, 4]],
        );
        let r = decimate(&tet, 4).unwrap();
        assert!(r.mesh.vertex_count() >= 4);
        if !r.reached_target {
            assert!(!r.warnings.is_empty());
        }
    }
}
