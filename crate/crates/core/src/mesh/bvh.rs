//! Bounding volume hierarchy over mesh triangles for ray and nearest-point queries.

use super::trimesh::closest_point_on_triangle;
use super::{Aabb, TriMesh, Vec3};

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone)]
struct Node {
    bounds: Aabb,
    /// Leaf: first triangle in `order`; interior: index of the right child.
    start: u32,
    /// Leaf: triangle count; interior: 0.
    count: u32,
}

#[derive(Debug, Clone)]
pub struct Bvh {
    nodes: Vec<Node>,
    order: Vec<u32>,
    tris: Vec<[Vec3; 3]>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub t: f64,
    pub triangle: usize,
    /// Barycentric weights of the triangle's three corners.
    pub bary: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearestPoint {
    pub point: Vec3,
    pub distance: f64,
    pub triangle: usize,
    pub bary: [f64; 3],
}

impl Bvh {
    pub fn build(mesh: &TriMesh) -> Self {
        let tris: Vec<[Vec3; 3]> = (0..mesh.triangles.len()).map(|t| mesh.corners(t)).collect();
        let centroids: Vec<Vec3> = tris.iter().map(|c| (c[0] + c[1] + c[2]) / 3.0).collect();
        let mut order: Vec<u32> = (0..tris.len() as u32).collect();
        let mut nodes = Vec::with_capacity(2 * tris.len() / LEAF_SIZE + 1);
        if !tris.is_empty() {
            build_node(&tris, &centroids, &mut order, 0, tris.len(), &mut nodes);
        }
        Self { nodes, order, tris }
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Hit with the smallest `|t|` for `t` in `[-reach, reach]` along `origin + t * dir`.
    pub fn nearest_hit_along(&self, origin: &Vec3, dir: &Vec3, reach: f64) -> Option<RayHit> {
        if self.nodes.is_empty() {
            return None;
        }
        let inv = Vec3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let mut best: Option<RayHit> = None;
        let mut best_abs = f64::INFINITY;
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            let Some((t0, t1)) = slab(&node.bounds, origin, &inv, -reach, reach) else {
                continue;
            };
            let lower = if t0 <= 0.0 && t1 >= 0.0 {
                0.0
            } else {
                t0.abs().min(t1.abs())
            };
            if lower > best_abs {
                continue;
            }
            if node.count > 0 {
                for &ti in &self.order[node.start as usize..(node.start + node.count) as usize] {
                    if let Some((t, bary)) = intersect(&self.tris[ti as usize], origin, dir) {
                        let tie_break = best.is_some_and(|b| t.abs() == best_abs && (ti as usize) < b.triangle);
                        if t.abs() <= reach && (t.abs() < best_abs || tie_break) {
                            best_abs = t.abs();
                            best = Some(RayHit {
                                t,
                                triangle: ti as usize,
                                bary,
                            });
                        }
                    }
                }
            } else {
                stack.push(node.start as usize);
                stack.push(ni + 1);
            }
        }
        best
    }

    /// First hit with `t` in `[t_min, t_max]`.
    pub fn first_hit(&self, origin: &Vec3, dir: &Vec3, t_min: f64, t_max: f64) -> Option<RayHit> {
        if self.nodes.is_empty() {
            return None;
        }
        let inv = Vec3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let mut best: Option<RayHit> = None;
        let mut limit = t_max;
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            if slab(&node.bounds, origin, &inv, t_min, limit).is_none() {
                continue;
            }
            if node.count > 0 {
                for &ti in &self.order[node.start as usize..(node.start + node.count) as usize] {
                    if let Some((t, bary)) = intersect(&self.tris[ti as usize], origin, dir) {
                        if t >= t_min && t <= limit {
                            limit = t;
                            best = Some(RayHit {
                                t,
                                triangle: ti as usize,
                                bary,
                            });
                        }
                    }
                }
            } else {
                stack.push(node.start as usize);
                stack.push(ni + 1);
            }
        }
        best
    }

    pub fn nearest_point(&self, p: &Vec3) -> Option<NearestPoint> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best: Option<NearestPoint> = None;
        let mut best_d2 = f64::INFINITY;
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            if node.bounds.squared_distance(p) > best_d2 {
                continue;
            }
            if node.count > 0 {
                for &ti in &self.order[node.start as usize..(node.start + node.count) as usize] {
                    let [a, b, c] = &self.tris[ti as usize];
                    let (q, bary) = closest_point_on_triangle(p, a, b, c);
                    let d2 = (q - p).norm_squared();
                    if d2 < best_d2 {
                        best_d2 = d2;
                        best = Some(NearestPoint {
                            point: q,
                            distance: d2.sqrt(),
                            triangle: ti as usize,
                            bary,
                        });
                    }
                }
            } else {
                let left = ni + 1;
                let right = node.start as usize;
                let dl = self.nodes[left].bounds.squared_distance(p);
                let dr = self.nodes[right].bounds.squared_distance(p);
                if dl < dr {
                    stack.push(right);
                    stack.push(left);
                } else {
                    stack.push(left);
                    stack.push(right);
                }
            }
        }
        best
    }
}

fn build_node(
    tris: &[[Vec3; 3]],
    centroids: &[Vec3],
    order: &mut [u32],
    start: usize,
    end: usize,
    nodes: &mut Vec<Node>,
) -> usize {
    let mut bounds = Aabb::empty();
    let mut cbounds = Aabb::empty();
    for &i in &order[start..end] {
        for p in &tris[i as usize] {
            bounds.grow(p);
        }
        cbounds.grow(&centroids[i as usize]);
    }
    let index = nodes.len();
    nodes.push(Node {
        bounds,
        start: start as u32,
        count: (end - start) as u32,
    });
    let extent = cbounds.extent();
    if end - start <= LEAF_SIZE || extent.max() <= 0.0 {
        return index;
    }
    let axis = extent.imax();
    let mid = (start + end) / 2;
    order[start..end].select_nth_unstable_by(mid - start, |a, b| {
        centroids[*a as usize][axis]
            .total_cmp(&centroids[*b as usize][axis])
            .then(a.cmp(b))
    });
    build_node(tris, centroids, order, start, mid, nodes);
    let right = build_node(tris, centroids, order, mid, end, nodes);
    nodes[index].start = right as u32;
    nodes[index].count = 0;
    index
}

fn slab(b: &Aabb, origin: &Vec3, inv: &Vec3, t_min: f64, t_max: f64) -> Option<(f64, f64)> {
    let mut lo = t_min;
    let mut hi = t_max;
    for k in 0..3 {
        let mut t0 = (b.min[k] - origin[k]) * inv[k];
        let mut t1 = (b.max[k] - origin[k]) * inv[k];
        if t0.is_nan() || t1.is_nan() {
            // Ray parallel to and lying on a slab plane.
            if origin[k] < b.min[k] || origin[k] > b.max[k] {
                return None;
            }
            continue;
        }
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
        }
        lo = lo.max(t0);
        hi = hi.min(t1);
        if lo > hi * (1.0 + 4.0 * f64::EPSILON) + 1e-12 {
            return None;
        }
    }
    Some((lo, hi))
}

/// Möller-Trumbore, two-sided. Returns `t` and corner weights.
fn intersect(tri: &[Vec3; 3], origin: &Vec3, dir: &Vec3) -> Option<(f64, [f64; 3])> {
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let p = dir.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < 1e-300 {
        return None;
    }
    let inv = 1.0 / det;
    let s = origin - tri[0];
    let u = s.dot(&p) * inv;
    const EPS: f64 = 1e-9;
    if !(-EPS..=1.0 + EPS).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = dir.dot(&q) * inv;
    if v < -EPS || u + v > 1.0 + EPS {
        return None;
    }
    let t = e2.dot(&q) * inv;
    Some((t, [1.0 - u - v, u, v]))
}
