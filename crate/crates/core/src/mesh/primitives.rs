//! Procedural meshes used as fixtures and demo assets.

use std::collections::HashMap;

use super::{TriMesh, Vec3};

fn icosahedron_raw() -> (Vec<Vec3>, Vec<[u32; 3]>) {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let verts: Vec<Vec3> = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let faces = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    (verts, faces)
}

/// Regular icosahedron inscribed in the unit sphere.
pub fn icosahedron() -> TriMesh {
    let (v, f) = icosahedron_raw();
    TriMesh::new(v, f)
}

/// Class I geodesic sphere of frequency `n` on the unit sphere: `10 n^2 + 2` vertices.
pub fn geodesic_sphere(n: u32) -> TriMesh {
    let n = n.max(1);
    let (ico, faces) = icosahedron_raw();
    let mut index: HashMap<Vec<(u32, u32)>, u32> = HashMap::new();
    let mut positions = Vec::with_capacity(10 * (n * n) as usize + 2);
    let mut vertex = |key: Vec<(u32, u32)>| -> u32 {
        if let Some(&i) = index.get(&key) {
            return i;
        }
        let p: Vec3 = key.iter().map(|&(c, w)| ico[c as usize] * (w as f64 / n as f64)).sum();
        positions.push(p.normalize());
        let i = (positions.len() - 1) as u32;
        index.insert(key, i);
        i
    };
    let mut triangles = Vec::with_capacity(20 * (n * n) as usize);
    for f in &faces {
        let mut grid = vec![vec![0u32; (n + 1) as usize]; (n + 1) as usize];
        for i in 0..=n {
            for j in 0..=(n - i) {
                let mut key: Vec<(u32, u32)> = [(f[0], n - i - j), (f[1], i), (f[2], j)]
                    .into_iter()
                    .filter(|&(_, w)| w > 0)
                    .collect();
                key.sort_unstable();
                grid[i as usize][j as usize] = vertex(key);
            }
        }
        for i in 0..n as usize {
            for j in 0..(n as usize - i) {
                triangles.push([grid[i][j], grid[i + 1][j], grid[i][j + 1]]);
                if j + 1 < n as usize - i {
                    triangles.push([grid[i + 1][j], grid[i + 1][j + 1], grid[i][j + 1]]);
                }
            }
        }
    }
    TriMesh::new(positions, triangles)
}

/// Unit cube `[0, 1]^3` with outward winding.
pub fn cube() -> TriMesh {
    let positions = (0..8)
        .map(|i| Vec3::new((i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64))
        .collect();
    let quads = [
        [0, 2, 3, 1], // z = 0
        [4, 5, 7, 6], // z = 1
        [0, 1, 5, 4], // y = 0
        [2, 6, 7, 3], // y = 1
        [0, 4, 6, 2], // x = 0
        [1, 3, 7, 5], // x = 1
    ];
    let triangles = quads
        .iter()
        .flat_map(|q| [[q[0], q[1], q[2]], [q[0], q[2], q[3]]])
        .collect();
    TriMesh::new(positions, triangles)
}

/// Geodesic sphere with a smooth deterministic radial displacement.
pub fn blob(n: u32, amplitude: f64, seed: u64) -> TriMesh {
    let mut mesh = geodesic_sphere(n);
    let s = (seed % 997) as f64 * 0.1;
    for p in &mut mesh.positions {
        let d = (3.0 * p.x + s).sin() * (2.0 * p.y - s).cos() + 0.5 * (5.0 * p.z + 2.0 * s).sin();
        *p *= 1.0 + amplitude * d;
    }
    mesh
}

/// Grid of `nx * ny` quads spanning `[0, sx] x [0, sy]` in the z = 0 plane, facing +Z.
pub fn grid_plane(nx: u32, ny: u32, sx: f64, sy: f64) -> TriMesh {
    let mut positions = Vec::with_capacity(((nx + 1) * (ny + 1)) as usize);
    for j in 0..=ny {
        for i in 0..=nx {
            positions.push(Vec3::new(sx * i as f64 / nx as f64, sy * j as f64 / ny as f64, 0.0));
        }
    }
    let idx = |i: u32, j: u32| j * (nx + 1) + i;
    let mut triangles = Vec::with_capacity((2 * nx * ny) as usize);
    for j in 0..ny {
        for i in 0..nx {
            triangles.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            triangles.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    TriMesh::new(positions, triangles)
}

/// A cone pointing along +Z (apex at z = height), base at z = 0.
pub fn cone(segments: u32, radius: f64, height: f64) -> TriMesh {
    let mut positions = vec![Vec3::new(0.0, 0.0, height), Vec3::zeros()];
    for k in 0..segments {
        let a = std::f64::consts::TAU * k as f64 / segments as f64;
        positions.push(Vec3::new(radius * a.cos(), radius * a.sin(), 0.0));
    }
    let mut triangles = Vec::new();
    for k in 0..segments {
        let a = 2 + k;
        let b = 2 + (k + 1) % segments;
        triangles.push([0, a, b]);
        triangles.push([1, b, a]);
    }
    TriMesh::new(positions, triangles)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outward(m: &TriMesh) -> bool {
        let c = m.centroid();
        (0..m.triangles.len()).all(|t| {
            let [a, b, cc] = m.corners(t);
            m.face_cross(t).dot(&((a + b + cc) / 3.0 - c)) > 0.0
        })
    }

    #[test]
    fn counts_and_winding() {
        let ico = icosahedron();
        assert_eq!((ico.vertex_count(), ico.triangle_count()), (12, 20));
        assert!(outward(&ico));
        let s = geodesic_sphere(5);
        assert_eq!(s.vertex_count(), 252);
        assert_eq!(s.triangle_count(), 500);
        assert!(outward(&s));
        assert!(outward(&cube()));
        assert!(outward(&cone(12, 0.3, 1.0)));
        let g = grid_plane(4, 4, 1.0, 1.0);
        assert_eq!(g.vertex_count(), 25);
        assert!((0..g.triangles.len()).all(|t| g.face_normal(t).z > 0.99));
    }

    #[test]
    fn hundred_thousand_vertex_sphere() {
        assert_eq!(geodesic_sphere(100).vertex_count(), 100_002);
    }
}
