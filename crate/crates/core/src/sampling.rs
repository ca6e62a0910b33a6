//! Glyph placement: regular lattices, uniform random points and
//! density-driven Metropolis-Hastings sampling over volumes and surfaces.

use std::collections::HashMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::field::VoxelGrid;
use crate::mesh::{dominant_chart, Aabb, TriMesh, Vec3};

pub const PROPOSAL_SIGMA_FRACTION: f64 = 0.05;
pub const BURN_IN: usize = 1000;
pub const THINNING: usize = 5;
pub const DEFAULT_CHAINS: usize = 16;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SamplingError {
    #[error("spacing must be positive and finite, got {0}")]
    Spacing(f64),
    #[error("density field has no positive mass")]
    ZeroMass,
    #[error("surface has {values} values for {vertices} vertices")]
    ValueCount { values: usize, vertices: usize },
    #[error("domain is empty")]
    EmptyDomain,
    #[error("sample cache is malformed")]
    Cache,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingMethod {
    Regular,
    Random,
    Density,
}

#[derive(Debug, Clone, Copy)]
pub enum Domain<'a> {
    Volume(Aabb),
    Surface(&'a TriMesh),
}

#[derive(Debug, Clone, Copy)]
pub enum ScalarField<'a> {
    Voxels(&'a VoxelGrid),
    /// Per-vertex values, interpolated barycentrically.
    Surface {
        mesh: &'a TriMesh,
        values: &'a [f64],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SampleRecord {
    pub method: SamplingMethod,
    pub seed: Option<u64>,
    pub count: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spacing: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chains: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub positions: Vec<Vec3>,
    /// Source triangle per sample for surface domains.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub triangles: Option<Vec<u32>>,
    pub record: SampleRecord,
}

impl SampleSet {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y,z\n");
        for p in &self.positions {
            let _ = writeln!(s, "{},{},{}", p.x, p.y, p.z);
        }
        s
    }

    /// Little-endian cache: sample count as u64, then x, y, z as f64 per sample.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 24 * self.positions.len());
        out.extend_from_slice(&(self.positions.len() as u64).to_le_bytes());
        for p in &self.positions {
            for c in p.iter() {
                out.extend_from_slice(&c.to_le_bytes());
            }
        }
        out
    }

    pub fn positions_from_bytes(bytes: &[u8]) -> Result<Vec<Vec3>, SamplingError> {
        let head: [u8; 8] = bytes.get(..8).ok_or(SamplingError::Cache)?.try_into().unwrap();
        let n = u64::from_le_bytes(head) as usize;
        let body = &bytes[8..];
        if n.checked_mul(24) != Some(body.len()) {
            return Err(SamplingError::Cache);
        }
        Ok(body
            .chunks_exact(24)
            .map(|c| {
                let f = |k: usize| f64::from_le_bytes(c[8 * k..8 * k + 8].try_into().unwrap());
                Vec3::new(f(0), f(1), f(2))
            })
            .collect())
    }
}

fn lattice_axis(lo: f64, hi: f64, spacing: f64) -> (usize, f64) {
    let extent = (hi - lo).max(0.0);
    let n = (extent / spacing + 1e-9).floor() as usize + 1;
    (n, lo + (extent - (n - 1) as f64 * spacing) / 2.0)
}

/// Axis-aligned lattice centered in the domain; surfaces use the lattice of
/// each face's dominant-axis plane, lifted onto the face.
pub fn sample_regular(domain: Domain, spacing: f64) -> Result<SampleSet, SamplingError> {
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(SamplingError::Spacing(spacing));
    }
    let (positions, triangles) = match domain {
        Domain::Volume(b) => {
            if b.is_empty() {
                return Err(SamplingError::EmptyDomain);
            }
            let axes: Vec<(usize, f64)> = (0..3).map(|a| lattice_axis(b.min[a], b.max[a], spacing)).collect();
            let mut pts = Vec::with_capacity(axes[0].0 * axes[1].0 * axes[2].0);
            for k in 0..axes[2].0 {
                for j in 0..axes[1].0 {
                    for i in 0..axes[0].0 {
                        pts.push(Vec3::new(
                            axes[0].1 + i as f64 * spacing,
                            axes[1].1 + j as f64 * spacing,
                            axes[2].1 + k as f64 * spacing,
                        ));
                    }
                }
            }
            (pts, None)
        }
        Domain::Surface(mesh) => {
            let (p, t) = surface_lattice(mesh, spacing)?;
            (p, Some(t))
        }
    };
    Ok(SampleSet {
        record: SampleRecord {
            method: SamplingMethod::Regular,
            seed: None,
            count: positions.len(),
            spacing: Some(spacing),
            chains: None,
        },
        positions,
        triangles,
    })
}

fn surface_lattice(mesh: &TriMesh, spacing: f64) -> Result<(Vec<Vec3>, Vec<u32>), SamplingError> {
    if mesh.triangles.is_empty() {
        return Err(SamplingError::EmptyDomain);
    }
    let b = mesh.bounds();
    let origin: Vec<(usize, f64)> = (0..3).map(|a| lattice_axis(b.min[a], b.max[a], spacing)).collect();
    let tol = 1e-9 * b.diagonal().max(1e-300);
    // Points on edges shared between faces (or charts) are emitted once.
    let cell = spacing * 0.5;
    let key = |p: &Vec3| [0, 1, 2].map(|a| (p[a] / cell).floor() as i64);
    let mut seen: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    let mut pts: Vec<Vec3> = Vec::new();
    let mut tris = Vec::new();
    for t in 0..mesh.triangles.len() {
        let n = mesh.face_cross(t);
        if n.norm_squared() == 0.0 {
            continue;
        }
        let chart = dominant_chart(&n);
        let axis = (chart / 2) as usize;
        let (ua, va) = ((axis + 1) % 3, (axis + 2) % 3);
        let c = mesh.corners(t);
        let p2 = c.map(|p| (p[ua], p[va]));
        let area = (p2[1].0 - p2[0].0) * (p2[2].1 - p2[0].1) - (p2[2].0 - p2[0].0) * (p2[1].1 - p2[0].1);
        let lo_u = p2.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let hi_u = p2.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        let lo_v = p2.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let hi_v = p2.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        let i0 = ((lo_u - origin[ua].1) / spacing - 1e-9).ceil() as i64;
        let i1 = ((hi_u - origin[ua].1) / spacing + 1e-9).floor() as i64;
        let j0 = ((lo_v - origin[va].1) / spacing - 1e-9).ceil() as i64;
        let j1 = ((hi_v - origin[va].1) / spacing + 1e-9).floor() as i64;
        for i in i0..=i1 {
            for j in j0..=j1 {
                let (u, v) = (origin[ua].1 + i as f64 * spacing, origin[va].1 + j as f64 * spacing);
                let w = |a: (f64, f64), b: (f64, f64)| ((b.0 - a.0) * (v - a.1) - (u - a.0) * (b.1 - a.1)) / area;
                let (w0, w1) = (w(p2[1], p2[2]), w(p2[2], p2[0]));
                let w2 = 1.0 - w0 - w1;
                if w0 < -1e-9 || w1 < -1e-9 || w2 < -1e-9 {
                    continue;
                }
                let p = c[0] * w0 + c[1] * w1 + c[2] * w2;
                let k = key(&p);
                let dup = (-1..=1).any(|dx| {
                    (-1..=1).any(|dy| {
                        (-1..=1).any(|dz| {
                            seen.get(&[k[0] + dx, k[1] + dy, k[2] + dz])
                                .is_some_and(|ids| ids.iter().any(|&q| (pts[q] - p).norm() <= tol))
                        })
                    })
                });
                if dup {
                    continue;
                }
                seen.entry(k).or_default().push(pts.len());
                pts.push(p);
                tris.push(t as u32);
            }
        }
    }
    Ok((pts, tris))
}

struct AreaTable {
    cumulative: Vec<f64>,
    total: f64,
}

impl AreaTable {
    fn new(mesh: &TriMesh) -> Self {
        let mut acc = 0.0;
        let cumulative = (0..mesh.triangles.len())
            .map(|t| {
                acc += mesh.face_area(t);
                acc
            })
            .collect();
        Self { cumulative, total: acc }
    }

    /// Maps `s` in [0, 1) to a triangle and the fraction of the way through its area slot.
    fn locate(&self, s: f64) -> (usize, f64) {
        let target = s * self.total;
        let t = self
            .cumulative
            .partition_point(|&c| c <= target)
            .min(self.cumulative.len() - 1);
        let start = if t == 0 { 0.0 } else { self.cumulative[t - 1] };
        let width = self.cumulative[t] - start;
        let f = if width > 0.0 {
            ((target - start) / width).clamp(0.0, 1.0 - f64::EPSILON)
        } else {
            0.0
        };
        (t, f)
    }
}

/// Square-to-triangle warp; uniform in the square gives uniform barycentrics.
fn warp(a: f64, b: f64) -> [f64; 3] {
    let r = a.sqrt();
    [1.0 - r, r * (1.0 - b), r * b]
}

fn point_on(mesh: &TriMesh, t: usize, w: [f64; 3]) -> Vec3 {
    let c = mesh.corners(t);
    c[0] * w[0] + c[1] * w[1] + c[2] * w[2]
}

pub fn sample_random(domain: Domain, count: usize, seed: u64) -> Result<SampleSet, SamplingError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (positions, triangles) = match domain {
        Domain::Volume(b) => {
            if b.is_empty() {
                return Err(SamplingError::EmptyDomain);
            }
            let e = b.extent();
            let pts = (0..count)
                .map(|_| {
                    b.min + Vec3::new(rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()).component_mul(&e)
                })
                .collect();
            (pts, None)
        }
        Domain::Surface(mesh) => {
            let table = AreaTable::new(mesh);
            if !(table.total > 0.0) {
                return Err(SamplingError::EmptyDomain);
            }
            let mut pts = Vec::with_capacity(count);
            let mut tris = Vec::with_capacity(count);
            for _ in 0..count {
                let (t, _) = table.locate(rng.random::<f64>());
                pts.push(point_on(mesh, t, warp(rng.random(), rng.random())));
                tris.push(t as u32);
            }
            (pts, Some(tris))
        }
    };
    Ok(SampleSet {
        positions,
        triangles,
        record: SampleRecord {
            method: SamplingMethod::Random,
            seed: Some(seed),
            count,
            spacing: None,
            chains: None,
        },
    })
}

/// A density over a `dim`-dimensional box that the chain walks in.
trait Target: Sync {
    fn dim(&self) -> usize;
    fn lo(&self) -> [f64; 3];
    fn hi(&self) -> [f64; 3];
    fn density(&self, x: &[f64; 3]) -> f64;
    /// Exact draw from the normalized density.
    fn draw(&self, rng: &mut ChaCha8Rng) -> [f64; 3];
}

struct VoxelTarget<'a> {
    grid: &'a VoxelGrid,
    cumulative: Vec<f64>,
}

impl Target for VoxelTarget<'_> {
    fn dim(&self) -> usize {
        3
    }
    fn lo(&self) -> [f64; 3] {
        self.grid.bounds().min.into()
    }
    fn hi(&self) -> [f64; 3] {
        self.grid.bounds().max.into()
    }
    fn density(&self, x: &[f64; 3]) -> f64 {
        self.grid.nearest(&Vec3::from(*x)).max(0.0)
    }
    fn draw(&self, rng: &mut ChaCha8Rng) -> [f64; 3] {
        let total = *self.cumulative.last().unwrap();
        let r = rng.random::<f64>() * total;
        let mut cell = self
            .cumulative
            .partition_point(|&c| c <= r)
            .min(self.cumulative.len() - 1);
        while self.grid.values[cell] <= 0.0 {
            cell -= 1;
        }
        let c = self.grid.cell_center(cell);
        let off = Vec3::new(
            rng.random::<f64>() - 0.5,
            rng.random::<f64>() - 0.5,
            rng.random::<f64>() - 0.5,
        );
        (c + off.component_mul(&self.grid.spacing)).into()
    }
}

struct SurfaceTarget<'a> {
    mesh: &'a TriMesh,
    values: &'a [f64],
    areas: AreaTable,
    max: f64,
}

impl SurfaceTarget<'_> {
    fn locate(&self, x: &[f64; 3]) -> (usize, [f64; 3]) {
        let (t, f) = self.areas.locate(x[0]);
        (t, warp(f, x[1]))
    }
}

impl Target for SurfaceTarget<'_> {
    fn dim(&self) -> usize {
        2
    }
    fn lo(&self) -> [f64; 3] {
        [0.0; 3]
    }
    fn hi(&self) -> [f64; 3] {
        [1.0, 1.0, 0.0]
    }
    fn density(&self, x: &[f64; 3]) -> f64 {
        if !(0.0..1.0).contains(&x[0]) || !(0.0..1.0).contains(&x[1]) {
            return 0.0;
        }
        let (t, w) = self.locate(x);
        let tri = self.mesh.triangles[t];
        (0..3).map(|k| self.values[tri[k] as usize].max(0.0) * w[k]).sum()
    }
    fn draw(&self, rng: &mut ChaCha8Rng) -> [f64; 3] {
        loop {
            let x = [rng.random::<f64>(), rng.random::<f64>(), 0.0];
            if rng.random::<f64>() * self.max < self.density(&x) {
                return x;
            }
        }
    }
}

fn inside(x: &[f64; 3], lo: &[f64; 3], hi: &[f64; 3], dim: usize) -> bool {
    (0..dim).all(|a| x[a] >= lo[a] && x[a] < hi[a])
}

fn run_chain(target: &dyn Target, count: usize, seed: u64, chain: u64) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain);
    let (lo, hi, dim) = (target.lo(), target.hi(), target.dim());
    let diag = (0..dim).map(|a| (hi[a] - lo[a]).powi(2)).sum::<f64>().sqrt();
    let sigma = PROPOSAL_SIGMA_FRACTION * diag;
    let mut x = target.draw(&mut rng);
    let mut fx = target.density(&x);
    let mut out = Vec::with_capacity(count);
    let mut step = 0usize;
    while out.len() < count {
        let mut y = x;
        for v in y.iter_mut().take(dim) {
            let z: f64 = rng.sample(StandardNormal);
            *v += sigma * z;
        }
        let fy = if inside(&y, &lo, &hi, dim) {
            target.density(&y)
        } else {
            0.0
        };
        let u: f64 = rng.random();
        if fy > 0.0 && u * fx < fy {
            x = y;
            fx = fy;
        }
        step += 1;
        if step > BURN_IN && (step - BURN_IN) % THINNING == 0 {
            out.push(x);
        }
    }
    out
}

/// Metropolis-Hastings with a Gaussian proposal, run as `chains` independent
/// chains concatenated in chain order.
pub fn sample_density_mh(field: ScalarField, count: usize, seed: u64) -> Result<SampleSet, SamplingError> {
    sample_density_mh_with(field, count, seed, DEFAULT_CHAINS)
}

pub fn sample_density_mh_with(
    field: ScalarField,
    count: usize,
    seed: u64,
    chains: usize,
) -> Result<SampleSet, SamplingError> {
    let chains = chains.max(1).min(count.max(1));
    let per_chain: Vec<usize> = (0..chains)
        .map(|c| count / chains + usize::from(c < count % chains))
        .collect();
    let record = SampleRecord {
        method: SamplingMethod::Density,
        seed: Some(seed),
        count,
        spacing: None,
        chains: Some(chains),
    };
    match field {
        ScalarField::Voxels(grid) => {
            let mut acc = 0.0;
            let cumulative: Vec<f64> = grid
                .values
                .iter()
                .map(|v| {
                    acc += v.max(0.0);
                    acc
                })
                .collect();
            if !(acc > 0.0) {
                return Err(SamplingError::ZeroMass);
            }
            let target = VoxelTarget { grid, cumulative };
            let raw = run_chains(&target, &per_chain, seed);
            Ok(SampleSet {
                positions: raw.into_iter().map(Vec3::from).collect(),
                triangles: None,
                record,
            })
        }
        ScalarField::Surface { mesh, values } => {
            if values.len() != mesh.vertex_count() {
                return Err(SamplingError::ValueCount {
                    values: values.len(),
                    vertices: mesh.vertex_count(),
                });
            }
            let areas = AreaTable::new(mesh);
            let mass: f64 = (0..mesh.triangles.len())
                .map(|t| {
                    mesh.face_area(t)
                        * mesh.triangles[t]
                            .iter()
                            .map(|&i| values[i as usize].max(0.0))
                            .sum::<f64>()
                })
                .sum();
            if !(mass > 0.0) || !(areas.total > 0.0) {
                return Err(SamplingError::ZeroMass);
            }
            let max = values.iter().fold(0.0f64, |m, &v| m.max(v));
            let target = SurfaceTarget {
                mesh,
                values,
                areas,
                max,
            };
            let raw = run_chains(&target, &per_chain, seed);
            let mut positions = Vec::with_capacity(raw.len());
            let mut triangles = Vec::with_capacity(raw.len());
            for x in &raw {
                let (t, w) = target.locate(x);
                positions.push(point_on(mesh, t, w));
                triangles.push(t as u32);
            }
            Ok(SampleSet {
                positions,
                triangles: Some(triangles),
                record,
            })
        }
    }
}

fn run_chains(target: &dyn Target, per_chain: &[usize], seed: u64) -> Vec<[f64; 3]> {
    let parts: Vec<Vec<[f64; 3]>> = per_chain
        .par_iter()
        .enumerate()
        .map(|(c, &n)| run_chain(target, n, seed, c as u64))
        .collect();
    parts.concat()
}
