//! Regular voxel grids of scalar values.

use serde::{Deserialize, Serialize};

use crate::mesh::{Aabb, Vec3};

/// Cell-centered scalar grid. Voxel `(i, j, k)` covers
/// `origin + [i, i+1] * spacing.x` (and likewise for y, z); values are stored
/// x-fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoxelGrid {
    pub dims: [usize; 3],
    pub origin: Vec3,
    pub spacing: Vec3,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error("grid dims {dims:?} need {expected} values, got {got}")]
    ValueCount {
        dims: [usize; 3],
        expected: usize,
        got: usize,
    },
    #[error("grid spacing must be positive and finite")]
    Spacing,
    #[error("grid value {index} is not finite")]
    NonFinite { index: usize },
}

impl VoxelGrid {
    pub fn new(dims: [usize; 3], origin: Vec3, spacing: Vec3, values: Vec<f64>) -> Result<Self, GridError> {
        let g = Self {
            dims,
            origin,
            spacing,
            values,
        };
        g.validate()?;
        Ok(g)
    }

    /// Grid covering `bounds` with `dims` cells, values from `f` at cell centers.
    pub fn from_fn(dims: [usize; 3], bounds: &Aabb, f: impl Fn(Vec3) -> f64) -> Self {
        let spacing = bounds
            .extent()
            .component_div(&Vec3::new(dims[0] as f64, dims[1] as f64, dims[2] as f64));
        let mut values = Vec::with_capacity(dims[0] * dims[1] * dims[2]);
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    let c =
                        bounds.min + Vec3::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5).component_mul(&spacing);
                    values.push(f(c));
                }
            }
        }
        Self {
            dims,
            origin: bounds.min,
            spacing,
            values,
        }
    }

    pub fn validate(&self) -> Result<(), GridError> {
        let expected = self.cell_count();
        if self.values.len() != expected {
            return Err(GridError::ValueCount {
                dims: self.dims,
                expected,
                got: self.values.len(),
            });
        }
        if self.spacing.iter().any(|s| !(s.is_finite() && *s > 0.0)) || self.origin.iter().any(|o| !o.is_finite()) {
            return Err(GridError::Spacing);
        }
        if let Some(index) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite { index });
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.x * self.spacing.y * self.spacing.z
    }

    pub fn bounds(&self) -> Aabb {
        let size = Vec3::new(self.dims[0] as f64, self.dims[1] as f64, self.dims[2] as f64);
        Aabb::new(self.origin, self.origin + size.component_mul(&self.spacing))
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.index(i, j, k)]
    }

    pub fn cell_center(&self, index: usize) -> Vec3 {
        let i = index % self.dims[0];
        let j = (index / self.dims[0]) % self.dims[1];
        let k = index / (self.dims[0] * self.dims[1]);
        self.origin + Vec3::new(i as f64 + 0.5, j as f64 + 0.5, k as f64 + 0.5).component_mul(&self.spacing)
    }

    /// Index of the cell containing `p`, or `None` outside the grid.
    pub fn cell_of(&self, p: &Vec3) -> Option<usize> {
        let mut ijk = [0usize; 3];
        for a in 0..3 {
            let f = (p[a] - self.origin[a]) / self.spacing[a];
            if !(f >= 0.0 && f < self.dims[a] as f64) {
                return None;
            }
            ijk[a] = f as usize;
        }
        Some(self.index(ijk[0], ijk[1], ijk[2]))
    }

    /// Piecewise-constant value, 0 outside.
    pub fn nearest(&self, p: &Vec3) -> f64 {
        self.cell_of(p).map_or(0.0, |i| self.values[i])
    }

    /// Trilinear interpolation between cell centers, clamped at the borders.
    pub fn trilinear(&self, p: &Vec3) -> f64 {
        let mut i0 = [0usize; 3];
        let mut i1 = [0usize; 3];
        let mut f = [0.0; 3];
        for a in 0..3 {
            let x = ((p[a] - self.origin[a]) / self.spacing[a] - 0.5).clamp(0.0, (self.dims[a] - 1) as f64);
            let lo = x.floor() as usize;
            i0[a] = lo;
            i1[a] = (lo + 1).min(self.dims[a] - 1);
            f[a] = x - lo as f64;
        }
        let mut acc = 0.0;
        for corner in 0..8 {
            let pick = |a: usize| {
                if corner >> a & 1 == 1 {
                    (i1[a], f[a])
                } else {
                    (i0[a], 1.0 - f[a])
                }
            };
            let (x, wx) = pick(0);
            let (y, wy) = pick(1);
            let (z, wz) = pick(2);
            let w = wx * wy * wz;
            if w != 0.0 {
                acc += w * self.get(x, y, z);
            }
        }
        acc
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp() -> VoxelGrid {
        VoxelGrid::from_fn([4, 3, 2], &Aabb::new(Vec3::zeros(), Vec3::new(4.0, 3.0, 2.0)), |c| {
            c.x + 10.0 * c.y
        })
    }

    #[test]
    fn counts_checked() {
        assert!(matches!(
            VoxelGrid::new([4, 4, 4], Vec3::zeros(), Vec3::repeat(1.0), vec![0.0; 63]),
            Err(GridError::ValueCount {
                expected: 64,
                got: 63,
                ..
            })
        ));
        assert!(VoxelGrid::new([4, 4, 4], Vec3::zeros(), Vec3::repeat(1.0), vec![0.0; 64]).is_ok());
    }

    #[test]
    fn trilinear_reproduces_linear_fields_inside() {
        let g = ramp();
        for p in [
            Vec3::new(0.5, 0.5, 0.5),
            Vec3::new(1.7, 2.2, 1.0),
            Vec3::new(3.5, 1.25, 0.9),
        ] {
            assert!((g.trilinear(&p) - (p.x + 10.0 * p.y)).abs() < 1e-12);
        }
        // Clamped outside the outermost centers.
        assert!((g.trilinear(&Vec3::new(0.0, 0.5, 0.5)) - 5.5).abs() < 1e-12);
    }

    #[test]
    fn cells_and_nearest() {
        let g = ramp();
        assert_eq!(g.cell_of(&Vec3::new(3.99, 2.5, 1.5)), Some(g.index(3, 2, 1)));
        assert_eq!(g.cell_of(&Vec3::new(4.0, 0.0, 0.0)), None);
        assert_eq!(g.nearest(&Vec3::new(-0.1, 0.0, 0.0)), 0.0);
        assert_eq!(g.cell_center(g.index(1, 2, 0)), Vec3::new(1.5, 2.5, 0.5));
    }
}
