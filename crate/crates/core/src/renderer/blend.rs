use serde::{Deserialize, Serialize};

use crate::mesh::Vec3;

/// Binned data-driven texturing: `[0, 1]` split into `bins` equal bins with
/// linear cross-fades `blend_distance` wide centered on each bin boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BinBlend {
    pub bins: usize,
    pub blend_distance: f64,
}

/// Texture `bin_a` gets `weight_a`, `bin_b` the rest. Without blending both
/// bins are the same and `weight_a` is 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinWeights {
    pub bin_a: usize,
    pub bin_b: usize,
    pub weight_a: f64,
}

impl BinWeights {
    /// Weight of `bin`, 0 if it takes no part.
    pub fn weight_of(&self, bin: usize) -> f64 {
        let mut w = 0.0;
        if bin == self.bin_a {
            w += self.weight_a;
        }
        if bin == self.bin_b {
            w += 1.0 - self.weight_a;
        }
        w
    }
}

impl BinBlend {
    pub fn new(bins: usize, blend_distance: f64) -> Self {
        Self { bins, blend_distance }
    }

    pub fn is_valid(&self) -> bool {
        self.bins >= 1 && self.blend_distance.is_finite() && self.blend_distance >= 0.0
    }

    pub fn weights(&self, t: f64) -> BinWeights {
        compute_bin_blend(t, self)
    }
}

/// Base bin `min(floor(t N), N - 1)`. Within `d / 2` of a boundary the weight
/// ramps linearly from 1 down to 0.5 at the boundary, where the neighbor
/// takes the rest. Ramps are capped at one bin width so neighboring
/// boundaries never overlap. At an exact boundary the lower bin is listed first.
pub fn compute_bin_blend(t: f64, bb: &BinBlend) -> BinWeights {
    let n = bb.bins.max(1);
    let t = if t.is_nan() { 0.0 } else { t.clamp(0.0, 1.0) };
    let base = ((t * n as f64).floor() as usize).min(n - 1);
    let hard = BinWeights {
        bin_a: base,
        bin_b: base,
        weight_a: 1.0,
    };
    let d = bb.blend_distance.min(1.0 / n as f64);
    if n == 1 || !(d > 0.0) {
        return hard;
    }
    let lo = base as f64 / n as f64;
    let hi = (base + 1) as f64 / n as f64;
    let to_hi = hi - t;
    let to_lo = t - lo;
    let (neighbor, dist) = if base + 1 < n && (base == 0 || to_hi <= to_lo) {
        (base + 1, to_hi)
    } else {
        (base - 1, to_lo)
    };
    if dist >= d * 0.5 {
        return hard;
    }
    let weight_a = 0.5 + dist / d;
    if weight_a == 0.5 && neighbor < base {
        return BinWeights {
            bin_a: neighbor,
            bin_b: base,
            weight_a,
        };
    }
    BinWeights {
        bin_a: base,
        bin_b: neighbor,
        weight_a,
    }
}

/// Tri-planar projection weights `|n_i|^k`, normalized to sum to 1.
pub fn triplanar_weights(normal: &Vec3, blend_factor: f64) -> [f64; 3] {
    let a = normal.abs();
    let m = a.max();
    if !(m > 0.0) {
        return [1.0 / 3.0; 3];
    }
    // Dividing by the largest component first keeps large factors finite.
    let w = [
        (a.x / m).powf(blend_factor),
        (a.y / m).powf(blend_factor),
        (a.z / m).powf(blend_factor),
    ];
    let s = w[0] + w[1] + w[2];
    [w[0] / s, w[1] / s, w[2] / s]
}

/// World-space texture coordinates of the projection along `axis`:
/// x → (y, z), y → (z, x), z → (x, y).
pub fn triplanar_coords(p: &Vec3, axis: usize) -> [f64; 2] {
    match axis {
        0 => [p.y, p.z],
        1 => [p.z, p.x],
        _ => [p.x, p.y],
    }
}
