use nalgebra::{Matrix3, Quaternion, Rotation3, UnitQuaternion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::mesh::Vec3;
use crate::scene::OrientationMode;

/// LOD switch points on the projected bounding-sphere diameter, in pixels.
pub const LOD_THRESHOLDS_PX: [f64; 2] = [64.0, 16.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlyphPlacement {
    pub mode: OrientationMode,
    pub up: Vec3,
    /// Glyph size as a percentage of `data_extent`.
    pub size_percent: f64,
    /// Largest bounding-box extent of the data object.
    pub data_extent: f64,
    /// Axial radius factor when no size values are given.
    pub axial_radius: f64,
    /// Axial radius factors at normalized size 0 and 1.
    pub radius_range: [f64; 2],
    pub seed: u64,
}

/// One glyph: the unit canonical glyph is scaled by `scale` (x, y axial,
/// z along forward), rotated, then moved to `position`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlyphInstance {
    pub position: Vec3,
    pub rotation: UnitQuaternion<f64>,
    pub scale: Vec3,
}

impl GlyphInstance {
    pub fn transform_point(&self, p: &Vec3) -> Vec3 {
        self.position + self.rotation * p.component_mul(&self.scale)
    }

    pub fn transform_normal(&self, n: &Vec3) -> Vec3 {
        (self.rotation * n.component_div(&self.scale))
            .try_normalize(1e-300)
            .unwrap_or(*n)
    }
}

/// Rotation taking +Z to `dir` and +Y as close to `up` as possible.
/// `None` for a zero-length direction.
pub fn align_rotation(dir: &Vec3, up: &Vec3) -> Option<UnitQuaternion<f64>> {
    let z = dir.try_normalize(1e-12)?;
    let y = match (up - z * up.dot(&z)).try_normalize(1e-9) {
        Some(y) => y,
        None => {
            // Direction parallel to up: roll is free, take the least aligned world axis.
            let axis = [Vec3::x(), Vec3::y(), Vec3::z()]
                .into_iter()
                .min_by(|a, b| a.dot(&z).abs().total_cmp(&b.dot(&z).abs()))
                .unwrap();
            (axis - z * axis.dot(&z)).normalize()
        }
    };
    let x = y.cross(&z);
    let m = Matrix3::from_columns(&[x, y, z]);
    Some(UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(
        m,
    )))
}

/// Uniform random rotation (Shoemake).
fn random_rotation(rng: &mut ChaCha8Rng) -> UnitQuaternion<f64> {
    let (u1, u2, u3): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let (t2, t3) = (std::f64::consts::TAU * u2, std::f64::consts::TAU * u3);
    UnitQuaternion::from_quaternion(Quaternion::new(b * t3.cos(), a * t2.sin(), a * t2.cos(), b * t3.sin()))
}

/// Per-instance transforms. `vectors` drives vector alignment (zero vectors
/// fall back to axis alignment); `sizes` are normalized values mapped
/// linearly onto the axial radius range.
pub fn place_glyphs(
    params: &GlyphPlacement,
    positions: &[Vec3],
    vectors: Option<&[Vec3]>,
    sizes: Option<&[f64]>,
) -> Vec<GlyphInstance> {
    let s = params.size_percent / 100.0 * params.data_extent;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    positions
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let rotation = match params.mode {
                OrientationMode::Axis => UnitQuaternion::identity(),
                OrientationMode::Random => random_rotation(&mut rng),
                OrientationMode::Vector => vectors
                    .and_then(|v| align_rotation(&v[i], &params.up))
                    .unwrap_or_else(UnitQuaternion::identity),
            };
            let radius = match sizes {
                Some(t) => {
                    let [lo, hi] = params.radius_range;
                    lo + (hi - lo) * t[i].clamp(0.0, 1.0)
                }
                None => params.axial_radius,
            };
            GlyphInstance {
                position: *p,
                rotation,
                scale: Vec3::new(s * radius, s * radius, s),
            }
        })
        .collect()
}

/// LOD index from the projected diameter of the instance's bounding sphere.
pub fn select_lod(diameter_px: f64) -> usize {
    if diameter_px > LOD_THRESHOLDS_PX[0] {
        0
    } else if diameter_px > LOD_THRESHOLDS_PX[1] {
        1
    } else {
        2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(mode: OrientationMode) -> GlyphPlacement {
        GlyphPlacement {
            mode,
            up: Vec3::y(),
            size_percent: 1.0,
            data_extent: 200.0,
            axial_radius: 1.0,
            radius_range: [0.25, 1.0],
            seed: 3,
        }
    }

    #[test]
    fn plus_z_is_identity() {
        let r = align_rotation(&Vec3::z(), &Vec3::y()).unwrap();
        assert!(r.angle() < 1e-12);
    }

    #[test]
    fn minus_z_flips_about_y() {
        let r = align_rotation(&-Vec3::z(), &Vec3::y()).unwrap();
        assert!((r * Vec3::z() + Vec3::z()).norm() < 1e-12);
        // +Y stays up: the best any rotation taking +Z to -Z can do.
        assert!(((r * Vec3::y()).dot(&Vec3::y()) - 1.0).abs() < 1e-12);
        assert!((r.angle() - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn roll_maximizes_up_alignment() {
        let up = Vec3::y();
        for d in [
            Vec3::new(1.0, 0.3, -0.2),
            Vec3::new(-0.4, -0.9, 0.1),
            Vec3::new(0.0, 0.2, 1.0),
        ] {
            let r = align_rotation(&d, &up).unwrap();
            assert!((r * Vec3::z() - d.normalize()).norm() < 1e-12);
            let best = (r * Vec3::y()).dot(&up);
            // Any other roll about d does no better.
            for k in 1..36 {
                let roll = UnitQuaternion::from_axis_angle(&nalgebra::Unit::new_normalize(d), k as f64 * 0.17);
                assert!((roll * r * Vec3::y()).dot(&up) <= best + 1e-12);
            }
        }
        assert!(align_rotation(&Vec3::zeros(), &up).is_none());
        let vertical = align_rotation(&Vec3::y(), &up).unwrap();
        assert!((vertical * Vec3::z() - Vec3::y()).norm() < 1e-12);
    }

    #[test]
    fn size_and_fallbacks() {
        let pts = [Vec3::zeros(), Vec3::x()];
        let inst = place_glyphs(
            &params(OrientationMode::Vector),
            &pts,
            Some(&[Vec3::zeros(), Vec3::x()]),
            None,
        );
        assert_eq!(inst[0].scale, Vec3::new(2.0, 2.0, 2.0));
        assert!(inst[0].rotation.angle() < 1e-12);
        assert!((inst[1].rotation * Vec3::z() - Vec3::x()).norm() < 1e-12);
        let sized = place_glyphs(&params(OrientationMode::Axis), &pts, None, Some(&[0.0, 1.0]));
        assert_eq!(sized[0].scale, Vec3::new(0.5, 0.5, 2.0));
        assert_eq!(sized[1].scale, Vec3::new(2.0, 2.0, 2.0));
    }

    #[test]
    fn random_mode_is_seeded() {
        let pts = vec![Vec3::zeros(); 50];
        let a = place_glyphs(&params(OrientationMode::Random), &pts, None, None);
        let b = place_glyphs(&params(OrientationMode::Random), &pts, None, None);
        assert_eq!(a, b);
        let mean: Vec3 = a.iter().map(|g| g.rotation * Vec3::z()).sum::<Vec3>() / 50.0;
        assert!(mean.norm() < 0.4);
    }

    #[test]
    fn lod_thresholds() {
        assert_eq!(select_lod(100.0), 0);
        assert_eq!(select_lod(64.0), 1);
        assert_eq!(select_lod(17.0), 1);
        assert_eq!(select_lod(16.0), 2);
    }
}
