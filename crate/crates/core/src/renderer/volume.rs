use rayon::prelude::*;

use crate::color::{lab_to_srgb_unit, ColorMap};
use crate::field::VoxelGrid;
use crate::mesh::Vec3;
use crate::scene::DataRange;

use super::camera::Camera;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolumeStyle {
    pub range: DataRange,
    /// Opacity per world unit at normalized value 1.
    pub opacity_scale: f64,
    pub step_size: f64,
}

/// Accumulated opacity at which a ray stops.
pub const EARLY_TERMINATION: f64 = 0.99;

/// Front-to-back emission-absorption along one ray, between `t0` and `t1`.
/// Each step of length `dt` takes opacity `min(1, value * opacity_scale * dt)`
/// and the colormap color of the normalized value at the step midpoint.
/// Returns premultiplied color and alpha.
pub fn march_ray(
    grid: &VoxelGrid,
    map: &ColorMap,
    style: &VolumeStyle,
    origin: &Vec3,
    dir: &Vec3,
    t0: f64,
    t1: f64,
) -> ([f64; 3], f64) {
    let mut color = [0.0; 3];
    let mut alpha = 0.0;
    let mut t = t0;
    while t < t1 && alpha < EARLY_TERMINATION {
        let dt = style.step_size.min(t1 - t);
        let p = origin + dir * (t + dt * 0.5);
        let v = style.range.normalize(grid.trilinear(&p));
        let a = (v * style.opacity_scale * dt).clamp(0.0, 1.0);
        if a > 0.0 {
            let c = lab_to_srgb_unit(map.sample(v));
            let k = (1.0 - alpha) * a;
            for i in 0..3 {
                color[i] += k * c[i];
            }
            alpha += k;
        }
        t += dt;
    }
    (color, alpha)
}

/// Ray parameters where the ray enters and leaves `grid`'s bounds.
pub fn ray_box(grid: &VoxelGrid, origin: &Vec3, dir: &Vec3) -> Option<(f64, f64)> {
    let b = grid.bounds();
    let (mut t0, mut t1) = (0.0f64, f64::INFINITY);
    for a in 0..3 {
        if dir[a].abs() < 1e-300 {
            if origin[a] < b.min[a] || origin[a] > b.max[a] {
                return None;
            }
            continue;
        }
        let inv = 1.0 / dir[a];
        let (mut n, mut f) = ((b.min[a] - origin[a]) * inv, (b.max[a] - origin[a]) * inv);
        if n > f {
            std::mem::swap(&mut n, &mut f);
        }
        t0 = t0.max(n);
        t1 = t1.min(f);
    }
    (t0 < t1).then_some((t0, t1))
}

/// Composites the volume over `image` (RGBA in `[0, 1]`, premultiplied by
/// nothing: opaque pixels have alpha 1). `depth` holds view-space depth per
/// pixel; rays stop there. Returns the volume alpha per pixel.
pub fn raymarch_volume(
    grid: &VoxelGrid,
    map: &ColorMap,
    style: &VolumeStyle,
    camera: &Camera,
    depth: &[f64],
    image: &mut [[f64; 4]],
) -> Vec<f64> {
    let basis = camera.basis().expect("validated camera");
    let width = camera.width as usize;
    let mut coverage = vec![0.0; image.len()];
    if !(style.step_size > 0.0) {
        return coverage;
    }
    image
        .par_chunks_mut(width)
        .zip(coverage.par_chunks_mut(width))
        .enumerate()
        .for_each(|(y, (row, cov))| {
            for x in 0..width {
                let dir = basis.ray(x as f64 + 0.5, y as f64 + 0.5);
                let Some((t0, mut t1)) = ray_box(grid, &camera.position, &dir) else {
                    continue;
                };
                let d = depth[y * width + x];
                if d.is_finite() {
                    t1 = t1.min(d / dir.dot(&basis.forward));
                }
                if t1 <= t0 {
                    continue;
                }
                let (c, a) = march_ray(grid, map, style, &camera.position, &dir, t0, t1);
                if a <= 0.0 {
                    continue;
                }
                let px = &mut row[x];
                for k in 0..3 {
                    px[k] = c[k] + (1.0 - a) * px[k];
                }
                px[3] = a + (1.0 - a) * px[3];
                cov[x] = a;
            }
        });
    coverage
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::LabColor;
    use crate::mesh::Aabb;

    fn homogeneous(v: f64) -> VoxelGrid {
        VoxelGrid::from_fn([4, 4, 4], &Aabb::new(Vec3::zeros(), Vec3::repeat(1.0)), |_| v)
    }

    fn gray() -> ColorMap {
        ColorMap::evenly_spaced("g", &[LabColor::BLACK, LabColor::WHITE]).unwrap()
    }

    #[test]
    fn step_size_consistency_against_the_exponential() {
        let g = homogeneous(1.0);
        let range = DataRange::new(0.0, 1.0).unwrap();
        let k = 2.0;
        let run = |h: f64| {
            let style = VolumeStyle {
                range,
                opacity_scale: k,
                step_size: h,
            };
            march_ray(&g, &gray(), &style, &Vec3::new(0.5, 0.5, -1.0), &Vec3::z(), 1.0, 2.0).1
        };
        let analytic = 1.0 - (-k * 1.0f64).exp();
        let (a, b) = (run(0.005), run(0.01));
        assert!((a - b).abs() / a < 0.02, "{a} {b}");
        assert!((a - analytic).abs() / analytic < 0.02, "{a} {analytic}");
    }

    #[test]
    fn zero_grid_leaves_the_image() {
        let g = homogeneous(0.0);
        let cam = Camera::new(Vec3::new(0.5, 0.5, 3.0), Vec3::repeat(0.5), Vec3::y(), 40.0, 16, 16);
        let mut img = vec![[0.2, 0.4, 0.6, 1.0]; 256];
        let before = img.clone();
        let style = VolumeStyle {
            range: DataRange::new(0.0, 1.0).unwrap(),
            opacity_scale: 5.0,
            step_size: 0.01,
        };
        let cov = raymarch_volume(&g, &gray(), &style, &cam, &[f64::INFINITY; 256], &mut img);
        assert_eq!(img, before);
        assert!(cov.iter().all(|c| *c == 0.0));
    }

    #[test]
    fn opaque_surface_in_front_hides_the_volume() {
        let g = homogeneous(1.0);
        let cam = Camera::new(Vec3::new(0.5, 0.5, 3.0), Vec3::repeat(0.5), Vec3::y(), 40.0, 16, 16);
        let style = VolumeStyle {
            range: DataRange::new(0.0, 1.0).unwrap(),
            opacity_scale: 5.0,
            step_size: 0.01,
        };
        // Depth 1.5 is in front of the box, which starts at depth 2.
        let mut img = vec![[0.2, 0.4, 0.6, 1.0]; 256];
        let before = img.clone();
        raymarch_volume(&g, &gray(), &style, &cam, &[1.5; 256], &mut img);
        assert_eq!(img, before);
        let cov = raymarch_volume(&g, &gray(), &style, &cam, &[f64::INFINITY; 256], &mut img);
        assert!(cov[8 * 16 + 8] > 0.9);
    }
}
