use std::sync::Arc;

use image::{GrayImage, RgbaImage};

use crate::color::{lab_to_srgb_unit, ColorMap};
use crate::mesh::{TangentFrame, Vec3};
use crate::texture::{decode_normal, NormalMap};

use super::blend::{triplanar_coords, triplanar_weights, BinBlend};

#[derive(Debug, Clone)]
pub(crate) enum BaseColor {
    /// sRGB in `[0, 1]`.
    Constant([f64; 3]),
    Map(Arc<ColorMap>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Mapping {
    Uv,
    Triplanar { factor: f64, texels_per_unit: f64 },
}

/// Ordered texture bins with optional matching normal maps and alpha masks.
#[derive(Debug, Clone)]
pub(crate) struct TextureBins {
    pub images: Vec<RgbaImage>,
    pub normals: Option<Vec<NormalMap>>,
    pub alphas: Option<Vec<GrayImage>>,
    pub blend: BinBlend,
}

#[derive(Debug, Clone)]
pub(crate) struct Material {
    pub base: BaseColor,
    pub texture: Option<TextureBins>,
    pub mapping: Mapping,
    pub alpha_mask: Option<GrayImage>,
    pub normal_map: Option<NormalMap>,
    /// Whether any alpha source exists; fragments below 0.5 are discarded.
    pub cutout: bool,
}

impl Material {
    pub fn new(base: BaseColor, texture: Option<TextureBins>, mapping: Mapping) -> Self {
        let mut m = Self {
            base,
            texture,
            mapping,
            alpha_mask: None,
            normal_map: None,
            cutout: false,
        };
        m.update_cutout();
        m
    }

    pub fn update_cutout(&mut self) {
        let tex_alpha = self
            .texture
            .as_ref()
            .is_some_and(|t| t.alphas.is_some() || t.images.iter().any(|img| img.pixels().any(|p| p.0[3] < 255)));
        self.cutout = self.alpha_mask.is_some() || tex_alpha;
    }
}

/// Triangles sharing a material, in world space.
#[derive(Debug, Clone)]
pub(crate) struct Batch {
    /// Index of the scene layer that produced the batch.
    pub layer: u16,
    pub material: Arc<Material>,
    pub positions: Vec<Vec3>,
    pub normals: Vec<Vec3>,
    /// Texture coordinates, v up.
    pub texcoords: Option<Vec<[f64; 2]>>,
    /// Normalized color variable per vertex.
    pub color_t: Option<Vec<f64>>,
    /// Normalized texture variable per vertex.
    pub texture_t: Option<Vec<f64>>,
    pub triangles: Vec<[u32; 3]>,
}

/// Interpolated attributes at a fragment.
pub(crate) struct SurfacePoint {
    pub position: Vec3,
    pub normal: Vec3,
    pub texcoord: Option<[f64; 2]>,
    pub color_t: f64,
    pub texture_t: f64,
    pub tangents: Option<(Vec3, Vec3)>,
}

fn interp3(v: &[Vec3], t: [u32; 3], b: [f64; 3]) -> Vec3 {
    v[t[0] as usize] * b[0] + v[t[1] as usize] * b[1] + v[t[2] as usize] * b[2]
}

fn interp1(v: &[f64], t: [u32; 3], b: [f64; 3]) -> f64 {
    v[t[0] as usize] * b[0] + v[t[1] as usize] * b[1] + v[t[2] as usize] * b[2]
}

impl Batch {
    pub fn surface_point(&self, tri: usize, bary: [f64; 3]) -> SurfacePoint {
        let t = self.triangles[tri];
        let position = interp3(&self.positions, t, bary);
        let face = {
            let [a, b, c] = t.map(|i| self.positions[i as usize]);
            (b - a).cross(&(c - a))
        };
        let normal = interp3(&self.normals, t, bary)
            .try_normalize(1e-300)
            .or_else(|| face.try_normalize(1e-300))
            .unwrap_or(Vec3::z());
        let texcoord = self.texcoords.as_ref().map(|tc| {
            let mut o = [0.0; 2];
            for k in 0..3 {
                o[0] += tc[t[k] as usize][0] * bary[k];
                o[1] += tc[t[k] as usize][1] * bary[k];
            }
            o
        });
        SurfacePoint {
            position,
            normal,
            texcoord,
            color_t: self.color_t.as_ref().map_or(0.0, |v| interp1(v, t, bary)),
            texture_t: self.texture_t.as_ref().map_or(0.0, |v| interp1(v, t, bary)),
            tangents: self.uv_derivatives(tri),
        }
    }

    /// `(dp/du, dp/dv)` of the triangle's texture parameterization.
    fn uv_derivatives(&self, tri: usize) -> Option<(Vec3, Vec3)> {
        let tc = self.texcoords.as_ref()?;
        let t = self.triangles[tri];
        let [p0, p1, p2] = t.map(|i| self.positions[i as usize]);
        let [q0, q1, q2] = t.map(|i| tc[i as usize]);
        let (e1, e2) = (p1 - p0, p2 - p0);
        let (du1, dv1, du2, dv2) = (q1[0] - q0[0], q1[1] - q0[1], q2[0] - q0[0], q2[1] - q0[1]);
        let det = du1 * dv2 - du2 * dv1;
        if det.abs() < 1e-300 {
            return None;
        }
        let r = 1.0 / det;
        Some(((e1 * dv2 - e2 * dv1) * r, (e2 * du1 - e1 * du2) * r))
    }

    pub fn alpha(&self, tri: usize, bary: [f64; 3]) -> f64 {
        let sp = self.surface_point(tri, bary);
        self.material.sample(&sp, false).alpha
    }
}

/// Bilinear RGBA in `[0, 1]` with wrap-around; `(s, t)` with t up.
pub(crate) fn sample_rgba(img: &RgbaImage, s: f64, t: f64) -> [f64; 4] {
    let mut out = [0.0; 4];
    bilinear(img.width(), img.height(), s, t, |x, y, w| {
        let p = img.get_pixel(x, y).0;
        for k in 0..4 {
            out[k] += w * p[k] as f64 / 255.0;
        }
    });
    out
}

pub(crate) fn sample_gray(img: &GrayImage, s: f64, t: f64) -> f64 {
    let mut out = 0.0;
    bilinear(img.width(), img.height(), s, t, |x, y, w| {
        out += w * img.get_pixel(x, y).0[0] as f64 / 255.0
    });
    out
}

fn sample_normal(map: &NormalMap, s: f64, t: f64) -> [f64; 3] {
    let mut out = [0.0; 3];
    bilinear(map.pixels.width(), map.pixels.height(), s, t, |x, y, w| {
        let n = decode_normal(map.pixels.get_pixel(x, y).0);
        for k in 0..3 {
            out[k] += w * n[k];
        }
    });
    out
}

fn bilinear(w: u32, h: u32, s: f64, t: f64, mut visit: impl FnMut(u32, u32, f64)) {
    let fx = s * w as f64 - 0.5;
    let fy = (1.0 - t) * h as f64 - 0.5;
    if !(fx.is_finite() && fy.is_finite()) {
        visit(0, 0, 1.0);
        return;
    }
    let (x0, y0) = (fx.floor(), fy.floor());
    let (ax, ay) = (fx - x0, fy - y0);
    let wrap = |v: f64, n: u32| v.rem_euclid(n as f64) as u32 % n;
    let (xa, xb) = (wrap(x0, w), wrap(x0 + 1.0, w));
    let (ya, yb) = (wrap(y0, h), wrap(y0 + 1.0, h));
    visit(xa, ya, (1.0 - ax) * (1.0 - ay));
    visit(xb, ya, ax * (1.0 - ay));
    visit(xa, yb, (1.0 - ax) * ay);
    visit(xb, yb, ax * ay);
}

pub(crate) struct MaterialSample {
    pub rgb: [f64; 3],
    pub alpha: f64,
    /// Shading normal after normal mapping, world space.
    pub normal: Vec3,
}

/// One texture lookup site: coordinates, weight and, for normal mapping,
/// the world directions of increasing s and t.
struct Site {
    st: [f64; 2],
    weight: f64,
    axes: Option<(Vec3, Vec3)>,
}

impl Material {
    fn sites(&self, sp: &SurfacePoint, size: Option<(u32, u32)>) -> Vec<Site> {
        match self.mapping {
            Mapping::Uv => sp
                .texcoord
                .map(|st| {
                    vec![Site {
                        st,
                        weight: 1.0,
                        axes: sp.tangents,
                    }]
                })
                .unwrap_or_default(),
            Mapping::Triplanar {
                factor,
                texels_per_unit,
            } => {
                let (w, h) = size.unwrap_or((1, 1));
                let weights = triplanar_weights(&sp.normal, factor);
                let unit = [Vec3::x(), Vec3::y(), Vec3::z()];
                (0..3)
                    .filter(|&a| weights[a] > 1e-6)
                    .map(|a| {
                        let [u, v] = triplanar_coords(&sp.position, a);
                        let (ea, eb) = match a {
                            0 => (unit[1], unit[2]),
                            1 => (unit[2], unit[0]),
                            _ => (unit[0], unit[1]),
                        };
                        Site {
                            st: [u * texels_per_unit / w as f64, v * texels_per_unit / h as f64],
                            weight: weights[a],
                            axes: Some((ea, eb)),
                        }
                    })
                    .collect()
            }
        }
    }

    /// Color, alpha and shading normal at a fragment. With `full == false`
    /// only alpha is meaningful.
    pub fn sample(&self, sp: &SurfacePoint, full: bool) -> MaterialSample {
        let mut rgb = if full {
            match &self.base {
                BaseColor::Constant(c) => *c,
                BaseColor::Map(m) => lab_to_srgb_unit(m.sample(sp.color_t.clamp(0.0, 1.0))),
            }
        } else {
            [1.0; 3]
        };
        let mut alpha = 1.0;
        let mut normal = sp.normal;
        let size = self.texture.as_ref().map(|t| t.images[0].dimensions());
        let sites = if self.texture.is_some() || self.alpha_mask.is_some() || (full && self.normal_map.is_some()) {
            self.sites(sp, size)
        } else {
            Vec::new()
        };

        if let Some(tex) = &self.texture {
            if !sites.is_empty() {
                let bw = tex.blend.weights(sp.texture_t);
                let bins: [(usize, f64); 2] = [(bw.bin_a, bw.weight_a), (bw.bin_b, 1.0 - bw.weight_a)];
                let mut trgb = [0.0; 3];
                let mut ta = 0.0;
                let mut nsum = Vec3::zeros();
                for &(bin, wb) in bins.iter().filter(|b| b.1 > 0.0) {
                    for site in &sites {
                        let w = wb * site.weight;
                        let c = sample_rgba(&tex.images[bin], site.st[0], site.st[1]);
                        let a = c[3]
                            * tex
                                .alphas
                                .as_ref()
                                .map_or(1.0, |m| sample_gray(&m[bin], site.st[0], site.st[1]));
                        ta += w * a;
                        for k in 0..3 {
                            trgb[k] += w * c[k];
                        }
                        if full {
                            if let (Some(nm), Some(axes)) = (&tex.normals, site.axes) {
                                nsum += perturb(sp.normal, axes, sample_normal(&nm[bin], site.st[0], site.st[1])) * w;
                            }
                        }
                    }
                }
                alpha *= ta;
                for k in 0..3 {
                    rgb[k] *= trgb[k];
                }
                if let Some(n) = nsum.try_normalize(1e-12) {
                    normal = n;
                }
            }
        }
        if let Some(mask) = &self.alpha_mask {
            let (mw, mh) = mask.dimensions();
            let a: f64 = match self.mapping {
                Mapping::Uv => sites
                    .iter()
                    .map(|s| s.weight * sample_gray(mask, s.st[0], s.st[1]))
                    .sum(),
                Mapping::Triplanar { .. } => {
                    // Sites are scaled for the texture; rescale to the mask's own size.
                    let (tw, th) = size.unwrap_or((1, 1));
                    sites
                        .iter()
                        .map(|s| {
                            s.weight
                                * sample_gray(mask, s.st[0] * tw as f64 / mw as f64, s.st[1] * th as f64 / mh as f64)
                        })
                        .sum()
                }
            };
            if !sites.is_empty() {
                alpha *= a;
            }
        }
        if full {
            if let Some(nm) = &self.normal_map {
                let (nw, nh) = nm.pixels.dimensions();
                let (tw, th) = size.unwrap_or((1, 1));
                let mut nsum = Vec3::zeros();
                for s in &sites {
                    let Some(axes) = s.axes else { continue };
                    let st = match self.mapping {
                        Mapping::Uv => s.st,
                        Mapping::Triplanar { .. } => [s.st[0] * tw as f64 / nw as f64, s.st[1] * th as f64 / nh as f64],
                    };
                    nsum += perturb(normal, axes, sample_normal(nm, st[0], st[1])) * s.weight;
                }
                if let Some(n) = nsum.try_normalize(1e-12) {
                    normal = n;
                }
            }
        }
        MaterialSample { rgb, alpha, normal }
    }
}

fn perturb(normal: Vec3, (ds, dt): (Vec3, Vec3), tangent_space: [f64; 3]) -> Vec3 {
    let frame = TangentFrame::new(normal, ds, dt);
    frame.to_world(tangent_space).try_normalize(1e-12).unwrap_or(normal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::{Luma, Rgba};

    #[test]
    fn bilinear_wraps_and_hits_texel_centers() {
        let img = RgbaImage::from_fn(4, 2, |x, y| Rgba([(x * 60) as u8, (y * 200) as u8, 0, 255]));
        // Texel (1, 0) center: s = 1.5 / 4, row 0 is the top so t = 1 - 0.5 / 2.
        let c = sample_rgba(&img, 1.5 / 4.0, 0.75);
        assert!((c[0] - 60.0 / 255.0).abs() < 1e-12 && c[1].abs() < 1e-12);
        // Halfway between the last and first column wraps around.
        let c = sample_rgba(&img, 1.0, 0.75);
        assert!((c[0] - 90.0 / 255.0).abs() < 1e-12);
        let g = GrayImage::from_pixel(3, 3, Luma([51]));
        assert!((sample_gray(&g, -7.3, 12.1) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn flat_normal_map_keeps_the_normal() {
        let m = Material {
            normal_map: Some(NormalMap::flat(8, 8)),
            ..Material::new(BaseColor::Constant([1.0; 3]), None, Mapping::Uv)
        };
        let n = Vec3::new(0.0, 0.6, 0.8);
        let sp = SurfacePoint {
            position: Vec3::zeros(),
            normal: n,
            texcoord: Some([0.3, 0.3]),
            color_t: 0.0,
            texture_t: 0.0,
            tangents: Some((Vec3::x(), Vec3::new(0.0, 0.8, -0.6))),
        };
        let s = m.sample(&sp, true);
        assert!((s.normal - n).norm() < 0.01);
    }
}
