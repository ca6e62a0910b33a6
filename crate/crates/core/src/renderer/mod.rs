//! Deterministic offscreen renderer: glyph instancing, ribbon and tube
//! extrusion, binned and tri-planar texturing, and a ray-marched volume pass.
//!
//! Opaque layers are rasterized in scene order against one depth buffer,
//! shaded with a directional light plus ambient, and the volume layer is
//! composited last, front to back, stopping at the depth buffer.

mod blend;
mod camera;
mod extrude;
mod glyphs;
mod material;
mod raster;
mod volume;

use std::path::Path;
use std::sync::Arc;

use image::RgbaImage;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assetlib::Asset;
use crate::mesh::{Aabb, GlyphAsset, TriMesh, Vec3};
use crate::sampling::{
    sample_density_mh, sample_random, sample_regular, Domain, SamplingError, SamplingMethod, ScalarField,
};
use crate::scene::{
    normalize, parse_rgba, validate_scene, Diagnostic, Geometry, LayerType, LineStyle, Scene, VisLayer,
};

pub use blend::{compute_bin_blend, triplanar_coords, triplanar_weights, BinBlend, BinWeights};
pub use camera::{Camera, CameraBasis};
pub use extrude::{extrude_line, ExtrudeOptions, Extrusion};
pub use glyphs::{align_rotation, place_glyphs, select_lod, GlyphInstance, GlyphPlacement, LOD_THRESHOLDS_PX};
pub use volume::{march_ray, ray_box, raymarch_volume, VolumeStyle, EARLY_TERMINATION};

use material::{BaseColor, Batch, Mapping, Material, TextureBins};

pub const AMBIENT: f64 = 0.3;
pub const DIFFUSE: f64 = 0.7;

#[derive(Debug, thiserror::Error)]
pub enum RenderError {
    #[error("scene is not renderable: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
    #[error("camera: {0}")]
    Camera(String),
    #[error("{0}")]
    Geometry(String),
    #[error("glyph sampling: {0}")]
    Sampling(#[from] SamplingError),
    #[error("worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RenderOptions {
    /// Worker threads; `None` uses the global pool. Output does not depend on it.
    pub threads: Option<usize>,
}

pub struct RenderOutput {
    pub image: RgbaImage,
    /// View-space depth per pixel, infinite on background.
    pub depth: Vec<f32>,
    /// Per pixel, 1 + index of the layer contributing most to the final
    /// color, or 0 for bare background. The volume claims a pixel over
    /// background once it adds at least 1/255 opacity, and over geometry
    /// once its opacity exceeds one half.
    pub ids: Vec<u16>,
    /// Pixels each layer covers; for the volume layer, pixels where it adds
    /// at least 1/255 opacity.
    pub layer_pixels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DepthHeader {
    pub width: u32,
    pub height: u32,
    pub value_type: String,
    pub byte_order: String,
    /// Value stored where nothing was drawn.
    pub background: String,
    pub data: String,
}

impl RenderOutput {
    pub fn encode_png(&self) -> Vec<u8> {
        let mut out = std::io::Cursor::new(Vec::new());
        image::DynamicImage::ImageRgba8(self.image.clone())
            .write_to(&mut out, image::ImageFormat::Png)
            .expect("png encoding into memory");
        out.into_inner()
    }

    /// Writes `<stem>.raw` (little-endian f32) and `<stem>.json` next to each other.
    pub fn save_depth(&self, raw_path: &Path) -> std::io::Result<()> {
        let bytes: Vec<u8> = self.depth.iter().flat_map(|d| d.to_le_bytes()).collect();
        std::fs::write(raw_path, bytes)?;
        let header = DepthHeader {
            width: self.image.width(),
            height: self.image.height(),
            value_type: "float32".into(),
            byte_order: "little".into(),
            background: "inf".into(),
            data: raw_path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
        };
        std::fs::write(
            raw_path.with_extension("json"),
            serde_json::to_vec_pretty(&header).expect("header serializes"),
        )
    }
}

pub fn render_scene(scene: &Scene, camera: &Camera, seed: u64) -> Result<RenderOutput, RenderError> {
    render_scene_with(scene, camera, seed, &RenderOptions::default())
}

pub fn render_scene_with(
    scene: &Scene,
    camera: &Camera,
    seed: u64,
    options: &RenderOptions,
) -> Result<RenderOutput, RenderError> {
    let diags = validate_scene(scene);
    if !diags.is_empty() {
        return Err(RenderError::Invalid(diags));
    }
    camera.validate().map_err(RenderError::Camera)?;
    match options.threads {
        None => render_inner(scene, camera, seed),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| RenderError::Pool(e.to_string()))?
            .install(|| render_inner(scene, camera, seed)),
    }
}

/// Seed for layer `index`'s random choices.
fn layer_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn render_inner(scene: &Scene, camera: &Camera, seed: u64) -> Result<RenderOutput, RenderError> {
    let basis = camera.basis().map_err(RenderError::Camera)?;
    let (w, h) = (camera.width as usize, camera.height as usize);
    let bounds = scene.bounds();
    let scale = if bounds.is_empty() {
        1.0
    } else {
        bounds.diagonal().max(1e-9)
    };
    let near = (scale * 1e-5)
        .max((camera.position - bounds.center()).norm() * 1e-6)
        .max(1e-12);

    let mut batches = Vec::new();
    for (i, layer) in scene.layers().iter().enumerate() {
        let ctx = LayerCtx {
            scene,
            layer,
            index: i as u16,
            seed: layer_seed(seed, i),
            camera,
            basis: &basis,
        };
        match layer.layer_type {
            LayerType::Glyph => batches.extend(glyph_batches(&ctx)?),
            LayerType::Line => batches.extend(line_batch(&ctx)?),
            LayerType::Surface => batches.extend(surface_batch(&ctx)?),
            LayerType::Volume => {}
        }
    }

    let raster = raster::rasterize(&batches, &basis, &camera.position, w, h, near);
    let bg = parse_rgba_unit(scene.background());
    let light = (-basis.forward + basis.up * 0.6 - basis.right * 0.4).normalize();
    let mut color: Vec<[f64; 4]> = raster
        .frags
        .par_iter()
        .map(|f| match f {
            None => bg,
            Some(f) => {
                let b = &batches[f.batch as usize];
                let sp = b.surface_point(f.tri as usize, f.bary);
                let s = b.material.sample(&sp, true);
                let mut n = s.normal;
                if n.dot(&(camera.position - sp.position)) < 0.0 {
                    n = -n;
                }
                let k = AMBIENT + DIFFUSE * n.dot(&light).max(0.0);
                [s.rgb[0] * k, s.rgb[1] * k, s.rgb[2] * k, 1.0]
            }
        })
        .collect();

    let mut layer_pixels = vec![0usize; scene.layers().len()];
    let mut ids: Vec<u16> = raster
        .frags
        .iter()
        .map(|f| f.map_or(0, |f| batches[f.batch as usize].layer + 1))
        .collect();
    for &id in &ids {
        if id > 0 {
            layer_pixels[id as usize - 1] += 1;
        }
    }

    if let Some((vi, layer)) = scene
        .layers()
        .iter()
        .enumerate()
        .find(|(_, l)| l.layer_type == LayerType::Volume)
    {
        let data = scene.data(&layer.data).expect("validated data");
        let var = layer.variables.color.as_deref().expect("validated color variable");
        let grid = data.voxel_field(var).expect("validated voxel data");
        let map = colormap(scene, layer).expect("validated colormap");
        let range = scene.range(layer, var).expect("validated variable");
        let min_spacing = grid.spacing.min();
        let style = VolumeStyle {
            range,
            opacity_scale: layer.style.opacity_scale,
            step_size: layer.style.step_size.unwrap_or(min_spacing * 0.5),
        };
        let coverage = raymarch_volume(&grid, &map, &style, camera, &raster.depth, &mut color);
        layer_pixels[vi] = coverage.iter().filter(|a| **a >= 1.0 / 255.0).count();
        let vid = vi as u16 + 1;
        for (id, &a) in ids.iter_mut().zip(&coverage) {
            if (*id == 0 && a >= 1.0 / 255.0) || a > 0.5 {
                *id = vid;
            }
        }
    }

    let mut image = RgbaImage::new(camera.width, camera.height);
    for (px, c) in image.pixels_mut().zip(&color) {
        px.0 = c.map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8);
    }
    Ok(RenderOutput {
        image,
        depth: raster.depth.iter().map(|d| *d as f32).collect(),
        ids,
        layer_pixels,
    })
}

fn parse_rgba_unit(c: [u8; 4]) -> [f64; 4] {
    c.map(|v| v as f64 / 255.0)
}

struct LayerCtx<'a> {
    scene: &'a Scene,
    layer: &'a VisLayer,
    index: u16,
    seed: u64,
    camera: &'a Camera,
    basis: &'a CameraBasis,
}

fn colormap(scene: &Scene, layer: &VisLayer) -> Option<Arc<crate::color::ColorMap>> {
    match scene.asset(layer.assets.colormap.as_ref()?)?.as_ref() {
        Asset::ColorMap(m) => Some(Arc::new(m.clone())),
        _ => None,
    }
}

fn base_color(ctx: &LayerCtx) -> BaseColor {
    match (&ctx.layer.variables.color, colormap(ctx.scene, ctx.layer)) {
        (Some(_), Some(m)) => BaseColor::Map(m),
        _ => {
            let [r, g, b, _] = parse_rgba(&ctx.layer.style.color).unwrap_or([128, 128, 128, 255]);
            BaseColor::Constant([r as f64 / 255.0, g as f64 / 255.0, b as f64 / 255.0])
        }
    }
}

fn texture_bins(ctx: &LayerCtx) -> Option<TextureBins> {
    let set = ctx
        .scene
        .asset(ctx.layer.assets.texture_set.as_ref()?)?
        .as_texture_set()?;
    Some(TextureBins {
        images: set.images.iter().map(|t| t.pixels.clone()).collect(),
        normals: set.normal_maps.clone(),
        alphas: set.alpha_masks.clone(),
        blend: BinBlend::new(set.len(), ctx.layer.style.blend_distance),
    })
}

fn material(ctx: &LayerCtx, mapping: Mapping, textured: bool, baked: Option<&crate::texture::NormalMap>) -> Material {
    let mut m = Material::new(
        base_color(ctx),
        if textured { texture_bins(ctx) } else { None },
        mapping,
    );
    let a = &ctx.layer.assets;
    m.alpha_mask = a
        .alpha_mask
        .as_ref()
        .and_then(|id| match ctx.scene.asset(id)?.as_ref() {
            Asset::AlphaMask(g) => Some(g.clone()),
            _ => None,
        });
    m.normal_map = baked.cloned().or_else(|| {
        a.normal_map
            .as_ref()
            .and_then(|id| match ctx.scene.asset(id)?.as_ref() {
                Asset::NormalMap(n) => Some(n.clone()),
                _ => None,
            })
    });
    m.update_cutout();
    m
}

/// Normalized values of a bound scalar variable, one per element.
fn normalized_values(ctx: &LayerCtx, var: &Option<String>) -> Option<Vec<f64>> {
    let name = var.as_ref()?;
    let data = ctx.scene.data(&ctx.layer.data)?;
    let range = ctx.scene.range(ctx.layer, name)?;
    Some(data.scalars.get(name)?.iter().map(|v| normalize(*v, &range)).collect())
}

fn glyph_batches(ctx: &LayerCtx) -> Result<Vec<Batch>, RenderError> {
    let layer = ctx.layer;
    let data = ctx.scene.data(&layer.data).expect("validated data");
    let glyph = match ctx
        .scene
        .asset(layer.assets.glyph.as_ref().expect("validated glyph"))
        .map(|a| a.as_ref())
    {
        Some(Asset::Glyph(g)) => g,
        _ => unreachable!("validated glyph asset"),
    };
    let v = &layer.variables;

    // Positions plus the per-glyph values of each bound variable.
    let (positions, color_t, texture_t, size_t, vectors) = match &data.geometry {
        Geometry::Points(p) => (
            p.clone(),
            normalized_values(ctx, &v.color),
            normalized_values(ctx, &v.texture),
            normalized_values(ctx, &v.size),
            v.orientation.as_ref().and_then(|n| data.vectors.get(n).cloned()),
        ),
        geometry => {
            let sp = layer.style.sampling.as_ref().expect("validated sampling");
            let samples = match (sp.method, geometry) {
                (SamplingMethod::Regular, Geometry::Mesh(m)) => {
                    sample_regular(Domain::Surface(m), sp.spacing.unwrap())?
                }
                (SamplingMethod::Regular, _) => sample_regular(Domain::Volume(data.bounds()), sp.spacing.unwrap())?,
                (SamplingMethod::Random, Geometry::Mesh(m)) => {
                    sample_random(Domain::Surface(m), sp.count.unwrap(), ctx.seed)?
                }
                (SamplingMethod::Random, _) => {
                    sample_random(Domain::Volume(data.bounds()), sp.count.unwrap(), ctx.seed)?
                }
                (SamplingMethod::Density, Geometry::Mesh(m)) => {
                    let values = &data.scalars[sp.density.as_ref().unwrap()];
                    sample_density_mh(ScalarField::Surface { mesh: m, values }, sp.count.unwrap(), ctx.seed)?
                }
                (SamplingMethod::Density, _) => {
                    let grid = data
                        .voxel_field(sp.density.as_ref().unwrap())
                        .expect("validated voxel data");
                    sample_density_mh(ScalarField::Voxels(&grid), sp.count.unwrap(), ctx.seed)?
                }
            };
            let tri = |i: usize| samples.triangles.as_ref().map(|t| t[i]);
            let scalar = |var: &Option<String>| {
                let name = var.as_ref()?;
                let range = ctx.scene.range(layer, name)?;
                Some(
                    samples
                        .positions
                        .iter()
                        .enumerate()
                        .map(|(i, p)| normalize(data.scalar_at(name, p, tri(i)).unwrap_or(range.min), &range))
                        .collect::<Vec<f64>>(),
                )
            };
            let vectors = v.orientation.as_ref().map(|name| {
                samples
                    .positions
                    .iter()
                    .enumerate()
                    .map(|(i, p)| data.vector_at(name, p, tri(i)).unwrap_or_else(Vec3::zeros))
                    .collect::<Vec<Vec3>>()
            });
            (
                samples.positions.clone(),
                scalar(&v.color),
                scalar(&v.texture),
                scalar(&v.size),
                vectors,
            )
        }
    };

    let params = GlyphPlacement {
        mode: layer.style.orientation_mode,
        up: Vec3::from(layer.style.up),
        size_percent: layer.style.glyph_size_percent,
        data_extent: data.bounds().largest_extent(),
        axial_radius: layer.style.axial_radius,
        radius_range: layer.style.axial_radius_range,
        seed: ctx.seed,
    };
    let instances = place_glyphs(&params, &positions, vectors.as_deref(), size_t.as_deref());

    // Unit glyph: canonical bounds centered at the origin, largest extent 1.
    let gb = glyph.mesh.bounds();
    let (center, extent) = (gb.center(), gb.largest_extent().max(1e-12));
    let unit_radius = glyph
        .mesh
        .positions
        .iter()
        .map(|p| ((p - center) / extent).norm())
        .fold(0.0, f64::max);
    let levels = glyph.lods.len().max(1);
    let mut by_level: Vec<Vec<usize>> = vec![Vec::new(); levels];
    for (i, inst) in instances.iter().enumerate() {
        let z = ctx.basis.to_view(&ctx.camera.position, &inst.position).z;
        let r = unit_radius * inst.scale.max();
        let diameter = if z > 0.0 { 2.0 * r * ctx.basis.focal / z } else { 0.0 };
        by_level[select_lod(diameter).min(levels - 1)].push(i);
    }

    let mut out = Vec::new();
    for (level, members) in by_level.iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        let (mesh, baked) = glyph_level(glyph, level);
        let normals = match &mesh.normals {
            Some(n) => n.clone(),
            None => mesh.compute_vertex_normals(),
        };
        let textured = mesh.uvs.is_some();
        let mat = Arc::new(material(ctx, Mapping::Uv, textured, baked));
        let nv = mesh.vertex_count();
        let mut b = Batch {
            layer: ctx.index,
            material: mat,
            positions: Vec::with_capacity(nv * members.len()),
            normals: Vec::with_capacity(nv * members.len()),
            texcoords: mesh.uvs.as_ref().map(|_| Vec::with_capacity(nv * members.len())),
            color_t: color_t.as_ref().map(|_| Vec::with_capacity(nv * members.len())),
            texture_t: texture_t.as_ref().map(|_| Vec::with_capacity(nv * members.len())),
            triangles: Vec::with_capacity(mesh.triangle_count() * members.len()),
        };
        for &i in members {
            let inst = &instances[i];
            let base = b.positions.len() as u32;
            for (p, n) in mesh.positions.iter().zip(&normals) {
                b.positions.push(inst.transform_point(&((p - center) / extent)));
                b.normals.push(inst.transform_normal(n));
            }
            if let (Some(tc), Some(uvs)) = (&mut b.texcoords, &mesh.uvs) {
                tc.extend(uvs.iter().map(|q| [q.x, q.y]));
            }
            if let (Some(out), Some(vals)) = (&mut b.color_t, &color_t) {
                out.extend(std::iter::repeat_n(vals[i], nv));
            }
            if let (Some(out), Some(vals)) = (&mut b.texture_t, &texture_t) {
                out.extend(std::iter::repeat_n(vals[i], nv));
            }
            b.triangles.extend(mesh.triangles.iter().map(|t| t.map(|k| k + base)));
        }
        out.push(b);
    }
    Ok(out)
}

fn glyph_level(glyph: &GlyphAsset, level: usize) -> (&TriMesh, Option<&crate::texture::NormalMap>) {
    glyph.level(level)
}

fn lerp_param(values: &[f64], p: f64) -> f64 {
    let i = (p.floor() as usize).min(values.len() - 1);
    let f = p - i as f64;
    if f > 0.0 && i + 1 < values.len() {
        values[i] * (1.0 - f) + values[i + 1] * f
    } else {
        values[i]
    }
}

fn line_batch(ctx: &LayerCtx) -> Result<Option<Batch>, RenderError> {
    let layer = ctx.layer;
    let style = &layer.style;
    let data = ctx.scene.data(&layer.data).expect("validated data");
    let Geometry::Lines(lines) = &data.geometry else {
        unreachable!("validated line data")
    };
    let raw = |var: &Option<String>| {
        var.as_ref()
            .and_then(|n| Some((data.scalars.get(n)?, ctx.scene.range(layer, n)?)))
    };
    let color = raw(&layer.variables.color);
    let texture = raw(&layer.variables.texture);
    let size = raw(&layer.variables.size);

    let bins = texture_bins(ctx);
    let size_param = match style.line_style {
        LineStyle::Ribbon => style.ribbon_width,
        LineStyle::Tube => style.tube_radius,
    };
    let across = match style.line_style {
        LineStyle::Ribbon => style.ribbon_width,
        LineStyle::Tube => std::f64::consts::TAU * style.tube_radius,
    };
    // Line textures run along the line: image rows follow u.
    let repeat = style.repeat_length.unwrap_or_else(|| match &bins {
        Some(b) => across * b.images[0].height() as f64 / b.images[0].width() as f64,
        None => 1.0,
    });
    let opts = ExtrudeOptions {
        style: style.line_style,
        size: size_param,
        sides: style.tube_sides,
        rotational_offset: style.rotational_offset,
        sampling: style.line_sampling,
        step: style.step,
    };
    let mut b = Batch {
        layer: ctx.index,
        material: Arc::new(material(ctx, Mapping::Uv, true, None)),
        positions: Vec::new(),
        normals: Vec::new(),
        texcoords: Some(Vec::new()),
        color_t: color.map(|_| Vec::new()),
        texture_t: texture.map(|_| Vec::new()),
        triangles: Vec::new(),
    };
    let mut offset = 0;
    for line in lines {
        let n = line.points.len();
        let scales: Option<Vec<f64>> = slice(size, offset, n).map(|(vals, r)| {
            let [lo, hi] = style.axial_radius_range;
            vals.iter().map(|x| lo + (hi - lo) * normalize(*x, &r)).collect()
        });
        let e = extrude_line(line, &opts, scales.as_deref())?;
        let base = b.positions.len() as u32;
        b.positions.extend(&e.mesh.positions);
        b.normals.extend(e.mesh.normals.as_ref().expect("extrusion normals"));
        let uvs = e.mesh.uvs.as_ref().expect("extrusion uvs");
        b.texcoords
            .as_mut()
            .unwrap()
            .extend(uvs.iter().map(|q| [q.y, 1.0 - q.x / repeat]));
        for (dst, src) in [
            (&mut b.color_t, slice(color, offset, n)),
            (&mut b.texture_t, slice(texture, offset, n)),
        ] {
            if let (Some(dst), Some((vals, r))) = (dst, src) {
                dst.extend(e.params.iter().map(|p| normalize(lerp_param(vals, *p), &r)));
            }
        }
        b.triangles.extend(e.mesh.triangles.iter().map(|t| t.map(|k| k + base)));
        offset += n;
    }
    Ok((!b.triangles.is_empty()).then_some(b))
}

type Values<'a> = Option<(&'a Vec<f64>, crate::scene::DataRange)>;

fn slice(v: Values<'_>, offset: usize, n: usize) -> Option<(&[f64], crate::scene::DataRange)> {
    v.map(|(vals, r)| (&vals[offset..offset + n], r))
}

fn surface_batch(ctx: &LayerCtx) -> Result<Option<Batch>, RenderError> {
    let layer = ctx.layer;
    let data = ctx.scene.data(&layer.data).expect("validated data");
    let Geometry::Mesh(mesh) = &data.geometry else {
        unreachable!("validated mesh data")
    };
    if mesh.triangles.is_empty() {
        return Ok(None);
    }
    let bins = texture_bins(ctx);
    let extent = mesh.bounds().largest_extent().max(1e-12);
    let texels_per_unit = layer
        .style
        .texels_per_unit
        .unwrap_or_else(|| bins.as_ref().map_or(1.0, |b| b.images[0].width() as f64) / (extent / 4.0));
    let mapping = Mapping::Triplanar {
        factor: layer.style.projection_blend_factor,
        texels_per_unit,
    };
    let normals = match &mesh.normals {
        Some(n) => n.clone(),
        None => mesh.compute_vertex_normals(),
    };
    Ok(Some(Batch {
        layer: ctx.index,
        material: Arc::new(material(ctx, mapping, true, None)),
        positions: mesh.positions.clone(),
        normals,
        texcoords: None,
        color_t: normalized_values(ctx, &layer.variables.color),
        texture_t: normalized_values(ctx, &layer.variables.texture),
        triangles: mesh.triangles.clone(),
    }))
}

/// Bounds of everything the scene draws, for camera framing.
pub fn scene_bounds(scene: &Scene) -> Aabb {
    scene.bounds()
}
