//! Procedural data objects, assets and scenes. Scene files reach them by
//! name through `builtin` references, so demos and tests need no files.
//!
//! The "gulf" objects are a synthetic coastal-ocean dataset: a box of water
//! 200 x 60 x 120 units with y pointing up (the sea surface is y = 60), three
//! eddies, a warm-water isotherm surface and nutrient fields on a voxel grid.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use image::{GrayImage, Luma, Rgba, RgbaImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assetlib::{Asset, AssetKind};
use crate::color::{ColorMap, LabColor};
use crate::field::VoxelGrid;
use crate::mesh::{build_lod_chain, primitives, Aabb, GlyphAsset, LodOptions, TriMesh, Vec3};
use crate::renderer::Camera;
use crate::sampling::SamplingMethod;
use crate::scene::{
    AssetSource, DataObject, DataRange, DataSource, Geometry, GlyphSampling, LayerType, LineStyle, OrientationMode,
    Polyline, Scene, SceneFile, VisLayer,
};
use crate::texture::{build_texture_set, make_normal_map, SetOptions, TextureImage, DEFAULT_NORMAL_STRENGTH};

pub const GULF_BOUNDS: ([f64; 3], [f64; 3]) = ([0.0, 0.0, 0.0], [200.0, 60.0, 120.0]);

/// Eddy centers (x, z), radius and spin sign.
const EDDIES: [(f64, f64, f64, f64); 3] = [
    (60.0, 45.0, 28.0, 1.0),
    (135.0, 70.0, 32.0, -1.0),
    (95.0, 100.0, 16.0, 1.0),
];

pub const BUILTIN_DATA: &[&str] = &["gulf/eddies", "gulf/isotherm", "gulf/ocean", "demo/points"];

pub const BUILTIN_ASSETS: &[(&str, AssetKind)] = &[
    ("colormap/thermal", AssetKind::Colormap),
    ("colormap/haline", AssetKind::Colormap),
    ("colormap/nutrient", AssetKind::Colormap),
    ("colormap/gray", AssetKind::Colormap),
    ("textureSet/ink", AssetKind::TextureSet),
    ("texture/paper", AssetKind::Texture),
    ("lineTexture/brush", AssetKind::LineTexture),
    ("alphaMask/frayed", AssetKind::AlphaMask),
    ("normalMap/ripples", AssetKind::NormalMap),
    ("glyph/pebble", AssetKind::Glyph),
];

fn gulf_box() -> Aabb {
    Aabb::new(Vec3::from(GULF_BOUNDS.0), Vec3::from(GULF_BOUNDS.1))
}

/// Horizontal eddy velocity at `p`: solid-body spin inside each core,
/// decaying outside, weaker with depth.
pub fn gulf_velocity(p: &Vec3) -> Vec3 {
    let depth_factor = 0.4 + 0.6 * (p.y / GULF_BOUNDS.1[1]).clamp(0.0, 1.0);
    let mut v = Vec3::new(0.15, 0.0, 0.0);
    for (cx, cz, r, spin) in EDDIES {
        let (dx, dz) = (p.x - cx, p.z - cz);
        let d = (dx * dx + dz * dz).sqrt() / r;
        let speed = d * (-d * d).exp() * 2.0;
        if d > 1e-9 {
            v += Vec3::new(-dz, 0.0, dx) * (spin * speed / (d * r));
        }
    }
    v * depth_factor
}

/// Depth of the 18-degree isotherm below the surface, as a height y.
fn isotherm_height(x: f64, z: f64) -> f64 {
    let mut y = 30.0 + 4.0 * (x / 31.0).sin() * (z / 23.0).cos();
    for (cx, cz, r, spin) in EDDIES {
        let d2 = ((x - cx).powi(2) + (z - cz).powi(2)) / (r * r);
        // Warm-core eddies push the isotherm down, cold-core ones lift it.
        y -= spin * 12.0 * (-d2).exp();
    }
    y
}

pub fn gulf_temperature(p: &Vec3) -> f64 {
    let warm: f64 = EDDIES
        .iter()
        .map(|(cx, cz, r, s)| s * (-((p.x - cx).powi(2) + (p.z - cz).powi(2)) / (r * r)).exp())
        .sum();
    8.0 + 18.0 * (p.y / GULF_BOUNDS.1[1]) + 3.0 * warm
}

pub fn gulf_salinity(p: &Vec3) -> f64 {
    // Fresher near the river mouth at the x = 0, z = 120 corner.
    let river = (-((p.x).powi(2) + (p.z - 120.0).powi(2)) / 3600.0).exp();
    36.2 - 0.02 * p.y - 4.0 * river
}

pub fn gulf_nitrate(p: &Vec3) -> f64 {
    let upwelling: f64 = EDDIES
        .iter()
        .filter(|e| e.3 < 0.0)
        .map(|(cx, cz, r, _)| (-((p.x - cx).powi(2) + (p.z - cz).powi(2)) / (r * r)).exp())
        .sum();
    let deep = 1.0 - (p.y / GULF_BOUNDS.1[1]).clamp(0.0, 1.0);
    (30.0 * deep * deep + 12.0 * upwelling * (1.0 - 0.5 * deep)).max(0.0)
}

pub fn gulf_phosphorus(p: &Vec3) -> f64 {
    // A plume spreading from the river mouth just below the surface.
    let d2 = (p.x / 70.0).powi(2) + ((p.z - 120.0) / 45.0).powi(2) + ((p.y - 52.0) / 10.0).powi(2);
    (2.5 * (-d2).exp() - 0.05).max(0.0)
}

fn eddies() -> DataObject {
    let mut lines = Vec::new();
    let (mut rotation, mut curvature) = (Vec::new(), Vec::new());
    for (k, (cx, cz, r, spin)) in EDDIES.iter().enumerate() {
        for (ring, y) in [52.0, 40.0].into_iter().enumerate() {
            // One and a half inward turns of a spiral per depth level.
            let n = 90;
            let mut pts = Vec::with_capacity(n);
            for i in 0..n {
                let s = i as f64 / (n - 1) as f64;
                let a = spin * s * 3.0 * std::f64::consts::PI + k as f64 + ring as f64 * 0.7;
                let rr = r * (0.95 - 0.55 * s);
                let p = Vec3::new(cx + rr * a.cos(), y - 4.0 * s, cz + rr * a.sin());
                pts.push(p);
                rotation.push(spin * (1.0 - 0.5 * s) * (1.0 + ring as f64 * 0.3));
                curvature.push(1.0 / rr);
            }
            lines.push(Polyline::new(pts));
        }
    }
    DataObject::new("gulf/eddies", Geometry::Lines(lines))
        .with_scalar("rotation", rotation)
        .with_scalar("curvature", curvature)
}

fn isotherm() -> DataObject {
    let (nx, nz) = (64u32, 40u32);
    let mut mesh = primitives::grid_plane(nx, nz, GULF_BOUNDS.1[0], GULF_BOUNDS.1[2]);
    // The grid lies in z = 0 facing +Z; lay it down into x-z with y as height.
    for p in &mut mesh.positions {
        let (x, z) = (p.x, p.y);
        *p = Vec3::new(x, isotherm_height(x, z), z);
    }
    for t in &mut mesh.triangles {
        t.swap(1, 2);
    }
    mesh.normals = Some(mesh.compute_vertex_normals());
    let temperature = mesh
        .positions
        .iter()
        .map(|p| gulf_temperature(p) + 0.3 * (p.x * 0.2).sin())
        .collect();
    let salinity = mesh.positions.iter().map(gulf_salinity).collect();
    DataObject::new("gulf/isotherm", Geometry::Mesh(mesh))
        .with_scalar("temperature", temperature)
        .with_scalar("salinity", salinity)
}

fn ocean() -> DataObject {
    let dims = [50, 15, 30];
    let grid = VoxelGrid::from_fn(dims, &gulf_box(), |_| 0.0);
    let centers: Vec<Vec3> = (0..grid.cell_count()).map(|i| grid.cell_center(i)).collect();
    let field = |f: fn(&Vec3) -> f64| centers.iter().map(f).collect::<Vec<f64>>();
    DataObject::new("gulf/ocean", Geometry::Voxels(grid.clone()))
        .with_scalar("nitrate", field(gulf_nitrate))
        .with_scalar("salinity", field(gulf_salinity))
        .with_scalar("phosphorus", field(gulf_phosphorus))
        .with_scalar("temperature", field(gulf_temperature))
        .with_vector("velocity", centers.iter().map(gulf_velocity).collect())
}

fn demo_points() -> DataObject {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let pts: Vec<Vec3> = (0..64)
        .map(|_| {
            Vec3::new(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            )
        })
        .collect();
    let magnitude = pts.iter().map(|p| p.norm()).collect();
    let dirs = pts.iter().map(|p| Vec3::new(-p.y, p.x, 0.3)).collect();
    DataObject::new("demo/points", Geometry::Points(pts))
        .with_scalar("magnitude", magnitude)
        .with_vector("swirl", dirs)
}

pub fn builtin_data(name: &str) -> Option<DataObject> {
    Some(match name {
        "gulf/eddies" => eddies(),
        "gulf/isotherm" => isotherm(),
        "gulf/ocean" => ocean(),
        "demo/points" => demo_points(),
        _ => return None,
    })
}

fn lab(l: f64, a: f64, b: f64) -> LabColor {
    LabColor::new(l, a, b)
}

pub fn colormap(name: &str) -> Option<ColorMap> {
    let colors = match name {
        "thermal" => vec![
            lab(20.0, 20.0, -45.0),
            lab(45.0, 35.0, -30.0),
            lab(62.0, 45.0, 30.0),
            lab(92.0, -5.0, 75.0),
        ],
        "haline" => vec![
            lab(25.0, 5.0, -35.0),
            lab(50.0, -25.0, -15.0),
            lab(72.0, -35.0, 20.0),
            lab(93.0, -12.0, 40.0),
        ],
        "nutrient" => vec![
            lab(96.0, -4.0, 12.0),
            lab(70.0, -30.0, 25.0),
            lab(45.0, -20.0, 30.0),
            lab(22.0, 5.0, 15.0),
        ],
        "gray" => vec![LabColor::BLACK, LabColor::WHITE],
        _ => return None,
    };
    Some(ColorMap::evenly_spaced(name, &colors).expect("fixture colormap is valid"))
}

/// Three hand-drawn-looking ink patterns of increasing density.
fn ink_image(kind: usize, size: u32) -> RgbaImage {
    let mut rng = ChaCha8Rng::seed_from_u64(100 + kind as u64);
    let mut img = RgbaImage::from_pixel(size, size, Rgba([246, 243, 235, 255]));
    let ink = Rgba([40, 36, 44, 255]);
    match kind {
        0 => {
            // Sparse stipple.
            for _ in 0..size * size / 40 {
                let (x, y) = (rng.random_range(0..size), rng.random_range(0..size));
                img.put_pixel(x, y, ink);
            }
        }
        1 => {
            // Diagonal hatching with jittered spacing.
            for y in 0..size {
                for x in 0..size {
                    if (x + y) % 8 < 2 && rng.random::<f64>() < 0.9 {
                        img.put_pixel(x, y, ink);
                    }
                }
            }
        }
        _ => {
            // Cross-hatching.
            for y in 0..size {
                for x in 0..size {
                    let a = (x + y) % 6 < 2;
                    let b = (x + size - y) % 6 < 2;
                    if (a || b) && rng.random::<f64>() < 0.92 {
                        img.put_pixel(x, y, ink);
                    }
                }
            }
        }
    }
    img
}

fn paper(size: u32) -> RgbaImage {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    RgbaImage::from_fn(size, size, |_, _| {
        let g = 225 + rng.random_range(0..25u8);
        Rgba([g, g, g - 6, 255])
    })
}

/// A dry-brush stroke: streaks run along the image's vertical axis,
/// which maps onto the line direction.
fn brush(width: u32, height: u32) -> RgbaImage {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let streaks: Vec<f64> = (0..width).map(|_| rng.random_range(0.55..1.0)).collect();
    RgbaImage::from_fn(width, height, |x, y| {
        let across = (x as f64 + 0.5) / width as f64;
        let edge = (1.0 - (2.0 * across - 1.0).powi(6)).max(0.0);
        let wave = 0.85 + 0.15 * (y as f64 * 0.11 + x as f64 * 0.7).sin();
        let v = (255.0 * (1.0 - 0.55 * streaks[x as usize] * edge * wave)) as u8;
        Rgba([v, v, v, 255])
    })
}

/// Opaque centre with a ragged border, for cutting ribbon edges.
fn frayed(width: u32, height: u32) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let rag: Vec<f64> = (0..height).map(|_| rng.random_range(0.0..0.12)).collect();
    GrayImage::from_fn(width, height, |x, y| {
        let u = (x as f64 + 0.5) / width as f64;
        let d = u.min(1.0 - u);
        Luma([if d > 0.03 + rag[y as usize] { 255 } else { 0 }])
    })
}

fn ripples(size: u32) -> crate::texture::NormalMap {
    let height = RgbaImage::from_fn(size, size, |x, y| {
        let (u, v) = (x as f64 / size as f64, y as f64 / size as f64);
        let h = 0.5 + 0.25 * (u * 6.0 * std::f64::consts::TAU).sin() + 0.25 * (v * 4.0 * std::f64::consts::TAU).cos();
        let g = (h * 255.0) as u8;
        Rgba([g, g, g, 255])
    });
    make_normal_map(&TextureImage::new(height).expect("non-empty"), DEFAULT_NORMAL_STRENGTH).expect("normal map")
}

/// A lumpy low-poly stone with a three-level chain, built once per process.
pub fn pebble() -> &'static GlyphAsset {
    static PEBBLE: OnceLock<GlyphAsset> = OnceLock::new();
    PEBBLE.get_or_init(|| {
        let mut mesh = primitives::blob(8, 0.18, 5);
        for p in &mut mesh.positions {
            // Elongate along +Z, the glyph's forward axis.
            p.z *= 1.6;
        }
        let options = LodOptions {
            targets: vec![400, 120, 40],
            resolution: 128,
        };
        let mut asset = build_lod_chain("pebble", &mesh, &options).expect("pebble chain").asset;
        asset.mesh = asset.mesh.with_vertex_normals();
        asset
    })
}

fn ink_set() -> &'static crate::texture::TextureSet {
    static SET: OnceLock<crate::texture::TextureSet> = OnceLock::new();
    SET.get_or_init(|| {
        let images = (0..3)
            .map(|k| TextureImage::new(ink_image(k, 128)).expect("non-empty"))
            .collect();
        let options = SetOptions {
            name: "ink".into(),
            normal_strength: Some(1.0),
            resample: false,
        };
        build_texture_set(images, &options).expect("ink set")
    })
}

pub fn builtin_asset(name: &str) -> Option<Asset> {
    Some(match name.split_once('/')? {
        ("colormap", m) => Asset::ColorMap(colormap(m)?),
        ("textureSet", "ink") => Asset::TextureSet(ink_set().clone()),
        ("texture", "paper") => Asset::Texture(TextureImage::new(paper(128)).ok()?),
        ("lineTexture", "brush") => Asset::LineTexture(TextureImage::new(brush(32, 128)).ok()?),
        ("alphaMask", "frayed") => Asset::AlphaMask(frayed(32, 128)),
        ("normalMap", "ripples") => Asset::NormalMap(ripples(128)),
        ("glyph", "pebble") => Asset::Glyph(pebble().clone()),
        _ => return None,
    })
}

fn data_src(id: &str) -> DataSource {
    DataSource {
        id: id.into(),
        path: None,
        format: None,
        builtin: Some(id.into()),
    }
}

fn asset_src(id: &str, kind: AssetKind) -> AssetSource {
    AssetSource {
        id: id.into(),
        kind,
        path: None,
        library: None,
        builtin: Some(id.into()),
    }
}

/// Oblique view down onto the Gulf box from above the sea surface.
pub fn gulf_camera(width: u32, height: u32) -> Camera {
    Camera::framing(&gulf_box(), Vec3::new(-0.35, 0.8, 1.0), Vec3::y(), 40.0, width, height)
}

/// Four layers over the Gulf data: eddy ribbons, the textured isotherm
/// surface, nitrate-sampled glyphs aligned with the current, and a
/// phosphorus plume volume.
pub fn gulf_scene_file() -> SceneFile {
    let mut eddies = VisLayer::new("eddies", LayerType::Line, "gulf/eddies");
    eddies.variables.color = Some("rotation".into());
    eddies.variables.size = Some("curvature".into());
    eddies.assets.colormap = Some("colormap/thermal".into());
    eddies.assets.texture_set = Some("lineTexture/brush".into());
    eddies.assets.alpha_mask = Some("alphaMask/frayed".into());
    eddies.style.line_style = LineStyle::Ribbon;
    eddies.style.ribbon_width = 5.0;
    eddies.style.axial_radius_range = [0.6, 1.4];
    eddies.style.rotational_offset = 90.0;

    let mut surface = VisLayer::new("isotherm", LayerType::Surface, "gulf/isotherm");
    surface.variables.color = Some("temperature".into());
    surface.variables.texture = Some("salinity".into());
    surface.assets.colormap = Some("colormap/thermal".into());
    surface.assets.texture_set = Some("textureSet/ink".into());
    surface.style.blend_distance = 0.15;

    let mut glyphs = VisLayer::new("nutrients", LayerType::Glyph, "gulf/ocean");
    glyphs.variables.color = Some("salinity".into());
    glyphs.variables.orientation = Some("velocity".into());
    glyphs.variables.size = Some("nitrate".into());
    glyphs.assets.colormap = Some("colormap/haline".into());
    glyphs.assets.glyph = Some("glyph/pebble".into());
    glyphs.style.orientation_mode = OrientationMode::Vector;
    glyphs.style.glyph_size_percent = 2.0;
    glyphs.style.axial_radius_range = [0.4, 0.8];
    glyphs.style.sampling = Some(GlyphSampling {
        method: SamplingMethod::Density,
        spacing: None,
        count: Some(600),
        density: Some("nitrate".into()),
    });

    let mut plume = VisLayer::new("phosphorus", LayerType::Volume, "gulf/ocean");
    plume.variables.color = Some("phosphorus".into());
    plume.assets.colormap = Some("colormap/nutrient".into());
    plume.style.opacity_scale = 0.05;
    plume.ranges = BTreeMap::from([("phosphorus".to_string(), DataRange { min: 0.0, max: 2.5 })]);

    SceneFile {
        version: 1,
        data: ["gulf/eddies", "gulf/isotherm", "gulf/ocean"].map(data_src).to_vec(),
        assets: vec![
            asset_src("colormap/thermal", AssetKind::Colormap),
            asset_src("colormap/haline", AssetKind::Colormap),
            asset_src("colormap/nutrient", AssetKind::Colormap),
            asset_src("textureSet/ink", AssetKind::TextureSet),
            asset_src("lineTexture/brush", AssetKind::LineTexture),
            asset_src("alphaMask/frayed", AssetKind::AlphaMask),
            asset_src("glyph/pebble", AssetKind::Glyph),
        ],
        layers: vec![eddies, surface, glyphs, plume],
        camera: Some(gulf_camera(1024, 1024)),
        seed: 2024,
        background: "#f4f1ea".into(),
    }
}

pub fn gulf_scene() -> Scene {
    Scene::load(&gulf_scene_file(), std::path::Path::new("."), None).expect("builtin gulf scene loads")
}

/// Two axis-aligned quads facing +Z at the given heights, for depth tests.
pub fn quad(z: f64, half: f64) -> TriMesh {
    TriMesh::new(
        vec![
            Vec3::new(-half, -half, z),
            Vec3::new(half, -half, z),
            Vec3::new(half, half, z),
            Vec3::new(-half, half, z),
        ],
        vec![[0, 1, 2], [0, 2, 3]],
    )
}
