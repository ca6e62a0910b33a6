//! Layered scene model: data objects, vis layers binding variables and assets
//! to them, the declarative scene file and its validation.

mod data;
mod layer;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::assetlib::{load_payload, Asset, AssetKind, AssetLibrary};
use crate::color::parse_hex;
use crate::renderer::Camera;
use crate::sampling::SamplingMethod;

pub use data::{
    load_data_object, normalize, DataFormat, DataObject, DataRange, Geometry, GeometryKind, Polyline, PolylineEntry,
    PolylineFile, ValueType, VariableKind, VolumeHeader,
};
pub use layer::{
    AssetBindings, GlyphSampling, LayerStyle, LayerType, LineSampling, LineStyle, OrientationMode, VariableBindings,
    VisLayer,
};

#[derive(Debug, thiserror::Error)]
pub enum SceneError {
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("{path}:{line}: {message}")]
    Parse { path: String, line: usize, message: String },
    #[error("{0}")]
    Data(String),
    #[error("data range [{min}, {max}] must satisfy min < max")]
    Range { min: f64, max: f64 },
    #[error("{0}")]
    Asset(String),
    #[error("{}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
}

impl SceneError {
    pub(crate) fn io(path: &Path, e: impl fmt::Display) -> Self {
        SceneError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }
}

/// A validation finding, optionally tied to one layer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer: Option<String>,
    pub message: String,
}

impl Diagnostic {
    fn scene(message: impl Into<String>) -> Self {
        Self {
            layer: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.layer {
            Some(l) => write!(f, "layer {l:?}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Where a data object comes from. Exactly one of `path` and `builtin` is set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DataSource {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<DataFormat>,
    /// Name of a procedural fixture data object.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
}

/// Where an asset comes from: a file path, a library id or a builtin fixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AssetSource {
    pub id: String,
    pub kind: AssetKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub library: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub builtin: Option<String>,
}

/// The declarative scene document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SceneFile {
    #[serde(default = "one")]
    pub version: u32,
    #[serde(default)]
    pub data: Vec<DataSource>,
    #[serde(default)]
    pub assets: Vec<AssetSource>,
    #[serde(default)]
    pub layers: Vec<VisLayer>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub camera: Option<Camera>,
    #[serde(default)]
    pub seed: u64,
    /// `#rrggbb` or `#rrggbbaa`.
    #[serde(default = "default_background")]
    pub background: String,
}

fn one() -> u32 {
    1
}

fn default_background() -> String {
    "#ffffff".into()
}

impl SceneFile {
    pub fn from_json(text: &str) -> Result<Self, SceneError> {
        serde_json::from_str(text).map_err(|e| SceneError::Parse {
            path: "<scene>".into(),
            line: e.line(),
            message: e.to_string(),
        })
    }

    pub fn read(path: &Path) -> Result<Self, SceneError> {
        let text = std::fs::read_to_string(path).map_err(|e| SceneError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| SceneError::Parse {
            path: path.display().to_string(),
            line: e.line(),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serializes")
    }
}

/// Parses `#rrggbb` or `#rrggbbaa`.
pub fn parse_rgba(s: &str) -> Option<[u8; 4]> {
    let h = s.strip_prefix('#').unwrap_or(s);
    match h.len() {
        6 => parse_hex(h).map(|[r, g, b]| [r, g, b, 255]),
        8 => {
            let [r, g, b] = parse_hex(&h[..6])?;
            let a = u8::from_str_radix(&h[6..], 16).ok()?;
            Some([r, g, b, a])
        }
        _ => None,
    }
}

/// A loaded scene. Cheap to clone; edits return new versions and never
/// touch data shared with earlier ones.
#[derive(Debug, Clone)]
pub struct Scene {
    data: BTreeMap<String, Arc<DataObject>>,
    assets: BTreeMap<String, Arc<Asset>>,
    layers: Vec<Arc<VisLayer>>,
    camera: Option<Camera>,
    seed: u64,
    background: [u8; 4],
}

impl Default for Scene {
    fn default() -> Self {
        Self::new()
    }
}

impl Scene {
    pub fn new() -> Self {
        Self {
            data: BTreeMap::new(),
            assets: BTreeMap::new(),
            layers: Vec::new(),
            camera: None,
            seed: 0,
            background: [255; 4],
        }
    }

    pub fn with_data(&self, id: impl Into<String>, object: DataObject) -> Self {
        let mut s = self.clone();
        s.data.insert(id.into(), Arc::new(object));
        s
    }

    pub fn with_asset(&self, id: impl Into<String>, asset: Asset) -> Self {
        let mut s = self.clone();
        s.assets.insert(id.into(), Arc::new(asset));
        s
    }

    pub fn with_camera(&self, camera: Option<Camera>) -> Self {
        Self { camera, ..self.clone() }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn with_background(&self, background: [u8; 4]) -> Self {
        Self {
            background,
            ..self.clone()
        }
    }

    /// Appends a layer without validating it; see [`add_layer`].
    pub fn with_layer_unchecked(&self, layer: VisLayer) -> Self {
        let mut s = self.clone();
        s.layers.push(Arc::new(layer));
        s
    }

    pub fn data(&self, id: &str) -> Option<&Arc<DataObject>> {
        self.data.get(id)
    }

    pub fn data_objects(&self) -> &BTreeMap<String, Arc<DataObject>> {
        &self.data
    }

    pub fn asset(&self, id: &str) -> Option<&Arc<Asset>> {
        self.assets.get(id)
    }

    pub fn layers(&self) -> &[Arc<VisLayer>] {
        &self.layers
    }

    pub fn camera(&self) -> Option<&Camera> {
        self.camera.as_ref()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn background(&self) -> [u8; 4] {
        self.background
    }

    /// Union of the bounds of every data object used by a layer.
    pub fn bounds(&self) -> crate::mesh::Aabb {
        let mut b = crate::mesh::Aabb::empty();
        for l in &self.layers {
            if let Some(d) = self.data.get(&l.data) {
                b = b.union(&d.bounds());
            }
        }
        b
    }

    /// Loads every data object and asset referenced by `file`. Relative paths
    /// resolve against `base_dir`; library ids need `library`. Layers are
    /// attached as written; run [`validate_scene`] before rendering.
    pub fn load(file: &SceneFile, base_dir: &Path, library: Option<&AssetLibrary>) -> Result<Self, SceneError> {
        let mut scene = Scene::new();
        scene.seed = file.seed;
        scene.camera = file.camera;
        scene.background = parse_rgba(&file.background)
            .ok_or_else(|| SceneError::Data(format!("background {:?} is not a #rrggbb color", file.background)))?;
        for src in &file.data {
            if scene.data.contains_key(&src.id) {
                return Err(SceneError::Data(format!("data id {:?} is declared twice", src.id)));
            }
            let obj = match (&src.path, &src.builtin) {
                (Some(p), None) => load_data_object(&base_dir.join(p), src.format)?,
                (None, Some(name)) => crate::fixtures::builtin_data(name)
                    .ok_or_else(|| SceneError::Data(format!("unknown builtin data object {name:?}")))?,
                _ => {
                    return Err(SceneError::Data(format!(
                        "data {:?} needs exactly one of path or builtin",
                        src.id
                    )))
                }
            };
            scene.data.insert(src.id.clone(), Arc::new(obj));
        }
        for src in &file.assets {
            if scene.assets.contains_key(&src.id) {
                return Err(SceneError::Asset(format!("asset id {:?} is declared twice", src.id)));
            }
            let asset = match (&src.path, &src.library, &src.builtin) {
                (Some(p), None, None) => load_payload(src.kind, &base_dir.join(p))
                    .map_err(|e| SceneError::Asset(format!("{}: {e}", src.id)))?,
                (None, Some(id), None) => {
                    let lib = library.ok_or_else(|| {
                        SceneError::Asset(format!(
                            "asset {:?} refers to the library but none is configured",
                            src.id
                        ))
                    })?;
                    lib.load_asset(id)
                        .map_err(|e| SceneError::Asset(format!("{}: {e}", src.id)))?
                }
                (None, None, Some(name)) => crate::fixtures::builtin_asset(name)
                    .ok_or_else(|| SceneError::Asset(format!("unknown builtin asset {name:?}")))?,
                _ => {
                    return Err(SceneError::Asset(format!(
                        "asset {:?} needs exactly one of path, library or builtin",
                        src.id
                    )))
                }
            };
            if asset.kind() != src.kind {
                return Err(SceneError::Asset(format!(
                    "asset {:?} is a {} but was declared as {}",
                    src.id,
                    asset.kind(),
                    src.kind
                )));
            }
            scene.assets.insert(src.id.clone(), Arc::new(asset));
        }
        for layer in &file.layers {
            scene.layers.push(Arc::new(layer.clone()));
        }
        Ok(scene)
    }

    /// Range used to normalize `variable` on `layer`: the layer override or
    /// the variable's data range.
    pub fn range(&self, layer: &VisLayer, variable: &str) -> Option<DataRange> {
        if let Some(r) = layer.ranges.get(variable) {
            return Some(*r);
        }
        let d = self.data.get(&layer.data)?;
        if let Some(v) = d.scalars.get(variable) {
            return DataRange::of(v.iter().copied());
        }
        d.vectors
            .get(variable)
            .and_then(|v| DataRange::of(v.iter().map(|x| x.norm())))
    }
}

/// Validates `layer` against `scene` and appends it, recording its bin count.
/// All binding problems are reported together.
pub fn add_layer(scene: &Scene, mut layer: VisLayer) -> Result<Scene, Vec<Diagnostic>> {
    let mut diags = validate_layer(scene, &layer);
    if scene.layers.iter().any(|l| l.id == layer.id) {
        diags.insert(0, at(&layer, format!("layer id {:?} is already used", layer.id)));
    }
    if layer.layer_type == LayerType::Volume && scene.layers.iter().any(|l| l.layer_type == LayerType::Volume) {
        diags.push(at(&layer, "a scene holds at most one volume layer"));
    }
    if !diags.is_empty() {
        return Err(diags);
    }
    layer.bins = texture_bins(scene, &layer);
    Ok(scene.with_layer_unchecked(layer))
}

fn texture_bins(scene: &Scene, layer: &VisLayer) -> Option<usize> {
    let id = layer.assets.texture_set.as_ref()?;
    match scene.assets.get(id)?.as_ref() {
        Asset::TextureSet(s) => Some(s.len()),
        Asset::Texture(_) | Asset::LineTexture(_) => Some(1),
        _ => None,
    }
}

/// Every problem that would keep the scene from rendering; empty means renderable.
pub fn validate_scene(scene: &Scene) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    if scene.layers.is_empty() {
        diags.push(Diagnostic::scene("no layers"));
    }
    if let Some(c) = &scene.camera {
        if let Err(e) = c.validate() {
            diags.push(Diagnostic::scene(format!("camera: {e}")));
        }
    }
    let mut seen = HashSet::new();
    let mut volumes = 0;
    for layer in &scene.layers {
        if !seen.insert(layer.id.as_str()) {
            diags.push(at(layer, format!("layer id {:?} is used more than once", layer.id)));
        }
        if layer.layer_type == LayerType::Volume {
            volumes += 1;
            if volumes == 2 {
                diags.push(at(layer, "a scene holds at most one volume layer"));
            }
        }
        diags.extend(validate_layer(scene, layer));
    }
    diags
}

fn at(layer: &VisLayer, message: impl Into<String>) -> Diagnostic {
    Diagnostic {
        layer: Some(layer.id.clone()),
        message: message.into(),
    }
}

/// Checks one layer's bindings and style against the scene's data and assets.
pub fn validate_layer(scene: &Scene, layer: &VisLayer) -> Vec<Diagnostic> {
    let mut d = Vec::new();
    let mut err = |m: String| d.push(at(layer, m));
    if layer.id.trim().is_empty() {
        err("layer id is empty".into());
    }
    let data = scene.data.get(&layer.data);
    if data.is_none() {
        err(format!("data object {:?} not found", layer.data));
    }

    if let Some(data) = data {
        let kind = data.geometry.kind();
        let ok = match layer.layer_type {
            LayerType::Glyph => match kind {
                GeometryKind::Points => true,
                GeometryKind::Mesh | GeometryKind::Voxels => {
                    if layer.style.sampling.is_none() {
                        err(format!(
                            "glyph layer on a {kind} needs a sampling method to place glyphs"
                        ));
                    }
                    true
                }
                GeometryKind::Lines => false,
            },
            LayerType::Line => kind == GeometryKind::Lines,
            LayerType::Surface => kind == GeometryKind::Mesh,
            LayerType::Volume => kind == GeometryKind::Voxels,
        };
        if !ok {
            err(format!(
                "{} layer cannot draw a {kind} (data object {:?})",
                layer.layer_type, layer.data
            ));
        }

        let mut check_var = |binding: &str, name: &Option<String>, want: VariableKind| {
            let Some(name) = name else { return };
            match data.variable_kind(name) {
                None => err(format!(
                    "{binding} variable {name:?} does not exist on data object {:?}",
                    layer.data
                )),
                Some(k) if k != want => err(format!(
                    "{binding} variable {name:?} is a {} but must be a {}",
                    kind_name(k),
                    kind_name(want)
                )),
                _ => {}
            }
        };
        let v = &layer.variables;
        check_var("color", &v.color, VariableKind::Scalar);
        check_var("texture", &v.texture, VariableKind::Scalar);
        check_var("size", &v.size, VariableKind::Scalar);
        check_var("orientation", &v.orientation, VariableKind::Vector);
        if let Some(s) = &layer.style.sampling {
            check_var("density", &s.density, VariableKind::Scalar);
        }
        if layer.layer_type == LayerType::Line && layer.style.line_sampling == LineSampling::IntegrationTime {
            if let Geometry::Lines(ls) = &data.geometry {
                if ls.iter().any(|l| l.times.is_none()) {
                    err("integration-time sampling needs times on every line".into());
                }
            }
        }
    }

    let mut check_asset = |binding: &str, id: &Option<String>, accept: &[AssetKind]| {
        let Some(id) = id else { return };
        match scene.assets.get(id) {
            None => err(format!("{binding} asset {id:?} not found")),
            Some(a) if !accept.contains(&a.kind()) => {
                err(format!("{binding} asset {id:?} is a {}, not a {}", a.kind(), accept[0]))
            }
            _ => {}
        }
    };
    let a = &layer.assets;
    check_asset("colormap", &a.colormap, &[AssetKind::Colormap]);
    check_asset(
        "texture set",
        &a.texture_set,
        &[AssetKind::TextureSet, AssetKind::Texture, AssetKind::LineTexture],
    );
    check_asset("glyph", &a.glyph, &[AssetKind::Glyph]);
    check_asset("alpha mask", &a.alpha_mask, &[AssetKind::AlphaMask]);
    check_asset("normal map", &a.normal_map, &[AssetKind::NormalMap]);

    if let Some(var) = &layer.variables.color {
        if a.colormap.is_none() {
            err(format!("color variable {var:?} is bound but no colormap is bound"));
        }
    }
    if let Some(var) = &layer.variables.texture {
        if a.texture_set.is_none() {
            err(format!("texture variable {var:?} is bound but no texture set is bound"));
        }
    }
    match layer.layer_type {
        LayerType::Glyph => {
            if a.glyph.is_none() {
                err("glyph layer needs a glyph asset".into());
            }
            if layer.style.orientation_mode == OrientationMode::Vector && layer.variables.orientation.is_none() {
                err("vector orientation needs an orientation variable".into());
            }
        }
        LayerType::Volume => {
            if layer.variables.color.is_none() {
                err("volume layer needs a color variable".into());
            }
            if a.colormap.is_none() && layer.variables.color.is_none() {
                err("volume layer needs a colormap".into());
            }
        }
        _ => {}
    }

    let s = &layer.style;
    if parse_rgba(&s.color).is_none() {
        err(format!("style color {:?} is not a #rrggbb color", s.color));
    }
    let mut positive = |name: &str, v: f64| {
        if !(v.is_finite() && v > 0.0) {
            err(format!("{name} must be positive, got {v}"));
        }
    };
    positive("glyphSizePercent", s.glyph_size_percent);
    positive("axialRadius", s.axial_radius);
    positive("axialRadiusRange[0]", s.axial_radius_range[0]);
    positive("axialRadiusRange[1]", s.axial_radius_range[1]);
    positive("ribbonWidth", s.ribbon_width);
    positive("tubeRadius", s.tube_radius);
    positive("projectionBlendFactor", s.projection_blend_factor);
    for (name, v) in [
        ("step", s.step),
        ("repeatLength", s.repeat_length),
        ("texelsPerUnit", s.texels_per_unit),
        ("stepSize", s.step_size),
    ] {
        if let Some(v) = v {
            positive(name, v);
        }
    }
    if !(s.blend_distance.is_finite() && s.blend_distance >= 0.0) {
        err(format!("blendDistance must be non-negative, got {}", s.blend_distance));
    }
    if !(s.opacity_scale.is_finite() && s.opacity_scale >= 0.0) {
        err(format!("opacityScale must be non-negative, got {}", s.opacity_scale));
    }
    if !s.rotational_offset.is_finite() {
        err("rotationalOffset must be finite".into());
    }
    if s.tube_sides < 3 {
        err(format!("tubeSides must be at least 3, got {}", s.tube_sides));
    }
    if crate::mesh::Vec3::from(s.up).norm() < 1e-12 || !s.up.iter().all(|c| c.is_finite()) {
        err("style up vector must be non-zero".into());
    }
    if let Some(sp) = &s.sampling {
        match sp.method {
            SamplingMethod::Regular if sp.spacing.is_none_or(|x| !(x > 0.0 && x.is_finite())) => {
                err("regular sampling needs a positive spacing".into())
            }
            SamplingMethod::Random if sp.count.is_none() => err("random sampling needs a count".into()),
            SamplingMethod::Density if sp.count.is_none() || sp.density.is_none() => {
                err("density sampling needs a count and a density variable".into())
            }
            _ => {}
        }
    }
    for (name, r) in &layer.ranges {
        if !r.is_valid() {
            err(format!(
                "range for {name:?} must satisfy min < max, got [{}, {}]",
                r.min, r.max
            ));
        }
    }
    d
}

fn kind_name(k: VariableKind) -> &'static str {
    match k {
        VariableKind::Scalar => "scalar",
        VariableKind::Vector => "vector",
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::{ColorMap, LabColor};
    use crate::mesh::{primitives::grid_plane, Vec3};
    use crate::texture::{TextureImage, TextureSet};

    fn points() -> DataObject {
        let p = vec![Vec3::zeros(), Vec3::x(), Vec3::y()];
        DataObject::new("pts", Geometry::Points(p))
            .with_scalar("temp", vec![1.0, 2.0, 3.0])
            .with_vector("flow", vec![Vec3::z(); 3])
    }

    fn base() -> Scene {
        let grid = crate::field::VoxelGrid::from_fn(
            [2, 2, 2],
            &crate::mesh::Aabb::new(Vec3::zeros(), Vec3::repeat(1.0)),
            |p| p.x,
        );
        let tex = TextureImage::new(image::RgbaImage::new(4, 4)).unwrap();
        let set = TextureSet {
            name: "ink".into(),
            images: vec![tex.clone(), tex.clone(), tex],
            normal_maps: None,
            alpha_masks: None,
        };
        let map = ColorMap::evenly_spaced("bw", &[LabColor::BLACK, LabColor::WHITE]).unwrap();
        let mesh = grid_plane(2, 2, 1.0, 1.0);
        let n = mesh.vertex_count();
        Scene::new()
            .with_data("pts", points())
            .with_data(
                "vol",
                DataObject::new("vol", Geometry::Voxels(grid.clone())).with_scalar("rho", grid.values),
            )
            .with_data(
                "surf",
                DataObject::new("surf", Geometry::Mesh(mesh)).with_scalar("salt", vec![0.5; n]),
            )
            .with_asset("bw", Asset::ColorMap(map))
            .with_asset("ink", Asset::TextureSet(set))
            .with_asset(
                "rock",
                Asset::Glyph(crate::mesh::GlyphAsset::from_mesh(
                    "rock",
                    crate::mesh::primitives::icosahedron(),
                )),
            )
    }

    fn glyph_layer() -> VisLayer {
        let mut l = VisLayer::new("g", LayerType::Glyph, "pts");
        l.assets.glyph = Some("rock".into());
        l.variables.orientation = Some("flow".into());
        l.style.orientation_mode = OrientationMode::Vector;
        l
    }

    #[test]
    fn glyph_layer_on_points_with_vector() {
        let s = add_layer(&base(), glyph_layer()).unwrap();
        assert_eq!(s.layers().len(), 1);
        assert!(validate_scene(&s).is_empty());
    }

    #[test]
    fn line_layer_on_voxels_rejected() {
        let err = add_layer(&base(), VisLayer::new("l", LayerType::Line, "vol")).unwrap_err();
        assert!(
            err.iter()
                .any(|d| d.message.contains("line layer cannot draw a voxel grid")),
            "{err:?}"
        );
    }

    #[test]
    fn surface_with_three_bins() {
        let mut l = VisLayer::new("s", LayerType::Surface, "surf");
        l.assets.texture_set = Some("ink".into());
        l.variables.texture = Some("salt".into());
        let s = add_layer(&base(), l).unwrap();
        assert_eq!(s.layers()[0].bins, Some(3));
    }

    #[test]
    fn errors_reported_together() {
        let mut l = VisLayer::new("g", LayerType::Glyph, "pts");
        l.variables.color = Some("temp".into());
        l.variables.orientation = Some("temp".into());
        l.variables.size = Some("missing".into());
        l.style.ribbon_width = -1.0;
        let err = add_layer(&base(), l).unwrap_err();
        let text: Vec<String> = err.iter().map(|d| d.to_string()).collect();
        assert!(err.len() >= 5, "{text:#?}");
        assert!(text
            .iter()
            .any(|m| m.contains("color variable \"temp\" is bound but no colormap")));
        assert!(text
            .iter()
            .any(|m| m.contains("orientation variable \"temp\" is a scalar")));
        assert!(text.iter().any(|m| m.contains("\"missing\" does not exist")));
        assert!(text.iter().any(|m| m.contains("glyph layer needs a glyph asset")));
        assert!(text.iter().any(|m| m.contains("ribbonWidth")));
        assert!(err.iter().all(|d| d.layer.as_deref() == Some("g")));
    }

    #[test]
    fn scene_level_diagnostics() {
        assert_eq!(validate_scene(&Scene::new()), vec![Diagnostic::scene("no layers")]);
        let s = add_layer(&base(), glyph_layer()).unwrap();
        assert!(add_layer(&s, glyph_layer()).is_err());
        let mut v = VisLayer::new("v", LayerType::Volume, "vol");
        v.variables.color = Some("rho".into());
        v.assets.colormap = Some("bw".into());
        let s = add_layer(&s, v.clone()).unwrap();
        v.id = "v2".into();
        assert!(add_layer(&s, v).unwrap_err()[0].message.contains("at most one volume"));
    }

    #[test]
    fn edits_leave_earlier_versions_untouched() {
        let a = base();
        let b = add_layer(&a, glyph_layer()).unwrap();
        assert!(a.layers().is_empty());
        assert_eq!(b.layers().len(), 1);
        assert!(Arc::ptr_eq(a.data("pts").unwrap(), b.data("pts").unwrap()));
    }

    #[test]
    fn scene_file_round_trip() {
        let mut layer = glyph_layer();
        layer.ranges.insert("temp".into(), DataRange::new(0.0, 10.0).unwrap());
        layer.style.sampling = Some(GlyphSampling {
            method: SamplingMethod::Density,
            spacing: None,
            count: Some(100),
            density: Some("temp".into()),
        });
        let file = SceneFile {
            version: 1,
            data: vec![DataSource {
                id: "pts".into(),
                path: Some("pts.csv".into()),
                format: Some(DataFormat::Csv),
                builtin: None,
            }],
            assets: vec![AssetSource {
                id: "rock".into(),
                kind: AssetKind::Glyph,
                path: None,
                library: Some("abc123".into()),
                builtin: None,
            }],
            layers: vec![layer],
            camera: Some(Camera::new(
                Vec3::new(0.0, 0.0, 5.0),
                Vec3::zeros(),
                Vec3::y(),
                45.0,
                64,
                64,
            )),
            seed: 9,
            background: "#102030".into(),
        };
        let back = SceneFile::from_json(&file.to_json()).unwrap();
        assert_eq!(back, file);
        let minimal = SceneFile::from_json(r#"{"layers":[{"id":"a","type":"surface","data":"d"}]}"#).unwrap();
        assert_eq!(minimal.layers[0].style, LayerStyle::default());
        assert_eq!(SceneFile::from_json(&minimal.to_json()).unwrap(), minimal);
    }

    #[test]
    fn load_from_files() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("pts.csv"), "x,y,z,temp\n0,0,0,1\n1,0,0,2\n").unwrap();
        let file = SceneFile::from_json(
            r#"{"data":[{"id":"p","path":"pts.csv"}],
                "assets":[{"id":"g","kind":"glyph","builtin":"glyph/pebble"}],
                "layers":[{"id":"a","type":"glyph","data":"p","assets":{"glyph":"g"}}]}"#,
        )
        .unwrap();
        let scene = Scene::load(&file, dir.path(), None).unwrap();
        assert!(validate_scene(&scene).is_empty(), "{:?}", validate_scene(&scene));
        let bad = SceneFile::from_json(r#"{"data":[{"id":"p","path":"nope.csv"}]}"#).unwrap();
        assert!(matches!(
            Scene::load(&bad, dir.path(), None),
            Err(SceneError::Io { .. })
        ));
    }
}
