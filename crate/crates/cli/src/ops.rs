//! Operations shared by the command line and the HTTP service. Each one is a
//! thin adapter over a library call, so both front ends return the same
//! result for the same input.

use std::path::Path;

use abr_core::assetlib::AssetError;
use abr_core::color::{
    export_colormap, extract_palette, hex_string, lab_to_srgb, parse_hex, srgb_to_lab, ColorError, ColorMap,
    ControlPoint, ExportFormat, LabColor, DEFAULT_PALETTE_SIZE,
};
use abr_core::linesynth::{row_similarity, synthesize_with, SynthesisError, SynthesisParams, SynthesisRecord};
use abr_core::mesh::MeshError;
use abr_core::renderer::{Camera, RenderError};
use abr_core::sampling::{
    sample_density_mh, sample_random, sample_regular, Domain, SampleSet, SamplingError, SamplingMethod, ScalarField,
};
use abr_core::scene::{DataObject, Geometry, SceneError};
use abr_core::texture::{TextureError, TextureImage};
use image::RgbImage;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    InvalidInput,
    NotFound,
    Validation,
    Integrity,
    Io,
    Internal,
}

/// A failed operation: a stable code, a one-line message and optional
/// per-item details (for example one entry per scene diagnostic).
#[derive(Debug, Clone, thiserror::Error, Serialize)]
#[error("{message}")]
pub struct OpError {
    pub code: ErrorCode,
    pub message: String,
    pub details: Vec<String>,
}

impl OpError {
    pub fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            details: Vec::new(),
        }
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        Self::new(ErrorCode::InvalidInput, message)
    }

    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        let code = if path.exists() {
            ErrorCode::Io
        } else {
            ErrorCode::NotFound
        };
        Self::new(code, format!("{}: {e}", path.display()))
    }
}

impl From<ColorError> for OpError {
    fn from(e: ColorError) -> Self {
        Self::invalid(e.to_string())
    }
}

impl From<TextureError> for OpError {
    fn from(e: TextureError) -> Self {
        match &e {
            TextureError::Io { path, .. } => Self::io(path, &e),
            _ => Self::invalid(e.to_string()),
        }
    }
}

impl From<MeshError> for OpError {
    fn from(e: MeshError) -> Self {
        match e {
            MeshError::Io(m) => Self::new(ErrorCode::Io, m),
            e => Self::invalid(e.to_string()),
        }
    }
}

impl From<SynthesisError> for OpError {
    fn from(e: SynthesisError) -> Self {
        Self::invalid(e.to_string())
    }
}

impl From<SamplingError> for OpError {
    fn from(e: SamplingError) -> Self {
        Self::invalid(e.to_string())
    }
}

impl From<AssetError> for OpError {
    fn from(e: AssetError) -> Self {
        let code = match &e {
            AssetError::NotFound(_) => ErrorCode::NotFound,
            AssetError::Integrity { .. } => ErrorCode::Integrity,
            AssetError::Io { path, .. } if !path.exists() => ErrorCode::NotFound,
            AssetError::Io { .. } => ErrorCode::Io,
            _ => ErrorCode::InvalidInput,
        };
        Self::new(code, e.to_string())
    }
}

impl From<SceneError> for OpError {
    fn from(e: SceneError) -> Self {
        match e {
            SceneError::Io { path, message } => Self::io(&path, message),
            SceneError::Invalid(diags) => Self {
                code: ErrorCode::Validation,
                message: format!("scene has {} problem(s)", diags.len()),
                details: diags.iter().map(|d| d.to_string()).collect(),
            },
            e => Self::invalid(e.to_string()),
        }
    }
}

impl From<RenderError> for OpError {
    fn from(e: RenderError) -> Self {
        match e {
            RenderError::Invalid(diags) => Self {
                code: ErrorCode::Validation,
                message: format!("scene has {} problem(s)", diags.len()),
                details: diags.iter().map(|d| d.to_string()).collect(),
            },
            e => Self::invalid(e.to_string()),
        }
    }
}

pub fn decode_image(bytes: &[u8]) -> Result<TextureImage, OpError> {
    TextureImage::decode(bytes).map_err(|e| OpError::invalid(format!("image: {e}")))
}

pub fn open_image(path: &Path) -> Result<TextureImage, OpError> {
    let bytes = std::fs::read(path).map_err(|e| OpError::io(path, e))?;
    decode_image(&bytes).map_err(|e| OpError::invalid(format!("{}: {}", path.display(), e.message)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwatchOut {
    pub hex: String,
    pub lab: LabColor,
    pub population: u64,
}

pub fn palette(image: &RgbImage, count: Option<usize>) -> Result<Vec<SwatchOut>, OpError> {
    Ok(extract_palette(image, count.unwrap_or(DEFAULT_PALETTE_SIZE))?
        .into_iter()
        .map(|s| SwatchOut {
            hex: hex_string(lab_to_srgb(s.color)),
            lab: s.color,
            population: s.population,
        })
        .collect())
}

/// Colormap from `#rrggbb` colors, evenly spaced unless positions are given.
pub fn colormap_from_hex(name: &str, colors: &[String], positions: Option<&[f64]>) -> Result<ColorMap, OpError> {
    let labs = colors
        .iter()
        .map(|c| {
            parse_hex(c)
                .map(srgb_to_lab)
                .ok_or_else(|| OpError::invalid(format!("{c:?} is not a #rrggbb color")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    match positions {
        None => Ok(ColorMap::evenly_spaced(name, &labs)?),
        Some(p) if p.len() != labs.len() => Err(OpError::invalid(format!(
            "{} positions for {} colors",
            p.len(),
            labs.len()
        ))),
        Some(p) => Ok(ColorMap::new(
            name,
            p.iter()
                .zip(labs)
                .map(|(&position, color)| ControlPoint { position, color })
                .collect(),
        )?),
    }
}

/// Sequential colormap from a palette: swatches ordered dark to light,
/// evenly spaced.
pub fn colormap_from_swatches(name: &str, swatches: &[SwatchOut]) -> Result<ColorMap, OpError> {
    let mut labs: Vec<LabColor> = swatches.iter().map(|s| s.lab).collect();
    labs.sort_by(|a, b| a.l.total_cmp(&b.l).then(a.a.total_cmp(&b.a)).then(a.b.total_cmp(&b.b)));
    Ok(ColorMap::evenly_spaced(name, &labs)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ColormapFormat {
    /// ParaView XML.
    Xml,
    /// 1024x32 PNG strip.
    Png,
    /// Control points as JSON.
    Json,
}

impl ColormapFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "xml" => Some(Self::Xml),
            "png" => Some(Self::Png),
            "json" => Some(Self::Json),
            _ => None,
        }
    }

    pub fn content_type(self) -> &'static str {
        match self {
            Self::Xml => "application/xml",
            Self::Png => "image/png",
            Self::Json => "application/json",
        }
    }
}

pub fn export(map: &ColorMap, format: ColormapFormat) -> Result<Vec<u8>, OpError> {
    Ok(match format {
        ColormapFormat::Xml => export_colormap(map, ExportFormat::Xml)?,
        ColormapFormat::Png => export_colormap(map, ExportFormat::PngStrip)?,
        ColormapFormat::Json => serde_json::to_vec_pretty(map).expect("colormap serializes"),
    })
}

pub fn read_colormap(path: &Path) -> Result<ColorMap, OpError> {
    let text = std::fs::read_to_string(path).map_err(|e| OpError::io(path, e))?;
    match ColormapFormat::from_path(path) {
        Some(ColormapFormat::Json) => {
            serde_json::from_str(&text).map_err(|e| OpError::invalid(format!("{}: {e}", path.display())))
        }
        _ => Ok(abr_core::color::from_paraview_xml(&text)?),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorSample {
    pub t: f64,
    pub hex: String,
    pub lab: LabColor,
}

pub fn sample_colormap(map: &ColorMap, ts: &[f64]) -> Vec<ColorSample> {
    ts.iter()
        .map(|&t| {
            let lab = map.sample(t);
            ColorSample {
                t,
                hex: hex_string(map.sample_srgb8(t)),
                lab,
            }
        })
        .collect()
}

pub fn synthesize(source: &TextureImage, params: &SynthesisParams) -> Result<(TextureImage, SynthesisRecord), OpError> {
    let similarity = row_similarity(source)?;
    let result = synthesize_with(source, &similarity, params)?;
    let record = result.record(params, &similarity);
    Ok((result.image, record))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Regular,
    Random,
    Density,
}

impl From<Method> for SamplingMethod {
    fn from(m: Method) -> Self {
        match m {
            Method::Regular => SamplingMethod::Regular,
            Method::Random => SamplingMethod::Random,
            Method::Density => SamplingMethod::Density,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SampleRequest {
    pub method: Method,
    #[serde(default)]
    pub spacing: Option<f64>,
    #[serde(default)]
    pub count: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    /// Density variable; also attached to each sample as a value column.
    #[serde(default)]
    pub variable: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleOutput {
    #[serde(flatten)]
    pub set: SampleSet,
    /// The variable's value at each sample, when one was named.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl SampleOutput {
    /// `x,y,z` plus a column named after the variable; loads back as point data.
    pub fn to_csv(&self, variable: Option<&str>) -> String {
        use std::fmt::Write;
        let mut s = String::from("x,y,z");
        if let (Some(name), Some(_)) = (variable, &self.values) {
            let _ = write!(s, ",{name}");
        }
        s.push('\n');
        for (i, p) in self.set.positions.iter().enumerate() {
            let _ = write!(s, "{},{},{}", p.x, p.y, p.z);
            if let Some(v) = &self.values {
                let _ = write!(s, ",{}", v[i]);
            }
            s.push('\n');
        }
        s
    }
}

pub fn sample(data: &DataObject, req: &SampleRequest) -> Result<SampleOutput, OpError> {
    let need =
        |v: Option<usize>, what: &str| v.ok_or_else(|| OpError::invalid(format!("{what} sampling needs a count")));
    let set = match (req.method, &data.geometry) {
        (_, Geometry::Points(_) | Geometry::Lines(_)) => {
            return Err(OpError::invalid(format!(
                "cannot sample a {} data object; use a mesh or a voxel grid",
                data.geometry.kind()
            )))
        }
        (Method::Regular, g) => {
            let spacing = req
                .spacing
                .ok_or_else(|| OpError::invalid("regular sampling needs a spacing"))?;
            match g {
                Geometry::Mesh(m) => sample_regular(Domain::Surface(m), spacing)?,
                _ => sample_regular(Domain::Volume(data.bounds()), spacing)?,
            }
        }
        (Method::Random, g) => {
            let count = need(req.count, "random")?;
            match g {
                Geometry::Mesh(m) => sample_random(Domain::Surface(m), count, req.seed)?,
                _ => sample_random(Domain::Volume(data.bounds()), count, req.seed)?,
            }
        }
        (Method::Density, g) => {
            let count = need(req.count, "density")?;
            let var = req
                .variable
                .as_deref()
                .ok_or_else(|| OpError::invalid("density sampling needs a variable"))?;
            let values = data
                .scalars
                .get(var)
                .ok_or_else(|| OpError::invalid(format!("data object has no scalar variable {var:?}")))?;
            match g {
                Geometry::Mesh(m) => sample_density_mh(ScalarField::Surface { mesh: m, values }, count, req.seed)?,
                _ => {
                    let grid = data.voxel_field(var).expect("voxel geometry");
                    sample_density_mh(ScalarField::Voxels(&grid), count, req.seed)?
                }
            }
        }
    };
    let values = match &req.variable {
        Some(var) => {
            if !data.scalars.contains_key(var) {
                return Err(OpError::invalid(format!("data object has no scalar variable {var:?}")));
            }
            Some(
                set.positions
                    .iter()
                    .enumerate()
                    .map(|(i, p)| {
                        let tri = set.triangles.as_ref().map(|t| t[i]);
                        data.scalar_at(var, p, tri).unwrap_or(0.0)
                    })
                    .collect(),
            )
        }
        None => None,
    };
    Ok(SampleOutput { set, values })
}

/// `WIDTHxHEIGHT`.
pub fn parse_size(s: &str) -> Result<(u32, u32), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("{s:?} is not WIDTHxHEIGHT"))?;
    let w = w.trim().parse().map_err(|_| format!("bad width in {s:?}"))?;
    let h = h.trim().parse().map_err(|_| format!("bad height in {s:?}"))?;
    Ok((w, h))
}

/// `x,y,z`.
pub fn parse_vec3(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| format!("{s:?} is not x,y,z"))?;
    <[f64; 3]>::try_from(parts).map_err(|_| format!("{s:?} needs exactly three components"))
}

/// Camera for a render: an explicit camera wins, then the scene's; without
/// either the scene bounds are framed from a fixed oblique direction.
/// `size` overrides the image size.
pub fn resolve_camera(explicit: Option<Camera>, scene: &abr_core::scene::Scene, size: Option<(u32, u32)>) -> Camera {
    let mut camera = explicit.or_else(|| scene.camera().copied()).unwrap_or_else(|| {
        let (w, h) = size.unwrap_or((1024, 1024));
        Camera::framing(
            &scene.bounds(),
            [0.4, 0.6, 1.0].into(),
            [0.0, 1.0, 0.0].into(),
            40.0,
            w,
            h,
        )
    });
    if let Some((w, h)) = size {
        camera.width = w;
        camera.height = h;
    }
    camera
}
