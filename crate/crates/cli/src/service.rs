//! REST adapter over the same operations as the command line.
//!
//! Bodies are JSON; images and other binary payloads travel as base64
//! strings. Failures return `{code, message, details}` with a matching
//! HTTP status. `POST /render` answers with the PNG bytes directly.

use std::path::Path;
use std::sync::Arc;

use abr_core::assetlib::{AssetKind, AssetLibrary, AssetMetadata, AssetQuery, AssetRecord, UseAtom};
use abr_core::color::ColorMap;
use abr_core::linesynth::SynthesisParams;
use abr_core::mesh::{build_lod_chain, orient_mesh, parse_obj, to_obj_string, GlyphOrientation, LodOptions, Vec3};
use abr_core::renderer::{render_scene_with, Camera, RenderOptions};
use abr_core::scene::{load_data_object, validate_scene, DataObject, Scene, SceneFile};
use abr_core::texture::{crop, make_normal_map, tile_preview, Rect, TextureImage, DEFAULT_NORMAL_STRENGTH};
use axum::body::Bytes;
use axum::extract::{Path as UrlPath, RawQuery, State};
use axum::http::{header, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tower_http::cors::{AllowOrigin, CorsLayer};

use crate::ops::{self, ColorSample, ColormapFormat, ErrorCode, OpError, SampleOutput, SampleRequest, SwatchOut};

pub struct AppState {
    pub library: Option<AssetLibrary>,
}

pub struct ApiError(pub OpError);

impl From<OpError> for ApiError {
    fn from(e: OpError) -> Self {
        Self(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = match self.0.code {
            ErrorCode::InvalidInput => StatusCode::BAD_REQUEST,
            ErrorCode::NotFound => StatusCode::NOT_FOUND,
            ErrorCode::Validation => StatusCode::UNPROCESSABLE_ENTITY,
            ErrorCode::Integrity => StatusCode::CONFLICT,
            ErrorCode::Io | ErrorCode::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        };
        (status, Json(&self.0)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn parse<T: DeserializeOwned>(body: &[u8]) -> Result<T, OpError> {
    serde_json::from_slice(body).map_err(|e| OpError::invalid(format!("request body: {e}")))
}

fn unbase64(field: &str, s: &str) -> Result<Vec<u8>, OpError> {
    B64.decode(s.trim())
        .map_err(|e| OpError::invalid(format!("{field}: not base64: {e}")))
}

fn image_field(s: &str) -> Result<TextureImage, OpError> {
    ops::decode_image(&unbase64("image", s)?)
}

/// Runs CPU-bound work off the async executor.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, OpError> + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| OpError::new(ErrorCode::Internal, format!("worker failed: {e}")))?
        .map_err(ApiError)
}

pub fn router(state: Arc<AppState>, cors_origin: Option<&str>) -> Router {
    let origin = match cors_origin.and_then(|o| HeaderValue::from_str(o).ok()) {
        Some(o) => AllowOrigin::exact(o),
        None => AllowOrigin::any(),
    };
    let cors = CorsLayer::new()
        .allow_origin(origin)
        .allow_methods([axum::http::Method::GET, axum::http::Method::POST])
        .allow_headers([header::CONTENT_TYPE])
        .expose_headers([header::HeaderName::from_static("x-layer-pixels")]);
    Router::new()
        .route("/health", get(|| async { Json(json!({ "status": "ok" })) }))
        .route("/palette", post(palette))
        .route("/colormap/sample", post(colormap_sample))
        .route("/colormap/export", post(colormap_export))
        .route("/texture/normalmap", post(normalmap))
        .route("/texture/tile", post(tile))
        .route("/synthesize", post(synthesize))
        .route("/mesh/orient", post(mesh_orient))
        .route("/mesh/lod", post(mesh_lod))
        .route("/sample", post(sample))
        .route("/assets", get(list_assets).post(register_asset))
        .route("/assets/{id}", get(get_asset))
        .route("/render", post(render))
        .layer(cors)
        .with_state(state)
}

pub async fn serve(
    host: &str,
    port: u16,
    library: Option<AssetLibrary>,
    cors_origin: Option<String>,
) -> std::io::Result<()> {
    let app = router(Arc::new(AppState { library }), cors_origin.as_deref());
    let listener = tokio::net::TcpListener::bind((host, port)).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app).await
}

#[derive(Deserialize)]
struct PaletteRequest {
    image: String,
    #[serde(default)]
    count: Option<usize>,
}

#[derive(Serialize, Deserialize)]
pub struct PaletteResponse {
    pub swatches: Vec<SwatchOut>,
}

async fn palette(body: Bytes) -> ApiResult<Json<PaletteResponse>> {
    let req: PaletteRequest = parse(&body)?;
    blocking(move || {
        let img = image_field(&req.image)?;
        Ok(Json(PaletteResponse {
            swatches: ops::palette(&img.to_rgb(), req.count)?,
        }))
    })
    .await
}

/// A colormap given whole or as colors with optional positions.
#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct ColormapSpec {
    #[serde(default)]
    colormap: Option<ColorMap>,
    #[serde(default)]
    colors: Option<Vec<String>>,
    #[serde(default)]
    positions: Option<Vec<f64>>,
    #[serde(default)]
    name: Option<String>,
}

impl ColormapSpec {
    fn build(self) -> Result<ColorMap, OpError> {
        match (self.colormap, self.colors) {
            (Some(m), None) => Ok(m),
            (None, Some(c)) => ops::colormap_from_hex(
                self.name.as_deref().unwrap_or("colormap"),
                &c,
                self.positions.as_deref(),
            ),
            _ => Err(OpError::invalid("give exactly one of colormap or colors")),
        }
    }
}

#[derive(Deserialize)]
struct SampleColorsRequest {
    #[serde(flatten)]
    spec: ColormapSpec,
    t: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
pub struct SampleColorsResponse {
    pub samples: Vec<ColorSample>,
}

async fn colormap_sample(body: Bytes) -> ApiResult<Json<SampleColorsResponse>> {
    let req: SampleColorsRequest = parse(&body)?;
    let map = req.spec.build()?;
    Ok(Json(SampleColorsResponse {
        samples: ops::sample_colormap(&map, &req.t),
    }))
}

#[derive(Deserialize)]
struct ExportRequest {
    #[serde(flatten)]
    spec: ColormapSpec,
    format: ColormapFormat,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ExportResponse {
    pub format: ColormapFormat,
    pub content_type: String,
    /// Base64 of the exported file.
    pub data: String,
}

async fn colormap_export(body: Bytes) -> ApiResult<Json<ExportResponse>> {
    let req: ExportRequest = parse(&body)?;
    let map = req.spec.build()?;
    let bytes = ops::export(&map, req.format)?;
    Ok(Json(ExportResponse {
        format: req.format,
        content_type: req.format.content_type().into(),
        data: B64.encode(bytes),
    }))
}

#[derive(Deserialize)]
struct CropRect {
    x: u32,
    y: u32,
    width: u32,
    height: u32,
}

#[derive(Deserialize)]
struct NormalMapRequest {
    image: String,
    #[serde(default)]
    strength: Option<f64>,
    #[serde(default)]
    crop: Option<CropRect>,
}

#[derive(Serialize, Deserialize)]
pub struct ImageResponse {
    /// Base64 PNG.
    pub image: String,
}

fn cropped(image: &str, rect: Option<CropRect>) -> Result<TextureImage, OpError> {
    let img = image_field(image)?;
    match rect {
        Some(r) => Ok(crop(&img, Rect::new(r.x, r.y, r.width, r.height))?),
        None => Ok(img),
    }
}

async fn normalmap(body: Bytes) -> ApiResult<Json<ImageResponse>> {
    let req: NormalMapRequest = parse(&body)?;
    blocking(move || {
        let img = cropped(&req.image, req.crop)?;
        let map = make_normal_map(&img, req.strength.unwrap_or(DEFAULT_NORMAL_STRENGTH))?;
        Ok(Json(ImageResponse {
            image: B64.encode(map.encode_png()),
        }))
    })
    .await
}

#[derive(Deserialize)]
struct TileRequest {
    image: String,
    nx: u32,
    ny: u32,
    #[serde(default)]
    crop: Option<CropRect>,
}

async fn tile(body: Bytes) -> ApiResult<Json<ImageResponse>> {
    let req: TileRequest = parse(&body)?;
    blocking(move || {
        let img = cropped(&req.image, req.crop)?;
        Ok(Json(ImageResponse {
            image: B64.encode(tile_preview(&img, req.nx, req.ny)?.encode_png()),
        }))
    })
    .await
}

#[derive(Deserialize)]
#[serde(rename_all = "camelCase")]
struct SynthesizeRequest {
    image: String,
    #[serde(default)]
    jump_probability: Option<f64>,
    #[serde(default)]
    min_quality: Option<f64>,
    #[serde(default)]
    min_jump_size: Option<usize>,
    #[serde(default)]
    output_height: Option<usize>,
    #[serde(default)]
    seed: u64,
}

#[derive(Serialize, Deserialize)]
pub struct SynthesizeResponse {
    pub image: String,
    pub record: abr_core::linesynth::SynthesisRecord,
}

async fn synthesize(body: Bytes) -> ApiResult<Json<SynthesizeResponse>> {
    let req: SynthesizeRequest = parse(&body)?;
    blocking(move || {
        let d = SynthesisParams::default();
        let params = SynthesisParams {
            jump_probability: req.jump_probability.unwrap_or(d.jump_probability),
            min_quality: req.min_quality.or(d.min_quality),
            min_jump_size: req.min_jump_size.unwrap_or(d.min_jump_size),
            output_height: req.output_height.unwrap_or(d.output_height),
            seed: req.seed,
        };
        let (img, record) = ops::synthesize(&image_field(&req.image)?, &params)?;
        Ok(Json(SynthesizeResponse {
            image: B64.encode(img.encode_png()),
            record,
        }))
    })
    .await
}

#[derive(Deserialize)]
struct OrientRequest {
    obj: String,
    #[serde(default = "plus_z")]
    forward: [f64; 3],
    #[serde(default = "plus_y")]
    up: [f64; 3],
}

fn plus_z() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

fn plus_y() -> [f64; 3] {
    [0.0, 1.0, 0.0]
}

#[derive(Serialize, Deserialize)]
pub struct OrientResponse {
    pub obj: String,
    pub orientation: GlyphOrientation,
}

async fn mesh_orient(body: Bytes) -> ApiResult<Json<OrientResponse>> {
    let req: OrientRequest = parse(&body)?;
    blocking(move || {
        let mesh = parse_obj(&req.obj)?;
        let (m, orientation) = orient_mesh(&mesh, Vec3::from(req.forward), Vec3::from(req.up))?;
        Ok(Json(OrientResponse {
            obj: to_obj_string(&m),
            orientation,
        }))
    })
    .await
}

#[derive(Deserialize)]
struct LodRequest {
    obj: String,
    #[serde(default)]
    name: Option<String>,
    #[serde(default)]
    targets: Option<Vec<usize>>,
    #[serde(default)]
    resolution: Option<u32>,
    #[serde(default)]
    forward: Option<[f64; 3]>,
    #[serde(default)]
    up: Option<[f64; 3]>,
    /// Register the finished glyph in the library with this metadata.
    #[serde(default)]
    register: Option<AssetMetadata>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LodLevelOut {
    pub target: usize,
    pub vertex_count: usize,
    pub obj: String,
    /// Base64 PNG.
    pub normal_map: String,
}

#[derive(Serialize, Deserialize)]
pub struct LodResponse {
    pub orientation: GlyphOrientation,
    pub levels: Vec<LodLevelOut>,
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub asset: Option<AssetRecord>,
}

async fn mesh_lod(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<Json<LodResponse>> {
    let req: LodRequest = parse(&body)?;
    blocking(move || {
        let mut mesh = parse_obj(&req.obj)?;
        let mut orientation = GlyphOrientation::identity();
        if req.forward.is_some() || req.up.is_some() {
            let (m, o) = orient_mesh(
                &mesh,
                Vec3::from(req.forward.unwrap_or(plus_z())),
                Vec3::from(req.up.unwrap_or(plus_y())),
            )?;
            mesh = m;
            orientation = o;
        }
        let defaults = LodOptions::default();
        let options = LodOptions {
            targets: req.targets.unwrap_or(defaults.targets),
            resolution: req.resolution.unwrap_or(defaults.resolution),
        };
        let name = req.name.unwrap_or_else(|| "glyph".into());
        let mut build = build_lod_chain(&name, &mesh, &options)?;
        build.asset.orientation = orientation;
        let asset = match req.register {
            Some(meta) => {
                let lib = library(&state)?;
                let dir = tempfile::tempdir().map_err(|e| OpError::new(ErrorCode::Io, e.to_string()))?;
                build.asset.save(dir.path())?;
                Some(lib.register_path(dir.path(), AssetKind::Glyph, meta)?)
            }
            None => None,
        };
        Ok(Json(LodResponse {
            orientation,
            levels: build
                .asset
                .lods
                .iter()
                .map(|l| LodLevelOut {
                    target: l.target,
                    vertex_count: l.vertex_count,
                    obj: to_obj_string(&l.mesh),
                    normal_map: B64.encode(l.normal_map.encode_png()),
                })
                .collect(),
            warnings: build.warnings,
            asset,
        }))
    })
    .await
}

#[derive(Deserialize)]
struct FilePart {
    name: String,
    /// Base64 contents.
    data: String,
}

/// Data for sampling: a builtin object, or uploaded files (the first is
/// the one loaded; the rest are sidecars such as raw volume data).
#[derive(Deserialize)]
struct DataSpec {
    #[serde(default)]
    builtin: Option<String>,
    #[serde(default)]
    files: Vec<FilePart>,
}

fn safe_name(name: &str) -> Result<&str, OpError> {
    let p = Path::new(name);
    match p.file_name().and_then(|n| n.to_str()) {
        Some(n) if n == name && !n.starts_with('.') => Ok(n),
        _ => Err(OpError::invalid(format!(
            "file name {name:?} must be a plain file name"
        ))),
    }
}

fn load_data(spec: DataSpec) -> Result<DataObject, OpError> {
    match (spec.builtin, spec.files.is_empty()) {
        (Some(name), true) => abr_core::fixtures::builtin_data(&name)
            .ok_or_else(|| OpError::new(ErrorCode::NotFound, format!("unknown builtin data object {name:?}"))),
        (None, false) => {
            let dir = tempfile::tempdir().map_err(|e| OpError::new(ErrorCode::Io, e.to_string()))?;
            for f in &spec.files {
                let bytes = unbase64(&f.name, &f.data)?;
                std::fs::write(dir.path().join(safe_name(&f.name)?), bytes)
                    .map_err(|e| OpError::new(ErrorCode::Io, e.to_string()))?;
            }
            Ok(load_data_object(&dir.path().join(&spec.files[0].name), None)?)
        }
        _ => Err(OpError::invalid("data needs exactly one of builtin or files")),
    }
}

#[derive(Deserialize)]
struct SampleBody {
    data: DataSpec,
    #[serde(flatten)]
    request: SampleRequest,
}

async fn sample(body: Bytes) -> ApiResult<Json<SampleOutput>> {
    let req: SampleBody = parse(&body)?;
    blocking(move || {
        let data = load_data(req.data)?;
        Ok(Json(ops::sample(&data, &req.request)?))
    })
    .await
}

fn library(state: &AppState) -> Result<&AssetLibrary, OpError> {
    state
        .library
        .as_ref()
        .ok_or_else(|| OpError::new(ErrorCode::NotFound, "the service has no asset library configured"))
}

/// Query string: `kind`, `use` (comma separated or repeated), `material`, `text`.
pub fn parse_asset_query(raw: Option<&str>) -> Result<AssetQuery, OpError> {
    let mut q = AssetQuery::default();
    for pair in raw.unwrap_or("").split('&').filter(|p| !p.is_empty()) {
        let (k, v) = pair.split_once('=').unwrap_or((pair, ""));
        let v = percent_decode(v);
        match k {
            "kind" => q.kind = Some(v.parse::<AssetKind>()?),
            "use" => {
                for atom in v.split(',').filter(|a| !a.is_empty()) {
                    q.use_tags.push(atom.parse::<UseAtom>()?);
                }
            }
            "material" => q.material_type = Some(v),
            "text" => q.text = Some(v),
            other => return Err(OpError::invalid(format!("unknown query parameter {other:?}"))),
        }
    }
    Ok(q)
}

fn percent_decode(s: &str) -> String {
    let bytes = s.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'+' => out.push(b' '),
            b'%' if i + 2 < bytes.len() => {
                match u8::from_str_radix(std::str::from_utf8(&bytes[i + 1..i + 3]).unwrap_or("zz"), 16) {
                    Ok(b) => {
                        out.push(b);
                        i += 2;
                    }
                    Err(_) => out.push(b'%'),
                }
            }
            b => out.push(b),
        }
        i += 1;
    }
    String::from_utf8_lossy(&out).into_owned()
}

async fn list_assets(State(state): State<Arc<AppState>>, RawQuery(raw): RawQuery) -> ApiResult<Json<Vec<AssetRecord>>> {
    let query = parse_asset_query(raw.as_deref())?;
    blocking(move || Ok(Json(library(&state)?.query(&query)?))).await
}

async fn get_asset(State(state): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> ApiResult<Json<AssetRecord>> {
    blocking(move || Ok(Json(library(&state)?.record(&id)?))).await
}

#[derive(Deserialize)]
struct RegisterRequest {
    kind: AssetKind,
    metadata: AssetMetadata,
    files: Vec<FilePart>,
}

async fn register_asset(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<(StatusCode, Json<AssetRecord>)> {
    let req: RegisterRequest = parse(&body)?;
    blocking(move || {
        let files = req
            .files
            .iter()
            .map(|f| Ok((safe_name(&f.name)?.to_string(), unbase64(&f.name, &f.data)?)))
            .collect::<Result<Vec<_>, OpError>>()?;
        let record = library(&state)?.register(files, req.kind, req.metadata)?;
        Ok((StatusCode::CREATED, Json(record)))
    })
    .await
}

#[derive(Deserialize)]
struct RenderRequest {
    scene: SceneFile,
    #[serde(default)]
    camera: Option<Camera>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    width: Option<u32>,
    #[serde(default)]
    height: Option<u32>,
}

/// Renders a scene whose data and assets are builtins or library ids;
/// file paths are refused because they would read the server's disk.
async fn render(State(state): State<Arc<AppState>>, body: Bytes) -> ApiResult<Response> {
    let req: RenderRequest = parse(&body)?;
    blocking(move || {
        let file = &req.scene;
        let paths: Vec<String> = file
            .data
            .iter()
            .filter(|d| d.path.is_some())
            .map(|d| d.id.clone())
            .chain(file.assets.iter().filter(|a| a.path.is_some()).map(|a| a.id.clone()))
            .collect();
        if !paths.is_empty() {
            let mut e = OpError::invalid("scene sources must be builtins or library assets, not file paths");
            e.details = paths;
            return Err(e);
        }
        let scene = Scene::load(file, Path::new("."), state.library.as_ref())?;
        let diags = validate_scene(&scene);
        if !diags.is_empty() {
            return Err(abr_core::scene::SceneError::Invalid(diags).into());
        }
        let size = match (req.width, req.height) {
            (None, None) => None,
            (w, h) => {
                let base = req.camera.or(scene.camera().copied());
                Some((
                    w.or(base.map(|c| c.width)).unwrap_or(1024),
                    h.or(base.map(|c| c.height)).unwrap_or(1024),
                ))
            }
        };
        let camera = ops::resolve_camera(req.camera, &scene, size);
        let out = render_scene_with(
            &scene,
            &camera,
            req.seed.unwrap_or(scene.seed()),
            &RenderOptions::default(),
        )?;
        let layers: Vec<Value> = out.layer_pixels.iter().map(|n| json!(n)).collect();
        let mut resp = ([(header::CONTENT_TYPE, "image/png")], out.encode_png()).into_response();
        if let Ok(v) = HeaderValue::from_str(&Value::Array(layers).to_string()) {
            resp.headers_mut().insert("x-layer-pixels", v);
        }
        Ok(resp)
    })
    .await
}
