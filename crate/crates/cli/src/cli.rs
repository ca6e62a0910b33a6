use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use abr_core::assetlib::{AssetKind, AssetLibrary, AssetMetadata, AssetQuery, IntendedUse, UseAtom, LIBRARY_ENV};
use abr_core::linesynth::SynthesisParams;
use abr_core::mesh::{
    bake_normal_map, build_lod_chain, decimate, orient_mesh, read_obj, unwrap_uv_atlas, write_obj, LodOptions, Vec3,
    DEFAULT_BAKE_RESOLUTION,
};
use abr_core::renderer::{render_scene_with, Camera, RenderOptions};
use abr_core::scene::{load_data_object, validate_scene, DataFormat, Scene, SceneFile};
use abr_core::texture::{crop, make_normal_map, Rect, DEFAULT_NORMAL_STRENGTH};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::ops::{self, ColormapFormat, Method, OpError, SampleRequest, SwatchOut};
use crate::{JobResult, JobStatus, Timing};

#[derive(Debug, Parser)]
#[command(
    name = "abr",
    version,
    about = "Turn scanned artifacts into visualization assets and render layered scenes"
)]
struct Cli {
    /// Print a machine-readable job result instead of human output.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Extract the prominent colors of an image.
    Palette {
        image: PathBuf,
        /// Number of swatches (default 6).
        #[arg(long)]
        count: Option<usize>,
        /// Also write the swatches as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a Lab colormap and export it as XML, a PNG strip or JSON.
    Colormap {
        /// Control colors as #rrggbb, dark end first.
        colors: Vec<String>,
        /// Swatch JSON from `palette --out`, ordered dark to light.
        #[arg(long, conflicts_with = "colors")]
        palette: Option<PathBuf>,
        /// Control positions, comma separated; evenly spaced by default.
        #[arg(long, value_delimiter = ',')]
        positions: Option<Vec<f64>>,
        #[arg(long, default_value = "colormap")]
        name: String,
        #[arg(long)]
        out: PathBuf,
        /// Defaults to the output extension.
        #[arg(long, value_enum)]
        format: Option<ColormapFormat>,
    },
    /// Derive a tangent-space normal map from an image's luminance.
    Normalmap {
        image: PathBuf,
        #[arg(long, default_value_t = DEFAULT_NORMAL_STRENGTH)]
        strength: f64,
        /// Crop first: x,y,width,height.
        #[arg(long, value_delimiter = ',', num_args = 4)]
        crop: Option<Vec<u32>>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Synthesize a long, seamlessly looping line texture.
    Synthesize {
        image: PathBuf,
        /// Output rows (default 2048).
        #[arg(long)]
        height: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        jump_probability: Option<f64>,
        #[arg(long)]
        min_quality: Option<f64>,
        #[arg(long)]
        min_jump_size: Option<usize>,
        /// Output PNG; the synthesis record goes next to it as JSON.
        #[arg(long)]
        out: PathBuf,
    },
    /// Glyph mesh preparation.
    #[command(subcommand)]
    Mesh(MeshCommand),
    /// Sample glyph positions on a mesh or inside a volume.
    Sample {
        /// Data file (OBJ, CSV, polyline or volume JSON).
        data: Option<PathBuf>,
        /// A built-in data object instead of a file.
        #[arg(long, conflicts_with = "data")]
        builtin: Option<String>,
        #[arg(long, value_enum)]
        method: Method,
        #[arg(long)]
        spacing: Option<f64>,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Density variable; its value is also written per sample.
        #[arg(long)]
        variable: Option<String>,
        /// CSV (x,y,z[,variable]) or JSON by extension.
        #[arg(long)]
        out: PathBuf,
    },
    /// Asset library management.
    Asset(AssetArgs),
    /// Render a scene file to PNG.
    Render {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Camera JSON overriding the scene's camera.
        #[arg(long)]
        camera: Option<PathBuf>,
        /// Overrides the scene seed.
        #[arg(long)]
        seed: Option<u64>,
        /// WIDTHxHEIGHT.
        #[arg(long, value_parser = ops::parse_size)]
        size: Option<(u32, u32)>,
        /// Worker threads; the image does not depend on it.
        #[arg(long)]
        threads: Option<usize>,
        /// Write view depth as little-endian f32 plus a JSON header.
        #[arg(long)]
        depth: Option<PathBuf>,
        /// Write per-pixel layer ids as little-endian u16.
        #[arg(long)]
        ids: Option<PathBuf>,
        #[arg(long, env = LIBRARY_ENV)]
        library: Option<PathBuf>,
    },
    /// Serve the REST API.
    Serve {
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        #[arg(long, env = LIBRARY_ENV)]
        library: Option<PathBuf>,
        /// Allowed browser origin; any origin when omitted.
        #[arg(long)]
        cors_origin: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
enum MeshCommand {
    /// Rotate a scan into the canonical frame (forward +Z, up +Y).
    Orient {
        input: PathBuf,
        #[arg(long, default_value = "0,0,1", value_parser = ops::parse_vec3)]
        forward: [f64; 3],
        #[arg(long, default_value = "0,1,0", value_parser = ops::parse_vec3)]
        up: [f64; 3],
        #[arg(long)]
        out: PathBuf,
    },
    /// Simplify to a target vertex count.
    Decimate {
        input: PathBuf,
        #[arg(long)]
        target: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Bake the original's normals into a low-poly mesh's UV space.
    Bake {
        original: PathBuf,
        lod: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BAKE_RESOLUTION)]
        resolution: u32,
        #[arg(long)]
        out: PathBuf,
        /// Where to write the low-poly mesh when it had to be unwrapped.
        #[arg(long)]
        lod_out: Option<PathBuf>,
    },
    /// Build a glyph asset: orientation, LOD chain, UV atlases and normal maps.
    Lod {
        input: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "5000,500,100")]
        targets: Vec<usize>,
        #[arg(long, default_value_t = DEFAULT_BAKE_RESOLUTION)]
        resolution: u32,
        #[arg(long, value_parser = ops::parse_vec3)]
        forward: Option<[f64; 3]>,
        #[arg(long, value_parser = ops::parse_vec3)]
        up: Option<[f64; 3]>,
        #[arg(long)]
        name: Option<String>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct AssetArgs {
    #[arg(long, env = LIBRARY_ENV, global = true)]
    library: Option<PathBuf>,
    #[command(subcommand)]
    command: AssetCommand,
}

#[derive(Debug, Subcommand)]
enum AssetCommand {
    /// Add a file or directory to the library.
    Register {
        path: PathBuf,
        #[arg(long)]
        kind: String,
        #[arg(long)]
        name: Option<String>,
        /// Intended use such as line/magnitude; repeatable.
        #[arg(long = "use")]
        uses: Vec<String>,
        #[arg(long)]
        material: Option<String>,
        #[arg(long)]
        description: Option<String>,
    },
    /// List assets matching every given filter.
    Ls {
        #[arg(long)]
        kind: Option<String>,
        /// Use tag such as line or magnitude; repeatable.
        #[arg(long = "use")]
        uses: Vec<String>,
        #[arg(long)]
        material: Option<String>,
        #[arg(long)]
        text: Option<String>,
    },
    /// Re-hash an asset's payload.
    Verify { id: String },
}

/// What a successful command produced.
#[derive(Default)]
struct Outcome {
    payload: Vec<String>,
    warnings: Vec<String>,
    data: Option<serde_json::Value>,
    /// Human-readable standard output.
    text: String,
}

impl Outcome {
    fn wrote(mut self, path: &Path) -> Self {
        self.payload.push(path.display().to_string());
        self
    }
}

/// Runs the command line and returns the process exit code: 0 on success,
/// 1 when the operation fails, 2 for usage errors.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let start = Instant::now();
    let result = execute(cli.command);
    let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    match result {
        Ok(out) => {
            if cli.json {
                let job = JobResult {
                    status: JobStatus::Ok,
                    payload: out.payload,
                    diagnostics: Vec::new(),
                    warnings: out.warnings,
                    timing: Timing { elapsed_ms },
                    data: out.data,
                };
                emit(&format!(
                    "{}\n",
                    serde_json::to_string_pretty(&job).expect("job serializes")
                ));
            } else {
                for w in &out.warnings {
                    eprintln!("warning: {w}");
                }
                emit(&out.text);
            }
            0
        }
        Err(e) => {
            if cli.json {
                emit(&format!(
                    "{}\n",
                    serde_json::to_string_pretty(&JobResult::failed(&e, elapsed_ms)).expect("job serializes")
                ));
            } else {
                eprintln!("error: {}", e.message);
                for d in &e.details {
                    eprintln!("  {d}");
                }
            }
            1
        }
    }
}

/// Writes to standard output; a closed pipe (`abr ... | head`) is not an error.
fn emit(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes()).and_then(|_| out.flush());
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), OpError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| OpError::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| OpError::new(crate::ErrorCode::Io, format!("{}: {e}", path.display())))
}

fn to_json<T: serde::Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(v).expect("serializable");
    s.push(b'\n');
    s
}

fn read_mesh(path: &Path) -> Result<abr_core::mesh::TriMesh, OpError> {
    if !path.exists() {
        return Err(OpError::io(path, "no such file"));
    }
    Ok(read_obj(path)?)
}

fn open_library(path: Option<PathBuf>) -> Result<AssetLibrary, OpError> {
    let root =
        path.ok_or_else(|| OpError::invalid(format!("no asset library: pass --library or set {LIBRARY_ENV}")))?;
    Ok(AssetLibrary::open(root)?)
}

fn execute(command: Command) -> Result<Outcome, OpError> {
    match command {
        Command::Palette { image, count, out } => {
            let img = ops::open_image(&image)?;
            let swatches = ops::palette(&img.to_rgb(), count)?;
            let mut o = Outcome {
                text: swatches.iter().map(|s| format!("{}\n", s.hex)).collect(),
                data: Some(serde_json::to_value(&swatches).expect("swatches serialize")),
                ..Default::default()
            };
            if let Some(out) = out {
                write(&out, &to_json(&swatches))?;
                o = o.wrote(&out);
            }
            Ok(o)
        }
        Command::Colormap {
            colors,
            palette,
            positions,
            name,
            out,
            format,
        } => {
            let map = match palette {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).map_err(|e| OpError::io(&p, e))?;
                    let swatches: Vec<SwatchOut> =
                        serde_json::from_str(&text).map_err(|e| OpError::invalid(format!("{}: {e}", p.display())))?;
                    ops::colormap_from_swatches(&name, &swatches)?
                }
                None => ops::colormap_from_hex(&name, &colors, positions.as_deref())?,
            };
            let format = format.or_else(|| ColormapFormat::from_path(&out)).ok_or_else(|| {
                OpError::invalid("cannot tell the export format; use --format or a .xml/.png/.json name")
            })?;
            write(&out, &ops::export(&map, format)?)?;
            Ok(Outcome {
                text: format!("wrote {} ({} control points)\n", out.display(), map.points().len()),
                ..Default::default()
            }
            .wrote(&out))
        }
        Command::Normalmap {
            image,
            strength,
            crop: rect,
            out,
        } => {
            let mut img = ops::open_image(&image)?;
            if let Some(r) = rect {
                img = crop(&img, Rect::new(r[0], r[1], r[2], r[3]))?;
            }
            let map = make_normal_map(&img, strength)?;
            write(&out, &map.encode_png())?;
            Ok(Outcome {
                text: format!("wrote {}\n", out.display()),
                ..Default::default()
            }
            .wrote(&out))
        }
        Command::Synthesize {
            image,
            height,
            seed,
            jump_probability,
            min_quality,
            min_jump_size,
            out,
        } => {
            let d = SynthesisParams::default();
            let params = SynthesisParams {
                jump_probability: jump_probability.unwrap_or(d.jump_probability),
                min_quality: min_quality.or(d.min_quality),
                min_jump_size: min_jump_size.unwrap_or(d.min_jump_size),
                output_height: height.unwrap_or(d.output_height),
                seed,
            };
            let src = ops::open_image(&image)?;
            let (img, record) = ops::synthesize(&src, &params)?;
            write(&out, &img.encode_png())?;
            let record_path = out.with_extension("json");
            write(&record_path, &to_json(&record))?;
            Ok(Outcome {
                text: format!("wrote {} ({} rows)\n", out.display(), img.height()),
                data: Some(serde_json::to_value(&record).expect("record serializes")),
                ..Default::default()
            }
            .wrote(&out)
            .wrote(&record_path))
        }
        Command::Mesh(m) => mesh(m),
        Command::Sample {
            data,
            builtin,
            method,
            spacing,
            count,
            seed,
            variable,
            out,
        } => {
            let object = match (data, builtin) {
                (Some(path), _) => {
                    if !path.exists() {
                        return Err(OpError::io(&path, "no such file"));
                    }
                    load_data_object(&path, None::<DataFormat>)?
                }
                (None, Some(name)) => abr_core::fixtures::builtin_data(&name).ok_or_else(|| {
                    OpError::new(
                        crate::ErrorCode::NotFound,
                        format!("unknown builtin data object {name:?}"),
                    )
                })?,
                (None, None) => return Err(OpError::invalid("give a data file or --builtin")),
            };
            let req = SampleRequest {
                method,
                spacing,
                count,
                seed,
                variable: variable.clone(),
            };
            let samples = ops::sample(&object, &req)?;
            let is_json = out.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
            let bytes = if is_json {
                to_json(&samples)
            } else {
                samples.to_csv(variable.as_deref()).into_bytes()
            };
            write(&out, &bytes)?;
            Ok(Outcome {
                text: format!("wrote {} samples to {}\n", samples.set.len(), out.display()),
                data: Some(json!({ "count": samples.set.len(), "record": samples.set.record })),
                ..Default::default()
            }
            .wrote(&out))
        }
        Command::Asset(a) => asset(a),
        Command::Render {
            scene,
            out,
            camera,
            seed,
            size,
            threads,
            depth,
            ids,
            library,
        } => {
            let file = SceneFile::read(&scene)?;
            let base = scene.parent().unwrap_or(Path::new("."));
            let lib = library.map(AssetLibrary::open).transpose()?;
            let loaded = Scene::load(&file, base, lib.as_ref())?;
            let diags = validate_scene(&loaded);
            if !diags.is_empty() {
                return Err(abr_core::scene::SceneError::Invalid(diags).into());
            }
            let camera = match camera {
                Some(p) => {
                    let text = std::fs::read_to_string(&p).map_err(|e| OpError::io(&p, e))?;
                    Some(
                        serde_json::from_str::<Camera>(&text)
                            .map_err(|e| OpError::invalid(format!("{}: {e}", p.display())))?,
                    )
                }
                None => None,
            };
            let camera = ops::resolve_camera(camera, &loaded, size);
            let seed = seed.unwrap_or(loaded.seed());
            let output = render_scene_with(&loaded, &camera, seed, &RenderOptions { threads })?;
            write(&out, &output.encode_png())?;
            let mut o = Outcome::default().wrote(&out);
            if let Some(d) = depth {
                output.save_depth(&d).map_err(|e| OpError::io(&d, e))?;
                o = o.wrote(&d).wrote(&d.with_extension("json"));
            }
            if let Some(p) = ids {
                let bytes: Vec<u8> = output.ids.iter().flat_map(|v| v.to_le_bytes()).collect();
                write(&p, &bytes)?;
                o = o.wrote(&p);
            }
            let layers: Vec<_> = loaded
                .layers()
                .iter()
                .zip(&output.layer_pixels)
                .map(|(l, n)| json!({ "id": l.id, "pixels": n }))
                .collect();
            o.text = format!("wrote {} ({}x{})\n", out.display(), camera.width, camera.height);
            o.data = Some(json!({ "width": camera.width, "height": camera.height, "seed": seed, "layers": layers }));
            Ok(o)
        }
        Command::Serve {
            port,
            host,
            library,
            cors_origin,
        } => {
            let lib = library.map(AssetLibrary::open).transpose()?;
            let rt =
                tokio::runtime::Runtime::new().map_err(|e| OpError::new(crate::ErrorCode::Internal, e.to_string()))?;
            rt.block_on(crate::service::serve(&host, port, lib, cors_origin))
                .map_err(|e| OpError::new(crate::ErrorCode::Io, e.to_string()))?;
            Ok(Outcome::default())
        }
    }
}

fn mesh(command: MeshCommand) -> Result<Outcome, OpError> {
    match command {
        MeshCommand::Orient {
            input,
            forward,
            up,
            out,
        } => {
            let m = read_mesh(&input)?;
            let (oriented, orientation) = orient_mesh(&m, Vec3::from(forward), Vec3::from(up))?;
            write_obj(&oriented, &out)?;
            let q = orientation.rotation.quaternion();
            Ok(Outcome {
                text: format!("wrote {}\n", out.display()),
                data: Some(json!({ "orientation": orientation, "quaternion": [q.w, q.i, q.j, q.k] })),
                ..Default::default()
            }
            .wrote(&out))
        }
        MeshCommand::Decimate { input, target, out } => {
            let m = read_mesh(&input)?;
            let r = decimate(&m, target)?;
            write_obj(&r.mesh, &out)?;
            Ok(Outcome {
                text: format!("wrote {} ({} vertices)\n", out.display(), r.mesh.vertex_count()),
                warnings: r.warnings,
                data: Some(json!({ "vertices": r.mesh.vertex_count(), "reachedTarget": r.reached_target })),
                ..Default::default()
            }
            .wrote(&out))
        }
        MeshCommand::Bake {
            original,
            lod,
            resolution,
            out,
            lod_out,
        } => {
            let orig = read_mesh(&original)?;
            let mut low = read_mesh(&lod)?;
            let mut o = Outcome::default();
            if low.uvs.is_none() {
                low = unwrap_uv_atlas(&low, resolution).mesh;
                let path = lod_out.unwrap_or_else(|| out.with_extension("obj"));
                write_obj(&low, &path)?;
                o.warnings.push(format!(
                    "{} had no UVs; wrote an unwrapped copy to {}",
                    lod.display(),
                    path.display()
                ));
                o = o.wrote(&path);
            }
            let map = bake_normal_map(&orig, &low, resolution)?;
            write(&out, &map.encode_png())?;
            o.text = format!("wrote {}\n", out.display());
            Ok(o.wrote(&out))
        }
        MeshCommand::Lod {
            input,
            targets,
            resolution,
            forward,
            up,
            name,
            out,
        } => {
            let mut m = read_mesh(&input)?;
            let mut orientation = None;
            if forward.is_some() || up.is_some() {
                let (oriented, o) = orient_mesh(
                    &m,
                    Vec3::from(forward.unwrap_or([0.0, 0.0, 1.0])),
                    Vec3::from(up.unwrap_or([0.0, 1.0, 0.0])),
                )?;
                m = oriented;
                orientation = Some(o);
            }
            let name = name.unwrap_or_else(|| {
                input
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "glyph".into())
            });
            let mut build = build_lod_chain(&name, &m, &LodOptions { targets, resolution })?;
            if let Some(o) = orientation {
                build.asset.orientation = o;
            }
            let manifest = build.asset.save(&out)?;
            let levels: Vec<_> = build
                .asset
                .lods
                .iter()
                .map(|l| json!({ "target": l.target, "vertexCount": l.vertex_count }))
                .collect();
            let mut text = format!("wrote {}\n", manifest.display());
            for l in &build.asset.lods {
                text.push_str(&format!("  target {:>6}: {} vertices\n", l.target, l.vertex_count));
            }
            Ok(Outcome {
                text,
                warnings: build.warnings,
                data: Some(json!({ "levels": levels })),
                ..Default::default()
            }
            .wrote(&manifest))
        }
    }
}

fn parse_kind(s: &str) -> Result<AssetKind, OpError> {
    Ok(s.parse::<AssetKind>()?)
}

fn asset(args: AssetArgs) -> Result<Outcome, OpError> {
    let lib = open_library(args.library)?;
    match args.command {
        AssetCommand::Register {
            path,
            kind,
            name,
            uses,
            material,
            description,
        } => {
            let kind = parse_kind(&kind)?;
            let intended_use = uses
                .iter()
                .map(|u| u.parse::<IntendedUse>())
                .collect::<Result<Vec<_>, _>>()?;
            let name = name.unwrap_or_else(|| {
                path.file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default()
            });
            if !path.exists() {
                return Err(OpError::io(&path, "no such file or directory"));
            }
            let record = lib.register_path(
                &path,
                kind,
                AssetMetadata {
                    name,
                    material_type: material,
                    intended_use,
                    description,
                },
            )?;
            Ok(Outcome {
                text: format!("{}\n", record.id),
                data: Some(serde_json::to_value(&record).expect("record serializes")),
                ..Default::default()
            })
        }
        AssetCommand::Ls {
            kind,
            uses,
            material,
            text,
        } => {
            let query = AssetQuery {
                kind: kind.as_deref().map(parse_kind).transpose()?,
                use_tags: uses.iter().map(|u| u.parse::<UseAtom>()).collect::<Result<_, _>>()?,
                material_type: material,
                text,
            };
            let records = lib.query(&query)?;
            let mut out = String::new();
            for r in &records {
                let uses: Vec<String> = r.metadata.intended_use.iter().map(ToString::to_string).collect();
                out.push_str(&format!(
                    "{}  {:<12} {}  [{}]\n",
                    r.id,
                    r.kind.as_str(),
                    r.metadata.name,
                    uses.join(", ")
                ));
            }
            Ok(Outcome {
                text: out,
                data: Some(serde_json::to_value(&records).expect("records serialize")),
                ..Default::default()
            })
        }
        AssetCommand::Verify { id } => {
            let r = lib.verify(&id)?;
            Ok(Outcome {
                text: format!("{} ok ({})\n", r.id, r.content_hash),
                data: Some(serde_json::to_value(&r).expect("record serializes")),
                ..Default::default()
            })
        }
    }
}
