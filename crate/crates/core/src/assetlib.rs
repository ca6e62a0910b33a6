//! Content-addressed library of artifacts and vis assets.
//!
//! Layout under the library root:
//!
//! ```text
//! index.json              every record, ordered by (created, id)
//! objects/<id>/meta.json  the record for one asset
//! objects/<id>/<files>    payload files in their native formats
//! staging/                scratch space for in-flight registrations
//! ```
//!
//! An asset's id is derived from its kind, metadata and payload hash, so
//! registering identical content twice returns the existing record.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Mutex;

use chrono::{DateTime, SecondsFormat, Utc};
use image::GrayImage;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::color::{from_paraview_xml, ColorMap};
use crate::mesh::{GlyphAsset, GLYPH_MANIFEST};
use crate::texture::{NormalMap, TextureImage, TextureSet};

pub const INDEX_FILE: &str = "index.json";
pub const META_FILE: &str = "meta.json";
pub const LIBRARY_ENV: &str = "ABR_LIBRARY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum AssetKind {
    Colormap,
    Texture,
    TextureSet,
    Glyph,
    LineTexture,
    AlphaMask,
    NormalMap,
}

impl AssetKind {
    pub const ALL: [AssetKind; 7] = [
        AssetKind::Colormap,
        AssetKind::Texture,
        AssetKind::TextureSet,
        AssetKind::Glyph,
        AssetKind::LineTexture,
        AssetKind::AlphaMask,
        AssetKind::NormalMap,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AssetKind::Colormap => "colormap",
            AssetKind::Texture => "texture",
            AssetKind::TextureSet => "textureSet",
            AssetKind::Glyph => "glyph",
            AssetKind::LineTexture => "lineTexture",
            AssetKind::AlphaMask => "alphaMask",
            AssetKind::NormalMap => "normalMap",
        }
    }
}

impl fmt::Display for AssetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AssetKind {
    type Err = AssetError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        AssetKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| AssetError::Invalid(format!("unknown asset kind {s:?}")))
    }
}

/// One half of an intended-use tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UseAtom {
    Point,
    Line,
    Surface,
    Volume,
    Identity,
    Magnitude,
}

impl FromStr for UseAtom {
    type Err = AssetError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        serde_json::from_value(serde_json::Value::String(s.to_ascii_lowercase()))
            .map_err(|_| AssetError::Invalid(format!("unknown use tag {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UseGeometry {
    Point,
    Line,
    Surface,
    Volume,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UseChannel {
    Identity,
    Magnitude,
}

/// A (geometry, channel) pair, written "line/magnitude".
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct IntendedUse {
    pub geometry: UseGeometry,
    pub channel: UseChannel,
}

impl IntendedUse {
    pub fn new(geometry: UseGeometry, channel: UseChannel) -> Self {
        Self { geometry, channel }
    }

    pub fn contains(&self, atom: UseAtom) -> bool {
        let g = match self.geometry {
            UseGeometry::Point => UseAtom::Point,
            UseGeometry::Line => UseAtom::Line,
            UseGeometry::Surface => UseAtom::Surface,
            UseGeometry::Volume => UseAtom::Volume,
        };
        let c = match self.channel {
            UseChannel::Identity => UseAtom::Identity,
            UseChannel::Magnitude => UseAtom::Magnitude,
        };
        atom == g || atom == c
    }
}

fn lower_name<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

impl fmt::Display for IntendedUse {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", lower_name(&self.geometry), lower_name(&self.channel))
    }
}

impl From<IntendedUse> for String {
    fn from(u: IntendedUse) -> Self {
        u.to_string()
    }
}

impl TryFrom<String> for IntendedUse {
    type Error = AssetError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl FromStr for IntendedUse {
    type Err = AssetError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || AssetError::Invalid(format!("use tag {s:?} must look like line/magnitude"));
        let (g, c) = s.split_once(['/', ':']).ok_or_else(bad)?;
        let geometry = serde_json::from_value(serde_json::Value::String(g.to_ascii_lowercase())).map_err(|_| bad())?;
        let channel = serde_json::from_value(serde_json::Value::String(c.to_ascii_lowercase())).map_err(|_| bad())?;
        Ok(Self { geometry, channel })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct AssetMetadata {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub material_type: Option<String>,
    pub intended_use: Vec<IntendedUse>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AssetRecord {
    pub id: String,
    pub kind: AssetKind,
    #[serde(flatten)]
    pub metadata: AssetMetadata,
    /// Payload file names inside the object directory, sorted.
    pub payload: Vec<String>,
    /// The file handed to the kind's loader.
    pub primary: String,
    pub content_hash: String,
    pub created: DateTime<Utc>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct AssetQuery {
    pub kind: Option<AssetKind>,
    /// Matches records with some intended-use pair containing every atom.
    pub use_tags: Vec<UseAtom>,
    pub material_type: Option<String>,
    pub text: Option<String>,
}

impl AssetQuery {
    pub fn matches(&self, r: &AssetRecord) -> bool {
        if self.kind.is_some_and(|k| k != r.kind) {
            return false;
        }
        if !self.use_tags.is_empty()
            && !r
                .metadata
                .intended_use
                .iter()
                .any(|u| self.use_tags.iter().all(|&a| u.contains(a)))
        {
            return false;
        }
        if let Some(m) = &self.material_type {
            if !r
                .metadata
                .material_type
                .as_deref()
                .is_some_and(|x| x.eq_ignore_ascii_case(m))
            {
                return false;
            }
        }
        if let Some(t) = &self.text {
            let t = t.to_lowercase();
            let hay = [
                Some(r.metadata.name.as_str()),
                r.metadata.material_type.as_deref(),
                r.metadata.description.as_deref(),
                Some(r.id.as_str()),
            ];
            if !hay.iter().flatten().any(|h| h.to_lowercase().contains(&t)) {
                return false;
            }
        }
        true
    }
}

/// A parsed asset payload.
#[derive(Debug, Clone)]
pub enum Asset {
    ColorMap(ColorMap),
    Texture(TextureImage),
    TextureSet(TextureSet),
    Glyph(GlyphAsset),
    LineTexture(TextureImage),
    AlphaMask(GrayImage),
    NormalMap(NormalMap),
}

impl Asset {
    pub fn kind(&self) -> AssetKind {
        match self {
            Asset::ColorMap(_) => AssetKind::Colormap,
            Asset::Texture(_) => AssetKind::Texture,
            Asset::TextureSet(_) => AssetKind::TextureSet,
            Asset::Glyph(_) => AssetKind::Glyph,
            Asset::LineTexture(_) => AssetKind::LineTexture,
            Asset::AlphaMask(_) => AssetKind::AlphaMask,
            Asset::NormalMap(_) => AssetKind::NormalMap,
        }
    }

    /// Single textures become one-entry sets so layers treat them uniformly.
    pub fn as_texture_set(&self) -> Option<TextureSet> {
        match self {
            Asset::TextureSet(s) => Some(s.clone()),
            Asset::Texture(t) | Asset::LineTexture(t) => Some(TextureSet::single("texture", t.clone())),
            _ => None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AssetError {
    #[error("asset {0} not found")]
    NotFound(String),
    #[error("asset {id} failed its integrity check: {message}")]
    Integrity { id: String, message: String },
    #[error("payload is not a valid {kind}: {reason}")]
    KindMismatch { kind: AssetKind, reason: String },
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

fn io_err(path: &Path, e: impl fmt::Display) -> AssetError {
    AssetError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn has_ext(name: &str, exts: &[&str]) -> bool {
    Path::new(name)
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| exts.iter().any(|x| e.eq_ignore_ascii_case(x)))
}

const IMAGE_EXTS: &[&str] = &["png", "jpg", "jpeg"];

/// Picks the file a kind's loader starts from.
fn primary_file(kind: AssetKind, names: &[String]) -> Result<String, AssetError> {
    let find = |pred: &dyn Fn(&str) -> bool, what: &str| {
        names
            .iter()
            .find(|n| pred(n))
            .cloned()
            .ok_or_else(|| AssetError::KindMismatch {
                kind,
                reason: format!("payload has no {what}"),
            })
    };
    match kind {
        AssetKind::Colormap => find(&|n| has_ext(n, &["xml", "json"]), "colormap XML or JSON file"),
        AssetKind::TextureSet => find(&|n| n == "set.json", "set.json manifest"),
        AssetKind::Glyph => find(&|n| n == GLYPH_MANIFEST, "glyph manifest")
            .or_else(|_| find(&|n| has_ext(n, &["obj"]), "glyph manifest or OBJ mesh")),
        _ => find(&|n| has_ext(n, IMAGE_EXTS), "image"),
    }
}

/// Parses `path` (a file, or a directory for sets and glyphs) as `kind`.
pub fn load_payload(kind: AssetKind, path: &Path) -> Result<Asset, AssetError> {
    let mismatch = |e: &dyn fmt::Display| AssetError::KindMismatch {
        kind,
        reason: e.to_string(),
    };
    let image = || image::open(path).map_err(|e| mismatch(&e));
    Ok(match kind {
        AssetKind::Colormap => {
            let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
            let map = if has_ext(&path.to_string_lossy(), &["json"]) {
                serde_json::from_str::<ColorMap>(&text).map_err(|e| mismatch(&e))?
            } else {
                from_paraview_xml(&text).map_err(|e| mismatch(&e))?
            };
            Asset::ColorMap(map)
        }
        AssetKind::Texture | AssetKind::LineTexture => {
            let t = TextureImage::new(image()?.to_rgba8()).map_err(|e| mismatch(&e))?;
            if kind == AssetKind::Texture {
                Asset::Texture(t)
            } else {
                Asset::LineTexture(t)
            }
        }
        AssetKind::AlphaMask => Asset::AlphaMask(image()?.to_luma8()),
        AssetKind::NormalMap => Asset::NormalMap(NormalMap {
            pixels: image()?.to_rgb8(),
        }),
        AssetKind::TextureSet => {
            let manifest = if path.is_dir() {
                path.join("set.json")
            } else {
                path.to_path_buf()
            };
            Asset::TextureSet(TextureSet::load(&manifest).map_err(|e| mismatch(&e))?)
        }
        AssetKind::Glyph => Asset::Glyph(GlyphAsset::load(path).map_err(|e| mismatch(&e))?),
    })
}

fn hash_files(files: &[(String, Vec<u8>)]) -> String {
    let mut h = Sha256::new();
    for (name, bytes) in files {
        h.update((name.len() as u64).to_le_bytes());
        h.update(name.as_bytes());
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
    }
    hex(&h.finalize())
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn asset_id(kind: AssetKind, metadata: &AssetMetadata, content_hash: &str) -> String {
    let mut h = Sha256::new();
    h.update(kind.as_str());
    h.update([0]);
    h.update(serde_json::to_vec(metadata).expect("metadata serializes"));
    h.update([0]);
    h.update(content_hash);
    hex(&h.finalize()[..12])
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct IndexFile {
    version: u32,
    records: Vec<AssetRecord>,
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), AssetError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_err(dir, e))?;
    std::io::Write::write_all(&mut tmp, bytes).map_err(|e| io_err(path, e))?;
    tmp.as_file().sync_all().map_err(|e| io_err(path, e))?;
    tmp.persist(path).map_err(|e| io_err(path, e.error))?;
    Ok(())
}

fn sort_records(records: &mut [AssetRecord]) {
    records.sort_by(|a, b| a.created.cmp(&b.created).then_with(|| a.id.cmp(&b.id)));
}

pub struct AssetLibrary {
    root: PathBuf,
    writer: Mutex<()>,
}

impl AssetLibrary {
    /// Opens (creating if needed) a library rooted at `root`.
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, AssetError> {
        let root = root.into();
        for d in [root.join("objects"), root.join("staging")] {
            std::fs::create_dir_all(&d).map_err(|e| io_err(&d, e))?;
        }
        let lib = Self {
            root,
            writer: Mutex::new(()),
        };
        if !lib.index_path().exists() {
            let _guard = lib.writer.lock().unwrap_or_else(|p| p.into_inner());
            lib.write_index(&[])?;
        }
        Ok(lib)
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn index_path(&self) -> PathBuf {
        self.root.join(INDEX_FILE)
    }

    fn object_dir(&self, id: &str) -> PathBuf {
        self.root.join("objects").join(id)
    }

    fn read_index(&self) -> Result<Vec<AssetRecord>, AssetError> {
        let path = self.index_path();
        let text = std::fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
        let index: IndexFile = serde_json::from_str(&text).map_err(|e| io_err(&path, e))?;
        Ok(index.records)
    }

    fn write_index(&self, records: &[AssetRecord]) -> Result<(), AssetError> {
        let index = IndexFile {
            version: 1,
            records: records.to_vec(),
        };
        write_atomic(
            &self.index_path(),
            &serde_json::to_vec_pretty(&index).expect("index serializes"),
        )
    }

    /// Registers the file at `path`, or every regular file directly inside a directory.
    pub fn register_path(
        &self,
        path: &Path,
        kind: AssetKind,
        metadata: AssetMetadata,
    ) -> Result<AssetRecord, AssetError> {
        let mut files = Vec::new();
        if path.is_dir() {
            let entries = std::fs::read_dir(path).map_err(|e| io_err(path, e))?;
            for entry in entries {
                let entry = entry.map_err(|e| io_err(path, e))?;
                if entry.file_type().map_err(|e| io_err(path, e))?.is_file() {
                    let bytes = std::fs::read(entry.path()).map_err(|e| io_err(&entry.path(), e))?;
                    files.push((entry.file_name().to_string_lossy().into_owned(), bytes));
                }
            }
        } else {
            let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
            let name = path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .ok_or_else(|| AssetError::Invalid(format!("{} has no file name", path.display())))?;
            files.push((name, bytes));
        }
        self.register(files, kind, metadata)
    }

    /// Validates the payload as `kind` and stores it; identical content and
    /// metadata return the existing record.
    pub fn register(
        &self,
        mut files: Vec<(String, Vec<u8>)>,
        kind: AssetKind,
        mut metadata: AssetMetadata,
    ) -> Result<AssetRecord, AssetError> {
        if files.is_empty() {
            return Err(AssetError::KindMismatch {
                kind,
                reason: "payload is empty".into(),
            });
        }
        for (name, _) in &files {
            if name.is_empty() || name.contains(['/', '\\']) || name == META_FILE || name.starts_with('.') {
                return Err(AssetError::Invalid(format!("invalid payload file name {name:?}")));
            }
        }
        files.sort_by(|a, b| a.0.cmp(&b.0));
        if files.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(AssetError::Invalid("duplicate payload file names".into()));
        }
        metadata.intended_use.sort();
        metadata.intended_use.dedup();
        let names: Vec<String> = files.iter().map(|f| f.0.clone()).collect();
        let primary = primary_file(kind, &names)?;
        let content_hash = hash_files(&files);
        let id = asset_id(kind, &metadata, &content_hash);

        let _guard = self.writer.lock().unwrap_or_else(|p| p.into_inner());
        let dir = self.object_dir(&id);
        if dir.join(META_FILE).exists() {
            return self.read_meta(&id);
        }
        let staging = tempfile::tempdir_in(self.root.join("staging")).map_err(|e| io_err(&self.root, e))?;
        for (name, bytes) in &files {
            let p = staging.path().join(name);
            std::fs::write(&p, bytes).map_err(|e| io_err(&p, e))?;
        }
        load_payload(kind, &staging.path().join(&primary))?;
        let record = AssetRecord {
            id: id.clone(),
            kind,
            metadata,
            payload: names,
            primary,
            content_hash,
            created: now(),
        };
        let meta = staging.path().join(META_FILE);
        std::fs::write(&meta, serde_json::to_vec_pretty(&record).expect("record serializes"))
            .map_err(|e| io_err(&meta, e))?;
        let staged = staging.keep();
        if dir.exists() {
            // Leftover from an interrupted registration without meta.json.
            std::fs::remove_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        }
        std::fs::rename(&staged, &dir).map_err(|e| io_err(&dir, e))?;
        let mut records = self.read_index()?;
        records.retain(|r| r.id != id);
        records.push(record.clone());
        sort_records(&mut records);
        self.write_index(&records)?;
        Ok(record)
    }

    fn read_meta(&self, id: &str) -> Result<AssetRecord, AssetError> {
        let path = self.object_dir(id).join(META_FILE);
        let text = std::fs::read_to_string(&path).map_err(|_| AssetError::NotFound(id.to_string()))?;
        serde_json::from_str(&text).map_err(|e| AssetError::Integrity {
            id: id.to_string(),
            message: format!("unreadable metadata: {e}"),
        })
    }

    pub fn query(&self, query: &AssetQuery) -> Result<Vec<AssetRecord>, AssetError> {
        Ok(self.read_index()?.into_iter().filter(|r| query.matches(r)).collect())
    }

    pub fn all(&self) -> Result<Vec<AssetRecord>, AssetError> {
        self.read_index()
    }

    pub fn record(&self, id: &str) -> Result<AssetRecord, AssetError> {
        if !valid_id(id) {
            return Err(AssetError::NotFound(id.to_string()));
        }
        self.read_meta(id)
    }

    /// Path of the record's primary payload file.
    pub fn payload_path(&self, record: &AssetRecord) -> PathBuf {
        self.object_dir(&record.id).join(&record.primary)
    }

    pub fn verify(&self, id: &str) -> Result<AssetRecord, AssetError> {
        let record = self.record(id)?;
        let dir = self.object_dir(id);
        let mut files = Vec::new();
        for name in &record.payload {
            let p = dir.join(name);
            let bytes = std::fs::read(&p).map_err(|e| AssetError::Integrity {
                id: id.to_string(),
                message: format!("{name}: {e}"),
            })?;
            files.push((name.clone(), bytes));
        }
        let got = hash_files(&files);
        if got != record.content_hash {
            return Err(AssetError::Integrity {
                id: id.to_string(),
                message: format!("content hash {got} does not match recorded {}", record.content_hash),
            });
        }
        Ok(record)
    }

    /// Verifies the payload hash, then parses it.
    pub fn load_asset(&self, id: &str) -> Result<Asset, AssetError> {
        let record = self.verify(id)?;
        load_payload(record.kind, &self.payload_path(&record))
    }

    /// Rebuilds `index.json` from the `meta.json` files of every object.
    pub fn rebuild_index(&self) -> Result<Vec<AssetRecord>, AssetError> {
        let _guard = self.writer.lock().unwrap_or_else(|p| p.into_inner());
        let objects = self.root.join("objects");
        let mut records = Vec::new();
        for entry in std::fs::read_dir(&objects).map_err(|e| io_err(&objects, e))? {
            let entry = entry.map_err(|e| io_err(&objects, e))?;
            let id = entry.file_name().to_string_lossy().into_owned();
            match self.read_meta(&id) {
                Ok(r) if r.id == id => records.push(r),
                Ok(_) | Err(_) => log::warn!("skipping object directory {id} without valid metadata"),
            }
        }
        sort_records(&mut records);
        self.write_index(&records)?;
        Ok(records)
    }
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.len() <= 64 && id.bytes().all(|b| b.is_ascii_hexdigit())
}

/// Current time truncated to microseconds so records survive a JSON round trip unchanged.
fn now() -> DateTime<Utc> {
    let t = Utc::now();
    DateTime::parse_from_rfc3339(&t.to_rfc3339_opts(SecondsFormat::Micros, true))
        .map(|d| d.with_timezone(&Utc))
        .unwrap_or(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::color::{to_paraview_xml, LabColor};
    use crate::mesh::{primitives::icosahedron, to_obj_string};

    fn png(color: [u8; 3]) -> Vec<u8> {
        let img = image::RgbImage::from_pixel(4, 4, image::Rgb(color));
        let mut out = std::io::Cursor::new(Vec::new());
        img.write_to(&mut out, image::ImageFormat::Png).unwrap();
        out.into_inner()
    }

    fn meta(name: &str) -> AssetMetadata {
        AssetMetadata {
            name: name.into(),
            ..Default::default()
        }
    }

    fn colormap_xml() -> (ColorMap, Vec<u8>) {
        let map = ColorMap::evenly_spaced(
            "ink",
            &[LabColor::BLACK, LabColor::new(50.0, 20.0, -10.0), LabColor::WHITE],
        )
        .unwrap();
        let xml = to_paraview_xml(&map).into_bytes();
        (map, xml)
    }

    #[test]
    fn register_load_and_idempotence() {
        let dir = tempfile::tempdir().unwrap();
        let lib = AssetLibrary::open(dir.path()).unwrap();
        let (map, xml) = colormap_xml();
        let r1 = lib
            .register(vec![("ink.xml".into(), xml.clone())], AssetKind::Colormap, meta("ink"))
            .unwrap();
        assert_eq!(r1.kind, AssetKind::Colormap);
        let r2 = lib
            .register(vec![("ink.xml".into(), xml)], AssetKind::Colormap, meta("ink"))
            .unwrap();
        assert_eq!(r1, r2);
        assert_eq!(lib.all().unwrap().len(), 1);
        match lib.load_asset(&r1.id).unwrap() {
            Asset::ColorMap(m) => {
                for (a, b) in m.points().iter().zip(map.points()) {
                    assert_eq!(a.position, b.position);
                    assert!(a.color.delta_e76(b.color) < 0.5);
                }
            }
            other => panic!("{:?}", other.kind()),
        }
    }

    #[test]
    fn kind_checks() {
        let dir = tempfile::tempdir().unwrap();
        let lib = AssetLibrary::open(dir.path()).unwrap();
        let err = lib
            .register(vec![("a.png".into(), png([1, 2, 3]))], AssetKind::Glyph, meta("a"))
            .unwrap_err();
        assert!(
            matches!(
                err,
                AssetError::KindMismatch {
                    kind: AssetKind::Glyph,
                    ..
                }
            ),
            "{err}"
        );
        let err = lib
            .register(
                vec![("a.png".into(), b"not a png".to_vec())],
                AssetKind::Texture,
                meta("a"),
            )
            .unwrap_err();
        assert!(matches!(err, AssetError::KindMismatch { .. }));
        assert!(lib.all().unwrap().is_empty());
        let glyph = to_obj_string(&icosahedron()).into_bytes();
        let r = lib
            .register(vec![("ico.obj".into(), glyph)], AssetKind::Glyph, meta("ico"))
            .unwrap();
        assert!(matches!(lib.load_asset(&r.id).unwrap(), Asset::Glyph(_)));
    }

    #[test]
    fn queries_filter_and_order() {
        let dir = tempfile::tempdir().unwrap();
        let lib = AssetLibrary::open(dir.path()).unwrap();
        let obj = to_obj_string(&icosahedron()).into_bytes();
        for i in 0..3 {
            lib.register(
                vec![(format!("g{i}.obj"), obj.clone())],
                AssetKind::Glyph,
                meta(&format!("glyph {i}")),
            )
            .unwrap();
        }
        for i in 0..5u8 {
            let mut m = meta(&format!("tex {i}"));
            m.material_type = Some(if i % 2 == 0 { "ink" } else { "clay" }.into());
            if i == 4 {
                m.intended_use = vec![IntendedUse::new(UseGeometry::Line, UseChannel::Magnitude)];
            }
            lib.register(vec![("t.png".into(), png([i, 0, 0]))], AssetKind::Texture, m)
                .unwrap();
        }
        assert_eq!(lib.query(&AssetQuery::default()).unwrap().len(), 8);
        let glyphs = lib
            .query(&AssetQuery {
                kind: Some(AssetKind::Glyph),
                ..Default::default()
            })
            .unwrap();
        assert_eq!(glyphs.len(), 3);
        let tagged = lib
            .query(&AssetQuery {
                use_tags: vec![UseAtom::Line, UseAtom::Magnitude],
                ..Default::default()
            })
            .unwrap();
        assert_eq!(tagged.len(), 1);
        assert_eq!(tagged[0].metadata.name, "tex 4");
        let ink = lib
            .query(&AssetQuery {
                material_type: Some("INK".into()),
                ..Default::default()
            })
            .unwrap();
        assert_eq!(ink.len(), 3);
        let text = lib
            .query(&AssetQuery {
                text: Some("Glyph 1".into()),
                ..Default::default()
            })
            .unwrap();
        assert_eq!(text.len(), 1);
        let all = lib.all().unwrap();
        assert!(all
            .windows(2)
            .all(|w| (w[0].created, &w[0].id) <= (w[1].created, &w[1].id)));
    }

    #[test]
    fn not_found_and_tampering_are_distinct() {
        let dir = tempfile::tempdir().unwrap();
        let lib = AssetLibrary::open(dir.path()).unwrap();
        assert!(matches!(lib.load_asset("0123abcd"), Err(AssetError::NotFound(_))));
        assert!(matches!(lib.load_asset("../etc"), Err(AssetError::NotFound(_))));
        let r = lib
            .register(vec![("t.png".into(), png([9, 9, 9]))], AssetKind::Texture, meta("t"))
            .unwrap();
        let path = lib.payload_path(&r);
        let mut bytes = std::fs::read(&path).unwrap();
        let last = bytes.len() - 1;
        bytes[last] ^= 0x01;
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(lib.load_asset(&r.id), Err(AssetError::Integrity { .. })));
    }

    #[test]
    fn rebuild_reproduces_index() {
        let dir = tempfile::tempdir().unwrap();
        let lib = AssetLibrary::open(dir.path()).unwrap();
        let (_, xml) = colormap_xml();
        lib.register(vec![("m.xml".into(), xml)], AssetKind::Colormap, meta("m"))
            .unwrap();
        lib.register(
            vec![("a.png".into(), png([0, 0, 0]))],
            AssetKind::AlphaMask,
            meta("mask"),
        )
        .unwrap();
        let before = lib.all().unwrap();
        std::fs::remove_file(dir.path().join(INDEX_FILE)).unwrap();
        let after = lib.rebuild_index().unwrap();
        assert_eq!(before, after);
        assert_eq!(lib.all().unwrap(), before);
    }

    #[test]
    fn parse_tags() {
        assert_eq!(
            "line/magnitude".parse::<IntendedUse>().unwrap(),
            IntendedUse::new(UseGeometry::Line, UseChannel::Magnitude)
        );
        assert!("line".parse::<IntendedUse>().is_err());
        assert_eq!("textureSet".parse::<AssetKind>().unwrap(), AssetKind::TextureSet);
        assert_eq!("Volume".parse::<UseAtom>().unwrap(), UseAtom::Volume);
    }
}
