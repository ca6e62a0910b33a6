use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::field::VoxelGrid;
use crate::mesh::{read_obj, Aabb, TriMesh, Vec3};

use super::SceneError;

/// A polyline with optional per-point normals and integration times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub points: Vec<Vec3>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normals: Option<Vec<Vec3>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
}

impl Polyline {
    pub fn new(points: Vec<Vec3>) -> Self {
        Self {
            points,
            normals: None,
            times: None,
        }
    }

    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Points(Vec<Vec3>),
    Lines(Vec<Polyline>),
    Mesh(TriMesh),
    Voxels(VoxelGrid),
}

impl Geometry {
    pub fn kind(&self) -> GeometryKind {
        match self {
            Geometry::Points(_) => GeometryKind::Points,
            Geometry::Lines(_) => GeometryKind::Lines,
            Geometry::Mesh(_) => GeometryKind::Mesh,
            Geometry::Voxels(_) => GeometryKind::Voxels,
        }
    }

    /// Number of elements carrying variable values: points, line points
    /// (concatenated in line order), mesh vertices or voxels.
    pub fn element_count(&self) -> usize {
        match self {
            Geometry::Points(p) => p.len(),
            Geometry::Lines(ls) => ls.iter().map(|l| l.points.len()).sum(),
            Geometry::Mesh(m) => m.vertex_count(),
            Geometry::Voxels(g) => g.cell_count(),
        }
    }

    pub fn bounds(&self) -> Aabb {
        match self {
            Geometry::Points(p) => Aabb::from_points(p),
            Geometry::Lines(ls) => Aabb::from_points(ls.iter().flat_map(|l| &l.points)),
            Geometry::Mesh(m) => m.bounds(),
            Geometry::Voxels(g) => g.bounds(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeometryKind {
    Points,
    Lines,
    Mesh,
    Voxels,
}

impl std::fmt::Display for GeometryKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GeometryKind::Points => "point set",
            GeometryKind::Lines => "line set",
            GeometryKind::Mesh => "triangle mesh",
            GeometryKind::Voxels => "voxel grid",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariableKind {
    Scalar,
    Vector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataObject {
    pub name: String,
    pub geometry: Geometry,
    pub scalars: BTreeMap<String, Vec<f64>>,
    pub vectors: BTreeMap<String, Vec<Vec3>>,
}

impl DataObject {
    pub fn new(name: impl Into<String>, geometry: Geometry) -> Self {
        Self {
            name: name.into(),
            geometry,
            scalars: BTreeMap::new(),
            vectors: BTreeMap::new(),
        }
    }

    pub fn with_scalar(mut self, name: impl Into<String>, values: Vec<f64>) -> Self {
        self.scalars.insert(name.into(), values);
        self
    }

    pub fn with_vector(mut self, name: impl Into<String>, values: Vec<Vec3>) -> Self {
        self.vectors.insert(name.into(), values);
        self
    }

    pub fn element_count(&self) -> usize {
        self.geometry.element_count()
    }

    pub fn bounds(&self) -> Aabb {
        self.geometry.bounds()
    }

    pub fn variable_kind(&self, name: &str) -> Option<VariableKind> {
        if self.scalars.contains_key(name) {
            Some(VariableKind::Scalar)
        } else if self.vectors.contains_key(name) {
            Some(VariableKind::Vector)
        } else {
            None
        }
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        let n = self.element_count();
        let bad = |msg: String| Err(SceneError::Data(format!("{}: {msg}", self.name)));
        for (name, v) in &self.scalars {
            if v.len() != n {
                return bad(format!("variable {name:?} has {} values for {n} elements", v.len()));
            }
            if let Some(i) = v.iter().position(|x| !x.is_finite()) {
                return bad(format!("variable {name:?} value {i} is not finite"));
            }
        }
        for (name, v) in &self.vectors {
            if self.scalars.contains_key(name) {
                return bad(format!("variable name {name:?} is used twice"));
            }
            if v.len() != n {
                return bad(format!("variable {name:?} has {} vectors for {n} elements", v.len()));
            }
            if let Some(i) = v.iter().position(|x| !x.iter().all(|c| c.is_finite())) {
                return bad(format!("variable {name:?} vector {i} is not finite"));
            }
        }
        match &self.geometry {
            Geometry::Mesh(m) => m
                .validate()
                .map_err(|e| SceneError::Data(format!("{}: {e}", self.name)))?,
            Geometry::Voxels(g) => g
                .validate()
                .map_err(|e| SceneError::Data(format!("{}: {e}", self.name)))?,
            Geometry::Lines(ls) => {
                for (i, l) in ls.iter().enumerate() {
                    if l.normals.as_ref().is_some_and(|ns| ns.len() != l.points.len()) {
                        return bad(format!("line {i} has a normal count different from its point count"));
                    }
                    if l.times.as_ref().is_some_and(|ts| ts.len() != l.points.len()) {
                        return bad(format!("line {i} has a time count different from its point count"));
                    }
                }
            }
            Geometry::Points(_) => {}
        }
        Ok(())
    }

    /// The voxel grid carrying `variable` as its values.
    pub fn voxel_field(&self, variable: &str) -> Option<VoxelGrid> {
        let Geometry::Voxels(g) = &self.geometry else {
            return None;
        };
        let values = self.scalars.get(variable)?;
        Some(VoxelGrid {
            values: values.clone(),
            ..g.clone()
        })
    }

    /// Scalar at an arbitrary position: trilinear for voxels, barycentric on
    /// `triangle` for meshes, the nearest element otherwise.
    pub fn scalar_at(&self, variable: &str, p: &Vec3, triangle: Option<u32>) -> Option<f64> {
        let values = self.scalars.get(variable)?;
        Some(match &self.geometry {
            Geometry::Voxels(g) => {
                let grid = VoxelGrid {
                    values: values.clone(),
                    ..g.clone()
                };
                grid.trilinear(p)
            }
            Geometry::Mesh(m) if triangle.is_some() => {
                let t = m.triangles[triangle? as usize];
                let w = barycentric(m, t, p);
                (0..3).map(|k| w[k] * values[t[k] as usize]).sum()
            }
            _ => values[self.nearest_element(p)?],
        })
    }

    pub fn vector_at(&self, variable: &str, p: &Vec3, triangle: Option<u32>) -> Option<Vec3> {
        let values = self.vectors.get(variable)?;
        Some(match &self.geometry {
            Geometry::Voxels(g) => {
                let comp = |k: usize| {
                    VoxelGrid {
                        values: values.iter().map(|v| v[k]).collect(),
                        ..g.clone()
                    }
                    .trilinear(p)
                };
                Vec3::new(comp(0), comp(1), comp(2))
            }
            Geometry::Mesh(m) if triangle.is_some() => {
                let t = m.triangles[triangle? as usize];
                let w = barycentric(m, t, p);
                (0..3).map(|k| values[t[k] as usize] * w[k]).sum()
            }
            _ => values[self.nearest_element(p)?],
        })
    }

    fn nearest_element(&self, p: &Vec3) -> Option<usize> {
        let pts: Box<dyn Iterator<Item = &Vec3>> = match &self.geometry {
            Geometry::Points(ps) => Box::new(ps.iter()),
            Geometry::Lines(ls) => Box::new(ls.iter().flat_map(|l| &l.points)),
            Geometry::Mesh(m) => Box::new(m.positions.iter()),
            Geometry::Voxels(g) => return g.cell_of(p),
        };
        pts.enumerate()
            .min_by(|a, b| (a.1 - p).norm_squared().total_cmp(&(b.1 - p).norm_squared()))
            .map(|(i, _)| i)
    }
}

/// Barycentric weights of `p` projected onto triangle `t`.
fn barycentric(m: &TriMesh, t: [u32; 3], p: &Vec3) -> [f64; 3] {
    let [a, b, c] = t.map(|i| m.positions[i as usize]);
    let (v0, v1, v2) = (b - a, c - a, p - a);
    let (d00, d01, d11) = (v0.dot(&v0), v0.dot(&v1), v1.dot(&v1));
    let (d20, d21) = (v2.dot(&v0), v2.dot(&v1));
    let den = d00 * d11 - d01 * d01;
    if den.abs() < 1e-300 {
        return [1.0 / 3.0; 3];
    }
    let v = ((d11 * d20 - d01 * d21) / den).clamp(0.0, 1.0);
    let w = ((d00 * d21 - d01 * d20) / den).clamp(0.0, 1.0 - v);
    [1.0 - v - w, v, w]
}

/// User-editable normalization range of one variable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataRange {
    pub min: f64,
    pub max: f64,
}

impl DataRange {
    pub fn new(min: f64, max: f64) -> Result<Self, SceneError> {
        if !(min.is_finite() && max.is_finite() && min < max) {
            return Err(SceneError::Range { min, max });
        }
        Ok(Self { min, max })
    }

    /// Range spanned by `values`; a constant variable gets a unit-wide range
    /// starting at its value so it normalizes to 0.
    pub fn of(values: impl IntoIterator<Item = f64>) -> Option<Self> {
        let (lo, hi) = values
            .into_iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if !lo.is_finite() {
            return None;
        }
        Some(if lo < hi {
            Self { min: lo, max: hi }
        } else {
            Self { min: lo, max: lo + 1.0 }
        })
    }

    pub fn is_valid(&self) -> bool {
        self.min.is_finite() && self.max.is_finite() && self.min < self.max
    }

    pub fn normalize(&self, value: f64) -> f64 {
        normalize(value, self)
    }
}

/// `(value - min) / (max - min)` clamped to `[0, 1]`.
pub fn normalize(value: f64, range: &DataRange) -> f64 {
    let t = (value - range.min) / (range.max - range.min);
    if t.is_nan() {
        0.0
    } else {
        t.clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    Obj,
    Csv,
    Polylines,
    Volume,
}

impl DataFormat {
    /// Guesses from the extension; JSON files are told apart by their keys.
    pub fn detect(path: &Path) -> Result<Self, SceneError> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .unwrap_or("")
            .to_ascii_lowercase();
        match ext.as_str() {
            "obj" => Ok(DataFormat::Obj),
            "csv" => Ok(DataFormat::Csv),
            "json" => {
                let text = read_text(path)?;
                let v: serde_json::Value =
                    serde_json::from_str(&text).map_err(|e| parse_err(path, e.line(), e.to_string()))?;
                if v.get("dims").is_some() {
                    Ok(DataFormat::Volume)
                } else {
                    Ok(DataFormat::Polylines)
                }
            }
            _ => Err(SceneError::Data(format!(
                "{}: cannot infer the data format",
                path.display()
            ))),
        }
    }
}

fn read_text(path: &Path) -> Result<String, SceneError> {
    std::fs::read_to_string(path).map_err(|e| SceneError::io(path, e))
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> SceneError {
    SceneError::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

/// Loads a data object; the name is the file stem.
pub fn load_data_object(path: &Path, format: Option<DataFormat>) -> Result<DataObject, SceneError> {
    let format = match format {
        Some(f) => f,
        None => DataFormat::detect(path)?,
    };
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let obj = match format {
        DataFormat::Obj => load_obj(path, name)?,
        DataFormat::Csv => load_points_csv(path, name)?,
        DataFormat::Polylines => load_polylines(path, name)?,
        DataFormat::Volume => load_volume(path, name)?,
    };
    obj.validate()?;
    Ok(obj)
}

/// OBJ mesh plus optional per-vertex variables from `<stem>.vars.csv`.
fn load_obj(path: &Path, name: String) -> Result<DataObject, SceneError> {
    let mesh = read_obj(path).map_err(|e| match e {
        crate::mesh::MeshError::Parse { line, message } => parse_err(path, line, message),
        e => SceneError::Data(format!("{}: {e}", path.display())),
    })?;
    let mut obj = DataObject::new(name, Geometry::Mesh(mesh));
    let sidecar = path.with_extension("vars.csv");
    if sidecar.exists() {
        let table = read_table(&sidecar)?;
        let (scalars, vectors) = split_columns(&sidecar, table.headers, table.columns)?;
        obj.scalars = scalars;
        obj.vectors = vectors;
    }
    Ok(obj)
}

struct Table {
    headers: Vec<String>,
    columns: Vec<Vec<f64>>,
}

fn read_table(path: &Path) -> Result<Table, SceneError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| SceneError::io(path, e))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| parse_err(path, 1, e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut columns = vec![Vec::new(); headers.len()];
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        for (i, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                parse_err(
                    path,
                    line,
                    format!("column {:?}: {field:?} is not a number", headers[i]),
                )
            })?;
            columns[i].push(v);
        }
    }
    Ok(Table { headers, columns })
}

/// Groups `name.x`, `name.y`, `name.z` columns into vectors; the rest are scalars.
fn split_columns(
    path: &Path,
    headers: Vec<String>,
    columns: Vec<Vec<f64>>,
) -> Result<(BTreeMap<String, Vec<f64>>, BTreeMap<String, Vec<Vec3>>), SceneError> {
    let mut scalars = BTreeMap::new();
    let mut parts: BTreeMap<String, [Option<Vec<f64>>; 3]> = BTreeMap::new();
    for (h, col) in headers.into_iter().zip(columns) {
        let axis = h.rsplit_once('.').and_then(|(base, a)| {
            let k = match a {
                "x" | "X" => 0,
                "y" | "Y" => 1,
                "z" | "Z" => 2,
                _ => return None,
            };
            Some((base.to_string(), k))
        });
        match axis {
            Some((base, k)) => parts.entry(base).or_default()[k] = Some(col),
            None => {
                if scalars.insert(h.clone(), col).is_some() {
                    return Err(parse_err(path, 1, format!("duplicate column {h:?}")));
                }
            }
        }
    }
    let mut vectors = BTreeMap::new();
    for (base, [x, y, z]) in parts {
        let (Some(x), Some(y), Some(z)) = (x, y, z) else {
            return Err(parse_err(
                path,
                1,
                format!("vector {base:?} needs .x, .y and .z columns"),
            ));
        };
        vectors.insert(base, (0..x.len()).map(|i| Vec3::new(x[i], y[i], z[i])).collect());
    }
    Ok((scalars, vectors))
}

/// Point CSV with `x,y,z` columns; other columns become variables.
fn load_points_csv(path: &Path, name: String) -> Result<DataObject, SceneError> {
    let table = read_table(path)?;
    let mut headers = table.headers;
    let mut columns = table.columns;
    let mut xyz: [Vec<f64>; 3] = Default::default();
    for (k, axis) in ["x", "y", "z"].into_iter().enumerate() {
        let i = headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(axis))
            .ok_or_else(|| parse_err(path, 1, format!("missing {axis:?} column")))?;
        headers.remove(i);
        xyz[k] = columns.remove(i);
    }
    let points = (0..xyz[0].len())
        .map(|i| Vec3::new(xyz[0][i], xyz[1][i], xyz[2][i]))
        .collect();
    let (scalars, vectors) = split_columns(path, headers, columns)?;
    Ok(DataObject {
        name,
        geometry: Geometry::Points(points),
        scalars,
        vectors,
    })
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PolylineEntry {
    pub points: Vec<Vec3>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normals: Option<Vec<Vec3>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub scalars: BTreeMap<String, Vec<f64>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub vectors: BTreeMap<String, Vec<Vec3>>,
}

/// Polyline JSON document: `{"lines": [{"points": [[x,y,z], ...], ...}]}`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PolylineFile {
    pub lines: Vec<PolylineEntry>,
}

impl PolylineFile {
    pub fn into_data_object(self, name: String) -> Result<DataObject, SceneError> {
        let mut obj = DataObject::new(name, Geometry::Lines(Vec::new()));
        let scalar_names: Vec<String> = self
            .lines
            .first()
            .map(|l| l.scalars.keys().cloned().collect())
            .unwrap_or_default();
        let vector_names: Vec<String> = self
            .lines
            .first()
            .map(|l| l.vectors.keys().cloned().collect())
            .unwrap_or_default();
        let mut lines = Vec::with_capacity(self.lines.len());
        for (i, l) in self.lines.into_iter().enumerate() {
            let n = l.points.len();
            if n < 2 {
                return Err(SceneError::Data(format!("line {i} has fewer than 2 points")));
            }
            if !l.scalars.keys().eq(scalar_names.iter()) || !l.vectors.keys().eq(vector_names.iter()) {
                return Err(SceneError::Data(format!(
                    "line {i} declares different variables than line 0"
                )));
            }
            for (k, v) in l.scalars {
                if v.len() != n {
                    return Err(SceneError::Data(format!(
                        "line {i}: variable {k:?} has {} values for {n} points",
                        v.len()
                    )));
                }
                obj.scalars.entry(k).or_default().extend(v);
            }
            for (k, v) in l.vectors {
                if v.len() != n {
                    return Err(SceneError::Data(format!(
                        "line {i}: variable {k:?} has {} vectors for {n} points",
                        v.len()
                    )));
                }
                obj.vectors.entry(k).or_default().extend(v);
            }
            lines.push(Polyline {
                points: l.points,
                normals: l.normals,
                times: l.times,
            });
        }
        obj.geometry = Geometry::Lines(lines);
        Ok(obj)
    }
}

fn load_polylines(path: &Path, name: String) -> Result<DataObject, SceneError> {
    let text = read_text(path)?;
    let file: PolylineFile = serde_json::from_str(&text).map_err(|e| parse_err(path, e.line(), e.to_string()))?;
    file.into_data_object(name)
        .map_err(|e| SceneError::Data(format!("{}: {e}", path.display())))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValueType {
    Uint8,
    Uint16,
    Int16,
    Float32,
    Float64,
}

impl ValueType {
    pub fn size(self) -> usize {
        match self {
            ValueType::Uint8 => 1,
            ValueType::Uint16 | ValueType::Int16 => 2,
            ValueType::Float32 => 4,
            ValueType::Float64 => 8,
        }
    }

    fn decode(self, b: &[u8]) -> f64 {
        match self {
            ValueType::Uint8 => b[0] as f64,
            ValueType::Uint16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            ValueType::Int16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            ValueType::Float32 => f32::from_le_bytes(b.try_into().unwrap()) as f64,
            ValueType::Float64 => f64::from_le_bytes(b.try_into().unwrap()),
        }
    }
}

/// JSON header of a little-endian RAW volume, x-fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VolumeHeader {
    pub dims: [usize; 3],
    #[serde(default = "unit_spacing")]
    pub spacing: [f64; 3],
    #[serde(default)]
    pub origin: [f64; 3],
    pub value_type: ValueType,
    /// RAW file, relative to the header.
    pub data: String,
    /// Variable name for the values.
    #[serde(default = "default_variable")]
    pub variable: String,
}

fn unit_spacing() -> [f64; 3] {
    [1.0; 3]
}

fn default_variable() -> String {
    "value".into()
}

fn load_volume(path: &Path, name: String) -> Result<DataObject, SceneError> {
    let text = read_text(path)?;
    let header: VolumeHeader = serde_json::from_str(&text).map_err(|e| parse_err(path, e.line(), e.to_string()))?;
    let raw_path = path.parent().unwrap_or(Path::new(".")).join(&header.data);
    let bytes = std::fs::read(&raw_path).map_err(|e| SceneError::io(&raw_path, e))?;
    let size = header.value_type.size();
    let expected = header.dims.iter().product::<usize>();
    if bytes.len() != expected * size {
        return Err(SceneError::Data(format!(
            "{}: dims {:?} need {expected} values, file holds {} bytes ({} values)",
            raw_path.display(),
            header.dims,
            bytes.len(),
            bytes.len() as f64 / size as f64
        )));
    }
    let values: Vec<f64> = bytes.chunks_exact(size).map(|c| header.value_type.decode(c)).collect();
    let grid = VoxelGrid::new(
        header.dims,
        Vec3::from(header.origin),
        Vec3::from(header.spacing),
        values.clone(),
    )
    .map_err(|e| SceneError::Data(format!("{}: {e}", path.display())))?;
    Ok(DataObject::new(name, Geometry::Voxels(grid)).with_scalar(header.variable, values))
}
