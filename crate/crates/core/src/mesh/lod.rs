//! LOD chains: progressive decimation, UV atlas and baked normal map per level.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{bake_normal_map, decimate, read_obj, unwrap_uv_atlas, write_obj, GlyphOrientation, MeshError, TriMesh};
use crate::texture::NormalMap;

pub const DEFAULT_LOD_TARGETS: [usize; 3] = [5000, 500, 100];
pub const GLYPH_MANIFEST: &str = "glyph.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct LodOptions {
    pub targets: Vec<usize>,
    pub resolution: u32,
}

impl Default for LodOptions {
    fn default() -> Self {
        Self {
            targets: DEFAULT_LOD_TARGETS.to_vec(),
            resolution: super::DEFAULT_BAKE_RESOLUTION,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LodLevel {
    pub target: usize,
    /// Vertex count after decimation, before UV seams split vertices.
    pub vertex_count: usize,
    /// Decimated mesh with UV atlas; vertices duplicated along island borders.
    pub mesh: TriMesh,
    pub normal_map: NormalMap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlyphAsset {
    pub name: String,
    /// Full-resolution mesh in the canonical frame.
    pub mesh: TriMesh,
    pub orientation: GlyphOrientation,
    pub lods: Vec<LodLevel>,
}

#[derive(Debug, Clone)]
pub struct LodBuild {
    pub asset: GlyphAsset,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct LodEntry {
    target: usize,
    vertex_count: usize,
    mesh: String,
    normal_map: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct GlyphManifest {
    name: String,
    mesh: String,
    orientation: GlyphOrientation,
    lods: Vec<LodEntry>,
}

impl GlyphAsset {
    /// A glyph without LODs; the full mesh is drawn at every distance.
    pub fn from_mesh(name: impl Into<String>, mesh: TriMesh) -> Self {
        Self {
            name: name.into(),
            mesh,
            orientation: GlyphOrientation::identity(),
            lods: Vec::new(),
        }
    }

    /// Mesh and normal map for `level`, clamped to the coarsest available.
    pub fn level(&self, level: usize) -> (&TriMesh, Option<&NormalMap>) {
        match self.lods.get(level.min(self.lods.len().saturating_sub(1))) {
            Some(l) => (&l.mesh, Some(&l.normal_map)),
            None => (&self.mesh, None),
        }
    }

    pub fn check_invariants(&self) -> Result<(), MeshError> {
        for w in self.lods.windows(2) {
            if w[1].vertex_count >= w[0].vertex_count {
                return Err(MeshError::UnorderedTargets(
                    self.lods.iter().map(|l| l.vertex_count).collect(),
                ));
            }
        }
        for l in &self.lods {
            let uvs = l.mesh.uvs.as_ref().ok_or(MeshError::MissingUvs)?;
            if uvs
                .iter()
                .any(|p| !(0.0..=1.0).contains(&p.x) || !(0.0..=1.0).contains(&p.y))
            {
                return Err(MeshError::Manifest(format!("LOD {} has UVs outside [0,1]", l.target)));
            }
        }
        Ok(())
    }

    /// Writes `glyph.json`, the canonical OBJ and one OBJ + PNG per level into `dir`.
    pub fn save(&self, dir: &Path) -> Result<PathBuf, MeshError> {
        std::fs::create_dir_all(dir).map_err(|e| MeshError::Io(format!("{}: {e}", dir.display())))?;
        write_obj(&self.mesh, &dir.join("canonical.obj"))?;
        let mut lods = Vec::new();
        for (i, l) in self.lods.iter().enumerate() {
            let mesh = format!("lod{i}.obj");
            let normal_map = format!("lod{i}_normal.png");
            write_obj(&l.mesh, &dir.join(&mesh))?;
            l.normal_map
                .save(&dir.join(&normal_map))
                .map_err(|e| MeshError::Io(e.to_string()))?;
            lods.push(LodEntry {
                target: l.target,
                vertex_count: l.vertex_count,
                mesh,
                normal_map,
            });
        }
        let manifest = GlyphManifest {
            name: self.name.clone(),
            mesh: "canonical.obj".into(),
            orientation: self.orientation,
            lods,
        };
        let path = dir.join(GLYPH_MANIFEST);
        let text = serde_json::to_string_pretty(&manifest).map_err(|e| MeshError::Manifest(e.to_string()))?;
        std::fs::write(&path, text).map_err(|e| MeshError::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }

    /// Loads a glyph from a manifest, a directory holding one, or a bare OBJ.
    pub fn load(path: &Path) -> Result<Self, MeshError> {
        let manifest_path = if path.is_dir() {
            path.join(GLYPH_MANIFEST)
        } else {
            path.to_path_buf()
        };
        let is_obj = manifest_path.extension().is_some_and(|e| e.eq_ignore_ascii_case("obj"));
        if is_obj {
            let name = manifest_path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            return Ok(Self::from_mesh(name, read_obj(&manifest_path)?));
        }
        let text = std::fs::read_to_string(&manifest_path)
            .map_err(|e| MeshError::Io(format!("{}: {e}", manifest_path.display())))?;
        let manifest: GlyphManifest = serde_json::from_str(&text).map_err(|e| MeshError::Manifest(e.to_string()))?;
        let base = manifest_path.parent().unwrap_or(Path::new("."));
        let mut lods = Vec::new();
        for e in &manifest.lods {
            let mesh = read_obj(&base.join(&e.mesh))?;
            if mesh.uvs.is_none() {
                return Err(MeshError::MissingUvs);
            }
            let normal_map = NormalMap::open(&base.join(&e.normal_map)).map_err(|e| MeshError::Io(e.to_string()))?;
            lods.push(LodLevel {
                target: e.target,
                vertex_count: e.vertex_count,
                mesh,
                normal_map,
            });
        }
        let asset = Self {
            name: manifest.name,
            mesh: read_obj(&base.join(&manifest.mesh))?,
            orientation: manifest.orientation,
            lods,
        };
        asset.check_invariants()?;
        Ok(asset)
    }
}

/// Decimates `mesh` progressively through `options.targets`, unwrapping and
/// baking each level against the full-resolution mesh.
pub fn build_lod_chain(name: &str, mesh: &TriMesh, options: &LodOptions) -> Result<LodBuild, MeshError> {
    let targets = &options.targets;
    if targets.is_empty() || targets.windows(2).any(|w| w[1] >= w[0]) {
        return Err(MeshError::UnorderedTargets(targets.clone()));
    }
    if mesh.triangles.is_empty() {
        return Err(MeshError::Empty);
    }
    mesh.validate()?;
    let original = mesh.clone().with_vertex_normals_if_missing();
    let mut warnings = Vec::new();
    let mut lods: Vec<LodLevel> = Vec::new();
    let mut current = original.clone();
    for &target in targets {
        let result = decimate(&current, target)?;
        warnings.extend(result.warnings);
        let count = result.mesh.vertex_count();
        if let Some(prev) = lods.last() {
            if count >= prev.vertex_count {
                warnings.push(format!(
                    "LOD target {target} skipped: decimation stalled at {count} vertices"
                ));
                continue;
            }
        }
        current = result.mesh;
        let atlas = unwrap_uv_atlas(&current, options.resolution);
        let normal_map = bake_normal_map(&original, &atlas.mesh, options.resolution)?;
        lods.push(LodLevel {
            target,
            vertex_count: count,
            mesh: atlas.mesh,
            normal_map,
        });
    }
    let asset = GlyphAsset {
        name: name.to_string(),
        mesh: original,
        orientation: GlyphOrientation::identity(),
        lods,
    };
    asset.check_invariants()?;
    Ok(LodBuild { asset, warnings })
}

impl TriMesh {
    fn with_vertex_normals_if_missing(self) -> TriMesh {
        if self.normals.is_some() {
            self
        } else {
            self.with_vertex_normals()
        }
    }
}
