//! Glyph mesh pipeline: OBJ IO, orientation, decimation, UV unwrap, normal baking and LODs.

mod bake;
mod bvh;
mod decimate;
mod lod;
mod obj;
mod orient;
pub mod primitives;
mod trimesh;
mod uv;

pub use bake::{
    bake_normal_map, bake_normal_map_with_stats, triangle_uv_derivatives, BakeStats, TangentFrame,
    DEFAULT_BAKE_RESOLUTION, RAY_REACH_FRACTION,
};
pub use bvh::{Bvh, NearestPoint, RayHit};
pub use decimate::{decimate, DecimateResult, BOUNDARY_PENALTY};
pub use lod::{build_lod_chain, GlyphAsset, LodBuild, LodLevel, LodOptions, DEFAULT_LOD_TARGETS, GLYPH_MANIFEST};
pub use obj::{parse_obj, read_obj, to_obj_string, write_obj};
pub use orient::{apply_orientation, orient_mesh, GlyphOrientation};
pub use trimesh::{closest_point_on_triangle, Aabb, TriMesh, Vec3};
pub use uv::{dominant_chart, unwrap_uv, unwrap_uv_atlas, UvAtlas, DEFAULT_ATLAS_RESOLUTION, GUTTER_TEXELS};

#[derive(Debug, thiserror::Error)]
pub enum MeshError {
    #[error("OBJ line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Io(String),
    #[error("vertex {vertex} has a non-finite coordinate")]
    NonFinite { vertex: usize },
    #[error("triangle {triangle} references a vertex outside 0..{vertices}")]
    IndexOutOfRange { triangle: usize, vertices: usize },
    #[error("{0} length does not match the vertex count")]
    AttributeLength(&'static str),
    #[error("direction vector has zero length")]
    DegenerateDirection,
    #[error("forward and up directions are parallel")]
    ParallelDirections,
    #[error("target vertex count {0} is below the minimum of 4")]
    InvalidTarget(usize),
    #[error("LOD targets must be strictly decreasing: {0:?}")]
    UnorderedTargets(Vec<usize>),
    #[error("mesh has no triangles")]
    Empty,
    #[error("mesh has no UV coordinates")]
    MissingUvs,
    #[error("invalid texture resolution {0}")]
    InvalidResolution(u32),
    #[error("glyph manifest: {0}")]
    Manifest(String),
}
