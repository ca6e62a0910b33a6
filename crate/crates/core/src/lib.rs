//! Asset pipelines, layered scene model and deterministic renderer for
//! artifact-based visualization.

pub mod assetlib;
pub mod color;
pub mod field;
pub mod fixtures;
pub mod linesynth;
pub mod mesh;
pub mod renderer;
pub mod sampling;
pub mod scene;
pub mod texture;
