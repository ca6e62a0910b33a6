use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::sampling::SamplingMethod;

use super::DataRange;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LayerType {
    Glyph,
    Line,
    Surface,
    Volume,
}

impl std::fmt::Display for LayerType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LayerType::Glyph => "glyph",
            LayerType::Line => "line",
            LayerType::Surface => "surface",
            LayerType::Volume => "volume",
        })
    }
}

/// Data variables driving the layer's visual channels.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct VariableBindings {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub color: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub texture: Option<String>,
    /// Glyph axial radius or line width.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub size: Option<String>,
    /// Direction vector for aligned glyphs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orientation: Option<String>,
}

/// Scene asset ids bound to the layer.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct AssetBindings {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub colormap: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub texture_set: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub glyph: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_mask: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normal_map: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrientationMode {
    #[default]
    Axis,
    Vector,
    Random,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LineStyle {
    #[default]
    Ribbon,
    Tube,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum LineSampling {
    /// Keep the input points.
    #[default]
    Points,
    ArcLength,
    IntegrationTime,
}

/// Where glyphs go when the data object is not a point set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct GlyphSampling {
    pub method: SamplingMethod,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spacing: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    /// Scalar variable used as the density for density sampling.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<String>,
}

/// Per-layer style parameters. Unused fields are ignored by other layer types.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct LayerStyle {
    /// Constant color as `#rrggbb`, used when no color variable is bound.
    pub color: String,
    /// Glyph size as a percentage of the data object's largest extent.
    pub glyph_size_percent: f64,
    pub orientation_mode: OrientationMode,
    /// World up for the glyph roll rule.
    pub up: [f64; 3],
    /// Constant axial radius factor for glyphs.
    pub axial_radius: f64,
    /// Axial radius factors mapped from the size variable's range.
    pub axial_radius_range: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampling: Option<GlyphSampling>,
    pub line_style: LineStyle,
    pub ribbon_width: f64,
    pub tube_radius: f64,
    pub tube_sides: usize,
    /// Degrees about the line tangent.
    pub rotational_offset: f64,
    pub line_sampling: LineSampling,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    /// World length of one texture repeat along a line; defaults to the
    /// width scaled by the texture's aspect ratio.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub repeat_length: Option<f64>,
    /// Normalized data units over which neighboring bin textures cross-fade.
    pub blend_distance: f64,
    pub projection_blend_factor: f64,
    /// Tri-planar texture density; defaults to four repeats across the largest extent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub texels_per_unit: Option<f64>,
    /// Volume opacity per world unit at normalized value 1.
    pub opacity_scale: f64,
    /// Volume ray-march step; defaults to half the smallest voxel spacing.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step_size: Option<f64>,
}

impl Default for LayerStyle {
    fn default() -> Self {
        Self {
            color: "#808080".into(),
            glyph_size_percent: 1.0,
            orientation_mode: OrientationMode::Axis,
            up: [0.0, 1.0, 0.0],
            axial_radius: 1.0,
            axial_radius_range: [0.25, 1.0],
            sampling: None,
            line_style: LineStyle::Ribbon,
            ribbon_width: 1.0,
            tube_radius: 0.5,
            tube_sides: 12,
            rotational_offset: 0.0,
            line_sampling: LineSampling::Points,
            step: None,
            repeat_length: None,
            blend_distance: 0.0,
            projection_blend_factor: 4.0,
            texels_per_unit: None,
            opacity_scale: 1.0,
            step_size: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VisLayer {
    pub id: String,
    #[serde(rename = "type")]
    pub layer_type: LayerType,
    /// Id of the data object.
    pub data: String,
    #[serde(default)]
    pub variables: VariableBindings,
    #[serde(default)]
    pub assets: AssetBindings,
    #[serde(default)]
    pub style: LayerStyle,
    /// Per-variable range overrides; unlisted variables use their data range.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub ranges: BTreeMap<String, DataRange>,
    /// Texture bin count, recorded when the layer is added to a scene.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
}

impl VisLayer {
    pub fn new(id: impl Into<String>, layer_type: LayerType, data: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            layer_type,
            data: data.into(),
            variables: VariableBindings::default(),
            assets: AssetBindings::default(),
            style: LayerStyle::default(),
            ranges: BTreeMap::new(),
            bins: None,
        }
    }
}
