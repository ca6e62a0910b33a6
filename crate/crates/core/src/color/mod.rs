//! Color-space math, palette extraction, colormaps and their exporters.

mod colormap;
mod export;
mod lab;
mod palette;

pub use colormap::{sample_colormap, ColorMap, ControlPoint};
pub use export::{
    export_colormap, from_paraview_xml, strip_image, to_paraview_xml, ExportFormat, STRIP_HEIGHT, STRIP_WIDTH,
};
pub use lab::{hex_string, lab_to_srgb, lab_to_srgb_unit, parse_hex, srgb_to_lab, srgb_unit_to_lab, LabColor};
pub use palette::{extract_palette, SourcePixel, Swatch, DEFAULT_PALETTE_SIZE};

#[derive(Debug, thiserror::Error)]
pub enum ColorError {
    #[error("image has no pixels")]
    EmptyImage,
    #[error("palette size must be positive")]
    InvalidPaletteSize,
    #[error("pixel ({x}, {y}) outside {width}x{height} image")]
    PixelOutOfBounds { x: u32, y: u32, width: u32, height: u32 },
    #[error("a colormap needs at least 2 control points, got {0}")]
    TooFewControlPoints(usize),
    #[error("control point {index} is not strictly after its predecessor")]
    UnorderedPositions { index: usize },
    #[error("non-finite control point")]
    NonFinite,
    #[error("colormap xml: {0}")]
    Xml(String),
    #[error("encoding failed: {0}")]
    Encode(String),
}
