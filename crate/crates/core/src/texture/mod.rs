//! Texture asset preparation: cropping, tiling previews, normal maps from
//! imagery and ordered texture sets.

mod normal;
mod set;

use std::path::{Path, PathBuf};

use image::{RgbImage, RgbaImage};
use serde::{Deserialize, Serialize};

pub use normal::{decode_normal, encode_normal, make_normal_map, NormalMap, DEFAULT_NORMAL_STRENGTH};
pub use set::{build_texture_set, ManifestEntry, SetOptions, TextureSet, TextureSetManifest};

#[derive(Debug, thiserror::Error)]
pub enum TextureError {
    #[error("image must be at least 1x1")]
    Empty,
    #[error("rect x={x} y={y} w={width} h={height} exceeds {image_width}x{image_height} image")]
    RectOutOfBounds {
        x: u32,
        y: u32,
        width: u32,
        height: u32,
        image_width: u32,
        image_height: u32,
    },
    #[error("tile counts must be at least 1")]
    InvalidTileCount,
    #[error("normal strength must be positive and finite, got {0}")]
    InvalidStrength(f64),
    #[error("texture set is empty")]
    EmptySet,
    #[error("texture set entries differ in size: {0}")]
    MixedSizes(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("manifest: {0}")]
    Manifest(String),
}

impl TextureError {
    pub(crate) fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        TextureError::Io {
            path: path.to_path_buf(),
            message: e.to_string(),
        }
    }
}

/// An RGBA raster with an optional physical scale in texels per world unit.
#[derive(Debug, Clone, PartialEq)]
pub struct TextureImage {
    pub pixels: RgbaImage,
    pub physical_scale: Option<f64>,
}

impl TextureImage {
    pub fn new(pixels: RgbaImage) -> Result<Self, TextureError> {
        if pixels.width() == 0 || pixels.height() == 0 {
            return Err(TextureError::Empty);
        }
        Ok(Self {
            pixels,
            physical_scale: None,
        })
    }

    pub fn from_rgb(rgb: &RgbImage) -> Result<Self, TextureError> {
        Self::new(image::DynamicImage::ImageRgb8(rgb.clone()).to_rgba8())
    }

    pub fn open(path: &Path) -> Result<Self, TextureError> {
        let img = image::open(path).map_err(|e| TextureError::io(path, e))?;
        Self::new(img.to_rgba8())
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, TextureError> {
        let img = image::load_from_memory(bytes).map_err(|e| TextureError::io(Path::new("<memory>"), e))?;
        Self::new(img.to_rgba8())
    }

    pub fn save(&self, path: &Path) -> Result<(), TextureError> {
        self.pixels.save(path).map_err(|e| TextureError::io(path, e))
    }

    pub fn encode_png(&self) -> Vec<u8> {
        encode_png(&image::DynamicImage::ImageRgba8(self.pixels.clone()))
    }

    pub fn width(&self) -> u32 {
        self.pixels.width()
    }

    pub fn height(&self) -> u32 {
        self.pixels.height()
    }

    pub fn to_rgb(&self) -> RgbImage {
        image::DynamicImage::ImageRgba8(self.pixels.clone()).to_rgb8()
    }
}

pub(crate) fn encode_png(img: &image::DynamicImage) -> Vec<u8> {
    let mut out = std::io::Cursor::new(Vec::new());
    img.write_to(&mut out, image::ImageFormat::Png)
        .expect("png encoding into memory");
    out.into_inner()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
}

impl Rect {
    pub fn new(x: u32, y: u32, width: u32, height: u32) -> Self {
        Self { x, y, width, height }
    }
}

/// Exact pixel copy of `rect`.
pub fn crop(image: &TextureImage, rect: Rect) -> Result<TextureImage, TextureError> {
    let fits = rect.width >= 1
        && rect.height >= 1
        && rect.x.checked_add(rect.width).is_some_and(|r| r <= image.width())
        && rect.y.checked_add(rect.height).is_some_and(|b| b <= image.height());
    if !fits {
        return Err(TextureError::RectOutOfBounds {
            x: rect.x,
            y: rect.y,
            width: rect.width,
            height: rect.height,
            image_width: image.width(),
            image_height: image.height(),
        });
    }
    let pixels = image::imageops::crop_imm(&image.pixels, rect.x, rect.y, rect.width, rect.height).to_image();
    Ok(TextureImage {
        pixels,
        physical_scale: image.physical_scale,
    })
}

/// Repeats the image `nx` times horizontally and `ny` times vertically.
pub fn tile_preview(image: &TextureImage, nx: u32, ny: u32) -> Result<TextureImage, TextureError> {
    if nx == 0 || ny == 0 {
        return Err(TextureError::InvalidTileCount);
    }
    let (w, h) = image.pixels.dimensions();
    let pixels = RgbaImage::from_fn(nx * w, ny * h, |x, y| *image.pixels.get_pixel(x % w, y % h));
    Ok(TextureImage {
        pixels,
        physical_scale: image.physical_scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::Rgba;
    use proptest::prelude::*;

    fn gradient(w: u32, h: u32) -> TextureImage {
        TextureImage::new(RgbaImage::from_fn(w, h, |x, y| {
            Rgba([(x * 7 % 256) as u8, (y * 11 % 256) as u8, ((x + y) % 256) as u8, 255])
        }))
        .unwrap()
    }

    fn checker(w: u32, h: u32) -> TextureImage {
        TextureImage::new(RgbaImage::from_fn(w, h, |x, y| {
            if (x + y) % 2 == 0 {
                Rgba([0, 0, 0, 255])
            } else {
                Rgba([255, 255, 255, 255])
            }
        }))
        .unwrap()
    }

    #[test]
    fn crop_cases() {
        let img = gradient(32, 32);
        assert_eq!(crop(&img, Rect::new(0, 0, 32, 32)).unwrap(), img);
        let one = crop(&img, Rect::new(0, 0, 1, 1)).unwrap();
        assert_eq!(one.pixels.get_pixel(0, 0), img.pixels.get_pixel(0, 0));
        let sub = crop(&img, Rect::new(5, 7, 10, 10)).unwrap();
        assert_eq!(sub.pixels.get_pixel(0, 0), img.pixels.get_pixel(5, 7));
        assert_eq!(sub.pixels.get_pixel(9, 9), img.pixels.get_pixel(14, 16));
    }

    #[test]
    fn crop_out_of_bounds_reports_coordinates() {
        let err = crop(&gradient(8, 8), Rect::new(4, 2, 5, 3)).unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("x=4") && msg.contains("w=5") && msg.contains("8x8"),
            "{msg}"
        );
        assert!(crop(&gradient(8, 8), Rect::new(u32::MAX, 0, 2, 1)).is_err());
        assert!(crop(&gradient(8, 8), Rect::new(0, 0, 0, 1)).is_err());
    }

    #[test]
    fn tiling() {
        let img = gradient(5, 3);
        assert_eq!(tile_preview(&img, 1, 1).unwrap(), img);
        let two = tile_preview(&img, 2, 1).unwrap();
        let left = crop(&two, Rect::new(0, 0, 5, 3)).unwrap();
        let right = crop(&two, Rect::new(5, 0, 5, 3)).unwrap();
        assert_eq!(left.pixels.as_raw(), right.pixels.as_raw());
        let big = tile_preview(&checker(4, 4), 3, 2).unwrap();
        assert_eq!(big.pixels.dimensions(), (12, 8));
        for y in 0..8 {
            for x in 0..12 {
                let want = if (x + y) % 2 == 0 { 0 } else { 255 };
                assert_eq!(big.pixels.get_pixel(x, y).0[0], want);
            }
        }
        assert!(tile_preview(&img, 0, 1).is_err());
    }

    proptest! {
        #[test]
        fn crop_then_tile_matches_modular_indexing(
            x in 0u32..20, y in 0u32..20, w in 1u32..12, h in 1u32..12, nx in 1u32..4, ny in 1u32..4
        ) {
            let img = gradient(32, 32);
            let rect = Rect::new(x, y, w, h);
            let tiled = tile_preview(&crop(&img, rect).unwrap(), nx, ny).unwrap();
            for ty in 0..h * ny {
                for tx in 0..w * nx {
                    prop_assert_eq!(
                        tiled.pixels.get_pixel(tx, ty),
                        img.pixels.get_pixel(x + tx % w, y + ty % h)
                    );
                }
            }
        }
    }
}
