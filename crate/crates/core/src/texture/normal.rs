use std::path::Path;

use image::{Rgb, RgbImage};

use super::{TextureError, TextureImage};

pub const DEFAULT_NORMAL_STRENGTH: f64 = 2.0;

/// Tangent-space normals packed as `round((n + 1) / 2 * 255)` per channel.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalMap {
    pub pixels: RgbImage,
}

impl NormalMap {
    /// A map where every texel encodes the unperturbed normal (0, 0, 1).
    pub fn flat(width: u32, height: u32) -> Self {
        Self {
            pixels: RgbImage::from_pixel(width, height, Rgb(encode_normal([0.0, 0.0, 1.0]))),
        }
    }

    pub fn width(&self) -> u32 {
        self.pixels.width()
    }

    pub fn height(&self) -> u32 {
        self.pixels.height()
    }

    pub fn decode(&self, x: u32, y: u32) -> [f64; 3] {
        decode_normal(self.pixels.get_pixel(x, y).0)
    }

    pub fn open(path: &Path) -> Result<Self, TextureError> {
        let img = image::open(path).map_err(|e| TextureError::io(path, e))?;
        Ok(Self { pixels: img.to_rgb8() })
    }

    pub fn save(&self, path: &Path) -> Result<(), TextureError> {
        self.pixels.save(path).map_err(|e| TextureError::io(path, e))
    }

    pub fn encode_png(&self) -> Vec<u8> {
        super::encode_png(&image::DynamicImage::ImageRgb8(self.pixels.clone()))
    }
}

pub fn encode_normal(n: [f64; 3]) -> [u8; 3] {
    n.map(|c| ((c.clamp(-1.0, 1.0) + 1.0) * 0.5 * 255.0).round() as u8)
}

pub fn decode_normal(rgb: [u8; 3]) -> [f64; 3] {
    rgb.map(|c| c as f64 / 255.0 * 2.0 - 1.0)
}

fn luminance(image: &TextureImage) -> Vec<f64> {
    image
        .pixels
        .pixels()
        .map(|p| {
            let [r, g, b, _] = p.0;
            (0.2126 * r as f64 + 0.7152 * g as f64 + 0.0722 * b as f64) / 255.0
        })
        .collect()
}

/// Height = Rec.709 luminance; gradients from a 3x3 Sobel stencil with
/// clamp-to-edge borders; normal = normalize(-s*gx, -s*gy, 1).
pub fn make_normal_map(image: &TextureImage, strength: f64) -> Result<NormalMap, TextureError> {
    if !(strength > 0.0 && strength.is_finite()) {
        return Err(TextureError::InvalidStrength(strength));
    }
    let (w, h) = image.pixels.dimensions();
    let height = luminance(image);
    let at = |x: i64, y: i64| {
        let x = x.clamp(0, w as i64 - 1) as usize;
        let y = y.clamp(0, h as i64 - 1) as usize;
        height[y * w as usize + x]
    };
    let pixels = RgbImage::from_fn(w, h, |x, y| {
        let (x, y) = (x as i64, y as i64);
        let gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
            - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
        let gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
            - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
        let n = [-strength * gx, -strength * gy, 1.0];
        let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        Rgb(encode_normal(n.map(|c| c / len)))
    });
    Ok(NormalMap { pixels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::{Rgba, RgbaImage};

    fn tex(img: RgbaImage) -> TextureImage {
        TextureImage::new(img).unwrap()
    }

    #[test]
    fn constant_image_is_flat() {
        let img = tex(RgbaImage::from_pixel(9, 7, Rgba([90, 30, 200, 255])));
        let map = make_normal_map(&img, DEFAULT_NORMAL_STRENGTH).unwrap();
        assert!(map.pixels.pixels().all(|p| p.0 == [128, 128, 255]));
        assert_eq!(map, NormalMap::flat(9, 7));
    }

    #[test]
    fn horizontal_ramp() {
        let img = tex(RgbaImage::from_fn(16, 8, |x, _| {
            let v = (x * 16) as u8;
            Rgba([v, v, v, 255])
        }));
        let map = make_normal_map(&img, 1.0).unwrap();
        let reference = map.pixels.get_pixel(1, 1).0;
        assert_eq!(reference[1], 128);
        for y in 0..8 {
            for x in 1..15 {
                assert_eq!(map.pixels.get_pixel(x, y).0, reference);
            }
        }
        // Brighter to the right tilts the normal toward -x.
        assert!(reference[0] < 128);
    }

    #[test]
    fn single_bright_pixel() {
        let mut img = RgbaImage::from_pixel(5, 5, Rgba([0, 0, 0, 255]));
        img.put_pixel(2, 2, Rgba([255, 255, 255, 255]));
        let map = make_normal_map(&tex(img), 1.0).unwrap();
        // Hand-evaluated Sobel stencil around the impulse (x right, y down).
        let expected: [[[u8; 3]; 3]; 3] = [
            [[54, 54, 201], [128, 13, 185], [201, 54, 201]],
            [[13, 128, 185], [128, 128, 255], [242, 128, 185]],
            [[54, 201, 201], [128, 242, 185], [201, 201, 201]],
        ];
        for dy in 0..3 {
            for dx in 0..3 {
                assert_eq!(
                    map.pixels.get_pixel(1 + dx, 1 + dy).0,
                    expected[dy as usize][dx as usize]
                );
            }
        }
    }

    #[test]
    fn decoded_normals_are_unit() {
        let img = tex(RgbaImage::from_fn(32, 32, |x, y| {
            let v = ((x * x + 3 * y) % 256) as u8;
            Rgba([v, v / 2, 255 - v, 255])
        }));
        let map = make_normal_map(&img, 3.0).unwrap();
        for y in 0..32 {
            for x in 0..32 {
                let n = map.decode(x, y);
                let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
                assert!((len - 1.0).abs() <= 2.0 * 3f64.sqrt() / 255.0, "{len}");
                assert!(n[2] >= 0.0);
            }
        }
    }

    #[test]
    fn rejects_bad_strength() {
        let img = tex(RgbaImage::new(2, 2));
        assert!(make_normal_map(&img, 0.0).is_err());
        assert!(make_normal_map(&img, f64::NAN).is_err());
    }
}
