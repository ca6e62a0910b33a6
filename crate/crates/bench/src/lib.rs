//! Inputs shared by the benchmarks.

use abr_core::texture::TextureImage;
use image::{Rgb, RgbImage, Rgba, RgbaImage};

/// Smooth two-tone washes with per-pixel grain, like a photographed painting.
pub fn painting(w: u32, h: u32) -> RgbImage {
    RgbImage::from_fn(w, h, |x, y| {
        let t = (0.5 + 0.5 * (x as f64 * 0.03 + y as f64 * 0.017).sin()).powi(2);
        let grain = ((x.wrapping_mul(2654435761) ^ y.wrapping_mul(40503)) >> 7) % 13;
        let c = |a: f64, b: f64| (a * (1.0 - t) + b * t) as u8 + grain as u8;
        Rgb([c(200.0, 50.0), c(160.0, 60.0), c(90.0, 120.0)])
    })
}

/// A scanned brush stroke: ink whose width and center wander down the rows.
pub fn stroke(w: u32, h: u32) -> TextureImage {
    let img = RgbaImage::from_fn(w, h, |x, y| {
        let t = y as f64 / h as f64;
        let center = w as f64 * (0.5 + 0.15 * (t * 9.0).sin());
        let half = w as f64 * (0.22 + 0.1 * (t * 23.0).cos());
        let ink = (1.0 - (x as f64 + 0.5 - center).abs() / half).max(0.0);
        Rgba([20, 18, 30, (ink * 255.0) as u8])
    });
    TextureImage::new(img).expect("non-empty stroke")
}
