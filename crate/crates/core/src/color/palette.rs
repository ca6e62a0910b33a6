//! Palette extraction by a population-weighted median cut in Lab space.
//!
//! Boxes are split in order of `population * longest_axis_extent`, so large
//! populous clusters are refined first while sparse outliers still get a box
//! once their extent dominates. Each swatch is the population mean of its box.

use std::collections::HashMap;

use image::RgbImage;
use serde::{Deserialize, Serialize};

use super::{ColorError, LabColor};

pub const DEFAULT_PALETTE_SIZE: usize = 6;

/// Pixel provenance for a swatch picked directly from a source image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourcePixel {
    pub image_id: u32,
    pub x: u32,
    pub y: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Swatch {
    pub color: LabColor,
    /// Number of source pixels represented by this swatch (0 for hand-picked swatches).
    pub population: u64,
    pub source_pixel: Option<SourcePixel>,
}

impl Swatch {
    /// A swatch picked from a pixel of `image`.
    pub fn pick(image: &RgbImage, image_id: u32, x: u32, y: u32) -> Result<Swatch, ColorError> {
        if x >= image.width() || y >= image.height() {
            return Err(ColorError::PixelOutOfBounds {
                x,
                y,
                width: image.width(),
                height: image.height(),
            });
        }
        Ok(Swatch {
            color: LabColor::from_srgb8(image.get_pixel(x, y).0),
            population: 0,
            source_pixel: Some(SourcePixel { image_id, x, y }),
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    lab: [f64; 3],
    count: u64,
}

#[derive(Debug, Clone)]
struct ColorBox {
    entries: Vec<Entry>,
    population: u64,
    order: usize,
}

impl ColorBox {
    fn new(entries: Vec<Entry>, order: usize) -> Self {
        let population = entries.iter().map(|e| e.count).sum();
        Self {
            entries,
            population,
            order,
        }
    }

    /// (axis, extent) of the longest Lab axis.
    fn longest_axis(&self) -> (usize, f64) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for e in &self.entries {
            for k in 0..3 {
                lo[k] = lo[k].min(e.lab[k]);
                hi[k] = hi[k].max(e.lab[k]);
            }
        }
        let mut best = (0, 0.0);
        for k in 0..3 {
            let extent = hi[k] - lo[k];
            if extent > best.1 {
                best = (k, extent);
            }
        }
        best
    }

    fn priority(&self) -> f64 {
        self.population as f64 * self.longest_axis().1
    }

    fn mean(&self) -> LabColor {
        if self.population == 0 {
            let e = self.entries.first().map(|e| e.lab).unwrap_or([0.0; 3]);
            return LabColor::from_array(e);
        }
        let mut acc = [0.0; 3];
        for e in &self.entries {
            for k in 0..3 {
                acc[k] += e.lab[k] * e.count as f64;
            }
        }
        LabColor::from_array(acc.map(|c| c / self.population as f64))
    }

    /// Splits at the population median of the longest axis. Requires a non-zero extent.
    fn split(mut self, axis: usize, next_order: usize) -> (ColorBox, ColorBox) {
        self.entries
            .sort_by(|a, b| a.lab[axis].total_cmp(&b.lab[axis]).then(a.count.cmp(&b.count)));
        let half = self.population / 2;
        let mut acc = 0;
        let mut cut = 1;
        for (i, e) in self.entries.iter().enumerate() {
            acc += e.count;
            if acc >= half {
                cut = i + 1;
                break;
            }
        }
        // Both halves must keep at least one distinct color.
        let cut = cut.clamp(1, self.entries.len() - 1);
        let upper = self.entries.split_off(cut);
        (
            ColorBox::new(self.entries, self.order),
            ColorBox::new(upper, next_order),
        )
    }

    /// Divides the population of a box without color extent, producing a duplicate.
    fn split_population(mut self, next_order: usize) -> (ColorBox, ColorBox) {
        let mut other = self.entries.clone();
        for (mine, theirs) in self.entries.iter_mut().zip(other.iter_mut()) {
            theirs.count = mine.count / 2;
            mine.count -= theirs.count;
        }
        other.retain(|e| e.count > 0);
        if other.is_empty() {
            other.push(Entry {
                lab: self.entries[0].lab,
                count: 0,
            });
        }
        (
            ColorBox::new(self.entries, self.order),
            ColorBox::new(other, next_order),
        )
    }
}

fn histogram(image: &RgbImage) -> Vec<Entry> {
    let mut counts: HashMap<[u8; 3], u64> = HashMap::new();
    for p in image.pixels() {
        *counts.entry(p.0).or_default() += 1;
    }
    let mut keys: Vec<_> = counts.into_iter().collect();
    keys.sort_unstable_by_key(|(rgb, _)| *rgb);
    keys.into_iter()
        .map(|(rgb, count)| Entry {
            lab: LabColor::from_srgb8(rgb).to_array(),
            count,
        })
        .collect()
}

/// Extracts `count` prominent colors, ordered by descending box population.
///
/// Images with fewer distinct colors than `count` yield duplicate swatches whose
/// populations still sum to the pixel count.
pub fn extract_palette(image: &RgbImage, count: usize) -> Result<Vec<Swatch>, ColorError> {
    if image.width() == 0 || image.height() == 0 {
        return Err(ColorError::EmptyImage);
    }
    if count == 0 {
        return Err(ColorError::InvalidPaletteSize);
    }
    let mut boxes = vec![ColorBox::new(histogram(image), 0)];
    let mut next_order = 1;
    while boxes.len() < count {
        let splittable = boxes
            .iter()
            .enumerate()
            .filter(|(_, b)| b.entries.len() > 1)
            .max_by(|(ia, a), (ib, b)| a.priority().total_cmp(&b.priority()).then(ib.cmp(ia)));
        let (a, b) = match splittable {
            Some((i, _)) => {
                let chosen = boxes.swap_remove(i);
                let (axis, _) = chosen.longest_axis();
                chosen.split(axis, next_order)
            }
            None => {
                let (i, _) = boxes
                    .iter()
                    .enumerate()
                    .max_by(|(ia, a), (ib, b)| a.population.cmp(&b.population).then(ib.cmp(ia)))
                    .expect("at least one box");
                boxes.swap_remove(i).split_population(next_order)
            }
        };
        next_order += 1;
        boxes.push(a);
        boxes.push(b);
    }
    boxes.sort_by(|a, b| b.population.cmp(&a.population).then(a.order.cmp(&b.order)));
    Ok(boxes
        .iter()
        .map(|b| Swatch {
            color: b.mean(),
            population: b.population,
            source_pixel: None,
        })
        .collect())
}
