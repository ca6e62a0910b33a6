//! 1D texture synthesis: turns a short vertical mark into a long texture by
//! walking source rows and occasionally jumping to a similar row, then cuts the
//! window whose wrap seam is most similar so the result loops.

use image::RgbaImage;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::color::LabColor;
use crate::texture::TextureImage;

pub const DEFAULT_OUTPUT_HEIGHT: usize = 2048;
/// The walk buffer is this many times longer than the requested output.
pub const BUFFER_FACTOR: usize = 5;

#[derive(Debug, thiserror::Error)]
pub enum SynthesisError {
    #[error("source needs at least 2 rows, got {0}")]
    SourceTooShort(u32),
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("buffer of {len} rows is shorter than the {height}-row output")]
    BufferTooShort { len: usize, height: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthesisParams {
    pub jump_probability: f64,
    /// Largest row distance a jump may cross. `None` means unlimited.
    pub min_quality: Option<f64>,
    pub min_jump_size: usize,
    pub output_height: usize,
    pub seed: u64,
}

impl Default for SynthesisParams {
    fn default() -> Self {
        Self {
            jump_probability: 0.05,
            min_quality: None,
            min_jump_size: 8,
            output_height: DEFAULT_OUTPUT_HEIGHT,
            seed: 0,
        }
    }
}

impl SynthesisParams {
    pub fn validate(&self) -> Result<(), SynthesisError> {
        if !(0.0..=1.0).contains(&self.jump_probability) {
            return Err(SynthesisError::InvalidParams(format!(
                "jump probability {} outside [0, 1]",
                self.jump_probability
            )));
        }
        if let Some(q) = self.min_quality {
            if q.is_nan() || q < 0.0 {
                return Err(SynthesisError::InvalidParams(format!("min quality {q} must be >= 0")));
            }
        }
        if self.min_jump_size < 1 {
            return Err(SynthesisError::InvalidParams("min jump size must be >= 1".into()));
        }
        if self.output_height < 2 {
            return Err(SynthesisError::InvalidParams("output height must be >= 2".into()));
        }
        Ok(())
    }

    fn quality_limit(&self) -> f64 {
        self.min_quality.unwrap_or(f64::INFINITY)
    }
}

/// Symmetric matrix of RMS Lab distances between source rows.
#[derive(Debug, Clone, PartialEq)]
pub struct RowSimilarity {
    size: usize,
    data: Vec<f64>,
}

impl RowSimilarity {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.size + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.size..(i + 1) * self.size]
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Builds a matrix from raw entries (row-major `size * size`).
    pub fn from_raw(size: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), size * size);
        Self { size, data }
    }
}

fn lab_rows(source: &TextureImage) -> Vec<Vec<LabColor>> {
    let (w, h) = source.pixels.dimensions();
    (0..h)
        .map(|y| {
            (0..w)
                .map(|x| {
                    let [r, g, b, _] = source.pixels.get_pixel(x, y).0;
                    LabColor::from_srgb8([r, g, b])
                })
                .collect()
        })
        .collect()
}

/// `D[i][j]` = root-mean-square ΔE76 between rows `i` and `j`.
pub fn row_similarity(source: &TextureImage) -> Result<RowSimilarity, SynthesisError> {
    let h = source.height() as usize;
    if h < 2 {
        return Err(SynthesisError::SourceTooShort(source.height()));
    }
    let rows = lab_rows(source);
    let width = source.width() as f64;
    let data: Vec<f64> = (0..h)
        .into_par_iter()
        .flat_map_iter(|i| {
            let rows = &rows;
            (0..h).map(move |j| {
                if i == j {
                    return 0.0;
                }
                // Same operand order for (i, j) and (j, i) keeps the matrix exactly symmetric.
                let (a, b) = if i < j { (i, j) } else { (j, i) };
                let sum: f64 = rows[a]
                    .iter()
                    .zip(&rows[b])
                    .map(|(p, q)| {
                        let d = p.delta_e76(*q);
                        d * d
                    })
                    .sum();
                (sum / width).sqrt()
            })
        })
        .collect();
    Ok(RowSimilarity { size: h, data })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisResult {
    /// Every source row visited by the walk, `BUFFER_FACTOR * output_height` long.
    pub buffer: Vec<usize>,
    /// Start of the chosen loop window inside `buffer`.
    pub window_start: usize,
    /// Source row for each output row.
    pub rows: Vec<usize>,
    pub image: TextureImage,
}

/// Sidecar record making a synthesized texture reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisRecord {
    pub params: SynthesisParams,
    pub source_height: usize,
    pub window_start: usize,
    pub seam_distance: f64,
}

fn walk(similarity: &RowSimilarity, params: &SynthesisParams) -> Vec<usize> {
    let h = similarity.size();
    let len = BUFFER_FACTOR * params.output_height;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let sigma = similarity.mean();
    let limit = params.quality_limit();

    // A jump-free walk is a plain tiling of the source; keep it in phase.
    let start = if params.jump_probability > 0.0 {
        rng.random_range(0..h)
    } else {
        0
    };
    let mut buffer = Vec::with_capacity(len);
    buffer.push(start);
    let mut weights = Vec::with_capacity(h);
    let mut candidates = Vec::with_capacity(h);
    while buffer.len() < len {
        let current = *buffer.last().unwrap();
        let next = (current + 1) % h;
        let mut chosen = next;
        if params.jump_probability > 0.0 && rng.random::<f64>() < params.jump_probability {
            candidates.clear();
            weights.clear();
            let dist = similarity.row(next);
            for (j, &d) in dist.iter().enumerate() {
                if d <= limit && j.abs_diff(next) >= params.min_jump_size {
                    candidates.push(j);
                    weights.push(if sigma > 0.0 { (-d / sigma).exp() } else { 1.0 });
                }
            }
            let total: f64 = weights.iter().sum();
            if !candidates.is_empty() && total > 0.0 {
                let mut pick = rng.random::<f64>() * total;
                chosen = *candidates.last().unwrap();
                for (&j, &w) in candidates.iter().zip(&weights) {
                    if pick < w {
                        chosen = j;
                        break;
                    }
                    pick -= w;
                }
            }
        }
        buffer.push(chosen);
    }
    buffer
}

/// Window start minimizing the wrap-seam distance `D[row(s), row(s + height)]`;
/// ties resolve to the smallest `s`.
pub fn find_loop(buffer: &[usize], similarity: &RowSimilarity, output_height: usize) -> Result<usize, SynthesisError> {
    if buffer.len() < output_height || output_height == 0 {
        return Err(SynthesisError::BufferTooShort {
            len: buffer.len(),
            height: output_height,
        });
    }
    let mut best = (0, f64::INFINITY);
    for s in 0..buffer.len() - output_height {
        let d = similarity.get(buffer[s], buffer[s + output_height]);
        if d < best.1 {
            best = (s, d);
        }
    }
    Ok(best.0)
}

fn seam_distance(buffer: &[usize], similarity: &RowSimilarity, start: usize, height: usize) -> f64 {
    buffer
        .get(start + height)
        .map(|&end| similarity.get(buffer[start], end))
        .unwrap_or(0.0)
}

pub fn synthesize(source: &TextureImage, params: &SynthesisParams) -> Result<SynthesisResult, SynthesisError> {
    let similarity = row_similarity(source)?;
    synthesize_with(source, &similarity, params)
}

/// Synthesis reusing a precomputed similarity matrix (interactive parameter sweeps).
pub fn synthesize_with(
    source: &TextureImage,
    similarity: &RowSimilarity,
    params: &SynthesisParams,
) -> Result<SynthesisResult, SynthesisError> {
    params.validate()?;
    if source.height() < 2 {
        return Err(SynthesisError::SourceTooShort(source.height()));
    }
    let buffer = walk(similarity, params);
    let window_start = if params.jump_probability > 0.0 {
        find_loop(&buffer, similarity, params.output_height)?
    } else {
        0
    };
    let rows = buffer[window_start..window_start + params.output_height].to_vec();
    let width = source.width();
    let src = &source.pixels;
    let mut pixels = RgbaImage::new(width, rows.len() as u32);
    let stride = width as usize * 4;
    for (y, &r) in rows.iter().enumerate() {
        let from = &src.as_raw()[r * stride..(r + 1) * stride];
        pixels.as_mut()[y * stride..(y + 1) * stride].copy_from_slice(from);
    }
    Ok(SynthesisResult {
        buffer,
        window_start,
        rows,
        image: TextureImage {
            pixels,
            physical_scale: source.physical_scale,
        },
    })
}

impl SynthesisResult {
    pub fn record(&self, params: &SynthesisParams, similarity: &RowSimilarity) -> SynthesisRecord {
        SynthesisRecord {
            params: params.clone(),
            source_height: similarity.size(),
            window_start: self.window_start,
            seam_distance: seam_distance(&self.buffer, similarity, self.window_start, params.output_height),
        }
    }
}
