use serde::{Deserialize, Serialize};

use super::{ColorError, LabColor};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlPoint {
    pub position: f64,
    pub color: LabColor,
}

/// A continuous colormap defined by Lab control points on `[0, 1]`.
///
/// Positions are strictly increasing, the first is 0 and the last is 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColorMap {
    name: String,
    points: Vec<ControlPoint>,
}

impl ColorMap {
    /// Builds a colormap, rescaling positions so that they span `[0, 1]`.
    pub fn new(name: impl Into<String>, points: Vec<ControlPoint>) -> Result<Self, ColorError> {
        if points.len() < 2 {
            return Err(ColorError::TooFewControlPoints(points.len()));
        }
        for p in &points {
            let c = p.color;
            if !(p.position.is_finite() && c.l.is_finite() && c.a.is_finite() && c.b.is_finite()) {
                return Err(ColorError::NonFinite);
            }
        }
        for (i, w) in points.windows(2).enumerate() {
            if w[1].position <= w[0].position {
                return Err(ColorError::UnorderedPositions { index: i + 1 });
            }
        }
        let lo = points[0].position;
        let hi = points[points.len() - 1].position;
        let mut points = points;
        if lo != 0.0 || hi != 1.0 {
            let span = hi - lo;
            for p in &mut points {
                p.position = (p.position - lo) / span;
            }
            let last = points.len() - 1;
            points[0].position = 0.0;
            points[last].position = 1.0;
            for (i, w) in points.windows(2).enumerate() {
                if w[1].position <= w[0].position {
                    return Err(ColorError::UnorderedPositions { index: i + 1 });
                }
            }
        }
        Ok(Self {
            name: name.into(),
            points,
        })
    }

    /// Evenly spaced control points from a list of colors.
    pub fn evenly_spaced(name: impl Into<String>, colors: &[LabColor]) -> Result<Self, ColorError> {
        if colors.len() < 2 {
            return Err(ColorError::TooFewControlPoints(colors.len()));
        }
        let n = colors.len() - 1;
        let points = colors
            .iter()
            .enumerate()
            .map(|(i, &color)| ControlPoint {
                position: i as f64 / n as f64,
                color,
            })
            .collect();
        Self::new(name, points)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn points(&self) -> &[ControlPoint] {
        &self.points
    }

    /// Piecewise-linear Lab interpolation; `t` is clamped to `[0, 1]`.
    pub fn sample(&self, t: f64) -> LabColor {
        let t = if t.is_nan() { 0.0 } else { t.clamp(0.0, 1.0) };
        // First index with position > t.
        let upper = self.points.partition_point(|p| p.position <= t);
        if upper == 0 {
            return self.points[0].color;
        }
        let lower = &self.points[upper - 1];
        if lower.position == t || upper == self.points.len() {
            return lower.color;
        }
        let next = &self.points[upper];
        let f = (t - lower.position) / (next.position - lower.position);
        lower.color.lerp(next.color, f)
    }

    pub fn sample_srgb8(&self, t: f64) -> [u8; 3] {
        self.sample(t).to_srgb8()
    }
}

impl<'de> Deserialize<'de> for ColorMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            name: String,
            points: Vec<ControlPoint>,
        }
        let raw = Raw::deserialize(d)?;
        ColorMap::new(raw.name, raw.points).map_err(serde::de::Error::custom)
    }
}

/// Free function form of [`ColorMap::sample`].
pub fn sample_colormap(map: &ColorMap, t: f64) -> LabColor {
    map.sample(t)
}
