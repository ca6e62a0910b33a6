use nalgebra::Point2;

use crate::mesh::{TriMesh, Vec3};
use crate::scene::{LineSampling, LineStyle, Polyline};

use super::RenderError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtrudeOptions {
    pub style: LineStyle,
    /// Full ribbon width, or tube radius.
    pub size: f64,
    pub sides: usize,
    /// Degrees about the tangent applied to the line normal.
    pub rotational_offset: f64,
    pub sampling: LineSampling,
    /// Arc-length or time step; `None` divides the line into as many steps as it has segments.
    pub step: Option<f64>,
}

impl Default for ExtrudeOptions {
    fn default() -> Self {
        Self {
            style: LineStyle::Ribbon,
            size: 1.0,
            sides: 12,
            rotational_offset: 0.0,
            sampling: LineSampling::Points,
            step: None,
        }
    }
}

/// Extruded line geometry. `u` is the arc length from the line origin and
/// `v` runs from 0 to 1 across the ribbon or around the tube.
#[derive(Debug, Clone)]
pub struct Extrusion {
    pub mesh: TriMesh,
    /// Fractional index into the input points for each mesh vertex, for
    /// interpolating per-point variables.
    pub params: Vec<f64>,
    /// Centerline samples the mesh was built on.
    pub samples: Vec<Vec3>,
    pub length: f64,
}

/// Sweeps a ribbon or tube along `line`. Input normals (projected off the
/// tangent) orient the cross-section; without them a rotation-minimizing
/// frame is transported from the start. `scales` multiplies the size per
/// input point.
pub fn extrude_line(line: &Polyline, opts: &ExtrudeOptions, scales: Option<&[f64]>) -> Result<Extrusion, RenderError> {
    let pts = &line.points;
    if pts.len() < 2 {
        return Err(RenderError::Geometry("a line needs at least 2 points".into()));
    }
    if !(opts.size.is_finite() && opts.size > 0.0) {
        return Err(RenderError::Geometry(format!(
            "line size must be positive, got {}",
            opts.size
        )));
    }
    if opts.style == LineStyle::Tube && opts.sides < 3 {
        return Err(RenderError::Geometry("a tube needs at least 3 sides".into()));
    }
    let mut cum = Vec::with_capacity(pts.len());
    cum.push(0.0);
    for w in pts.windows(2) {
        cum.push(cum.last().unwrap() + (w[1] - w[0]).norm());
    }
    let length = *cum.last().unwrap();
    if !(length > 0.0) {
        return Err(RenderError::Geometry("line has zero length".into()));
    }

    let params = resample(line, &cum, opts)?;
    // Drop samples that do not advance along the line so u stays strictly increasing.
    let mut kept: Vec<(f64, f64)> = Vec::with_capacity(params.len());
    for p in params {
        let s = lerp_at(&cum, p);
        if kept.last().is_none_or(|&(_, ls)| s - ls > length * 1e-12) {
            kept.push((p, s));
        } else if p == (pts.len() - 1) as f64 {
            *kept.last_mut().unwrap() = (p, s);
        }
    }
    if kept.len() < 2 {
        return Err(RenderError::Geometry("line has fewer than 2 distinct samples".into()));
    }
    let centers: Vec<Vec3> = kept.iter().map(|&(p, _)| point_at(pts, p)).collect();
    let n = centers.len();
    let tangents: Vec<Vec3> = (0..n)
        .map(|i| {
            let a = centers[i.saturating_sub(1)];
            let b = centers[(i + 1).min(n - 1)];
            (b - a).try_normalize(1e-300).unwrap_or(Vec3::z())
        })
        .collect();
    let normals = frame_normals(line, &kept, &tangents);

    let theta = opts.rotational_offset.to_radians();
    let (sin_t, cos_t) = theta.sin_cos();
    let mut positions = Vec::new();
    let mut vnormals = Vec::new();
    let mut uvs = Vec::new();
    let mut vparams = Vec::new();
    let mut triangles = Vec::new();
    let ring = match opts.style {
        LineStyle::Ribbon => 2,
        LineStyle::Tube => opts.sides + 1,
    };
    for i in 0..n {
        let t = tangents[i];
        let nr = normals[i] * cos_t + t.cross(&normals[i]) * sin_t;
        let b = t.cross(&nr);
        let (p, s) = kept[i];
        let size = opts.size * scales.map_or(1.0, |sc| lerp_at(sc, p));
        match opts.style {
            LineStyle::Ribbon => {
                for (k, side) in [-0.5, 0.5].into_iter().enumerate() {
                    positions.push(centers[i] + b * (side * size));
                    vnormals.push(nr);
                    uvs.push(Point2::new(s, k as f64));
                    vparams.push(p);
                }
            }
            LineStyle::Tube => {
                for j in 0..=opts.sides {
                    let phi = std::f64::consts::TAU * j as f64 / opts.sides as f64;
                    let dir = nr * phi.cos() + b * phi.sin();
                    positions.push(centers[i] + dir * size);
                    vnormals.push(dir);
                    uvs.push(Point2::new(s, j as f64 / opts.sides as f64));
                    vparams.push(p);
                }
            }
        }
        if i + 1 < n {
            let r0 = (i * ring) as u32;
            let r1 = r0 + ring as u32;
            for j in 0..ring as u32 - 1 {
                triangles.push([r0 + j, r0 + j + 1, r1 + j]);
                triangles.push([r0 + j + 1, r1 + j + 1, r1 + j]);
            }
        }
    }
    Ok(Extrusion {
        mesh: TriMesh {
            positions,
            normals: Some(vnormals),
            uvs: Some(uvs),
            triangles,
        },
        params: vparams,
        samples: centers,
        length,
    })
}

/// Fractional point indices of the centerline samples.
fn resample(line: &Polyline, cum: &[f64], opts: &ExtrudeOptions) -> Result<Vec<f64>, RenderError> {
    let last = (line.points.len() - 1) as f64;
    let (axis, default_step) = match opts.sampling {
        LineSampling::Points => return Ok((0..line.points.len()).map(|i| i as f64).collect()),
        LineSampling::ArcLength => (cum.to_vec(), *cum.last().unwrap() / last),
        LineSampling::IntegrationTime => {
            let times = line
                .times
                .as_ref()
                .ok_or_else(|| RenderError::Geometry("integration-time sampling needs per-point times".into()))?;
            if times.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(RenderError::Geometry("line times must be strictly increasing".into()));
            }
            (times.clone(), (times[times.len() - 1] - times[0]) / last)
        }
    };
    let step = opts.step.unwrap_or(default_step);
    if !(step.is_finite() && step > 0.0) {
        return Err(RenderError::Geometry(format!(
            "sampling step must be positive, got {step}"
        )));
    }
    let (start, end) = (axis[0], axis[axis.len() - 1]);
    let count = ((end - start) / step).floor() as usize;
    if count > 1_000_000 {
        return Err(RenderError::Geometry(format!(
            "sampling step {step} yields more than a million samples"
        )));
    }
    let mut out = Vec::with_capacity(count + 2);
    let mut seg = 0;
    for k in 0..=count {
        let x = start + k as f64 * step;
        while seg + 2 < axis.len() && axis[seg + 1] <= x {
            seg += 1;
        }
        let span = axis[seg + 1] - axis[seg];
        let f = if span > 0.0 {
            ((x - axis[seg]) / span).clamp(0.0, 1.0)
        } else {
            0.0
        };
        out.push(seg as f64 + f);
    }
    if out.last() != Some(&last) {
        out.push(last);
    }
    Ok(out)
}

fn lerp_at(values: &[f64], p: f64) -> f64 {
    let i = (p.floor() as usize).min(values.len() - 1);
    let f = p - i as f64;
    if f > 0.0 && i + 1 < values.len() {
        values[i] * (1.0 - f) + values[i + 1] * f
    } else {
        values[i]
    }
}

fn point_at(pts: &[Vec3], p: f64) -> Vec3 {
    let i = (p.floor() as usize).min(pts.len() - 1);
    let f = p - i as f64;
    if f > 0.0 && i + 1 < pts.len() {
        pts[i].lerp(&pts[i + 1], f)
    } else {
        pts[i]
    }
}

fn any_perpendicular(t: &Vec3) -> Vec3 {
    let axis = if t.x.abs() <= t.y.abs() && t.x.abs() <= t.z.abs() {
        Vec3::x()
    } else if t.y.abs() <= t.z.abs() {
        Vec3::y()
    } else {
        Vec3::z()
    };
    (axis - t * axis.dot(t)).normalize()
}

/// Unit normals perpendicular to the tangents: the input normals where they
/// are usable, otherwise double-reflection rotation-minimizing transport.
fn frame_normals(line: &Polyline, kept: &[(f64, f64)], tangents: &[Vec3]) -> Vec<Vec3> {
    let given: Option<Vec<Option<Vec3>>> = line.normals.as_ref().map(|ns| {
        kept.iter()
            .zip(tangents)
            .map(|(&(p, _), t)| {
                let n = point_at(ns, p);
                (n - t * n.dot(t)).try_normalize(1e-9)
            })
            .collect()
    });
    let mut out = Vec::with_capacity(tangents.len());
    let first = given
        .as_ref()
        .and_then(|g| g[0])
        .unwrap_or_else(|| any_perpendicular(&tangents[0]));
    out.push(first);
    for i in 1..tangents.len() {
        if let Some(n) = given.as_ref().and_then(|g| g[i]) {
            out.push(n);
            continue;
        }
        let prev = out[i - 1];
        // Double reflection (Wang et al.) between consecutive samples.
        let x0 = point_at(&line.points, kept[i - 1].0);
        let x1 = point_at(&line.points, kept[i].0);
        let v1 = x1 - x0;
        let c1 = v1.dot(&v1);
        if c1 < 1e-300 {
            out.push(prev);
            continue;
        }
        let r_l = prev - v1 * (2.0 / c1 * v1.dot(&prev));
        let t_l = tangents[i - 1] - v1 * (2.0 / c1 * v1.dot(&tangents[i - 1]));
        let v2 = tangents[i] - t_l;
        let c2 = v2.dot(&v2);
        let r = if c2 < 1e-300 {
            r_l
        } else {
            r_l - v2 * (2.0 / c2 * v2.dot(&r_l))
        };
        let t = tangents[i];
        out.push(
            (r - t * r.dot(&t))
                .try_normalize(1e-12)
                .unwrap_or_else(|| any_perpendicular(&t)),
        );
    }
    out
}
