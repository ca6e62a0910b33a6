use serde::{Deserialize, Serialize};

use crate::mesh::{Aabb, Vec3};

/// Pinhole camera. Pixel `(x, y)` has its center at `(x + 0.5, y + 0.5)`,
/// with `y` growing downward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Camera {
    pub position: Vec3,
    pub look_at: Vec3,
    pub up: Vec3,
    /// Vertical field of view in degrees.
    pub fov_y: f64,
    pub width: u32,
    pub height: u32,
}

/// Orthonormal camera frame: `right`, `up`, and `forward` toward the target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraBasis {
    pub right: Vec3,
    pub up: Vec3,
    pub forward: Vec3,
    /// Focal length in pixels.
    pub focal: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Camera {
    pub fn new(position: Vec3, look_at: Vec3, up: Vec3, fov_y: f64, width: u32, height: u32) -> Self {
        Self {
            position,
            look_at,
            up,
            fov_y,
            width,
            height,
        }
    }

    /// Looks at the box center from `direction` (pointing from the target
    /// toward the camera), far enough back that the bounding sphere fits.
    pub fn framing(bounds: &Aabb, direction: Vec3, up: Vec3, fov_y: f64, width: u32, height: u32) -> Self {
        let center = bounds.center();
        let radius = (bounds.diagonal() * 0.5).max(1e-6);
        let vertical = fov_y.to_radians() * 0.5;
        let horizontal = (vertical.tan() * width as f64 / height as f64).atan();
        let half = vertical.min(horizontal);
        let distance = radius / half.sin();
        let dir = direction.try_normalize(1e-12).unwrap_or(Vec3::z());
        Self::new(center + dir * distance, center, up, fov_y, width, height)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.width == 0 || self.height == 0 || self.width > 16384 || self.height > 16384 {
            return Err(format!(
                "image size {}x{} must be within 1..=16384",
                self.width, self.height
            ));
        }
        if !(self.fov_y > 0.0 && self.fov_y < 180.0) {
            return Err(format!(
                "vertical field of view {} must be in (0, 180) degrees",
                self.fov_y
            ));
        }
        let finite = |v: &Vec3| v.iter().all(|c| c.is_finite());
        if !(finite(&self.position) && finite(&self.look_at) && finite(&self.up)) {
            return Err("camera vectors must be finite".into());
        }
        self.basis().map(|_| ())
    }

    pub fn basis(&self) -> Result<CameraBasis, String> {
        let forward = (self.look_at - self.position)
            .try_normalize(1e-12)
            .ok_or("camera position equals its look-at point")?;
        let right = forward
            .cross(&self.up)
            .try_normalize(1e-9)
            .ok_or("camera up vector is parallel to the view direction")?;
        let up = right.cross(&forward);
        let focal = self.height as f64 * 0.5 / (self.fov_y.to_radians() * 0.5).tan();
        Ok(CameraBasis {
            right,
            up,
            forward,
            focal,
            cx: self.width as f64 * 0.5,
            cy: self.height as f64 * 0.5,
        })
    }
}

impl CameraBasis {
    /// World point to camera space `(x right, y up, z forward)`.
    pub fn to_view(&self, eye: &Vec3, p: &Vec3) -> Vec3 {
        let d = p - eye;
        Vec3::new(d.dot(&self.right), d.dot(&self.up), d.dot(&self.forward))
    }

    /// Camera-space point (z > 0) to continuous pixel coordinates.
    pub fn project(&self, v: &Vec3) -> [f64; 2] {
        [self.cx + self.focal * v.x / v.z, self.cy - self.focal * v.y / v.z]
    }

    /// Unit world direction through continuous pixel coordinates.
    pub fn ray(&self, px: f64, py: f64) -> Vec3 {
        let x = (px - self.cx) / self.focal;
        let y = (self.cy - py) / self.focal;
        (self.forward + self.right * x + self.up * y).normalize()
    }
}
