use nalgebra::{Matrix3, Rotation3, UnitQuaternion};
use serde::{Deserialize, Serialize};

use super::{MeshError, TriMesh, Vec3};

/// Rotation from the scan frame into the canonical glyph frame (forward = +Z, up = +Y).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlyphOrientation {
    pub rotation: UnitQuaternion<f64>,
}

impl GlyphOrientation {
    pub fn identity() -> Self {
        Self {
            rotation: UnitQuaternion::identity(),
        }
    }

    /// Solves for the rotation taking `forward` to +Z and the part of `up`
    /// orthogonal to `forward` to +Y.
    pub fn from_directions(forward: Vec3, up: Vec3) -> Result<Self, MeshError> {
        let f = forward.try_normalize(1e-12).ok_or(MeshError::DegenerateDirection)?;
        let u = up.try_normalize(1e-12).ok_or(MeshError::DegenerateDirection)?;
        let ortho = u - f * u.dot(&f);
        if ortho.norm() < 1e-9 {
            return Err(MeshError::ParallelDirections);
        }
        let y = ortho.normalize();
        let x = y.cross(&f);
        // Rows are the scan-frame images of the canonical axes.
        let m = Matrix3::from_rows(&[x.transpose(), y.transpose(), f.transpose()]);
        let rotation = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(m));
        Ok(Self { rotation })
    }
}

/// Rotates the mesh into the canonical frame and moves its centroid to the origin.
pub fn orient_mesh(mesh: &TriMesh, forward: Vec3, up: Vec3) -> Result<(TriMesh, GlyphOrientation), MeshError> {
    let orientation = GlyphOrientation::from_directions(forward, up)?;
    Ok((apply_orientation(mesh, &orientation), orientation))
}

pub fn apply_orientation(mesh: &TriMesh, orientation: &GlyphOrientation) -> TriMesh {
    let r = orientation.rotation;
    let c = mesh.centroid();
    TriMesh {
        positions: mesh.positions.iter().map(|p| r * (p - c)).collect(),
        normals: mesh.normals.as_ref().map(|ns| ns.iter().map(|n| r * n).collect()),
        uvs: mesh.uvs.clone(),
        triangles: mesh.triangles.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::primitives::blob;

    fn centered_pair() -> TriMesh {
        TriMesh::new(
            vec![
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(-1.0, 0.0, 0.0),
                Vec3::new(0.0, 0.5, 0.0),
                Vec3::new(0.0, -0.5, 0.0),
            ],
            vec![[0, 2, 1], [0, 1, 3]],
        )
    }

    #[test]
    fn identity_for_canonical_directions() {
        let o = GlyphOrientation::from_directions(Vec3::z(), Vec3::y()).unwrap();
        assert!(o.rotation.angle() < 1e-12);
        let m = blob(3, 0.1, 2);
        let (out, _) = orient_mesh(&m, Vec3::z(), Vec3::y()).unwrap();
        let c = m.centroid();
        for (a, b) in m.positions.iter().zip(&out.positions) {
            assert!((a - c - b).norm() < 1e-12);
        }
    }

    #[test]
    fn forward_x_is_quarter_turn_about_y() {
        let (out, o) = orient_mesh(&centered_pair(), Vec3::x(), Vec3::y()).unwrap();
        assert!((out.positions[0] - Vec3::z()).norm() < 1e-12);
        let axis = o.rotation.axis().unwrap();
        assert!((axis.y.abs() - 1.0).abs() < 1e-12);
        assert!((o.rotation.angle() - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn defining_equations_hold() {
        let f = Vec3::new(1.0, 1.0, 0.0) / 2f64.sqrt();
        let up = Vec3::z();
        let o = GlyphOrientation::from_directions(f, up).unwrap();
        assert!((o.rotation * f - Vec3::z()).norm() < 1e-6);
        let up_perp = (up - f * up.dot(&f)).normalize();
        assert!((o.rotation * up_perp - Vec3::y()).norm() < 1e-6);
        assert!((o.rotation.norm() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn parallel_directions_fail() {
        assert!(matches!(
            GlyphOrientation::from_directions(Vec3::x(), Vec3::x() * -2.0),
            Err(MeshError::ParallelDirections)
        ));
        assert!(GlyphOrientation::from_directions(Vec3::zeros(), Vec3::x()).is_err());
    }

    #[test]
    fn rigid_transform() {
        let m = blob(4, 0.2, 9);
        let (out, _) = orient_mesh(&m, Vec3::new(0.3, -0.2, 0.9), Vec3::new(1.0, 2.0, 0.1)).unwrap();
        for i in (0..m.positions.len()).step_by(7) {
            for j in (0..m.positions.len()).step_by(11) {
                let d0 = (m.positions[i] - m.positions[j]).norm();
                let d1 = (out.positions[i] - out.positions[j]).norm();
                assert!((d0 - d1).abs() < 1e-6);
            }
        }
        assert!(out.centroid().norm() < 1e-9);
    }
}
