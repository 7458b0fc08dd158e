//! Minimal rotation algebra on 3x3 matrices: the skew operator, the
//! Rodrigues exponential and a polar-projection repair for drifting
//! rotation matrices.

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

/// Column vector in R³. Units depend on context (length, 1/s, ...).
pub type Vec3 = Vector3<f64>;

/// 3x3 real matrix. Rotation matrices map body coordinates to the fixed frame.
pub type Mat3 = Matrix3<f64>;

/// Below this rotation angle `rot_exp` switches to its second-order series.
pub const SMALL_ANGLE: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("matrix is too far from a rotation to repair (det = {det})")]
    NearSingular { det: f64 },
    #[error("matrix contains non-finite entries")]
    NonFinite,
}

/// Skew-symmetric matrix with `hat(v) * w == v.cross(w)`.
#[inline]
pub fn hat(v: &Vec3) -> Mat3 {
    Mat3::new(
        0.0, -v.z, v.y, //
        v.z, 0.0, -v.x, //
        -v.y, v.x, 0.0,
    )
}

/// Rotation matrix `exp(hat(v))` for a rotation vector `v` (radians).
pub fn rot_exp(v: &Vec3) -> Mat3 {
    let theta = v.norm();
    let k = hat(v);
    let k2 = k * k;
    if theta < SMALL_ANGLE {
        return Mat3::identity() + k + 0.5 * k2;
    }
    let a = theta.sin() / theta;
    let b = (1.0 - theta.cos()) / (theta * theta);
    Mat3::identity() + a * k + b * k2
}

/// Rotation by `angle` about the unit vector `axis`; skips the norm that
/// `rot_exp` would recompute.
#[inline]
pub fn rot_axis_angle(axis: &Vec3, angle: f64) -> Mat3 {
    let k = hat(axis);
    let (s, c) = angle.sin_cos();
    Mat3::identity() + s * k + (1.0 - c) * (k * k)
}

/// Rotates `w` by `angle` about the unit vector `axis` without forming a matrix.
#[inline]
pub fn rotate_about(axis: &Vec3, angle: f64, w: &Vec3) -> Vec3 {
    let (s, c) = angle.sin_cos();
    let along = axis.dot(w) * axis;
    along + c * (w - along) + s * axis.cross(w)
}

/// `‖RᵀR − I‖_F`.
pub fn orthonormality_error(r: &Mat3) -> f64 {
    (r.transpose() * r - Mat3::identity()).norm()
}

/// Nearest rotation matrix in the Frobenius norm (orthogonal polar factor),
/// computed with the Newton iteration `X ← (X + X⁻ᵀ)/2`.
pub fn orthonormalize(r: &Mat3) -> Result<Mat3, GeometryError> {
    if r.iter().any(|x| !x.is_finite()) {
        return Err(GeometryError::NonFinite);
    }
    let det = r.determinant();
    if det <= 0.5 {
        return Err(GeometryError::NearSingular { det });
    }
    let mut x = *r;
    for _ in 0..32 {
        let inv_t = match x.try_inverse() {
            Some(inv) => inv.transpose(),
            None => return Err(GeometryError::NearSingular { det }),
        };
        let next = 0.5 * (x + inv_t);
        let delta = (next - x).norm();
        x = next;
        if delta < 1e-15 {
            break;
        }
    }
    Ok(x)
}
