//! Quaternion and 3x3 matrix primitives.
//!
//! Quaternions use the Hamilton product with the scalar part stored last,
//! `q = [q_v; q_0]`. The attitude error between a target `q_d` and the body
//! `q_s` is `q_e = q_d* ⊗ q_s`.

use std::ops::Mul;

use nalgebra::{Matrix3, Vector3, Vector4};

use crate::error::{PapError, Result};

/// Below this `|q_e0|` the kinematic Jacobian is treated as singular.
pub const SINGULARITY_GUARD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion {
    pub vec: Vector3<f64>,
    pub scalar: f64,
}

impl Quaternion {
    /// Builds a unit quaternion from `[x, y, z, w]`, normalizing the input.
    ///
    /// Panics if all four components are zero.
    pub fn new(x: f64, y: f64, z: f64, w: f64) -> Self {
        Self::from_parts(Vector3::new(x, y, z), w).normalized()
    }

    /// Stores the components as given, without normalizing.
    pub const fn from_parts(vec: Vector3<f64>, scalar: f64) -> Self {
        Self { vec, scalar }
    }

    pub fn identity() -> Self {
        Self::from_parts(Vector3::zeros(), 1.0)
    }

    /// Pure quaternion `[v; 0]`.
    pub fn pure(v: Vector3<f64>) -> Self {
        Self::from_parts(v, 0.0)
    }

    pub fn from_vector4(v: &Vector4<f64>) -> Self {
        Self::from_parts(Vector3::new(v[0], v[1], v[2]), v[3])
    }

    pub fn to_vector4(self) -> Vector4<f64> {
        Vector4::new(self.vec.x, self.vec.y, self.vec.z, self.scalar)
    }

    /// Rotation of `angle` radians about `axis`.
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64) -> Self {
        let half = 0.5 * angle;
        Self::from_parts(axis.normalize() * half.sin(), half.cos())
    }

    pub fn conjugate(self) -> Self {
        Self::from_parts(-self.vec, self.scalar)
    }

    pub fn norm(self) -> f64 {
        (self.vec.norm_squared() + self.scalar * self.scalar).sqrt()
    }

    pub fn normalized(self) -> Self {
        let n = self.norm();
        assert!(n > 0.0, "cannot normalize a zero quaternion");
        Self::from_parts(self.vec / n, self.scalar / n)
    }

    pub fn dot(self, other: Self) -> f64 {
        self.vec.dot(&other.vec) + self.scalar * other.scalar
    }

    pub fn is_finite(self) -> bool {
        self.vec.iter().all(|c| c.is_finite()) && self.scalar.is_finite()
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;

    /// Hamilton product.
    fn mul(self, rhs: Quaternion) -> Quaternion {
        let (a, a0) = (self.vec, self.scalar);
        let (b, b0) = (rhs.vec, rhs.scalar);
        Quaternion::from_parts(a0 * b + b0 * a + a.cross(&b), a0 * b0 - a.dot(&b))
    }
}

/// Cross-product matrix: `skew(a) * b == a × b`.
pub fn skew(a: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0)
}

/// Attitude error `q_d* ⊗ q_s`.
pub fn quat_error(q_d: Quaternion, q_s: Quaternion) -> Quaternion {
    q_d.conjugate() * q_s
}

/// Frame transformation matrix of `q`.
///
/// For the error quaternion this is `C_e`, which maps vectors resolved in the
/// target frame to the body frame: `C(q) v == vec(q* ⊗ [v; 0] ⊗ q)`.
pub fn rotation_matrix(q: Quaternion) -> Matrix3<f64> {
    let v = q.vec;
    let q0 = q.scalar;
    Matrix3::identity() * (q0 * q0 - v.norm_squared()) + 2.0 * v * v.transpose()
        - 2.0 * q0 * skew(&v)
}

/// Kinematic Jacobian `F_e = ½ (q_e0 I + q_ev^×)`.
pub fn fe_matrix(q: Quaternion) -> Matrix3<f64> {
    0.5 * (Matrix3::identity() * q.scalar + skew(&q.vec))
}

/// Closed-form inverse of [`fe_matrix`].
///
/// `det(F_e) = q_e0 (q_e0² + |q_ev|²) / 8`, so the inverse exists iff `q_e0 != 0`.
pub fn fe_inverse(q: Quaternion) -> Result<Matrix3<f64>> {
    let a = q.scalar;
    if a.abs() < SINGULARITY_GUARD {
        return Err(PapError::SingularJacobian { scalar: a, t: None });
    }
    let v = q.vec;
    let n2 = a * a + v.norm_squared();
    let adj = Matrix3::identity() * (a * a) + v * v.transpose() - a * skew(&v);
    Ok(adj * (2.0 / (a * n2)))
}

/// Time derivative of `F_e` for a given `ω_e`: `½(q̇_e0 I + (F_e ω_e)^×)`.
pub fn fe_matrix_rate(q: Quaternion, omega_e: &Vector3<f64>) -> Matrix3<f64> {
    let q0_dot = -0.5 * q.vec.dot(omega_e);
    let qv_dot = fe_matrix(q) * omega_e;
    0.5 * (Matrix3::identity() * q0_dot + skew(&qv_dot))
}

/// Quaternion kinematics `q̇ = ½ q ⊗ [ω; 0]` with `ω` resolved in the frame of `q`'s body.
pub fn quat_rate(q: Quaternion, omega: &Vector3<f64>) -> Quaternion {
    let p = q * Quaternion::pure(*omega);
    Quaternion::from_parts(0.5 * p.vec, 0.5 * p.scalar)
}
