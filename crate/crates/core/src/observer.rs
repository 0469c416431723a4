//! Extended-state disturbance observer.
//!
//! Treats `F₁ = ω_e` and `F₂ = J⁻¹d` as states and estimates them from the
//! measured angular-velocity error and the applied torque.

use nalgebra::{Complex, Matrix2, Vector3};

use crate::dynamics::SpacecraftParams;
use crate::error::{PapError, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObserverParams {
    /// `C₁`
    pub c1: f64,
    /// `C₂`
    pub c2: f64,
    /// `β`
    pub beta: f64,
}

impl Default for ObserverParams {
    /// Both per-axis poles at −1.
    fn default() -> Self {
        Self { c1: 2.0, c2: 1.0, beta: 1.0 }
    }
}

impl ObserverParams {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("c1", self.c1), ("c2", self.c2), ("beta", self.beta)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(PapError::InvalidParameter {
                    name,
                    reason: format!("must be positive and finite, got {value}"),
                });
            }
        }
        Ok(())
    }

    /// Per-axis estimation-error dynamics: `d/dt [e₁, e₂] = M [e₁, e₂] − [0, ξ]`
    /// with `e = F̂ − F` and `ξ = J⁻¹ḋ`.
    pub fn error_matrix(&self) -> Matrix2<f64> {
        Matrix2::new(-self.c1 * self.beta, 1.0, -self.c2 * self.beta * self.beta, 0.0)
    }

    /// Eigenvalues of [`Self::error_matrix`], i.e. roots of `λ² + C₁βλ + C₂β²`.
    pub fn error_poles(&self) -> [Complex<f64>; 2] {
        let m = self.error_matrix();
        let half_trace = 0.5 * m.trace();
        let disc = Complex::new(half_trace * half_trace - m.determinant(), 0.0).sqrt();
        [half_trace + disc, half_trace - disc]
    }
}

/// Estimates of `ω_e` (rad/s) and `J⁻¹d` (rad/s²).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ObserverState {
    pub f1_hat: Vector3<f64>,
    pub f2_hat: Vector3<f64>,
}

impl ObserverState {
    /// Starts with `F̂₁ = ω_e` and no disturbance estimate.
    pub fn initial(omega_e: &Vector3<f64>) -> Self {
        Self { f1_hat: *omega_e, f2_hat: Vector3::zeros() }
    }
}

/// `(Ḟ̂₁, Ḟ̂₂)` given the measured `ω_e`, applied torque and coupling term `Ω_e`.
pub fn observer_derivative(
    obs: &ObserverState,
    omega_e: &Vector3<f64>,
    u_applied: &Vector3<f64>,
    coupling: &Vector3<f64>,
    params: &SpacecraftParams,
    op: &ObserverParams,
) -> (Vector3<f64>, Vector3<f64>) {
    let e1 = obs.f1_hat - omega_e;
    let j_inv = params.inertia_inv();
    let f1_dot = j_inv * coupling + j_inv * u_applied + obs.f2_hat - op.c1 * op.beta * e1;
    let f2_dot = -op.c2 * op.beta * op.beta * e1;
    (f1_dot, f2_dot)
}

/// `d̂ = J F̂₂`.
pub fn disturbance_estimate(obs: &ObserverState, params: &SpacecraftParams) -> Vector3<f64> {
    params.inertia() * obs.f2_hat
}
