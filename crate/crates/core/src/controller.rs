//! Precisely-assigned performance control law.
//!
//! The outer loop shapes the tracking error `s = q_ev − ρ` through a virtual
//! angular-velocity command `ω_v`; the inner loop drives `z₂ = ω_e − ω_v` to zero
//! with the actual torque. Both loops use a Sontag-type gain `λ(A, B)` that makes
//! the barrier conditions `Ḣ > −αH` and `ḣ > −γh` hold, where
//! `H = K_H(Δ_e² − sᵀs)` and `h = K_h(Δ_h² − z₂ᵀz₂)`.

use nalgebra::Vector3;

use crate::attitude::{fe_inverse, fe_matrix, fe_matrix_rate, Quaternion};
use crate::dynamics::{coupling_term, ErrorState, SpacecraftParams, TargetState};
use crate::error::{PapError, Result};
use crate::rpf::ReferenceSample;

/// Scalar design parameters of the control law.
///
/// Symbol mapping: `k_attitude_barrier` = K_H, `k_rate_barrier` = K_h,
/// `k_attitude` = K_s, `k_rate` = K_2, `alpha` = α, `gamma` = γ,
/// `delta_attitude` = δ_H, `delta_rate` = δ_h, `sigma_attitude` = σ₁,
/// `sigma_rate` = σ₂, `tanh_sharpness` = C_s, `epsilon` = ε,
/// `tube_attitude` = Δ_e, `tube_rate` = Δ_h.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerGains {
    pub k_attitude_barrier: f64,
    pub k_rate_barrier: f64,
    pub k_attitude: f64,
    pub k_rate: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub delta_attitude: f64,
    pub delta_rate: f64,
    pub sigma_attitude: f64,
    pub sigma_rate: f64,
    pub tanh_sharpness: f64,
    pub epsilon: f64,
    pub tube_attitude: f64,
    pub tube_rate: f64,
}

impl Default for ControllerGains {
    /// Gains of the reference simulation campaign.
    fn default() -> Self {
        Self {
            k_attitude_barrier: 2.0,
            k_rate_barrier: 1.0,
            k_attitude: 0.1,
            k_rate: 2.0,
            alpha: 0.5,
            gamma: DEFAULT_GAMMA,
            delta_attitude: 1e-5,
            delta_rate: 2e-3,
            sigma_attitude: 0.05,
            sigma_rate: 1.0,
            tanh_sharpness: 1e7,
            epsilon: 1e-7,
            tube_attitude: 1e-5,
            tube_rate: 1e-5,
        }
    }
}

/// Decay rate of the inner barrier; chosen from a sweep, no reference value exists.
pub const DEFAULT_GAMMA: f64 = 0.5;

impl ControllerGains {
    pub fn fields(&self) -> [(&'static str, f64); 14] {
        [
            ("k_attitude_barrier", self.k_attitude_barrier),
            ("k_rate_barrier", self.k_rate_barrier),
            ("k_attitude", self.k_attitude),
            ("k_rate", self.k_rate),
            ("alpha", self.alpha),
            ("gamma", self.gamma),
            ("delta_attitude", self.delta_attitude),
            ("delta_rate", self.delta_rate),
            ("sigma_attitude", self.sigma_attitude),
            ("sigma_rate", self.sigma_rate),
            ("tanh_sharpness", self.tanh_sharpness),
            ("epsilon", self.epsilon),
            ("tube_attitude", self.tube_attitude),
            ("tube_rate", self.tube_rate),
        ]
    }

    /// Every gain must be strictly positive and finite.
    pub fn validate(&self) -> Result<()> {
        for (name, value) in self.fields() {
            if !(value > 0.0 && value.is_finite()) {
                return Err(PapError::InvalidParameter {
                    name,
                    reason: format!("must be positive and finite, got {value}"),
                });
            }
        }
        Ok(())
    }
}

/// Everything the control law produces in one evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutputs {
    pub s: Vector3<f64>,
    pub barrier_attitude: f64,
    pub barrier_rate: f64,
    pub lambda_v: f64,
    pub lambda_u: f64,
    pub omega_v: Vector3<f64>,
    pub omega_v_dot: Vector3<f64>,
    pub z2: Vector3<f64>,
    pub u_raw: Vector3<f64>,
    pub u_sat: Vector3<f64>,
}

/// `s = q_ev − ρ`.
pub fn tracking_error(q_ev: &Vector3<f64>, rho: &Vector3<f64>) -> Vector3<f64> {
    q_ev - rho
}

/// Outer barrier `H = K_H (Δ_e² − sᵀs)`; positive iff `‖s‖ < Δ_e`.
pub fn barrier_attitude(s: &Vector3<f64>, g: &ControllerGains) -> f64 {
    g.k_attitude_barrier * (g.tube_attitude * g.tube_attitude - s.norm_squared())
}

/// Inner barrier `h = K_h (Δ_h² − z₂ᵀz₂)`.
pub fn barrier_rate(z2: &Vector3<f64>, g: &ControllerGains) -> f64 {
    g.k_rate_barrier * (g.tube_rate * g.tube_rate - z2.norm_squared())
}

/// Regularized Sontag gain `λ = (−A − √(A² + σB²)) / (B + ε)`.
///
/// Always `≤ 0`. For `ε = 0` and `B > 0` it satisfies `A + Bλ = −√(A² + σB²)`.
/// At `B = 0` with `ε = 0` the zero branch is returned.
pub fn sontag_lambda(a: f64, b: f64, sigma: f64, eps: f64) -> f64 {
    let denom = b + eps;
    if denom == 0.0 {
        return 0.0;
    }
    (-a - (a * a + sigma * b * b).sqrt()) / denom
}

/// `(∂λ/∂A, ∂λ/∂B)` of [`sontag_lambda`]; zero where `A = B = 0`.
pub fn sontag_lambda_partials(a: f64, b: f64, sigma: f64, eps: f64) -> (f64, f64) {
    let root = (a * a + sigma * b * b).sqrt();
    let denom = b + eps;
    if root == 0.0 || denom == 0.0 {
        return (0.0, 0.0);
    }
    let lambda = (-a - root) / denom;
    let d_a = (-1.0 - a / root) / denom;
    let d_b = -sigma * b / (root * denom) - lambda / denom;
    (d_a, d_b)
}

/// Outer Sontag terms `A₁ = −αH + δ_H‖tanh(C_s s)‖`, `B₁ = 4K_H² sᵀs`.
pub fn attitude_sontag_terms(s: &Vector3<f64>, barrier: f64, g: &ControllerGains) -> (f64, f64) {
    let shaped = s.map(|c| (g.tanh_sharpness * c).tanh());
    let a1 = -g.alpha * barrier + g.delta_attitude * shaped.norm();
    let b1 = 4.0 * g.k_attitude_barrier.powi(2) * s.norm_squared();
    (a1, b1)
}

/// Inner Sontag terms `A₂ = −λ_Jmin²(γh + δ_h‖z₂‖)`, `B₂ = 4K_h²‖J z₂‖²`.
pub fn rate_sontag_terms(
    z2: &Vector3<f64>,
    barrier: f64,
    g: &ControllerGains,
    params: &SpacecraftParams,
) -> (f64, f64) {
    let a2 = -params.lambda_min().powi(2) * (g.gamma * barrier + g.delta_rate * z2.norm());
    let b2 = 4.0 * g.k_rate_barrier.powi(2) * (params.inertia() * z2).norm_squared();
    (a2, b2)
}

/// Virtual angular-velocity command `ω_v = F_e⁻¹[(2λ_v K_H − K_s)s + ρ̇]`.
///
/// Returns `(ω_v, λ_v)`.
pub fn virtual_control(
    q_e: Quaternion,
    s: &Vector3<f64>,
    rho_dot: &Vector3<f64>,
    g: &ControllerGains,
) -> Result<(Vector3<f64>, f64)> {
    let fe_inv = fe_inverse(q_e)?;
    let barrier = barrier_attitude(s, g);
    let (a1, b1) = attitude_sontag_terms(s, barrier, g);
    let lambda_v = sontag_lambda(a1, b1, g.sigma_attitude, g.epsilon);
    let gain = 2.0 * lambda_v * g.k_attitude_barrier - g.k_attitude;
    Ok((fe_inv * (gain * s + rho_dot), lambda_v))
}

/// Analytic time derivative of [`virtual_control`] along the error dynamics.
///
/// Uses `ṡ = F_e ω_e − ρ̇`, `d(F_e⁻¹)/dt = −F_e⁻¹ Ḟ_e F_e⁻¹` and the chain rule
/// through `λ_v(A₁, B₁)`.
pub fn virtual_control_derivative(
    state: &ErrorState,
    reference: &ReferenceSample,
    g: &ControllerGains,
) -> Result<Vector3<f64>> {
    let q = state.q_e;
    let fe = fe_matrix(q);
    let fe_inv = fe_inverse(q)?;
    let s = tracking_error(&q.vec, &reference.rho);
    let s_dot = fe * state.omega_e - reference.rho_dot;

    let barrier = barrier_attitude(&s, g);
    let barrier_dot = -2.0 * g.k_attitude_barrier * s.dot(&s_dot);
    let (a1, b1) = attitude_sontag_terms(&s, barrier, g);
    let lambda_v = sontag_lambda(a1, b1, g.sigma_attitude, g.epsilon);

    let shaped = s.map(|c| (g.tanh_sharpness * c).tanh());
    let shaped_norm = shaped.norm();
    let shaped_term = if shaped_norm > 0.0 {
        let slope = shaped.map(|th| g.tanh_sharpness * (1.0 - th * th));
        g.delta_attitude * shaped.component_mul(&slope).dot(&s_dot) / shaped_norm
    } else {
        0.0
    };
    let a1_dot = -g.alpha * barrier_dot + shaped_term;
    let b1_dot = 8.0 * g.k_attitude_barrier.powi(2) * s.dot(&s_dot);
    let (d_a, d_b) = sontag_lambda_partials(a1, b1, g.sigma_attitude, g.epsilon);
    let lambda_v_dot = d_a * a1_dot + d_b * b1_dot;

    let gain = 2.0 * lambda_v * g.k_attitude_barrier - g.k_attitude;
    let core = gain * s + reference.rho_dot;
    let fe_inv_dot = -fe_inv * fe_matrix_rate(q, &state.omega_e) * fe_inv;
    let core_dot = 2.0 * g.k_attitude_barrier * (lambda_v_dot * s + lambda_v * s_dot)
        - g.k_attitude * s_dot
        + reference.rho_ddot;
    Ok(fe_inv_dot * core + fe_inv * core_dot)
}

/// Torque produced by the inner loop, before and after saturation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorqueCommand {
    pub u_raw: Vector3<f64>,
    pub u_sat: Vector3<f64>,
    pub lambda_u: f64,
}

/// Actual torque `u = −Ω_e − d̂ + J ω̇_v + (2λ_u K_h − K_2) J z₂`, clamped to `±u_max`.
pub fn actual_control(
    state: &ErrorState,
    target: &TargetState,
    z2: &Vector3<f64>,
    omega_v_dot: &Vector3<f64>,
    d_hat: &Vector3<f64>,
    g: &ControllerGains,
    params: &SpacecraftParams,
) -> TorqueCommand {
    let j = params.inertia();
    let barrier = barrier_rate(z2, g);
    let (a2, b2) = rate_sontag_terms(z2, barrier, g, params);
    let lambda_u = sontag_lambda(a2, b2, g.sigma_rate, g.epsilon);
    let coupling = coupling_term(state.q_e, &state.omega_e, target, params);
    let gain = 2.0 * lambda_u * g.k_rate_barrier - g.k_rate;
    let u_raw = -coupling - d_hat + j * omega_v_dot + gain * (j * z2);
    TorqueCommand { u_raw, u_sat: params.saturate(&u_raw), lambda_u }
}

/// Full control law evaluation for one tick.
pub fn compute_control(
    state: &ErrorState,
    target: &TargetState,
    reference: &ReferenceSample,
    d_hat: &Vector3<f64>,
    g: &ControllerGains,
    params: &SpacecraftParams,
) -> Result<ControlOutputs> {
    let s = tracking_error(&state.q_e.vec, &reference.rho);
    let (omega_v, lambda_v) = virtual_control(state.q_e, &s, &reference.rho_dot, g)?;
    let omega_v_dot = virtual_control_derivative(state, reference, g)?;
    let z2 = state.omega_e - omega_v;
    let torque = actual_control(state, target, &z2, &omega_v_dot, d_hat, g, params);
    Ok(ControlOutputs {
        s,
        barrier_attitude: barrier_attitude(&s, g),
        barrier_rate: barrier_rate(&z2, g),
        lambda_v,
        lambda_u: torque.lambda_u,
        omega_v,
        omega_v_dot,
        z2,
        u_raw: torque.u_raw,
        u_sat: torque.u_sat,
    })
}
