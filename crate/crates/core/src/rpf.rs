//! Reference performance function: a quartic that decays from its initial value
//! to zero at the settling horizon `T_sd` and stays at zero afterwards.
//!
//! The boundary conditions are `ρ(0) = a0`, `ρ̇(0) = 0`, `ρ(T) = ρ̇(T) = ρ̈(T) = 0`,
//! which give `ρ(t) = a0 (1 − 6τ² + 8τ³ − 3τ⁴)` with `τ = t/T`.

use nalgebra::Vector3;

use crate::error::{PapError, Result};

/// Single-axis quartic reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RpfPoly {
    /// `a0..a4`, so that `ρ(t) = Σ a_j t^j` on `[0, t_sd]`.
    pub coeffs: [f64; 5],
    pub t_sd: f64,
}

/// `(ρ, ρ̇, ρ̈)` at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RpfSample {
    pub rho: f64,
    pub rho_dot: f64,
    pub rho_ddot: f64,
}

pub fn fit_rpf(a0: f64, t_sd: f64) -> Result<RpfPoly> {
    if !(t_sd > 0.0) || !t_sd.is_finite() {
        return Err(PapError::InvalidHorizon(t_sd));
    }
    let t2 = t_sd * t_sd;
    Ok(RpfPoly {
        coeffs: [a0, 0.0, -6.0 * a0 / t2, 8.0 * a0 / (t2 * t_sd), -3.0 * a0 / (t2 * t2)],
        t_sd,
    })
}

impl RpfPoly {
    pub fn initial(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn eval(&self, t: f64) -> RpfSample {
        if t > self.t_sd {
            return RpfSample { rho: 0.0, rho_dot: 0.0, rho_ddot: 0.0 };
        }
        let [a0, a1, a2, a3, a4] = self.coeffs;
        RpfSample {
            rho: a0 + t * (a1 + t * (a2 + t * (a3 + t * a4))),
            rho_dot: a1 + t * (2.0 * a2 + t * (3.0 * a3 + t * 4.0 * a4)),
            rho_ddot: 2.0 * a2 + t * (6.0 * a3 + t * 12.0 * a4),
        }
    }
}

pub fn eval_rpf(p: &RpfPoly, t: f64) -> RpfSample {
    p.eval(t)
}

/// Three-axis reference sharing a common horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceProfile {
    pub axes: [RpfPoly; 3],
}

/// Per-axis `(ρ, ρ̇, ρ̈)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceSample {
    pub rho: Vector3<f64>,
    pub rho_dot: Vector3<f64>,
    pub rho_ddot: Vector3<f64>,
}

impl ReferenceProfile {
    /// Builds one axis per component of `initial`.
    pub fn new(initial: &Vector3<f64>, t_sd: f64) -> Result<Self> {
        Ok(Self {
            axes: [fit_rpf(initial.x, t_sd)?, fit_rpf(initial.y, t_sd)?, fit_rpf(initial.z, t_sd)?],
        })
    }

    /// A profile that is identically zero.
    pub fn zero(t_sd: f64) -> Result<Self> {
        Self::new(&Vector3::zeros(), t_sd)
    }

    pub fn eval(&self, t: f64) -> ReferenceSample {
        let s = self.axes.map(|a| a.eval(t));
        ReferenceSample {
            rho: Vector3::new(s[0].rho, s[1].rho, s[2].rho),
            rho_dot: Vector3::new(s[0].rho_dot, s[1].rho_dot, s[2].rho_dot),
            rho_ddot: Vector3::new(s[0].rho_ddot, s[1].rho_ddot, s[2].rho_ddot),
        }
    }
}
