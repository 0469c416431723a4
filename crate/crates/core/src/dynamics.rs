//! Rigid-body attitude error dynamics, target motion and disturbance models.

use std::f64::consts::PI;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};

use crate::attitude::{fe_matrix, quat_rate, rotation_matrix, Quaternion};
use crate::error::{PapError, Result};

/// Inertia and actuator limits of the spacecraft.
#[derive(Debug, Clone, PartialEq)]
pub struct SpacecraftParams {
    inertia: Matrix3<f64>,
    inertia_inv: Matrix3<f64>,
    lambda_min: f64,
    lambda_max: f64,
    /// Per-axis torque limit (N·m).
    pub u_max: f64,
}

impl SpacecraftParams {
    pub fn new(inertia: Matrix3<f64>, u_max: f64) -> Result<Self> {
        if (inertia - inertia.transpose()).abs().max() > 1e-12 {
            return Err(PapError::InvalidParameter {
                name: "inertia",
                reason: "matrix is not symmetric".into(),
            });
        }
        if !(u_max > 0.0) {
            return Err(PapError::InvalidParameter {
                name: "u_max",
                reason: format!("must be positive, got {u_max}"),
            });
        }
        let eig = SymmetricEigen::new(inertia).eigenvalues;
        let lambda_min = eig.min();
        if !(lambda_min > 0.0) {
            return Err(PapError::InvalidParameter {
                name: "inertia",
                reason: format!("not positive definite (min eigenvalue {lambda_min})"),
            });
        }
        let inertia_inv = inertia.try_inverse().ok_or(PapError::InvalidParameter {
            name: "inertia",
            reason: "matrix is singular".into(),
        })?;
        Ok(Self { inertia, inertia_inv, lambda_min, lambda_max: eig.max(), u_max })
    }

    /// Inertia and torque limit of the reference simulation campaign.
    pub fn reference() -> Self {
        let j = Matrix3::new(2.8, 0.1, 0.5, 0.1, 2.5, 0.24, 0.5, 0.24, 1.9);
        Self::new(j, 0.05).expect("reference inertia is valid")
    }

    pub fn inertia(&self) -> &Matrix3<f64> {
        &self.inertia
    }

    pub fn inertia_inv(&self) -> &Matrix3<f64> {
        &self.inertia_inv
    }

    /// Smallest eigenvalue of `J`.
    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    /// Componentwise clamp to `±u_max`.
    pub fn saturate(&self, u: &Vector3<f64>) -> Vector3<f64> {
        u.map(|c| c.clamp(-self.u_max, self.u_max))
    }
}

/// Attitude and angular-velocity error of the body relative to the target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorState {
    pub q_e: Quaternion,
    /// rad/s, body frame.
    pub omega_e: Vector3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetState {
    pub q_d: Quaternion,
    /// rad/s, target frame.
    pub omega_d: Vector3<f64>,
    /// rad/s², target frame.
    pub omega_d_dot: Vector3<f64>,
}

impl TargetState {
    pub fn at_rest(q_d: Quaternion) -> Self {
        Self { q_d, omega_d: Vector3::zeros(), omega_d_dot: Vector3::zeros() }
    }
}

/// Time derivative of an [`ErrorState`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRate {
    pub q_e_dot: Quaternion,
    pub omega_e_dot: Vector3<f64>,
}

/// Body angular velocity `ω_s = ω_e + C_e ω_d`.
pub fn body_rate(state: &ErrorState, omega_d: &Vector3<f64>) -> Vector3<f64> {
    state.omega_e + rotation_matrix(state.q_e) * omega_d
}

/// Coupling term `Ω_e = J ω_e^× C_e ω_d − J C_e ω̇_d − ω_s^× J ω_s`.
pub fn coupling_term(
    q_e: Quaternion,
    omega_e: &Vector3<f64>,
    target: &TargetState,
    params: &SpacecraftParams,
) -> Vector3<f64> {
    let j = params.inertia();
    let c_e = rotation_matrix(q_e);
    let c_wd = c_e * target.omega_d;
    let omega_s = omega_e + c_wd;
    j * omega_e.cross(&c_wd) - j * (c_e * target.omega_d_dot) - omega_s.cross(&(j * omega_s))
}

/// Right-hand side of the attitude error model.
///
/// `u` must already be saturated by the caller.
pub fn error_derivative(
    state: &ErrorState,
    target: &TargetState,
    u: &Vector3<f64>,
    d: &Vector3<f64>,
    params: &SpacecraftParams,
) -> ErrorRate {
    let q = state.q_e;
    let q_e_dot = Quaternion::from_parts(
        fe_matrix(q) * state.omega_e,
        -0.5 * q.vec.dot(&state.omega_e),
    );
    let omega_coupling = coupling_term(q, &state.omega_e, target, params);
    let omega_e_dot = params.inertia_inv() * (omega_coupling + u + d);
    ErrorRate { q_e_dot, omega_e_dot }
}

/// Target kinematics `q̇_d = ½ q_d ⊗ [ω_d; 0]`.
pub fn target_derivative(target: &TargetState) -> Quaternion {
    quat_rate(target.q_d, &target.omega_d)
}

/// Prescribed angular-velocity profile of the target frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TargetMotion {
    /// `ω_d ≡ 0`.
    Inertial,
    /// `ω_d = A·[cos(t/80), sin(t/100), −cos(t/100)]` with `A` in deg/s.
    Sinusoidal { amplitude_deg_s: f64 },
}

impl TargetMotion {
    pub const REFERENCE: TargetMotion = TargetMotion::Sinusoidal { amplitude_deg_s: 0.3 };

    /// `(ω_d, ω̇_d)` in rad/s and rad/s².
    pub fn eval(&self, t: f64) -> (Vector3<f64>, Vector3<f64>) {
        match *self {
            TargetMotion::Inertial => (Vector3::zeros(), Vector3::zeros()),
            TargetMotion::Sinusoidal { amplitude_deg_s } => {
                let a = amplitude_deg_s * PI / 180.0;
                let w = a * Vector3::new((t / 80.0).cos(), (t / 100.0).sin(), -(t / 100.0).cos());
                let w_dot = a * Vector3::new(
                    -(t / 80.0).sin() / 80.0,
                    (t / 100.0).cos() / 100.0,
                    (t / 100.0).sin() / 100.0,
                );
                (w, w_dot)
            }
        }
    }
}

/// Reference target angular velocity and its analytic derivative.
pub fn eval_omega_d(t: f64) -> (Vector3<f64>, Vector3<f64>) {
    TargetMotion::REFERENCE.eval(t)
}

/// One axis of a periodic disturbance:
/// `sin_amp·sin(sin_harmonic·ω_p t) + cos_amp·cos(cos_harmonic·ω_p t) + bias` (N·m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodicAxis {
    pub sin_amp: f64,
    pub sin_harmonic: f64,
    pub cos_amp: f64,
    pub cos_harmonic: f64,
    pub bias: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DisturbanceModel {
    None,
    Periodic { axes: [PeriodicAxis; 3], rate: f64 },
    /// Constant torque applied on `[start, start + duration)`.
    Pulse { torque: Vector3<f64>, start: f64, duration: f64 },
    Composite(Vec<DisturbanceModel>),
}

impl DisturbanceModel {
    /// The periodic environmental torque used in every reference scenario.
    pub fn reference_periodic() -> Self {
        let axis = |sin_amp, sin_harmonic, cos_amp, cos_harmonic, bias| PeriodicAxis {
            sin_amp: sin_amp * 1e-4,
            sin_harmonic,
            cos_amp: cos_amp * 1e-4,
            cos_harmonic,
            bias: bias * 1e-4,
        };
        DisturbanceModel::Periodic {
            axes: [
                axis(1.0, 3.0, 4.0, 3.0, -20.0),
                axis(5.0, 2.0, 3.0, 3.0, 20.0),
                axis(3.0, 2.0, -1.0, 4.0, 20.0),
            ],
            rate: 0.01,
        }
    }

    /// Periodic torque plus a 0.5 N·m per-axis pulse at t = 100 s lasting 0.5 s.
    pub fn reference_with_pulse() -> Self {
        DisturbanceModel::Composite(vec![
            Self::reference_periodic(),
            DisturbanceModel::Pulse {
                torque: Vector3::repeat(0.5),
                start: 100.0,
                duration: 0.5,
            },
        ])
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DisturbanceModel::None => Ok(()),
            DisturbanceModel::Periodic { axes, rate } => {
                let finite = rate.is_finite()
                    && axes.iter().all(|a| {
                        [a.sin_amp, a.sin_harmonic, a.cos_amp, a.cos_harmonic, a.bias]
                            .iter()
                            .all(|v| v.is_finite())
                    });
                if finite {
                    Ok(())
                } else {
                    Err(PapError::InvalidParameter {
                        name: "disturbance",
                        reason: "periodic terms must be finite".into(),
                    })
                }
            }
            DisturbanceModel::Pulse { torque, start, duration } => {
                if !(*duration >= 0.0) || !start.is_finite() || !torque.iter().all(|c| c.is_finite())
                {
                    return Err(PapError::InvalidParameter {
                        name: "disturbance.pulse",
                        reason: "duration must be non-negative and values finite".into(),
                    });
                }
                Ok(())
            }
            DisturbanceModel::Composite(parts) => parts.iter().try_for_each(Self::validate),
        }
    }

    /// Disturbance torque at time `t` (N·m).
    pub fn eval(&self, t: f64) -> Vector3<f64> {
        match self {
            DisturbanceModel::None => Vector3::zeros(),
            DisturbanceModel::Periodic { axes, rate } => Vector3::from_fn(|i, _| {
                let a = &axes[i];
                a.sin_amp * (a.sin_harmonic * rate * t).sin()
                    + a.cos_amp * (a.cos_harmonic * rate * t).cos()
                    + a.bias
            }),
            DisturbanceModel::Pulse { torque, start, duration } => {
                if t >= *start && t < start + duration {
                    *torque
                } else {
                    Vector3::zeros()
                }
            }
            DisturbanceModel::Composite(parts) => parts.iter().map(|p| p.eval(t)).sum(),
        }
    }
}

pub fn eval_disturbance(model: &DisturbanceModel, t: f64) -> Vector3<f64> {
    model.eval(t)
}
