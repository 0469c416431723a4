use thiserror::Error;

/// Errors raised by the control and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PapError {
    /// The kinematic Jacobian is not invertible (attitude error near 180 degrees).
    /// `t` is filled in by the simulator when the failure happens mid-run.
    #[error("kinematic Jacobian is singular (|q_e0| = {scalar:.3e}){}", at_time(*.t))]
    SingularJacobian { scalar: f64, t: Option<f64> },

    #[error("settling horizon must be positive, got {0}")]
    InvalidHorizon(f64),

    /// A state component became NaN or infinite during integration.
    #[error("non-finite state encountered at t = {t} s")]
    NonFiniteState { t: f64 },

    #[error("theory constants are infeasible (delta_S = {delta_s:.3e}, delta_z = {delta_z:.3e})")]
    InfeasibleConstants { delta_s: f64, delta_z: f64 },

    #[error("trace is empty")]
    EmptyTrace,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

fn at_time(t: Option<f64>) -> String {
    t.map(|t| format!(" at t = {t} s")).unwrap_or_default()
}

pub type Result<T, E = PapError> = std::result::Result<T, E>;
