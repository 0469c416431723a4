//! Fixtures shared by the benchmarks.

use nalgebra::Vector3;
use pap_core::{ErrorState, Quaternion, ReferenceProfile, TargetState};

/// A mid-transient state of the nominal scenario.
pub fn transient_state() -> (ErrorState, TargetState, ReferenceProfile) {
    let q_e = Quaternion::new(0.30, 0.45, 0.60, 0.59);
    let state = ErrorState { q_e, omega_e: Vector3::new(0.01, -0.02, 0.015) };
    let target = TargetState {
        q_d: Quaternion::identity(),
        omega_d: Vector3::new(5e-3, 0.0, -5e-3),
        omega_d_dot: Vector3::new(0.0, 5e-5, 0.0),
    };
    let reference = ReferenceProfile::new(&(q_e.vec - Vector3::repeat(0.1)), 50.0).expect("valid horizon");
    (state, target, reference)
}
