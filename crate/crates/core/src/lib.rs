//! Precisely-assigned performance attitude control for rigid spacecraft.
//!
//! The crate is organised bottom-up: quaternion plumbing in [`attitude`], the
//! error dynamics in [`dynamics`], reference performance functions in [`rpf`],
//! the control law in [`controller`], the disturbance observer in [`observer`],
//! closed-loop simulation in [`sim`] and post-processing in [`analysis`].

pub mod analysis;
pub mod attitude;
pub mod controller;
pub mod dynamics;
pub mod error;
pub mod observer;
pub mod rpf;
pub mod sim;

pub use analysis::{PapRequirements, PerformanceReport, TheoryBounds};
pub use attitude::Quaternion;
pub use controller::{ControlOutputs, ControllerGains};
pub use dynamics::{DisturbanceModel, ErrorState, SpacecraftParams, TargetMotion, TargetState};
pub use error::{PapError, Result};
pub use observer::{ObserverParams, ObserverState};
pub use rpf::{ReferenceProfile, RpfPoly};
pub use sim::{run_monte_carlo, run_scenario, ScenarioConfig, SimulationTrace, TraceRow};
