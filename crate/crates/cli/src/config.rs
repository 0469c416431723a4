//! Flat `section.key = value` configuration files.
//!
//! Every key is optional; missing keys keep the value of the base scenario.
//! Angular rates are written in deg/s and converted to rad/s on load.

use std::str::FromStr;

use nalgebra::{Matrix3, Vector3, Vector4};
use pap_core::{DisturbanceModel, PapError, Quaternion, ScenarioConfig, SpacecraftParams, TargetMotion};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },

    #[error("`{key}` out of range: {reason}")]
    UnitRange { key: String, reason: String },
}

/// Recognized keys and their units, in the order they are documented.
pub const KEYS: &[(&str, &str)] = &[
    ("scenario.name", "label used for output file names"),
    ("scenario.t_final", "s"),
    ("scenario.dt_control", "s, zero-order-hold period"),
    ("scenario.dt_inner", "s, must divide dt_control"),
    ("scenario.t_sd", "s, prescribed settling time"),
    ("scenario.seed", "unsigned integer"),
    ("scenario.case_count", "Monte Carlo cases"),
    ("initial.q1", "initial attitude, vector part (normalized on load)"),
    ("initial.q2", ""),
    ("initial.q3", ""),
    ("initial.q0", "initial attitude, scalar part"),
    ("initial.rate1", "deg/s, initial body rate"),
    ("initial.rate2", "deg/s"),
    ("initial.rate3", "deg/s"),
    ("target.q1", "target attitude at t = 0 (normalized on load)"),
    ("target.q2", ""),
    ("target.q3", ""),
    ("target.q0", ""),
    ("target.motion", "inertial | sinusoidal"),
    ("target.amplitude", "deg/s, sinusoidal target rate amplitude"),
    ("rpf.offset1", "ρ(0) = q_ev(0) − offset"),
    ("rpf.offset2", ""),
    ("rpf.offset3", ""),
    ("gains.k_attitude_barrier", "K_H"),
    ("gains.k_rate_barrier", "K_h"),
    ("gains.k_attitude", "K_s"),
    ("gains.k_rate", "K_2"),
    ("gains.alpha", "1/s"),
    ("gains.gamma", "1/s"),
    ("gains.delta_attitude", "δ_H"),
    ("gains.delta_rate", "δ_h"),
    ("gains.sigma_attitude", "σ₁"),
    ("gains.sigma_rate", "σ₂"),
    ("gains.tanh_sharpness", "C_s"),
    ("gains.epsilon", "Sontag regularizer"),
    ("gains.tube_attitude", "Δ_e"),
    ("gains.tube_rate", "Δ_h, rad/s"),
    ("observer.c1", ""),
    ("observer.c2", ""),
    ("observer.beta", "bandwidth scale"),
    ("spacecraft.j11", "kg·m², inertia (symmetric)"),
    ("spacecraft.j12", ""),
    ("spacecraft.j13", ""),
    ("spacecraft.j22", ""),
    ("spacecraft.j23", ""),
    ("spacecraft.j33", ""),
    ("spacecraft.u_max", "N·m, per-axis torque limit"),
    ("disturbance.model", "none | periodic | periodic_pulse"),
    ("disturbance.pulse_torque", "N·m on every axis"),
    ("disturbance.pulse_start", "s"),
    ("disturbance.pulse_duration", "s"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Disturbance {
    None,
    Periodic,
    PeriodicPulse,
}

/// Mutable view of a scenario; composite fields are rebuilt and checked in [`Draft::finish`].
struct Draft {
    cfg: ScenarioConfig,
    initial: Vector4<f64>,
    target: Vector4<f64>,
    inertia: Matrix3<f64>,
    u_max: f64,
    disturbance: Disturbance,
    pulse_torque: f64,
    pulse_start: f64,
    pulse_duration: f64,
    disturbance_set: bool,
    initial_set: bool,
    target_set: bool,
    spacecraft_set: bool,
}

impl Draft {
    fn new(base: &ScenarioConfig) -> Self {
        let (disturbance, pulse) = match &base.disturbance {
            DisturbanceModel::None => (Disturbance::None, None),
            DisturbanceModel::Composite(parts) => {
                let pulse = parts.iter().find_map(|p| match p {
                    DisturbanceModel::Pulse { torque, start, duration } => Some((torque.x, *start, *duration)),
                    _ => None,
                });
                (Disturbance::PeriodicPulse, pulse)
            }
            _ => (Disturbance::Periodic, None),
        };
        let (pulse_torque, pulse_start, pulse_duration) = pulse.unwrap_or((0.5, 100.0, 0.5));
        Self {
            initial: base.initial_attitude.to_vector4(),
            target: base.target_attitude.to_vector4(),
            inertia: *base.spacecraft.inertia(),
            u_max: base.spacecraft.u_max,
            disturbance,
            pulse_torque,
            pulse_start,
            pulse_duration,
            disturbance_set: false,
            initial_set: false,
            target_set: false,
            spacecraft_set: false,
            cfg: base.clone(),
        }
    }

    fn set(&mut self, key: &str, value: &str, line: usize) -> Result<(), ConfigError> {
        let num = || number::<f64>(key, value, line);
        let (section, field) = key.split_once('.').unwrap_or(("", key));
        match (section, field) {
            ("scenario", "name") => self.cfg.name = value.to_string(),
            ("scenario", "t_final") => self.cfg.t_final = positive(key, num()?)?,
            ("scenario", "dt_control") => self.cfg.dt_control = positive(key, num()?)?,
            ("scenario", "dt_inner") => self.cfg.dt_inner = positive(key, num()?)?,
            ("scenario", "t_sd") => self.cfg.t_sd = positive(key, num()?)?,
            ("scenario", "seed") => self.cfg.seed = number(key, value, line)?,
            ("scenario", "case_count") => self.cfg.case_count = number(key, value, line)?,
            ("initial", f) if quat_index(f).is_some() => {
                self.initial[quat_index(f).unwrap()] = num()?;
                self.initial_set = true;
            }
            ("target", f) if quat_index(f).is_some() => {
                self.target[quat_index(f).unwrap()] = num()?;
                self.target_set = true;
            }
            ("initial", f) if axis_index(f, "rate").is_some() => {
                self.cfg.initial_body_rate[axis_index(f, "rate").unwrap()] = num()?.to_radians();
            }
            ("rpf", f) if axis_index(f, "offset").is_some() => {
                self.cfg.rpf_offset[axis_index(f, "offset").unwrap()] = num()?;
            }
            ("target", "motion") => {
                self.cfg.target_motion = match value {
                    "inertial" => TargetMotion::Inertial,
                    "sinusoidal" => match self.cfg.target_motion {
                        m @ TargetMotion::Sinusoidal { .. } => m,
                        TargetMotion::Inertial => TargetMotion::REFERENCE,
                    },
                    _ => return Err(bad_value(line, key, value, "inertial or sinusoidal")),
                }
            }
            ("target", "amplitude") => {
                self.cfg.target_motion = TargetMotion::Sinusoidal { amplitude_deg_s: num()? };
            }
            ("gains", f) => {
                let slot = gain_slot(&mut self.cfg.gains, f)
                    .ok_or_else(|| ConfigError::UnknownKey { line, key: key.to_string() })?;
                *slot = positive(key, num()?)?;
            }
            ("observer", "c1") => self.cfg.observer.c1 = positive(key, num()?)?,
            ("observer", "c2") => self.cfg.observer.c2 = positive(key, num()?)?,
            ("observer", "beta") => self.cfg.observer.beta = positive(key, num()?)?,
            ("spacecraft", "u_max") => {
                self.u_max = positive(key, num()?)?;
                self.spacecraft_set = true;
            }
            ("spacecraft", f) if inertia_index(f).is_some() => {
                let (i, j) = inertia_index(f).unwrap();
                let v = num()?;
                self.inertia[(i, j)] = v;
                self.inertia[(j, i)] = v;
                self.spacecraft_set = true;
            }
            ("disturbance", "model") => {
                self.disturbance = match value {
                    "none" => Disturbance::None,
                    "periodic" => Disturbance::Periodic,
                    "periodic_pulse" => Disturbance::PeriodicPulse,
                    _ => return Err(bad_value(line, key, value, "none, periodic or periodic_pulse")),
                };
                self.disturbance_set = true;
            }
            ("disturbance", "pulse_torque") => {
                self.pulse_torque = num()?;
                self.disturbance_set = true;
            }
            ("disturbance", "pulse_start") => {
                self.pulse_start = num()?;
                self.disturbance_set = true;
            }
            ("disturbance", "pulse_duration") => {
                self.pulse_duration = non_negative(key, num()?)?;
                self.disturbance_set = true;
            }
            _ => return Err(ConfigError::UnknownKey { line, key: key.to_string() }),
        }
        Ok(())
    }

    fn finish(mut self) -> Result<ScenarioConfig, ConfigError> {
        // Untouched fields keep the base values bit for bit.
        if self.initial_set {
            self.cfg.initial_attitude = unit_quaternion("initial", self.initial)?;
        }
        if self.target_set {
            self.cfg.target_attitude = unit_quaternion("target", self.target)?;
        }
        if self.spacecraft_set {
            self.cfg.spacecraft = SpacecraftParams::new(self.inertia, self.u_max).map_err(range_error)?;
        }
        if self.disturbance_set {
            self.cfg.disturbance = match self.disturbance {
                Disturbance::None => DisturbanceModel::None,
                Disturbance::Periodic => DisturbanceModel::reference_periodic(),
                Disturbance::PeriodicPulse => DisturbanceModel::Composite(vec![
                    DisturbanceModel::reference_periodic(),
                    DisturbanceModel::Pulse {
                        torque: Vector3::repeat(self.pulse_torque),
                        start: self.pulse_start,
                        duration: self.pulse_duration,
                    },
                ]),
            };
        }
        self.cfg.validate().map_err(range_error)?;
        Ok(self.cfg)
    }
}

/// Parses a configuration document on top of the nominal scenario.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, ConfigError> {
    apply_config(&ScenarioConfig::nominal(), text)
}

/// Parses a configuration document on top of `base`.
pub fn apply_config(base: &ScenarioConfig, text: &str) -> Result<ScenarioConfig, ConfigError> {
    let mut draft = Draft::new(base);
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split_once('#').map_or(raw, |(before, _)| before).trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Parse {
            line,
            message: format!("expected `key = value`, got `{content}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::Parse { line, message: "empty key or value".into() });
        }
        draft.set(key, value, line)?;
    }
    draft.finish()
}

/// Applies `key=value` overrides, numbering them from 1 in error messages.
pub fn apply_overrides(base: &ScenarioConfig, overrides: &[String]) -> Result<ScenarioConfig, ConfigError> {
    apply_config(base, &overrides.join("\n"))
}

fn number<T: FromStr>(key: &str, value: &str, line: usize) -> Result<T, ConfigError> {
    value.parse().map_err(|_| ConfigError::Parse {
        line,
        message: format!("`{key}`: cannot parse `{value}` as a number"),
    })
}

fn positive(key: &str, v: f64) -> Result<f64, ConfigError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::UnitRange { key: key.to_string(), reason: format!("must be positive, got {v}") })
    }
}

fn non_negative(key: &str, v: f64) -> Result<f64, ConfigError> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(ConfigError::UnitRange { key: key.to_string(), reason: format!("must be non-negative, got {v}") })
    }
}

fn bad_value(line: usize, key: &str, value: &str, expected: &str) -> ConfigError {
    ConfigError::Parse { line, message: format!("`{key}`: expected {expected}, got `{value}`") }
}

fn range_error(e: PapError) -> ConfigError {
    match e {
        PapError::InvalidParameter { name, reason } => ConfigError::UnitRange { key: name.to_string(), reason },
        other => ConfigError::UnitRange { key: "scenario".into(), reason: other.to_string() },
    }
}

fn unit_quaternion(section: &str, v: Vector4<f64>) -> Result<Quaternion, ConfigError> {
    let n = v.norm();
    if !(n > 1e-12 && n.is_finite()) {
        return Err(ConfigError::UnitRange {
            key: format!("{section}.q*"),
            reason: "quaternion must have non-zero finite norm".into(),
        });
    }
    Ok(Quaternion::from_vector4(&(v / n)))
}

/// Storage index in `(x, y, z, w)` order.
fn quat_index(field: &str) -> Option<usize> {
    match field {
        "q1" => Some(0),
        "q2" => Some(1),
        "q3" => Some(2),
        "q0" => Some(3),
        _ => None,
    }
}

fn axis_index(field: &str, prefix: &str) -> Option<usize> {
    match field.strip_prefix(prefix)? {
        "1" => Some(0),
        "2" => Some(1),
        "3" => Some(2),
        _ => None,
    }
}

fn inertia_index(field: &str) -> Option<(usize, usize)> {
    let digits = field.strip_prefix('j')?.as_bytes();
    match digits {
        [a @ b'1'..=b'3', b @ b'1'..=b'3'] if a <= b => Some(((a - b'1') as usize, (b - b'1') as usize)),
        _ => None,
    }
}

fn gain_slot<'a>(g: &'a mut pap_core::ControllerGains, field: &str) -> Option<&'a mut f64> {
    Some(match field {
        "k_attitude_barrier" => &mut g.k_attitude_barrier,
        "k_rate_barrier" => &mut g.k_rate_barrier,
        "k_attitude" => &mut g.k_attitude,
        "k_rate" => &mut g.k_rate,
        "alpha" => &mut g.alpha,
        "gamma" => &mut g.gamma,
        "delta_attitude" => &mut g.delta_attitude,
        "delta_rate" => &mut g.delta_rate,
        "sigma_attitude" => &mut g.sigma_attitude,
        "sigma_rate" => &mut g.sigma_rate,
        "tanh_sharpness" => &mut g.tanh_sharpness,
        "epsilon" => &mut g.epsilon,
        "tube_attitude" => &mut g.tube_attitude,
        "tube_rate" => &mut g.tube_rate,
        _ => return None,
    })
}
