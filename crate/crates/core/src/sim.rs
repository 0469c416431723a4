//! Closed-loop simulation: fixed-step RK4 plant and observer integration under a
//! zero-order-hold controller, built-in scenarios and Monte Carlo campaigns.

use nalgebra::{SVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::attitude::{quat_error, rotation_matrix, Quaternion};
use crate::controller::{compute_control, ControlOutputs, ControllerGains};
use crate::dynamics::{
    coupling_term, error_derivative, target_derivative, DisturbanceModel, ErrorState,
    SpacecraftParams, TargetMotion, TargetState,
};
use crate::error::{PapError, Result};
use crate::observer::{disturbance_estimate, observer_derivative, ObserverParams, ObserverState};
use crate::rpf::ReferenceProfile;

/// One classical fourth-order Runge–Kutta step of `ẋ = f(t, x)`.
///
/// Fails with [`PapError::NonFiniteState`] if the result contains NaN or infinity.
/// Quaternion renormalization is left to the caller, which knows the state layout.
pub fn rk4_step<const N: usize, F>(f: F, x: &SVector<f64, N>, t: f64, dt: f64) -> Result<SVector<f64, N>>
where
    F: Fn(f64, &SVector<f64, N>) -> SVector<f64, N>,
{
    let half = 0.5 * dt;
    let k1 = f(t, x);
    let k2 = f(t + half, &(x + half * k1));
    let k3 = f(t + half, &(x + half * k2));
    let k4 = f(t + dt, &(x + dt * k3));
    let next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if next.iter().all(|v| v.is_finite()) {
        Ok(next)
    } else {
        Err(PapError::NonFiniteState { t: t + dt })
    }
}

/// Integrated state: error attitude and rate, target attitude, observer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedLoopState {
    pub error: ErrorState,
    pub q_d: Quaternion,
    pub observer: ObserverState,
}

const STATE_DIM: usize = 17;
type StateVector = SVector<f64, STATE_DIM>;

impl ClosedLoopState {
    fn to_vector(self) -> StateVector {
        let mut v = StateVector::zeros();
        v.fixed_rows_mut::<4>(0).copy_from(&self.error.q_e.to_vector4());
        v.fixed_rows_mut::<3>(4).copy_from(&self.error.omega_e);
        v.fixed_rows_mut::<4>(7).copy_from(&self.q_d.to_vector4());
        v.fixed_rows_mut::<3>(11).copy_from(&self.observer.f1_hat);
        v.fixed_rows_mut::<3>(14).copy_from(&self.observer.f2_hat);
        v
    }

    fn from_vector(v: &StateVector) -> Self {
        Self {
            error: ErrorState {
                q_e: Quaternion::from_vector4(&v.fixed_rows::<4>(0).into_owned()),
                omega_e: v.fixed_rows::<3>(4).into_owned(),
            },
            q_d: Quaternion::from_vector4(&v.fixed_rows::<4>(7).into_owned()),
            observer: ObserverState {
                f1_hat: v.fixed_rows::<3>(11).into_owned(),
                f2_hat: v.fixed_rows::<3>(14).into_owned(),
            },
        }
    }

    fn renormalized(mut self) -> Self {
        self.error.q_e = self.error.q_e.normalized();
        self.q_d = self.q_d.normalized();
        self
    }
}

/// Everything needed to run one closed-loop simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub t_final: f64,
    /// Control update period; torque is held constant in between.
    pub dt_control: f64,
    /// RK4 step; must divide `dt_control`.
    pub dt_inner: f64,
    pub initial_attitude: Quaternion,
    /// Initial body rate, rad/s.
    pub initial_body_rate: Vector3<f64>,
    pub target_attitude: Quaternion,
    pub target_motion: TargetMotion,
    /// `ρ_i(0) = q_evi(0) − rpf_offset_i`.
    pub rpf_offset: Vector3<f64>,
    pub t_sd: f64,
    pub gains: ControllerGains,
    pub observer: ObserverParams,
    pub spacecraft: SpacecraftParams,
    pub disturbance: DisturbanceModel,
    pub seed: u64,
    pub case_count: usize,
}

/// Initial body attitude of the nominal and robustness scenarios.
pub fn reference_initial_attitude() -> Quaternion {
    Quaternion::from_parts(Vector3::new(0.3482, 0.5222, 0.6963), 0.3482)
}

impl ScenarioConfig {
    /// Attitude tracking from rest with the RPF offset 0.1 below the initial error.
    pub fn nominal() -> Self {
        Self {
            name: "normal".into(),
            t_final: 200.0,
            dt_control: 0.1,
            dt_inner: 0.01,
            initial_attitude: reference_initial_attitude(),
            initial_body_rate: Vector3::zeros(),
            target_attitude: Quaternion::identity(),
            target_motion: TargetMotion::REFERENCE,
            rpf_offset: Vector3::repeat(0.1),
            t_sd: 50.0,
            gains: ControllerGains::default(),
            observer: ObserverParams::default(),
            spacecraft: SpacecraftParams::reference(),
            disturbance: DisturbanceModel::reference_periodic(),
            seed: 0,
            case_count: 1,
        }
    }

    /// 5 deg/s initial tumble and a 0.5 N·m pulse at t = 100 s.
    pub fn robust() -> Self {
        Self {
            name: "robust".into(),
            initial_body_rate: Vector3::repeat(5f64.to_radians()),
            disturbance: DisturbanceModel::reference_with_pulse(),
            ..Self::nominal()
        }
    }

    /// Random initial attitudes, RPF starting at the initial error.
    pub fn monte_carlo() -> Self {
        Self {
            name: "montecarlo".into(),
            t_final: 100.0,
            rpf_offset: Vector3::zeros(),
            seed: 2024,
            case_count: 100,
            ..Self::nominal()
        }
    }

    /// Number of control periods.
    pub fn control_steps(&self) -> usize {
        (self.t_final / self.dt_control + 1e-9).floor() as usize
    }

    /// Inner RK4 steps per control period.
    pub fn inner_steps(&self) -> usize {
        (self.dt_control / self.dt_inner).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(PapError::InvalidParameter { name, reason: format!("must be positive, got {v}") })
            }
        };
        positive("t_final", self.t_final)?;
        positive("dt_control", self.dt_control)?;
        positive("dt_inner", self.dt_inner)?;
        positive("t_sd", self.t_sd)?;
        let ratio = self.dt_control / self.dt_inner;
        if ratio < 1.0 - 1e-9 || (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
            return Err(PapError::InvalidParameter {
                name: "dt_inner",
                reason: format!("must divide dt_control = {}", self.dt_control),
            });
        }
        if self.case_count == 0 {
            return Err(PapError::InvalidParameter { name: "case_count", reason: "must be at least 1".into() });
        }
        if !self.rpf_offset.iter().all(|v| v.is_finite()) {
            return Err(PapError::InvalidParameter { name: "rpf_offset", reason: "must be finite".into() });
        }
        self.gains.validate()?;
        self.observer.validate()?;
        self.disturbance.validate()
    }
}

/// One logged sample, taken at a control instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TraceRow {
    pub t: f64,
    pub q_ev: Vector3<f64>,
    pub q_e0: f64,
    pub rho: Vector3<f64>,
    pub s: Vector3<f64>,
    pub omega_s: Vector3<f64>,
    pub omega_e: Vector3<f64>,
    pub z2: Vector3<f64>,
    pub u_sat: Vector3<f64>,
    pub d: Vector3<f64>,
    pub d_hat: Vector3<f64>,
    pub barrier_attitude: f64,
    pub barrier_rate: f64,
    pub lambda_v: f64,
    pub lambda_u: f64,
}

impl TraceRow {
    /// All values in CSV column order (32 entries after `t`).
    pub fn values(&self) -> [f64; 33] {
        let v = |x: &Vector3<f64>| [x.x, x.y, x.z];
        let mut out = [0.0; 33];
        let parts: [&[f64]; 15] = [
            &[self.t],
            &v(&self.q_ev),
            &[self.q_e0],
            &v(&self.rho),
            &v(&self.s),
            &v(&self.omega_s),
            &v(&self.omega_e),
            &v(&self.z2),
            &v(&self.u_sat),
            &v(&self.d),
            &v(&self.d_hat),
            &[self.barrier_attitude],
            &[self.barrier_rate],
            &[self.lambda_v],
            &[self.lambda_u],
        ];
        let mut i = 0;
        for p in parts {
            out[i..i + p.len()].copy_from_slice(p);
            i += p.len();
        }
        out
    }
}

/// Uniformly sampled closed-loop record.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub dt: f64,
    pub t_sd: f64,
    pub rows: Vec<TraceRow>,
}

impl SimulationTrace {
    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn axis(&self, i: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.q_ev[i]).collect()
    }

    pub fn barrier_attitude(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.barrier_attitude).collect()
    }

    pub fn barrier_rate(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.barrier_rate).collect()
    }
}

/// Stepwise closed-loop simulator.
pub struct Simulator<'a> {
    cfg: &'a ScenarioConfig,
    reference: ReferenceProfile,
    state: ClosedLoopState,
}

impl<'a> Simulator<'a> {
    pub fn new(cfg: &'a ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let mut q_e = quat_error(cfg.target_attitude, cfg.initial_attitude).normalized();
        if q_e.scalar < 0.0 {
            q_e = Quaternion::from_parts(-q_e.vec, -q_e.scalar);
        }
        let (omega_d, _) = cfg.target_motion.eval(0.0);
        let omega_e = cfg.initial_body_rate - rotation_matrix(q_e) * omega_d;
        let reference = ReferenceProfile::new(&(q_e.vec - cfg.rpf_offset), cfg.t_sd)?;
        let state = ClosedLoopState {
            error: ErrorState { q_e, omega_e },
            q_d: cfg.target_attitude.normalized(),
            observer: ObserverState::initial(&omega_e),
        };
        Ok(Self { cfg, reference, state })
    }

    pub fn reference(&self) -> &ReferenceProfile {
        &self.reference
    }

    pub fn state(&self) -> &ClosedLoopState {
        &self.state
    }

    fn target_at(&self, q_d: Quaternion, t: f64) -> TargetState {
        let (omega_d, omega_d_dot) = self.cfg.target_motion.eval(t);
        TargetState { q_d, omega_d, omega_d_dot }
    }

    /// Evaluates the control law at the current state.
    pub fn control(&self, t: f64) -> Result<ControlOutputs> {
        let target = self.target_at(self.state.q_d, t);
        let d_hat = disturbance_estimate(&self.state.observer, &self.cfg.spacecraft);
        compute_control(
            &self.state.error,
            &target,
            &self.reference.eval(t),
            &d_hat,
            &self.cfg.gains,
            &self.cfg.spacecraft,
        )
        .map_err(|e| match e {
            PapError::SingularJacobian { scalar, .. } => PapError::SingularJacobian { scalar, t: Some(t) },
            other => other,
        })
    }

    fn record(&self, t: f64, out: &ControlOutputs) -> TraceRow {
        let err = &self.state.error;
        let (omega_d, _) = self.cfg.target_motion.eval(t);
        TraceRow {
            t,
            q_ev: err.q_e.vec,
            q_e0: err.q_e.scalar,
            rho: self.reference.eval(t).rho,
            s: out.s,
            omega_s: err.omega_e + rotation_matrix(err.q_e) * omega_d,
            omega_e: err.omega_e,
            z2: out.z2,
            u_sat: out.u_sat,
            d: self.cfg.disturbance.eval(t),
            d_hat: disturbance_estimate(&self.state.observer, &self.cfg.spacecraft),
            barrier_attitude: out.barrier_attitude,
            barrier_rate: out.barrier_rate,
            lambda_v: out.lambda_v,
            lambda_u: out.lambda_u,
        }
    }

    /// Integrates plant, target and observer over `[t, t + dt_control]` with `u` held.
    pub fn advance(&mut self, t: f64, u: &Vector3<f64>) -> Result<()> {
        let cfg = self.cfg;
        let field = |tau: f64, x: &StateVector| -> StateVector {
            let s = ClosedLoopState::from_vector(x);
            let target = self.target_at(s.q_d, tau);
            let d = cfg.disturbance.eval(tau);
            let rate = error_derivative(&s.error, &target, u, &d, &cfg.spacecraft);
            let coupling = coupling_term(s.error.q_e, &s.error.omega_e, &target, &cfg.spacecraft);
            let (f1_dot, f2_dot) = observer_derivative(
                &s.observer,
                &s.error.omega_e,
                u,
                &coupling,
                &cfg.spacecraft,
                &cfg.observer,
            );
            let deriv = ClosedLoopState {
                error: ErrorState { q_e: rate.q_e_dot, omega_e: rate.omega_e_dot },
                q_d: target_derivative(&target),
                observer: ObserverState { f1_hat: f1_dot, f2_hat: f2_dot },
            };
            deriv.to_vector()
        };
        let mut x = self.state.to_vector();
        let n = cfg.inner_steps();
        for k in 0..n {
            let tau = t + k as f64 * cfg.dt_inner;
            x = rk4_step(field, &x, tau, cfg.dt_inner)?;
            x = ClosedLoopState::from_vector(&x).renormalized().to_vector();
        }
        self.state = ClosedLoopState::from_vector(&x);
        Ok(())
    }
}

/// Runs one scenario and returns its trace.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<SimulationTrace> {
    let mut sim = Simulator::new(cfg)?;
    let steps = cfg.control_steps();
    let mut rows = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let t = k as f64 * cfg.dt_control;
        let out = sim.control(t)?;
        rows.push(sim.record(t, &out));
        if k < steps {
            sim.advance(t, &out.u_sat)?;
        }
    }
    Ok(SimulationTrace { dt: cfg.dt_control, t_sd: cfg.t_sd, rows })
}

/// Seed of Monte Carlo case `case` (SplitMix64 of the master seed and case index).
pub fn case_seed(master: u64, case: usize) -> u64 {
    let mut z = master.wrapping_add((case as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Smallest admissible `|q_e0|` for random initial attitudes.
pub const MIN_INITIAL_SCALAR: f64 = 0.05;

/// Uniform random attitude with positive scalar part and `q_0 ≥ 0.05`.
pub fn random_attitude<R: Rng>(rng: &mut R) -> Quaternion {
    loop {
        let v: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if n < 1e-12 {
            continue;
        }
        let sign = if v[3] < 0.0 { -1.0 } else { 1.0 };
        let q = Quaternion::from_parts(Vector3::new(v[0], v[1], v[2]) * (sign / n), v[3].abs() / n);
        if q.scalar >= MIN_INITIAL_SCALAR {
            return q;
        }
    }
}

/// Scenario of Monte Carlo case `case`: random initial attitude drawn from the case seed.
pub fn monte_carlo_case(cfg: &ScenarioConfig, case: usize) -> ScenarioConfig {
    let seed = case_seed(cfg.seed, case);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ScenarioConfig {
        name: format!("{}-{case}", cfg.name),
        initial_attitude: cfg.target_attitude * random_attitude(&mut rng),
        seed,
        case_count: 1,
        ..cfg.clone()
    }
}

/// Runs `cfg.case_count` randomized cases in parallel; results are in case order.
///
/// A failing case is reported in place without stopping the campaign.
pub fn run_monte_carlo<T, F>(cfg: &ScenarioConfig, summarize: F) -> Result<Vec<(usize, Result<T>)>>
where
    T: Send,
    F: Fn(&ScenarioConfig, SimulationTrace) -> Result<T> + Sync,
{
    cfg.validate()?;
    Ok((0..cfg.case_count)
        .into_par_iter()
        .map(|case| {
            let case_cfg = monte_carlo_case(cfg, case);
            (case, run_scenario(&case_cfg).and_then(|trace| summarize(&case_cfg, trace)))
        })
        .collect())
}
