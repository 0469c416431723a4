//! Post-processing of closed-loop traces: performance metrics, the attraction-time
//! bounds of the barrier analysis, and a discrete monitor for `Ḣ > −αH`.

use nalgebra::{Matrix2, Matrix3, SymmetricEigen, Vector3};

use crate::controller::ControllerGains;
use crate::dynamics::SpacecraftParams;
use crate::error::{PapError, Result};
use crate::observer::ObserverParams;
use crate::sim::SimulationTrace;

/// Smallest sample time after which every later `|x| < bound`.
///
/// `None` if the last sample still violates the bound.
pub fn settling_time(times: &[f64], values: &[f64], bound: f64) -> Result<Option<f64>> {
    if times.is_empty() || times.len() != values.len() {
        return Err(PapError::EmptyTrace);
    }
    match values.iter().rposition(|v| v.abs() >= bound) {
        None => Ok(Some(times[0])),
        Some(last) => Ok(times.get(last + 1).copied()),
    }
}

/// Largest excursion past zero on the side opposite to `initial_sign`.
pub fn overshoot(values: &[f64], initial_sign: f64) -> Result<f64> {
    let sign = if initial_sign < 0.0 { -1.0 } else { 1.0 };
    values
        .iter()
        .map(|v| sign * v)
        .reduce(f64::min)
        .map(|m| (-m).max(0.0))
        .ok_or(PapError::EmptyTrace)
}

/// Start of the final run of positive samples, `None` if the last sample is not positive.
pub fn entry_time(times: &[f64], values: &[f64]) -> Result<Option<f64>> {
    if times.is_empty() || times.len() != values.len() {
        return Err(PapError::EmptyTrace);
    }
    match values.iter().rposition(|v| *v <= 0.0) {
        None => Ok(Some(times[0])),
        Some(last) => Ok(times.get(last + 1).copied()),
    }
}

/// Tolerances used to judge a run against the assigned performance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PapRequirements {
    /// Allowed `|T_s − T_sd|`, s.
    pub settling_margin: f64,
    /// Allowed overshoot per axis.
    pub overshoot_limit: f64,
}

impl Default for PapRequirements {
    fn default() -> Self {
        Self { settling_margin: 1.0, overshoot_limit: 1e-3 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerformanceReport {
    pub settling_time: [Option<f64>; 3],
    /// `max |q_evi(t)|` over `t ≥ T_sd`.
    pub steady_state_max: [f64; 3],
    pub overshoot: [f64; 3],
    pub tube_entry_time: Option<f64>,
    pub h_entry_time: Option<f64>,
    pub pap_satisfied: bool,
}

/// Metrics of one trace with tube half-width `tube`.
pub fn performance_report(
    trace: &SimulationTrace,
    tube: f64,
    req: &PapRequirements,
) -> Result<PerformanceReport> {
    let first = trace.rows.first().ok_or(PapError::EmptyTrace)?;
    let times = trace.times();
    let mut settling = [None; 3];
    let mut steady = [0.0; 3];
    let mut over = [0.0; 3];
    for i in 0..3 {
        let axis = trace.axis(i);
        settling[i] = settling_time(&times, &axis, tube)?;
        steady[i] = trace
            .rows
            .iter()
            .filter(|r| r.t >= trace.t_sd)
            .map(|r| r.q_ev[i].abs())
            .fold(0.0, f64::max);
        over[i] = overshoot(&axis, first.q_ev[i].signum())?;
    }
    let tube_entry_time = entry_time(&times, &trace.barrier_attitude())?;
    let h_entry_time = entry_time(&times, &trace.barrier_rate())?;
    let pap_satisfied = (0..3).all(|i| {
        settling[i].is_some_and(|ts| (ts - trace.t_sd).abs() <= req.settling_margin)
            && steady[i] < tube
            && over[i] < req.overshoot_limit
    });
    Ok(PerformanceReport {
        settling_time: settling,
        steady_state_max: steady,
        overshoot: over,
        tube_entry_time,
        h_entry_time,
        pap_satisfied,
    })
}

/// Largest `‖d − d̂‖` at or after `after`; a data-driven stand-in for `ξ_m`.
pub fn observer_error_peak(trace: &SimulationTrace, after: f64) -> f64 {
    trace
        .rows
        .iter()
        .filter(|r| r.t >= after)
        .map(|r| (r.d - r.d_hat).norm())
        .fold(0.0, f64::max)
}

/// Free constants of the observer error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObserverBoundInputs {
    pub h_m: f64,
    pub chi: f64,
    pub c_d: f64,
    /// Right-hand side scale of the Lyapunov equation.
    pub c_p: f64,
}

impl Default for ObserverBoundInputs {
    fn default() -> Self {
        Self { h_m: 1e-8, chi: 0.5, c_d: 0.5, c_p: 1.0 }
    }
}

/// Constants and attraction times of the barrier analysis.
///
/// Times are `None` until [`attraction_bounds`] fills them in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryBounds {
    pub delta_s: f64,
    pub delta_z: f64,
    pub t_h1: Option<f64>,
    pub t_h: Option<f64>,
    pub t_h2: Option<f64>,
    pub g_b: Option<f64>,
    pub h_b: Option<f64>,
    pub d_e: f64,
    pub feasible: bool,
}

/// Symmetric `Q` with `PᵀQ + QP = −c·I` for a Hurwitz 2×2 `P`.
pub fn lyapunov_2x2(p: &Matrix2<f64>, c: f64) -> Result<Matrix2<f64>> {
    // Unknowns (q11, q12, q22).
    let (a, b, cc, d) = (p[(0, 0)], p[(0, 1)], p[(1, 0)], p[(1, 1)]);
    let m = Matrix3::new(
        2.0 * a, 2.0 * cc, 0.0,
        b, a + d, cc,
        0.0, 2.0 * b, 2.0 * d,
    );
    let q = m
        .lu()
        .solve(&Vector3::new(-c, 0.0, -c))
        .ok_or_else(|| PapError::InvalidParameter {
            name: "observer",
            reason: "error matrix has no unique Lyapunov solution".into(),
        })?;
    Ok(Matrix2::new(q.x, q.y, q.y, q.z))
}

/// `δ_S = δ_H − K_HΔ_h`, `δ_z = δ_h − 2K_hξ_m/λ_Jmin` and the observer bound
/// `D_e = λ_Jmax·√(h_m / (χ C_d λ_min(Q₂)))`.
pub fn derived_constants(
    g: &ControllerGains,
    params: &SpacecraftParams,
    op: &ObserverParams,
    xi_m: f64,
    aux: &ObserverBoundInputs,
) -> Result<TheoryBounds> {
    let delta_s = g.delta_attitude - g.k_attitude_barrier * g.tube_rate;
    let delta_z = g.delta_rate - 2.0 * g.k_rate_barrier * xi_m / params.lambda_min();
    let p2 = Matrix2::new(-op.c1, 1.0, -op.c2 * op.beta, 0.0);
    let q2 = lyapunov_2x2(&p2, aux.c_p)?;
    let q_min = SymmetricEigen::new(q2).eigenvalues.min();
    let d_e = params.lambda_max() * (aux.h_m / (aux.chi * aux.c_d * q_min)).sqrt();
    Ok(TheoryBounds {
        delta_s,
        delta_z,
        t_h1: None,
        t_h: None,
        t_h2: None,
        g_b: None,
        h_b: None,
        d_e,
        feasible: delta_s > 0.0 && delta_z > 0.0,
    })
}

/// Peak of `(2n/(2α−γ))(e^{−γt/2} − e^{−αt})` over `t ≥ 0` (`n·t·e^{−αt}` when `γ = 2α`).
pub fn peak_dip(alpha: f64, gamma: f64, n: f64) -> f64 {
    let ratio = gamma / (2.0 * alpha);
    if (ratio - 1.0).abs() < 1e-9 {
        return n / (alpha * std::f64::consts::E);
    }
    n / (alpha - 0.5 * gamma) * (-gamma / (gamma - 2.0 * alpha) * ratio.ln()).exp() * (1.0 - ratio)
}

/// Time for `x(t) = (x₀ − r/k)e^{−kt} + r/k` to reach zero from `x₀ ≤ 0`; zero if `x₀ > 0`.
fn recovery_time(rate: f64, x0: f64, push: f64) -> f64 {
    if x0 > 0.0 {
        0.0
    } else {
        (rate * x0.abs() / push + 1.0).ln() / rate
    }
}

/// Worst-case times for the barriers to turn positive from `H(0)`, `h(0)`.
///
/// `constants` must come from [`derived_constants`] and be feasible.
pub fn attraction_bounds(
    barrier_attitude0: f64,
    barrier_rate0: f64,
    constants: &TheoryBounds,
    g: &ControllerGains,
) -> Result<TheoryBounds> {
    if !constants.feasible {
        return Err(PapError::InfeasibleConstants {
            delta_s: constants.delta_s,
            delta_z: constants.delta_z,
        });
    }
    let m = constants.delta_s * g.tube_attitude;
    let t_h1 = recovery_time(g.alpha, barrier_attitude0, m);
    let t_h = recovery_time(g.gamma, barrier_rate0, constants.delta_z * g.tube_rate);
    // ‖z₂(0)‖² − Δ_h² = −h(0)/K_h.
    let z1 = (-barrier_rate0 / g.k_rate_barrier).max(0.0).sqrt();
    let n = g.k_attitude_barrier * z1 * g.tube_attitude;
    let g_b = peak_dip(g.alpha, g.gamma, n);
    let decay = (-g.alpha * t_h).exp();
    let h_b = barrier_attitude0 * decay + m / g.alpha * (1.0 - decay) - g_b;
    let t_h2 = recovery_time(g.alpha, h_b, m);
    Ok(TheoryBounds {
        t_h1: Some(t_h1),
        t_h: Some(t_h),
        t_h2: Some(t_h2),
        g_b: Some(g_b),
        h_b: Some(h_b),
        ..*constants
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PapViolation {
    pub t: f64,
    /// Finite-difference `Ḣ + αH`.
    pub margin: f64,
}

/// Samples where the discrete `Ḣ + αH` drops below `−1e-12·max(1, |H|)` while `‖z₂‖ < Δ_h`.
///
/// Forward differences everywhere except the last sample, which uses a backward one.
pub fn pap_monitor(trace: &SimulationTrace, g: &ControllerGains) -> Vec<PapViolation> {
    let rows = &trace.rows;
    if rows.len() < 2 {
        return Vec::new();
    }
    let last = rows.len() - 1;
    rows.iter()
        .enumerate()
        .filter(|(_, r)| r.z2.norm() < g.tube_rate)
        .filter_map(|(i, r)| {
            let (a, b) = if i < last { (i, i + 1) } else { (i - 1, i) };
            let slope = (rows[b].barrier_attitude - rows[a].barrier_attitude) / (rows[b].t - rows[a].t);
            let h = r.barrier_attitude;
            let margin = slope + g.alpha * h;
            (margin < -1e-12 * h.abs().max(1.0)).then_some(PapViolation { t: r.t, margin })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::TraceRow;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn grid(n: usize, dt: f64) -> Vec<f64> {
        (0..n).map(|k| k as f64 * dt).collect()
    }

    #[test]
    fn settling_examples() {
        let t = grid(101, 0.1);
        assert_eq!(settling_time(&t, &vec![0.0; 101], 1e-5).unwrap(), Some(0.0));

        let tube = 1e-5;
        let decay: Vec<f64> = t.iter().map(|t| 2.0 * tube * (-t).exp()).collect();
        let ts = settling_time(&t, &decay, tube).unwrap().unwrap();
        assert_relative_eq!(ts, 0.7, epsilon = 1e-12);
        assert!(ts > 2f64.ln() && ts - 0.1 <= 2f64.ln());

        let mut late = vec![0.0; 101];
        late[100] = 1.0;
        assert_eq!(settling_time(&t, &late, 1e-5).unwrap(), None);
        assert_eq!(settling_time(&[], &[], 1e-5), Err(PapError::EmptyTrace));
    }

    #[test]
    fn overshoot_examples() {
        let decay: Vec<f64> = (0..50).map(|k| 0.3 * (-0.1 * k as f64).exp()).collect();
        assert_eq!(overshoot(&decay, 1.0).unwrap(), 0.0);

        let dip = vec![0.2, 0.05, -0.001, -0.003, -0.002, 0.0];
        assert_relative_eq!(overshoot(&dip, 1.0).unwrap(), 0.003);
        let flipped: Vec<f64> = dip.iter().map(|v| -v).collect();
        assert_eq!(overshoot(&flipped, -1.0).unwrap(), overshoot(&dip, 1.0).unwrap());
        assert!(overshoot(&[], 1.0).is_err());
    }

    #[test]
    fn reference_gains_are_infeasible() {
        let b = derived_constants(
            &ControllerGains::default(),
            &SpacecraftParams::reference(),
            &ObserverParams::default(),
            0.0,
            &ObserverBoundInputs::default(),
        )
        .unwrap();
        assert_relative_eq!(b.delta_s, -1e-5, epsilon = 1e-18);
        assert!(!b.feasible);
        assert_eq!(b.delta_z, ControllerGains::default().delta_rate);
        let err = attraction_bounds(-1.0, 1.0, &b, &ControllerGains::default()).unwrap_err();
        assert!(matches!(err, PapError::InfeasibleConstants { .. }));
    }

    #[test]
    fn feasible_example() {
        let g = ControllerGains { delta_attitude: 3e-5, ..Default::default() };
        let b = derived_constants(
            &g,
            &SpacecraftParams::reference(),
            &ObserverParams::default(),
            1e-4,
            &ObserverBoundInputs::default(),
        )
        .unwrap();
        assert_relative_eq!(b.delta_s, 1e-5, max_relative = 1e-9);
        assert_relative_eq!(b.delta_z, 2e-3 - 2e-4 / 1.639_1, max_relative = 1e-4);
        assert!(b.feasible);
    }

    #[test]
    fn lyapunov_residual() {
        let p = ObserverParams { c1: 3.0, c2: 2.0, beta: 0.7 };
        let p2 = Matrix2::new(-p.c1, 1.0, -p.c2 * p.beta, 0.0);
        let q = lyapunov_2x2(&p2, 1.5).unwrap();
        let residual = p2.transpose() * q + q * p2 + Matrix2::<f64>::identity() * 1.5;
        assert!(residual.norm() < 1e-12);
        assert!(SymmetricEigen::new(q).eigenvalues.min() > 0.0);
    }

    #[test]
    fn d_e_scales_with_inertia() {
        let aux = ObserverBoundInputs::default();
        let g = ControllerGains::default();
        let op = ObserverParams::default();
        let unit = SpacecraftParams::new(Matrix3::identity(), 0.05).unwrap();
        let twice = SpacecraftParams::new(2.0 * Matrix3::identity(), 0.05).unwrap();
        let a = derived_constants(&g, &unit, &op, 0.0, &aux).unwrap().d_e;
        let b = derived_constants(&g, &twice, &op, 0.0, &aux).unwrap().d_e;
        assert_relative_eq!(b, 2.0 * a, max_relative = 1e-12);
    }

    fn feasible(alpha: f64, gamma: f64, delta_s: f64) -> (TheoryBounds, ControllerGains) {
        let g = ControllerGains { alpha, gamma, ..Default::default() };
        let b = TheoryBounds {
            delta_s,
            delta_z: 1e-3,
            t_h1: None,
            t_h: None,
            t_h2: None,
            g_b: None,
            h_b: None,
            d_e: 0.0,
            feasible: true,
        };
        (b, g)
    }

    #[test]
    fn t_h1_examples() {
        // δ_S Δ_e = 0.01.
        let (b, g) = feasible(0.5, 0.5, 1e3);
        let out = attraction_bounds(-1.0, 1.0, &b, &g).unwrap();
        assert_relative_eq!(out.t_h1.unwrap(), 2.0 * 51f64.ln(), epsilon = 1e-12);
        assert_relative_eq!(out.t_h1.unwrap(), 7.86365, epsilon = 1e-5);
        let out = attraction_bounds(0.0, 1.0, &b, &g).unwrap();
        assert_eq!(out.t_h1, Some(0.0));
        assert_eq!(out.t_h, Some(0.0));
        assert_eq!(out.g_b, Some(0.0));
    }

    #[test]
    fn peak_dip_equal_rates() {
        assert_relative_eq!(peak_dip(0.5, 1.0, 1.0), 2.0 / std::f64::consts::E, epsilon = 1e-12);
        assert_relative_eq!(peak_dip(0.5, 1.0, 1.0), 0.735759, epsilon = 1e-6);
    }

    fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        let r = (5f64.sqrt() - 1.0) / 2.0;
        let mut a = hi - r * (hi - lo);
        let mut b = lo + r * (hi - lo);
        let (mut fa, mut fb) = (f(a), f(b));
        while hi - lo > 1e-12 * (1.0 + hi.abs()) {
            if fa < fb {
                lo = a;
                a = b;
                fa = fb;
                b = lo + r * (hi - lo);
                fb = f(b);
            } else {
                hi = b;
                b = a;
                fb = fa;
                a = hi - r * (hi - lo);
                fa = f(a);
            }
        }
        f(0.5 * (lo + hi))
    }

    fn dip_oracle(alpha: f64, gamma: f64, n: f64) -> f64 {
        let f = |t: f64| 2.0 * n / (2.0 * alpha - gamma) * ((-0.5 * gamma * t).exp() - (-alpha * t).exp());
        // Unimodal on [0, ∞); the peak sits well inside this window for the sampled rates.
        golden_max(f, 0.0, 200.0 / alpha.min(gamma))
    }

    #[test]
    fn peak_dip_example() {
        assert_relative_eq!(peak_dip(0.5, 0.3, 1.0), dip_oracle(0.5, 0.3, 1.0), epsilon = 1e-9);
    }

    #[test]
    fn peak_dip_limit() {
        let at = peak_dip(0.5, 1.0, 1.3);
        let mut prev = f64::INFINITY;
        for k in 2..8 {
            for side in [-1.0, 1.0] {
                let gap = (peak_dip(0.5, 1.0 + side * 10f64.powi(-k), 1.3) - at).abs();
                assert!(gap < prev, "k={k}");
                if k >= 6 {
                    assert!(gap < 1e-6, "k={k} gap={gap}");
                }
            }
            prev = (peak_dip(0.5, 1.0 + 10f64.powi(-k), 1.3) - at).abs() * 1.5;
        }
    }

    fn synthetic(f: impl Fn(f64) -> f64) -> SimulationTrace {
        let rows = (0..=100)
            .map(|k| {
                let t = 0.1 * k as f64;
                TraceRow { t, barrier_attitude: f(t), ..Default::default() }
            })
            .collect();
        SimulationTrace { dt: 0.1, t_sd: 50.0, rows }
    }

    #[test]
    fn monitor_synthetic() {
        let g = ControllerGains::default();
        let slow = synthetic(|t| (-0.5 * g.alpha * t).exp());
        assert!(pap_monitor(&slow, &g).is_empty());
        let fast = synthetic(|t| (-2.0 * g.alpha * t).exp());
        assert_eq!(pap_monitor(&fast, &g).len(), fast.rows.len());
    }

    #[test]
    fn monitor_ignores_large_z2() {
        let g = ControllerGains::default();
        let mut fast = synthetic(|t| (-2.0 * g.alpha * t).exp());
        for r in &mut fast.rows {
            r.z2 = Vector3::new(1.0, 0.0, 0.0);
        }
        assert!(pap_monitor(&fast, &g).is_empty());
    }

    #[test]
    fn entry_time_examples() {
        let t = grid(5, 1.0);
        assert_eq!(entry_time(&t, &[-1.0, 1.0, -1.0, 1.0, 1.0]).unwrap(), Some(3.0));
        assert_eq!(entry_time(&t, &[1.0; 5]).unwrap(), Some(0.0));
        assert_eq!(entry_time(&t, &[1.0, 1.0, 1.0, 1.0, 0.0]).unwrap(), None);
    }

    proptest! {
        #[test]
        fn peak_dip_matches_oracle(alpha in 0.05..2.0f64, gamma in 0.05..4.0f64, n in 0.01..10.0f64) {
            prop_assume!((gamma - 2.0 * alpha).abs() > 1e-3);
            let closed = peak_dip(alpha, gamma, n);
            let numeric = dip_oracle(alpha, gamma, n);
            prop_assert!((closed - numeric).abs() < 1e-9 * (1.0 + numeric.abs()), "{closed} vs {numeric}");
        }

        #[test]
        fn t_h1_monotone(h0 in 1e-12..1.0f64, extra in 1e-12..1.0f64, ds in 1e-3..1e3f64) {
            let (b, g) = feasible(0.5, 0.5, ds);
            let t = |h: f64, d: f64| {
                let b = TheoryBounds { delta_s: d, ..b };
                attraction_bounds(-h, 1.0, &b, &g).unwrap().t_h1.unwrap()
            };
            prop_assert!(t(h0 + extra, ds) >= t(h0, ds));
            prop_assert!(t(h0, ds * 2.0) <= t(h0, ds));
        }

        #[test]
        fn settling_monotone_in_tube(values in prop::collection::vec(-1e-3..1e-3f64, 1..200), tube in 1e-5..1e-3f64) {
            let t = grid(values.len(), 0.1);
            let narrow = settling_time(&t, &values, tube).unwrap();
            let wide = settling_time(&t, &values, 2.0 * tube).unwrap();
            match (narrow, wide) {
                (Some(a), Some(b)) => prop_assert!(b <= a),
                (Some(_), None) => prop_assert!(false),
                _ => {}
            }
        }
    }
}
