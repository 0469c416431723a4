//! CSV writers for traces and per-case summaries.

use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use pap_core::{PapError, PerformanceReport, SimulationTrace, TheoryBounds};

pub const TRACE_HEADER: [&str; 33] = [
    "t", "qev1", "qev2", "qev3", "qe0", "rho1", "rho2", "rho3", "s1", "s2", "s3", "ws1", "ws2", "ws3", "we1", "we2",
    "we3", "z21", "z22", "z23", "u1", "u2", "u3", "d1", "d2", "d3", "dhat1", "dhat2", "dhat3", "H", "h", "lambda_v",
    "lambda_u",
];

pub const SUMMARY_HEADER: [&str; 24] = [
    "case",
    "status",
    "settling_time1",
    "settling_time2",
    "settling_time3",
    "steady_max1",
    "steady_max2",
    "steady_max3",
    "overshoot1",
    "overshoot2",
    "overshoot3",
    "tube_entry_time",
    "h_entry_time",
    "pap_satisfied",
    "xi_m",
    "delta_s",
    "delta_z",
    "d_e",
    "t_h1",
    "t_h",
    "t_h2",
    "g_b",
    "h_b",
    "feasible",
];

/// One summary line. A failed case keeps its error and prints `NA` for every metric.
#[derive(Debug, Clone)]
pub struct CaseSummary {
    pub case: usize,
    pub outcome: Result<CaseMetrics, PapError>,
}

#[derive(Debug, Clone)]
pub struct CaseMetrics {
    pub report: PerformanceReport,
    /// Observer error bound the theory constants were computed with.
    pub xi_m: f64,
    pub bounds: TheoryBounds,
}

/// Ten significant digits, always with a `.` separator.
fn sci(v: f64) -> String {
    format!("{v:.9e}")
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), sci)
}

pub fn write_trace_csv(trace: &SimulationTrace, path: &Path) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(File::create(path)?);
    w.write_record(TRACE_HEADER)?;
    for row in &trace.rows {
        w.write_record(row.values().iter().map(|&v| sci(v)))?;
    }
    w.flush()
}

fn status(outcome: &Result<CaseMetrics, PapError>) -> &'static str {
    match outcome {
        Ok(_) => "ok",
        Err(PapError::SingularJacobian { .. }) => "singular_jacobian",
        Err(PapError::NonFiniteState { .. }) => "non_finite",
        Err(_) => "error",
    }
}

fn summary_record(s: &CaseSummary) -> Vec<String> {
    let mut rec = vec![s.case.to_string(), status(&s.outcome).to_string()];
    let Ok(m) = &s.outcome else {
        rec.resize(SUMMARY_HEADER.len(), "NA".into());
        return rec;
    };
    let r = &m.report;
    let b = &m.bounds;
    rec.extend(r.settling_time.iter().map(|&t| opt(t)));
    rec.extend(r.steady_state_max.iter().map(|&v| sci(v)));
    rec.extend(r.overshoot.iter().map(|&v| sci(v)));
    rec.push(opt(r.tube_entry_time));
    rec.push(opt(r.h_entry_time));
    rec.push(r.pap_satisfied.to_string());
    rec.extend([sci(m.xi_m), sci(b.delta_s), sci(b.delta_z), sci(b.d_e)]);
    rec.extend([b.t_h1, b.t_h, b.t_h2, b.g_b, b.h_b].map(opt));
    rec.push(b.feasible.to_string());
    rec
}

pub fn write_summary_csv(cases: &[CaseSummary], path: &Path) -> io::Result<()> {
    let file = File::create(path)?;
    let mut w = csv::Writer::from_writer(file);
    w.write_record(SUMMARY_HEADER)?;
    for case in cases {
        w.write_record(summary_record(case))?;
    }
    w.flush()
}

/// Failed cases as `case: message` lines, for the terminal.
pub fn write_failures(cases: &[CaseSummary], mut out: impl Write) -> io::Result<()> {
    for s in cases {
        if let Err(e) = &s.outcome {
            writeln!(out, "case {}: {e}", s.case)?;
        }
    }
    Ok(())
}
