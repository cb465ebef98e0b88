//! Invariant suite run against a scenario: chart consistency at the
//! initial state, then conservation and physicality along each trajectory.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chart::{canonical_brackets, chart_brackets, moments_to_chart, sqrt_p};
use crate::dynamics::{ExtendedState, FlowProblem, TrajectoryRecord};
use crate::error::Result;
use crate::finsler::{hq_canonical, hq_moment_form};
use crate::moments::{check_physicality, default_tol_psd};
use crate::scenario::ScenarioConfig;

/// Round-trip tolerance of chart → moments → chart.
pub const ROUND_TRIP_TOL: f64 = 1e-9;
/// Largest deviation of the induced chart brackets from the Darboux form.
pub const BRACKET_TOL: f64 = 1e-8;
/// Relative agreement of the two evaluations of H_Q.
pub const ROUTE_TOL: f64 = 1e-10;
/// Absolute slack (action²) on the uncertainty floor and RS positivity.
pub const FLOOR_TOL: f64 = 1e-9;
/// Below this √P the chart angle α is cyclic and the bracket check is skipped.
pub const MIN_SQRT_P: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub trajectory: String,
    pub name: String,
    pub value: f64,
    /// Bound the value is compared against; see `name` for the direction.
    pub threshold: f64,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub scenario: String,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| c.status == Status::Fail).count()
    }

    /// Plain-text table, one row per check.
    pub fn table(&self) -> String {
        let tw = self.checks.iter().map(|c| c.trajectory.len()).chain([10]).max().unwrap_or(10);
        let nw = self.checks.iter().map(|c| c.name.len()).chain([5]).max().unwrap_or(5);
        let mut s = String::new();
        let _ = writeln!(s, "{:<tw$}  {:<nw$}  {:>12}  {:>12}  result", "trajectory", "check", "value", "threshold");
        for c in &self.checks {
            let status = match c.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Skip => "skip",
            };
            let _ = write!(s, "{:<tw$}  {:<nw$}  {:>12.4e}  {:>12.4e}  {status}", c.trajectory, c.name, c.value, c.threshold);
            if let Some(n) = &c.note {
                let _ = write!(s, "  ({n})");
            }
            s.push('\n');
        }
        let _ = writeln!(s, "{}: {} checks, {} failed", self.scenario, self.checks.len(), self.failures());
        s
    }
}

struct Collector {
    label: String,
    checks: Vec<Check>,
}

impl Collector {
    /// Records `value <= threshold`.
    fn at_most(&mut self, name: &str, value: f64, threshold: f64) {
        let status = if value <= threshold { Status::Pass } else { Status::Fail };
        self.push(name, value, threshold, status, None);
    }

    fn at_least(&mut self, name: &str, value: f64, threshold: f64) {
        let status = if value >= threshold { Status::Pass } else { Status::Fail };
        self.push(name, value, threshold, status, None);
    }

    fn push(&mut self, name: &str, value: f64, threshold: f64, status: Status, note: Option<String>) {
        self.checks.push(Check { trajectory: self.label.clone(), name: name.into(), value, threshold, status, note });
    }

    fn failed(&mut self, name: &str, why: String) {
        self.push(name, f64::NAN, f64::NAN, Status::Fail, Some(why));
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn initial_checks(col: &mut Collector, problem: &FlowProblem, start: &ExtendedState) -> Result<()> {
    let hbar = problem.hbar;
    let state = start.moment_state(hbar);
    let phys = check_physicality(&state, default_tol_psd(hbar));
    col.at_least("initial RS eigenvalue", phys.min_eigenvalue, -FLOOR_TOL);

    let chart = start.chart(hbar);
    let inv = moments_to_chart(&state)?;
    let mut err: f64 = 0.0;
    for (k, (a, b)) in chart.to_vector().iter().zip(inv.chart.to_vector()).enumerate() {
        if k == crate::chart::cidx::ALPHA && !inv.alpha_defined {
            continue;
        }
        err = err.max((a - b).abs() / a.abs().max(1.0));
    }
    col.at_most("chart round trip", err, ROUND_TRIP_TOL);

    if sqrt_p(chart.p_alpha, chart.c1, chart.c2)? > MIN_SQRT_P {
        let b = chart_brackets(&chart)?;
        col.at_most("canonical brackets", (b - canonical_brackets()).abs().max(), BRACKET_TOL);
    } else {
        col.push("canonical brackets", 0.0, BRACKET_TOL, Status::Skip, Some("sqrt(P) = 0, alpha is cyclic".into()));
    }

    let a = hq_canonical(&problem.metric, &start.x, &start.p, &start.q, problem.m)?;
    let p4 = [start.p[0], start.p[1], start.p[2], start.p[3]];
    let b = hq_moment_form(&problem.metric, &start.x, &p4, &start.moments(), problem.m)?;
    col.at_most("H_Q routes agree", (a - b).abs() / (problem.mc2()).max(a.abs()), ROUTE_TOL);
    Ok(())
}

fn trajectory_checks(col: &mut Collector, problem: &FlowProblem, start: &ExtendedState, rec: &TrajectoryRecord) {
    let hbar = problem.hbar;
    let tol = problem.tol.constraint_tol;
    col.at_most("constraint |H_Q|/mc^2", rec.drift.max_constraint, tol);
    let c_scale = start.p[crate::finsler::pidx::C1].abs().max(hbar);
    let cas = rec.drift.casimir_drift[0].max(rec.drift.casimir_drift[1]) / c_scale;
    col.at_most("Casimir drift", cas, 1e-12);
    let floor = hbar * hbar / 4.0;
    col.at_least("min U_x", rec.drift.min_u_x, floor - FLOOR_TOL);
    col.at_least("min U_y", rec.drift.min_u_y, floor - FLOOR_TOL);
    col.at_least("min RS eigenvalue", rec.drift.min_rs_eigenvalue, -FLOOR_TOL);

    let dir = (rec.samples.last().map_or(0.0, |s| s.tau) - start.tau).signum();
    let monotone = rec.samples.windows(2).all(|w| (w[1].tau - w[0].tau) * dir > 0.0);
    col.push("tau strictly monotone", if monotone { 1.0 } else { 0.0 }, 1.0, if monotone { Status::Pass } else { Status::Fail }, None);

    match rec.proper_time() {
        Ok(tq) => {
            let dtau = (rec.final_sample().tau - start.tau).abs();
            col.at_most("proper time vs parameter", rel(tq, dtau), 2.0 * tol);
        }
        Err(e) => col.failed("proper time vs parameter", e.to_string()),
    }
}

/// Runs every state of the scenario and checks it. Configuration errors are
/// returned as `Err`; numerical failures become failed checks.
pub fn validate_scenario(cfg: &ScenarioConfig) -> Result<ValidationReport> {
    cfg.validate()?;
    let problem = cfg.problem()?;
    let per_state: Vec<Vec<Check>> = cfg
        .states
        .par_iter()
        .enumerate()
        .map(|(index, s)| {
            let mut col = Collector { label: cfg.label(index), checks: Vec::new() };
            let start = match s.initial_state(cfg.particle.hbar).and_then(|st| problem.on_shell(&st)) {
                Ok(st) => st,
                Err(e) => {
                    col.failed("initial state", e.to_string());
                    return col.checks;
                }
            };
            let residual = problem.hamiltonian(&start).map(|h| h.abs() / problem.mc2()).unwrap_or(f64::NAN);
            col.at_most("initial mass shell", residual, 1e-12);
            if let Err(e) = initial_checks(&mut col, &problem, &start) {
                col.failed("initial chart", e.to_string());
            }
            match problem.integrate(&start, cfg.run.tau_end, cfg.run.samples, cfg.run.sample_every) {
                Ok(rec) => {
                    col.push("run completes", 1.0, 1.0, Status::Pass, None);
                    trajectory_checks(&mut col, &problem, &start, &rec);
                }
                Err(e) => col.failed("run completes", e.to_string()),
            }
            col.checks
        })
        .collect();
    let checks = per_state.into_iter().flatten().collect();
    Ok(ValidationReport { scenario: cfg.name.clone(), checks })
}
