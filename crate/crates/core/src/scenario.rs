//! Scenario files: metric, particle, one or more initial states and run
//! settings. TOML is the primary format; JSON with the same layout is
//! accepted. A file with several `[[state]]` entries is a sweep whose
//! trajectories run in parallel and come back in file order.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize};

use crate::chart::{sqrt_p_clamped, CanonicalChart};
use crate::dynamics::{ExtendedState, FlowProblem, IntegrationStats, Mode, Tolerances, TrajectoryRecord, CSV_COLUMNS};
use crate::error::{Error, Result};
use crate::finsler::pidx;
use crate::metric::MetricConfig;
use crate::moments::{MomentState, N_MOMENTS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    /// Free-form statement of the unit system, e.g. "natural (c = hbar = 1)".
    #[serde(default = "default_units")]
    pub units: String,
    pub metric: MetricConfig,
    pub particle: ParticleConfig,
    #[serde(rename = "state", deserialize_with = "one_or_many")]
    pub states: Vec<StateConfig>,
    pub run: RunConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_units() -> String {
    "natural".into()
}

fn one_or_many<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<StateConfig>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        Many(Vec<StateConfig>),
        One(Box<StateConfig>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::Many(v) => v,
        OneOrMany::One(s) => vec![*s],
    })
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleConfig {
    pub m: f64,
    #[serde(default = "one")]
    pub hbar: f64,
    #[serde(default)]
    pub mode: Mode,
}

/// Chart-form fluctuations; ħ comes from the particle block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartState {
    pub s_x: f64,
    #[serde(default)]
    pub p_sx: f64,
    pub s_y: f64,
    #[serde(default)]
    pub p_sy: f64,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default)]
    pub p_alpha: f64,
    #[serde(default = "half_pi")]
    pub beta: f64,
    #[serde(default)]
    pub p_beta: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2", default)]
    pub c2: f64,
}

fn half_pi() -> f64 {
    std::f64::consts::FRAC_PI_2
}

impl ChartState {
    pub fn with_hbar(&self, hbar: f64) -> CanonicalChart {
        CanonicalChart {
            s_x: self.s_x,
            p_sx: self.p_sx,
            s_y: self.s_y,
            p_sy: self.p_sy,
            alpha: self.alpha,
            p_alpha: self.p_alpha,
            beta: self.beta,
            p_beta: self.p_beta,
            c1: self.c1,
            c2: self.c2,
            hbar,
        }
    }
}

/// Initial mean event, mean spatial momentum and exactly one of `chart` or
/// `moments` (Δ in the order xx, xp_x, p_xp_x, yy, yp_y, p_yp_y, xy, xp_y,
/// p_xy, p_xp_y). p_t is always solved from the mass shell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default)]
    pub x: [f64; 4],
    #[serde(default)]
    pub p: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chart: Option<ChartState>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moments: Option<[f64; N_MOMENTS]>,
}

impl StateConfig {
    /// Off-shell starting state (p_t = 0) after checking the fluctuation data.
    pub fn initial_state(&self, hbar: f64) -> Result<ExtendedState> {
        match (&self.chart, &self.moments) {
            (Some(c), None) => {
                let chart = c.with_hbar(hbar);
                chart.check()?;
                Ok(ExtendedState::from_chart(self.x, &chart, self.p))
            }
            (None, Some(d)) => {
                let ms = MomentState { mean_x: self.x, mean_p: [0.0, self.p[0], self.p[1], self.p[2]], delta: *d, hbar };
                ExtendedState::from_moments(&ms)
            }
            _ => Err(Error::Config("each state needs exactly one of `chart` or `moments`".into())),
        }
    }
}

fn default_samples() -> usize {
    10_000
}

fn default_every() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub tau_end: f64,
    /// Grid intervals; the constraint is checked at every grid point.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Record every n-th grid point in the trajectory output.
    #[serde(default = "default_every")]
    pub sample_every: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Relative paths resolve against the working directory.
    pub dir: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plot: Option<String>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("output"), trajectory: None, summary: None, plot: None }
    }
}

/// Resolved output file locations.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputPaths {
    pub trajectory: PathBuf,
    pub summary: PathBuf,
    pub plot: PathBuf,
}

impl ScenarioConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `.json` files as JSON and everything else as TOML.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            Self::from_json_str(&text)
        } else {
            Self::from_toml_str(&text)
        }
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.name.trim().is_empty() {
            return bad("scenario name is empty".into());
        }
        self.metric.build()?;
        let ParticleConfig { m, hbar, .. } = self.particle;
        if !(m > 0.0 && m.is_finite()) || !(hbar > 0.0 && hbar.is_finite()) {
            return bad(format!("need m > 0 and hbar > 0, got m = {m}, hbar = {hbar}"));
        }
        if !(self.run.tau_end.is_finite() && self.run.tau_end != 0.0) {
            return bad(format!("tau_end must be finite and non-zero, got {}", self.run.tau_end));
        }
        if self.run.samples == 0 || self.run.sample_every == 0 {
            return bad("samples and sample_every must be at least 1".into());
        }
        self.run.tolerances.validate()?;
        if self.states.is_empty() {
            return bad("scenario has no [[state]] entry".into());
        }
        for (k, s) in self.states.iter().enumerate() {
            if s.chart.is_some() == s.moments.is_some() {
                return bad(format!("state {k} needs exactly one of `chart` or `moments`"));
            }
            let finite = s.x.iter().chain(&s.p).chain(s.moments.iter().flatten()).all(|v| v.is_finite());
            if !finite {
                return bad(format!("state {k} has non-finite entries"));
            }
        }
        Ok(())
    }

    pub fn problem(&self) -> Result<FlowProblem> {
        let mut p = FlowProblem::new(self.metric.build()?, self.particle.m, self.particle.hbar, self.particle.mode);
        p.tol = self.run.tolerances;
        Ok(p)
    }

    /// On-shell initial states in file order.
    pub fn initial_states(&self) -> Result<Vec<ExtendedState>> {
        let problem = self.problem()?;
        self.states.iter().map(|s| problem.on_shell(&s.initial_state(self.particle.hbar)?)).collect()
    }

    pub fn label(&self, index: usize) -> String {
        self.states[index].label.clone().unwrap_or_else(|| format!("{}#{index}", self.name))
    }

    /// Output locations under `dir`, or under the configured directory.
    pub fn output_paths(&self, dir: Option<&Path>) -> OutputPaths {
        let dir = dir.map(Path::to_path_buf).unwrap_or_else(|| self.output.dir.clone());
        let file = |name: &Option<String>, suffix: &str| dir.join(name.clone().unwrap_or_else(|| format!("{}{suffix}", self.name)));
        OutputPaths {
            trajectory: file(&self.output.trajectory, ".csv"),
            summary: file(&self.output.summary, ".summary.json"),
            plot: file(&self.output.plot, ".plot.csv"),
        }
    }
}

/// One finished trajectory of a scenario.
#[derive(Debug, Clone)]
pub struct TrajectoryOutcome {
    pub index: usize,
    pub label: String,
    pub start: ExtendedState,
    pub record: TrajectoryRecord,
}

/// Integrates every state of the scenario on the rayon pool. Each worker owns
/// its integration; results are ordered by state index, and the error
/// reported is the one of the lowest failing index.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<Vec<TrajectoryOutcome>> {
    cfg.validate()?;
    let problem = cfg.problem()?;
    let results: Vec<Result<TrajectoryOutcome>> = cfg
        .states
        .par_iter()
        .enumerate()
        .map(|(index, s)| {
            let start = problem.on_shell(&s.initial_state(cfg.particle.hbar)?)?;
            let record = problem.integrate(&start, cfg.run.tau_end, cfg.run.samples, cfg.run.sample_every)?;
            Ok(TrajectoryOutcome { index, label: cfg.label(index), start, record })
        })
        .collect();
    results.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub index: usize,
    pub label: String,
    pub tau_end: f64,
    pub final_state: ExtendedState,
    pub final_chart: CanonicalChart,
    /// max |H_Q| / mc² over the grid
    pub max_constraint: f64,
    pub casimir_drift: [f64; 2],
    pub min_u_x: f64,
    pub min_u_y: f64,
    pub min_rs_eigenvalue: f64,
    /// Proper time along the mean worldline.
    pub tau_q: f64,
    pub coordinate_time_elapsed: f64,
    /// τ_Q per unit coordinate time; compares clock rates across a sweep.
    pub aging_rate: f64,
    pub sqrt_p_final: f64,
    pub stats: IntegrationStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub name: String,
    pub units: String,
    pub m: f64,
    pub c: f64,
    pub hbar: f64,
    pub mode: Mode,
    pub trajectories: Vec<TrajectorySummary>,
}

pub fn summarize(cfg: &ScenarioConfig, outcomes: &[TrajectoryOutcome]) -> Result<ScenarioSummary> {
    let trajectories = outcomes
        .iter()
        .map(|o| {
            let last = o.record.final_sample();
            let tau_q = o.record.proper_time()?;
            let dt = last.state.x[0] - o.start.x[0];
            let p = &last.state.p;
            Ok(TrajectorySummary {
                index: o.index,
                label: o.label.clone(),
                tau_end: last.tau,
                final_state: last.state,
                final_chart: last.state.chart(cfg.particle.hbar),
                max_constraint: o.record.drift.max_constraint,
                casimir_drift: o.record.drift.casimir_drift,
                min_u_x: o.record.drift.min_u_x,
                min_u_y: o.record.drift.min_u_y,
                min_rs_eigenvalue: o.record.drift.min_rs_eigenvalue,
                tau_q,
                coordinate_time_elapsed: dt,
                aging_rate: tau_q / dt,
                sqrt_p_final: sqrt_p_clamped(p[pidx::P_ALPHA], p[pidx::C1], p[pidx::C2]),
                stats: o.record.stats,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScenarioSummary {
        name: cfg.name.clone(),
        units: cfg.units.clone(),
        m: cfg.particle.m,
        c: cfg.metric.c,
        hbar: cfg.particle.hbar,
        mode: cfg.particle.mode,
        trajectories,
    })
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(format!("writing CSV: {e}"))
}

/// Trajectory table: a header row with the column names, then one row per
/// recorded sample, floats with 17 significant digits.
pub fn write_trajectory_csv<W: Write>(out: W, outcomes: &[TrajectoryOutcome]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for o in outcomes {
        for row in o.record.csv_rows(o.index) {
            w.write_record(&row).map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::Io(format!("writing CSV: {e}")))
}

pub const PLOT_COLUMNS: [&str; 11] =
    ["trajectory", "tau", "t", "constraint", "U_x", "U_y", "entropy", "purity", "min_rs_eigenvalue", "Delta_xx", "Delta_yy"];

/// τ against the monitors, with the constraint in units of mc².
pub fn write_plot_csv<W: Write>(out: W, outcomes: &[TrajectoryOutcome]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PLOT_COLUMNS).map_err(csv_err)?;
    for o in outcomes {
        let mc2 = o.record.m * o.record.c * o.record.c;
        for s in &o.record.samples {
            let d = s.state.moments();
            let mut row = vec![o.index.to_string()];
            let vals = [
                s.tau,
                s.state.x[0],
                s.h_q / mc2,
                s.u_x,
                s.u_y,
                s.entropy,
                s.purity,
                s.min_rs_eigenvalue,
                d[crate::moments::idx::XX],
                d[crate::moments::idx::YY],
            ];
            row.extend(vals.iter().map(|v| format!("{v:.16e}")));
            w.write_record(&row).map_err(csv_err)?;
        }
    }
    w.flush().map_err(|e| Error::Io(format!("writing CSV: {e}")))
}
