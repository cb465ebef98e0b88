use std::fs::{self, File};
use std::io::{self, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use qfinsler_core::chart::{chart_to_moments, chart_to_state, moments_to_chart};
use qfinsler_core::dispersion::{dispersion_report, Units};
use qfinsler_core::finsler::{fundamental_tensor, hq_decomposition, Decomposition, Matrix10};
use qfinsler_core::info::info_report;
use qfinsler_core::moments::{check_physicality, default_tol_psd};
use qfinsler_core::scenario::{run_scenario, summarize, write_plot_csv, write_trajectory_csv, ScenarioConfig};
use qfinsler_core::validation::validate_scenario;
use qfinsler_core::{CanonicalChart, ChartInversion, Error, ExtendedState, InfoReport, MomentState, PhysicalityReport};

#[derive(Debug)]
pub enum Failure {
    Core(Error),
    /// Number of failing checks.
    Validation(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Core(Error::Config(_) | Error::Io(_)) => 2,
            Failure::Core(_) => 3,
        }
    }

    pub fn to_json(&self) -> String {
        let (kind, message) = match self {
            Failure::Validation(n) => ("validation", format!("{n} check(s) failed")),
            Failure::Core(e) => (e.kind(), e.to_string()),
        };
        serde_json::json!({ "error": kind, "message": message, "exit_code": self.exit_code() }).to_string()
    }
}

type Result<T> = std::result::Result<T, Failure>;

/// Writes to stdout; a closed pipe (`| head`) is not an error.
fn print_stdout(text: &str) -> Result<()> {
    match writeln!(io::stdout().lock(), "{text}") {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(Failure::Core(Error::Io(e.to_string()))),
        _ => Ok(()),
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Core(Error::Io(format!("{}: {e}", path.display())))
}

/// JSON by default and for `.json`, TOML for `.toml`; `-` reads stdin.
fn read_input<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let mut text = String::new();
    if path == Path::new("-") {
        io::stdin().read_to_string(&mut text).map_err(|e| io_err(path, e))?;
    } else {
        text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    }
    let parsed = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml")) {
        toml::from_str(&text).map_err(|e| e.to_string())
    } else {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    };
    parsed.map_err(|e| Failure::Core(Error::Config(format!("{}: {e}", path.display()))))
}

fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Core(Error::Io(e.to_string())))?;
    match out {
        Some(p) => fs::write(p, text + "\n").map_err(|e| io_err(p, e)),
        None => print_stdout(&text),
    }
}

#[derive(Debug, Deserialize)]
struct ChartInput {
    #[serde(flatten)]
    chart: CanonicalChart,
    #[serde(default)]
    mean_x: [f64; 4],
    #[serde(default)]
    mean_p: [f64; 4],
}

pub fn map_forward(input: &Path, out: Option<&Path>) -> Result<()> {
    let c: ChartInput = read_input(input)?;
    emit(&chart_to_state(&c.chart, c.mean_x, c.mean_p)?, out)
}

#[derive(Debug, Serialize)]
struct InverseOutput {
    #[serde(flatten)]
    inversion: ChartInversion,
    /// max |Δ(forward(chart)) − Δ| / max |Δ|
    roundtrip_residual: f64,
}

pub fn map_inverse(input: &Path, out: Option<&Path>) -> Result<()> {
    let state: MomentState = read_input(input)?;
    let inversion = moments_to_chart(&state)?;
    let back = chart_to_moments(&inversion.chart)?;
    let scale = state.delta.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let residual = back.iter().zip(&state.delta).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale;
    emit(&InverseOutput { inversion, roundtrip_residual: residual }, out)
}

#[derive(Debug, Serialize)]
struct InfoOutput {
    #[serde(flatten)]
    info: InfoReport,
    physicality: PhysicalityReport,
}

pub fn info(input: &Path) -> Result<()> {
    let state: MomentState = read_input(input)?;
    let physicality = check_physicality(&state, default_tol_psd(state.hbar));
    emit(&InfoOutput { info: info_report(&state)?, physicality }, None)
}

fn rows(m: &Matrix10) -> Vec<[f64; 10]> {
    (0..10).map(|i| std::array::from_fn(|j| m[(i, j)])).collect()
}

#[derive(Debug, Serialize)]
struct TensorOutput {
    label: String,
    state: ExtendedState,
    decomposition: Decomposition,
    a_scalar: f64,
    b_scalar: f64,
    degenerate: bool,
    a_vector: [f64; 10],
    /// Rows in extended-momentum order (p_t, p_x, p_y, p_z, p_sx, p_sy, p_alpha, p_beta, C1, C2).
    b_matrix: Vec<[f64; 10]>,
    g_q: Vec<[f64; 10]>,
    /// |g_Q p p − (2m H_Q − m²c²)| / m²c²
    euler_residual: f64,
}

pub fn tensors(scenario: &Path, index: usize) -> Result<()> {
    let cfg = ScenarioConfig::load(scenario)?;
    let starts = cfg.initial_states()?;
    let s = *starts
        .get(index)
        .ok_or_else(|| Error::Config(format!("state index {index} out of range, scenario has {}", starts.len())))?;
    let problem = cfg.problem()?;
    let (m, c) = (problem.m, problem.metric.c);
    let t = fundamental_tensor(&problem.metric, &s.x, &s.q, &s.p, m)?;
    let p = nalgebra::SVector::<f64, 10>::from_column_slice(&s.p);
    let gpp = (p.transpose() * t.g_q * p)[(0, 0)];
    let euler = (gpp - (2.0 * m * t.h_q - m * m * c * c)).abs() / (m * m * c * c);
    emit(
        &TensorOutput {
            label: cfg.label(index),
            state: s,
            decomposition: hq_decomposition(&problem.metric, &s.x, &s.p, &s.q, m)?,
            a_scalar: t.a_scalar,
            b_scalar: t.b_scalar,
            degenerate: t.degenerate,
            a_vector: t.a_vector,
            b_matrix: rows(&t.b_matrix),
            g_q: rows(&t.g_q),
            euler_residual: euler,
        },
        None,
    )
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

pub fn simulate(scenario: &Path, out_dir: Option<&Path>) -> Result<()> {
    let cfg = ScenarioConfig::load(scenario)?;
    let paths = cfg.output_paths(out_dir);
    let outcomes = run_scenario(&cfg)?;
    write_trajectory_csv(create(&paths.trajectory)?, &outcomes)?;
    let summary = summarize(&cfg, &outcomes)?;
    emit(&summary, Some(&paths.summary))?;
    let mut text = format!("trajectory: {}\nsummary:    {}", paths.trajectory.display(), paths.summary.display());
    for t in &summary.trajectories {
        text += &format!(
            "\n  {}: tau_Q = {:.12}, aging rate = {:.12}, max |H_Q|/mc^2 = {:.3e}, min U = ({:.6e}, {:.6e})",
            t.label, t.tau_q, t.aging_rate, t.max_constraint, t.min_u_x, t.min_u_y
        );
    }
    print_stdout(&text)?;
    Ok(())
}

pub fn dispersion(mass: f64, temperature: Option<f64>, xi2: f64, units: &str, planck_mass: Option<f64>) -> Result<()> {
    let units: Units = units.parse()?;
    emit(&dispersion_report(mass, temperature, xi2, units, planck_mass)?, None)
}

pub fn validate(scenarios: &[std::path::PathBuf], json: bool) -> Result<()> {
    let mut reports = Vec::with_capacity(scenarios.len());
    for path in scenarios {
        let cfg = ScenarioConfig::load(path)?;
        reports.push(validate_scenario(&cfg)?);
    }
    if json {
        emit(&reports, None)?;
    } else {
        for r in &reports {
            print_stdout(&r.table())?;
        }
    }
    let failed: usize = reports.iter().map(|r| r.failures()).sum();
    if failed > 0 {
        return Err(Failure::Validation(failed));
    }
    Ok(())
}

pub fn plot_data(scenario: &Path, out_dir: Option<&Path>, stdout: bool) -> Result<()> {
    let cfg = ScenarioConfig::load(scenario)?;
    let outcomes = run_scenario(&cfg)?;
    if stdout {
        write_plot_csv(io::stdout().lock(), &outcomes)?;
    } else {
        let path = cfg.output_paths(out_dir).plot;
        write_plot_csv(create(&path)?, &outcomes)?;
        print_stdout(&format!("plot data: {}", path.display()))?;
    }
    Ok(())
}
