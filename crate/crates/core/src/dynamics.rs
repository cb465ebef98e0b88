//! Hamiltonian evolution of the extended state in proper time. The mass-shell
//! constraint H_Q = 0 is imposed once on p_t and then monitored.

use std::cell::RefCell;

use num_dual::Dual64;
use ode_solvers::{Dop853, OutputType, SVector, System};
use serde::{Deserialize, Serialize};

use crate::chart::{moments_to_chart, radicand, sqrt_p_clamped, CanonicalChart, ChartCoords, EPS_BETA, SQRT_P_WINDOW};
use crate::error::{Error, Result};
use crate::finsler::{b_tensor_generic, kernel_trace, kinetic_generic, moments_at, pidx, ExtendedMomentum};
use crate::info::{entropy_kernel, symplectic_spectrum};
use crate::metric::{MetricEval, MetricField};
use crate::moments::{min_rs_eigenvalue, MomentState, Ordering, N_MOMENTS};

/// Integrated variables: (t, x, y, z, s_x, s_y, α, β) followed by their
/// conjugate momenta. C₁ and C₂ are carried outside the vector.
pub const N_STATE: usize = 16;
pub const N_CONF: usize = 8;

type StateVector = SVector<f64, N_STATE>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Quantum,
    /// Plain geodesic motion; the quantum variables are frozen and do not
    /// feed back on the trajectory.
    Classical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    /// Largest admissible |H_Q| in units of mc². Exceeding it aborts a run.
    pub constraint_tol: f64,
    /// When set, p_t is re-solved on the shell once |H_Q|/mc² passes this.
    pub reproject_tol: Option<f64>,
    pub max_steps: u32,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rtol: 1e-12, atol: 1e-12, constraint_tol: 1e-9, reproject_tol: None, max_steps: 1_000_000 }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.rtol, self.atol, self.constraint_tol].iter().all(|v| *v > 0.0 && v.is_finite());
        if !positive || self.reproject_tol.is_some_and(|v| !(v > 0.0)) || self.max_steps == 0 {
            return Err(Error::Config("tolerances must be positive and finite".into()));
        }
        Ok(())
    }
}

/// Event, chart configuration and extended momentum at parameter `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtendedState {
    pub tau: f64,
    pub x: [f64; 4],
    pub q: ChartCoords,
    pub p: ExtendedMomentum,
}

impl ExtendedState {
    /// State with p_t left at zero; see [`FlowProblem::on_shell`].
    pub fn from_chart(x: [f64; 4], chart: &CanonicalChart, p_spatial: [f64; 3]) -> Self {
        let q = chart.quantum_momenta();
        let mut p = [0.0; 10];
        p[1..4].copy_from_slice(&p_spatial);
        p[4..].copy_from_slice(&q);
        Self { tau: 0.0, x, q: chart.coords(), p }
    }

    /// Uses the means of `state` and inverts its moments. The stored mean p_t
    /// is kept as is.
    pub fn from_moments(state: &MomentState) -> Result<Self> {
        let chart = moments_to_chart(state)?.chart;
        let mut s = Self::from_chart(state.mean_x, &chart, [state.mean_p[1], state.mean_p[2], state.mean_p[3]]);
        s.p[pidx::T] = state.mean_p[0];
        Ok(s)
    }

    pub fn chart(&self, hbar: f64) -> CanonicalChart {
        CanonicalChart::from_parts(self.q, &self.p[4..], hbar)
    }

    pub fn moments(&self) -> [f64; N_MOMENTS] {
        moments_at(&self.q, &self.p)
    }

    pub fn moment_state(&self, hbar: f64) -> MomentState {
        MomentState { mean_x: self.x, mean_p: [self.p[0], self.p[1], self.p[2], self.p[3]], delta: self.moments(), hbar }
    }

    /// Scales every second-order moment by `lambda` (spreads by √λ, angular
    /// momenta and Casimirs by λ). The uncertainty floor scales along with
    /// ħ → λħ.
    pub fn scaled_fluctuations(&self, lambda: f64) -> Self {
        let r = lambda.sqrt();
        let mut s = *self;
        s.q.s_x *= r;
        s.q.s_y *= r;
        s.p[pidx::P_SX] *= r;
        s.p[pidx::P_SY] *= r;
        for k in [pidx::P_ALPHA, pidx::P_BETA, pidx::C1, pidx::C2] {
            s.p[k] *= lambda;
        }
        s
    }

    fn conf(&self) -> [f64; N_CONF] {
        [self.x[0], self.x[1], self.x[2], self.x[3], self.q.s_x, self.q.s_y, self.q.alpha, self.q.beta]
    }

    fn to_vector(self) -> StateVector {
        let mut v = StateVector::zeros();
        for (k, c) in self.conf().iter().enumerate() {
            v[k] = *c;
            v[N_CONF + k] = self.p[k];
        }
        v
    }

    fn from_vector(v: &StateVector, tau: f64, casimirs: [f64; 2]) -> Self {
        let mut p = [0.0; 10];
        for (k, pk) in p.iter_mut().take(N_CONF).enumerate() {
            *pk = v[N_CONF + k];
        }
        p[pidx::C1] = casimirs[0];
        p[pidx::C2] = casimirs[1];
        Self { tau, x: [v[0], v[1], v[2], v[3]], q: ChartCoords { s_x: v[4], s_y: v[5], alpha: v[6], beta: v[7] }, p }
    }
}

/// One recorded point of a trajectory together with its monitors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub tau: f64,
    pub state: ExtendedState,
    pub h_q: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    pub u_x: f64,
    pub u_y: f64,
    pub entropy: f64,
    pub purity: f64,
    /// Smallest eigenvalue of σ + (iħ/2)Ω.
    pub min_rs_eigenvalue: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IntegrationStats {
    pub accepted_steps: u64,
    pub rejected_steps: u64,
    pub evaluations: u64,
    pub reprojections: u32,
}

impl IntegrationStats {
    fn add(&mut self, s: &ode_solvers::dop_shared::Stats) {
        self.accepted_steps += u64::from(s.accepted_steps);
        self.rejected_steps += u64::from(s.rejected_steps);
        self.evaluations += u64::from(s.num_eval);
    }
}

/// Extremes of the monitors over every grid point of a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Drift {
    /// max |H_Q| / mc²
    pub max_constraint: f64,
    pub casimir_drift: [f64; 2],
    pub min_u_x: f64,
    pub min_u_y: f64,
    pub min_rs_eigenvalue: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub m: f64,
    pub c: f64,
    pub hbar: f64,
    pub mode: Mode,
    pub samples: Vec<Sample>,
    pub drift: Drift,
    pub stats: IntegrationStats,
}

pub const CSV_COLUMNS: [&str; 29] = [
    "trajectory",
    "tau",
    "t",
    "x",
    "y",
    "z",
    "s_x",
    "s_y",
    "alpha",
    "beta",
    "p_t",
    "p_x",
    "p_y",
    "p_z",
    "p_sx",
    "p_sy",
    "p_alpha",
    "p_beta",
    "C1",
    "C2",
    "H_Q",
    "U_x",
    "U_y",
    "entropy",
    "purity",
    "min_rs_eigenvalue",
    "Delta_xx",
    "Delta_yy",
    "Delta_pxpx",
];

impl TrajectoryRecord {
    /// τ_Q = ∫ √(1 − 2H_Q/mc²) dτ by the trapezoid rule over the samples.
    pub fn proper_time(&self) -> Result<f64> {
        if self.samples.is_empty() {
            return Err(Error::Domain("empty trajectory record".into()));
        }
        let mc2 = self.m * self.c * self.c;
        let mut root = Vec::with_capacity(self.samples.len());
        for s in &self.samples {
            let r = 1.0 - 2.0 * s.h_q / mc2;
            if r < 0.0 {
                return Err(Error::Imaginary(format!("1 - 2H/mc^2 = {r:e} at tau = {}", s.tau)));
            }
            root.push(r.sqrt());
        }
        Ok(self.samples.windows(2).zip(root.windows(2)).map(|(s, r)| 0.5 * (r[0] + r[1]) * (s[1].tau - s[0].tau)).sum())
    }

    pub fn final_sample(&self) -> &Sample {
        self.samples.last().expect("records hold at least the initial sample")
    }

    /// CSV rows at 17 significant digits, tagged with `trajectory`.
    pub fn csv_rows(&self, trajectory: usize) -> impl Iterator<Item = Vec<String>> + '_ {
        self.samples.iter().map(move |s| {
            let st = &s.state;
            let d = st.moments();
            let mut row = vec![trajectory.to_string()];
            let values = [s.tau]
                .into_iter()
                .chain(st.x)
                .chain([st.q.s_x, st.q.s_y, st.q.alpha, st.q.beta])
                .chain(st.p)
                .chain([s.h_q, s.u_x, s.u_y, s.entropy, s.purity, s.min_rs_eigenvalue])
                .chain([d[crate::moments::idx::XX], d[crate::moments::idx::YY], d[crate::moments::idx::PX_PX]]);
            row.extend(values.map(|v| format!("{v:.16e}")));
            row
        })
    }
}

/// Metric, particle and integrator settings of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowProblem {
    pub metric: MetricField,
    pub m: f64,
    pub hbar: f64,
    pub mode: Mode,
    pub tol: Tolerances,
}

fn check_conf(q: &[f64; N_CONF]) -> Result<()> {
    if !q.iter().all(|v| v.is_finite()) {
        return Err(Error::Integration("state became non-finite".into()));
    }
    if !(q[4] > 0.0 && q[5] > 0.0) {
        return Err(Error::Singularity(format!("spread left the domain: s_x = {}, s_y = {}", q[4], q[5])));
    }
    if !(q[7].sin() > EPS_BETA) {
        return Err(Error::Singularity(format!("sin(beta) = {:e} below {EPS_BETA:e}", q[7].sin())));
    }
    Ok(())
}

/// Root of B^tt p² + 2b p + k₀ = 0 with dt/dτ ∝ B^tt p + b = +√disc, in
/// cancellation-free form.
fn future_root(btt: f64, b: f64, k0: f64) -> Result<f64> {
    let disc = b * b - btt * k0;
    if !(disc >= 0.0) {
        return Err(Error::NoRoot(format!("discriminant {disc:e} is negative")));
    }
    let root = disc.sqrt();
    Ok(if b <= 0.0 { (root - b) / btt } else { k0 / (-b - root) })
}

impl FlowProblem {
    pub fn new(metric: MetricField, m: f64, hbar: f64, mode: Mode) -> Self {
        Self { metric, m, hbar, mode, tol: Tolerances::default() }
    }

    pub fn mc2(&self) -> f64 {
        self.m * self.metric.c * self.metric.c
    }

    fn guard(&self, conf: &[f64; N_CONF], p: &ExtendedMomentum) -> Result<()> {
        if self.mode == Mode::Classical {
            return Ok(());
        }
        check_conf(conf)?;
        let (pa, c1, c2) = (p[pidx::P_ALPHA], p[pidx::C1], p[pidx::C2]);
        if radicand(pa, c1, c2) < -SQRT_P_WINDOW * c1.powi(4) {
            return Err(Error::Domain(format!("p_alpha = {pa} left the physical branch")));
        }
        Ok(())
    }

    /// 2m·H_Q − m²c².
    fn kinetic_at(&self, conf: &[f64; N_CONF], p: &ExtendedMomentum) -> Result<f64> {
        self.guard(conf, p)?;
        let e = self.metric.eval_f64(&[conf[0], conf[1], conf[2], conf[3]])?;
        Ok(match self.mode {
            Mode::Classical => (0..4).map(|a| (0..4).map(|b| e.g[a][b] * p[a] * p[b]).sum::<f64>()).sum(),
            Mode::Quantum => kinetic_generic(&e, &[conf[4], conf[5], conf[6], conf[7]], p),
        })
    }

    pub fn hamiltonian(&self, s: &ExtendedState) -> Result<f64> {
        let c = self.metric.c;
        Ok((self.kinetic_at(&s.conf(), &s.p)? + self.m * self.m * c * c) / (2.0 * self.m))
    }

    /// Future-directed p_t solving H_Q = 0 with everything else fixed. The
    /// quartic part does not involve p_t, so the shell is a quadratic.
    pub fn solve_mass_shell(&self, s: &ExtendedState) -> Result<f64> {
        let conf = s.conf();
        self.guard(&conf, &s.p)?;
        let e = self.metric.eval_f64(&s.x)?;
        let (btt, b) = match self.mode {
            Mode::Classical => (e.g[0][0], (1..4).map(|j| e.g[0][j] * s.p[j]).sum::<f64>()),
            Mode::Quantum => {
                let bm = b_tensor_generic(&e, s.q.s_x, s.q.s_y, s.q.beta);
                (bm[0][0], (1..10).map(|j| bm[0][j] * s.p[j]).sum::<f64>())
            }
        };
        if !(btt.abs() > 0.0) || !btt.is_finite() {
            return Err(Error::Singularity(format!("p_t coefficient of the shell is {btt}")));
        }
        let c = self.metric.c;
        let mut p = s.p;
        p[pidx::T] = 0.0;
        let k0 = self.kinetic_at(&conf, &p)? + self.m * self.m * c * c;
        let mut pt = future_root(btt, b, k0)?;
        for _ in 0..3 {
            p[pidx::T] = pt;
            let f = self.kinetic_at(&conf, &p)? + self.m * self.m * c * c;
            let df = 2.0 * (btt * pt + b);
            if df == 0.0 {
                break;
            }
            let step = f / df;
            pt -= step;
            if step.abs() <= f64::EPSILON * pt.abs() {
                break;
            }
        }
        Ok(pt)
    }

    pub fn on_shell(&self, s: &ExtendedState) -> Result<ExtendedState> {
        let mut out = *s;
        out.p[pidx::T] = self.solve_mass_shell(s)?;
        Ok(out)
    }

    /// Hamilton's equations (∂H/∂p, −∂H/∂q) over the eight active pairs.
    /// Momentum derivatives are closed form; coordinate derivatives use one
    /// forward-mode pass per coordinate.
    fn vector_field(&self, y: &StateVector, casimirs: [f64; 2]) -> Result<StateVector> {
        let s = ExtendedState::from_vector(y, 0.0, casimirs);
        let conf = s.conf();
        let p = s.p;
        self.guard(&conf, &p)?;
        let e = self.metric.eval_f64(&s.x)?;
        let two_m = 2.0 * self.m;
        let mut dy = StateVector::zeros();
        if self.mode == Mode::Classical {
            for a in 0..4 {
                dy[a] = (0..4).map(|b| e.g[a][b] * p[b]).sum::<f64>() / self.m;
                dy[N_CONF + a] = -(0..4).map(|i| (0..4).map(|j| e.dg[a][i][j] * p[i] * p[j]).sum::<f64>()).sum::<f64>() / two_m;
            }
            return Ok(dy);
        }
        let (sx, sy, alpha, beta) = (conf[4], conf[5], conf[6], conf[7]);
        let bm = b_tensor_generic(&e, sx, sy, beta);
        for a in 0..N_CONF {
            dy[a] = (0..10).map(|j| bm[a][j] * p[j]).sum::<f64>() / self.m;
        }
        let dsp = sqrt_p_clamped(Dual64::from(p[pidx::P_ALPHA]).derivative(), Dual64::from(p[pidx::C1]), Dual64::from(p[pidx::C2]));
        dy[pidx::P_ALPHA] += kernel_trace(&e.g, sx, sy, alpha, beta) * dsp.eps / two_m;

        let pd = p.map(Dual64::from);
        let lifted = MetricEval::<Dual64>::lift(&e);
        for k in 0..N_CONF {
            let mut cd = conf.map(Dual64::from);
            cd[k] = cd[k].derivative();
            let ek = if k < 4 { self.metric.eval(&[cd[0], cd[1], cd[2], cd[3]])? } else { lifted };
            let grad = kinetic_generic(&ek, &[cd[4], cd[5], cd[6], cd[7]], &pd).eps;
            dy[N_CONF + k] = -grad / two_m;
        }
        Ok(dy)
    }

    /// (q̇, ṗ) over (t, x, y, z, s_x, s_y, α, β) and their momenta.
    pub fn derivatives(&self, s: &ExtendedState) -> Result<([f64; N_CONF], [f64; N_CONF])> {
        let v = self.vector_field(&s.to_vector(), [s.p[pidx::C1], s.p[pidx::C2]])?;
        Ok((std::array::from_fn(|k| v[k]), std::array::from_fn(|k| v[N_CONF + k])))
    }

    /// Integrates over |Δτ| = `span` in the sign of `direction`, starting
    /// with step `h0` (0 lets the stepper choose).
    fn run(&self, start: &ExtendedState, direction: f64, span: f64, h0: f64) -> Result<Segment> {
        let flow = Flow { problem: self, casimirs: [start.p[pidx::C1], start.p[pidx::C2]], direction, failure: RefCell::new(None) };
        let tol = &self.tol;
        let mut stepper = Dop853::from_param(
            &flow,
            0.0,
            span,
            0.0,
            start.to_vector(),
            tol.rtol,
            tol.atol,
            0.9,
            0.0,
            0.333,
            6.0,
            span,
            h0.min(span),
            tol.max_steps,
            u32::MAX,
            OutputType::Sparse,
        );
        let result = stepper.integrate();
        if let Some(e) = flow.failure.take() {
            return Err(e);
        }
        let stats = result.map_err(|e| Error::Integration(e.to_string()))?;
        let (xs, ys) = stepper.results().get();
        let reached = *xs.last().unwrap_or(&0.0);
        if (reached - span).abs() > 1e-12 * span {
            return Err(Error::Integration(format!("stopped at {reached} of {span}")));
        }
        let max_step = xs.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        Ok(Segment { end: *ys.last().expect("stepper records the initial state"), stats, max_step })
    }

    /// Evolves `s` by `dtau` (either sign) and returns the end state.
    pub fn hamiltonian_flow(&self, s: &ExtendedState, dtau: f64) -> Result<ExtendedState> {
        if dtau == 0.0 {
            return Ok(*s);
        }
        let seg = self.run(s, dtau.signum(), dtau.abs(), 0.0)?;
        Ok(ExtendedState::from_vector(&seg.end, s.tau + dtau, [s.p[pidx::C1], s.p[pidx::C2]]))
    }

    /// States on the uniform grid τ₀ + kΔτ, k = 0..=samples, each interval
    /// integrated separately. The constraint is checked at every grid point
    /// and, when configured, restored there by re-solving p_t.
    pub fn grid(&self, start: &ExtendedState, tau_end: f64, samples: usize) -> Result<(Vec<ExtendedState>, IntegrationStats)> {
        if !(tau_end > start.tau) || samples == 0 {
            return Err(Error::Domain(format!("need tau_end > {} and at least one sample", start.tau)));
        }
        let ds = (tau_end - start.tau) / samples as f64;
        let casimirs = [start.p[pidx::C1], start.p[pidx::C2]];
        let mc2 = self.mc2();
        let mut states = Vec::with_capacity(samples + 1);
        states.push(*start);
        let mut stats = IntegrationStats::default();
        let mut h0 = 0.0;
        for k in 1..=samples {
            let seg = self.run(&states[k - 1], 1.0, ds, h0)?;
            stats.add(&seg.stats);
            h0 = seg.max_step;
            let mut s = ExtendedState::from_vector(&seg.end, start.tau + k as f64 * ds, casimirs);
            let rel = self.hamiltonian(&s)?.abs() / mc2;
            if !(rel <= self.tol.constraint_tol) {
                return Err(Error::ConstraintViolation(format!(
                    "|H_Q|/mc^2 = {rel:e} exceeds {:e} at tau = {}",
                    self.tol.constraint_tol, s.tau
                )));
            }
            if self.tol.reproject_tol.is_some_and(|t| rel > t) {
                s = self.on_shell(&s)?;
                stats.reprojections += 1;
            }
            states.push(s);
        }
        Ok((states, stats))
    }

    pub fn sample(&self, s: &ExtendedState) -> Result<Sample> {
        let h_q = self.hamiltonian(s)?;
        let ms = s.moment_state(self.hbar);
        let (u_x, u_y) = ms.uncertainty_invariants();
        let cov = ms.covariance(Ordering::ModeOrdered);
        let (nu_p, nu_m) = symplectic_spectrum(&cov);
        let det = cov.determinant();
        let h = self.hbar;
        Ok(Sample {
            tau: s.tau,
            state: *s,
            h_q,
            c1: s.p[pidx::C1],
            c2: s.p[pidx::C2],
            u_x,
            u_y,
            entropy: entropy_kernel(2.0 * nu_p / h) + entropy_kernel(2.0 * nu_m / h),
            purity: if det > 0.0 { h * h / 4.0 / det.sqrt() } else { f64::NAN },
            min_rs_eigenvalue: min_rs_eigenvalue(&cov.entries, h, cov.ordering),
        })
    }

    /// Integrates to `tau_end` on a grid of `samples` intervals, monitoring
    /// every grid point and recording every `sample_every`-th (and the last).
    pub fn integrate(&self, start: &ExtendedState, tau_end: f64, samples: usize, sample_every: usize) -> Result<TrajectoryRecord> {
        self.tol.validate()?;
        let mc2 = self.mc2();
        let h0 = self.hamiltonian(start)?;
        if !(h0.abs() <= self.tol.constraint_tol * mc2) {
            return Err(Error::ConstraintViolation(format!("initial |H_Q|/mc^2 = {:e}; solve the mass shell first", h0.abs() / mc2)));
        }
        let (states, stats) = self.grid(start, tau_end, samples)?;
        let every = sample_every.max(1);
        let mut drift = Drift {
            max_constraint: 0.0,
            casimir_drift: [0.0; 2],
            min_u_x: f64::INFINITY,
            min_u_y: f64::INFINITY,
            min_rs_eigenvalue: f64::INFINITY,
        };
        let mut recorded = Vec::with_capacity(states.len() / every + 2);
        for (k, s) in states.iter().enumerate() {
            let smp = self.sample(s)?;
            drift.max_constraint = drift.max_constraint.max(smp.h_q.abs() / mc2);
            drift.casimir_drift[0] = drift.casimir_drift[0].max((smp.c1 - start.p[pidx::C1]).abs());
            drift.casimir_drift[1] = drift.casimir_drift[1].max((smp.c2 - start.p[pidx::C2]).abs());
            drift.min_u_x = drift.min_u_x.min(smp.u_x);
            drift.min_u_y = drift.min_u_y.min(smp.u_y);
            drift.min_rs_eigenvalue = drift.min_rs_eigenvalue.min(smp.min_rs_eigenvalue);
            if k % every == 0 || k + 1 == states.len() {
                recorded.push(smp);
            }
        }
        Ok(TrajectoryRecord { m: self.m, c: self.metric.c, hbar: self.hbar, mode: self.mode, samples: recorded, drift, stats })
    }

    /// First state where `event` changes sign, searched on a grid of
    /// `samples` intervals up to `tau_max` and refined by Illinois regula falsi.
    pub fn advance_to_event<F: Fn(&ExtendedState) -> f64>(
        &self,
        start: &ExtendedState,
        tau_max: f64,
        samples: usize,
        event: F,
    ) -> Result<ExtendedState> {
        let (states, _) = self.grid(start, tau_max, samples)?;
        let values: Vec<f64> = states.iter().map(&event).collect();
        let k = values
            .windows(2)
            .position(|w| w[0] == 0.0 || w[0].signum() != w[1].signum())
            .ok_or_else(|| Error::Integration(format!("event not reached before tau = {tau_max}")))?;
        let left = states[k];
        if values[k] == 0.0 {
            return Ok(left);
        }
        let (mut a, mut fa) = (0.0, values[k]);
        let (mut b, mut fb) = (states[k + 1].tau - left.tau, values[k + 1]);
        let mut best = states[k + 1];
        let mut side = 0;
        for _ in 0..100 {
            let m = (a * fb - b * fa) / (fb - fa);
            let s = self.hamiltonian_flow(&left, m)?;
            let fm = event(&s);
            best = s;
            if fm == 0.0 || (b - a).abs() <= 4.0 * f64::EPSILON * (left.tau.abs() + b.abs()) {
                break;
            }
            if fm.signum() == fb.signum() {
                b = m;
                fb = fm;
                if side == -1 {
                    fa *= 0.5;
                }
                side = -1;
            } else {
                a = m;
                fa = fm;
                if side == 1 {
                    fb *= 0.5;
                }
                side = 1;
            }
            if (b - a).abs() <= 4.0 * f64::EPSILON * (left.tau.abs() + b.abs()) {
                break;
            }
        }
        Ok(best)
    }
}

struct Segment {
    end: StateVector,
    stats: ode_solvers::dop_shared::Stats,
    max_step: f64,
}

/// Right-hand side handed to the stepper. The stepper always runs forward in
/// σ = |τ − τ₀|; `direction` carries the sign. Errors raised inside a stage
/// are parked and end the run at the next accepted step.
struct Flow<'a> {
    problem: &'a FlowProblem,
    casimirs: [f64; 2],
    direction: f64,
    failure: RefCell<Option<Error>>,
}

impl System<f64, StateVector> for &Flow<'_> {
    fn system(&self, _sigma: f64, y: &StateVector, dy: &mut StateVector) {
        match self.problem.vector_field(y, self.casimirs) {
            Ok(v) => *dy = v * self.direction,
            Err(e) => {
                self.failure.borrow_mut().get_or_insert(e);
                dy.fill(0.0);
            }
        }
    }

    fn solout(&mut self, _sigma: f64, _y: &StateVector, _dy: &StateVector) -> bool {
        self.failure.borrow().is_some()
    }
}
