//! Canonical coordinates on the ten-dimensional moment space: the forward
//! map chart → moments, its inverse, √P, the Casimir polynomials and the
//! single-mode chart.

use num_dual::Dual64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info;
use crate::moments::{check_physicality, default_tol_psd, idx, poisson_tensor, MomentState, Ordering, PoissonTensor, N_MOMENTS};
use crate::Scalar;

/// Positions of the canonical variables in the chart vector. Pairs are
/// adjacent: (s_x, p_sx), (s_y, p_sy), (α, p_α), (β, p_β), then C₁, C₂.
pub mod cidx {
    pub const S_X: usize = 0;
    pub const P_SX: usize = 1;
    pub const S_Y: usize = 2;
    pub const P_SY: usize = 3;
    pub const ALPHA: usize = 4;
    pub const P_ALPHA: usize = 5;
    pub const BETA: usize = 6;
    pub const P_BETA: usize = 7;
    pub const C1: usize = 8;
    pub const C2: usize = 9;
}

pub const CHART_LABELS: [&str; 10] = ["s_x", "p_sx", "s_y", "p_sy", "alpha", "p_alpha", "beta", "p_beta", "C1", "C2"];

/// Smallest admissible sin β.
pub const EPS_BETA: f64 = 1e-8;
/// Relative floor on Δ(x²)Δ(y²) − Δ(xy)² in the inverse map.
pub const EPS_DET: f64 = 1e-12;
/// Relative window (times C₁⁴) inside which the √P radicand counts as zero.
pub const SQRT_P_WINDOW: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonicalChart {
    pub s_x: f64,
    pub p_sx: f64,
    pub s_y: f64,
    pub p_sy: f64,
    pub alpha: f64,
    pub p_alpha: f64,
    pub beta: f64,
    pub p_beta: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    pub hbar: f64,
}

/// Configuration-space part (s_x, s_y, α, β) of a chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartCoords {
    pub s_x: f64,
    pub s_y: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl CanonicalChart {
    pub fn from_vector(v: &[f64; 10], hbar: f64) -> Self {
        Self {
            s_x: v[cidx::S_X],
            p_sx: v[cidx::P_SX],
            s_y: v[cidx::S_Y],
            p_sy: v[cidx::P_SY],
            alpha: v[cidx::ALPHA],
            p_alpha: v[cidx::P_ALPHA],
            beta: v[cidx::BETA],
            p_beta: v[cidx::P_BETA],
            c1: v[cidx::C1],
            c2: v[cidx::C2],
            hbar,
        }
    }

    pub fn to_vector(&self) -> [f64; 10] {
        [
            self.s_x, self.p_sx, self.s_y, self.p_sy, self.alpha, self.p_alpha, self.beta, self.p_beta, self.c1, self.c2,
        ]
    }

    /// Uncorrelated minimum-uncertainty chart with spreads `s_x`, `s_y`.
    pub fn vacuum(s_x: f64, s_y: f64, hbar: f64) -> Self {
        Self {
            s_x,
            p_sx: 0.0,
            s_y,
            p_sy: 0.0,
            alpha: std::f64::consts::FRAC_PI_2,
            p_alpha: 0.0,
            beta: std::f64::consts::FRAC_PI_2,
            p_beta: 0.0,
            c1: hbar / std::f64::consts::SQRT_2,
            c2: 0.0,
            hbar,
        }
    }

    pub fn coords(&self) -> ChartCoords {
        ChartCoords { s_x: self.s_x, s_y: self.s_y, alpha: self.alpha, beta: self.beta }
    }

    /// Quantum momenta (p_sx, p_sy, p_α, p_β, C₁, C₂) in extended-momentum order.
    pub fn quantum_momenta(&self) -> [f64; 6] {
        [self.p_sx, self.p_sy, self.p_alpha, self.p_beta, self.c1, self.c2]
    }

    pub fn from_parts(coords: ChartCoords, quantum: &[f64], hbar: f64) -> Self {
        Self {
            s_x: coords.s_x,
            p_sx: quantum[0],
            s_y: coords.s_y,
            p_sy: quantum[1],
            alpha: coords.alpha,
            p_alpha: quantum[2],
            beta: coords.beta,
            p_beta: quantum[3],
            c1: quantum[4],
            c2: quantum[5],
            hbar,
        }
    }

    /// Checks the domain of the chart: positive spreads, sin β away from
    /// zero, a real √P on the physical branch C₁² − 4p_α² ≥ 0, and
    /// C₁² − C₂² ≥ ħ²/2 (the smaller symplectic eigenvalue is at least ħ/2).
    pub fn check(&self) -> Result<()> {
        if !self.to_vector().iter().all(|v| v.is_finite()) || !(self.hbar > 0.0) {
            return Err(Error::Domain("chart has non-finite entries or non-positive hbar".into()));
        }
        if !(self.s_x > 0.0 && self.s_y > 0.0) {
            return Err(Error::Domain(format!("spreads must be positive, got s_x={}, s_y={}", self.s_x, self.s_y)));
        }
        if self.beta.sin() < EPS_BETA {
            return Err(Error::Singularity(format!("sin(beta) = {:e} below {EPS_BETA:e}", self.beta.sin())));
        }
        if !(self.c2 >= 0.0 && self.c1 > self.c2) {
            return Err(Error::NonPhysical(format!("need C1 > C2 >= 0, got C1={}, C2={}", self.c1, self.c2)));
        }
        let tol = default_tol_psd(self.hbar);
        if self.c1 * self.c1 - self.c2 * self.c2 < self.hbar * self.hbar / 2.0 - tol {
            return Err(Error::NonPhysical(format!(
                "C1^2 - C2^2 = {} below hbar^2/2",
                self.c1 * self.c1 - self.c2 * self.c2
            )));
        }
        if self.c1 * self.c1 - 4.0 * self.p_alpha * self.p_alpha < 0.0 {
            return Err(Error::NonPhysical(format!(
                "p_alpha = {} lies on the unphysical branch C1^2 < 4 p_alpha^2",
                self.p_alpha
            )));
        }
        sqrt_p(self.p_alpha, self.c1, self.c2)?;
        Ok(())
    }
}

/// The √P radicand (C₁² − 4p_α²)² − (C₁⁴ − C₂⁴), expanded so that it is
/// exact when p_α = 0.
pub fn radicand<D: Scalar>(p_alpha: D, c1: D, c2: D) -> D {
    let pa2 = p_alpha * p_alpha;
    let c1s = c1 * c1;
    let c2s = c2 * c2;
    pa2 * pa2 * 16.0 - c1s * pa2 * 8.0 + c2s * c2s
}

/// √P with non-positive radicands mapped to an identically vanishing value,
/// so that derivatives are zero on the Gaussian subset instead of 0/0.
pub fn sqrt_p_clamped<D: Scalar>(p_alpha: D, c1: D, c2: D) -> D {
    let r = radicand(p_alpha, c1, c2);
    if r.re() > 0.0 {
        r.sqrt()
    } else {
        D::zero()
    }
}

fn sqrt_p_window(c1: f64) -> f64 {
    SQRT_P_WINDOW * c1.powi(4)
}

pub fn sqrt_p(p_alpha: f64, c1: f64, c2: f64) -> Result<f64> {
    let r = radicand(p_alpha, c1, c2);
    if r < -sqrt_p_window(c1) {
        return Err(Error::Domain(format!("sqrt(P) radicand {r:e} is negative")));
    }
    Ok(r.max(0.0).sqrt())
}

/// Forward map from the chart vector (see [`cidx`]) to the moment vector.
pub fn moments_from_chart<D: Scalar>(v: &[D; 10]) -> [D; 10] {
    let [sx, psx, sy, psy, al, pa, be, pb, c1, c2] = *v;
    let s = be.sin();
    let c = be.cos();
    let s2 = s * s;
    let k = c1 * c1 - pa * pa * 4.0;
    let sp = sqrt_p_clamped(pa, c1, c2);
    let sx2 = sx * sx;
    let sy2 = sy * sy;
    let amb = pa - pb;
    let apb = pa + pb;

    let mut d = [D::zero(); 10];
    d[idx::XX] = sx2;
    d[idx::X_PX] = sx * psx;
    d[idx::YY] = sy2;
    d[idx::Y_PY] = sy * psy;
    d[idx::XY] = sx * sy * c;
    d[idx::X_PY] = sx * psy * c - s * (sx / sy) * apb;
    d[idx::PX_Y] = sy * psx * c + s * (sy / sx) * amb;
    d[idx::PX_PX] = psx * psx + amb * amb / sx2 + (k - sp * (al + be).sin()) / (sx2 * s2 * 2.0);
    d[idx::PY_PY] = psy * psy + apb * apb / sy2 + (k - sp * (al - be).sin()) / (sy2 * s2 * 2.0);
    d[idx::PX_PY] = (psx * psy + amb * apb / (sx * sy)) * c + (psy * amb / sx - psx * apb / sy) * s
        - (k * c - sp * al.sin()) / (sx * sy * s2 * 2.0);
    d
}

/// Moment vector of a chart, after checking its domain.
pub fn chart_to_moments(chart: &CanonicalChart) -> Result<[f64; N_MOMENTS]> {
    chart.check()?;
    Ok(moments_from_chart(&chart.to_vector()))
}

pub fn chart_to_state(chart: &CanonicalChart, mean_x: [f64; 4], mean_p: [f64; 4]) -> Result<MomentState> {
    Ok(MomentState { mean_x, mean_p, delta: chart_to_moments(chart)?, hbar: chart.hbar })
}

/// Result of inverting the chart map. `alpha_defined` is false when √P
/// vanishes; α is then cyclic and reported as 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartInversion {
    #[serde(flatten)]
    pub chart: CanonicalChart,
    pub alpha_defined: bool,
}

/// Δ(A₁B₁)Δ(A₂B₂) − Δ(A₁B₂)Δ(A₂B₁) with mode-ordered operator positions.
fn product(delta: &[f64; N_MOMENTS], a1: usize, a2: usize, b1: usize, b2: usize) -> f64 {
    let m = |u: usize, v: usize| delta[crate::moments::MODE_INDEX[u][v]];
    m(a1, b1) * m(a2, b2) - m(a1, b2) * m(a2, b1)
}

pub fn moments_to_chart(state: &MomentState) -> Result<ChartInversion> {
    let hbar = state.hbar;
    let report = check_physicality(state, default_tol_psd(hbar));
    if !report.passed {
        return Err(Error::NonPhysical(format!(
            "min eigenvalue of sigma + i hbar/2 Omega = {:e}, U_x = {}, U_y = {}",
            report.min_eigenvalue, report.u_x, report.u_y
        )));
    }
    let d = &state.delta;
    let sx = d[idx::XX].sqrt();
    let sy = d[idx::YY].sqrt();
    let det_xy = d[idx::XX] * d[idx::YY] - d[idx::XY] * d[idx::XY];
    if !(det_xy > EPS_DET * d[idx::XX] * d[idx::YY]) {
        return Err(Error::Singularity(format!("position correlation is perfect: det = {det_xy:e}")));
    }
    let psx = d[idx::X_PX] / sx;
    let psy = d[idx::Y_PY] / sy;
    let cos_b = d[idx::XY] / (sx * sy);
    let sin_b = det_xy.sqrt() / (sx * sy);
    let beta = sin_b.atan2(cos_b);

    // Δ(xp_y) and Δ(p_x y) are linear in p_α ± p_β.
    let apb = (sx * psy * cos_b - d[idx::X_PY]) * sy / (sin_b * sx);
    let amb = (d[idx::PX_Y] - sy * psx * cos_b) * sx / (sin_b * sy);
    let pa = 0.5 * (apb + amb);
    let pb = 0.5 * (apb - amb);

    let cov = state.covariance(Ordering::ModeOrdered);
    let (nu_p, nu_m) = info::symplectic_spectrum(&cov);
    let c1 = (nu_p * nu_p + nu_m * nu_m).sqrt();
    let c2 = (nu_p * nu_p - nu_m * nu_m).max(0.0).sqrt();

    let r = radicand(pa, c1, c2);
    let (alpha, alpha_defined) = if r <= sqrt_p_window(c1) {
        (0.0, false)
    } else {
        let sp = r.sqrt();
        // position labels in mode order
        let (x, px, y, py) = (0, 1, 2, 3);
        let dxy = product(d, x, y, x, y);
        let d_ypy = product(d, y, py, x, y);
        let d_xpx = product(d, x, px, x, y);
        let (ux, uy) = state.uncertainty_invariants();
        let cos_a = -(sin_b / sp) * (d_ypy * d_ypy - d_xpx * d_xpx + dxy * (ux - uy)) / dxy;

        let k = c1 * c1 - 4.0 * pa * pa;
        let s2 = sin_b * sin_b;
        let regular = (psx * psy + amb * apb / (sx * sy)) * cos_b + (psy * amb / sx - psx * apb / sy) * sin_b
            - k * cos_b / (2.0 * sx * sy * s2);
        let sin_a = 2.0 * sx * sy * s2 * (d[idx::PX_PY] - regular) / sp;
        (sin_a.atan2(cos_a), true)
    };

    let chart = CanonicalChart {
        s_x: sx,
        p_sx: psx,
        s_y: sy,
        p_sy: psy,
        alpha,
        p_alpha: pa,
        beta,
        p_beta: pb,
        c1,
        c2,
        hbar,
    };
    Ok(ChartInversion { chart, alpha_defined })
}

/// U_x and U_y as functions on the chart.
pub fn uncertainty_invariants(chart: &CanonicalChart) -> Result<(f64, f64)> {
    chart.check()?;
    let s2 = chart.beta.sin().powi(2);
    let k = chart.c1 * chart.c1 - 4.0 * chart.p_alpha * chart.p_alpha;
    let sp = sqrt_p(chart.p_alpha, chart.c1, chart.c2)?;
    let amb = chart.p_alpha - chart.p_beta;
    let apb = chart.p_alpha + chart.p_beta;
    Ok((
        amb * amb + (k - sp * (chart.alpha + chart.beta).sin()) / (2.0 * s2),
        apb * apb + (k - sp * (chart.alpha - chart.beta).sin()) / (2.0 * s2),
    ))
}

/// C₁² and C₂⁴ as polynomials in the moments.
///
/// The quartic invariant reads 4XY + 4ZW + 2V₁² + 2V₂² − C₁⁴, which equals
/// C₁⁴ − 4 det σ and vanishes on the vacuum.
pub fn casimir_polynomials<D: Scalar>(d: &[D; N_MOMENTS]) -> (D, D) {
    let [xx, xpx, pxpx, yy, ypy, pypy, xy, xpy, pxy, pxpy] = *d;
    let ux = xx * pxpx - xpx * xpx;
    let uy = yy * pypy - ypy * ypy;
    let c1_sq = ux + uy + xy * pxpy * 2.0 - xpy * pxy * 2.0;
    let big_x = pxpy * (xpx - ypy) - pxpx * xpy + pypy * pxy;
    let big_y = xy * (ypy - xpx) + xx * pxy - yy * xpy;
    let big_z = pxy * (xpx + ypy) - pxpx * xy - yy * pxpy;
    let big_w = xpy * (xpx + ypy) - pxpy * xx - pypy * xy;
    let det_xy = pxpy * xy - pxy * xpy;
    let v1 = ux + det_xy;
    let v2 = det_xy + uy;
    let c2_4 = big_x * big_y * 4.0 + big_z * big_w * 4.0 + v1 * v1 * 2.0 + v2 * v2 * 2.0 - c1_sq * c1_sq;
    (c1_sq, c2_4)
}

/// ∂Δ/∂(chart vector) by forward-mode differentiation of the forward map.
pub fn forward_jacobian(chart: &CanonicalChart) -> Result<PoissonTensor> {
    chart.check()?;
    let v = chart.to_vector();
    let mut j = PoissonTensor::zeros();
    for col in 0..10 {
        let mut vd = v.map(Dual64::from);
        vd[col] = vd[col].derivative();
        let d = moments_from_chart(&vd);
        for (row, di) in d.iter().enumerate() {
            j[(row, col)] = di.eps;
        }
    }
    Ok(j)
}

/// Brackets of the chart variables induced by the moment bracket,
/// J⁻¹ P J⁻ᵀ with J = ∂Δ/∂(chart).
pub fn chart_brackets(chart: &CanonicalChart) -> Result<PoissonTensor> {
    let j = forward_jacobian(chart)?;
    let inv = j.try_inverse().ok_or_else(|| Error::SingularMatrix("chart Jacobian is not invertible".into()))?;
    let p = poisson_tensor(&moments_from_chart(&chart.to_vector()));
    Ok(inv * p * inv.transpose())
}

/// Darboux form in chart order: {u, p_u} = 1 for the four pairs, C₁ and C₂ central.
pub fn canonical_brackets() -> PoissonTensor {
    let mut w = PoissonTensor::zeros();
    for k in 0..4 {
        w[(2 * k, 2 * k + 1)] = 1.0;
        w[(2 * k + 1, 2 * k)] = -1.0;
    }
    w
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleModeChart {
    pub s: f64,
    pub p_s: f64,
    #[serde(rename = "U")]
    pub u: f64,
    pub p_q: f64,
}

pub fn single_mode_chart(dx2: f64, dxp: f64, dp2: f64, hbar: f64) -> Result<SingleModeChart> {
    if !(dx2 > 0.0) {
        return Err(Error::Domain(format!("position variance must be positive, got {dx2}")));
    }
    let u = dx2 * dp2 - dxp * dxp;
    let floor = hbar * hbar / 4.0;
    if u < floor - default_tol_psd(hbar) {
        return Err(Error::Uncertainty(format!("U = {u} < hbar^2/4 = {floor}")));
    }
    let s = dx2.sqrt();
    Ok(SingleModeChart { s, p_s: dxp / s, u, p_q: (2.0 * u.max(floor).sqrt() / hbar).max(1.0) })
}
