//! Gaussian-state constructions and quantum-information functionals of the
//! two-mode covariance matrix.

use nalgebra::{Matrix2, Matrix4, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::{default_tol_psd, CovarianceMatrix, MomentState, Ordering, SymplecticForm, N_MOMENTS};

/// Squared symplectic eigenvalues (ν₊², ν₋²) as eigenvalues of the symmetric
/// matrix Lᵀ Ωᵀ σ Ω L with σ = L Lᵀ, which is similar to −(Ωσ)². The
/// Cholesky factor keeps full precision on badly scaled σ; the symmetric
/// square root is the fallback when σ is not positive definite.
fn symplectic_squares(cov: &CovarianceMatrix) -> (f64, f64) {
    let factor = match cov.entries.cholesky() {
        Some(ch) => ch.l(),
        None => {
            let eig = SymmetricEigen::new(cov.entries);
            let root = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
            eig.eigenvectors * Matrix4::from_diagonal(&root) * eig.eigenvectors.transpose()
        }
    };
    let omega = SymplecticForm::new(cov.ordering).entries;
    let m = factor.transpose() * omega.transpose() * cov.entries * omega * factor;
    let m = (m + m.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    (0.5 * (ev[2] + ev[3]), 0.5 * (ev[0] + ev[1]).max(0.0))
}

/// (ν₊, ν₋) without the physicality check.
pub fn symplectic_spectrum(cov: &CovarianceMatrix) -> (f64, f64) {
    let (p, m) = symplectic_squares(cov);
    (p.sqrt(), m.sqrt())
}

fn nu_tolerance(hbar: f64) -> f64 {
    default_tol_psd(hbar) / hbar
}

pub fn symplectic_eigenvalues(cov: &CovarianceMatrix) -> Result<(f64, f64)> {
    let (nu_p, nu_m) = symplectic_spectrum(cov);
    if !(nu_m >= cov.hbar / 2.0 - nu_tolerance(cov.hbar)) {
        return Err(Error::NonPhysical(format!("smallest symplectic eigenvalue {nu_m} below hbar/2")));
    }
    Ok((nu_p, nu_m))
}

/// (C₁, C₂) with C₁² = ν₊² + ν₋² and C₂² = ν₊² − ν₋².
pub fn casimirs_from_sigma(cov: &CovarianceMatrix) -> Result<(f64, f64)> {
    symplectic_eigenvalues(cov)?;
    let (p, m) = symplectic_squares(cov);
    Ok(((p + m).sqrt(), (p - m).max(0.0).sqrt()))
}

/// (C₁², C₂⁴) from traces of powers of Ωσ: C₁² = −½ Tr[(Ωσ)²] and
/// C₂⁴ = Tr[(Ωσ)⁴] − C₁⁴.
pub fn casimirs_trace_form(cov: &CovarianceMatrix) -> (f64, f64) {
    let w = SymplecticForm::new(cov.ordering).entries * cov.entries;
    let w2 = w * w;
    let c1_sq = -0.5 * w2.trace();
    (c1_sq, (w2 * w2).trace() - c1_sq * c1_sq)
}

/// Entropy in bits of one mode with normalized symplectic eigenvalue ν = 2ν/ħ.
pub fn entropy_kernel(nu: f64) -> f64 {
    let x = ((nu - 1.0) / 2.0).max(0.0);
    if x == 0.0 {
        return 0.0;
    }
    let ln2 = std::f64::consts::LN_2;
    // (1 + x) log₂(1 + x) − x log₂ x, with ln_1p keeping the first term accurate near pure states
    let first = if x < 1e-8 { x * (1.0 + 0.5 * x) / ln2 } else { (1.0 + x) * x.ln_1p() / ln2 };
    first - x * x.log2()
}

pub fn von_neumann_entropy(cov: &CovarianceMatrix) -> Result<f64> {
    let (nu_p, nu_m) = symplectic_eigenvalues(cov)?;
    let h = cov.hbar;
    Ok(entropy_kernel(2.0 * nu_p / h) + entropy_kernel(2.0 * nu_m / h))
}

pub fn purity(cov: &CovarianceMatrix) -> Result<f64> {
    let det = cov.determinant();
    if !(det > 0.0) {
        return Err(Error::SingularMatrix(format!("det sigma = {det:e} is not positive")));
    }
    Ok(cov.hbar * cov.hbar / 4.0 / det.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfoReport {
    pub nu_plus: f64,
    pub nu_minus: f64,
    pub entropy: f64,
    pub purity: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    pub det_sigma: f64,
}

pub fn info_report(state: &MomentState) -> Result<InfoReport> {
    let cov = state.covariance(Ordering::ModeOrdered);
    let (nu_plus, nu_minus) = symplectic_eigenvalues(&cov)?;
    let (c1, c2) = casimirs_from_sigma(&cov)?;
    Ok(InfoReport {
        nu_plus,
        nu_minus,
        entropy: von_neumann_entropy(&cov)?,
        purity: purity(&cov)?,
        c1,
        c2,
        det_sigma: cov.determinant(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianParams {
    pub sigma_x: Matrix2<f64>,
    pub sigma_xp: Matrix2<f64>,
    pub hbar: f64,
}

/// Covariance of the pure Gaussian with position covariance Σ_x and
/// position-momentum block Σ_xp, with Σ_p = Σ_x⁻¹(ħ²/4 + Σ_xp Σ_xp).
///
/// A pure Gaussian has Σ_xp = Σ_x Y with Y symmetric; any other Σ_xp would
/// make Σ_p asymmetric and is rejected.
pub fn gaussian_covariance(params: &GaussianParams) -> Result<CovarianceMatrix> {
    let GaussianParams { sigma_x, sigma_xp, hbar } = *params;
    let det = sigma_x.determinant();
    let scale = sigma_x.norm_squared();
    if !(det.abs() > 1e-14 * scale) {
        return Err(Error::SingularMatrix(format!("Sigma_x has determinant {det:e}")));
    }
    if !(sigma_x[(0, 0)] > 0.0 && det > 0.0) {
        return Err(Error::InvalidGaussian("Sigma_x is not positive definite".into()));
    }
    let inv = sigma_x.try_inverse().ok_or_else(|| Error::SingularMatrix("Sigma_x".into()))?;
    let y = inv * sigma_xp;
    let asym = (y[(0, 1)] - y[(1, 0)]).abs();
    if asym > 1e-12 * (1.0 + y.norm()) {
        return Err(Error::InvalidGaussian(format!("Sigma_x^-1 Sigma_xp is not symmetric (mismatch {asym:e})")));
    }
    let sigma_p = inv * (Matrix2::identity() * (hbar * hbar / 4.0) + sigma_xp * sigma_xp);
    let sigma_p = (sigma_p + sigma_p.transpose()) * 0.5;
    let mut entries = Matrix4::zeros();
    entries.fixed_view_mut::<2, 2>(0, 0).copy_from(&sigma_x);
    entries.fixed_view_mut::<2, 2>(0, 2).copy_from(&sigma_xp);
    entries.fixed_view_mut::<2, 2>(2, 0).copy_from(&sigma_xp.transpose());
    entries.fixed_view_mut::<2, 2>(2, 2).copy_from(&sigma_p);
    Ok(CovarianceMatrix { entries, ordering: Ordering::XPOrdered, hbar })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Operator {
    #[serde(rename = "x")]
    X,
    #[serde(rename = "y")]
    Y,
    #[serde(rename = "p_x")]
    Px,
    #[serde(rename = "p_y")]
    Py,
}

impl Operator {
    fn mode_position(self) -> usize {
        match self {
            Operator::X => 0,
            Operator::Px => 1,
            Operator::Y => 2,
            Operator::Py => 3,
        }
    }
}

impl std::str::FromStr for Operator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" => Ok(Operator::X),
            "y" => Ok(Operator::Y),
            "p_x" | "px" => Ok(Operator::Px),
            "p_y" | "py" => Ok(Operator::Py),
            other => Err(Error::Domain(format!("unknown operator label {other:?}"))),
        }
    }
}

/// Δ(A₁B₁)Δ(A₂B₂) − Δ(A₁B₂)Δ(A₂B₁).
pub fn uncertainty_product(delta: &[f64; N_MOMENTS], a1: Operator, a2: Operator, b1: Operator, b2: Operator) -> f64 {
    let m = |u: Operator, v: Operator| delta[crate::moments::MODE_INDEX[u.mode_position()][v.mode_position()]];
    m(a1, b1) * m(a2, b2) - m(a1, b2) * m(a2, b1)
}
