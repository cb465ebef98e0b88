//! Second-order moments of two quantized modes, their covariance orderings,
//! the closed Poisson structure on moments, and uncertainty checks.

use nalgebra::{Matrix4, SMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const N_MOMENTS: usize = 10;

/// Positions of the ten moments inside the moment vector.
pub mod idx {
    pub const XX: usize = 0;
    pub const X_PX: usize = 1;
    pub const PX_PX: usize = 2;
    pub const YY: usize = 3;
    pub const Y_PY: usize = 4;
    pub const PY_PY: usize = 5;
    pub const XY: usize = 6;
    pub const X_PY: usize = 7;
    pub const PX_Y: usize = 8;
    pub const PX_PY: usize = 9;
}

/// Human-readable moment labels in vector order.
pub const MOMENT_LABELS: [&str; N_MOMENTS] = [
    "x^2", "x p_x", "p_x^2", "y^2", "y p_y", "p_y^2", "x y", "x p_y", "p_x y", "p_x p_y",
];

/// Moment index of Δ(z_a z_b) for mode-ordered z = (x, p_x, y, p_y).
pub const MODE_INDEX: [[usize; 4]; 4] = [[0, 1, 6, 7], [1, 2, 8, 9], [6, 8, 3, 4], [7, 9, 4, 5]];

/// Moment index of Δ(w_a w_b) for w = (x, y, p_x, p_y).
pub const XP_INDEX: [[usize; 4]; 4] = [[0, 6, 1, 7], [6, 3, 8, 4], [1, 8, 2, 9], [7, 4, 9, 5]];

/// Mode-ordered operator pair behind each moment.
pub const MOMENT_PAIRS: [(usize, usize); N_MOMENTS] = [
    (0, 0),
    (0, 1),
    (1, 1),
    (2, 2),
    (2, 3),
    (3, 3),
    (0, 2),
    (0, 3),
    (1, 2),
    (1, 3),
];

pub type PoissonTensor = SMatrix<f64, N_MOMENTS, N_MOMENTS>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentState {
    pub mean_x: [f64; 4],
    pub mean_p: [f64; 4],
    pub delta: [f64; N_MOMENTS],
    pub hbar: f64,
}

impl MomentState {
    pub fn new(delta: [f64; N_MOMENTS], hbar: f64) -> Self {
        Self { mean_x: [0.0; 4], mean_p: [0.0; 4], delta, hbar }
    }

    /// Uncorrelated minimum-uncertainty state with position spreads `s_x`, `s_y`.
    pub fn vacuum(s_x: f64, s_y: f64, hbar: f64) -> Self {
        let q = hbar * hbar / 4.0;
        Self::new([s_x * s_x, 0.0, q / (s_x * s_x), s_y * s_y, 0.0, q / (s_y * s_y), 0.0, 0.0, 0.0, 0.0], hbar)
    }

    pub fn covariance(&self, ordering: Ordering) -> CovarianceMatrix {
        covariance_from_moments(self, ordering)
    }

    /// Single-mode invariants Δ(x²)Δ(p_x²) − Δ(xp_x)² and the y analogue.
    pub fn uncertainty_invariants(&self) -> (f64, f64) {
        let d = &self.delta;
        (
            d[idx::XX] * d[idx::PX_PX] - d[idx::X_PX] * d[idx::X_PX],
            d[idx::YY] * d[idx::PY_PY] - d[idx::Y_PY] * d[idx::Y_PY],
        )
    }

    pub fn is_finite(&self) -> bool {
        self.delta.iter().chain(&self.mean_x).chain(&self.mean_p).all(|v| v.is_finite()) && self.hbar.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ordering {
    /// (x, p_x, y, p_y)
    ModeOrdered,
    /// (x, y, p_x, p_y)
    XPOrdered,
}

impl Ordering {
    fn index(self) -> &'static [[usize; 4]; 4] {
        match self {
            Ordering::ModeOrdered => &MODE_INDEX,
            Ordering::XPOrdered => &XP_INDEX,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceMatrix {
    pub entries: Matrix4<f64>,
    pub ordering: Ordering,
    pub hbar: f64,
}

impl CovarianceMatrix {
    pub fn from_delta(delta: &[f64; N_MOMENTS], ordering: Ordering, hbar: f64) -> Self {
        let map = ordering.index();
        let entries = Matrix4::from_fn(|i, j| delta[map[i][j]]);
        Self { entries, ordering, hbar }
    }

    /// Reads the moment vector back out, averaging the two mirrored entries.
    pub fn to_delta(&self) -> [f64; N_MOMENTS] {
        let map = self.ordering.index();
        let mut delta = [0.0; N_MOMENTS];
        let mut count = [0u32; N_MOMENTS];
        for i in 0..4 {
            for j in 0..4 {
                delta[map[i][j]] += self.entries[(i, j)];
                count[map[i][j]] += 1;
            }
        }
        for (d, n) in delta.iter_mut().zip(count) {
            *d /= f64::from(n);
        }
        delta
    }

    /// Permutation matrix P with w = P z taking mode order to xp order.
    fn mode_to_xp() -> Matrix4<f64> {
        // w = (x, y, p_x, p_y) picks z = (x, p_x, y, p_y) entries 0, 2, 1, 3
        let mut p = Matrix4::zeros();
        for (row, col) in [(0, 0), (1, 2), (2, 1), (3, 3)] {
            p[(row, col)] = 1.0;
        }
        p
    }

    pub fn reorder(&self, target: Ordering) -> Self {
        if target == self.ordering {
            return *self;
        }
        let p = Self::mode_to_xp();
        let entries = match target {
            Ordering::XPOrdered => p * self.entries * p.transpose(),
            Ordering::ModeOrdered => p.transpose() * self.entries * p,
        };
        Self { entries, ordering: target, hbar: self.hbar }
    }

    pub fn symplectic_form(&self) -> SymplecticForm {
        SymplecticForm::new(self.ordering)
    }

    pub fn determinant(&self) -> f64 {
        self.entries.determinant()
    }

    /// Blocks Σ_x, Σ_xp, Σ_p of the xp ordering.
    pub fn xp_blocks(&self) -> (nalgebra::Matrix2<f64>, nalgebra::Matrix2<f64>, nalgebra::Matrix2<f64>) {
        let m = self.reorder(Ordering::XPOrdered).entries;
        (
            m.fixed_view::<2, 2>(0, 0).into_owned(),
            m.fixed_view::<2, 2>(0, 2).into_owned(),
            m.fixed_view::<2, 2>(2, 2).into_owned(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymplecticForm {
    pub entries: Matrix4<f64>,
}

impl SymplecticForm {
    pub fn new(ordering: Ordering) -> Self {
        let mut entries = Matrix4::zeros();
        let pairs: [(usize, usize); 2] = match ordering {
            Ordering::ModeOrdered => [(0, 1), (2, 3)],
            Ordering::XPOrdered => [(0, 2), (1, 3)],
        };
        for (q, p) in pairs {
            entries[(q, p)] = 1.0;
            entries[(p, q)] = -1.0;
        }
        Self { entries }
    }
}

pub fn covariance_from_moments(state: &MomentState, ordering: Ordering) -> CovarianceMatrix {
    CovarianceMatrix::from_delta(&state.delta, ordering, state.hbar)
}

/// Bracket of two moments from the closed form
/// {Δ(z_a z_b), Δ(z_c z_d)} = Ω_ac σ_bd + Ω_ad σ_bc + Ω_bc σ_ad + Ω_bd σ_ac,
/// obtained by applying the product rule to the canonical brackets of the
/// mode-ordered variables.
pub fn moment_poisson_bracket(i: usize, j: usize, state: &MomentState) -> Result<f64> {
    if i >= N_MOMENTS || j >= N_MOMENTS {
        return Err(Error::Domain(format!("moment index ({i}, {j}) out of range 0..{N_MOMENTS}")));
    }
    Ok(bracket_unchecked(i, j, &state.delta))
}

fn bracket_unchecked(i: usize, j: usize, delta: &[f64; N_MOMENTS]) -> f64 {
    let omega = SymplecticForm::new(Ordering::ModeOrdered).entries;
    let sigma = |u: usize, v: usize| delta[MODE_INDEX[u][v]];
    let (a, b) = MOMENT_PAIRS[i];
    let (c, d) = MOMENT_PAIRS[j];
    omega[(a, c)] * sigma(b, d) + omega[(a, d)] * sigma(b, c) + omega[(b, c)] * sigma(a, d) + omega[(b, d)] * sigma(a, c)
}

pub fn poisson_tensor(delta: &[f64; N_MOMENTS]) -> PoissonTensor {
    PoissonTensor::from_fn(|i, j| bracket_unchecked(i, j, delta))
}

/// Rank from singular values above `rel_threshold` times the largest.
pub fn poisson_rank(delta: &[f64; N_MOMENTS], rel_threshold: f64) -> usize {
    let sv = poisson_tensor(delta).singular_values();
    let max = sv.max();
    sv.iter().filter(|&&s| s > rel_threshold * max).count()
}

pub fn default_tol_psd(hbar: f64) -> f64 {
    1e-10 * hbar * hbar
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalityReport {
    /// Smallest eigenvalue of the Hermitian matrix σ + (iħ/2)Ω.
    pub min_eigenvalue: f64,
    /// Smallest eigenvalue of σ itself.
    pub min_sigma_eigenvalue: f64,
    pub det_sigma: f64,
    pub u_x: f64,
    pub u_y: f64,
    pub robertson_schroedinger_ok: bool,
    pub positive_ok: bool,
    pub single_mode_ok: bool,
    pub passed: bool,
}

/// Smallest eigenvalue of σ + (iħ/2)Ω, via the real 8×8 embedding
/// [[σ, −B], [B, σ]] of the Hermitian matrix σ + iB.
pub fn min_rs_eigenvalue(sigma: &Matrix4<f64>, hbar: f64, ordering: Ordering) -> f64 {
    let b = SymplecticForm::new(ordering).entries * (hbar / 2.0);
    let mut m = SMatrix::<f64, 8, 8>::zeros();
    m.fixed_view_mut::<4, 4>(0, 0).copy_from(sigma);
    m.fixed_view_mut::<4, 4>(4, 4).copy_from(sigma);
    m.fixed_view_mut::<4, 4>(0, 4).copy_from(&(-b));
    m.fixed_view_mut::<4, 4>(4, 0).copy_from(&b);
    SymmetricEigen::new(m).eigenvalues.min()
}

pub fn check_physicality(state: &MomentState, tol: f64) -> PhysicalityReport {
    let cov = covariance_from_moments(state, Ordering::ModeOrdered);
    let hbar = state.hbar;
    let min_eigenvalue = min_rs_eigenvalue(&cov.entries, hbar, cov.ordering);
    let min_sigma_eigenvalue = SymmetricEigen::new(cov.entries).eigenvalues.min();
    let (u_x, u_y) = state.uncertainty_invariants();
    let floor = hbar * hbar / 4.0 - tol;
    let robertson_schroedinger_ok = min_eigenvalue >= -tol;
    let positive_ok = min_sigma_eigenvalue >= -tol;
    let single_mode_ok = u_x >= floor && u_y >= floor;
    PhysicalityReport {
        min_eigenvalue,
        min_sigma_eigenvalue,
        det_sigma: cov.determinant(),
        u_x,
        u_y,
        robertson_schroedinger_ok,
        positive_ok,
        single_mode_ok,
        passed: robertson_schroedinger_ok && positive_ok && single_mode_ok && state.is_finite(),
    }
}
