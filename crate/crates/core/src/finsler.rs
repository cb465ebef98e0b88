//! The quantum-corrected geodesic Hamiltonian on the extended phase space and
//! its generalized 4th-root Finsler structure: quadratic tensor B, quartic
//! part √A and fundamental tensor g_Q.

use nalgebra::{Matrix4, SMatrix};
use serde::{Deserialize, Serialize};

use crate::chart::{self, moments_from_chart, radicand, sqrt_p, ChartCoords, EPS_BETA};
use crate::error::{Error, Result};
use crate::metric::{MetricEval, MetricField, Tensor2};
use crate::moments::{idx, N_MOMENTS};
use crate::Scalar;

/// Positions inside the extended momentum (p_t, p_x, p_y, p_z, p_sx, p_sy, p_α, p_β, C₁, C₂).
pub mod pidx {
    pub const T: usize = 0;
    pub const X: usize = 1;
    pub const Y: usize = 2;
    pub const Z: usize = 3;
    pub const P_SX: usize = 4;
    pub const P_SY: usize = 5;
    pub const P_ALPHA: usize = 6;
    pub const P_BETA: usize = 7;
    pub const C1: usize = 8;
    pub const C2: usize = 9;
}

pub const EXTENDED_LABELS: [&str; 10] = ["p_t", "p_x", "p_y", "p_z", "p_sx", "p_sy", "p_alpha", "p_beta", "C1", "C2"];

pub type ExtendedMomentum<D = f64> = [D; 10];
pub type Matrix10 = SMatrix<f64, 10, 10>;
pub type Matrix6 = SMatrix<f64, 6, 6>;

// metric indices of the two quantized directions
const QX: usize = 1;
const QY: usize = 2;

fn check_beta(beta: f64) -> Result<()> {
    if beta.sin() < EPS_BETA {
        return Err(Error::Singularity(format!("sin(beta) = {:e} below {EPS_BETA:e}", beta.sin())));
    }
    Ok(())
}

/// The four moment-form contributions to 2m·H − m²c².
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentFormTerms {
    /// g^{ab} p_a p_b
    pub classical: f64,
    /// g^{ij} Δ(p_i p_j)
    pub fluctuation: f64,
    /// 2 ∂_k g^{aj} p_a Δ(x^k p_j)
    pub drift: f64,
    /// ½ ∂_k ∂_l g^{ab} p_a p_b Δ(x^k x^l)
    pub curvature: f64,
}

impl MomentFormTerms {
    pub fn kinetic(&self) -> f64 {
        self.classical + self.fluctuation + self.drift + self.curvature
    }
}

/// Second-order Taylor expansion of the classical Hamiltonian around the
/// means, with the two quantized directions x and y. The drift term carries
/// the factor 2 from the two symmetric orderings of Δ(x^k p_j).
pub fn moment_form_terms(metric: &MetricField, x: &[f64; 4], p: &[f64; 4], delta: &[f64; N_MOMENTS]) -> Result<MomentFormTerms> {
    let e = metric.eval_f64(x)?;
    let q = [QX, QY];
    // Δ(x^k p_j), Δ(p_i p_j), Δ(x^k x^l) over the quantized pair
    let dxp = [[delta[idx::X_PX], delta[idx::X_PY]], [delta[idx::PX_Y], delta[idx::Y_PY]]];
    let dpp = [[delta[idx::PX_PX], delta[idx::PX_PY]], [delta[idx::PX_PY], delta[idx::PY_PY]]];
    let dxx = [[delta[idx::XX], delta[idx::XY]], [delta[idx::XY], delta[idx::YY]]];

    let mut t = MomentFormTerms { classical: 0.0, fluctuation: 0.0, drift: 0.0, curvature: 0.0 };
    for a in 0..4 {
        for b in 0..4 {
            t.classical += e.g[a][b] * p[a] * p[b];
        }
    }
    for i in 0..2 {
        for j in 0..2 {
            t.fluctuation += e.g[q[i]][q[j]] * dpp[i][j];
            for a in 0..4 {
                t.drift += 2.0 * e.dg[q[i]][a][q[j]] * p[a] * dxp[i][j];
                for b in 0..4 {
                    t.curvature += 0.5 * e.ddg[q[i]][q[j]][a][b] * p[a] * p[b] * dxx[i][j];
                }
            }
        }
    }
    Ok(t)
}

pub fn hq_moment_form(metric: &MetricField, x: &[f64; 4], p: &[f64; 4], delta: &[f64; N_MOMENTS], m: f64) -> Result<f64> {
    let c = metric.c;
    Ok((moment_form_terms(metric, x, p, delta)?.kinetic() + m * m * c * c) / (2.0 * m))
}

/// ⟨g^{ab}⟩ = (1 + ½(s_x²∂_x² + 2 s_x s_y cos β ∂_x∂_y + s_y²∂_y²)) g^{ab}.
fn averaged<D: Scalar>(e: &MetricEval<D>, sx: D, sy: D, cb: D, a: usize, b: usize) -> D {
    e.g[a][b]
        + (e.ddg[QX][QX][a][b] * sx * sx + e.ddg[QX][QY][a][b] * sx * sy * cb * 2.0 + e.ddg[QY][QY][a][b] * sy * sy) * 0.5
}

/// Quadratic tensor B over the extended momentum, in the index order of
/// [`pidx`]. The C₂ row and column vanish identically.
pub fn b_tensor_generic<D: Scalar>(e: &MetricEval<D>, sx: D, sy: D, beta: D) -> [[D; 10]; 10] {
    let s = beta.sin();
    let cb = beta.cos();
    let mut bm = [[D::zero(); 10]; 10];
    for a in 0..4 {
        for b in a..4 {
            bm[a][b] = averaged(e, sx, sy, cb, a, b);
        }
        let dxx = e.dg[QX][QX][a];
        let dyx = e.dg[QY][QX][a];
        let dxy = e.dg[QX][QY][a];
        let dyy = e.dg[QY][QY][a];
        bm[a][pidx::P_SX] = sx * dxx + sy * cb * dyx;
        bm[a][pidx::P_SY] = sy * dyy + sx * cb * dxy;
        bm[a][pidx::P_ALPHA] = s * (sy / sx * dyx - sx / sy * dxy);
        bm[a][pidx::P_BETA] = -s * (sy / sx * dyx + sx / sy * dxy);
    }
    let gxx = e.g[QX][QX];
    let gyy = e.g[QY][QY];
    let gxy = e.g[QX][QY];
    let s2 = s * s;
    let ax = gxx / (sx * sx);
    let ay = gyy / (sy * sy);
    let axy = cb * gxy / (sx * sy) * 2.0;
    // Tr(Σ_x⁻¹ g) and the same with the off-diagonal sign flipped
    let tr = (ax + ay - axy) / s2;
    let tr_flip = (ax + ay + axy) / s2;

    bm[pidx::P_SX][pidx::P_SX] = gxx;
    bm[pidx::P_SY][pidx::P_SY] = gyy;
    bm[pidx::P_SX][pidx::P_SY] = cb * gxy;
    bm[pidx::P_SX][pidx::P_ALPHA] = -s * gxy / sy;
    bm[pidx::P_SX][pidx::P_BETA] = -s * gxy / sy;
    bm[pidx::P_SY][pidx::P_ALPHA] = s * gxy / sx;
    bm[pidx::P_SY][pidx::P_BETA] = -s * gxy / sx;
    bm[pidx::P_ALPHA][pidx::P_ALPHA] = s2 * tr_flip - tr * 2.0;
    bm[pidx::P_ALPHA][pidx::P_BETA] = ay - ax;
    bm[pidx::P_BETA][pidx::P_BETA] = s2 * tr;
    bm[pidx::C1][pidx::C1] = tr * 0.5;
    for i in 0..10 {
        for j in 0..i {
            bm[i][j] = bm[j][i];
        }
    }
    bm
}

/// Coefficient κ = ½ K_{ij} g^{ij} multiplying √P in the quartic part, with
/// the kernel K = csc²β [[−sin(α+β)/s_x², sin α/(s_x s_y)], [·, −sin(α−β)/s_y²]].
pub fn kernel_trace<D: Scalar>(g: &Tensor2<D>, sx: D, sy: D, alpha: D, beta: D) -> D {
    let s2 = beta.sin().powi(2);
    let kxx = -(alpha + beta).sin() / (sx * sx);
    let kxy = alpha.sin() / (sx * sy);
    let kyy = -(alpha - beta).sin() / (sy * sy);
    (kxx * g[QX][QX] + kxy * g[QX][QY] * 2.0 + kyy * g[QY][QY]) / s2 * 0.5
}

/// Kinetic part pᵀBp + Q of 2m·H − m²c², with the signed quartic part
/// Q = κ√P. Used with dual numbers for phase-space gradients.
pub fn kinetic_generic<D: Scalar>(e: &MetricEval<D>, coords: &[D; 4], p: &ExtendedMomentum<D>) -> D {
    let [sx, sy, alpha, beta] = *coords;
    let bm = b_tensor_generic(e, sx, sy, beta);
    let mut quad = D::zero();
    for i in 0..9 {
        let mut row = bm[i][i] * p[i];
        for j in (i + 1)..9 {
            row += bm[i][j] * p[j] * 2.0;
        }
        quad += row * p[i];
    }
    let sp = chart::sqrt_p_clamped(p[pidx::P_ALPHA], p[pidx::C1], p[pidx::C2]);
    quad + kernel_trace(&e.g, sx, sy, alpha, beta) * sp
}

fn to_matrix10(bm: &[[f64; 10]; 10]) -> Matrix10 {
    Matrix10::from_fn(|i, j| bm[i][j])
}

pub fn b_tensor(metric: &MetricField, x: &[f64; 4], s_x: f64, s_y: f64, beta: f64) -> Result<Matrix10> {
    check_beta(beta)?;
    let e = metric.eval_f64(x)?;
    Ok(to_matrix10(&b_tensor_generic(&e, s_x, s_y, beta)))
}

/// Signed quartic part √A = ½ K_{ij} g^{ij} √P.
#[allow(clippy::too_many_arguments)]
pub fn quartic_part(
    metric: &MetricField,
    x: &[f64; 4],
    s_x: f64,
    s_y: f64,
    alpha: f64,
    beta: f64,
    p_alpha: f64,
    c1: f64,
    c2: f64,
) -> Result<f64> {
    check_beta(beta)?;
    let e = metric.eval_f64(x)?;
    Ok(kernel_trace(&e.g, s_x, s_y, alpha, beta) * sqrt_p(p_alpha, c1, c2)?)
}

pub fn state_averaged_metric(metric: &MetricField, x: &[f64; 4], s_x: f64, s_y: f64, beta: f64) -> Result<Matrix4<f64>> {
    let e = metric.eval_f64(x)?;
    Ok(Matrix4::from_fn(|a, b| averaged(&e, s_x, s_y, beta.cos(), a, b)))
}

/// Split of 2m·H_Q − m²c² into the signed quartic part and B-contraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub quartic: f64,
    pub quadratic: f64,
    pub h_q: f64,
}

pub fn hq_decomposition(metric: &MetricField, x: &[f64; 4], p: &ExtendedMomentum, coords: &ChartCoords, m: f64) -> Result<Decomposition> {
    let bm = b_tensor(metric, x, coords.s_x, coords.s_y, coords.beta)?;
    let pv = nalgebra::SVector::<f64, 10>::from_column_slice(p);
    let quadratic = (pv.transpose() * bm * pv)[(0, 0)];
    let quartic = quartic_part(
        metric,
        x,
        coords.s_x,
        coords.s_y,
        coords.alpha,
        coords.beta,
        p[pidx::P_ALPHA],
        p[pidx::C1],
        p[pidx::C2],
    )?;
    let c = metric.c;
    Ok(Decomposition { quartic, quadratic, h_q: (quartic + quadratic + m * m * c * c) / (2.0 * m) })
}

pub fn hq_canonical(metric: &MetricField, x: &[f64; 4], p: &ExtendedMomentum, coords: &ChartCoords, m: f64) -> Result<f64> {
    Ok(hq_decomposition(metric, x, p, coords, m)?.h_q)
}

/// Moment vector of the chart point (coords, quantum part of `p`).
pub fn moments_at(coords: &ChartCoords, p: &ExtendedMomentum) -> [f64; N_MOMENTS] {
    moments_from_chart(&[
        coords.s_x,
        p[pidx::P_SX],
        coords.s_y,
        p[pidx::P_SY],
        coords.alpha,
        p[pidx::P_ALPHA],
        coords.beta,
        p[pidx::P_BETA],
        p[pidx::C1],
        p[pidx::C2],
    ])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FinslerTensors {
    /// A = (√A)².
    pub a_scalar: f64,
    /// Signed quartic part √A.
    pub quartic: f64,
    pub b_scalar: f64,
    pub b_matrix: Matrix10,
    pub a_vector: [f64; 10],
    pub a_matrix: Matrix10,
    pub g_q: Matrix10,
    pub h_q: f64,
    /// Set when A = 0: the A-contractions are 0/0 and g_Q is B alone.
    pub degenerate: bool,
}

/// Gradient and Hessian of √P in (p_α, C₁, C₂).
fn sqrt_p_derivatives(pa: f64, c1: f64, c2: f64) -> Option<(f64, [f64; 3], [[f64; 3]; 3])> {
    let r = radicand(pa, c1, c2);
    if !(r > 0.0) {
        return None;
    }
    let sr = r.sqrt();
    let dr = [64.0 * pa.powi(3) - 16.0 * c1 * c1 * pa, -16.0 * c1 * pa * pa, 4.0 * c2.powi(3)];
    let mut ddr = [[0.0; 3]; 3];
    ddr[0][0] = 192.0 * pa * pa - 16.0 * c1 * c1;
    ddr[0][1] = -32.0 * c1 * pa;
    ddr[1][0] = ddr[0][1];
    ddr[1][1] = -16.0 * pa * pa;
    ddr[2][2] = 12.0 * c2 * c2;
    let grad = dr.map(|v| v / (2.0 * sr));
    let mut hess = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            hess[i][j] = ddr[i][j] / (2.0 * sr) - dr[i] * dr[j] / (4.0 * r * sr);
        }
    }
    Some((sr, grad, hess))
}

/// g_Q = m ∂²H_Q/∂p∂p = B + sgn(√A)·(3A^{ab} − 2A^a A^b), with the partial
/// contractions A^a = ∂_a A/(4A^{3/4}) and A^{ab} = ∂_a∂_b A/(12A^{1/2}).
///
/// The sign factor accounts for a negative quartic part; with positive
/// roots the bracket equals |½ ∂²√A|.
pub fn fundamental_tensor(metric: &MetricField, x: &[f64; 4], coords: &ChartCoords, p: &ExtendedMomentum, m: f64) -> Result<FinslerTensors> {
    check_beta(coords.beta)?;
    let e = metric.eval_f64(x)?;
    let b_matrix = to_matrix10(&b_tensor_generic(&e, coords.s_x, coords.s_y, coords.beta));
    let pv = nalgebra::SVector::<f64, 10>::from_column_slice(p);
    let b_scalar = (pv.transpose() * b_matrix * pv)[(0, 0)];
    let kappa = kernel_trace(&e.g, coords.s_x, coords.s_y, coords.alpha, coords.beta);
    let (pa, c1, c2) = (p[pidx::P_ALPHA], p[pidx::C1], p[pidx::C2]);
    let sp = sqrt_p(pa, c1, c2)?;
    let quartic = kappa * sp;
    let c = metric.c;
    let h_q = (quartic + b_scalar + m * m * c * c) / (2.0 * m);
    let a_scalar = quartic * quartic;

    let mut out = FinslerTensors {
        a_scalar,
        quartic,
        b_scalar,
        b_matrix,
        a_vector: [0.0; 10],
        a_matrix: Matrix10::zeros(),
        g_q: b_matrix,
        h_q,
        degenerate: true,
    };
    let Some((_, grad, hess)) = sqrt_p_derivatives(pa, c1, c2).filter(|_| a_scalar > 0.0) else {
        return Ok(out);
    };
    let slots = [pidx::P_ALPHA, pidx::C1, pidx::C2];
    // ∂A = 2Q∂Q and ∂∂A = 2∂Q∂Q + 2Q∂∂Q with ∂Q = κ∂√P
    let dq = grad.map(|v| kappa * v);
    let a_quarter3 = a_scalar.powf(0.75);
    let a_half = a_scalar.sqrt();
    let sign = quartic.signum();
    for (i, &si) in slots.iter().enumerate() {
        out.a_vector[si] = 2.0 * quartic * dq[i] / (4.0 * a_quarter3);
    }
    for (i, &si) in slots.iter().enumerate() {
        for (j, &sj) in slots.iter().enumerate() {
            let dda = 2.0 * dq[i] * dq[j] + 2.0 * quartic * kappa * hess[i][j];
            out.a_matrix[(si, sj)] = dda / (12.0 * a_half);
            out.g_q[(si, sj)] += sign * (3.0 * out.a_matrix[(si, sj)] - 2.0 * out.a_vector[si] * out.a_vector[sj]);
        }
    }
    out.degenerate = false;
    Ok(out)
}

/// Extended metric over (p_t, p_x, p_y, p_z, p_s, p_q) for a single
/// quantized direction x with spread `s`.
pub fn single_mode_metric(metric: &MetricField, x: &[f64; 4], s: f64, hbar: f64) -> Result<Matrix6> {
    if !(s > 0.0) {
        return Err(Error::Domain(format!("spread must be positive, got {s}")));
    }
    let e = metric.eval_f64(x)?;
    let mut g = Matrix6::zeros();
    for a in 0..4 {
        for b in 0..4 {
            g[(a, b)] = e.g[a][b] + 0.5 * s * s * e.ddg[QX][QX][a][b];
        }
        g[(a, 4)] = s * e.dg[QX][a][QX];
        g[(4, a)] = g[(a, 4)];
    }
    g[(4, 4)] = e.g[QX][QX];
    g[(5, 5)] = hbar * hbar * e.g[QX][QX] / (4.0 * s * s);
    Ok(g)
}
