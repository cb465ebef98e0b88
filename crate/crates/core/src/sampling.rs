//! Seeded generators of physical states, used by the validation suite and
//! tests.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix4};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::chart::{sqrt_p, CanonicalChart};
use crate::info::GaussianParams;
use crate::metric::{MetricField, MetricKind};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy)]
pub struct ChartSampling {
    pub min_sin_beta: f64,
    pub min_sqrt_p: f64,
    pub hbar: f64,
}

impl Default for ChartSampling {
    fn default() -> Self {
        Self { min_sin_beta: 0.05, min_sqrt_p: 1e-6, hbar: 1.0 }
    }
}

/// Random chart on the physical branch with C₁² − C₂² ≥ ħ²/2.
pub fn random_chart<R: Rng>(rng: &mut R, opts: &ChartSampling) -> CanonicalChart {
    let h = opts.hbar;
    let beta_min = opts.min_sin_beta.asin() + 1e-6;
    loop {
        let c2 = h * rng.random_range(0.05..1.5);
        let c1 = (c2 * c2 + h * h * (0.5 + rng.random_range(0.0..2.0))).sqrt();
        let bound = (c1 * c1 - (c1.powi(4) - c2.powi(4)).sqrt()) / 4.0;
        let p_alpha = (rng.random_range(0.0..0.9) * bound).sqrt() * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        let chart = CanonicalChart {
            s_x: rng.random_range(0.3..2.0),
            p_sx: h * rng.random_range(-1.0..1.0),
            s_y: rng.random_range(0.3..2.0),
            p_sy: h * rng.random_range(-1.0..1.0),
            alpha: rng.random_range(-PI..PI),
            p_alpha,
            beta: rng.random_range(beta_min..PI - beta_min),
            p_beta: h * rng.random_range(-1.0..1.0),
            c1,
            c2,
            hbar: h,
        };
        if matches!(sqrt_p(p_alpha, c1, c2), Ok(v) if v > opts.min_sqrt_p) && chart.check().is_ok() {
            return chart;
        }
    }
}

/// Random pure-Gaussian data: Σ_x positive definite and Σ_xp = Σ_x Y with Y symmetric.
pub fn random_gaussian<R: Rng>(rng: &mut R, hbar: f64) -> GaussianParams {
    let l = Matrix2::new(rng.random_range(0.3..2.0), 0.0, rng.random_range(-1.0..1.0), rng.random_range(0.3..2.0));
    let sigma_x = l * l.transpose();
    let off = rng.random_range(-1.0..1.0);
    let y = Matrix2::new(rng.random_range(-1.0..1.0), off, off, rng.random_range(-1.0..1.0)) * hbar;
    GaussianParams { sigma_x, sigma_xp: sigma_x * y, hbar }
}

/// Random symplectic matrix in mode order, composed of single-mode
/// squeezers and rotations and a beam splitter between the modes.
pub fn random_symplectic<R: Rng>(rng: &mut R) -> Matrix4<f64> {
    let mut s = Matrix4::identity();
    for _ in 0..3 {
        for mode in 0..2 {
            let r = rng.random_range(-0.8f64..0.8).exp();
            let th = rng.random_range(-PI..PI);
            let mut local = Matrix4::identity();
            let (c, sn) = (th.cos(), th.sin());
            let rot = Matrix2::new(c, sn, -sn, c) * Matrix2::new(r, 0.0, 0.0, 1.0 / r);
            local.fixed_view_mut::<2, 2>(2 * mode, 2 * mode).copy_from(&rot);
            s = local * s;
        }
        let phi = rng.random_range(-PI..PI);
        let (c, sn) = (phi.cos(), phi.sin());
        let mut bs = Matrix4::zeros();
        for k in 0..2 {
            bs[(k, k)] = c;
            bs[(k + 2, k + 2)] = c;
            bs[(k, k + 2)] = sn;
            bs[(k + 2, k)] = -sn;
        }
        s = bs * s;
    }
    s
}

/// Random event where the metric is regular: outside 3 horizon radii for
/// Schwarzschild, |φ|/c² < 0.05 for weak fields.
pub fn random_event<R: Rng>(rng: &mut R, metric: &MetricField) -> [f64; 4] {
    loop {
        let x: [f64; 4] = [rng.random_range(-1.0..1.0), rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0)];
        let r = (x[1] * x[1] + x[2] * x[2] + x[3] * x[3]).sqrt();
        let ok = match metric.kind {
            MetricKind::Schwarzschild { .. } => r > 3.0 * metric.geometric_mass().unwrap_or(0.0) + 0.5,
            MetricKind::WeakField { potential } => {
                r > 0.5 && potential.eval(&[x[1], x[2], x[3]]).is_ok_and(|(phi, _, _)| (phi / (metric.c * metric.c)).abs() < 0.05)
            }
            _ => true,
        };
        if ok {
            return x;
        }
    }
}

/// Random classical momentum covector with moderate spatial part.
pub fn random_momentum<R: Rng>(rng: &mut R) -> [f64; 4] {
    [rng.random_range(-2.0..-0.5), rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)]
}
