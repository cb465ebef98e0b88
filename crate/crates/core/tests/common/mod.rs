//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use num_dual::Dual64;
use qfinsler_core::chart::radicand;
use qfinsler_core::finsler::kinetic_generic;
use qfinsler_core::sampling::{self, ChartSampling};
use qfinsler_core::{ChartCoords, ExtendedMomentum, MetricField, Potential};

pub fn metrics() -> Vec<MetricField> {
    vec![
        MetricField::minkowski(1.0),
        MetricField::weak_field(Potential { phi0: 0.01, gradient: [0.002, -0.001, 0.003], gm: 0.1 }, 1.0),
        MetricField::schwarzschild_isotropic(1.0, 1.0),
        MetricField::vortical(0.05, 0.2, 0.7, 1.0),
    ]
}

/// Random (event, extended momentum, chart coordinates) at a physical point.
pub fn random_point(seed: u64, metric: &MetricField) -> ([f64; 4], ExtendedMomentum, ChartCoords) {
    let mut rng = sampling::rng(seed);
    let chart = sampling::random_chart(&mut rng, &ChartSampling::default());
    let x = sampling::random_event(&mut rng, metric);
    let p4 = sampling::random_momentum(&mut rng);
    let q = chart.quantum_momenta();
    (x, [p4[0], p4[1], p4[2], p4[3], q[0], q[1], q[2], q[3], q[4], q[5]], chart.coords())
}

/// Momentum gradient of H_Q by forward-mode differentiation of the kinetic term.
pub fn momentum_gradient(metric: &MetricField, x: &[f64; 4], coords: &ChartCoords, p: &ExtendedMomentum, m: f64) -> [f64; 10] {
    let e = metric.eval::<Dual64>(&x.map(Dual64::from)).unwrap();
    let c = [coords.s_x, coords.s_y, coords.alpha, coords.beta].map(Dual64::from);
    std::array::from_fn(|k| {
        let mut pd = p.map(Dual64::from);
        pd[k] = pd[k].derivative();
        kinetic_generic(&e, &c, &pd).eps / (2.0 * m)
    })
}

/// m times the momentum Hessian of H_Q: central differences of the exact
/// gradient with step 1e-5·max(1, |p|), Richardson-extrapolated over h and h/2.
/// Along p_α, C1, C2 the step is further capped so that it changes the √P
/// radicand by at most 0.1%; near the radicand's zero a fixed step would
/// straddle the square-root kink.
pub fn fd_fundamental_tensor(metric: &MetricField, x: &[f64; 4], coords: &ChartCoords, p: &ExtendedMomentum, m: f64) -> [[f64; 10]; 10] {
    let norm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
    let (pa, c1, c2) = (p[6], p[8], p[9]);
    let r = radicand(pa, c1, c2);
    let dr = [64.0 * pa.powi(3) - 16.0 * c1 * c1 * pa, -16.0 * c1 * pa * pa, 4.0 * c2.powi(3)];
    let step = |j: usize| {
        let h = 1e-5 * norm.max(1.0);
        let k = match j {
            6 => 0,
            8 => 1,
            9 => 2,
            _ => return h,
        };
        if dr[k] == 0.0 { h } else { h.min(1e-3 * r.abs() / dr[k].abs()) }
    };
    let central = |j: usize, step: f64| {
        let mut up = *p;
        let mut dn = *p;
        up[j] += step;
        dn[j] -= step;
        let gu = momentum_gradient(metric, x, coords, &up, m);
        let gd = momentum_gradient(metric, x, coords, &dn, m);
        std::array::from_fn::<f64, 10, _>(|r| (gu[r] - gd[r]) / (2.0 * step))
    };
    let mut out = [[0.0; 10]; 10];
    for j in 0..10 {
        let h = step(j);
        let (d1, d2) = (central(j, h), central(j, h / 2.0));
        for r in 0..10 {
            out[r][j] = m * (4.0 * d2[r] - d1[r]) / 3.0;
        }
    }
    out
}
