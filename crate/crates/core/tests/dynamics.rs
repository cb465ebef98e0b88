mod common;

use common::{metrics, momentum_gradient, random_point};
use qfinsler_core::dynamics::{ExtendedState, FlowProblem, Mode};
use qfinsler_core::metric::{areal_radius, isotropic_radius};
use qfinsler_core::moments::idx;
use qfinsler_core::sampling::{self, ChartSampling};
use qfinsler_core::{CanonicalChart, MetricField};

fn at_rest(x: [f64; 4], chart: &CanonicalChart) -> ExtendedState {
    ExtendedState::from_chart(x, chart, [0.0; 3])
}

fn radius(s: &ExtendedState) -> f64 {
    (s.x[1] * s.x[1] + s.x[2] * s.x[2] + s.x[3] * s.x[3]).sqrt()
}

#[test]
fn rest_mass_shell_in_flat_space() {
    let problem = FlowProblem::new(MetricField::minkowski(2.0), 1.5, 1.0, Mode::Classical);
    let s = at_rest([0.0; 4], &CanonicalChart::vacuum(1.0, 1.0, 1.0));
    let pt = problem.solve_mass_shell(&s).unwrap();
    // with coordinate time t the energy is E = −p_t = mc²
    assert!((-pt - 1.5 * 4.0).abs() < 1e-14);
}

#[test]
fn vacuum_fluctuations_raise_the_flat_space_energy() {
    let (m, c, hbar) = (1.2, 1.7, 0.9);
    let problem = FlowProblem::new(MetricField::minkowski(c), m, hbar, Mode::Quantum);
    let chart = CanonicalChart::vacuum(0.7, 1.3, hbar);
    let s = ExtendedState::from_chart([0.0; 4], &chart, [0.3, -0.2, 0.1]);
    let pt = problem.solve_mass_shell(&s).unwrap();
    let d = s.moments();
    let p2 = 0.09 + 0.04 + 0.01;
    // E²/c² = m²c² + |p|² + Δ(p_x²) + Δ(p_y²)
    let expected = (m * m * c * c + p2 + d[idx::PX_PX] + d[idx::PY_PY]).sqrt() * c;
    assert!((-pt - expected).abs() < 1e-14 * expected);
}

#[test]
fn mass_shell_residual_on_random_curved_data() {
    for (k, metric) in metrics().iter().enumerate() {
        let problem = FlowProblem::new(*metric, 1.3, 1.0, Mode::Quantum);
        for i in 0..20 {
            let (x, p, coords) = random_point(300 + 100 * k as u64 + i, metric);
            let s = ExtendedState { tau: 0.0, x, q: coords, p };
            let on = problem.on_shell(&s).unwrap();
            let h = problem.hamiltonian(&on).unwrap();
            assert!(h.abs() < 1e-12 * problem.mc2(), "{h:e}");
            let (qdot, _) = problem.derivatives(&on).unwrap();
            assert!(qdot[0] > 0.0, "coordinate time runs forward");
        }
    }
}

#[test]
fn velocities_are_momentum_gradients_and_forces_match_coordinate_differences() {
    for (k, metric) in metrics().iter().enumerate() {
        let m = 1.3;
        let problem = FlowProblem::new(*metric, m, 1.0, Mode::Quantum);
        for i in 0..10 {
            let (x, p, coords) = random_point(900 + 100 * k as u64 + i, metric);
            let s = ExtendedState { tau: 0.0, x, q: coords, p };
            let (qdot, pdot) = problem.derivatives(&s).unwrap();
            let grad = momentum_gradient(metric, &x, &coords, &p, m);
            for a in 0..8 {
                assert!((qdot[a] - grad[a]).abs() < 1e-12 * grad[a].abs().max(1.0), "velocity {a}");
            }
            // −∂H/∂q by fourth-order central differences of H
            for a in 0..8 {
                let h = 1e-4;
                let shifted = |d: f64| {
                    let mut t = s;
                    match a {
                        0..=3 => t.x[a] += d,
                        4 => t.q.s_x += d,
                        5 => t.q.s_y += d,
                        6 => t.q.alpha += d,
                        _ => t.q.beta += d,
                    }
                    problem.hamiltonian(&t).unwrap()
                };
                let fd = -(-shifted(2.0 * h) + 8.0 * shifted(h) - 8.0 * shifted(-h) + shifted(-2.0 * h)) / (12.0 * h);
                assert!((pdot[a] - fd).abs() < 1e-8 * fd.abs().max(1.0), "force {a}: {} vs {fd}", pdot[a]);
            }
        }
    }
}

#[test]
fn classical_mode_moves_on_straight_lines_in_flat_space() {
    let m = 2.0;
    let problem = FlowProblem::new(MetricField::minkowski(1.0), m, 1.0, Mode::Classical);
    let chart = CanonicalChart::vacuum(1.0, 1.0, 1.0);
    let s = problem.on_shell(&ExtendedState::from_chart([0.0, 1.0, -2.0, 0.5], &chart, [0.4, 0.2, -0.6])).unwrap();
    let end = problem.hamiltonian_flow(&s, 7.5).unwrap();
    for i in 1..4 {
        let expected = s.x[i] + s.p[i] / m * 7.5;
        assert!((end.x[i] - expected).abs() < 1e-12 * expected.abs().max(1.0));
    }
    // frozen quantum sector
    assert_eq!(end.q, s.q);
    assert_eq!(end.p[4..], s.p[4..]);
}

#[test]
fn free_wavepacket_spreads_as_the_exact_second_moment_solution() {
    let (m, hbar, s0) = (1.0, 1.0, 1.0);
    let problem = FlowProblem::new(MetricField::minkowski(1.0), m, hbar, Mode::Quantum);
    let s = problem.on_shell(&at_rest([0.0; 4], &CanonicalChart::vacuum(s0, s0, hbar))).unwrap();
    let spreading = 2.0 * m * s0 * s0 / hbar;
    let record = problem.integrate(&s, 10.0 * spreading, 200, 1).unwrap();
    let mut worst: f64 = 0.0;
    for smp in &record.samples {
        let exact = s0 * s0 + (hbar * smp.tau / (2.0 * m * s0)).powi(2);
        let d = smp.state.moments();
        worst = worst.max((d[idx::XX] - exact).abs() / exact).max((d[idx::YY] - exact).abs() / exact);
    }
    assert!(worst < 1e-8, "{worst:e}");
}

#[test]
fn vacuum_run_keeps_the_constraint_and_the_uncertainty_floor() {
    let hbar = 1.0;
    let problem = FlowProblem::new(MetricField::minkowski(1.0), 1.0, hbar, Mode::Quantum);
    let s = problem.on_shell(&ExtendedState::from_chart([0.0; 4], &CanonicalChart::vacuum(1.0, 2.0, hbar), [0.1, 0.0, 0.2])).unwrap();
    let record = problem.integrate(&s, 50.0, 1000, 10).unwrap();
    assert!(record.drift.max_constraint < 1e-9);
    assert_eq!(record.drift.casimir_drift, [0.0, 0.0]);
    assert!(record.drift.min_u_x >= hbar * hbar / 4.0 - 1e-9);
    assert!(record.drift.min_u_y >= hbar * hbar / 4.0 - 1e-9);
    assert!(record.samples.windows(2).all(|w| w[1].tau > w[0].tau));
    assert_eq!(record.samples.len(), 101);
    // pure states stay pure
    assert!(record.samples.iter().all(|s| (s.purity - 1.0).abs() < 1e-9 && s.entropy < 1e-9));
}

fn cycloid_time(r0: f64, r: f64, gm: f64) -> f64 {
    let eta = (2.0 * r / r0 - 1.0).acos();
    (r0.powi(3) / (8.0 * gm)).sqrt() * (eta + eta.sin())
}

#[test]
fn radial_infall_follows_the_cycloid() {
    let gm = 1.0;
    let metric = MetricField::schwarzschild_isotropic(gm, 1.0);
    let mut problem = FlowProblem::new(metric, 1.0, 1.0, Mode::Classical);
    problem.tol.rtol = 1e-13;
    problem.tol.atol = 1e-13;
    let rho0 = isotropic_radius(20.0, gm);
    let s = problem.on_shell(&at_rest([0.0, rho0, 0.0, 0.0], &CanonicalChart::vacuum(1.0, 1.0, 1.0))).unwrap();
    let expected = cycloid_time(20.0, 4.0, gm);
    let hit = problem.advance_to_event(&s, 1.01 * expected, 100, |st| areal_radius(radius(st), gm) - 4.0).unwrap();
    assert!((hit.tau - expected).abs() < 1e-6 * expected, "{} vs {expected}", hit.tau);
    assert!((areal_radius(radius(&hit), gm) - 4.0).abs() < 1e-9);
}

#[test]
fn quantum_deviation_from_the_geodesic_is_linear_in_the_moment_scale() {
    let gm = 1.0;
    let metric = MetricField::schwarzschild_isotropic(gm, 1.0);
    let rho0 = isotropic_radius(20.0, gm);
    let x0 = [0.0, rho0, 0.0, 0.0];
    // a narrow packet: the expansion in moments needs spreads well below r
    let hbar0 = 0.01;
    let mut rng = sampling::rng(11);
    let chart = sampling::random_chart(&mut rng, &ChartSampling { hbar: hbar0, ..ChartSampling::default() });
    let tau_end = 0.5 * cycloid_time(20.0, 4.0, gm);

    let classical = FlowProblem::new(metric, 1.0, 1.0, Mode::Classical);
    let start = classical.on_shell(&at_rest(x0, &chart)).unwrap();
    let reference = classical.hamiltonian_flow(&start, tau_end).unwrap();

    let mut points = Vec::new();
    for lambda in [1e-3, 1e-2, 1e-1] {
        let quantum = FlowProblem::new(metric, 1.0, lambda * hbar0, Mode::Quantum);
        let s = quantum.on_shell(&at_rest(x0, &chart).scaled_fluctuations(lambda)).unwrap();
        let end = quantum.hamiltonian_flow(&s, tau_end).unwrap();
        let dev = (0..4).map(|i| (end.x[i] - reference.x[i]).powi(2)).sum::<f64>().sqrt();
        points.push((lambda.ln(), dev.ln()));
    }
    let slope = |a: (f64, f64), b: (f64, f64)| (b.1 - a.1) / (b.0 - a.0);
    let fit = slope(points[0], points[2]);
    assert!((fit - 1.0).abs() < 0.1, "slope {fit}");
    assert!((slope(points[0], points[1]) - 1.0).abs() < 0.1);
}

#[test]
fn time_reversal_returns_the_initial_state() {
    for (k, metric) in metrics().iter().enumerate() {
        let mut problem = FlowProblem::new(*metric, 1.0, 1.0, Mode::Quantum);
        problem.tol.rtol = 1e-10;
        problem.tol.atol = 1e-10;
        let (x, p, coords) = random_point(40 + k as u64, metric);
        let s = problem.on_shell(&ExtendedState { tau: 0.0, x, q: coords, p }).unwrap();
        let there = problem.hamiltonian_flow(&s, 3.0).unwrap();
        let back = problem.hamiltonian_flow(&there, -3.0).unwrap();
        let a = [s.x.as_slice(), &[s.q.s_x, s.q.s_y, s.q.alpha, s.q.beta], &s.p].concat();
        let b = [back.x.as_slice(), &[back.q.s_x, back.q.s_y, back.q.alpha, back.q.beta], &back.p].concat();
        let scale = a.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let err = a.iter().zip(&b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max) / scale;
        assert!(err < 1e-7, "{} reversal error {err:e}", metric.name());
        assert_eq!(back.tau, 0.0);
    }
}

#[test]
fn endpoint_error_follows_the_step_control_order() {
    // Dormand–Prince 8(5,3) with per-step error control: the global error
    // scales like tol^{8/9}.
    let (m, hbar, s0): (f64, f64, f64) = (1.0, 1.0, 1.0);
    let tau_end = 20.0;
    let exact = s0 * s0 + (hbar * tau_end / (2.0 * m * s0)).powi(2);
    let mut points = Vec::new();
    for tol in [1e-5, 1e-6, 1e-7, 1e-8] {
        let mut problem = FlowProblem::new(MetricField::minkowski(1.0), m, hbar, Mode::Quantum);
        problem.tol.rtol = tol;
        problem.tol.atol = tol;
        let s = problem.on_shell(&at_rest([0.0; 4], &CanonicalChart::from_parts(
            CanonicalChart::vacuum(s0, s0, hbar).coords(),
            &[0.0, 0.0, 0.0, 0.0, hbar / 2f64.sqrt(), 0.0],
            hbar,
        )))
        .unwrap();
        let end = problem.hamiltonian_flow(&s, tau_end).unwrap();
        let err = (end.moments()[idx::XX] - exact).abs() / exact;
        points.push((tol.ln(), err.ln()));
    }
    let n = points.len() as f64;
    let (mx, my) = (points.iter().map(|p| p.0).sum::<f64>() / n, points.iter().map(|p| p.1).sum::<f64>() / n);
    let slope = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / points.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    println!("error-vs-tolerance slope {slope:.3}");
    assert!(slope > 0.6 && slope < 1.2, "slope {slope}");
}

#[test]
fn proper_time_functional() {
    let problem = FlowProblem::new(MetricField::minkowski(1.0), 1.0, 1.0, Mode::Quantum);
    let s = problem.on_shell(&at_rest([0.0; 4], &CanonicalChart::vacuum(1.0, 1.0, 1.0))).unwrap();
    let mut record = problem.integrate(&s, 4.0, 100, 1).unwrap();
    assert!((record.proper_time().unwrap() - 4.0).abs() < 1e-9 * 4.0);
    let eps = 0.01;
    for smp in &mut record.samples {
        smp.h_q = eps * problem.mc2();
    }
    assert!((record.proper_time().unwrap() - 4.0 * (1.0 - 2.0 * eps).sqrt()).abs() < 1e-12);
    for smp in &mut record.samples {
        smp.h_q = 0.6 * problem.mc2();
    }
    assert!(matches!(record.proper_time(), Err(qfinsler_core::Error::Imaginary(_))));
}

#[test]
fn reprojection_restores_the_shell() {
    let mut problem = FlowProblem::new(MetricField::schwarzschild_isotropic(1.0, 1.0), 1.0, 1.0, Mode::Quantum);
    problem.tol.rtol = 1e-6;
    problem.tol.atol = 1e-6;
    problem.tol.constraint_tol = 1.0;
    let s = problem
        .on_shell(&ExtendedState::from_chart([0.0, 30.0, 0.0, 0.0], &CanonicalChart::vacuum(1.0, 1.0, 1.0), [0.0, 0.2, 0.0]))
        .unwrap();
    let free = problem.integrate(&s, 60.0, 6, 1).unwrap();
    problem.tol.reproject_tol = Some(1e-12);
    let fixed = problem.integrate(&s, 60.0, 6, 1).unwrap();
    println!("drift without reprojection {:e}", free.drift.max_constraint);
    assert_eq!(free.stats.reprojections, 0);
    assert!(fixed.stats.reprojections > 0);
    assert!(fixed.drift.max_constraint < free.drift.max_constraint, "{:e} vs {:e}", fixed.drift.max_constraint, free.drift.max_constraint);
    assert!(fixed.samples.windows(2).all(|w| w[1].tau > w[0].tau));
    assert_eq!(fixed.samples.len(), 7);
}

#[test]
fn clocks_with_different_spreads_age_differently() {
    let metric = MetricField::weak_field(qfinsler_core::Potential::linear([0.0, 0.0, 0.01]), 1.0);
    let problem = FlowProblem::new(metric, 1.0, 1.0, Mode::Quantum);
    let mut elapsed = Vec::new();
    for s0 in [0.5, 2.0] {
        let s = problem.on_shell(&at_rest([0.0; 4], &CanonicalChart::vacuum(s0, s0, 1.0))).unwrap();
        let hit = problem.advance_to_event(&s, 20.0, 40, |st| st.x[0] - 10.0).unwrap();
        assert!((hit.x[0] - 10.0).abs() < 1e-10);
        elapsed.push(hit.tau);
    }
    assert!((elapsed[0] - elapsed[1]).abs() > 1e-6, "{elapsed:?}");
}
