//! Fixed inputs shared by the benchmarks.

use qfinsler_core::sampling::{self, ChartSampling};
use qfinsler_core::{CanonicalChart, ExtendedState, FlowProblem, MetricField, Mode};

/// A generic chart away from every coordinate singularity.
pub fn chart(hbar: f64) -> CanonicalChart {
    sampling::random_chart(&mut sampling::rng(7), &ChartSampling { hbar, ..ChartSampling::default() })
}

/// On-shell state at rest at r = 20 GM/c² in isotropic Schwarzschild.
pub fn infall(mode: Mode, hbar: f64) -> (FlowProblem, ExtendedState) {
    let problem = FlowProblem::new(MetricField::schwarzschild_isotropic(1.0, 1.0), 1.0, hbar, mode);
    let start = ExtendedState::from_chart([0.0, 18.986_832_980_505_138, 0.0, 0.0], &chart(hbar), [0.0; 3]);
    let start = problem.on_shell(&start).expect("on-shell start");
    (problem, start)
}
