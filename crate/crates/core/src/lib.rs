//! Quasiclassical dynamics of a quantum test particle on a curved background:
//! second-order moments of two quantized modes, their canonical chart, the
//! quantum-corrected geodesic Hamiltonian and its 4th-root Finsler geometry.

pub mod chart;
pub mod dispersion;
pub mod dynamics;
pub mod error;
pub mod finsler;
pub mod info;
pub mod metric;
pub mod moments;
pub mod sampling;
pub mod scenario;
pub mod validation;

pub use chart::{CanonicalChart, ChartCoords, ChartInversion, SingleModeChart};
pub use dynamics::{ExtendedState, FlowProblem, Mode, Sample, Tolerances, TrajectoryRecord};
pub use error::{Error, Result};
pub use finsler::{ExtendedMomentum, FinslerTensors};
pub use info::{GaussianParams, InfoReport};
pub use metric::{MetricConfig, MetricEval, MetricField, MetricKind, Potential};
pub use moments::{CovarianceMatrix, MomentState, Ordering, PhysicalityReport, SymplecticForm};

/// Real scalar usable both as `f64` and as a forward-mode dual number.
pub trait Scalar: num_dual::DualNum<Primitive = f64> + Copy {}

impl<T: num_dual::DualNum<Primitive = f64> + Copy> Scalar for T {}
