//! Lévy random fields: a kernel-correlated Gaussian field plus a compensated
//! finite-activity Poisson random measure.

mod kernel;
mod measure;
mod plan;

pub use kernel::{default_cutoff, kernel_matrix, CorrelationKernel, KernelKind};
pub use measure::{
    compensated_integral, sample_jumps, sample_jumps_with, Jump, LevyMeasure, MeasureKind, DEFAULT_QUADRATURE_NODES,
};
pub use plan::{Discretization, FieldDraw, FieldIncrementPlan};
