//! Pricing kernels as solutions of a two-factor partial integro-differential equation.

mod coefficients;
mod grid;
mod kernels;
mod operators;
mod solver;

pub use coefficients::{
    compute_coefficients, GaussianShift, JumpCompensator, JumpNode, OperatorCoefficients,
    PideModel,
};
pub use grid::{GridFunction, StateGrid, MIN_NODES};
pub use kernels::{
    kernel_k_breve, kernel_k_tilde, AxisRange, Damping, KernelConfig, KernelSolver, Terminal,
};
pub use operators::apply_jump_operator;
pub use solver::{solve_cauchy, solve_cauchy_with_report, SolveReport, SolverSettings, HV_THETA};
