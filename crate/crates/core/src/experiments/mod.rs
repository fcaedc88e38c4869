//! Monte Carlo bond-price experiments on simulated default densities.

mod config;
mod harness;
mod kde;
mod stats;
mod sweep;

pub use config::ExperimentConfig;
pub use harness::{
    density_path, density_path_fast, intensity_path, run_price_distribution,
    run_price_distribution_with_workers, PathOutcome, PriceDistribution,
};
pub use kde::{kde, padded_grid, silverman_bandwidth};
pub use stats::{summarize, Summary};
pub use sweep::{sweep, SweepAxis, SweepRow};

#[cfg(test)]
mod tests;
