use std::fmt;
use std::str::FromStr;

use super::config::ExperimentConfig;
use super::harness::run_price_distribution;
use super::stats::summarize;
use crate::error::{invalid, Error, Result};
use crate::rng::derive_seed;

/// Parameter varied across sweep cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SweepAxis {
    Varpi,
    Lambda,
    /// Pricing date `t`.
    Time,
    /// Maturity `T`.
    Maturity,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            Self::Varpi => "varpi",
            Self::Lambda => "lambda",
            Self::Time => "t",
            Self::Maturity => "T",
        }
    }

    fn apply(self, config: &mut ExperimentConfig, value: f64) {
        match self {
            Self::Varpi => config.varpi = value,
            Self::Lambda => config.lambda_bar = value,
            Self::Time => config.t = value,
            Self::Maturity => config.maturity = value,
        }
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "varpi" => Ok(Self::Varpi),
            "lambda" | "lambda_bar" => Ok(Self::Lambda),
            "t" => Ok(Self::Time),
            "T" | "maturity" => Ok(Self::Maturity),
            other => Err(invalid("axis", format!("unknown sweep axis `{other}`"))),
        }
    }
}

/// One cell of a sweep table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub mean: f64,
    pub se: f64,
    pub flagged_fraction: f64,
    pub rejected: usize,
}

/// Mean price for each value of `axis`, each cell on its own seed derived from `config.seed`.
pub fn sweep(config: &ExperimentConfig, axis: SweepAxis, values: &[f64]) -> Result<Vec<SweepRow>> {
    if values.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(invalid("values", "sweep values must be sorted"));
    }
    values
        .iter()
        .enumerate()
        .map(|(cell, &value)| {
            let mut c = config.clone();
            axis.apply(&mut c, value);
            c.seed = derive_seed(config.seed, cell as u64);
            let dist = run_price_distribution(&c)?;
            let s = summarize(&dist.prices());
            Ok(SweepRow {
                value,
                mean: s.mean,
                se: s.se,
                flagged_fraction: dist.flagged_fraction(),
                rejected: dist.rejected(),
            })
        })
        .collect()
}
