use std::sync::Arc;

use crate::error::{invalid, require_finite, require_nonnegative, require_positive, Result};
use crate::levy_field::LevyMeasure;
use crate::term_structure::{DensityModel, DensityScheme, JumpSign, ThetaGrid};

/// Parameters of the bond-price experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    /// Pricing date.
    pub t: f64,
    /// Bond maturity.
    pub maturity: f64,
    /// Constant short rate.
    pub r: f64,
    /// Recovery of face value.
    pub recovery: f64,
    pub b: f64,
    pub zeta: f64,
    pub varpi: f64,
    pub lambda_bar: f64,
    pub sigma: f64,
    pub n_paths: usize,
    /// Maturity-grid spacing.
    pub delta: f64,
    pub delta_t: f64,
    /// Truncation of the maturity grid; `None` means `10 / λ̄`.
    pub theta_max: Option<f64>,
    pub seed: u64,
    pub sign: JumpSign,
    pub scheme: DensityScheme,
    /// Maturities at which `α_t(θ)` is recorded on every path.
    pub probes: Vec<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            t: 0.5,
            maturity: 1.0,
            r: 0.05,
            recovery: 0.4,
            b: 1.0,
            zeta: 10.0,
            varpi: 1e-3,
            lambda_bar: 0.1,
            sigma: 0.001,
            n_paths: 10_000,
            delta: 0.01,
            delta_t: 0.01,
            theta_max: None,
            seed: 20_240_601,
            sign: JumpSign::Positive,
            scheme: DensityScheme::Exponential,
            probes: vec![0.6, 1.0, 5.0],
        }
    }
}

fn on_lattice(name: &'static str, value: f64, step: f64) -> Result<usize> {
    let n = (value / step).round();
    if (n * step - value).abs() > 1e-9 * step.max(value.abs()) {
        return Err(invalid(name, format!("{value} is not a multiple of {step}")));
    }
    Ok(n as usize)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(invalid("n_paths", "at least one path required"));
        }
        require_positive("delta", self.delta)?;
        require_positive("delta_t", self.delta_t)?;
        require_nonnegative("t", self.t)?;
        require_positive("maturity", self.maturity)?;
        if self.maturity <= self.t {
            return Err(invalid("maturity", "must exceed t"));
        }
        require_finite("r", self.r)?;
        if !(0.0..=1.0).contains(&self.recovery) {
            return Err(invalid("recovery", format!("must lie in [0, 1], got {}", self.recovery)));
        }
        require_nonnegative("b", self.b)?;
        require_nonnegative("zeta", self.zeta)?;
        require_nonnegative("varpi", self.varpi)?;
        require_positive("lambda_bar", self.lambda_bar)?;
        require_nonnegative("sigma", self.sigma)?;
        on_lattice("t", self.t, self.delta_t)?;
        on_lattice("t", self.t, self.delta)?;
        on_lattice("maturity", self.maturity, self.delta)?;
        let tmax = self.theta_max();
        require_positive("theta_max", tmax)?;
        if tmax < self.maturity {
            return Err(invalid("theta_max", "must not be below the maturity"));
        }
        for &p in &self.probes {
            if !(p >= self.t && p <= tmax) {
                return Err(invalid("probes", format!("{p} outside [t, theta_max]")));
            }
        }
        Ok(())
    }

    pub fn theta_max(&self) -> f64 {
        self.theta_max.unwrap_or(10.0 / self.lambda_bar)
    }

    pub fn n_steps(&self) -> usize {
        (self.t / self.delta_t).round() as usize
    }

    pub fn grid(&self) -> Result<Arc<ThetaGrid>> {
        Ok(Arc::new(ThetaGrid::new(self.delta, self.theta_max())?))
    }

    pub fn measure(&self) -> Result<LevyMeasure> {
        LevyMeasure::exponential(self.zeta, self.varpi)
    }

    pub fn density_model(&self) -> Result<DensityModel> {
        DensityModel::new(
            self.sigma,
            self.b,
            self.lambda_bar,
            self.measure()?,
            self.sign,
            self.scheme,
        )
    }

    /// `B(t, T)`.
    pub fn discount(&self) -> f64 {
        (-self.r * (self.maturity - self.t)).exp()
    }
}
