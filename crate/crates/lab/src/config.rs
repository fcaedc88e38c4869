//! The run configuration: a TOML document with one table per module.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use levy_credit::experiments::{ExperimentConfig, SweepAxis};
use levy_credit::levy_field::{CorrelationKernel, Discretization, FieldIncrementPlan, LevyMeasure};
use levy_credit::pide::{
    Damping, GaussianShift, JumpCompensator, KernelConfig, PideModel, SolverSettings,
};
use levy_credit::pricing::RecoveryModel;
use levy_credit::rates::{DiscountFormula, RateModel, RatesMode, VasicekSpec};
use levy_credit::term_structure::{CoefficientSpec, DensityScheme, IntensityModel, JumpSign};
use levy_credit::verification::SuiteSettings;

/// A configuration problem, located by section and key.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{}{message}", location(.section, .key))]
pub struct ConfigError {
    pub section: Option<String>,
    pub key: Option<String>,
    pub message: String,
}

fn location(section: &Option<String>, key: &Option<String>) -> String {
    match (section, key) {
        (Some(s), Some(k)) => format!("[{s}] {k}: "),
        (Some(s), None) => format!("[{s}] "),
        (None, Some(k)) => format!("{k}: "),
        (None, None) => String::new(),
    }
}

impl ConfigError {
    fn at(section: &str, key: &str, message: impl fmt::Display) -> Self {
        Self {
            section: Some(section.into()),
            key: Some(key.into()),
            message: message.to_string(),
        }
    }

    fn section(section: &str, message: impl fmt::Display) -> Self {
        Self {
            section: Some(section.into()),
            key: None,
            message: message.to_string(),
        }
    }
}

/// Maps a library error to the section that produced the offending value.
fn lib(section: &'static str) -> impl Fn(levy_credit::Error) -> ConfigError {
    move |e| match e {
        levy_credit::Error::InvalidParameter { name, reason } => ConfigError::at(section, name, reason),
        other => ConfigError::section(section, other),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Dirac,
    Riesz,
    FractionalTime,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelSection {
    pub kind: KernelKind,
    /// Weight of the Dirac kernel.
    pub c0: f64,
    /// Riesz exponent.
    pub alpha: f64,
    /// Hurst index of the fractional-time kernel.
    pub hurst: f64,
    /// Number of ξ-nodes; 1 gives a scalar driver.
    pub nodes: usize,
    pub domain: [f64; 2],
    pub cutoff: Option<f64>,
}

impl Default for KernelSection {
    fn default() -> Self {
        Self {
            kind: KernelKind::Dirac,
            c0: 1.0,
            alpha: 0.5,
            hurst: 0.75,
            nodes: 1,
            domain: [0.0, 1.0],
            cutoff: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureKind {
    Zero,
    Exponential,
    PointMass,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LevyMeasureSection {
    pub kind: MeasureKind,
    pub zeta: f64,
    pub varpi: f64,
    /// Mass of the point-mass measure.
    pub z: f64,
    pub quadrature_nodes: usize,
}

impl Default for LevyMeasureSection {
    fn default() -> Self {
        Self {
            kind: MeasureKind::Exponential,
            zeta: 10.0,
            varpi: 1e-3,
            z: 1.0,
            quadrature_nodes: 32,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JumpSignConvention {
    Section7,
    Section3,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Exponential,
    Euler,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub sigma: f64,
    pub b: f64,
    pub lambda_bar: f64,
    /// Maturity-grid spacing.
    pub delta: f64,
    pub delta_t: f64,
    /// Defaults to `10 / lambda_bar`.
    pub theta_max: Option<f64>,
    pub jump_sign_convention: JumpSignConvention,
    pub scheme: Scheme,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            sigma: 0.001,
            b: 1.0,
            lambda_bar: 0.1,
            delta: 0.01,
            delta_t: 0.01,
            theta_max: None,
            jump_sign_convention: JumpSignConvention::Section7,
            scheme: Scheme::Exponential,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RatesKind {
    Constant,
    Vasicek,
    VasicekJumps,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VasicekFormula {
    Standard,
    PaperExact,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RatesSection {
    pub mode: RatesKind,
    /// Constant short rate.
    pub r: f64,
    pub kappa: f64,
    pub delta: f64,
    pub r0: f64,
    pub rho0: f64,
    pub phi0: f64,
    pub correlated: bool,
    pub vasicek_formula: VasicekFormula,
}

impl Default for RatesSection {
    fn default() -> Self {
        Self {
            mode: RatesKind::Constant,
            r: 0.05,
            kappa: 0.5,
            delta: 0.05,
            r0: 0.03,
            rho0: 0.05,
            phi0: 0.0,
            correlated: true,
            vasicek_formula: VasicekFormula::Standard,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShiftSign {
    Girsanov,
    Reversed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Compensator {
    Plain,
    Tilted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalKind {
    One,
    Intensity,
    DampedIntensity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PideSection {
    pub nx: usize,
    pub ny: usize,
    pub n_steps: usize,
    pub ridge_eps: f64,
    pub picard: bool,
    pub gaussian_shift: ShiftSign,
    pub compensator: Compensator,
    /// Kernel solved by `lab pide`.
    pub terminal: TerminalKind,
    pub theta: f64,
}

impl Default for PideSection {
    fn default() -> Self {
        Self {
            nx: 128,
            ny: 128,
            n_steps: 200,
            ridge_eps: 1e-8,
            picard: false,
            gaussian_shift: ShiftSign::Girsanov,
            compensator: Compensator::Plain,
            terminal: TerminalKind::Intensity,
            theta: 1.5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecoveryKind {
    Constant,
    IntensityLinked,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PricingSection {
    pub t: f64,
    pub maturity: f64,
    pub recovery: f64,
    pub recovery_model: RecoveryKind,
    pub w0: f64,
    pub w1: f64,
    /// Slope `c` of the damping `f(y) = c y`.
    pub damping: f64,
    pub theta_stride: usize,
    /// Paths simulated by `lab price` and `lab simulate`.
    pub paths: usize,
}

impl Default for PricingSection {
    fn default() -> Self {
        Self {
            t: 0.5,
            maturity: 1.0,
            recovery: 0.4,
            recovery_model: RecoveryKind::Constant,
            w0: 0.4,
            w1: 0.0,
            damping: 0.0,
            theta_stride: 10,
            paths: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub varpi: Vec<f64>,
    pub lambda: Vec<f64>,
    pub t: Vec<f64>,
    #[serde(rename = "T")]
    pub maturity: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            varpi: vec![0.0, 2e-4, 6e-4, 1e-3, 2e-3],
            lambda: vec![0.01, 0.03, 0.1, 0.3],
            t: vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
            maturity: vec![],
        }
    }
}

impl SweepSection {
    pub fn axes(&self) -> Vec<(SweepAxis, &[f64])> {
        [
            (SweepAxis::Varpi, self.varpi.as_slice()),
            (SweepAxis::Lambda, self.lambda.as_slice()),
            (SweepAxis::Time, self.t.as_slice()),
            (SweepAxis::Maturity, self.maturity.as_slice()),
        ]
        .into_iter()
        .filter(|(_, v)| !v.is_empty())
        .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub n_paths: usize,
    pub seed: u64,
    pub probes: Vec<f64>,
    pub kde_points: usize,
    pub mc_paths: usize,
    pub sweep: SweepSection,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            n_paths: 10_000,
            seed: 20_240_601,
            probes: vec![0.6, 1.0, 5.0],
            kde_points: 512,
            mc_paths: 100_000,
            sweep: SweepSection::default(),
        }
    }
}

/// The whole run configuration. Every table and key is optional.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabConfig {
    pub kernel: KernelSection,
    pub levy_measure: LevyMeasureSection,
    pub model: ModelSection,
    pub rates: RatesSection,
    pub pide: PideSection,
    pub pricing: PricingSection,
    pub experiment: ExperimentSection,
}

/// Reads and validates a configuration file.
pub fn parse_config(path: &Path) -> Result<LabConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        section: None,
        key: None,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<LabConfig, ConfigError> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError {
        section: None,
        key: None,
        message: e.to_string(),
    })?;
    let config: LabConfig =
        serde_path_to_error::deserialize(toml::Value::Table(table)).map_err(|e| {
            let path = e.path().to_string();
            let mut parts = path.splitn(2, '.');
            let section = parts.next().filter(|s| !s.is_empty() && *s != ".");
            let key = parts.next();
            ConfigError {
                section: section.map(String::from),
                key: key.map(String::from),
                message: e.into_inner().to_string(),
            }
        })?;
    config.validate()?;
    Ok(config)
}

pub fn to_toml(config: &LabConfig) -> String {
    toml::to_string(config).expect("configuration serializes")
}

impl LabConfig {
    /// Builds every component once so that inconsistent values surface before a run.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.plan()?;
        self.measure()?;
        self.intensity_model()?;
        self.rate_model()?;
        self.recovery()?;
        self.path_config()?
            .validate()
            .map_err(|e| match e {
                levy_credit::Error::InvalidParameter { name, reason } => {
                    let section = match name {
                        "n_paths" | "probes" => "experiment",
                        "t" | "maturity" | "recovery" => "pricing",
                        "r" => "rates",
                        "zeta" | "varpi" => "levy_measure",
                        _ => "model",
                    };
                    ConfigError::at(section, name, reason)
                }
                other => ConfigError::section("experiment", other),
            })?;
        // TOML integers are signed
        if self.experiment.seed > i64::MAX as u64 {
            return Err(ConfigError::at("experiment", "seed", "must be below 2^63"));
        }
        if self.pricing.theta_stride == 0 {
            return Err(ConfigError::at("pricing", "theta_stride", "positive integer required"));
        }
        if self.pide.nx < levy_credit::pide::MIN_NODES || self.pide.ny < levy_credit::pide::MIN_NODES {
            return Err(ConfigError::section(
                "pide",
                format!("nx and ny must be at least {}", levy_credit::pide::MIN_NODES),
            ));
        }
        if self.pide.n_steps == 0 {
            return Err(ConfigError::at("pide", "n_steps", "positive integer required"));
        }
        for (axis, values) in self.experiment.sweep.axes() {
            if values.windows(2).any(|w| !(w[0] <= w[1])) {
                return Err(ConfigError::at("experiment", &format!("sweep.{axis}"), "values must be sorted"));
            }
        }
        Ok(())
    }

    pub fn plan(&self) -> Result<FieldIncrementPlan, ConfigError> {
        let k = &self.kernel;
        let m = lib("kernel");
        let dt = self.model.delta_t;
        if k.nodes == 0 {
            return Err(ConfigError::at("kernel", "nodes", "positive integer required"));
        }
        if k.nodes == 1 && k.kind == KernelKind::Dirac {
            return FieldIncrementPlan::scalar(k.c0, dt).map_err(m);
        }
        let grid = Discretization::midpoints(k.domain[0], k.domain[1], k.nodes).map_err(&m)?;
        let kernel = match k.kind {
            KernelKind::Dirac => CorrelationKernel::dirac(k.c0, 1),
            KernelKind::Riesz => CorrelationKernel::riesz(k.alpha, 1, k.cutoff),
            KernelKind::FractionalTime => CorrelationKernel::fractional_time(k.hurst, k.cutoff),
        }
        .map_err(&m)?;
        FieldIncrementPlan::new(kernel, grid, dt).map_err(m)
    }

    pub fn measure(&self) -> Result<LevyMeasure, ConfigError> {
        let s = &self.levy_measure;
        let m = lib("levy_measure");
        match s.kind {
            MeasureKind::Zero => Ok(LevyMeasure::zero()),
            MeasureKind::Exponential => {
                if !(s.zeta > 0.0 && s.zeta.is_finite()) {
                    return Err(ConfigError::at("levy_measure", "zeta", format!("positive real required, got {}", s.zeta)));
                }
                LevyMeasure::exponential_with_nodes(s.zeta, s.varpi, s.quadrature_nodes).map_err(m)
            }
            MeasureKind::PointMass => LevyMeasure::point_mass(s.z).map_err(m),
        }
    }

    pub fn sign(&self) -> JumpSign {
        match self.model.jump_sign_convention {
            JumpSignConvention::Section7 => JumpSign::Positive,
            JumpSignConvention::Section3 => JumpSign::Negative,
        }
    }

    pub fn intensity_model(&self) -> Result<IntensityModel, ConfigError> {
        let md = &self.model;
        let spec = CoefficientSpec::ramp(md.sigma, md.b, md.lambda_bar).map_err(lib("model"))?;
        IntensityModel::new(spec, self.plan()?, self.measure()?).map_err(lib("model"))
    }

    pub fn formula(&self) -> DiscountFormula {
        match self.rates.vasicek_formula {
            VasicekFormula::Standard => DiscountFormula::Standard,
            VasicekFormula::PaperExact => DiscountFormula::PaperExact,
        }
    }

    pub fn vasicek(&self) -> Result<VasicekSpec, ConfigError> {
        let r = &self.rates;
        VasicekSpec::new(r.kappa, r.delta, r.r0, r.rho0, r.phi0).map_err(lib("rates"))
    }

    pub fn rate_model(&self) -> Result<RateModel, ConfigError> {
        let r = &self.rates;
        let mode = match r.mode {
            RatesKind::Constant => {
                if !r.r.is_finite() {
                    return Err(ConfigError::at("rates", "r", "finite real required"));
                }
                RatesMode::Constant { r: r.r }
            }
            RatesKind::Vasicek => RatesMode::Vasicek(self.vasicek()?),
            RatesKind::VasicekJumps => RatesMode::VasicekJumps(self.vasicek()?),
        };
        Ok(RateModel::new(mode, &self.plan()?, self.measure()?, r.correlated))
    }

    pub fn pide_model(&self) -> Result<PideModel, ConfigError> {
        let mut m = PideModel::new(self.intensity_model()?, self.rate_model()?);
        m.gaussian_shift = match self.pide.gaussian_shift {
            ShiftSign::Girsanov => GaussianShift::Girsanov,
            ShiftSign::Reversed => GaussianShift::Reversed,
        };
        m.compensator = match self.pide.compensator {
            Compensator::Plain => JumpCompensator::Plain,
            Compensator::Tilted => JumpCompensator::Tilted,
        };
        Ok(m)
    }

    pub fn kernel_config(&self) -> KernelConfig {
        let p = &self.pide;
        KernelConfig {
            nx: p.nx,
            ny: p.ny,
            settings: SolverSettings {
                n_steps: p.n_steps,
                ridge_eps: p.ridge_eps,
                picard: p.picard,
                ..SolverSettings::default()
            },
            ..KernelConfig::default()
        }
    }

    pub fn damping(&self) -> Damping {
        if self.pricing.damping == 0.0 {
            Damping::Zero
        } else {
            Damping::Linear(self.pricing.damping)
        }
    }

    pub fn recovery(&self) -> Result<RecoveryModel, ConfigError> {
        let p = &self.pricing;
        match p.recovery_model {
            RecoveryKind::Constant => RecoveryModel::constant(p.recovery).map_err(lib("pricing")),
            RecoveryKind::IntensityLinked => {
                RecoveryModel::intensity_linked(p.w0, p.w1, self.damping()).map_err(|e| match e {
                    levy_credit::Error::InvalidParameter { reason, .. } => ConfigError::section("pricing", reason),
                    other => ConfigError::section("pricing", other),
                })
            }
        }
    }

    /// Experiment settings for the constant-rate harness.
    pub fn experiment_config(&self) -> Result<ExperimentConfig, ConfigError> {
        if self.rates.mode != RatesKind::Constant {
            return Err(ConfigError::at("rates", "mode", "experiments need constant rates"));
        }
        self.path_config()
    }

    /// Grid, noise and curve settings shared by every simulated path. The rate
    /// only enters the constant-rate discount factor.
    pub fn path_config(&self) -> Result<ExperimentConfig, ConfigError> {
        let (md, ms, ex, pr) = (&self.model, &self.levy_measure, &self.experiment, &self.pricing);
        let (zeta, varpi) = match ms.kind {
            MeasureKind::Exponential => (ms.zeta, ms.varpi),
            MeasureKind::Zero => (0.0, 0.0),
            MeasureKind::PointMass => {
                return Err(ConfigError::at("levy_measure", "kind", "experiments need the exponential measure"))
            }
        };
        let r = match self.rates.mode {
            RatesKind::Constant => self.rates.r,
            _ => self.rates.r0,
        };
        Ok(ExperimentConfig {
            t: pr.t,
            maturity: pr.maturity,
            r,
            recovery: pr.recovery,
            b: md.b,
            zeta,
            varpi,
            lambda_bar: md.lambda_bar,
            sigma: md.sigma,
            n_paths: ex.n_paths,
            delta: md.delta,
            delta_t: md.delta_t,
            theta_max: md.theta_max,
            seed: ex.seed,
            sign: self.sign(),
            scheme: match md.scheme {
                Scheme::Exponential => DensityScheme::Exponential,
                Scheme::Euler => DensityScheme::Euler,
            },
            probes: ex.probes.clone(),
        })
    }

    pub fn suite_settings(&self) -> Result<SuiteSettings, ConfigError> {
        Ok(SuiteSettings {
            experiment: self.path_config()?,
            vasicek: self.vasicek()?,
            tau: 2.0,
            formula: self.formula(),
            mc_paths: self.experiment.mc_paths,
        })
    }
}
