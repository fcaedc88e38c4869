use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, require_finite, require_nonnegative, Result};
use crate::levy_field::{FieldIncrementPlan, LevyMeasure};

/// `σ_t(θ, ξ)` for a general volatility field.
pub type SigmaFn = Arc<dyn Fn(f64, f64, &[f64]) -> f64 + Send + Sync>;
/// `γ_t(θ, ξ)` for a general jump loading; must be nonnegative.
pub type GammaFn = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;
/// `λ_0(θ)`.
pub type CurveFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum Volatility {
    Zero,
    /// `σ` at every `(t, θ)`.
    Constant(f64),
    /// `σ (θ - t)^+`.
    Ramp(f64),
    Custom(SigmaFn),
}

#[derive(Clone)]
pub enum JumpLoading {
    Zero,
    /// `b (θ - t)^+ ξ`.
    Ramp(f64),
    Custom(GammaFn),
}

#[derive(Clone)]
pub enum InitialCurve {
    Flat(f64),
    Custom(CurveFn),
}

impl fmt::Debug for Volatility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "Zero"),
            Self::Constant(s) => write!(f, "Constant({s})"),
            Self::Ramp(s) => write!(f, "Ramp({s})"),
            Self::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl fmt::Debug for JumpLoading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "Zero"),
            Self::Ramp(b) => write!(f, "Ramp({b})"),
            Self::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl fmt::Debug for InitialCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Flat(l) => write!(f, "Flat({l})"),
            Self::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// Volatility, jump loading and initial curve of a forward intensity model.
#[derive(Clone, Debug)]
pub struct CoefficientSpec {
    pub sigma: Volatility,
    pub gamma: JumpLoading,
    pub initial: InitialCurve,
    /// Trapezoid panels for cumulative integrals of custom coefficients.
    pub quad_panels: usize,
}

impl CoefficientSpec {
    pub fn new(sigma: Volatility, gamma: JumpLoading, initial: InitialCurve) -> Result<Self> {
        match sigma {
            Volatility::Constant(s) | Volatility::Ramp(s) => {
                require_finite("sigma", s)?;
            }
            _ => {}
        }
        if let JumpLoading::Ramp(b) = gamma {
            require_nonnegative("b", b)?;
        }
        if let InitialCurve::Flat(l) = initial {
            require_finite("lambda_bar", l)?;
        }
        Ok(Self {
            sigma,
            gamma,
            initial,
            quad_panels: 200,
        })
    }

    /// The ramp coefficients used in the numerical experiments.
    pub fn ramp(sigma: f64, b: f64, lambda_bar: f64) -> Result<Self> {
        Self::new(
            Volatility::Ramp(sigma),
            JumpLoading::Ramp(b),
            InitialCurve::Flat(lambda_bar),
        )
    }

    pub fn sigma_at(&self, t: f64, theta: f64, xi: &[f64]) -> f64 {
        match &self.sigma {
            Volatility::Zero => 0.0,
            Volatility::Constant(s) => *s,
            Volatility::Ramp(s) => s * (theta - t).max(0.0),
            Volatility::Custom(f) => f(t, theta, xi),
        }
    }

    /// Whether `σ` does not depend on `ξ`.
    pub fn sigma_is_flat(&self) -> bool {
        !matches!(self.sigma, Volatility::Custom(_))
    }

    pub fn gamma_at(&self, t: f64, theta: f64, mark: f64) -> f64 {
        match &self.gamma {
            JumpLoading::Zero => 0.0,
            JumpLoading::Ramp(b) => b * (theta - t).max(0.0) * mark,
            JumpLoading::Custom(f) => f(t, theta, mark),
        }
    }

    pub fn lambda0(&self, theta: f64) -> f64 {
        match &self.initial {
            InitialCurve::Flat(l) => *l,
            InitialCurve::Custom(f) => f(theta),
        }
    }

    /// `I_σ(t, θ, ξ) = ∫_0^θ σ_t(v, ξ) dv`.
    pub fn integrated_sigma(&self, t: f64, theta: f64, xi: &[f64]) -> f64 {
        match &self.sigma {
            Volatility::Zero => 0.0,
            Volatility::Constant(s) => s * theta,
            Volatility::Ramp(s) => {
                let u = (theta - t).max(0.0);
                0.5 * s * u * u
            }
            Volatility::Custom(f) => self.panel_integral(theta, |v| f(t, v, xi)),
        }
    }

    /// `I_γ(t, θ, ξ) = ∫_0^θ γ_t(v, ξ) dv`.
    pub fn integrated_gamma(&self, t: f64, theta: f64, mark: f64) -> f64 {
        match &self.gamma {
            JumpLoading::Zero => 0.0,
            JumpLoading::Ramp(b) => {
                let u = (theta - t).max(0.0);
                0.5 * b * u * u * mark
            }
            JumpLoading::Custom(f) => self.panel_integral(theta, |v| f(t, v, mark)),
        }
    }

    /// Both cumulative integrals at a scalar ξ.
    pub fn cumulative_integrals(&self, t: f64, theta: f64, xi: f64) -> (f64, f64) {
        (
            self.integrated_sigma(t, theta, &[xi]),
            self.integrated_gamma(t, theta, xi),
        )
    }

    fn panel_integral(&self, theta: f64, g: impl Fn(f64) -> f64) -> f64 {
        let n = self.quad_panels.max(1);
        let h = theta / n as f64;
        let inner: f64 = (1..n).map(|k| g(k as f64 * h)).sum();
        h * (inner + 0.5 * (g(0.0) + g(theta)))
    }

    /// Rejects negative jump loadings on a sample of `(t, θ, ξ)`.
    pub fn validate_on(&self, times: &[f64], thetas: &[f64], marks: &[f64]) -> Result<()> {
        for &t in times {
            for &th in thetas {
                for &m in marks {
                    let g = self.gamma_at(t, th, m);
                    if !(g >= 0.0) {
                        return Err(invalid(
                            "gamma",
                            format!("jump loading must be nonnegative, got {g} at t={t}, θ={th}, ξ={m}"),
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

/// A forward intensity model: coefficients plus the driving field.
#[derive(Clone, Debug)]
pub struct IntensityModel {
    pub spec: CoefficientSpec,
    pub plan: FieldIncrementPlan,
    pub measure: LevyMeasure,
    pub clamp_at_zero: bool,
    flat_mass: f64,
}

impl IntensityModel {
    pub fn new(spec: CoefficientSpec, plan: FieldIncrementPlan, measure: LevyMeasure) -> Result<Self> {
        let (marks, _) = measure.quadrature();
        let probe: Vec<f64> = (0..=20).map(|k| k as f64 * 0.5).collect();
        spec.validate_on(&probe, &probe, marks)?;
        let ones = vec![1.0; plan.len()];
        let flat_mass = plan.quadratic_form(&ones, &ones);
        Ok(Self {
            spec,
            plan,
            measure,
            clamp_at_zero: false,
            flat_mass,
        })
    }

    pub fn with_clamp(mut self, clamp: bool) -> Self {
        self.clamp_at_zero = clamp;
        self
    }

    /// `1ᵀ K_w 1`.
    pub fn flat_mass(&self) -> f64 {
        self.flat_mass
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ramp_integrals() {
        let s = CoefficientSpec::ramp(0.001, 1.0, 0.1).unwrap();
        assert!((s.integrated_sigma(0.0, 1.0, &[]) - 0.0005).abs() < 1e-18);
        assert_eq!(s.integrated_sigma(0.5, 0.4, &[]), 0.0);
        let (_, ig) = s.cumulative_integrals(0.5, 1.0, 2.0);
        assert!((ig - 0.25).abs() < 1e-15);
    }

    #[test]
    fn custom_integral_matches_closed_form() {
        let custom = CoefficientSpec::new(
            Volatility::Custom(Arc::new(|t, th, _| 0.001 * (th - t).max(0.0))),
            JumpLoading::Custom(Arc::new(|t, th, x| (th - t).max(0.0) * x)),
            InitialCurve::Flat(0.1),
        )
        .unwrap();
        let closed = CoefficientSpec::ramp(0.001, 1.0, 0.1).unwrap();
        let a = custom.integrated_sigma(0.0, 1.0, &[]);
        let b = closed.integrated_sigma(0.0, 1.0, &[]);
        assert!((a - b).abs() < 1e-12);
        // kink at θ = t falls between panels: trapezoid is still O(h²)
        let a = custom.integrated_gamma(0.3, 2.0, 1.0);
        let b = closed.integrated_gamma(0.3, 2.0, 1.0);
        assert!((a - b).abs() < 1e-4, "{a} {b}");
    }

    #[test]
    fn negative_gamma_rejected() {
        let s = CoefficientSpec::new(
            Volatility::Zero,
            JumpLoading::Custom(Arc::new(|_, _, x| -x)),
            InitialCurve::Flat(0.1),
        )
        .unwrap();
        assert!(s.validate_on(&[0.0], &[1.0], &[1.0]).is_err());
        assert!(CoefficientSpec::ramp(0.1, -1.0, 0.1).is_err());
    }
}
