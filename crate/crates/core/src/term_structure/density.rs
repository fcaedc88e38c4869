use std::sync::Arc;

use super::curve::ThetaGrid;
use crate::error::{require_finite, require_nonnegative, Result};
use crate::levy_field::{FieldDraw, LevyMeasure};

/// Sign `s` of the jump terms in `dm` and `dM`.
///
/// `Positive` makes survival curves jump up and intensities jump down;
/// `Negative` is the sign implied by writing the density through a
/// nonnegative intensity jump, and the two routes then coincide.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum JumpSign {
    #[default]
    Positive,
    Negative,
}

impl JumpSign {
    pub fn value(self) -> f64 {
        match self {
            Self::Positive => 1.0,
            Self::Negative => -1.0,
        }
    }
}

/// Time stepping for the density dynamics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DensityScheme {
    /// Product form, exact for coefficients frozen over a step.
    #[default]
    Exponential,
    /// Plain Euler on `dα = α dM - S dm`, `dS = S dM`.
    Euler,
}

/// Density model with ramp coefficients `σ(θ-t)^+` and `b(θ-t)^+ ξ` and a scalar driver.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityModel {
    pub sigma: f64,
    pub b: f64,
    pub lambda_bar: f64,
    pub measure: LevyMeasure,
    pub sign: JumpSign,
    pub scheme: DensityScheme,
}

/// Coefficients of one θ-slice at one time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SliceCoefficients {
    /// `σ_t(θ)`.
    pub sigma: f64,
    /// `I_σ(t, θ)`.
    pub int_sigma: f64,
    /// `γ_t(θ)`, the loading multiplying the mark.
    pub gamma: f64,
    /// `Γ = I_γ(t, θ, ξ) / ξ`.
    pub big_gamma: f64,
    /// `∫ γ ξ e^{-ξΓ} ν(dξ)`.
    pub comp_m: f64,
    /// `∫ (1 - e^{-ξΓ}) ν(dξ)`.
    pub comp_big_m: f64,
}

impl DensityModel {
    pub fn new(
        sigma: f64,
        b: f64,
        lambda_bar: f64,
        measure: LevyMeasure,
        sign: JumpSign,
        scheme: DensityScheme,
    ) -> Result<Self> {
        require_finite("sigma", sigma)?;
        require_nonnegative("b", b)?;
        require_finite("lambda_bar", lambda_bar)?;
        Ok(Self {
            sigma,
            b,
            lambda_bar,
            measure,
            sign,
            scheme,
        })
    }

    pub fn slice(&self, t: f64, theta: f64) -> SliceCoefficients {
        let u = (theta - t).max(0.0);
        let big_gamma = 0.5 * self.b * u * u;
        let gamma = self.b * u;
        let (comp_m, comp_big_m) = if u > 0.0 && !self.measure.is_zero() {
            (
                gamma * self.measure.tilted_first_moment(big_gamma),
                self.measure.laplace_mass(big_gamma),
            )
        } else {
            (0.0, 0.0)
        };
        SliceCoefficients {
            sigma: self.sigma * u,
            int_sigma: 0.5 * self.sigma * u * u,
            gamma,
            big_gamma,
            comp_m,
            comp_big_m,
        }
    }
}

/// `α_t(·)`, `S_t(·)` and `λ_t(·)` on the maturity grid.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityCurveState {
    pub t: f64,
    pub grid: Arc<ThetaGrid>,
    pub alpha: Vec<f64>,
    pub survival: Vec<f64>,
    pub intensity: Vec<f64>,
    /// Number of `(step, θ)` cells where α went negative.
    pub negative_alpha: usize,
}

impl DensityCurveState {
    /// Flat initial intensity `λ̄`.
    pub fn initial(model: &DensityModel, grid: Arc<ThetaGrid>) -> Self {
        let l = model.lambda_bar;
        let survival: Vec<f64> = grid.points().map(|th| (-l * th).exp()).collect();
        Self {
            t: 0.0,
            alpha: survival.iter().map(|s| s * l).collect(),
            intensity: vec![l; survival.len()],
            survival,
            grid,
            negative_alpha: 0,
        }
    }
}

/// Intensity jump caused by a mark with `e = e^{-ξΓ}` under sign `s`.
fn intensity_jump(sign: JumpSign, gamma: f64, mark: f64, e: f64) -> f64 {
    match sign {
        JumpSign::Negative => gamma * mark,
        JumpSign::Positive => -gamma * mark * e / (2.0 - e),
    }
}

/// Advances the density curve one step with a scalar driver.
pub fn evolve_density_direct(
    mut state: DensityCurveState,
    model: &DensityModel,
    draw: &FieldDraw,
) -> DensityCurveState {
    step_density(&mut state, model, draw);
    state
}

pub fn step_density(state: &mut DensityCurveState, model: &DensityModel, draw: &FieldDraw) {
    let t = state.t;
    let dt = draw.dt;
    let dw = draw.gaussian_flat(1.0);
    let s = model.sign.value();
    for (i, th) in state.grid.points().enumerate() {
        let c = model.slice(t, th);
        let (alpha, surv, lam) = (state.alpha[i], state.survival[i], state.intensity[i]);
        let (na, ns, nl) = match model.scheme {
            DensityScheme::Euler => {
                let mut jump_big_m = 0.0;
                let mut jump_m = 0.0;
                for j in &draw.jumps {
                    let e = (-j.mark * c.big_gamma).exp();
                    jump_big_m += 1.0 - e;
                    jump_m += c.gamma * j.mark * e;
                }
                let d_big_m = -c.int_sigma * dw + s * (jump_big_m - c.comp_big_m * dt);
                let d_m = -c.sigma * dw + s * (jump_m - c.comp_m * dt);
                let na = alpha + alpha * d_big_m - surv * d_m;
                let ns = surv + surv * d_big_m;
                (na, ns, if ns != 0.0 { na / ns } else { lam })
            }
            DensityScheme::Exponential => {
                let mut factor = (-c.int_sigma * dw
                    - 0.5 * c.int_sigma * c.int_sigma * dt
                    - s * c.comp_big_m * dt)
                    .exp();
                let mut nl = lam + c.sigma * dw + (s * c.comp_m + c.sigma * c.int_sigma) * dt;
                for j in &draw.jumps {
                    let e = (-j.mark * c.big_gamma).exp();
                    factor *= 1.0 + s * (1.0 - e);
                    nl += intensity_jump(model.sign, c.gamma, j.mark, e);
                }
                let ns = surv * factor;
                (ns * nl, ns, nl)
            }
        };
        if na < 0.0 {
            state.negative_alpha += 1;
        }
        state.alpha[i] = na;
        state.survival[i] = ns;
        state.intensity[i] = nl;
    }
    state.t = t + dt;
}
