use super::coefficients::{CoefficientSpec, IntensityModel};
use super::curve::{csp, ForwardCurveState};
use super::density::DensityCurveState;
use crate::error::Result;
use crate::levy_field::FieldDraw;

/// `S_t = S_t(t)` read off a density curve.
pub fn azema_survival(state: &DensityCurveState) -> f64 {
    state.grid.interpolate(&state.survival, state.t)
}

/// `S_t = S_t(t)` read off an intensity curve.
pub fn azema_survival_from_intensity(state: &ForwardCurveState) -> Result<f64> {
    Ok(state.grid.interpolate(&csp(state)?, state.t))
}

/// Accumulates `exp(-∫_0^t λ_s(s) ds) 𝓔(M)_t` along a simulated intensity path.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AzemaTracker {
    pub int_lambda: f64,
    pub log_stochastic_exponential: f64,
}

impl AzemaTracker {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records the step that is about to be applied to `state` with `draw`.
    pub fn record(&mut self, state: &ForwardCurveState, model: &IntensityModel, draw: &FieldDraw) {
        let t = state.t;
        let dt = draw.dt;
        let spec = &model.spec;
        self.int_lambda += state.grid.interpolate(&state.lambda, t) * dt;

        let i_sig: Vec<f64> = model
            .plan
            .nodes()
            .iter()
            .map(|x| spec.integrated_sigma(t, t, x))
            .collect();
        let gauss = -draw.gaussian(&i_sig);
        let quad = dt * model.plan.quadratic_form(&i_sig, &i_sig);
        let jumps: f64 = draw
            .jumps
            .iter()
            .map(|j| -spec.integrated_gamma(t, t, j.mark))
            .sum();
        let comp = dt
            * model
                .measure
                .integrate(|x| -(-spec.integrated_gamma(t, t, x)).exp_m1());
        self.log_stochastic_exponential += gauss - 0.5 * quad + jumps + comp;
    }

    pub fn decomposition(&self) -> f64 {
        (self.log_stochastic_exponential - self.int_lambda).exp()
    }

    /// `|S_t - e^{-∫λ_s(s) ds} 𝓔(M)_t|`.
    pub fn residual(&self, state: &ForwardCurveState) -> Result<f64> {
        Ok((azema_survival_from_intensity(state)? - self.decomposition()).abs())
    }
}

/// Whether the coefficients vanish on `θ < t`, sampled on a grid up to `horizon`.
pub fn immersion_holds(
    spec: &CoefficientSpec,
    nodes: &[Vec<f64>],
    marks: &[f64],
    horizon: f64,
    samples: usize,
    tolerance: f64,
) -> bool {
    let n = samples.max(2);
    let h = horizon / n as f64;
    for a in 1..=n {
        let t = a as f64 * h;
        for b in 0..a {
            let th = b as f64 * h;
            if nodes.iter().any(|x| spec.sigma_at(t, th, x).abs() > tolerance) {
                return false;
            }
            if marks.iter().any(|m| spec.gamma_at(t, th, *m).abs() > tolerance) {
                return false;
            }
        }
    }
    true
}
