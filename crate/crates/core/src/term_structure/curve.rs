use std::sync::Arc;

use super::coefficients::IntensityModel;
use super::drift::{jump_compensator, mc_drift, DriftTable};
use crate::error::{require_positive, Error, Result};
use crate::levy_field::FieldDraw;

/// Smallest allowed `-∫λ` before the survival curve is considered to overflow.
pub const SURVIVAL_EXPONENT_FLOOR: f64 = -700.0;

/// Uniform maturity grid `θ_i = iΔ`, `i = 0..=n`.
#[derive(Clone, Debug, PartialEq)]
pub struct ThetaGrid {
    delta: f64,
    n: usize,
}

impl ThetaGrid {
    pub fn new(delta: f64, theta_max: f64) -> Result<Self> {
        require_positive("delta_theta", delta)?;
        require_positive("theta_max", theta_max)?;
        let n = (theta_max / delta).round() as usize;
        if n == 0 {
            return Err(crate::error::invalid("theta_max", "must exceed delta_theta"));
        }
        Ok(Self { delta, n })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Index of the last node.
    pub fn last(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn theta(&self, i: usize) -> f64 {
        i as f64 * self.delta
    }

    pub fn theta_max(&self) -> f64 {
        self.theta(self.n)
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.n).map(|i| self.theta(i))
    }

    /// Nearest index to `θ`, clamped to the grid.
    pub fn index_of(&self, theta: f64) -> usize {
        ((theta / self.delta).round().max(0.0) as usize).min(self.n)
    }

    /// Linear interpolation of grid values at `θ`, flat beyond the ends.
    pub fn interpolate(&self, values: &[f64], theta: f64) -> f64 {
        let x = (theta / self.delta).clamp(0.0, self.n as f64);
        let i = (x.floor() as usize).min(self.n.saturating_sub(1));
        let w = x - i as f64;
        values[i] * (1.0 - w) + values[i + 1] * w
    }
}

/// `λ_t(·)` on the maturity grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardCurveState {
    pub t: f64,
    pub grid: Arc<ThetaGrid>,
    pub lambda: Vec<f64>,
    pub path: u64,
    /// Number of `(step, θ)` cells where λ went negative.
    pub negative_count: usize,
}

impl ForwardCurveState {
    pub fn initial(model: &IntensityModel, grid: Arc<ThetaGrid>, path: u64) -> Self {
        let lambda = grid.points().map(|th| model.spec.lambda0(th)).collect();
        Self {
            t: 0.0,
            grid,
            lambda,
            path,
            negative_count: 0,
        }
    }
}

/// Conditional survival probabilities `S_t(θ) = exp(-∫_0^θ λ_t)`.
pub fn csp(state: &ForwardCurveState) -> Result<Vec<f64>> {
    survival_from_intensity(&state.lambda, state.grid.delta())
}

fn survival_from_intensity(lambda: &[f64], delta: f64) -> Result<Vec<f64>> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(lambda.len());
    for (i, l) in lambda.iter().enumerate() {
        if i > 0 {
            acc += 0.5 * delta * (lambda[i - 1] + l);
        }
        if -acc > -SURVIVAL_EXPONENT_FLOOR {
            return Err(Error::SurvivalOverflow(-acc));
        }
        out.push((-acc).exp());
    }
    Ok(out)
}

/// Default density `α_t(θ) = S_t(θ) λ_t(θ)`.
pub fn density(state: &ForwardCurveState) -> Result<Vec<f64>> {
    Ok(csp(state)?
        .into_iter()
        .zip(&state.lambda)
        .map(|(s, l)| s * l)
        .collect())
}

/// Advances `λ` over one step with a precomputed drift row.
pub fn step_intensity(
    state: &mut ForwardCurveState,
    model: &IntensityModel,
    mu: &[f64],
    compensator: &[f64],
    draw: &FieldDraw,
) {
    let t = state.t;
    let dt = draw.dt;
    let spec = &model.spec;
    let flat = spec.sigma_is_flat();
    let flat_noise = draw.gaussian_flat(1.0);
    let nodes = model.plan.nodes();
    let mut sig = vec![0.0; nodes.len()];
    for (i, th) in state.grid.points().enumerate() {
        let gauss = if flat {
            spec.sigma_at(t, th, &[]) * flat_noise
        } else {
            for (s, x) in sig.iter_mut().zip(nodes) {
                *s = spec.sigma_at(t, th, x);
            }
            draw.gaussian(&sig)
        };
        let jumps: f64 = draw.jumps.iter().map(|j| spec.gamma_at(t, th, j.mark)).sum();
        let l = &mut state.lambda[i];
        *l += mu[i] * dt + gauss + jumps - compensator[i] * dt;
        if *l < 0.0 {
            state.negative_count += 1;
            if model.clamp_at_zero {
                *l = 0.0;
            }
        }
    }
    state.t = t + dt;
}

/// Advances `λ` over one step, computing the drift on the fly.
pub fn evolve_intensity(
    mut state: ForwardCurveState,
    model: &IntensityModel,
    draw: &FieldDraw,
) -> ForwardCurveState {
    let t = state.t;
    let mu: Vec<f64> = state.grid.points().map(|th| mc_drift(model, t, th)).collect();
    let comp: Vec<f64> = state
        .grid
        .points()
        .map(|th| jump_compensator(model, t, th))
        .collect();
    step_intensity(&mut state, model, &mu, &comp, draw);
    state
}

/// Advances with row `k` of a shared drift table.
pub fn evolve_intensity_tabled(
    state: &mut ForwardCurveState,
    model: &IntensityModel,
    table: &DriftTable,
    k: usize,
    draw: &FieldDraw,
) {
    step_intensity(state, model, table.mu(k), table.compensator(k), draw);
}
