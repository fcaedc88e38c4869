use std::sync::Arc;

use super::coefficients::{IntensityModel, JumpLoading};
use super::curve::ThetaGrid;

/// Gaussian and jump parts of the drift that keeps every `S_t(θ)` a martingale.
pub fn mc_drift_parts(model: &IntensityModel, t: f64, theta: f64) -> (f64, f64) {
    let spec = &model.spec;
    let gaussian = if spec.sigma_is_flat() {
        spec.sigma_at(t, theta, &[]) * spec.integrated_sigma(t, theta, &[]) * model.flat_mass()
    } else {
        let nodes = model.plan.nodes();
        let s: Vec<f64> = nodes.iter().map(|x| spec.sigma_at(t, theta, x)).collect();
        let i: Vec<f64> = nodes
            .iter()
            .map(|x| spec.integrated_sigma(t, theta, x))
            .collect();
        model.plan.quadratic_form(&s, &i)
    };
    let jump = match spec.gamma {
        JumpLoading::Zero => 0.0,
        JumpLoading::Ramp(b) => {
            let u = (theta - t).max(0.0);
            let big_gamma = 0.5 * b * u * u;
            let m = &model.measure;
            b * u * (m.first_moment() - m.tilted_first_moment(big_gamma))
        }
        JumpLoading::Custom(_) => model.measure.integrate(|x| {
            spec.gamma_at(t, theta, x) * -(-spec.integrated_gamma(t, theta, x)).exp_m1()
        }),
    };
    (gaussian, jump)
}

/// `μ_t(θ)`.
pub fn mc_drift(model: &IntensityModel, t: f64, theta: f64) -> f64 {
    let (g, j) = mc_drift_parts(model, t, theta);
    g + j
}

/// `∫ γ_t(θ, ξ) ν(dξ)`, the compensator rate of the jump term.
pub fn jump_compensator(model: &IntensityModel, t: f64, theta: f64) -> f64 {
    let spec = &model.spec;
    match spec.gamma {
        JumpLoading::Zero => 0.0,
        JumpLoading::Ramp(b) => b * (theta - t).max(0.0) * model.measure.first_moment(),
        JumpLoading::Custom(_) => model.measure.integrate(|x| spec.gamma_at(t, theta, x)),
    }
}

/// Drift and compensator on a `(t_k, θ_i)` grid, computed once and shared by all paths.
#[derive(Clone, Debug)]
pub struct DriftTable {
    pub dt: f64,
    pub n_steps: usize,
    pub grid: Arc<ThetaGrid>,
    /// Multiplier applied to the drift; 1 except in perturbation studies.
    pub scale: f64,
    mu: Vec<f64>,
    comp: Vec<f64>,
}

impl DriftTable {
    pub fn new(model: &IntensityModel, grid: Arc<ThetaGrid>, dt: f64, n_steps: usize) -> Self {
        Self::scaled(model, grid, dt, n_steps, 1.0)
    }

    pub fn scaled(
        model: &IntensityModel,
        grid: Arc<ThetaGrid>,
        dt: f64,
        n_steps: usize,
        scale: f64,
    ) -> Self {
        let m = grid.len();
        let mut mu = Vec::with_capacity(n_steps * m);
        let mut comp = Vec::with_capacity(n_steps * m);
        for k in 0..n_steps {
            let t = k as f64 * dt;
            for th in grid.points() {
                mu.push(scale * mc_drift(model, t, th));
                comp.push(jump_compensator(model, t, th));
            }
        }
        Self {
            dt,
            n_steps,
            grid,
            scale,
            mu,
            comp,
        }
    }

    /// Drift at step `k` for every θ-node.
    pub fn mu(&self, k: usize) -> &[f64] {
        let m = self.grid.len();
        &self.mu[k * m..(k + 1) * m]
    }

    pub fn compensator(&self, k: usize) -> &[f64] {
        let m = self.grid.len();
        &self.comp[k * m..(k + 1) * m]
    }
}
