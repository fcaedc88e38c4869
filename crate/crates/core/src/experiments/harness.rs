use std::sync::Arc;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::stats::{summarize, Summary};
use crate::error::{invalid, Result};
use crate::levy_field::{FieldDraw, FieldIncrementPlan, LevyMeasure};
use crate::pricing::price_pre_default_independent;
use crate::rng::PathStreams;
use crate::term_structure::{
    evolve_intensity, step_density, CoefficientSpec, DensityCurveState, DensityModel,
    DensityScheme, ForwardCurveState, IntensityModel, JumpSign, ThetaGrid,
};

/// Below this `e^{-ξΓ}` the factor `2 - e` rounds to 2 and the intensity jump is negligible.
const SATURATION: f64 = 1e-20;
/// Steps of the `e`-recurrence between exact re-evaluations.
const REANCHOR: usize = 64;

/// Result of one simulated path.
#[derive(Clone, Debug, PartialEq)]
pub struct PathOutcome {
    pub path: u64,
    /// `None` when the integral denominator was not positive.
    pub price: Option<f64>,
    /// α went negative somewhere on `[t, θ_max]`.
    pub flagged: bool,
    /// `α_t` at the configured probe maturities.
    pub probes: Vec<f64>,
}

/// Prices and diagnostics of all paths, in path order.
#[derive(Clone, Debug, PartialEq)]
pub struct PriceDistribution {
    pub outcomes: Vec<PathOutcome>,
    pub probe_thetas: Vec<f64>,
    /// `α_0` at the probe maturities.
    pub initial_probes: Vec<f64>,
}

impl PriceDistribution {
    /// Prices of the accepted paths.
    pub fn prices(&self) -> Vec<f64> {
        self.outcomes.iter().filter_map(|o| o.price).collect()
    }

    pub fn rejected(&self) -> usize {
        self.outcomes.iter().filter(|o| o.price.is_none()).count()
    }

    pub fn flagged(&self) -> usize {
        self.outcomes.iter().filter(|o| o.flagged).count()
    }

    pub fn flagged_fraction(&self) -> f64 {
        self.flagged() as f64 / self.outcomes.len().max(1) as f64
    }

    /// Path statistics of `α_t` at probe `i`.
    pub fn probe_summary(&self, i: usize) -> Summary {
        let xs: Vec<f64> = self.outcomes.iter().map(|o| o.probes[i]).collect();
        summarize(&xs)
    }
}

/// Per-configuration tables shared by all paths.
struct Harness {
    config: ExperimentConfig,
    model: DensityModel,
    plan: FieldIncrementPlan,
    grid: Arc<ThetaGrid>,
    /// First grid index with `θ ≥ t`; every slice from there on is active at every step.
    start: usize,
    /// `-λ̄θ - Σ_k (½ I_σ² + s c_M) Δt` for `θ ≥ t`.
    det_log: Vec<f64>,
    /// `λ̄ + Σ_k (s c_m + σ I_σ) Δt` for `θ ≥ t`.
    det_lambda: Vec<f64>,
    probe_index: Vec<usize>,
}

#[derive(Default)]
struct Scratch {
    log_s: Vec<f64>,
    lambda: Vec<f64>,
    product: Vec<f64>,
    saturated: Vec<u32>,
    alpha: Vec<f64>,
}

impl Harness {
    fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let model = config.density_model()?;
        let grid = config.grid()?;
        let plan = FieldIncrementPlan::scalar(1.0, config.delta_t)?;
        let start = (config.t / config.delta).round() as usize;
        let n = grid.len() - start;
        let s = model.sign.value();
        let dt = config.delta_t;
        let mut det_log = Vec::with_capacity(n);
        let mut det_lambda = Vec::with_capacity(n);
        for i in start..grid.len() {
            let th = grid.theta(i);
            let (mut dl, mut dm) = (-model.lambda_bar * th, model.lambda_bar);
            for k in 0..config.n_steps() {
                let c = model.slice(k as f64 * dt, th);
                dl -= (0.5 * c.int_sigma * c.int_sigma + s * c.comp_big_m) * dt;
                dm += (s * c.comp_m + c.sigma * c.int_sigma) * dt;
            }
            det_log.push(dl);
            det_lambda.push(dm);
        }
        let probe_index = config.probes.iter().map(|&p| grid.index_of(p)).collect();
        Ok(Self {
            config: config.clone(),
            model,
            plan,
            grid,
            start,
            det_log,
            det_lambda,
            probe_index,
        })
    }

    fn draws(&self, path: u64) -> Result<Vec<FieldDraw>> {
        let dt = self.config.delta_t;
        let mut streams = PathStreams::new(self.config.seed, path);
        (0..self.config.n_steps())
            .map(|k| FieldDraw::sample(&self.plan, &self.model.measure, k as f64 * dt, dt, &mut streams))
            .collect()
    }

    /// `α_t` and `S_t(θ_max)` from the whole path at once.
    ///
    /// Every slice with `θ ≥ t` is active at all steps, so the Gaussian sums are
    /// quadratic in `θ - t` and only the jump factors need a sweep over the grid.
    fn terminal_fast(&self, draws: &[FieldDraw], sc: &mut Scratch) -> f64 {
        let cfg = &self.config;
        let (sigma, b, d) = (self.model.sigma, self.model.b, self.grid.delta());
        let n = self.det_log.len();
        let t = cfg.t;
        let (mut q0, mut q1, mut q2) = (0.0, 0.0, 0.0);
        for dr in draws {
            let dw = dr.gaussian_flat(1.0);
            let v = t - dr.t;
            q0 += dw;
            q1 += v * dw;
            q2 += v * v * dw;
        }
        let w_of = |j: usize| self.grid.theta(self.start + j) - t;
        sc.log_s.clear();
        sc.lambda.clear();
        for j in 0..n {
            let w = w_of(j);
            sc.log_s.push(self.det_log[j] - 0.5 * sigma * (w * w * q0 + 2.0 * w * q1 + q2));
            sc.lambda.push(self.det_lambda[j] + sigma * (w * q0 + q1));
        }
        let jumps = draws.iter().flat_map(|dr| dr.jumps.iter().map(move |j| (t - dr.t, j.mark)));
        let has_jumps = b > 0.0 && draws.iter().any(|dr| !dr.jumps.is_empty());
        sc.product.clear();
        sc.product.resize(n, 1.0);
        match self.model.sign {
            JumpSign::Negative if has_jumps => {
                let (mut j0, mut j1, mut j2) = (0.0, 0.0, 0.0);
                for (v, x) in jumps {
                    j0 += x;
                    j1 += x * v;
                    j2 += x * v * v;
                }
                for j in 0..n {
                    let w = w_of(j);
                    sc.log_s[j] -= 0.5 * b * (w * w * j0 + 2.0 * w * j1 + j2);
                    sc.lambda[j] += b * (w * j0 + j1);
                }
            }
            JumpSign::Positive if has_jumps => {
                sc.saturated.clear();
                sc.saturated.resize(n + 1, 0);
                for (v, x) in jumps {
                    let c = x * b;
                    let q = (-c * d * d).exp();
                    let mut j = 0;
                    let (mut e, mut r) = (0.0, 0.0);
                    while j < n {
                        let u = w_of(j) + v;
                        if j % REANCHOR == 0 {
                            e = (-0.5 * c * u * u).exp();
                            r = (-c * (u * d + 0.5 * d * d)).exp();
                        }
                        if e < SATURATION {
                            break;
                        }
                        let f = 2.0 - e;
                        sc.product[j] *= f;
                        sc.lambda[j] -= c * u * e / f;
                        e *= r;
                        r *= q;
                        j += 1;
                    }
                    sc.saturated[j] += 1;
                }
                let mut count = 0;
                for j in 0..n {
                    count += sc.saturated[j];
                    if count > 0 {
                        sc.product[j] *= 2f64.powi(count as i32);
                    }
                }
            }
            _ => {}
        }
        sc.alpha.clear();
        sc.alpha.resize(self.start, 0.0);
        for j in 0..n {
            sc.alpha.push(sc.log_s[j].exp() * sc.product[j] * sc.lambda[j]);
        }
        sc.log_s[n - 1].exp() * sc.product[n - 1]
    }

    fn outcome(&self, path: u64, sc: &mut Scratch) -> Result<PathOutcome> {
        let draws = self.draws(path)?;
        let tail = match self.model.scheme {
            DensityScheme::Exponential => self.terminal_fast(&draws, sc),
            DensityScheme::Euler => {
                let st = self.step_through(&draws);
                sc.alpha.clear();
                sc.alpha.extend_from_slice(&st.alpha);
                st.survival[self.grid.last()]
            }
        };
        let cfg = &self.config;
        let alpha = &sc.alpha;
        let flagged = alpha[self.start..].iter().any(|a| *a < 0.0);
        let first = self.start + 1;
        let total = alpha[first..].iter().sum::<f64>() * self.grid.delta() + tail;
        let price = if total > 0.0 && total.is_finite() {
            Some(price_pre_default_independent(
                &self.grid,
                cfg.t,
                cfg.maturity,
                alpha,
                tail,
                cfg.recovery,
                cfg.discount(),
            )?)
        } else {
            None
        };
        Ok(PathOutcome {
            path,
            price,
            flagged,
            probes: self.probe_index.iter().map(|&i| alpha[i]).collect(),
        })
    }

    fn step_through(&self, draws: &[FieldDraw]) -> DensityCurveState {
        let mut st = DensityCurveState::initial(&self.model, self.grid.clone());
        for dr in draws {
            step_density(&mut st, &self.model, dr);
        }
        st
    }

    fn run(&self) -> Result<PriceDistribution> {
        let outcomes = (0..self.config.n_paths as u64)
            .into_par_iter()
            .map_init(Scratch::default, |sc, p| self.outcome(p, sc))
            .collect::<Result<Vec<_>>>()?;
        let l = self.model.lambda_bar;
        Ok(PriceDistribution {
            outcomes,
            probe_thetas: self.probe_index.iter().map(|&i| self.grid.theta(i)).collect(),
            initial_probes: self
                .probe_index
                .iter()
                .map(|&i| l * (-l * self.grid.theta(i)).exp())
                .collect(),
        })
    }
}

/// Simulates `config.n_paths` density curves up to `t` and prices the bond on each.
pub fn run_price_distribution(config: &ExperimentConfig) -> Result<PriceDistribution> {
    Harness::new(config)?.run()
}

/// As [`run_price_distribution`] on a dedicated pool of `workers` threads.
pub fn run_price_distribution_with_workers(
    config: &ExperimentConfig,
    workers: usize,
) -> Result<PriceDistribution> {
    let harness = Harness::new(config)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| invalid("workers", e.to_string()))?;
    pool.install(|| harness.run())
}

/// The density curve of one path at `t`, stepped one increment at a time.
pub fn density_path(config: &ExperimentConfig, path: u64) -> Result<DensityCurveState> {
    let h = Harness::new(config)?;
    let draws = h.draws(path)?;
    Ok(h.step_through(&draws))
}

/// `α_t` of one path from the aggregated route; entries below `t` are zero.
pub fn density_path_fast(config: &ExperimentConfig, path: u64) -> Result<Vec<f64>> {
    let h = Harness::new(config)?;
    let draws = h.draws(path)?;
    let mut sc = Scratch::default();
    h.terminal_fast(&draws, &mut sc);
    Ok(sc.alpha)
}

/// The forward intensity of one path on the same noise, for cross-validation.
pub fn intensity_path(config: &ExperimentConfig, path: u64) -> Result<ForwardCurveState> {
    let h = Harness::new(config)?;
    let spec = CoefficientSpec::ramp(config.sigma, config.b, config.lambda_bar)?;
    let measure: LevyMeasure = h.model.measure.clone();
    let model = IntensityModel::new(spec, h.plan.clone(), measure)?;
    let mut st = ForwardCurveState::initial(&model, h.grid.clone(), path);
    for dr in h.draws(path)? {
        st = evolve_intensity(st, &model, &dr);
    }
    Ok(st)
}
