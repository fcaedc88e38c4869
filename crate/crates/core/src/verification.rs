//! Monte Carlo oracles that check the closed forms, the martingale property and
//! the pricing equation against direct simulation.

use std::fmt;
use std::sync::Arc;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::experiments::{run_price_distribution, summarize, ExperimentConfig};
use crate::levy_field::{FieldDraw, FieldIncrementPlan, LevyMeasure};
use crate::pide::{GaussianShift, KernelConfig, KernelSolver, PideModel, Terminal};
use crate::rates::{evolve_rate, zcb_closed_form, DiscountFormula, RateModel, RatesMode, VasicekSpec};
use crate::rng::{stream, Channel, PathStreams};
use crate::term_structure::{
    csp, evolve_intensity_tabled, jump_compensator, mc_drift, CoefficientSpec, DriftTable,
    ForwardCurveState, IntensityModel, ThetaGrid,
};

/// A sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    pub fn from_sample(xs: &[f64]) -> Self {
        let s = summarize(xs);
        Self { mean: s.mean, se: s.se }
    }

    /// Distance to `target` in standard errors.
    pub fn z(&self, target: f64) -> f64 {
        (self.mean - target) / self.se
    }

    pub fn within(&self, target: f64, n_se: f64) -> bool {
        (self.mean - target).abs() <= n_se * self.se
    }
}

/// `E[e^{-∫_0^τ r}]` for a Vasicek rate, simulated with the exact joint law of
/// `(r_{k+1}, ∫_k^{k+1} r)` over `n_steps` steps; `ρ0` is the total volatility.
pub fn vasicek_zcb_mc(spec: &VasicekSpec, tau: f64, n_steps: usize, n_paths: usize, seed: u64) -> Estimate {
    let h = tau / n_steps as f64;
    let k = spec.kappa;
    let s2 = spec.rho0 * spec.rho0;
    let decay = (-k * h).exp();
    let b1 = -(-k * h).exp_m1() / k;
    let b2 = -(-2.0 * k * h).exp_m1() / (2.0 * k);
    let var_r = s2 * b2;
    let var_i = s2 * (h - 2.0 * b1 + b2) / (k * k);
    let cov = s2 * (b1 - b2) / k;
    // Cholesky of the 2x2 covariance
    let l11 = var_r.sqrt();
    let l21 = if l11 > 0.0 { cov / l11 } else { 0.0 };
    let l22 = (var_i - l21 * l21).max(0.0).sqrt();
    let xs: Vec<f64> = (0..n_paths as u64)
        .into_par_iter()
        .map(|p| {
            let mut rng = stream(seed, p, Channel::RateGaussian);
            let (mut r, mut int) = (spec.r0, 0.0);
            for _ in 0..n_steps {
                let z1: f64 = StandardNormal.sample(&mut rng);
                let z2: f64 = StandardNormal.sample(&mut rng);
                int += spec.delta * h + (r - spec.delta) * b1 + l21 * z1 + l22 * z2;
                r = spec.delta + (r - spec.delta) * decay + l11 * z1;
            }
            (-int).exp()
        })
        .collect();
    Estimate::from_sample(&xs)
}

/// Which closed-form exponent the simulated bond price supports.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Adjudication {
    pub mc: Estimate,
    pub standard: f64,
    pub paper_exact: f64,
    /// The only formula within 3 SE of the simulation, if exactly one is.
    pub winner: Option<DiscountFormula>,
}

impl Adjudication {
    pub fn value(&self, formula: DiscountFormula) -> f64 {
        match formula {
            DiscountFormula::Standard => self.standard,
            DiscountFormula::PaperExact => self.paper_exact,
        }
    }
}

pub fn adjudicate_discount_formula(spec: &VasicekSpec, tau: f64, n_paths: usize, seed: u64) -> Adjudication {
    let mc = vasicek_zcb_mc(spec, tau, 20, n_paths, seed);
    let a11 = spec.a11(1.0);
    let standard = zcb_closed_form(spec, a11, tau, spec.r0, DiscountFormula::Standard);
    let paper_exact = zcb_closed_form(spec, a11, tau, spec.r0, DiscountFormula::PaperExact);
    let winner = match (mc.within(standard, 3.0), mc.within(paper_exact, 3.0)) {
        (true, false) => Some(DiscountFormula::Standard),
        (false, true) => Some(DiscountFormula::PaperExact),
        _ => None,
    };
    Adjudication {
        mc,
        standard,
        paper_exact,
        winner,
    }
}

/// Mean of `S_t(θ)` on one `(t, θ)` cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MartingaleCell {
    pub t: f64,
    pub theta: f64,
    pub s0: f64,
    /// Plain sample mean of `S_t(θ)`.
    pub plain: Estimate,
    /// Mean of `S_t - S_0 C`, where `C = log(S_t/S_0) + D` removes the
    /// martingale noise and `D` is the accumulated drift used by the simulation.
    /// `E[C] = 0` for any drift, so this has the same mean as `S_t`.
    pub controlled: Estimate,
}

impl MartingaleCell {
    pub fn passes(&self, n_se: f64) -> bool {
        self.controlled.within(self.s0, n_se)
    }
}

/// Simulates the intensity route with the drift multiplied by `drift_scale` and
/// records `S_t(θ)` on every `(t, θ)` cell.
pub fn csp_martingale_check(
    model: &IntensityModel,
    times: &[f64],
    thetas: &[f64],
    dt: f64,
    drift_scale: f64,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<MartingaleCell>> {
    let t_max = times.iter().copied().fold(0.0, f64::max);
    let th_max = thetas.iter().copied().fold(0.0, f64::max);
    let grid = Arc::new(ThetaGrid::new(dt.min(0.01), th_max)?);
    let n_steps = (t_max / dt).round() as usize;
    let table = DriftTable::scaled(model, grid.clone(), dt, n_steps, drift_scale);
    let step_of: Vec<usize> = times.iter().map(|t| (t / dt).round() as usize).collect();
    if step_of.contains(&0) {
        return Err(invalid("times", "must be positive"));
    }
    let idx: Vec<usize> = thetas.iter().map(|&th| grid.index_of(th)).collect();
    let s0 = csp(&ForwardCurveState::initial(model, grid.clone(), 0))?;

    // D(k, θ) = ∫_0^θ Σ_{j<k} μ_j(v) dt dv
    let h = grid.delta();
    let mut cum = vec![0.0; grid.len()];
    let mut drift_used = vec![vec![0.0; idx.len()]; step_of.len()];
    for k in 0..n_steps {
        for (c, m) in cum.iter_mut().zip(table.mu(k)) {
            *c += m * dt;
        }
        for (ti, &ks) in step_of.iter().enumerate() {
            if ks == k + 1 {
                let mut acc = 0.0;
                let mut at = vec![0.0; grid.len()];
                for i in 1..grid.len() {
                    acc += 0.5 * h * (cum[i - 1] + cum[i]);
                    at[i] = acc;
                }
                drift_used[ti] = idx.iter().map(|&i| at[i]).collect();
            }
        }
    }

    let rows: Vec<Vec<(f64, f64)>> = (0..n_paths as u64)
        .into_par_iter()
        .map(|p| -> Result<Vec<(f64, f64)>> {
            let mut streams = PathStreams::new(seed, p);
            let mut st = ForwardCurveState::initial(model, grid.clone(), p);
            let mut out = vec![(0.0, 0.0); step_of.len() * idx.len()];
            for k in 0..n_steps {
                let draw = FieldDraw::sample(&model.plan, &model.measure, k as f64 * dt, dt, &mut streams)?;
                evolve_intensity_tabled(&mut st, model, &table, k, &draw);
                for (ti, &ks) in step_of.iter().enumerate() {
                    if ks == k + 1 {
                        let s = csp(&st)?;
                        for (j, &i) in idx.iter().enumerate() {
                            let c = (s[i] / s0[i]).ln() + drift_used[ti][j];
                            out[ti * idx.len() + j] = (s[i], s[i] - s0[i] * c);
                        }
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut cells = Vec::new();
    for (ti, &t) in times.iter().enumerate() {
        for (j, &i) in idx.iter().enumerate() {
            let col = ti * idx.len() + j;
            let plain: Vec<f64> = rows.iter().map(|r| r[col].0).collect();
            let ctrl: Vec<f64> = rows.iter().map(|r| r[col].1).collect();
            cells.push(MartingaleCell {
                t,
                theta: grid.theta(i),
                s0: s0[i],
                plain: Estimate::from_sample(&plain),
                controlled: Estimate::from_sample(&ctrl),
            });
        }
    }
    Ok(cells)
}

/// `E^θ[ψ(λ_T(θ)) e^{-∫_t^T r}]` started from each `(r, λ)` in `probes`, by
/// simulating under the original measure and weighting with `S_T(θ) / S_t(θ)`.
///
/// The field must be scalar (a single ξ-node).
#[allow(clippy::too_many_arguments)]
pub fn kernel_mc(
    model: &PideModel,
    terminal: &Terminal,
    t: f64,
    maturity: f64,
    theta: f64,
    probes: &[(f64, f64)],
    n_steps: usize,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<Estimate>> {
    let im = &model.intensity;
    if im.plan.len() != 1 {
        return Err(invalid("plan", "the kernel oracle needs a scalar field"));
    }
    if probes.is_empty() || maturity <= t {
        return Err(invalid("probes", "need at least one probe and T > t"));
    }
    let spec = &im.spec;
    let m = im.flat_mass();
    let h = (maturity - t) / n_steps as f64;
    struct Row {
        sigma: f64,
        int_sigma: f64,
        mu: f64,
        comp: f64,
        laplace: f64,
    }
    let rows: Vec<Row> = (0..n_steps)
        .map(|k| {
            let s = t + (k as f64 + 0.5) * h;
            Row {
                sigma: spec.sigma_at(s, theta, &[]),
                int_sigma: spec.integrated_sigma(s, theta, &[]),
                mu: mc_drift(im, s, theta),
                comp: jump_compensator(im, s, theta),
                laplace: im
                    .measure
                    .integrate(|x| -(-spec.integrated_gamma(s, theta, x)).exp_m1()),
            }
        })
        .collect();
    let (r_base, kappa) = match model.rates.mode {
        RatesMode::Constant { r } => (r, 0.0),
        RatesMode::Vasicek(v) | RatesMode::VasicekJumps(v) => (probes[0].0, v.kappa),
    };
    let constant = matches!(model.rates.mode, RatesMode::Constant { .. });
    // trapezoid of e^{-κ(s-t)}: sensitivity of ∫r to the starting rate
    let sens: f64 = (0..n_steps)
        .map(|k| 0.5 * h * ((-kappa * k as f64 * h).exp() + (-kappa * (k + 1) as f64 * h).exp()))
        .sum();

    let samples: Vec<Vec<f64>> = (0..n_paths as u64)
        .into_par_iter()
        .map(|p| -> Result<Vec<f64>> {
            let mut streams = PathStreams::new(seed, p);
            let (mut dl, mut logw, mut r, mut int_r) = (0.0, 0.0, r_base, 0.0);
            for (k, row) in rows.iter().enumerate() {
                let s = t + k as f64 * h;
                let draw = FieldDraw::sample(&im.plan, &im.measure, s, h, &mut streams)?;
                let dw = draw.gaussian_flat(1.0);
                dl += row.sigma * dw + (row.mu - row.comp) * h;
                logw += -row.int_sigma * dw - 0.5 * row.int_sigma * row.int_sigma * m * h + row.laplace * h;
                for j in &draw.jumps {
                    dl += spec.gamma_at(j.time, theta, j.mark);
                    logw -= spec.integrated_gamma(j.time, theta, j.mark);
                }
                let next = if constant { r } else { evolve_rate(r, &model.rates, &draw, &mut streams)? };
                int_r += 0.5 * h * (r + next);
                r = next;
            }
            let w = logw.exp();
            Ok(probes
                .iter()
                .map(|&(r0, y)| {
                    let ir = if constant { r0 * (maturity - t) } else { int_r + (r0 - r_base) * sens };
                    w * terminal.eval(y + dl) * (-ir).exp()
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok((0..probes.len())
        .map(|i| Estimate::from_sample(&samples.iter().map(|s| s[i]).collect::<Vec<_>>()))
        .collect())
}

/// PIDE values of a kernel next to the Monte Carlo oracle at each probe.
#[allow(clippy::too_many_arguments)]
pub fn kernel_comparison(
    solver: &KernelSolver,
    terminal: &Terminal,
    t: f64,
    maturity: f64,
    theta: f64,
    probes: &[(f64, f64)],
    n_paths: usize,
    seed: u64,
) -> Result<Vec<(f64, Estimate)>> {
    let n_steps = ((maturity - t) / 0.01).round().max(1.0) as usize;
    let mc = kernel_mc(solver.model(), terminal, t, maturity, theta, probes, n_steps, n_paths, seed)?;
    let sol = solver.solve(terminal, t, maturity, theta)?;
    probes
        .iter()
        .zip(mc)
        .map(|(&(r, y), e)| Ok((sol.interpolate(r, y)?, e)))
        .collect()
}

/// Bond kernel `E^θ[e^{-∫r}]` from the PIDE under each sign of the Gaussian
/// correction in `δ̂`, next to the weighted Monte Carlo value.
///
/// Uses a strongly correlated model (ramp volatility 0.1, rate volatility 0.1,
/// `κ = 0.5`) so the two signs differ by many standard errors.
pub fn gaussian_shift_adjudication(n_paths: usize, seed: u64) -> Result<Vec<(GaussianShift, f64, Estimate)>> {
    let plan = FieldIncrementPlan::scalar(1.0, 0.01)?;
    let measure = LevyMeasure::exponential(10.0, 1e-3)?;
    let im = IntensityModel::new(CoefficientSpec::ramp(0.1, 1.0, 0.1)?, plan.clone(), measure.clone())?;
    let rates = RateModel::new(
        RatesMode::Vasicek(VasicekSpec::new(0.5, 0.05, 0.05, 0.1, 0.0)?),
        &plan,
        measure,
        true,
    );
    let probe = [(0.05, 0.1)];
    let mc = kernel_mc(
        &PideModel::new(im.clone(), rates.clone()),
        &Terminal::One,
        0.0,
        1.0,
        1.5,
        &probe,
        100,
        n_paths,
        seed,
    )?[0];
    [GaussianShift::Girsanov, GaussianShift::Reversed]
        .into_iter()
        .map(|shift| {
            let mut model = PideModel::new(im.clone(), rates.clone());
            model.gaussian_shift = shift;
            let solver = KernelSolver::new(model, KernelConfig::default());
            Ok((shift, solver.discount(0.0, 1.0, 1.5, probe[0].0, probe[0].1)?, mc))
        })
        .collect()
}

/// One line of a verification report.
#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn push(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
        Ok(())
    }
}

/// Inputs of the oracle suite.
#[derive(Clone, Debug, PartialEq)]
pub struct SuiteSettings {
    pub experiment: ExperimentConfig,
    pub vasicek: VasicekSpec,
    pub tau: f64,
    /// Formula the user intends to price with; the report says whether the oracle supports it.
    pub formula: DiscountFormula,
    pub mc_paths: usize,
}

impl Default for SuiteSettings {
    fn default() -> Self {
        Self {
            experiment: ExperimentConfig {
                n_paths: 2000,
                ..ExperimentConfig::default()
            },
            vasicek: VasicekSpec {
                kappa: 0.5,
                delta: 0.05,
                r0: 0.03,
                rho0: 0.05,
                phi0: 0.0,
            },
            tau: 2.0,
            formula: DiscountFormula::Standard,
            mc_paths: 100_000,
        }
    }
}

/// Deterministic baseline, discount-formula adjudication and density martingale checks.
pub fn run_suite(settings: &SuiteSettings) -> Report {
    let mut report = Report::default();
    let exp = &settings.experiment;

    let base = ExperimentConfig {
        sigma: 0.0,
        b: 0.0,
        n_paths: exp.n_paths.min(16),
        ..exp.clone()
    };
    let expect = base.discount()
        * (1.0
            - (1.0 - base.recovery) * (1.0 - (-base.lambda_bar * (base.maturity - base.t)).exp()));
    match run_price_distribution(&base) {
        Ok(d) => {
            let worst = d.prices().iter().map(|p| (p - expect).abs()).fold(0.0, f64::max);
            report.push(
                "deterministic_baseline",
                d.rejected() == 0 && worst < 1e-6,
                format!("expected {expect:.9}, max deviation {worst:.2e}"),
            );
        }
        Err(e) => report.push("deterministic_baseline", false, e.to_string()),
    }

    let adj = adjudicate_discount_formula(&settings.vasicek, settings.tau, settings.mc_paths, exp.seed);
    let chosen = adj.value(settings.formula);
    report.push(
        "vasicek_formula",
        adj.mc.within(chosen, 3.0),
        format!(
            "{:?}: closed form {:.8}, Monte Carlo {:.8} ± {:.1e} (z = {:.2}); oracle supports {}",
            settings.formula,
            chosen,
            adj.mc.mean,
            adj.mc.se,
            adj.mc.z(chosen),
            match adj.winner {
                Some(f) => format!("{f:?}"),
                None => "neither uniquely".into(),
            }
        ),
    );

    match gaussian_shift_adjudication(settings.mc_paths, exp.seed) {
        Ok(rows) => {
            for (shift, pide, mc) in rows {
                let ok = mc.within(pide, 3.0);
                report.push(
                    format!("measure_change_{shift:?}"),
                    ok || shift != GaussianShift::default(),
                    format!(
                        "PIDE {pide:.6}, Monte Carlo {:.6} ± {:.1e} (z = {:.2}){}",
                        mc.mean,
                        mc.se,
                        mc.z(pide),
                        if ok { "" } else { "; rejected by the oracle" }
                    ),
                );
            }
        }
        Err(e) => report.push("measure_change", false, e.to_string()),
    }

    match run_price_distribution(exp) {
        Ok(d) => {
            for (i, a0) in d.initial_probes.iter().enumerate() {
                let s = d.probe_summary(i);
                report.push(
                    format!("density_martingale_theta_{}", d.probe_thetas[i]),
                    (s.mean - a0).abs() <= 3.0 * s.se,
                    format!("mean {:.8} vs {:.8}, se {:.2e}", s.mean, a0, s.se),
                );
            }
            report.push(
                "flagged_fraction",
                true,
                format!("{:.4} of paths with negative density", d.flagged_fraction()),
            );
        }
        Err(e) => report.push("density_martingale", false, e.to_string()),
    }
    report
}
