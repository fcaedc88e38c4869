//! Short-rate dynamics: constant, Vasicek, and Vasicek with jumps.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{require_finite, require_nonnegative, require_positive, Result};
use crate::levy_field::{sample_jumps_with, FieldDraw, FieldIncrementPlan, LevyMeasure};
use crate::rng::PathStreams;

/// Which exponent to use in the closed-form Vasicek bond price.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DiscountFormula {
    /// `g(u) = (1 - e^{-κ(T-u)}) / κ`, the affine solution of the bond PDE.
    #[default]
    Standard,
    /// `g(u) = (1 - e^{-κ(T-u)}) / κ²`; agrees with `Standard` only at `κ = 1`.
    PaperExact,
}

/// `dr = κ(δ - r)dt + ∫ρ dW + ∫φ Ỹ^P`, with `ρ_t(ξ) = ρ0` and `φ_t(ξ) = φ0 ξ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VasicekSpec {
    pub kappa: f64,
    pub delta: f64,
    pub r0: f64,
    pub rho0: f64,
    pub phi0: f64,
}

impl VasicekSpec {
    pub fn new(kappa: f64, delta: f64, r0: f64, rho0: f64, phi0: f64) -> Result<Self> {
        require_positive("kappa", kappa)?;
        require_finite("delta", delta)?;
        require_finite("r0", r0)?;
        require_nonnegative("rho0", rho0)?;
        require_finite("phi0", phi0)?;
        Ok(Self {
            kappa,
            delta,
            r0,
            rho0,
            phi0,
        })
    }

    /// `a11 = ½ ρᵀ K_w ρ` for a kernel with total weighted mass `flat_mass`.
    pub fn a11(&self, flat_mass: f64) -> f64 {
        0.5 * self.rho0 * self.rho0 * flat_mass
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RatesMode {
    Constant { r: f64 },
    Vasicek(VasicekSpec),
    /// Vasicek driven additionally by the Poisson part of the field.
    VasicekJumps(VasicekSpec),
}

/// A short-rate model bound to the driving field.
#[derive(Clone, Debug)]
pub struct RateModel {
    pub mode: RatesMode,
    pub measure: LevyMeasure,
    /// Share the Gaussian and Poisson draws with the intensity.
    pub correlated: bool,
    flat_mass: f64,
}

impl RateModel {
    pub fn new(mode: RatesMode, plan: &FieldIncrementPlan, measure: LevyMeasure, correlated: bool) -> Self {
        let ones = vec![1.0; plan.len()];
        Self {
            mode,
            measure,
            correlated,
            flat_mass: plan.quadratic_form(&ones, &ones),
        }
    }

    pub fn initial_rate(&self) -> f64 {
        match self.mode {
            RatesMode::Constant { r } => r,
            RatesMode::Vasicek(s) | RatesMode::VasicekJumps(s) => s.r0,
        }
    }

    pub fn a11(&self) -> f64 {
        match self.mode {
            RatesMode::Constant { .. } => 0.0,
            RatesMode::Vasicek(s) | RatesMode::VasicekJumps(s) => s.a11(self.flat_mass),
        }
    }

    pub fn flat_mass(&self) -> f64 {
        self.flat_mass
    }

    /// `φ_t(ξ)`; zero unless jumps drive the rate.
    pub fn phi(&self, mark: f64) -> f64 {
        match self.mode {
            RatesMode::VasicekJumps(s) => s.phi0 * mark,
            _ => 0.0,
        }
    }

    /// Closed-form bond price where available; `None` with rate jumps.
    pub fn discount(&self, tau: f64, r: f64, formula: DiscountFormula) -> Option<f64> {
        match self.mode {
            RatesMode::Constant { r } => Some(constant_rate_discount(r, 0.0, tau)),
            RatesMode::Vasicek(s) => Some(zcb_closed_form(&s, self.a11(), tau, r, formula)),
            RatesMode::VasicekJumps(s) if s.phi0 == 0.0 => {
                Some(zcb_closed_form(&s, self.a11(), tau, r, formula))
            }
            RatesMode::VasicekJumps(_) => None,
        }
    }
}

/// Exact one-step transition of the short rate.
///
/// When correlated, the Gaussian part is regressed on the intensity's Brownian
/// increment and the jumps are those of `draw`; otherwise the rate channel of
/// `streams` supplies independent noise.
pub fn evolve_rate(r: f64, model: &RateModel, draw: &FieldDraw, streams: &mut PathStreams) -> Result<f64> {
    let spec = match model.mode {
        RatesMode::Constant { r } => return Ok(r),
        RatesMode::Vasicek(s) | RatesMode::VasicekJumps(s) => s,
    };
    let dt = draw.dt;
    let k = spec.kappa;
    let decay = (-k * dt).exp();
    let mean = spec.delta + (r - spec.delta) * decay;

    let m = model.flat_mass;
    let var_x = spec.rho0 * spec.rho0 * m * -(-2.0 * k * dt).exp_m1() / (2.0 * k);
    let gauss = if model.correlated {
        let dw_rho = spec.rho0 * draw.gaussian_flat(1.0);
        let beta = -(-k * dt).exp_m1() / (k * dt);
        let resid = (var_x - beta * beta * spec.rho0 * spec.rho0 * m * dt).max(0.0);
        let z: f64 = streams.rate_gaussian.sample(StandardNormal);
        beta * dw_rho + resid.sqrt() * z
    } else {
        let z: f64 = streams.rate_gaussian.sample(StandardNormal);
        var_x.sqrt() * z
    };

    let jumps = match model.mode {
        RatesMode::VasicekJumps(s) if s.phi0 != 0.0 => {
            let own;
            let js = if model.correlated {
                &draw.jumps
            } else {
                own = sample_jumps_with(&model.measure, draw.t, dt, &mut streams.rate_gaussian)?;
                &own
            };
            let end = draw.t + dt;
            let hits: f64 = js
                .iter()
                .map(|j| (-k * (end - j.time)).exp() * model.phi(j.mark))
                .sum();
            hits - (-(-k * dt).exp_m1() / k) * s.phi0 * model.measure.first_moment()
        }
        _ => 0.0,
    };
    Ok(mean + gauss + jumps)
}

/// `∫_0^τ ((1 - e^{-κu}) / κ)² du`.
fn integrated_square_loading(kappa: f64, tau: f64) -> f64 {
    let b = -(-kappa * tau).exp_m1() / kappa;
    (tau - 2.0 * b + -(-2.0 * kappa * tau).exp_m1() / (2.0 * kappa)) / (kappa * kappa)
}

/// Vasicek bond price `B(t, t+τ)` given `r_t = r`, for time-homogeneous `a11`.
pub fn zcb_closed_form(spec: &VasicekSpec, a11: f64, tau: f64, r: f64, formula: DiscountFormula) -> f64 {
    if tau <= 0.0 {
        return 1.0;
    }
    let k = spec.kappa;
    let b = -(-k * tau).exp_m1() / k;
    let scale = match formula {
        DiscountFormula::Standard => 1.0,
        DiscountFormula::PaperExact => 1.0 / (k * k),
    };
    let convexity = a11 * scale * integrated_square_loading(k, tau);
    (b * (spec.delta - r) - spec.delta * tau + convexity).exp()
}

/// `e^{-r(T-t)}`.
pub fn constant_rate_discount(r: f64, t: f64, maturity: f64) -> f64 {
    (-r * (maturity - t)).exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_field::FieldIncrementPlan;

    fn spec(kappa: f64, rho: f64) -> VasicekSpec {
        VasicekSpec::new(kappa, 0.05, 0.03, rho, 0.0).unwrap()
    }

    #[test]
    fn trivial_bond_values() {
        let s = spec(1.0, 0.01);
        assert_eq!(zcb_closed_form(&s, 5e-5, 0.0, 0.03, DiscountFormula::Standard), 1.0);
        let v = zcb_closed_form(&s, 0.0, 2.0, 0.05, DiscountFormula::Standard);
        assert!((v - (-0.1f64).exp()).abs() < 1e-15);
        assert_eq!(constant_rate_discount(0.05, 0.5, 1.0), (-0.025f64).exp());
    }

    #[test]
    fn formulas_agree_only_at_unit_kappa() {
        let a = zcb_closed_form(&spec(1.0, 0.05), 0.00125, 1.0, 0.03, DiscountFormula::Standard);
        let b = zcb_closed_form(&spec(1.0, 0.05), 0.00125, 1.0, 0.03, DiscountFormula::PaperExact);
        assert_eq!(a, b);
        let a = zcb_closed_form(&spec(0.5, 0.05), 0.00125, 1.0, 0.03, DiscountFormula::Standard);
        let b = zcb_closed_form(&spec(0.5, 0.05), 0.00125, 1.0, 0.03, DiscountFormula::PaperExact);
        assert!((a - b).abs() > 1e-5);
    }

    /// Residual of `-xK + K_t + κ(δ-x)K_x + a11 K_xx` by central differences.
    fn pde_residual(formula: DiscountFormula) -> f64 {
        let s = spec(0.5, 0.3);
        let a11 = 0.5 * 0.3 * 0.3;
        let f = |tau: f64, x: f64| zcb_closed_form(&s, a11, tau, x, formula);
        let h = 1e-4;
        let mut worst: f64 = 0.0;
        for &tau in &[0.25, 0.5, 1.0, 2.0] {
            for &x in &[-0.02, 0.0, 0.03, 0.08] {
                let k = f(tau, x);
                // t-derivative is minus the τ-derivative
                let kt = -(f(tau + h, x) - f(tau - h, x)) / (2.0 * h);
                let kx = (f(tau, x + h) - f(tau, x - h)) / (2.0 * h);
                let kxx = (f(tau, x + h) - 2.0 * k + f(tau, x - h)) / (h * h);
                let res = -x * k + kt + s.kappa * (s.delta - x) * kx + a11 * kxx;
                worst = worst.max(res.abs());
            }
        }
        worst
    }

    #[test]
    fn standard_formula_solves_the_bond_pde() {
        assert!(pde_residual(DiscountFormula::Standard) < 1e-6);
        assert!(pde_residual(DiscountFormula::PaperExact) > 1e-3);
    }

    #[test]
    fn exact_step_moments() {
        let plan = FieldIncrementPlan::scalar(1.0, 0.5).unwrap();
        let s = spec(2.0, 0.1);
        let m = RateModel::new(RatesMode::Vasicek(s), &plan, LevyMeasure::zero(), true);
        let n = 40_000;
        let (mut sum, mut sq) = (0.0, 0.0);
        for p in 0..n {
            let mut st = PathStreams::new(4, p);
            let z: f64 = st.gaussian.sample(StandardNormal);
            let d = FieldDraw::scalar(0.0, 0.5, z * 0.5f64.sqrt(), vec![]);
            let r = evolve_rate(0.03, &m, &d, &mut st).unwrap();
            sum += r;
            sq += r * r;
        }
        let mean = sum / n as f64;
        let var = sq / n as f64 - mean * mean;
        let e = (-1.0f64).exp();
        let m_exact = 0.05 + (0.03 - 0.05) * e;
        let v_exact = 0.01 * (1.0 - (-2.0f64).exp()) / 4.0;
        assert!((mean - m_exact).abs() < 4.0 * (v_exact / n as f64).sqrt());
        assert!((var / v_exact - 1.0).abs() < 0.03);
    }

    #[test]
    fn jump_part_is_compensated() {
        let plan = FieldIncrementPlan::scalar(1.0, 0.1).unwrap();
        let s = VasicekSpec::new(1.0, 0.0, 0.0, 0.0, 0.5).unwrap();
        let measure = LevyMeasure::exponential(5.0, 0.2).unwrap();
        let m = RateModel::new(RatesMode::VasicekJumps(s), &plan, measure.clone(), true);
        let n = 40_000;
        let mut sum = 0.0;
        let mut sq = 0.0;
        for p in 0..n {
            let mut st = PathStreams::new(8, p);
            let d = FieldDraw::sample(&plan, &measure, 0.0, 0.1, &mut st).unwrap();
            let r = evolve_rate(0.0, &m, &d, &mut st).unwrap();
            sum += r;
            sq += r * r;
        }
        let mean = sum / n as f64;
        let se = ((sq / n as f64 - mean * mean) / n as f64).sqrt();
        assert!(mean.abs() < 4.0 * se, "{mean} ± {se}");
    }
}
