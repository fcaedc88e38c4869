use crate::rates::{RateModel, RatesMode};
use crate::term_structure::{mc_drift, IntensityModel};

/// Sign of the Gaussian correction in the mean-reversion level `δ̂`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum GaussianShift {
    /// `δ - κ^{-1} ρᵀK I_σ`, the drift of `r` after the change of measure.
    #[default]
    Girsanov,
    /// `δ + κ^{-1} ρᵀK I_σ`.
    Reversed,
}

/// Intensity used for the jump terms of the operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum JumpCompensator {
    /// `ν`.
    #[default]
    Plain,
    /// `e^{-I_γ} ν`, the compensator after the change of measure.
    Tilted,
}

/// Joint model of intensity and short rate seen by the pricing equation.
#[derive(Clone, Debug)]
pub struct PideModel {
    pub intensity: IntensityModel,
    pub rates: RateModel,
    pub gaussian_shift: GaussianShift,
    pub compensator: JumpCompensator,
}

impl PideModel {
    pub fn new(intensity: IntensityModel, rates: RateModel) -> Self {
        Self {
            intensity,
            rates,
            gaussian_shift: GaussianShift::default(),
            compensator: JumpCompensator::default(),
        }
    }
}

/// One atom of the discretised jump measure: a shift in `(x, y)` and its rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JumpNode {
    pub dx: f64,
    pub dy: f64,
    pub weight: f64,
}

/// Coefficients of the pricing operator at one `(t, θ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorCoefficients {
    pub kappa: f64,
    pub delta_hat: f64,
    pub a_drift: f64,
    pub a11: f64,
    pub a22: f64,
    pub a12: f64,
    pub jumps: Vec<JumpNode>,
}

impl OperatorCoefficients {
    /// No noise: `K_t = xK` with `x` frozen.
    pub fn zero() -> Self {
        Self {
            kappa: 0.0,
            delta_hat: 0.0,
            a_drift: 0.0,
            a11: 0.0,
            a22: 0.0,
            a12: 0.0,
            jumps: Vec::new(),
        }
    }

    /// `∫ φ dν` over the jump nodes.
    pub fn compensator_x(&self) -> f64 {
        self.jumps.iter().map(|j| j.dx * j.weight).sum()
    }

    /// `∫ γ dν` over the jump nodes.
    pub fn compensator_y(&self) -> f64 {
        self.jumps.iter().map(|j| j.dy * j.weight).sum()
    }

    /// `a11 a22 - a12²/4`; zero for perfectly correlated factors.
    pub fn ellipticity_margin(&self) -> f64 {
        self.a11 * self.a22 - 0.25 * self.a12 * self.a12
    }
}

/// Coefficients for maturity `θ` at time `t`.
pub fn compute_coefficients(model: &PideModel, t: f64, theta: f64) -> OperatorCoefficients {
    let im = &model.intensity;
    let spec = &im.spec;
    let nodes = im.plan.nodes();
    let (kappa, delta, rho0) = match model.rates.mode {
        RatesMode::Constant { .. } => (0.0, 0.0, 0.0),
        RatesMode::Vasicek(s) | RatesMode::VasicekJumps(s) => (s.kappa, s.delta, s.rho0),
    };
    let correlated = model.rates.correlated;

    let sig: Vec<f64> = nodes.iter().map(|x| spec.sigma_at(t, theta, x)).collect();
    let isig: Vec<f64> = nodes
        .iter()
        .map(|x| spec.integrated_sigma(t, theta, x))
        .collect();
    let rho = vec![rho0; nodes.len()];
    let plan = &im.plan;
    let a11 = 0.5 * plan.quadratic_form(&rho, &rho);
    let a22 = 0.5 * plan.quadratic_form(&sig, &sig);
    let a12 = if correlated {
        plan.quadratic_form(&sig, &rho)
    } else {
        0.0
    };

    let mut delta_hat = delta;
    if correlated && kappa > 0.0 {
        let shift = plan.quadratic_form(&rho, &isig) / kappa;
        delta_hat += match model.gaussian_shift {
            GaussianShift::Girsanov => -shift,
            GaussianShift::Reversed => shift,
        };
    }

    let (marks, weights) = im.measure.quadrature();
    let mut jumps = Vec::new();
    let mut jump_drift = 0.0;
    let mut jump_shift = 0.0;
    for (&m, &w) in marks.iter().zip(weights) {
        let g = spec.gamma_at(t, theta, m);
        let ig = spec.integrated_gamma(t, theta, m);
        let phi = model.rates.phi(m);
        let tilt = match model.compensator {
            JumpCompensator::Plain => 1.0,
            JumpCompensator::Tilted => (-ig).exp(),
        };
        jump_drift += g * -(-ig).exp_m1() * w;
        if correlated {
            jump_shift += phi * (-ig).exp_m1() * w;
            if phi != 0.0 || g != 0.0 {
                jumps.push(JumpNode {
                    dx: phi,
                    dy: g,
                    weight: w * tilt,
                });
            }
        } else {
            if g != 0.0 {
                jumps.push(JumpNode {
                    dx: 0.0,
                    dy: g,
                    weight: w * tilt,
                });
            }
            if phi != 0.0 {
                jumps.push(JumpNode {
                    dx: phi,
                    dy: 0.0,
                    weight: w,
                });
            }
        }
    }
    if kappa > 0.0 {
        delta_hat += jump_shift / kappa;
    }
    let a_drift = mc_drift(im, t, theta) - plan.quadratic_form(&sig, &isig) - jump_drift;

    OperatorCoefficients {
        kappa,
        delta_hat,
        a_drift,
        a11,
        a22,
        a12,
        jumps,
    }
}
