//! Defaultable zero-coupon bond prices from the pricing kernels.

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::pide::{Damping, KernelSolver};
use crate::term_structure::{csp, DensityCurveState, ForwardCurveState, ThetaGrid};

/// Below this intensity the ratio `K̆/λ` is replaced by its deterministic limit.
pub const LAMBDA_FLOOR: f64 = 1e-10;

#[derive(Clone)]
pub enum RecoveryCurve {
    Constant(f64),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for RecoveryCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(r) => write!(f, "Constant({r})"),
            Self::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl RecoveryCurve {
    pub fn at(&self, theta: f64) -> f64 {
        match self {
            Self::Constant(r) => *r,
            Self::Custom(f) => f(theta),
        }
    }
}

#[derive(Clone, Debug)]
pub enum RecoveryModel {
    Deterministic(RecoveryCurve),
    /// `R_T(θ) = w0 + w1 e^{-f(λ_T(θ))}`.
    IntensityLinked { w0: f64, w1: f64, f: Damping },
}

impl RecoveryModel {
    pub fn constant(r: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&r) {
            return Err(invalid("R", format!("recovery must lie in [0, 1], got {r}")));
        }
        Ok(Self::Deterministic(RecoveryCurve::Constant(r)))
    }

    pub fn intensity_linked(w0: f64, w1: f64, f: Damping) -> Result<Self> {
        if !(w0 >= 0.0 && w1 >= 0.0) {
            return Err(invalid("w0", "w0 and w1 must be nonnegative"));
        }
        if w0 + w1 > 1.0 {
            return Err(invalid("w1", format!("w0+w1 ≤ 1 violated ({w0} + {w1})")));
        }
        Ok(Self::IntensityLinked { w0, w1, f })
    }

    fn check_on(&self, grid: &ThetaGrid) -> Result<()> {
        if let Self::Deterministic(c) = self {
            if let Some(th) = grid.points().find(|th| !(0.0..=1.0).contains(&c.at(*th))) {
                return Err(invalid("R", format!("recovery outside [0, 1] at θ = {th}")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DefaultStatus {
    Alive,
    Defaulted { tau: f64 },
}

/// How the bond kernels are evaluated.
#[derive(Clone, Copy, Debug)]
pub enum Regime<'a> {
    /// Rates independent of the intensity; `discount` is `B(t, T)`.
    Independent { discount: f64 },
    /// Rates and intensity share the field; kernels come from the PIDE,
    /// solved every `theta_stride` grid points and interpolated in between.
    Correlated {
        kernels: &'a KernelSolver,
        theta_stride: usize,
    },
}

/// Everything the pricer needs about one path at time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveSnapshot {
    pub t: f64,
    pub grid: Arc<ThetaGrid>,
    pub lambda: Vec<f64>,
    pub survival: Vec<f64>,
    pub alpha: Vec<f64>,
    pub short_rate: f64,
}

impl CurveSnapshot {
    pub fn from_intensity(state: &ForwardCurveState, short_rate: f64) -> Result<Self> {
        let survival = csp(state)?;
        Ok(Self {
            t: state.t,
            grid: state.grid.clone(),
            alpha: survival.iter().zip(&state.lambda).map(|(s, l)| s * l).collect(),
            lambda: state.lambda.clone(),
            survival,
            short_rate,
        })
    }

    pub fn from_density(state: &DensityCurveState, short_rate: f64) -> Self {
        Self {
            t: state.t,
            grid: state.grid.clone(),
            lambda: state.intensity.clone(),
            survival: state.survival.clone(),
            alpha: state.alpha.clone(),
            short_rate,
        }
    }

    /// `S_t = ∫_t^∞ α_t(θ) dθ`: trapezoid up to `θ_max` plus the remaining mass `S_t(θ_max)`.
    pub fn survival_now(&self) -> Result<f64> {
        let g = &self.grid;
        let s = integrate(g, &self.alpha, self.t, g.theta_max()) + self.survival[g.last()];
        if s > 0.0 && s.is_finite() {
            Ok(s)
        } else {
            Err(Error::DegenerateSurvival(s))
        }
    }
}

/// Trapezoid integral of grid values over `[a, b]`, interpolating at the ends.
pub fn integrate(grid: &ThetaGrid, values: &[f64], a: f64, b: f64) -> f64 {
    integrate_with(grid, a, b, |i| values[i], |th| grid.interpolate(values, th))
}

fn integrate_with(
    grid: &ThetaGrid,
    a: f64,
    b: f64,
    node: impl Fn(usize) -> f64,
    at: impl Fn(f64) -> f64,
) -> f64 {
    if b <= a {
        return 0.0;
    }
    let d = grid.delta();
    // first node strictly after a and last node strictly before b
    let i0 = ((a / d).floor() as usize + 1).min(grid.last());
    let i1 = ((b / d).ceil() as usize).saturating_sub(1).min(grid.last());
    if i0 > i1 || grid.theta(i0) >= b {
        return 0.5 * (b - a) * (at(a) + at(b));
    }
    let mut sum = 0.5 * (grid.theta(i0) - a) * (at(a) + node(i0));
    for i in i0..i1 {
        sum += 0.5 * d * (node(i) + node(i + 1));
    }
    sum + 0.5 * (b - grid.theta(i1)) * (node(i1) + at(b))
}

/// Per-node kernel values for the correlated regime.
struct KernelRow {
    breve: Vec<f64>,
    tilde: Option<Vec<f64>>,
}

fn kernel_row(
    snap: &CurveSnapshot,
    maturity: f64,
    kernels: &KernelSolver,
    stride: usize,
    damping: Option<&Damping>,
    from: usize,
) -> Result<KernelRow> {
    let g = &snap.grid;
    let last = g.last();
    let mut nodes: Vec<usize> = (from..=last).step_by(stride.max(1)).collect();
    if nodes.last() != Some(&last) {
        nodes.push(last);
    }
    let eval = |i: usize, node: usize, tilde: bool| -> Result<f64> {
        let th = g.theta(node);
        let (t, r, l) = (snap.t, snap.short_rate, snap.lambda[i]);
        match (tilde, damping) {
            (true, Some(f)) => kernels.k_tilde(t, maturity, th, r, l, f),
            _ => kernels.k_breve(t, maturity, th, r, l),
        }
    };
    // grid functions are interpolated linearly in θ between solved nodes
    let mix = |i: usize, a: usize, b: usize, tilde: bool| -> Result<f64> {
        let va = eval(i, a, tilde)?;
        if i == a {
            return Ok(va);
        }
        let w = (i - a) as f64 / (b - a) as f64;
        Ok((1.0 - w) * va + w * eval(i, b, tilde)?)
    };
    let mut breve = vec![0.0; g.len()];
    let mut tilde = damping.map(|_| vec![0.0; g.len()]);
    let mut fill = |i: usize, a: usize, b: usize| -> Result<()> {
        breve[i] = mix(i, a, b, false)?;
        if let Some(v) = tilde.as_mut() {
            v[i] = mix(i, a, b, true)?;
        }
        Ok(())
    };
    for seg in nodes.windows(2) {
        for i in seg[0]..seg[1] {
            fill(i, seg[0], seg[1])?;
        }
    }
    fill(last, last, last)?;
    Ok(KernelRow { breve, tilde })
}

/// `K1(t, θ)`, the survival-claim kernel.
pub fn kernel_k1(snap: &CurveSnapshot, theta: f64, maturity: f64, regime: Regime<'_>) -> Result<f64> {
    let s_now = snap.survival_now()?;
    let g = &snap.grid;
    match regime {
        Regime::Independent { discount } => Ok(g.interpolate(&snap.alpha, theta) * discount / s_now),
        Regime::Correlated { kernels, .. } => {
            let k = kernels.k_breve(snap.t, maturity, theta, snap.short_rate, g.interpolate(&snap.lambda, theta))?;
            Ok(g.interpolate(&snap.survival, theta) / s_now * k)
        }
    }
}

/// `K2(t, θ)`, the recovery kernel.
pub fn kernel_k2(
    snap: &CurveSnapshot,
    theta: f64,
    maturity: f64,
    recovery: &RecoveryModel,
    regime: Regime<'_>,
) -> Result<f64> {
    let lambda = snap.grid.interpolate(&snap.lambda, theta);
    match (regime, recovery) {
        (Regime::Independent { discount }, RecoveryModel::Deterministic(c)) => Ok(c.at(theta) * discount),
        (Regime::Independent { .. }, RecoveryModel::IntensityLinked { .. }) => Err(invalid(
            "recovery_type",
            "intensity-linked recovery needs the correlated regime",
        )),
        (Regime::Correlated { kernels, .. }, _) => {
            if lambda <= 0.0 {
                return Err(Error::NonPositiveIntensity(lambda));
            }
            let (t, r) = (snap.t, snap.short_rate);
            if lambda < LAMBDA_FLOOR {
                let b = kernels.discount(t, maturity, theta, r, lambda)?;
                let rec = match recovery {
                    RecoveryModel::Deterministic(c) => c.at(theta),
                    RecoveryModel::IntensityLinked { w0, w1, f } => w0 + w1 * (-f.eval(lambda)).exp(),
                };
                return Ok(rec * b);
            }
            let kb = kernels.k_breve(t, maturity, theta, r, lambda)?;
            match recovery {
                RecoveryModel::Deterministic(c) => Ok(c.at(theta) * kb / lambda),
                RecoveryModel::IntensityLinked { w0, w1, f } => {
                    let kt = if *w1 == 0.0 {
                        0.0
                    } else {
                        kernels.k_tilde(t, maturity, theta, r, lambda, f)?
                    };
                    Ok((w0 * kb + w1 * kt) / lambda)
                }
            }
        }
    }
}

/// A price split into its survival and recovery legs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PriceBreakdown {
    pub price: f64,
    pub survival_leg: f64,
    pub recovery_leg: f64,
    /// Part of the survival leg beyond the last grid maturity.
    pub tail_correction: f64,
}

/// Price at `snap.t` of a bond paying 1 at `maturity`, or the recovery after default.
pub fn price_defaultable_zcb(
    snap: &CurveSnapshot,
    maturity: f64,
    status: DefaultStatus,
    recovery: &RecoveryModel,
    regime: Regime<'_>,
) -> Result<PriceBreakdown> {
    let g = snap.grid.clone();
    recovery.check_on(&g)?;
    if maturity < snap.t {
        return Err(invalid("T", "maturity precedes the pricing time"));
    }
    if let DefaultStatus::Defaulted { tau } = status {
        if tau > snap.t {
            return Err(invalid("tau", "default time after the pricing time"));
        }
        let p = kernel_k2(snap, tau, maturity, recovery, regime)?;
        return Ok(PriceBreakdown {
            price: p,
            survival_leg: 0.0,
            recovery_leg: p,
            tail_correction: 0.0,
        });
    }
    let s_now = snap.survival_now()?;
    let last = g.last();
    let theta_max = g.theta_max();
    match regime {
        Regime::Independent { discount } => {
            let RecoveryModel::Deterministic(c) = recovery else {
                return Err(invalid(
                    "recovery_type",
                    "intensity-linked recovery needs the correlated regime",
                ));
            };
            let tail = snap.survival[last] * discount / s_now;
            let surv = integrate(&g, &snap.alpha, maturity, theta_max) * discount / s_now + tail;
            let rec = integrate_with(
                &g,
                snap.t,
                maturity,
                |i| c.at(g.theta(i)) * snap.alpha[i],
                |th| c.at(th) * g.interpolate(&snap.alpha, th),
            ) * discount
                / s_now;
            Ok(PriceBreakdown {
                price: surv + rec,
                survival_leg: surv,
                recovery_leg: rec,
                tail_correction: tail,
            })
        }
        Regime::Correlated { kernels, theta_stride } => {
            let damping = match recovery {
                RecoveryModel::IntensityLinked { w1, f, .. } if *w1 > 0.0 => Some(f),
                _ => None,
            };
            let from = g.index_of(snap.t).saturating_sub(1);
            let row = kernel_row(snap, maturity, kernels, theta_stride, damping, from)?;
            // S_t(θ)/S_t · K̆ avoids dividing by λ on the grid
            let k1: Vec<f64> = (0..g.len())
                .map(|i| if i < from { 0.0 } else { snap.survival[i] * row.breve[i] / s_now })
                .collect();
            let lam_last = snap.lambda[last];
            let tail = if lam_last > LAMBDA_FLOOR {
                snap.survival[last] / s_now * row.breve[last] / lam_last
            } else {
                snap.survival[last] / s_now * kernels.discount(snap.t, maturity, theta_max, snap.short_rate, lam_last)?
            };
            let surv = integrate(&g, &k1, maturity, theta_max) + tail;
            let rec_nodes: Vec<f64> = (0..g.len())
                .map(|i| {
                    if i < from {
                        return 0.0;
                    }
                    let th = g.theta(i);
                    let weight = snap.survival[i] / s_now;
                    match recovery {
                        RecoveryModel::Deterministic(c) => weight * c.at(th) * row.breve[i],
                        RecoveryModel::IntensityLinked { w0, w1, .. } => {
                            let kt = row.tilde.as_ref().map_or(0.0, |v| v[i]);
                            weight * (w0 * row.breve[i] + w1 * kt)
                        }
                    }
                })
                .collect();
            let rec = integrate(&g, &rec_nodes, snap.t, maturity);
            Ok(PriceBreakdown {
                price: surv + rec,
                survival_leg: surv,
                recovery_leg: rec,
                tail_correction: tail,
            })
        }
    }
}

/// Pre-default price with rates independent of default:
/// `B (1 - (1-R) A / D)` with right-point sums `A = Σ_{t<θ_i≤T} Δ α(θ_i)` and
/// `D = Σ_{θ_i>t} Δ α(θ_i) + survival_tail`.
pub fn price_pre_default_independent(
    grid: &ThetaGrid,
    t: f64,
    maturity: f64,
    alpha: &[f64],
    survival_tail: f64,
    recovery: f64,
    discount: f64,
) -> Result<f64> {
    let d = grid.delta();
    let first = (t / d).round() as usize + 1;
    let end = (maturity / d).round() as usize;
    let a: f64 = alpha[first.min(alpha.len())..=end.min(grid.last())].iter().sum::<f64>() * d;
    let total = alpha[first.min(alpha.len())..].iter().sum::<f64>() * d + survival_tail;
    if total == 0.0 || !total.is_finite() {
        return Err(Error::ZeroDenominator("pre-default price"));
    }
    Ok(discount * (1.0 - (1.0 - recovery) * a / total))
}
