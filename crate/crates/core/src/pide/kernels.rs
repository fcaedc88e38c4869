use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use super::coefficients::{compute_coefficients, PideModel};
use super::grid::{GridFunction, StateGrid};
use super::solver::{solve_cauchy, SolverSettings};
use crate::error::Result;
use crate::rates::RatesMode;

/// Axis extent of the state grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AxisRange {
    Fixed(f64, f64),
    /// Six standard deviations plus the largest jump around the initial value.
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelConfig {
    pub nx: usize,
    pub ny: usize,
    pub x_range: AxisRange,
    pub y_range: AxisRange,
    pub settings: SolverSettings,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            nx: 128,
            ny: 128,
            x_range: AxisRange::Auto,
            y_range: AxisRange::Auto,
            settings: SolverSettings::default(),
        }
    }
}

/// `f` in the recovery damping `y e^{-f(y)}`.
#[derive(Clone)]
pub enum Damping {
    Zero,
    /// `f(y) = c y`.
    Linear(f64),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for Damping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => write!(f, "Zero"),
            Self::Linear(c) => write!(f, "Linear({c})"),
            Self::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl Damping {
    pub fn eval(&self, y: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Linear(c) => c * y,
            Self::Custom(f) => f(y),
        }
    }

    fn tag(&self) -> u64 {
        match self {
            Self::Zero => 1,
            Self::Linear(c) => 2 ^ c.to_bits().rotate_left(7),
            Self::Custom(f) => 3 ^ (Arc::as_ptr(f) as *const () as usize as u64).rotate_left(17),
        }
    }
}

/// Terminal condition of a pricing kernel.
#[derive(Clone, Debug)]
pub enum Terminal {
    One,
    /// `ψ(x, y) = y`.
    Intensity,
    /// `ψ(x, y) = y e^{-f(y)}`.
    DampedIntensity(Damping),
}

impl Terminal {
    pub fn eval(&self, y: f64) -> f64 {
        match self {
            Self::One => 1.0,
            Self::Intensity => y,
            Self::DampedIntensity(d) => y * (-d.eval(y)).exp(),
        }
    }

    fn tag(&self) -> u64 {
        match self {
            Self::One => 0,
            Self::Intensity => 1,
            Self::DampedIntensity(Damping::Zero) => 1,
            Self::DampedIntensity(d) => d.tag().wrapping_mul(31),
        }
    }
}

type CacheKey = (u64, u64, u64, u64);

/// Solves and caches the pricing kernels of one model, per `(θ, t, T)`.
pub struct KernelSolver {
    model: PideModel,
    config: KernelConfig,
    cache: Mutex<HashMap<CacheKey, Arc<GridFunction>>>,
}

impl fmt::Debug for KernelSolver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelSolver")
            .field("config", &self.config)
            .finish_non_exhaustive()
    }
}

impl KernelSolver {
    pub fn new(model: PideModel, config: KernelConfig) -> Self {
        Self {
            model,
            config,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn model(&self) -> &PideModel {
        &self.model
    }

    pub fn config(&self) -> &KernelConfig {
        &self.config
    }

    /// The grid used for maturity `θ` and horizon `maturity`.
    pub fn grid_for(&self, maturity: f64, theta: f64) -> Result<StateGrid> {
        let x = match self.config.x_range {
            AxisRange::Fixed(a, b) => (a, b),
            AxisRange::Auto => self.auto_x(maturity),
        };
        let y = match self.config.y_range {
            AxisRange::Fixed(a, b) => (a, b),
            AxisRange::Auto => self.auto_y(maturity, theta),
        };
        StateGrid::new(x, self.config.nx, y, self.config.ny)
    }

    fn auto_x(&self, maturity: f64) -> (f64, f64) {
        let rates = &self.model.rates;
        match rates.mode {
            RatesMode::Constant { r } => {
                // keep r on a node so queries need no interpolation in x
                let h = 1e-3;
                let lo = r - ((self.config.nx - 1) / 2) as f64 * h;
                (lo, lo + (self.config.nx - 1) as f64 * h)
            }
            RatesMode::Vasicek(s) | RatesMode::VasicekJumps(s) => {
                let sd = (2.0 * rates.a11() * maturity.max(0.0)).sqrt();
                let (marks, _) = rates.measure.quadrature();
                let jump = marks.iter().map(|m| rates.phi(*m).abs()).fold(0.0, f64::max);
                let half = (6.0 * sd + jump).max(0.01);
                (s.r0.min(s.delta) - half, s.r0.max(s.delta) + half)
            }
        }
    }

    fn auto_y(&self, maturity: f64, theta: f64) -> (f64, f64) {
        let im = &self.model.intensity;
        let center = im.spec.lambda0(theta);
        let n = 64;
        let h = maturity.max(0.0) / n as f64;
        let (marks, _) = im.measure.quadrature();
        let mut var = 0.0;
        let mut jump: f64 = 0.0;
        for k in 0..=n {
            let t = k as f64 * h;
            let c = compute_coefficients(&self.model, t, theta);
            let second: f64 = im
                .measure
                .integrate(|m| im.spec.gamma_at(t, theta, m).powi(2));
            let w = if k == 0 || k == n { 0.5 } else { 1.0 };
            var += w * h * (2.0 * c.a22 + second);
            for m in marks {
                jump = jump.max(im.spec.gamma_at(t, theta, *m).abs());
            }
        }
        let half = (6.0 * var.sqrt() + jump).max(0.25 * center.abs() + 0.01);
        (center - half, center + half)
    }

    /// Full solution of a kernel at time `t`, solved once per key.
    pub fn solve(&self, terminal: &Terminal, t: f64, maturity: f64, theta: f64) -> Result<Arc<GridFunction>> {
        let key = (theta.to_bits(), t.to_bits(), maturity.to_bits(), terminal.tag());
        if let Some(hit) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(hit.clone());
        }
        let grid = self.grid_for(maturity, theta)?;
        let model = &self.model;
        let solution = Arc::new(solve_cauchy(
            |_, y| terminal.eval(y),
            grid,
            t,
            maturity,
            &self.config.settings,
            |s| compute_coefficients(model, s, theta),
        )?);
        self.cache
            .lock()
            .expect("cache lock")
            .insert(key, solution.clone());
        Ok(solution)
    }

    fn evaluate(&self, terminal: &Terminal, t: f64, maturity: f64, theta: f64, r: f64, lambda: f64) -> Result<f64> {
        if t == maturity {
            return Ok(terminal.eval(lambda));
        }
        let sol = self.solve(terminal, t, maturity, theta)?;
        sol.interpolate(r, lambda)
    }

    /// `K̆(t, r, λ)`: terminal `y`.
    pub fn k_breve(&self, t: f64, maturity: f64, theta: f64, r: f64, lambda: f64) -> Result<f64> {
        self.evaluate(&Terminal::Intensity, t, maturity, theta, r, lambda)
    }

    /// `K̃(t, r, λ)`: terminal `y e^{-f(y)}`.
    pub fn k_tilde(&self, t: f64, maturity: f64, theta: f64, r: f64, lambda: f64, f: &Damping) -> Result<f64> {
        self.evaluate(&Terminal::DampedIntensity(f.clone()), t, maturity, theta, r, lambda)
    }

    /// Bond kernel, terminal `1`.
    pub fn discount(&self, t: f64, maturity: f64, theta: f64, r: f64, lambda: f64) -> Result<f64> {
        self.evaluate(&Terminal::One, t, maturity, theta, r, lambda)
    }
}

/// `K̆(t, r, λ)` for maturity `θ` and horizon `maturity`.
pub fn kernel_k_breve(solver: &KernelSolver, t: f64, r: f64, lambda: f64, theta: f64, maturity: f64) -> Result<f64> {
    solver.k_breve(t, maturity, theta, r, lambda)
}

/// `K̃(t, r, λ)` with damping `f`.
pub fn kernel_k_tilde(
    solver: &KernelSolver,
    t: f64,
    r: f64,
    lambda: f64,
    theta: f64,
    maturity: f64,
    f: &Damping,
) -> Result<f64> {
    solver.k_tilde(t, maturity, theta, r, lambda, f)
}
