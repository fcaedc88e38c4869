use super::coefficients::OperatorCoefficients;
use super::grid::{GridFunction, StateGrid};
use super::operators::{add_jumps, add_mixed, add_x, add_y, solve_x, solve_y, Tridiag};
use crate::error::{invalid, Error, Result};

/// Implicitness parameter of the Hundsdorfer–Verwer scheme.
pub const HV_THETA: f64 = 0.5 + 0.288_675_134_594_812_9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverSettings {
    pub n_steps: usize,
    /// Artificial diffusion `ε max(a11, a22)` added on both axes.
    pub ridge_eps: f64,
    /// Iterate the jump term as a source from the previous sweep instead of
    /// coupling it into each step.
    pub picard: bool,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            n_steps: 200,
            ridge_eps: 1e-8,
            picard: false,
            picard_tol: 1e-10,
            picard_max_iter: 50,
        }
    }
}

/// Diagnostics of one solve.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SolveReport {
    pub degenerate_stages: usize,
    pub picard_iterations: usize,
}

struct Stage {
    coeffs: OperatorCoefficients,
    ax: Tridiag,
    ay: Tridiag,
}

impl Stage {
    fn new(coeffs: OperatorCoefficients, grid: &StateGrid, ridge_eps: f64) -> Self {
        let ridge = ridge_eps * coeffs.a11.max(coeffs.a22);
        let cx = coeffs.compensator_x();
        let cy = coeffs.compensator_y();
        let (kappa, dh) = (coeffs.kappa, coeffs.delta_hat);
        let ax = Tridiag::convection_diffusion(
            grid.nx,
            grid.hx(),
            coeffs.a11 + ridge,
            |i| kappa * (dh - grid.x(i)) - cx,
            |i| -grid.x(i),
        );
        let vy = coeffs.a_drift - cy;
        let ay = Tridiag::convection_diffusion(grid.ny, grid.hy(), coeffs.a22 + ridge, |_| vy, |_| 0.0);
        Self { coeffs, ax, ay }
    }

    /// `c · (a12 ∂xy + J)` applied to `u`, or with the jump part taken from `jump_source`.
    fn add_explicit(&self, grid: &StateGrid, u: &[f64], jump_source: Option<&[f64]>, c: f64, out: &mut [f64]) {
        add_mixed(self.coeffs.a12, grid, u, c, out);
        add_jumps(&self.coeffs, grid, jump_source.unwrap_or(u), c, out);
    }

    fn add_all(&self, grid: &StateGrid, u: &[f64], jump_source: Option<&[f64]>, c: f64, out: &mut [f64]) {
        self.add_explicit(grid, u, jump_source, c, out);
        add_x(&self.ax, grid, u, c, out);
        add_y(&self.ay, grid, u, c, out);
    }
}

/// Solves `∂_t K - xK + A K = 0` backward from `K(T) = terminal` to `t_start`.
///
/// `coefficients(t)` supplies the operator at calendar time `t`.
pub fn solve_cauchy(
    terminal: impl Fn(f64, f64) -> f64,
    grid: StateGrid,
    t_start: f64,
    maturity: f64,
    settings: &SolverSettings,
    coefficients: impl Fn(f64) -> OperatorCoefficients,
) -> Result<GridFunction> {
    solve_cauchy_with_report(terminal, grid, t_start, maturity, settings, coefficients).map(|(g, _)| g)
}

pub fn solve_cauchy_with_report(
    terminal: impl Fn(f64, f64) -> f64,
    grid: StateGrid,
    t_start: f64,
    maturity: f64,
    settings: &SolverSettings,
    coefficients: impl Fn(f64) -> OperatorCoefficients,
) -> Result<(GridFunction, SolveReport)> {
    if !(maturity >= t_start) {
        return Err(invalid("maturity", "must not precede the start time"));
    }
    if settings.n_steps == 0 {
        return Err(invalid("n_steps", "positive integer required"));
    }
    let psi = GridFunction::from_fn(grid, maturity, &terminal);
    if !psi.is_finite() {
        return Err(invalid("terminal", "terminal condition must be finite on the grid"));
    }
    if maturity == t_start {
        return Ok((psi, SolveReport::default()));
    }
    let n = settings.n_steps;
    let dtau = (maturity - t_start) / n as f64;
    let mut report = SolveReport::default();
    let stages: Vec<Stage> = (0..=n)
        .map(|k| {
            let c = coefficients(maturity - k as f64 * dtau);
            if c.ellipticity_margin() <= 0.0 && (c.a11 > 0.0 || c.a22 > 0.0) {
                report.degenerate_stages += 1;
            }
            Stage::new(c, &grid, settings.ridge_eps)
        })
        .collect();

    let bound = psi.sup_norm() * (grid.x_min.min(0.0).abs() * (maturity - t_start)).exp();
    let mut history = march(&psi.values, &grid, &stages, dtau, None, bound, settings.picard)?;
    if settings.picard {
        // start from the solution without jumps and iterate the jump source
        let frozen: Vec<Stage> = stages
            .iter()
            .map(|s| Stage {
                coeffs: OperatorCoefficients {
                    jumps: Vec::new(),
                    ..s.coeffs.clone()
                },
                ax: s.ax.clone(),
                ay: s.ay.clone(),
            })
            .collect();
        let mut iterate = march(&psi.values, &grid, &frozen, dtau, None, bound, true)?;
        for it in 1..=settings.picard_max_iter {
            let next = march(&psi.values, &grid, &stages, dtau, Some(&iterate), bound, true)?;
            let diff = next
                .iter()
                .zip(&iterate)
                .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
                .fold(0.0, f64::max);
            iterate = next;
            report.picard_iterations = it;
            if diff <= settings.picard_tol * (1.0 + bound) {
                break;
            }
        }
        history = iterate;
    }
    let values = history.pop().expect("at least one step");
    Ok((
        GridFunction {
            grid,
            values,
            time: t_start,
        },
        report,
    ))
}

/// Runs the scheme; with `keep` every step is returned, terminal first,
/// otherwise only the final one.
#[allow(clippy::too_many_arguments)]
fn march(
    terminal: &[f64],
    grid: &StateGrid,
    stages: &[Stage],
    dtau: f64,
    jump_history: Option<&Vec<Vec<f64>>>,
    bound: f64,
    keep: bool,
) -> Result<Vec<Vec<f64>>> {
    let th = HV_THETA * dtau;
    let mut out = Vec::with_capacity(if keep { stages.len() } else { 1 });
    let mut u = terminal.to_vec();
    if keep {
        out.push(u.clone());
    }
    let len = u.len();
    let mut f0 = vec![0.0; len];
    let mut y = vec![0.0; len];
    let mut y2 = vec![0.0; len];
    for k in 1..stages.len() {
        let (s0, s1) = (&stages[k - 1], &stages[k]);
        let src0 = jump_history.map(|h| h[k - 1].as_slice());
        let src1 = jump_history.map(|h| h[k].as_slice());
        let fx = s1.ax.shifted_factor(th);
        let fy = s1.ay.shifted_factor(th);

        f0.iter_mut().for_each(|v| *v = 0.0);
        s0.add_all(grid, &u, src0, 1.0, &mut f0);

        // predictor
        for i in 0..len {
            y[i] = u[i] + dtau * f0[i];
        }
        let y0 = y.clone();
        add_x(&s0.ax, grid, &u, -th, &mut y);
        solve_x(&fx, grid, &mut y);
        add_y(&s0.ay, grid, &u, -th, &mut y);
        solve_y(&fy, grid, &mut y);
        y2.copy_from_slice(&y);

        // corrector
        let mut f2 = vec![0.0; len];
        s1.add_all(grid, &y2, src1, 1.0, &mut f2);
        for i in 0..len {
            y[i] = y0[i] + 0.5 * dtau * (f2[i] - f0[i]);
        }
        add_x(&s1.ax, grid, &y2, -th, &mut y);
        solve_x(&fx, grid, &mut y);
        add_y(&s1.ay, grid, &y2, -th, &mut y);
        solve_y(&fy, grid, &mut y);
        std::mem::swap(&mut u, &mut y);

        let sup = u.iter().fold(0.0f64, |m, v| if v.is_finite() { m.max(v.abs()) } else { f64::INFINITY });
        if sup > 2.0 * bound + 1e-12 {
            return Err(Error::Unstable {
                step: k,
                sup_norm: sup,
                suggested_steps: 2 * (stages.len() - 1),
            });
        }
        if keep {
            out.push(u.clone());
        }
    }
    if !keep {
        out.push(u);
    }
    Ok(out)
}
