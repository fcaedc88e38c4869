use super::coefficients::OperatorCoefficients;
use super::grid::{bilinear, GridFunction, StateGrid};

/// A tridiagonal operator along one axis, identical for every line.
#[derive(Clone, Debug)]
pub(crate) struct Tridiag {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiag {
    /// `a ∂² + v ∂ + reaction` with hybrid central/upwind differencing and
    /// linear extrapolation through the end nodes.
    pub fn convection_diffusion(
        n: usize,
        h: f64,
        a: f64,
        velocity: impl Fn(usize) -> f64,
        reaction: impl Fn(usize) -> f64,
    ) -> Self {
        let mut lower = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut upper = vec![0.0; n];
        let h2 = h * h;
        for i in 0..n {
            let v = velocity(i);
            let (mut lo, mut d, mut up) = (a / h2, -2.0 * a / h2, a / h2);
            if v.abs() * h <= 2.0 * a {
                lo -= v / (2.0 * h);
                up += v / (2.0 * h);
            } else if v > 0.0 {
                up += v / h;
                d -= v / h;
            } else {
                lo -= v / h;
                d += v / h;
            }
            d += reaction(i);
            if i == 0 {
                d += 2.0 * lo;
                up -= lo;
                lo = 0.0;
            }
            if i == n - 1 {
                d += 2.0 * up;
                lo -= up;
                up = 0.0;
            }
            lower[i] = lo;
            diag[i] = d;
            upper[i] = up;
        }
        Self { lower, diag, upper }
    }

    /// Factorisation of `I - c A` for repeated solves.
    pub fn shifted_factor(&self, c: f64) -> Thomas {
        let n = self.diag.len();
        let mut sub = vec![0.0; n];
        let mut cp = vec![0.0; n];
        let mut inv = vec![0.0; n];
        let mut prev_cp = 0.0;
        for i in 0..n {
            let a = -c * self.lower[i];
            let b = 1.0 - c * self.diag[i];
            let u = -c * self.upper[i];
            let denom = b - a * prev_cp;
            inv[i] = 1.0 / denom;
            cp[i] = u * inv[i];
            sub[i] = a;
            prev_cp = cp[i];
        }
        Thomas { sub, cp, inv }
    }
}

pub(crate) struct Thomas {
    sub: Vec<f64>,
    cp: Vec<f64>,
    inv: Vec<f64>,
}

/// `out += c · A_x u`.
pub(crate) fn add_x(op: &Tridiag, grid: &StateGrid, u: &[f64], c: f64, out: &mut [f64]) {
    let ny = grid.ny;
    for i in 0..grid.nx {
        let (lo, d, up) = (op.lower[i], op.diag[i], op.upper[i]);
        let row = i * ny;
        for j in 0..ny {
            let mut s = d * u[row + j];
            if i > 0 {
                s += lo * u[row - ny + j];
            }
            if i + 1 < grid.nx {
                s += up * u[row + ny + j];
            }
            out[row + j] += c * s;
        }
    }
}

/// `out += c · A_y u`.
pub(crate) fn add_y(op: &Tridiag, grid: &StateGrid, u: &[f64], c: f64, out: &mut [f64]) {
    let ny = grid.ny;
    for i in 0..grid.nx {
        let line = &u[i * ny..(i + 1) * ny];
        let dst = &mut out[i * ny..(i + 1) * ny];
        for j in 0..ny {
            let mut s = op.diag[j] * line[j];
            if j > 0 {
                s += op.lower[j] * line[j - 1];
            }
            if j + 1 < ny {
                s += op.upper[j] * line[j + 1];
            }
            dst[j] += c * s;
        }
    }
}

/// Solves `(I - cA_x) X = R` in place.
pub(crate) fn solve_x(f: &Thomas, grid: &StateGrid, rhs: &mut [f64]) {
    let ny = grid.ny;
    for j in 0..ny {
        rhs[j] *= f.inv[0];
    }
    for i in 1..grid.nx {
        let (a, inv) = (f.sub[i], f.inv[i]);
        for j in 0..ny {
            let prev = rhs[(i - 1) * ny + j];
            let cur = &mut rhs[i * ny + j];
            *cur = (*cur - a * prev) * inv;
        }
    }
    for i in (0..grid.nx - 1).rev() {
        let cp = f.cp[i];
        for j in 0..ny {
            let next = rhs[(i + 1) * ny + j];
            rhs[i * ny + j] -= cp * next;
        }
    }
}

/// Solves `(I - cA_y) X = R` in place.
pub(crate) fn solve_y(f: &Thomas, grid: &StateGrid, rhs: &mut [f64]) {
    let ny = grid.ny;
    for line in rhs.chunks_mut(ny) {
        line[0] *= f.inv[0];
        for j in 1..ny {
            line[j] = (line[j] - f.sub[j] * line[j - 1]) * f.inv[j];
        }
        for j in (0..ny - 1).rev() {
            line[j] -= f.cp[j] * line[j + 1];
        }
    }
}

/// Value with linear extrapolation to one ghost layer.
#[inline]
fn ghost(grid: &StateGrid, u: &[f64], i: isize, j: isize) -> f64 {
    let nx = grid.nx as isize;
    let ny = grid.ny as isize;
    if i < 0 {
        return 2.0 * ghost(grid, u, 0, j) - ghost(grid, u, 1, j);
    }
    if i >= nx {
        return 2.0 * ghost(grid, u, nx - 1, j) - ghost(grid, u, nx - 2, j);
    }
    if j < 0 {
        return 2.0 * ghost(grid, u, i, 0) - ghost(grid, u, i, 1);
    }
    if j >= ny {
        return 2.0 * ghost(grid, u, i, ny - 1) - ghost(grid, u, i, ny - 2);
    }
    u[i as usize * grid.ny + j as usize]
}

/// `out += c · a12 ∂²u/∂x∂y`.
pub(crate) fn add_mixed(a12: f64, grid: &StateGrid, u: &[f64], c: f64, out: &mut [f64]) {
    if a12 == 0.0 {
        return;
    }
    let ny = grid.ny;
    let scale = c * a12 / (4.0 * grid.hx() * grid.hy());
    for i in 0..grid.nx {
        let interior_i = i > 0 && i + 1 < grid.nx;
        for j in 0..ny {
            let v = if interior_i && j > 0 && j + 1 < ny {
                u[(i + 1) * ny + j + 1] - u[(i + 1) * ny + j - 1] - u[(i - 1) * ny + j + 1]
                    + u[(i - 1) * ny + j - 1]
            } else {
                let (ii, jj) = (i as isize, j as isize);
                ghost(grid, u, ii + 1, jj + 1) - ghost(grid, u, ii + 1, jj - 1)
                    - ghost(grid, u, ii - 1, jj + 1)
                    + ghost(grid, u, ii - 1, jj - 1)
            };
            out[i * ny + j] += scale * v;
        }
    }
}

/// `out += c · Σ_q w_q [u(x+φ_q, y+γ_q) - u(x, y)]`.
pub(crate) fn add_jumps(coeffs: &OperatorCoefficients, grid: &StateGrid, u: &[f64], c: f64, out: &mut [f64]) {
    for node in &coeffs.jumps {
        let w = c * node.weight;
        if w == 0.0 {
            continue;
        }
        for i in 0..grid.nx {
            let x = grid.x(i) + node.dx;
            for j in 0..grid.ny {
                let k = i * grid.ny + j;
                out[k] += w * (bilinear(grid, u, x, grid.y(j) + node.dy) - u[k]);
            }
        }
    }
}

/// `∫[K(x+φ, y+γ) - K - φ ∂_x K - γ ∂_y K] ν(dξ)` at every node.
///
/// Derivatives are central in the interior and one-sided on the edges.
pub fn apply_jump_operator(k: &GridFunction, coeffs: &OperatorCoefficients) -> GridFunction {
    let g = k.grid;
    let u = &k.values;
    let mut out = vec![0.0; u.len()];
    add_jumps(coeffs, &g, u, 1.0, &mut out);
    let cx = coeffs.compensator_x();
    let cy = coeffs.compensator_y();
    let (hx, hy) = (g.hx(), g.hy());
    for i in 0..g.nx {
        for j in 0..g.ny {
            let dx = match i {
                0 => (k.at(1, j) - k.at(0, j)) / hx,
                _ if i == g.nx - 1 => (k.at(i, j) - k.at(i - 1, j)) / hx,
                _ => (k.at(i + 1, j) - k.at(i - 1, j)) / (2.0 * hx),
            };
            let dy = match j {
                0 => (k.at(i, 1) - k.at(i, 0)) / hy,
                _ if j == g.ny - 1 => (k.at(i, j) - k.at(i, j - 1)) / hy,
                _ => (k.at(i, j + 1) - k.at(i, j - 1)) / (2.0 * hy),
            };
            out[g.index(i, j)] -= cx * dx + cy * dy;
        }
    }
    GridFunction {
        grid: g,
        values: out,
        time: k.time,
    }
}
