use crate::error::{invalid, Error, Result};

pub const MIN_NODES: usize = 16;

/// Uniform tensor grid over short rate `x` and forward intensity `y`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateGrid {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub y_min: f64,
    pub y_max: f64,
    pub ny: usize,
}

impl StateGrid {
    pub fn new(x_range: (f64, f64), nx: usize, y_range: (f64, f64), ny: usize) -> Result<Self> {
        if nx < MIN_NODES || ny < MIN_NODES {
            return Err(invalid("nx", format!("at least {MIN_NODES} nodes per axis required")));
        }
        if !(x_range.1 > x_range.0) || !x_range.0.is_finite() || !x_range.1.is_finite() {
            return Err(invalid("x_range", "finite range with x_max > x_min required"));
        }
        if !(y_range.1 > y_range.0) || !y_range.0.is_finite() || !y_range.1.is_finite() {
            return Err(invalid("y_range", "finite range with y_max > y_min required"));
        }
        Ok(Self {
            x_min: x_range.0,
            x_max: x_range.1,
            nx,
            y_min: y_range.0,
            y_max: y_range.1,
            ny,
        })
    }

    pub fn hx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nx - 1) as f64
    }

    pub fn hy(&self) -> f64 {
        (self.y_max - self.y_min) / (self.ny - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.hx()
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y_min + j as f64 * self.hy()
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.ny + j
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        let tol_x = 1e-12 * (self.x_max - self.x_min);
        let tol_y = 1e-12 * (self.y_max - self.y_min);
        x >= self.x_min - tol_x && x <= self.x_max + tol_x && y >= self.y_min - tol_y && y <= self.y_max + tol_y
    }

    /// The same ranges with the spacing halved.
    pub fn refined(&self) -> Self {
        Self {
            nx: 2 * self.nx - 1,
            ny: 2 * self.ny - 1,
            ..*self
        }
    }
}

/// Values on a [`StateGrid`], `x`-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFunction {
    pub grid: StateGrid,
    pub values: Vec<f64>,
    /// Calendar time the values refer to.
    pub time: f64,
}

impl GridFunction {
    pub fn from_fn(grid: StateGrid, time: f64, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.nx {
            let x = grid.x(i);
            for j in 0..grid.ny {
                values.push(f(x, grid.y(j)));
            }
        }
        Self { grid, values, time }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Bilinear interpolation inside the grid, linear extrapolation outside.
    pub fn evaluate(&self, x: f64, y: f64) -> f64 {
        bilinear(&self.grid, &self.values, x, y)
    }

    /// Bilinear interpolation; queries outside the grid are an error.
    pub fn interpolate(&self, x: f64, y: f64) -> Result<f64> {
        let g = &self.grid;
        if !g.contains(x, y) {
            return Err(Error::OutOfGrid {
                x,
                y,
                x_min: g.x_min,
                x_max: g.x_max,
                y_min: g.y_min,
                y_max: g.y_max,
            });
        }
        Ok(self.evaluate(x, y))
    }
}

#[inline]
fn cell(pos: f64, n: usize) -> (usize, f64) {
    let i = (pos.floor().max(0.0) as usize).min(n - 2);
    (i, pos - i as f64)
}

#[inline]
pub(crate) fn bilinear(grid: &StateGrid, values: &[f64], x: f64, y: f64) -> f64 {
    let (i, wx) = cell((x - grid.x_min) / grid.hx(), grid.nx);
    let (j, wy) = cell((y - grid.y_min) / grid.hy(), grid.ny);
    let v00 = values[grid.index(i, j)];
    let v01 = values[grid.index(i, j + 1)];
    let v10 = values[grid.index(i + 1, j)];
    let v11 = values[grid.index(i + 1, j + 1)];
    (1.0 - wx) * ((1.0 - wy) * v00 + wy * v01) + wx * ((1.0 - wy) * v10 + wy * v11)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bilinear_reproduces_affine_functions_everywhere() {
        let g = StateGrid::new((0.0, 1.0), 16, (-1.0, 2.0), 20).unwrap();
        let f = GridFunction::from_fn(g, 0.0, |x, y| 1.0 + 2.0 * x - 3.0 * y);
        for &(x, y) in &[(0.33, 0.1), (-0.5, 3.0), (1.7, -2.0)] {
            assert!((f.evaluate(x, y) - (1.0 + 2.0 * x - 3.0 * y)).abs() < 1e-12);
        }
        assert!(f.interpolate(0.5, 0.5).is_ok());
        assert!(matches!(f.interpolate(1.5, 0.5), Err(Error::OutOfGrid { .. })));
    }

    #[test]
    fn small_grids_rejected() {
        assert!(StateGrid::new((0.0, 1.0), 8, (0.0, 1.0), 32).is_err());
    }
}
