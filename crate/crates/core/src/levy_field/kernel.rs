use nalgebra::DMatrix;

use crate::error::{invalid, require_positive, Error, Result};

/// Correlation structure of the Gaussian part of the field.
#[derive(Clone, Debug, PartialEq)]
pub enum KernelKind {
    /// `c0 δ(ξ)`: independent noise at every point.
    Dirac { c0: f64 },
    /// `|ξ|^{-α}`, evaluated at `max(|ξ|, cutoff)`.
    RieszPower { alpha: f64, cutoff: Option<f64> },
    /// `h(2h-1)|ξ|^{2h-2}`, the covariance density of fractional noise.
    FractionalTime { h: f64, cutoff: Option<f64> },
    /// Linear interpolation of samples on a grid symmetric about zero; zero outside.
    Tabulated { grid: Vec<f64>, density: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationKernel {
    kind: KernelKind,
    dim: usize,
}

impl CorrelationKernel {
    pub fn dirac(c0: f64, dim: usize) -> Result<Self> {
        require_positive("c0", c0)?;
        Ok(Self {
            kind: KernelKind::Dirac { c0 },
            dim,
        })
    }

    pub fn riesz(alpha: f64, dim: usize, cutoff: Option<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::KernelNotAdmissible(
                "Riesz kernel needs dimension >= 1".into(),
            ));
        }
        if !(alpha > 0.0 && alpha < dim as f64) {
            return Err(Error::KernelNotAdmissible(format!(
                "Riesz exponent must lie in (0, {dim}), got {alpha}"
            )));
        }
        if let Some(c) = cutoff {
            require_positive("cutoff", c)?;
        }
        Ok(Self {
            kind: KernelKind::RieszPower { alpha, cutoff },
            dim,
        })
    }

    pub fn fractional_time(h: f64, cutoff: Option<f64>) -> Result<Self> {
        if !(h > 0.5 && h < 1.0) {
            return Err(Error::KernelNotAdmissible(format!(
                "Hurst index must lie in (1/2, 1), got {h}"
            )));
        }
        if let Some(c) = cutoff {
            require_positive("cutoff", c)?;
        }
        Ok(Self {
            kind: KernelKind::FractionalTime { h, cutoff },
            dim: 1,
        })
    }

    pub fn tabulated(grid: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        if grid.len() != density.len() || grid.len() < 2 {
            return Err(invalid("density", "grid and samples must have equal length >= 2"));
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("grid", "grid must be strictly increasing"));
        }
        let n = grid.len();
        for i in 0..n {
            if grid[i] != -grid[n - 1 - i] || density[i] != density[n - 1 - i] {
                return Err(Error::KernelNotAdmissible(
                    "tabulated density must be symmetric about zero".into(),
                ));
            }
        }
        if density.iter().any(|d| !d.is_finite()) {
            return Err(invalid("density", "samples must be finite"));
        }
        Ok(Self {
            kind: KernelKind::Tabulated { grid, density },
            dim: 1,
        })
    }

    pub fn kind(&self) -> &KernelKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_dirac(&self) -> bool {
        matches!(self.kind, KernelKind::Dirac { .. })
    }

    /// Density value at separation `xi`, with `cutoff` standing in for an unset cutoff.
    /// Not meaningful for the Dirac kernel.
    pub fn density(&self, xi: &[f64], default_cutoff: f64) -> f64 {
        let r = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
        match &self.kind {
            KernelKind::Dirac { .. } => 0.0,
            KernelKind::RieszPower { alpha, cutoff } => {
                r.max(cutoff.unwrap_or(default_cutoff)).powf(-alpha)
            }
            KernelKind::FractionalTime { h, cutoff } => {
                h * (2.0 * h - 1.0) * r.max(cutoff.unwrap_or(default_cutoff)).powf(2.0 * h - 2.0)
            }
            KernelKind::Tabulated { grid, density } => {
                let x = xi.first().copied().unwrap_or(0.0);
                interp_or_zero(grid, density, x)
            }
        }
    }
}

fn interp_or_zero(grid: &[f64], values: &[f64], x: f64) -> f64 {
    if x < grid[0] || x > grid[grid.len() - 1] {
        return 0.0;
    }
    let k = grid.partition_point(|g| *g <= x).clamp(1, grid.len() - 1);
    let (x0, x1) = (grid[k - 1], grid[k]);
    let w = (x - x0) / (x1 - x0);
    values[k - 1] * (1.0 - w) + values[k] * w
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Half the smallest distance between distinct nodes.
pub fn default_cutoff(nodes: &[Vec<f64>]) -> Option<f64> {
    let mut best = f64::INFINITY;
    for i in 0..nodes.len() {
        for j in i + 1..nodes.len() {
            let d = distance(&nodes[i], &nodes[j]);
            if d > 0.0 && d < best {
                best = d;
            }
        }
    }
    best.is_finite().then_some(0.5 * best)
}

/// Weighted kernel matrix `w_i w_j c(ξ_i - ξ_j)`; `diag(c0 w_i)` for the Dirac kernel.
pub fn kernel_matrix(
    kernel: &CorrelationKernel,
    nodes: &[Vec<f64>],
    weights: &[f64],
) -> Result<DMatrix<f64>> {
    let n = nodes.len();
    if n == 0 || weights.len() != n {
        return Err(invalid("weights", "one weight per node required"));
    }
    if let Some(p) = nodes.iter().find(|p| p.len() != kernel.dim()) {
        return Err(invalid(
            "nodes",
            format!("node of dimension {} for a kernel of dimension {}", p.len(), kernel.dim()),
        ));
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
        return Err(invalid("weights", format!("positive real required, got {w}")));
    }
    if let KernelKind::Dirac { c0 } = kernel.kind() {
        return Ok(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                c0 * weights[i]
            } else {
                0.0
            }
        }));
    }
    let needs_cutoff = matches!(
        kernel.kind(),
        KernelKind::RieszPower { cutoff: None, .. } | KernelKind::FractionalTime { cutoff: None, .. }
    );
    let cutoff = match default_cutoff(nodes) {
        Some(c) => c,
        None if needs_cutoff => {
            return Err(invalid("cutoff", "an explicit cutoff is needed for a single node"))
        }
        None => 1.0,
    };
    let mut sep = vec![0.0; kernel.dim()];
    Ok(DMatrix::from_fn(n, n, |i, j| {
        for (s, (a, b)) in sep.iter_mut().zip(nodes[i].iter().zip(&nodes[j])) {
            *s = a - b;
        }
        weights[i] * weights[j] * kernel.density(&sep, cutoff)
    }))
}
