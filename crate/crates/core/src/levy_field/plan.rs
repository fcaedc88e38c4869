use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use super::kernel::{kernel_matrix, CorrelationKernel};
use super::measure::{sample_jumps, Jump, LevyMeasure};
use crate::error::{invalid, require_positive, Error, Result};
use crate::rng::PathStreams;

const JITTER: f64 = 1e-10;

/// A discretised ξ-space: nodes with quadrature weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Discretization {
    pub nodes: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl Discretization {
    /// The single point of a zero-dimensional parameter space.
    pub fn point() -> Self {
        Self {
            nodes: vec![Vec::new()],
            weights: vec![1.0],
        }
    }

    /// Midpoint rule with `n` cells on `[a, b]`.
    pub fn midpoints(a: f64, b: f64, n: usize) -> Result<Self> {
        if n == 0 || !(b > a) {
            return Err(invalid("nodes", "need n >= 1 and b > a"));
        }
        let h = (b - a) / n as f64;
        Ok(Self {
            nodes: (0..n).map(|i| vec![a + (i as f64 + 0.5) * h]).collect(),
            weights: vec![h; n],
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Precomputed factor of the weighted kernel matrix for a fixed discretisation.
#[derive(Clone, Debug)]
pub struct FieldIncrementPlan {
    kernel: CorrelationKernel,
    grid: Discretization,
    time_step: f64,
    matrix: DMatrix<f64>,
    factor: DMatrix<f64>,
}

impl FieldIncrementPlan {
    pub fn new(kernel: CorrelationKernel, grid: Discretization, time_step: f64) -> Result<Self> {
        require_positive("delta_t", time_step)?;
        let matrix = kernel_matrix(&kernel, &grid.nodes, &grid.weights)?;
        let n = matrix.nrows();
        let max_diag = (0..n).map(|i| matrix[(i, i)]).fold(0.0, f64::max);
        if !(max_diag > 0.0) {
            return Err(Error::KernelNotAdmissible(
                "weighted kernel matrix has no positive diagonal".into(),
            ));
        }
        let mut jittered = matrix.clone();
        for i in 0..n {
            jittered[(i, i)] += JITTER * max_diag;
        }
        let factor = Cholesky::new(jittered)
            .ok_or_else(|| {
                Error::KernelNotAdmissible(
                    "weighted kernel matrix is not positive semidefinite".into(),
                )
            })?
            .l();
        Ok(Self {
            kernel,
            grid,
            time_step,
            matrix,
            factor,
        })
    }

    /// Scalar Brownian driver: a Dirac kernel on a single point.
    pub fn scalar(c0: f64, time_step: f64) -> Result<Self> {
        Self::new(CorrelationKernel::dirac(c0, 0)?, Discretization::point(), time_step)
    }

    pub fn kernel(&self) -> &CorrelationKernel {
        &self.kernel
    }

    pub fn grid(&self) -> &Discretization {
        &self.grid
    }

    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.grid.nodes
    }

    pub fn time_step(&self) -> f64 {
        self.time_step
    }

    pub fn kernel_matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// `aᵀ K_w b`.
    pub fn quadratic_form(&self, a: &[f64], b: &[f64]) -> f64 {
        let b = DVector::from_column_slice(b);
        let kb = &self.matrix * b;
        a.iter().zip(kb.iter()).map(|(x, y)| x * y).sum()
    }

    /// `L z` for a standard normal vector `z`.
    pub fn correlate(&self, z: &[f64]) -> Vec<f64> {
        let z = DVector::from_column_slice(z);
        (&self.factor * z).iter().copied().collect()
    }

    pub fn draw_normals<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.len()).map(|_| rng.sample(StandardNormal)).collect()
    }

    /// `√Δt hᵀ L Z`, Gaussian with variance `Δt hᵀ K_w h`.
    pub fn gaussian_increment<R: Rng + ?Sized>(&self, integrand: &[f64], rng: &mut R) -> f64 {
        let v = self.correlate(&self.draw_normals(rng));
        self.time_step.sqrt() * integrand.iter().zip(&v).map(|(h, v)| h * v).sum::<f64>()
    }
}

/// The noise of one time step: correlated Gaussian factors and Poisson atoms.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldDraw {
    pub t: f64,
    pub dt: f64,
    /// `L Z`, one entry per ξ-node.
    pub correlated: Vec<f64>,
    pub jumps: Vec<Jump>,
}

impl FieldDraw {
    pub fn sample(
        plan: &FieldIncrementPlan,
        measure: &LevyMeasure,
        t: f64,
        dt: f64,
        streams: &mut PathStreams,
    ) -> Result<Self> {
        let z = plan.draw_normals(&mut streams.gaussian);
        Ok(Self {
            t,
            dt,
            correlated: plan.correlate(&z),
            jumps: sample_jumps(measure, t, dt, streams)?,
        })
    }

    /// A step of a scalar driver with Brownian increment `dw`.
    pub fn scalar(t: f64, dt: f64, dw: f64, jumps: Vec<Jump>) -> Self {
        Self {
            t,
            dt,
            correlated: vec![dw / dt.sqrt()],
            jumps,
        }
    }

    /// One coarse step carrying the same noise as consecutive fine steps.
    pub fn merge(steps: &[FieldDraw]) -> Self {
        let dt: f64 = steps.iter().map(|d| d.dt).sum();
        let n = steps.first().map_or(0, |d| d.correlated.len());
        let correlated = (0..n)
            .map(|i| {
                steps
                    .iter()
                    .map(|d| d.dt.sqrt() * d.correlated[i])
                    .sum::<f64>()
                    / dt.sqrt()
            })
            .collect();
        Self {
            t: steps.first().map_or(0.0, |d| d.t),
            dt,
            correlated,
            jumps: steps.iter().flat_map(|d| d.jumps.iter().copied()).collect(),
        }
    }

    /// `∫ h dW` over the step, for integrand values at the ξ-nodes.
    pub fn gaussian(&self, integrand: &[f64]) -> f64 {
        self.dt.sqrt()
            * integrand
                .iter()
                .zip(&self.correlated)
                .map(|(h, v)| h * v)
                .sum::<f64>()
    }

    /// `∫ h dW` for an integrand constant in ξ.
    pub fn gaussian_flat(&self, h: f64) -> f64 {
        self.dt.sqrt() * h * self.correlated.iter().sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Channel};

    #[test]
    fn linearity_in_the_integrand() {
        let plan = FieldIncrementPlan::new(
            CorrelationKernel::riesz(0.5, 1, None).unwrap(),
            Discretization::midpoints(0.0, 1.0, 8).unwrap(),
            0.01,
        )
        .unwrap();
        let a = plan.gaussian_increment(&[1.0; 8], &mut stream(5, 0, Channel::Gaussian));
        let b = plan.gaussian_increment(&[2.0; 8], &mut stream(5, 0, Channel::Gaussian));
        assert_eq!(2.0 * a, b);
    }

    #[test]
    fn variance_matches_quadratic_form() {
        let plan = FieldIncrementPlan::new(
            CorrelationKernel::riesz(0.5, 1, None).unwrap(),
            Discretization::midpoints(0.0, 1.0, 6).unwrap(),
            0.25,
        )
        .unwrap();
        let h: Vec<f64> = (0..6).map(|i| 1.0 + i as f64 * 0.2).collect();
        let expect = 0.25 * plan.quadratic_form(&h, &h);
        let mut rng = stream(9, 0, Channel::Gaussian);
        let n = 40_000;
        let var = (0..n)
            .map(|_| plan.gaussian_increment(&h, &mut rng).powi(2))
            .sum::<f64>()
            / n as f64;
        // relative SE of a chi-square mean is sqrt(2/n) ≈ 0.007
        assert!((var / expect - 1.0).abs() < 0.03, "{var} vs {expect}");
    }

    #[test]
    fn non_psd_kernel_rejected() {
        // a triangle-shaped density with a large hole at zero is not positive definite
        let k = CorrelationKernel::tabulated(
            vec![-1.0, -0.5, 0.0, 0.5, 1.0],
            vec![1.0, 5.0, 0.0, 5.0, 1.0],
        )
        .unwrap();
        let grid = Discretization::midpoints(0.0, 2.0, 4).unwrap();
        assert!(matches!(
            FieldIncrementPlan::new(k, grid, 0.1),
            Err(Error::KernelNotAdmissible(_))
        ));
    }

    #[test]
    fn scalar_driver_has_unit_variance() {
        let plan = FieldIncrementPlan::scalar(1.0, 1.0).unwrap();
        assert_eq!(plan.kernel_matrix()[(0, 0)], 1.0);
        let d = FieldDraw::scalar(0.0, 0.04, 0.3, vec![]);
        assert!((d.gaussian(&[2.0]) - 0.6).abs() < 1e-15);
    }
}
