use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson};

use crate::error::{invalid, require_nonnegative, Error, Result};
use crate::quadrature::gauss_laguerre;
use crate::rng::PathStreams;

pub const DEFAULT_QUADRATURE_NODES: usize = 32;

#[derive(Clone, Debug, PartialEq)]
pub enum MeasureKind {
    /// No jumps.
    Zero,
    /// Density `(ζ/ϖ) e^{-ξ/ϖ}` on `ξ > 0`: total mass `ζ`, exponential marks with mean `ϖ`.
    Exponential { zeta: f64, varpi: f64 },
    /// Mass `z` at `ξ = 1`.
    PointMass { z: f64 },
    /// Finitely many atoms.
    Tabulated { nodes: Vec<f64>, weights: Vec<f64> },
}

/// A finite-activity Lévy measure together with a quadrature rule for it.
#[derive(Clone, Debug, PartialEq)]
pub struct LevyMeasure {
    kind: MeasureKind,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl LevyMeasure {
    pub fn zero() -> Self {
        Self {
            kind: MeasureKind::Zero,
            nodes: Vec::new(),
            weights: Vec::new(),
        }
    }

    /// Exponential density; `ζ = 0` or `ϖ = 0` gives the zero measure.
    pub fn exponential(zeta: f64, varpi: f64) -> Result<Self> {
        Self::exponential_with_nodes(zeta, varpi, DEFAULT_QUADRATURE_NODES)
    }

    pub fn exponential_with_nodes(zeta: f64, varpi: f64, quadrature_nodes: usize) -> Result<Self> {
        require_nonnegative("zeta", zeta)?;
        require_nonnegative("varpi", varpi)?;
        if quadrature_nodes == 0 {
            return Err(invalid("quadrature_nodes", "at least one node required"));
        }
        if zeta == 0.0 || varpi == 0.0 {
            return Ok(Self::zero());
        }
        let (x, w) = gauss_laguerre(quadrature_nodes);
        Ok(Self {
            kind: MeasureKind::Exponential { zeta, varpi },
            nodes: x.iter().map(|x| varpi * x).collect(),
            weights: w.iter().map(|w| zeta * w).collect(),
        })
    }

    pub fn point_mass(z: f64) -> Result<Self> {
        require_nonnegative("z", z)?;
        if z == 0.0 {
            return Ok(Self::zero());
        }
        Ok(Self {
            kind: MeasureKind::PointMass { z },
            nodes: vec![1.0],
            weights: vec![z],
        })
    }

    pub fn tabulated(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if nodes.len() != weights.len() {
            return Err(invalid("weights", "one weight per node required"));
        }
        if nodes.iter().any(|x| !x.is_finite()) {
            return Err(invalid("nodes", "finite marks required"));
        }
        if weights.iter().any(|w| w.is_infinite()) {
            return Err(Error::FiniteActivityRequired("tabulated mass is infinite".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(invalid("weights", "nonnegative real required"));
        }
        Ok(Self {
            kind: MeasureKind::Tabulated {
                nodes: nodes.clone(),
                weights: weights.clone(),
            },
            nodes,
            weights,
        })
    }

    /// The gamma sheet has infinite activity and cannot be simulated exactly here.
    pub fn gamma_sheet(_rate: f64) -> Result<Self> {
        Err(Error::FiniteActivityRequired(
            "the gamma sheet has infinite total mass".into(),
        ))
    }

    pub fn kind(&self) -> &MeasureKind {
        &self.kind
    }

    pub fn is_zero(&self) -> bool {
        self.total_mass() == 0.0
    }

    /// Quadrature nodes and weights against `ν`.
    pub fn quadrature(&self) -> (&[f64], &[f64]) {
        (&self.nodes, &self.weights)
    }

    pub fn total_mass(&self) -> f64 {
        match &self.kind {
            MeasureKind::Zero => 0.0,
            MeasureKind::Exponential { zeta, .. } => *zeta,
            MeasureKind::PointMass { z } => *z,
            MeasureKind::Tabulated { weights, .. } => weights.iter().sum(),
        }
    }

    /// `∫ g dν` by quadrature.
    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * g(*x)).sum()
    }

    /// `∫ ξ dν`.
    pub fn first_moment(&self) -> f64 {
        match &self.kind {
            MeasureKind::Exponential { zeta, varpi } => zeta * varpi,
            _ => self.integrate(|x| x),
        }
    }

    /// `∫ ξ² dν`.
    pub fn second_moment(&self) -> f64 {
        match &self.kind {
            MeasureKind::Exponential { zeta, varpi } => 2.0 * zeta * varpi * varpi,
            _ => self.integrate(|x| x * x),
        }
    }

    /// `∫ (1 - e^{-sξ}) dν`, exact for every kind.
    pub fn laplace_mass(&self, s: f64) -> f64 {
        match &self.kind {
            MeasureKind::Exponential { zeta, varpi } => zeta * varpi * s / (1.0 + varpi * s),
            _ => self.integrate(|x| -(-s * x).exp_m1()),
        }
    }

    /// `∫ ξ e^{-sξ} dν`, exact for every kind.
    pub fn tilted_first_moment(&self, s: f64) -> f64 {
        match &self.kind {
            MeasureKind::Exponential { zeta, varpi } => {
                let d = 1.0 + varpi * s;
                zeta * varpi / (d * d)
            }
            _ => self.integrate(|x| x * (-s * x).exp()),
        }
    }

    /// A mark drawn from `ν / ν(ℝ)`.
    pub fn sample_mark<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            MeasureKind::Zero => 0.0,
            MeasureKind::Exponential { varpi, .. } => {
                let e: f64 = Exp1.sample(rng);
                varpi * e
            }
            MeasureKind::PointMass { .. } => 1.0,
            MeasureKind::Tabulated { nodes, weights } => {
                let total: f64 = weights.iter().sum();
                let mut u = rng.random::<f64>() * total;
                for (x, w) in nodes.iter().zip(weights) {
                    if u < *w {
                        return *x;
                    }
                    u -= w;
                }
                *nodes.last().unwrap_or(&0.0)
            }
        }
    }
}

/// One atom of the Poisson random measure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jump {
    pub time: f64,
    pub mark: f64,
}

/// Jumps on `[t, t + dt)`, sorted by time.
pub fn sample_jumps(
    measure: &LevyMeasure,
    t: f64,
    dt: f64,
    streams: &mut PathStreams,
) -> Result<Vec<Jump>> {
    let mass = measure.total_mass();
    if !mass.is_finite() {
        return Err(Error::FiniteActivityRequired("total mass is infinite".into()));
    }
    let rate = mass * dt;
    if rate <= 0.0 {
        return Ok(Vec::new());
    }
    let poisson = Poisson::new(rate).map_err(|e| invalid("dt", e.to_string()))?;
    let count = poisson.sample(&mut streams.poisson_count) as usize;
    let mut jumps: Vec<Jump> = (0..count)
        .map(|_| Jump {
            time: t + dt * streams.poisson_times.random::<f64>(),
            mark: measure.sample_mark(&mut streams.poisson_marks),
        })
        .collect();
    jumps.sort_by(|a, b| a.time.total_cmp(&b.time));
    Ok(jumps)
}

/// Jumps on `[t, t + dt)` drawn from a single generator.
pub fn sample_jumps_with<R: Rng + ?Sized>(
    measure: &LevyMeasure,
    t: f64,
    dt: f64,
    rng: &mut R,
) -> Result<Vec<Jump>> {
    let mass = measure.total_mass();
    if !mass.is_finite() {
        return Err(Error::FiniteActivityRequired("total mass is infinite".into()));
    }
    let rate = mass * dt;
    if rate <= 0.0 {
        return Ok(Vec::new());
    }
    let poisson = Poisson::new(rate).map_err(|e| invalid("dt", e.to_string()))?;
    let count = poisson.sample(rng) as usize;
    let mut jumps: Vec<Jump> = (0..count)
        .map(|_| Jump {
            time: t + dt * rng.random::<f64>(),
            mark: measure.sample_mark(rng),
        })
        .collect();
    jumps.sort_by(|a, b| a.time.total_cmp(&b.time));
    Ok(jumps)
}

/// `Σ_j g(ξ_j) - dt ∫ g dν` over one step.
pub fn compensated_integral(
    jumps: &[Jump],
    g: impl Fn(f64) -> f64,
    measure: &LevyMeasure,
    dt: f64,
) -> f64 {
    jumps.iter().map(|j| g(j.mark)).sum::<f64>() - dt * measure.integrate(&g)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_quadrature_moments() {
        let m = LevyMeasure::exponential(10.0, 1e-3).unwrap();
        assert!((m.integrate(|_| 1.0) - 10.0).abs() < 1e-9);
        assert!((m.integrate(|x| x) - 1e-2).abs() < 1e-12);
        assert!((m.integrate(|x| x * x) - 2e-5).abs() < 1e-15);
        let s = 37.0;
        assert!((m.integrate(|x| -(-s * x).exp_m1()) - m.laplace_mass(s)).abs() < 1e-12);
        assert!((m.integrate(|x| x * (-s * x).exp()) - m.tilted_first_moment(s)).abs() < 1e-12);
    }

    #[test]
    fn zero_measure() {
        let m = LevyMeasure::exponential(10.0, 0.0).unwrap();
        assert!(m.is_zero());
        let mut s = PathStreams::new(1, 0);
        assert!(sample_jumps(&m, 0.0, 1.0, &mut s).unwrap().is_empty());
    }

    #[test]
    fn gamma_sheet_rejected() {
        assert!(matches!(
            LevyMeasure::gamma_sheet(1.0),
            Err(Error::FiniteActivityRequired(_))
        ));
        assert!(matches!(
            LevyMeasure::tabulated(vec![1.0], vec![f64::INFINITY]),
            Err(Error::FiniteActivityRequired(_))
        ));
    }

    #[test]
    fn point_mass_marks() {
        let m = LevyMeasure::point_mass(3.0).unwrap();
        let mut s = PathStreams::new(3, 0);
        let jumps = sample_jumps(&m, 1.0, 2.0, &mut s).unwrap();
        assert!(jumps.iter().all(|j| j.mark == 1.0 && (1.0..3.0).contains(&j.time)));
        assert!(jumps.windows(2).all(|w| w[0].time <= w[1].time));
    }

    #[test]
    fn poisson_counts_have_the_right_mean() {
        let m = LevyMeasure::exponential(10.0, 1e-3).unwrap();
        let n = 20_000;
        let mut total = 0usize;
        let mut marks = 0.0;
        for p in 0..n {
            let mut s = PathStreams::new(11, p);
            let j = sample_jumps(&m, 0.0, 0.1, &mut s).unwrap();
            total += j.len();
            marks += j.iter().map(|j| j.mark).sum::<f64>();
        }
        let mean = total as f64 / n as f64;
        // Poisson(1): SE of the mean is 1/sqrt(n)
        assert!((mean - 1.0).abs() < 4.0 / (n as f64).sqrt(), "{mean}");
        let mark_mean = marks / total as f64;
        assert!((mark_mean / 1e-3 - 1.0).abs() < 0.05, "{mark_mean}");
    }
}
