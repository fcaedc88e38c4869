use crate::error::{Error, Result};

use super::stats::summarize;

/// Rule-of-thumb bandwidth `1.06 s k^{-1/5}`.
pub fn silverman_bandwidth(samples: &[f64]) -> Result<f64> {
    let k = samples.len();
    if k < 2 {
        return Err(Error::DegenerateSample(format!("{k} sample(s), at least 2 required")));
    }
    let s = summarize(samples).sd;
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::DegenerateSample("zero variance".into()));
    }
    Ok(1.06 * s * (k as f64).powf(-0.2))
}

/// Gaussian kernel density estimate evaluated on `x_grid`.
pub fn kde(samples: &[f64], x_grid: &[f64]) -> Result<Vec<f64>> {
    let h = silverman_bandwidth(samples)?;
    let norm = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * h * samples.len() as f64);
    Ok(x_grid
        .iter()
        .map(|x| {
            norm * samples
                .iter()
                .map(|p| {
                    let z = (x - p) / h;
                    (-0.5 * z * z).exp()
                })
                .sum::<f64>()
        })
        .collect())
}

/// `n` equispaced points covering the sample padded by `pad` bandwidths on each side.
pub fn padded_grid(samples: &[f64], pad: f64, n: usize) -> Result<Vec<f64>> {
    let h = silverman_bandwidth(samples)?;
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min) - pad * h;
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max) + pad * h;
    let n = n.max(2);
    Ok((0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::trapezoid;

    #[test]
    fn rejects_degenerate_samples() {
        assert!(matches!(kde(&[1.0], &[0.0]), Err(Error::DegenerateSample(_))));
        assert!(matches!(kde(&[1.0, 1.0], &[0.0]), Err(Error::DegenerateSample(_))));
    }

    #[test]
    fn two_point_sample_by_hand() {
        let h = 1.06 * 0.5f64.sqrt() * 2f64.powf(-0.2);
        let fh = |x: f64| (-x * x / (2.0 * h * h)).exp() / ((2.0 * std::f64::consts::PI).sqrt() * h);
        let f = kde(&[0.0, 1.0], &[0.5]).unwrap()[0];
        assert!((f - fh(0.5)).abs() < 1e-15);
    }

    #[test]
    fn integrates_to_one() {
        let xs = [0.3, 0.31, 0.5, 0.9, 0.91, 0.92];
        let grid = padded_grid(&xs, 10.0, 4001).unwrap();
        let f = kde(&xs, &grid).unwrap();
        let mass = trapezoid(&f, grid[1] - grid[0]);
        assert!((mass - 1.0).abs() < 1e-6, "{mass}");
    }
}
