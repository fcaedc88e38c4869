/// Moments of a sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (divisor `n - 1`).
    pub sd: f64,
    /// Standard error of the mean.
    pub se: f64,
    /// Moment skewness `m3 / m2^{3/2}`; zero for a constant sample.
    pub skewness: f64,
}

pub fn summarize(xs: &[f64]) -> Summary {
    let n = xs.len();
    if n == 0 {
        return Summary {
            n,
            mean: f64::NAN,
            sd: f64::NAN,
            se: f64::NAN,
            skewness: f64::NAN,
        };
    }
    let nf = n as f64;
    let mean = xs.iter().sum::<f64>() / nf;
    let (m2, m3) = xs.iter().fold((0.0, 0.0), |(a, b), x| {
        let d = x - mean;
        (a + d * d, b + d * d * d)
    });
    let sd = if n > 1 { (m2 / (nf - 1.0)).sqrt() } else { 0.0 };
    let (m2, m3) = (m2 / nf, m3 / nf);
    Summary {
        n,
        mean,
        sd,
        se: sd / nf.sqrt(),
        skewness: if m2 > 0.0 { m3 / m2.powf(1.5) } else { 0.0 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_sample() {
        let s = summarize(&[1.0, 2.0, 3.0, 10.0]);
        assert_eq!(s.mean, 4.0);
        // deviations -3,-2,-1,6: m2 = 50/4, m3 = 180/4
        assert!((s.sd - (50.0f64 / 3.0).sqrt()).abs() < 1e-14);
        assert!((s.skewness - 45.0 / 12.5f64.powf(1.5)).abs() < 1e-14);
        assert!((s.se - s.sd / 2.0).abs() < 1e-15);
        assert_eq!(summarize(&[2.0, 2.0]).skewness, 0.0);
    }
}
