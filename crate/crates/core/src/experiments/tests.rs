use super::*;
use crate::term_structure::{density, DensityScheme, JumpSign};

const BASELINE: f64 = 0.946_770_056_608_464_7;

fn small(paths: usize) -> ExperimentConfig {
    ExperimentConfig {
        n_paths: paths,
        theta_max: Some(30.0),
        ..ExperimentConfig::default()
    }
}

#[test]
fn deterministic_baseline() {
    let cfg = ExperimentConfig {
        sigma: 0.0,
        b: 0.0,
        ..small(20)
    };
    let full = ExperimentConfig { n_paths: 3, ..ExperimentConfig { theta_max: None, ..cfg.clone() } };
    for c in [cfg, full] {
        let d = run_price_distribution(&c).unwrap();
        assert_eq!(d.rejected(), 0);
        for p in d.prices() {
            assert!((p - BASELINE).abs() < 1e-6, "{p}");
        }
    }
}

#[test]
fn aggregated_route_equals_stepping() {
    for sign in [JumpSign::Positive, JumpSign::Negative] {
        let cfg = ExperimentConfig {
            sigma: 0.01,
            varpi: 0.05,
            sign,
            ..small(1)
        };
        let start = (cfg.t / cfg.delta).round() as usize;
        for path in 0..5 {
            let slow = density_path(&cfg, path).unwrap();
            let fast = density_path_fast(&cfg, path).unwrap();
            for i in start..fast.len() {
                let (a, b) = (slow.alpha[i], fast[i]);
                assert!((a - b).abs() <= 1e-11 * a.abs().max(1e-3), "{sign:?} i={i}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn intensity_route_cross_validates_under_negative_sign() {
    let cfg = ExperimentConfig {
        sigma: 0.01,
        varpi: 0.05,
        sign: JumpSign::Negative,
        theta_max: Some(5.0),
        ..small(1)
    };
    let start = (cfg.t / cfg.delta).round() as usize;
    for path in 0..3 {
        let fast = density_path_fast(&cfg, path).unwrap();
        let lam = density(&intensity_path(&cfg, path).unwrap()).unwrap();
        let gap = (start..fast.len()).map(|i| (fast[i] - lam[i]).abs()).fold(0.0, f64::max);
        assert!(gap < 1e-5, "{gap}");
    }
}

#[test]
fn identical_across_worker_counts() {
    let cfg = small(64);
    let one = run_price_distribution_with_workers(&cfg, 1).unwrap();
    let many = run_price_distribution_with_workers(&cfg, 4).unwrap();
    assert_eq!(one, many);
    assert_eq!(one, run_price_distribution(&cfg).unwrap());
}

#[test]
fn euler_scheme_runs_through_the_same_pricer() {
    let cfg = ExperimentConfig {
        scheme: DensityScheme::Euler,
        ..small(8)
    };
    let d = run_price_distribution(&cfg).unwrap();
    let e = run_price_distribution(&small(8)).unwrap();
    for (a, b) in d.prices().iter().zip(e.prices()) {
        assert!((a - b).abs() < 1e-3, "{a} {b}");
    }
}

#[test]
fn jumps_fatten_the_right_tail() {
    let run = |varpi| {
        let d = run_price_distribution(&ExperimentConfig { varpi, ..small(2000) }).unwrap();
        summarize(&d.prices()).skewness
    };
    let (s0, s2) = (run(0.0), run(0.002));
    assert!(s2 > s0, "{s2} vs {s0}");
}

#[test]
fn prices_respect_bounds_on_unflagged_paths() {
    let cfg = ExperimentConfig { varpi: 0.01, ..small(500) };
    let d = run_price_distribution(&cfg).unwrap();
    let b = cfg.discount();
    for o in &d.outcomes {
        if let (Some(p), false) = (o.price, o.flagged) {
            assert!(p >= cfg.recovery * b - 1e-12 && p <= b + 1e-12, "{p}");
        }
    }
}

#[test]
fn density_probes_are_martingales() {
    let d = run_price_distribution(&small(4000)).unwrap();
    for (i, a0) in d.initial_probes.iter().enumerate() {
        let s = d.probe_summary(i);
        assert!((s.mean - a0).abs() < 3.0 * s.se, "θ={} {} vs {a0} (se {})", d.probe_thetas[i], s.mean, s.se);
    }
}

#[test]
fn near_deterministic_mean_matches_baseline() {
    let rows = sweep(
        &ExperimentConfig { sigma: 1e-6, ..small(500) },
        SweepAxis::Varpi,
        &[0.0],
    )
    .unwrap();
    // the θ-sum carries a deterministic bias below 1e-6, far above the noise
    assert!((rows[0].mean - BASELINE).abs() < (3.0 * rows[0].se).max(1e-6), "{:?}", rows[0]);
}

#[test]
fn sweep_cells_use_distinct_seeds() {
    let rows = sweep(&small(50), SweepAxis::Lambda, &[0.1, 0.1]).unwrap();
    assert_ne!(rows[0].mean, rows[1].mean);
    assert!(sweep(&small(5), SweepAxis::Varpi, &[0.2, 0.1]).is_err());
    assert_eq!("T".parse::<SweepAxis>().unwrap(), SweepAxis::Maturity);
}

#[test]
fn invalid_configs_are_rejected() {
    let bad = [
        ExperimentConfig { n_paths: 0, ..small(1) },
        ExperimentConfig { delta: 0.0, ..small(1) },
        ExperimentConfig { delta_t: -1.0, ..small(1) },
        ExperimentConfig { t: 0.505, ..small(1) },
        ExperimentConfig { maturity: 0.4, ..small(1) },
        ExperimentConfig { recovery: 1.5, ..small(1) },
        ExperimentConfig { zeta: -1.0, ..small(1) },
    ];
    for c in bad {
        assert!(c.validate().is_err(), "{c:?}");
    }
    assert!(ExperimentConfig::default().validate().is_ok());
}
