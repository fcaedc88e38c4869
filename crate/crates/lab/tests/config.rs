use lab::config::{parse_config, parse_config_str, to_toml, LabConfig, RecoveryKind};
use proptest::prelude::*;

#[test]
fn empty_document_gives_defaults() {
    assert_eq!(parse_config_str("").unwrap(), LabConfig::default());
}

#[test]
fn default_configuration_is_valid() {
    let c = LabConfig::default();
    c.validate().unwrap();
    assert_eq!(c.model.lambda_bar, 0.1);
    let e = c.experiment_config().unwrap();
    assert_eq!((e.t, e.maturity, e.r, e.recovery), (0.5, 1.0, 0.05, 0.4));
    assert_eq!(e.theta_max(), 100.0);
}

#[test]
fn recovery_weights_above_one_are_rejected() {
    let err = parse_config_str("[pricing]\nrecovery_model = \"intensity_linked\"\nw0 = 0.7\nw1 = 0.5\n").unwrap_err();
    assert_eq!(err.section.as_deref(), Some("pricing"));
    assert!(err.to_string().contains("w0+w1 ≤ 1 violated"), "{err}");
}

#[test]
fn negative_zeta_is_rejected() {
    let err = parse_config_str("[levy_measure]\nzeta = -1.0\n").unwrap_err();
    assert_eq!(err.section.as_deref(), Some("levy_measure"));
    assert_eq!(err.key.as_deref(), Some("zeta"));
    assert!(err.to_string().contains("positive real required"), "{err}");
}

#[test]
fn unknown_keys_name_their_section() {
    let err = parse_config_str("[model]\nsgima = 0.1\n").unwrap_err();
    assert_eq!(err.section.as_deref(), Some("model"));
    assert!(err.to_string().contains("sgima"), "{err}");
    let err = parse_config_str("[modle]\n").unwrap_err();
    assert!(err.to_string().contains("modle"), "{err}");
}

#[test]
fn type_errors_name_the_key() {
    let err = parse_config_str("[model]\nsigma = \"high\"\n").unwrap_err();
    assert_eq!(err.section.as_deref(), Some("model"));
    assert_eq!(err.key.as_deref(), Some("sigma"));
}

#[test]
fn grid_mismatch_is_rejected() {
    let err = parse_config_str("[pricing]\nt = 0.505\n").unwrap_err();
    assert_eq!(err.section.as_deref(), Some("pricing"));
}

#[test]
fn experiments_need_constant_rates() {
    let c = parse_config_str("[rates]\nmode = \"vasicek\"\n").unwrap();
    assert!(c.experiment_config().is_err());
    assert!(c.path_config().is_ok());
}

#[test]
fn seeds_fit_a_toml_integer() {
    let mut c = LabConfig::default();
    c.experiment.seed = u64::MAX;
    assert_eq!(c.validate().unwrap_err().key.as_deref(), Some("seed"));
}

#[test]
fn reads_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "[experiment]\nn_paths = 12\n").unwrap();
    assert_eq!(parse_config(&path).unwrap().experiment.n_paths, 12);
    assert!(parse_config(&dir.path().join("missing.toml")).is_err());
}

fn arb_config() -> impl Strategy<Value = LabConfig> {
    (
        1e-4..0.05f64,
        0.0..2.0f64,
        0.005..0.5f64,
        1.0..50.0f64,
        0.0..5e-3f64,
        0.0..1.0f64,
        1usize..100_000,
        0..=i64::MAX as u64,
        any::<bool>(),
    )
        .prop_map(|(sigma, b, lambda, zeta, varpi, recovery, n, seed, linked)| {
            let mut c = LabConfig::default();
            c.model.sigma = sigma;
            c.model.b = b;
            c.model.lambda_bar = lambda;
            c.model.theta_max = Some(20.0);
            c.levy_measure.zeta = zeta;
            c.levy_measure.varpi = varpi;
            c.pricing.recovery = recovery;
            c.experiment.n_paths = n;
            c.experiment.seed = seed;
            c.experiment.probes = vec![0.6, 1.0];
            if linked {
                c.pricing.recovery_model = RecoveryKind::IntensityLinked;
                c.pricing.w0 = recovery / 2.0;
                c.pricing.w1 = recovery / 2.0;
            }
            c
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn serialization_round_trips(c in arb_config()) {
        let text = to_toml(&c);
        prop_assert_eq!(parse_config_str(&text).unwrap(), c);
    }
}

#[test]
fn reference_in_the_guide_is_the_default() {
    let page = include_str!("../../../book/src/cli.md");
    let start = page.find("```toml\n").unwrap() + "```toml\n".len();
    let len = page[start..].find("```").unwrap();
    assert_eq!(parse_config_str(&page[start..start + len]).unwrap(), LabConfig::default());
}
