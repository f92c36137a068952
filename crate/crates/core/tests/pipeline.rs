use cgmy_eds::pipeline::{run_pipeline, RunConfig};
use cgmy_eds::Error;

const SHORT: &str = r#"
[contract]
barrier = 0.5
maturities = [0.25, 0.5]
coupon_frequency = "quarterly"
"#;

#[test]
fn runs_are_deterministic() {
    let cfg = RunConfig::from_toml_str(SHORT).unwrap();
    let a = run_pipeline(&cfg).unwrap();
    let b = run_pipeline(&cfg).unwrap();
    assert_eq!(
        serde_json::to_string(&a).unwrap(),
        serde_json::to_string(&b).unwrap()
    );
    assert_eq!(a.curve, b.curve);
    assert_eq!(a.rates.len(), 2);
    assert!(a.rates[0].rate > 0.0);
    assert_eq!(a.curve.as_ref().unwrap().days(), 180);
}

#[test]
fn resolved_config_reproduces_the_run() {
    let cfg = RunConfig::from_toml_str(SHORT).unwrap();
    let first = run_pipeline(&cfg).unwrap();
    let echoed = RunConfig::from_toml_str(&first.config.to_toml_string()).unwrap();
    assert_eq!(echoed, cfg);
    assert_eq!(run_pipeline(&echoed).unwrap().rates, first.rates);
}

#[test]
fn model_document_rebuilds_the_model() {
    let cfg = RunConfig::from_toml_str(SHORT).unwrap();
    let res = run_pipeline(&cfg).unwrap();
    let (_, model) = cfg.build_model().unwrap();
    assert_eq!(res.model.model().unwrap(), model);
    let prov = res.model.provenance.as_ref().unwrap();
    assert_eq!(prov.params, cfg.params);
}

#[test]
fn stage_failures_name_the_stage() {
    let mut cfg = RunConfig::from_toml_str(SHORT).unwrap();
    cfg.discount.curve_csv = Some("/nonexistent/curve.csv".into());
    let e = run_pipeline(&cfg).unwrap_err();
    assert!(e.to_string().starts_with("discount:"), "{e}");
    assert!(e.is_config_error());

    let mut cfg = RunConfig::from_toml_str(SHORT).unwrap();
    cfg.fit.preset = false;
    cfg.fit.starts = vec![3.0, 2.0];
    let e = run_pipeline(&cfg).unwrap_err();
    assert!(matches!(e, Error::Stage { stage: "fit", .. }), "{e}");
}

#[test]
fn config_errors() {
    for text in [
        "[contract]\nmaturities = []",
        "[contract]\nmaturities = [0.0001]",
        "[contract]\nmaturities = [1.0, 2.0]\ncoupon_days = [90]",
        "[inversion]\nn_terms = 3\nm_euler = 11",
        "[simulation]\npaths = 0",
        "[diffusion]\ncutoff = -1.0",
        "day_count = \"weekly\"",
        "[params]\nc = 0.5",
    ] {
        let e = RunConfig::from_toml_str(text).unwrap_err();
        assert!(e.is_config_error(), "{text}: {e}");
    }
}

/// Pinned output of the default configuration; guards against silent drift.
#[test]
fn default_configuration_regression() {
    let res = run_pipeline(&RunConfig::default()).unwrap();
    let pinned = [
        (104.75714197712905, 0.9789157677293936),
        (140.24064227990777, 0.9143228181424161),
        (149.96656301116727, 0.8469069691109887),
    ];
    assert_eq!(res.rates.len(), 3);
    for (got, (bp, surv)) in res.rates.iter().zip(pinned) {
        assert!((got.rate_bp - bp).abs() < 1e-8 * bp, "{got:?}");
        assert!((got.survival_at_maturity - surv).abs() < 1e-10, "{got:?}");
    }
    assert_eq!(res.monotonicity_repairs, 0);
}
