//! End-to-end experiment runs through the harness.

use czlab::harness::{minimize_failure, GridSpec};
use czlab::operators::LambdaGrid;
use czlab::{
    run_weak11_experiment, DensitySpec, Error, ExperimentConfig, GeneratorKind, GeneratorSpec,
};

fn segment(atoms: usize) -> GeneratorSpec {
    GeneratorSpec::new(GeneratorKind::SegmentPlusAtoms {
        dim: 2,
        segment_atoms: atoms - atoms / 25,
        length: 1.0,
        heavy_atoms: atoms / 25,
        heavy_weight: 0.2,
    })
    .with_seed(3)
}

#[test]
fn segment_plus_atoms_end_to_end() {
    let mut cfg = ExperimentConfig::new(
        segment(500),
        DensitySpec::Spikes {
            count: 6,
            height: 200.0,
            background: 0.2,
            signed: true,
        },
    );
    cfg.lambda_count = 20;
    cfg.eps_grid = Some(GridSpec::Range("0.0025:0.25:10".into()));
    cfg.l2_trials = 1;
    cfg.seed = 5;
    let report = run_weak11_experiment(&cfg).unwrap();
    assert!(report.all_passed);
    assert_eq!(report.lambdas.len(), 20);
    assert!(report.lambdas.iter().all(|l| l.admissible));
    assert!(report.lambdas.iter().any(|l| l.parts > 0));
    assert_eq!(report.weak.len(), 10);
    assert!(report.max_quasinorm.is_finite() && report.max_quasinorm > 0.0);
    assert!(report.max_phi_over_lambda <= report.constants.b);

    // Byte-identical modulo timing.
    let again = run_weak11_experiment(&cfg).unwrap();
    assert_eq!(
        serde_json::to_string(&report.without_timing()).unwrap(),
        serde_json::to_string(&again.without_timing()).unwrap()
    );

    let mut csv = Vec::new();
    report.write_csv(&mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("eps,lambda,exceedance_mass,quasinorm\n"));
    assert!(text.lines().count() > 10);
}

#[test]
fn running_example_through_the_harness() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.json");
    let f = dir.path().join("f.json");
    std::fs::write(
        &m,
        r#"{"dim":1,"growth":{"n":1,"C0":8,"r_min":0.5},"atoms":[{"x":[0],"w":1},{"x":[1],"w":2},{"x":[3],"w":4}]}"#,
    )
    .unwrap();
    std::fs::write(&f, r#"{"values":[10,0,0]}"#).unwrap();
    let mut cfg = ExperimentConfig::new(
        GeneratorSpec::new(GeneratorKind::File { path: m }),
        DensitySpec::File { path: f },
    );
    cfg.lambdas = Some(vec![8.0, 3.0]);
    cfg.kernel = Some(czlab::Kernel::riesz(1, 1.0, 0).unwrap());
    cfg.keep_decompositions = true;
    cfg.eps_grid = Some(GridSpec::Points(vec![0.5, 1.5]));
    cfg.weak_lambdas = LambdaGrid::Auto;
    let report = run_weak11_experiment(&cfg).unwrap();
    let at8 = &report.lambdas[0];
    assert!(at8.admissible && at8.passed);
    let dec = at8.decomposition.as_ref().unwrap();
    assert_eq!(dec.parts[0].alpha.re, 10.0 / 7.0);
    let b: Vec<f64> = dec.parts[0].b.iter().map(|v| v.re).collect();
    for (got, want) in b.iter().zip([60.0 / 7.0, -10.0 / 7.0, -10.0 / 7.0]) {
        assert!((got - want).abs() <= 1e-15 * want.abs());
    }
    // λ = 3 is below the floor 4·10/7 and is flagged, not run.
    assert!(!report.lambdas[1].admissible);
    assert!(report.lambdas[1].decomposition.is_none());
}

#[test]
fn trivial_instance_has_no_parts() {
    let mut cfg = ExperimentConfig::new(
        GeneratorSpec::new(GeneratorKind::Grid {
            dim: 2,
            count: 100,
            side: 1.0,
            jitter: 0.0,
        }),
        DensitySpec::Constant { value: 1.0 },
    );
    cfg.lambdas = Some(vec![9.0]);
    let report = run_weak11_experiment(&cfg).unwrap();
    assert_eq!(report.lambdas[0].parts, 0);
    assert!(report.max_quasinorm.is_finite());
}

#[test]
fn bad_inputs_are_errors() {
    let cfg = ExperimentConfig::new(
        GeneratorSpec::new(GeneratorKind::Random {
            dim: 2,
            count: 0,
            side: 1.0,
            weight_decades: 0.0,
        }),
        DensitySpec::Constant { value: 1.0 },
    );
    assert!(matches!(run_weak11_experiment(&cfg), Err(Error::InvalidGenerator(_))));

    let mut cfg = ExperimentConfig::new(segment(100), DensitySpec::Constant { value: 1.0 });
    cfg.eps_grid = Some(GridSpec::Points(vec![1e-9]));
    assert!(matches!(run_weak11_experiment(&cfg), Err(Error::EpsilonBelowResolution { .. })));
}

#[test]
fn passing_configs_do_not_minimize() {
    let cfg = ExperimentConfig::new(
        segment(100),
        DensitySpec::Spikes {
            count: 2,
            height: 50.0,
            background: 0.0,
            signed: false,
        },
    );
    // Nothing fails, so halving stops at once and returns the full size.
    assert_eq!(minimize_failure(&cfg, 30.0), Some(100));
}
