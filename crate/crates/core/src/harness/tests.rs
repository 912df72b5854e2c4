use super::*;
use tempfile::tempdir;

fn config(experiment: ExperimentKind, n_target: usize, dir: &Path) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(
        ModelKind::Paffd { m: 1 },
        FitnessSpec::Deterministic { c: 1.0 },
        n_target,
        experiment,
        dir,
    );
    c.replications = 4;
    c.master_seed = 11;
    c.parallelism = 1;
    c
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap()
}

#[test]
fn default_checkpoint_grid() {
    assert_eq!(default_checkpoints(2, 20), vec![4, 8, 16, 20]);
    assert_eq!(default_checkpoints(2, 16), vec![4, 8, 16]);
    assert!(default_checkpoints(5, 5).is_empty());
}

#[test]
fn thread_override() {
    assert_eq!(threads_from(Some("3"), 8), 3);
    assert_eq!(threads_from(Some("0"), 8), 8);
    assert_eq!(threads_from(Some("x"), 2), 2);
    assert!(threads_from(None, 0) >= 1);
}

#[test]
fn config_json_and_validation() {
    let text = r#"{
        "model": {"kind": "PAFUD", "m": 2},
        "fitness": {"kind": "ParetoTail", "beta": 1.5, "xmin": 1.0, "c": 1.0},
        "n_target": 1000,
        "checkpoints": [100, 1000],
        "replications": 3,
        "outputs": "out",
        "experiment": "max_degree"
    }"#;
    let c: ExperimentConfig = serde_json::from_str(text).unwrap();
    c.validate().unwrap();
    assert_eq!(c.n0, 2);
    assert_eq!(c.seed_topology, SeedTopology::Path);
    let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
    assert_eq!(back, c);

    let mut bad = c.clone();
    bad.checkpoints = vec![1000, 100];
    assert!(matches!(bad.validate(), Err(Error::Config(_))));
    bad.checkpoints = vec![2000];
    assert!(bad.validate().is_err());
    bad = c.clone();
    bad.replications = 0;
    assert!(bad.validate().is_err());
    bad = c.clone();
    bad.experiment = ExperimentKind::PppLimit;
    bad.fitness = FitnessSpec::Uniform { a: 0.0, b: 1.0 };
    assert!(bad.validate().is_err());
    assert!(serde_json::from_str::<ExperimentConfig>(&text.replace("\"replications\"", "\"replicas\"")).is_err());
}

#[test]
fn trivial_run_has_empty_tables() {
    let dir = tempdir().unwrap();
    let mut c = config(ExperimentKind::MaxDegree, 2, dir.path());
    c.replications = 1;
    let b = run_experiment(&c).unwrap();
    assert!(b.manifest.complete);
    let (header, rows) = read_table(&dir.path().join(MAX_DEGREE_TABLE.0)).unwrap();
    assert_eq!(header, MAX_DEGREE_TABLE.1);
    assert!(rows.is_empty());
    assert!(dir.path().join(MANIFEST_FILE).exists());
}

#[test]
fn deterministic_and_thread_invariant() {
    let a = tempdir().unwrap();
    let b = tempdir().unwrap();
    let c1 = config(ExperimentKind::DegreeDist, 3000, a.path());
    let mut c2 = config(ExperimentKind::DegreeDist, 3000, b.path());
    c2.parallelism = 4;
    run_experiment(&c1).unwrap();
    let first = read(&a.path().join(DEGREE_DIST_TABLE.0));
    run_experiment(&c1).unwrap();
    assert_eq!(first, read(&a.path().join(DEGREE_DIST_TABLE.0)));
    if std::env::var(THREADS_ENV).is_err() {
        let bundle = run_experiment(&c2).unwrap();
        assert_eq!(bundle.manifest.threads, 4);
    } else {
        run_experiment(&c2).unwrap();
    }
    for t in [DEGREE_DIST_TABLE.0, MAX_DEGREE_TABLE.0] {
        assert_eq!(read(&a.path().join(t)), read(&b.path().join(t)));
    }
    assert_eq!(read(&a.path().join(SUMMARY_FILE)), read(&b.path().join(SUMMARY_FILE)));
}

#[test]
fn manifest_lists_parseable_tables() {
    let dir = tempdir().unwrap();
    let c = config(ExperimentKind::ExtremeZeroFraction, 500, dir.path());
    let b = run_experiment(&c).unwrap();
    let loaded = load_bundle(dir.path()).unwrap();
    assert_eq!(loaded.manifest, b.manifest);
    assert_eq!(b.manifest.tables.len(), 2);
    for t in &b.manifest.tables {
        let (header, rows) = read_table(&dir.path().join(&t.file)).unwrap();
        assert_eq!(header, t.columns);
        assert_eq!(rows.len(), t.rows);
        assert!(rows.iter().all(|r| r.len() == header.len()));
    }
}

#[test]
fn degree_dist_summary_is_close_to_limit() {
    let dir = tempdir().unwrap();
    let c = config(ExperimentKind::DegreeDist, 20_000, dir.path());
    let b = run_experiment(&c).unwrap();
    let tv = b.summary["total_variation"].as_f64().unwrap();
    assert!(tv < 0.02, "{tv}");
    assert_eq!(b.summary["theory_pk"][0].as_f64().unwrap(), 4.0 / 6.0);
}

#[test]
fn time_limit_marks_bundle_incomplete() {
    let dir = tempdir().unwrap();
    let mut c = config(ExperimentKind::MaxDegree, 200_000, dir.path());
    c.replications = 1;
    c.time_limit_secs = Some(1e-9);
    let b = run_experiment(&c).unwrap();
    assert!(!b.manifest.complete);
    assert_eq!(b.manifest.notes.len(), 1);
}

#[test]
fn verify_experiment_passes() {
    let dir = tempdir().unwrap();
    let mut c = config(ExperimentKind::Verify, 2, dir.path());
    c.model = ModelKind::Paffd { m: 2 };
    c.verify.n_max = 4;
    let b = run_experiment(&c).unwrap();
    assert_eq!(b.summary["all_pass"], json!(true));
}

#[test]
fn ppp_bundle_and_report() {
    let dir = tempdir().unwrap();
    let mut c = config(ExperimentKind::PppLimit, 2000, dir.path());
    c.fitness = FitnessSpec::ParetoTail { beta: 1.5, xmin: 1.0, c: 1.0 };
    c.ppp.samples = 500;
    c.ppp.delta = 0.01;
    let b = run_experiment(&c).unwrap();
    assert!((b.summary["g01"].as_f64().unwrap() - 0.294524).abs() < 1e-5);
    assert!(b.summary["simulation"]["ks_max"].as_f64().is_some());
    let (_, rows) = read_table(&dir.path().join(PPP_TABLE.0)).unwrap();
    assert_eq!(rows.len(), 500);
    let out = emit_report(dir.path()).unwrap();
    assert!(out.missing.is_empty());
    assert!(out.figures.iter().any(|f| f.ends_with("ppp_qq.svg")));
}

#[test]
fn report_on_degree_bundle_and_empty_dir() {
    let dir = tempdir().unwrap();
    run_experiment(&config(ExperimentKind::DegreeDist, 2000, dir.path())).unwrap();
    let out = emit_report(dir.path()).unwrap();
    let ccdf = dir.path().join(FIGURE_DIR).join("degree_ccdf.svg");
    assert!(out.figures.contains(&ccdf));
    assert!(read(&ccdf).contains("predicted slope -2.000"));
    assert!(read(&out.report).contains("Total variation"));

    let empty = tempdir().unwrap();
    let out = emit_report(empty.path()).unwrap();
    let text = read(&out.report);
    assert!(text.matches("no data").count() >= 6);
    assert!(!out.missing.is_empty());
}

#[test]
fn regime_rows() {
    let dir = tempdir().unwrap();
    let mut c = config(ExperimentKind::RegimeScan, 4096, dir.path());
    c.regime_scan = vec![
        FitnessSpec::Uniform { a: 0.0, b: 1.0 },
        FitnessSpec::ParetoTail { beta: 0.5, xmin: 1.0, c: 1.0 },
    ];
    let rows = compare_regimes(&c).unwrap();
    assert_eq!(rows[0].regime, Regime::Weak);
    assert_eq!(rows[1].regime, Regime::Extreme);
    assert_eq!(rows[1].predicted_exponent, None);
    assert!((rows[0].predicted_slope.unwrap() - 2.0 / 3.0).abs() < 1e-12);
    assert!(rows.iter().all(|r| r.hill_estimate.is_some() && r.max_degree_slope.is_some()));
}
