use std::fs;
use std::process::Command;

fn paflab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_paflab"))
}

#[test]
fn theory_prints_header_and_table() {
    let out = paflab()
        .args(["theory", "--fitness", r#"{"kind":"Deterministic","c":1}"#, "--k-max", "3"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    let header: serde_json::Value = serde_json::from_str(lines.next().unwrap()).unwrap();
    assert_eq!(header["theta_m"], 2.0);
    assert_eq!(header["regime"], "Weak");
    assert_eq!(lines.next(), Some("k,p_k"));
    assert_eq!(lines.count(), 4);
}

#[test]
fn verify_exit_status() {
    let ok = paflab()
        .args(["verify", "--model", r#"{"kind":"PAFUD","m":2}"#, "--n-max", "4", "--per-size", "3"])
        .output()
        .unwrap();
    assert!(ok.status.success());
    assert!(String::from_utf8(ok.stdout).unwrap().contains("PASS"));
    let bad = paflab().args(["verify", "--model", r#"{"kind":"PAFUD","m":0}"#]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn simulate_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let config = dir.path().join("config.json");
    fs::write(
        &config,
        r#"{
            "model": {"kind": "PAFFD", "m": 1},
            "fitness": {"kind": "Uniform", "a": 0.0, "b": 1.0},
            "n_target": 4096,
            "replications": 3,
            "master_seed": 5,
            "outputs": "unused",
            "experiment": "max_degree"
        }"#,
    )
    .unwrap();
    let out = paflab()
        .args(["simulate", config.to_str().unwrap(), "--outputs", out_dir.to_str().unwrap()])
        .env("PAFLAB_THREADS", "2")
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["threads"], 2);
    assert_eq!(manifest["complete"], true);
    let report = paflab().args(["report", out_dir.to_str().unwrap()]).output().unwrap();
    assert!(report.status.success());
    assert!(out_dir.join("figures/max_degree.svg").exists());
}

#[test]
fn ppp_writes_samples() {
    let dir = tempfile::tempdir().unwrap();
    let out = paflab()
        .args([
            "ppp",
            "--fitness",
            r#"{"kind":"ParetoTail","beta":1.5,"xmin":1,"c":1}"#,
            "--samples",
            "200",
            "--delta",
            "0.01",
            "--out",
            dir.path().to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let csv = fs::read_to_string(dir.path().join("ppp.csv")).unwrap();
    assert!(csv.starts_with("sample_id,sup_value,argmax_t,N_points\n"));
    assert_eq!(csv.lines().count(), 201);
    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("ppp_summary.json")).unwrap()).unwrap();
    assert!((summary["g01"].as_f64().unwrap() - 0.294524).abs() < 1e-5);
}
