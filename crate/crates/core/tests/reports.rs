use std::path::Path;
use std::process::Command;

use triodflow::config::{presets, DeltaSpec, OneOrMany, ScenarioConfig, ScenarioKind};
use triodflow::report::Table;
use triodflow::runner::run_scenario;
use triodflow::scenarios::{epsilon_study, EpsilonSetup};
use triodflow::Error;

fn small_epsilon_config() -> ScenarioConfig {
    let mut c = presets::epsilon_study();
    c.epsilons = Some(vec![1.0, 0.1, 1e-5]);
    c.j = Some(OneOrMany::One(10));
    c
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != "timing.json")
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    out.sort();
    out
}

#[test]
fn reports_are_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut system = presets::conditioning_system();
    system.j = Some(OneOrMany::Many(vec![10, 16]));
    for cfg in [small_epsilon_config(), system] {
        run_scenario(&cfg, a.path()).unwrap();
        run_scenario(&cfg, b.path()).unwrap();
        assert_eq!(files(a.path()), files(b.path()));
    }
}

#[test]
fn csv_values_round_trip_exactly() {
    let dir = tempfile::tempdir().unwrap();
    run_scenario(&small_epsilon_config(), dir.path()).unwrap();
    let rows = epsilon_study(&EpsilonSetup {
        elements: 10,
        delta: 0.01,
        z: 0.1,
        threshold: 1e-6,
        epsilons: vec![1.0, 0.1, 1e-5],
        max_steps: 200_000,
    })
    .unwrap();
    let t = Table::read(&dir.path().join("epsilon_study.csv")).unwrap();
    assert_eq!(t.header, ["epsilon", "N_tot", "E_ang", "EOC_ang", "E_pos", "EOC_pos"]);
    let e_ang = t.column("E_ang").unwrap();
    let e_pos = t.column("E_pos").unwrap();
    let eoc_pos = t.column("EOC_pos").unwrap();
    for (k, r) in rows.iter().enumerate() {
        assert_eq!(e_ang[k], Some(r.e_ang));
        assert_eq!(e_pos[k], Some(r.e_pos));
        assert_eq!(eoc_pos[k], r.eoc_pos);
        assert_eq!(t.rows[k][1], r.n_tot.to_string());
    }
}

#[test]
fn non_nested_grids_fail_before_computing() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = presets::convergence(false);
    c.j_ref = Some(175);
    let out = dir.path().join("conv");
    assert!(matches!(run_scenario(&c, &out), Err(Error::GridMismatch(_))));
    assert!(!out.exists());
}

#[test]
fn snapshots_written_at_requested_times() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ScenarioConfig {
        scenario: Some(ScenarioKind::Spiral),
        epsilon: Some(1e-3),
        j: Some(OneOrMany::One(24)),
        deltas: Some(vec![1e-3]),
        t_final: Some(0.02),
        snapshot_times: Some(vec![0.0, 0.01, 0.02]),
        ..Default::default()
    };
    run_scenario(&cfg, dir.path()).unwrap();
    for t in ["0.0", "0.01", "0.02"] {
        let p = dir.path().join(format!("spiral_delta_0.001_t{t}.svg"));
        let svg = std::fs::read_to_string(&p).unwrap_or_else(|_| panic!("{}", p.display()));
        assert_eq!(svg.matches("<polyline").count(), 3);
    }
    let trace = Table::read(&dir.path().join("min_segment_length.csv")).unwrap();
    assert_eq!(trace.rows.len(), 21);
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_triodflow"))
}

#[test]
fn cli_runs_config_and_reports_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ScenarioConfig {
        scenario: Some(ScenarioKind::Custom),
        initial: Some(triodflow::scenarios::InitialShape::Convergence),
        epsilon: Some(1e-3),
        j: Some(OneOrMany::One(10)),
        delta: Some(DeltaSpec::Rule("0.2h^2".into())),
        steps: Some(OneOrMany::One(3)),
        ..Default::default()
    };
    let path = dir.path().join("c.json");
    std::fs::write(&path, serde_json::to_string(&cfg).unwrap()).unwrap();
    let out = dir.path().join("out");
    let status = cli()
        .args(["run", path.to_str().unwrap(), "-o", out.to_str().unwrap()])
        .env("RUST_LOG", "off")
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("trace.csv").exists());

    std::fs::write(&path, r#"{"scenario": "custom", "j": 10}"#).unwrap();
    let failed = cli()
        .args(["run", path.to_str().unwrap(), "-o", out.to_str().unwrap()])
        .env("RUST_LOG", "off")
        .output()
        .unwrap();
    assert!(!failed.status.success());
    assert!(!failed.stderr.is_empty());

    let v = cli().arg("version").output().unwrap();
    assert!(v.status.success());
    assert!(String::from_utf8_lossy(&v.stdout).starts_with("triodflow "));
}

#[test]
fn cli_overrides_presets() {
    let dir = tempfile::tempdir().unwrap();
    let status = cli()
        .args(["conditioning", "system", "--j", "4,6", "-o"])
        .arg(dir.path())
        .env("RUST_LOG", "off")
        .status()
        .unwrap();
    assert!(status.success());
    let t = Table::read(&dir.path().join("conditioning_system.csv")).unwrap();
    assert_eq!(t.column("J").unwrap(), vec![Some(4.0), Some(6.0)]);
}
