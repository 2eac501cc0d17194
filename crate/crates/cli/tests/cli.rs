use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn swnoon(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swnoon"))
        .args(args)
        .env_remove("SWNOON_SEED")
        .output()
        .expect("binary runs")
}

fn small_config(dir: &Path) -> String {
    let path = dir.join("config.json");
    fs::write(
        &path,
        r#"{
  "trials_per_point": 2000,
  "dt_grid": { "start_s": 0.0, "stop_s": 6e-4, "count": 13 }
}"#,
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn herald_stats_prints_csv() {
    let out = swnoon(&["herald-stats"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("N,chi,probability,mean_attempts\n"));
    assert_eq!(text.lines().count(), 6);
}

#[test]
fn fringe_writes_every_output_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        let out = swnoon(&["fringe", "--config", &cfg, "--out", d.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in ["fringe.csv", "fringe.meta", "fit.txt", "fit.csv", "residuals.csv"] {
        let x = fs::read(a.join(name)).unwrap();
        assert!(!x.is_empty(), "{name}");
        assert_eq!(x, fs::read(b.join(name)).unwrap(), "{name}");
    }
    let csv = fs::read_to_string(a.join("fringe.csv")).unwrap();
    let meta = fs::read_to_string(a.join("fringe.meta")).unwrap();
    let ds = swnoon::FringeDataset::from_csv(&csv, Some(&meta)).unwrap();
    assert_eq!(ds.points.len(), 13);
}

#[test]
fn seed_env_changes_the_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let run = |seed: &str, sub: &str| {
        let d = dir.path().join(sub);
        let out = Command::new(env!("CARGO_BIN_EXE_swnoon"))
            .args(["fringe", "--config", &cfg, "--out", d.to_str().unwrap()])
            .env("SWNOON_SEED", seed)
            .output()
            .unwrap();
        assert!(out.status.success());
        fs::read(d.join("fringe.csv")).unwrap()
    };
    assert_ne!(run("1", "s1"), run("2", "s2"));
    assert_eq!(run("1", "s1"), run("1", "s3"));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\n  \"chi\": 0.01,\n  \"nonsense\": 1\n}").unwrap();
    let out = swnoon(&["herald-stats", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let out = swnoon(&["herald-stats", "--set", "chi=2", "--set", "order=3"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr).to_string();
    assert!(err.contains("chi") && err.contains("order"), "{err}");

    let out = swnoon(&["herald-stats", "--set", "missing=1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = swnoon(&["herald-stats", "--config", dir.path().join("none.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn runtime_failures_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = swnoon(&[
        "fringe",
        "--set",
        "herald_max_attempts=1",
        "--set",
        "trials_per_point=100",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("timeouts"));
}

#[test]
fn ghz_table_and_dumps() {
    let out = swnoon(&["ghz-table", "--n-max", "3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 4);

    let out = swnoon(&["dump-network", "--set", "noon_n=3", "--set", "cutoff=5"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("D3") && text.contains("PS3"));

    let dir = tempfile::tempdir().unwrap();
    let out = swnoon(&["dump-state", "--set", "order=2", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let text = fs::read_to_string(dir.path().join("state.txt")).unwrap();
    assert!(text.contains("# write state") && text.contains("# herald 0"));
}

#[test]
fn pump_sweep_reports_each_power() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = swnoon(&["pump-sweep", "--config", &cfg, "--powers", "0,6"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",ok")), "{text}");
}
