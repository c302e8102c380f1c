use std::path::Path;
use std::process::{Command, Output};

fn curvemoments(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curvemoments"))
        .args(args)
        .env_remove("CURVEMOMENTS_WORKERS")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, name: &str, json: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, json).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn moment_ratio_run_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "m.json",
        r#"{"kind":"moment-ratio","surface":{"type":"sphere","n":2},"sweep":[25,65],"p":4,"model":{"type":"unit"},"seed":1,"output":"m.csv"}"#,
    );
    let out = curvemoments(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("m.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "surface,n,D,p,model,seed,grid,norm_p,norm_2,ratio,defect,exact_flag"
    );
    assert_eq!(lines.count(), 2);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("m.summary.json")).unwrap()).unwrap();
    assert_eq!(summary["all_passed"], true);

    let plot = curvemoments(&[
        "plot",
        dir.path().join("m.csv").to_str().unwrap(),
        "--x",
        "D",
        "--y",
        "ratio",
    ]);
    assert_eq!(plot.status.code(), Some(0));
    let text = String::from_utf8(plot.stdout).unwrap();
    assert!(text.starts_with("# x=D y=ratio scale=linear"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 2);
}

#[test]
fn missing_exponent_is_invalid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.json",
        r#"{"kind":"moment-ratio","surface":{"type":"sphere","n":2},"sweep":[25],"output":"bad.csv"}"#,
    );
    let out = curvemoments(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("bad.csv").exists());
}

#[test]
fn unknown_suite_is_invalid() {
    let out = curvemoments(&["oracle", "nope"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown oracle suite"));
}

#[test]
fn aliased_grid_is_a_mismatch() {
    // 12 points per axis alias |f|^4 for |z| <= 5, so the pair-sum check disagrees
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "alias.json",
        r#"{"kind":"moment-ratio","surface":{"type":"sphere","n":2},"sweep":[25],"p":4,"model":{"type":"unit"},"seed":0,"grid":{"explicit":[12,12]},"output":"alias.csv"}"#,
    );
    let out = curvemoments(&["run", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("l4-dual-path"));
}

#[test]
fn invalid_worker_count() {
    let out = Command::new(env!("CARGO_BIN_EXE_curvemoments"))
        .args(["oracle", "parseval"])
        .env("CURVEMOMENTS_WORKERS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn plot_loglog_svg() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    std::fs::write(&csv, "R,ratio\n2,8\n4,64\n8,512\n").unwrap();
    let svg = dir.path().join("t.svg");
    let out = curvemoments(&[
        "plot",
        csv.to_str().unwrap(),
        "--x",
        "R",
        "--y",
        "ratio",
        "--loglog",
        "--svg",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stdout).unwrap().contains("slope=3.000000"));
    assert_eq!(std::fs::read_to_string(svg).unwrap().matches("<polyline").count(), 1);

    let missing = curvemoments(&["plot", csv.to_str().unwrap(), "--x", "R", "--y", "defect"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn oracle_suites_pass() {
    let out = curvemoments(&["oracle", "all"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().all(|l| l.starts_with("PASS ")));
}
