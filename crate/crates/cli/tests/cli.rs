use std::path::Path;
use std::process::{Command, Output};

fn nikodym(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nikodym"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn run_dir(o: &Output) -> std::path::PathBuf {
    stdout(o).trim().into()
}

fn csv_rows(dir: &Path) -> Vec<String> {
    std::fs::read_to_string(dir.join("data.csv"))
        .unwrap()
        .lines()
        .map(str::to_owned)
        .collect()
}

#[test]
fn lists_presets() {
    let o = nikodym(&["list-presets"]);
    assert!(o.status.success());
    let table = stdout(&o);
    for name in [
        "theorem1-scaling",
        "sharpness-log",
        "sharpness-range",
        "lemma-audit",
        "sobolev-check",
        "aniso-admissibility",
    ] {
        assert!(
            table.lines().any(|l| l.starts_with(name)),
            "{name} missing:\n{table}"
        );
    }
    assert_eq!(stdout(&nikodym(&["list-presets", ""])), table);

    let filtered = nikodym(&["list-presets", "sharpness"]);
    let rows: Vec<_> = stdout(&filtered)
        .lines()
        .skip(1)
        .map(str::to_owned)
        .collect();
    assert_eq!(rows.len(), 2);

    let none = nikodym(&["list-presets", "no-such-preset"]);
    assert!(none.status.success());
    assert_eq!(stdout(&none).lines().count(), 1);
}

#[test]
fn malformed_config_is_rejected_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(
        &cfg,
        "[run]\nexperiment = \"lemma-audit\"\nseed = \"seven\"\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = nikodym(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad.toml:3"), "{}", stderr(&o));
    assert!(!out.exists());

    let o = nikodym(&[
        "run",
        "--preset",
        "nonexistent",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.exists());
}

#[test]
fn failing_stage_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let o = nikodym(&[
        "run",
        "--preset",
        "lemma-audit",
        "--curve",
        "line",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).contains("stage `curve-membership` failed"),
        "{}",
        stderr(&o)
    );
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn lemma_audit_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = nikodym(&[
        "run",
        "--preset",
        "lemma-audit",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let run = run_dir(&o);
    assert!(run
        .file_name()
        .unwrap()
        .to_str()
        .unwrap()
        .starts_with("lemma-audit-"));
    let rows = csv_rows(&run);
    assert_eq!(rows[0], "stage,name,pass,vacuous,summary");
    assert_eq!(rows.len(), 9);
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(run.join("manifest.json")).unwrap()).unwrap();
    assert!(manifest.get("files").is_some());
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(run.join("report.json")).unwrap()).unwrap();
    assert!(report.is_object());
}

#[test]
fn theorem1_accepts_a_delta_range() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("t1.toml");
    std::fs::write(
        &cfg,
        "[run]\nexperiment = \"theorem1-scaling\"\nseed = 5\n\n[grid]\nprobes = 1000\n",
    )
    .unwrap();
    let o = nikodym(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--deltas",
        "2^-3..2^-7",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = csv_rows(&run_dir(&o));
    assert_eq!(rows.len(), 1 + 5 * 3);
    let deltas: std::collections::BTreeSet<_> = rows[1..]
        .iter()
        .map(|r| r.split(',').next().unwrap().to_owned())
        .collect();
    assert_eq!(deltas.len(), 5);
    assert!(deltas.contains("0.0078125") && deltas.contains("0.125"));
}

#[test]
fn identical_configs_give_identical_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("range.toml");
    std::fs::write(
        &cfg,
        "[run]\nexperiment = \"sharpness-range\"\nseed = 9\n\n[grid]\nprobes = 1000\n",
    )
    .unwrap();
    let data: Vec<Vec<u8>> = ["a", "b"]
        .iter()
        .map(|sub| {
            let out = dir.path().join(sub);
            let o = nikodym(&[
                "run",
                "--config",
                cfg.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
            ]);
            assert!(o.status.code().is_some_and(|c| c <= 1), "{}", stderr(&o));
            std::fs::read(run_dir(&o).join("data.csv")).unwrap()
        })
        .collect();
    assert_eq!(data[0], data[1]);
}
