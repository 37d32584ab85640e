use std::path::Path;
use std::process::{Command, Output};

fn cli(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_comfortsense"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn stderr_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("error line");
    serde_json::from_str(line).expect("error JSON")
}

#[test]
fn stage_out_of_order_is_missing_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(&["--out", "run", "evaluate"], dir.path());
    assert!(!out.status.success());
    let err = stderr_json(&out);
    assert_eq!(err["error"], "MissingArtifact");
    assert!(err["message"].as_str().unwrap().contains("features_summary.json"));
}

#[test]
fn bad_config_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "seed = \"x\"\n").unwrap();
    let out = cli(&["--config", "bad.toml", "fuse"], dir.path());
    assert!(!out.status.success());
    assert_eq!(stderr_json(&out)["error"], "ConfigError");

    let out = cli(&["--config", "absent.toml", "fuse"], dir.path());
    assert_eq!(stderr_json(&out)["error"], "ConfigError");
}

#[test]
fn staged_run_with_config_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.toml"),
        r#"
out_dir = "out"
seed = 4
[simulate]
n_occupants = 6
days = 4
[forest]
n_trees = 10
[cluster]
k = 3
"#,
    )
    .unwrap();
    let mut lines = Vec::new();
    for stage in ["simulate", "ingest", "fuse", "cluster", "featurize", "train"] {
        let out = cli(&["--config", "run.toml", stage], dir.path());
        assert!(out.status.success(), "{stage}: {}", String::from_utf8_lossy(&out.stderr));
        let stdout = String::from_utf8(out.stdout).unwrap();
        assert_eq!(stdout.lines().count(), 1, "{stdout}");
        assert!(stdout.starts_with(stage));
        lines.push(stdout);
    }
    assert!(lines[1].contains("0 rows rejected"), "{}", lines[1]);
    let out = cli(
        &["--config", "run.toml", "evaluate", "--feature-sets", "fs1", "--dimensions", "thermal"],
        dir.path(),
    );
    assert!(out.status.success());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/eval_report.json")).unwrap()).unwrap();
    let kinds: Vec<&str> = report.as_array().unwrap().iter().map(|r| r["model_kind"].as_str().unwrap()).collect();
    assert_eq!(kinds, ["individual", "grouped"]);
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/manifest.json")).unwrap()).unwrap();
    assert!(manifest["files"]["eval_report.json"].is_string());
}
