use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn treecp(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_treecp"));
    cmd.args(args)
        .env_remove("TREECP_SEED")
        .env_remove("TREECP_TRIALS")
        .env_remove("TREECP_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().unwrap()
}

fn manifest(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn error(out: &Output) -> Value {
    assert!(!out.status.success());
    serde_json::from_slice(&out.stderr).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn toml_config_runs_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(
        &cfg,
        "topology = { d = 2, n = 1 }\nlambda = 1.0\ntrials = 40\nseed = 5\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let m = manifest(&treecp(
        &[
            "extinction",
            "--config",
            path(&cfg),
            "--out",
            path(&out_dir),
        ],
        &[],
    ));
    assert_eq!(m["experiment"], "extinction");
    assert_eq!(m["master_seed"], 5);
    assert_eq!(m["trials"], 40);
    for file in [
        "extinction.csv",
        "extinction.summary.json",
        "manifest.json",
        "survival.tsv",
    ] {
        assert!(out_dir.join(file).is_file(), "{file}");
    }
}

#[test]
fn json_config_and_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(
        &cfg,
        r#"{"topology": {"d": 2, "n": 1}, "trials": 40, "seed": 5}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let m = manifest(&treecp(
        &[
            "spread",
            "--config",
            path(&cfg),
            "--out",
            path(&out_dir),
            "--seed",
            "11",
            "--trials",
            "7",
        ],
        &[("TREECP_SEED", "3")],
    ));
    assert_eq!(m["master_seed"], 11);
    assert_eq!(m["trials"], 7);
}

#[test]
fn environment_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "topology = { d = 2, n = 1 }\ntrials = 40\nseed = 5\n").unwrap();
    let run = |sub: &str, envs: &[(&str, &str)]| {
        let out_dir = dir.path().join(sub);
        let m = manifest(&treecp(
            &[
                "extinction",
                "--config",
                path(&cfg),
                "--out",
                path(&out_dir),
            ],
            envs,
        ));
        (m, fs::read(out_dir.join("extinction.csv")).unwrap())
    };
    let (m, env_csv) = run("env", &[("TREECP_SEED", "8"), ("TREECP_TRIALS", "9")]);
    assert_eq!(m["master_seed"], 8);
    assert_eq!(m["trials"], 9);
    // same seed through the flag reproduces the same rows
    let out_dir = dir.path().join("flag");
    manifest(&treecp(
        &[
            "extinction",
            "--config",
            path(&cfg),
            "--out",
            path(&out_dir),
            "--seed",
            "8",
            "--trials",
            "9",
        ],
        &[],
    ));
    assert_eq!(fs::read(out_dir.join("extinction.csv")).unwrap(), env_csv);
    let (_, threaded) = run(
        "threads",
        &[
            ("TREECP_SEED", "8"),
            ("TREECP_TRIALS", "9"),
            ("TREECP_THREADS", "3"),
        ],
    );
    assert_eq!(threaded, env_csv);
}

#[test]
fn missing_config_is_a_json_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.toml");
    let e = error(&treecp(&["extinction", "--config", path(&missing)], &[]));
    assert_eq!(e["error"]["kind"], "io");
    assert!(e["error"]["message"].is_string());
}

#[test]
fn precondition_error_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "lambda = -1.0\n").unwrap();
    let e = error(&treecp(
        &[
            "extinction",
            "--config",
            path(&cfg),
            "--out",
            path(&dir.path().join("o")),
        ],
        &[],
    ));
    assert_eq!(e["error"]["kind"], "precondition");
    assert_eq!(e["error"]["field"], "lambda");
    assert!(!dir.path().join("o").join("manifest.json").exists());
}

#[test]
fn unknown_keys_and_experiments_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "lamda = 1.0\n").unwrap();
    let e = error(&treecp(&["extinction", "--config", path(&cfg)], &[]));
    assert_eq!(e["error"]["kind"], "parse");
    let out = treecp(&["survival", "--config", path(&cfg)], &[]);
    assert!(!out.status.success());
}
