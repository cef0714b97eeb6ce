use std::fs;
use std::path::Path;

use serde_json::Value;
use treecp::experiment::{
    emit_plotdata, read_manifest, run, ExperimentConfig, ExperimentKind, TopologySpec,
};
use treecp::Error;

fn summary(dir: &Path, kind: ExperimentKind) -> Value {
    let text = fs::read_to_string(dir.join(format!("{kind}.summary.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn single_vertex_mean_is_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig {
        topology: TopologySpec::Tree { d: 2, n: 0 },
        trials: 100_000,
        seed: 12,
        ..Default::default()
    };
    let manifest = run(ExperimentKind::Extinction, &config, dir.path()).unwrap();
    let s = summary(dir.path(), ExperimentKind::Extinction);
    let mean = &s["result"]["mean"];
    let (lo, hi) = (
        mean["ci_low"].as_f64().unwrap(),
        mean["ci_high"].as_f64().unwrap(),
    );
    assert!(lo < 1.0 && 1.0 < hi, "{mean}");
    assert_eq!(
        s["config_hash"],
        Value::String(manifest.config_hash.clone())
    );
    let csv = fs::read_to_string(dir.path().join("extinction.csv")).unwrap();
    assert_eq!(csv.lines().count(), 100_001);
    assert!(csv.starts_with("trial,seed,tau,censored\n"));
    assert_eq!(
        read_manifest(&dir.path().join("manifest.json")).unwrap(),
        manifest
    );
}

#[test]
fn duality_sweep_reports_no_violations() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig {
        trials: 20_000,
        lambda: 2.0,
        ..Default::default()
    };
    run(ExperimentKind::DualitySweep, &config, dir.path()).unwrap();
    let s = summary(dir.path(), ExperimentKind::DualitySweep);
    assert_eq!(s["result"]["cases"], 20_000);
    assert_eq!(s["result"]["violations"]["total"], 0);
}

#[test]
fn rwchain_reports_exact_and_monte_carlo() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = ExperimentConfig {
        trials: 50_000,
        ..Default::default()
    };
    config.params.theta = 0.9;
    config.chain.dump = true;
    let manifest = run(ExperimentKind::Rwchain, &config, dir.path()).unwrap();
    let s = summary(dir.path(), ExperimentKind::Rwchain);
    let cmp = s["result"]["comparisons"].as_array().unwrap();
    assert_eq!(cmp.len(), 4);
    for c in cmp {
        assert!(c["exact"].is_f64() && c["frequency"].is_f64());
    }
    assert!(manifest.output("kernel-dump").is_some());
    let dump: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("kernel.json")).unwrap()).unwrap();
    assert_eq!(dump["rows"].as_array().unwrap().len(), 5);
    assert!(dump["rows"][0]["transitions"].is_array());
}

#[test]
fn csv_is_identical_across_thread_counts() {
    for kind in [
        ExperimentKind::Extinction,
        ExperimentKind::Coupling,
        ExperimentKind::Rwchain,
    ] {
        let mut outputs = Vec::new();
        for threads in [1, 4, 16] {
            let dir = tempfile::tempdir().unwrap();
            let config = ExperimentConfig {
                trials: 300,
                seed: 99,
                threads,
                lambda: 1.5,
                times: vec![1.0, 2.0],
                ..Default::default()
            };
            let manifest = run(kind, &config, dir.path()).unwrap();
            outputs.push((
                fs::read(dir.path().join(format!("{kind}.csv"))).unwrap(),
                manifest.config_hash,
            ));
        }
        assert_eq!(outputs[0], outputs[1], "{kind}");
        assert_eq!(outputs[0], outputs[2], "{kind}");
    }
}

#[test]
fn plot_files_follow_their_format() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig {
        topology: TopologySpec::Tree { d: 2, n: 1 },
        trials: 200,
        ..Default::default()
    };
    let manifest = run(ExperimentKind::ExpoTest, &config, dir.path()).unwrap();
    let ks = fs::read_to_string(dir.path().join("ks_cdf.tsv")).unwrap();
    let mut lines = ks.lines();
    assert_eq!(lines.next(), Some("x\tempirical_cdf\texp_cdf"));
    assert_eq!(lines.clone().count(), 200);
    assert!(lines.all(|l| l.split('\t').count() == 3));
    assert!(manifest.outputs.iter().any(|o| o.path == "survival.tsv"));

    // every sample censored: header-only files
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig {
        horizon: Some(1e-9),
        trials: 5,
        ..config
    };
    run(ExperimentKind::ExpoTest, &config, dir.path()).unwrap();
    assert_eq!(
        fs::read_to_string(dir.path().join("ks_cdf.tsv")).unwrap(),
        "x\tempirical_cdf\texp_cdf\n"
    );
    assert_eq!(
        fs::read_to_string(dir.path().join("survival.tsv")).unwrap(),
        "t\tsurvival\n"
    );
    let s = summary(dir.path(), ExperimentKind::ExpoTest);
    assert!(s["result"]["exponentiality"]["error"].is_string());
}

#[test]
fn bstar_plateau_table() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig {
        lambda: 0.3,
        heights: vec![2, 3, 4],
        trials: 200,
        ..Default::default()
    };
    run(ExperimentKind::Bstar, &config, dir.path()).unwrap();
    let table = fs::read_to_string(dir.path().join("bstar_plateau.tsv")).unwrap();
    let rows: Vec<Vec<f64>> = table
        .lines()
        .skip(1)
        .map(|l| l.split('\t').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(
        rows.iter().map(|r| r[0]).collect::<Vec<_>>(),
        vec![2.0, 3.0, 4.0]
    );
    let s = summary(dir.path(), ExperimentKind::Bstar);
    let report = &s["result"]["report"]["rows"];
    for (i, r) in rows.iter().enumerate() {
        assert!((report[i]["quantile"].as_f64().unwrap() - r[1]).abs() < 1e-12);
    }
}

#[test]
fn missing_outputs_are_file_errors() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig {
        trials: 10,
        ..Default::default()
    };
    let manifest = run(ExperimentKind::Extinction, &config, dir.path()).unwrap();
    fs::remove_file(dir.path().join("extinction.csv")).unwrap();
    assert!(matches!(
        emit_plotdata(&manifest, dir.path()),
        Err(Error::Io { .. })
    ));
}

#[test]
fn supersolution_scan_logs_first_height() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = ExperimentConfig::default();
    config.params.theta = 0.9;
    config.scan.n_max = 200;
    run(ExperimentKind::Supersolution, &config, dir.path()).unwrap();
    let s = summary(dir.path(), ExperimentKind::Supersolution);
    assert!(s["result"]["scan"]["first_exact"].is_u64(), "{s}");
}

#[test]
fn edge_list_topology_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("g.txt"), "# vertices 4\n0 1\n1 2\n").unwrap();
    fs::write(
        dir.path().join("c.toml"),
        "topology = { edge_list = \"g.txt\" }\ntrials = 50\nstart = { vertices = [1] }\n",
    )
    .unwrap();
    let config = ExperimentConfig::load(&dir.path().join("c.toml")).unwrap();
    let out = dir.path().join("out");
    run(ExperimentKind::Extinction, &config, &out).unwrap();
    assert!(out.join("manifest.json").is_file());
    // a tree-only experiment rejects it with the field named
    match run(ExperimentKind::Phi, &config, &out) {
        Err(Error::Precondition { field, .. }) => assert_eq!(field, "topology"),
        other => panic!("{other:?}"),
    }
}
