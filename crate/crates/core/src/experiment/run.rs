use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::config::{ExperimentConfig, ExperimentKind, TopologySpec};
use super::plot::emit_plotdata;
use crate::chain::{
    compare_hitting, dump_kernel, excursion_tail_mass, row_dominance, supersolution_check,
    supersolution_scan, ChainKernel, Kernel, Variant,
};
use crate::duality::pathwise_case;
use crate::error::{Error, Result};
use crate::montecarlo::{run_trials, with_threads};
use crate::observables::{
    attract_inequality_check, bstar_from_samples, bstar_samples, classify_g, coupling_discrepancy,
    domination_probe, exponentiality_test, extinction_samples, g_threshold, level_count_member,
    phi_trials, spread_event_trials, uncensored_times, BoundedEstimate, Decomposition,
    ExtinctionSample,
};
use crate::rng::trial_seed;
use crate::stats::{self, z_for_confidence, EstimateReport};

/// Version of the CSV column layouts; bumped on any breaking change.
pub const CSV_SCHEMA_VERSION: u32 = 1;

pub const SEED_RULE: &str = "trial i of master m uses splitmix64(m ^ splitmix64(i)) as a ChaCha8 key; \
bstar height at position i uses master m + i; rwchain start a uses master splitmix64(m ^ splitmix64(a)) \
with one trial seed per chunk of 4096 paths";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFile {
    /// File name relative to the output directory.
    pub path: String,
    pub role: String,
    pub columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool_version: String,
    pub experiment: ExperimentKind,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub master_seed: u64,
    pub trials: usize,
    pub threads: usize,
    pub seed_rule: String,
    pub wall_time_secs: f64,
    pub outputs: Vec<OutputFile>,
}

impl RunManifest {
    pub fn output(&self, role: &str) -> Option<&OutputFile> {
        self.outputs.iter().find(|o| o.role == role)
    }
}

/// Rows of the per-trial CSV, already formatted.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(columns: &[&'static str]) -> Self {
        Table {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        w.write_record(&self.columns)
            .map_err(|e| csv_error(path, e))?;
        for row in &self.rows {
            w.write_record(row).map_err(|e| csv_error(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse(format!("{}: {other:?}", path.display())),
    }
}

/// Everything an experiment produces before it is written out.
#[derive(Debug, Clone, PartialEq)]
pub struct Computed {
    pub table: Table,
    pub summary: Value,
    /// Additional JSON files as `(file name, role, body)`.
    pub extras: Vec<(String, String, Value)>,
}

fn s<T: ToString>(x: T) -> String {
    x.to_string()
}

fn data_or_error<T: Serialize>(r: Result<T>) -> Result<Value> {
    match r {
        Ok(v) => serde_json::to_value(v).map_err(|e| Error::Internal(e.to_string())),
        Err(e @ Error::Data(_)) => Ok(json!({ "error": e.to_string() })),
        Err(e) => Err(e),
    }
}

fn extinction_table(samples: &[ExtinctionSample]) -> Table {
    let mut t = Table::new(&["trial", "seed", "tau", "censored"]);
    for (i, x) in samples.iter().enumerate() {
        t.push(vec![s(i), s(x.seed), s(x.tau), s(x.censored)]);
    }
    t
}

fn tree_shape(config: &ExperimentConfig) -> Result<(usize, usize)> {
    match config.topology {
        TopologySpec::Tree { d, n } => Ok((d, n)),
        TopologySpec::EdgeList { .. } => Err(Error::precondition("topology", "needs a d-ary tree")),
    }
}

fn chain_kernel(config: &ExperimentConfig, n: u64, variant: Variant) -> Result<ChainKernel<f64>> {
    let p = &config.params;
    ChainKernel::new(n, config.chain.d, p.cbar, p.sigma, p.theta, variant)
}

/// Runs the estimator behind `kind` without touching the file system.
pub fn compute(kind: ExperimentKind, config: &ExperimentConfig) -> Result<Computed> {
    config.validate(kind)?;
    let master = config.seed;
    let trials = config.trials;
    let lambda = config.lambda;
    let horizon = config.horizon_for(kind);
    let z = z_for_confidence(config.confidence);
    let params = &config.params;
    let mut extras = Vec::new();

    let (table, summary) = match kind {
        ExperimentKind::Extinction => {
            let topo = config.topology.build()?;
            let start = config.start.build(&topo)?;
            let samples = extinction_samples(&topo, lambda, &start, horizon, trials, master)?;
            let censored = samples.iter().filter(|x| x.censored).count();
            let mean = data_or_error(
                uncensored_times(&samples).map(|t| EstimateReport::mean(&t, z, master)),
            )?;
            let taus = stats::sorted(&samples.iter().map(|x| x.tau).collect::<Vec<_>>());
            let summary = json!({
                "mean": mean,
                "median": stats::quantile_sorted(&taus, 0.5),
                "censored": censored,
                "horizon": horizon,
            });
            (extinction_table(&samples), summary)
        }
        ExperimentKind::DualitySweep => {
            let topo = config.topology.build()?;
            let cases: Result<Vec<_>> = run_trials(trials, master, |_, seed| {
                pathwise_case(&topo, lambda, horizon, seed)
            })
            .into_iter()
            .collect();
            let cases = cases?;
            let mut t = Table::new(&[
                "trial",
                "seed",
                "t",
                "a_size",
                "b_size",
                "forward_hit",
                "dual_hit",
                "monotone",
                "additive",
                "restricted",
            ]);
            for (i, c) in cases.iter().enumerate() {
                t.push(vec![
                    s(i),
                    s(c.seed),
                    s(c.t),
                    s(c.a_size),
                    s(c.b_size),
                    s(c.forward_hit),
                    s(c.dual_hit),
                    s(c.monotone),
                    s(c.additive),
                    s(c.restricted),
                ]);
            }
            let count = |f: &dyn Fn(&crate::duality::PathwiseCase) -> bool| {
                cases.iter().filter(|c| !f(c)).count()
            };
            let summary = json!({
                "cases": cases.len(),
                "violations": {
                    "duality": count(&|c| c.duality_holds()),
                    "monotone": count(&|c| c.monotone),
                    "additive": count(&|c| c.additive),
                    "restricted": count(&|c| c.restricted),
                    "total": count(&|c| c.all_hold()),
                },
                "horizon": horizon,
            });
            (t, summary)
        }
        ExperimentKind::Phi => {
            let (_, n) = tree_shape(config)?;
            let topo = config.topology.build()?;
            let start = config.start.build(&topo)?;
            let dec = Decomposition::new(n, params.v0, params.v1)?;
            let hits = phi_trials(&topo, lambda, &start, params, &dec, trials, master)?;
            let mut t = Table::new(&["trial", "seed", "f_holds"]);
            for (i, &h) in hits.iter().enumerate() {
                t.push(vec![s(i), s(trial_seed(master, i as u64)), s(h)]);
            }
            let count = hits.iter().filter(|&&h| h).count();
            let phi = EstimateReport::proportion(count, trials, z, master);
            let threshold = g_threshold(n);
            let summary = json!({
                "phi": phi,
                "g_threshold": threshold,
                "in_g": classify_g(&phi, threshold),
                "decomposition": dec,
            });
            (t, summary)
        }
        ExperimentKind::GammaProbe => {
            let (d, n) = tree_shape(config)?;
            let topo = config.topology.build()?;
            let start = config.start.build(&topo)?;
            let dec = Decomposition::new(n, params.v0, params.v1)?;
            let member = level_count_member(d, dec.m2, params)?;
            let gap = (dec.m2 as f64).sqrt();
            let grid: Vec<f64> = (0..=config.gamma_steps.max(1))
                .map(|i| i as f64 * gap)
                .collect();
            let kernel = chain_kernel(config, n as u64, Variant::Paper)?;
            let report = domination_probe(
                &topo, lambda, &start, &dec, member, &grid, &kernel, trials, master,
            )?;
            let mut t = Table::new(&["trial", "seed", "step", "time", "gamma"]);
            for (i, path) in report.samples.iter().enumerate() {
                let seed = trial_seed(master, i as u64);
                for (j, g) in path.iter().enumerate() {
                    t.push(vec![s(i), s(seed), s(j), s(grid[j]), s(g)]);
                }
            }
            let mut summary =
                serde_json::to_value(&report).map_err(|e| Error::Internal(e.to_string()))?;
            if let Value::Object(m) = &mut summary {
                m.remove("samples");
                m.insert("decomposition".into(), json!(dec));
            }
            (t, summary)
        }
        ExperimentKind::Spread => {
            let (_, n) = tree_shape(config)?;
            let topo = config.topology.build()?;
            let start = config.start.build(&topo)?;
            let dec = Decomposition::new(n, params.v0, params.v1)?;
            let (hits, time, bound) =
                spread_event_trials(&topo, lambda, &start, dec.n1, params, trials, master)?;
            let mut t = Table::new(&["trial", "seed", "reached"]);
            for (i, &h) in hits.iter().enumerate() {
                t.push(vec![s(i), s(trial_seed(master, i as u64)), s(h)]);
            }
            let count = hits.iter().filter(|&&h| h).count();
            let probability = EstimateReport::proportion(count, trials, z, master);
            let estimate = BoundedEstimate {
                above_bound: probability.estimate > bound,
                probability,
                bound,
                time,
            };
            (t, json!({ "n1": dec.n1, "estimate": estimate }))
        }
        ExperimentKind::Coupling => {
            let topo = config.topology.build()?;
            let report = coupling_discrepancy(&topo, lambda, &config.times, trials, master, z)?;
            let mut t = Table::new(&["trial", "seed", "time", "discrepant"]);
            for (i, row) in report.indicators.iter().enumerate() {
                let seed = trial_seed(master, i as u64);
                for (j, &b) in row.iter().enumerate() {
                    t.push(vec![s(i), s(seed), s(config.times[j]), s(b)]);
                }
            }
            let summary = json!({
                "times": report.times,
                "estimates": report.estimates,
                "nonincreasing": report.nonincreasing,
            });
            (t, summary)
        }
        ExperimentKind::Bstar => {
            let (d, _) = tree_shape(config)?;
            let per_height = bstar_samples(d, lambda, &config.heights, horizon, trials, master)?;
            let mut t = Table::new(&["n", "trial", "seed", "tau", "censored"]);
            for (n, samples) in &per_height {
                for (i, x) in samples.iter().enumerate() {
                    t.push(vec![s(n), s(i), s(x.seed), s(x.tau), s(x.censored)]);
                }
            }
            let report = data_or_error(bstar_from_samples(
                d,
                lambda,
                config.quantile,
                &per_height,
                master,
                z,
            ))?;
            (t, json!({ "report": report, "horizon": horizon }))
        }
        ExperimentKind::ExpoTest => {
            let topo = config.topology.build()?;
            let start = config.start.build(&topo)?;
            let samples = extinction_samples(&topo, lambda, &start, horizon, trials, master)?;
            let expo = data_or_error(exponentiality_test(&samples, config.ks_threshold))?;
            let attract = data_or_error(attract_inequality_check(
                &samples,
                &config.fractions,
                z,
                master,
            ))?;
            let summary = json!({
                "exponentiality": expo,
                "attract": attract,
                "censored": samples.iter().filter(|x| x.censored).count(),
                "horizon": horizon,
            });
            (extinction_table(&samples), summary)
        }
        ExperimentKind::Rwchain => {
            let c = &config.chain;
            let kernel = chain_kernel(config, c.n, c.variant)?;
            let upper = c.upper.unwrap_or(kernel.top());
            let starts = c
                .starts
                .clone()
                .unwrap_or_else(|| (c.lower + 1..=upper).collect());
            let paths = c.paths.unwrap_or(trials);
            let results = compare_hitting(&kernel, &starts, c.lower, upper, paths, master)?;
            let mut t = Table::new(&["start", "chunk", "seed", "paths", "hits"]);
            for (cmp, chunks) in &results {
                for (i, ch) in chunks.iter().enumerate() {
                    t.push(vec![
                        s(cmp.start),
                        s(i),
                        s(ch.seed),
                        s(ch.paths),
                        s(ch.hits),
                    ]);
                }
            }
            let comparisons: Vec<_> = results.iter().map(|(c, _)| *c).collect();
            let dominance = match (
                chain_kernel(config, c.n, Variant::Paper),
                chain_kernel(config, c.n, Variant::Dominating),
            ) {
                (Ok(lower), Ok(upper)) => data_or_error(row_dominance(&upper, &lower))?,
                (Err(e), _) | (_, Err(e)) => json!({ "error": e.to_string() }),
            };
            if c.dump {
                let dump = serde_json::to_value(dump_kernel(&kernel))
                    .map_err(|e| Error::Internal(e.to_string()))?;
                extras.push(("kernel.json".to_string(), "kernel-dump".to_string(), dump));
            }
            let summary = json!({
                "n": c.n,
                "d": c.d,
                "variant": c.variant,
                "h4": kernel.h4(),
                "upward": kernel.upward(),
                "holding": kernel.holding(),
                "lower": c.lower,
                "upper": upper,
                "comparisons": comparisons,
                "all_within_3sigma": comparisons.iter().all(|c| c.within_3sigma),
                "tail_mass": excursion_tail_mass(&kernel),
                "dominance_holds": dominance.get("holds").cloned().unwrap_or(Value::Null),
                "dominance_worst": dominance.get("worst").cloned().unwrap_or(Value::Null),
            });
            (t, summary)
        }
        ExperimentKind::Supersolution => {
            let sc = config.scan;
            let mut t = Table::new(&[
                "n",
                "r",
                "h4",
                "holds",
                "max",
                "unmerged_ratio",
                "bracket",
                "leading_order",
            ]);
            for n in sc.n_min..=sc.n_max {
                let kernel = match chain_kernel(config, n, Variant::Dominating) {
                    Ok(k) => k,
                    Err(Error::Kernel(_)) => continue,
                    Err(e) => return Err(e),
                };
                let r = (n as f64).powf(2.0 / 7.0);
                let rep = supersolution_check(&kernel, r)?;
                t.push(vec![
                    s(n),
                    s(r),
                    s(kernel.h4()),
                    s(rep.holds && !rep.values.is_empty()),
                    s(rep.max),
                    s(rep.unmerged_ratio),
                    s(rep.bracket),
                    s(rep.leading_order),
                ]);
            }
            let scan = supersolution_scan(
                config.chain.d,
                params.cbar,
                params.sigma,
                params.theta,
                sc.n_min..=sc.n_max,
            )?;
            (t, json!({ "scan": scan, "d": config.chain.d }))
        }
    };
    Ok(Computed {
        table,
        summary,
        extras,
    })
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Internal(e.to_string()))?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Runs `kind`, writes `<kind>.csv`, `<kind>.summary.json`, any extra files,
/// the plot data and `manifest.json` into `out_dir`.
pub fn run(kind: ExperimentKind, config: &ExperimentConfig, out_dir: &Path) -> Result<RunManifest> {
    config.validate(kind)?;
    let clock = Instant::now();
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let computed = with_threads(config.threads, || compute(kind, config))??;
    let hash = config.hash();

    let csv_name = format!("{kind}.csv");
    computed.table.write(&out_dir.join(&csv_name))?;
    let mut outputs = vec![OutputFile {
        path: csv_name,
        role: "trials".into(),
        columns: computed
            .table
            .columns
            .iter()
            .map(|c| c.to_string())
            .collect(),
    }];

    let summary_name = format!("{kind}.summary.json");
    let summary = json!({
        "experiment": kind,
        "config_hash": hash,
        "master_seed": config.seed,
        "trials": config.trials,
        "confidence": config.confidence,
        "result": computed.summary,
    });
    write_json(&out_dir.join(&summary_name), &summary)?;
    outputs.push(OutputFile {
        path: summary_name,
        role: "summary".into(),
        columns: Vec::new(),
    });
    for (name, role, body) in &computed.extras {
        write_json(&out_dir.join(name), body)?;
        outputs.push(OutputFile {
            path: name.clone(),
            role: role.clone(),
            columns: Vec::new(),
        });
    }

    let mut manifest = RunManifest {
        schema_version: CSV_SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        experiment: kind,
        config_hash: hash,
        config: config.clone(),
        master_seed: config.seed,
        trials: config.trials,
        threads: config.threads,
        seed_rule: SEED_RULE.to_string(),
        wall_time_secs: 0.0,
        outputs,
    };
    let plots = emit_plotdata(&manifest, out_dir)?;
    manifest.outputs.extend(plots);
    manifest.wall_time_secs = clock.elapsed().as_secs_f64();
    write_json(&out_dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

/// Reads a manifest written by [`run`].
pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(kind: ExperimentKind) -> ExperimentConfig {
        ExperimentConfig {
            experiment: Some(kind),
            trials: 40,
            seed: 5,
            ..Default::default()
        }
    }

    #[test]
    fn every_kind_computes_on_small_inputs() {
        for kind in ExperimentKind::ALL {
            let mut c = small(kind);
            match kind {
                ExperimentKind::Bstar => {
                    c.heights = vec![1, 2];
                    c.lambda = 0.5;
                }
                ExperimentKind::ExpoTest => {
                    c.trials = 120;
                    c.topology = TopologySpec::Tree { d: 2, n: 1 };
                }
                ExperimentKind::GammaProbe | ExperimentKind::Phi | ExperimentKind::Spread => {
                    c.topology = TopologySpec::Tree { d: 2, n: 4 };
                    c.lambda = 3.0;
                }
                ExperimentKind::Coupling => c.times = vec![0.5, 1.0],
                ExperimentKind::Rwchain => c.chain.paths = Some(5000),
                ExperimentKind::Supersolution => c.scan.n_max = 60,
                _ => {}
            }
            let out = compute(kind, &c).unwrap_or_else(|e| panic!("{kind}: {e}"));
            assert!(!out.table.rows.is_empty(), "{kind}");
        }
    }

    #[test]
    fn validation_runs_before_work() {
        let c = ExperimentConfig {
            lambda: -1.0,
            ..small(ExperimentKind::Extinction)
        };
        assert!(matches!(
            compute(ExperimentKind::Extinction, &c),
            Err(Error::Precondition { .. })
        ));
    }
}
