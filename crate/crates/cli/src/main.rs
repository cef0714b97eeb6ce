use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serde_json::json;
use treecp::experiment::{run, ExperimentConfig, ExperimentKind};
use treecp::Error;

/// Run a contact-process experiment and write CSV, JSON summary, manifest and
/// plot data.
#[derive(Debug, Parser)]
#[command(name = "treecp", version)]
struct Cli {
    /// extinction, duality-sweep, phi, gamma-probe, spread, coupling, bstar,
    /// expo-test, rwchain or supersolution.
    #[arg(value_parser = parse_kind)]
    experiment: ExperimentKind,

    /// Configuration file (TOML or JSON).
    #[arg(long)]
    config: PathBuf,

    /// Master seed; overrides the config.
    #[arg(long, env = "TREECP_SEED")]
    seed: Option<u64>,

    /// Number of trials; overrides the config.
    #[arg(long, env = "TREECP_TRIALS")]
    trials: Option<usize>,

    /// Output directory; defaults to the config's `out`, then `treecp-out/<experiment>`.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Worker threads (0 = all cores). Results do not depend on it.
    #[arg(long, env = "TREECP_THREADS")]
    threads: Option<usize>,
}

fn parse_kind(s: &str) -> Result<ExperimentKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn error_json(e: &Error) -> serde_json::Value {
    let mut body = json!({ "kind": e.kind(), "message": e.to_string() });
    if let Error::Precondition { field, rule } = e {
        body["field"] = json!(field);
        body["rule"] = json!(rule);
    }
    json!({ "error": body })
}

fn execute(cli: &Cli) -> treecp::Result<treecp::experiment::RunManifest> {
    let mut config = ExperimentConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(trials) = cli.trials {
        config.trials = trials;
    }
    if let Some(threads) = cli.threads {
        config.threads = threads;
    }
    let out = cli
        .out
        .clone()
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from("treecp-out").join(cli.experiment.as_str()));
    config.out = Some(out.clone());
    run(cli.experiment, &config, &out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(manifest) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&manifest).expect("manifest serializes")
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::FAILURE
        }
    }
}
