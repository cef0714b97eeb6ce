use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::chain::Variant;
use crate::error::{Error, Result};
use crate::graph::GraphTopology;
use crate::observables::ParameterSet;
use crate::vertex_set::VertexSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Extinction,
    DualitySweep,
    Phi,
    GammaProbe,
    Spread,
    Coupling,
    Bstar,
    ExpoTest,
    Rwchain,
    Supersolution,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 10] = [
        ExperimentKind::Extinction,
        ExperimentKind::DualitySweep,
        ExperimentKind::Phi,
        ExperimentKind::GammaProbe,
        ExperimentKind::Spread,
        ExperimentKind::Coupling,
        ExperimentKind::Bstar,
        ExperimentKind::ExpoTest,
        ExperimentKind::Rwchain,
        ExperimentKind::Supersolution,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Extinction => "extinction",
            ExperimentKind::DualitySweep => "duality-sweep",
            ExperimentKind::Phi => "phi",
            ExperimentKind::GammaProbe => "gamma-probe",
            ExperimentKind::Spread => "spread",
            ExperimentKind::Coupling => "coupling",
            ExperimentKind::Bstar => "bstar",
            ExperimentKind::ExpoTest => "expo-test",
            ExperimentKind::Rwchain => "rwchain",
            ExperimentKind::Supersolution => "supersolution",
        }
    }

    fn default_horizon(self) -> f64 {
        match self {
            ExperimentKind::DualitySweep => 5.0,
            _ => 1e6,
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| {
                let names: Vec<_> = ExperimentKind::ALL.iter().map(|k| k.as_str()).collect();
                Error::Parse(format!(
                    "unknown experiment `{s}`; expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

/// A rooted d-ary tree or a graph read from an edge-list file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TopologySpec {
    Tree { d: usize, n: usize },
    EdgeList { edge_list: PathBuf },
}

impl Default for TopologySpec {
    fn default() -> Self {
        TopologySpec::Tree { d: 2, n: 3 }
    }
}

impl TopologySpec {
    pub fn build(&self) -> Result<GraphTopology> {
        match self {
            TopologySpec::Tree { d, n } => GraphTopology::dary_tree(*d, *n),
            TopologySpec::EdgeList { edge_list } => {
                let text =
                    std::fs::read_to_string(edge_list).map_err(|e| Error::io(edge_list, e))?;
                GraphTopology::parse_edge_list(&text)
            }
        }
    }
}

/// Initial infected set.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartSpec {
    #[default]
    Full,
    Root,
    Vertices(Vec<usize>),
}

impl StartSpec {
    pub fn build(&self, topology: &GraphTopology) -> Result<VertexSet> {
        let n = topology.vertex_count();
        match self {
            StartSpec::Full => Ok(topology.full_set()),
            StartSpec::Root => Ok(VertexSet::singleton(n, topology.root()?)),
            StartSpec::Vertices(vs) => {
                if let Some(&v) = vs.iter().find(|&&v| v >= n) {
                    return Err(Error::precondition(
                        "start",
                        format!("vertex {v} is not below the vertex count {n}"),
                    ));
                }
                Ok(VertexSet::from_iter_in(n, vs.iter().copied()))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainSpec {
    pub n: u64,
    pub d: u64,
    pub variant: Variant,
    pub lower: i64,
    /// Defaults to the top state `h4`.
    pub upper: Option<i64>,
    /// Defaults to every state strictly between the barriers, plus `upper`.
    pub starts: Option<Vec<i64>>,
    /// Monte Carlo paths per start; defaults to the trial count.
    pub paths: Option<usize>,
    /// Also write the kernel dump.
    pub dump: bool,
}

impl Default for ChainSpec {
    fn default() -> Self {
        ChainSpec {
            n: 20,
            d: 2,
            variant: Variant::Paper,
            lower: 0,
            upper: None,
            starts: None,
            paths: None,
            dump: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanSpec {
    pub n_min: u64,
    pub n_max: u64,
}

impl Default for ScanSpec {
    fn default() -> Self {
        ScanSpec {
            n_min: 2,
            n_max: 400,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional; must agree with the experiment named on the command line.
    pub experiment: Option<ExperimentKind>,
    pub topology: TopologySpec,
    pub lambda: f64,
    /// Defaults to 5 for `duality-sweep` and 10⁶ otherwise.
    pub horizon: Option<f64>,
    pub trials: usize,
    pub seed: u64,
    /// Worker threads, 0 for the rayon default. Never affects results.
    pub threads: usize,
    pub confidence: f64,
    pub start: StartSpec,
    pub params: ParameterSet,
    /// Check times for `coupling`.
    pub times: Vec<f64>,
    /// Tree heights for `bstar`.
    pub heights: Vec<usize>,
    /// Quantile level for `bstar`.
    pub quantile: f64,
    /// Largest accepted KS distance for `expo-test`.
    pub ks_threshold: f64,
    /// `s / E[τ]` ratios for the inequality check in `expo-test`.
    pub fractions: Vec<f64>,
    /// Grid steps for `gamma-probe`.
    pub gamma_steps: usize,
    pub chain: ChainSpec,
    pub scan: ScanSpec,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: None,
            topology: TopologySpec::default(),
            lambda: 1.0,
            horizon: None,
            trials: 1000,
            seed: 0,
            threads: 0,
            confidence: 0.95,
            start: StartSpec::default(),
            params: ParameterSet::default(),
            times: vec![5.0, 20.0, 80.0],
            heights: (4..=10).collect(),
            quantile: 0.5,
            ks_threshold: 0.03,
            fractions: vec![0.1, 0.5],
            gamma_steps: 8,
            chain: ChainSpec::default(),
            scan: ScanSpec::default(),
            out: None,
        }
    }
}

impl ExperimentConfig {
    /// Parses TOML or JSON; JSON is detected by a leading `{`.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("config (json): {e}")))
        } else {
            toml::from_str(text).map_err(|e| Error::Parse(format!("config (toml): {e}")))
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::parse(&text)?;
        // edge lists are resolved against the config file's directory
        if let TopologySpec::EdgeList { edge_list } = &mut config.topology {
            if edge_list.is_relative() {
                if let Some(dir) = path.parent() {
                    *edge_list = dir.join(&*edge_list);
                }
            }
        }
        Ok(config)
    }

    pub fn horizon_for(&self, kind: ExperimentKind) -> f64 {
        self.horizon.unwrap_or_else(|| kind.default_horizon())
    }

    /// Hex SHA-256 of the canonical JSON form, ignoring `out` and `threads`,
    /// which do not affect results.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.out = None;
        canonical.threads = 0;
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    /// Re-checks every precondition `kind` depends on.
    pub fn validate(&self, kind: ExperimentKind) -> Result<()> {
        if let Some(named) = self.experiment {
            if named != kind {
                return Err(Error::precondition(
                    "experiment",
                    format!("config is for `{named}` but `{kind}` was requested"),
                ));
            }
        }
        if self.trials == 0 {
            return Err(Error::precondition("trials", "must be >= 1"));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::precondition(
                "lambda",
                format!("must be > 0 and finite, got {}", self.lambda),
            ));
        }
        let horizon = self.horizon_for(kind);
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::precondition(
                "horizon",
                format!("must be > 0 and finite, got {horizon}"),
            ));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::precondition(
                "confidence",
                format!("must lie in (0, 1), got {}", self.confidence),
            ));
        }
        let tree_shape = || -> Result<(usize, usize)> {
            match &self.topology {
                TopologySpec::Tree { d, n } => Ok((*d, *n)),
                TopologySpec::EdgeList { .. } => Err(Error::precondition(
                    "topology",
                    format!("`{kind}` needs a d-ary tree given by d and n"),
                )),
            }
        };
        match kind {
            ExperimentKind::Phi | ExperimentKind::GammaProbe | ExperimentKind::Spread => {
                let (d, n) = tree_shape()?;
                if n == 0 {
                    return Err(Error::precondition("topology.n", "must be >= 1"));
                }
                self.params.validate(d)?;
            }
            ExperimentKind::Coupling => {
                if self.times.is_empty() {
                    return Err(Error::precondition(
                        "times",
                        "needs at least one check time",
                    ));
                }
                if self.times[0] < 0.0 || self.times.windows(2).any(|w| w[1] < w[0]) {
                    return Err(Error::precondition(
                        "times",
                        "must be nonnegative and sorted",
                    ));
                }
            }
            ExperimentKind::Bstar => {
                let TopologySpec::Tree { .. } = self.topology else {
                    return Err(Error::precondition(
                        "topology",
                        "`bstar` needs d (n is ignored)",
                    ));
                };
                if self.heights.is_empty() || self.heights.contains(&0) {
                    return Err(Error::precondition("heights", "must be nonempty and >= 1"));
                }
                if !(self.quantile > 0.0 && self.quantile < 1.0) {
                    return Err(Error::precondition("quantile", "must lie in (0, 1)"));
                }
            }
            ExperimentKind::ExpoTest => {
                if !(self.ks_threshold > 0.0) {
                    return Err(Error::precondition("ks_threshold", "must be > 0"));
                }
                if self.fractions.iter().any(|&f| !(f > 0.0)) {
                    return Err(Error::precondition("fractions", "must all be > 0"));
                }
            }
            ExperimentKind::Rwchain => {
                if self.chain.n == 0 || self.chain.d < 2 {
                    return Err(Error::precondition("chain", "needs n >= 1 and d >= 2"));
                }
                if self.chain.lower < 0 {
                    return Err(Error::precondition("chain.lower", "must be >= 0"));
                }
            }
            ExperimentKind::Supersolution => {
                if self.scan.n_min == 0 || self.scan.n_min > self.scan.n_max {
                    return Err(Error::precondition("scan", "needs 1 <= n_min <= n_max"));
                }
            }
            ExperimentKind::Extinction | ExperimentKind::DualitySweep => {}
        }
        Ok(())
    }
}
