use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::ForwardSimulator;
use crate::graph::GraphTopology;
use crate::harris::HarrisSystem;
use crate::montecarlo::run_trials;
use crate::stats::{self, EstimateReport};
use crate::vertex_set::VertexSet;

/// Largest censored fraction an estimator accepts.
pub const MAX_CENSORED_FRACTION: f64 = 0.01;

/// One extinction time, or the horizon if the process was still alive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtinctionSample {
    pub tau: f64,
    pub censored: bool,
    pub seed: u64,
}

pub fn extinction_time(
    topology: &GraphTopology,
    lambda: f64,
    start: &VertexSet,
    horizon: f64,
    seed: u64,
) -> Result<ExtinctionSample> {
    if !(horizon > 0.0) {
        return Err(Error::domain(format!("horizon must be > 0, got {horizon}")));
    }
    let mut sim = ForwardSimulator::seeded(topology, lambda, start, seed)?;
    Ok(match sim.run_to_extinction(horizon) {
        Some(tau) => ExtinctionSample {
            tau,
            censored: false,
            seed,
        },
        None => ExtinctionSample {
            tau: horizon,
            censored: true,
            seed,
        },
    })
}

/// `trials` independent extinction samples, in trial order.
pub fn extinction_samples(
    topology: &GraphTopology,
    lambda: f64,
    start: &VertexSet,
    horizon: f64,
    trials: usize,
    master_seed: u64,
) -> Result<Vec<ExtinctionSample>> {
    if trials == 0 {
        return Err(Error::domain("trials must be >= 1"));
    }
    run_trials(trials, master_seed, |_, seed| {
        extinction_time(topology, lambda, start, horizon, seed)
    })
    .into_iter()
    .collect()
}

/// Extinction time read off a Harris system; `None` if alive at its horizon.
pub fn harris_extinction_time(harris: &HarrisSystem, start: &VertexSet) -> Result<Option<f64>> {
    Ok(harris.trajectory(start, None)?.extinction_time())
}

/// Uncensored times, or a data error when more than 1% are censored.
pub fn uncensored_times(samples: &[ExtinctionSample]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::Data("no samples".into()));
    }
    let censored = samples.iter().filter(|s| s.censored).count();
    let fraction = censored as f64 / samples.len() as f64;
    if fraction > MAX_CENSORED_FRACTION {
        return Err(Error::Data(format!(
            "{censored} of {} samples censored ({:.2}%); the horizon is too short",
            samples.len(),
            100.0 * fraction
        )));
    }
    Ok(samples
        .iter()
        .filter(|s| !s.censored)
        .map(|s| s.tau)
        .collect())
}

/// `P[ξ^A_t ≠ ∅]` with a Wilson interval.
pub fn survival_probability(
    topology: &GraphTopology,
    lambda: f64,
    start: &VertexSet,
    t: f64,
    trials: usize,
    master_seed: u64,
    z: f64,
) -> Result<EstimateReport> {
    let samples = extinction_samples(topology, lambda, start, t, trials, master_seed)?;
    let alive = samples.iter().filter(|s| s.censored).count();
    Ok(EstimateReport::proportion(alive, trials, z, master_seed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentialityReport {
    pub ks: f64,
    pub p_value: f64,
    pub threshold: f64,
    pub pass: bool,
    pub mean: f64,
    pub used: usize,
    pub censored: usize,
}

/// KS distance between `τ / mean(τ)` and Exp(1); passes iff the distance is
/// at most `threshold`.
pub fn exponentiality_test(
    samples: &[ExtinctionSample],
    threshold: f64,
) -> Result<ExponentialityReport> {
    let times = uncensored_times(samples)?;
    if times.len() < 100 {
        return Err(Error::Data(format!(
            "need at least 100 uncensored samples, got {}",
            times.len()
        )));
    }
    let (ks, mean) = normalized_exp_ks(&times);
    Ok(ExponentialityReport {
        ks,
        p_value: stats::ks_one_sample_pvalue(ks, times.len()),
        threshold,
        pass: ks <= threshold,
        mean,
        used: times.len(),
        censored: samples.len() - times.len(),
    })
}

/// `(KS distance of x / mean(x) to Exp(1), mean(x))`.
pub fn normalized_exp_ks(times: &[f64]) -> (f64, f64) {
    let mean = stats::mean(times);
    let scaled: Vec<f64> = times.iter().map(|t| t / mean).collect();
    (stats::ks_statistic(&scaled, |x| 1.0 - (-x).exp()), mean)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttractRow {
    pub s: f64,
    /// `P[τ <= s]` with its interval.
    pub probability: EstimateReport,
    /// `s / E[τ]` with the interval induced by the interval of the mean.
    pub bound: f64,
    pub bound_low: f64,
    pub bound_high: f64,
    /// The probability interval lies entirely above the bound interval.
    pub significant_violation: bool,
    /// The probability interval lies entirely below the bound interval.
    pub clearly_satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttractReport {
    pub mean: EstimateReport,
    pub rows: Vec<AttractRow>,
    pub censored: usize,
}

impl AttractReport {
    pub fn any_violation(&self) -> bool {
        self.rows.iter().any(|r| r.significant_violation)
    }
}

/// Compares `P[τ <= s]` with `s / E[τ]` at `s = f · Ê[τ]` for each fraction.
pub fn attract_inequality_check(
    samples: &[ExtinctionSample],
    fractions: &[f64],
    z: f64,
    master_seed: u64,
) -> Result<AttractReport> {
    let times = uncensored_times(samples)?;
    if times.len() < 2 {
        return Err(Error::Data("need at least two uncensored samples".into()));
    }
    let mean = EstimateReport::mean(&times, z, master_seed);
    if !(mean.ci_low > 0.0) {
        return Err(Error::Data(
            "mean extinction time interval reaches zero; add trials".into(),
        ));
    }
    let mut rows = Vec::new();
    for &f in fractions {
        if !(f > 0.0) {
            return Err(Error::domain(format!("fractions must be > 0, got {f}")));
        }
        let s = f * mean.estimate;
        // censored samples are alive at the horizon, which exceeds s
        let hits = times.iter().filter(|&&t| t <= s).count();
        let probability = EstimateReport::proportion(hits, samples.len(), z, master_seed);
        let bound = s / mean.estimate;
        let bound_low = s / mean.ci_high;
        let bound_high = s / mean.ci_low;
        rows.push(AttractRow {
            s,
            significant_violation: probability.ci_low > bound_high,
            clearly_satisfied: probability.ci_high <= bound_low,
            probability,
            bound,
            bound_low,
            bound_high,
        });
    }
    Ok(AttractReport {
        mean,
        rows,
        censored: samples.len() - times.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BstarRow {
    pub n: usize,
    pub quantile: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub median_tau: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BstarReport {
    pub d: usize,
    pub lambda: f64,
    pub q: f64,
    pub rows: Vec<BstarRow>,
    /// Quantile of `τ/n` at the largest height, used as the plateau value.
    pub plateau: EstimateReport,
    /// Relative spread `(max - min) / min` of the quantiles over the upper
    /// half of the heights.
    pub upper_spread: f64,
}

/// Seed of the sample set at position `i` of a height list.
pub fn bstar_height_seed(master_seed: u64, i: usize) -> u64 {
    master_seed.wrapping_add(i as u64)
}

/// Extinction samples from the fully infected tree at every height, seeded
/// by [`bstar_height_seed`].
pub fn bstar_samples(
    d: usize,
    lambda: f64,
    heights: &[usize],
    horizon: f64,
    trials: usize,
    master_seed: u64,
) -> Result<Vec<(usize, Vec<ExtinctionSample>)>> {
    check_heights(heights)?;
    heights
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let tree = GraphTopology::dary_tree(d, n)?;
            let seed = bstar_height_seed(master_seed, i);
            let samples =
                extinction_samples(&tree, lambda, &tree.full_set(), horizon, trials, seed)?;
            Ok((n, samples))
        })
        .collect()
}

fn check_heights(heights: &[usize]) -> Result<()> {
    if heights.is_empty() {
        return Err(Error::domain("no tree heights given"));
    }
    if heights.contains(&0) {
        return Err(Error::domain("height 0 makes τ/n undefined"));
    }
    Ok(())
}

/// Per-height `q`-quantiles of `τ_{T_n} / n` from the fully infected tree.
#[allow(clippy::too_many_arguments)]
pub fn estimate_bstar(
    d: usize,
    lambda: f64,
    heights: &[usize],
    q: f64,
    horizon: f64,
    trials: usize,
    master_seed: u64,
    z: f64,
) -> Result<BstarReport> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::domain(format!(
            "quantile level must be in (0, 1), got {q}"
        )));
    }
    let per_height = bstar_samples(d, lambda, heights, horizon, trials, master_seed)?;
    bstar_from_samples(d, lambda, q, &per_height, master_seed, z)
}

/// [`estimate_bstar`] on samples already drawn.
pub fn bstar_from_samples(
    d: usize,
    lambda: f64,
    q: f64,
    per_height: &[(usize, Vec<ExtinctionSample>)],
    master_seed: u64,
    z: f64,
) -> Result<BstarReport> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::domain(format!(
            "quantile level must be in (0, 1), got {q}"
        )));
    }
    check_heights(&per_height.iter().map(|(n, _)| *n).collect::<Vec<_>>())?;
    let mut rows = Vec::new();
    for (n, samples) in per_height {
        let n = *n;
        let times = uncensored_times(samples)?;
        let scaled = stats::sorted(&times.iter().map(|t| t / n as f64).collect::<Vec<_>>());
        let (ci_low, ci_high) = stats::quantile_interval(&scaled, q, z);
        rows.push(BstarRow {
            n,
            quantile: stats::quantile_sorted(&scaled, q),
            ci_low,
            ci_high,
            median_tau: stats::quantile_sorted(&scaled, 0.5) * n as f64,
            samples: times.len(),
        });
    }
    let last = rows.last().expect("heights is nonempty");
    let plateau = EstimateReport::new(
        last.quantile,
        (last.ci_low, last.ci_high),
        last.samples,
        master_seed,
    );
    let upper = &rows[rows.len() / 2..];
    let (lo, hi) = upper.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), r| {
        (lo.min(r.quantile), hi.max(r.quantile))
    });
    Ok(BstarReport {
        d,
        lambda,
        q,
        upper_spread: (hi - lo) / lo,
        plateau,
        rows,
    })
}
