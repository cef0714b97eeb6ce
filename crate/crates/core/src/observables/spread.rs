use serde::{Deserialize, Serialize};

use super::params::ParameterSet;
use crate::error::{Error, Result};
use crate::forward::simulate_forward;
use crate::graph::GraphTopology;
use crate::harris::HarrisSystem;
use crate::montecarlo::run_trials;
use crate::stats::EstimateReport;
use crate::vertex_set::VertexSet;

/// An estimate next to the lower bound it is meant to clear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundedEstimate {
    pub probability: EstimateReport,
    pub bound: f64,
    pub time: f64,
    pub above_bound: bool,
}

impl BoundedEstimate {
    fn new(probability: EstimateReport, bound: f64, time: f64) -> Self {
        BoundedEstimate {
            above_bound: probability.estimate > bound,
            probability,
            bound,
            time,
        }
    }
}

fn count_true(results: Vec<Result<bool>>) -> Result<usize> {
    let mut count = 0;
    for r in results {
        if r? {
            count += 1;
        }
    }
    Ok(count)
}

/// Per-trial outcomes behind [`spread_event_probability`] together with the
/// observation horizon and the bound.
#[allow(clippy::too_many_arguments)]
pub fn spread_event_trials(
    topology: &GraphTopology,
    lambda: f64,
    start: &VertexSet,
    n1: usize,
    params: &ParameterSet,
    trials: usize,
    master_seed: u64,
) -> Result<(Vec<bool>, f64, f64)> {
    if trials == 0 {
        return Err(Error::domain("trials must be >= 1"));
    }
    let (d, _) = topology.tree_shape()?;
    let root = topology.root()?;
    if !start.intersects(&topology.ball(root, n1)?) {
        return Err(Error::precondition(
            "start",
            format!("must meet the ball of radius {n1} around the root"),
        ));
    }
    let level = topology.level(n1)?;
    let needed = ParameterSet::dbar(d).powi(n1 as i32);
    let horizon = (params.ell + params.s / (2.0 * params.k)) * n1 as f64;
    let reached = |count: usize| count as f64 >= needed;
    let results: Result<Vec<bool>> = run_trials(trials, master_seed, |_, seed| {
        if horizon == 0.0 {
            return Ok(reached(start.intersection_count(&level)));
        }
        let traj = simulate_forward(topology, lambda, start, horizon, seed)?;
        Ok(traj.count_profile(&level).iter().any(|&(_, c)| reached(c)))
    })
    .into_iter()
    .collect();
    let bound = params.cbar * params.theta.powi(n1 as i32) * params.sigma;
    Ok((results?, horizon, bound))
}

/// Probability that level `n1` carries at least `(2d/3)^{n1}` infected sites
/// at some time `t <= (ℓ + S/2K) n1`, against the bound `c̄ θ^{n1} σ`.
#[allow(clippy::too_many_arguments)]
pub fn spread_event_probability(
    topology: &GraphTopology,
    lambda: f64,
    start: &VertexSet,
    n1: usize,
    params: &ParameterSet,
    trials: usize,
    master_seed: u64,
    z: f64,
) -> Result<BoundedEstimate> {
    let (hits, horizon, bound) =
        spread_event_trials(topology, lambda, start, n1, params, trials, master_seed)?;
    let count = hits.into_iter().filter(|&h| h).count();
    Ok(BoundedEstimate::new(
        EstimateReport::proportion(count, trials, z, master_seed),
        bound,
        horizon,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReinfectionCurve {
    /// `(i S, P[root infected at i S])` for `i = 0..=imax`.
    pub points: Vec<(f64, EstimateReport)>,
    /// `P[|ξ^o_{Sn/2K} ∩ L(n)| > (2d/3)^n]`.
    pub leaf_spread: EstimateReport,
    pub leaf_spread_time: f64,
    pub sigma: f64,
}

/// Root-started process observed at the root at times `iS`, plus the spread
/// to the leaves at time `Sn / 2K`.
pub fn root_reinfection_curve(
    topology: &GraphTopology,
    lambda: f64,
    params: &ParameterSet,
    imax: usize,
    trials: usize,
    master_seed: u64,
    z: f64,
) -> Result<ReinfectionCurve> {
    if trials == 0 {
        return Err(Error::domain("trials must be >= 1"));
    }
    let (d, n) = topology.tree_shape()?;
    let root = topology.root()?;
    let start = VertexSet::singleton(topology.vertex_count(), root);
    let leaves = topology.level(n)?;
    let leaf_time = params.s * n as f64 / (2.0 * params.k);
    let leaf_needed = ParameterSet::dbar(d).powi(n as i32);
    let times: Vec<f64> = (0..=imax).map(|i| i as f64 * params.s).collect();
    let horizon = times[imax].max(leaf_time).max(f64::MIN_POSITIVE);
    let rows: Result<Vec<(Vec<bool>, bool)>> = run_trials(trials, master_seed, |_, seed| {
        let traj = simulate_forward(topology, lambda, &start, horizon, seed)?;
        let at_root = times
            .iter()
            .map(|&t| Ok(traj.config_at(t)?.contains(root)))
            .collect::<Result<Vec<bool>>>()?;
        let spread = traj.config_at(leaf_time)?.intersection_count(&leaves) as f64 > leaf_needed;
        Ok((at_root, spread))
    })
    .into_iter()
    .collect();
    let rows = rows?;
    let points = times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let hits = rows.iter().filter(|(r, _)| r[i]).count();
            (t, EstimateReport::proportion(hits, trials, z, master_seed))
        })
        .collect();
    let spread = rows.iter().filter(|(_, s)| *s).count();
    Ok(ReinfectionCurve {
        points,
        leaf_spread: EstimateReport::proportion(spread, trials, z, master_seed),
        leaf_spread_time: leaf_time,
        sigma: params.sigma,
    })
}

/// `P[ξ^x_{ℓ dist(x,y)}(y) = 1]` against `c̄ θ^{dist(x,y)}`.
#[allow(clippy::too_many_arguments)]
pub fn point_to_point_probability(
    topology: &GraphTopology,
    lambda: f64,
    x: usize,
    y: usize,
    params: &ParameterSet,
    trials: usize,
    master_seed: u64,
    z: f64,
) -> Result<BoundedEstimate> {
    if trials == 0 {
        return Err(Error::domain("trials must be >= 1"));
    }
    let dist = topology
        .dist(x, y)?
        .ok_or_else(|| Error::precondition("y", "must be reachable from x"))?;
    let t = params.ell * dist as f64;
    let start = VertexSet::singleton(topology.vertex_count(), x);
    let results = run_trials(trials, master_seed, |_, seed| {
        if t == 0.0 {
            return Ok(true);
        }
        let traj = simulate_forward(topology, lambda, &start, t, seed)?;
        Ok(traj.final_config().contains(y))
    });
    let count = count_true(results)?;
    Ok(BoundedEstimate::new(
        EstimateReport::proportion(count, trials, z, master_seed),
        params.cbar * params.theta.powi(dist as i32),
        t,
    ))
}

/// States of the process from `start` at each sorted time, from one sweep.
pub fn evolve_checkpoints(
    harris: &HarrisSystem,
    start: &VertexSet,
    times: &[f64],
) -> Result<Vec<VertexSet>> {
    let mut out = Vec::with_capacity(times.len());
    let mut state = start.clone();
    let mut now = 0.0;
    for &t in times {
        if t < now {
            return Err(Error::domain("checkpoint times must be nondecreasing"));
        }
        state = harris.evolve_shifted(&state, now, t)?;
        now = t;
        out.push(state.clone());
    }
    Ok(out)
}

/// On one Harris system: for each check time, whether some singleton-started
/// process is alive and differs from the fully infected one.
pub fn discrepancy_on(harris: &HarrisSystem, times: &[f64]) -> Result<Vec<bool>> {
    let n = harris.vertex_count();
    let full = evolve_checkpoints(harris, &VertexSet::full(n), times)?;
    let mut out = vec![false; times.len()];
    for x in 0..n {
        let states = evolve_checkpoints(harris, &VertexSet::singleton(n, x), times)?;
        for (i, s) in states.iter().enumerate() {
            if !s.is_empty() && *s != full[i] {
                out[i] = true;
            }
        }
        if out.iter().all(|&b| b) {
            break;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub times: Vec<f64>,
    pub estimates: Vec<EstimateReport>,
    /// Per-trial indicators, `indicators[trial][i]` for `times[i]`.
    pub indicators: Vec<Vec<bool>>,
    pub nonincreasing: bool,
}

/// Discrepancy probability at each check time over shared Harris systems.
/// The event is pathwise nonincreasing in time, so the estimates are too.
pub fn coupling_discrepancy(
    topology: &GraphTopology,
    lambda: f64,
    times: &[f64],
    trials: usize,
    master_seed: u64,
    z: f64,
) -> Result<DiscrepancyReport> {
    if trials == 0 || times.is_empty() {
        return Err(Error::domain(
            "need trials >= 1 and at least one check time",
        ));
    }
    if times.windows(2).any(|w| w[1] < w[0]) || times[0] < 0.0 {
        return Err(Error::domain("check times must be nonnegative and sorted"));
    }
    let horizon = times[times.len() - 1].max(f64::MIN_POSITIVE);
    let indicators: Result<Vec<Vec<bool>>> = run_trials(trials, master_seed, |_, seed| {
        let h = HarrisSystem::sample(topology, lambda, horizon, seed)?;
        discrepancy_on(&h, times)
    })
    .into_iter()
    .collect();
    let indicators = indicators?;
    let estimates: Vec<EstimateReport> = (0..times.len())
        .map(|i| {
            let k = indicators.iter().filter(|row| row[i]).count();
            EstimateReport::proportion(k, trials, z, master_seed)
        })
        .collect();
    let nonincreasing = estimates.windows(2).all(|w| w[1].estimate <= w[0].estimate);
    Ok(DiscrepancyReport {
        times: times.to_vec(),
        estimates,
        indicators,
        nonincreasing,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockEvents {
    pub block: f64,
    /// `e[k]` for `k = 1..=k_max` (index 0 unused and false).
    pub e: Vec<bool>,
    pub f: Vec<bool>,
    /// `alive[k]`: the fully infected process is nonempty at `t_{k+1}`.
    pub alive: Vec<bool>,
    /// For every `k`, all `E_l ∩ F_l` with `l <= k` imply `alive[k]`.
    pub implication_holds: bool,
}

/// Block events with `t_k = k · block`:
/// `E_k = {ξ^{1, t_{k-1}}_{t_{k+1}} ≠ ∅}` and
/// `F_k = {∀x: ξ^{x, t_{k-1}}_{t_k} ∈ {∅, ξ^{1, t_{k-1}}_{t_k}}}`.
pub fn block_events(harris: &HarrisSystem, block: f64, k_max: usize) -> Result<BlockEvents> {
    if !(block > 0.0) || k_max == 0 {
        return Err(Error::domain("need block > 0 and k_max >= 1"));
    }
    let t = |k: usize| k as f64 * block;
    if t(k_max + 1) > harris.horizon() * (1.0 + 1e-12) {
        return Err(Error::domain(format!(
            "horizon {} shorter than (k_max + 1) blocks",
            harris.horizon()
        )));
    }
    let end = |k: usize| t(k).min(harris.horizon());
    let n = harris.vertex_count();
    let full = VertexSet::full(n);
    let mut e = vec![false; k_max + 1];
    let mut f = vec![false; k_max + 1];
    let mut alive = vec![false; k_max + 1];
    for k in 1..=k_max {
        let (s, mid, stop) = (end(k - 1), end(k), end(k + 1));
        let one_mid = harris.evolve_shifted(&full, s, mid)?;
        e[k] = !harris.evolve_shifted(&one_mid, mid, stop)?.is_empty();
        f[k] = (0..n).all(|x| {
            let sx = harris
                .evolve_shifted(&VertexSet::singleton(n, x), s, mid)
                .expect("times checked above");
            sx.is_empty() || sx == one_mid
        });
    }
    let mut state = full.clone();
    let mut now = 0.0;
    for (k, slot) in alive.iter_mut().enumerate() {
        state = harris.evolve_shifted(&state, now, end(k + 1))?;
        now = end(k + 1);
        *slot = !state.is_empty();
    }
    let mut good_so_far = true;
    let mut implication_holds = true;
    for k in 1..=k_max {
        good_so_far &= e[k] && f[k];
        if good_so_far && !alive[k] {
            implication_holds = false;
        }
    }
    Ok(BlockEvents {
        block,
        e,
        f,
        alive,
        implication_holds,
    })
}
