use serde::{Deserialize, Serialize};

use super::params::{Decomposition, ParameterSet};
use crate::chain::ChainKernel;
use crate::error::{Error, Result};
use crate::forward::simulate_forward;
use crate::graph::GraphTopology;
use crate::montecarlo::run_trials;
use crate::stats::EstimateReport;
use crate::trajectory::Trajectory;
use crate::vertex_set::VertexSet;

/// True iff every closed window of length `s_len` inside `[a, b]` meets a
/// time at which `level` is occupied. A gap of exactly `s_len` fails.
pub fn predicate_f(
    traj: &Trajectory,
    level: &VertexSet,
    s_len: f64,
    a: f64,
    b: f64,
) -> Result<bool> {
    if !(0.0 <= a && a <= b && b <= traj.horizon()) {
        return Err(Error::domain(format!(
            "window [{a}, {b}] not inside [0, {}]",
            traj.horizon()
        )));
    }
    if !(s_len > 0.0) {
        return Err(Error::domain(format!(
            "window length must be > 0, got {s_len}"
        )));
    }
    Ok(longest_gap(&traj.occupancy_intervals(level), a, b) < s_len || b - a < s_len)
}

/// Length of the longest stretch of `[a, b]` outside the half-open intervals.
pub fn longest_gap(intervals: &[(f64, f64)], a: f64, b: f64) -> f64 {
    let mut longest = 0.0f64;
    let mut free_from = a;
    for &(lo, hi) in intervals {
        if hi <= a {
            continue;
        }
        if lo >= b {
            break;
        }
        longest = longest.max(lo - free_from);
        free_from = free_from.max(hi);
    }
    longest.max(b - free_from)
}

/// `1 - exp(-sqrt(n) / 2)`.
pub fn g_threshold(n: usize) -> f64 {
    1.0 - (-0.5 * (n as f64).sqrt()).exp()
}

/// Conservative membership: the lower end of the interval clears the
/// threshold.
pub fn classify_g(phi: &EstimateReport, threshold: f64) -> bool {
    phi.ci_low > threshold
}

/// Per-trial outcomes of the predicate `F` behind [`estimate_phi`], in trial
/// order.
#[allow(clippy::too_many_arguments)]
pub fn phi_trials(
    topology: &GraphTopology,
    lambda: f64,
    start: &VertexSet,
    params: &ParameterSet,
    dec: &Decomposition,
    trials: usize,
    master_seed: u64,
) -> Result<Vec<bool>> {
    if trials == 0 {
        return Err(Error::domain("trials must be >= 1"));
    }
    let (_, height) = topology.tree_shape()?;
    if height != dec.n {
        return Err(Error::precondition(
            "decomposition",
            format!(
                "built for height {} but the tree has height {height}",
                dec.n
            ),
        ));
    }
    let level = topology.level(dec.n1)?;
    let horizon = (dec.n as f64).sqrt();
    run_trials(trials, master_seed, |_, seed| {
        let traj = simulate_forward(topology, lambda, start, horizon, seed)?;
        predicate_f(&traj, &level, params.s, 0.0, horizon)
    })
    .into_iter()
    .collect()
}

/// Probability that the path on `[0, sqrt(n)]` keeps level `n1` occupied in
/// every window of length `S`.
#[allow(clippy::too_many_arguments)]
pub fn estimate_phi(
    topology: &GraphTopology,
    lambda: f64,
    start: &VertexSet,
    params: &ParameterSet,
    dec: &Decomposition,
    trials: usize,
    master_seed: u64,
    z: f64,
) -> Result<EstimateReport> {
    let hits = phi_trials(topology, lambda, start, params, dec, trials, master_seed)?;
    let count = hits.into_iter().filter(|&h| h).count();
    Ok(EstimateReport::proportion(count, trials, z, master_seed))
}

/// Number of `x` on level `m1` whose restricted configuration, relabelled as
/// a configuration of a standalone tree, satisfies `member`.
pub fn gamma(
    topology: &GraphTopology,
    config: &VertexSet,
    m1: usize,
    member: impl Fn(&VertexSet) -> bool,
) -> Result<usize> {
    let (lo, hi) = topology.level_range(m1)?;
    let mut count = 0;
    for x in lo..hi {
        let embedding = topology.subtree_embedding(x)?;
        let local = VertexSet::from_iter_in(
            embedding.len(),
            embedding
                .iter()
                .enumerate()
                .filter(|&(_, &v)| config.contains(v))
                .map(|(i, _)| i),
        );
        if member(&local) {
            count += 1;
        }
    }
    Ok(count)
}

/// `Γ > (3/4) d^{m1}`.
pub fn classify_h(
    topology: &GraphTopology,
    config: &VertexSet,
    m1: usize,
    member: impl Fn(&VertexSet) -> bool,
) -> Result<bool> {
    let (d, _) = topology.tree_shape()?;
    let g = gamma(topology, config, m1, member)?;
    let level = d
        .checked_pow(m1 as u32)
        .ok_or_else(|| Error::Size(format!("{d}^{m1} overflows")))?;
    Ok(4 * g > 3 * level)
}

/// Decidable sufficient condition for membership in the high-return set of a
/// tree of the given height: more than `dbar^{n1}` infected sites on level
/// `n1` of that tree's own decomposition.
pub fn level_count_member(
    d: usize,
    height: usize,
    params: &ParameterSet,
) -> Result<impl Fn(&VertexSet) -> bool> {
    let dec = Decomposition::new(height.max(1), params.v0, params.v1)?;
    let tree = GraphTopology::dary_tree(d, height)?;
    let level = tree.level(dec.n1.min(height))?;
    let needed = ParameterSet::dbar(d).powi(dec.n1 as i32);
    Ok(move |local: &VertexSet| local.intersection_count(&level) as f64 > needed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    pub grid: Vec<f64>,
    /// `samples[trial][i]` is Γ at `grid[i]`.
    pub samples: Vec<Vec<usize>>,
    /// Steps taken from a positive Γ.
    pub steps: usize,
    pub up_frequency: f64,
    pub down_frequency: f64,
    /// Empirical `P[drop >= a]` for `a = 0, 1, ...`.
    pub drop_tail: Vec<f64>,
    pub kernel_up: f64,
    /// Kernel jump-law tail `P[jump >= a]`.
    pub kernel_drop_tail: Vec<f64>,
}

/// Samples Γ along a time grid and compares the empirical one-step moves
/// with the comparison kernel. Diagnostic only.
#[allow(clippy::too_many_arguments)]
pub fn domination_probe(
    topology: &GraphTopology,
    lambda: f64,
    start: &VertexSet,
    dec: &Decomposition,
    member: impl Fn(&VertexSet) -> bool + Sync,
    grid: &[f64],
    kernel: &ChainKernel<f64>,
    trials: usize,
    master_seed: u64,
) -> Result<DominationReport> {
    if grid.len() < 2 || trials == 0 {
        return Err(Error::domain(
            "need a grid of at least two times and trials >= 1",
        ));
    }
    let root = (dec.m2 as f64).sqrt();
    for w in grid.windows(2) {
        let gap = w[1] - w[0];
        let slack = 1e-9 * root;
        if !(gap >= 0.5 * root - slack && gap <= root + slack) {
            return Err(Error::domain(format!(
                "grid gap {gap} outside [{}, {root}]",
                0.5 * root
            )));
        }
    }
    if !(grid[0] >= 0.0) {
        return Err(Error::domain("grid times must be >= 0"));
    }
    let horizon = grid[grid.len() - 1].max(f64::MIN_POSITIVE);
    let samples: Result<Vec<Vec<usize>>> = run_trials(trials, master_seed, |_, seed| {
        let traj = simulate_forward(topology, lambda, start, horizon, seed)?;
        grid.iter()
            .map(|&t| gamma(topology, &traj.config_at(t)?, dec.m1, &member))
            .collect()
    })
    .into_iter()
    .collect();
    let samples = samples?;
    let (mut up, mut down, mut steps) = (0usize, 0usize, 0usize);
    let mut drops: Vec<usize> = Vec::new();
    for path in &samples {
        for w in path.windows(2) {
            if w[0] == 0 {
                continue;
            }
            steps += 1;
            if w[1] > w[0] {
                up += 1;
            }
            if w[1] < w[0] {
                down += 1;
            }
            drops.push(w[0].saturating_sub(w[1]));
        }
    }
    let max_drop = drops.iter().copied().max().unwrap_or(0);
    let drop_tail = (0..=max_drop + 1)
        .map(|a| {
            if steps == 0 {
                0.0
            } else {
                drops.iter().filter(|&&x| x >= a).count() as f64 / steps as f64
            }
        })
        .collect();
    let kernel_drop_tail = (0..=max_drop + 1).map(|a| kernel.jump_tail(a)).collect();
    let frac = |k: usize| {
        if steps == 0 {
            0.0
        } else {
            k as f64 / steps as f64
        }
    };
    Ok(DominationReport {
        grid: grid.to_vec(),
        samples,
        steps,
        up_frequency: frac(up),
        down_frequency: frac(down),
        drop_tail,
        kernel_up: kernel.upward(),
        kernel_drop_tail,
    })
}
