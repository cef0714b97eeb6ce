use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::simulate_forward;
use crate::graph::GraphTopology;
use crate::montecarlo::run_trials;
use crate::stats::{wilson_interval, EstimateReport};
use crate::trajectory::{occupied_at_or_after, Trajectory};
use crate::vertex_set::VertexSet;

/// Largest `k` with `0 <= s_1 < ... < s_k < t - t0`, consecutive gaps at least
/// `t0` and `target` occupied at every `s_i`.
///
/// Taking each `s_i` as early as possible is optimal: any feasible sequence
/// can be shifted left term by term onto the greedy one.
pub fn attempt_counter(traj: &Trajectory, target: &VertexSet, t0: f64, t: f64) -> Result<usize> {
    if !(t0 > 0.0 && t0 < t && t <= traj.horizon()) {
        return Err(Error::domain(format!(
            "need 0 < t0 < t <= horizon, got t0 = {t0}, t = {t}, horizon = {}",
            traj.horizon()
        )));
    }
    Ok(greedy_attempts(&traj.occupancy_intervals(target), t0, t))
}

/// Greedy count over half-open occupancy intervals `[a, b)`.
pub fn greedy_attempts(intervals: &[(f64, f64)], t0: f64, t: f64) -> usize {
    let limit = t - t0;
    let mut count = 0;
    let mut next = occupied_at_or_after(intervals, 0.0);
    while let Some(s) = next {
        if s >= limit {
            break;
        }
        count += 1;
        next = occupied_at_or_after(intervals, s + t0);
    }
    count
}

/// First time the configuration satisfies `event`, if it happens on
/// `[0, horizon]`.
pub fn first_entrance(traj: &Trajectory, event: impl Fn(&VertexSet) -> bool) -> Option<f64> {
    let mut state = traj.initial().clone();
    if event(&state) {
        return Some(0.0);
    }
    let changes = traj.changes();
    let mut i = 0;
    while i < changes.len() {
        let time = changes[i].time;
        // apply simultaneous changes together
        while i < changes.len() && changes[i].time == time {
            let c = changes[i];
            if c.infected {
                state.insert(c.vertex);
            } else {
                state.remove(c.vertex);
            }
            i += 1;
        }
        if event(&state) {
            return Some(time);
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepBoundReport {
    /// `P[κ > t, N >= n_attempts]`.
    pub probability: EstimateReport,
    pub bound: f64,
    pub eps0: f64,
    pub n_attempts: usize,
    /// The lower end of the interval does not exceed the bound.
    pub consistent: bool,
}

/// Setting of a repeated-attempts experiment: attempts start at times when
/// `target` is occupied and each has window `t0` to reach `event`.
pub struct RepSetting<'a, E> {
    pub topology: &'a GraphTopology,
    pub lambda: f64,
    pub target: &'a VertexSet,
    pub event: E,
    pub t0: f64,
}

impl<E: Fn(&VertexSet) -> bool + Sync> RepSetting<'_, E> {
    /// Estimates `P[κ^A > t, N^A(t) >= n_attempts]` and compares it with
    /// `(1 - eps0)^{n_attempts}`.
    #[allow(clippy::too_many_arguments)]
    pub fn check_bound(
        &self,
        start: &VertexSet,
        t: f64,
        eps0: f64,
        n_attempts: usize,
        trials: usize,
        master_seed: u64,
        z: f64,
    ) -> Result<RepBoundReport> {
        if trials == 0 {
            return Err(Error::domain("trials must be >= 1"));
        }
        if !(eps0 >= 0.0 && eps0 <= 1.0) {
            return Err(Error::domain(format!(
                "eps0 must lie in [0, 1], got {eps0}"
            )));
        }
        let hits: Result<Vec<bool>> = run_trials(trials, master_seed, |_, seed| {
            let traj = simulate_forward(self.topology, self.lambda, start, t, seed)?;
            if first_entrance(&traj, &self.event).is_some() {
                return Ok(false);
            }
            Ok(attempt_counter(&traj, self.target, self.t0, t)? >= n_attempts)
        })
        .into_iter()
        .collect();
        let count = hits?.into_iter().filter(|&h| h).count();
        let probability = EstimateReport::proportion(count, trials, z, master_seed);
        let bound = (1.0 - eps0).powi(n_attempts as i32);
        Ok(RepBoundReport {
            consistent: probability.ci_low <= bound,
            probability,
            bound,
            eps0,
            n_attempts,
        })
    }

    /// Conservative `eps0`: the smallest Wilson lower bound, over the given
    /// starting sets, of `P[∃ s <= t0 : ξ^B_s ∈ event]`.
    pub fn estimate_eps0(
        &self,
        starts: &[VertexSet],
        trials: usize,
        master_seed: u64,
        z: f64,
    ) -> Result<f64> {
        if trials == 0 || starts.is_empty() {
            return Err(Error::domain("need trials >= 1 and at least one start"));
        }
        let mut eps = 1.0f64;
        for (i, b) in starts.iter().enumerate() {
            if !b.intersects(self.target) {
                return Err(Error::precondition(
                    "starts",
                    "every starting set must meet the target",
                ));
            }
            let seed = master_seed.wrapping_add(i as u64);
            let hits: Result<Vec<bool>> = run_trials(trials, seed, |_, s| {
                let traj = simulate_forward(self.topology, self.lambda, b, self.t0, s)?;
                Ok(first_entrance(&traj, &self.event).is_some())
            })
            .into_iter()
            .collect();
            let count = hits?.into_iter().filter(|&h| h).count();
            eps = eps.min(wilson_interval(count, trials, z).0);
        }
        Ok(eps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn never_occupied_gives_zero() {
        let tr = Trajectory::from_windows(2, 0, &[(0.0, 1.0)], 4.0).unwrap();
        let other = VertexSet::singleton(2, 1);
        assert_eq!(attempt_counter(&tr, &other, 1.0, 4.0).unwrap(), 0);
    }

    #[test]
    fn fully_occupied_third() {
        let tr = Trajectory::from_windows(1, 0, &[(0.0, 3.0)], 3.0).unwrap();
        let all = VertexSet::full(1);
        // s in {0, 1} are both < 3 - 1
        assert_eq!(attempt_counter(&tr, &all, 1.0, 3.0).unwrap(), 2);
    }

    #[test]
    fn two_windows() {
        let tr = Trajectory::from_windows(1, 0, &[(0.0, 0.4), (2.0, 2.2)], 4.0).unwrap();
        let all = VertexSet::full(1);
        assert_eq!(attempt_counter(&tr, &all, 1.0, 4.0).unwrap(), 2);
    }

    #[test]
    fn rejects_bad_windows() {
        let tr = Trajectory::from_windows(1, 0, &[(0.0, 1.0)], 2.0).unwrap();
        let all = VertexSet::full(1);
        assert!(attempt_counter(&tr, &all, 0.0, 1.0).is_err());
        assert!(attempt_counter(&tr, &all, 1.0, 1.0).is_err());
        assert!(attempt_counter(&tr, &all, 1.0, 3.0).is_err());
    }

    #[test]
    fn first_entrance_sees_initial_state() {
        let tr = Trajectory::from_windows(1, 0, &[(0.0, 1.0)], 2.0).unwrap();
        assert_eq!(first_entrance(&tr, |s| !s.is_empty()), Some(0.0));
        assert_eq!(first_entrance(&tr, |s| s.is_empty()), Some(1.0));
        assert_eq!(first_entrance(&tr, |s| s.count() > 1), None);
    }
}
