use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vertex_set::VertexSet;

/// One flip of a vertex state at `time`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateChange {
    pub time: f64,
    pub vertex: usize,
    pub infected: bool,
}

/// Right-continuous piecewise-constant path of infected sets on `[0, horizon]`.
///
/// Only effective state changes are stored, in nondecreasing time order. The
/// configuration at `t` includes every change with `time <= t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    initial: VertexSet,
    changes: Vec<StateChange>,
    horizon: f64,
}

impl Trajectory {
    pub fn new(initial: VertexSet, changes: Vec<StateChange>, horizon: f64) -> Result<Self> {
        if !(horizon >= 0.0) {
            return Err(Error::domain(format!(
                "horizon must be >= 0, got {horizon}"
            )));
        }
        let mut prev = 0.0;
        let mut state = initial.clone();
        for c in &changes {
            if c.time < prev || c.time > horizon {
                return Err(Error::domain(format!(
                    "state change at {} out of order or outside [0, {horizon}]",
                    c.time
                )));
            }
            if state.contains(c.vertex) == c.infected {
                return Err(Error::domain(format!(
                    "state change at {} does not flip vertex {}",
                    c.time, c.vertex
                )));
            }
            if c.infected {
                state.insert(c.vertex);
            } else {
                state.remove(c.vertex);
            }
            prev = c.time;
        }
        Ok(Trajectory {
            initial,
            changes,
            horizon,
        })
    }

    pub(crate) fn from_parts_unchecked(
        initial: VertexSet,
        changes: Vec<StateChange>,
        horizon: f64,
    ) -> Self {
        Trajectory {
            initial,
            changes,
            horizon,
        }
    }

    /// A trajectory from explicit occupancy pieces of a single vertex, handy
    /// for building fixtures: `windows` are the `[start, end)` intervals during
    /// which vertex `v` is infected.
    pub fn from_windows(
        universe: usize,
        v: usize,
        windows: &[(f64, f64)],
        horizon: f64,
    ) -> Result<Self> {
        let mut initial = VertexSet::empty(universe);
        let mut changes = Vec::new();
        for &(a, b) in windows {
            if a == 0.0 {
                initial.insert(v);
            } else {
                changes.push(StateChange {
                    time: a,
                    vertex: v,
                    infected: true,
                });
            }
            if b < horizon {
                changes.push(StateChange {
                    time: b,
                    vertex: v,
                    infected: false,
                });
            }
        }
        Self::new(initial, changes, horizon)
    }

    pub fn initial(&self) -> &VertexSet {
        &self.initial
    }

    pub fn changes(&self) -> &[StateChange] {
        &self.changes
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn universe(&self) -> usize {
        self.initial.universe()
    }

    /// Configuration at time `t`.
    pub fn config_at(&self, t: f64) -> Result<VertexSet> {
        if t < 0.0 || t > self.horizon {
            return Err(Error::domain(format!(
                "time {t} outside [0, {}]",
                self.horizon
            )));
        }
        let mut state = self.initial.clone();
        for c in self.changes.iter().take_while(|c| c.time <= t) {
            if c.infected {
                state.insert(c.vertex);
            } else {
                state.remove(c.vertex);
            }
        }
        Ok(state)
    }

    pub fn final_config(&self) -> VertexSet {
        self.config_at(self.horizon)
            .expect("horizon is inside the trajectory domain")
    }

    /// First time the configuration is empty; `Some(0.0)` for an empty start.
    pub fn extinction_time(&self) -> Option<f64> {
        let mut count = self.initial.count();
        if count == 0 {
            return Some(0.0);
        }
        for c in &self.changes {
            if c.infected {
                count += 1;
            } else {
                count -= 1;
            }
            if count == 0 {
                return Some(c.time);
            }
        }
        None
    }

    /// Step function `t -> |config_t ∩ target|` as `(start time, count)` pieces.
    pub fn count_profile(&self, target: &VertexSet) -> Vec<(f64, usize)> {
        let mut count = self.initial.intersection_count(target);
        let mut out = vec![(0.0, count)];
        for c in &self.changes {
            if !target.contains(c.vertex) {
                continue;
            }
            if c.infected {
                count += 1;
            } else {
                count -= 1;
            }
            match out.last_mut() {
                Some(last) if last.0 == c.time => last.1 = count,
                _ => out.push((c.time, count)),
            }
        }
        out
    }

    /// Maximal intervals `[a, b)` on which the configuration meets `target`.
    /// An interval still open at the horizon is reported with `b = horizon`.
    pub fn occupancy_intervals(&self, target: &VertexSet) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let mut open: Option<f64> = None;
        for (t, count) in self.count_profile(target) {
            match (open, count > 0) {
                (None, true) => open = Some(t),
                (Some(a), false) => {
                    if t > a {
                        out.push((a, t));
                    }
                    open = None;
                }
                _ => {}
            }
        }
        if let Some(a) = open {
            out.push((a, self.horizon));
        }
        out
    }

    /// Earliest time `>= t` at which the configuration meets `target`.
    pub fn first_occupied_at_or_after(&self, target: &VertexSet, t: f64) -> Option<f64> {
        occupied_at_or_after(&self.occupancy_intervals(target), t)
    }
}

/// Earliest `s >= t` inside one of the half-open `intervals`.
pub(crate) fn occupied_at_or_after(intervals: &[(f64, f64)], t: f64) -> Option<f64> {
    intervals
        .iter()
        .find(|&&(_, b)| b > t)
        .map(|&(a, _)| a.max(t))
}
