//! Event-driven (Gillespie) simulation of the contact process.
//!
//! Rates are kept as integers: each infected vertex contributes one unit of
//! recovery rate, each healthy vertex contributes its number of infected
//! neighbours in units of `lambda`. Two Fenwick trees make event selection
//! `O(log |V|)` and the totals never drift.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::graph::GraphTopology;
use crate::rng::stream_rng;
use crate::trajectory::{StateChange, Trajectory};
use crate::vertex_set::VertexSet;

#[derive(Debug, Clone)]
struct Fenwick {
    tree: Vec<u64>,
    values: Vec<u64>,
    total: u64,
}

impl Fenwick {
    fn new(n: usize) -> Self {
        Fenwick {
            tree: vec![0; n + 1],
            values: vec![0; n],
            total: 0,
        }
    }

    fn set(&mut self, i: usize, value: u64) {
        let old = self.values[i];
        if old == value {
            return;
        }
        self.values[i] = value;
        self.total = self.total + value - old;
        let mut j = i + 1;
        if value > old {
            let delta = value - old;
            while j < self.tree.len() {
                self.tree[j] += delta;
                j += j & j.wrapping_neg();
            }
        } else {
            let delta = old - value;
            while j < self.tree.len() {
                self.tree[j] -= delta;
                j += j & j.wrapping_neg();
            }
        }
    }

    /// Smallest index whose inclusive prefix sum exceeds `target`.
    fn find(&self, mut target: u64) -> usize {
        let n = self.tree.len() - 1;
        let mut pos = 0;
        let mut step = n.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= target {
                target -= self.tree[next];
                pos = next;
            }
            step >>= 1;
        }
        pos
    }
}

/// Continuous-time Markov chain with the contact process generator.
#[derive(Debug, Clone)]
pub struct ForwardSimulator<'a> {
    topology: &'a GraphTopology,
    lambda: f64,
    state: VertexSet,
    infected_neighbors: Vec<u32>,
    recovery: Fenwick,
    infection: Fenwick,
    time: f64,
    rng: ChaCha8Rng,
}

impl<'a> ForwardSimulator<'a> {
    pub fn new(
        topology: &'a GraphTopology,
        lambda: f64,
        start: &VertexSet,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::domain(format!("lambda must be > 0, got {lambda}")));
        }
        let n = topology.vertex_count();
        if start.universe() != n {
            return Err(Error::domain("start set over a different vertex count"));
        }
        let mut sim = ForwardSimulator {
            topology,
            lambda,
            state: start.clone(),
            infected_neighbors: vec![0; n],
            recovery: Fenwick::new(n),
            infection: Fenwick::new(n),
            time: 0.0,
            rng,
        };
        for v in start.iter() {
            for &w in topology.neighbors(v) {
                sim.infected_neighbors[w] += 1;
            }
        }
        for v in 0..n {
            sim.refresh(v);
        }
        Ok(sim)
    }

    /// Simulator driven by the default stream of `seed`.
    pub fn seeded(
        topology: &'a GraphTopology,
        lambda: f64,
        start: &VertexSet,
        seed: u64,
    ) -> Result<Self> {
        Self::new(topology, lambda, start, stream_rng(seed, 0))
    }

    fn refresh(&mut self, v: usize) {
        if self.state.contains(v) {
            self.recovery.set(v, 1);
            self.infection.set(v, 0);
        } else {
            self.recovery.set(v, 0);
            self.infection.set(v, self.infected_neighbors[v] as u64);
        }
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn state(&self) -> &VertexSet {
        &self.state
    }

    pub fn infected_count(&self) -> usize {
        self.recovery.total as usize
    }

    pub fn is_extinct(&self) -> bool {
        self.recovery.total == 0
    }

    pub fn total_rate(&self) -> f64 {
        self.recovery.total as f64 + self.lambda * self.infection.total as f64
    }

    /// Time of the next event, without applying it. `None` once extinct.
    fn next_time(&mut self) -> Option<f64> {
        if self.is_extinct() {
            return None;
        }
        let wait: f64 = Exp1.sample(&mut self.rng);
        Some(self.time + wait / self.total_rate())
    }

    fn apply_at(&mut self, time: f64) -> StateChange {
        self.time = time;
        let rec = self.recovery.total as f64;
        let total = self.total_rate();
        let u: f64 = self.rng.random::<f64>() * total;
        let (vertex, infected) = if u < rec || self.infection.total == 0 {
            let k = self.rng.random_range(0..self.recovery.total);
            (self.recovery.find(k), false)
        } else {
            let k = self.rng.random_range(0..self.infection.total);
            (self.infection.find(k), true)
        };
        if infected {
            self.state.insert(vertex);
        } else {
            self.state.remove(vertex);
        }
        self.refresh(vertex);
        for &w in self.topology.neighbors(vertex) {
            if infected {
                self.infected_neighbors[w] += 1;
            } else {
                self.infected_neighbors[w] -= 1;
            }
            self.refresh(w);
        }
        StateChange {
            time,
            vertex,
            infected,
        }
    }

    /// Applies the next event if it happens no later than `until`; otherwise
    /// advances the clock to `until` and returns `None`. By memorylessness the
    /// discarded exponential clock does not bias later events.
    pub fn step_until(&mut self, until: f64) -> Option<StateChange> {
        match self.next_time() {
            Some(t) if t <= until => Some(self.apply_at(t)),
            _ => {
                self.time = self.time.max(until);
                None
            }
        }
    }

    /// Applies the next event unconditionally.
    pub fn step(&mut self) -> Option<StateChange> {
        let t = self.next_time()?;
        Some(self.apply_at(t))
    }

    /// Runs until extinction or `horizon`, returning the extinction time if it
    /// occurred.
    pub fn run_to_extinction(&mut self, horizon: f64) -> Option<f64> {
        if self.is_extinct() {
            return Some(self.time);
        }
        while let Some(change) = self.step_until(horizon) {
            if self.is_extinct() {
                return Some(change.time);
            }
        }
        None
    }
}

/// Event-driven trajectory of the process from `A` on `[0, horizon]`.
pub fn simulate_forward(
    topology: &GraphTopology,
    lambda: f64,
    start: &VertexSet,
    horizon: f64,
    seed: u64,
) -> Result<Trajectory> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::domain(format!("horizon must be > 0, got {horizon}")));
    }
    let mut sim = ForwardSimulator::seeded(topology, lambda, start, seed)?;
    let mut changes = Vec::new();
    while let Some(change) = sim.step_until(horizon) {
        changes.push(change);
    }
    Ok(Trajectory::from_parts_unchecked(
        start.clone(),
        changes,
        horizon,
    ))
}
