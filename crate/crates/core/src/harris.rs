//! Harris systems (graphical construction) and infection-path reachability.
//!
//! Events are processed in the total order `(time, kind, id)` with recoveries
//! before transmissions at equal times. Starting a process at time `s` means
//! applying the events with time in `(s, t]`; a recovery mark exactly at `s`
//! therefore does not affect the start configuration.

use std::cmp::Ordering;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Arc, GraphTopology};
use crate::rng::{stream_rng, trial_seed};
use crate::trajectory::{StateChange, Trajectory};
use crate::vertex_set::VertexSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "id", rename_all = "lowercase")]
pub enum EventKind {
    /// Recovery mark on a vertex.
    Recovery(usize),
    /// Transmission arrow along an arc id.
    Transmission(usize),
}

impl EventKind {
    fn rank(&self) -> (u8, usize) {
        match *self {
            EventKind::Recovery(v) => (0, v),
            EventKind::Transmission(a) => (1, a),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    #[serde(flatten)]
    pub kind: EventKind,
}

fn event_order(a: &Event, b: &Event) -> Ordering {
    a.time
        .total_cmp(&b.time)
        .then_with(|| a.kind.rank().cmp(&b.kind.rank()))
}

/// All the randomness driving the contact process on one graph over `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarrisSystem {
    vertex_count: usize,
    arcs: Vec<Arc>,
    horizon: f64,
    lambda: f64,
    seed: u64,
    events: Vec<Event>,
}

/// Serializable sorted event list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarrisExport {
    pub vertex_count: usize,
    pub arcs: Vec<Arc>,
    pub horizon: f64,
    pub lambda: f64,
    pub seed: u64,
    pub events: Vec<Event>,
}

fn check_rate_horizon(lambda: f64, horizon: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::domain(format!("lambda must be > 0, got {lambda}")));
    }
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(Error::domain(format!("horizon must be > 0, got {horizon}")));
    }
    Ok(())
}

/// Points of a homogeneous Poisson process of `rate` on `(0, horizon]`.
fn poisson_points(rng: &mut impl Rng, rate: f64, horizon: f64) -> Vec<f64> {
    let exp = Exp::new(rate).expect("rate checked positive");
    let mut out = Vec::new();
    let mut t = 0.0;
    loop {
        t += exp.sample(rng);
        if t > horizon {
            return out;
        }
        out.push(t);
    }
}

impl HarrisSystem {
    /// Samples every stream independently. Recovery stream of vertex `v` uses
    /// ChaCha stream `v`; arc `a` uses stream `vertex_count + a`.
    pub fn sample(topology: &GraphTopology, lambda: f64, horizon: f64, seed: u64) -> Result<Self> {
        check_rate_horizon(lambda, horizon)?;
        let n = topology.vertex_count();
        let mut events = Vec::new();
        for v in 0..n {
            let mut rng = stream_rng(seed, v as u64);
            events.extend(
                poisson_points(&mut rng, 1.0, horizon)
                    .into_iter()
                    .map(|time| Event {
                        time,
                        kind: EventKind::Recovery(v),
                    }),
            );
        }
        for a in 0..topology.arcs().len() {
            let mut rng = stream_rng(seed, (n + a) as u64);
            events.extend(
                poisson_points(&mut rng, lambda, horizon)
                    .into_iter()
                    .map(|time| Event {
                        time,
                        kind: EventKind::Transmission(a),
                    }),
            );
        }
        events.sort_by(event_order);
        Ok(HarrisSystem {
            vertex_count: n,
            arcs: topology.arcs().to_vec(),
            horizon,
            lambda,
            seed,
            events,
        })
    }

    /// Segment `index` of a chain of independent Harris systems.
    pub fn sample_segment(
        topology: &GraphTopology,
        lambda: f64,
        horizon: f64,
        seed: u64,
        index: u64,
    ) -> Result<Self> {
        Self::sample(topology, lambda, horizon, trial_seed(seed, index))
    }

    /// Hand-built system from explicit events (any order).
    pub fn from_events(
        topology: &GraphTopology,
        lambda: f64,
        horizon: f64,
        events: Vec<Event>,
    ) -> Result<Self> {
        Self::import(HarrisExport {
            vertex_count: topology.vertex_count(),
            arcs: topology.arcs().to_vec(),
            horizon,
            lambda,
            seed: 0,
            events,
        })
    }

    pub fn import(export: HarrisExport) -> Result<Self> {
        let HarrisExport {
            vertex_count,
            arcs,
            horizon,
            lambda,
            seed,
            mut events,
        } = export;
        check_rate_horizon(lambda, horizon)?;
        for arc in &arcs {
            if arc.from >= vertex_count || arc.to >= vertex_count || arc.from == arc.to {
                return Err(Error::domain(format!("invalid arc {arc:?}")));
            }
        }
        for e in &events {
            if !(e.time >= 0.0 && e.time <= horizon) {
                return Err(Error::domain(format!(
                    "event time {} outside [0, {horizon}]",
                    e.time
                )));
            }
            match e.kind {
                EventKind::Recovery(v) if v >= vertex_count => {
                    return Err(Error::domain(format!("recovery on unknown vertex {v}")))
                }
                EventKind::Transmission(a) if a >= arcs.len() => {
                    return Err(Error::domain(format!("transmission on unknown arc {a}")))
                }
                _ => {}
            }
        }
        events.sort_by(event_order);
        for w in events.windows(2) {
            if w[0].kind == w[1].kind && w[0].time == w[1].time {
                return Err(Error::domain(format!(
                    "stream {:?} has two points at time {}",
                    w[0].kind, w[0].time
                )));
            }
        }
        Ok(HarrisSystem {
            vertex_count,
            arcs,
            horizon,
            lambda,
            seed,
            events,
        })
    }

    pub fn export(&self) -> HarrisExport {
        HarrisExport {
            vertex_count: self.vertex_count,
            arcs: self.arcs.clone(),
            horizon: self.horizon,
            lambda: self.lambda,
            seed: self.seed,
            events: self.events.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.export()).expect("Harris export serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let export: HarrisExport =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::import(export)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    /// Merged events in processing order.
    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// Sorted recovery marks of `v`.
    pub fn recoveries(&self, v: usize) -> Vec<f64> {
        self.events
            .iter()
            .filter(|e| e.kind == EventKind::Recovery(v))
            .map(|e| e.time)
            .collect()
    }

    /// Sorted transmission times along arc `a`.
    pub fn transmissions(&self, a: usize) -> Vec<f64> {
        self.events
            .iter()
            .filter(|e| e.kind == EventKind::Transmission(a))
            .map(|e| e.time)
            .collect()
    }

    /// Number of recovery plus arc streams.
    pub fn stream_count(&self) -> usize {
        self.vertex_count + self.arcs.len()
    }

    /// Stream ids (recovery `v` -> `v`, arc `a` -> `vertex_count + a`) that can
    /// influence a process confined to `inside`.
    pub fn streams_inside(&self, inside: &VertexSet) -> Vec<usize> {
        let mut out: Vec<usize> = inside.iter().collect();
        out.extend(
            self.arcs
                .iter()
                .enumerate()
                .filter(|(_, arc)| inside.contains(arc.from) && inside.contains(arc.to))
                .map(|(a, _)| self.vertex_count + a),
        );
        out
    }

    /// Keeps each arrow independently with probability `lambda_new / lambda`,
    /// producing a system for the smaller rate whose arrows are a subset of
    /// this one's.
    pub fn thinned(&self, lambda_new: f64, seed: u64) -> Result<Self> {
        if !(lambda_new > 0.0 && lambda_new <= self.lambda) {
            return Err(Error::domain(format!(
                "thinned rate must lie in (0, {}], got {lambda_new}",
                self.lambda
            )));
        }
        let keep = lambda_new / self.lambda;
        let mut rngs: Vec<_> = (0..self.arcs.len())
            .map(|a| stream_rng(seed, a as u64))
            .collect();
        let events = self
            .events
            .iter()
            .filter(|e| match e.kind {
                EventKind::Recovery(_) => true,
                EventKind::Transmission(a) => rngs[a].random::<f64>() < keep,
            })
            .copied()
            .collect();
        Ok(HarrisSystem {
            events,
            lambda: lambda_new,
            ..self.clone()
        })
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= 0.0 && t <= self.horizon) {
            return Err(Error::domain(format!(
                "time {t} outside [0, {}]",
                self.horizon
            )));
        }
        Ok(())
    }

    fn check_universe(&self, set: &VertexSet) -> Result<()> {
        if set.universe() != self.vertex_count {
            return Err(Error::domain(format!(
                "vertex set over {} vertices used with a Harris system over {}",
                set.universe(),
                self.vertex_count
            )));
        }
        Ok(())
    }

    /// Index range of events with time in `(s, t]`.
    fn window(&self, s: f64, t: f64) -> std::ops::Range<usize> {
        let lo = self.events.partition_point(|e| e.time <= s);
        let hi = self.events.partition_point(|e| e.time <= t);
        lo..hi.max(lo)
    }

    fn apply_forward(&self, state: &mut VertexSet, event: &Event, inside: Option<&VertexSet>) {
        match event.kind {
            EventKind::Recovery(v) => {
                state.remove(v);
            }
            EventKind::Transmission(a) => {
                let arc = self.arcs[a];
                if state.contains(arc.from) && inside.is_none_or(|c| c.contains(arc.to)) {
                    state.insert(arc.to);
                }
            }
        }
    }

    fn apply_backward(&self, state: &mut VertexSet, event: &Event, inside: Option<&VertexSet>) {
        match event.kind {
            EventKind::Recovery(v) => {
                state.remove(v);
            }
            EventKind::Transmission(a) => {
                let arc = self.arcs[a];
                if state.contains(arc.to) && inside.is_none_or(|c| c.contains(arc.from)) {
                    state.insert(arc.from);
                }
            }
        }
    }

    /// `{y : A × {s} ↔ (y, t)}`, optionally with paths confined to `inside`.
    pub fn evolve_shifted_inside(
        &self,
        start: &VertexSet,
        s: f64,
        t: f64,
        inside: Option<&VertexSet>,
    ) -> Result<VertexSet> {
        self.check_universe(start)?;
        self.check_time(s)?;
        self.check_time(t)?;
        if s > t {
            return Err(Error::domain(format!("start time {s} after end time {t}")));
        }
        let mut state = start.clone();
        if let Some(c) = inside {
            self.check_universe(c)?;
            state.intersect_with(c);
        }
        for e in &self.events[self.window(s, t)] {
            if state.is_empty() {
                break;
            }
            self.apply_forward(&mut state, e, inside);
        }
        Ok(state)
    }

    /// The process started from `A` at time `s`, observed at `t`.
    pub fn evolve_shifted(&self, start: &VertexSet, s: f64, t: f64) -> Result<VertexSet> {
        self.evolve_shifted_inside(start, s, t, None)
    }

    /// `ξ^A_t` built from this system; `inside` restricts paths to a vertex set.
    pub fn evolve(
        &self,
        start: &VertexSet,
        t: f64,
        inside: Option<&VertexSet>,
    ) -> Result<VertexSet> {
        self.evolve_shifted_inside(start, 0.0, t, inside)
    }

    /// `(from.0, from.1) ↔ (to.0, to.1)`, optionally inside a vertex set.
    pub fn reachable(
        &self,
        from: (usize, f64),
        to: (usize, f64),
        inside: Option<&VertexSet>,
    ) -> Result<bool> {
        let (x, s) = from;
        let (y, t) = to;
        if x >= self.vertex_count || y >= self.vertex_count {
            return Err(Error::domain("endpoint vertex out of range"));
        }
        if let Some(c) = inside {
            if !c.contains(x) || !c.contains(y) {
                return Err(Error::precondition(
                    "inside",
                    "both endpoints must lie in the confining set",
                ));
            }
        }
        let start = VertexSet::singleton(self.vertex_count, x);
        Ok(self
            .evolve_shifted_inside(&start, s, t, inside)?
            .contains(y))
    }

    /// `{y : (y, t - s) ↔ B × {t}}`, computed by a backward sweep with arrows
    /// read in reverse.
    pub fn backward_reach(
        &self,
        anchor: &VertexSet,
        t: f64,
        s: f64,
        inside: Option<&VertexSet>,
    ) -> Result<VertexSet> {
        self.check_universe(anchor)?;
        self.check_time(t)?;
        if !(s >= 0.0 && s <= t) {
            return Err(Error::domain(format!("backward time {s} outside [0, {t}]")));
        }
        let mut state = anchor.clone();
        if let Some(c) = inside {
            self.check_universe(c)?;
            state.intersect_with(c);
        }
        for e in self.events[self.window(t - s, t)].iter().rev() {
            if state.is_empty() {
                break;
            }
            self.apply_backward(&mut state, e, inside);
        }
        Ok(state)
    }

    /// Full forward path from `A` over `[0, horizon]`.
    pub fn trajectory(&self, start: &VertexSet, inside: Option<&VertexSet>) -> Result<Trajectory> {
        self.check_universe(start)?;
        let mut state = start.clone();
        if let Some(c) = inside {
            self.check_universe(c)?;
            state.intersect_with(c);
        }
        let initial = state.clone();
        let mut changes = Vec::new();
        for e in &self.events {
            if state.is_empty() {
                break;
            }
            match e.kind {
                EventKind::Recovery(v) => {
                    if state.remove(v) {
                        changes.push(StateChange {
                            time: e.time,
                            vertex: v,
                            infected: false,
                        });
                    }
                }
                EventKind::Transmission(a) => {
                    let arc = self.arcs[a];
                    if state.contains(arc.from)
                        && inside.is_none_or(|c| c.contains(arc.to))
                        && state.insert(arc.to)
                    {
                        changes.push(StateChange {
                            time: e.time,
                            vertex: arc.to,
                            infected: true,
                        });
                    }
                }
            }
        }
        Ok(Trajectory::from_parts_unchecked(
            initial,
            changes,
            self.horizon,
        ))
    }
}

/// Runs `A` for `total` time units by gluing independent segments of length
/// at most `segment`, each with a fresh Harris system.
pub fn evolve_chained(
    topology: &GraphTopology,
    lambda: f64,
    start: &VertexSet,
    total: f64,
    segment: f64,
    seed: u64,
) -> Result<VertexSet> {
    if !(segment > 0.0) || !(total >= 0.0) {
        return Err(Error::domain("segment length must be > 0 and total >= 0"));
    }
    let mut state = start.clone();
    let mut elapsed = 0.0;
    let mut index = 0u64;
    while elapsed < total && !state.is_empty() {
        let len = segment.min(total - elapsed);
        let h = HarrisSystem::sample_segment(topology, lambda, len, seed, index)?;
        state = h.evolve(&state, len, None)?;
        elapsed += len;
        index += 1;
    }
    Ok(state)
}
