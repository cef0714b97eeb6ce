//! Dual process read off the same Harris system by reversing time and arrows.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::GraphTopology;
use crate::harris::HarrisSystem;
use crate::rng::stream_rng;
use crate::vertex_set::VertexSet;

/// Dual process anchored at `anchor × {t}`.
#[derive(Debug, Clone)]
pub struct DualProcess<'h> {
    harris: &'h HarrisSystem,
    anchor: VertexSet,
    t: f64,
}

impl<'h> DualProcess<'h> {
    pub fn new(harris: &'h HarrisSystem, anchor: VertexSet, t: f64) -> Result<Self> {
        // validate once so that queries only fail on the backward time
        harris.backward_reach(&anchor, t, 0.0, None)?;
        Ok(DualProcess { harris, anchor, t })
    }

    pub fn anchor(&self) -> &VertexSet {
        &self.anchor
    }

    pub fn anchor_time(&self) -> f64 {
        self.t
    }

    /// Dual configuration after running backward for `s` time units.
    pub fn at(&self, s: f64) -> Result<VertexSet> {
        dual_evolve(self.harris, &self.anchor, self.t, s)
    }
}

/// `{y : (y, t - s) ↔ B × {t}}`.
pub fn dual_evolve(harris: &HarrisSystem, anchor: &VertexSet, t: f64, s: f64) -> Result<VertexSet> {
    harris.backward_reach(anchor, t, s, None)
}

/// Whether `{ξ^A_t ∩ B ≠ ∅}` and `{ξ̂^(B,t)_t ∩ A ≠ ∅}` agree on this system.
pub fn check_duality(harris: &HarrisSystem, a: &VertexSet, b: &VertexSet, t: f64) -> Result<bool> {
    let forward = harris.evolve(a, t, None)?.intersects(b);
    let backward = dual_evolve(harris, b, t, t)?.intersects(a);
    Ok(forward == backward)
}

/// Outcome of the pathwise checks on one random Harris system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathwiseCase {
    pub seed: u64,
    pub t: f64,
    pub a_size: usize,
    pub b_size: usize,
    /// `ξ^A_t ∩ B ≠ ∅`.
    pub forward_hit: bool,
    /// `ξ̂^(B,t)_t ∩ A ≠ ∅`.
    pub dual_hit: bool,
    /// `ξ^A_t ⊆ ξ^{A ∪ A'}_t`.
    pub monotone: bool,
    /// `ξ^{A ∪ A'}_t = ξ^A_t ∪ ξ^{A'}_t`.
    pub additive: bool,
    /// `ξ^{A, inside C}_t ⊆ ξ^A_t ∩ C`.
    pub restricted: bool,
}

impl PathwiseCase {
    pub fn duality_holds(&self) -> bool {
        self.forward_hit == self.dual_hit
    }

    pub fn all_hold(&self) -> bool {
        self.duality_holds() && self.monotone && self.additive && self.restricted
    }
}

const SUBSET_STREAM: u64 = u64::MAX;

fn random_subset(n: usize, rng: &mut impl Rng) -> VertexSet {
    let p: f64 = rng.random();
    VertexSet::from_iter_in(n, (0..n).filter(|_| rng.random::<f64>() < p))
}

/// Samples a Harris system on `[0, horizon]` from `seed`, draws `A`, `A'`,
/// `B`, `C` and `t` from a separate stream of the same seed, and checks
/// monotonicity, additivity, restriction and duality on it.
pub fn pathwise_case(
    topology: &GraphTopology,
    lambda: f64,
    horizon: f64,
    seed: u64,
) -> Result<PathwiseCase> {
    if !(horizon > 0.0) {
        return Err(Error::domain(format!("horizon must be > 0, got {horizon}")));
    }
    let h = HarrisSystem::sample(topology, lambda, horizon, seed)?;
    let n = topology.vertex_count();
    let mut rng = stream_rng(seed, SUBSET_STREAM);
    let a = random_subset(n, &mut rng);
    let a2 = random_subset(n, &mut rng);
    let b = random_subset(n, &mut rng);
    let c = random_subset(n, &mut rng);
    let t = horizon * rng.random::<f64>();

    let xa = h.evolve(&a, t, None)?;
    let xa2 = h.evolve(&a2, t, None)?;
    let xu = h.evolve(&a.union(&a2), t, None)?;
    let xc = h.evolve(&a, t, Some(&c))?;
    let forward_hit = xa.intersects(&b);
    let dual_hit = dual_evolve(&h, &b, t, t)?.intersects(&a);
    Ok(PathwiseCase {
        seed,
        t,
        a_size: a.count(),
        b_size: b.count(),
        forward_hit,
        dual_hit,
        monotone: xa.is_subset(&xu),
        additive: xu == xa.union(&xa2),
        restricted: xc.is_subset(&xa.intersection(&c)),
    })
}
