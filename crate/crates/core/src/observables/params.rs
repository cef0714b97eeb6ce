use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::integer_root_floor;

/// Constants of the recursive analysis, with `dbar = 2d/3` derived from the
/// tree degree.
///
/// `sigma`, `k`, `s`, `cbar` and `ell` are existential constants with no
/// canonical numeric value; the defaults are convenient desk-scale choices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParameterSet {
    pub theta: f64,
    pub v0: f64,
    pub v1: f64,
    pub sigma: f64,
    pub k: f64,
    pub s: f64,
    pub cbar: f64,
    pub ell: f64,
}

impl Default for ParameterSet {
    fn default() -> Self {
        ParameterSet {
            theta: 0.95,
            v0: 1.5,
            v1: 1.7,
            sigma: 0.5,
            k: 1.0,
            s: 1.0,
            cbar: 0.5,
            ell: 1.0,
        }
    }
}

impl ParameterSet {
    pub fn dbar(d: usize) -> f64 {
        2.0 * d as f64 / 3.0
    }

    /// Checks every range constraint and `1 < 1/θ < v^{1/6} < v^{1/2} < dbar`
    /// for both `v0` and `v1`.
    pub fn validate(&self, d: usize) -> Result<()> {
        let open_unit = |name: &str, x: f64| {
            if x > 0.0 && x < 1.0 {
                Ok(())
            } else {
                Err(Error::precondition(
                    name,
                    format!("must lie in (0, 1), got {x}"),
                ))
            }
        };
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::precondition(name, format!("must be > 0, got {x}")))
            }
        };
        open_unit("theta", self.theta)?;
        open_unit("sigma", self.sigma)?;
        positive("k", self.k)?;
        positive("s", self.s)?;
        positive("cbar", self.cbar)?;
        positive("ell", self.ell)?;
        if d < 2 {
            return Err(Error::precondition("d", "tree degree must be >= 2"));
        }
        if self.v0 > self.v1 {
            return Err(Error::precondition(
                "v0",
                format!("v0 = {} exceeds v1 = {}", self.v0, self.v1),
            ));
        }
        let dbar = Self::dbar(d);
        for (name, v) in [("v0", self.v0), ("v1", self.v1)] {
            let inv = 1.0 / self.theta;
            let sixth = v.powf(1.0 / 6.0);
            let sqrt = v.sqrt();
            if !(inv < sixth) {
                return Err(Error::precondition(
                    name,
                    format!("need 1/theta < {name}^(1/6): {inv} >= {sixth}"),
                ));
            }
            if !(sqrt < dbar) {
                return Err(Error::precondition(
                    name,
                    format!("need {name}^(1/2) < 2d/3: {sqrt} >= {dbar}"),
                ));
            }
        }
        Ok(())
    }
}

/// Split of a height `n` into `n1 + n2` with `n2 ≈ u^{n1}`, and the coarser
/// split `m1 = ⌊n^{1/4}⌋`, `m2 = n - m1`.
///
/// `n2` is always `n - n1`; `residual = n2 - round(u^{n1})` records how far
/// the best achievable power falls from an exact decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    pub n: usize,
    pub n1: usize,
    pub n2: usize,
    pub u: f64,
    pub residual: i64,
    pub m1: usize,
    pub m2: usize,
}

impl Decomposition {
    /// Minimizes `|n - n1 - round(u^{n1})|` over integer `n1` and
    /// `u ∈ [v0, v1]`; ties go to the smaller `n1`.
    pub fn new(n: usize, v0: f64, v1: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("decomposition needs n >= 1"));
        }
        if !(v0 > 1.0 && v0 <= v1) {
            return Err(Error::domain(format!(
                "need 1 < v0 <= v1, got v0 = {v0}, v1 = {v1}"
            )));
        }
        let mut best: Option<(i64, usize, f64)> = None;
        for n1 in 0..n {
            let target = (n - n1) as f64;
            let (u, achieved) = closest_power(target, n1, v0, v1);
            let residual = (n - n1) as i64 - achieved;
            if best.is_none_or(|(r, _, _)| residual.abs() < r.abs()) {
                best = Some((residual, n1, u));
            }
            if v0.powi(n1 as i32) > 2.0 * n as f64 {
                break;
            }
        }
        let (residual, n1, u) = best.expect("n >= 1 gives at least one candidate");
        let m1 = integer_root_floor(n as u64, 4) as usize;
        Ok(Decomposition {
            n,
            n1,
            n2: n - n1,
            u,
            residual,
            m1,
            m2: n - m1,
        })
    }

    pub fn is_exact(&self) -> bool {
        self.residual == 0
    }
}

/// Best `u ∈ [v0, v1]` making `round(u^k)` close to `target`, with the
/// achieved rounded power.
fn closest_power(target: f64, k: usize, v0: f64, v1: f64) -> (f64, i64) {
    if k == 0 {
        return (v0, 1);
    }
    let lo = v0.powi(k as i32);
    let hi = v1.powi(k as i32);
    let clamped = target.clamp(lo, hi);
    let u = clamped.powf(1.0 / k as f64).clamp(v0, v1);
    (u, u.powi(k as i32).round() as i64)
}
