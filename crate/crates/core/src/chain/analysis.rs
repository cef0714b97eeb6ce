use serde::{Deserialize, Serialize};

use super::kernel::{ChainKernel, Kernel, Variant};
use crate::error::{Error, Result};
use crate::scalar::{compensated_sum, CompensatedSum, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailMass<R> {
    /// Smallest integer `a >= h4 / 8`.
    pub threshold: usize,
    /// Exact `P[jump >= threshold]` under the kernel's own jump law.
    pub exact: R,
    /// `λ̄^{h4/8}` with `λ̄ = e^{-2 n^{2/7}}`, which bounds the Poisson tail.
    pub poisson_bound: R,
}

/// Mass of a single downward jump of at least `h4 / 8`.
pub fn excursion_tail_mass<R: Real>(kernel: &ChainKernel<R>) -> TailMass<R> {
    let h4 = kernel.h4();
    let threshold = h4.div_ceil(8);
    let eighth = R::from_usize_lossy(h4) / R::from_usize_lossy(8);
    TailMass {
        threshold,
        exact: kernel.jump_tail(threshold),
        poisson_bound: super::kernel::lambda_bar::<R>(kernel.n()).powf(eighth),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupersolutionReport<R> {
    pub r: R,
    /// `(k, 𝓛f̃(k))` for interior `k`, with `f̃(k) = e^{-k r}` and states
    /// `<= 0` valued at `f̃(0) = 1`.
    pub values: Vec<(i64, R)>,
    pub max: R,
    pub holds: bool,
    /// `𝓛f̃ / f̃` for the walk on all of ℤ (no merging), the same at every
    /// interior state.
    pub unmerged_ratio: R,
    /// `θ^{4 m1}(e^{-r} - 1) + exp(e^{-r}) - 1`.
    pub bracket: R,
    /// `-θ^{4 m1}`.
    pub leading_order: R,
}

/// Evaluates the generator on `f̃(a) = e^{-a r}` at every interior state of a
/// dominating kernel.
pub fn supersolution_check<R: Real>(
    kernel: &ChainKernel<R>,
    r: R,
) -> Result<SupersolutionReport<R>> {
    if kernel.variant() != Variant::Dominating {
        return Err(Error::precondition(
            "kernel",
            "supersolution check needs the dominating variant",
        ));
    }
    let f = |k: i64| (-R::from_f64_lossy(k.max(0) as f64) * r).exp();
    let mut values = Vec::new();
    for k in 1..kernel.top() {
        let fk = f(k);
        let v = compensated_sum(kernel.row(k).into_iter().map(|(j, p)| p * (f(j) - fk)));
        values.push((k, v));
    }
    let max = values
        .iter()
        .map(|&(_, v)| v)
        .fold(R::neg_infinity(), |a, b| a.max(b));
    let up = kernel.upward();
    let lam = kernel.jump_parameter();
    let one = R::one();
    let unmerged_ratio = up * ((-r).exp() - one) + (lam * (r.exp() - one)).exp_m1();
    let bracket = up * ((-r).exp() - one) + (-r).exp().exp_m1();
    Ok(SupersolutionReport {
        r,
        holds: values.is_empty() || max <= R::zero(),
        max: if values.is_empty() { R::zero() } else { max },
        values,
        unmerged_ratio,
        bracket,
        leading_order: -up,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupersolutionScan {
    /// First `n` where the exact check holds, with `r = n^{2/7}`.
    pub first_exact: Option<u64>,
    /// First `n` where the closed-form bracket is `<= 0`.
    pub first_bracket: Option<u64>,
    /// Heights skipped because the dominating kernel could not be built.
    pub skipped: Vec<u64>,
}

/// Scans `n` in `range` for the first height at which the supersolution
/// inequality holds.
pub fn supersolution_scan(
    d: u64,
    cbar: f64,
    sigma: f64,
    theta: f64,
    range: std::ops::RangeInclusive<u64>,
) -> Result<SupersolutionScan> {
    let mut scan = SupersolutionScan {
        first_exact: None,
        first_bracket: None,
        skipped: Vec::new(),
    };
    for n in range {
        let kernel = match ChainKernel::new(n, d, cbar, sigma, theta, Variant::Dominating) {
            Ok(k) => k,
            Err(Error::Kernel(_)) => {
                scan.skipped.push(n);
                continue;
            }
            Err(e) => return Err(e),
        };
        let r = (n as f64).powf(2.0 / 7.0);
        let report = supersolution_check(&kernel, r)?;
        if scan.first_exact.is_none() && report.holds && !report.values.is_empty() {
            scan.first_exact = Some(n);
        }
        if scan.first_bracket.is_none() && report.bracket <= 0.0 {
            scan.first_bracket = Some(n);
        }
        if scan.first_exact.is_some() && scan.first_bracket.is_some() {
            break;
        }
    }
    Ok(scan)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RwestReport<R> {
    pub start: i64,
    pub window: (u64, u64),
    /// Largest state counted as a drop: `4k <= 3 h4`.
    pub threshold: i64,
    /// Exact `P[min_{lo <= i <= hi} Z_i <= threshold]`.
    pub probability: R,
    /// `e^{-h4}`.
    pub bound_from_top: R,
    /// `e^{-start}`.
    pub bound_from_start: R,
}

/// Probability of dropping to `(3/4) h4` or below at some step in
/// `[lo, hi]`, by iterating the kernel and killing mass in the drop set
/// inside the window.
pub fn verify_rwest<R: Real>(
    kernel: &impl Kernel<R>,
    lo: u64,
    hi: u64,
    start: i64,
) -> Result<RwestReport<R>> {
    let top = kernel.top();
    if lo > hi {
        return Err(Error::domain(format!("empty window [{lo}, {hi}]")));
    }
    if start > top {
        return Err(Error::domain(format!(
            "start {start} above the top state {top}"
        )));
    }
    let threshold = (3 * top).div_euclid(4);
    let report = |probability| RwestReport {
        start,
        window: (lo, hi),
        threshold,
        probability,
        bound_from_top: (-R::from_f64_lossy(top as f64)).exp(),
        bound_from_start: (-R::from_f64_lossy(start as f64)).exp(),
    };
    if start <= 0 {
        return Ok(report(R::one()));
    }
    let rows: Vec<Vec<(i64, R)>> = (0..=top).map(|k| kernel.row(k)).collect();
    let states = (top + 1) as usize;
    let mut dist = vec![R::zero(); states];
    dist[start as usize] = R::one();
    let mut hit = CompensatedSum::new();
    let kill = |dist: &mut Vec<R>, hit: &mut CompensatedSum<R>| {
        for mass in dist.iter_mut().take(threshold as usize + 1) {
            hit.add(*mass);
            *mass = R::zero();
        }
    };
    if lo == 0 {
        kill(&mut dist, &mut hit);
    }
    let mut next = vec![R::zero(); states];
    for step in 1..=hi {
        next.iter_mut().for_each(|x| *x = R::zero());
        for (k, row) in rows.iter().enumerate() {
            let mass = dist[k];
            if mass == R::zero() {
                continue;
            }
            for &(j, p) in row {
                next[j as usize] = next[j as usize] + mass * p;
            }
        }
        std::mem::swap(&mut dist, &mut next);
        if step >= lo {
            kill(&mut dist, &mut hit);
        }
        let alive: R = dist.iter().copied().sum();
        if alive < R::epsilon() * R::epsilon() {
            break;
        }
    }
    Ok(report(hit.value().min(R::one())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport<R> {
    /// `(k, min_c [P_upper(k, >= c) - P_lower(k, >= c)])`.
    pub margins: Vec<(i64, R)>,
    pub worst: R,
    pub holds: bool,
    pub tolerance: R,
}

/// Row-wise check that `upper` puts at least as much mass as `lower` on
/// `{next >= c}` for every state and every threshold.
pub fn row_dominance<R: Real>(
    upper: &impl Kernel<R>,
    lower: &impl Kernel<R>,
) -> Result<DominanceReport<R>> {
    if upper.top() != lower.top() {
        return Err(Error::domain("kernels live on different state spaces"));
    }
    let top = upper.top();
    let tolerance = R::from_f64_lossy(1e-12).max(R::epsilon() * R::from_f64_lossy(64.0));
    let survival = |row: Vec<(i64, R)>| {
        let mut mass = vec![R::zero(); (top + 2) as usize];
        for (j, p) in row {
            mass[j as usize] = mass[j as usize] + p;
        }
        let mut out = vec![R::zero(); (top + 2) as usize];
        let mut acc = CompensatedSum::new();
        for c in (0..=top as usize).rev() {
            acc.add(mass[c]);
            out[c] = acc.value();
        }
        out
    };
    let mut margins = Vec::new();
    for k in 0..=top {
        let su = survival(upper.row(k));
        let sl = survival(lower.row(k));
        let margin = (0..=top as usize)
            .map(|c| su[c] - sl[c])
            .fold(R::infinity(), |a, b| a.min(b));
        margins.push((k, margin));
    }
    let worst = margins
        .iter()
        .map(|&(_, m)| m)
        .fold(R::infinity(), |a, b| a.min(b));
    Ok(DominanceReport {
        holds: worst >= -tolerance,
        margins,
        worst,
        tolerance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DumpRow {
    pub state: i64,
    pub transitions: Vec<(i64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelDump {
    pub n: u64,
    pub d: u64,
    pub m1: u32,
    pub h4: usize,
    pub variant: Variant,
    pub cbar: f64,
    pub sigma: f64,
    pub theta: f64,
    pub rows: Vec<DumpRow>,
}

/// Mass kept per row in a dump.
pub const DUMP_MASS: f64 = 1.0 - 1e-15;

/// Rows with transitions in decreasing probability, cut once the listed
/// mass reaches `1 - 1e-15`.
pub fn dump_kernel<R: Real>(kernel: &ChainKernel<R>) -> KernelDump {
    let f = |x: R| x.to_f64().unwrap_or(f64::NAN);
    let rows = (0..=kernel.top())
        .map(|k| {
            let mut row: Vec<(i64, f64)> =
                kernel.row(k).into_iter().map(|(j, p)| (j, f(p))).collect();
            row.sort_by(|a, b| b.1.total_cmp(&a.1).then(b.0.cmp(&a.0)));
            let mut kept = Vec::new();
            let mut mass = 0.0;
            for (j, p) in row {
                if mass >= DUMP_MASS {
                    break;
                }
                mass += p;
                kept.push((j, p));
            }
            DumpRow {
                state: k,
                transitions: kept,
            }
        })
        .collect();
    KernelDump {
        n: kernel.n(),
        d: kernel.d(),
        m1: kernel.m1(),
        h4: kernel.h4(),
        variant: kernel.variant(),
        cbar: f(kernel.cbar()),
        sigma: f(kernel.sigma()),
        theta: f(kernel.theta()),
        rows,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::hitting::TableKernel;
    use approx::assert_relative_eq;

    fn both(n: u64) -> (ChainKernel<f64>, ChainKernel<f64>) {
        (
            ChainKernel::new(n, 2, 0.5, 0.5, 0.9, Variant::Paper).unwrap(),
            ChainKernel::new(n, 2, 0.5, 0.5, 0.9, Variant::Dominating).unwrap(),
        )
    }

    #[test]
    fn constant_function_is_harmonic() {
        let (_, dom) = both(50);
        let r = supersolution_check(&dom, 0.0).unwrap();
        assert!(r.values.iter().all(|&(_, v)| v.abs() < 1e-15));
        let (paper, _) = both(50);
        assert!(supersolution_check(&paper, 1.0).is_err());
    }

    #[test]
    fn supersolution_at_fifty() {
        let (_, dom) = both(50);
        let r = 50f64.powf(2.0 / 7.0);
        let rep = supersolution_check(&dom, r).unwrap();
        assert!(rep.holds);
        assert!(rep.unmerged_ratio <= 0.0);
        assert!(rep.bracket <= 0.0);
    }

    #[test]
    fn one_step_drop_from_top() {
        let (paper, _) = both(20);
        // from h4 = 4 the drop set is {<= 3}: any jump of size >= 1
        let rep = verify_rwest(&paper, 0, 1, 4).unwrap();
        assert_relative_eq!(rep.probability, paper.jump_tail(1), max_relative = 1e-12);
        assert_eq!(verify_rwest(&paper, 0, 10, 0).unwrap().probability, 1.0);
    }

    #[test]
    fn dominance_is_reflexive_and_detects_order() {
        let k = TableKernel::<f64>::symmetric(3);
        assert!(row_dominance(&k, &k).unwrap().holds);
        let lazy = TableKernel::new(vec![
            vec![(0, 1.0)],
            vec![(0, 1.0)],
            vec![(1, 1.0)],
            vec![(2, 1.0)],
        ])
        .unwrap();
        assert!(row_dominance(&k, &lazy).unwrap().holds);
        assert!(!row_dominance(&lazy, &k).unwrap().holds);
    }

    #[test]
    fn dump_rows_are_complete() {
        let (paper, _) = both(20);
        let dump = dump_kernel(&paper);
        assert_eq!(dump.rows.len(), 5);
        for row in &dump.rows {
            let mass: f64 = row.transitions.iter().map(|t| t.1).sum();
            assert!(mass >= DUMP_MASS - 1e-12);
        }
    }

    #[test]
    fn tail_mass_threshold() {
        let (paper, dom) = both(20);
        let t = excursion_tail_mass(&paper);
        assert_eq!(t.threshold, 1);
        assert_relative_eq!(t.exact, 1.0 - paper.jump_pmf(0), max_relative = 1e-12);
        let t = excursion_tail_mass(&dom);
        assert!(t.exact <= t.poisson_bound);
    }
}
