use rand::Rng;
use serde::{Deserialize, Serialize};

use super::kernel::Kernel;
use crate::error::{Error, Result};
use crate::montecarlo::run_trials;
use crate::rng::{stream_rng, trial_seed};
use crate::scalar::{compensated_sum, Real};

/// Kernel given by explicit rows, for small hand-built chains.
#[derive(Debug, Clone, PartialEq)]
pub struct TableKernel<R> {
    rows: Vec<Vec<(i64, R)>>,
}

impl<R: Real> TableKernel<R> {
    /// `rows[k]` is the row of state `k`; row `0` is forced to be absorbing.
    pub fn new(mut rows: Vec<Vec<(i64, R)>>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::domain("a kernel needs at least one state"));
        }
        rows[0] = vec![(0, R::one())];
        let top = rows.len() as i64 - 1;
        for (k, row) in rows.iter().enumerate() {
            let sum = compensated_sum(row.iter().map(|&(_, p)| p));
            let tol = R::from_f64_lossy(1e-12).max(R::epsilon() * R::from_f64_lossy(64.0));
            if (sum - R::one()).abs() > tol || row.iter().any(|&(_, p)| p < R::zero()) {
                return Err(Error::Kernel(format!(
                    "row {k} is not a probability vector"
                )));
            }
            if row.iter().any(|&(j, _)| j > top) {
                return Err(Error::Kernel(format!("row {k} leaves the state space")));
            }
        }
        Ok(TableKernel { rows })
    }

    /// Walk on `0..=top` stepping `+1` and `-1` with probability one half.
    pub fn symmetric(top: usize) -> Self {
        let h = R::half();
        let mut rows = vec![vec![(0, R::one())]];
        for k in 1..=top as i64 {
            if k == top as i64 {
                rows.push(vec![(k - 1, h), (k, h)]);
            } else {
                rows.push(vec![(k + 1, h), (k - 1, h)]);
            }
        }
        TableKernel::new(rows).expect("symmetric rows are stochastic")
    }
}

impl<R: Real> Kernel<R> for TableKernel<R> {
    fn top(&self) -> i64 {
        self.rows.len() as i64 - 1
    }

    fn row(&self, k: i64) -> Vec<(i64, R)> {
        let k = k.clamp(0, self.top()) as usize;
        self.rows[k].iter().map(|&(j, p)| (j.max(0), p)).collect()
    }
}

fn check_barriers<R: Real>(kernel: &impl Kernel<R>, lower: i64, upper: i64) -> Result<()> {
    if lower < 0 || lower >= upper || upper > kernel.top() {
        return Err(Error::domain(format!(
            "need 0 <= lower < upper <= {}, got lower = {lower}, upper = {upper}",
            kernel.top()
        )));
    }
    Ok(())
}

/// `P[hit {<= lower} before upper | start]` for every start in
/// `lower+1..=upper`, by first-step analysis.
pub fn hitting_probabilities<R: Real>(
    kernel: &impl Kernel<R>,
    lower: i64,
    upper: i64,
) -> Result<Vec<(i64, R)>> {
    check_barriers(kernel, lower, upper)?;
    let m = (upper - lower - 1) as usize;
    let index = |k: i64| (k - lower - 1) as usize;
    // (I - Q) x = b over the interior states
    let mut a = vec![vec![R::zero(); m]; m];
    let mut b = vec![R::zero(); m];
    for k in lower + 1..upper {
        let i = index(k);
        a[i][i] = R::one();
        for (j, p) in kernel.row(k) {
            if j <= lower {
                b[i] = b[i] + p;
            } else if j < upper {
                a[i][index(j)] = a[i][index(j)] - p;
            } else if j > upper {
                return Err(Error::Kernel(format!(
                    "state {k} jumps over the upper barrier {upper} to {j}"
                )));
            }
        }
    }
    let x = solve_dense(a, b)?;
    let mut out: Vec<(i64, R)> = (lower + 1..upper).map(|k| (k, x[index(k)])).collect();
    out.push((upper, R::zero()));
    Ok(out)
}

/// `P[hit {<= lower} before upper | Z_0 = start]`.
pub fn hitting_probability<R: Real>(
    kernel: &impl Kernel<R>,
    start: i64,
    lower: i64,
    upper: i64,
) -> Result<R> {
    check_barriers(kernel, lower, upper)?;
    if start <= lower || start > upper {
        return Err(Error::domain(format!(
            "start {start} outside ({lower}, {upper}]"
        )));
    }
    if start == upper {
        return Ok(R::zero());
    }
    let all = hitting_probabilities(kernel, lower, upper)?;
    Ok(all[(start - lower - 1) as usize].1)
}

/// Gaussian elimination with partial pivoting.
fn solve_dense<R: Real>(mut a: Vec<Vec<R>>, mut b: Vec<R>) -> Result<Vec<R>> {
    let m = b.len();
    for col in 0..m {
        let pivot = (col..m)
            .max_by(|&i, &j| {
                a[i][col]
                    .abs()
                    .partial_cmp(&a[j][col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .expect("nonempty pivot range");
        if !(a[pivot][col].abs() > R::min_positive_value()) {
            return Err(Error::Internal(format!(
                "singular hitting system at column {col}"
            )));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..m {
            let factor = a[row][col] / a[col][col];
            if factor == R::zero() {
                continue;
            }
            for c in col..m {
                let v = a[col][c];
                a[row][c] = a[row][c] - factor * v;
            }
            let v = b[col];
            b[row] = b[row] - factor * v;
        }
    }
    let mut x = vec![R::zero(); m];
    for row in (0..m).rev() {
        let mut acc = crate::scalar::CompensatedSum::new();
        acc.add(b[row]);
        for c in row + 1..m {
            acc.add(-a[row][c] * x[c]);
        }
        x[row] = acc.value() / a[row][row];
    }
    Ok(x)
}

/// Precomputed cumulative rows for fast sampling.
#[derive(Debug, Clone)]
pub struct ChainSampler {
    targets: Vec<Vec<i64>>,
    cumulative: Vec<Vec<f64>>,
}

impl ChainSampler {
    pub fn new<R: Real>(kernel: &impl Kernel<R>) -> Self {
        let top = kernel.top();
        let mut targets = Vec::new();
        let mut cumulative = Vec::new();
        for k in 0..=top {
            let row = kernel.row(k);
            let mut acc = 0.0;
            let mut t = Vec::with_capacity(row.len());
            let mut c = Vec::with_capacity(row.len());
            for (j, p) in row {
                acc += p.to_f64().unwrap_or(0.0);
                t.push(j);
                c.push(acc);
            }
            targets.push(t);
            cumulative.push(c);
        }
        ChainSampler {
            targets,
            cumulative,
        }
    }

    pub fn top(&self) -> i64 {
        self.targets.len() as i64 - 1
    }

    /// Next state from `k`; states `<= 0` stay put.
    pub fn step(&self, k: i64, rng: &mut impl Rng) -> i64 {
        if k <= 0 {
            return k;
        }
        let k = k.min(self.top()) as usize;
        let cum = &self.cumulative[k];
        let u = rng.random::<f64>() * cum[cum.len() - 1];
        let i = cum.partition_point(|&c| c <= u).min(cum.len() - 1);
        self.targets[k][i]
    }

    /// Whether the walk from `start` reaches `{<= lower}` before `upper`.
    pub fn hits_lower_first(&self, start: i64, lower: i64, upper: i64, rng: &mut impl Rng) -> bool {
        let mut k = start;
        loop {
            if k <= lower {
                return true;
            }
            if k == upper {
                return false;
            }
            k = self.step(k, rng);
        }
    }
}

/// Path `Z_0, ..., Z_steps` from `start`.
pub fn simulate_chain<R: Real>(
    kernel: &impl Kernel<R>,
    start: i64,
    steps: usize,
    seed: u64,
) -> Result<Vec<i64>> {
    if start > kernel.top() {
        return Err(Error::domain(format!(
            "start {start} above the top state {}",
            kernel.top()
        )));
    }
    let sampler = ChainSampler::new(kernel);
    let mut rng = stream_rng(seed, 0);
    let mut path = Vec::with_capacity(steps + 1);
    let mut k = start;
    path.push(k);
    for _ in 0..steps {
        k = sampler.step(k, &mut rng);
        path.push(k);
    }
    Ok(path)
}

/// Paths per Monte Carlo chunk; each chunk has its own trial seed.
pub const HITTING_CHUNK: usize = 4096;

/// One chunk of walks in [`hitting_chunks`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HittingChunk {
    pub seed: u64,
    pub paths: usize,
    pub hits: usize,
}

/// `paths` independent walks from `start`, split into chunks of
/// [`HITTING_CHUNK`] walks; chunk `i` uses trial seed `i` of `master_seed`.
pub fn hitting_chunks<R: Real>(
    kernel: &impl Kernel<R>,
    start: i64,
    lower: i64,
    upper: i64,
    paths: usize,
    master_seed: u64,
) -> Result<Vec<HittingChunk>> {
    check_barriers(kernel, lower, upper)?;
    if start <= lower || start > upper {
        return Err(Error::domain(format!(
            "start {start} outside ({lower}, {upper}]"
        )));
    }
    let sampler = ChainSampler::new(kernel);
    let chunks = paths.div_ceil(HITTING_CHUNK);
    Ok(run_trials(chunks, master_seed, |i, seed| {
        let len = HITTING_CHUNK.min(paths - i as usize * HITTING_CHUNK);
        let mut rng = stream_rng(seed, 0);
        let hits = (0..len)
            .filter(|_| sampler.hits_lower_first(start, lower, upper, &mut rng))
            .count();
        HittingChunk {
            seed,
            paths: len,
            hits,
        }
    }))
}

/// Number of `paths` independent walks from `start` that reach `{<= lower}`
/// before `upper`.
pub fn hitting_frequency<R: Real>(
    kernel: &impl Kernel<R>,
    start: i64,
    lower: i64,
    upper: i64,
    paths: usize,
    master_seed: u64,
) -> Result<usize> {
    let chunks = hitting_chunks(kernel, start, lower, upper, paths, master_seed)?;
    Ok(chunks.iter().map(|c| c.hits).sum())
}

/// Exact hitting probability next to its Monte Carlo frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HittingComparison {
    pub start: i64,
    pub exact: f64,
    pub hits: usize,
    pub paths: usize,
    pub frequency: f64,
    /// Binomial standard deviation of the frequency under the exact value.
    pub sigma: f64,
    pub within_3sigma: bool,
    pub master_seed: u64,
}

/// Compares the linear solve with `paths` simulated walks for each start.
/// Start `a` draws its walks under master seed `trial_seed(master, a)`.
pub fn compare_hitting<R: Real>(
    kernel: &impl Kernel<R>,
    starts: &[i64],
    lower: i64,
    upper: i64,
    paths: usize,
    master_seed: u64,
) -> Result<Vec<(HittingComparison, Vec<HittingChunk>)>> {
    if paths == 0 {
        return Err(Error::domain("paths must be >= 1"));
    }
    let exact = hitting_probabilities(kernel, lower, upper)?;
    starts
        .iter()
        .map(|&a| {
            let p = if a == upper {
                0.0
            } else if a > lower && a < upper {
                exact[(a - lower - 1) as usize]
                    .1
                    .to_f64()
                    .unwrap_or(f64::NAN)
            } else {
                return Err(Error::domain(format!(
                    "start {a} outside ({lower}, {upper}]"
                )));
            };
            let seed = trial_seed(master_seed, a as u64);
            let chunks = hitting_chunks(kernel, a, lower, upper, paths, seed)?;
            let hits: usize = chunks.iter().map(|c| c.hits).sum();
            let frequency = hits as f64 / paths as f64;
            let sigma = (p * (1.0 - p) / paths as f64).sqrt();
            let within_3sigma = if sigma == 0.0 {
                frequency == p
            } else {
                (frequency - p).abs() <= 3.0 * sigma
            };
            Ok((
                HittingComparison {
                    start: a,
                    exact: p,
                    hits,
                    paths,
                    frequency,
                    sigma,
                    within_3sigma,
                    master_seed: seed,
                },
                chunks,
            ))
        })
        .collect()
}
