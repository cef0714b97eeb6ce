//! Independent oracles shared by the integration tests. Nothing here calls
//! the crate's simulators or solvers.
#![allow(dead_code)]

/// Dense Gaussian elimination with partial pivoting.
pub fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let m = b.len();
    for col in 0..m {
        let p = (col..m)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, p);
        b.swap(col, p);
        for row in 0..m {
            if row == col {
                continue;
            }
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for c in col..m {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    (0..m).map(|i| b[i] / a[i][i]).collect()
}

/// Outgoing transitions `(target mask, rate)` of the contact process in the
/// configuration `mask`.
pub fn transitions(k: usize, edges: &[(usize, usize)], lambda: f64, mask: u32) -> Vec<(u32, f64)> {
    let mut out = Vec::new();
    for v in 0..k {
        if mask & (1 << v) != 0 {
            out.push((mask & !(1 << v), 1.0));
        } else {
            let infected_nbrs = edges
                .iter()
                .filter(|&&(a, b)| {
                    (a == v && mask & (1 << b) != 0) || (b == v && mask & (1 << a) != 0)
                })
                .count();
            if infected_nbrs > 0 {
                out.push((mask | (1 << v), lambda * infected_nbrs as f64));
            }
        }
    }
    out
}

/// `E[τ_A]` for every nonempty configuration `A`, indexed by `mask - 1`,
/// from the backward equations over all `2^k` configurations.
pub fn exact_mean_extinction(k: usize, edges: &[(usize, usize)], lambda: f64) -> Vec<f64> {
    let states = (1u32 << k) - 1;
    let m = states as usize;
    let mut a = vec![vec![0.0; m]; m];
    let b = vec![1.0; m];
    for mask in 1..=states {
        let i = mask as usize - 1;
        let tr = transitions(k, edges, lambda, mask);
        let total: f64 = tr.iter().map(|t| t.1).sum();
        a[i][i] = total;
        for (to, rate) in tr {
            if to != 0 {
                a[i][to as usize - 1] -= rate;
            }
        }
    }
    solve(a, b)
}

/// Distribution at time `t` from the configuration `start` by uniformization.
pub fn uniformized_distribution(
    k: usize,
    edges: &[(usize, usize)],
    lambda: f64,
    start: u32,
    t: f64,
) -> Vec<f64> {
    let n = 1usize << k;
    let rows: Vec<Vec<(u32, f64)>> = (0..n as u32)
        .map(|s| transitions(k, edges, lambda, s))
        .collect();
    let q = rows
        .iter()
        .map(|r| r.iter().map(|x| x.1).sum::<f64>())
        .fold(0.0, f64::max);
    let mut p = vec![0.0; n];
    p[start as usize] = 1.0;
    let mut out = vec![0.0; n];
    let mut weight = (-q * t).exp();
    let mut j = 0u32;
    let mut accumulated = 0.0;
    while accumulated < 1.0 - 1e-15 && j < 10_000 {
        for s in 0..n {
            out[s] += weight * p[s];
        }
        accumulated += weight;
        let mut next = vec![0.0; n];
        for s in 0..n {
            let total: f64 = rows[s].iter().map(|x| x.1).sum();
            next[s] += p[s] * (1.0 - total / q);
            for &(to, rate) in &rows[s] {
                next[to as usize] += p[s] * rate / q;
            }
        }
        p = next;
        j += 1;
        weight *= q * t / j as f64;
    }
    out
}

/// `H_k = 1 + 1/2 + ... + 1/k`, the mean of the maximum of `k` unit
/// exponentials.
pub fn harmonic(k: usize) -> f64 {
    (1..=k).map(|i| 1.0 / i as f64).sum()
}

/// Largest number of points `s_1 < ... < s_k < t - t0` with gaps at least
/// `t0`, each inside some `[a, b)`, searched over the grid of step `h`.
/// All inputs are assumed to be multiples of `h`.
pub fn brute_force_attempts(intervals: &[(f64, f64)], t0: f64, t: f64, h: f64) -> usize {
    let steps = ((t - t0) / h).round() as i64;
    let gap = (t0 / h).round() as i64;
    let occupied = |i: i64| {
        let x = i as f64 * h;
        intervals.iter().any(|&(a, b)| a <= x && x < b)
    };
    // best[i] = longest chain whose last point is grid point i
    let mut best = vec![0usize; steps.max(0) as usize];
    let mut answer = 0;
    for i in 0..steps {
        if !occupied(i) {
            continue;
        }
        let mut v = 1;
        for j in 0..=(i - gap) {
            if best[j as usize] > 0 {
                v = v.max(best[j as usize] + 1);
            }
        }
        best[i as usize] = v;
        answer = answer.max(v);
    }
    answer
}

/// `C(n, k) p^k (1 - p)^(n - k)` by direct products.
pub fn binomial_pmf(n: usize, k: usize, p: f64) -> f64 {
    let mut c = 1.0;
    for i in 0..k {
        c *= (n - i) as f64 / (i + 1) as f64;
    }
    c * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32)
}
