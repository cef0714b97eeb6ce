use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{compensated_sum, integer_root_floor, Real};

/// Integer-valued kernel on `{0, ..., top}` where `0` stands for every state
/// `<= 0` and is absorbing.
pub trait Kernel<R: Real> {
    fn top(&self) -> i64;

    /// Transitions out of `k` as `(target, probability)`; targets are clamped
    /// into `[0, top]`.
    fn row(&self, k: i64) -> Vec<(i64, R)>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Binomial downward jumps and upward step `p(0) (c̄σ/2) θ^{2 m1}`.
    Paper,
    /// Poisson downward jumps with mean `e^{-2 n^{2/7}}` and upward step
    /// `θ^{4 m1}`.
    Dominating,
}

/// `d^{⌊n^{1/k}⌋}`, or a size error when it overflows.
pub fn h_scale(n: u64, k: u32, d: u64) -> Result<u64> {
    if n == 0 || k == 0 {
        return Err(Error::domain("h_scale needs n >= 1 and k >= 1"));
    }
    let e = integer_root_floor(n, k);
    u32::try_from(e)
        .ok()
        .and_then(|e| d.checked_pow(e))
        .ok_or_else(|| Error::Size(format!("{d}^{e} does not fit in 64 bits")))
}

/// `e^{-2 n^{2/7}}`.
pub fn lambda_bar<R: Real>(n: u64) -> R {
    let two = R::one() + R::one();
    let exponent = R::from_f64_lossy(2.0 / 7.0);
    (-two * R::from_f64_lossy(n as f64).powf(exponent)).exp()
}

/// Largest `h4` for which kernels are built; rows are dense in `h4`.
pub const MAX_TOP: u64 = 1 << 16;

/// Transition kernel of the comparison walk on `(-∞, h4]`, stored with all
/// states `<= 0` merged into the absorbing state `0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainKernel<R> {
    n: u64,
    d: u64,
    m1: u32,
    h4: usize,
    variant: Variant,
    cbar: R,
    sigma: R,
    theta: R,
    up: R,
    stay: R,
    jump_parameter: R,
    /// `pmf[a]` for `a = 0..=h4`.
    pmf: Vec<R>,
    /// `tail[a] = Σ_{j >= a} pmf(j)` for `a = 0..=h4 + 1`.
    tail: Vec<R>,
}

impl<R: Real> ChainKernel<R> {
    pub fn new(n: u64, d: u64, cbar: R, sigma: R, theta: R, variant: Variant) -> Result<Self> {
        if n == 0 || d < 2 {
            return Err(Error::domain(format!(
                "need n >= 1 and d >= 2, got n = {n}, d = {d}"
            )));
        }
        let (zero, one) = (R::zero(), R::one());
        if !(cbar > zero) {
            return Err(Error::precondition("cbar", "must be > 0"));
        }
        if !(sigma > zero && sigma < one) {
            return Err(Error::precondition("sigma", "must lie in (0, 1)"));
        }
        if !(theta > zero && theta < one) {
            return Err(Error::precondition("theta", "must lie in (0, 1)"));
        }
        let m1 = integer_root_floor(n, 4) as u32;
        let h4 = h_scale(n, 4, d)?;
        if h4 > MAX_TOP {
            return Err(Error::Size(format!(
                "h4 = {h4} exceeds the supported {MAX_TOP}"
            )));
        }
        let h4 = h4 as usize;
        let nr = R::from_f64_lossy(n as f64);
        let (jump_parameter, log_pmf) = match variant {
            Variant::Paper => {
                let q = (-nr.cbrt()).exp();
                (q, binomial_log_pmf(h4, q))
            }
            Variant::Dominating => {
                let lam = lambda_bar::<R>(n);
                (lam, poisson_log_pmf(h4, lam))
            }
        };
        let pmf: Vec<R> = log_pmf.iter().map(|lp| lp.exp()).collect();
        let beyond = match variant {
            Variant::Paper => zero,
            Variant::Dominating => poisson_tail_beyond(h4, jump_parameter, log_pmf[h4]),
        };
        let mut tail = vec![zero; h4 + 2];
        tail[h4 + 1] = beyond;
        let mut acc = crate::scalar::CompensatedSum::new();
        acc.add(beyond);
        for a in (0..=h4).rev() {
            acc.add(pmf[a]);
            tail[a] = acc.value();
        }
        let p0 = pmf[0];
        let (up, stay) = match variant {
            Variant::Paper => {
                let half = R::half();
                let u = cbar * sigma * half * theta.powi(2 * m1 as i32);
                if u > one {
                    return Err(Error::Kernel(format!(
                        "negative holding probability: need (cbar*sigma/2)*theta^(2*m1) <= 1, got {u}"
                    )));
                }
                (p0 * u, p0 * (one - u))
            }
            Variant::Dominating => {
                let u = theta.powi(4 * m1 as i32);
                if p0 < u {
                    return Err(Error::Kernel(format!(
                        "negative holding probability: need pbar(0) >= theta^(4*m1), got {p0} < {u}"
                    )));
                }
                (u, p0 - u)
            }
        };
        let kernel = ChainKernel {
            n,
            d,
            m1,
            h4,
            variant,
            cbar,
            sigma,
            theta,
            up,
            stay,
            jump_parameter,
            pmf,
            tail,
        };
        kernel.validate_rows()?;
        Ok(kernel)
    }

    /// Row sums equal one to within `max(1e-12, 64 ε)`.
    pub fn validate_rows(&self) -> Result<()> {
        let tol = R::from_f64_lossy(1e-12).max(R::epsilon() * R::from_f64_lossy(64.0));
        for k in 0..=self.h4 as i64 {
            let row = self.row(k);
            if let Some(&(j, p)) = row.iter().find(|(_, p)| *p < R::zero()) {
                return Err(Error::Kernel(format!("P({k}, {j}) = {p} is negative")));
            }
            let sum = compensated_sum(row.iter().map(|&(_, p)| p));
            if (sum - R::one()).abs() > tol {
                return Err(Error::Kernel(format!("row {k} sums to {sum}")));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn d(&self) -> u64 {
        self.d
    }

    pub fn m1(&self) -> u32 {
        self.m1
    }

    pub fn h4(&self) -> usize {
        self.h4
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn cbar(&self) -> R {
        self.cbar
    }

    pub fn sigma(&self) -> R {
        self.sigma
    }

    pub fn theta(&self) -> R {
        self.theta
    }

    /// Success probability of the Binomial law or mean of the Poisson law.
    pub fn jump_parameter(&self) -> R {
        self.jump_parameter
    }

    /// Probability of the `+1` move from an interior state.
    pub fn upward(&self) -> R {
        self.up
    }

    /// Holding probability at an interior state.
    pub fn holding(&self) -> R {
        self.stay
    }

    /// Mass of a downward jump of size exactly `a`.
    pub fn jump_pmf(&self, a: usize) -> R {
        match self.pmf.get(a) {
            Some(&p) => p,
            None if self.variant == Variant::Dominating => {
                poisson_log_at(self.jump_parameter, a).exp()
            }
            None => R::zero(),
        }
    }

    /// `P[jump >= a]`.
    pub fn jump_tail(&self, a: usize) -> R {
        match self.tail.get(a) {
            Some(&t) => t,
            None if self.variant == Variant::Dominating => {
                let lam = self.jump_parameter;
                poisson_tail_beyond(a - 1, lam, poisson_log_at(lam, a - 1))
            }
            None => R::zero(),
        }
    }
}

impl<R: Real> Kernel<R> for ChainKernel<R> {
    fn top(&self) -> i64 {
        self.h4 as i64
    }

    fn row(&self, k: i64) -> Vec<(i64, R)> {
        let top = self.h4 as i64;
        let k = k.min(top);
        if k <= 0 {
            return vec![(0, R::one())];
        }
        let ku = k as usize;
        let mut out = Vec::with_capacity(ku + 2);
        if k < top {
            out.push((k + 1, self.up));
            out.push((k, self.stay));
        } else {
            out.push((k, self.pmf[0]));
        }
        for a in 1..ku {
            out.push((k - a as i64, self.pmf[a]));
        }
        out.push((0, self.tail[ku]));
        out
    }
}

/// Log mass function of Binomial(`h`, `q`) on `0..=h`.
fn binomial_log_pmf<R: Real>(h: usize, q: R) -> Vec<R> {
    let log_q = q.ln();
    let log_1mq = (-q).ln_1p();
    let mut out = Vec::with_capacity(h + 1);
    let mut lp = R::from_usize_lossy(h) * log_1mq;
    out.push(lp);
    for a in 0..h {
        lp = lp + R::from_usize_lossy(h - a).ln() - R::from_usize_lossy(a + 1).ln() + log_q
            - log_1mq;
        out.push(lp);
    }
    out
}

/// Log mass function of Poisson(`lam`) on `0..=h`.
fn poisson_log_pmf<R: Real>(h: usize, lam: R) -> Vec<R> {
    let log_lam = lam.ln();
    let mut out = Vec::with_capacity(h + 1);
    let mut lp = -lam;
    out.push(lp);
    for a in 0..h {
        lp = lp + log_lam - R::from_usize_lossy(a + 1).ln();
        out.push(lp);
    }
    out
}

fn poisson_log_at<R: Real>(lam: R, a: usize) -> R {
    (1..=a).fold(-lam, |lp, j| lp + lam.ln() - R::from_usize_lossy(j).ln())
}

/// `Σ_{a > h} Poisson(lam)(a)` given `log pmf(h)`, summed until the terms stop
/// mattering.
fn poisson_tail_beyond<R: Real>(h: usize, lam: R, log_pmf_h: R) -> R {
    let mut acc = crate::scalar::CompensatedSum::new();
    let mut lp = log_pmf_h;
    let mut a = h;
    loop {
        a += 1;
        lp = lp + lam.ln() - R::from_usize_lossy(a).ln();
        let term = lp.exp();
        acc.add(term);
        if term == R::zero() || term < acc.value() * R::epsilon() * R::epsilon() {
            break;
        }
        if a > h + 10_000 {
            break;
        }
    }
    acc.value()
}
