//! Budget-constrained sampling design.
//!
//! Problem 1 picks the randomized sampling probability that minimizes the
//! time-averaged error subject to a long-run sampling-cost budget. Problem 2
//! picks the wait-then-generate threshold that minimizes the mean error
//! streak under the same kind of budget.

use crate::analytic::{p_e as analytic_p_e, ChainPolicy};
use crate::error::{check_probability, Error, Result};
use crate::sources::{SourceKind, SourceModel};

/// Per-sample cost `delta` and average budget `delta_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budget {
    delta: f64,
    delta_max: f64,
    eta: f64,
}

impl Budget {
    pub fn new(delta: f64, delta_max: f64) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::Parameter(format!("delta = {delta} must be positive")));
        }
        if !(delta_max.is_finite() && delta_max > 0.0) {
            return Err(Error::Parameter(format!("delta_max = {delta_max} must be positive")));
        }
        let eta = delta_max / delta;
        if eta > 1.0 {
            return Err(Error::Parameter(format!(
                "delta_max / delta = {eta} exceeds 1; every slot would be affordable"
            )));
        }
        Ok(Self { delta, delta_max, eta })
    }

    /// Budget given directly as the affordable sampling fraction; `eta = 0`
    /// forbids sampling.
    pub fn from_eta(eta: f64) -> Result<Self> {
        check_probability("eta", eta)?;
        Ok(Self { delta: 1.0, delta_max: eta, eta })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn delta_max(&self) -> f64 {
        self.delta_max
    }

    /// Affordable long-run fraction of sampled slots.
    pub fn eta(&self) -> f64 {
        self.eta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Problem1Decision {
    SampleWithProbability,
    NeverSample,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    ClosedForm,
    Numeric,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Problem1Solution {
    pub decision: Problem1Decision,
    pub p_alpha_star: f64,
    pub p_e_star: f64,
    /// Error when never sampling.
    pub p_e_ns: f64,
    pub method: SolveMethod,
}

/// Error when the receiver keeps its initial reconstruction forever.
pub fn p_ns(source: &SourceModel, xhat0: usize) -> Result<f64> {
    let n = source.n_states();
    if xhat0 >= n {
        return Err(Error::StateOutOfRange { state: xhat0, n });
    }
    Ok(1.0 - source.marginal_stationary()?[xhat0])
}

/// Error when sampling every slot.
pub fn p_as(source: &SourceModel, p_s: f64) -> Result<f64> {
    analytic_p_e(source, ChainPolicy::RandomizedStationary { p_alpha: 1.0 }, p_s)
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Degenerate(format!("{what} is undefined for these parameters")))
    }
}

/// Two-state symmetric source: sampling always beats staying silent, and
/// the error falls with `p_alpha`, so the whole budget is spent.
pub fn solve_problem1_dtmc(p: f64, p_s: f64, budget: Budget) -> Result<Problem1Solution> {
    SourceModel::dtmc(2, p)?;
    check_probability("p_s", p_s)?;
    let eta = budget.eta();
    let h = p_s * eta;
    let p_e_star = finite(2.0 * (p - p * h) / (4.0 * p + 2.0 * h - 4.0 * p * h), "P_E")?;
    let decision = if eta > 0.0 {
        Problem1Decision::SampleWithProbability
    } else {
        Problem1Decision::NeverSample
    };
    Ok(Problem1Solution {
        decision,
        p_alpha_star: eta,
        p_e_star,
        p_e_ns: 0.5,
        method: SolveMethod::ClosedForm,
    })
}

/// Two-state birth-death source. Sampling helps only when the budget can
/// buy enough corrections to beat the silent receiver's error, which
/// depends on the state it starts in.
pub fn solve_problem1_bdmp(
    p: f64,
    q: f64,
    p_s: f64,
    budget: Budget,
    xhat0: usize,
) -> Result<Problem1Solution> {
    let source = SourceModel::bdmp(2, p, q)?;
    check_probability("p_s", p_s)?;
    let p_e_ns = p_ns(&source, xhat0)?;
    // The state the silent receiver holds plays the role of state 0.
    let (a, b) = if xhat0 == 0 { (p, q) } else { (q, p) };
    let eta = budget.eta();
    let worth_sampling = eta > 0.0
        && (b <= a || {
            let gap = (b - a) / (1.0 + b - a);
            p_s > gap && eta > gap / p_s
        });
    if !worth_sampling {
        return Ok(Problem1Solution {
            decision: Problem1Decision::NeverSample,
            p_alpha_star: 0.0,
            p_e_star: p_e_ns,
            p_e_ns,
            method: SolveMethod::ClosedForm,
        });
    }
    let h = p_s * eta;
    let p_e_star = finite(
        2.0 * p * q * (1.0 - h) / ((p + q) * (p * (1.0 - h) + (1.0 - q) * h + q)),
        "P_E",
    )?;
    Ok(Problem1Solution {
        decision: Problem1Decision::SampleWithProbability,
        p_alpha_star: eta,
        p_e_star,
        p_e_ns,
        method: SolveMethod::ClosedForm,
    })
}

const GOLDEN_TOL: f64 = 1e-10;

/// Golden-section search of the randomized-sampling error over
/// `p_alpha ∈ [0, eta]`, for sources without a closed-form solution.
pub fn solve_problem1_numeric(
    source: &SourceModel,
    p_s: f64,
    budget: Budget,
    xhat0: usize,
) -> Result<Problem1Solution> {
    check_probability("p_s", p_s)?;
    let p_e_ns = p_ns(source, xhat0)?;
    let eta = budget.eta();
    let never = Problem1Solution {
        decision: Problem1Decision::NeverSample,
        p_alpha_star: 0.0,
        p_e_star: p_e_ns,
        p_e_ns,
        method: SolveMethod::Numeric,
    };
    if eta == 0.0 {
        return Ok(never);
    }
    let f = |a: f64| analytic_p_e(source, ChainPolicy::RandomizedStationary { p_alpha: a }, p_s);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0, eta);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    while hi - lo > GOLDEN_TOL {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2)?;
        }
    }
    let mid = 0.5 * (lo + hi);
    let mut best = (mid, f(mid)?);
    let at_budget = f(eta)?;
    if at_budget <= best.1 {
        best = (eta, at_budget);
    }
    if best.1 < p_e_ns {
        Ok(Problem1Solution {
            decision: Problem1Decision::SampleWithProbability,
            p_alpha_star: best.0,
            p_e_star: best.1,
            p_e_ns,
            method: SolveMethod::Numeric,
        })
    } else {
        Ok(never)
    }
}

/// Dispatch to the closed form when one exists.
pub fn solve_problem1(
    source: &SourceModel,
    p_s: f64,
    budget: Budget,
    xhat0: usize,
) -> Result<Problem1Solution> {
    match (source.kind(), source.n_states()) {
        (SourceKind::Dtmc, 2) => solve_problem1_dtmc(source.p(), p_s, budget),
        (SourceKind::Bdmp, 2) => solve_problem1_bdmp(source.p(), source.q(), p_s, budget, xhat0),
        _ => solve_problem1_numeric(source, p_s, budget, xhat0),
    }
}

/// Streak chain of the wait-then-generate policy with threshold `n`.
///
/// Below `n` the sampler idles and a streak extends with probability
/// `p_ns`; from `n` on it samples each slot and a streak extends with
/// probability `p_as`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WtgChain {
    pub n: u64,
    pub p_ns: f64,
    pub p_as: f64,
    pub pi0: f64,
    pub c_bar: f64,
    pub sampling_fraction: f64,
}

impl WtgChain {
    /// Stationary probability of streak length `k`.
    pub fn pi(&self, k: u64) -> f64 {
        if k < self.n {
            pow(self.p_ns, k) * self.pi0
        } else {
            pow(self.p_as, k - self.n) * pow(self.p_ns, self.n) * self.pi0
        }
    }
}

fn pow(base: f64, exp: u64) -> f64 {
    if exp > i32::MAX as u64 {
        return base.powf(exp as f64);
    }
    base.powi(exp as i32)
}

pub fn wtg_chain(n: u64, p_ns: f64, p_as: f64) -> Result<WtgChain> {
    check_probability("p_ns", p_ns)?;
    check_probability("p_as", p_as)?;
    if p_ns == 1.0 {
        return Err(Error::Divergence("idle streaks never end at p_ns = 1".into()));
    }
    if p_as == 1.0 {
        return Err(Error::Divergence("sampled streaks never end at p_as = 1".into()));
    }
    let nf = n as f64;
    let pn = pow(p_ns, n);
    let pn1 = pn * p_ns;
    let tail = pn / (1.0 - p_as);
    let pi0 = 1.0 / (1.0 + (p_ns - pn) / (1.0 - p_ns) + tail);
    let head = (p_ns - pn1 - nf * pn + nf * pn1) / (1.0 - p_ns).powi(2);
    let rest = pn * (nf + p_as - nf * p_as) / (1.0 - p_as).powi(2);
    Ok(WtgChain {
        n,
        p_ns,
        p_as,
        pi0,
        c_bar: (head + rest) * pi0,
        sampling_fraction: tail * pi0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Problem2Decision {
    WaitThenGenerate,
    /// Sampling cannot shorten streaks when `p_as >= p_ns`.
    NeverSample,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Problem2Solution {
    pub decision: Problem2Decision,
    /// `None` for the never-sample decision.
    pub n_star: Option<u64>,
    /// Unrounded logarithm before the ceiling and the clamp at 0.
    pub n_raw: f64,
    pub c_bar: f64,
    pub pi0: f64,
    pub sampling_fraction: f64,
}

/// Smallest threshold whose sampling fraction fits the budget; the mean
/// streak grows with the threshold, so this is also the optimum.
pub fn solve_problem2(p_ns: f64, p_as: f64, budget: Budget) -> Result<Problem2Solution> {
    check_probability("p_ns", p_ns)?;
    check_probability("p_as", p_as)?;
    if p_ns == 1.0 {
        return Err(Error::Divergence("idle streaks never end at p_ns = 1".into()));
    }
    let eta = budget.eta();
    if p_as >= p_ns || eta == 0.0 {
        return Ok(Problem2Solution {
            decision: Problem2Decision::NeverSample,
            n_star: None,
            n_raw: f64::NAN,
            c_bar: p_ns / (1.0 - p_ns),
            pi0: 1.0 - p_ns,
            sampling_fraction: 0.0,
        });
    }
    let arg = eta * (1.0 - p_as) / (1.0 - (1.0 - eta) * p_ns - eta * p_as);
    let n_raw = if p_ns == 0.0 {
        // Every streak ends before the sampler would wake; any threshold
        // of at least 1 costs nothing.
        if arg >= 1.0 {
            0.0
        } else {
            1.0
        }
    } else {
        arg.ln() / p_ns.ln()
    };
    let fits = |n: u64| -> Result<bool> { Ok(wtg_chain(n, p_ns, p_as)?.sampling_fraction <= eta) };
    let mut n = if n_raw.is_finite() && n_raw > 0.0 { n_raw.ceil() as u64 } else { 0 };
    // Rounding near an integer logarithm can put the ceiling one off.
    while n > 0 && fits(n - 1)? {
        n -= 1;
    }
    while !fits(n)? {
        n += 1;
    }
    let chain = wtg_chain(n, p_ns, p_as)?;
    Ok(Problem2Solution {
        decision: Problem2Decision::WaitThenGenerate,
        n_star: Some(n),
        n_raw,
        c_bar: chain.c_bar,
        pi0: chain.pi0,
        sampling_fraction: chain.sampling_fraction,
    })
}

/// Problem 2 for a concrete source, starting from reconstruction `xhat0`.
pub fn solve_problem2_for_source(
    source: &SourceModel,
    p_s: f64,
    budget: Budget,
    xhat0: usize,
) -> Result<Problem2Solution> {
    solve_problem2(p_ns(source, xhat0)?, p_as(source, p_s)?, budget)
}
