//! Exact evaluation of the tracking metrics for the randomized-stationary,
//! change-aware and semantics-aware policies.
//!
//! Every joint law has two routes: a closed form for two- and three-state
//! sources ([`joint_stationary_closed_form`]) and the numeric stationary
//! solve of the N²-state joint chain ([`build_joint_chain`]). The metric
//! functions prefer the closed form and fall back to the chain.

mod closed_form;
mod error_chain;
mod joint;

pub use closed_form::joint_stationary_closed_form;
pub use error_chain::{error_chain, three_state_p_e, ErrorChain, SamplingChannelFactors};
pub use joint::{
    build_joint_chain, stationary, stationary_from, stationary_residual, ChainPolicy, JointChain,
};

use nalgebra::DMatrix;

use crate::engine::{validate_cost_matrix, SimConfig};
use crate::error::{check_probability, Error, Result};
use crate::sources::SourceModel;

/// Where a joint law came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ClosedForm,
    JointChain,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::ClosedForm => "closed_form",
            Method::JointChain => "joint_chain",
        }
    }
}

/// Joint law `π[x][x̂]`, closed form when available.
pub fn joint_stationary(
    source: &SourceModel,
    policy: ChainPolicy,
    p_s: f64,
) -> Result<(DMatrix<f64>, Method)> {
    match joint_stationary_closed_form(source, policy, p_s) {
        Ok(pi) => Ok((pi, Method::ClosedForm)),
        Err(Error::Unsupported(_)) | Err(Error::Degenerate(_)) => {
            let pi = build_joint_chain(source, policy, p_s)?.stationary()?;
            Ok((pi, Method::JointChain))
        }
        Err(e) => Err(e),
    }
}

/// Off-diagonal mass of a joint law.
pub fn error_probability(pi: &DMatrix<f64>) -> f64 {
    let off: f64 = (0..pi.nrows())
        .flat_map(|i| (0..pi.ncols()).map(move |j| (i, j)))
        .filter(|(i, j)| i != j)
        .map(|(i, j)| pi[(i, j)])
        .sum();
    off.clamp(0.0, 1.0)
}

/// Time-averaged reconstruction error.
pub fn p_e(source: &SourceModel, policy: ChainPolicy, p_s: f64) -> Result<f64> {
    joint_stationary(source, policy, p_s).map(|(pi, _)| error_probability(&pi))
}

/// Variance of the error indicator.
pub fn variance(p_e: f64) -> Result<f64> {
    check_probability("p_e", p_e)?;
    Ok(p_e - p_e * p_e)
}

/// `Σ_{i≠j} C[i][j] π[i][j]`.
pub fn actuation_cost(pi: &DMatrix<f64>, cost: &DMatrix<f64>) -> Result<f64> {
    if pi.nrows() != pi.ncols() {
        return Err(Error::Dimension(format!("joint law is {}x{}", pi.nrows(), pi.ncols())));
    }
    validate_cost_matrix(cost, pi.nrows())?;
    Ok(pi.component_mul(cost).sum())
}

fn check_error_probability(p_e: f64) -> Result<()> {
    check_probability("p_e", p_e)?;
    if p_e == 1.0 {
        return Err(Error::Divergence("error streaks never end at p_e = 1".into()));
    }
    Ok(())
}

/// Mean streak length `P_E / (1 - P_E)` of the geometric streak chain.
pub fn consecutive_error(p_e: f64) -> Result<f64> {
    check_error_probability(p_e)?;
    Ok(p_e / (1.0 - p_e))
}

/// `Σ_{x=1}^{n} κ^x (1 - P_E) P_E^x` for the geometric streak chain.
pub fn memory_cost(p_e: f64, kappa: f64, n: u32) -> Result<f64> {
    check_error_probability(p_e)?;
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(Error::Parameter(format!("kappa = {kappa} must be positive")));
    }
    let r = kappa * p_e;
    let sum = if (r - 1.0).abs() < 1e-12 {
        n as f64 * r
    } else {
        r * (1.0 - r.powi(n as i32)) / (1.0 - r)
    };
    Ok((1.0 - p_e) * sum)
}

/// Long-run fraction of slots with a sample, from the joint chain.
pub fn sampling_rate(source: &SourceModel, policy: ChainPolicy, p_s: f64) -> Result<f64> {
    let (pi, _) = joint_stationary(source, policy, p_s)?;
    Ok(sampling_rate_from(source, policy, &pi))
}

fn sampling_rate_from(source: &SourceModel, policy: ChainPolicy, pi: &DMatrix<f64>) -> f64 {
    let n = source.n_states();
    let mut rate = 0.0;
    for i in 0..n {
        for j in 0..n {
            let fire: f64 = (0..n)
                .map(|k| source.prob(i, k) * policy.fire_probability(i, j, k))
                .sum();
            rate += pi[(i, j)] * fire;
        }
    }
    rate
}

/// Analytic counterpart of [`crate::engine::MetricsReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticReport {
    pub p_e: f64,
    pub variance: f64,
    pub actuation_cost: f64,
    pub consecutive_error: f64,
    pub memory_cost: f64,
    pub sampling_rate: f64,
    pub sampling_cost: f64,
    pub joint: DMatrix<f64>,
    pub method: Method,
}

impl AnalyticReport {
    pub fn scalars(&self) -> crate::engine::Scalars {
        crate::engine::Scalars {
            p_e: self.p_e,
            variance: self.variance,
            actuation_cost: self.actuation_cost,
            consecutive_error: self.consecutive_error,
            memory_cost: self.memory_cost,
            sampling_rate: self.sampling_rate,
            sampling_cost: self.sampling_cost,
        }
    }
}

/// Evaluate every metric for a simulation config analytically.
///
/// Streak metrics assume the geometric streak chain; if `p_e = 1` they are
/// reported as infinite.
pub fn analyze(cfg: &SimConfig) -> Result<AnalyticReport> {
    cfg.validate()?;
    let policy = ChainPolicy::try_from(cfg.policy)?;
    let p_s = cfg.channel.success_probability();
    let (pi, method) = joint_stationary(&cfg.source, policy, p_s)?;
    let pe = error_probability(&pi);
    let rate = sampling_rate_from(&cfg.source, policy, &pi);
    let (ce, mc) = match (consecutive_error(pe), memory_cost(pe, cfg.kappa, cfg.mem_n)) {
        (Ok(c), Ok(m)) => (c, m),
        (Err(Error::Divergence(_)), _) => (f64::INFINITY, f64::INFINITY),
        (Err(e), _) | (_, Err(e)) => return Err(e),
    };
    Ok(AnalyticReport {
        p_e: pe,
        variance: variance(pe)?,
        actuation_cost: actuation_cost(&pi, &cfg.resolved_cost_matrix())?,
        consecutive_error: ce,
        memory_cost: mc,
        sampling_rate: rate,
        sampling_cost: cfg.delta * rate,
        joint: pi,
        method,
    })
}

/// Policy-crossing points in `p_alpha` for a three-state DTMC source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Remark1Thresholds {
    /// Randomized sampling has lower error than change-aware from here up.
    pub rs_error_below_ca_from: f64,
    /// Randomized sampling has lower error variance than semantics-aware
    /// on `(0, this]`.
    pub rs_variance_below_sa_upto: f64,
    /// Randomized sampling has lower error variance than change-aware on
    /// `[this, 1)`.
    pub rs_variance_below_ca_from: f64,
}

/// The three closed-form thresholds, evaluated as stated. A fourth relation
/// carries no threshold: randomized sampling has higher error than
/// semantics-aware at every `p_alpha < 1`.
pub fn remark1_thresholds(p: f64, p_s: f64) -> Result<Remark1Thresholds> {
    check_probability("p_s", p_s)?;
    if !(p.is_finite() && p > 0.0 && p <= 0.5) {
        return Err(Error::Parameter(format!("p = {p} outside (0, 1/2] for a 3-state DTMC")));
    }
    Ok(Remark1Thresholds {
        rs_error_below_ca_from: 2.0 * p / (1.0 - p_s * (1.0 - 2.0 * p)),
        rs_variance_below_sa_upto: (p * p_s - 3.0 * p * p * (1.0 - p_s))
            / ((2.0 * p + 3.0 * p * p - 1.0) * p_s * p_s - (p + 3.0 * p * p) * p_s),
        rs_variance_below_ca_from: p * (3.0 + p_s) / (p * p_s * (3.0 + p_s) - 2.0 * p_s),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelSpec;
    use crate::policies::PolicySpec;

    fn rs(p_alpha: f64) -> ChainPolicy {
        ChainPolicy::RandomizedStationary { p_alpha }
    }

    #[test]
    fn two_state_dtmc_error_values() {
        let s = SourceModel::dtmc(2, 0.4).unwrap();
        assert!((p_e(&s, rs(0.5), 0.8).unwrap() - 0.272727).abs() < 1e-6);
        let s = SourceModel::dtmc(2, 0.1).unwrap();
        assert!((p_e(&s, ChainPolicy::SemanticsAware, 0.5).unwrap() - 0.083333).abs() < 1e-6);
        for p in [0.1, 0.3, 0.5] {
            let s = SourceModel::dtmc(2, p).unwrap();
            let ca = p_e(&s, ChainPolicy::ChangeAware, 0.5).unwrap();
            assert!((ca - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn three_state_rs_error_formula() {
        let (p, pa, ps) = (0.15, 0.6, 0.7);
        let s = SourceModel::dtmc(3, p).unwrap();
        let h = pa * ps;
        let expected = 6.0 * (p - p * h) / (9.0 * p + 3.0 * h - 9.0 * p * h);
        assert!((p_e(&s, rs(pa), ps).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn falls_back_to_chain_for_larger_sources() {
        let s = SourceModel::bdmp(5, 0.2, 0.3).unwrap();
        let (_, m) = joint_stationary(&s, ChainPolicy::SemanticsAware, 0.8).unwrap();
        assert_eq!(m, Method::JointChain);
        let s = SourceModel::bdmp(3, 0.2, 0.3).unwrap();
        let (_, m) = joint_stationary(&s, ChainPolicy::SemanticsAware, 0.8).unwrap();
        assert_eq!(m, Method::ClosedForm);
    }

    #[test]
    fn variance_edges() {
        assert_eq!(variance(0.0).unwrap(), 0.0);
        assert_eq!(variance(0.5).unwrap(), 0.25);
        assert!(variance(1.5).is_err());
    }

    #[test]
    fn actuation_cost_edges() {
        let s = SourceModel::dtmc(2, 0.3).unwrap();
        let (pi, _) = joint_stationary(&s, rs(0.7), 0.8).unwrap();
        let ones = DMatrix::from_fn(2, 2, |i, j| f64::from(u8::from(i != j)));
        let pe = error_probability(&pi);
        assert!((actuation_cost(&pi, &ones).unwrap() - pe).abs() < 1e-15);
        assert_eq!(actuation_cost(&pi, &DMatrix::zeros(2, 2)).unwrap(), 0.0);
        let c = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 5.0, 0.0]);
        assert!((actuation_cost(&pi, &c).unwrap() - 6.0 * pi[(0, 1)]).abs() < 1e-15);
        assert!(matches!(actuation_cost(&pi, &DMatrix::zeros(3, 3)), Err(Error::Dimension(_))));
    }

    #[test]
    fn streak_metrics() {
        assert_eq!(consecutive_error(0.0).unwrap(), 0.0);
        assert_eq!(consecutive_error(0.5).unwrap(), 1.0);
        assert_eq!(memory_cost(0.0, 2.0, 10).unwrap(), 0.0);
        assert!(matches!(consecutive_error(1.0), Err(Error::Divergence(_))));
        assert!(matches!(memory_cost(1.0, 2.0, 3), Err(Error::Divergence(_))));
        // Direct sum against the closed form, including the removable
        // singularity at κ P_E = 1.
        for (pe, kappa, n) in [(0.3f64, 2.0f64, 10u32), (0.5, 2.0, 4), (0.25, 4.0, 6), (0.1, 0.5, 3)] {
            let direct: f64 = (1..=n)
                .map(|x| kappa.powi(x as i32) * (1.0 - pe) * pe.powi(x as i32))
                .sum();
            assert!((memory_cost(pe, kappa, n).unwrap() - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn sampling_rate_matches_two_state_closed_forms() {
        use crate::policies::sampling_rate_closed_form;
        let sources = [SourceModel::dtmc(2, 0.3).unwrap(), SourceModel::bdmp(2, 0.2, 0.45).unwrap()];
        for s in &sources {
            for (cp, ps) in [(ChainPolicy::ChangeAware, 0.7), (ChainPolicy::SemanticsAware, 0.7)] {
                let exact = sampling_rate(s, cp, ps).unwrap();
                let closed = sampling_rate_closed_form(&PolicySpec::from(cp), s, ps).unwrap();
                assert!((exact - closed).abs() < 1e-12, "{s:?} {cp:?}");
            }
            assert!((sampling_rate(s, rs(0.35), 0.7).unwrap() - 0.35).abs() < 1e-12);
        }
    }

    #[test]
    fn analyze_bundle() {
        let cfg = SimConfig::new(
            SourceModel::dtmc(3, 0.1).unwrap(),
            ChannelSpec::direct(0.922).unwrap(),
            PolicySpec::SemanticsAware,
        );
        let r = analyze(&cfg).unwrap();
        assert_eq!(r.method, Method::ClosedForm);
        assert!((r.variance - (r.p_e - r.p_e * r.p_e)).abs() < 1e-15);
        assert!((r.consecutive_error - r.p_e / (1.0 - r.p_e)).abs() < 1e-15);
        let mut uni = cfg.clone();
        uni.policy = PolicySpec::Uniform { period: 5 };
        assert!(matches!(analyze(&uni), Err(Error::Unsupported(_))));
    }

    #[test]
    fn perfect_channel_threshold_is_one() {
        let t = remark1_thresholds(0.2, 1.0).unwrap();
        assert!((t.rs_error_below_ca_from - 1.0).abs() < 1e-15);
        assert!(remark1_thresholds(0.6, 0.5).is_err());
    }
}
