//! Sampling and transmission rules.
//!
//! Each slot the engine builds a [`DecisionContext`] after the source has
//! moved and asks the policy whether to sample. Sampling and transmission
//! are coupled: a generated sample is sent in the same slot.

use crate::error::{check_probability, Error, Result};
use crate::sources::{SourceKind, SourceModel};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PolicySpec {
    /// Sample at slots `d, 2d, 3d, ...`.
    Uniform { period: u64 },
    /// Sample when the source changed since the previous slot.
    ChangeAware,
    /// Sample when the source differs from the receiver's reconstruction.
    SemanticsAware,
    /// Sample independently with probability `p_alpha` each slot.
    RandomizedStationary { p_alpha: f64 },
    /// Stay idle until the error streak reaches `threshold`, then sample
    /// every slot until resynchronized.
    WaitThenGenerate { threshold: u64 },
}

/// Inputs to one sampling decision at slot `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionContext {
    pub t: u64,
    pub x_new: usize,
    pub x_prev: usize,
    /// Reconstruction entering the slot.
    pub x_hat: usize,
    /// Consecutive erroneous slots entering the slot.
    pub streak: u64,
    pub rand: f64,
}

impl PolicySpec {
    pub fn uniform(period: u64) -> Result<Self> {
        let p = PolicySpec::Uniform { period };
        p.validate()?;
        Ok(p)
    }

    pub fn randomized(p_alpha: f64) -> Result<Self> {
        let p = PolicySpec::RandomizedStationary { p_alpha };
        p.validate()?;
        Ok(p)
    }

    pub fn wait_then_generate(threshold: u64) -> Self {
        PolicySpec::WaitThenGenerate { threshold }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PolicySpec::Uniform { period: 0 } => {
                Err(Error::Parameter("uniform period must be >= 1".into()))
            }
            PolicySpec::RandomizedStationary { p_alpha } => check_probability("p_alpha", p_alpha),
            _ => Ok(()),
        }
    }

    /// Short machine name used in configs and CSV output.
    pub fn name(&self) -> &'static str {
        match self {
            PolicySpec::Uniform { .. } => "uniform",
            PolicySpec::ChangeAware => "change_aware",
            PolicySpec::SemanticsAware => "semantics_aware",
            PolicySpec::RandomizedStationary { .. } => "rs",
            PolicySpec::WaitThenGenerate { .. } => "wtg",
        }
    }

    /// Whether the rule consumes `ctx.rand`.
    pub fn uses_randomness(&self) -> bool {
        matches!(self, PolicySpec::RandomizedStationary { .. })
    }

    pub fn decide(&self, ctx: &DecisionContext) -> bool {
        match *self {
            PolicySpec::Uniform { period } => ctx.t.is_multiple_of(period),
            PolicySpec::ChangeAware => ctx.x_new != ctx.x_prev,
            PolicySpec::SemanticsAware => ctx.x_new != ctx.x_hat,
            PolicySpec::RandomizedStationary { p_alpha } => ctx.rand < p_alpha,
            PolicySpec::WaitThenGenerate { threshold } => ctx.streak >= threshold,
        }
    }
}

/// Long-run sampling probability per slot for the event-triggered rules on
/// a two-state source.
pub fn sampling_rate_closed_form(
    policy: &PolicySpec,
    source: &SourceModel,
    p_s: f64,
) -> Result<f64> {
    if source.n_states() != 2 {
        return Err(Error::Unsupported(format!(
            "closed-form sampling rate needs N = 2, got N = {}",
            source.n_states()
        )));
    }
    let (p, q) = (source.p(), source.q());
    match (policy, source.kind()) {
        (PolicySpec::ChangeAware, SourceKind::Dtmc) => Ok(p),
        (PolicySpec::ChangeAware, SourceKind::Bdmp) => {
            if p + q == 0.0 {
                return Ok(0.0);
            }
            Ok(2.0 * p * q / (p + q))
        }
        (PolicySpec::SemanticsAware, SourceKind::Dtmc) => {
            let den = 4.0 * p + 2.0 * p_s - 4.0 * p * p_s;
            if den == 0.0 {
                return Ok(0.0);
            }
            Ok(2.0 * p / den)
        }
        (PolicySpec::SemanticsAware, SourceKind::Bdmp) => {
            let den = (p + q) * (p * (1.0 - p_s) + q + p_s * (1.0 - q));
            if den == 0.0 {
                return Ok(0.0);
            }
            Ok(2.0 * p * q / den)
        }
        (other, _) => Err(Error::Unsupported(format!(
            "no closed-form sampling rate for policy {}",
            other.name()
        ))),
    }
}
