//! Closed-form joint stationary laws for two- and three-state sources.
//!
//! Randomized-stationary and semantics-aware share one form in the
//! effective per-slot correction probability `h`: `h = p_alpha p_s` for the
//! former and `h = p_s` for the latter.

use nalgebra::DMatrix;

use super::joint::ChainPolicy;
use crate::error::{check_probability, Error, Result};
use crate::sources::{SourceKind, SourceModel};

/// Joint law `π[x][x̂]` in closed form.
///
/// Covers DTMC and BDMP sources with two or three states under the three
/// chain policies. Other cases return [`Error::Unsupported`]; use
/// [`super::build_joint_chain`] and its stationary solve instead.
pub fn joint_stationary_closed_form(
    source: &SourceModel,
    policy: ChainPolicy,
    p_s: f64,
) -> Result<DMatrix<f64>> {
    policy.validate()?;
    check_probability("p_s", p_s)?;
    let n = source.n_states();
    let (p, q) = (source.p(), source.q());
    let h = match policy {
        ChainPolicy::RandomizedStationary { p_alpha } => Some(p_alpha * p_s),
        ChainPolicy::SemanticsAware => Some(p_s),
        ChainPolicy::ChangeAware => None,
    };
    let pi = match (source.kind(), n, h) {
        (SourceKind::Dtmc, 2, Some(h)) => dtmc2_corrective(p, h),
        (SourceKind::Dtmc, 2, None) => dtmc2_change_aware(p_s),
        (SourceKind::Dtmc, 3, Some(h)) => dtmc3_corrective(p, h),
        (SourceKind::Dtmc, 3, None) => dtmc3_change_aware(p_s),
        (SourceKind::Bdmp, 2, Some(h)) => bdmp2_corrective(p, q, h),
        (SourceKind::Bdmp, 2, None) => bdmp2_change_aware(p, q, p_s),
        (SourceKind::Bdmp, 3, Some(h)) => bdmp3_corrective(p, q, h),
        (SourceKind::Bdmp, 3, None) => bdmp3_change_aware(p, q, p_s),
        (kind, n, _) => {
            return Err(Error::Unsupported(format!(
                "no closed form for a {n}-state {kind:?} source; use the joint-chain solve"
            )))
        }
    };
    if pi.iter().any(|v| !v.is_finite()) {
        return Err(Error::Degenerate(format!(
            "closed form has a vanishing denominator at p = {p}, q = {q}, p_s = {p_s}"
        )));
    }
    Ok(pi)
}

fn symmetric(n: usize, diag: f64, off: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| if i == j { diag } else { off })
}

fn dtmc2_corrective(p: f64, h: f64) -> DMatrix<f64> {
    let den = 4.0 * p + 2.0 * h - 4.0 * p * h;
    symmetric(2, (p + (1.0 - p) * h) / den, p * (1.0 - h) / den)
}

fn dtmc2_change_aware(ps: f64) -> DMatrix<f64> {
    let den = 4.0 - 2.0 * ps;
    symmetric(2, 1.0 / den, (1.0 - ps) / den)
}

fn dtmc3_corrective(p: f64, h: f64) -> DMatrix<f64> {
    let den = 9.0 * p + 3.0 * h - 9.0 * p * h;
    symmetric(3, (p + h - p * h) / den, (p - p * h) / den)
}

/// The off-diagonal mass `(1 - p_s)/(9 - 3 p_s)` is matched by the diagonal
/// that normalizes it, `(1 + p_s)/(9 - 3 p_s)`.
fn dtmc3_change_aware(ps: f64) -> DMatrix<f64> {
    let off = (1.0 - ps) / (9.0 - 3.0 * ps);
    symmetric(3, (1.0 - 6.0 * off) / 3.0, off)
}

fn bdmp2_corrective(p: f64, q: f64, h: f64) -> DMatrix<f64> {
    let den = (p + q) * (p * (1.0 - h) + q + (1.0 - q) * h);
    let off = p * q * (1.0 - h) / den;
    DMatrix::from_row_slice(
        2,
        2,
        &[q * (q + (1.0 - q) * h) / den, off, off, p * (p + (1.0 - p) * h) / den],
    )
}

fn bdmp2_change_aware(p: f64, q: f64, ps: f64) -> DMatrix<f64> {
    let den = (p + q) * (2.0 - ps);
    DMatrix::from_row_slice(2, 2, &[q / den, q * (1.0 - ps) / den, p * (1.0 - ps) / den, p / den])
}

/// Three-state birth-death law; `π₀₀` mirrors `π₂₂` under `p ↔ q`, the
/// symmetry the normalizer `I` and the remaining entries already carry.
fn bdmp3_corrective(p: f64, q: f64, h: f64) -> DMatrix<f64> {
    let g = 1.0 - h;
    let up = q + (1.0 - q) * h;
    let down = p + (1.0 - p) * h;
    let i = (p * p + p * q + q * q) * (p * g * (q + (2.0 - q) * h) + up * up + p * p * g * g);
    let p00 = q * q * (2.0 * q * h * g + q * q * g * g + h * down) / i;
    let p01 = p * q * q * g * up / i;
    let p11 = p * q * (h + p * g) * up / i;
    let p02 = p * p * q * q * g * g / i;
    let p12 = p * p * q * g * down / i;
    let p22 = p * p * (2.0 * p * h * g + p * p * g * g + h * up) / i;
    DMatrix::from_row_slice(3, 3, &[p00, p01, p02, p01, p11, p12, p02, p12, p22])
}

fn bdmp3_change_aware(p: f64, q: f64, ps: f64) -> DMatrix<f64> {
    let s = p * p + p * q + q * q;
    let d = (2.0 - ps) * s;
    let e = (p + q) * d;
    let f = 1.0 - ps;
    DMatrix::from_row_slice(
        3,
        3,
        &[
            q * q * (q + p * ps * (2.0 - ps)) / e,
            q * q * f / d,
            p * q * q * f * f / e,
            p * q * q * f / e,
            p * q / d,
            p * p * q * f / e,
            p * p * q * f * f / e,
            p * p * f / d,
            p * p * (p + q * ps * (2.0 - ps)) / e,
        ],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_state_corrective_value() {
        let src = SourceModel::dtmc(2, 0.3).unwrap();
        let pi = joint_stationary_closed_form(
            &src,
            ChainPolicy::RandomizedStationary { p_alpha: 0.7 },
            0.8,
        )
        .unwrap();
        assert!((pi[(0, 1)] - 0.3 * 0.44 / (1.2 + 1.12 - 0.672)).abs() < 1e-15);
        assert!((pi[(0, 1)] - 0.080097).abs() < 1e-6);
    }

    #[test]
    fn bdmp_two_state_change_aware_symmetric_case() {
        let src = SourceModel::bdmp(2, 0.25, 0.25).unwrap();
        let pi = joint_stationary_closed_form(&src, ChainPolicy::ChangeAware, 0.6).unwrap();
        assert!((pi[(0, 0)] - 1.0 / (2.0 * (2.0 - 0.6))).abs() < 1e-15);
    }

    #[test]
    fn every_case_normalizes() {
        let sources = [
            SourceModel::dtmc(2, 0.3).unwrap(),
            SourceModel::dtmc(3, 0.2).unwrap(),
            SourceModel::bdmp(2, 0.6, 0.5).unwrap(),
            SourceModel::bdmp(3, 0.2, 0.35).unwrap(),
        ];
        let policies = [
            ChainPolicy::RandomizedStationary { p_alpha: 0.45 },
            ChainPolicy::ChangeAware,
            ChainPolicy::SemanticsAware,
        ];
        for s in &sources {
            for pol in policies {
                let pi = joint_stationary_closed_form(s, pol, 0.7).unwrap();
                assert!((pi.sum() - 1.0).abs() < 1e-12, "{s:?} {pol:?}");
                assert!(pi.iter().all(|v| *v >= 0.0));
            }
        }
    }

    #[test]
    fn unsupported_and_degenerate() {
        let four = SourceModel::dtmc(4, 0.1).unwrap();
        assert!(matches!(
            joint_stationary_closed_form(&four, ChainPolicy::ChangeAware, 0.5),
            Err(Error::Unsupported(_))
        ));
        let frozen = SourceModel::bdmp(2, 0.0, 0.0).unwrap();
        assert!(matches!(
            joint_stationary_closed_form(&frozen, ChainPolicy::ChangeAware, 0.5),
            Err(Error::Degenerate(_))
        ));
    }
}
