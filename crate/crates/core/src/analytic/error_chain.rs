//! Transition law of the error level `E_t = |X_t - X̂_t|` under
//! randomized-stationary sampling.
//!
//! The symmetric DTMC source gives entries that depend only on `(N, p,
//! p_alpha, p_s)`. For birth-death sources each row mixes the joint law
//! `π[n][n ± i]` over the pairs at level `i`.

use nalgebra::{DMatrix, DVector};

use super::closed_form::joint_stationary_closed_form;
use super::joint::{build_joint_chain, stationary, ChainPolicy};
use crate::error::{check_probability, Error, Result};
use crate::sources::{SourceKind, SourceModel};

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorChain {
    kind: SourceKind,
    matrix: DMatrix<f64>,
}

/// Per-slot sampling outcome probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplingChannelFactors {
    /// Sampled and lost.
    pub h0: f64,
    /// Sampled and delivered.
    pub h1: f64,
    /// Not sampled.
    pub idle: f64,
}

impl SamplingChannelFactors {
    pub fn new(p_alpha: f64, p_s: f64) -> Result<Self> {
        check_probability("p_alpha", p_alpha)?;
        check_probability("p_s", p_s)?;
        Ok(Self { h0: p_alpha * (1.0 - p_s), h1: p_alpha * p_s, idle: 1.0 - p_alpha })
    }

    /// Probability that the reconstruction is not refreshed in a slot.
    pub fn no_fix(&self) -> f64 {
        self.h0 + self.idle
    }
}

impl ErrorChain {
    pub fn source_kind(&self) -> SourceKind {
        self.kind
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn stationary(&self) -> Result<DVector<f64>> {
        stationary(&self.matrix)
    }

    /// `1 - Pr[E = 0]` from the chain's stationary law.
    pub fn p_e(&self) -> Result<f64> {
        Ok(1.0 - self.stationary()?[0])
    }
}

pub fn error_chain(source: &SourceModel, p_alpha: f64, p_s: f64) -> Result<ErrorChain> {
    let f = SamplingChannelFactors::new(p_alpha, p_s)?;
    let matrix = match source.kind() {
        SourceKind::Dtmc => dtmc_catalog(source.n_states(), source.p(), source.q(), &f),
        SourceKind::Bdmp => {
            let policy = ChainPolicy::RandomizedStationary { p_alpha };
            let pi = match joint_stationary_closed_form(source, policy, p_s) {
                Ok(pi) => pi,
                Err(Error::Unsupported(_)) | Err(Error::Degenerate(_)) => {
                    build_joint_chain(source, policy, p_s)?.stationary()?
                }
                Err(e) => return Err(e),
            };
            bdmp_catalog(source.n_states(), source.p(), source.q(), &f, &pi)
        }
    };
    Ok(ErrorChain { kind: source.kind(), matrix })
}

fn dtmc_catalog(n: usize, p: f64, q: f64, f: &SamplingChannelFactors) -> DMatrix<f64> {
    let nf = n as f64;
    let g = p * f.no_fix();
    let stay = q * f.no_fix();
    DMatrix::from_fn(n, n, |i, j| {
        let (fi, fj) = (i as f64, j as f64);
        match (i, j) {
            (0, 0) => q + (nf - 1.0) * p * f.h1,
            (_, 0) => p + q * f.h1 + (nf - 2.0) * p * f.h1,
            (0, _) => 2.0 * (1.0 - fj / nf) * g,
            _ if i == j => {
                if 2 * i < n {
                    (nf - 2.0 * fi) / (nf - fi) * g + stay
                } else {
                    stay
                }
            }
            (1, _) => (2.0 * nf - 2.0 * fj - 1.0) / (nf - 1.0) * g,
            (_, 1) => (2.0 * nf - 2.0 * fi - 1.0) / (nf - fi) * g,
            _ if j > i => {
                if n >= i + j {
                    (2.0 * nf - fi - 2.0 * fj) / (nf - fi) * g
                } else if j < n {
                    (nf - fj) / (nf - fi) * g
                } else {
                    0.0
                }
            }
            _ => {
                if n >= i + j {
                    (2.0 * nf - fj - 2.0 * fi) / (nf - fi) * g
                } else if i < n {
                    g
                } else {
                    0.0
                }
            }
        }
    })
}

/// `π[n][n ± i]` rescaled within each level; levels with no mass are
/// weighted uniformly so that their rows remain a valid law.
fn level_weights(pi: &DMatrix<f64>) -> DMatrix<f64> {
    let n = pi.nrows();
    let mut mass = vec![0.0; n];
    let mut count = vec![0usize; n];
    for a in 0..n {
        for b in 0..n {
            mass[a.abs_diff(b)] += pi[(a, b)];
            count[a.abs_diff(b)] += 1;
        }
    }
    DMatrix::from_fn(n, n, |a, b| {
        let l = a.abs_diff(b);
        if mass[l] > 0.0 {
            pi[(a, b)] / mass[l]
        } else {
            1.0 / count[l] as f64
        }
    })
}

fn bdmp_catalog(
    n: usize,
    p: f64,
    q: f64,
    f: &SamplingChannelFactors,
    pi: &DMatrix<f64>,
) -> DMatrix<f64> {
    let w = level_weights(pi);
    let at = |a: isize, b: isize| -> f64 {
        if a >= 0 && b >= 0 && (a as usize) < n && (b as usize) < n {
            w[(a as usize, b as usize)]
        } else {
            0.0
        }
    };
    let last = n - 1;
    let interior = 1..last;
    let h1 = f.h1;
    let nf = f.no_fix();
    let r = 1.0 - p - q;
    let mut m = DMatrix::zeros(n, n);

    m[(0, 0)] = (1.0 - p + p * h1) * w[(0, 0)]
        + interior.clone().map(|k| (r + (p + q) * h1) * w[(k, k)]).sum::<f64>()
        + (1.0 - q + q * h1) * w[(last, last)];
    m[(0, 1)] = p * nf * w[(0, 0)]
        + interior.clone().map(|k| (p + q) * nf * w[(k, k)]).sum::<f64>()
        + q * nf * w[(last, last)];

    m[(1, 0)] = interior
        .clone()
        .map(|k| {
            let k = k as isize;
            (q + r * h1 + p * h1) * at(k, k - 1) + (p + r * h1 + q * h1) * at(k, k + 1)
        })
        .sum::<f64>()
        + (p + (1.0 - p) * h1) * w[(0, 1)]
        + (q + (1.0 - q) * h1) * w[(last, last - 1)];

    // Mass of level i at interior source states, split by the side the
    // reconstruction is on.
    let interior_mass = |i: isize| -> f64 {
        interior
            .clone()
            .map(|k| {
                let k = k as isize;
                at(k, k - i) + at(k, k + i)
            })
            .sum()
    };

    for i in 2..n {
        let ii = i as isize;
        let f1 = if n >= i + 2 { h1 * interior_mass(ii) } else { 0.0 };
        m[(i, 0)] = h1 * w[(0, i)] + h1 * w[(last, last - i)] + f1;
        m[(i, i - 1)] = (0..n)
            .map(|k| {
                let k = k as isize;
                q * nf * at(k, k - ii) + p * nf * at(k, k + ii)
            })
            .sum();
    }
    for i in 1..n {
        let ii = i as isize;
        if i + 2 <= n {
            m[(i, i + 1)] = interior
                .clone()
                .map(|k| {
                    let k = k as isize;
                    p * nf * at(k, k - ii) + q * nf * at(k, k + ii)
                })
                .sum();
        }
        let f2 = if n >= i + 2 { r * nf * interior_mass(ii) } else { 0.0 };
        m[(i, i)] = (1.0 - p) * nf * w[(0, i)] + (1.0 - q) * nf * w[(last, last - i)] + f2;
    }
    m
}

/// Stationary error probability of a three-level chain from its entries.
pub fn three_state_p_e(chain: &DMatrix<f64>) -> Result<f64> {
    if chain.nrows() != 3 || chain.ncols() != 3 {
        return Err(Error::Dimension(format!(
            "three-level formula needs a 3x3 chain, got {}x{}",
            chain.nrows(),
            chain.ncols()
        )));
    }
    let p = |i, j| chain[(i, j)];
    let phi = 1.0 + p(2, 1) - p(1, 1) - p(0, 0) - p(0, 0) * p(2, 1)
        + p(0, 0) * p(1, 1)
        + p(0, 1) * p(2, 0)
        - p(0, 1) * p(1, 0);
    Ok(phi / (phi + p(2, 0) - p(2, 0) * p(1, 1) + p(1, 0) * p(2, 1)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factors_partition_unity() {
        let f = SamplingChannelFactors::new(0.7, 0.922).unwrap();
        assert!((f.h0 + f.h1 + f.idle - 1.0).abs() < 1e-12);
        assert!(SamplingChannelFactors::new(1.1, 0.5).is_err());
    }

    #[test]
    fn sync_probability_three_state() {
        let src = SourceModel::dtmc(3, 0.1).unwrap();
        let c = error_chain(&src, 0.7, 0.922).unwrap();
        assert!((c.matrix()[(0, 0)] - (0.8 + 2.0 * 0.1 * 0.6454)).abs() < 1e-12);
        assert!((c.matrix()[(0, 0)] - 0.9291).abs() < 1e-4);
    }

    #[test]
    fn no_sampling_keeps_only_frozen_sync() {
        let src = SourceModel::dtmc(4, 0.2).unwrap();
        let c = error_chain(&src, 0.0, 0.9).unwrap();
        assert!((c.matrix()[(0, 0)] - src.q()).abs() < 1e-15);
    }

    #[test]
    fn rows_are_stochastic() {
        for n in 2..8 {
            let src = SourceModel::dtmc(n, 0.7 / (n - 1) as f64).unwrap();
            let c = error_chain(&src, 0.55, 0.65).unwrap();
            for r in 0..n {
                assert!((c.matrix().row(r).sum() - 1.0).abs() < 1e-10, "dtmc n={n} row {r}");
            }
            let src = SourceModel::bdmp(n, 0.3, 0.45).unwrap();
            let c = error_chain(&src, 0.55, 0.65).unwrap();
            for r in 0..n {
                assert!((c.matrix().row(r).sum() - 1.0).abs() < 1e-10, "bdmp n={n} row {r}");
            }
        }
    }

    #[test]
    fn perfect_sampling_bdmp_rows_stay_valid() {
        let src = SourceModel::bdmp(4, 0.2, 0.3).unwrap();
        let c = error_chain(&src, 1.0, 1.0).unwrap();
        for r in 0..4 {
            assert!((c.matrix().row(r).sum() - 1.0).abs() < 1e-10);
        }
        assert!(c.p_e().unwrap().abs() < 1e-12);
    }

    #[test]
    fn three_level_formula_dimension() {
        assert!(three_state_p_e(&DMatrix::identity(2, 2)).is_err());
    }
}
