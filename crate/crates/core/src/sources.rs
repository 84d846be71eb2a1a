//! Information-source models.
//!
//! Two discrete-time sources are supported, both over states `0..N`:
//!
//! * [`DtmcSource`]: from any state, jump to each of the other `N - 1` states
//!   with probability `p`, stay with `q = 1 - (N - 1) p`.
//! * [`BdmpSource`]: a birth-death chain that moves up with probability `p`
//!   and down with probability `q`; the end states keep the blocked move as a
//!   self-loop.
//!
//! Sources are immutable and hold no RNG state: [`SourceModel::step`] takes
//! the uniform draw as an argument.

use nalgebra::DMatrix;

use crate::error::{check_probability, Error, Result};

/// Slack allowed on the parameter-range checks so that boundary values such
/// as `p = 1/(N-1)` survive floating-point division.
const RANGE_SLACK: f64 = 1e-12;

/// Symmetric N-state chain with uniform jump probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtmcSource {
    n: usize,
    p: f64,
    q: f64,
}

impl DtmcSource {
    pub fn new(n: usize, p: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Parameter(format!("n = {n}, need at least 2 states")));
        }
        let max_p = 1.0 / (n - 1) as f64;
        if !p.is_finite() || p < 0.0 || p > max_p + RANGE_SLACK {
            return Err(Error::Parameter(format!(
                "p = {p} outside [0, {max_p}] for a {n}-state DTMC"
            )));
        }
        let p = p.min(max_p);
        let q = (1.0 - (n - 1) as f64 * p).max(0.0);
        Ok(Self { n, p, q })
    }

    pub fn n_states(&self) -> usize {
        self.n
    }

    /// Probability of jumping to one specific other state.
    pub fn p(&self) -> f64 {
        self.p
    }

    /// Self-transition probability.
    pub fn q(&self) -> f64 {
        self.q
    }
}

/// N-state birth-death chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BdmpSource {
    n: usize,
    p: f64,
    q: f64,
}

impl BdmpSource {
    pub fn new(n: usize, p: f64, q: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Parameter(format!("n = {n}, need at least 2 states")));
        }
        check_probability("p", p)?;
        check_probability("q", q)?;
        if n > 2 && p + q > 1.0 + RANGE_SLACK {
            return Err(Error::Parameter(format!(
                "p + q = {} exceeds 1; interior states need 1 - p - q >= 0",
                p + q
            )));
        }
        Ok(Self { n, p, q })
    }

    pub fn n_states(&self) -> usize {
        self.n
    }

    /// Birth (up-move) probability.
    pub fn p(&self) -> f64 {
        self.p
    }

    /// Death (down-move) probability.
    pub fn q(&self) -> f64 {
        self.q
    }

    /// Stationary law of a two-state birth-death source, `(q, p) / (p + q)`.
    pub fn two_state_marginal(&self) -> Result<[f64; 2]> {
        if self.n != 2 {
            return Err(Error::Unsupported(format!(
                "two-state marginal requested for a {}-state source",
                self.n
            )));
        }
        let total = self.p + self.q;
        if total <= 0.0 {
            return Err(Error::Degenerate("p = q = 0 freezes the source".into()));
        }
        Ok([self.q / total, self.p / total])
    }
}

/// Which family a source belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SourceKind {
    Dtmc,
    Bdmp,
}

impl SourceKind {
    pub fn name(&self) -> &'static str {
        match self {
            SourceKind::Dtmc => "dtmc",
            SourceKind::Bdmp => "bdmp",
        }
    }
}

/// Either of the two source models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SourceModel {
    Dtmc(DtmcSource),
    Bdmp(BdmpSource),
}

impl From<DtmcSource> for SourceModel {
    fn from(s: DtmcSource) -> Self {
        SourceModel::Dtmc(s)
    }
}

impl From<BdmpSource> for SourceModel {
    fn from(s: BdmpSource) -> Self {
        SourceModel::Bdmp(s)
    }
}

impl SourceModel {
    pub fn dtmc(n: usize, p: f64) -> Result<Self> {
        DtmcSource::new(n, p).map(Self::Dtmc)
    }

    pub fn bdmp(n: usize, p: f64, q: f64) -> Result<Self> {
        BdmpSource::new(n, p, q).map(Self::Bdmp)
    }

    pub fn kind(&self) -> SourceKind {
        match self {
            SourceModel::Dtmc(_) => SourceKind::Dtmc,
            SourceModel::Bdmp(_) => SourceKind::Bdmp,
        }
    }

    pub fn n_states(&self) -> usize {
        match self {
            SourceModel::Dtmc(s) => s.n,
            SourceModel::Bdmp(s) => s.n,
        }
    }

    /// The `p` parameter of either model.
    pub fn p(&self) -> f64 {
        match self {
            SourceModel::Dtmc(s) => s.p,
            SourceModel::Bdmp(s) => s.p,
        }
    }

    /// The `q` parameter: self-transition for DTMC, death probability for BDMP.
    pub fn q(&self) -> f64 {
        match self {
            SourceModel::Dtmc(s) => s.q,
            SourceModel::Bdmp(s) => s.q,
        }
    }

    /// One-step transition probability `Pr[X_{t+1} = to | X_t = from]`.
    ///
    /// Indices must be in range; callers inside the crate guarantee this.
    pub fn prob(&self, from: usize, to: usize) -> f64 {
        match self {
            SourceModel::Dtmc(s) => {
                if from == to {
                    s.q
                } else {
                    s.p
                }
            }
            SourceModel::Bdmp(s) => {
                let last = s.n - 1;
                if to == from {
                    match from {
                        0 => 1.0 - s.p,
                        i if i == last => 1.0 - s.q,
                        _ => 1.0 - s.p - s.q,
                    }
                } else if to == from + 1 {
                    s.p
                } else if from > 0 && to == from - 1 {
                    s.q
                } else {
                    0.0
                }
            }
        }
    }

    /// Row-stochastic N×N kernel.
    pub fn transition_matrix(&self) -> DMatrix<f64> {
        let n = self.n_states();
        DMatrix::from_fn(n, n, |i, j| self.prob(i, j))
    }

    /// Advance one slot by inverse-CDF sampling of row `state`.
    ///
    /// Cumulative boundaries are half-open `[lo, hi)` and scanned in
    /// ascending state order, so the result is a deterministic function of
    /// `u`.
    pub fn step(&self, state: usize, u: f64) -> Result<usize> {
        let n = self.n_states();
        if state >= n {
            return Err(Error::StateOutOfRange { state, n });
        }
        Ok(self.step_unchecked(state, u))
    }

    pub(crate) fn step_unchecked(&self, state: usize, u: f64) -> usize {
        match self {
            // Fast path: only three candidate successors.
            SourceModel::Bdmp(s) => {
                let mut hi = 0.0;
                for to in state.saturating_sub(1)..=(state + 1).min(s.n - 1) {
                    hi += self.prob(state, to);
                    if u < hi {
                        return to;
                    }
                }
                self.last_reachable(state)
            }
            SourceModel::Dtmc(_) => {
                let n = self.n_states();
                let mut hi = 0.0;
                for to in 0..n {
                    hi += self.prob(state, to);
                    if u < hi {
                        return to;
                    }
                }
                self.last_reachable(state)
            }
        }
    }

    /// Rounding can leave the final cumulative boundary just below 1; a draw in
    /// that sliver goes to the highest state with positive probability.
    fn last_reachable(&self, state: usize) -> usize {
        (0..self.n_states())
            .rev()
            .find(|&to| self.prob(state, to) > 0.0)
            .unwrap_or(state)
    }

    /// Stationary law of the source alone.
    ///
    /// DTMC sources are doubly stochastic, so the law is uniform. Birth-death
    /// sources satisfy detailed balance `π_{i+1} q = π_i p`.
    pub fn marginal_stationary(&self) -> Result<Vec<f64>> {
        let n = self.n_states();
        match self {
            SourceModel::Dtmc(_) => Ok(vec![1.0 / n as f64; n]),
            SourceModel::Bdmp(s) => {
                if s.p == 0.0 && s.q == 0.0 {
                    return Err(Error::Degenerate("p = q = 0 freezes the source".into()));
                }
                if s.q == 0.0 {
                    let mut v = vec![0.0; n];
                    v[n - 1] = 1.0;
                    return Ok(v);
                }
                let ratio = s.p / s.q;
                let mut w: Vec<f64> = (0..n).map(|i| ratio.powi(i as i32)).collect();
                let total: f64 = w.iter().sum();
                w.iter_mut().for_each(|x| *x /= total);
                Ok(w)
            }
        }
    }
}

/// Stationary law `(q, p)/(p + q)` of a two-state birth-death source.
pub fn bdmp_marginal_stationary(source: &BdmpSource) -> Result<[f64; 2]> {
    source.two_state_marginal()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn dtmc_three_state_kernel() {
        let k = SourceModel::dtmc(3, 0.1).unwrap().transition_matrix();
        for i in 0..3 {
            for j in 0..3 {
                assert_close(k[(i, j)], if i == j { 0.8 } else { 0.1 }, 1e-15);
            }
        }
    }

    #[test]
    fn frozen_dtmc_is_identity() {
        let k = SourceModel::dtmc(2, 0.0).unwrap().transition_matrix();
        assert_eq!(k, DMatrix::identity(2, 2));
    }

    #[test]
    fn bdmp_three_state_kernel() {
        let k = SourceModel::bdmp(3, 0.2, 0.5).unwrap().transition_matrix();
        let want = [[0.8, 0.2, 0.0], [0.5, 0.3, 0.2], [0.0, 0.5, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert_close(k[(i, j)], want[i][j], 1e-15);
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(SourceModel::dtmc(3, 0.6).is_err());
        assert!(SourceModel::dtmc(1, 0.1).is_err());
        assert!(SourceModel::dtmc(3, -0.1).is_err());
        assert!(SourceModel::bdmp(3, 0.7, 0.5).is_err());
        assert!(SourceModel::bdmp(2, 1.2, 0.1).is_err());
    }

    #[test]
    fn boundary_parameters_allowed() {
        let s = SourceModel::dtmc(4, 1.0 / 3.0).unwrap();
        assert_eq!(s.q(), 0.0);
        let b = SourceModel::bdmp(4, 0.4, 0.6).unwrap();
        assert_close(b.prob(1, 1), 0.0, 1e-15);
    }

    #[test]
    fn step_inverts_cdf() {
        let s = SourceModel::dtmc(2, 0.3).unwrap();
        assert_eq!(s.step(0, 0.95).unwrap(), 1);
        assert_eq!(s.step(0, 0.69).unwrap(), 0);
        // Boundary is half-open: u == q selects the next segment.
        assert_eq!(s.step(0, 0.7).unwrap(), 1);

        let b = SourceModel::bdmp(3, 0.2, 0.5).unwrap();
        assert_eq!(b.step(1, 0.0).unwrap(), 0);
        assert_eq!(b.step(1, 0.5).unwrap(), 1);
        assert_eq!(b.step(1, 0.8).unwrap(), 2);
        assert_eq!(b.step(0, 0.999_999).unwrap(), 1);
    }

    #[test]
    fn step_rejects_out_of_range_state() {
        let s = SourceModel::dtmc(3, 0.1).unwrap();
        assert_eq!(s.step(3, 0.5), Err(Error::StateOutOfRange { state: 3, n: 3 }));
    }

    #[test]
    fn step_sliver_above_last_boundary() {
        // Rows that sum to slightly less than one still map every u < 1.
        let s = SourceModel::dtmc(3, 1.0 / 3.0).unwrap();
        let below_one = f64::from_bits(1.0f64.to_bits() - 1);
        assert_eq!(s.step(0, below_one).unwrap(), 2);
    }

    #[test]
    fn two_state_marginals() {
        let m = BdmpSource::new(2, 0.1, 0.2).unwrap().two_state_marginal().unwrap();
        assert_close(m[0], 2.0 / 3.0, 1e-15);
        assert_close(m[1], 1.0 / 3.0, 1e-15);
        let m = bdmp_marginal_stationary(&BdmpSource::new(2, 0.25, 0.25).unwrap()).unwrap();
        assert_eq!(m, [0.5, 0.5]);
        assert!(matches!(
            BdmpSource::new(2, 0.0, 0.0).unwrap().two_state_marginal(),
            Err(Error::Degenerate(_))
        ));
        assert!(matches!(
            BdmpSource::new(3, 0.1, 0.1).unwrap().two_state_marginal(),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn two_state_marginal_matches_power_iteration() {
        // Independent route: iterate the kernel from a point mass.
        let s = SourceModel::bdmp(2, 0.3, 0.2).unwrap();
        let k = s.transition_matrix();
        let mut v = nalgebra::RowDVector::from_row_slice(&[1.0, 0.0]);
        for _ in 0..2000 {
            v = &v * &k;
        }
        assert_close(v[0], 0.4, 1e-12);
        assert_close(v[1], 0.6, 1e-12);
        let SourceModel::Bdmp(b) = s else { unreachable!() };
        let m = b.two_state_marginal().unwrap();
        assert_close(m[0], 0.4, 1e-15);
        assert_close(m[1], 0.6, 1e-15);
    }

    #[test]
    fn general_bdmp_marginal_is_stationary() {
        let s = SourceModel::bdmp(5, 0.2, 0.35).unwrap();
        let pi = nalgebra::RowDVector::from_vec(s.marginal_stationary().unwrap());
        let next = &pi * s.transition_matrix();
        assert!((next - &pi).amax() < 1e-14);
    }
}
