//! Joint `(X, X̂)` chain and the stationary solver.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_probability, Error, Result};
use crate::policies::PolicySpec;
use crate::sources::{SourceKind, SourceModel};

const RESIDUAL_TOL: f64 = 1e-10;
const POWER_TOL: f64 = 1e-13;
const POWER_MAX_ITER: usize = 1_000_000;

/// Policies whose joint chain is Markov on `(X, X̂)` alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChainPolicy {
    RandomizedStationary { p_alpha: f64 },
    ChangeAware,
    SemanticsAware,
}

impl ChainPolicy {
    /// Probability that a sample is generated on the move `i -> k` while
    /// the receiver holds `j`.
    pub fn fire_probability(&self, i: usize, j: usize, k: usize) -> f64 {
        match *self {
            ChainPolicy::RandomizedStationary { p_alpha } => p_alpha,
            ChainPolicy::ChangeAware => f64::from(u8::from(k != i)),
            ChainPolicy::SemanticsAware => f64::from(u8::from(k != j)),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ChainPolicy::RandomizedStationary { p_alpha } => check_probability("p_alpha", p_alpha),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ChainPolicy::RandomizedStationary { .. } => "rs",
            ChainPolicy::ChangeAware => "change_aware",
            ChainPolicy::SemanticsAware => "semantics_aware",
        }
    }
}

impl TryFrom<PolicySpec> for ChainPolicy {
    type Error = Error;

    fn try_from(p: PolicySpec) -> Result<Self> {
        match p {
            PolicySpec::RandomizedStationary { p_alpha } => {
                Ok(ChainPolicy::RandomizedStationary { p_alpha })
            }
            PolicySpec::ChangeAware => Ok(ChainPolicy::ChangeAware),
            PolicySpec::SemanticsAware => Ok(ChainPolicy::SemanticsAware),
            other => Err(Error::Unsupported(format!(
                "policy {} has no (X, X̂) joint chain; simulate it instead",
                other.name()
            ))),
        }
    }
}

impl From<ChainPolicy> for PolicySpec {
    fn from(p: ChainPolicy) -> Self {
        match p {
            ChainPolicy::RandomizedStationary { p_alpha } => {
                PolicySpec::RandomizedStationary { p_alpha }
            }
            ChainPolicy::ChangeAware => PolicySpec::ChangeAware,
            ChainPolicy::SemanticsAware => PolicySpec::SemanticsAware,
        }
    }
}

/// N²-state chain over `(X, X̂)`, row-major index `i * N + j`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointChain {
    n: usize,
    kind: SourceKind,
    policy: ChainPolicy,
    matrix: DMatrix<f64>,
}

/// From `(i, j)` the source moves to `k`; a generated sample succeeds with
/// probability `p_s` and sends the chain to `(k, k)`, otherwise to `(k, j)`.
pub fn build_joint_chain(source: &SourceModel, policy: ChainPolicy, p_s: f64) -> Result<JointChain> {
    policy.validate()?;
    check_probability("p_s", p_s)?;
    let n = source.n_states();
    let mut m = DMatrix::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            let row = i * n + j;
            for k in 0..n {
                let w = source.prob(i, k);
                if w == 0.0 {
                    continue;
                }
                let hit = policy.fire_probability(i, j, k) * p_s;
                m[(row, k * n + k)] += w * hit;
                m[(row, k * n + j)] += w * (1.0 - hit);
            }
        }
    }
    Ok(JointChain { n, kind: source.kind(), policy, matrix: m })
}

impl JointChain {
    pub fn n_states(&self) -> usize {
        self.n
    }

    pub fn source_kind(&self) -> SourceKind {
        self.kind
    }

    pub fn policy(&self) -> ChainPolicy {
        self.policy
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn index(&self, x: usize, x_hat: usize) -> usize {
        x * self.n + x_hat
    }

    /// Stationary law as an N×N matrix `π[x][x̂]`.
    pub fn stationary(&self) -> Result<DMatrix<f64>> {
        stationary(&self.matrix).map(|v| self.reshape(&v))
    }

    /// Stationary law restricted to the pairs reachable from `(x, x_hat)`.
    pub fn stationary_from(&self, x: usize, x_hat: usize) -> Result<DMatrix<f64>> {
        if x >= self.n || x_hat >= self.n {
            return Err(Error::StateOutOfRange { state: x.max(x_hat), n: self.n });
        }
        stationary_from(&self.matrix, self.index(x, x_hat)).map(|v| self.reshape(&v))
    }

    fn reshape(&self, v: &DVector<f64>) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| v[i * self.n + j])
    }

    /// Lump the chain by error level `|x - x̂|`, weighting pairs by `pi`.
    ///
    /// Levels with zero mass are weighted uniformly over their pairs.
    pub fn lump_error_levels(&self, pi: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.n;
        let mut out = DMatrix::zeros(n, n);
        let mut mass = vec![0.0; n];
        let mut count = vec![0usize; n];
        for a in 0..n * n {
            let level = (a / n).abs_diff(a % n);
            mass[level] += pi[(a / n, a % n)];
            count[level] += 1;
        }
        for a in 0..n * n {
            let level = (a / n).abs_diff(a % n);
            let w = if mass[level] > 0.0 {
                pi[(a / n, a % n)] / mass[level]
            } else {
                1.0 / count[level] as f64
            };
            if w == 0.0 {
                continue;
            }
            for b in 0..n * n {
                out[(level, (b / n).abs_diff(b % n))] += w * self.matrix[(a, b)];
            }
        }
        out
    }
}

/// Max-norm residual `‖πP - π‖∞`.
pub fn stationary_residual(matrix: &DMatrix<f64>, pi: &DVector<f64>) -> f64 {
    let lhs = matrix.transpose() * pi;
    (lhs - pi).amax()
}

/// Stationary vector of a row-stochastic matrix.
///
/// Solves `πP = π, Σπ = 1` with one balance row replaced by normalization.
/// When that system is singular or the answer fails the residual check,
/// falls back to lazy power iteration `(P + I)/2` started from the uniform
/// vector; the identity matrix therefore yields the uniform law.
pub fn stationary(matrix: &DMatrix<f64>) -> Result<DVector<f64>> {
    check_square(matrix)?;
    let m = matrix.nrows();
    if let Some(v) = direct_solve(matrix) {
        return Ok(v);
    }
    power_iteration(matrix, DVector::from_element(m, 1.0 / m as f64))
}

/// Stationary vector over the states reachable from `start`, embedded back
/// into the full index space with zeros elsewhere.
///
/// If the reachable set holds several closed classes, the limit law from
/// `start` is returned.
pub fn stationary_from(matrix: &DMatrix<f64>, start: usize) -> Result<DVector<f64>> {
    check_square(matrix)?;
    let m = matrix.nrows();
    if start >= m {
        return Err(Error::StateOutOfRange { state: start, n: m });
    }
    let reach = reachable(matrix, start);
    let sub = DMatrix::from_fn(reach.len(), reach.len(), |a, b| matrix[(reach[a], reach[b])]);
    let local = match direct_solve(&sub) {
        Some(v) => v,
        None => {
            let mut init = DVector::zeros(reach.len());
            init[0] = 1.0;
            power_iteration(&sub, init)?
        }
    };
    let mut full = DVector::zeros(m);
    for (a, &s) in reach.iter().enumerate() {
        full[s] = local[a];
    }
    Ok(full)
}

fn check_square(matrix: &DMatrix<f64>) -> Result<()> {
    if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
        return Err(Error::Dimension(format!(
            "stationary solve needs a non-empty square matrix, got {}x{}",
            matrix.nrows(),
            matrix.ncols()
        )));
    }
    Ok(())
}

/// Breadth-first reachable set; `start` comes first.
fn reachable(matrix: &DMatrix<f64>, start: usize) -> Vec<usize> {
    let m = matrix.nrows();
    let mut seen = vec![false; m];
    let mut order = vec![start];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(a) = queue.pop_front() {
        for b in 0..m {
            if !seen[b] && matrix[(a, b)] > 0.0 {
                seen[b] = true;
                order.push(b);
                queue.push_back(b);
            }
        }
    }
    order
}

fn direct_solve(matrix: &DMatrix<f64>) -> Option<DVector<f64>> {
    let m = matrix.nrows();
    let mut a = matrix.transpose() - DMatrix::identity(m, m);
    a.row_mut(m - 1).fill(1.0);
    let mut b = DVector::zeros(m);
    b[m - 1] = 1.0;
    let mut v = a.lu().solve(&b)?;
    if v.iter().any(|x| !x.is_finite() || *x < -1e-9) {
        return None;
    }
    v.iter_mut().for_each(|x| *x = x.max(0.0));
    let total = v.sum();
    if total.is_nan() || total <= 0.0 {
        return None;
    }
    v /= total;
    (stationary_residual(matrix, &v) <= RESIDUAL_TOL).then_some(v)
}

fn power_iteration(matrix: &DMatrix<f64>, init: DVector<f64>) -> Result<DVector<f64>> {
    let m = matrix.nrows();
    let lazy = (matrix + DMatrix::identity(m, m)) * 0.5;
    let lazy_t = lazy.transpose();
    let mut v = init;
    let mut delta = f64::INFINITY;
    for _ in 0..POWER_MAX_ITER {
        let next = &lazy_t * &v;
        delta = (&next - &v).amax();
        v = next;
        if delta <= POWER_TOL {
            let total = v.sum();
            v /= total;
            return Ok(v);
        }
    }
    Err(Error::Convergence { residual: delta })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_gives_uniform() {
        let v = stationary(&DMatrix::identity(2, 2)).unwrap();
        assert_eq!(v.as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn two_state_balance() {
        let (p, q) = (0.3, 0.2);
        let m = DMatrix::from_row_slice(2, 2, &[1.0 - p, p, q, 1.0 - q]);
        let v = stationary(&m).unwrap();
        assert!((v[0] - q / (p + q)).abs() < 1e-14);
        assert!((v[1] - p / (p + q)).abs() < 1e-14);
    }

    #[test]
    fn periodic_chain_still_solves() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let v = stationary(&m).unwrap();
        assert!((v[0] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_square() {
        assert!(matches!(stationary(&DMatrix::zeros(2, 3)), Err(Error::Dimension(_))));
    }

    #[test]
    fn edge_labels_two_state_dtmc() {
        let (p, pa, ps) = (0.3, 0.7, 0.8);
        let src = SourceModel::dtmc(2, p).unwrap();
        let jc = build_joint_chain(&src, ChainPolicy::RandomizedStationary { p_alpha: pa }, ps).unwrap();
        let m = jc.matrix();
        let h = pa * ps;
        let idx = |x, y| jc.index(x, y);
        assert!((m[(idx(0, 0), idx(0, 0))] - (1.0 - p)).abs() < 1e-15);
        assert!((m[(idx(0, 0), idx(1, 1))] - p * h).abs() < 1e-15);
        assert!((m[(idx(0, 0), idx(1, 0))] - p * (1.0 - h)).abs() < 1e-15);
        assert!((m[(idx(0, 1), idx(0, 1))] - (1.0 - p) * (1.0 - h)).abs() < 1e-15);
        assert!((m[(idx(0, 1), idx(0, 0))] - (1.0 - p) * h).abs() < 1e-15);
        assert!((m[(idx(0, 1), idx(1, 1))] - p).abs() < 1e-15);
    }

    #[test]
    fn edge_labels_two_state_bdmp() {
        let (p, q, pa, ps) = (0.3, 0.4, 0.7, 0.8);
        let src = SourceModel::bdmp(2, p, q).unwrap();
        let jc = build_joint_chain(&src, ChainPolicy::RandomizedStationary { p_alpha: pa }, ps).unwrap();
        let m = jc.matrix();
        let h = pa * ps;
        let idx = |x, y| jc.index(x, y);
        assert!((m[(idx(1, 0), idx(1, 0))] - (1.0 - q) * (1.0 - h)).abs() < 1e-15);
        assert!((m[(idx(1, 0), idx(0, 0))] - q).abs() < 1e-15);
        assert!((m[(idx(1, 1), idx(0, 0))] - q * h).abs() < 1e-15);
        assert!((m[(idx(1, 1), idx(0, 1))] - q * (1.0 - h)).abs() < 1e-15);
    }

    #[test]
    fn rows_are_stochastic() {
        let sources = [
            SourceModel::dtmc(4, 0.2).unwrap(),
            SourceModel::bdmp(5, 0.3, 0.25).unwrap(),
        ];
        let policies = [
            ChainPolicy::RandomizedStationary { p_alpha: 0.35 },
            ChainPolicy::ChangeAware,
            ChainPolicy::SemanticsAware,
        ];
        for s in &sources {
            for pol in policies {
                let jc = build_joint_chain(s, pol, 0.6).unwrap();
                for r in 0..jc.matrix().nrows() {
                    assert!((jc.matrix().row(r).sum() - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn perfect_channel_always_sampling_concentrates_on_diagonal() {
        let src = SourceModel::bdmp(4, 0.2, 0.3).unwrap();
        let jc = build_joint_chain(&src, ChainPolicy::RandomizedStationary { p_alpha: 1.0 }, 1.0)
            .unwrap();
        let pi = jc.stationary().unwrap();
        assert!((pi.trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn blocked_channel_keeps_reconstruction() {
        let src = SourceModel::dtmc(3, 0.2).unwrap();
        let jc = build_joint_chain(&src, ChainPolicy::SemanticsAware, 0.0).unwrap();
        let pi = jc.stationary_from(1, 2).unwrap();
        for x in 0..3 {
            for y in 0..3 {
                if y != 2 {
                    assert_eq!(pi[(x, y)], 0.0);
                } else {
                    assert!((pi[(x, y)] - 1.0 / 3.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn stationary_from_reports_limit_from_start() {
        // Transient state 0 splits into two absorbing states 1 and 2.
        let m = DMatrix::from_row_slice(3, 3, &[0.0, 0.25, 0.75, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let v = stationary_from(&m, 0).unwrap();
        assert!((v[1] - 0.25).abs() < 1e-10 && (v[2] - 0.75).abs() < 1e-10);
        let w = stationary_from(&m, 2).unwrap();
        assert_eq!(w.as_slice(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn lumping_rows_sum_to_one() {
        let src = SourceModel::bdmp(4, 0.2, 0.3).unwrap();
        let jc = build_joint_chain(&src, ChainPolicy::RandomizedStationary { p_alpha: 0.5 }, 0.7)
            .unwrap();
        let pi = jc.stationary().unwrap();
        let e = jc.lump_error_levels(&pi);
        for r in 0..4 {
            assert!((e.row(r).sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_and_wtg_have_no_joint_chain() {
        assert!(ChainPolicy::try_from(PolicySpec::Uniform { period: 3 }).is_err());
        assert!(ChainPolicy::try_from(PolicySpec::WaitThenGenerate { threshold: 1 }).is_err());
        assert_eq!(
            ChainPolicy::try_from(PolicySpec::ChangeAware).unwrap(),
            ChainPolicy::ChangeAware
        );
    }
}
