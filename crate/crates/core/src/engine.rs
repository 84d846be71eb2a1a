//! Time-slotted Monte-Carlo simulation.
//!
//! Slot order: the source moves, the policy decides on `(X_t, X_{t-1},
//! X̂_{t-1})`, a sample (if any) crosses the channel and on success sets
//! `X̂_t = X_t` within the same slot. Metrics are taken on the resolved pair.
//!
//! Each random consumer (source, policy, channel) draws from its own ChaCha8
//! stream, so a policy that never draws leaves the other streams untouched.

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{exponential_gain, realize, ChannelSpec};
use crate::error::{Error, Result};
use crate::policies::{DecisionContext, PolicySpec};
use crate::sources::SourceModel;

/// Streams reserved per replica; three are used.
const STREAMS_PER_REPLICA: u64 = 4;
const SOURCE_STREAM: u64 = 0;
const POLICY_STREAM: u64 = 1;
const CHANNEL_STREAM: u64 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub source: SourceModel,
    pub channel: ChannelSpec,
    pub policy: PolicySpec,
    /// Measured slots.
    pub horizon: u64,
    pub seed: u64,
    pub x0: usize,
    pub xhat0: usize,
    /// Actuation cost `C[x][x̂]`; `|x - x̂|` when absent.
    pub cost_matrix: Option<DMatrix<f64>>,
    pub kappa: f64,
    pub mem_n: u32,
    pub delta: f64,
    /// Slots simulated before measurement starts.
    pub warmup: u64,
    /// Draw an exponential fading gain per transmission instead of a
    /// Bernoulli outcome. Needs a physical channel.
    pub fading: bool,
}

impl SimConfig {
    pub fn new(source: SourceModel, channel: ChannelSpec, policy: PolicySpec) -> Self {
        Self {
            source,
            channel,
            policy,
            horizon: 1_000_000,
            seed: 0,
            x0: 0,
            xhat0: 0,
            cost_matrix: None,
            kappa: 2.0,
            mem_n: 10,
            delta: 1.0,
            warmup: 0,
            fading: false,
        }
    }

    pub fn with_horizon(mut self, horizon: u64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.source.n_states();
        if self.horizon == 0 {
            return Err(Error::Parameter("horizon must be >= 1".into()));
        }
        for (name, s) in [("x0", self.x0), ("xhat0", self.xhat0)] {
            if s >= n {
                return Err(Error::Parameter(format!("{name} = {s} outside 0..{n}")));
            }
        }
        if let Some(c) = &self.cost_matrix {
            validate_cost_matrix(c, n)?;
        }
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return Err(Error::Parameter(format!("kappa = {} must be positive", self.kappa)));
        }
        if self.mem_n == 0 {
            return Err(Error::Parameter("mem_n must be >= 1".into()));
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(Error::Parameter(format!("delta = {} must be positive", self.delta)));
        }
        if self.fading && !matches!(self.channel, ChannelSpec::Physical(_)) {
            return Err(Error::ChannelMode("fading mode needs a physical channel".into()));
        }
        self.policy.validate()
    }

    /// The cost matrix in effect.
    pub fn resolved_cost_matrix(&self) -> DMatrix<f64> {
        let n = self.source.n_states();
        self.cost_matrix
            .clone()
            .unwrap_or_else(|| default_cost_matrix(n))
    }
}

/// `C[i][j] = |i - j|`.
pub fn default_cost_matrix(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| i.abs_diff(j) as f64)
}

pub(crate) fn validate_cost_matrix(c: &DMatrix<f64>, n: usize) -> Result<()> {
    if c.nrows() != n || c.ncols() != n {
        return Err(Error::Dimension(format!(
            "cost matrix is {}x{}, source has {n} states",
            c.nrows(),
            c.ncols()
        )));
    }
    for i in 0..n {
        if c[(i, i)] != 0.0 {
            return Err(Error::Parameter(format!("cost matrix diagonal C[{i}][{i}] must be 0")));
        }
    }
    if c.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Parameter("cost matrix entries must be finite and >= 0".into()));
    }
    Ok(())
}

/// Scalar metrics of one run, in CSV column order.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Scalars {
    pub p_e: f64,
    pub variance: f64,
    pub actuation_cost: f64,
    pub consecutive_error: f64,
    pub memory_cost: f64,
    pub sampling_rate: f64,
    pub sampling_cost: f64,
}

impl Scalars {
    pub const NAMES: [&'static str; 7] = [
        "p_e",
        "variance",
        "actuation_cost",
        "consecutive_error",
        "memory_cost",
        "sampling_rate",
        "sampling_cost",
    ];

    pub fn to_array(&self) -> [f64; 7] {
        [
            self.p_e,
            self.variance,
            self.actuation_cost,
            self.consecutive_error,
            self.memory_cost,
            self.sampling_rate,
            self.sampling_cost,
        ]
    }

    pub fn from_array(a: [f64; 7]) -> Self {
        Self {
            p_e: a[0],
            variance: a[1],
            actuation_cost: a[2],
            consecutive_error: a[3],
            memory_cost: a[4],
            sampling_rate: a[5],
            sampling_cost: a[6],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub p_e: f64,
    pub variance: f64,
    pub actuation_cost: f64,
    pub consecutive_error: f64,
    pub memory_cost: f64,
    pub sampling_cost: f64,
    pub sampling_rate: f64,
    pub slots: u64,
    /// Empirical frequency of `(X_t, X̂_t)`.
    pub joint_occupancy: DMatrix<f64>,
    /// Counts of consecutive error levels `(|X_t - X̂_t|, |X_{t+1} - X̂_{t+1}|)`.
    pub error_transitions: DMatrix<u64>,
    /// Successful deliveries over measured slots.
    pub deliveries: u64,
}

impl MetricsReport {
    pub fn scalars(&self) -> Scalars {
        Scalars {
            p_e: self.p_e,
            variance: self.variance,
            actuation_cost: self.actuation_cost,
            consecutive_error: self.consecutive_error,
            memory_cost: self.memory_cost,
            sampling_rate: self.sampling_rate,
            sampling_cost: self.sampling_cost,
        }
    }

    /// Binomial standard error of `p_e`, ignoring autocorrelation.
    pub fn p_e_binomial_stderr(&self) -> f64 {
        (self.p_e * (1.0 - self.p_e) / self.slots as f64).sqrt()
    }

    /// Empirical `Pr[E_{t+1} = j | E_t = i]`, `None` when level `i` was
    /// never visited.
    pub fn error_transition_frequency(&self, i: usize, j: usize) -> Option<f64> {
        let row: u64 = self.error_transitions.row(i).iter().sum();
        (row > 0).then(|| self.error_transitions[(i, j)] as f64 / row as f64)
    }
}

/// One simulated slot, as recorded by [`Simulator::trace`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotRecord {
    pub t: u64,
    pub x: usize,
    pub x_hat: usize,
    pub sampled: bool,
    pub delivered: bool,
    /// Consecutive-error counter after the slot.
    pub streak: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PooledStats {
    pub mean: Scalars,
    /// Standard error of the replica mean; NaN with a single replica.
    pub stderr: Scalars,
    pub replicas: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Replication {
    pub reports: Vec<MetricsReport>,
    pub pooled: PooledStats,
}

/// Time average of a streak trajectory.
pub fn consecutive_error_empirical(streaks: &[u64]) -> f64 {
    if streaks.is_empty() {
        return 0.0;
    }
    streaks.iter().map(|&s| s as f64).sum::<f64>() / streaks.len() as f64
}

struct Streams {
    source: ChaCha8Rng,
    policy: ChaCha8Rng,
    channel: ChaCha8Rng,
}

impl Streams {
    fn new(seed: u64, replica: u64) -> Self {
        let make = |consumer: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(replica * STREAMS_PER_REPLICA + consumer);
            rng
        };
        Self {
            source: make(SOURCE_STREAM),
            policy: make(POLICY_STREAM),
            channel: make(CHANNEL_STREAM),
        }
    }
}

/// Validated simulation; cheap to clone and safe to move across threads.
#[derive(Debug, Clone)]
pub struct Simulator {
    cfg: SimConfig,
    cost: DMatrix<f64>,
    p_s: f64,
    kappa_pow: Vec<f64>,
}

struct State {
    t: u64,
    x: usize,
    x_hat: usize,
    streak: u64,
}

impl Simulator {
    pub fn new(cfg: SimConfig) -> Result<Self> {
        cfg.validate()?;
        let cost = cfg.resolved_cost_matrix();
        let p_s = cfg.channel.success_probability();
        let kappa_pow = (0..=cfg.mem_n).map(|k| cfg.kappa.powi(k as i32)).collect();
        Ok(Self { cfg, cost, p_s, kappa_pow })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn run(&self) -> MetricsReport {
        self.run_replica(0)
    }

    fn initial_state(&self) -> State {
        State {
            t: 0,
            x: self.cfg.x0,
            x_hat: self.cfg.xhat0,
            streak: u64::from(self.cfg.x0 != self.cfg.xhat0),
        }
    }

    /// Advance one slot; returns `(sampled, delivered)`.
    fn step(&self, st: &mut State, rng: &mut Streams) -> (bool, bool) {
        st.t += 1;
        let x_prev = st.x;
        st.x = self.cfg.source.step_unchecked(st.x, rng.source.random());
        let rand = if self.cfg.policy.uses_randomness() {
            rng.policy.random()
        } else {
            0.0
        };
        let ctx = DecisionContext {
            t: st.t,
            x_new: st.x,
            x_prev,
            x_hat: st.x_hat,
            streak: st.streak,
            rand,
        };
        let sampled = self.cfg.policy.decide(&ctx);
        let mut delivered = false;
        if sampled {
            let u: f64 = rng.channel.random();
            delivered = if self.cfg.fading {
                // Validated at construction: the channel is physical.
                self.cfg.channel.realize_fading(exponential_gain(u)).unwrap_or(false)
            } else {
                realize(self.p_s, u)
            };
            if delivered {
                st.x_hat = st.x;
            }
        }
        st.streak = if st.x == st.x_hat { 0 } else { st.streak + 1 };
        (sampled, delivered)
    }

    /// Run replica `r`; replica 0 is [`Simulator::run`].
    pub fn run_replica(&self, replica: u64) -> MetricsReport {
        let n = self.cfg.source.n_states();
        let mut rng = Streams::new(self.cfg.seed, replica);
        let mut st = self.initial_state();
        for _ in 0..self.cfg.warmup {
            self.step(&mut st, &mut rng);
        }

        let mut occupancy = DMatrix::<u64>::zeros(n, n);
        let mut transitions = DMatrix::<u64>::zeros(n, n);
        let mut errors = 0u64;
        let mut cost = 0.0;
        let mut streak_sum = 0.0;
        let mut memory = 0.0;
        let mut samples = 0u64;
        let mut deliveries = 0u64;
        let mut prev_level: Option<usize> = None;
        let mem_n = u64::from(self.cfg.mem_n);

        for _ in 0..self.cfg.horizon {
            let (sampled, delivered) = self.step(&mut st, &mut rng);
            occupancy[(st.x, st.x_hat)] += 1;
            errors += u64::from(st.x != st.x_hat);
            cost += self.cost[(st.x, st.x_hat)];
            streak_sum += st.streak as f64;
            if (1..=mem_n).contains(&st.streak) {
                memory += self.kappa_pow[st.streak as usize];
            }
            samples += u64::from(sampled);
            deliveries += u64::from(delivered);
            let level = st.x.abs_diff(st.x_hat);
            if let Some(prev) = prev_level {
                transitions[(prev, level)] += 1;
            }
            prev_level = Some(level);
        }

        let t = self.cfg.horizon as f64;
        let p_e = errors as f64 / t;
        // The error indicator squares to itself.
        let second_moment = errors as f64 / t;
        let sampling_rate = samples as f64 / t;
        MetricsReport {
            p_e,
            variance: second_moment - p_e * p_e,
            actuation_cost: cost / t,
            consecutive_error: streak_sum / t,
            memory_cost: memory / t,
            sampling_cost: self.cfg.delta * sampling_rate,
            sampling_rate,
            slots: self.cfg.horizon,
            joint_occupancy: occupancy.map(|c| c as f64 / t),
            error_transitions: transitions,
            deliveries,
        }
    }

    /// Run `replicas` independent replicas in parallel, in replica order.
    pub fn replicate(&self, replicas: usize) -> Result<Replication> {
        if replicas == 0 {
            return Err(Error::Parameter("replicas must be >= 1".into()));
        }
        let reports: Vec<MetricsReport> = (0..replicas as u64)
            .into_par_iter()
            .map(|r| self.run_replica(r))
            .collect();
        let pooled = pool(&reports);
        Ok(Replication { reports, pooled })
    }

    /// Record the first `slots` slots after warm-up of replica 0.
    pub fn trace(&self, slots: u64) -> Vec<SlotRecord> {
        let mut rng = Streams::new(self.cfg.seed, 0);
        let mut st = self.initial_state();
        for _ in 0..self.cfg.warmup {
            self.step(&mut st, &mut rng);
        }
        (0..slots)
            .map(|_| {
                let (sampled, delivered) = self.step(&mut st, &mut rng);
                SlotRecord {
                    t: st.t,
                    x: st.x,
                    x_hat: st.x_hat,
                    sampled,
                    delivered,
                    streak: st.streak,
                }
            })
            .collect()
    }
}

fn pool(reports: &[MetricsReport]) -> PooledStats {
    let k = reports.len();
    let arrays: Vec<[f64; 7]> = reports.iter().map(|r| r.scalars().to_array()).collect();
    let mut mean = [0.0; 7];
    let mut stderr = [f64::NAN; 7];
    for m in 0..7 {
        mean[m] = arrays.iter().map(|a| a[m]).sum::<f64>() / k as f64;
        if k > 1 {
            let ss: f64 = arrays.iter().map(|a| (a[m] - mean[m]).powi(2)).sum();
            stderr[m] = (ss / (k - 1) as f64 / k as f64).sqrt();
        }
    }
    PooledStats {
        mean: Scalars::from_array(mean),
        stderr: Scalars::from_array(stderr),
        replicas: k,
    }
}
