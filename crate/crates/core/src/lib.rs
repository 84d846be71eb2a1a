//! Real-time tracking of a Markov source over an erasure channel.
//!
//! A sampler watches an N-state source and decides each slot whether to
//! send the current state to a receiver; a sent sample arrives with
//! probability `p_s`. The receiver holds the last delivered state as its
//! reconstruction. This crate provides
//!
//! * source models ([`sources`]) and channels ([`channel`]),
//! * sampling policies ([`policies`]),
//! * a seeded Monte-Carlo engine ([`engine`]),
//! * exact stationary analysis ([`analytic`]),
//! * budget-constrained designs ([`optimize`]),
//! * JSON configs, sweeps and table regeneration ([`config`], [`sweep`],
//!   [`reproduce`]) used by the `mtrack` binary.
//!
//! ```
//! use markov_tracking::prelude::*;
//!
//! let source = SourceModel::dtmc(2, 0.3).unwrap();
//! let policy = PolicySpec::randomized(0.5).unwrap();
//! let cfg = SimConfig::new(source, ChannelSpec::direct(0.8).unwrap(), policy).with_horizon(50_000);
//!
//! let simulated = Simulator::new(cfg.clone()).unwrap().run();
//! let exact = analyze(&cfg).unwrap();
//! assert!((simulated.p_e - exact.p_e).abs() < 0.02);
//! ```

pub mod analytic;
pub mod channel;
pub mod config;
pub mod engine;
pub mod error;
pub mod optimize;
pub mod output;
pub mod policies;
pub mod reproduce;
pub mod sources;
pub mod sweep;

pub use error::{Error, Result};

/// The types most programs need.
pub mod prelude {
    pub use crate::analytic::{analyze, build_joint_chain, p_e, ChainPolicy};
    pub use crate::channel::{ChannelSpec, PhysicalChannel};
    pub use crate::engine::{MetricsReport, SimConfig, Simulator};
    pub use crate::error::{Error, Result};
    pub use crate::optimize::{solve_problem1, solve_problem2, Budget};
    pub use crate::policies::PolicySpec;
    pub use crate::sources::SourceModel;
}
