//! Build the N²-state chain of (source, reconstruction) pairs and compare
//! its stationary law with the closed form and with a simulated histogram.

use markov_tracking::analytic::{joint_stationary_closed_form, ChainPolicy};
use markov_tracking::prelude::*;

fn main() -> Result<()> {
    let source = SourceModel::dtmc(3, 0.2)?;
    let policy = ChainPolicy::RandomizedStationary { p_alpha: 0.6 };
    let p_s = 0.8;

    let chain = build_joint_chain(&source, policy, p_s)?;
    let oracle = chain.stationary()?;
    let closed = joint_stationary_closed_form(&source, policy, p_s)?;
    println!("max |closed - oracle| = {:.2e}", (&closed - &oracle).abs().max());

    let cfg = SimConfig::new(source, ChannelSpec::direct(p_s)?, policy.into()).with_horizon(2_000_000);
    let sim = Simulator::new(cfg)?.run();
    println!("max |simulated - oracle| = {:.2e}", (&sim.joint_occupancy - &oracle).abs().max());
    println!("joint law:{oracle:.5}");
    Ok(())
}
