//! Compare the five sampling policies on one source and channel.
//!
//! ```bash
//! cargo run --release --example simulate_policies
//! ```

use markov_tracking::prelude::*;

fn main() -> Result<()> {
    let source = SourceModel::bdmp(3, 0.1, 0.2)?;
    let channel = ChannelSpec::direct(0.922)?;
    let policies = [
        PolicySpec::SemanticsAware,
        PolicySpec::ChangeAware,
        PolicySpec::uniform(5)?,
        PolicySpec::randomized(0.7)?,
        PolicySpec::wait_then_generate(2),
    ];

    println!("{:<16} {:>8} {:>10} {:>12} {:>10}", "policy", "p_e", "act_cost", "consecutive", "rate");
    for policy in policies {
        let cfg = SimConfig::new(source, channel, policy).with_horizon(1_000_000).with_seed(1);
        let r = Simulator::new(cfg)?.run();
        println!(
            "{:<16} {:>8.4} {:>10.4} {:>12.4} {:>10.4}",
            policy.name(),
            r.p_e,
            r.actuation_cost,
            r.consecutive_error,
            r.sampling_rate
        );
    }
    Ok(())
}
