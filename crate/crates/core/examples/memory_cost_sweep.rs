//! Memory-error cost against the SNR threshold over a Rayleigh link.

use markov_tracking::reproduce::{fig5_channel, FIG5_GAMMA_DB};
use markov_tracking::prelude::*;

fn main() -> Result<()> {
    let source = SourceModel::dtmc(3, 0.1)?;
    let policies = [PolicySpec::SemanticsAware, PolicySpec::ChangeAware, PolicySpec::uniform(5)?, PolicySpec::randomized(0.7)?];
    print!("{:>8} {:>6}", "gamma_dB", "p_s");
    for p in &policies {
        print!(" {:>16}", p.name());
    }
    println!();
    for g in FIG5_GAMMA_DB {
        let link = fig5_channel(g)?;
        print!("{g:>8} {:>6.3}", link.success_probability());
        for p in policies {
            let mut cfg = SimConfig::new(source, ChannelSpec::physical(link), p).with_horizon(500_000);
            cfg.kappa = 2.0;
            cfg.mem_n = 10;
            print!(" {:>16.4}", Simulator::new(cfg)?.run().memory_cost);
        }
        println!();
    }
    Ok(())
}
