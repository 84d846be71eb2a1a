//! Independent replicas and pooled standard errors.

use markov_tracking::prelude::*;

fn main() -> Result<()> {
    let cfg = SimConfig::new(SourceModel::dtmc(2, 0.3)?, ChannelSpec::direct(0.8)?, PolicySpec::randomized(0.5)?)
        .with_horizon(200_000)
        .with_seed(42);
    let exact = analyze(&cfg)?.p_e;
    let rep = Simulator::new(cfg)?.replicate(8)?;
    for (i, r) in rep.reports.iter().enumerate() {
        println!("replica {i}: p_e = {:.5}", r.p_e);
    }
    let (m, se) = (rep.pooled.mean.p_e, rep.pooled.stderr.p_e);
    println!("pooled {m:.5} ± {se:.5}; exact {exact:.5}; z = {:.2}", (m - exact) / se);
    Ok(())
}
