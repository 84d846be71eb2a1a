//! Pick the wait-then-generate threshold for a budget and check it in
//! simulation.

use markov_tracking::optimize::{p_as, p_ns, solve_problem2_for_source, wtg_chain};
use markov_tracking::prelude::*;

fn main() -> Result<()> {
    let source = SourceModel::bdmp(2, 0.1, 0.2)?;
    let p_s = 0.5;
    let (ns, as_) = (p_ns(&source, 0)?, p_as(&source, p_s)?);
    println!("never-sample error {ns:.4}, always-sample error {as_:.4}");

    for n in 0..6 {
        let c = wtg_chain(n, ns, as_)?;
        println!("n = {n}: mean streak {:.4}, sampled fraction {:.4}", c.c_bar, c.sampling_fraction);
    }

    for eta in [0.2, 0.6] {
        let sol = solve_problem2_for_source(&source, p_s, Budget::from_eta(eta)?, 0)?;
        let n = sol.n_star.expect("sampling helps here");
        let cfg = SimConfig::new(source, ChannelSpec::direct(p_s)?, PolicySpec::wait_then_generate(n))
            .with_horizon(1_000_000);
        let sim = Simulator::new(cfg)?.run();
        println!(
            "eta {eta}: n* = {n}, streak chain {:.4}, simulated {:.4}, sampled {:.4}",
            sol.c_bar, sim.consecutive_error, sim.sampling_rate
        );
    }
    Ok(())
}
