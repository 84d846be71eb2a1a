//! Minimum error under a sampling budget, two-state sources.

use markov_tracking::optimize::{solve_problem1_bdmp, Problem1Decision};
use markov_tracking::prelude::*;

fn main() -> Result<()> {
    let dtmc = SourceModel::dtmc(2, 0.4)?;
    let bdmp = (0.2, 0.5);
    println!("{:>5} {:>10} {:>18}", "eta", "dtmc p_e*", "bdmp p_e* (x̂0=0)");
    for eta in [0.1, 0.3, 0.5, 0.7, 0.9] {
        let budget = Budget::from_eta(eta)?;
        let d = solve_problem1(&dtmc, 0.8, budget, 0)?;
        let b = solve_problem1_bdmp(bdmp.0, bdmp.1, 0.5, budget, 0)?;
        let tag = match b.decision {
            Problem1Decision::NeverSample => " never sample",
            Problem1Decision::SampleWithProbability => "",
        };
        println!("{eta:>5} {:>10.4} {:>10.4}{tag}", d.p_e_star, b.p_e_star);
    }

    // Three states have no closed form; the solver searches numerically.
    let s = solve_problem1(&SourceModel::dtmc(3, 0.2)?, 0.8, Budget::new(2.0, 0.6)?, 0)?;
    println!("3-state dtmc, eta 0.3: p_alpha* = {:.4}, p_e* = {:.4} ({:?})", s.p_alpha_star, s.p_e_star, s.method);
    Ok(())
}
