//! Lump the joint chain into error levels |X - X̂| and read P_E off the
//! three-level chain.

use markov_tracking::analytic::{error_chain, three_state_p_e};
use markov_tracking::prelude::*;

fn main() -> Result<()> {
    for source in [SourceModel::dtmc(3, 0.1)?, SourceModel::bdmp(3, 0.1, 0.2)?] {
        let lumped = error_chain(&source, 0.7, 0.922)?;
        let direct = p_e(&source, ChainPolicy::RandomizedStationary { p_alpha: 0.7 }, 0.922)?;
        println!("{source:?}");
        println!("  error chain:{:.4}", lumped.matrix());
        println!("  P_E from chain entries {:.6}", three_state_p_e(lumped.matrix())?);
        println!("  P_E from joint chain   {direct:.6}");
    }
    Ok(())
}
