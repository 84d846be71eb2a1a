//! Success probability from link parameters, and per-transmission fading
//! draws against the Bernoulli shortcut.

use markov_tracking::channel::{dbm_to_mw, exponential_gain};
use markov_tracking::prelude::*;
use rand::{Rng, SeedableRng};

fn main() -> Result<()> {
    let link = PhysicalChannel::with_gamma_db(1.0, 30.0, 4.0, dbm_to_mw(-100.0), 0.0)?;
    println!("-100 dBm noise at 30 m: p_s = {:.6}", link.success_probability());

    let weak = PhysicalChannel::with_gamma_db(1.0, 30.0, 4.0, 0.0812 / 810_000.0, 10.0)?;
    let spec = ChannelSpec::physical(weak);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let trials = 200_000;
    let hits = (0..trials)
        .filter(|_| spec.realize_fading(exponential_gain(rng.random())).unwrap())
        .count();
    println!("calibrated link at 10 dB: p_s = {:.4}, fading draws {:.4}", spec.success_probability(), hits as f64 / trials as f64);

    let source = SourceModel::dtmc(3, 0.1)?;
    for fading in [false, true] {
        let mut cfg = SimConfig::new(source, spec, PolicySpec::randomized(0.7)?).with_horizon(500_000);
        cfg.fading = fading;
        println!("fading = {fading}: p_e = {:.4}", Simulator::new(cfg)?.run().p_e);
    }
    Ok(())
}
