//! Print regenerated tables as CSV. Pass target names to choose; the
//! default prints the analytic ones.
//!
//! ```bash
//! cargo run --release --example reproduce_tables -- table3 table9 table1
//! ```

use markov_tracking::reproduce::{reproduce, ReproduceOptions, Target};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut targets: Vec<Target> = std::env::args().skip(1).map(|a| a.parse()).collect::<Result<_, _>>()?;
    if targets.is_empty() {
        targets = Target::ALL.into_iter().filter(|t| !t.simulates()).collect();
    }
    for t in targets {
        println!("# {t}");
        print!("{}", reproduce(t, &ReproduceOptions::default())?.to_csv_string());
    }
    Ok(())
}
