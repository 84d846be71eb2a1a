//! `mtrack`: simulate, analyze, optimize, sweep and reproduce from the
//! command line. CSV goes to `--out` (plus a manifest) or to stdout.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or config error.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use markov_tracking::analytic::{analyze, build_joint_chain, ChainPolicy};
use markov_tracking::config::{ConfigError, RunConfig};
use markov_tracking::engine::{Scalars, SimConfig, Simulator};
use markov_tracking::error::Error;
use markov_tracking::optimize::{solve_problem1, solve_problem2_for_source, Problem1Decision, SolveMethod};
use markov_tracking::output::{Cell, RunManifest, Table};
use markov_tracking::reproduce::{reproduce, ReproduceOptions, Target};
use markov_tracking::sweep::{parse_grid, sweep, SweepAxis, SweepError, SweepMode};

#[derive(Parser)]
#[command(name = "mtrack", version, about = "Remote tracking of Markov sources over erasure channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Write CSV here (and `<out>.manifest.json`) instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct RunFlags {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    slots: Option<u64>,
    #[arg(long)]
    warmup: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo run of a JSON config.
    Simulate {
        config: PathBuf,
        #[command(flatten)]
        run: RunFlags,
        /// Independent replicas; adds a pooled row.
        #[arg(long)]
        replicas: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Exact metrics of a JSON config (rs, change_aware or semantics_aware).
    Analyze {
        config: PathBuf,
        /// Also write the joint (X, X̂) transition matrix as CSV.
        #[arg(long)]
        dump_joint_chain: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Budget-constrained design; the config needs a "budget" block.
    Optimize {
        config: PathBuf,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
        problem: u8,
        #[command(flatten)]
        common: Common,
    },
    /// Regenerate an evaluation table or figure.
    Reproduce {
        #[arg(value_parser = parse_target)]
        target: Target,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        slots: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Vary one config parameter over a grid.
    Sweep {
        config: PathBuf,
        /// Parameter name, dotted (`channel.gamma_db`) or bare if unambiguous.
        #[arg(long)]
        param: String,
        /// `a,b,c` or `start:stop:step`.
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        #[arg(long, value_enum, default_value = "simulate")]
        mode: Mode,
        #[arg(long, default_value_t = 1)]
        replicas: usize,
        #[command(flatten)]
        run: RunFlags,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Simulate,
    Analyze,
    Both,
}

fn parse_target(s: &str) -> Result<Target, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(format!("config error: {e}"))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<SweepError> for Failure {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::Config(c) => c.into(),
            SweepError::Run(r) => r.into(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(format!("i/o error: {e}"))
    }
}

/// What a command produced, before anything is written.
struct Output {
    table: Table,
    config: Option<RunConfig>,
    seeds: Vec<u64>,
    extra: Vec<(PathBuf, Table)>,
}

fn apply_flags(rc: &mut RunConfig, run: &RunFlags) {
    if let Some(s) = run.seed {
        rc.seed = Some(s);
    }
    if let Some(s) = run.slots {
        rc.slots = Some(s);
    }
    if let Some(w) = run.warmup {
        rc.warmup = Some(w);
    }
}

fn metrics_header(extra: &[&str]) -> Table {
    let mut h: Vec<&str> = Scalars::NAMES.to_vec();
    h.extend(["slots", "seed"]);
    h.extend(extra);
    Table::new(&h)
}

fn metrics_row(s: &Scalars, cfg: &SimConfig, tail: Vec<Cell>) -> Vec<Cell> {
    let mut row: Vec<Cell> = s.to_array().into_iter().map(Cell::from).collect();
    row.push(cfg.horizon.into());
    row.push(cfg.seed.into());
    row.extend(tail);
    row
}

fn cmd_simulate(config: &Path, run: &RunFlags, replicas: Option<usize>) -> Result<Output, Failure> {
    let mut rc = RunConfig::from_path(config)?;
    apply_flags(&mut rc, run);
    let cfg = rc.to_sim_config()?;
    let engine = Simulator::new(cfg.clone())?;
    let mut table = metrics_header(&["replica"]);
    match replicas {
        None => table.push(metrics_row(&engine.run().scalars(), &cfg, vec![0u64.into()])),
        Some(k) => {
            let rep = engine.replicate(k)?;
            for (i, r) in rep.reports.iter().enumerate() {
                table.push(metrics_row(&r.scalars(), &cfg, vec![i.into()]));
            }
            table.push(metrics_row(&rep.pooled.mean, &cfg, vec!["pooled".into()]));
        }
    }
    Ok(Output {
        table,
        config: Some(RunConfig::from_sim_config(&cfg, None)),
        seeds: vec![cfg.seed],
        extra: Vec::new(),
    })
}

fn cmd_analyze(config: &Path, dump: Option<&Path>) -> Result<Output, Failure> {
    let rc = RunConfig::from_path(config)?;
    let cfg = rc.to_sim_config()?;
    let policy = ChainPolicy::try_from(cfg.policy).map_err(|e| Failure::Usage(format!("config error: policy: {e}")))?;
    let report = analyze(&cfg)?;
    let mut table = metrics_header(&["method"]);
    table.push(metrics_row(&report.scalars(), &cfg, vec![report.method.name().into()]));
    let mut extra = Vec::new();
    if let Some(path) = dump {
        let chain = build_joint_chain(&cfg.source, policy, cfg.channel.success_probability())?;
        let n = chain.n_states();
        let label = |k: usize| format!("{}_{}", k / n, k % n);
        let mut header = vec!["from".to_string()];
        header.extend((0..n * n).map(label));
        let mut t = Table::new(&header);
        let m = chain.matrix();
        for r in 0..n * n {
            let mut row = vec![Cell::Text(label(r))];
            row.extend((0..n * n).map(|c| Cell::Float(m[(r, c)])));
            t.push(row);
        }
        extra.push((path.to_path_buf(), t));
    }
    Ok(Output { table, config: Some(RunConfig::from_sim_config(&cfg, None)), seeds: Vec::new(), extra })
}

fn cmd_optimize(config: &Path, problem: u8) -> Result<Output, Failure> {
    let rc = RunConfig::from_path(config)?;
    let source = rc.source_model()?;
    let p_s = rc.channel_spec()?.success_probability();
    let budget = rc.budget()?.ok_or_else(|| Failure::Usage("config error: budget: required".into()))?;
    let xhat0 = rc.xhat0.unwrap_or(0);
    if xhat0 >= source.n_states() {
        return Err(Failure::Usage(format!("config error: xhat0: {xhat0} outside the state space")));
    }
    let table = if problem == 1 {
        let s = solve_problem1(&source, p_s, budget, xhat0)?;
        let mut t = Table::new(&["decision", "p_alpha_star", "objective", "baseline", "sampling_fraction", "method"]);
        let decision = match s.decision {
            Problem1Decision::SampleWithProbability => "sample",
            Problem1Decision::NeverSample => "never_sample",
        };
        let method = match s.method {
            SolveMethod::ClosedForm => "closed_form",
            SolveMethod::Numeric => "numeric",
        };
        t.push(vec![
            decision.into(),
            s.p_alpha_star.into(),
            s.p_e_star.into(),
            s.p_e_ns.into(),
            s.p_alpha_star.into(),
            method.into(),
        ]);
        t
    } else {
        let s = solve_problem2_for_source(&source, p_s, budget, xhat0)?;
        let mut t = Table::new(&["decision", "n_star", "objective", "baseline", "sampling_fraction", "n_raw"]);
        let never = s.n_star.is_none();
        let ns = markov_tracking::optimize::p_ns(&source, xhat0)?;
        t.push(vec![
            if never { "never_sample" } else { "wait_then_generate" }.into(),
            s.n_star.into(),
            s.c_bar.into(),
            (ns / (1.0 - ns)).into(),
            s.sampling_fraction.into(),
            if never { Cell::Empty } else { s.n_raw.into() },
        ]);
        t
    };
    Ok(Output { table, config: Some(rc), seeds: Vec::new(), extra: Vec::new() })
}

fn cmd_reproduce(target: Target, seed: Option<u64>, slots: Option<u64>) -> Result<Output, Failure> {
    let mut opts = ReproduceOptions::default();
    if let Some(s) = seed {
        opts.seed = s;
    }
    if let Some(s) = slots {
        if s == 0 {
            return Err(Failure::Usage("--slots must be >= 1".into()));
        }
        opts.slots = s;
    }
    let table = reproduce(target, &opts)?;
    let seeds = if target.simulates() { vec![opts.seed] } else { Vec::new() };
    Ok(Output { table, config: None, seeds, extra: Vec::new() })
}

fn cmd_sweep(
    config: &Path,
    param: &str,
    grid: &str,
    mode: Mode,
    replicas: usize,
    run: &RunFlags,
) -> Result<Output, Failure> {
    let mut rc = RunConfig::from_path(config)?;
    apply_flags(&mut rc, run);
    if replicas == 0 {
        return Err(Failure::Usage("--replicas must be >= 1".into()));
    }
    let axis = SweepAxis::new(param, parse_grid(grid)?)?;
    let mode = match mode {
        Mode::Simulate => SweepMode::Simulate,
        Mode::Analyze => SweepMode::Analyze,
        Mode::Both => SweepMode::Both,
    };
    let table = sweep(&rc, &axis, mode, replicas)?;
    let seeds = rc.seed.into_iter().collect();
    Ok(Output { table, config: Some(rc), seeds, extra: Vec::new() })
}

fn emit(out: Output, target: Option<&Path>, command: &str, started: Instant) -> Result<(), Failure> {
    for (path, t) in &out.extra {
        t.write_csv(std::fs::File::create(path)?).map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    match target {
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            out.table.write_csv(&mut lock).map_err(|e| Failure::Runtime(e.to_string()))?;
            lock.flush()?;
        }
        Some(path) => {
            out.table
                .write_csv(std::fs::File::create(path)?)
                .map_err(|e| Failure::Runtime(e.to_string()))?;
            let manifest = RunManifest {
                command: command.to_string(),
                arguments: std::env::args().skip(1).collect(),
                config: out.config.map(|c| serde_json::to_value(c).expect("config serializes")),
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                seeds: out.seeds,
                output: path.display().to_string(),
                duration_s: started.elapsed().as_secs_f64(),
            };
            manifest.write(path)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let (name, out, result) = match &cli.command {
        Command::Simulate { config, run, replicas, common } => {
            ("simulate", &common.out, cmd_simulate(config, run, *replicas))
        }
        Command::Analyze { config, dump_joint_chain, common } => {
            ("analyze", &common.out, cmd_analyze(config, dump_joint_chain.as_deref()))
        }
        Command::Optimize { config, problem, common } => ("optimize", &common.out, cmd_optimize(config, *problem)),
        Command::Reproduce { target, seed, slots, common } => {
            ("reproduce", &common.out, cmd_reproduce(*target, *seed, *slots))
        }
        Command::Sweep { config, param, grid, mode, replicas, run, common } => {
            ("sweep", &common.out, cmd_sweep(config, param, grid, *mode, *replicas, run))
        }
    };
    let result = result.and_then(|o| emit(o, out.as_deref(), name, started));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("mtrack {name}: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("mtrack {name}: {m}");
            ExitCode::from(1)
        }
    }
}
