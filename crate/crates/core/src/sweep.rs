//! One-parameter sweeps over a base configuration.
//!
//! The swept parameter is written into the JSON form of the configuration
//! and the result is parsed again, so each grid point is validated exactly
//! like a config file. Names are either dotted (`channel.gamma_db`) or bare
//! when unambiguous (`gamma_db`).

use rayon::prelude::*;
use serde_json::Value;

use crate::analytic::analyze;
use crate::config::{ConfigError, RunConfig};
use crate::engine::{Scalars, SimConfig, Simulator};
use crate::error::Error;
use crate::output::{Cell, Table};

const INTEGER_FIELDS: [&str; 9] =
    ["source.n", "policy.d", "policy.n", "slots", "seed", "x0", "xhat0", "mem_n", "warmup"];

const FIELDS: [&str; 20] = [
    "source.n",
    "source.p",
    "source.q",
    "channel.p_s",
    "channel.p_tx_mw",
    "channel.r_m",
    "channel.beta",
    "channel.sigma2_mw",
    "channel.gamma_db",
    "policy.d",
    "policy.p_alpha",
    "policy.n",
    "slots",
    "seed",
    "x0",
    "xhat0",
    "kappa",
    "mem_n",
    "delta",
    "warmup",
];

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Run(#[from] Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    Simulate,
    Analyze,
    Both,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    /// Canonical dotted name.
    pub parameter: String,
    pub grid: Vec<f64>,
}

impl SweepAxis {
    pub fn new(parameter: &str, grid: Vec<f64>) -> Result<Self, ConfigError> {
        let canonical = resolve_name(parameter)?;
        if grid.is_empty() {
            return Err(ConfigError::Invalid { field: "grid".into(), message: "empty grid".into() });
        }
        Ok(Self { parameter: canonical.to_string(), grid })
    }
}

fn resolve_name(name: &str) -> Result<&'static str, ConfigError> {
    let unknown = || ConfigError::Invalid {
        field: name.to_string(),
        message: format!("unknown sweep parameter; expected one of {}", FIELDS.join(", ")),
    };
    if let Some(f) = FIELDS.iter().find(|f| **f == name) {
        return Ok(f);
    }
    if name == "horizon" {
        return Ok("slots");
    }
    let matches: Vec<&'static str> = FIELDS
        .iter()
        .copied()
        .filter(|f| f.rsplit('.').next() == Some(name))
        .collect();
    match matches.as_slice() {
        [one] => Ok(one),
        [] => Err(unknown()),
        many => Err(ConfigError::Invalid {
            field: name.to_string(),
            message: format!("ambiguous; use one of {}", many.join(", ")),
        }),
    }
}

/// `a,b,c` or the inclusive range `start:stop:step`.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, ConfigError> {
    let bad = |m: String| ConfigError::Invalid { field: "grid".into(), message: m };
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(format!("'{s}' is not a number")));
    let parts: Vec<&str> = text.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (a, b, h) = (num(start)?, num(stop)?, num(step)?);
            if h.is_nan() || h <= 0.0 || b < a {
                return Err(bad(format!("range '{text}' needs start <= stop and step > 0")));
            }
            let count = ((b - a) / h + 1e-9).floor() as usize;
            Ok((0..=count).map(|i| a + i as f64 * h).collect())
        }
        [_] => text.split(',').map(num).collect(),
        _ => Err(bad(format!("cannot parse grid '{text}'"))),
    }
}

/// The base configuration with `parameter` set to `value`.
pub fn point_config(base: &RunConfig, parameter: &str, value: f64) -> Result<RunConfig, ConfigError> {
    let name = resolve_name(parameter)?;
    let mut json = serde_json::to_value(base).expect("config serializes");
    let number = if INTEGER_FIELDS.contains(&name) {
        if value < 0.0 || value.fract() != 0.0 {
            return Err(ConfigError::Invalid {
                field: name.into(),
                message: format!("{value} is not a non-negative integer"),
            });
        }
        Value::from(value as u64)
    } else {
        serde_json::Number::from_f64(value).map(Value::Number).ok_or_else(|| ConfigError::Invalid {
            field: name.into(),
            message: format!("{value} is not finite"),
        })?
    };
    let mut slot = &mut json;
    let mut segments = name.split('.').peekable();
    while let Some(seg) = segments.next() {
        let obj = slot.as_object_mut().expect("config sections are objects");
        if segments.peek().is_none() {
            obj.insert(seg.to_string(), number);
            break;
        }
        slot = obj.entry(seg).or_insert_with(|| Value::Object(Default::default()));
    }
    RunConfig::from_json(&json.to_string())
}

fn push_rows(table: &mut Table, axis: &SweepAxis, point: f64, source: &str, mean: Scalars, err: Option<Scalars>) {
    let means = mean.to_array();
    let errs = err.map(|e| e.to_array());
    for (k, metric) in Scalars::NAMES.iter().enumerate() {
        table.push(vec![
            axis.parameter.as_str().into(),
            point.into(),
            source.into(),
            (*metric).into(),
            means[k].into(),
            errs.map(|e| e[k]).into(),
        ]);
    }
}

/// Long-form table: one row per grid point, evaluation source and metric.
/// `stderr` is filled for simulated rows when `replicas >= 2`.
pub fn sweep(base: &RunConfig, axis: &SweepAxis, mode: SweepMode, replicas: usize) -> Result<Table, SweepError> {
    let configs: Vec<SimConfig> = axis
        .grid
        .iter()
        .map(|&v| point_config(base, &axis.parameter, v)?.to_sim_config())
        .collect::<Result<_, ConfigError>>()?;
    type Point = (Option<(Scalars, Option<Scalars>)>, Option<Scalars>);
    let results: Vec<Point> = configs
        .par_iter()
        .map(|cfg| -> Result<Point, Error> {
            let sim = if mode != SweepMode::Analyze {
                let engine = Simulator::new(cfg.clone())?;
                Some(if replicas >= 2 {
                    let rep = engine.replicate(replicas)?;
                    (rep.pooled.mean, Some(rep.pooled.stderr))
                } else {
                    (engine.run().scalars(), None)
                })
            } else {
                None
            };
            let ana = if mode != SweepMode::Simulate { Some(analyze(cfg)?.scalars()) } else { None };
            Ok((sim, ana))
        })
        .collect::<Result<_, Error>>()?;
    let mut table = Table::new(&["parameter", "point", "source", "metric", "value", "stderr"]);
    for (&point, (sim, ana)) in axis.grid.iter().zip(results) {
        if let Some((mean, err)) = sim {
            push_rows(&mut table, axis, point, "simulated", mean, err);
        }
        if let Some(a) = ana {
            push_rows(&mut table, axis, point, "analytic", a, None);
        }
    }
    Ok(table)
}

/// Values of one metric from one evaluation source, in grid order.
pub fn metric_column(table: &Table, source: &str, metric: &str) -> Vec<f64> {
    let v = table.column("value").expect("sweep table");
    table
        .select(&[("source", source), ("metric", metric)])
        .map(|r| match r[v] {
            Cell::Float(x) => x,
            _ => f64::NAN,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> RunConfig {
        RunConfig::from_json(
            r#"{"source": {"model": "dtmc", "n": 2, "p": 0.3},
                "channel": {"p_s": 0.8},
                "policy": {"kind": "rs", "p_alpha": 0.5},
                "slots": 20000}"#,
        )
        .unwrap()
    }

    #[test]
    fn names_resolve() {
        assert_eq!(resolve_name("gamma_db").unwrap(), "channel.gamma_db");
        assert_eq!(resolve_name("horizon").unwrap(), "slots");
        assert!(resolve_name("n").is_err());
        assert!(resolve_name("temperature").is_err());
        assert_eq!(resolve_name("policy.n").unwrap(), "policy.n");
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0:10:2").unwrap(), vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0]);
        assert_eq!(parse_grid("0.1, 0.5").unwrap(), vec![0.1, 0.5]);
        assert_eq!(parse_grid("0:0.3:0.1").unwrap().len(), 4);
        assert!(parse_grid("1:0:1").is_err());
        assert!(parse_grid("a,b").is_err());
    }

    #[test]
    fn point_sets_nested_and_integer() {
        let c = point_config(&base(), "p_alpha", 0.25).unwrap();
        assert_eq!(c.policy.unwrap().p_alpha, Some(0.25));
        let c = point_config(&base(), "mem_n", 4.0).unwrap();
        assert_eq!(c.mem_n, Some(4));
        assert!(point_config(&base(), "mem_n", 4.5).is_err());
    }

    #[test]
    fn analytic_sweep_shape() {
        let axis = SweepAxis::new("p_alpha", vec![0.2, 0.6]).unwrap();
        let t = sweep(&base(), &axis, SweepMode::Analyze, 1).unwrap();
        assert_eq!(t.rows.len(), 2 * Scalars::NAMES.len());
        let pe = metric_column(&t, "analytic", "p_e");
        assert!(pe[0] > pe[1]);
    }

    #[test]
    fn out_of_range_point_is_a_config_error() {
        let axis = SweepAxis::new("p_alpha", vec![0.5, 1.5]).unwrap();
        assert!(matches!(sweep(&base(), &axis, SweepMode::Analyze, 1), Err(SweepError::Config(_))));
    }
}
