//! JSON run configuration.
//!
//! ```json
//! {
//!   "source":  {"model": "bdmp", "n": 3, "p": 0.1, "q": 0.2},
//!   "channel": {"p_s": 0.922},
//!   "policy":  {"kind": "rs", "p_alpha": 0.7},
//!   "slots": 1000000, "seed": 7,
//!   "budget":  {"delta": 1.0, "delta_max": 0.5}
//! }
//! ```
//!
//! Unknown keys are rejected. Omitted scalars take the [`SimConfig::new`]
//! defaults; `horizon` is accepted as an alias of `slots`.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelSpec, PhysicalChannel};
use crate::engine::SimConfig;
use crate::optimize::Budget;
use crate::policies::PolicySpec;
use crate::sources::{SourceKind, SourceModel};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{field}: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: &str, message: impl ToString) -> ConfigError {
    ConfigError::Invalid { field: field.to_string(), message: message.to_string() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelName {
    Dtmc,
    Bdmp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub model: ModelName,
    pub n: usize,
    pub p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
}

/// Either `p_s` alone or the five link parameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_tx_mw: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2_mw: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_db: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Uniform,
    ChangeAware,
    SemanticsAware,
    Rs,
    Wtg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    pub delta: f64,
    pub delta_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub source: SourceConfig,
    pub channel: ChannelConfig,
    /// Not needed by the optimizers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<PolicyConfig>,
    #[serde(default, alias = "horizon", skip_serializing_if = "Option::is_none")]
    pub slots: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xhat0: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost_matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mem_n: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warmup: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fading: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<BudgetConfig>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ConfigError::Schema {
                path: if path == "." { "<root>".into() } else { path },
                message: e.into_inner().to_string(),
            }
        })
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    pub fn source_model(&self) -> Result<SourceModel, ConfigError> {
        let s = &self.source;
        let built = match (s.model, s.q) {
            (ModelName::Dtmc, None) => SourceModel::dtmc(s.n, s.p),
            (ModelName::Dtmc, Some(_)) => {
                return Err(invalid("source.q", "q is derived from p for a dtmc source"))
            }
            (ModelName::Bdmp, Some(q)) => SourceModel::bdmp(s.n, s.p, q),
            (ModelName::Bdmp, None) => return Err(invalid("source.q", "required for bdmp")),
        };
        built.map_err(|e| invalid("source", e))
    }

    pub fn channel_spec(&self) -> Result<ChannelSpec, ConfigError> {
        let c = &self.channel;
        let link = [c.p_tx_mw, c.r_m, c.beta, c.sigma2_mw, c.gamma_db];
        match (c.p_s, link) {
            (Some(p_s), [None, None, None, None, None]) => {
                ChannelSpec::direct(p_s).map_err(|e| invalid("channel.p_s", e))
            }
            (None, [Some(p), Some(r), Some(b), Some(s), Some(g)]) => {
                PhysicalChannel::with_gamma_db(p, r, b, s, g)
                    .map(ChannelSpec::physical)
                    .map_err(|e| invalid("channel", e))
            }
            _ => Err(invalid(
                "channel",
                "give either p_s alone or all of p_tx_mw, r_m, beta, sigma2_mw, gamma_db",
            )),
        }
    }

    pub fn policy_spec(&self) -> Result<PolicySpec, ConfigError> {
        let p = self.policy.as_ref().ok_or_else(|| invalid("policy", "required"))?;
        let only = |field: &str, present: bool| -> Result<(), ConfigError> {
            let extras = [("d", p.d.is_some()), ("p_alpha", p.p_alpha.is_some()), ("n", p.n.is_some())];
            for (name, set) in extras {
                if set && name != field {
                    return Err(invalid(&format!("policy.{name}"), "not used by this policy kind"));
                }
            }
            if !present && !field.is_empty() {
                return Err(invalid(&format!("policy.{field}"), "required for this policy kind"));
            }
            Ok(())
        };
        let spec = match p.kind {
            PolicyKind::Uniform => {
                only("d", p.d.is_some())?;
                PolicySpec::uniform(p.d.unwrap_or_default())
            }
            PolicyKind::Rs => {
                only("p_alpha", p.p_alpha.is_some())?;
                PolicySpec::randomized(p.p_alpha.unwrap_or_default())
            }
            PolicyKind::Wtg => {
                only("n", p.n.is_some())?;
                Ok(PolicySpec::wait_then_generate(p.n.unwrap_or_default()))
            }
            PolicyKind::ChangeAware => {
                only("", true)?;
                Ok(PolicySpec::ChangeAware)
            }
            PolicyKind::SemanticsAware => {
                only("", true)?;
                Ok(PolicySpec::SemanticsAware)
            }
        };
        spec.map_err(|e| invalid("policy", e))
    }

    pub fn budget(&self) -> Result<Option<Budget>, ConfigError> {
        self.budget
            .map(|b| Budget::new(b.delta, b.delta_max).map_err(|e| invalid("budget", e)))
            .transpose()
    }

    /// Build and validate the simulation configuration.
    pub fn to_sim_config(&self) -> Result<SimConfig, ConfigError> {
        let mut cfg = SimConfig::new(self.source_model()?, self.channel_spec()?, self.policy_spec()?);
        if let Some(v) = self.slots {
            cfg.horizon = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.x0 {
            cfg.x0 = v;
        }
        if let Some(v) = self.xhat0 {
            cfg.xhat0 = v;
        }
        if let Some(rows) = &self.cost_matrix {
            let n = rows.len();
            if rows.iter().any(|r| r.len() != n) {
                return Err(invalid("cost_matrix", "must be square"));
            }
            cfg.cost_matrix = Some(DMatrix::from_fn(n, n, |i, j| rows[i][j]));
        }
        if let Some(v) = self.kappa {
            cfg.kappa = v;
        }
        if let Some(v) = self.mem_n {
            cfg.mem_n = v;
        }
        if let Some(v) = self.delta {
            cfg.delta = v;
        }
        if let Some(v) = self.warmup {
            cfg.warmup = v;
        }
        if let Some(v) = self.fading {
            cfg.fading = v;
        }
        cfg.validate().map_err(|e| invalid("<root>", e))?;
        Ok(cfg)
    }

    /// Every field spelled out, so that the file alone reproduces `cfg`.
    pub fn from_sim_config(cfg: &SimConfig, budget: Option<&Budget>) -> Self {
        let src = &cfg.source;
        let source = SourceConfig {
            model: match src.kind() {
                SourceKind::Dtmc => ModelName::Dtmc,
                SourceKind::Bdmp => ModelName::Bdmp,
            },
            n: src.n_states(),
            p: src.p(),
            q: (src.kind() == SourceKind::Bdmp).then(|| src.q()),
        };
        let channel = match &cfg.channel {
            ChannelSpec::Direct { p_s } => ChannelConfig { p_s: Some(*p_s), ..Default::default() },
            ChannelSpec::Physical(l) => ChannelConfig {
                p_s: None,
                p_tx_mw: Some(l.p_tx_mw()),
                r_m: Some(l.r_m()),
                beta: Some(l.beta()),
                sigma2_mw: Some(l.sigma2_mw()),
                gamma_db: Some(10.0 * l.gamma().log10()),
            },
        };
        let blank = |kind| PolicyConfig { kind, d: None, p_alpha: None, n: None };
        let policy = match cfg.policy {
            PolicySpec::Uniform { period } => PolicyConfig { d: Some(period), ..blank(PolicyKind::Uniform) },
            PolicySpec::ChangeAware => blank(PolicyKind::ChangeAware),
            PolicySpec::SemanticsAware => blank(PolicyKind::SemanticsAware),
            PolicySpec::RandomizedStationary { p_alpha } => {
                PolicyConfig { p_alpha: Some(p_alpha), ..blank(PolicyKind::Rs) }
            }
            PolicySpec::WaitThenGenerate { threshold } => {
                PolicyConfig { n: Some(threshold), ..blank(PolicyKind::Wtg) }
            }
        };
        let c = cfg.resolved_cost_matrix();
        Self {
            source,
            channel,
            policy: Some(policy),
            slots: Some(cfg.horizon),
            seed: Some(cfg.seed),
            x0: Some(cfg.x0),
            xhat0: Some(cfg.xhat0),
            cost_matrix: Some(c.row_iter().map(|r| r.iter().copied().collect()).collect()),
            kappa: Some(cfg.kappa),
            mem_n: Some(cfg.mem_n),
            delta: Some(cfg.delta),
            warmup: Some(cfg.warmup),
            fading: Some(cfg.fading),
            budget: budget.map(|b| BudgetConfig { delta: b.delta(), delta_max: b.delta_max() }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
        "source": {"model": "bdmp", "n": 3, "p": 0.1, "q": 0.2},
        "channel": {"p_s": 0.922},
        "policy": {"kind": "rs", "p_alpha": 0.7},
        "slots": 1000, "seed": 9
    }"#;

    #[test]
    fn parses_and_builds() {
        let rc = RunConfig::from_json(BASE).unwrap();
        let cfg = rc.to_sim_config().unwrap();
        assert_eq!(cfg.horizon, 1000);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.policy, PolicySpec::RandomizedStationary { p_alpha: 0.7 });
        assert_eq!(cfg.kappa, 2.0);
    }

    #[test]
    fn horizon_alias() {
        let text = BASE.replace("\"slots\"", "\"horizon\"");
        assert_eq!(RunConfig::from_json(&text).unwrap().slots, Some(1000));
    }

    #[test]
    fn unknown_key_reports_path() {
        let text = BASE.replace("\"p_alpha\"", "\"palpha\"");
        match RunConfig::from_json(&text) {
            Err(ConfigError::Schema { path, message }) => {
                assert_eq!(path, "policy.palpha");
                assert!(message.contains("palpha"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        let text = BASE.replace("0.922", "\"high\"");
        match RunConfig::from_json(&text) {
            Err(ConfigError::Schema { path, .. }) => assert_eq!(path, "channel.p_s"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn semantic_errors() {
        let bad = [
            BASE.replace(r#""q": 0.2"#, r#""q": 1.2"#),
            BASE.replace(r#""kind": "rs", "p_alpha": 0.7"#, r#""kind": "uniform""#),
            BASE.replace(r#""kind": "rs", "p_alpha": 0.7"#, r#""kind": "change_aware", "n": 3"#),
            BASE.replace(r#"{"p_s": 0.922}"#, r#"{"p_s": 0.9, "beta": 4}"#),
            BASE.replace(r#""model": "bdmp""#, r#""model": "dtmc""#),
        ];
        for text in bad {
            let rc = RunConfig::from_json(&text).unwrap();
            assert!(matches!(rc.to_sim_config(), Err(ConfigError::Invalid { .. })), "{text}");
        }
    }

    #[test]
    fn physical_channel_in_db() {
        let text = BASE.replace(
            r#"{"p_s": 0.922}"#,
            r#"{"p_tx_mw": 1, "r_m": 30, "beta": 4, "sigma2_mw": 1e-10, "gamma_db": 10}"#,
        );
        let cfg = RunConfig::from_json(&text).unwrap().to_sim_config().unwrap();
        match cfg.channel {
            ChannelSpec::Physical(l) => assert!((l.gamma() - 10.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn resolved_round_trip() {
        let cfg = RunConfig::from_json(BASE).unwrap().to_sim_config().unwrap();
        let resolved = RunConfig::from_sim_config(&cfg, None);
        let text = serde_json::to_string(&resolved).unwrap();
        let back = RunConfig::from_json(&text).unwrap().to_sim_config().unwrap();
        assert_eq!(back, SimConfig { cost_matrix: Some(cfg.resolved_cost_matrix()), ..cfg });
    }
}
