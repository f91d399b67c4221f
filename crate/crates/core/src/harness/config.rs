//! Flat TOML experiment configuration.
//!
//! Every key is optional; missing keys take the defaults of the chosen
//! `scenario`. Recognized keys:
//!
//! | key | type | well_specified | misspecified |
//! |---|---|---|---|
//! | `scenario` | `"well_specified"` or `"misspecified"` | | |
//! | `truth_model` | model name | `quadratic_plateau` | `mitscherlich_shifted` |
//! | `truth_theta` | array | `[80, 1.2, -0.003, 180]` | `[120, 0.015, 80]` |
//! | `fitted_model` | model name | `quadratic_plateau` | `quadratic_plateau` |
//! | `theta_init` | array | `[75, 1.0, -0.002, 160]` | same |
//! | `grid` | array | `[0, 50, ..., 250]` | same |
//! | `p_y` | number | `5` | `5` |
//! | `p_x` | number or array | `[0.3, 0.5, 0.7]` | same |
//! | `sigma` | number | `0.5` | `0.5` |
//! | `noise` | `"gaussian"` or `"uniform"` | `gaussian` | `gaussian` |
//! | `T` | integer | `30` | `100` |
//! | `R` | integer | `10` | `10` |
//! | `base_seed` | integer | `0` | `0` |
//! | `policies` | string or array | all five | all five |
//! | `epsilon_exponent`, `alpha`, `alpha1`, `alpha2`, `k` | number | `1.5`, `1`, `2`, `640`, `3` | same |
//! | `burn_in` | integer | per policy | per policy |
//! | `probe_step`, `probe_repeats` | number, integer | `5`, `3` | same |
//! | `count_probes` | bool | `false` | `false` |
//! | `out` | path | `out` | `out` |
//! | `parallel` | bool | `true` | `true` |
//!
//! A policy entry may name its own fitted family, as in
//! `"model_ucb@michaelis_menten"`; it then starts from that family's
//! reference initial values.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::environment::NoiseModel;
use crate::error::{Error, Result};
use crate::model::{ArmGrid, EconomicParams, ModelKind, ParamVector, ResponseModel};
use crate::policy::{PolicyConfig, PolicyKind};

pub const KNOWN_KEYS: [&str; 25] = [
    "scenario",
    "truth_model",
    "truth_theta",
    "fitted_model",
    "theta_init",
    "grid",
    "p_y",
    "p_x",
    "sigma",
    "noise",
    "T",
    "R",
    "base_seed",
    "policies",
    "epsilon_exponent",
    "alpha",
    "alpha1",
    "alpha2",
    "k",
    "burn_in",
    "probe_step",
    "probe_repeats",
    "count_probes",
    "out",
    "parallel",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    #[default]
    WellSpecified,
    Misspecified,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::WellSpecified => "well_specified",
            Scenario::Misspecified => "misspecified",
        })
    }
}

/// One policy column of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySpec {
    /// Name used in outputs: the policy name, plus `@family` when the
    /// family differs from the experiment's `fitted_model`.
    pub label: String,
    pub config: PolicyConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub truth: ResponseModel,
    pub noise: NoiseModel,
    pub grid: ArmGrid,
    pub p_y: f64,
    pub prices: Vec<f64>,
    pub horizon: usize,
    pub replicates: usize,
    pub base_seed: u64,
    pub policies: Vec<PolicySpec>,
    /// Charge every curvature probe draw as a round of the horizon.
    pub count_probes: bool,
    pub out: PathBuf,
    pub parallel: bool,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    scenario: Option<Scenario>,
    truth_model: Option<String>,
    truth_theta: Option<Vec<f64>>,
    fitted_model: Option<String>,
    theta_init: Option<Vec<f64>>,
    grid: Option<Vec<f64>>,
    p_y: Option<f64>,
    p_x: Option<OneOrMany<f64>>,
    sigma: Option<f64>,
    noise: Option<String>,
    #[serde(rename = "T")]
    horizon: Option<usize>,
    #[serde(rename = "R")]
    replicates: Option<usize>,
    base_seed: Option<u64>,
    policies: Option<OneOrMany<String>>,
    epsilon_exponent: Option<f64>,
    alpha: Option<f64>,
    alpha1: Option<f64>,
    alpha2: Option<f64>,
    k: Option<usize>,
    burn_in: Option<usize>,
    probe_step: Option<f64>,
    probe_repeats: Option<usize>,
    count_probes: Option<bool>,
    out: Option<PathBuf>,
    parallel: Option<bool>,
}

fn parse_model(s: &str) -> Result<ModelKind> {
    s.parse()
}

/// Parses `value` as a TOML value, falling back to a bare string.
fn parse_value(value: &str) -> toml::Value {
    let doc = format!("v = {value}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(value.to_string())),
        Err(_) => toml::Value::String(value.trim().to_string()),
    }
}

fn check_keys(table: &toml::Table) -> Result<()> {
    match table.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
        Some(k) => Err(Error::UnknownKey(k.clone())),
        None => Ok(()),
    }
}

impl ExperimentConfig {
    /// Parses a config document and applies `key=value` overrides on top.
    pub fn from_toml_str(doc: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut table: toml::Table = doc
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        check_keys(&table)?;
        for (k, v) in overrides {
            let key = k.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(Error::UnknownKey(key.to_string()));
            }
            table.insert(key.to_string(), parse_value(v));
        }
        let raw: RawConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        Self::resolve(raw)
    }

    pub fn from_path(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let doc = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&doc, overrides)
    }

    /// All defaults of a scenario.
    pub fn scenario_default(scenario: Scenario) -> Self {
        Self::resolve(RawConfig {
            scenario: Some(scenario),
            ..RawConfig::default()
        })
        .expect("scenario defaults are valid")
    }

    /// Splits `key=value`.
    pub fn parse_override(s: &str) -> Result<(String, String)> {
        match s.split_once('=') {
            Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
            _ => Err(Error::Config(format!("override `{s}` is not of the form key=value"))),
        }
    }

    fn resolve(raw: RawConfig) -> Result<Self> {
        let scenario = raw.scenario.unwrap_or_default();
        let (truth_default, horizon_default) = match scenario {
            Scenario::WellSpecified => (ModelKind::QuadraticPlateau, 30),
            Scenario::Misspecified => (ModelKind::MitscherlichShifted, 100),
        };
        let truth_kind = raw.truth_model.as_deref().map(parse_model).transpose()?.unwrap_or(truth_default);
        let truth_theta = raw.truth_theta.map(ParamVector::from).unwrap_or_else(|| truth_kind.reference_truth());
        let truth = ResponseModel::new(truth_kind, truth_theta)?;

        let fitted = raw
            .fitted_model
            .as_deref()
            .map(parse_model)
            .transpose()?
            .unwrap_or(ModelKind::QuadraticPlateau);
        let theta_init = raw.theta_init.map(ParamVector::from).unwrap_or_else(|| fitted.reference_init());

        let sigma = raw.sigma.unwrap_or(0.5);
        let noise = match raw.noise.as_deref().unwrap_or("gaussian") {
            "gaussian" | "normal" => NoiseModel::Gaussian { sigma },
            "uniform" => NoiseModel::Uniform { sigma },
            other => return Err(Error::Config(format!("unknown noise family `{other}`"))),
        };
        noise.validate()?;

        let grid = match raw.grid {
            Some(v) => ArmGrid::new(v)?,
            None => ArmGrid::uniform(250.0, 50.0)?,
        };
        let p_y = raw.p_y.unwrap_or(5.0);
        let prices = raw.p_x.map(OneOrMany::into_vec).unwrap_or_else(|| vec![0.3, 0.5, 0.7]);
        if prices.is_empty() {
            return Err(Error::Config("p_x must list at least one price".into()));
        }
        for &p_x in &prices {
            EconomicParams::new(p_y, p_x)?;
        }

        let horizon = raw.horizon.unwrap_or(horizon_default);
        let replicates = raw.replicates.unwrap_or(10);
        if horizon == 0 {
            return Err(Error::Config("T must be >= 1".into()));
        }
        if replicates == 0 {
            return Err(Error::Config("R must be >= 1".into()));
        }

        let names = raw
            .policies
            .map(OneOrMany::into_vec)
            .unwrap_or_else(|| PolicyKind::ALL.iter().map(|k| k.name().to_string()).collect());
        if names.is_empty() {
            return Err(Error::Config("policies must list at least one policy".into()));
        }
        let mut policies = Vec::with_capacity(names.len());
        for name in names {
            let (kind_name, model) = match name.split_once('@') {
                Some((k, m)) => (k, Some(parse_model(m.trim())?)),
                None => (name.as_str(), None),
            };
            let kind = PolicyKind::from_str(kind_name)?;
            let model = model.unwrap_or(fitted);
            let mut config = PolicyConfig::new(kind, model);
            if model == fitted {
                config.theta_init = theta_init.clone();
            }
            config.epsilon_exponent = raw.epsilon_exponent.unwrap_or(config.epsilon_exponent);
            config.alpha = raw.alpha.unwrap_or(config.alpha);
            config.alpha1 = raw.alpha1.unwrap_or(config.alpha1);
            config.alpha2 = raw.alpha2.unwrap_or(config.alpha2);
            config.k = raw.k.unwrap_or(config.k);
            config.burn_in = raw.burn_in.or(config.burn_in);
            config.probe_step = raw.probe_step.unwrap_or(config.probe_step);
            config.probe_repeats = raw.probe_repeats.unwrap_or(config.probe_repeats);
            config.validate()?;
            let label = if model == fitted || !kind.is_model_based() {
                kind.name().to_string()
            } else {
                format!("{}@{}", kind.name(), model.name())
            };
            if policies.iter().any(|p: &PolicySpec| p.label == label) {
                return Err(Error::Config(format!("policy `{label}` is listed twice")));
            }
            policies.push(PolicySpec { label, config });
        }

        Ok(ExperimentConfig {
            scenario,
            truth,
            noise,
            grid,
            p_y,
            prices,
            horizon,
            replicates,
            base_seed: raw.base_seed.unwrap_or(0),
            policies,
            count_probes: raw.count_probes.unwrap_or(false),
            out: raw.out.unwrap_or_else(|| PathBuf::from("out")),
            parallel: raw.parallel.unwrap_or(true),
        })
    }

    pub fn econ(&self, p_x: f64) -> Result<EconomicParams> {
        EconomicParams::new(self.p_y, p_x)
    }

    /// Seed of replicate `r`.
    pub fn seed(&self, replicate: usize) -> u64 {
        self.base_seed.wrapping_add(replicate as u64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_well_specified_default() {
        let c = ExperimentConfig::from_toml_str("", &[]).unwrap();
        assert_eq!(c.scenario, Scenario::WellSpecified);
        assert_eq!(c.horizon, 30);
        assert_eq!(c.replicates, 10);
        assert_eq!(c.prices, vec![0.3, 0.5, 0.7]);
        assert_eq!(c.policies.len(), 5);
        assert_eq!(c.grid.arms(), &[0.0, 50.0, 100.0, 150.0, 200.0, 250.0]);
        assert_eq!(c.truth.theta().as_slice(), &[80.0, 1.2, -0.003, 180.0]);
    }

    #[test]
    fn misspecified_defaults() {
        let c = ExperimentConfig::scenario_default(Scenario::Misspecified);
        assert_eq!(c.truth.kind(), ModelKind::MitscherlichShifted);
        assert_eq!(c.truth.theta().as_slice(), &[120.0, 0.015, 80.0]);
        assert_eq!(c.horizon, 100);
        assert!(c.policies.iter().all(|p| p.config.fitted_model == ModelKind::QuadraticPlateau));
    }

    #[test]
    fn unknown_key_is_named() {
        match ExperimentConfig::from_toml_str("horizon = 3", &[]) {
            Err(Error::UnknownKey(k)) => assert_eq!(k, "horizon"),
            other => panic!("{other:?}"),
        }
        let o = vec![("gamma".to_string(), "1".to_string())];
        assert!(matches!(ExperimentConfig::from_toml_str("", &o), Err(Error::UnknownKey(_))));
    }

    #[test]
    fn overrides_take_toml_or_bare_values() {
        let o: Vec<_> = ["T=1", "p_x=0.7", "policies=violin", "scenario=misspecified", "grid=[0, 100]"]
            .iter()
            .map(|s| ExperimentConfig::parse_override(s).unwrap())
            .collect();
        let c = ExperimentConfig::from_toml_str("T = 30", &o).unwrap();
        assert_eq!(c.horizon, 1);
        assert_eq!(c.prices, vec![0.7]);
        assert_eq!(c.policies.len(), 1);
        assert_eq!(c.policies[0].config.kind, PolicyKind::Violin);
        assert_eq!(c.scenario, Scenario::Misspecified);
        assert_eq!(c.grid.len(), 2);
    }

    #[test]
    fn per_policy_family() {
        let c = ExperimentConfig::from_toml_str(r#"policies = ["model_ucb", "model_ucb@michaelis_menten", "linucb"]"#, &[]).unwrap();
        let labels: Vec<_> = c.policies.iter().map(|p| p.label.as_str()).collect();
        assert_eq!(labels, ["model_ucb", "model_ucb@michaelis_menten", "linucb"]);
        assert_eq!(c.policies[1].config.theta_init, ModelKind::MichaelisMenten.reference_init());
    }

    #[test]
    fn invalid_values_are_rejected() {
        for doc in [
            "T = 0",
            "R = 0",
            "p_x = []",
            "policies = [\"thompson\"]",
            "sigma = -1",
            "noise = \"cauchy\"",
            "theta_init = [1.0]",
            "policies = [\"violin\", \"violin\"]",
            "k = 0",
        ] {
            assert!(ExperimentConfig::from_toml_str(doc, &[]).is_err(), "{doc}");
        }
        assert!(ExperimentConfig::parse_override("novalue").is_err());
    }
}
