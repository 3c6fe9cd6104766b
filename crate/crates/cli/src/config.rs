//! Raw experiment settings as they arrive from a JSON config file or from
//! flags, before command-specific defaults and validation.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorArg {
    PosteriorVariance,
    SquaredError,
}

/// A scalar or a list; config files may use either.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

fn one_or_many<'de, D, T>(de: D) -> Result<Option<Vec<T>>, D::Error>
where
    D: serde::Deserializer<'de>,
    T: Deserialize<'de>,
{
    Ok(Option::<OneOrMany<T>>::deserialize(de)?.map(|v| match v {
        OneOrMany::One(x) => vec![x],
        OneOrMany::Many(xs) => xs,
    }))
}

/// Every setting any subcommand understands. Keys match the flag names with
/// dashes replaced by underscores.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub command: Option<String>,
    #[serde(default, deserialize_with = "one_or_many")]
    pub gamma: Option<Vec<f64>>,
    #[serde(default, deserialize_with = "one_or_many")]
    pub d: Option<Vec<usize>>,
    pub v: Option<f64>,
    #[serde(rename = "J", default, deserialize_with = "one_or_many")]
    pub j: Option<Vec<f64>>,
    #[serde(rename = "G", default, deserialize_with = "one_or_many")]
    pub g: Option<Vec<f64>>,
    pub normalization: Option<f64>,
    pub functions: Option<Value>,
    pub prior: Option<Value>,
    #[serde(default, deserialize_with = "one_or_many")]
    pub mu_list: Option<Vec<u64>>,
    pub mu: Option<u64>,
    pub theta: Option<Vec<f64>>,
    pub mc_samples: Option<usize>,
    pub resolution: Option<usize>,
    pub seed: Option<u64>,
    pub threshold: Option<f64>,
    pub estimator: Option<EstimatorArg>,
    pub points: Option<usize>,
    pub tolerance: Option<f64>,
    pub curve: Option<String>,
    pub workers: Option<usize>,
    pub format: Option<Format>,
}

macro_rules! overlay {
    ($self:ident, $base:ident; $($field:ident),*) => {
        RawConfig { $($field: $self.$field.or($base.$field)),* }
    };
}

impl RawConfig {
    /// Values set here win over those in `base`.
    pub fn overlay(self, base: RawConfig) -> RawConfig {
        overlay!(self, base; command, gamma, d, v, j, g, normalization, functions, prior, mu_list, mu,
            theta, mc_samples, resolution, seed, threshold, estimator, points, tolerance, curve, workers, format)
    }

    /// Names of settings still present; resolvers take what they use, so
    /// anything left over does not apply to the command.
    pub fn leftover(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        macro_rules! check {
            ($($field:ident => $name:expr),*) => { $(if self.$field.is_some() { out.push($name); })* };
        }
        check!(gamma => "gamma", d => "d", v => "v", j => "J", g => "G", normalization => "normalization",
            functions => "functions", prior => "prior", mu_list => "mu-list", mu => "mu", theta => "theta",
            mc_samples => "mc-samples", resolution => "resolution", seed => "seed", threshold => "threshold",
            estimator => "estimator", points => "points", tolerance => "tolerance", curve => "curve",
            workers => "workers");
        out
    }
}

/// Loads settings from a config file. Accepts a plain settings object, a JSON
/// output file (its `config` member is used) or a CSV output file (its
/// `# config:` line is used), so any output can be replayed.
pub fn load_config_file(path: &Path) -> Result<RawConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::invalid("config", format!("{}: {e}", path.display())))?;
    let value: Value = if text.trim_start().starts_with('{') {
        let v: Value = serde_json::from_str(&text).map_err(|e| CliError::invalid("config", e.to_string()))?;
        match v.get("config") {
            Some(inner) if inner.is_object() => inner.clone(),
            _ => v,
        }
    } else {
        let line = text
            .lines()
            .find_map(|l| l.strip_prefix("# config: "))
            .ok_or_else(|| CliError::invalid("config", "no JSON object and no '# config:' line found"))?;
        serde_json::from_str(line).map_err(|e| CliError::invalid("config", e.to_string()))?
    };
    serde_json::from_value(value).map_err(|e| CliError::invalid("config", e.to_string()))
}

/// Parses a value given either as inline JSON or as a path to a JSON file.
pub fn inline_or_file(field: &'static str, arg: &str) -> Result<Value, CliError> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        fs::read_to_string(arg).map_err(|e| CliError::invalid(field, format!("{arg}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| CliError::invalid(field, e.to_string()))
}

/// Deserialises an embedded JSON object into a library type.
pub fn decode<T: DeserializeOwned>(field: &'static str, value: Value) -> Result<T, CliError> {
    serde_json::from_value(value).map_err(|e| CliError::invalid(field, e.to_string()))
}
