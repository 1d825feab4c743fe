//! Flat `key = value` scenario files.
//!
//! Every key of [`ScenarioConfig`] is accepted, plus `p` for the single-RB
//! outage probability. `mode` and `rach_mode` take strings, everything else
//! takes a number:
//!
//! ```toml
//! mode = "distributed_sca"
//! n_devices = 50
//! n_rbs = 50
//! v_a = 1.0
//! p = 0.01
//! r_c = 10
//! ```
//!
//! Keys are applied in file order, so `p` should come after `mean_snr_db`.

use std::path::Path;

use aoisim::centralized::RachMode;
use aoisim::ScenarioConfig;

use crate::CliError;

fn rach_mode(s: &str) -> Result<RachMode, CliError> {
    match s {
        "thinning" => Ok(RachMode::Thinning),
        "preambles" => Ok(RachMode::Preambles),
        _ => Err(CliError::Config(format!("unknown rach_mode `{s}`"))),
    }
}

/// Sets one key from its textual value.
pub fn set_key(config: &mut ScenarioConfig, key: &str, value: &str) -> Result<(), CliError> {
    match key {
        "mode" => config.mode = value.parse()?,
        "rach_mode" => config.rach_mode = rach_mode(value)?,
        // integer seeds above 2^53 would not survive a trip through f64
        "seed" => {
            config.seed = value
                .parse()
                .map_err(|_| CliError::Config(format!("`seed` expects an unsigned integer, got `{value}`")))?
        }
        _ => {
            let v: f64 = value
                .parse()
                .map_err(|_| CliError::Config(format!("`{key}` expects a number, got `{value}`")))?;
            config.set_param(key, v)?;
        }
    }
    Ok(())
}

pub fn apply_toml(config: &mut ScenarioConfig, text: &str) -> Result<(), CliError> {
    let table: toml::Table = text.parse().map_err(|e| CliError::Config(format!("{e}")))?;
    for (key, value) in &table {
        let text = match value {
            toml::Value::String(s) => s.clone(),
            toml::Value::Integer(i) => i.to_string(),
            toml::Value::Float(f) => f.to_string(),
            other => {
                return Err(CliError::Config(format!(
                    "`{key}` must be a string or a number, got {}",
                    other.type_str()
                )))
            }
        };
        set_key(config, key, &text)?;
    }
    Ok(())
}

pub fn load(path: &Path) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut config = ScenarioConfig::default();
    apply_toml(&mut config, &text)?;
    Ok(config)
}

/// The config as `key = value` lines, in a form [`apply_toml`] reads back.
pub fn echo(config: &ScenarioConfig) -> Vec<String> {
    let serde_json::Value::Object(map) = serde_json::to_value(config).expect("scenario config serializes") else {
        unreachable!("a struct serializes to an object")
    };
    map.iter()
        .map(|(k, v)| match v {
            // TOML integers stop at i64::MAX
            serde_json::Value::Number(n) if n.as_u64().is_some_and(|u| u > i64::MAX as u64) => {
                format!("{k} = \"{n}\"")
            }
            _ => format!("{k} = {v}"),
        })
        .collect()
}

/// Overrides stacked on a base config: file first, then `--set` pairs, then
/// the dedicated flags.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Layers {
    pub file: Option<String>,
    pub sets: Vec<(String, String)>,
    pub mode: Option<String>,
    pub seed: Option<u64>,
    pub slots: Option<u64>,
}

impl Layers {
    pub fn read_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        // fail early on syntax errors
        let _: toml::Table = text.parse().map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        self.file = Some(text);
        Ok(())
    }

    /// Whether any layer sets the mode.
    pub fn sets_mode(&self) -> bool {
        let in_file = self
            .file
            .as_deref()
            .and_then(|t| t.parse::<toml::Table>().ok())
            .is_some_and(|t| t.contains_key("mode"));
        in_file || self.mode.is_some() || self.sets.iter().any(|(k, _)| k == "mode")
    }

    pub fn apply(&self, config: &mut ScenarioConfig) -> Result<(), CliError> {
        if let Some(text) = &self.file {
            apply_toml(config, text)?;
        }
        for (k, v) in &self.sets {
            set_key(config, k, v)?;
        }
        if let Some(m) = &self.mode {
            set_key(config, "mode", m)?;
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(slots) = self.slots {
            config.slots = slots;
        }
        Ok(())
    }
}

/// Splits a `key=value` argument.
pub fn parse_set(arg: &str) -> Result<(String, String), String> {
    match arg.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_owned(), v.trim().to_owned())),
        _ => Err(format!("expected key=value, got `{arg}`")),
    }
}
