//! Layering of config-file values under command-line flags.
//!
//! A config file is TOML. Top-level keys apply to every subcommand; a table
//! named after the subcommand (`[simulate]`, `[theta-scan]`, ...) overrides
//! them for that subcommand. Keys are flag names, with `-` or `_`.

use crate::CliError;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};
use std::path::Path;

fn normalize(table: &toml::Table) -> Map<String, Value> {
    table
        .iter()
        .filter(|(_, v)| !v.is_table())
        .map(|(k, v)| (k.replace('_', "-"), serde_json::to_value(v).expect("TOML values convert to JSON")))
        .collect()
}

pub fn read_config(path: &Path) -> Result<toml::Table, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    text.parse().map_err(|e: toml::de::Error| CliError::Input(format!("{}: {e}", path.display())))
}

/// `flags` with every unset option filled from `config`.
pub fn merge<T: Serialize + DeserializeOwned>(flags: &T, config: Option<&toml::Table>, command: &str) -> Result<T, CliError> {
    let Some(config) = config else {
        return Ok(serde_json::from_value(serde_json::to_value(flags).expect("options serialize")).expect("round trip"));
    };
    let mut merged = normalize(config);
    if let Some(section) = config.get(command) {
        let section = section
            .as_table()
            .ok_or_else(|| CliError::Input(format!("config entry `{command}` must be a table")))?;
        merged.extend(normalize(section));
    }
    if let Value::Object(given) = serde_json::to_value(flags).expect("options serialize") {
        merged.extend(given.into_iter().filter(|(_, v)| !v.is_null()));
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::Input(format!("config: {e}")))
}
