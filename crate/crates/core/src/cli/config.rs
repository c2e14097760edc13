//! Config files and flags share one flat key space: a TOML file supplies
//! values, flags given on the command line override them, and anything
//! left unset takes the command's default.

use std::collections::BTreeSet;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use super::CliError;

fn object(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => Map::new(),
    }
}

/// Merge `file` (TOML) and `flags` (unset flags serialize as `null`) into `C`.
pub fn resolve<C>(file: Option<&Path>, flags: &impl Serialize) -> Result<C, CliError>
where
    C: Serialize + DeserializeOwned + Default,
{
    let usage = |msg: String| CliError::Usage(msg);
    let mut merged = Map::new();
    if let Some(path) = file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        let table: toml::Table =
            toml::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))?;
        merged = object(serde_json::to_value(table).map_err(|e| usage(e.to_string()))?);
    }
    let flags = serde_json::to_value(flags).map_err(|e| usage(e.to_string()))?;
    for (k, v) in object(flags) {
        if !v.is_null() {
            merged.insert(k, v);
        }
    }
    let known: BTreeSet<String> =
        object(serde_json::to_value(C::default()).map_err(|e| usage(e.to_string()))?).keys().cloned().collect();
    let unknown: Vec<&String> = merged.keys().filter(|k| !known.contains(*k)).collect();
    if !unknown.is_empty() {
        return Err(usage(format!("unknown config keys {unknown:?}")));
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| usage(format!("invalid config: {e}")))
}

/// The effective configuration as echoed in run reports.
pub fn echo(config: &impl Serialize) -> Value {
    serde_json::to_value(config).unwrap_or(Value::Null)
}
