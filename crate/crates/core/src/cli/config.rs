use std::path::Path;

use crate::trainer::RunConfig;
use crate::{Error, Result};

/// Keys that are valid but absent from the serialized defaults.
const OPTIONAL_KEYS: [&str; 5] = [
    "data.train",
    "data.validation",
    "data.text_column",
    "data.text2_column",
    "data.label_column",
];

fn defaults() -> toml::Table {
    toml::Table::try_from(RunConfig::default()).expect("defaults serialize")
}

/// Parse an override value: TOML syntax first, then a comma-separated list,
/// then a bare string.
fn parse_value(raw: &str) -> toml::Value {
    let parse = |s: &str| -> Option<toml::Value> {
        toml::from_str::<toml::Table>(&format!("v = {s}")).ok().and_then(|mut t| t.remove("v"))
    };
    if let Some(v) = parse(raw) {
        return v;
    }
    if raw.contains(',') {
        let items = raw.split(',').map(|s| parse(s.trim()).unwrap_or_else(|| toml::Value::String(s.trim().into())));
        return toml::Value::Array(items.collect());
    }
    toml::Value::String(raw.to_string())
}

/// Integers where the schema expects floats are widened, and a single value
/// where it expects a list becomes a one-element list.
fn coerce(value: toml::Value, like: Option<&toml::Value>) -> toml::Value {
    match (value, like) {
        (v, Some(toml::Value::Array(proto))) if !v.is_array() => {
            toml::Value::Array(vec![coerce(v, proto.first())])
        }
        (toml::Value::Integer(i), Some(toml::Value::Float(_))) => toml::Value::Float(i as f64),
        (toml::Value::Array(items), Some(toml::Value::Array(proto))) => {
            let first = proto.first();
            toml::Value::Array(items.into_iter().map(|v| coerce(v, first)).collect())
        }
        (v, _) => v,
    }
}

fn lookup<'a>(table: &'a toml::Table, path: &[&str]) -> Option<&'a toml::Value> {
    let (last, parents) = path.split_last()?;
    let mut t = table;
    for p in parents {
        t = t.get(*p)?.as_table()?;
    }
    t.get(*last)
}

/// Apply one dotted `key=value` override to a configuration table.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Usage(format!("override `{assignment}` is not of the form key=value")))?;
    let key = key.trim();
    let path: Vec<&str> = key.split('.').collect();
    let schema = defaults();
    let proto = lookup(&schema, &path);
    let known = OPTIONAL_KEYS.contains(&key) || proto.is_some_and(|v| !v.is_table());
    if !known {
        return Err(Error::validation(key, "unknown configuration key"));
    }
    let value = coerce(parse_value(raw.trim()), proto);
    let (last, parents) = path.split_last().unwrap();
    let mut t = table;
    for p in parents {
        t = t
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::validation(key, format!("`{p}` is not a section")))?;
    }
    t.insert(last.to_string(), value);
    Ok(())
}

/// Read a configuration file (or start from defaults), apply overrides, and
/// validate the result.
pub fn resolve_config(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig> {
    let mut table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Usage(format!("cannot read config {}: {e}", p.display())))?;
            toml::from_str::<toml::Table>(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
        }
        None => toml::Table::new(),
    };
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let cfg: RunConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| Error::Config(e.to_string().trim().to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn config_to_toml(cfg: &RunConfig) -> String {
    toml::to_string(cfg).expect("config serializes")
}
