//! `--override key=value` patching of the parsed TOML config.
//!
//! Keys are dotted paths (`experiment.v_x`); values parse as TOML literals
//! with a plain-string fallback, so `--override experiment.kind=emergence`
//! and `--override experiment.magnitudes=[1.0,2.0]` both work. Overrides
//! may introduce keys the config schema does not know; deserialization
//! rejects those afterwards, naming the key.

use toml::Value;

/// Apply one `key=value` override in place.
pub fn apply(root: &mut Value, spec: &str) -> Result<(), String> {
    let (key, raw_value) = spec
        .split_once('=')
        .ok_or_else(|| format!("override `{spec}` is not of the form key=value"))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(format!("override `{spec}` has an empty key"));
    }
    let value = parse_literal(raw_value.trim());

    let mut node = root;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let table = node
            .as_table_mut()
            .ok_or_else(|| format!("override `{key}`: `{}` is not a table", parts[..i].join(".")))?;
        if i == parts.len() - 1 {
            table.insert(part.to_string(), value);
            return Ok(());
        }
        node = table
            .entry(part.to_string())
            .or_insert_with(|| Value::Table(Default::default()));
    }
    unreachable!("parts is non-empty");
}

/// Parse the value as a TOML literal, falling back to a string.
fn parse_literal(raw: &str) -> Value {
    let wrapped = format!("v = {raw}");
    if let Ok(Value::Table(mut t)) = wrapped.parse::<Value>() {
        if let Some(v) = t.remove("v") {
            return v;
        }
    }
    Value::String(raw.to_string())
}
