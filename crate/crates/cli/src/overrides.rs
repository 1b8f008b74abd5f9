//! `key.path=value` overrides applied to a JSON configuration.

use serde_json::Value;

use crate::error::{CliError, CliResult};

/// Sets `path` (dot-separated object keys or array indices) to `raw`, parsed
/// as JSON when possible and kept as a string otherwise. Missing object keys
/// are created.
pub fn apply(doc: &mut Value, assignment: &str) -> CliResult<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("override `{assignment}` is not key=value")))?;
    if path.is_empty() {
        return Err(CliError::Usage(format!("override `{assignment}` has an empty key")));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = doc;
    for key in path.split('.') {
        cur = match cur {
            Value::Array(items) => {
                let idx: usize = key
                    .parse()
                    .map_err(|_| CliError::Usage(format!("`{key}` in `{path}` is not an array index")))?;
                let len = items.len();
                items
                    .get_mut(idx)
                    .ok_or_else(|| CliError::Usage(format!("index {idx} in `{path}` out of range (len {len})")))?
            }
            Value::Null => {
                *cur = Value::Object(Default::default());
                cur.as_object_mut().unwrap().entry(key).or_insert(Value::Null)
            }
            Value::Object(map) => map.entry(key).or_insert(Value::Null),
            _ => return Err(CliError::Usage(format!("`{path}` descends into a scalar"))),
        };
    }
    *cur = value;
    Ok(())
}

pub fn apply_all(doc: &mut Value, assignments: &[String]) -> CliResult<()> {
    assignments.iter().try_for_each(|a| apply(doc, a))
}
