//! Flat JSON config files merged under command-line flags.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

pub fn load(path: &Path) -> Result<Map<String, Value>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    match serde_json::from_str(&text)
        .with_context(|| format!("config {} is not valid JSON", path.display()))?
    {
        Value::Object(map) => Ok(map),
        _ => bail!("config {} must be a JSON object", path.display()),
    }
}

/// Alternative spellings of a config value: as given, then as the
/// comma-separated string the flags use.
fn spellings(v: &Value) -> Vec<Value> {
    let mut out = vec![v.clone()];
    match v {
        Value::Number(n) => out.push(Value::String(n.to_string())),
        Value::Array(items) => {
            let rows: Option<Vec<String>> = items
                .iter()
                .map(|x| match x {
                    Value::Number(n) => Some(n.to_string()),
                    Value::Array(inner) => inner
                        .iter()
                        .map(|y| y.as_f64().map(|f| f.to_string()))
                        .collect::<Option<Vec<_>>>()
                        .map(|r| r.join(",")),
                    _ => None,
                })
                .collect();
            if let Some(rows) = rows {
                let sep = if items.iter().any(Value::is_array) {
                    ";"
                } else {
                    ","
                };
                out.push(Value::String(rows.join(sep)));
            }
        }
        _ => {}
    }
    out
}

/// Fills every unset field of `args` from `config`. Keys that `args` does
/// not have, and values of the wrong type, are rejected by name.
pub fn merge<T: Serialize + DeserializeOwned>(
    args: T,
    config: Option<&Map<String, Value>>,
) -> Result<T> {
    let Some(config) = config else {
        return Ok(args);
    };
    let mut current = serde_json::to_value(&args)?;
    for (key, value) in config {
        let obj = current
            .as_object()
            .ok_or_else(|| anyhow!("arguments are not an object"))?;
        let Some(existing) = obj.get(key) else {
            bail!("unknown config key `{key}`");
        };
        if !(existing.is_null() || existing == &Value::Bool(false)) {
            continue;
        }
        let mut accepted = None;
        for candidate in spellings(value) {
            let mut trial = current.clone();
            trial[key.as_str()] = candidate;
            if serde_json::from_value::<T>(trial.clone()).is_ok() {
                accepted = Some(trial);
                break;
            }
        }
        current =
            accepted.ok_or_else(|| anyhow!("config key `{key}` has an invalid value {value}"))?;
    }
    Ok(serde_json::from_value(current)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, Serialize, Deserialize, PartialEq)]
    #[serde(rename_all = "kebab-case")]
    struct A {
        model: Option<String>,
        theta: Option<String>,
        nodes: Option<usize>,
        quiet: bool,
    }

    fn cfg(text: &str) -> Map<String, Value> {
        serde_json::from_str(text).unwrap()
    }

    #[test]
    fn flags_win_and_gaps_are_filled() {
        let a = A {
            model: Some("bernoulli".into()),
            theta: None,
            nodes: None,
            quiet: false,
        };
        let c = cfg(r#"{"model": "mixture", "theta": [0.2, 0.3], "nodes": 4, "quiet": true}"#);
        let m = merge(a, Some(&c)).unwrap();
        assert_eq!(
            m,
            A {
                model: Some("bernoulli".into()),
                theta: Some("0.2,0.3".into()),
                nodes: Some(4),
                quiet: true
            }
        );
    }

    #[test]
    fn unknown_and_mistyped_keys_are_named() {
        let a = A {
            model: None,
            theta: None,
            nodes: None,
            quiet: false,
        };
        let e = merge(a, Some(&cfg(r#"{"nodez": 3}"#)))
            .unwrap_err()
            .to_string();
        assert!(e.contains("nodez"), "{e}");
        let a = A {
            model: None,
            theta: None,
            nodes: None,
            quiet: false,
        };
        let e = merge(a, Some(&cfg(r#"{"nodes": "many"}"#)))
            .unwrap_err()
            .to_string();
        assert!(e.contains("nodes"), "{e}");
    }

    #[test]
    fn point_lists_become_semicolon_rows() {
        let a = A {
            model: None,
            theta: None,
            nodes: None,
            quiet: false,
        };
        let m = merge(a, Some(&cfg(r#"{"theta": [[0.1, 0.2], [0.3, 0.4]]}"#))).unwrap();
        assert_eq!(m.theta.as_deref(), Some("0.1,0.2;0.3,0.4"));
    }
}
