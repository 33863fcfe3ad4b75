//! Difficulty presets and explicit parameter overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;
use thiserror::Error;

/// Explicit parameters as a flat key-value document.
pub type ParamMap = BTreeMap<String, Json>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    #[default]
    Easy,
    Hard,
}

impl Difficulty {
    /// Interaction budget: 20 steps for easy, 30 for hard.
    pub fn default_max_steps(self) -> u32 {
        match self {
            Difficulty::Easy => 20,
            Difficulty::Hard => 30,
        }
    }

    pub fn pick<T>(self, easy: T, hard: T) -> T {
        match self {
            Difficulty::Easy => easy,
            Difficulty::Hard => hard,
        }
    }
}

impl fmt::Display for Difficulty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Difficulty::Easy => "easy",
            Difficulty::Hard => "hard",
        })
    }
}

impl FromStr for Difficulty {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "easy" => Ok(Difficulty::Easy),
            "hard" => Ok(Difficulty::Hard),
            other => Err(ConfigError::BadType {
                param: "difficulty".into(),
                expected: format!("easy or hard, got {other:?}"),
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("unknown environment '{0}'")]
    UnknownEnv(String),
    #[error("unknown parameter '{param}' for {env}")]
    UnknownParam { env: String, param: String },
    #[error("parameter out of range: {param} = {value} ({expected})")]
    OutOfRange { param: String, value: String, expected: String },
    #[error("parameter {param} has the wrong type: expected {expected}")]
    BadType { param: String, expected: String },
    #[error("text mode is not available for {0}")]
    TextModeUnsupported(String),
    #[error("asset error: {0}")]
    Asset(String),
    #[error("instance generation failed: {0}")]
    Generation(String),
}

pub(crate) fn out_of_range(param: &str, value: impl fmt::Display, expected: &str) -> ConfigError {
    ConfigError::OutOfRange { param: param.into(), value: value.to_string(), expected: expected.into() }
}

/// Typed access to an override map, rejecting keys an environment does not
/// know.
pub(crate) struct ParamReader<'a> {
    map: &'a ParamMap,
}

impl<'a> ParamReader<'a> {
    pub fn new(env: &str, map: &'a ParamMap, known: &[&str]) -> Result<Self, ConfigError> {
        if let Some(key) = map.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(ConfigError::UnknownParam { env: env.into(), param: key.clone() });
        }
        Ok(Self { map })
    }

    fn bad(key: &str, expected: &str) -> ConfigError {
        ConfigError::BadType { param: key.into(), expected: expected.into() }
    }

    pub fn int(&self, key: &str, default: i64) -> Result<i64, ConfigError> {
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => v.as_i64().ok_or_else(|| Self::bad(key, "integer")),
        }
    }

    pub fn float(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        match self.map.get(key) {
            None => Ok(default),
            Some(v) => v.as_f64().filter(|f| f.is_finite()).ok_or_else(|| Self::bad(key, "number")),
        }
    }

    pub fn boolean(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.map.get(key) {
            None => Ok(default),
            Some(Json::Bool(b)) => Ok(*b),
            Some(Json::String(s)) if s == "true" || s == "false" => Ok(s == "true"),
            Some(_) => Err(Self::bad(key, "boolean")),
        }
    }

    pub fn string(&self, key: &str, default: &str) -> Result<String, ConfigError> {
        match self.map.get(key) {
            None => Ok(default.to_string()),
            Some(Json::String(s)) => Ok(s.clone()),
            Some(_) => Err(Self::bad(key, "string")),
        }
    }

    /// A pair written `[a, b]` or `"AxB"`.
    pub fn int_pair(&self, key: &str, default: (i64, i64)) -> Result<(i64, i64), ConfigError> {
        match self.map.get(key) {
            None => Ok(default),
            Some(Json::Array(items)) if items.len() == 2 => match (items[0].as_i64(), items[1].as_i64()) {
                (Some(a), Some(b)) => Ok((a, b)),
                _ => Err(Self::bad(key, "pair of integers")),
            },
            Some(Json::String(s)) => {
                let (a, b) = s.split_once('x').ok_or_else(|| Self::bad(key, "pair of integers"))?;
                match (a.trim().parse(), b.trim().parse()) {
                    (Ok(a), Ok(b)) => Ok((a, b)),
                    _ => Err(Self::bad(key, "pair of integers")),
                }
            }
            Some(_) => Err(Self::bad(key, "pair of integers")),
        }
    }

    pub fn float_pair(&self, key: &str, default: (f64, f64)) -> Result<(f64, f64), ConfigError> {
        match self.map.get(key) {
            None => Ok(default),
            Some(Json::Array(items)) if items.len() == 2 => match (items[0].as_f64(), items[1].as_f64()) {
                (Some(a), Some(b)) if a.is_finite() && b.is_finite() => Ok((a, b)),
                _ => Err(Self::bad(key, "pair of numbers")),
            },
            Some(_) => Err(Self::bad(key, "pair of numbers")),
        }
    }
}

/// Parses the value half of a `key=value` override: JSON when it parses as
/// JSON, otherwise a plain string.
pub fn parse_param_value(text: &str) -> Json {
    serde_json::from_str(text).unwrap_or_else(|_| Json::String(text.to_string()))
}

/// Parses `key=value`.
pub fn parse_assignment(text: &str) -> Result<(String, Json), ConfigError> {
    let (k, v) = text
        .split_once('=')
        .ok_or_else(|| ConfigError::BadType { param: text.into(), expected: "key=value".into() })?;
    let key = k.trim();
    if key.is_empty() {
        return Err(ConfigError::BadType { param: text.into(), expected: "key=value".into() });
    }
    Ok((key.to_string(), parse_param_value(v.trim())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn reader_types_and_defaults() {
        let mut map = ParamMap::new();
        map.insert("gs".into(), json!("6x7"));
        map.insert("sr".into(), json!([0.5, 2]));
        map.insert("nest".into(), json!(false));
        let r = ParamReader::new("x", &map, &["gs", "sr", "nest", "np"]).unwrap();
        assert_eq!(r.int_pair("gs", (1, 1)).unwrap(), (6, 7));
        assert_eq!(r.float_pair("sr", (0.0, 0.0)).unwrap(), (0.5, 2.0));
        assert!(!r.boolean("nest", true).unwrap());
        assert_eq!(r.int("np", 5).unwrap(), 5);
        assert!(r.float("gs", 1.0).is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut map = ParamMap::new();
        map.insert("bogus".into(), json!(1));
        assert!(matches!(ParamReader::new("maze2d", &map, &["mw"]), Err(ConfigError::UnknownParam { .. })));
    }

    #[test]
    fn assignments() {
        assert_eq!(parse_assignment("sm=0").unwrap(), ("sm".into(), json!(0)));
        assert_eq!(parse_assignment("gs=[8,8]").unwrap(), ("gs".into(), json!([8, 8])));
        assert_eq!(parse_assignment("ss=uniform").unwrap(), ("ss".into(), json!("uniform")));
        assert!(parse_assignment("novalue").is_err());
    }

    #[test]
    fn budgets() {
        assert_eq!(Difficulty::Easy.default_max_steps(), 20);
        assert_eq!(Difficulty::Hard.default_max_steps(), 30);
    }
}
