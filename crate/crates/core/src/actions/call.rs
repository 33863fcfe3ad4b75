use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A payload value. Lists hold at most one further level of nesting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Int(i64),
    Real(f64),
    List(Vec<Value>),
}

impl Value {
    pub fn as_i64(&self) -> Option<i64> {
        match self {
            Value::Int(v) => Some(*v),
            _ => None,
        }
    }

    /// Numeric view; integers widen to reals.
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Int(v) => Some(*v as f64),
            Value::Real(v) => Some(*v),
            Value::List(_) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Value]> {
        match self {
            Value::List(items) => Some(items),
            _ => None,
        }
    }

    pub fn is_scalar(&self) -> bool {
        !matches!(self, Value::List(_))
    }

    /// Scalars have depth 0, a list one more than its deepest element.
    pub fn depth(&self) -> usize {
        match self {
            Value::List(items) => 1 + items.iter().map(Value::depth).max().unwrap_or(0),
            _ => 0,
        }
    }

    pub fn ints(items: &[i64]) -> Value {
        Value::List(items.iter().copied().map(Value::Int).collect())
    }

    pub fn reals(items: &[f64]) -> Value {
        Value::List(items.iter().copied().map(Value::Real).collect())
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            // Debug formatting of f64 is the shortest string that parses back
            // to the same value and always carries a '.' or exponent.
            Value::Real(v) => write!(f, "{v:?}"),
            Value::List(items) => {
                f.write_str("[")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str("]")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid action name {0:?}: expected [a-z_][a-z0-9_]*")]
pub struct InvalidName(pub String);

/// A parsed function-call action: a lowercase name plus an ordered payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionCall {
    pub name: String,
    pub payload: Vec<Value>,
}

impl ActionCall {
    pub fn new(name: impl Into<String>, payload: Vec<Value>) -> Result<Self, InvalidName> {
        let name = name.into();
        if !is_valid_name(&name) {
            return Err(InvalidName(name));
        }
        Ok(Self { name, payload })
    }

    /// Builds a call from a name known to be valid at compile time.
    pub(crate) fn known(name: &str, payload: Vec<Value>) -> Self {
        debug_assert!(is_valid_name(name));
        Self { name: name.to_string(), payload }
    }

    pub fn stop() -> Self {
        Self::known("stop", Vec::new())
    }

    pub fn is_stop(&self) -> bool {
        self.name == "stop"
    }
}

impl fmt::Display for ActionCall {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&canonical_repr(self))
    }
}

pub(crate) fn is_valid_name(name: &str) -> bool {
    let mut bytes = name.bytes();
    match bytes.next() {
        Some(b) if b == b'_' || b.is_ascii_lowercase() => {}
        _ => return false,
    }
    bytes.all(|b| b == b'_' || b.is_ascii_lowercase() || b.is_ascii_digit())
}

/// Formats a call in tuple form: `('swap', (1, 2))`, `('stop',)`,
/// `('rotate', (-30.0,))`.
pub fn canonical_repr(call: &ActionCall) -> String {
    if call.payload.is_empty() {
        return format!("('{}',)", call.name);
    }
    let args: Vec<String> = call.payload.iter().map(|v| v.to_string()).collect();
    if args.len() == 1 {
        format!("('{}', ({},))", call.name, args[0])
    } else {
        format!("('{}', ({}))", call.name, args.join(", "))
    }
}
