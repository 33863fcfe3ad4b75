//! Per-environment payload schemas and validation.

use std::fmt;

use super::call::{ActionCall, Value};

/// Kind and closed range of one argument.
#[derive(Debug, Clone, PartialEq)]
pub enum ArgKind {
    Int {
        min: i64,
        max: i64,
    },
    Real {
        min: f64,
        max: f64,
    },
    /// Fixed-length list of integers with per-component ranges. A pair is a
    /// two-component list.
    IntList {
        bounds: Vec<(i64, i64)>,
    },
    /// Fixed-length list of reals with per-component ranges.
    RealList {
        bounds: Vec<(f64, f64)>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArgSpec {
    /// Short noun used in violation messages, e.g. "direction".
    pub label: String,
    pub kind: ArgKind,
}

impl ArgSpec {
    pub fn int(label: &str, min: i64, max: i64) -> Self {
        Self { label: label.into(), kind: ArgKind::Int { min, max } }
    }

    pub fn real(label: &str, min: f64, max: f64) -> Self {
        Self { label: label.into(), kind: ArgKind::Real { min, max } }
    }

    pub fn int_list(label: &str, bounds: Vec<(i64, i64)>) -> Self {
        Self { label: label.into(), kind: ArgKind::IntList { bounds } }
    }

    pub fn real_list(label: &str, bounds: Vec<(f64, f64)>) -> Self {
        Self { label: label.into(), kind: ArgKind::RealList { bounds } }
    }

    fn is_list(&self) -> bool {
        matches!(self.kind, ArgKind::IntList { .. } | ArgKind::RealList { .. })
    }

    fn list_len(&self) -> usize {
        match &self.kind {
            ArgKind::IntList { bounds } => bounds.len(),
            ArgKind::RealList { bounds } => bounds.len(),
            _ => 0,
        }
    }
}

/// Signature of one action: its name, fixed argument list and a one-line
/// human description for instruction text.
#[derive(Debug, Clone, PartialEq)]
pub struct PayloadSchema {
    pub name: String,
    pub args: Vec<ArgSpec>,
    pub signature: String,
    pub doc: String,
}

impl PayloadSchema {
    pub fn new(name: &str, args: Vec<ArgSpec>, signature: &str, doc: &str) -> Self {
        Self { name: name.into(), args, signature: signature.into(), doc: doc.into() }
    }

    pub fn stop() -> Self {
        Self::new("stop", Vec::new(), "stop()", "end the episode and submit the current state")
    }
}

/// The action space of one environment. Always contains `stop`.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemaSet {
    schemas: Vec<PayloadSchema>,
}

impl SchemaSet {
    /// Builds a set from the environment-specific schemas; `stop` is appended.
    pub fn new(mut schemas: Vec<PayloadSchema>) -> Self {
        debug_assert!(schemas.iter().all(|s| s.name != "stop"));
        schemas.push(PayloadSchema::stop());
        Self { schemas }
    }

    pub fn get(&self, name: &str) -> Option<&PayloadSchema> {
        self.schemas.iter().find(|s| s.name == name)
    }

    pub fn iter(&self) -> impl Iterator<Item = &PayloadSchema> {
        self.schemas.iter()
    }

    pub fn len(&self) -> usize {
        self.schemas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.schemas.is_empty()
    }

    /// Bulleted listing of signatures for instruction text.
    pub fn describe(&self) -> String {
        self.schemas.iter().map(|s| format!("- {}: {}", s.signature, s.doc)).collect::<Vec<_>>().join("\n")
    }
}

/// A schema violation. The reason is shown to the agent as feedback.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation(pub String);

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Checks `call` against the set and returns its normalised arguments.
///
/// Normalisation: integers are widened where a real is expected, and a
/// schema whose only argument is a list also accepts the list's components
/// spelled out as separate scalars (`rotate(1, 2, 3)` for `rotate([1, 2, 3])`).
/// Reals are never narrowed to integers.
pub fn validate(call: &ActionCall, set: &SchemaSet) -> Result<Vec<Value>, Violation> {
    let schema = set.get(&call.name).ok_or_else(|| Violation(format!("unknown action '{}'", call.name)))?;

    let spread_list = schema.args.len() == 1
        && schema.args[0].is_list()
        && call.payload.len() == schema.args[0].list_len()
        && call.payload.iter().all(Value::is_scalar)
        && call.payload.len() != 1;
    let payload: Vec<Value> = if spread_list { vec![Value::List(call.payload.clone())] } else { call.payload.clone() };

    if payload.len() != schema.args.len() {
        return Err(Violation(format!(
            "{} expects {} argument(s), got {}",
            schema.name,
            schema.args.len(),
            payload.len()
        )));
    }

    payload.iter().zip(&schema.args).map(|(value, spec)| check_arg(value, spec)).collect()
}

fn check_arg(value: &Value, spec: &ArgSpec) -> Result<Value, Violation> {
    let label = &spec.label;
    match &spec.kind {
        ArgKind::Int { min, max } => {
            let v = value.as_i64().ok_or_else(|| Violation(format!("{label} must be an integer")))?;
            if v < *min || v > *max {
                return Err(Violation(format!("{label} out of range")));
            }
            Ok(Value::Int(v))
        }
        ArgKind::Real { min, max } => {
            let v = value.as_f64().ok_or_else(|| Violation(format!("{label} must be a number")))?;
            if v < *min || v > *max {
                return Err(Violation(format!("{label} out of range")));
            }
            Ok(Value::Real(v))
        }
        ArgKind::IntList { bounds } => {
            let items = value
                .as_list()
                .ok_or_else(|| Violation(format!("{label} must be a list of {} integers", bounds.len())))?;
            if items.len() != bounds.len() {
                return Err(Violation(format!("{label} must have {} components", bounds.len())));
            }
            let mut out = Vec::with_capacity(items.len());
            for (item, (lo, hi)) in items.iter().zip(bounds) {
                let v = item.as_i64().ok_or_else(|| Violation(format!("{label} components must be integers")))?;
                if v < *lo || v > *hi {
                    return Err(Violation(format!("{label} out of range")));
                }
                out.push(Value::Int(v));
            }
            Ok(Value::List(out))
        }
        ArgKind::RealList { bounds } => {
            let items = value
                .as_list()
                .ok_or_else(|| Violation(format!("{label} must be a list of {} numbers", bounds.len())))?;
            if items.len() != bounds.len() {
                return Err(Violation(format!("{label} must have {} components", bounds.len())));
            }
            let mut out = Vec::with_capacity(items.len());
            for (item, (lo, hi)) in items.iter().zip(bounds) {
                let v = item.as_f64().ok_or_else(|| Violation(format!("{label} components must be numbers")))?;
                if v < *lo || v > *hi {
                    return Err(Violation(format!("{label} out of range")));
                }
                out.push(Value::Real(v));
            }
            Ok(Value::List(out))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn maze_set() -> SchemaSet {
        SchemaSet::new(vec![PayloadSchema::new("move", vec![ArgSpec::int("direction", 0, 3)], "move(d)", "")])
    }

    fn call(name: &str, payload: Vec<Value>) -> ActionCall {
        ActionCall::new(name, payload).unwrap()
    }

    #[test]
    fn direction_out_of_range() {
        let err = validate(&call("move", vec![Value::Int(5)]), &maze_set()).unwrap_err();
        assert_eq!(err.0, "direction out of range");
    }

    #[test]
    fn stop_is_always_valid() {
        assert_eq!(validate(&ActionCall::stop(), &maze_set()), Ok(vec![]));
        assert!(validate(&call("stop", vec![Value::Int(1)]), &maze_set()).is_err());
    }

    #[test]
    fn reals_are_not_coerced_to_ints() {
        let err = validate(&call("move", vec![Value::Real(1.0)]), &maze_set()).unwrap_err();
        assert_eq!(err.0, "direction must be an integer");
    }

    #[test]
    fn unknown_and_arity() {
        assert!(validate(&call("jump", vec![]), &maze_set()).unwrap_err().0.contains("unknown"));
        assert!(validate(&call("move", vec![]), &maze_set()).unwrap_err().0.contains("expects 1"));
    }

    #[test]
    fn pair_of_pairs() {
        let set = SchemaSet::new(vec![PayloadSchema::new(
            "swap",
            vec![
                ArgSpec::int_list("first tile", vec![(0, 1), (0, 1)]),
                ArgSpec::int_list("second tile", vec![(0, 1), (0, 1)]),
            ],
            "swap((r1, c1), (r2, c2))",
            "",
        )]);
        let ok = validate(&call("swap", vec![Value::ints(&[0, 0]), Value::ints(&[0, 1])]), &set);
        assert!(ok.is_ok());
        let bad = validate(&call("swap", vec![Value::ints(&[0, 0]), Value::ints(&[2, 1])]), &set);
        assert_eq!(bad.unwrap_err().0, "second tile out of range");
    }

    #[test]
    fn single_list_accepts_spread_scalars_and_widens() {
        let set = SchemaSet::new(vec![PayloadSchema::new(
            "rotate",
            vec![ArgSpec::real_list("angles", vec![(-360.0, 360.0); 3])],
            "rotate([dy, dp, dr])",
            "",
        )]);
        let spread = validate(&call("rotate", vec![Value::Real(30.5), Value::Int(20), Value::Real(1.0)]), &set);
        assert_eq!(spread.unwrap(), vec![Value::reals(&[30.5, 20.0, 1.0])]);
        let listed = validate(&call("rotate", vec![Value::ints(&[1, 2, 3])]), &set);
        assert_eq!(listed.unwrap(), vec![Value::reals(&[1.0, 2.0, 3.0])]);
    }
}
