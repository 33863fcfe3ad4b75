//! Function-call actions: the value model, the text grammar and payload
//! schemas.

mod call;
mod parser;
mod schema;

pub use call::{canonical_repr, ActionCall, InvalidName, Value};
pub use parser::{extract_action, ParseError, ParseErrorKind};
pub use schema::{validate, ArgKind, ArgSpec, PayloadSchema, SchemaSet, Violation};
