//! JSON values, the static type system over them, and type checking.

mod types;
mod value;

pub use types::{check_type, parse_type_defs, JsonType, TypeDefError, TypeEnv, TypeMismatch, DB_TYPE};
pub use value::{parse_value, pointer_push, ParseError, Value};
