//! Sorted first-order logic over the signature induced by a type model.

mod defs;
mod elab;
mod signature;
mod sort;
pub mod syntax;
mod term;

pub use defs::{expand_definitions, parse_definitions, Definition, DefinitionError};
pub use elab::{parse_formula, parse_term, value_has_sort, Elaborator};
pub use signature::{derive_signature, Arith, FieldOps, ListOps, OptOps, Signature};
pub use sort::{sanitize, EnumSort, Sort};
pub use syntax::{FormulaError, Pos};
pub use term::{Formula, Func, FuncDecl, FuncKind, Pred, Term, Var};
