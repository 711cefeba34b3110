use std::fmt;
use std::sync::Arc;

/// An enumeration sort: a named, finite set of string constants.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EnumSort {
    pub name: String,
    pub members: Vec<String>,
}

/// First-order sorts derived from a type model.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    /// The integers.
    Int,
    Bool,
    Str,
    Enum(Arc<EnumSort>),
    /// A named object type.
    Obj(Arc<str>),
    List(Arc<Sort>),
    Opt(Arc<Sort>),
}

impl Sort {
    pub fn obj(name: &str) -> Sort {
        Sort::Obj(Arc::from(name))
    }

    pub fn list(elem: Sort) -> Sort {
        Sort::List(Arc::new(elem))
    }

    pub fn opt(inner: Sort) -> Sort {
        Sort::Opt(Arc::new(inner))
    }

    pub fn list_elem(&self) -> Option<&Sort> {
        match self {
            Sort::List(e) => Some(e),
            _ => None,
        }
    }

    pub fn opt_inner(&self) -> Option<&Sort> {
        match self {
            Sort::Opt(e) => Some(e),
            _ => None,
        }
    }

    /// A lowercase identifier unique per sort, used in symbol keys and TPTP.
    pub fn mangle(&self) -> String {
        match self {
            Sort::Int => "int".into(),
            Sort::Bool => "bool".into(),
            Sort::Str => "string".into(),
            Sort::Enum(e) => sanitize(&e.name),
            Sort::Obj(n) => sanitize(n),
            Sort::List(e) => format!("list_{}", e.mangle()),
            Sort::Opt(e) => format!("opt_{}", e.mangle()),
        }
    }
}

/// Lowercases and replaces characters that are not valid in a TPTP lower word.
pub fn sanitize(s: &str) -> String {
    let mut out: String = s
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() {
                c.to_ascii_lowercase()
            } else {
                '_'
            }
        })
        .collect();
    if !out.starts_with(|c: char| c.is_ascii_lowercase()) {
        out.insert(0, 't');
    }
    out
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sort::Int => f.write_str("Z"),
            Sort::Bool => f.write_str("Bool"),
            Sort::Str => f.write_str("String"),
            Sort::Enum(e) => f.write_str(&e.name),
            Sort::Obj(n) => f.write_str(n),
            Sort::List(e) => write!(f, "List[{e}]"),
            Sort::Opt(e) => write!(f, "Option[{e}]"),
        }
    }
}
