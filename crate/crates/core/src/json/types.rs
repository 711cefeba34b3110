use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::value::{pointer_push, Value};

/// Static JSON types.
///
/// `Named` references another definition in the enclosing [`TypeEnv`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum JsonType {
    Integer,
    Bool,
    String,
    List(Box<JsonType>),
    Option(Box<JsonType>),
    Object(BTreeMap<String, JsonType>),
    Enum(Vec<String>),
    Named(String),
}

impl fmt::Display for JsonType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JsonType::Integer => f.write_str("Integer"),
            JsonType::Bool => f.write_str("Bool"),
            JsonType::String => f.write_str("String"),
            JsonType::List(t) => write!(f, "List[{t}]"),
            JsonType::Option(t) => write!(f, "Option[{t}]"),
            JsonType::Object(fields) => {
                f.write_str("{ ")?;
                for (i, (k, t)) in fields.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{k}: {t}")?;
                }
                f.write_str(" }")
            }
            JsonType::Enum(sl) => {
                f.write_str("EnumTy[")?;
                for (i, s) in sl.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{s:?}")?;
                }
                f.write_str("]")
            }
            JsonType::Named(n) => f.write_str(n),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TypeDefError {
    #[error("syntax error at line {line} column {column}: {message}")]
    Syntax {
        message: String,
        line: usize,
        column: usize,
    },
    #[error("type {0} is defined twice")]
    Duplicate(String),
    #[error("unknown type name {name} (used in {used_in})")]
    UnknownType { name: String, used_in: String },
    #[error("cyclic type definition through {0}")]
    Cyclic(String),
    #[error("missing top-level type DB")]
    MissingDb,
    #[error("nested Option type in {0}")]
    NestedOption(String),
    #[error("enumeration in {0} must be non-empty and duplicate-free")]
    BadEnum(String),
}

/// The root type name of every type model.
pub const DB_TYPE: &str = "DB";

/// Named JSON type definitions with `DB` as the root.
///
/// Object and enumeration types nested inside other definitions are hoisted
/// into their own named definitions (`Parent_field`), so every object and
/// enumeration type has a name. Definitions are acyclic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeEnv {
    types: BTreeMap<String, JsonType>,
}

impl TypeEnv {
    /// Validates and normalizes a set of definitions.
    pub fn new(defs: Vec<(String, JsonType)>) -> Result<TypeEnv, TypeDefError> {
        let mut types = BTreeMap::new();
        let mut order = Vec::new();
        for (name, ty) in defs {
            if types.insert(name.clone(), ty).is_some() {
                return Err(TypeDefError::Duplicate(name));
            }
            order.push(name);
        }
        if !types.contains_key(DB_TYPE) {
            return Err(TypeDefError::MissingDb);
        }
        let mut env = TypeEnv { types };
        env.hoist(&order);
        env.validate()?;
        Ok(env)
    }

    pub fn get(&self, name: &str) -> Option<&JsonType> {
        self.types.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.types.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &JsonType)> {
        self.types.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn db_type(&self) -> JsonType {
        JsonType::Named(DB_TYPE.to_string())
    }

    /// Follows `Named` references until a structural type is reached.
    pub fn resolve<'a>(&'a self, mut ty: &'a JsonType) -> &'a JsonType {
        while let JsonType::Named(n) = ty {
            match self.types.get(n) {
                Some(t) => ty = t,
                None => break,
            }
        }
        ty
    }

    fn hoist(&mut self, order: &[String]) {
        let mut fresh = Vec::new();
        let mut taken: BTreeSet<String> = self.types.keys().cloned().collect();
        for name in order {
            let ty = self.types[name].clone();
            let ty = match ty {
                JsonType::Object(fields) => JsonType::Object(
                    fields
                        .into_iter()
                        .map(|(f, t)| {
                            let hint = format!("{name}_{f}");
                            let t = hoist_inner(t, &hint, &mut taken, &mut fresh);
                            (f, t)
                        })
                        .collect(),
                ),
                JsonType::Enum(sl) => JsonType::Enum(sl),
                other => hoist_inner(other, name, &mut taken, &mut fresh),
            };
            self.types.insert(name.clone(), ty);
        }
        // Hoisted object types may themselves contain nested objects.
        while let Some((name, ty)) = fresh.pop() {
            let ty = match ty {
                JsonType::Object(fields) => JsonType::Object(
                    fields
                        .into_iter()
                        .map(|(f, t)| {
                            let hint = format!("{name}_{f}");
                            (f, hoist_inner(t, &hint, &mut taken, &mut fresh))
                        })
                        .collect(),
                ),
                other => other,
            };
            self.types.insert(name, ty);
        }
    }

    fn validate(&self) -> Result<(), TypeDefError> {
        for (name, ty) in &self.types {
            self.check_refs(ty, name)?;
            if let JsonType::Enum(sl) = ty {
                let set: BTreeSet<_> = sl.iter().collect();
                if sl.is_empty() || set.len() != sl.len() {
                    return Err(TypeDefError::BadEnum(name.clone()));
                }
            }
        }
        // Depth-first cycle detection over name references.
        let mut state: BTreeMap<&str, u8> = BTreeMap::new();
        for name in self.types.keys() {
            self.visit(name, &mut state)?;
        }
        for (name, ty) in &self.types {
            self.check_option_nesting(ty, false, name)?;
        }
        Ok(())
    }

    fn check_refs(&self, ty: &JsonType, used_in: &str) -> Result<(), TypeDefError> {
        match ty {
            JsonType::Named(n) if !self.types.contains_key(n) => Err(TypeDefError::UnknownType {
                name: n.clone(),
                used_in: used_in.to_string(),
            }),
            JsonType::List(t) | JsonType::Option(t) => self.check_refs(t, used_in),
            JsonType::Object(fields) => {
                fields.values().try_for_each(|t| self.check_refs(t, used_in))
            }
            JsonType::Enum(sl) => {
                let set: BTreeSet<_> = sl.iter().collect();
                if sl.is_empty() || set.len() != sl.len() {
                    Err(TypeDefError::BadEnum(used_in.to_string()))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    fn visit<'a>(&'a self, name: &'a str, state: &mut BTreeMap<&'a str, u8>) -> Result<(), TypeDefError> {
        match state.get(name) {
            Some(2) => return Ok(()),
            Some(1) => return Err(TypeDefError::Cyclic(name.to_string())),
            _ => {}
        }
        state.insert(name, 1);
        let mut refs = Vec::new();
        collect_refs(&self.types[name], &mut refs);
        for r in refs {
            self.visit(r, state)?;
        }
        state.insert(name, 2);
        Ok(())
    }

    fn check_option_nesting(&self, ty: &JsonType, under_option: bool, ctx: &str) -> Result<(), TypeDefError> {
        match ty {
            JsonType::Option(inner) => {
                if under_option {
                    return Err(TypeDefError::NestedOption(ctx.to_string()));
                }
                self.check_option_nesting(inner, true, ctx)
            }
            JsonType::Named(n) if under_option => {
                // An option around an alias of an option is still nested.
                match self.resolve(&self.types[n]) {
                    JsonType::Option(_) => Err(TypeDefError::NestedOption(ctx.to_string())),
                    _ => Ok(()),
                }
            }
            JsonType::List(inner) => self.check_option_nesting(inner, false, ctx),
            JsonType::Object(fields) => fields
                .values()
                .try_for_each(|t| self.check_option_nesting(t, false, ctx)),
            _ => Ok(()),
        }
    }

    /// Decides `v : ty` by structural recursion on `ty`.
    pub fn check_type(&self, v: &Value, ty: &JsonType) -> bool {
        self.first_mismatch(v, ty, "").is_none()
    }

    /// Returns the JSON pointer and expected type of the first leaf where
    /// `v` fails to have type `ty`.
    pub fn first_mismatch(&self, v: &Value, ty: &JsonType, at: &str) -> Option<TypeMismatch> {
        let fail = |expected: String| {
            Some(TypeMismatch {
                path: at.to_string(),
                expected,
            })
        };
        match (self.resolve(ty), v) {
            (JsonType::Integer, Value::Int(_)) => None,
            (JsonType::Bool, Value::Bool(_)) => None,
            (JsonType::String, Value::Str(_)) => None,
            (JsonType::Enum(sl), Value::Str(s)) if sl.contains(s) => None,
            (JsonType::Option(_), Value::Null) => None,
            (JsonType::Option(inner), v) => self.first_mismatch(v, inner, at),
            (JsonType::List(elem), Value::Array(items)) => items
                .iter()
                .enumerate()
                .find_map(|(i, item)| self.first_mismatch(item, elem, &pointer_push(at, i))),
            (JsonType::Object(tf), Value::Object(vf)) => {
                for (name, fty) in tf {
                    match vf.get(name) {
                        None => return fail(format!("field {name}: {fty}")),
                        Some(fv) => {
                            if let Some(m) = self.first_mismatch(fv, fty, &pointer_push(at, name)) {
                                return Some(m);
                            }
                        }
                    }
                }
                vf.keys()
                    .find(|k| !tf.contains_key(*k)).map(|k| TypeMismatch {
                            path: pointer_push(at, k),
                            expected: "no such field".to_string(),
                        })
            }
            (t, _) => fail(t.to_string()),
        }
    }
}

/// Where and why a value failed to typecheck.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeMismatch {
    pub path: String,
    pub expected: String,
}

impl fmt::Display for TypeMismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let path = if self.path.is_empty() { "/" } else { &self.path };
        write!(f, "at {path}: expected {}", self.expected)
    }
}

fn collect_refs<'a>(ty: &'a JsonType, out: &mut Vec<&'a str>) {
    match ty {
        JsonType::Named(n) => out.push(n),
        JsonType::List(t) | JsonType::Option(t) => collect_refs(t, out),
        JsonType::Object(fields) => fields.values().for_each(|t| collect_refs(t, out)),
        _ => {}
    }
}

fn hoist_inner(
    ty: JsonType,
    hint: &str,
    taken: &mut BTreeSet<String>,
    fresh: &mut Vec<(String, JsonType)>,
) -> JsonType {
    match ty {
        JsonType::Object(_) | JsonType::Enum(_) => {
            let mut name = hint.to_string();
            let mut k = 2;
            while taken.contains(&name) {
                name = format!("{hint}{k}");
                k += 1;
            }
            taken.insert(name.clone());
            fresh.push((name.clone(), ty));
            JsonType::Named(name)
        }
        JsonType::List(t) => JsonType::List(Box::new(hoist_inner(*t, hint, taken, fresh))),
        JsonType::Option(t) => JsonType::Option(Box::new(hoist_inner(*t, hint, taken, fresh))),
        other => other,
    }
}

/// Decides `v : ty` in `env`.
pub fn check_type(v: &Value, ty: &JsonType, env: &TypeEnv) -> bool {
    env.check_type(v, ty)
}

/// Parses type definitions written as `Name = type` blocks.
pub fn parse_type_defs(text: &str) -> Result<TypeEnv, TypeDefError> {
    let mut p = TyParser::new(text);
    let mut defs = Vec::new();
    p.skip_ws();
    while !p.at_end() {
        let name = p.ident()?;
        p.expect('=')?;
        let ty = p.ty()?;
        defs.push((name, ty));
        p.skip_ws();
        // Tolerate optional separators between definitions.
        while p.eat(';') || p.eat(',') {
            p.skip_ws();
        }
    }
    TypeEnv::new(defs)
}

struct TyParser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> TyParser<'a> {
    fn new(src: &'a str) -> Self {
        TyParser { src, pos: 0 }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else if self.src[self.pos..].starts_with("//") || c == '#' {
                while let Some(c) = self.peek() {
                    self.pos += c.len_utf8();
                    if c == '\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn error(&self, message: impl Into<String>) -> TypeDefError {
        let before = &self.src[..self.pos];
        let line = before.matches('\n').count() + 1;
        let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        TypeDefError::Syntax {
            message: message.into(),
            line,
            column,
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), TypeDefError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(format!("expected '{c}'")))
        }
    }

    fn ident(&mut self) -> Result<String, TypeDefError> {
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_alphanumeric() || c == '_' {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        if start == self.pos || self.src[start..].starts_with(|c: char| c.is_ascii_digit()) {
            return Err(self.error("expected identifier"));
        }
        Ok(self.src[start..self.pos].to_string())
    }

    fn string(&mut self) -> Result<String, TypeDefError> {
        self.skip_ws();
        if self.peek() != Some('"') {
            return Err(self.error("expected string literal"));
        }
        let rest = &self.src[self.pos..];
        let mut de = serde_json::Deserializer::from_str(rest).into_iter::<String>();
        match de.next() {
            Some(Ok(s)) => {
                self.pos += de.byte_offset();
                Ok(s)
            }
            _ => Err(self.error("malformed string literal")),
        }
    }

    fn field_name(&mut self) -> Result<String, TypeDefError> {
        self.skip_ws();
        if self.peek() == Some('"') {
            self.string()
        } else {
            self.ident()
        }
    }

    fn ty(&mut self) -> Result<JsonType, TypeDefError> {
        self.skip_ws();
        if self.eat('{') {
            let mut fields = BTreeMap::new();
            if !self.eat('}') {
                loop {
                    let name = self.field_name()?;
                    self.expect(':')?;
                    let t = self.ty()?;
                    if fields.insert(name.clone(), t).is_some() {
                        return Err(self.error(format!("duplicate field {name}")));
                    }
                    if self.eat(',') {
                        continue;
                    }
                    self.expect('}')?;
                    break;
                }
            }
            return Ok(JsonType::Object(fields));
        }
        let name = self.ident()?;
        match name.as_str() {
            "Integer" | "Int" => Ok(JsonType::Integer),
            "Bool" | "Boolean" => Ok(JsonType::Bool),
            "String" => Ok(JsonType::String),
            "List" | "Option" => {
                self.expect('[')?;
                let inner = self.ty()?;
                self.expect(']')?;
                Ok(if name == "List" {
                    JsonType::List(Box::new(inner))
                } else {
                    JsonType::Option(Box::new(inner))
                })
            }
            "EnumTy" => {
                self.expect('[')?;
                let mut sl = Vec::new();
                if !self.eat(']') {
                    loop {
                        sl.push(self.string()?);
                        if self.eat(',') {
                            continue;
                        }
                        self.expect(']')?;
                        break;
                    }
                }
                Ok(JsonType::Enum(sl))
            }
            _ => Ok(JsonType::Named(name)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::json::parse_value;

    pub(crate) const PURCHASE_TYPES: &str = r#"
   DB  = { order: List[Integer],
           gold: Bool,
           stock: List[Stock],
           status: Status      }

 Stock = { ident: String,
           price: Integer,
           available: Integer  }

Status = { open: List[Integer],
           value: Integer,
           shipping: Integer,
           paid: Bool,
           shipped: Bool,
           final: Bool         }
"#;

    const PURCHASE_DB: &str = r#"
{   "order" : [1],
    "gold"  : true,
    "stock" : [ { "ident" : "Mouse", "price" : 10, "available" : 0  },
                { "ident" : "Monitor", "price" : 200, "available" : 2  },
                { "ident" : "Computer", "price" : 1000, "available" : 4  } ],
    "status" : {  "open" : [], "value" : 0, "shipping" : 0,
                  "paid" : false, "shipped" : false, "final" : false }    }
"#;

    #[test]
    fn parses_purchase_types() {
        let env = parse_type_defs(PURCHASE_TYPES).unwrap();
        assert_eq!(env.names().collect::<Vec<_>>(), vec!["DB", "Status", "Stock"]);
        let JsonType::Object(status) = env.get("Status").unwrap() else {
            panic!()
        };
        assert_eq!(status.len(), 6);
    }

    #[test]
    fn purchase_database_typechecks() {
        let env = parse_type_defs(PURCHASE_TYPES).unwrap();
        let db = parse_value(PURCHASE_DB).unwrap();
        assert!(check_type(&db, &env.db_type(), &env));
    }

    #[test]
    fn wrong_leaf_reports_path() {
        let env = parse_type_defs(PURCHASE_TYPES).unwrap();
        let db = parse_value(&PURCHASE_DB.replace(r#""paid" : false"#, r#""paid" : 3"#)).unwrap();
        let m = env.first_mismatch(&db, &env.db_type(), "").unwrap();
        assert_eq!(m.path, "/status/paid");
        assert_eq!(m.expected, "Bool");
    }

    #[test]
    fn missing_db_rejected() {
        let err = parse_type_defs("Stock = { ident: String }").unwrap_err();
        assert_eq!(err, TypeDefError::MissingDb);
    }

    #[test]
    fn nested_option_rejected() {
        let err =
            parse_type_defs("T = { x: Option[Option[Integer]] } DB = { t: T }").unwrap_err();
        assert!(matches!(err, TypeDefError::NestedOption(_)), "{err}");
        let err = parse_type_defs("O = Option[Integer] DB = { t: Option[O] }").unwrap_err();
        assert!(matches!(err, TypeDefError::NestedOption(_)), "{err}");
    }

    #[test]
    fn unknown_and_cyclic_names_rejected() {
        assert!(matches!(
            parse_type_defs("DB = { t: Missing }").unwrap_err(),
            TypeDefError::UnknownType { .. }
        ));
        assert!(matches!(
            parse_type_defs("DB = { t: T } T = { d: List[DB] }").unwrap_err(),
            TypeDefError::Cyclic(_)
        ));
    }

    #[test]
    fn enum_must_be_nonempty_and_distinct() {
        assert!(parse_type_defs(r#"DB = { c: EnumTy["a","a"] }"#).is_err());
        assert!(parse_type_defs(r#"DB = { c: EnumTy[] }"#).is_err());
    }

    #[test]
    fn option_and_enum_rules() {
        let env = parse_type_defs(r#"DB = { c: EnumTy["a","b"] }"#).unwrap();
        let opt_int = JsonType::Option(Box::new(JsonType::Integer));
        assert!(check_type(&Value::Null, &opt_int, &env));
        assert!(!check_type(&Value::Null, &JsonType::Integer, &env));
        let e = JsonType::Enum(vec!["a".into(), "b".into()]);
        assert!(check_type(&Value::Str("a".into()), &e, &env));
        assert!(!check_type(&Value::Str("c".into()), &e, &env));
        assert!(check_type(&Value::Str("c".into()), &JsonType::String, &env));
    }

    #[test]
    fn inline_objects_are_hoisted() {
        let env = parse_type_defs(r#"DB = { inner: { x: Integer, k: EnumTy["p"] } }"#).unwrap();
        assert_eq!(
            env.get("DB").unwrap(),
            &JsonType::Object([("inner".into(), JsonType::Named("DB_inner".into()))].into())
        );
        assert!(env.get("DB_inner_k").is_some());
        let v = parse_value(r#"{"inner": {"x": 1, "k": "p"}}"#).unwrap();
        assert!(check_type(&v, &env.db_type(), &env));
    }

    #[test]
    fn object_rule_is_exact_domain() {
        let env = parse_type_defs("DB = { a: Integer }").unwrap();
        assert!(!check_type(&parse_value("{}").unwrap(), &env.db_type(), &env));
        assert!(!check_type(
            &parse_value(r#"{"a": 1, "b": 2}"#).unwrap(),
            &env.db_type(),
            &env
        ));
        let m = env
            .first_mismatch(&parse_value(r#"{"a": 1, "b": 2}"#).unwrap(), &env.db_type(), "")
            .unwrap();
        assert_eq!(m.path, "/b");
    }
}
