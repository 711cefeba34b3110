use std::collections::BTreeMap;
use std::fmt;

use serde::de::{self, Deserialize, Deserializer, MapAccess, SeqAccess, Visitor};
use serde::ser::{Serialize, SerializeMap, SerializeSeq, Serializer};

/// A JSON value as manipulated by processes.
///
/// Numbers are restricted to 64-bit signed integers. Object fields live in a
/// `BTreeMap`, so field order is normalized lexicographically for both
/// equality and serialization.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Null,
    Bool(bool),
    Int(i64),
    Str(String),
    Array(Vec<Value>),
    Object(BTreeMap<String, Value>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{message} at line {line} column {column}")]
pub struct ParseError {
    pub message: String,
    pub line: usize,
    pub column: usize,
}

impl Value {
    pub fn object<I, K>(fields: I) -> Value
    where
        I: IntoIterator<Item = (K, Value)>,
        K: Into<String>,
    {
        Value::Object(fields.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn as_object(&self) -> Option<&BTreeMap<String, Value>> {
        match self {
            Value::Object(m) => Some(m),
            _ => None,
        }
    }

    pub fn as_array(&self) -> Option<&[Value]> {
        match self {
            Value::Array(a) => Some(a),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn get(&self, field: &str) -> Option<&Value> {
        self.as_object().and_then(|m| m.get(field))
    }

    /// Follows an RFC 6901 JSON pointer.
    pub fn pointer(&self, pointer: &str) -> Option<&Value> {
        if pointer.is_empty() {
            return Some(self);
        }
        let mut cur = self;
        for raw in pointer.strip_prefix('/')?.split('/') {
            let tok = raw.replace("~1", "/").replace("~0", "~");
            cur = match cur {
                Value::Object(m) => m.get(&tok)?,
                Value::Array(a) => a.get(tok.parse::<usize>().ok()?)?,
                _ => return None,
            };
        }
        Some(cur)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("value serialization is infallible")
    }

    pub fn to_pretty_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("value serialization is infallible")
    }

    /// Converts into a `serde_json::Value` for embedding in reports.
    pub fn to_serde(&self) -> serde_json::Value {
        match self {
            Value::Null => serde_json::Value::Null,
            Value::Bool(b) => serde_json::Value::Bool(*b),
            Value::Int(i) => serde_json::Value::from(*i),
            Value::Str(s) => serde_json::Value::String(s.clone()),
            Value::Array(a) => serde_json::Value::Array(a.iter().map(Value::to_serde).collect()),
            Value::Object(m) => serde_json::Value::Object(
                m.iter().map(|(k, v)| (k.clone(), v.to_serde())).collect(),
            ),
        }
    }
}

/// Appends one reference token to a JSON pointer, escaping as required.
pub fn pointer_push(base: &str, token: impl fmt::Display) -> String {
    let tok = token.to_string().replace('~', "~0").replace('/', "~1");
    format!("{base}/{tok}")
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_json_string())
    }
}

/// Parses RFC 8259 JSON text into a [`Value`].
///
/// Rejects duplicate sibling field names and numbers with a fraction or
/// exponent part, or outside the 64-bit signed range.
pub fn parse_value(text: &str) -> Result<Value, ParseError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value = Value::deserialize(&mut de).and_then(|v| de.end().map(|_| v));
    value.map_err(|e| ParseError {
        message: strip_position(&e.to_string()),
        line: e.line(),
        column: e.column(),
    })
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Null => ser.serialize_unit(),
            Value::Bool(b) => ser.serialize_bool(*b),
            Value::Int(i) => ser.serialize_i64(*i),
            Value::Str(s) => ser.serialize_str(s),
            Value::Array(a) => {
                let mut seq = ser.serialize_seq(Some(a.len()))?;
                for v in a {
                    seq.serialize_element(v)?;
                }
                seq.end()
            }
            Value::Object(m) => {
                let mut map = ser.serialize_map(Some(m.len()))?;
                for (k, v) in m {
                    map.serialize_entry(k, v)?;
                }
                map.end()
            }
        }
    }
}

impl<'de> Deserialize<'de> for Value {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Value, D::Error> {
        de.deserialize_any(ValueVisitor)
    }
}

struct ValueVisitor;

impl<'de> Visitor<'de> for ValueVisitor {
    type Value = Value;

    fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("a JSON value")
    }

    fn visit_bool<E>(self, b: bool) -> Result<Value, E> {
        Ok(Value::Bool(b))
    }

    fn visit_i64<E>(self, i: i64) -> Result<Value, E> {
        Ok(Value::Int(i))
    }

    fn visit_u64<E: de::Error>(self, u: u64) -> Result<Value, E> {
        i64::try_from(u)
            .map(Value::Int)
            .map_err(|_| E::custom(format!("integer {u} out of 64-bit signed range")))
    }

    fn visit_f64<E: de::Error>(self, x: f64) -> Result<Value, E> {
        Err(E::custom(format!(
            "number {x} has a fraction or exponent; only integers are supported"
        )))
    }

    fn visit_str<E>(self, s: &str) -> Result<Value, E> {
        Ok(Value::Str(s.to_string()))
    }

    fn visit_string<E>(self, s: String) -> Result<Value, E> {
        Ok(Value::Str(s))
    }

    fn visit_unit<E>(self) -> Result<Value, E> {
        Ok(Value::Null)
    }

    fn visit_none<E>(self) -> Result<Value, E> {
        Ok(Value::Null)
    }

    fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Value, A::Error> {
        let mut out = Vec::new();
        while let Some(v) = seq.next_element()? {
            out.push(v);
        }
        Ok(Value::Array(out))
    }

    fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Value, A::Error> {
        let mut out = BTreeMap::new();
        while let Some(key) = map.next_key::<String>()? {
            if out.contains_key(&key) {
                return Err(de::Error::custom(format!("duplicate field name \"{key}\"")));
            }
            let v = map.next_value()?;
            out.insert(key, v);
        }
        Ok(Value::Object(out))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_object_with_empty_array() {
        let v = parse_value(r#"{"open": [], "paid": false}"#).unwrap();
        assert_eq!(
            v,
            Value::object([("open", Value::Array(vec![])), ("paid", Value::Bool(false))])
        );
    }

    #[test]
    fn parses_empty_array() {
        assert_eq!(parse_value("[]").unwrap(), Value::Array(vec![]));
    }

    #[test]
    fn rejects_duplicate_field() {
        let err = parse_value(r#"{"a":1,"a":2}"#).unwrap_err();
        assert!(err.message.contains("duplicate field"), "{err}");
        assert_eq!(err.line, 1);
    }

    #[test]
    fn rejects_fractions_and_exponents() {
        assert!(parse_value("1.5").is_err());
        assert!(parse_value("1e3").is_err());
        assert!(parse_value("18446744073709551615").is_err());
        assert_eq!(parse_value("-9223372036854775808").unwrap(), Value::Int(i64::MIN));
    }

    #[test]
    fn reports_line_and_column() {
        let err = parse_value("{\n  \"a\": 1,,\n}").unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.column > 0);
    }

    #[test]
    fn rejects_trailing_garbage_and_non_rfc_forms() {
        assert!(parse_value("[1] 2").is_err());
        assert!(parse_value("[1,]").is_err());
        assert!(parse_value("{'a': 1}").is_err());
        assert!(parse_value("").is_err());
    }

    #[test]
    fn serialization_sorts_fields() {
        let v = parse_value(r#"{"b": 1, "a": [true, null, "x"]}"#).unwrap();
        assert_eq!(v.to_json_string(), r#"{"a":[true,null,"x"],"b":1}"#);
    }

    #[test]
    fn pointer_lookup() {
        let v = parse_value(r#"{"a": [{"b/c": 3}]}"#).unwrap();
        assert_eq!(v.pointer("/a/0/b~1c"), Some(&Value::Int(3)));
        assert_eq!(v.pointer("/a/1"), None);
        assert_eq!(pointer_push("/a", "b/c"), "/a/b~1c");
    }
}
