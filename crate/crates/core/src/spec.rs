//! Specification files: one JSON document holding the data types, the
//! process fragments, definitions, constraints and an optional initial
//! database.
//!
//! ```json
//! { "types": "DB = { x: Integer }",
//!   "fragments": [ { "name": "F",
//!                    "nodes": [ { "id": "a", "labels": ["init"] } ],
//!                    "edges": [ { "from": "a", "to": "a", "guard": "db.x > 0",
//!                                 "script": "db.x = db.x - 1" } ] } ],
//!   "definitions": [], "constraints": [], "database": { "x": 2 } }
//! ```
//!
//! Errors name the offending place as a JSON pointer.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::Deserialize;
use serde_json::Value as Json;

use crate::ctl::{parse_ctl, Ctl};
use crate::json::{parse_type_defs, pointer_push, TypeEnv, Value};
use crate::logic::{derive_signature, parse_definitions, parse_formula, Definition, DefinitionError, Formula, Signature};
use crate::process::{compose, Edge, Fragment, Node, ProcessError, ProcessModel};
use crate::script::parse_script;

/// A loaded and checked specification.
#[derive(Clone, Debug)]
pub struct Specification {
    pub name: String,
    pub types: TypeEnv,
    pub sig: Signature,
    pub model: ProcessModel,
    pub defs: Vec<Definition>,
    pub constraints: Vec<Ctl>,
    pub database: Option<Value>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LoadError {
    /// JSON pointer into the specification file.
    pub pointer: String,
    pub message: String,
}

impl fmt::Display for LoadError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = if self.pointer.is_empty() { "/" } else { &self.pointer };
        write!(f, "{p}: {}", self.message)
    }
}

impl std::error::Error for LoadError {}

fn err(pointer: impl Into<String>, message: impl fmt::Display) -> LoadError {
    LoadError { pointer: pointer.into(), message: message.to_string() }
}

fn get<'j>(obj: &'j Json, key: &str) -> Option<&'j Json> {
    obj.as_object()?.get(key)
}

fn string<'j>(j: &'j Json, at: &str) -> Result<&'j str, LoadError> {
    j.as_str().ok_or_else(|| err(at, "expected a string"))
}

fn array<'j>(j: Option<&'j Json>, at: &str) -> Result<&'j [Json], LoadError> {
    match j {
        None => Ok(&[]),
        Some(Json::Array(items)) => Ok(items),
        Some(_) => Err(err(at, "expected an array")),
    }
}

/// A formula entry is either a string or an object with a `formula` key.
fn formula_text<'j>(j: &'j Json, at: &str) -> Result<(&'j str, String), LoadError> {
    match j {
        Json::String(s) => Ok((s, at.to_string())),
        Json::Object(m) => match m.get("formula") {
            Some(f) => {
                let p = pointer_push(at, "formula");
                Ok((string(f, &p)?, p))
            }
            None => Err(err(at, "missing key `formula`")),
        },
        _ => Err(err(at, "expected a formula string")),
    }
}

fn types_text(j: &Json) -> Result<String, LoadError> {
    match j {
        Json::String(s) => Ok(s.clone()),
        Json::Object(m) => {
            let mut out = String::new();
            for (name, ty) in m {
                out.push_str(&format!("{name} = {}\n", string(ty, &pointer_push("/types", name))?));
            }
            Ok(out)
        }
        _ => Err(err("/types", "expected type definitions as a string or an object")),
    }
}

fn meta(j: &Json, skip: &[&str]) -> BTreeMap<String, Json> {
    j.as_object()
        .map(|m| m.iter().filter(|(k, _)| !skip.contains(&k.as_str())).map(|(k, v)| (k.clone(), v.clone())).collect())
        .unwrap_or_default()
}

fn load_node(j: &Json, at: &str, sig: &Signature) -> Result<Node, LoadError> {
    if !j.is_object() {
        return Err(err(at, "expected a node object"));
    }
    let id = string(get(j, "id").ok_or_else(|| err(at, "missing key `id`"))?, &pointer_push(at, "id"))?;
    let mut node = Node::new(id);
    let labels_at = pointer_push(at, "labels");
    let mut entry = false;
    for (k, l) in array(get(j, "labels"), &labels_at)?.iter().enumerate() {
        match string(l, &pointer_push(&labels_at, k))? {
            "init" => node.init = true,
            "exit" => node.exit = true,
            "entry" => entry = true,
            other => return Err(err(pointer_push(&labels_at, k), format!("unknown label {other}"))),
        }
    }
    match (entry, get(j, "guard")) {
        (true, Some(g)) => {
            let p = pointer_push(at, "guard");
            node.entry_guard = Some(parse_formula(string(g, &p)?, sig).map_err(|e| err(p, e))?);
        }
        (true, None) => return Err(err(at, "entry node without a guard")),
        (false, Some(_)) => return Err(err(pointer_push(at, "guard"), "only entry nodes carry a guard")),
        (false, None) => {}
    }
    node.meta = meta(j, &["id", "labels", "guard"]);
    Ok(node)
}

fn load_edge(j: &Json, at: &str, default_name: &str, sig: &Signature) -> Result<Edge, LoadError> {
    if !j.is_object() {
        return Err(err(at, "expected an edge object"));
    }
    let field = |k: &str| -> Result<Option<&str>, LoadError> { get(j, k).map(|v| string(v, &pointer_push(at, k))).transpose() };
    let name = field("name")?.unwrap_or(default_name);
    let from = field("from")?.ok_or_else(|| err(at, "missing key `from`"))?;
    let to = field("to")?.ok_or_else(|| err(at, "missing key `to`"))?;
    let guard = match field("guard")? {
        Some(g) => parse_formula(g, sig).map_err(|e| err(pointer_push(at, "guard"), e))?,
        None => Formula::True,
    };
    let script = parse_script(field("script")?.unwrap_or(""), sig).map_err(|e| err(pointer_push(at, "script"), e))?;
    let mut edge = Edge::new(name, from, to, guard, script, sig);
    edge.meta = meta(j, &["name", "from", "to", "guard", "script"]);
    Ok(edge)
}

fn process_pointer(e: &ProcessError, frags: &[Json]) -> String {
    // Point at the first edge or node involved, when there is one.
    let find = |key: &str, id_key: &str, id: &str| -> Option<String> {
        for (fi, f) in frags.iter().enumerate() {
            for (k, x) in get(f, key)?.as_array()?.iter().enumerate() {
                if get(x, id_key).and_then(Json::as_str) == Some(id) {
                    return Some(format!("/fragments/{fi}/{key}/{k}"));
                }
            }
        }
        None
    };
    match e {
        ProcessError::DuplicateNode(id) => find("nodes", "id", id),
        ProcessError::DuplicateEdge(n) | ProcessError::UnknownNode { edge: n, .. } | ProcessError::FreeVariables(n) => {
            find("edges", "name", n)
        }
        _ => None,
    }
    .unwrap_or_else(|| "/fragments".into())
}

fn definition_pointer(e: &DefinitionError) -> String {
    match e {
        DefinitionError::Formula { index, .. } | DefinitionError::Shape { index } => format!("/definitions/{index}"),
        _ => "/definitions".into(),
    }
}

/// Loads a specification from JSON text.
pub fn load_spec(text: &str, name: &str) -> Result<Specification, LoadError> {
    let doc: Json = serde_json::from_str(text).map_err(|e| err("", format!("invalid JSON: {e}")))?;
    if !doc.is_object() {
        return Err(err("", "expected a JSON object"));
    }
    let types = types_text(get(&doc, "types").ok_or_else(|| err("", "missing key `types`"))?)?;
    let types = parse_type_defs(&types).map_err(|e| err("/types", e))?;
    let mut sig = derive_signature(&types);

    let mut def_texts = Vec::new();
    for (k, d) in array(get(&doc, "definitions"), "/definitions")?.iter().enumerate() {
        def_texts.push(formula_text(d, &format!("/definitions/{k}"))?.0);
    }
    let defs = parse_definitions(&def_texts, &mut sig).map_err(|e| err(definition_pointer(&e), e))?;

    let frag_json = array(get(&doc, "fragments"), "/fragments")?;
    let mut fragments = Vec::new();
    for (fi, f) in frag_json.iter().enumerate() {
        let at = format!("/fragments/{fi}");
        let fname = match get(f, "name") {
            Some(n) => string(n, &pointer_push(&at, "name"))?.to_string(),
            None => format!("F{fi}"),
        };
        let nodes_at = pointer_push(&at, "nodes");
        let nodes = array(get(f, "nodes"), &nodes_at)?
            .iter()
            .enumerate()
            .map(|(k, n)| load_node(n, &pointer_push(&nodes_at, k), &sig))
            .collect::<Result<Vec<_>, _>>()?;
        let edges_at = pointer_push(&at, "edges");
        let edges = array(get(f, "edges"), &edges_at)?
            .iter()
            .enumerate()
            .map(|(k, e)| load_edge(e, &pointer_push(&edges_at, k), &format!("{fname}.{k}"), &sig))
            .collect::<Result<Vec<_>, _>>()?;
        fragments.push(Fragment { name: fname, nodes, edges });
    }
    let model = compose(&fragments, &sig).map_err(|e| err(process_pointer(&e, frag_json), e))?;

    let mut constraints = Vec::new();
    for (k, c) in array(get(&doc, "constraints"), "/constraints")?.iter().enumerate() {
        let (text, at) = formula_text(c, &format!("/constraints/{k}"))?;
        constraints.push(parse_ctl(text, &sig).map_err(|e| err(at, e))?);
    }

    let database = match get(&doc, "database") {
        None | Some(Json::Null) => None,
        Some(db) => Some(load_database(db, &types, "/database")?),
    };
    Ok(Specification { name: name.to_string(), types, sig, model, defs, constraints, database })
}

/// Converts and typechecks a database against `DB`; mismatches are
/// reported below `base`.
pub fn load_database(j: &Json, types: &TypeEnv, base: &str) -> Result<Value, LoadError> {
    let v = Value::deserialize(j).map_err(|e| err(base, e))?;
    if let Some(m) = types.first_mismatch(&v, &types.db_type(), "") {
        return Err(err(format!("{base}{}", m.path), format!("expected {}", m.expected)));
    }
    Ok(v)
}

/// Loads a specification file; its name is the file stem.
pub fn load_spec_file(path: &Path) -> Result<Specification, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|e| err("", format!("{}: {e}", path.display())))?;
    let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("spec");
    load_spec(&text, name)
}

#[cfg(test)]
mod tests {
    use super::*;

    const DEC: &str = r#"{
        "types": "DB = { x: Integer }",
        "fragments": [ { "name": "F",
            "nodes": [ { "id": "a", "labels": ["init"] } ],
            "edges": [ { "name": "dec", "from": "a", "to": "a", "guard": "db.x > 0", "script": "db.x = db.x - 1" } ] } ],
        "database": { "x": 2 } }"#;

    fn load(text: &str) -> Result<Specification, LoadError> {
        load_spec(text, "t")
    }

    #[test]
    fn loads_a_small_spec() {
        let s = load(DEC).unwrap();
        assert_eq!(s.model.edges().len(), 1);
        assert_eq!(s.database.unwrap().get("x").unwrap().as_int(), Some(2));
    }

    #[test]
    fn guard_errors_name_the_edge() {
        let bad = DEC.replace("db.x > 0", "db.y > 0");
        assert_eq!(load(&bad).unwrap_err().pointer, "/fragments/0/edges/0/guard");
    }

    #[test]
    fn database_errors_name_the_leaf() {
        let bad = DEC.replace(r#""x": 2"#, r#""x": true"#);
        assert_eq!(load(&bad).unwrap_err().pointer, "/database/x");
    }

    #[test]
    fn entry_nodes_need_a_guard() {
        let bad = DEC.replace(r#""labels": ["init"]"#, r#""labels": ["init", "entry"]"#);
        assert_eq!(load(&bad).unwrap_err().pointer, "/fragments/0/nodes/0");
    }

    #[test]
    fn two_init_nodes_are_rejected() {
        let bad = DEC.replace(
            r#"{ "id": "a", "labels": ["init"] }"#,
            r#"{ "id": "a", "labels": ["init"] }, { "id": "b", "labels": ["init"] }"#,
        );
        let e = load(&bad).unwrap_err();
        assert_eq!(e.pointer, "/fragments");
        assert!(e.message.contains("several init"), "{e}");
    }

    #[test]
    fn unknown_edge_target_points_at_the_edge() {
        let bad = DEC.replace(r#""to": "a""#, r#""to": "z""#);
        assert_eq!(load(&bad).unwrap_err().pointer, "/fragments/0/edges/0");
    }

    #[test]
    fn structured_types_are_accepted() {
        let s = DEC.replace(r#""DB = { x: Integer }""#, r#"{ "DB": "{ x: Integer }" }"#);
        assert!(load(&s).is_ok());
    }
}
