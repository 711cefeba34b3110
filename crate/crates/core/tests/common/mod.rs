//! Random instances, values and queries shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use fragcheck::ctl::{expand_query, parse_ctl, quantified_query, Ctl};
use fragcheck::json::{parse_type_defs, JsonType, TypeEnv, Value};
use fragcheck::logic::{derive_signature, parse_formula, Signature, Sort};
use fragcheck::process::{compose, Edge, Fragment, Node, ProcessModel};
use fragcheck::script::parse_script;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

pub fn specs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("specs")
}

pub fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden")
}

pub const SMALL_TYPES: &str = "DB = { x: Integer, y: Integer, b: Bool }";

pub const PURCHASE_TYPES: &str = "DB = { order: List[Integer], gold: Bool, stock: List[Stock], status: Status }
Stock = { ident: String, price: Integer, available: Integer }
Status = { open: List[Integer], value: Integer, shipping: Integer, paid: Bool, shipped: Bool, final: Bool }";

pub const PURCHASE_DB: &str = r#"{ "order": [1], "gold": true,
  "stock": [ { "ident": "Mouse", "price": 10, "available": 0 },
             { "ident": "Monitor", "price": 200, "available": 2 },
             { "ident": "Computer", "price": 1000, "available": 4 } ],
  "status": { "open": [], "value": 0, "shipping": 0, "paid": false, "shipped": false, "final": false } }"#;

/// A process over [`SMALL_TYPES`] with a starting database.
pub struct Instance {
    pub sig: Signature,
    pub model: ProcessModel,
    pub db: Value,
    /// Edges as `(from, to, guard, script)` text, for failure messages.
    pub edges: Vec<(String, String, String, String)>,
}

pub fn small_sig() -> Signature {
    derive_signature(&parse_type_defs(SMALL_TYPES).unwrap())
}

fn int_field(rng: &mut StdRng) -> &'static str {
    ["db.x", "db.y"][rng.gen_range(0..2)]
}

pub fn atom(rng: &mut StdRng) -> String {
    let k = rng.gen_range(-3..=3);
    match rng.gen_range(0..6) {
        0 => format!("{} > {k}", int_field(rng)),
        1 => format!("{} = {k}", int_field(rng)),
        2 => format!("{} <= {k}", int_field(rng)),
        3 => format!("db.b = {}", rng.gen_bool(0.5)),
        4 => "db.x <= db.y".into(),
        _ => ["true", "false"][rng.gen_range(0..2)].into(),
    }
}

pub fn guard(rng: &mut StdRng) -> String {
    match rng.gen_range(0..5) {
        0 => "true".into(),
        1 => format!("{} && {}", atom(rng), atom(rng)),
        2 => format!("~({})", atom(rng)),
        _ => atom(rng),
    }
}

pub fn script(rng: &mut StdRng) -> String {
    let n = rng.gen_range(0..=2);
    let stmts: Vec<String> = (0..n)
        .map(|_| {
            let f = int_field(rng);
            match rng.gen_range(0..7) {
                0 => format!("{f} = {f} + 1"),
                1 => format!("{f} = {f} - 1"),
                2 => format!("{f} = {}", int_field(rng)),
                3 => format!("{f} = {}", rng.gen_range(-3..=3)),
                4 => format!("{f} = -{f}"),
                5 => format!("db.b = {}", rng.gen_bool(0.5)),
                _ => format!("{f} = db.x + db.y"),
            }
        })
        .collect();
    stmts.join("; ")
}

pub fn small_db(rng: &mut StdRng) -> Value {
    Value::object([
        ("x", Value::Int(rng.gen_range(-3..=3))),
        ("y", Value::Int(rng.gen_range(-3..=3))),
        ("b", Value::Bool(rng.gen_bool(0.5))),
    ])
}

/// At most four nodes and at most three outgoing edges per node.
pub fn instance(rng: &mut StdRng) -> Instance {
    let sig = small_sig();
    let n = rng.gen_range(1..=4);
    let ids: Vec<String> = (0..n).map(|i| format!("n{i}")).collect();
    let nodes: Vec<Node> = ids.iter().enumerate().map(|(i, id)| Node { init: i == 0, ..Node::new(id) }).collect();
    let mut edges = Vec::new();
    let mut text = Vec::new();
    for from in &ids {
        for _ in 0..rng.gen_range(0..=3) {
            let to = ids.choose(rng).unwrap().clone();
            let (g, s) = (guard(rng), script(rng));
            let e = Edge::new(
                &format!("e{}", edges.len()),
                from,
                &to,
                parse_formula(&g, &sig).unwrap(),
                parse_script(&s, &sig).unwrap(),
                &sig,
            );
            edges.push(e);
            text.push((from.clone(), to, g, s));
        }
    }
    let model = compose(&[Fragment { name: "R".into(), nodes, edges }], &sig).unwrap();
    Instance { sig, model, db: small_db(rng), edges: text }
}

/// A state formula with at most `depth` nested operators.
pub fn state_formula(rng: &mut StdRng, depth: usize) -> String {
    if depth == 0 {
        return atom(rng);
    }
    match rng.gen_range(0..7) {
        0 => atom(rng),
        1 => format!("~({})", state_formula(rng, depth - 1)),
        2 => format!("({}) && ({})", state_formula(rng, depth - 1), state_formula(rng, depth - 1)),
        3 => format!("({}) || ({})", state_formula(rng, depth - 1), state_formula(rng, depth - 1)),
        4 | 5 => format!("A ({})", path_formula(rng, depth - 1)),
        _ => format!("E ({})", path_formula(rng, depth - 1)),
    }
}

/// A path formula with at most `depth` nested operators.
pub fn path_formula(rng: &mut StdRng, depth: usize) -> String {
    if depth == 0 {
        return atom(rng);
    }
    let d = depth - 1;
    match rng.gen_range(0..12) {
        0 => state_formula(rng, d),
        1 => format!("X ({})", path_formula(rng, d)),
        2 => format!("WX ({})", path_formula(rng, d)),
        3 => format!("({}) U ({})", path_formula(rng, d), path_formula(rng, d)),
        4 => format!("({}) R ({})", path_formula(rng, d), path_formula(rng, d)),
        5 => format!("({}) W ({})", path_formula(rng, d), path_formula(rng, d)),
        6 => format!("G ({})", path_formula(rng, d)),
        7 => format!("F ({})", path_formula(rng, d)),
        8 => format!("~({})", path_formula(rng, d)),
        9 => format!("({}) && ({})", path_formula(rng, d), path_formula(rng, d)),
        10 => format!("({}) || ({})", path_formula(rng, d), path_formula(rng, d)),
        _ => atom(rng),
    }
}

/// Parses a query and brings it into the form both checkers take.
pub fn prepared(text: &str, sig: &Signature, constraints: &[Ctl]) -> Ctl {
    let q = parse_ctl(text, sig).unwrap_or_else(|e| panic!("{text}: {e}"));
    expand_query(&quantified_query(&q).0, constraints)
}

/// A random value of `ty`, lists of length at most `max_len`.
pub fn value_of_type(ty: &JsonType, env: &TypeEnv, rng: &mut StdRng, max_len: usize) -> Value {
    match env.resolve(ty) {
        JsonType::Integer => Value::Int(rng.gen_range(-3..=5)),
        JsonType::Bool => Value::Bool(rng.gen_bool(0.5)),
        JsonType::String => Value::Str(["", "a", "Mouse", "b c"][rng.gen_range(0..4)].into()),
        JsonType::Enum(members) => Value::Str(members.choose(rng).unwrap().clone()),
        JsonType::Option(inner) => {
            if rng.gen_bool(0.3) {
                Value::Null
            } else {
                value_of_type(inner, env, rng, max_len)
            }
        }
        JsonType::List(elem) => {
            let n = rng.gen_range(0..=max_len);
            Value::Array((0..n).map(|_| value_of_type(elem, env, rng, max_len)).collect())
        }
        JsonType::Object(fields) => {
            Value::Object(fields.iter().map(|(k, t)| (k.clone(), value_of_type(t, env, rng, max_len))).collect())
        }
        JsonType::Named(_) => unreachable!("resolved"),
    }
}

/// A random value of a first-order sort.
pub fn value_of_sort(s: &Sort, sig: &Signature, rng: &mut StdRng) -> Value {
    match s {
        Sort::Int => Value::Int(rng.gen_range(-2..=4)),
        Sort::Bool => Value::Bool(rng.gen_bool(0.5)),
        Sort::Str => Value::Str(["", "a", "Mouse"][rng.gen_range(0..3)].into()),
        Sort::Enum(e) => Value::Str(e.members.choose(rng).unwrap().clone()),
        Sort::Obj(ty) => Value::Object(
            sig.fields(ty)
                .unwrap()
                .iter()
                .map(|f| (f.field.clone(), value_of_sort(&f.sort, sig, rng)))
                .collect::<BTreeMap<_, _>>(),
        ),
        Sort::List(e) => {
            let n = rng.gen_range(0..=3);
            Value::Array((0..n).map(|_| value_of_sort(e, sig, rng)).collect())
        }
        Sort::Opt(inner) => {
            if rng.gen_bool(0.3) {
                Value::Null
            } else {
                value_of_sort(inner, sig, rng)
            }
        }
    }
}

/// A random type expression; options never directly nest.
pub fn random_type(rng: &mut StdRng, depth: usize) -> String {
    let leaf = |rng: &mut StdRng| match rng.gen_range(0..4) {
        0 => "Integer".to_string(),
        1 => "Bool".to_string(),
        2 => "String".to_string(),
        _ => r#"EnumTy["red", "green"]"#.to_string(),
    };
    if depth == 0 {
        return leaf(rng);
    }
    match rng.gen_range(0..4) {
        0 => leaf(rng),
        1 => format!("List[{}]", random_type(rng, depth - 1)),
        2 => {
            let inner = random_type(rng, depth - 1);
            if inner.starts_with("Option") {
                inner
            } else {
                format!("Option[{inner}]")
            }
        }
        _ => {
            let n = rng.gen_range(0..=3);
            let fields: Vec<String> = (0..n).map(|i| format!("f{i}: {}", random_type(rng, depth - 1))).collect();
            format!("{{ {} }}", fields.join(", "))
        }
    }
}

/// Every leaf of a value with its JSON pointer.
pub fn leaves(v: &Value, at: &str, out: &mut Vec<(String, Value)>) {
    match v {
        Value::Object(m) => m.iter().for_each(|(k, x)| leaves(x, &format!("{at}/{k}"), out)),
        Value::Array(items) => items.iter().enumerate().for_each(|(i, x)| leaves(x, &format!("{at}/{i}"), out)),
        other => out.push((at.to_string(), other.clone())),
    }
}

/// Replaces the value at a JSON pointer.
pub fn replace_at(v: &mut Value, pointer: &str, new: Value) {
    let mut cur = v;
    for tok in pointer.split('/').skip(1) {
        cur = match cur {
            Value::Object(m) => m.get_mut(tok).unwrap(),
            Value::Array(items) => &mut items[tok.parse::<usize>().unwrap()],
            _ => panic!("bad pointer {pointer}"),
        };
    }
    *cur = new;
}

/// A value of a different JSON kind than `v`.
pub fn wrong_kind(v: &Value) -> Value {
    match v {
        Value::Int(_) => Value::Str("three".into()),
        Value::Str(_) => Value::Bool(true),
        Value::Bool(_) => Value::Int(3),
        _ => Value::Int(0),
    }
}
