//! The database update language used on process edges.
//!
//! A script is a `;`-separated list of statements `path = expr` and
//! `path.append(expr)`, where every path starts at `db`. Scripts run
//! directly on JSON values ([`exec`]) and compile to update terms with one
//! free variable `db` ([`to_update_term`]).

use std::collections::BTreeMap;
use std::fmt;

use crate::eval::{eval_term, Env, EvalError};
use crate::json::Value;
use crate::logic::syntax::{syntax, Expr, ExprKind, Parser, Tok};
use crate::logic::{Elaborator, FieldOps, FormulaError, Signature, Sort, Term};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Selector {
    Field(String),
    Index(Term),
    /// Steps through a non-null option.
    Unwrap,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Path {
    pub selectors: Vec<Selector>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stmt {
    Assign(Path, Term),
    Append(Path, Term),
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Script {
    pub stmts: Vec<Stmt>,
}

impl Script {
    pub fn is_empty(&self) -> bool {
        self.stmts.is_empty()
    }
}

struct PathBuilder<'s> {
    sig: &'s Signature,
    sels: Vec<Selector>,
    term: Term,
}

impl PathBuilder<'_> {
    fn unwrap_opt(&mut self) {
        if let Some(inner) = self.term.sort().opt_inner() {
            let get = &self.sig.opt_ops(inner).expect("option sort in signature").get;
            self.term = Term::app(get, vec![self.term.clone()]);
            self.sels.push(Selector::Unwrap);
        }
    }
}

fn build_path<'s>(e: &Expr, el: &mut Elaborator<'s>, sig: &'s Signature) -> Result<PathBuilder<'s>, FormulaError> {
    match &e.kind {
        ExprKind::Ident(n) if n == "db" => Ok(PathBuilder { sig, sels: vec![], term: Term::var(sig.db()) }),
        ExprKind::Field(inner, f) => {
            let mut pb = build_path(inner, el, sig)?;
            pb.unwrap_opt();
            let Sort::Obj(ty) = pb.term.sort().clone() else {
                return Err(FormulaError::Sort { message: format!("{} has no field {f}", pb.term.sort()), pos: e.pos });
            };
            let ops: &FieldOps = sig
                .field(&ty, f)
                .ok_or_else(|| FormulaError::Sort { message: format!("type {ty} has no field {f}"), pos: e.pos })?;
            pb.term = Term::app(&ops.accessor, vec![pb.term]);
            pb.sels.push(Selector::Field(f.clone()));
            Ok(pb)
        }
        ExprKind::Index(inner, idx) => {
            let mut pb = build_path(inner, el, sig)?;
            pb.unwrap_opt();
            let Some(elem) = pb.term.sort().list_elem().cloned() else {
                return Err(FormulaError::Sort { message: format!("{} is not a list", pb.term.sort()), pos: e.pos });
            };
            let i = el.term(idx, Some(&Sort::Int))?;
            let ops = sig.list_ops(&elem).expect("list sort in signature");
            pb.term = Term::app(&ops.index, vec![pb.term, i.clone()]);
            pb.sels.push(Selector::Index(i));
            Ok(pb)
        }
        _ => Err(syntax("assignment target must be a path starting at db", e.pos)),
    }
}

/// Parses and sort-checks a script. The empty text is the identity script.
pub fn parse_script(text: &str, sig: &Signature) -> Result<Script, FormulaError> {
    let mut p = Parser::new(text, false)?;
    let mut el = Elaborator::new(sig);
    let mut stmts = Vec::new();
    while !p.at_end() {
        if p.eat(&Tok::Semi) {
            continue;
        }
        let lhs = p.postfix()?;
        let stmt = match lhs.kind {
            ExprKind::Append(target, item) => {
                let mut pb = build_path(&target, &mut el, sig)?;
                pb.unwrap_opt();
                let Some(elem) = pb.term.sort().list_elem().cloned() else {
                    return Err(FormulaError::Sort { message: format!("cannot append to {}", pb.term.sort()), pos: lhs.pos });
                };
                let x = el.term(&item, Some(&elem))?;
                Stmt::Append(Path { selectors: pb.sels }, x)
            }
            _ => {
                let pb = build_path(&lhs, &mut el, sig)?;
                p.expect(&Tok::Eq)?;
                let rhs = p.expr()?;
                let v = el.term(&rhs, Some(pb.term.sort()))?;
                Stmt::Assign(Path { selectors: pb.sels }, v)
            }
        };
        stmts.push(stmt);
        if !p.at_end() {
            p.expect(&Tok::Semi)?;
        }
    }
    Ok(Script { stmts })
}

fn navigate<'v>(v: &'v mut Value, sels: &[Selector], env: &Env) -> Result<&'v mut Value, EvalError> {
    let mut cur = v;
    for sel in sels {
        cur = match sel {
            Selector::Field(f) => match cur {
                Value::Object(m) => m.get_mut(f).ok_or_else(|| EvalError::Shape(format!("missing field {f}")))?,
                other => return Err(EvalError::Shape(other.to_json_string())),
            },
            Selector::Index(t) => {
                let i = eval_term(t, env)?.as_int().ok_or_else(|| EvalError::Shape(t.to_string()))?;
                match cur {
                    Value::Array(items) => {
                        let len = items.len();
                        let k = usize::try_from(i)
                            .ok()
                            .filter(|&k| k < len)
                            .ok_or(EvalError::OutOfBounds { index: i, len })?;
                        &mut items[k]
                    }
                    other => return Err(EvalError::Shape(other.to_json_string())),
                }
            }
            Selector::Unwrap => {
                if *cur == Value::Null {
                    return Err(EvalError::NullDeref("path".into()));
                }
                cur
            }
        };
    }
    Ok(cur)
}

/// Runs a script on a database value.
pub fn exec(s: &Script, db: &Value, sig: &Signature) -> Result<Value, EvalError> {
    let mut cur = db.clone();
    for stmt in &s.stmts {
        let env = Env::new().with_var(sig.db(), cur.clone());
        let (path, rhs) = match stmt {
            Stmt::Assign(p, t) | Stmt::Append(p, t) => (p, t),
        };
        let v = eval_term(rhs, &env)?.into_owned();
        let slot = navigate(&mut cur, &path.selectors, &env)?;
        match stmt {
            Stmt::Assign(..) => *slot = v,
            Stmt::Append(..) => match slot {
                Value::Array(items) => items.push(v),
                other => return Err(EvalError::Shape(other.to_json_string())),
            },
        }
    }
    Ok(cur)
}

/// Read-modify-write: the term for `base` with the value at `sels`
/// replaced by `leaf(old)`.
fn write(base: Term, sels: &[Selector], sig: &Signature, leaf: &dyn Fn(Term) -> Term) -> Term {
    let Some((sel, rest)) = sels.split_first() else { return leaf(base) };
    match sel {
        Selector::Field(f) => {
            let Sort::Obj(ty) = base.sort().clone() else { unreachable!("checked by parse_script") };
            let ops = sig.field(&ty, f).expect("checked by parse_script");
            let inner = write(Term::app(&ops.accessor, vec![base.clone()]), rest, sig, leaf);
            Term::app(&ops.updator, vec![base, inner])
        }
        Selector::Index(i) => {
            let ops = sig.list_ops(base.sort().list_elem().unwrap()).unwrap();
            let inner = write(Term::app(&ops.index, vec![base.clone(), i.clone()]), rest, sig, leaf);
            Term::app(&ops.update, vec![base, i.clone(), inner])
        }
        Selector::Unwrap => {
            let ops = sig.opt_ops(base.sort().opt_inner().unwrap()).unwrap();
            let inner = write(Term::app(&ops.get, vec![base]), rest, sig, leaf);
            Term::app(&ops.some, vec![inner])
        }
    }
}

/// Compiles a script to a term over the free variable `db` denoting its
/// effect; statements are sequenced by substitution.
pub fn to_update_term(s: &Script, sig: &Signature) -> Term {
    let db = sig.db();
    let mut acc = Term::var(db);
    for stmt in &s.stmts {
        let step = match stmt {
            Stmt::Assign(p, v) => write(Term::var(db), &p.selectors, sig, &|_| v.clone()),
            Stmt::Append(p, v) => write(Term::var(db), &p.selectors, sig, &|old| {
                let ops = sig.list_ops(old.sort().list_elem().unwrap()).unwrap();
                Term::app(&ops.append, vec![old, v.clone()])
            }),
        };
        let mut map = BTreeMap::new();
        map.insert(db.clone(), acc);
        acc = step.subst(&map);
    }
    acc
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("db")?;
        for s in &self.selectors {
            match s {
                Selector::Field(n) => write!(f, ".{n}")?,
                Selector::Index(i) => write!(f, "[{i}]")?,
                Selector::Unwrap => {}
            }
        }
        Ok(())
    }
}

impl fmt::Display for Script {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.stmts.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            match s {
                Stmt::Assign(p, v) => write!(f, "{p} = {v}")?,
                Stmt::Append(p, v) => write!(f, "{p}.append({v})")?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::json::{parse_type_defs, parse_value};
    use crate::logic::derive_signature;

    const TYPES: &str = r#"
        DB = { order: List[Integer], stock: List[Stock], status: Status, gold: Bool, note: Option[Stock] }
        Stock = { item: Integer, available: Integer, price: Integer }
        Status = { open: List[Integer], value: Integer, paid: Bool,
                   shipped: Bool, final: Bool, completed: Bool }
    "#;

    const DB: &str = r#"{
        "order": [1], "gold": false, "note": null,
        "stock": [ {"item": 0, "available": 0, "price": 10},
                   {"item": 1, "available": 2, "price": 20},
                   {"item": 2, "available": 4, "price": 15} ],
        "status": {"open": [], "value": 0, "paid": false, "shipped": false,
                   "final": false, "completed": false}
    }"#;

    fn sig() -> Signature {
        derive_signature(&parse_type_defs(TYPES).unwrap())
    }

    fn check_agree(text: &str) -> Value {
        let sig = sig();
        let s = parse_script(text, &sig).unwrap();
        let db = parse_value(DB).unwrap();
        let direct = exec(&s, &db, &sig).unwrap();
        let t = to_update_term(&s, &sig);
        assert!(t.well_sorted());
        let env = Env::new().with_var(sig.db(), db);
        assert_eq!(eval_term(&t, &env).unwrap().into_owned(), direct, "{t}");
        direct
    }

    #[test]
    fn paid_assignment() {
        let sig = sig();
        let s = parse_script("db.status.paid = true", &sig).unwrap();
        assert_eq!(to_update_term(&s, &sig).to_string(), "upd_status(db, upd_paid(status(db), true))");
        let out = check_agree("db.status.paid = true");
        assert_eq!(out.pointer("/status/paid"), Some(&Value::Bool(true)));
        let mut expected = parse_value(DB).unwrap();
        if let Value::Object(m) = &mut expected {
            if let Some(Value::Object(st)) = m.get_mut("status") {
                st.insert("paid".into(), Value::Bool(true));
            }
        }
        assert_eq!(out, expected);
    }

    #[test]
    fn empty_script_is_identity() {
        let sig = sig();
        let s = parse_script("", &sig).unwrap();
        assert!(s.is_empty());
        assert_eq!(to_update_term(&s, &sig), Term::var(sig.db()));
        assert_eq!(check_agree(""), parse_value(DB).unwrap());
    }

    #[test]
    fn clear_order_and_value() {
        let out = check_agree("db.order = []; db.status.value = 0");
        assert_eq!(out.pointer("/order"), Some(&Value::Array(vec![])));
        assert_eq!(out.pointer("/status/value"), Some(&Value::Int(0)));
    }

    #[test]
    fn indexed_update_compiles_read_modify_write() {
        let sig = sig();
        let s = parse_script("db.stock[0].available = 0", &sig).unwrap();
        assert_eq!(
            to_update_term(&s, &sig).to_string(),
            "upd_stock(db, update(stock(db), 0, upd_available(index(stock(db), 0), 0)))"
        );
        check_agree("db.stock[0].available = 0");
    }

    #[test]
    fn sequencing_reads_updated_state() {
        let out = check_agree("db.status.open = db.order; db.stock[db.status.open[0]].available = db.stock[db.status.open[0]].available - 1; db.status.open.append(5)");
        assert_eq!(out.pointer("/stock/1/available"), Some(&Value::Int(1)));
        assert_eq!(out.pointer("/status/open"), Some(&parse_value("[1, 5]").unwrap()));
    }

    #[test]
    fn runtime_errors() {
        let sig = sig();
        let db = parse_value(DB).unwrap();
        let oob = parse_script("db.stock[7].price = 1", &sig).unwrap();
        assert!(matches!(exec(&oob, &db, &sig), Err(EvalError::OutOfBounds { index: 7, len: 3 })));
        let null = parse_script("db.note.price = 1", &sig).unwrap();
        assert!(matches!(exec(&null, &db, &sig), Err(EvalError::NullDeref(_))));
        let ovf = parse_script("db.status.value = 9223372036854775807; db.status.value = db.status.value + 1", &sig).unwrap();
        assert_eq!(exec(&ovf, &db, &sig), Err(EvalError::Overflow));
    }

    #[test]
    fn option_targets() {
        let out = check_agree(r#"db.note = db.stock[2]; db.note.price = 3"#);
        assert_eq!(out.pointer("/note/price"), Some(&Value::Int(3)));
        check_agree("db.note = null");
    }

    #[test]
    fn rejects_bad_scripts() {
        let sig = sig();
        assert!(parse_script("x.y = 1", &sig).is_err());
        assert!(parse_script("db.gold = 1", &sig).is_err());
        assert!(parse_script("db.status.paid = true db.gold = false", &sig).is_err());
        assert!(parse_script("db.gold.append(1)", &sig).is_err());
        assert!(parse_script("db.gold = db.gold = true", &sig).is_err());
    }
}
