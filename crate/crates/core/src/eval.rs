//! Ground evaluation of terms and formulas.
//!
//! Quantifiers are evaluated by enumeration and must therefore be bounded:
//! the bound variable ranges over a finite sort (Bool or an enumeration), or
//! the body guards it by a membership `x in l`, an equation `x = t`, or a
//! pair of integer bounds.

use std::borrow::Cow;
use std::collections::BTreeMap;

use crate::json::Value;
use crate::logic::{Definition, Formula, FuncKind, Pred, Sort, Term, Var};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("quantifier over {0} is not bounded; not concretely evaluable")]
    Unbounded(String),
    #[error("index {index} out of bounds for list of length {len}")]
    OutOfBounds { index: i64, len: usize },
    #[error("integer overflow")]
    Overflow,
    #[error("null dereference in {0}")]
    NullDeref(String),
    #[error("symbolic value {0} has no ground interpretation")]
    Symbolic(String),
    #[error("predicate {0} has no definition")]
    Undefined(String),
    #[error("value {0} has an unexpected shape")]
    Shape(String),
}

/// Ground interpretation of variables and uninterpreted constants.
#[derive(Clone, Debug, Default)]
pub struct Env {
    vars: BTreeMap<Var, Value>,
    consts: BTreeMap<String, Value>,
}

impl Env {
    pub fn new() -> Env {
        Env::default()
    }

    pub fn with_var(mut self, v: &Var, val: Value) -> Env {
        self.vars.insert(v.clone(), val);
        self
    }

    pub fn bind(&mut self, v: &Var, val: Value) -> Option<Value> {
        self.vars.insert(v.clone(), val)
    }

    pub fn unbind(&mut self, v: &Var, old: Option<Value>) {
        match old {
            Some(o) => self.vars.insert(v.clone(), o),
            None => self.vars.remove(v),
        };
    }

    pub fn set_const(&mut self, name: &str, val: Value) {
        self.consts.insert(name.to_string(), val);
    }

    pub fn get_const(&self, name: &str) -> Option<&Value> {
        self.consts.get(name)
    }
}

fn shape(v: &Value) -> EvalError {
    EvalError::Shape(v.to_json_string())
}

fn project<'a>(v: Cow<'a, Value>, f: impl Fn(&Value) -> Result<&Value, EvalError>) -> Result<Cow<'a, Value>, EvalError> {
    match v {
        Cow::Borrowed(b) => f(b).map(Cow::Borrowed),
        Cow::Owned(o) => f(&o).map(|x| Cow::Owned(x.clone())),
    }
}

fn int(v: &Value) -> Result<i64, EvalError> {
    v.as_int().ok_or_else(|| shape(v))
}

fn list(v: &Value) -> Result<&[Value], EvalError> {
    v.as_array().ok_or_else(|| shape(v))
}

fn slot(len: usize, i: i64) -> Result<usize, EvalError> {
    usize::try_from(i)
        .ok()
        .filter(|&u| u < len)
        .ok_or(EvalError::OutOfBounds { index: i, len })
}

/// Evaluates a term to a value.
pub fn eval_term<'a>(t: &'a Term, env: &'a Env) -> Result<Cow<'a, Value>, EvalError> {
    match t {
        Term::Var(v) => env
            .vars
            .get(v)
            .map(Cow::Borrowed)
            .ok_or_else(|| EvalError::Symbolic(v.name.to_string())),
        Term::Lit(v, _) => Ok(Cow::Borrowed(v)),
        Term::App(f, args) => {
            if *f.kind() == FuncKind::Constant {
                return env
                    .consts
                    .get(f.name())
                    .map(Cow::Borrowed)
                    .ok_or_else(|| EvalError::Symbolic(f.name().to_string()));
            }
            let first = eval_term(&args[0], env)?;
            match f.kind() {
                FuncKind::Accessor { field, .. } => {
                    project(first, |o| o.get(field).ok_or_else(|| shape(o)))
                }
                FuncKind::Get => {
                    if *first == Value::Null {
                        Err(EvalError::NullDeref(args[0].to_string()))
                    } else {
                        Ok(first)
                    }
                }
                FuncKind::Some => Ok(first),
                FuncKind::Index => {
                    let i = int(&*eval_term(&args[1], env)?)?;
                    project(first, |l| {
                        let items = list(l)?;
                        Ok(&items[slot(items.len(), i)?])
                    })
                }
                FuncKind::Length => {
                    let n = list(&first)?.len();
                    Ok(Cow::Owned(Value::Int(n as i64)))
                }
                FuncKind::Updator { field, .. } => {
                    let v = eval_term(&args[1], env)?.into_owned();
                    let mut o = first.into_owned();
                    match &mut o {
                        Value::Object(m) if m.contains_key(&**field) => {
                            m.insert(field.to_string(), v);
                        }
                        other => return Err(shape(other)),
                    }
                    Ok(Cow::Owned(o))
                }
                FuncKind::Update => {
                    let i = int(&*eval_term(&args[1], env)?)?;
                    let v = eval_term(&args[2], env)?.into_owned();
                    let mut l = first.into_owned();
                    match &mut l {
                        Value::Array(items) => {
                            let k = slot(items.len(), i)?;
                            items[k] = v;
                        }
                        other => return Err(shape(other)),
                    }
                    Ok(Cow::Owned(l))
                }
                FuncKind::Append => {
                    let v = eval_term(&args[1], env)?.into_owned();
                    let mut l = first.into_owned();
                    match &mut l {
                        Value::Array(items) => items.push(v),
                        other => return Err(shape(other)),
                    }
                    Ok(Cow::Owned(l))
                }
                FuncKind::Neg => {
                    let a = int(&first)?;
                    a.checked_neg().map(|n| Cow::Owned(Value::Int(n))).ok_or(EvalError::Overflow)
                }
                FuncKind::Add | FuncKind::Sub | FuncKind::Mul => {
                    let a = int(&first)?;
                    let b = int(&*eval_term(&args[1], env)?)?;
                    let r = match f.kind() {
                        FuncKind::Add => a.checked_add(b),
                        FuncKind::Sub => a.checked_sub(b),
                        _ => a.checked_mul(b),
                    };
                    r.map(|n| Cow::Owned(Value::Int(n))).ok_or(EvalError::Overflow)
                }
                FuncKind::Constant => unreachable!(),
            }
        }
    }
}

/// Evaluates a closed formula (under `env`) with definitions as predicate
/// meanings.
pub fn eval_formula(f: &Formula, env: &mut Env, defs: &[Definition]) -> Result<bool, EvalError> {
    match f {
        Formula::True => Ok(true),
        Formula::False => Ok(false),
        Formula::Eq(a, b) => Ok(eval_term(a, env)? == eval_term(b, env)?),
        Formula::Pred(p, args) => eval_pred(p, args, env, defs),
        Formula::Not(g) => Ok(!eval_formula(g, env, defs)?),
        Formula::And(a, b) => Ok(eval_formula(a, env, defs)? && eval_formula(b, env, defs)?),
        Formula::Or(a, b) => Ok(eval_formula(a, env, defs)? || eval_formula(b, env, defs)?),
        Formula::Implies(a, b) => Ok(!eval_formula(a, env, defs)? || eval_formula(b, env, defs)?),
        Formula::Iff(a, b) => Ok(eval_formula(a, env, defs)? == eval_formula(b, env, defs)?),
        Formula::Forall(v, body) | Formula::Exists(v, body) => {
            let forall = matches!(f, Formula::Forall(..));
            let domain = domain(v, body, forall, env)?;
            for val in domain {
                let old = env.bind(v, val);
                let r = eval_formula(body, env, defs);
                env.unbind(v, old);
                if r? != forall {
                    return Ok(!forall);
                }
            }
            Ok(forall)
        }
    }
}

fn eval_pred(p: &Pred, args: &[Term], env: &mut Env, defs: &[Definition]) -> Result<bool, EvalError> {
    match p {
        Pred::Gt | Pred::Ge | Pred::Lt | Pred::Le => {
            let a = int(&*eval_term(&args[0], env)?)?;
            let b = int(&*eval_term(&args[1], env)?)?;
            Ok(match p {
                Pred::Gt => a > b,
                Pred::Ge => a >= b,
                Pred::Lt => a < b,
                _ => a <= b,
            })
        }
        Pred::IsEmpty => Ok(list(&*eval_term(&args[0], env)?)?.is_empty()),
        Pred::IsNull => Ok(*eval_term(&args[0], env)? == Value::Null),
        Pred::Mem => {
            let x = eval_term(&args[0], env)?;
            let l = eval_term(&args[1], env)?;
            Ok(list(&l)?.contains(&*x))
        }
        Pred::User(name) => {
            let d = defs
                .iter()
                .find(|d| *d.name == **name)
                .ok_or_else(|| EvalError::Undefined(name.to_string()))?;
            let vals = args
                .iter()
                .map(|a| eval_term(a, env).map(Cow::into_owned))
                .collect::<Result<Vec<_>, _>>()?;
            let mut inner = Env { vars: BTreeMap::new(), consts: env.consts.clone() };
            for (v, val) in d.params.iter().zip(vals) {
                inner.bind(v, val);
            }
            eval_formula(&d.body, &mut inner, defs)
        }
    }
}

fn conjuncts<'a>(f: &'a Formula, out: &mut Vec<(&'a Formula, bool)>, positive: bool) {
    match (f, positive) {
        (Formula::And(a, b), true) | (Formula::Or(a, b), false) => {
            conjuncts(a, out, positive);
            conjuncts(b, out, positive);
        }
        (Formula::Not(g), _) => conjuncts(g, out, !positive),
        _ => out.push((f, positive)),
    }
}

/// Literals that every value satisfying the quantifier's guard must satisfy.
fn guards(body: &Formula, forall: bool) -> Vec<(&Formula, bool)> {
    let mut out = Vec::new();
    if forall {
        match body {
            Formula::Implies(a, _) => conjuncts(a, &mut out, true),
            Formula::Or(..) | Formula::Not(_) => {
                // ¬g₁ ∨ ¬g₂ ∨ φ: each negated disjunct is a guard.
                let mut disj = Vec::new();
                conjuncts(body, &mut disj, false);
                out.extend(disj);
            }
            _ => {}
        }
    } else {
        conjuncts(body, &mut out, true);
    }
    out
}

fn domain(v: &Var, body: &Formula, forall: bool, env: &Env) -> Result<Vec<Value>, EvalError> {
    match &v.sort {
        Sort::Bool => return Ok(vec![Value::Bool(false), Value::Bool(true)]),
        Sort::Enum(e) => return Ok(e.members.iter().cloned().map(Value::Str).collect()),
        _ => {}
    }
    let is_v = |t: &Term| matches!(t, Term::Var(w) if w == v);
    let (mut lo, mut hi): (Option<i64>, Option<i64>) = (None, None);
    for (lit, pos) in guards(body, forall) {
        if !pos {
            continue;
        }
        match lit {
            Formula::Pred(Pred::Mem, args) if is_v(&args[0]) && !args[1].contains_var(v) => {
                let l = eval_term(&args[1], env)?;
                return Ok(list(&l)?.to_vec());
            }
            Formula::Eq(a, b) if is_v(a) && !b.contains_var(v) => {
                return Ok(vec![eval_term(b, env)?.into_owned()]);
            }
            Formula::Eq(a, b) if is_v(b) && !a.contains_var(v) => {
                return Ok(vec![eval_term(a, env)?.into_owned()]);
            }
            Formula::Pred(p @ (Pred::Gt | Pred::Ge | Pred::Lt | Pred::Le), args) if v.sort == Sort::Int => {
                let (var_left, other) = if is_v(&args[0]) && !args[1].contains_var(v) {
                    (true, &args[1])
                } else if is_v(&args[1]) && !args[0].contains_var(v) {
                    (false, &args[0])
                } else {
                    continue;
                };
                let Ok(c) = eval_term(other, env).and_then(|c| int(&c)) else { continue };
                // Normalize to v ≥ c or v ≤ c.
                let (lower, bound) = match (p, var_left) {
                    (Pred::Gt, true) | (Pred::Lt, false) => (true, c.checked_add(1)),
                    (Pred::Ge, true) | (Pred::Le, false) => (true, Some(c)),
                    (Pred::Lt, true) | (Pred::Gt, false) => (false, c.checked_sub(1)),
                    _ => (false, Some(c)),
                };
                let Some(bound) = bound else { return Ok(vec![]) };
                if lower {
                    lo = Some(lo.map_or(bound, |l| l.max(bound)));
                } else {
                    hi = Some(hi.map_or(bound, |h| h.min(bound)));
                }
            }
            _ => {}
        }
    }
    match (lo, hi) {
        (Some(l), Some(h)) if h < l => Ok(vec![]),
        (Some(l), Some(h)) if h - l < 1_000_000 => Ok((l..=h).map(Value::Int).collect()),
        _ => Err(EvalError::Unbounded(format!("{}:{}", v.name, v.sort))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::json::{parse_type_defs, parse_value};
    use crate::logic::{derive_signature, parse_definitions, parse_formula, parse_term, Signature};

    const TYPES: &str = r#"
        DB = { order: List[Integer], stock: List[Stock], status: Status, gold: Bool, note: Option[Integer] }
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

    fn setup() -> (Signature, Vec<Definition>, Env) {
        let mut sig = derive_signature(&parse_type_defs(TYPES).unwrap());
        let defs = parse_definitions(&["forall db:DB . (acceptable(db) <=> (~isEmpty(db.order)))"], &mut sig).unwrap();
        let env = Env::new().with_var(sig.db(), parse_value(DB).unwrap());
        (sig, defs, env)
    }

    fn holds(text: &str) -> Result<bool, EvalError> {
        let (sig, defs, mut env) = setup();
        eval_formula(&parse_formula(text, &sig).unwrap(), &mut env, &defs)
    }

    #[test]
    fn acceptable_on_example_db() {
        assert_eq!(holds("acceptable(db)"), Ok(true));
        assert_eq!(holds("~acceptable(db)"), Ok(false));
    }

    #[test]
    fn paid_differs_from_true() {
        assert_eq!(holds("db.status.paid <> true"), Ok(true));
    }

    #[test]
    fn stock_nonnegative() {
        assert_eq!(holds("forall s:Stock . (s in db.stock => s.available >= 0)"), Ok(true));
        assert_eq!(holds("exists s:Stock . (s in db.stock && s.available = 0)"), Ok(true));
        assert_eq!(holds("forall s:Stock . s.available >= 0"), Err(EvalError::Unbounded("s:Stock".into())));
    }

    #[test]
    fn integer_intervals_and_finite_sorts() {
        assert_eq!(holds("exists i:Integer . (0 <= i && i < length(db.stock) && db.stock[i].price = 15)"), Ok(true));
        assert_eq!(holds("forall i:Integer . (i >= 0 && i < 3 => db.stock[i].item = i)"), Ok(true));
        assert_eq!(holds("forall b:Bool . (b = true || b = false)"), Ok(true));
        assert_eq!(holds("exists i:Integer . (i > 5 && i < 3)"), Ok(false));
    }

    #[test]
    fn short_circuit_avoids_errors() {
        assert_eq!(holds("~isEmpty(db.status.open) && db.stock[db.status.open[0]].available > 0"), Ok(false));
        assert!(matches!(holds("db.stock[db.status.open[0]].available > 0"), Err(EvalError::OutOfBounds { .. })));
        assert!(matches!(holds("db.note > 0"), Err(EvalError::NullDeref(_))));
        assert_eq!(holds("db.note = null"), Ok(true));
    }

    #[test]
    fn updators_and_lists() {
        let (sig, _, env) = setup();
        let t = parse_term("db.order.append(7)", &sig).unwrap();
        assert_eq!(eval_term(&t, &env).unwrap().into_owned(), parse_value("[1, 7]").unwrap());
        let t = parse_term("9223372036854775807 + 1", &sig).unwrap();
        assert_eq!(eval_term(&t, &env), Err(EvalError::Overflow));
    }
}
