//! Sort assignment: turns untyped [`Expr`] trees into sorted terms and
//! formulas over a [`Signature`].

use std::sync::Arc;

use super::signature::Signature;
use super::sort::Sort;
use super::syntax::{parse_expr, ArithOp, BoolOp, CmpOp, Expr, ExprKind, FormulaError, Pos};
use super::term::{Formula, Pred, Term, Var};
use crate::json::{JsonType, Value};

fn sort_err(message: impl Into<String>, pos: Pos) -> FormulaError {
    FormulaError::Sort { message: message.into(), pos }
}

pub struct Elaborator<'a> {
    sig: &'a Signature,
    scope: Vec<Var>,
    free_db: bool,
}

impl<'a> Elaborator<'a> {
    /// An elaborator in which `db` denotes the signature's database variable.
    pub fn new(sig: &'a Signature) -> Elaborator<'a> {
        Elaborator { sig, scope: Vec::new(), free_db: true }
    }

    /// An elaborator in which only quantified variables are in scope.
    pub fn closed(sig: &'a Signature) -> Elaborator<'a> {
        Elaborator { sig, scope: Vec::new(), free_db: false }
    }

    pub fn sig(&self) -> &Signature {
        self.sig
    }

    pub fn resolve_type(&self, ty: &JsonType, pos: Pos) -> Result<Sort, FormulaError> {
        match ty {
            JsonType::Named(n) => self
                .sig
                .named_sort(n)
                .cloned()
                .ok_or_else(|| FormulaError::Unknown { name: n.clone(), pos }),
            JsonType::List(t) => Ok(Sort::list(self.resolve_type(t, pos)?)),
            JsonType::Option(t) => Ok(Sort::opt(self.resolve_type(t, pos)?)),
            other => Ok(self.sig.sort_of(other)),
        }
    }

    fn lookup(&self, name: &str, pos: Pos) -> Result<Var, FormulaError> {
        if let Some(v) = self.scope.iter().rev().find(|v| &*v.name == name) {
            return Ok(v.clone());
        }
        if name == "db" && self.free_db {
            return Ok(self.sig.db().clone());
        }
        Err(FormulaError::Unknown { name: name.to_string(), pos })
    }

    /// Runs `f` with additional variables in scope.
    pub fn with_vars<T>(&mut self, vars: &[Var], f: impl FnOnce(&mut Self) -> T) -> T {
        let n = self.scope.len();
        self.scope.extend(vars.iter().cloned());
        let out = f(self);
        self.scope.truncate(n);
        out
    }

    /// Elaborates `e` as a term, coercing to `expected` when given.
    pub fn term(&mut self, e: &Expr, expected: Option<&Sort>) -> Result<Term, FormulaError> {
        let t = self.term_raw(e, expected)?;
        match expected {
            Some(s) => self.coerce(t, s, e.pos),
            None => Ok(t),
        }
    }

    /// Inserts `some`/`get` between a sort and its option sort.
    fn coerce(&self, t: Term, want: &Sort, pos: Pos) -> Result<Term, FormulaError> {
        let have = t.sort().clone();
        if &have == want {
            return Ok(t);
        }
        if want.opt_inner() == Some(&have) {
            let ops = self.sig.opt_ops(&have).ok_or_else(|| sort_err(format!("no sort {want}"), pos))?;
            return Ok(Term::app(&ops.some, vec![t]));
        }
        if have.opt_inner() == Some(want) {
            return Ok(self.unwrap_opt(t));
        }
        Err(sort_err(format!("expected {want}, found {have} in `{t}`"), pos))
    }

    fn unwrap_opt(&self, t: Term) -> Term {
        match t.sort().opt_inner() {
            Some(inner) => {
                let ops = self.sig.opt_ops(inner).expect("option sort is in the signature");
                Term::app(&ops.get, vec![t])
            }
            None => t,
        }
    }

    fn literal(&self, v: Value, expected: Option<&Sort>, pos: Pos) -> Result<Term, FormulaError> {
        let default = match &v {
            Value::Int(_) => Some(Sort::Int),
            Value::Bool(_) => Some(Sort::Bool),
            Value::Str(_) => Some(Sort::Str),
            _ => None,
        };
        let sort = match expected {
            Some(s) if value_has_sort(&v, s) => s.clone(),
            Some(s) if default.as_ref().is_some_and(|d| s.opt_inner() == Some(d)) => s.clone(),
            Some(s) => match &v {
                Value::Str(x) if matches!(s, Sort::Enum(_)) => {
                    return Err(sort_err(format!("{x:?} is not a member of {s}"), pos))
                }
                _ => match default {
                    Some(d) => d,
                    None => return Err(sort_err(format!("literal {v} does not have sort {s}"), pos)),
                },
            },
            None => default.ok_or_else(|| sort_err(format!("cannot infer the sort of {v}"), pos))?,
        };
        Ok(Term::lit(v, sort))
    }

    fn term_raw(&mut self, e: &Expr, expected: Option<&Sort>) -> Result<Term, FormulaError> {
        let pos = e.pos;
        match &e.kind {
            ExprKind::Int(n) => self.literal(Value::Int(*n), expected, pos),
            ExprKind::Str(s) => self.literal(Value::Str(s.clone()), expected, pos),
            ExprKind::Bool(b) => self.literal(Value::Bool(*b), expected, pos),
            ExprKind::Null => match expected {
                Some(s @ Sort::Opt(_)) => Ok(Term::lit(Value::Null, s.clone())),
                Some(s) => Err(sort_err(format!("null does not have sort {s}"), pos)),
                None => Err(sort_err("cannot infer the sort of null", pos)),
            },
            ExprKind::List(items) => {
                let list_sort = match expected.map(|s| s.opt_inner().unwrap_or(s)) {
                    Some(s @ Sort::List(_)) => s.clone(),
                    Some(s) => return Err(sort_err(format!("list literal does not have sort {s}"), pos)),
                    None => match items.first() {
                        Some(first) => Sort::list(self.term(first, None)?.sort().clone()),
                        None => return Err(sort_err("cannot infer the sort of []", pos)),
                    },
                };
                let elem = list_sort.list_elem().expect("list sort").clone();
                let elems = items
                    .iter()
                    .map(|i| self.term(i, Some(&elem)))
                    .collect::<Result<Vec<_>, _>>()?;
                if elems.iter().all(|t| matches!(t, Term::Lit(..))) {
                    let vals = elems
                        .into_iter()
                        .map(|t| match t {
                            Term::Lit(v, _) => (*v).clone(),
                            _ => unreachable!(),
                        })
                        .collect();
                    return Ok(Term::lit(Value::Array(vals), list_sort));
                }
                let ops = self
                    .sig
                    .list_ops(&elem)
                    .ok_or_else(|| sort_err(format!("no sort {list_sort} in the signature"), pos))?;
                Ok(elems
                    .into_iter()
                    .fold(Term::lit(Value::Array(vec![]), list_sort), |acc, x| {
                        Term::app(&ops.append, vec![acc, x])
                    }))
            }
            ExprKind::Ident(name) => Ok(Term::Var(self.lookup(name, pos)?)),
            ExprKind::Field(obj, field) => {
                let t = self.term(obj, None)?;
                let t = self.unwrap_opt(t);
                let Sort::Obj(ty) = t.sort().clone() else {
                    return Err(sort_err(format!("`{t}` of sort {} has no field {field}", t.sort()), pos));
                };
                let ops = self
                    .sig
                    .field(&ty, field)
                    .ok_or_else(|| sort_err(format!("type {ty} has no field {field}"), pos))?;
                Ok(Term::app(&ops.accessor, vec![t]))
            }
            ExprKind::Index(list, idx) => {
                let l = self.list_term(list)?;
                let i = self.term(idx, Some(&Sort::Int))?;
                let ops = self.sig.list_ops(l.sort().list_elem().unwrap()).unwrap();
                Ok(Term::app(&ops.index, vec![l, i]))
            }
            ExprKind::Append(list, item) => {
                let l = self.list_term(list)?;
                let elem = l.sort().list_elem().unwrap().clone();
                let x = self.term(item, Some(&elem))?;
                let ops = self.sig.list_ops(&elem).unwrap();
                Ok(Term::app(&ops.append, vec![l, x]))
            }
            ExprKind::Call(name, args) => match (name.as_str(), args.as_slice()) {
                ("length", [l]) => {
                    let l = self.list_term(l)?;
                    let ops = self.sig.list_ops(l.sort().list_elem().unwrap()).unwrap();
                    Ok(Term::app(&ops.length, vec![l]))
                }
                ("get", [o]) => {
                    let t = self.term(o, None)?;
                    if t.sort().opt_inner().is_none() {
                        return Err(sort_err(format!("`{t}` is not an option"), pos));
                    }
                    Ok(self.unwrap_opt(t))
                }
                _ if self.sig.pred(name).is_some() || matches!(name.as_str(), "isEmpty" | "isNull") => {
                    Err(sort_err(format!("predicate {name} used as a term"), pos))
                }
                _ => Err(FormulaError::Unknown { name: name.clone(), pos }),
            },
            ExprKind::Neg(inner) => {
                let t = self.term(inner, Some(&Sort::Int))?;
                if let Term::Lit(v, _) = &t {
                    if let Some(n) = v.as_int().and_then(i64::checked_neg) {
                        return Ok(Term::int(n));
                    }
                }
                Ok(Term::app(&self.sig.arith().neg, vec![t]))
            }
            ExprKind::Arith(op, a, b) => {
                let a = self.term(a, Some(&Sort::Int))?;
                let b = self.term(b, Some(&Sort::Int))?;
                let ar = self.sig.arith();
                let f = match op {
                    ArithOp::Add => &ar.add,
                    ArithOp::Sub => &ar.sub,
                    ArithOp::Mul => &ar.mul,
                };
                Ok(Term::app(f, vec![a, b]))
            }
            _ => Err(sort_err("a formula cannot be used as a term", pos)),
        }
    }

    fn list_term(&mut self, e: &Expr) -> Result<Term, FormulaError> {
        let t = self.term(e, None)?;
        let t = self.unwrap_opt(t);
        match t.sort() {
            Sort::List(_) => Ok(t),
            s => Err(sort_err(format!("`{t}` of sort {s} is not a list"), e.pos)),
        }
    }

    /// Literal-like expressions take their sort from the other side of a
    /// comparison.
    fn is_flexible(e: &Expr) -> bool {
        matches!(e.kind, ExprKind::Null | ExprKind::Str(_) | ExprKind::List(_) | ExprKind::Int(_) | ExprKind::Bool(_))
    }

    fn pair(&mut self, a: &Expr, b: &Expr) -> Result<(Term, Term), FormulaError> {
        if Self::is_flexible(a) && !Self::is_flexible(b) {
            let tb = self.term(b, None)?;
            let ta = self.term(a, Some(tb.sort()))?;
            Ok((ta, tb))
        } else {
            let ta = self.term(a, None)?;
            let tb = self.term(b, Some(ta.sort()));
            match tb {
                Ok(tb) => Ok((ta, tb)),
                // Let an option on the right lift a plain left side.
                Err(err) => {
                    let tb = self.term(b, None).map_err(|_| err.clone())?;
                    let ta = self.coerce(ta, tb.sort(), a.pos).map_err(|_| err)?;
                    Ok((ta, tb))
                }
            }
        }
    }

    pub fn formula(&mut self, e: &Expr) -> Result<Formula, FormulaError> {
        let pos = e.pos;
        match &e.kind {
            ExprKind::Bool(true) => Ok(Formula::True),
            ExprKind::Bool(false) => Ok(Formula::False),
            ExprKind::Not(inner) => Ok(Formula::Not(Box::new(self.formula(inner)?))),
            ExprKind::Bool2(op, a, b) => {
                let (a, b) = (self.formula(a)?, self.formula(b)?);
                Ok(match op {
                    BoolOp::And => Formula::and(a, b),
                    BoolOp::Or => Formula::or(a, b),
                    BoolOp::Implies => Formula::implies(a, b),
                    BoolOp::Iff => Formula::iff(a, b),
                })
            }
            ExprKind::Quant { forall, vars, body } => {
                let vs = vars
                    .iter()
                    .map(|(n, ty)| Ok(Var::new(n, self.resolve_type(ty, pos)?)))
                    .collect::<Result<Vec<_>, FormulaError>>()?;
                let body = self.with_vars(&vs, |el| el.formula(body))?;
                Ok(vs.into_iter().rev().fold(body, |acc, v| {
                    if *forall {
                        Formula::forall(v, acc)
                    } else {
                        Formula::exists(v, acc)
                    }
                }))
            }
            ExprKind::Cmp(op, a, b) => match op {
                CmpOp::Eq | CmpOp::Ne => {
                    let (ta, tb) = self.pair(a, b)?;
                    if ta.sort() != tb.sort() {
                        return Err(sort_err(format!("cannot compare {} with {}", ta.sort(), tb.sort()), pos));
                    }
                    let eq = Formula::Eq(ta, tb);
                    Ok(if *op == CmpOp::Eq { eq } else { Formula::Not(Box::new(eq)) })
                }
                CmpOp::In => {
                    let l = self.list_term(b)?;
                    let elem = l.sort().list_elem().unwrap().clone();
                    let x = self.term(a, Some(&elem))?;
                    Ok(Formula::Pred(Pred::Mem, vec![x, l]))
                }
                _ => {
                    let ta = self.term(a, Some(&Sort::Int))?;
                    let tb = self.term(b, Some(&Sort::Int))?;
                    let p = match op {
                        CmpOp::Lt => Pred::Lt,
                        CmpOp::Le => Pred::Le,
                        CmpOp::Gt => Pred::Gt,
                        _ => Pred::Ge,
                    };
                    Ok(Formula::Pred(p, vec![ta, tb]))
                }
            },
            ExprKind::Call(name, args) if name == "isEmpty" => {
                let [l] = args.as_slice() else {
                    return Err(sort_err("isEmpty takes one argument", pos));
                };
                Ok(Formula::Pred(Pred::IsEmpty, vec![self.list_term(l)?]))
            }
            ExprKind::Call(name, args) if name == "isNull" => {
                let [o] = args.as_slice() else {
                    return Err(sort_err("isNull takes one argument", pos));
                };
                let t = self.term(o, None)?;
                if t.sort().opt_inner().is_none() {
                    return Err(sort_err(format!("`{t}` is not an option"), pos));
                }
                Ok(Formula::Pred(Pred::IsNull, vec![t]))
            }
            ExprKind::Call(name, args) if self.sig.pred(name).is_some() => {
                let sorts = self.sig.pred(name).unwrap().to_vec();
                if sorts.len() != args.len() {
                    return Err(sort_err(
                        format!("{name} expects {} arguments, got {}", sorts.len(), args.len()),
                        pos,
                    ));
                }
                let ts = args
                    .iter()
                    .zip(&sorts)
                    .map(|(a, s)| self.term(a, Some(s)))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Formula::Pred(Pred::User(Arc::from(name.as_str())), ts))
            }
            ExprKind::Temporal(..) | ExprKind::Temporal2(..) => {
                Err(sort_err("temporal operator inside a classical formula", pos))
            }
            _ => {
                let t = self.term(e, None)?;
                if *t.sort() == Sort::Bool {
                    Ok(Formula::Eq(t, Term::bool(true)))
                } else {
                    Err(sort_err(format!("`{t}` of sort {} is not a formula", t.sort()), pos))
                }
            }
        }
    }
}

/// Whether a ground value inhabits a sort.
pub fn value_has_sort(v: &Value, s: &Sort) -> bool {
    match (v, s) {
        (Value::Int(_), Sort::Int) | (Value::Bool(_), Sort::Bool) | (Value::Str(_), Sort::Str) => true,
        (Value::Str(x), Sort::Enum(e)) => e.members.iter().any(|m| m == x),
        (Value::Null, Sort::Opt(_)) => true,
        (_, Sort::Opt(inner)) => value_has_sort(v, inner),
        (Value::Array(items), Sort::List(e)) => items.iter().all(|i| value_has_sort(i, e)),
        _ => false,
    }
}

/// Parses and elaborates a classical formula with `db` free.
pub fn parse_formula(text: &str, sig: &Signature) -> Result<Formula, FormulaError> {
    let e = parse_expr(text, false)?;
    Elaborator::new(sig).formula(&e)
}

/// Parses and elaborates a term with `db` free.
pub fn parse_term(text: &str, sig: &Signature) -> Result<Term, FormulaError> {
    let e = parse_expr(text, false)?;
    Elaborator::new(sig).term(&e, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::json::parse_type_defs;
    use crate::logic::signature::derive_signature;

    const TYPES: &str = r#"
        DB = { order: List[Integer], stock: List[Stock], status: Status, gold: Bool,
               color: EnumTy["red", "green"], note: Option[Integer] }
        Stock = { item: Integer, available: Integer, price: Integer }
        Status = { open: List[Integer], value: Integer, paid: Bool,
                   shipped: Bool, final: Bool, completed: Bool }
    "#;

    fn sig() -> Signature {
        let mut sig = derive_signature(&parse_type_defs(TYPES).unwrap());
        sig.declare_pred("completed", vec![Sort::obj("Status")]).unwrap();
        sig
    }

    #[test]
    fn paid_not_true() {
        let f = parse_formula("db.status.paid <> true", &sig()).unwrap();
        assert_eq!(f.to_string(), "paid(status(db)) <> true");
        assert!(f.well_sorted());
    }

    #[test]
    fn definition_shape() {
        let f = parse_formula("forall s:Status . completed(s) <=> (s.paid = true && s.shipped = true)", &sig()).unwrap();
        let Formula::Forall(v, body) = &f else { panic!("{f}") };
        assert_eq!(v.sort, Sort::obj("Status"));
        assert!(matches!(**body, Formula::Iff(..)));
        assert!(f.free_vars().is_empty());
    }

    #[test]
    fn arithmetic_equation() {
        let f = parse_formula("1 + 1 = 2", &sig()).unwrap();
        assert_eq!(f.to_string(), "(1 + 1) = 2");
    }

    #[test]
    fn sort_errors() {
        assert!(matches!(parse_formula("db.gold = 1", &sig()), Err(FormulaError::Sort { .. })));
        assert!(matches!(parse_formula("db.nope = 1", &sig()), Err(FormulaError::Sort { .. })));
        assert!(matches!(parse_formula("foo(db)", &sig()), Err(FormulaError::Unknown { .. })));
        assert!(matches!(parse_formula("db.color = \"blue\"", &sig()), Err(FormulaError::Sort { .. })));
        assert!(matches!(parse_formula("x > 0", &sig()), Err(FormulaError::Unknown { .. })));
    }

    #[test]
    fn literals_take_expected_sorts() {
        let f = parse_formula("\"green\" = db.color && db.note = null && db.status.open = []", &sig()).unwrap();
        assert!(f.well_sorted(), "{f}");
        let g = parse_formula("db.note > 2", &sig()).unwrap();
        assert_eq!(g.to_string(), "get(note(db)) > 2");
        let h = parse_formula("db.note = 2", &sig()).unwrap();
        assert!(h.well_sorted());
    }

    #[test]
    fn membership_and_bool_terms() {
        let f = parse_formula("forall s:Stock . (s in db.stock => s.available >= 0)", &sig()).unwrap();
        assert!(f.well_sorted());
        let g = parse_formula("db.gold", &sig()).unwrap();
        assert_eq!(g.to_string(), "gold(db) = true");
    }

    #[test]
    fn index_term() {
        let t = parse_term("db.stock[db.order[0]].available", &sig()).unwrap();
        assert_eq!(t.to_string(), "available(index(stock(db), index(order(db), 0)))");
        assert!(t.well_sorted());
    }
}
