use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use super::sort::Sort;
use crate::json::Value;

/// A sorted variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var {
    pub name: Arc<str>,
    pub sort: Sort,
}

impl Var {
    pub fn new(name: &str, sort: Sort) -> Var {
        Var {
            name: Arc::from(name),
            sort,
        }
    }
}

/// What a function symbol means; the ground evaluator and the TPTP
/// emitter dispatch on this.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FuncKind {
    Accessor { ty: Arc<str>, field: Arc<str> },
    Updator { ty: Arc<str>, field: Arc<str> },
    Index,
    Update,
    Append,
    Length,
    Some,
    Get,
    Add,
    Sub,
    Mul,
    Neg,
    /// An uninterpreted constant, e.g. the unknown initial database.
    Constant,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FuncDecl {
    /// Unique symbol key within a signature.
    pub name: String,
    /// Name used when printing terms.
    pub display: String,
    pub args: Vec<Sort>,
    pub result: Sort,
    pub kind: FuncKind,
}

/// A shared handle to a function declaration; compared by symbol key.
#[derive(Clone, Debug)]
pub struct Func(pub Arc<FuncDecl>);

impl Func {
    pub fn new(decl: FuncDecl) -> Func {
        Func(Arc::new(decl))
    }

    pub fn name(&self) -> &str {
        &self.0.name
    }

    pub fn kind(&self) -> &FuncKind {
        &self.0.kind
    }

    pub fn result(&self) -> &Sort {
        &self.0.result
    }

    pub fn args(&self) -> &[Sort] {
        &self.0.args
    }
}

impl PartialEq for Func {
    fn eq(&self, other: &Func) -> bool {
        self.0.name == other.0.name
    }
}

impl Eq for Func {}

impl Hash for Func {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.name.hash(state)
    }
}

impl PartialOrd for Func {
    fn partial_cmp(&self, other: &Func) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Func {
    fn cmp(&self, other: &Func) -> Ordering {
        self.0.name.cmp(&other.0.name)
    }
}

/// Well-sorted first-order terms.
///
/// Literals carry an arbitrary ground JSON value together with its sort, so
/// a concrete database is itself a term.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(Var),
    Lit(Arc<Value>, Sort),
    App(Func, Vec<Term>),
}

impl Term {
    pub fn var(v: &Var) -> Term {
        Term::Var(v.clone())
    }

    pub fn int(i: i64) -> Term {
        Term::Lit(Arc::new(Value::Int(i)), Sort::Int)
    }

    pub fn bool(b: bool) -> Term {
        Term::Lit(Arc::new(Value::Bool(b)), Sort::Bool)
    }

    pub fn lit(v: Value, sort: Sort) -> Term {
        Term::Lit(Arc::new(v), sort)
    }

    pub fn app(f: &Func, args: Vec<Term>) -> Term {
        debug_assert_eq!(f.args().len(), args.len(), "arity of {}", f.name());
        Term::App(f.clone(), args)
    }

    pub fn sort(&self) -> &Sort {
        match self {
            Term::Var(v) => &v.sort,
            Term::Lit(_, s) => s,
            Term::App(f, _) => f.result(),
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Lit(..) => true,
            Term::App(_, args) => args.iter().all(Term::is_ground),
        }
    }

    pub fn free_vars_into(&self, out: &mut BTreeSet<Var>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Lit(..) => {}
            Term::App(_, args) => args.iter().for_each(|a| a.free_vars_into(out)),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.free_vars_into(&mut out);
        out
    }

    pub fn contains_var(&self, v: &Var) -> bool {
        match self {
            Term::Var(w) => w == v,
            Term::Lit(..) => false,
            Term::App(_, args) => args.iter().any(|a| a.contains_var(v)),
        }
    }

    pub fn subst(&self, map: &BTreeMap<Var, Term>) -> Term {
        match self {
            Term::Var(v) => map.get(v).cloned().unwrap_or_else(|| self.clone()),
            Term::Lit(..) => self.clone(),
            Term::App(f, args) => Term::App(f.clone(), args.iter().map(|a| a.subst(map)).collect()),
        }
    }

    /// Checks argument sorts of every application.
    pub fn well_sorted(&self) -> bool {
        match self {
            Term::Var(_) | Term::Lit(..) => true,
            Term::App(f, args) => {
                f.args().len() == args.len()
                    && f.args().iter().zip(args).all(|(s, a)| s == a.sort())
                    && args.iter().all(Term::well_sorted)
            }
        }
    }

    /// Collects every uninterpreted constant occurring in the term.
    pub fn constants_into(&self, out: &mut BTreeSet<Func>) {
        if let Term::App(f, args) = self {
            if *f.kind() == FuncKind::Constant {
                out.insert(f.clone());
            }
            args.iter().for_each(|a| a.constants_into(out));
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Term::App(_, args) => 1 + args.iter().map(Term::size).sum::<usize>(),
            _ => 1,
        }
    }
}

/// Built-in and user-defined predicate symbols.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pred {
    Gt,
    Ge,
    Lt,
    Le,
    IsEmpty,
    Mem,
    IsNull,
    User(Arc<str>),
}

impl Pred {
    pub fn name(&self) -> &str {
        match self {
            Pred::Gt => ">",
            Pred::Ge => ">=",
            Pred::Lt => "<",
            Pred::Le => "<=",
            Pred::IsEmpty => "isEmpty",
            Pred::Mem => "in",
            Pred::IsNull => "isNull",
            Pred::User(n) => n,
        }
    }

    fn is_infix(&self) -> bool {
        matches!(self, Pred::Gt | Pred::Ge | Pred::Lt | Pred::Le | Pred::Mem)
    }
}

/// Sorted first-order formulas.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Eq(Term, Term),
    Pred(Pred, Vec<Term>),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Iff(Box<Formula>, Box<Formula>),
    Forall(Var, Box<Formula>),
    Exists(Var, Box<Formula>),
}

impl Formula {
    pub fn eq(a: Term, b: Term) -> Formula {
        Formula::Eq(a, b)
    }

    pub fn pred(p: Pred, args: Vec<Term>) -> Formula {
        Formula::Pred(p, args)
    }

    /// Negation that removes a double negation, flips constants and flips
    /// integer comparisons.
    pub fn negate(self) -> Formula {
        match self {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Not(f) => *f,
            Formula::Pred(Pred::Gt, args) => Formula::Pred(Pred::Le, args),
            Formula::Pred(Pred::Ge, args) => Formula::Pred(Pred::Lt, args),
            Formula::Pred(Pred::Lt, args) => Formula::Pred(Pred::Ge, args),
            Formula::Pred(Pred::Le, args) => Formula::Pred(Pred::Gt, args),
            f => Formula::Not(Box::new(f)),
        }
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Formula {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    pub fn forall(v: Var, body: Formula) -> Formula {
        Formula::Forall(v, Box::new(body))
    }

    pub fn exists(v: Var, body: Formula) -> Formula {
        Formula::Exists(v, Box::new(body))
    }

    /// Left-nested conjunction; the empty conjunction is `True`.
    pub fn and_all<I: IntoIterator<Item = Formula>>(items: I) -> Formula {
        let mut it = items.into_iter();
        match it.next() {
            None => Formula::True,
            Some(first) => it.fold(first, Formula::and),
        }
    }

    /// Left-nested disjunction; the empty disjunction is `False`.
    pub fn or_all<I: IntoIterator<Item = Formula>>(items: I) -> Formula {
        let mut it = items.into_iter();
        match it.next() {
            None => Formula::False,
            Some(first) => it.fold(first, Formula::or),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.free_vars_into(&mut BTreeSet::new(), &mut out);
        out
    }

    fn free_vars_into(&self, bound: &mut BTreeSet<Var>, out: &mut BTreeSet<Var>) {
        let mut term = |t: &Term| {
            for v in t.free_vars() {
                if !bound.contains(&v) {
                    out.insert(v);
                }
            }
        };
        match self {
            Formula::True | Formula::False => {}
            Formula::Eq(a, b) => {
                term(a);
                term(b);
            }
            Formula::Pred(_, args) => args.iter().for_each(term),
            Formula::Not(f) => f.free_vars_into(bound, out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.free_vars_into(bound, out);
                b.free_vars_into(bound, out);
            }
            Formula::Forall(v, f) | Formula::Exists(v, f) => {
                let fresh = bound.insert(v.clone());
                f.free_vars_into(bound, out);
                if fresh {
                    bound.remove(v);
                }
            }
        }
    }

    pub fn has_free_var(&self, v: &Var) -> bool {
        self.free_vars().contains(v)
    }

    /// Capture-avoiding simultaneous substitution of free variables.
    pub fn subst(&self, map: &BTreeMap<Var, Term>) -> Formula {
        if map.is_empty() {
            return self.clone();
        }
        match self {
            Formula::True | Formula::False => self.clone(),
            Formula::Eq(a, b) => Formula::Eq(a.subst(map), b.subst(map)),
            Formula::Pred(p, args) => {
                Formula::Pred(p.clone(), args.iter().map(|a| a.subst(map)).collect())
            }
            Formula::Not(f) => Formula::Not(Box::new(f.subst(map))),
            Formula::And(a, b) => Formula::and(a.subst(map), b.subst(map)),
            Formula::Or(a, b) => Formula::or(a.subst(map), b.subst(map)),
            Formula::Implies(a, b) => Formula::implies(a.subst(map), b.subst(map)),
            Formula::Iff(a, b) => Formula::iff(a.subst(map), b.subst(map)),
            Formula::Forall(v, f) | Formula::Exists(v, f) => {
                let mut inner = map.clone();
                inner.remove(v);
                let body_free = f.free_vars();
                inner.retain(|k, _| body_free.contains(k));
                let captured = inner.values().any(|t| t.contains_var(v));
                let (v2, body) = if captured {
                    let mut avoid: BTreeSet<Arc<str>> =
                        body_free.iter().map(|w| w.name.clone()).collect();
                    for t in inner.values() {
                        avoid.extend(t.free_vars().into_iter().map(|w| w.name));
                    }
                    let fresh = fresh_var(v, &avoid);
                    inner.insert(v.clone(), Term::Var(fresh.clone()));
                    (fresh, f.subst(&inner))
                } else {
                    (v.clone(), f.subst(&inner))
                };
                if matches!(self, Formula::Forall(..)) {
                    Formula::forall(v2, body)
                } else {
                    Formula::exists(v2, body)
                }
            }
        }
    }

    /// Replaces free occurrences of `v` by `t`.
    pub fn subst1(&self, v: &Var, t: &Term) -> Formula {
        let mut map = BTreeMap::new();
        map.insert(v.clone(), t.clone());
        self.subst(&map)
    }

    pub fn well_sorted(&self) -> bool {
        match self {
            Formula::True | Formula::False => true,
            Formula::Eq(a, b) => a.sort() == b.sort() && a.well_sorted() && b.well_sorted(),
            Formula::Pred(p, args) => {
                args.iter().all(Term::well_sorted)
                    && match p {
                        Pred::Gt | Pred::Ge | Pred::Lt | Pred::Le => {
                            args.len() == 2 && args.iter().all(|a| *a.sort() == Sort::Int)
                        }
                        Pred::IsEmpty => args.len() == 1 && args[0].sort().list_elem().is_some(),
                        Pred::IsNull => args.len() == 1 && args[0].sort().opt_inner().is_some(),
                        Pred::Mem => {
                            args.len() == 2 && args[1].sort().list_elem() == Some(args[0].sort())
                        }
                        Pred::User(_) => true,
                    }
            }
            Formula::Not(f) | Formula::Forall(_, f) | Formula::Exists(_, f) => f.well_sorted(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.well_sorted() && b.well_sorted()
            }
        }
    }

    /// Visits every term occurring at the top of an atom.
    pub fn for_each_atom_term(&self, f: &mut dyn FnMut(&Term)) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Eq(a, b) => {
                f(a);
                f(b);
            }
            Formula::Pred(_, args) => args.iter().for_each(&mut *f),
            Formula::Not(g) | Formula::Forall(_, g) | Formula::Exists(_, g) => g.for_each_atom_term(f),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.for_each_atom_term(f);
                b.for_each_atom_term(f);
            }
        }
    }

    pub fn user_preds_into(&self, out: &mut BTreeSet<Arc<str>>) {
        match self {
            Formula::Pred(Pred::User(n), _) => {
                out.insert(n.clone());
            }
            Formula::True | Formula::False | Formula::Eq(..) | Formula::Pred(..) => {}
            Formula::Not(g) | Formula::Forall(_, g) | Formula::Exists(_, g) => g.user_preds_into(out),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.user_preds_into(out);
                b.user_preds_into(out);
            }
        }
    }
}

fn fresh_var(v: &Var, avoid: &BTreeSet<Arc<str>>) -> Var {
    (1..)
        .map(|i| format!("{}_{i}", v.name))
        .find(|n| !avoid.contains(n.as_str()))
        .map(|n| Var::new(&n, v.sort.clone()))
        .expect("unbounded supply of names")
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Lit(v, _) => write!(f, "{v}"),
            Term::App(func, args) => match (func.kind(), args.as_slice()) {
                (FuncKind::Add, [a, b]) => write!(f, "({a} + {b})"),
                (FuncKind::Sub, [a, b]) => write!(f, "({a} - {b})"),
                (FuncKind::Mul, [a, b]) => write!(f, "({a} * {b})"),
                (FuncKind::Neg, [a]) => write!(f, "-{a}"),
                (_, []) => f.write_str(&func.0.display),
                (_, args) => {
                    write!(f, "{}(", func.0.display)?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            f.write_str(", ")?;
                        }
                        write!(f, "{a}")?;
                    }
                    f.write_str(")")
                }
            },
        }
    }
}

impl Formula {
    fn prec(&self) -> u8 {
        match self {
            Formula::Iff(..) => 1,
            Formula::Implies(..) => 2,
            Formula::Or(..) => 3,
            Formula::And(..) => 4,
            Formula::Forall(..) | Formula::Exists(..) => 0,
            Formula::Not(_) => 5,
            _ => 6,
        }
    }

    fn fmt_child(&self, child: &Formula, strict: bool, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let need = child.prec() < self.prec() || (strict && child.prec() == self.prec());
        if need {
            write!(f, "({child})")
        } else {
            write!(f, "{child}")
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("true"),
            Formula::False => f.write_str("false"),
            Formula::Eq(a, b) => write!(f, "{a} = {b}"),
            Formula::Not(inner) => match inner.as_ref() {
                Formula::Eq(a, b) => write!(f, "{a} <> {b}"),
                g => {
                    f.write_str("~")?;
                    self.fmt_child(g, false, f)
                }
            },
            Formula::Pred(p, args) if p.is_infix() && args.len() == 2 => {
                write!(f, "{} {} {}", args[0], p.name(), args[1])
            }
            Formula::Pred(p, args) => {
                write!(f, "{}(", p.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Iff(a, b) => {
                let op = match self {
                    Formula::And(..) => "&&",
                    Formula::Or(..) => "||",
                    _ => "<=>",
                };
                self.fmt_child(a, false, f)?;
                write!(f, " {op} ")?;
                self.fmt_child(b, true, f)
            }
            Formula::Implies(a, b) => {
                self.fmt_child(a, true, f)?;
                f.write_str(" => ")?;
                self.fmt_child(b, false, f)
            }
            Formula::Forall(v, body) | Formula::Exists(v, body) => {
                let q = if matches!(self, Formula::Forall(..)) { "forall" } else { "exists" };
                write!(f, "{q} {}:{} . {body}", v.name, v.sort)
            }
        }
    }
}
