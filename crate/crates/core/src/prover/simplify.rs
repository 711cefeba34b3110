//! Rewriting of symbolic databases and a refutation procedure for the
//! linear integer part of a formula set.
//!
//! Refutation works on a weakening of the input: atoms it does not
//! understand are dropped, disequalities are dropped, and the remaining
//! linear constraints are checked over the rationals by Fourier-Motzkin
//! elimination. Infeasibility of the weakening implies unsatisfiability of
//! the input; feasibility implies nothing.

use std::collections::{BTreeMap, BTreeSet};

use crate::eval::{eval_formula, eval_term, Env};
use crate::json::Value;
use crate::logic::{Definition, Formula, FuncKind, Pred, Sort, Term};

/// Rewrites with the read-over-write and option laws and folds ground
/// subterms.
pub fn simplify_term(t: &Term) -> Term {
    let Term::App(f, args) = t else { return t.clone() };
    let args: Vec<Term> = args.iter().map(simplify_term).collect();
    if let FuncKind::Accessor { ty, field } = f.kind() {
        if let Term::App(g, inner) = &args[0] {
            if let FuncKind::Updator { ty: ty2, field: field2 } = g.kind() {
                if ty == ty2 {
                    return if field == field2 {
                        inner[1].clone()
                    } else {
                        simplify_term(&Term::App(f.clone(), vec![inner[0].clone()]))
                    };
                }
            }
        }
    }
    if let FuncKind::Get = f.kind() {
        if let Term::App(g, inner) = &args[0] {
            if *g.kind() == FuncKind::Some {
                return inner[0].clone();
            }
        }
    }
    let out = Term::App(f.clone(), args);
    if out.is_ground() && *f.kind() != FuncKind::Constant && !mentions_constant(&out) {
        if let Ok(v) = eval_term(&out, &Env::new()) {
            return Term::lit(v.into_owned(), out.sort().clone());
        }
    }
    out
}

fn mentions_constant(t: &Term) -> bool {
    let mut cs = BTreeSet::new();
    t.constants_into(&mut cs);
    cs.iter().any(|f| *f.kind() == FuncKind::Constant)
}

fn closed_ground(f: &Formula) -> bool {
    if !f.free_vars().is_empty() {
        return false;
    }
    let mut any = false;
    f.for_each_atom_term(&mut |t| any |= mentions_constant(t));
    !any
}

/// Simplifies every term and folds ground atoms to constants.
pub fn simplify(f: &Formula, defs: &[Definition]) -> Formula {
    let out = match f {
        Formula::True | Formula::False => return f.clone(),
        Formula::Eq(a, b) => {
            let (a, b) = (simplify_term(a), simplify_term(b));
            if a == b {
                return Formula::True;
            }
            Formula::Eq(a, b)
        }
        Formula::Pred(p, args) => Formula::Pred(p.clone(), args.iter().map(simplify_term).collect()),
        Formula::Not(g) => match simplify(g, defs) {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            g => g.negate(),
        },
        Formula::And(a, b) => match (simplify(a, defs), simplify(b, defs)) {
            (Formula::False, _) | (_, Formula::False) => Formula::False,
            (Formula::True, x) | (x, Formula::True) => x,
            (a, b) => Formula::and(a, b),
        },
        Formula::Or(a, b) => match (simplify(a, defs), simplify(b, defs)) {
            (Formula::True, _) | (_, Formula::True) => Formula::True,
            (Formula::False, x) | (x, Formula::False) => x,
            (a, b) => Formula::or(a, b),
        },
        Formula::Implies(a, b) => simplify(&Formula::or(a.as_ref().clone().negate(), (**b).clone()), defs),
        Formula::Iff(a, b) => Formula::iff(simplify(a, defs), simplify(b, defs)),
        Formula::Forall(v, g) => Formula::forall(v.clone(), simplify(g, defs)),
        Formula::Exists(v, g) => Formula::exists(v.clone(), simplify(g, defs)),
    };
    if matches!(out, Formula::Eq(..) | Formula::Pred(..)) && closed_ground(&out) {
        if let Ok(b) = eval_formula(&out, &mut Env::new(), defs) {
            return if b { Formula::True } else { Formula::False };
        }
    }
    out
}

/// A literal of the disjunctive normal form.
type Lit = (Formula, bool);

const MAX_DISJUNCTS: usize = 512;

/// Disjunctive normal form of a quantifier-free skeleton; quantified
/// subformulas and `<=>` are kept as opaque atoms. `None` if too large.
fn dnf(f: &Formula, pos: bool) -> Option<Vec<Vec<Lit>>> {
    Some(match (f, pos) {
        (Formula::True, true) | (Formula::False, false) => vec![vec![]],
        (Formula::True, false) | (Formula::False, true) => vec![],
        (Formula::Not(g), p) => return dnf(g, !p),
        (Formula::And(a, b), true) | (Formula::Or(a, b), false) => {
            let (l, r) = (dnf(a, pos)?, dnf(b, pos)?);
            if l.len() * r.len() > MAX_DISJUNCTS {
                return None;
            }
            let mut out = Vec::new();
            for x in &l {
                for y in &r {
                    out.push(x.iter().chain(y).cloned().collect());
                }
            }
            out
        }
        (Formula::Or(a, b), true) | (Formula::And(a, b), false) => {
            let mut out = dnf(a, pos)?;
            out.extend(dnf(b, pos)?);
            if out.len() > MAX_DISJUNCTS {
                return None;
            }
            out
        }
        (Formula::Implies(a, b), p) => return dnf(&Formula::or(a.as_ref().clone().negate(), (**b).clone()), p),
        (atom, p) => vec![vec![(atom.clone(), p)]],
    })
}

/// `Σ coeff·leaf + constant`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct Linear {
    coeffs: BTreeMap<Term, i128>,
    constant: i128,
}

impl Linear {
    fn scale(mut self, k: i128) -> Linear {
        for c in self.coeffs.values_mut() {
            *c *= k;
        }
        self.constant *= k;
        self
    }

    fn add(mut self, other: Linear) -> Linear {
        for (t, c) in other.coeffs {
            *self.coeffs.entry(t).or_default() += c;
        }
        self.coeffs.retain(|_, c| *c != 0);
        self.constant += other.constant;
        self
    }
}

fn linear(t: &Term) -> Linear {
    let leaf = |t: &Term| Linear { coeffs: [(t.clone(), 1)].into_iter().collect(), constant: 0 };
    match t {
        Term::Lit(v, Sort::Int) => Linear { coeffs: BTreeMap::new(), constant: v.as_int().unwrap_or(0) as i128 },
        Term::App(f, args) => match f.kind() {
            FuncKind::Add => linear(&args[0]).add(linear(&args[1])),
            FuncKind::Sub => linear(&args[0]).add(linear(&args[1]).scale(-1)),
            FuncKind::Neg => linear(&args[0]).scale(-1),
            FuncKind::Mul => {
                let (l, r) = (linear(&args[0]), linear(&args[1]));
                if l.coeffs.is_empty() {
                    r.scale(l.constant)
                } else if r.coeffs.is_empty() {
                    l.scale(r.constant)
                } else {
                    leaf(t)
                }
            }
            _ => leaf(t),
        },
        _ => leaf(t),
    }
}

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

/// Constraint `e ≥ 0` over the integers, tightened by the coefficient gcd.
fn normalize(mut e: Linear) -> Linear {
    let g = e.coeffs.values().fold(0, |g, c| gcd(g, *c));
    if g > 1 {
        for c in e.coeffs.values_mut() {
            *c /= g;
        }
        e.constant = e.constant.div_euclid(g);
    }
    e
}

const MAX_CONSTRAINTS: usize = 2000;

/// Whether `Σ ≥ 0` constraints are infeasible over the rationals.
fn infeasible(mut rows: Vec<Linear>) -> bool {
    loop {
        rows = rows.into_iter().map(normalize).collect();
        rows.sort_by(|a, b| (&a.coeffs, a.constant).cmp(&(&b.coeffs, b.constant)));
        rows.dedup();
        if rows.iter().any(|r| r.coeffs.is_empty() && r.constant < 0) {
            return true;
        }
        rows.retain(|r| !r.coeffs.is_empty());
        let Some(x) = rows.iter().flat_map(|r| r.coeffs.keys()).min_by_key(|x| {
            let pos = rows.iter().filter(|r| r.coeffs.get(*x).is_some_and(|c| *c > 0)).count();
            let neg = rows.iter().filter(|r| r.coeffs.get(*x).is_some_and(|c| *c < 0)).count();
            pos * neg
        }) else {
            return false;
        };
        let x = x.clone();
        let (mut pos, mut neg, mut rest) = (Vec::new(), Vec::new(), Vec::new());
        for r in rows {
            match r.coeffs.get(&x).copied() {
                Some(c) if c > 0 => pos.push((c, r)),
                Some(c) if c < 0 => neg.push((-c, r)),
                _ => rest.push(r),
            }
        }
        for (cp, p) in &pos {
            for (cn, n) in &neg {
                rest.push(p.clone().scale(*cn).add(n.clone().scale(*cp)));
            }
        }
        if rest.len() > MAX_CONSTRAINTS {
            return false;
        }
        rows = rest;
    }
}

/// Linear constraints (`≥ 0`) expressing a literal, if it is one.
fn constraints(lit: &Lit) -> Option<Vec<Linear>> {
    let (f, pos) = lit;
    let diff = |a: &Term, b: &Term| linear(a).add(linear(b).scale(-1));
    let one = Linear { coeffs: BTreeMap::new(), constant: -1 };
    match f {
        Formula::Pred(p, args) if args.len() == 2 && matches!(p, Pred::Gt | Pred::Ge | Pred::Lt | Pred::Le) => {
            let (a, b) = (&args[0], &args[1]);
            // Normalize to a strict or non-strict `l ≥ r` form.
            let (l, r, strict) = match (p, pos) {
                (Pred::Ge, true) | (Pred::Lt, false) => (a, b, false),
                (Pred::Gt, true) | (Pred::Le, false) => (a, b, true),
                (Pred::Le, true) | (Pred::Gt, false) => (b, a, false),
                (Pred::Lt, true) | (Pred::Ge, false) => (b, a, true),
                _ => unreachable!(),
            };
            let e = diff(l, r);
            Some(vec![if strict { e.add(one) } else { e }])
        }
        Formula::Eq(a, b) if *pos && *a.sort() == Sort::Int => Some(vec![diff(a, b), diff(b, a)]),
        _ => None,
    }
}

/// Leaves that denote list lengths are non-negative.
fn length_facts(rows: &[Linear]) -> Vec<Linear> {
    let mut leaves = BTreeSet::new();
    for r in rows {
        for t in r.coeffs.keys() {
            if let Term::App(f, _) = t {
                if *f.kind() == FuncKind::Length {
                    leaves.insert(t.clone());
                }
            }
        }
    }
    leaves
        .into_iter()
        .map(|t| Linear { coeffs: [(t, 1)].into_iter().collect(), constant: 0 })
        .collect()
}

fn literal_value(t: &Term) -> Option<&Value> {
    match t {
        Term::Lit(v, _) => Some(v),
        _ => None,
    }
}

/// Whether one conjunction of literals is contradictory.
fn refute_conjunction(lits: &[Lit]) -> bool {
    let mut seen: BTreeMap<&Formula, bool> = BTreeMap::new();
    let mut bound: BTreeMap<&Term, &Value> = BTreeMap::new();
    let mut rows = Vec::new();
    for lit in lits {
        if let Some(&p) = seen.get(&lit.0) {
            if p != lit.1 {
                return true;
            }
        }
        seen.insert(&lit.0, lit.1);
        if let (Formula::Eq(a, b), true) = (&lit.0, lit.1) {
            for (t, v) in [(a, literal_value(b)), (b, literal_value(a))] {
                let Some(v) = v else { continue };
                if let Some(old) = bound.insert(t, v) {
                    if old != v {
                        return true;
                    }
                }
            }
        }
        if let Some(cs) = constraints(lit) {
            rows.extend(cs);
        }
    }
    if rows.is_empty() {
        return false;
    }
    rows.extend(length_facts(&rows));
    infeasible(rows)
}

/// Tries to prove the conjunction of `formulas` unsatisfiable. The
/// formulas must already be simplified and free of defined predicates.
pub fn refute(formulas: &[Formula]) -> bool {
    let Some(cases) = dnf(&Formula::and_all(formulas.iter().cloned()), true) else { return false };
    cases.iter().all(|c| refute_conjunction(c))
}
