//! CTL* formulas over classical first-order atoms.
//!
//! State and path formulas share one type; path quantifiers `A`/`E` turn a
//! path formula into a state formula. Sugar (`G`, `F`, `W`, `=>`) is removed
//! by [`nnf`].

use std::fmt;

use crate::logic::syntax::{parse_expr, BoolOp, Expr, ExprKind, FormulaError, TempOp, Unary};
use crate::logic::{Elaborator, Formula, Signature};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Ctl {
    /// A classical formula with free variables at most `db`.
    Atom(Formula),
    Not(Box<Ctl>),
    And(Box<Ctl>, Box<Ctl>),
    Or(Box<Ctl>, Box<Ctl>),
    Implies(Box<Ctl>, Box<Ctl>),
    A(Box<Ctl>),
    E(Box<Ctl>),
    /// Strong next: a successor exists and satisfies the operand.
    X(Box<Ctl>),
    /// Weak next: true at the end of a run.
    WX(Box<Ctl>),
    U(Box<Ctl>, Box<Ctl>),
    R(Box<Ctl>, Box<Ctl>),
    W(Box<Ctl>, Box<Ctl>),
    G(Box<Ctl>),
    F(Box<Ctl>),
}

use Ctl::*;

fn b(c: Ctl) -> Box<Ctl> {
    Box::new(c)
}

impl Ctl {
    pub fn atom(f: Formula) -> Ctl {
        Atom(f)
    }

    pub fn tt() -> Ctl {
        Atom(Formula::True)
    }

    pub fn ff() -> Ctl {
        Atom(Formula::False)
    }

    pub fn not(c: Ctl) -> Ctl {
        Not(b(c))
    }

    pub fn and(l: Ctl, r: Ctl) -> Ctl {
        And(b(l), b(r))
    }

    pub fn or(l: Ctl, r: Ctl) -> Ctl {
        Or(b(l), b(r))
    }

    pub fn all(c: Ctl) -> Ctl {
        A(b(c))
    }

    pub fn some(c: Ctl) -> Ctl {
        E(b(c))
    }

    pub fn next(c: Ctl) -> Ctl {
        X(b(c))
    }

    pub fn weak_next(c: Ctl) -> Ctl {
        WX(b(c))
    }

    pub fn until(l: Ctl, r: Ctl) -> Ctl {
        U(b(l), b(r))
    }

    pub fn release(l: Ctl, r: Ctl) -> Ctl {
        R(b(l), b(r))
    }

    pub fn globally(c: Ctl) -> Ctl {
        G(b(c))
    }

    pub fn finally(c: Ctl) -> Ctl {
        F(b(c))
    }

    pub fn is_classical(&self) -> bool {
        matches!(self, Atom(_))
    }

    /// State formulas: classical atoms and path-quantified formulas, closed
    /// under Boolean connectives.
    pub fn is_state(&self) -> bool {
        match self {
            Atom(_) | A(_) | E(_) => true,
            Not(c) => c.is_state(),
            And(l, r) | Or(l, r) | Implies(l, r) => l.is_state() && r.is_state(),
            _ => false,
        }
    }

    pub fn is_nnf(&self) -> bool {
        match self {
            Atom(_) => true,
            Not(_) | Implies(..) | W(..) | G(_) | F(_) => false,
            A(c) | E(c) | X(c) | WX(c) => c.is_nnf(),
            And(l, r) | Or(l, r) | U(l, r) | R(l, r) => l.is_nnf() && r.is_nnf(),
        }
    }

    /// Number of operators and atoms.
    pub fn size(&self) -> usize {
        match self {
            Atom(_) => 1,
            Not(c) | A(c) | E(c) | X(c) | WX(c) | G(c) | F(c) => 1 + c.size(),
            And(l, r) | Or(l, r) | Implies(l, r) | U(l, r) | R(l, r) | W(l, r) => 1 + l.size() + r.size(),
        }
    }
}

fn and_nnf(l: Ctl, r: Ctl) -> Ctl {
    match (l, r) {
        (Atom(x), Atom(y)) => Atom(Formula::and(x, y)),
        (l, r) => Ctl::and(l, r),
    }
}

fn or_nnf(l: Ctl, r: Ctl) -> Ctl {
    match (l, r) {
        (Atom(x), Atom(y)) => Atom(Formula::or(x, y)),
        (l, r) => Ctl::or(l, r),
    }
}

/// Negation normal form.
///
/// Sugar is removed first (`F φ = ⊤ U φ`, `G φ = ⊥ R φ`,
/// `φ W ψ = ψ R (φ ∨ ψ)`, `φ ⇒ ψ = ¬φ ∨ ψ`), then negation is pushed to the
/// classical atoms using the dualities of `A`/`E`, `X`/`WX` and `U`/`R`.
/// Conjunctions and disjunctions of atoms are merged into one atom.
pub fn nnf(c: &Ctl) -> Ctl {
    pos(c)
}

fn pos(c: &Ctl) -> Ctl {
    match c {
        Atom(f) => Atom(f.clone()),
        Not(inner) => neg(inner),
        And(l, r) => and_nnf(pos(l), pos(r)),
        Or(l, r) => or_nnf(pos(l), pos(r)),
        Implies(l, r) => or_nnf(neg(l), pos(r)),
        A(x) => Ctl::all(pos(x)),
        E(x) => Ctl::some(pos(x)),
        X(x) => Ctl::next(pos(x)),
        WX(x) => Ctl::weak_next(pos(x)),
        U(l, r) => Ctl::until(pos(l), pos(r)),
        R(l, r) => Ctl::release(pos(l), pos(r)),
        W(l, r) => Ctl::release(pos(r), or_nnf(pos(l), pos(r))),
        G(x) => Ctl::release(Ctl::ff(), pos(x)),
        F(x) => Ctl::until(Ctl::tt(), pos(x)),
    }
}

fn neg(c: &Ctl) -> Ctl {
    match c {
        Atom(f) => Atom(f.clone().negate()),
        Not(inner) => pos(inner),
        And(l, r) => or_nnf(neg(l), neg(r)),
        Or(l, r) => and_nnf(neg(l), neg(r)),
        Implies(l, r) => and_nnf(pos(l), neg(r)),
        A(x) => Ctl::some(neg(x)),
        E(x) => Ctl::all(neg(x)),
        X(x) => Ctl::weak_next(neg(x)),
        WX(x) => Ctl::next(neg(x)),
        U(l, r) => Ctl::release(neg(l), neg(r)),
        R(l, r) => Ctl::until(neg(l), neg(r)),
        // ¬(ψ R (φ ∨ ψ)) = ¬ψ U (¬φ ∧ ¬ψ)
        W(l, r) => Ctl::until(neg(r), and_nnf(neg(l), neg(r))),
        G(x) => Ctl::until(Ctl::tt(), neg(x)),
        F(x) => Ctl::release(Ctl::ff(), neg(x)),
    }
}

/// Normalizes a query and makes sure it starts with a path quantifier,
/// wrapping it in `A` otherwise. Returns whether wrapping happened.
pub fn quantified_query(q: &Ctl) -> (Ctl, bool) {
    match nnf(q) {
        c @ (A(_) | E(_)) => (c, false),
        c => (Ctl::all(c), true),
    }
}

/// Folds constraints into a quantified NNF query: `A(C ⇒ ψ)` or `E(C ∧ ψ)`,
/// with `C` the conjunction of the constraints.
pub fn expand_query(q: &Ctl, constraints: &[Ctl]) -> Ctl {
    let Some(c) = constraints.iter().cloned().reduce(Ctl::and) else {
        return nnf(q);
    };
    let c = nnf(&c);
    match q {
        A(psi) => Ctl::all(or_nnf(neg(&c), nnf(psi))),
        E(psi) => Ctl::some(and_nnf(c, nnf(psi))),
        other => nnf(other),
    }
}

/// Elaborates a parsed temporal expression.
pub fn elaborate(e: &Expr, el: &mut Elaborator) -> Result<Ctl, FormulaError> {
    if !e.is_temporal() {
        return Ok(Atom(el.formula(e)?));
    }
    Ok(match &e.kind {
        ExprKind::Not(x) => Ctl::not(elaborate(x, el)?),
        ExprKind::Bool2(op, l, r) => {
            let (l, r) = (elaborate(l, el)?, elaborate(r, el)?);
            match op {
                BoolOp::And => Ctl::and(l, r),
                BoolOp::Or => Ctl::or(l, r),
                BoolOp::Implies => Implies(b(l), b(r)),
                BoolOp::Iff => Ctl::and(Implies(b(l.clone()), b(r.clone())), Implies(b(r), b(l))),
            }
        }
        ExprKind::Temporal(op, x) => {
            let x = elaborate(x, el)?;
            match op {
                Unary::All => Ctl::all(x),
                Unary::Some => Ctl::some(x),
                Unary::Next => Ctl::next(x),
                Unary::WeakNext => Ctl::weak_next(x),
                Unary::Globally => Ctl::globally(x),
                Unary::Finally => Ctl::finally(x),
            }
        }
        ExprKind::Temporal2(op, l, r) => {
            let (l, r) = (b(elaborate(l, el)?), b(elaborate(r, el)?));
            match op {
                TempOp::Until => U(l, r),
                TempOp::Release => R(l, r),
                TempOp::WeakUntil => W(l, r),
            }
        }
        _ => {
            return Err(FormulaError::Sort {
                message: "temporal operators may not occur inside quantifiers or terms".into(),
                pos: e.pos,
            })
        }
    })
}

/// Parses a CTL* formula whose atoms may mention `db`.
pub fn parse_ctl(text: &str, sig: &Signature) -> Result<Ctl, FormulaError> {
    let e = parse_expr(text, true)?;
    elaborate(&e, &mut Elaborator::new(sig))
}

impl fmt::Display for Ctl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom(Formula::True) => f.write_str("true"),
            Atom(Formula::False) => f.write_str("false"),
            Atom(x) => write!(f, "({x})"),
            Not(x) => write!(f, "~{x}"),
            And(l, r) => write!(f, "({l} && {r})"),
            Or(l, r) => write!(f, "({l} || {r})"),
            Implies(l, r) => write!(f, "({l} => {r})"),
            A(x) => write!(f, "A {x}"),
            E(x) => write!(f, "E {x}"),
            X(x) => write!(f, "X {x}"),
            WX(x) => write!(f, "WX {x}"),
            G(x) => write!(f, "G {x}"),
            F(x) => write!(f, "F {x}"),
            U(l, r) => write!(f, "({l} U {r})"),
            R(l, r) => write!(f, "({l} R {r})"),
            W(l, r) => write!(f, "({l} W {r})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::json::parse_type_defs;
    use crate::logic::derive_signature;
    use proptest::prelude::*;

    fn sig() -> Signature {
        derive_signature(&parse_type_defs("DB = { x: Integer, gold: Bool, safe: Bool }").unwrap())
    }

    fn p(text: &str) -> Ctl {
        parse_ctl(text, &sig()).unwrap()
    }

    #[test]
    fn negated_next_is_weak_next() {
        let phi = p("db.x > 0");
        let Atom(f) = &phi else { panic!() };
        assert_eq!(nnf(&p("~X db.x > 0")), Ctl::weak_next(Atom(f.clone().negate())));
        assert_eq!(nnf(&p("~WX db.x > 0")), Ctl::next(Atom(f.clone().negate())));
    }

    #[test]
    fn negated_ef_is_ag() {
        let Atom(z) = p("db.x > 0") else { panic!() };
        let expected = Ctl::all(Ctl::release(Ctl::ff(), Atom(z.negate())));
        assert_eq!(nnf(&p("~E F db.x > 0")), expected);
        assert_eq!(nnf(&p("A G db.x <= 0")), expected);
    }

    #[test]
    fn weak_until_desugars_to_release() {
        let c = nnf(&p("db.gold = false W db.safe = true"));
        let R(l, r) = &c else { panic!("{c}") };
        assert_eq!(**l, p("db.safe = true"));
        assert!(matches!(**r, Atom(Formula::Or(..))));
    }

    #[test]
    fn expansion_with_constraints() {
        let q = nnf(&p("A G db.safe"));
        let c = p("db.gold = false => (db.x = 0 W db.safe)");
        let exp = expand_query(&q, std::slice::from_ref(&c));
        let A(body) = &exp else { panic!() };
        let Or(l, r) = &**body else { panic!("{exp}") };
        assert_eq!(**l, nnf(&Ctl::not(nnf(&c))));
        assert_eq!(**r, nnf(&p("G db.safe")));
        assert_eq!(expand_query(&q, &[]), q);
        let e = expand_query(&nnf(&p("E F db.safe")), &[p("db.x = 1"), p("db.gold")]);
        let E(body) = &e else { panic!() };
        assert!(matches!(&**body, And(l, _) if l.is_classical()));
    }

    #[test]
    fn unquantified_queries_get_wrapped() {
        let (q, wrapped) = quantified_query(&p("G db.safe"));
        assert!(wrapped);
        assert!(matches!(q, A(_)));
        let (q, wrapped) = quantified_query(&p("~(E F db.safe)"));
        assert!(!wrapped);
        assert!(matches!(q, A(_)));
    }

    #[test]
    fn quantifiers_over_temporal_are_rejected() {
        assert!(parse_ctl("forall b:Bool . F b = db.gold", &sig()).is_err());
    }

    fn arb_ctl() -> impl Strategy<Value = Ctl> {
        let leaf = prop_oneof![
            Just(Ctl::tt()),
            Just(Ctl::ff()),
            (0..3i64).prop_map(|i| parse_ctl(&format!("db.x > {i}"), &sig()).unwrap()),
            Just(parse_ctl("db.gold", &sig()).unwrap()),
        ];
        leaf.prop_recursive(4, 32, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(Ctl::not),
                (inner.clone(), inner.clone()).prop_map(|(l, r)| Ctl::and(l, r)),
                (inner.clone(), inner.clone()).prop_map(|(l, r)| Ctl::or(l, r)),
                (inner.clone(), inner.clone()).prop_map(|(l, r)| Implies(b(l), b(r))),
                inner.clone().prop_map(Ctl::all),
                inner.clone().prop_map(Ctl::some),
                inner.clone().prop_map(Ctl::next),
                inner.clone().prop_map(Ctl::weak_next),
                inner.clone().prop_map(Ctl::globally),
                inner.clone().prop_map(Ctl::finally),
                (inner.clone(), inner.clone()).prop_map(|(l, r)| Ctl::until(l, r)),
                (inner.clone(), inner.clone()).prop_map(|(l, r)| Ctl::release(l, r)),
                (inner.clone(), inner).prop_map(|(l, r)| W(b(l), b(r))),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn nnf_is_idempotent(c in arb_ctl()) {
            let n = nnf(&c);
            prop_assert!(n.is_nnf());
            prop_assert_eq!(nnf(&n), n);
        }
    }
}
