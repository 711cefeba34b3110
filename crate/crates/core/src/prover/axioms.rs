//! Axioms of the data types: objects with accessors and updators, lists,
//! options, booleans and enumerations.

use crate::json::Value;
use crate::logic::{Formula, Pred, Signature, Sort, Term, Var};

/// A named axiom.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Axiom {
    pub name: String,
    pub formula: Formula,
}

fn ax(name: String, formula: Formula) -> Axiom {
    Axiom { name, formula }
}

fn forall(vars: &[&Var], body: Formula) -> Formula {
    vars.iter().rev().fold(body, |acc, v| Formula::forall((*v).clone(), acc))
}

fn le(a: Term, b: Term) -> Formula {
    Formula::pred(Pred::Le, vec![a, b])
}

fn lt(a: Term, b: Term) -> Formula {
    Formula::pred(Pred::Lt, vec![a, b])
}

/// `0 ≤ i < length(a)`
fn in_range(i: &Term, len: &Term) -> Formula {
    Formula::and(le(Term::int(0), i.clone()), lt(i.clone(), len.clone()))
}

/// Object axioms for every updator: read-over-write for its own field and
/// a frame axiom for every other field.
pub fn object_axioms(sig: &Signature) -> Vec<Axiom> {
    let mut out = Vec::new();
    for (ty, fields) in sig.objects() {
        let o = Var::new("O", Sort::obj(ty));
        for upd in fields {
            let v = Var::new("V", upd.sort.clone());
            let written = Term::app(&upd.updator, vec![Term::var(&o), Term::var(&v)]);
            for read in fields {
                let lhs = Term::app(&read.accessor, vec![written.clone()]);
                let (name, rhs) = if read.field == upd.field {
                    (format!("{}_{}", upd.updator.name(), read.accessor.name()), Term::var(&v))
                } else {
                    (
                        format!("{}_frame_{}", upd.updator.name(), read.accessor.name()),
                        Term::app(&read.accessor, vec![Term::var(&o)]),
                    )
                };
                out.push(ax(name, forall(&[&o, &v], Formula::eq(lhs, rhs))));
            }
        }
    }
    out
}

/// The nine list axioms for one element sort. Positions are guarded by
/// `0 ≤ i < length(a)`, as reads and writes out of range have no meaning.
pub fn list_axioms(sig: &Signature, elem: &Sort) -> Vec<Axiom> {
    let Some(ops) = sig.list_ops(elem) else { return Vec::new() };
    let ls = Sort::list(elem.clone());
    let m = ls.mangle();
    let a = Var::new("A", ls);
    let i = Var::new("I", Sort::Int);
    let j = Var::new("J", Sort::Int);
    let v = Var::new("V", elem.clone());
    let (ta, ti, tj, tv) = (Term::var(&a), Term::var(&i), Term::var(&j), Term::var(&v));
    let len = |t: Term| Term::app(&ops.length, vec![t]);
    let idx = |t: Term, k: Term| Term::app(&ops.index, vec![t, k]);
    let upd = Term::app(&ops.update, vec![ta.clone(), ti.clone(), tv.clone()]);
    let app = Term::app(&ops.append, vec![ta.clone(), tv.clone()]);
    let plus1 = Term::app(&sig.arith().add, vec![len(ta.clone()), Term::int(1)]);
    vec![
        ax(
            format!("{m}_read_write"),
            forall(&[&a, &i, &v], Formula::implies(in_range(&ti, &len(ta.clone())), Formula::eq(idx(upd.clone(), ti.clone()), tv.clone()))),
        ),
        ax(
            format!("{m}_read_other"),
            forall(
                &[&a, &i, &j, &v],
                Formula::implies(
                    Formula::and_all([
                        in_range(&ti, &len(ta.clone())),
                        in_range(&tj, &len(ta.clone())),
                        Formula::eq(ti.clone(), tj.clone()).negate(),
                    ]),
                    Formula::eq(idx(upd.clone(), tj.clone()), idx(ta.clone(), tj.clone())),
                ),
            ),
        ),
        ax(
            format!("{m}_length_update"),
            forall(&[&a, &i, &v], Formula::implies(in_range(&ti, &len(ta.clone())), Formula::eq(len(upd), len(ta.clone())))),
        ),
        ax(format!("{m}_length_append"), forall(&[&a, &v], Formula::eq(len(app.clone()), plus1))),
        ax(format!("{m}_read_appended"), forall(&[&a, &v], Formula::eq(idx(app.clone(), len(ta.clone())), tv.clone()))),
        ax(
            format!("{m}_read_before_append"),
            forall(&[&a, &i, &v], Formula::implies(in_range(&ti, &len(ta.clone())), Formula::eq(idx(app, ti.clone()), idx(ta.clone(), ti.clone())))),
        ),
        ax(format!("{m}_length_nonnegative"), forall(&[&a], le(Term::int(0), len(ta.clone())))),
        ax(
            format!("{m}_is_empty"),
            forall(&[&a], Formula::iff(Formula::pred(Pred::IsEmpty, vec![ta.clone()]), Formula::eq(len(ta.clone()), Term::int(0)))),
        ),
        ax(
            format!("{m}_membership"),
            forall(
                &[&v, &a],
                Formula::iff(
                    Formula::pred(Pred::Mem, vec![tv.clone(), ta.clone()]),
                    Formula::exists(i.clone(), Formula::and(in_range(&ti, &len(ta.clone())), Formula::eq(idx(ta, ti), tv))),
                ),
            ),
        ),
    ]
}

/// `get(some(x)) = x` and, unless the inner sort is itself optional,
/// `¬isNull(some(x))`.
pub fn option_axioms(sig: &Signature, inner: &Sort) -> Vec<Axiom> {
    let Some(ops) = sig.opt_ops(inner) else { return Vec::new() };
    let m = Sort::opt(inner.clone()).mangle();
    let x = Var::new("X", inner.clone());
    let some = Term::app(&ops.some, vec![Term::var(&x)]);
    let mut out = vec![ax(format!("{m}_get_some"), forall(&[&x], Formula::eq(Term::app(&ops.get, vec![some.clone()]), Term::var(&x))))];
    if !matches!(inner, Sort::Opt(_)) {
        out.push(ax(format!("{m}_some_not_null"), forall(&[&x], Formula::pred(Pred::IsNull, vec![some]).negate())));
    }
    out
}

/// Distinctness and exhaustiveness of the booleans and of every enumeration.
pub fn finite_sort_axioms(sig: &Signature) -> Vec<Axiom> {
    let mut out = Vec::new();
    let mut finite: Vec<(Sort, Vec<Value>)> = vec![(Sort::Bool, vec![Value::Bool(false), Value::Bool(true)])];
    for s in sig.sorts() {
        if let Sort::Enum(e) = &s {
            finite.push((s.clone(), e.members.iter().map(|m| Value::Str(m.clone())).collect()));
        }
    }
    for (s, members) in finite {
        let m = s.mangle();
        let lits: Vec<Term> = members.iter().map(|v| Term::lit(v.clone(), s.clone())).collect();
        let mut distinct = Vec::new();
        for (k, a) in lits.iter().enumerate() {
            for b in &lits[k + 1..] {
                distinct.push(Formula::eq(a.clone(), b.clone()).negate());
            }
        }
        if !distinct.is_empty() {
            out.push(ax(format!("{m}_distinct"), Formula::and_all(distinct)));
        }
        let x = Var::new("X", s.clone());
        let cases: Vec<Formula> = lits.iter().map(|l| Formula::eq(Term::var(&x), l.clone())).collect();
        out.push(ax(format!("{m}_exhaustive"), Formula::forall(x, Formula::or_all(cases))));
    }
    out
}

/// All type-derived axioms, in a fixed order.
pub fn axioms_for(sig: &Signature) -> Vec<Axiom> {
    let mut out = object_axioms(sig);
    for (elem, _) in sig.lists() {
        out.extend(list_axioms(sig, elem));
    }
    for (inner, _) in sig.opts() {
        out.extend(option_axioms(sig, inner));
    }
    out.extend(finite_sort_axioms(sig));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::json::parse_type_defs;
    use crate::logic::derive_signature;

    fn sig(text: &str) -> Signature {
        derive_signature(&parse_type_defs(text).unwrap())
    }

    #[test]
    fn one_field_object_has_a_single_axiom() {
        let s = sig("DB = { x: Integer }");
        let ax = object_axioms(&s);
        assert_eq!(ax.len(), 1);
        assert_eq!(ax[0].formula.to_string(), "forall O:DB . forall V:Z . x(upd_x(O, V)) = V");
    }

    #[test]
    fn updator_has_read_over_write_and_frames() {
        let s = sig(
            "Status = { open: List[Integer], paid: Bool, shipped: Bool, final: Bool, value: Integer, note: String }
             DB = { status: Status }",
        );
        let ax = object_axioms(&s);
        let paid: Vec<_> = ax.iter().filter(|a| a.name.starts_with("upd_paid")).collect();
        assert_eq!(paid.len(), 6);
        assert_eq!(paid.iter().filter(|a| a.name.contains("frame")).count(), 5);
        assert!(paid.iter().any(|a| a.formula.to_string() == "forall O:Status . forall V:Bool . paid(upd_paid(O, V)) = V"));
    }

    #[test]
    fn nine_list_axioms_per_list_sort() {
        let s = sig("DB = { xs: List[Integer] }");
        assert_eq!(list_axioms(&s, &Sort::Int).len(), 9);
    }

    #[test]
    fn empty_object_has_no_object_axioms() {
        let s = sig("E = { }\nDB = { e: E }");
        // Only the DB field `e` contributes.
        let ax = object_axioms(&s);
        assert_eq!(ax.len(), 1);
        assert_eq!(ax[0].name, "upd_e_e");
    }
}
