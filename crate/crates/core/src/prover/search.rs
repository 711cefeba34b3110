//! Candidate databases for the ground witness search.
//!
//! Values are enumerated from small per-type domains, changing few leaves
//! of a default value first. The integer domain is seeded with the literals
//! of the problem and their neighbours.

use std::collections::BTreeSet;

use crate::json::{JsonType, TypeEnv, Value};
use crate::logic::{Formula, Sort, Term};

/// Enumeration limits.
#[derive(Clone, Debug)]
pub struct Domains {
    pub ints: Vec<i64>,
    pub strings: Vec<String>,
    /// Per-type cap on the number of values.
    pub per_type: usize,
}

impl Domains {
    /// Domains seeded from the literals of `formulas`.
    pub fn for_formulas(formulas: &[Formula]) -> Domains {
        let mut ints: Vec<i64> = vec![0, 1, -1, 2, -2, 3, -3];
        let mut strings = vec![String::new()];
        let mut lits = BTreeSet::new();
        for f in formulas {
            f.for_each_atom_term(&mut |t| collect_lits(t, &mut lits));
        }
        for v in lits {
            match v {
                Value::Int(i) => {
                    for k in [i, i.saturating_sub(1), i.saturating_add(1)] {
                        if !ints.contains(&k) {
                            ints.push(k);
                        }
                    }
                }
                Value::Str(s) if !strings.contains(&s) => strings.push(s),
                _ => {}
            }
        }
        Domains { ints, strings, per_type: 64 }
    }
}

fn collect_lits(t: &Term, out: &mut BTreeSet<Value>) {
    match t {
        Term::Lit(v, Sort::Int | Sort::Str) => {
            out.insert((**v).clone());
        }
        Term::App(_, args) => args.iter().for_each(|a| collect_lits(a, out)),
        _ => {}
    }
}

/// Values of `ty`, default first. The flag tells whether the list is the
/// whole domain.
pub fn values(ty: &JsonType, env: &TypeEnv, d: &Domains) -> (Vec<Value>, bool) {
    match env.resolve(ty) {
        JsonType::Integer => (d.ints.iter().map(|&i| Value::Int(i)).collect(), false),
        JsonType::Bool => (vec![Value::Bool(false), Value::Bool(true)], true),
        JsonType::String => (d.strings.iter().cloned().map(Value::Str).collect(), false),
        JsonType::Enum(members) => (members.iter().cloned().map(Value::Str).collect(), true),
        JsonType::Option(inner) => {
            let (vs, all) = values(inner, env, d);
            let mut out = vec![Value::Null];
            out.extend(vs.into_iter().take(d.per_type - 1));
            (out, all)
        }
        JsonType::List(elem) => {
            let (vs, _) = values(elem, env, d);
            let mut out = vec![Value::Array(vec![])];
            out.extend(vs.iter().take(3).map(|v| Value::Array(vec![v.clone()])));
            if let Some(v) = vs.first() {
                out.push(Value::Array(vec![v.clone(), v.clone()]));
            }
            (out, false)
        }
        JsonType::Object(fields) => {
            let doms: Vec<(String, Vec<Value>, bool)> = fields
                .iter()
                .map(|(k, t)| {
                    let (vs, all) = values(t, env, d);
                    (k.clone(), vs, all)
                })
                .collect();
            let exhaustive = doms.iter().all(|(_, _, all)| *all);
            let lists: Vec<&[Value]> = doms.iter().map(|(_, vs, _)| vs.as_slice()).collect();
            let mut total = 1usize;
            for l in &lists {
                total = total.saturating_mul(l.len().max(1));
            }
            let out = few_changes(&lists, d.per_type)
                .into_iter()
                .map(|choice| {
                    Value::Object(doms.iter().zip(choice).map(|((k, vs, _), i)| (k.clone(), vs[i].clone())).collect())
                })
                .collect::<Vec<_>>();
            let complete = exhaustive && out.len() == total;
            (out, complete)
        }
        JsonType::Named(_) => unreachable!("resolved"),
    }
}

/// Index vectors into `lists`, ordered by the number of non-default
/// positions, at most `cap` of them.
fn few_changes(lists: &[&[Value]], cap: usize) -> Vec<Vec<usize>> {
    if lists.iter().any(|l| l.is_empty()) {
        return vec![];
    }
    let n = lists.len();
    let mut out = vec![vec![0; n]];
    let mut frontier = vec![(vec![0; n], 0)];
    // Breadth-first over the number of changed positions; each state only
    // changes positions after the last changed one, so every vector is
    // produced once.
    while !frontier.is_empty() && out.len() < cap {
        let mut next = Vec::new();
        for (v, from) in frontier {
            for p in from..n {
                for k in 1..lists[p].len() {
                    let mut w: Vec<usize> = v.clone();
                    w[p] = k;
                    out.push(w.clone());
                    if out.len() >= cap {
                        return out;
                    }
                    next.push((w, p + 1));
                }
            }
        }
        frontier = next;
    }
    out
}
