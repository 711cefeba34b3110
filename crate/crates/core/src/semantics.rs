//! Reference semantics by explicit run enumeration.
//!
//! Runs are maximal up to a global bound on the number of transitions: a
//! run ends in a state with no enabled transition or once the bound is
//! reached. Path quantifiers nested inside a run continue with the budget
//! that remains at that position.

use std::cell::RefCell;
use std::collections::HashMap;

use crate::ctl::Ctl;
use crate::eval::{eval_formula, Env, EvalError};
use crate::json::Value;
use crate::logic::{Definition, Formula, Signature};
use crate::process::{enabled_transitions, Diagnostic, ProcessModel, Run, State};

/// Outcome of checking a query on a concrete instance.
#[derive(Clone, Debug)]
pub struct Verdict {
    pub holds: bool,
    /// A run satisfying an existential query, or refuting a universal one.
    pub witness: Option<Run>,
    /// Transitions dropped because their script failed.
    pub diagnostics: Vec<Diagnostic>,
}

pub struct Checker<'a> {
    pub model: &'a ProcessModel,
    pub defs: &'a [Definition],
    pub sig: &'a Signature,
    pub bound: usize,
    memo: RefCell<HashMap<(Ctl, usize, State), bool>>,
    diagnostics: RefCell<Vec<Diagnostic>>,
}

/// Depth-first, lazily produced maximal runs from a state.
pub struct Runs<'c, 'a> {
    checker: &'c Checker<'a>,
    limit: usize,
    /// Current prefix with the untried successors of each state.
    stack: Vec<(State, Option<usize>, Vec<(usize, State)>)>,
    started: bool,
}

impl Iterator for Runs<'_, '_> {
    type Item = Result<Run, EvalError>;

    fn next(&mut self) -> Option<Self::Item> {
        if !self.started {
            self.started = true;
        } else {
            // Backtrack to the deepest state with an untried successor.
            loop {
                let top = self.stack.last_mut()?;
                if let Some((e, st)) = top.2.pop() {
                    if let Err(err) = self.push(st, Some(e)) {
                        return Some(Err(err));
                    }
                    break;
                }
                self.stack.pop();
            }
        }
        // Descend along first successors until the run is maximal.
        loop {
            let top = self.stack.last_mut()?;
            match top.2.pop() {
                Some((e, st)) => {
                    if let Err(err) = self.push(st, Some(e)) {
                        return Some(Err(err));
                    }
                }
                None => break,
            }
        }
        let states = self.stack.iter().map(|(s, _, _)| s.clone()).collect();
        let edges = self.stack.iter().filter_map(|(_, e, _)| *e).collect();
        Some(Ok(Run { states, edges }))
    }
}

impl Runs<'_, '_> {
    fn push(&mut self, st: State, via: Option<usize>) -> Result<(), EvalError> {
        let depth = self.stack.len();
        let mut succ = if depth >= self.limit { Vec::new() } else { self.checker.successors(&st)? };
        // Popped from the back, so reverse to try edges in model order.
        succ.reverse();
        self.stack.push((st, via, succ));
        Ok(())
    }
}

impl<'a> Checker<'a> {
    pub fn new(model: &'a ProcessModel, defs: &'a [Definition], sig: &'a Signature, bound: usize) -> Checker<'a> {
        Checker {
            model,
            defs,
            sig,
            bound,
            memo: RefCell::new(HashMap::new()),
            diagnostics: RefCell::new(Vec::new()),
        }
    }

    fn successors(&self, st: &State) -> Result<Vec<(usize, State)>, EvalError> {
        let s = enabled_transitions(self.model, st, self.defs, self.sig)?;
        if !s.dropped.is_empty() {
            let mut d = self.diagnostics.borrow_mut();
            for x in s.dropped {
                if !d.contains(&x) {
                    d.push(x);
                }
            }
        }
        Ok(s.next)
    }

    /// Maximal runs from `st` with at most `bound - steps` transitions.
    pub fn runs(&self, st: &State, steps: usize) -> Result<Runs<'_, 'a>, EvalError> {
        let mut it = Runs { checker: self, limit: self.bound.saturating_sub(steps), stack: Vec::new(), started: false };
        it.push(st.clone(), None)?;
        Ok(it)
    }

    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        self.diagnostics.borrow().clone()
    }

    pub fn classical(&self, f: &Formula, db: &Value) -> Result<bool, EvalError> {
        let mut env = Env::new().with_var(self.sig.db(), db.clone());
        eval_formula(f, &mut env, self.defs)
    }

    /// Satisfaction of a state formula at `st`, `steps` transitions into
    /// the run.
    pub fn eval_state(&self, c: &Ctl, st: &State, steps: usize) -> Result<bool, EvalError> {
        match c {
            Ctl::A(_) | Ctl::E(_) => {
                let key = (c.clone(), steps, st.clone());
                if let Some(&v) = self.memo.borrow().get(&key) {
                    return Ok(v);
                }
                let v = self.quantified(c, st, steps)?.0;
                self.memo.borrow_mut().insert(key, v);
                Ok(v)
            }
            _ => self.eval_path(c, std::slice::from_ref(st), 0, steps),
        }
    }

    /// Evaluates `A ψ` or `E ψ` and returns the deciding run if any.
    fn quantified(&self, c: &Ctl, st: &State, steps: usize) -> Result<(bool, Option<Run>), EvalError> {
        let (universal, psi) = match c {
            Ctl::A(p) => (true, p),
            Ctl::E(p) => (false, p),
            _ => unreachable!("path quantifier expected"),
        };
        for run in self.runs(st, steps)? {
            let run = run?;
            let v = self.eval_path(psi, &run.states, 0, steps)?;
            if v != universal {
                return Ok((!universal, Some(run)));
            }
        }
        Ok((universal, None))
    }

    /// Satisfaction of a path formula by the suffix of `run` starting at
    /// position `i`, where `run[0]` lies `base` transitions into the run.
    pub fn eval_path(&self, c: &Ctl, run: &[State], i: usize, base: usize) -> Result<bool, EvalError> {
        let n = run.len();
        match c {
            Ctl::Atom(f) => self.classical(f, &run[i].db),
            Ctl::Not(x) => Ok(!self.eval_path(x, run, i, base)?),
            Ctl::And(l, r) => Ok(self.eval_path(l, run, i, base)? && self.eval_path(r, run, i, base)?),
            Ctl::Or(l, r) => Ok(self.eval_path(l, run, i, base)? || self.eval_path(r, run, i, base)?),
            Ctl::Implies(l, r) => Ok(!self.eval_path(l, run, i, base)? || self.eval_path(r, run, i, base)?),
            Ctl::A(_) | Ctl::E(_) => self.eval_state(c, &run[i], base + i),
            Ctl::X(x) => Ok(i + 1 < n && self.eval_path(x, run, i + 1, base)?),
            Ctl::WX(x) => Ok(i + 1 >= n || self.eval_path(x, run, i + 1, base)?),
            Ctl::U(l, r) => {
                for j in i..n {
                    if self.eval_path(r, run, j, base)? {
                        return Ok(true);
                    }
                    if !self.eval_path(l, run, j, base)? {
                        return Ok(false);
                    }
                }
                Ok(false)
            }
            Ctl::R(l, r) => {
                for j in i..n {
                    if !self.eval_path(r, run, j, base)? {
                        return Ok(false);
                    }
                    if self.eval_path(l, run, j, base)? {
                        return Ok(true);
                    }
                }
                Ok(true)
            }
            Ctl::W(l, r) => {
                // φ W ψ = ψ R (φ ∨ ψ)
                for j in i..n {
                    if self.eval_path(r, run, j, base)? {
                        return Ok(true);
                    }
                    if !self.eval_path(l, run, j, base)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Ctl::G(x) => {
                for j in i..n {
                    if !self.eval_path(x, run, j, base)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Ctl::F(x) => {
                for j in i..n {
                    if self.eval_path(x, run, j, base)? {
                        return Ok(true);
                    }
                }
                Ok(false)
            }
        }
    }

    /// Checks a state formula at the initial node with database `db`.
    pub fn eval_query(&self, q: &Ctl, db: &Value) -> Result<Verdict, EvalError> {
        let st = State { node: self.model.init(), db: db.clone() };
        let (holds, witness) = match q {
            Ctl::A(_) | Ctl::E(_) => self.quantified(q, &st, 0)?,
            _ => (self.eval_state(q, &st, 0)?, None),
        };
        Ok(Verdict { holds, witness, diagnostics: self.diagnostics() })
    }
}

/// Convenience wrapper around [`Checker::eval_query`].
pub fn eval_query(
    model: &ProcessModel,
    defs: &[Definition],
    sig: &Signature,
    db: &Value,
    q: &Ctl,
    bound: usize,
) -> Result<Verdict, EvalError> {
    Checker::new(model, defs, sig, bound).eval_query(q, db)
}

/// Decides `D ⇒ ζ[db]` on a ground database.
pub fn eval_classical(f: &Formula, db: &Value, defs: &[Definition], sig: &Signature) -> Result<bool, EvalError> {
    let mut env = Env::new().with_var(sig.db(), db.clone());
    eval_formula(f, &mut env, defs)
}
