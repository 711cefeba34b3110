//! Bounded tableau calculus for CTL* over first-order atoms.
//!
//! A tableau node is a set of sequents read conjunctively; the children of
//! a node are alternatives. A sequent `s ⊢Q Φ` reads its formulas
//! conjunctively for `E` and disjunctively for `A`. To check `φ` the root
//! holds `(n₀, db) ⊢E ¬φ` and the tableau tries to build a countermodel.
//!
//! Rules are applied in a fixed order: Boolean, Elim, Split, U/R-Exp,
//! X-Simp, Unsat, X/X̄-Exp. Once a sequent has taken `bound` transitions
//! the expansion rules treat its node as having no outgoing transitions.
//!
//! Over ground states the sequents of a node are independent, so side
//! sequents are decided separately and memoized.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::collections::hash_map::DefaultHasher;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::rc::Rc;

use crate::ctl::{nnf, Ctl};
use crate::eval::{eval_formula, Env};
use crate::json::Value;
use crate::logic::{Definition, Formula, Func, Signature, Term};
use crate::process::{symbolic_successors, ProcessModel};
use crate::script::exec;

/// Name of the constant standing for the unknown initial database.
pub const INITIAL_DB: &str = "db0";

/// Answer of a satisfiability oracle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SatVerdict {
    Unsat,
    /// Satisfiable, optionally with a value for the initial database.
    Sat { witness: Option<Value> },
    Unknown { reason: String },
}

/// Decides satisfiability of a set of closed classical formulas modulo
/// the definitions and the theory of the data types.
///
/// `branch` numbers the tableau leaves finished before the call; backends
/// that write obligation files use it in their names.
pub trait Oracle {
    fn check(&mut self, formulas: &[Formula], branch: usize) -> SatVerdict;
}

/// Oracle for ground formulas: evaluates them.
pub struct GroundOracle<'a> {
    pub defs: &'a [Definition],
}

impl Oracle for GroundOracle<'_> {
    fn check(&mut self, formulas: &[Formula], _branch: usize) -> SatVerdict {
        let mut env = Env::new();
        for f in formulas {
            match eval_formula(f, &mut env, self.defs) {
                Ok(true) => {}
                Ok(false) => return SatVerdict::Unsat,
                Err(e) => return SatVerdict::Unknown { reason: e.to_string() },
            }
        }
        SatVerdict::Sat { witness: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Quant {
    E,
    A,
}

/// The database of a tableau state: a known value or a term over the
/// initial constant.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DbState {
    Ground(Value),
    Symbolic(Term),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TState {
    pub node: usize,
    pub db: DbState,
}

/// How the state of a sequent was reached, newest step first.
#[derive(Debug)]
pub struct Trail {
    pub state: Rc<TState>,
    pub edge: Option<usize>,
    pub prev: Option<Rc<Trail>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Body {
    /// NNF formulas with free variables at most `db`.
    Modal(BTreeSet<Ctl>),
    /// Closed classical formulas, `db` already replaced by the state's
    /// database.
    Classical(Vec<Formula>),
}

#[derive(Clone, Debug)]
pub struct Sequent {
    pub state: Rc<TState>,
    pub quant: Quant,
    pub body: Body,
    pub steps: usize,
    /// Whether this sequent continues the run of the root sequent.
    primary: bool,
    trail: Rc<Trail>,
}

impl Sequent {
    /// The formula this classical sequent stands for.
    pub fn reading(&self) -> Option<Formula> {
        match &self.body {
            Body::Classical(fs) => Some(match self.quant {
                Quant::E => Formula::and_all(fs.iter().cloned()),
                Quant::A => Formula::or_all(fs.iter().cloned()),
            }),
            Body::Modal(_) => None,
        }
    }

    fn with(&self, quant: Quant, body: Body) -> Sequent {
        Sequent { quant, body, ..self.clone() }
    }

    fn modal(&self, quant: Quant, fs: BTreeSet<Ctl>) -> Sequent {
        self.with(quant, Body::Modal(fs))
    }
}

/// A set of sequents, read conjunctively.
#[derive(Clone, Debug, Default)]
pub struct TableauNode {
    pub sequents: Vec<Sequent>,
}

impl TableauNode {
    fn replace(&self, i: usize, with: Vec<Sequent>) -> TableauNode {
        let mut sequents = self.sequents[..i].to_vec();
        sequents.extend(with);
        sequents.extend(self.sequents[i + 1..].iter().cloned());
        // The node is a conjunction: repeated and trivially true sequents
        // add nothing unless they carry the run.
        let mut seen = HashSet::new();
        sequents.retain(|s| {
            s.primary
                || (s.reading() != Some(Formula::True) && seen.insert((s.state.clone(), s.quant, s.body.clone(), s.steps)))
        });
        TableauNode { sequents }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    EAnd,
    EOr,
    AOr,
    AAnd,
    EElim,
    AElim,
    ESplit,
    ASplit,
    UExp,
    RExp,
    EXSimp,
    AXSimp,
    EXExp,
    EWXExp,
    AXExp,
    AWXExp,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rule::EAnd => "E-and",
            Rule::EOr => "E-or",
            Rule::AOr => "A-or",
            Rule::AAnd => "A-and",
            Rule::EElim => "E-Elim",
            Rule::AElim => "A-Elim",
            Rule::ESplit => "E-Split",
            Rule::ASplit => "A-Split",
            Rule::UExp => "U-Exp",
            Rule::RExp => "R-Exp",
            Rule::EXSimp => "E-X-Simp",
            Rule::AXSimp => "A-X-Simp",
            Rule::EXExp => "E-X-Exp",
            Rule::EWXExp => "E-WX-Exp",
            Rule::AXExp => "A-X-Exp",
            Rule::AWXExp => "A-WX-Exp",
        })
    }
}

/// Concrete checking starts from a given database; unrestricted checking
/// from the constant [`INITIAL_DB`].
#[derive(Clone, Debug)]
pub enum Mode {
    Concrete(Value),
    Symbolic,
}

/// One state of an extracted run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunStep {
    pub node: usize,
    pub db: DbState,
    /// Edge taken to reach this state.
    pub via: Option<usize>,
}

#[derive(Clone, Debug)]
pub enum TableauResult {
    Closed,
    Open {
        branch: Vec<Rc<TableauNode>>,
        run: Vec<RunStep>,
        /// Readings of the classical sequents on the open leaf.
        initial_condition: Vec<Formula>,
        witness: Option<Value>,
    },
    /// Some branch could not be decided; carries the undecided obligations.
    Unknown { obligations: Vec<Vec<Formula>> },
}

impl TableauResult {
    pub fn is_closed(&self) -> bool {
        matches!(self, TableauResult::Closed)
    }

    pub fn is_open(&self) -> bool {
        matches!(self, TableauResult::Open { .. })
    }
}

/// One line of a tableau dump.
#[derive(Clone, Debug)]
pub struct TraceLine {
    pub depth: usize,
    pub rule: String,
    pub node: String,
}

/// Statistics and optional dump of a saturation.
#[derive(Clone, Debug, Default)]
pub struct Stats {
    pub nodes: usize,
    pub oracle_calls: usize,
    pub trace: Vec<TraceLine>,
}

type NodeKey = (u64, u64);

/// Work items of the depth-first saturation.
enum Item {
    Visit(usize, TableauNode, String),
    /// Marks the end of a subtree, with the number of undecided leaves
    /// seen before entering it.
    Done(NodeKey, usize),
}

/// Everything the rules need to know about the specification.
pub struct Tableau<'a> {
    pub model: &'a ProcessModel,
    pub defs: &'a [Definition],
    pub sig: &'a Signature,
    pub bound: usize,
    pub trace: bool,
    initial: Func,
}

fn conj(l: Ctl, r: Ctl) -> Ctl {
    match (l, r) {
        (Ctl::Atom(x), Ctl::Atom(y)) => Ctl::Atom(Formula::and(x, y)),
        (l, r) => Ctl::and(l, r),
    }
}

fn disj(l: Ctl, r: Ctl) -> Ctl {
    match (l, r) {
        (Ctl::Atom(x), Ctl::Atom(y)) => Ctl::Atom(Formula::or(x, y)),
        (l, r) => Ctl::or(l, r),
    }
}

fn without(fs: &BTreeSet<Ctl>, f: &Ctl) -> BTreeSet<Ctl> {
    let mut out = fs.clone();
    out.remove(f);
    out
}

fn with_all(fs: &BTreeSet<Ctl>, drop: &Ctl, add: impl IntoIterator<Item = Ctl>) -> BTreeSet<Ctl> {
    let mut out = without(fs, drop);
    out.extend(add);
    out
}

impl<'a> Tableau<'a> {
    pub fn new(model: &'a ProcessModel, defs: &'a [Definition], sig: &'a Signature, bound: usize) -> Tableau<'a> {
        Tableau {
            model,
            defs,
            sig,
            bound,
            trace: false,
            initial: Signature::constant(INITIAL_DB, sig.db_sort().clone()),
        }
    }

    /// The constant standing for the unknown initial database.
    pub fn initial_constant(&self) -> &Func {
        &self.initial
    }

    fn db_term(&self, db: &DbState) -> Term {
        match db {
            DbState::Ground(v) => Term::lit(v.clone(), self.sig.db_sort().clone()),
            DbState::Symbolic(t) => t.clone(),
        }
    }

    fn instantiate(&self, f: &Formula, st: &TState) -> Formula {
        f.subst1(self.sig.db(), &self.db_term(&st.db))
    }

    /// Root node for checking the expanded query `phi`: `(n₀, db) ⊢E nnf(¬φ)`.
    pub fn initial_node(&self, phi: &Ctl, mode: &Mode) -> TableauNode {
        let db = match mode {
            Mode::Concrete(v) => DbState::Ground(v.clone()),
            Mode::Symbolic => DbState::Symbolic(Term::app(&self.initial, vec![])),
        };
        let state = Rc::new(TState { node: self.model.init(), db });
        let trail = Rc::new(Trail { state: state.clone(), edge: None, prev: None });
        let root = Sequent {
            state,
            quant: Quant::E,
            body: Body::Modal([nnf(&Ctl::not(phi.clone()))].into_iter().collect()),
            steps: 0,
            primary: true,
            trail,
        };
        TableauNode { sequents: vec![root] }
    }

    /// Applies the highest-priority rule other than Unsat, returning the
    /// rule and the children. `None` when only Unsat can apply, or when the
    /// node is fully expanded.
    pub fn apply_rule(&self, node: &TableauNode) -> Option<(Rule, Vec<TableauNode>)> {
        self.boolean(node)
            .or_else(|| self.elim(node))
            .or_else(|| self.split(node))
            .or_else(|| self.expand_fixpoints(node))
            .or_else(|| self.x_simp(node))
            .or_else(|| self.x_exp(node))
    }

    /// Like [`apply_rule`](Self::apply_rule) but stops before X/X̄-Exp.
    fn apply_static(&self, node: &TableauNode) -> Option<(Rule, Vec<TableauNode>)> {
        self.boolean(node)
            .or_else(|| self.elim(node))
            .or_else(|| self.split(node))
            .or_else(|| self.expand_fixpoints(node))
            .or_else(|| self.x_simp(node))
    }

    fn modal_sequents(node: &TableauNode) -> impl Iterator<Item = (usize, &Sequent, &BTreeSet<Ctl>)> {
        node.sequents.iter().enumerate().filter_map(|(i, s)| match &s.body {
            Body::Modal(fs) => Some((i, s, fs)),
            Body::Classical(_) => None,
        })
    }

    fn boolean(&self, node: &TableauNode) -> Option<(Rule, Vec<TableauNode>)> {
        for (i, s, fs) in Self::modal_sequents(node) {
            for f in fs {
                let (l, r, is_and) = match f {
                    Ctl::And(l, r) => (l, r, true),
                    Ctl::Or(l, r) => (l, r, false),
                    _ => continue,
                };
                if l.is_classical() && r.is_classical() {
                    continue;
                }
                let (l, r) = ((**l).clone(), (**r).clone());
                return Some(match (s.quant, is_and) {
                    (Quant::E, true) => {
                        let seq = s.modal(Quant::E, with_all(fs, f, [l, r]));
                        (Rule::EAnd, vec![node.replace(i, vec![seq])])
                    }
                    (Quant::A, false) => {
                        let seq = s.modal(Quant::A, with_all(fs, f, [l, r]));
                        (Rule::AOr, vec![node.replace(i, vec![seq])])
                    }
                    (Quant::E, false) => {
                        let a = s.modal(Quant::E, with_all(fs, f, [l]));
                        let b = s.modal(Quant::E, with_all(fs, f, [r]));
                        (Rule::EOr, vec![node.replace(i, vec![a]), node.replace(i, vec![b])])
                    }
                    (Quant::A, true) => {
                        let a = s.modal(Quant::A, with_all(fs, f, [l]));
                        let b = s.modal(Quant::A, with_all(fs, f, [r]));
                        (Rule::AAnd, vec![node.replace(i, vec![a, b])])
                    }
                });
            }
        }
        None
    }

    fn elim(&self, node: &TableauNode) -> Option<(Rule, Vec<TableauNode>)> {
        for (i, s, fs) in Self::modal_sequents(node) {
            for f in fs {
                let (q, inner) = match f {
                    Ctl::E(x) => (Quant::E, x),
                    Ctl::A(x) => (Quant::A, x),
                    _ => continue,
                };
                // Only the root lineage follows the run being refuted.
                let detached = Sequent {
                    primary: s.primary && fs.len() == 1,
                    ..s.modal(q, [(**inner).clone()].into_iter().collect())
                };
                let rest = without(fs, f);
                return Some(match s.quant {
                    Quant::E => {
                        // An empty E-sequent is the empty conjunction; drop it.
                        let mut seqs = vec![detached];
                        if !rest.is_empty() {
                            seqs.push(s.modal(Quant::E, rest));
                        }
                        (Rule::EElim, vec![node.replace(i, seqs)])
                    }
                    Quant::A => {
                        let other = s.modal(Quant::A, rest);
                        (Rule::AElim, vec![node.replace(i, vec![detached]), node.replace(i, vec![other])])
                    }
                });
            }
        }
        None
    }

    fn split(&self, node: &TableauNode) -> Option<(Rule, Vec<TableauNode>)> {
        for (i, s, fs) in Self::modal_sequents(node) {
            let (gamma, rest): (Vec<&Ctl>, Vec<&Ctl>) = fs.iter().partition(|f| f.is_classical());
            // A sequent with only modal atoms has nothing to separate, unless
            // it is empty, which is classical as well.
            if gamma.is_empty() && !rest.is_empty() {
                continue;
            }
            let inst: Vec<Formula> = gamma
                .iter()
                .map(|f| match f {
                    Ctl::Atom(a) => self.settle(self.instantiate(a, &s.state), &s.state),
                    _ => unreachable!(),
                })
                .collect();
            let inst = Self::absorb(s.quant, inst);
            let classical = Sequent { primary: false, ..s.with(s.quant, Body::Classical(inst)) };
            if rest.is_empty() {
                let rule = if s.quant == Quant::E { Rule::ESplit } else { Rule::ASplit };
                return Some((rule, vec![node.replace(i, vec![Sequent { primary: s.primary, ..classical }])]));
            }
            let modal = s.modal(s.quant, rest.into_iter().cloned().collect());
            return Some(match s.quant {
                Quant::E => (Rule::ESplit, vec![node.replace(i, vec![classical, modal])]),
                Quant::A => (Rule::ASplit, vec![node.replace(i, vec![classical]), node.replace(i, vec![modal])]),
            });
        }
        None
    }

    /// Evaluates a formula over a ground database to `true` or `false`;
    /// formulas that fail to evaluate are left for the oracle.
    fn settle(&self, f: Formula, st: &TState) -> Formula {
        if !matches!(st.db, DbState::Ground(_)) {
            return f;
        }
        match eval_formula(&f, &mut Env::new(), self.defs) {
            Ok(true) => Formula::True,
            Ok(false) => Formula::False,
            Err(_) => f,
        }
    }

    /// Drops units and collapses on a zero of the sequent's connective.
    fn absorb(quant: Quant, fs: Vec<Formula>) -> Vec<Formula> {
        let (unit, zero) = match quant {
            Quant::E => (Formula::True, Formula::False),
            Quant::A => (Formula::False, Formula::True),
        };
        if fs.contains(&zero) {
            return vec![zero];
        }
        let mut out: Vec<Formula> = fs.into_iter().filter(|f| *f != unit).collect();
        out.sort();
        out.dedup();
        out
    }

    fn expand_fixpoints(&self, node: &TableauNode) -> Option<(Rule, Vec<TableauNode>)> {
        for (i, s, fs) in Self::modal_sequents(node) {
            for f in fs {
                let (rule, g) = match f {
                    // φ U ψ ⇝ ψ ∨ (φ ∧ X(φ U ψ))
                    Ctl::U(l, r) => (Rule::UExp, disj((**r).clone(), conj((**l).clone(), Ctl::next(f.clone())))),
                    // φ R ψ ⇝ ψ ∧ (φ ∨ X̄(φ R ψ))
                    Ctl::R(l, r) => (Rule::RExp, conj((**r).clone(), disj((**l).clone(), Ctl::weak_next(f.clone())))),
                    _ => continue,
                };
                let seq = s.modal(s.quant, with_all(fs, f, [g]));
                return Some((rule, vec![node.replace(i, vec![seq])]));
            }
        }
        None
    }

    fn x_simp(&self, node: &TableauNode) -> Option<(Rule, Vec<TableauNode>)> {
        for (i, s, fs) in Self::modal_sequents(node) {
            if fs.len() < 2 {
                continue;
            }
            let mut strong = Vec::new();
            let mut weak = Vec::new();
            for f in fs {
                match f {
                    Ctl::X(x) => strong.push((**x).clone()),
                    Ctl::WX(x) => weak.push((**x).clone()),
                    _ => unreachable!("X-Simp on unexpanded sequent"),
                }
            }
            let (n, m) = (strong.len(), weak.len());
            let all = strong.into_iter().chain(weak);
            let (rule, g) = match s.quant {
                Quant::E => {
                    let body = all.reduce(conj).unwrap();
                    (Rule::EXSimp, if n == 0 { Ctl::weak_next(body) } else { Ctl::next(body) })
                }
                Quant::A => {
                    let body = all.reduce(disj).unwrap();
                    (Rule::AXSimp, if m == 0 { Ctl::next(body) } else { Ctl::weak_next(body) })
                }
            };
            let seq = s.modal(s.quant, [g].into_iter().collect());
            return Some((rule, vec![node.replace(i, vec![seq])]));
        }
        None
    }

    /// Outgoing transitions of a state as (edge, guard at the state,
    /// successor state).
    fn transitions(&self, st: &TState) -> Vec<(usize, Formula, TState)> {
        match &st.db {
            DbState::Ground(v) => {
                let here = self.db_term(&st.db);
                self.model
                    .outgoing(st.node)
                    .iter()
                    .filter_map(|&e| {
                        let edge = self.model.edge(e);
                        // A transition whose script fails is never taken.
                        let next = exec(&edge.script, v, self.sig).ok()?;
                        let guard = edge.guard.subst1(self.sig.db(), &here);
                        Some((e, guard, TState { node: self.model.target(e), db: DbState::Ground(next) }))
                    })
                    .collect()
            }
            DbState::Symbolic(t) => symbolic_successors(self.model, st.node, t, self.sig)
                .into_iter()
                .map(|(e, g, u)| (e, g, TState { node: self.model.target(e), db: DbState::Symbolic(u) }))
                .collect(),
        }
    }

    fn x_exp(&self, node: &TableauNode) -> Option<(Rule, Vec<TableauNode>)> {
        let (i, s, fs) = Self::modal_sequents(node).next()?;
        let f = fs.iter().next().expect("saturated modal sequent");
        let (strong, phi) = match f {
            Ctl::X(x) => (true, (**x).clone()),
            Ctl::WX(x) => (false, (**x).clone()),
            _ => unreachable!("X-Exp on unexpanded sequent"),
        };
        let trans = if s.steps >= self.bound { Vec::new() } else { self.transitions(&s.state) };
        let step = |e: usize, st: TState, q: Quant, g: Ctl| {
            let state = Rc::new(st);
            let trail = Rc::new(Trail { state: state.clone(), edge: Some(e), prev: Some(s.trail.clone()) });
            Sequent {
                state,
                quant: q,
                body: Body::Modal([g].into_iter().collect()),
                steps: s.steps + 1,
                primary: s.primary,
                trail,
            }
        };
        let here = |fs: Vec<Formula>, q: Quant| Sequent { primary: false, ..s.with(q, Body::Classical(fs)) };
        Some(match s.quant {
            Quant::E => {
                let mut children: Vec<TableauNode> = trans
                    .iter()
                    .map(|(e, g, st)| {
                        let seq = step(*e, st.clone(), Quant::E, conj(Ctl::Atom(g.clone()), phi.clone()));
                        node.replace(i, vec![seq])
                    })
                    .collect();
                if strong {
                    (Rule::EXExp, children)
                } else {
                    // With no transitions this is the empty conjunction; it is
                    // kept so the run still ends here.
                    let stuck: Vec<Formula> = trans.iter().map(|(_, g, _)| g.clone().negate()).collect();
                    children.push(node.replace(i, vec![Sequent { primary: s.primary, ..here(stuck, Quant::E) }]));
                    (Rule::EWXExp, children)
                }
            }
            Quant::A => {
                let mut seqs: Vec<Sequent> = trans
                    .iter()
                    .map(|(e, g, st)| step(*e, st.clone(), Quant::A, disj(Ctl::Atom(g.clone().negate()), phi.clone())))
                    .collect();
                if strong {
                    let guards = trans.iter().map(|(_, g, _)| g.clone()).collect::<Vec<_>>();
                    // `E` over one formula: the disjunction of the guards.
                    seqs.push(here(vec![Formula::or_all(guards)], Quant::E));
                    (Rule::AXExp, vec![node.replace(i, seqs)])
                } else {
                    if seqs.is_empty() {
                        seqs.push(Sequent { primary: s.primary, ..here(vec![], Quant::E) });
                    }
                    (Rule::AWXExp, vec![node.replace(i, seqs)])
                }
            }
        })
    }

    /// Readings of the classical sequents of a node.
    fn readings(node: &TableauNode) -> Vec<Formula> {
        let mut out: Vec<Formula> = node
            .sequents
            .iter()
            .filter_map(Sequent::reading)
            .filter(|f| *f != Formula::True)
            .collect();
        out.sort();
        out.dedup();
        out
    }

    /// Expands the tableau depth-first until an open branch is found or
    /// every branch is closed.
    pub fn saturate(&self, root: TableauNode, oracle: &mut dyn Oracle) -> (TableauResult, Stats) {
        self.saturate_in(root, oracle, &mut HashMap::new())
    }

    /// Over ground states the sequents of a node share nothing, so each one
    /// besides the sequent carrying the run is decided on its own. Returns
    /// `None` when one of them is unsatisfiable; satisfiable ones are
    /// dropped.
    fn factor(
        &self,
        node: Rc<TableauNode>,
        oracle: &mut dyn Oracle,
        memo: &mut HashMap<NodeKey, bool>,
        stats: &mut Stats,
    ) -> Option<Rc<TableauNode>> {
        let ground = node.sequents.iter().all(|s| matches!(s.state.db, DbState::Ground(_)));
        if node.sequents.len() < 2 || !ground {
            return Some(node);
        }
        let keep = node.sequents.iter().position(|s| s.primary).unwrap_or_else(|| {
            (0..node.sequents.len()).max_by_key(|&j| Self::trail_len(&node.sequents[j].trail)).unwrap()
        });
        let mut kept = Vec::new();
        for (j, s) in node.sequents.iter().enumerate() {
            if j == keep {
                kept.push(s.clone());
                continue;
            }
            let single = TableauNode { sequents: vec![Sequent { primary: false, ..s.clone() }] };
            let k = Self::key(&single);
            let sat = match memo.get(&k) {
                Some(&b) => Some(b),
                None => {
                    let (r, sub) = self.saturate_in(single, oracle, memo);
                    stats.nodes += sub.nodes;
                    stats.oracle_calls += sub.oracle_calls;
                    let sat = match r {
                        TableauResult::Closed => Some(false),
                        TableauResult::Open { .. } => Some(true),
                        TableauResult::Unknown { .. } => None,
                    };
                    if let Some(b) = sat {
                        memo.insert(k, b);
                    }
                    sat
                }
            };
            match sat {
                Some(false) => return None,
                Some(true) => {}
                None => kept.push(s.clone()),
            }
        }
        if kept.len() == node.sequents.len() {
            return Some(node);
        }
        Some(Rc::new(TableauNode { sequents: kept }))
    }

    fn saturate_in(
        &self,
        root: TableauNode,
        oracle: &mut dyn Oracle,
        memo: &mut HashMap<NodeKey, bool>,
    ) -> (TableauResult, Stats) {
        let mut stats = Stats::default();
        let mut cache: BTreeMap<Vec<Formula>, SatVerdict> = BTreeMap::new();
        let mut unknown: Vec<Vec<Formula>> = Vec::new();
        let mut leaves = 0;
        let mut path: Vec<Rc<TableauNode>> = Vec::new();
        // Nodes whose subtree closed. Closure does not depend on how a
        // state was reached, so the key leaves out the trail.
        let mut closed: HashSet<NodeKey> = HashSet::new();
        let mut stack: Vec<Item> = vec![Item::Visit(0, root, "root".into())];
        while let Some(item) = stack.pop() {
            let (depth, node, via) = match item {
                Item::Visit(d, n, v) => (d, n, v),
                Item::Done(key, undecided) => {
                    if unknown.len() == undecided {
                        closed.insert(key);
                    }
                    continue;
                }
            };
            let key = Self::key(&node);
            if closed.contains(&key) {
                leaves += 1;
                if self.trace {
                    stats.trace.push(TraceLine { depth, rule: "Closed-before".into(), node: self.describe(&node) });
                }
                continue;
            }
            stack.push(Item::Done(key, unknown.len()));
            stats.nodes += 1;
            path.truncate(depth);
            let node = Rc::new(node);
            path.push(node.clone());
            if self.trace {
                stats.trace.push(TraceLine { depth, rule: via, node: self.describe(&node) });
            }
            // A false sequent refutes the whole conjunction.
            let refuted = node.sequents.iter().any(|s| s.reading() == Some(Formula::False));
            let node = match if refuted { None } else { self.factor(node, oracle, memo, &mut stats) } {
                Some(n) => n,
                None => {
                    leaves += 1;
                    if self.trace {
                        stats.trace.push(TraceLine { depth: depth + 1, rule: "Unsat".into(), node: "closed".into() });
                    }
                    continue;
                }
            };
            if let Some((rule, children)) = self.apply_static(&node) {
                Self::push_children(&mut stack, depth, rule, children);
                continue;
            }
            let readings = Self::readings(&node);
            let verdict = if readings.is_empty() {
                SatVerdict::Sat { witness: None }
            } else {
                cache
                    .entry(readings.clone())
                    .or_insert_with(|| {
                        stats.oracle_calls += 1;
                        oracle.check(&readings, leaves)
                    })
                    .clone()
            };
            if verdict == SatVerdict::Unsat {
                leaves += 1;
                if self.trace {
                    stats.trace.push(TraceLine { depth: depth + 1, rule: "Unsat".into(), node: "closed".into() });
                }
                continue;
            }
            // Ground classical sequents that survived the Unsat check are
            // true and carry nothing into the successors.
            let ground = node.sequents.iter().all(|s| matches!(s.state.db, DbState::Ground(_)));
            let expand = if ground && matches!(verdict, SatVerdict::Sat { .. }) {
                TableauNode { sequents: node.sequents.iter().filter(|s| s.reading().is_none()).cloned().collect() }
            } else {
                (*node).clone()
            };
            match self.x_exp(&expand) {
                Some((rule, children)) => {
                    if children.is_empty() {
                        leaves += 1;
                    }
                    if children.is_empty() && self.trace {
                        stats.trace.push(TraceLine { depth: depth + 1, rule: rule.to_string(), node: "closed".into() });
                    }
                    Self::push_children(&mut stack, depth, rule, children);
                }
                None => match verdict {
                    SatVerdict::Sat { witness } => {
                        let result = TableauResult::Open {
                            run: Self::run_of(&node),
                            initial_condition: readings,
                            witness,
                            branch: path,
                        };
                        return (result, stats);
                    }
                    SatVerdict::Unknown { .. } => {
                        leaves += 1;
                        unknown.push(readings);
                    }
                    SatVerdict::Unsat => unreachable!(),
                },
            }
        }
        let result = if unknown.is_empty() { TableauResult::Closed } else { TableauResult::Unknown { obligations: unknown } };
        (result, stats)
    }

    fn push_children(stack: &mut Vec<Item>, depth: usize, rule: Rule, children: Vec<TableauNode>) {
        // Reversed so that the first child is explored first.
        for c in children.into_iter().rev() {
            stack.push(Item::Visit(depth + 1, c, rule.to_string()));
        }
    }

    /// A 128-bit fingerprint of the sequents of a node, ignoring order.
    fn key(node: &TableauNode) -> NodeKey {
        let mut parts: Vec<(usize, &DbState, Quant, &Body, usize)> =
            node.sequents.iter().map(|s| (s.state.node, &s.state.db, s.quant, &s.body, s.steps)).collect();
        parts.sort();
        let half = |seed: u64| {
            let mut h = DefaultHasher::new();
            seed.hash(&mut h);
            parts.hash(&mut h);
            h.finish()
        };
        (half(0), half(1))
    }

    /// The run followed by the root lineage on a fully expanded node.
    fn run_of(node: &TableauNode) -> Vec<RunStep> {
        let trail = node
            .sequents
            .iter()
            .filter(|s| s.primary)
            .map(|s| &s.trail)
            .max_by_key(|t| Self::trail_len(t))
            .or_else(|| node.sequents.iter().map(|s| &s.trail).max_by_key(|t| Self::trail_len(t)));
        let mut out = Vec::new();
        let mut cur = trail.cloned();
        while let Some(t) = cur {
            out.push(RunStep { node: t.state.node, db: t.state.db.clone(), via: t.edge });
            cur = t.prev.clone();
        }
        out.reverse();
        out
    }

    fn trail_len(t: &Rc<Trail>) -> usize {
        let mut n = 1;
        let mut cur = t.prev.as_ref();
        while let Some(p) = cur {
            n += 1;
            cur = p.prev.as_ref();
        }
        n
    }

    /// One-line rendering of a node for tableau dumps.
    pub fn describe(&self, node: &TableauNode) -> String {
        if node.sequents.is_empty() {
            return "{}".into();
        }
        let parts: Vec<String> = node
            .sequents
            .iter()
            .map(|s| {
                let q = if s.quant == Quant::E { "E" } else { "A" };
                let fs: Vec<String> = match &s.body {
                    Body::Modal(fs) => fs.iter().map(|f| f.to_string()).collect(),
                    Body::Classical(fs) => fs.iter().map(|f| format!("[{f}]")).collect(),
                };
                format!("({}, {}) |-{} {}", self.model.node(s.state.node).id, s.steps, q, fs.join(", "))
            })
            .collect();
        parts.join("; ")
    }
}

/// Checks `phi` (an expanded, quantified query) by saturating the tableau
/// for its negation. `Closed` means the query holds.
pub fn check(
    model: &ProcessModel,
    defs: &[Definition],
    sig: &Signature,
    phi: &Ctl,
    mode: &Mode,
    bound: usize,
    oracle: &mut dyn Oracle,
) -> (TableauResult, Stats) {
    let t = Tableau::new(model, defs, sig, bound);
    let root = t.initial_node(phi, mode);
    t.saturate(root, oracle)
}
