//! Process fragments, their composition, and the transition relation.

use std::collections::{BTreeMap, BTreeSet};

use crate::eval::{eval_formula, Env, EvalError};
use crate::json::Value;
use crate::logic::{Definition, Formula, Signature, Term};
use crate::script::{exec, to_update_term, Script};

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub id: String,
    pub init: bool,
    pub exit: bool,
    /// Present exactly for entry nodes.
    pub entry_guard: Option<Formula>,
    /// Labels without formal meaning, kept for reporting.
    pub meta: BTreeMap<String, serde_json::Value>,
}

impl Node {
    pub fn new(id: &str) -> Node {
        Node { id: id.to_string(), init: false, exit: false, entry_guard: None, meta: BTreeMap::new() }
    }

    pub fn is_entry(&self) -> bool {
        self.entry_guard.is_some()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    pub name: String,
    pub from: String,
    pub to: String,
    pub guard: Formula,
    pub script: Script,
    /// `to_update_term(script)`.
    pub update: Term,
    /// Added by composition (exit to entry).
    pub implicit: bool,
    pub meta: BTreeMap<String, serde_json::Value>,
}

impl Edge {
    pub fn new(name: &str, from: &str, to: &str, guard: Formula, script: Script, sig: &Signature) -> Edge {
        let update = to_update_term(&script, sig);
        Edge {
            name: name.to_string(),
            from: from.to_string(),
            to: to.to_string(),
            guard,
            script,
            update,
            implicit: false,
            meta: BTreeMap::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Fragment {
    pub name: String,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProcessError {
    #[error("no init node")]
    NoInit,
    #[error("several init nodes: {0:?}")]
    SeveralInits(Vec<String>),
    #[error("node id {0} is used more than once")]
    DuplicateNode(String),
    #[error("edge name {0} is used more than once")]
    DuplicateEdge(String),
    #[error("fragment {fragment} has several entry nodes: {nodes:?}")]
    SeveralEntries { fragment: String, nodes: Vec<String> },
    #[error("edge {edge} refers to unknown node {node}")]
    UnknownNode { edge: String, node: String },
    #[error("guard of {0} has free variables other than db")]
    FreeVariables(String),
}

/// A composed process: nodes, initial node, and all edges including the
/// implicit exit-to-entry ones.
#[derive(Clone, Debug)]
pub struct ProcessModel {
    nodes: Vec<Node>,
    init: usize,
    edges: Vec<Edge>,
    index: BTreeMap<String, usize>,
    out: Vec<Vec<usize>>,
}

impl ProcessModel {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn init(&self) -> usize {
        self.init
    }

    pub fn node(&self, i: usize) -> &Node {
        &self.nodes[i]
    }

    pub fn edge(&self, i: usize) -> &Edge {
        &self.edges[i]
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Outgoing edge indices of node `n`, ordered by target id, then name.
    pub fn outgoing(&self, n: usize) -> &[usize] {
        &self.out[n]
    }

    pub fn target(&self, e: usize) -> usize {
        self.index[&self.edges[e].to]
    }
}

/// Composes fragments into one process model.
///
/// Every exit node gets an edge to every entry node (self-pairs included),
/// guarded by the entry guard, with the empty script.
pub fn compose(fragments: &[Fragment], sig: &Signature) -> Result<ProcessModel, ProcessError> {
    let mut nodes: Vec<Node> = Vec::new();
    let mut index = BTreeMap::new();
    for frag in fragments {
        let entries: Vec<String> = frag.nodes.iter().filter(|n| n.is_entry()).map(|n| n.id.clone()).collect();
        if entries.len() > 1 {
            return Err(ProcessError::SeveralEntries { fragment: frag.name.clone(), nodes: entries });
        }
        for n in &frag.nodes {
            if index.insert(n.id.clone(), nodes.len()).is_some() {
                return Err(ProcessError::DuplicateNode(n.id.clone()));
            }
            nodes.push(n.clone());
        }
    }
    let inits: Vec<String> = nodes.iter().filter(|n| n.init).map(|n| n.id.clone()).collect();
    let init = match inits.as_slice() {
        [] => return Err(ProcessError::NoInit),
        [one] => index[one],
        _ => return Err(ProcessError::SeveralInits(inits)),
    };

    let mut edges: Vec<Edge> = fragments.iter().flat_map(|f| f.edges.iter().cloned()).collect();
    let mut names = BTreeSet::new();
    for e in &edges {
        if !names.insert(e.name.clone()) {
            return Err(ProcessError::DuplicateEdge(e.name.clone()));
        }
        for end in [&e.from, &e.to] {
            if !index.contains_key(end) {
                return Err(ProcessError::UnknownNode { edge: e.name.clone(), node: end.clone() });
            }
        }
    }
    for m in nodes.iter().filter(|n| n.exit) {
        for n in nodes.iter().filter(|n| n.is_entry()) {
            let guard = n.entry_guard.clone().expect("entry node");
            let mut e = Edge::new(&format!("{}->{}", m.id, n.id), &m.id, &n.id, guard, Script::default(), sig);
            e.implicit = true;
            if !names.insert(e.name.clone()) {
                return Err(ProcessError::DuplicateEdge(e.name));
            }
            edges.push(e);
        }
    }
    for e in &edges {
        if e.guard.free_vars().iter().any(|v| v != sig.db()) {
            return Err(ProcessError::FreeVariables(e.name.clone()));
        }
    }

    let mut out = vec![Vec::new(); nodes.len()];
    for (i, e) in edges.iter().enumerate() {
        out[index[&e.from]].push(i);
    }
    for list in &mut out {
        list.sort_by(|&a, &b| (&edges[a].to, &edges[a].name).cmp(&(&edges[b].to, &edges[b].name)));
    }
    Ok(ProcessModel { nodes, init, edges, index, out })
}

/// A concrete state.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct State {
    pub node: usize,
    pub db: Value,
}

/// A transition that could not be taken because its script failed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub node: String,
    pub edge: String,
    pub error: EvalError,
}

/// Result of expanding one concrete state.
#[derive(Clone, Debug, Default)]
pub struct Successors {
    pub next: Vec<(usize, State)>,
    pub dropped: Vec<Diagnostic>,
}

/// Whether `guard` holds at database `db` given definitions `defs`.
pub fn guard_holds(guard: &Formula, db: &Value, defs: &[Definition], sig: &Signature) -> Result<bool, EvalError> {
    let mut env = Env::new().with_var(sig.db(), db.clone());
    eval_formula(guard, &mut env, defs)
}

/// Enabled transitions from a concrete state with their successors.
///
/// Guard evaluation errors propagate. A transition whose guard holds but
/// whose script fails is dropped and reported in `dropped`.
pub fn enabled_transitions(
    model: &ProcessModel,
    st: &State,
    defs: &[Definition],
    sig: &Signature,
) -> Result<Successors, EvalError> {
    let mut out = Successors::default();
    let mut env = Env::new().with_var(sig.db(), st.db.clone());
    for &e in model.outgoing(st.node) {
        let edge = model.edge(e);
        if !eval_formula(&edge.guard, &mut env, defs)? {
            continue;
        }
        match exec(&edge.script, &st.db, sig) {
            Ok(db) => out.next.push((e, State { node: model.target(e), db })),
            Err(error) => out.dropped.push(Diagnostic {
                node: model.node(st.node).id.clone(),
                edge: edge.name.clone(),
                error,
            }),
        }
    }
    Ok(out)
}

/// Symbolic successors of `(node, t)`: every outgoing edge with its guard
/// and update instantiated at `t`.
pub fn symbolic_successors(model: &ProcessModel, node: usize, t: &Term, sig: &Signature) -> Vec<(usize, Formula, Term)> {
    let mut map = BTreeMap::new();
    map.insert(sig.db().clone(), t.clone());
    model
        .outgoing(node)
        .iter()
        .map(|&e| {
            let edge = model.edge(e);
            (e, edge.guard.subst(&map), edge.update.subst(&map))
        })
        .collect()
}

/// A finite run: states joined by the edges taken.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Run {
    pub states: Vec<State>,
    pub edges: Vec<usize>,
}

impl Run {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// The suffix starting at position `i`.
    pub fn suffix(&self, i: usize) -> Run {
        Run { states: self.states[i..].to_vec(), edges: self.edges[i.min(self.edges.len())..].to_vec() }
    }

    pub fn node_ids<'m>(&self, model: &'m ProcessModel) -> Vec<&'m str> {
        self.states.iter().map(|s| model.node(s.node).id.as_str()).collect()
    }
}

/// Checks the run conditions: the run starts at the initial node, and each
/// step follows an edge whose guard holds and whose update yields the next
/// database.
pub fn validate_run(model: &ProcessModel, run: &Run, defs: &[Definition], sig: &Signature) -> Result<(), String> {
    let first = run.states.first().ok_or("empty run")?;
    if first.node != model.init() {
        return Err(format!("run starts at {}, not the init node", model.node(first.node).id));
    }
    if run.edges.len() + 1 != run.states.len() {
        return Err("edge count does not match state count".into());
    }
    for (i, &e) in run.edges.iter().enumerate() {
        let (s, t) = (&run.states[i], &run.states[i + 1]);
        let edge = model.edge(e);
        if model.node_index(&edge.from) != Some(s.node) || model.target(e) != t.node {
            return Err(format!("step {i}: edge {} does not connect the states", edge.name));
        }
        match guard_holds(&edge.guard, &s.db, defs, sig) {
            Ok(true) => {}
            Ok(false) => return Err(format!("step {i}: guard of {} is false", edge.name)),
            Err(err) => return Err(format!("step {i}: {err}")),
        }
        let env = Env::new().with_var(sig.db(), s.db.clone());
        match crate::eval::eval_term(&edge.update, &env) {
            Ok(v) if *v == t.db => {}
            Ok(_) => return Err(format!("step {i}: database does not match the update of {}", edge.name)),
            Err(err) => return Err(format!("step {i}: {err}")),
        }
    }
    Ok(())
}
