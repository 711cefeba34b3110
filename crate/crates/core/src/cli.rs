//! The command-line interface: argument parsing, the five commands, and
//! their JSON reports.
//!
//! Exit codes: 0 the property holds (or the check passed), 1 it fails,
//! 2 undecided, 3 usage or load error.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value as Json};

use crate::ctl::{expand_query, parse_ctl, quantified_query, Ctl};
use crate::json::Value;
use crate::process::{ProcessModel, Run, State};
use crate::prover::{axioms_for, tptp_emit, Backend, Problem, Prover, ProverConfig};
use crate::semantics::Checker;
use crate::spec::{load_database, load_spec_file, LoadError, Specification};
use crate::tableau::{DbState, GroundOracle, Mode, RunStep, SatVerdict, Stats, Tableau, TableauResult};

pub const DEFAULT_DEPTH: usize = 10;

pub const EXIT_HOLDS: i32 = 0;
pub const EXIT_FAILS: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_ERROR: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "fragcheck", version, about = "Bounded model checking of data-centric business processes")]
pub struct Cli {
    /// Indent the JSON report.
    #[arg(long, global = true)]
    pub pretty: bool,
    /// Emit compact JSON (the default).
    #[arg(long, global = true, conflicts_with = "pretty")]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check that the specification is well formed and the database has type DB.
    Typecheck {
        spec: PathBuf,
        /// Database file; defaults to the database in the specification.
        #[arg(long)]
        db: Option<PathBuf>,
    },
    /// Enumerate the runs from the initial database.
    Simulate {
        spec: PathBuf,
        #[arg(long)]
        db: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_DEPTH)]
        max_steps: usize,
        /// Number of runs listed in the report.
        #[arg(long, default_value_t = 50)]
        max_runs: usize,
    },
    /// Check a query from a concrete initial database.
    Check {
        spec: PathBuf,
        #[arg(long)]
        db: Option<PathBuf>,
        #[arg(long, short)]
        query: String,
        #[arg(long, default_value_t = DEFAULT_DEPTH)]
        depth: usize,
        /// Use the run-enumerating evaluator instead of the tableau.
        #[arg(long)]
        oracle: bool,
        /// Include the tableau rule applications in the report.
        #[arg(long)]
        trace: bool,
    },
    /// Check a query for every initial database.
    Verify {
        spec: PathBuf,
        #[arg(long, short)]
        query: String,
        #[arg(long, default_value_t = DEFAULT_DEPTH)]
        depth: usize,
        /// External prover command, with `{file}` for the problem file.
        #[arg(long)]
        prover: Option<String>,
        /// Only write the proof obligations to this directory.
        #[arg(long)]
        emit_tptp: Option<PathBuf>,
        #[arg(long, value_enum)]
        backend: Option<BackendArg>,
        /// Per-obligation prover timeout in seconds.
        #[arg(long, default_value_t = 10)]
        timeout: u64,
        #[arg(long)]
        trace: bool,
    },
    /// Print the TPTP axioms of the data types and definitions.
    EmitAxioms { spec: PathBuf },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum BackendArg {
    Ground,
    External,
    Auto,
}

/// What a command produced: the report, its exit code, and raw text for
/// commands that print something other than JSON.
#[derive(Debug)]
pub struct Outcome {
    pub report: Json,
    pub code: i32,
    pub text: Option<String>,
}

fn outcome(report: Json, code: i32) -> Outcome {
    Outcome { report, code, text: None }
}

fn verdict_code(verdict: &str) -> i32 {
    match verdict {
        "holds" | "pass" => EXIT_HOLDS,
        "fails" => EXIT_FAILS,
        _ => EXIT_UNKNOWN,
    }
}

fn error_report(command: &str, e: &LoadError) -> Outcome {
    outcome(json!({ "command": command, "verdict": "error", "error": { "pointer": e.pointer, "message": e.message } }), EXIT_ERROR)
}

fn plain_error(command: &str, message: String) -> Outcome {
    outcome(json!({ "command": command, "verdict": "error", "error": { "message": message } }), EXIT_ERROR)
}

fn millis(d: Duration) -> f64 {
    d.as_secs_f64() * 1000.0
}

fn database(spec: &Specification, db: &Option<PathBuf>) -> Result<Value, LoadError> {
    match db {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| LoadError { pointer: String::new(), message: format!("{}: {e}", path.display()) })?;
            let j: Json = serde_json::from_str(&text)
                .map_err(|e| LoadError { pointer: String::new(), message: format!("invalid JSON: {e}") })?;
            load_database(&j, &spec.types, "")
        }
        None => spec
            .database
            .clone()
            .ok_or_else(|| LoadError { pointer: "/database".into(), message: "no database given".into() }),
    }
}

/// The query with constraints folded in.
pub fn prepare_query(spec: &Specification, text: &str) -> Result<Ctl, LoadError> {
    let q = parse_ctl(text, &spec.sig).map_err(|e| LoadError { pointer: "query".into(), message: e.to_string() })?;
    Ok(expand_query(&quantified_query(&q).0, &spec.constraints))
}

pub fn run_json(model: &ProcessModel, run: &Run) -> Json {
    json!({
        "nodes": run.node_ids(model),
        "edges": run.edges.iter().map(|&e| model.edge(e).name.clone()).collect::<Vec<_>>(),
        "databases": run.states.iter().map(|s| s.db.to_serde()).collect::<Vec<_>>(),
    })
}

pub fn steps_json(model: &ProcessModel, run: &[RunStep]) -> Json {
    json!({
        "nodes": run.iter().map(|s| model.node(s.node).id.clone()).collect::<Vec<_>>(),
        "edges": run.iter().filter_map(|s| s.via).map(|e| model.edge(e).name.clone()).collect::<Vec<_>>(),
        "databases": run.iter().map(|s| match &s.db {
            DbState::Ground(v) => v.to_serde(),
            DbState::Symbolic(t) => Json::String(t.to_string()),
        }).collect::<Vec<_>>(),
    })
}

fn verdict_json(v: &SatVerdict) -> Json {
    match v {
        SatVerdict::Unsat => json!("unsat"),
        SatVerdict::Sat { .. } => json!("sat"),
        SatVerdict::Unknown { reason } => json!(format!("unknown: {reason}")),
    }
}

fn trace_json(stats: &Stats) -> Json {
    stats.trace.iter().map(|l| json!({ "depth": l.depth, "rule": l.rule, "node": l.node })).collect()
}

/// Fills verdict, run and condition fields from a tableau result.
fn tableau_fields(report: &mut Json, model: &ProcessModel, result: &TableauResult) {
    let r = report.as_object_mut().expect("object report");
    match result {
        TableauResult::Closed => {
            r.insert("verdict".into(), json!("holds"));
        }
        TableauResult::Open { run, initial_condition, witness, .. } => {
            r.insert("verdict".into(), json!("fails"));
            r.insert("run".into(), steps_json(model, run));
            let cond: Vec<String> = initial_condition.iter().map(|f| f.to_string()).collect();
            r.insert("initial_condition".into(), json!(cond));
            if let Some(w) = witness {
                r.insert("initial_database".into(), w.to_serde());
            }
        }
        TableauResult::Unknown { obligations } => {
            r.insert("verdict".into(), json!("unknown"));
            let open: Vec<Vec<String>> = obligations.iter().map(|fs| fs.iter().map(|f| f.to_string()).collect()).collect();
            r.insert("undecided".into(), json!(open));
        }
    }
}

fn typecheck(spec_path: &Path, db: &Option<PathBuf>) -> Outcome {
    let spec = match load_spec_file(spec_path) {
        Ok(s) => s,
        Err(e) if e.pointer.starts_with("/database") => {
            return outcome(
                json!({ "command": "typecheck", "verdict": "fails", "errors": [{ "pointer": e.pointer, "message": e.message }] }),
                EXIT_FAILS,
            )
        }
        Err(e) => return error_report("typecheck", &e),
    };
    let mut report = json!({
        "command": "typecheck",
        "spec": spec.name,
        "nodes": spec.model.nodes().len(),
        "edges": spec.model.edges().len(),
        "definitions": spec.defs.len(),
        "constraints": spec.constraints.len(),
    });
    let verdict = match database(&spec, db) {
        Ok(_) => "pass",
        Err(e) if db.is_none() && spec.database.is_none() => {
            report["note"] = json!(e.message);
            "pass"
        }
        Err(e) => {
            report["errors"] = json!([{ "pointer": e.pointer, "message": e.message }]);
            "fails"
        }
    };
    report["verdict"] = json!(verdict);
    outcome(report, verdict_code(verdict))
}

fn simulate(spec: &Specification, db: Value, max_steps: usize, max_runs: usize) -> Outcome {
    let start = Instant::now();
    let checker = Checker::new(&spec.model, &spec.defs, &spec.sig, max_steps);
    let st = State { node: spec.model.init(), db };
    let runs = match checker.runs(&st, 0) {
        Ok(r) => r,
        Err(e) => return plain_error("simulate", e.to_string()),
    };
    let mut listed = Vec::new();
    let mut total = 0usize;
    for r in runs {
        let r = match r {
            Ok(r) => r,
            Err(e) => return plain_error("simulate", e.to_string()),
        };
        total += 1;
        if listed.len() < max_runs {
            let mut j = run_json(&spec.model, &r);
            if r.edges.len() < max_steps {
                j["note"] = json!("stuck");
            }
            listed.push(j);
        }
    }
    let diags: Vec<Json> = checker
        .diagnostics()
        .iter()
        .map(|d| json!({ "node": d.node, "edge": d.edge, "error": d.error.to_string() }))
        .collect();
    outcome(
        json!({
            "command": "simulate",
            "verdict": "pass",
            "depth": max_steps,
            "runs": listed,
            "run_count": total,
            "truncated": total > listed.len(),
            "diagnostics": diags,
            "timing": { "millis": millis(start.elapsed()) },
        }),
        EXIT_HOLDS,
    )
}

fn check(spec: &Specification, db: Value, query: &str, depth: usize, oracle: bool, trace: bool) -> Outcome {
    let phi = match prepare_query(spec, query) {
        Ok(p) => p,
        Err(e) => return error_report("check", &e),
    };
    let start = Instant::now();
    let mut report = json!({ "command": "check", "query": query, "depth": depth, "engine": if oracle { "oracle" } else { "tableau" } });
    if oracle {
        let checker = Checker::new(&spec.model, &spec.defs, &spec.sig, depth);
        match checker.eval_query(&phi, &db) {
            Ok(v) => {
                report["verdict"] = json!(if v.holds { "holds" } else { "fails" });
                if let Some(w) = &v.witness {
                    report["run"] = run_json(&spec.model, w);
                }
            }
            Err(e) => {
                report["verdict"] = json!("unknown");
                report["reason"] = json!(e.to_string());
            }
        }
    } else {
        let mut t = Tableau::new(&spec.model, &spec.defs, &spec.sig, depth);
        t.trace = trace;
        let root = t.initial_node(&phi, &Mode::Concrete(db));
        let (result, stats) = t.saturate(root, &mut GroundOracle { defs: &spec.defs });
        tableau_fields(&mut report, &spec.model, &result);
        report["tableau_nodes"] = json!(stats.nodes);
        if trace {
            report["trace"] = trace_json(&stats);
        }
    }
    report["timing"] = json!({ "millis": millis(start.elapsed()) });
    let code = verdict_code(report["verdict"].as_str().unwrap_or("unknown"));
    outcome(report, code)
}

#[allow(clippy::too_many_arguments)]
fn verify(
    spec: &Specification,
    query: &str,
    depth: usize,
    prover: Option<String>,
    emit: Option<PathBuf>,
    backend: Option<BackendArg>,
    timeout: u64,
    trace: bool,
) -> Outcome {
    let phi = match prepare_query(spec, query) {
        Ok(p) => p,
        Err(e) => return error_report("verify", &e),
    };
    let mut cfg = ProverConfig { spec_name: spec.name.clone(), timeout: Duration::from_secs(timeout), ..ProverConfig::default() }.with_env();
    if prover.is_some() {
        cfg.command = prover;
    }
    cfg.backend = match (backend, &emit) {
        (Some(BackendArg::Ground), _) => Backend::Ground,
        (Some(BackendArg::External), _) => Backend::External,
        (Some(BackendArg::Auto), _) => Backend::Auto,
        (None, Some(_)) => Backend::EmitOnly,
        (None, None) if cfg.command.is_some() => Backend::Auto,
        (None, None) => Backend::Ground,
    };
    cfg.out_dir = emit;
    let start = Instant::now();
    let mut p = Prover::new(cfg, &spec.sig, &spec.defs);
    let mut t = Tableau::new(&spec.model, &spec.defs, &spec.sig, depth);
    t.trace = trace;
    let root = t.initial_node(&phi, &Mode::Symbolic);
    let (result, stats) = t.saturate(root, &mut p);
    let mut report = json!({ "command": "verify", "query": query, "depth": depth, "backend": format!("{:?}", p.cfg.backend).to_lowercase() });
    tableau_fields(&mut report, &spec.model, &result);
    let obligations: Vec<Json> = p
        .log
        .iter()
        .map(|o| json!({ "name": o.name, "file": o.file.as_ref().map(|f| f.display().to_string()), "verdict": verdict_json(&o.verdict) }))
        .collect();
    report["obligation_count"] = json!(obligations.len());
    report["obligations"] = json!(obligations);
    report["tableau_nodes"] = json!(stats.nodes);
    if trace {
        report["trace"] = trace_json(&stats);
    }
    report["timing"] = json!({ "millis": millis(start.elapsed()) });
    let code = verdict_code(report["verdict"].as_str().unwrap_or("unknown"));
    outcome(report, code)
}

/// TPTP text of the type axioms and definitions of a specification.
pub fn axioms_text(spec: &Specification) -> String {
    let axioms = axioms_for(&spec.sig);
    tptp_emit(&Problem { name: &spec.name, sig: &spec.sig, defs: &spec.defs, axioms: &axioms, formulas: &[] })
}

/// Runs one command.
pub fn execute(cli: &Cli) -> Outcome {
    let load = |path: &PathBuf, name: &str| load_spec_file(path).map_err(|e| error_report(name, &e));
    let with_db = |spec: &Specification, db: &Option<PathBuf>, name: &str| database(spec, db).map_err(|e| error_report(name, &e));
    let result = match &cli.command {
        Command::Typecheck { spec, db } => Ok(typecheck(spec, db)),
        Command::Simulate { spec, db, max_steps, max_runs } => load(spec, "simulate")
            .and_then(|s| with_db(&s, db, "simulate").map(|d| simulate(&s, d, *max_steps, *max_runs))),
        Command::Check { spec, db, query, depth, oracle, trace } => {
            load(spec, "check").and_then(|s| with_db(&s, db, "check").map(|d| check(&s, d, query, *depth, *oracle, *trace)))
        }
        Command::Verify { spec, query, depth, prover, emit_tptp, backend, timeout, trace } => load(spec, "verify")
            .map(|s| verify(&s, query, *depth, prover.clone(), emit_tptp.clone(), *backend, *timeout, *trace)),
        Command::EmitAxioms { spec } => load(spec, "emit-axioms").map(|s| {
            let text = axioms_text(&s);
            Outcome { report: json!({ "command": "emit-axioms", "verdict": "pass" }), code: EXIT_HOLDS, text: Some(text) }
        }),
    };
    result.unwrap_or_else(|e| e)
}

/// Renders a report.
pub fn render(report: &Json, pretty: bool) -> String {
    if pretty {
        serde_json::to_string_pretty(report).expect("serializable")
    } else {
        report.to_string()
    }
}
