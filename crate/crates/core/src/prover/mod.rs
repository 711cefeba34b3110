//! Satisfiability oracles for classical formula sets.
//!
//! The ground backend evaluates formulas over candidate initial databases
//! and refutes the linear integer part of the problem; the external backend
//! writes a TPTP problem and runs a prover on it.

mod axioms;
mod external;
mod search;
mod simplify;
mod tptp;

use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::time::Duration;

pub use axioms::{axioms_for, list_axioms, object_axioms, option_axioms, Axiom};
pub use external::{command_line, szs_status, verdict_of};
pub use simplify::{refute, simplify, simplify_term};
pub use tptp::{emit as tptp_emit, Problem};

use crate::eval::{eval_formula, Env};
use crate::json::Value;
use crate::logic::{expand_definitions, Definition, Formula, Signature};
pub use crate::tableau::{Oracle, SatVerdict};
use crate::tableau::INITIAL_DB;

/// Environment variable naming the external prover command.
pub const PROVER_ENV: &str = "FRAGCHECK_PROVER";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    Ground,
    External,
    /// Ground first; undecided obligations go to the external prover.
    Auto,
    /// Only write obligation files.
    EmitOnly,
}

#[derive(Clone, Debug)]
pub struct ProverConfig {
    /// Command template with a `{file}` placeholder.
    pub command: Option<String>,
    pub timeout: Duration,
    /// Where obligation files go; a temporary directory when unset.
    pub out_dir: Option<PathBuf>,
    pub backend: Backend,
    /// Prefix of obligation file names.
    pub spec_name: String,
}

impl Default for ProverConfig {
    fn default() -> ProverConfig {
        ProverConfig {
            command: None,
            timeout: Duration::from_secs(10),
            out_dir: None,
            backend: Backend::Ground,
            spec_name: "spec".into(),
        }
    }
}

impl ProverConfig {
    /// Applies the `FRAGCHECK_PROVER` override.
    pub fn with_env(mut self) -> ProverConfig {
        if let Ok(cmd) = std::env::var(PROVER_ENV) {
            if !cmd.trim().is_empty() {
                self.command = Some(cmd);
            }
        }
        self
    }
}

/// Ground backend: simplification, refutation of the linear part, then a
/// search for an initial database satisfying every formula.
pub fn ground_check(formulas: &[Formula], defs: &[Definition], sig: &Signature) -> SatVerdict {
    let mut simplified = Vec::new();
    for f in formulas {
        let e = match expand_definitions(f, defs) {
            Ok(e) => e,
            Err(e) => return SatVerdict::Unknown { reason: e.to_string() },
        };
        match simplify(&e, defs) {
            Formula::True => {}
            Formula::False => return SatVerdict::Unsat,
            g => simplified.push(g),
        }
    }
    if simplified.is_empty() {
        return SatVerdict::Sat { witness: None };
    }
    if refute(&simplified) {
        return SatVerdict::Unsat;
    }
    let env = sig.env();
    let domains = search::Domains::for_formulas(&simplified);
    let (candidates, exhaustive) = search::values(&env.db_type(), env, &domains);
    let mut ev = Env::new();
    for db in &candidates {
        ev.set_const(INITIAL_DB, db.clone());
        if simplified.iter().all(|f| eval_formula(f, &mut ev, defs) == Ok(true)) {
            return SatVerdict::Sat { witness: Some(db.clone()) };
        }
    }
    if exhaustive {
        return SatVerdict::Unsat;
    }
    SatVerdict::Unknown { reason: format!("no refutation and no witness among {} candidates", candidates.len()) }
}

/// A record of one oracle call.
#[derive(Clone, Debug)]
pub struct Obligation {
    pub name: String,
    pub file: Option<PathBuf>,
    pub verdict: SatVerdict,
}

/// The configured oracle for unrestricted checking.
pub struct Prover<'a> {
    pub cfg: ProverConfig,
    sig: &'a Signature,
    defs: &'a [Definition],
    axioms: Vec<Axiom>,
    seq: BTreeMap<usize, usize>,
    pub log: Vec<Obligation>,
}

impl<'a> Prover<'a> {
    pub fn new(cfg: ProverConfig, sig: &'a Signature, defs: &'a [Definition]) -> Prover<'a> {
        Prover { cfg, sig, defs, axioms: axioms_for(sig), seq: BTreeMap::new(), log: Vec::new() }
    }

    /// TPTP text for an obligation.
    pub fn problem(&self, name: &str, formulas: &[Formula]) -> String {
        tptp_emit(&Problem { name, sig: self.sig, defs: self.defs, axioms: &self.axioms, formulas })
    }

    fn write(&self, name: &str, formulas: &[Formula]) -> Result<PathBuf, String> {
        let dir = self
            .cfg
            .out_dir
            .clone()
            .unwrap_or_else(|| std::env::temp_dir().join(format!("fragcheck-{}", std::process::id())));
        fs::create_dir_all(&dir).map_err(|e| format!("{}: {e}", dir.display()))?;
        let path = dir.join(format!("{name}.p"));
        fs::write(&path, self.problem(name, formulas)).map_err(|e| format!("{}: {e}", path.display()))?;
        Ok(path)
    }

    fn external(&self, name: &str, formulas: &[Formula]) -> (Option<PathBuf>, SatVerdict) {
        let Some(cmd) = self.cfg.command.clone() else {
            return (None, SatVerdict::Unknown { reason: "no external prover configured".into() });
        };
        match self.write(name, formulas) {
            Ok(path) => {
                let v = external::run(&cmd, &path, self.cfg.timeout);
                (Some(path), v)
            }
            Err(e) => (None, SatVerdict::Unknown { reason: e }),
        }
    }
}

impl Oracle for Prover<'_> {
    fn check(&mut self, formulas: &[Formula], branch: usize) -> SatVerdict {
        let seq = self.seq.entry(branch).or_default();
        let name = format!("{}_{}_{}", self.cfg.spec_name, branch, *seq);
        *seq += 1;
        let (file, verdict) = match self.cfg.backend {
            Backend::Ground => (None, ground_check(formulas, self.defs, self.sig)),
            Backend::External => self.external(&name, formulas),
            Backend::Auto => match ground_check(formulas, self.defs, self.sig) {
                SatVerdict::Unknown { .. } => self.external(&name, formulas),
                v => (None, v),
            },
            Backend::EmitOnly => match self.write(&name, formulas) {
                Ok(p) => (Some(p), SatVerdict::Unknown { reason: "emitted".into() }),
                Err(e) => (None, SatVerdict::Unknown { reason: e }),
            },
        };
        self.log.push(Obligation { name, file, verdict: verdict.clone() });
        verdict
    }
}

/// Evaluates a closed formula with the initial constant bound to `db`.
pub fn holds_at(f: &Formula, db: &Value, defs: &[Definition]) -> bool {
    let mut env = Env::new();
    env.set_const(INITIAL_DB, db.clone());
    eval_formula(f, &mut env, defs) == Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::json::{parse_type_defs, parse_value};
    use crate::logic::{derive_signature, parse_formula, Term};

    fn setup() -> (Signature, Term) {
        let sig = derive_signature(&parse_type_defs("DB = { x: Integer, b: Bool }").unwrap());
        let c = Term::app(&Signature::constant(INITIAL_DB, sig.db_sort().clone()), vec![]);
        (sig, c)
    }

    fn at(text: &str, sig: &Signature, c: &Term) -> Formula {
        parse_formula(text, sig).unwrap().subst1(sig.db(), c)
    }

    #[test]
    fn arithmetic_identity_is_sat() {
        let (sig, c) = setup();
        assert!(matches!(ground_check(&[at("1 + 1 = 2", &sig, &c)], &[], &sig), SatVerdict::Sat { .. }));
    }

    #[test]
    fn negative_start_has_a_witness() {
        let (sig, c) = setup();
        let v = ground_check(&[at("db.x < 0", &sig, &c)], &[], &sig);
        let SatVerdict::Sat { witness: Some(w) } = v else { panic!("{v:?}") };
        assert!(w.get("x").unwrap().as_int().unwrap() < 0);
        assert!(holds_at(&at("db.x < 0", &sig, &c), &w, &[]));
    }

    #[test]
    fn contradiction_is_unsat() {
        let (sig, c) = setup();
        let fs = [at("db.x >= 0", &sig, &c), at("db.x < 0", &sig, &c)];
        assert_eq!(ground_check(&fs, &[], &sig), SatVerdict::Unsat);
    }

    #[test]
    fn unreachable_value_is_unknown() {
        let (sig, c) = setup();
        let v = ground_check(&[at("db.x * db.x = 1000000", &sig, &c)], &[], &sig);
        assert!(matches!(v, SatVerdict::Unknown { .. }), "{v:?}");
    }

    #[test]
    fn emit_only_writes_named_files() {
        let (sig, c) = setup();
        let dir = tempfile::tempdir().unwrap();
        let cfg = ProverConfig {
            backend: Backend::EmitOnly,
            out_dir: Some(dir.path().to_path_buf()),
            spec_name: "dec".into(),
            ..ProverConfig::default()
        };
        let mut p = Prover::new(cfg, &sig, &[]);
        let f = at("db.x < 0", &sig, &c);
        assert!(matches!(p.check(std::slice::from_ref(&f), 0), SatVerdict::Unknown { .. }));
        p.check(&[f], 0);
        assert!(dir.path().join("dec_0_0.p").exists());
        assert!(dir.path().join("dec_0_1.p").exists());
        let _ = parse_value("{}");
    }
}
