//! Property tests over random scripts, formulas, models and values.

mod common;

use common::*;
use fragcheck::ctl::{nnf, parse_ctl};
use fragcheck::eval::{eval_formula, eval_term, Env};
use fragcheck::json::{parse_type_defs, JsonType};
use fragcheck::logic::parse_formula;
use fragcheck::process::{compose, validate_run, Edge, Fragment, Node, State};
use fragcheck::prover::{Prover, ProverConfig};
use fragcheck::script::{exec, parse_script, to_update_term};
use fragcheck::semantics::{eval_query, Checker};
use fragcheck::tableau::{check, GroundOracle, Mode};
use proptest::prelude::*;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

fn config() -> ProptestConfig {
    ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn exec_agrees_with_update_term(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let sig = small_sig();
        let text = script(&mut rng);
        let s = parse_script(&text, &sig).unwrap();
        let db = small_db(&mut rng);
        let direct = exec(&s, &db, &sig).unwrap();
        let env = Env::new().with_var(sig.db(), db);
        let term = to_update_term(&s, &sig);
        prop_assert_eq!(eval_term(&term, &env).unwrap().into_owned(), direct, "script `{}`", text);
    }

    #[test]
    fn guard_after_script_is_guard_of_update(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let sig = small_sig();
        let (g, st) = (guard(&mut rng), script(&mut rng));
        let f = parse_formula(&g, &sig).unwrap();
        let s = parse_script(&st, &sig).unwrap();
        let db = small_db(&mut rng);
        let after = exec(&s, &db, &sig).unwrap();
        let lhs = eval_formula(&f, &mut Env::new().with_var(sig.db(), after), &[]).unwrap();
        let pulled = f.subst1(sig.db(), &to_update_term(&s, &sig));
        let rhs = eval_formula(&pulled, &mut Env::new().with_var(sig.db(), db), &[]).unwrap();
        prop_assert_eq!(lhs, rhs, "guard `{}`, script `{}`", g, st);
    }

    #[test]
    fn nnf_preserves_truth(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let inst = instance(&mut rng);
        let text = state_formula(&mut rng, 3);
        let phi = parse_ctl(&text, &inst.sig).unwrap();
        let checker = Checker::new(&inst.model, &[], &inst.sig, rng.gen_range(0..=4));
        let st = State { node: inst.model.init(), db: inst.db.clone() };
        let a = checker.eval_state(&phi, &st, 0).unwrap();
        let b = checker.eval_state(&nnf(&phi), &st, 0).unwrap();
        prop_assert_eq!(a, b, "`{}`", text);
    }

    #[test]
    fn tableau_agrees_with_runs(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let inst = instance(&mut rng);
        let text = state_formula(&mut rng, 4);
        let bound = rng.gen_range(0..=5);
        let phi = prepared(&text, &inst.sig, &[]);
        let want = eval_query(&inst.model, &[], &inst.sig, &inst.db, &phi, bound).unwrap().holds;
        let (got, _) = check(&inst.model, &[], &inst.sig, &phi, &Mode::Concrete(inst.db.clone()), bound, &mut GroundOracle { defs: &[] });
        prop_assert!(if want { got.is_closed() } else { got.is_open() }, "`{}` at bound {}: {:?}", text, bound, got);
    }

    #[test]
    fn enumerated_runs_are_runs(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let inst = instance(&mut rng);
        let checker = Checker::new(&inst.model, &[], &inst.sig, rng.gen_range(0..=4));
        let start = State { node: inst.model.init(), db: inst.db.clone() };
        for run in checker.runs(&start, 0).unwrap().take(40) {
            let run = run.unwrap();
            prop_assert!(validate_run(&inst.model, &run, &[], &inst.sig).is_ok(), "{:?}", run);
            prop_assert_eq!(run.edges.len() + 1, run.states.len());
        }
    }

    #[test]
    fn composition_counts_and_ignores_order(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let sig = small_sig();
        let mut frags = Vec::new();
        let mut internal = 0;
        let (mut exits, mut entries) = (0, 0);
        for f in 0..rng.gen_range(1..=4) {
            let ids: Vec<String> = (0..rng.gen_range(1..=3)).map(|i| format!("f{f}n{i}")).collect();
            let nodes: Vec<Node> = ids
                .iter()
                .enumerate()
                .map(|(i, id)| Node {
                    init: f == 0 && i == 0,
                    exit: rng.gen_bool(0.4),
                    entry_guard: (f > 0 && i == 0).then(|| parse_formula(&atom(&mut rng), &sig).unwrap()),
                    ..Node::new(id)
                })
                .collect();
            exits += nodes.iter().filter(|n| n.exit).count();
            entries += nodes.iter().filter(|n| n.is_entry()).count();
            let edges: Vec<Edge> = (0..rng.gen_range(0..=3))
                .map(|k| {
                    let (a, b) = (ids.choose(&mut rng).unwrap(), ids.choose(&mut rng).unwrap());
                    let g = parse_formula(&guard(&mut rng), &sig).unwrap();
                    let s = parse_script(&script(&mut rng), &sig).unwrap();
                    Edge::new(&format!("f{f}e{k}"), a, b, g, s, &sig)
                })
                .collect();
            internal += edges.len();
            frags.push(Fragment { name: format!("F{f}"), nodes, edges });
        }
        let model = compose(&frags, &sig).unwrap();
        prop_assert_eq!(model.edges().len(), internal + exits * entries);
        prop_assert_eq!(model.edges().iter().filter(|e| e.implicit).count(), exits * entries);

        let mut shuffled = frags.clone();
        shuffled.shuffle(&mut rng);
        let other = compose(&shuffled, &sig).unwrap();
        let shape = |m: &fragcheck::process::ProcessModel| {
            let mut es: Vec<String> = m.edges().iter().map(|e| format!("{} {} {} {} {}", e.name, e.from, e.to, e.guard, e.implicit)).collect();
            es.sort();
            let mut ns: Vec<String> = m.nodes().iter().map(|n| n.id.clone()).collect();
            ns.sort();
            (es, ns, m.node(m.init()).id.clone())
        };
        prop_assert_eq!(shape(&model), shape(&other));
    }

    #[test]
    fn option_widening(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let env = parse_type_defs(&format!("DB = {{ t: {} }}", random_type(&mut rng, 3))).unwrap();
        let ty = env.db_type();
        let v = value_of_type(&ty, &env, &mut rng, 3);
        prop_assert!(env.check_type(&v, &ty), "{} : {}", v, ty);
        prop_assert!(env.check_type(&v, &JsonType::Option(Box::new(ty.clone()))), "{} : Option[{}]", v, ty);
    }

    #[test]
    fn tptp_emission_is_stable(seed in any::<u64>()) {
        let mut rng = StdRng::seed_from_u64(seed);
        let sig = small_sig();
        let fs: Vec<_> = (0..rng.gen_range(1..=4)).map(|_| parse_formula(&guard(&mut rng), &sig).unwrap()).collect();
        let a = Prover::new(ProverConfig::default(), &sig, &[]).problem("p", &fs);
        let b = Prover::new(ProverConfig::default(), &sig, &[]).problem("p", &fs);
        prop_assert_eq!(&a, &b);
        prop_assert!(a.lines().all(|l| l.is_empty() || l.starts_with('%') || l.starts_with("tff(") || l.starts_with("fof(") || l.starts_with(' ')), "{}", a);
    }
}
