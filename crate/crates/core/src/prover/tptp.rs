//! TPTP typed first-order form (TFF) with integer arithmetic.
//!
//! Booleans, strings and enumerations are uninterpreted sorts with one
//! constant per literal, so they can appear as function arguments.
//! Literal lists become `append` chains over a `nil` constant and literal
//! objects a constructor with accessor axioms. The problem lists the query
//! formulas as axioms and conjectures `$false`: a `Theorem` answer means
//! the formulas are unsatisfiable.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use super::axioms::Axiom;
use crate::json::Value;
use crate::logic::{sanitize, Definition, Formula, Func, FuncKind, Pred, Signature, Sort, Term, Var};

/// Symbol names for one problem.
struct Names {
    used: BTreeSet<String>,
    funcs: BTreeMap<String, String>,
    preds: BTreeMap<String, String>,
}

impl Names {
    /// `wanted`, or `fn_wanted` if that is taken by a sort or literal.
    fn claim_symbol(&mut self, wanted: String) -> String {
        if self.used.contains(&wanted) {
            self.claim(format!("fn_{wanted}"))
        } else {
            self.claim(wanted)
        }
    }

    fn claim(&mut self, wanted: String) -> String {
        let mut name = wanted.clone();
        let mut k = 1;
        while !self.used.insert(name.clone()) {
            k += 1;
            name = format!("{wanted}_{k}");
        }
        name
    }
}

fn sort_name(s: &Sort) -> String {
    match s {
        Sort::Int => "$int".into(),
        other => other.mangle(),
    }
}

/// Lowercase alphanumeric rendering of arbitrary text.
fn word(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' }).collect()
}

fn var_name(v: &Var) -> String {
    let tail: String = v.name.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect();
    format!("X{tail}")
}

fn signature_of(args: &[Sort], result: &str) -> String {
    match args {
        [] => result.to_string(),
        [a] => format!("{} > {result}", sort_name(a)),
        many => format!("({}) > {result}", many.iter().map(sort_name).collect::<Vec<_>>().join(" * ")),
    }
}

/// Everything a problem mentions besides the signature itself.
#[derive(Default)]
struct Extra {
    constants: BTreeSet<Func>,
    strings: BTreeSet<String>,
    objects: BTreeSet<String>,
}

fn scan_term(t: &Term, x: &mut Extra) {
    match t {
        Term::Var(_) => {}
        Term::Lit(v, s) => scan_value(v, s, x),
        Term::App(f, args) => {
            if *f.kind() == FuncKind::Constant {
                x.constants.insert(f.clone());
            }
            args.iter().for_each(|a| scan_term(a, x));
        }
    }
}

fn scan_value(v: &Value, s: &Sort, x: &mut Extra) {
    match (v, s) {
        (Value::Str(text), Sort::Str) => {
            x.strings.insert(text.clone());
        }
        (Value::Array(items), Sort::List(e)) => items.iter().for_each(|i| scan_value(i, e, x)),
        (Value::Null, _) => {}
        (v, Sort::Opt(inner)) => scan_value(v, inner, x),
        (Value::Object(fields), Sort::Obj(ty)) => {
            x.objects.insert(ty.to_string());
            // Field sorts are looked up when rendering; strings inside are
            // collected there too.
            for fv in fields.values() {
                scan_loose(fv, x);
            }
        }
        _ => {}
    }
}

/// Strings anywhere inside an object literal.
fn scan_loose(v: &Value, x: &mut Extra) {
    match v {
        Value::Str(s) => {
            x.strings.insert(s.clone());
        }
        Value::Array(items) => items.iter().for_each(|i| scan_loose(i, x)),
        Value::Object(m) => m.values().for_each(|i| scan_loose(i, x)),
        _ => {}
    }
}

/// Object types whose literals occur, including nested ones.
fn literal_objects(sig: &Signature, roots: &BTreeSet<String>) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut todo: Vec<String> = roots.iter().cloned().collect();
    while let Some(ty) = todo.pop() {
        if !out.insert(ty.clone()) {
            continue;
        }
        for f in sig.fields(&ty).unwrap_or(&[]) {
            let mut s = &f.sort;
            while let Sort::List(e) | Sort::Opt(e) = s {
                s = e;
            }
            if let Sort::Obj(n) = s {
                todo.push(n.to_string());
            }
        }
    }
    out
}

struct Emitter<'a> {
    sig: &'a Signature,
    names: Names,
    strings: BTreeMap<String, String>,
    members: BTreeMap<(String, String), String>,
}

impl Emitter<'_> {
    fn func(&self, f: &Func) -> String {
        self.names.funcs.get(f.name()).cloned().unwrap_or_else(|| sanitize(f.name()))
    }

    fn value(&self, v: &Value, s: &Sort) -> String {
        match (v, s) {
            (Value::Int(i), _) => i.to_string(),
            (Value::Bool(b), _) => format!("bool_{b}"),
            (Value::Str(text), Sort::Str) => self.strings[text].clone(),
            (Value::Str(m), Sort::Enum(_)) => self.members[&(s.mangle(), m.clone())].clone(),
            (Value::Null, Sort::Opt(_)) => format!("none_{}", s.mangle()),
            (v, Sort::Opt(inner)) => {
                let some = &self.sig.opt_ops(inner).expect("option sort").some;
                format!("{}({})", self.func(some), self.value(v, inner))
            }
            (Value::Array(items), Sort::List(e)) => {
                let append = &self.sig.list_ops(e).expect("list sort").append;
                let append = self.func(append);
                items.iter().fold(format!("nil_{}", s.mangle()), |acc, it| format!("{append}({acc}, {})", self.value(it, e)))
            }
            (Value::Object(fields), Sort::Obj(ty)) => {
                let ops = self.sig.fields(ty).unwrap_or(&[]);
                if ops.is_empty() {
                    return format!("mk_{}", s.mangle());
                }
                let args: Vec<String> = ops.iter().map(|f| self.value(&fields[&f.field], &f.sort)).collect();
                format!("mk_{}({})", s.mangle(), args.join(", "))
            }
            (v, s) => panic!("value {v} does not have sort {s}"),
        }
    }

    fn term(&self, t: &Term) -> String {
        match t {
            Term::Var(v) => var_name(v),
            Term::Lit(v, s) => self.value(v, s),
            Term::App(f, args) => {
                let args: Vec<String> = args.iter().map(|a| self.term(a)).collect();
                let head = match f.kind() {
                    FuncKind::Add => "$sum".to_string(),
                    FuncKind::Sub => "$difference".to_string(),
                    FuncKind::Mul => "$product".to_string(),
                    FuncKind::Neg => "$uminus".to_string(),
                    _ => self.func(f),
                };
                if args.is_empty() {
                    head
                } else {
                    format!("{head}({})", args.join(", "))
                }
            }
        }
    }

    fn pred(&self, p: &Pred, args: &[Term]) -> String {
        let head = match p {
            Pred::Gt => "$greater".to_string(),
            Pred::Ge => "$greatereq".to_string(),
            Pred::Lt => "$less".to_string(),
            Pred::Le => "$lesseq".to_string(),
            Pred::IsEmpty => format!("is_empty_{}", args[0].sort().mangle()),
            Pred::Mem => format!("mem_{}", args[1].sort().mangle()),
            Pred::IsNull => format!("is_null_{}", args[0].sort().mangle()),
            Pred::User(n) => self.names.preds[&**n].clone(),
        };
        let args: Vec<String> = args.iter().map(|a| self.term(a)).collect();
        format!("{head}({})", args.join(", "))
    }

    fn formula(&self, f: &Formula) -> String {
        match f {
            Formula::True => "$true".into(),
            Formula::False => "$false".into(),
            Formula::Eq(a, b) => format!("{} = {}", self.term(a), self.term(b)),
            Formula::Pred(p, args) => self.pred(p, args),
            Formula::Not(g) => match &**g {
                Formula::Eq(a, b) => format!("{} != {}", self.term(a), self.term(b)),
                g => format!("~ {}", self.wrapped(g)),
            },
            Formula::And(a, b) => format!("{} & {}", self.wrapped(a), self.wrapped(b)),
            Formula::Or(a, b) => format!("{} | {}", self.wrapped(a), self.wrapped(b)),
            Formula::Implies(a, b) => format!("{} => {}", self.wrapped(a), self.wrapped(b)),
            Formula::Iff(a, b) => format!("{} <=> {}", self.wrapped(a), self.wrapped(b)),
            Formula::Forall(v, g) => format!("! [{}: {}] : {}", var_name(v), sort_name(&v.sort), self.wrapped(g)),
            Formula::Exists(v, g) => format!("? [{}: {}] : {}", var_name(v), sort_name(&v.sort), self.wrapped(g)),
        }
    }

    fn wrapped(&self, f: &Formula) -> String {
        match f {
            Formula::True | Formula::False | Formula::Pred(..) => self.formula(f),
            _ => format!("({})", self.formula(f)),
        }
    }
}

/// A problem to emit: query formulas over the signature, with the
/// definitions and type axioms as background.
pub struct Problem<'a> {
    pub name: &'a str,
    pub sig: &'a Signature,
    pub defs: &'a [Definition],
    pub axioms: &'a [Axiom],
    pub formulas: &'a [Formula],
}

/// Renders a problem in TFF. Output depends only on the input.
pub fn emit(p: &Problem) -> String {
    let sig = p.sig;
    let mut extra = Extra::default();
    let all: Vec<&Formula> = p.formulas.iter().chain(p.axioms.iter().map(|a| &a.formula)).collect();
    let def_formulas: Vec<Formula> = p.defs.iter().map(Definition::to_formula).collect();
    for f in all.iter().copied().chain(def_formulas.iter()) {
        f.for_each_atom_term(&mut |t| scan_term(t, &mut extra));
    }
    let objects = literal_objects(sig, &extra.objects);

    let sorts = sig.sorts();
    let mut names = Names { used: BTreeSet::new(), funcs: BTreeMap::new(), preds: BTreeMap::new() };
    for s in &sorts {
        names.used.insert(sort_name(s));
    }
    names.used.insert("bool".into());
    names.used.extend(["bool_true".to_string(), "bool_false".to_string()]);

    let mut out = String::new();
    let _ = writeln!(out, "% {}", p.name);
    let mut sort_decls: BTreeSet<String> = sorts.iter().filter(|s| **s != Sort::Int).map(sort_name).collect();
    sort_decls.insert("bool".into());
    if !extra.strings.is_empty() {
        sort_decls.insert("string".into());
    }
    for s in &sort_decls {
        let _ = writeln!(out, "tff({s}_type, type, {s}: $tType).");
    }

    let mut decls: Vec<(String, String)> = vec![
        ("bool_false".into(), "bool".into()),
        ("bool_true".into(), "bool".into()),
    ];
    // Derived names are claimed first; functions and predicates are looked
    // up through maps, so only they may be renamed on a clash.
    let mut members = BTreeMap::new();
    for s in &sorts {
        match s {
            Sort::Enum(e) => {
                for m in &e.members {
                    let n = names.claim(format!("{}_{}", s.mangle(), word(m)));
                    members.insert((s.mangle(), m.clone()), n.clone());
                    decls.push((n, s.mangle()));
                }
            }
            Sort::List(e) => {
                decls.push((names.claim(format!("nil_{}", s.mangle())), s.mangle()));
                decls.push((names.claim(format!("is_empty_{}", s.mangle())), signature_of(std::slice::from_ref(s), "$o")));
                decls.push((names.claim(format!("mem_{}", s.mangle())), signature_of(&[(**e).clone(), s.clone()], "$o")));
            }
            Sort::Opt(_) => {
                decls.push((names.claim(format!("none_{}", s.mangle())), s.mangle()));
                decls.push((names.claim(format!("is_null_{}", s.mangle())), signature_of(std::slice::from_ref(s), "$o")));
            }
            _ => {}
        }
    }
    for ty in &objects {
        let s = Sort::obj(ty);
        let args: Vec<Sort> = sig.fields(ty).unwrap_or(&[]).iter().map(|f| f.sort.clone()).collect();
        decls.push((names.claim(format!("mk_{}", s.mangle())), signature_of(&args, &s.mangle())));
    }
    let mut strings = BTreeMap::new();
    for text in &extra.strings {
        let n = names.claim(format!("str_{}", word(text)));
        strings.insert(text.clone(), n.clone());
        decls.push((n, "string".into()));
    }
    // Functions of the signature; arithmetic is built in.
    let mut funcs: Vec<Func> = sig
        .functions()
        .into_values()
        .filter(|f| !matches!(f.kind(), FuncKind::Add | FuncKind::Sub | FuncKind::Mul | FuncKind::Neg))
        .collect();
    funcs.extend(extra.constants.iter().cloned());
    for f in &funcs {
        let n = names.claim_symbol(sanitize(f.name()));
        names.funcs.insert(f.name().to_string(), n.clone());
        decls.push((n, signature_of(f.args(), &sort_name(f.result()))));
    }
    for (name, args) in sig.preds() {
        let n = names.claim_symbol(sanitize(name));
        names.preds.insert(name.to_string(), n.clone());
        decls.push((n, signature_of(args, "$o")));
    }
    decls.sort();
    for (n, ty) in &decls {
        let _ = writeln!(out, "tff({n}_decl, type, {n}: {ty}).");
    }

    let em = Emitter { sig, names, strings, members };
    let axiom = |out: &mut String, name: &str, body: String| {
        let _ = writeln!(out, "tff({name}, axiom, {body}).");
    };
    for a in p.axioms {
        axiom(&mut out, &sanitize(&a.name), em.formula(&a.formula));
    }
    for s in &sorts {
        match s {
            Sort::List(_) => {
                let m = s.mangle();
                let len = em.func(&sig.list_ops(s.list_elem().unwrap()).unwrap().length);
                axiom(&mut out, &format!("{m}_length_nil"), format!("{len}(nil_{m}) = 0"));
            }
            Sort::Opt(_) => {
                let m = s.mangle();
                axiom(&mut out, &format!("{m}_is_null"), format!("! [X: {m}] : (is_null_{m}(X) <=> X = none_{m})"));
            }
            _ => {}
        }
    }
    for ty in &objects {
        let s = Sort::obj(ty);
        let ops = sig.fields(ty).unwrap_or(&[]);
        let vars: Vec<String> = (0..ops.len()).map(|i| format!("X{i}")).collect();
        let binder: Vec<String> = ops.iter().zip(&vars).map(|(f, v)| format!("{v}: {}", sort_name(&f.sort))).collect();
        for (f, v) in ops.iter().zip(&vars) {
            axiom(
                &mut out,
                &format!("mk_{}_{}", s.mangle(), em.func(&f.accessor)),
                format!("! [{}] : ({}(mk_{}({})) = {v})", binder.join(", "), em.func(&f.accessor), s.mangle(), vars.join(", ")),
            );
        }
    }
    if strings_distinct(&em.strings).is_some() {
        axiom(&mut out, "strings_distinct", strings_distinct(&em.strings).unwrap());
    }
    for (d, f) in p.defs.iter().zip(&def_formulas) {
        axiom(&mut out, &format!("def_{}", sanitize(&d.name)), em.formula(f));
    }
    for (i, f) in p.formulas.iter().enumerate() {
        axiom(&mut out, &format!("obligation_{i}"), em.formula(f));
    }
    let _ = writeln!(out, "tff(goal, conjecture, $false).");
    out
}

fn strings_distinct(strings: &BTreeMap<String, String>) -> Option<String> {
    let consts: Vec<&String> = strings.values().collect();
    let mut parts = Vec::new();
    for (i, a) in consts.iter().enumerate() {
        for b in &consts[i + 1..] {
            parts.push(format!("{a} != {b}"));
        }
    }
    (!parts.is_empty()).then(|| parts.join(" & "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::json::parse_type_defs;
    use crate::logic::{derive_signature, parse_formula};
    use crate::prover::axioms::axioms_for;

    #[test]
    fn emits_declarations_axioms_and_goal() {
        let sig = derive_signature(&parse_type_defs("Status = { paid: Bool, value: Integer }\nDB = { status: Status }").unwrap());
        let f = parse_formula("db.status.value > 3 && db.status.paid = true", &sig).unwrap();
        let db0 = Term::app(&Signature::constant("db0", sig.db_sort().clone()), vec![]);
        let f = f.subst1(sig.db(), &db0);
        let ax = axioms_for(&sig);
        let text = emit(&Problem { name: "t", sig: &sig, defs: &[], axioms: &ax, formulas: &[f] });
        assert!(text.contains("tff(status_type, type, status: $tType)."), "{text}");
        assert!(text.contains("tff(db0_decl, type, db0: db)."), "{text}");
        assert!(text.contains("tff(upd_paid_paid, axiom, ! [XO: status] : (! [XV: bool] : (paid(upd_paid(XO, XV)) = XV)))."), "{text}");
        assert!(text.contains("tff(obligation_0, axiom, $greater(value(fn_status(db0)), 3) & (paid(fn_status(db0)) = bool_true))."), "{text}");
        assert!(text.ends_with("tff(goal, conjecture, $false).\n"));
        let again = emit(&Problem { name: "t", sig: &sig, defs: &[], axioms: &ax, formulas: &[] });
        assert_eq!(again, emit(&Problem { name: "t", sig: &sig, defs: &[], axioms: &ax, formulas: &[] }));
    }

    #[test]
    fn literals_get_constants() {
        let sig = derive_signature(&parse_type_defs("DB = { xs: List[Integer], name: String, o: Option[Integer] }").unwrap());
        let f = parse_formula("db.xs = [1, 2] && db.name = \"ab\" && db.o = null", &sig).unwrap();
        let text = emit(&Problem { name: "t", sig: &sig, defs: &[], axioms: &[], formulas: &[f] });
        assert!(text.contains("append_int(append_int(nil_list_int, 1), 2)"), "{text}");
        assert!(text.contains("tff(str_ab_decl, type, str_ab: string)."), "{text}");
        assert!(text.contains("none_opt_int"), "{text}");
    }
}
