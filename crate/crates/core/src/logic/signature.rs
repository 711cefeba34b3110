use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::sort::{EnumSort, Sort};
use super::term::{Func, FuncDecl, FuncKind, Var};
use crate::json::{JsonType, TypeEnv, DB_TYPE};

/// Accessor and updator for one object field.
#[derive(Clone, Debug)]
pub struct FieldOps {
    pub field: String,
    pub sort: Sort,
    pub accessor: Func,
    pub updator: Func,
}

#[derive(Clone, Debug)]
pub struct ListOps {
    pub index: Func,
    pub update: Func,
    pub append: Func,
    pub length: Func,
}

#[derive(Clone, Debug)]
pub struct OptOps {
    pub some: Func,
    pub get: Func,
}

#[derive(Clone, Debug)]
pub struct Arith {
    pub add: Func,
    pub sub: Func,
    pub mul: Func,
    pub neg: Func,
}

/// The many-sorted signature induced by a type environment.
///
/// Every named object type `T` with field `f : τ` contributes an accessor
/// `f : T → τ` and an updator `upd_f : T × τ → T`. If several object types
/// share a field name, both symbols are qualified with the type name
/// (`T_f`, `upd_T_f`). Every list sort reachable from a field gets
/// `index`, `update`, `append` and `length`; every option sort gets `some`
/// and `get`.
#[derive(Clone, Debug)]
pub struct Signature {
    env: TypeEnv,
    named: BTreeMap<String, Sort>,
    objects: BTreeMap<String, Vec<FieldOps>>,
    lists: BTreeMap<Sort, ListOps>,
    opts: BTreeMap<Sort, OptOps>,
    arith: Arith,
    preds: BTreeMap<String, Vec<Sort>>,
    db: Var,
}

impl Signature {
    pub fn env(&self) -> &TypeEnv {
        &self.env
    }

    /// The distinguished database variable `db : DB`.
    pub fn db(&self) -> &Var {
        &self.db
    }

    pub fn db_sort(&self) -> &Sort {
        &self.db.sort
    }

    /// The sort denoted by a type name.
    pub fn named_sort(&self, name: &str) -> Option<&Sort> {
        self.named.get(name)
    }

    pub fn named_sorts(&self) -> impl Iterator<Item = (&str, &Sort)> {
        self.named.iter().map(|(k, v)| (k.as_str(), v))
    }

    /// Object types and their fields, in name order.
    pub fn objects(&self) -> impl Iterator<Item = (&str, &[FieldOps])> {
        self.objects.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    pub fn fields(&self, ty: &str) -> Option<&[FieldOps]> {
        self.objects.get(ty).map(Vec::as_slice)
    }

    pub fn field(&self, ty: &str, field: &str) -> Option<&FieldOps> {
        self.objects.get(ty)?.iter().find(|f| f.field == field)
    }

    pub fn list_ops(&self, elem: &Sort) -> Option<&ListOps> {
        self.lists.get(elem)
    }

    pub fn lists(&self) -> impl Iterator<Item = (&Sort, &ListOps)> {
        self.lists.iter()
    }

    pub fn opt_ops(&self, inner: &Sort) -> Option<&OptOps> {
        self.opts.get(inner)
    }

    pub fn opts(&self) -> impl Iterator<Item = (&Sort, &OptOps)> {
        self.opts.iter()
    }

    pub fn arith(&self) -> &Arith {
        &self.arith
    }

    /// Every sort mentioned by the signature, in canonical order.
    pub fn sorts(&self) -> BTreeSet<Sort> {
        let mut out = BTreeSet::new();
        out.insert(Sort::Int);
        out.insert(Sort::Bool);
        out.extend(self.named.values().cloned());
        for fs in self.objects.values() {
            out.extend(fs.iter().map(|f| f.sort.clone()));
        }
        out.extend(self.lists.keys().map(|e| Sort::list(e.clone())));
        out.extend(self.lists.keys().cloned());
        out.extend(self.opts.keys().map(|e| Sort::opt(e.clone())));
        out
    }

    /// All function symbols, keyed by their unique name.
    pub fn functions(&self) -> BTreeMap<String, Func> {
        let mut out = BTreeMap::new();
        let mut add = |f: &Func| {
            out.insert(f.name().to_string(), f.clone());
        };
        for fs in self.objects.values() {
            for f in fs {
                add(&f.accessor);
                add(&f.updator);
            }
        }
        for l in self.lists.values() {
            add(&l.index);
            add(&l.update);
            add(&l.append);
            add(&l.length);
        }
        for o in self.opts.values() {
            add(&o.some);
            add(&o.get);
        }
        for f in [&self.arith.add, &self.arith.sub, &self.arith.mul, &self.arith.neg] {
            add(f);
        }
        out
    }

    /// Declares a user predicate; redeclaration with the same arity is a no-op.
    pub fn declare_pred(&mut self, name: &str, args: Vec<Sort>) -> Result<(), String> {
        match self.preds.get(name) {
            Some(old) if *old != args => Err(format!("predicate {name} declared twice")),
            _ => {
                self.preds.insert(name.to_string(), args);
                Ok(())
            }
        }
    }

    pub fn pred(&self, name: &str) -> Option<&[Sort]> {
        self.preds.get(name).map(Vec::as_slice)
    }

    pub fn preds(&self) -> impl Iterator<Item = (&str, &[Sort])> {
        self.preds.iter().map(|(k, v)| (k.as_str(), v.as_slice()))
    }

    /// Sort of a JSON type expression under this signature.
    pub fn sort_of(&self, ty: &JsonType) -> Sort {
        sort_of(&self.named, ty)
    }

    /// A fresh uninterpreted constant, e.g. the unknown initial database.
    pub fn constant(name: &str, sort: Sort) -> Func {
        Func::new(FuncDecl {
            name: name.to_string(),
            display: name.to_string(),
            args: vec![],
            result: sort,
            kind: FuncKind::Constant,
        })
    }
}

fn sort_of(named: &BTreeMap<String, Sort>, ty: &JsonType) -> Sort {
    match ty {
        JsonType::Integer => Sort::Int,
        JsonType::Bool => Sort::Bool,
        JsonType::String => Sort::Str,
        JsonType::List(t) => Sort::list(sort_of(named, t)),
        JsonType::Option(t) => Sort::opt(sort_of(named, t)),
        JsonType::Named(n) => named[n].clone(),
        // Nested structural types are hoisted to names by `TypeEnv`.
        JsonType::Object(_) => Sort::obj("<anonymous>"),
        JsonType::Enum(members) => Sort::Enum(Arc::new(EnumSort {
            name: format!("Enum_{}", members.join("_")),
            members: members.clone(),
        })),
    }
}

fn func(name: String, display: &str, args: Vec<Sort>, result: Sort, kind: FuncKind) -> Func {
    Func::new(FuncDecl {
        name,
        display: display.to_string(),
        args,
        result,
        kind,
    })
}

/// Builds the signature for `env`.
pub fn derive_signature(env: &TypeEnv) -> Signature {
    // Named sorts: objects and enums name themselves; aliases resolve.
    let mut named: BTreeMap<String, Sort> = BTreeMap::new();
    let mut pending: Vec<&str> = env.names().collect();
    while !pending.is_empty() {
        let before = pending.len();
        pending.retain(|&name| {
            let ty = env.get(name).expect("listed name");
            let sort = match ty {
                JsonType::Object(_) => Some(Sort::obj(name)),
                JsonType::Enum(members) => Some(Sort::Enum(Arc::new(EnumSort {
                    name: name.to_string(),
                    members: members.clone(),
                }))),
                other => {
                    let mut refs = Vec::new();
                    named_refs(other, &mut refs);
                    refs.iter()
                        .all(|r| named.contains_key(*r))
                        .then(|| sort_of(&named, other))
                }
            };
            match sort {
                Some(s) => {
                    named.insert(name.to_string(), s);
                    false
                }
                None => true,
            }
        });
        assert!(pending.len() < before, "type environment is acyclic");
    }

    let mut owners: BTreeMap<&str, usize> = BTreeMap::new();
    for (_, ty) in env.iter() {
        if let JsonType::Object(fields) = ty {
            for f in fields.keys() {
                *owners.entry(f.as_str()).or_default() += 1;
            }
        }
    }

    let mut objects = BTreeMap::new();
    let mut field_sorts = BTreeSet::new();
    for (name, ty) in env.iter() {
        let JsonType::Object(fields) = ty else { continue };
        let obj = Sort::obj(name);
        let ops = fields
            .iter()
            .map(|(f, fty)| {
                let sort = sort_of(&named, fty);
                field_sorts.insert(sort.clone());
                let key = if owners[f.as_str()] > 1 { format!("{name}_{f}") } else { f.clone() };
                let kind_ty: Arc<str> = Arc::from(name);
                let kind_f: Arc<str> = Arc::from(f.as_str());
                FieldOps {
                    field: f.clone(),
                    sort: sort.clone(),
                    accessor: func(
                        key.clone(),
                        &key,
                        vec![obj.clone()],
                        sort.clone(),
                        FuncKind::Accessor { ty: kind_ty.clone(), field: kind_f.clone() },
                    ),
                    updator: func(
                        format!("upd_{key}"),
                        &format!("upd_{key}"),
                        vec![obj.clone(), sort],
                        obj.clone(),
                        FuncKind::Updator { ty: kind_ty, field: kind_f },
                    ),
                }
            })
            .collect();
        objects.insert(name.to_string(), ops);
    }

    let mut lists = BTreeMap::new();
    let mut opts = BTreeMap::new();
    let mut todo: Vec<Sort> = field_sorts.into_iter().collect();
    todo.extend(named.values().cloned());
    while let Some(s) = todo.pop() {
        match &s {
            Sort::List(e) => {
                let e = (**e).clone();
                if !lists.contains_key(&e) {
                    let m = e.mangle();
                    let ls = s.clone();
                    lists.insert(
                        e.clone(),
                        ListOps {
                            index: func(format!("index_{m}"), "index", vec![ls.clone(), Sort::Int], e.clone(), FuncKind::Index),
                            update: func(
                                format!("update_{m}"),
                                "update",
                                vec![ls.clone(), Sort::Int, e.clone()],
                                ls.clone(),
                                FuncKind::Update,
                            ),
                            append: func(format!("append_{m}"), "append", vec![ls.clone(), e.clone()], ls.clone(), FuncKind::Append),
                            length: func(format!("length_{m}"), "length", vec![ls], Sort::Int, FuncKind::Length),
                        },
                    );
                    todo.push(e);
                }
            }
            Sort::Opt(e) => {
                let e = (**e).clone();
                if !opts.contains_key(&e) {
                    let m = e.mangle();
                    opts.insert(
                        e.clone(),
                        OptOps {
                            some: func(format!("some_{m}"), "some", vec![e.clone()], s.clone(), FuncKind::Some),
                            get: func(format!("get_{m}"), "get", vec![s.clone()], e.clone(), FuncKind::Get),
                        },
                    );
                    todo.push(e);
                }
            }
            _ => {}
        }
    }

    let int2 = || vec![Sort::Int, Sort::Int];
    let arith = Arith {
        add: func("plus".into(), "+", int2(), Sort::Int, FuncKind::Add),
        sub: func("minus".into(), "-", int2(), Sort::Int, FuncKind::Sub),
        mul: func("times".into(), "*", int2(), Sort::Int, FuncKind::Mul),
        neg: func("negate".into(), "-", vec![Sort::Int], Sort::Int, FuncKind::Neg),
    };

    let db = Var::new("db", named[DB_TYPE].clone());
    Signature {
        env: env.clone(),
        named,
        objects,
        lists,
        opts,
        arith,
        preds: BTreeMap::new(),
        db,
    }
}

fn named_refs<'a>(ty: &'a JsonType, out: &mut Vec<&'a str>) {
    match ty {
        JsonType::Named(n) => out.push(n),
        JsonType::List(t) | JsonType::Option(t) => named_refs(t, out),
        JsonType::Object(fields) => fields.values().for_each(|t| named_refs(t, out)),
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::json::parse_type_defs;

    pub const PURCHASE_TYPES: &str = r#"
        DB = { order: List[Integer], stock: List[Stock], status: Status, gold: Bool }
        Stock = { item: Integer, available: Integer, price: Integer }
        Status = { open: List[Integer], value: Integer, paid: Bool,
                   shipped: Bool, final: Bool, completed: Bool }
    "#;

    fn fig2() -> Signature {
        derive_signature(&parse_type_defs(PURCHASE_TYPES).unwrap())
    }

    #[test]
    fn accessor_and_updator_for_paid() {
        let sig = fig2();
        let paid = sig.field("Status", "paid").unwrap();
        assert_eq!(paid.accessor.name(), "paid");
        assert_eq!(paid.accessor.args(), &[Sort::obj("Status")]);
        assert_eq!(*paid.accessor.result(), Sort::Bool);
        assert_eq!(paid.updator.name(), "upd_paid");
        assert_eq!(paid.updator.args(), &[Sort::obj("Status"), Sort::Bool]);
        assert_eq!(*paid.updator.result(), Sort::obj("Status"));
    }

    #[test]
    fn index_over_stock_list() {
        let sig = fig2();
        let ops = sig.list_ops(&Sort::obj("Stock")).unwrap();
        assert_eq!(ops.index.args(), &[Sort::list(Sort::obj("Stock")), Sort::Int]);
        assert_eq!(*ops.index.result(), Sort::obj("Stock"));
        // Reachable list sorts: List[Integer] (order, open) and List[Stock].
        let elems: Vec<_> = sig.lists().map(|(e, _)| e.clone()).collect();
        assert_eq!(elems, vec![Sort::Int, Sort::obj("Stock")]);
        assert_eq!(sig.db().sort, Sort::obj("DB"));
    }

    #[test]
    fn fieldless_object_has_no_field_symbols() {
        let sig = derive_signature(&parse_type_defs("DB = {}").unwrap());
        assert_eq!(sig.fields("DB").unwrap().len(), 0);
        let names: Vec<_> = sig.functions().into_keys().collect();
        assert_eq!(names, vec!["minus", "negate", "plus", "times"]);
    }

    #[test]
    fn shared_field_names_are_qualified() {
        let env = parse_type_defs("DB = { a: A, open: Integer }  A = { open: Bool }").unwrap();
        let sig = derive_signature(&env);
        assert_eq!(sig.field("DB", "open").unwrap().accessor.name(), "DB_open");
        assert_eq!(sig.field("A", "open").unwrap().updator.name(), "upd_A_open");
        assert_eq!(sig.field("DB", "a").unwrap().accessor.name(), "a");
    }

    #[test]
    fn aliases_and_enums() {
        let env = parse_type_defs(r#"DB = { c: Color, xs: Ints, o: Option[Color] } Ints = List[Integer] Color = EnumTy["r","g"]"#)
            .unwrap();
        let sig = derive_signature(&env);
        assert_eq!(*sig.named_sort("Ints").unwrap(), Sort::list(Sort::Int));
        let color = sig.named_sort("Color").unwrap().clone();
        assert!(matches!(&color, Sort::Enum(e) if e.members == ["r", "g"]));
        assert!(sig.opt_ops(&color).is_some());
        assert!(sig.list_ops(&Sort::Int).is_some());
    }
}
