use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::elab::Elaborator;
use super::signature::Signature;
use super::syntax::{parse_expr, BoolOp, Expr, ExprKind, FormulaError};
use super::term::{Formula, Pred, Var};

/// `∀ x:s . p(x) ⇔ φ[x]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Definition {
    pub name: String,
    pub params: Vec<Var>,
    pub body: Formula,
}

impl Definition {
    /// The definition as a closed formula.
    pub fn to_formula(&self) -> Formula {
        let head = Formula::Pred(
            Pred::User(Arc::from(self.name.as_str())),
            self.params.iter().map(super::term::Term::var).collect(),
        );
        self.params
            .iter()
            .rev()
            .fold(Formula::iff(head, self.body.clone()), |acc, v| Formula::forall(v.clone(), acc))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DefinitionError {
    #[error("definition {index}: {source}")]
    Formula {
        index: usize,
        #[source]
        source: FormulaError,
    },
    #[error("definition {index} is not of the form `forall x:s . p(x) <=> body`")]
    Shape { index: usize },
    #[error("predicate {0} is defined more than once")]
    Duplicate(String),
    #[error("definitions are recursive through {0}")]
    Recursive(String),
    #[error("predicate {name} applied to {got} arguments, expects {expected}")]
    Arity { name: String, expected: usize, got: usize },
}

/// Splits `forall x1:s1, ... . p(x1, ...) <=> body` into its parts.
fn split_head(e: &Expr) -> Option<(Vec<(String, crate::json::JsonType)>, String, Vec<String>, &Expr)> {
    let mut vars = Vec::new();
    let mut cur = e;
    while let ExprKind::Quant { forall: true, vars: vs, body } = &cur.kind {
        vars.extend(vs.iter().cloned());
        cur = body;
    }
    let ExprKind::Bool2(BoolOp::Iff, head, body) = &cur.kind else { return None };
    let ExprKind::Call(name, args) = &head.kind else { return None };
    let params = args
        .iter()
        .map(|a| match &a.kind {
            ExprKind::Ident(n) => Some(n.clone()),
            _ => None,
        })
        .collect::<Option<Vec<_>>>()?;
    Some((vars, name.clone(), params, body))
}

/// Parses definitions, declaring their predicates in `sig`.
///
/// A head parameter that is not quantified must be `db`, which then ranges
/// over the database sort. Bodies may use any defined predicate; recursion
/// is rejected.
pub fn parse_definitions(texts: &[&str], sig: &mut Signature) -> Result<Vec<Definition>, DefinitionError> {
    let mut heads = Vec::new();
    for (index, text) in texts.iter().enumerate() {
        let e = parse_expr(text, false).map_err(|source| DefinitionError::Formula { index, source })?;
        let (vars, name, params, _) = split_head(&e).ok_or(DefinitionError::Shape { index })?;
        let el = Elaborator::closed(sig);
        let mut pvars = Vec::new();
        for p in &params {
            let var = match vars.iter().find(|(n, _)| n == p) {
                Some((n, ty)) => Var::new(n, el.resolve_type(ty, e.pos).map_err(|source| DefinitionError::Formula { index, source })?),
                None if p == "db" => sig.db().clone(),
                None => return Err(DefinitionError::Shape { index }),
            };
            pvars.push(var);
        }
        let distinct: BTreeSet<_> = params.iter().collect();
        if distinct.len() != params.len() || vars.len() > params.len() {
            return Err(DefinitionError::Shape { index });
        }
        if heads.iter().any(|(_, n, _): &(Expr, String, Vec<Var>)| *n == name) {
            return Err(DefinitionError::Duplicate(name));
        }
        sig.declare_pred(&name, pvars.iter().map(|v| v.sort.clone()).collect())
            .map_err(|_| DefinitionError::Duplicate(name.clone()))?;
        heads.push((e, name, pvars));
    }
    let mut defs = Vec::new();
    for (index, (e, name, params)) in heads.into_iter().enumerate() {
        let (_, _, _, body) = split_head(&e).expect("checked above");
        let mut el = Elaborator::closed(sig);
        let body = el
            .with_vars(&params, |el| el.formula(body))
            .map_err(|source| DefinitionError::Formula { index, source })?;
        defs.push(Definition { name, params, body });
    }
    check_acyclic(&defs)?;
    Ok(defs)
}

fn check_acyclic(defs: &[Definition]) -> Result<(), DefinitionError> {
    let uses: BTreeMap<&str, BTreeSet<Arc<str>>> = defs
        .iter()
        .map(|d| {
            let mut out = BTreeSet::new();
            d.body.user_preds_into(&mut out);
            (d.name.as_str(), out)
        })
        .collect();
    fn visit<'a>(
        n: &'a str,
        uses: &'a BTreeMap<&str, BTreeSet<Arc<str>>>,
        state: &mut BTreeMap<&'a str, u8>,
    ) -> Result<(), DefinitionError> {
        match state.get(n) {
            Some(2) => return Ok(()),
            Some(_) => return Err(DefinitionError::Recursive(n.to_string())),
            None => {}
        }
        state.insert(n, 1);
        if let Some(next) = uses.get(n) {
            for m in next {
                visit(m, uses, state)?;
            }
        }
        state.insert(n, 2);
        Ok(())
    }
    let mut state = BTreeMap::new();
    for d in defs {
        visit(&d.name, &uses, &mut state)?;
    }
    Ok(())
}

/// Replaces every defined predicate application by the instantiated body.
///
/// Definitions must be acyclic, so the result mentions no defined predicate.
pub fn expand_definitions(f: &Formula, defs: &[Definition]) -> Result<Formula, DefinitionError> {
    Ok(match f {
        Formula::True | Formula::False | Formula::Eq(..) => f.clone(),
        Formula::Pred(Pred::User(name), args) => match defs.iter().find(|d| *d.name == **name) {
            Some(d) => {
                if d.params.len() != args.len() {
                    return Err(DefinitionError::Arity {
                        name: d.name.clone(),
                        expected: d.params.len(),
                        got: args.len(),
                    });
                }
                let map = d.params.iter().cloned().zip(args.iter().cloned()).collect();
                expand_definitions(&d.body.subst(&map), defs)?
            }
            None => f.clone(),
        },
        Formula::Pred(..) => f.clone(),
        Formula::Not(g) => Formula::Not(Box::new(expand_definitions(g, defs)?)),
        Formula::And(a, b) => Formula::and(expand_definitions(a, defs)?, expand_definitions(b, defs)?),
        Formula::Or(a, b) => Formula::or(expand_definitions(a, defs)?, expand_definitions(b, defs)?),
        Formula::Implies(a, b) => Formula::implies(expand_definitions(a, defs)?, expand_definitions(b, defs)?),
        Formula::Iff(a, b) => Formula::iff(expand_definitions(a, defs)?, expand_definitions(b, defs)?),
        Formula::Forall(v, g) => Formula::forall(v.clone(), expand_definitions(g, defs)?),
        Formula::Exists(v, g) => Formula::exists(v.clone(), expand_definitions(g, defs)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::json::parse_type_defs;
    use crate::logic::{derive_signature, parse_formula};

    const TYPES: &str = r#"
        DB = { order: List[Integer], status: Status, gold: Bool }
        Status = { open: List[Integer], paid: Bool, shipped: Bool }
    "#;

    const DEFS: [&str; 3] = [
        "forall s:Status . (completed(s) <=> (s.paid = true && s.shipped = true))",
        "forall db:DB . (acceptable(db) <=> (~isEmpty(db.order)))",
        "forall s:Status . (readyToShip(s) <=> (isEmpty(s.open)))",
    ];

    fn setup() -> (Signature, Vec<Definition>) {
        let mut sig = derive_signature(&parse_type_defs(TYPES).unwrap());
        let defs = parse_definitions(&DEFS, &mut sig).unwrap();
        (sig, defs)
    }

    #[test]
    fn acceptable_expands_to_nonempty_order() {
        let (sig, defs) = setup();
        let f = parse_formula("acceptable(db)", &sig).unwrap();
        assert_eq!(expand_definitions(&f, &defs).unwrap().to_string(), "~isEmpty(order(db))");
    }

    #[test]
    fn completed_of_status_expands() {
        let (sig, defs) = setup();
        let f = parse_formula("completed(db.status)", &sig).unwrap();
        let g = expand_definitions(&f, &defs).unwrap();
        assert_eq!(g.to_string(), "paid(status(db)) = true && shipped(status(db)) = true");
        assert_eq!(expand_definitions(&g, &defs).unwrap(), g);
        assert!(g.well_sorted());
    }

    #[test]
    fn formula_without_defined_predicates_is_unchanged() {
        let (sig, defs) = setup();
        let f = parse_formula("db.gold = true", &sig).unwrap();
        assert_eq!(expand_definitions(&f, &defs).unwrap(), f);
    }

    #[test]
    fn recursion_is_rejected() {
        let mut sig = derive_signature(&parse_type_defs(TYPES).unwrap());
        let texts = ["forall d:DB . (p(d) <=> q(d))", "forall d:DB . (q(d) <=> ~p(d))"];
        assert!(matches!(parse_definitions(&texts, &mut sig), Err(DefinitionError::Recursive(_))));
    }

    #[test]
    fn duplicate_and_malformed() {
        let mut sig = derive_signature(&parse_type_defs(TYPES).unwrap());
        let texts = ["forall d:DB . (p(d) <=> true)", "forall d:DB . (p(d) <=> false)"];
        assert!(matches!(parse_definitions(&texts, &mut sig), Err(DefinitionError::Duplicate(_))));
        let mut sig = derive_signature(&parse_type_defs(TYPES).unwrap());
        assert!(matches!(parse_definitions(&["p(x) => true"], &mut sig), Err(DefinitionError::Shape { .. })));
    }

    #[test]
    fn closed_form_round_trip() {
        let (_, defs) = setup();
        let f = defs[0].to_formula();
        assert!(f.free_vars().is_empty());
        let Formula::Forall(v, _) = &f else { panic!() };
        assert_eq!(&*v.name, "s");
    }
}
