use std::collections::{HashMap, HashSet};

use super::ast::{self, DomainAst, ProblemAst, ROOT_TYPE};
use super::sexpr::Loc;
use super::PddlError;
use crate::bat::*;

struct Interner {
    types: HashMap<String, TypeId>,
    preds: HashMap<String, PredId>,
    objects: HashMap<String, ObjId>,
}

impl Interner {
    fn pred(&self, name: &str) -> Result<PredId, PddlError> {
        self.preds
            .get(name)
            .copied()
            .ok_or_else(|| PddlError::UnknownPredicate {
                loc: Loc::default(),
                name: name.to_string(),
            })
    }

    fn object(&self, name: &str) -> Result<ObjId, PddlError> {
        self.objects
            .get(name)
            .copied()
            .ok_or_else(|| PddlError::UnknownConstant {
                loc: Loc::default(),
                name: name.to_string(),
            })
    }

    fn ty(&self, name: &str) -> Result<TypeId, PddlError> {
        self.types
            .get(name)
            .copied()
            .ok_or_else(|| PddlError::UnknownType {
                loc: Loc::default(),
                name: name.to_string(),
            })
    }
}

/// Compiles parsed ASTs into a [`PlanningTask`] under closed-world and
/// domain-closure assumptions, with plan-length bound `bound`.
pub fn compile(
    domain: &DomainAst,
    problem: &ProblemAst,
    bound: usize,
) -> Result<PlanningTask, PddlError> {
    let mut type_names = vec![ROOT_TYPE.to_string()];
    type_names.extend(domain.types.iter().map(|t| t.name.clone()));
    let types: HashMap<String, TypeId> = type_names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.clone(), TypeId(i as u32)))
        .collect();
    let mut interner = Interner {
        types,
        preds: HashMap::new(),
        objects: HashMap::new(),
    };
    let mut type_parent = vec![None];
    for t in &domain.types {
        type_parent.push(Some(interner.ty(&t.ty)?));
    }

    let mut object_names = Vec::new();
    let mut object_types = Vec::new();
    for o in domain.constants.iter().chain(&problem.objects) {
        if interner.objects.contains_key(&o.name) {
            return Err(PddlError::Duplicate {
                loc: Loc::default(),
                kind: "object",
                name: o.name.clone(),
            });
        }
        interner
            .objects
            .insert(o.name.clone(), ObjId(object_names.len() as u32));
        object_names.push(o.name.clone());
        object_types.push(interner.ty(&o.ty)?);
    }
    let universe = Universe::new(type_names, type_parent, object_names, object_types);

    let mut predicates = Vec::with_capacity(domain.predicates.len());
    for (i, p) in domain.predicates.iter().enumerate() {
        interner.preds.insert(p.name.clone(), PredId(i as u32));
        predicates.push(PredicateSig {
            name: p.name.clone(),
            params: p
                .params
                .iter()
                .map(|t| interner.ty(&t.ty))
                .collect::<Result<_, _>>()?,
        });
    }

    let schemas = domain
        .actions
        .iter()
        .map(|a| compile_action(a, &interner, &predicates))
        .collect::<Result<Vec<_>, _>>()?;

    let ground = |g: &ast::GroundAtomExpr| -> Result<Atom, PddlError> {
        let pred = interner.pred(&g.predicate)?;
        let expected = predicates[pred.index()].arity();
        if expected != g.args.len() {
            return Err(PddlError::ArityMismatch {
                loc: Loc::default(),
                name: g.predicate.clone(),
                expected,
                found: g.args.len(),
            });
        }
        Ok(Atom {
            pred,
            args: g
                .args
                .iter()
                .map(|a| interner.object(a))
                .collect::<Result<_, _>>()?,
        })
    };

    let mut init = State::new(predicates.len());
    for a in &problem.init {
        init.insert(ground(a)?);
    }
    let mut goal = problem
        .goal
        .iter()
        .map(ground)
        .collect::<Result<Vec<_>, _>>()?;
    goal.sort_unstable();
    goal.dedup();

    let addable: HashSet<PredId> = schemas
        .iter()
        .flat_map(|s| s.add.iter().map(|p| p.pred))
        .collect();
    let mut warnings = Vec::new();
    for g in &goal {
        if !init.contains(g) && !addable.contains(&g.pred) {
            warnings.push(format!(
                "goal atom on `{}` is false initially and no action adds it; the task is unsolvable",
                predicates[g.pred.index()].name
            ));
        }
    }
    for w in &warnings {
        log::warn!("{}: {w}", problem.name);
    }

    let schema_index = schemas
        .iter()
        .enumerate()
        .map(|(i, s)| (s.name.clone(), SchemaId(i as u32)))
        .collect();

    Ok(PlanningTask {
        domain_name: domain.name.clone(),
        problem_name: problem.name.clone(),
        predicates,
        universe,
        schemas,
        init,
        goal,
        bound,
        warnings,
        pred_index: interner.preds,
        schema_index,
        object_index: interner.objects,
    })
}

fn compile_action(
    action: &ast::ActionDef,
    interner: &Interner,
    predicates: &[PredicateSig],
) -> Result<ActionSchema, PddlError> {
    let vars: HashMap<&str, usize> = action
        .parameters
        .iter()
        .enumerate()
        .map(|(i, p)| (p.name.as_str(), i))
        .collect();
    let term = |t: &ast::Term| -> Result<Term, PddlError> {
        match t {
            ast::Term::Var(v) => vars.get(v.as_str()).map(|&i| Term::Var(i)).ok_or_else(|| {
                PddlError::UnknownVariable {
                    loc: Loc::default(),
                    name: v.clone(),
                }
            }),
            ast::Term::Const(c) => interner.object(c).map(Term::Const),
        }
    };
    let pattern = |a: &ast::AtomExpr| -> Result<AtomPattern, PddlError> {
        let pred = interner.pred(&a.predicate)?;
        let expected = predicates[pred.index()].arity();
        if expected != a.args.len() {
            return Err(PddlError::ArityMismatch {
                loc: Loc::default(),
                name: a.predicate.clone(),
                expected,
                found: a.args.len(),
            });
        }
        Ok(AtomPattern {
            pred,
            args: a.args.iter().map(term).collect::<Result<_, _>>()?,
        })
    };

    let mut precond_pos = Vec::new();
    let mut precond_neq = Vec::new();
    for lit in &action.precondition {
        if lit.is_inequality() {
            precond_neq.push((term(&lit.atom.args[0])?, term(&lit.atom.args[1])?));
        } else if lit.positive {
            let p = pattern(&lit.atom)?;
            if !precond_pos.contains(&p) {
                precond_pos.push(p);
            }
        } else {
            return Err(PddlError::Unsupported {
                loc: Loc::default(),
                construct: ":negative-preconditions".into(),
            });
        }
    }

    let mut add: Vec<AtomPattern> = Vec::new();
    for a in &action.add {
        let p = pattern(a)?;
        if !add.contains(&p) {
            add.push(p);
        }
    }
    // An atom both added and deleted ends up true, so it leaves the delete set.
    let mut del: Vec<AtomPattern> = Vec::new();
    for d in &action.del {
        let p = pattern(d)?;
        if !add.contains(&p) && !del.contains(&p) {
            del.push(p);
        }
    }

    Ok(ActionSchema {
        name: action.name.clone(),
        params: action
            .parameters
            .iter()
            .map(|p| {
                Ok(Param {
                    name: p.name.clone(),
                    ty: interner.ty(&p.ty)?,
                })
            })
            .collect::<Result<_, PddlError>>()?,
        precond_pos,
        precond_neq,
        add,
        del,
    })
}
