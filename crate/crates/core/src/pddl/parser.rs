use std::collections::{HashMap, HashSet};

use super::ast::*;
use super::sexpr::{parse_one, Loc, SExpr};
use super::PddlError;

const SUPPORTED_REQUIREMENTS: &[&str] = &[":strips", ":typing", ":equality"];

fn malformed(loc: Loc, msg: impl Into<String>) -> PddlError {
    PddlError::Malformed {
        loc,
        msg: msg.into(),
    }
}

fn unsupported(loc: Loc, construct: impl Into<String>) -> PddlError {
    PddlError::Unsupported {
        loc,
        construct: construct.into(),
    }
}

fn expect_list<'a>(e: &'a SExpr, what: &str) -> Result<&'a [SExpr], PddlError> {
    e.as_list()
        .ok_or_else(|| malformed(e.loc(), format!("expected a list for {what}")))
}

fn expect_atom<'a>(e: &'a SExpr, what: &str) -> Result<&'a str, PddlError> {
    e.as_atom()
        .ok_or_else(|| malformed(e.loc(), format!("expected a name for {what}")))
}

fn check_identifier(e: &SExpr, what: &str) -> Result<String, PddlError> {
    let s = expect_atom(e, what)?;
    if s.starts_with('?') || s.starts_with(':') || s == "-" {
        return Err(malformed(e.loc(), format!("`{s}` is not a valid {what}")));
    }
    Ok(s.to_string())
}

/// Splits `(define (<kind> NAME) sections...)` into its name and sections.
fn define_header<'a>(top: &'a SExpr, kind: &str) -> Result<(String, &'a [SExpr]), PddlError> {
    let items = expect_list(top, "define")?;
    if items.first().and_then(SExpr::as_atom) != Some("define") {
        return Err(malformed(top.loc(), "expected (define ...)"));
    }
    let header = items
        .get(1)
        .ok_or_else(|| malformed(top.loc(), format!("missing ({kind} <name>)")))?;
    let h = expect_list(header, kind)?;
    if h.len() != 2 || h[0].as_atom() != Some(kind) {
        return Err(malformed(header.loc(), format!("expected ({kind} <name>)")));
    }
    Ok((check_identifier(&h[1], kind)?, &items[2..]))
}

/// Parses `a b - t c d - u e` into typed names; untyped trailing names get the root type.
fn parse_typed_list(items: &[SExpr], variables: bool) -> Result<Vec<TypedName>, PddlError> {
    let mut out = Vec::new();
    let mut pending: Vec<String> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let e = &items[i];
        if e.as_atom() == Some("-") {
            let ty_expr = items
                .get(i + 1)
                .ok_or_else(|| malformed(e.loc(), "missing type after '-'"))?;
            if ty_expr.head() == Some("either") {
                return Err(unsupported(ty_expr.loc(), "either"));
            }
            let ty = check_identifier(ty_expr, "type")?;
            if pending.is_empty() {
                return Err(malformed(e.loc(), "'-' without preceding names"));
            }
            out.extend(pending.drain(..).map(|n| TypedName::new(n, ty.clone())));
            i += 2;
            continue;
        }
        let name = expect_atom(e, "typed list entry")?;
        if variables {
            let v = name
                .strip_prefix('?')
                .filter(|v| !v.is_empty())
                .ok_or_else(|| malformed(e.loc(), format!("expected a variable, got `{name}`")))?;
            pending.push(v.to_string());
        } else {
            pending.push(check_identifier(e, "name")?);
        }
        i += 1;
    }
    out.extend(pending.into_iter().map(|n| TypedName::new(n, ROOT_TYPE)));
    Ok(out)
}

fn unsupported_section(key: &str) -> Option<&'static str> {
    Some(match key {
        ":functions" => ":numeric-fluents",
        ":derived" => ":derived-predicates",
        ":axiom" => ":axioms",
        ":durative-action" => ":durative-actions",
        ":constraints" => ":constraints",
        ":metric" => ":plan-metric",
        ":timed-initial-literals" => ":timed-initial-literals",
        _ => return None,
    })
}

/// Parses a PDDL domain restricted to STRIPS with typing and negated equality.
pub fn parse_domain(text: &str) -> Result<DomainAst, PddlError> {
    let top = parse_one(text)?;
    let (name, sections) = define_header(&top, "domain")?;
    let mut domain = DomainAst {
        name,
        ..Default::default()
    };
    let mut action_exprs = Vec::new();

    for section in sections {
        let items = expect_list(section, "domain section")?;
        let key = items
            .first()
            .and_then(SExpr::as_atom)
            .ok_or_else(|| malformed(section.loc(), "expected a section keyword"))?;
        match key {
            ":requirements" => {
                for r in &items[1..] {
                    let r_name = expect_atom(r, "requirement")?;
                    if !SUPPORTED_REQUIREMENTS.contains(&r_name) {
                        return Err(unsupported(r.loc(), r_name));
                    }
                    domain.requirements.push(r_name.to_string());
                }
            }
            ":types" => {
                for t in parse_typed_list(&items[1..], false)? {
                    if t.name != ROOT_TYPE {
                        domain.types.push(t);
                    }
                }
            }
            ":constants" => domain
                .constants
                .extend(parse_typed_list(&items[1..], false)?),
            ":predicates" => {
                for p in &items[1..] {
                    let pl = expect_list(p, "predicate declaration")?;
                    let pname = pl
                        .first()
                        .ok_or_else(|| malformed(p.loc(), "empty predicate declaration"))
                        .and_then(|e| check_identifier(e, "predicate"))?;
                    domain.predicates.push(PredicateDef {
                        name: pname,
                        params: parse_typed_list(&pl[1..], true)?,
                    });
                }
            }
            ":action" => action_exprs.push(section),
            other => {
                return Err(match unsupported_section(other) {
                    Some(c) => unsupported(section.loc(), c),
                    None => malformed(section.loc(), format!("unknown domain section `{other}`")),
                })
            }
        }
    }

    check_domain_declarations(&domain, &top)?;
    let hierarchy = TypeHierarchy::from_domain(&domain);
    let preds: HashMap<&str, &PredicateDef> = domain
        .predicates
        .iter()
        .map(|p| (p.name.as_str(), p))
        .collect();
    let constants: HashMap<&str, &str> = domain
        .constants
        .iter()
        .map(|c| (c.name.as_str(), c.ty.as_str()))
        .collect();
    let ctx = DomainContext {
        hierarchy: &hierarchy,
        preds: &preds,
        constants: &constants,
    };
    let mut actions = Vec::new();
    let mut seen = HashSet::new();
    for a in action_exprs {
        let action = ctx.parse_action(a)?;
        if !seen.insert(action.name.clone()) {
            return Err(PddlError::Duplicate {
                loc: a.loc(),
                kind: "action",
                name: action.name,
            });
        }
        actions.push(action);
    }
    domain.actions = actions;
    Ok(domain)
}

fn check_domain_declarations(domain: &DomainAst, top: &SExpr) -> Result<(), PddlError> {
    let loc = top.loc();
    let mut types = HashSet::new();
    for t in &domain.types {
        if !types.insert(t.name.as_str()) {
            return Err(PddlError::Duplicate {
                loc,
                kind: "type",
                name: t.name.clone(),
            });
        }
    }
    let hierarchy = TypeHierarchy::from_domain(domain);
    let known = |ty: &str| -> Result<(), PddlError> {
        if hierarchy.contains(ty) {
            Ok(())
        } else {
            Err(PddlError::UnknownType {
                loc,
                name: ty.to_string(),
            })
        }
    };
    for t in &domain.types {
        known(&t.ty)?;
        // a type must not be its own strict ancestor
        if t.ty != ROOT_TYPE && hierarchy.is_subtype(&t.ty, &t.name) {
            return Err(malformed(
                loc,
                format!("cyclic type hierarchy at `{}`", t.name),
            ));
        }
    }
    let mut consts = HashSet::new();
    for c in &domain.constants {
        known(&c.ty)?;
        if !consts.insert(c.name.as_str()) {
            return Err(PddlError::Duplicate {
                loc,
                kind: "constant",
                name: c.name.clone(),
            });
        }
    }
    let mut preds = HashSet::new();
    for p in &domain.predicates {
        if p.name == Literal::EQUALITY {
            return Err(malformed(loc, "`=` cannot be declared as a predicate"));
        }
        if !preds.insert(p.name.as_str()) {
            return Err(PddlError::Duplicate {
                loc,
                kind: "predicate",
                name: p.name.clone(),
            });
        }
        for param in &p.params {
            known(&param.ty)?;
        }
    }
    Ok(())
}

struct DomainContext<'a> {
    hierarchy: &'a TypeHierarchy,
    preds: &'a HashMap<&'a str, &'a PredicateDef>,
    constants: &'a HashMap<&'a str, &'a str>,
}

impl DomainContext<'_> {
    fn parse_action(&self, expr: &SExpr) -> Result<ActionDef, PddlError> {
        let items = expect_list(expr, "action")?;
        let name = items
            .get(1)
            .ok_or_else(|| malformed(expr.loc(), "action without a name"))
            .and_then(|e| check_identifier(e, "action name"))?;
        let mut parameters = Vec::new();
        let mut pre_expr = None;
        let mut eff_expr = None;
        let mut i = 2;
        while i < items.len() {
            let key = expect_atom(&items[i], "action keyword")?;
            let val = items
                .get(i + 1)
                .ok_or_else(|| malformed(items[i].loc(), format!("missing value for `{key}`")))?;
            match key {
                ":parameters" => {
                    parameters = parse_typed_list(expect_list(val, "parameters")?, true)?
                }
                ":precondition" => pre_expr = Some(val),
                ":effect" => eff_expr = Some(val),
                other => {
                    return Err(malformed(
                        items[i].loc(),
                        format!("unknown action keyword `{other}`"),
                    ))
                }
            }
            i += 2;
        }

        let mut vars: HashMap<&str, &str> = HashMap::new();
        for p in &parameters {
            if !self.hierarchy.contains(&p.ty) {
                return Err(PddlError::UnknownType {
                    loc: expr.loc(),
                    name: p.ty.clone(),
                });
            }
            if vars.insert(p.name.as_str(), p.ty.as_str()).is_some() {
                return Err(PddlError::Duplicate {
                    loc: expr.loc(),
                    kind: "parameter",
                    name: p.name.clone(),
                });
            }
        }

        let mut precondition = Vec::new();
        if let Some(e) = pre_expr {
            self.collect_precondition(e, &vars, &mut precondition)?;
        }
        let mut add = Vec::new();
        let mut del = Vec::new();
        if let Some(e) = eff_expr {
            self.collect_effect(e, &vars, &mut add, &mut del)?;
        }
        Ok(ActionDef {
            name,
            parameters,
            precondition,
            add,
            del,
        })
    }

    fn term(&self, e: &SExpr, vars: &HashMap<&str, &str>) -> Result<(Term, String), PddlError> {
        let s = expect_atom(e, "term")?;
        if let Some(v) = s.strip_prefix('?') {
            let ty = vars.get(v).ok_or_else(|| PddlError::UnknownVariable {
                loc: e.loc(),
                name: v.to_string(),
            })?;
            Ok((Term::Var(v.to_string()), ty.to_string()))
        } else {
            let ty = self
                .constants
                .get(s)
                .ok_or_else(|| PddlError::UnknownConstant {
                    loc: e.loc(),
                    name: s.to_string(),
                })?;
            Ok((Term::Const(s.to_string()), ty.to_string()))
        }
    }

    fn atom(&self, e: &SExpr, vars: &HashMap<&str, &str>) -> Result<AtomExpr, PddlError> {
        let items = expect_list(e, "atom")?;
        let pname = items
            .first()
            .ok_or_else(|| malformed(e.loc(), "empty atom"))
            .and_then(|h| expect_atom(h, "predicate"))?;
        let def = self
            .preds
            .get(pname)
            .ok_or_else(|| PddlError::UnknownPredicate {
                loc: e.loc(),
                name: pname.to_string(),
            })?;
        let args = &items[1..];
        if args.len() != def.params.len() {
            return Err(PddlError::ArityMismatch {
                loc: e.loc(),
                name: pname.to_string(),
                expected: def.params.len(),
                found: args.len(),
            });
        }
        let mut terms = Vec::with_capacity(args.len());
        for (a, p) in args.iter().zip(&def.params) {
            let (t, ty) = self.term(a, vars)?;
            if !self.hierarchy.overlaps(&ty, &p.ty) {
                return Err(PddlError::TypeMismatch {
                    loc: a.loc(),
                    predicate: pname.to_string(),
                    arg: a.as_atom().unwrap_or_default().to_string(),
                    expected: p.ty.clone(),
                    found: ty,
                });
            }
            terms.push(t);
        }
        Ok(AtomExpr {
            predicate: pname.to_string(),
            args: terms,
        })
    }

    fn collect_precondition(
        &self,
        e: &SExpr,
        vars: &HashMap<&str, &str>,
        out: &mut Vec<Literal>,
    ) -> Result<(), PddlError> {
        let items = expect_list(e, "precondition")?;
        match e.head() {
            None if items.is_empty() => Ok(()),
            Some("and") => {
                for sub in &items[1..] {
                    self.collect_precondition(sub, vars, out)?;
                }
                Ok(())
            }
            Some("not") => {
                let inner = match &items[1..] {
                    [inner] => inner,
                    _ => return Err(malformed(e.loc(), "`not` takes exactly one argument")),
                };
                if inner.head() == Some(Literal::EQUALITY) {
                    let il = expect_list(inner, "equality")?;
                    if il.len() != 3 {
                        return Err(malformed(inner.loc(), "`=` takes exactly two arguments"));
                    }
                    let (a, _) = self.term(&il[1], vars)?;
                    let (b, _) = self.term(&il[2], vars)?;
                    out.push(Literal {
                        atom: AtomExpr {
                            predicate: Literal::EQUALITY.to_string(),
                            args: vec![a, b],
                        },
                        positive: false,
                    });
                    Ok(())
                } else {
                    Err(unsupported(e.loc(), ":negative-preconditions"))
                }
            }
            Some("=") => Err(unsupported(e.loc(), "positive equality precondition")),
            Some("or") | Some("imply") => Err(unsupported(e.loc(), ":disjunctive-preconditions")),
            Some("exists") => Err(unsupported(e.loc(), ":existential-preconditions")),
            Some("forall") => Err(unsupported(e.loc(), ":universal-preconditions")),
            Some("<") | Some(">") | Some("<=") | Some(">=") => {
                Err(unsupported(e.loc(), ":numeric-fluents"))
            }
            _ => {
                out.push(Literal {
                    atom: self.atom(e, vars)?,
                    positive: true,
                });
                Ok(())
            }
        }
    }

    fn collect_effect(
        &self,
        e: &SExpr,
        vars: &HashMap<&str, &str>,
        add: &mut Vec<AtomExpr>,
        del: &mut Vec<AtomExpr>,
    ) -> Result<(), PddlError> {
        let items = expect_list(e, "effect")?;
        match e.head() {
            None if items.is_empty() => Ok(()),
            Some("and") => {
                for sub in &items[1..] {
                    self.collect_effect(sub, vars, add, del)?;
                }
                Ok(())
            }
            Some("not") => match &items[1..] {
                [inner] => {
                    del.push(self.atom(inner, vars)?);
                    Ok(())
                }
                _ => Err(malformed(e.loc(), "`not` takes exactly one argument")),
            },
            Some("when") => Err(unsupported(e.loc(), ":conditional-effects")),
            Some("forall") => Err(unsupported(e.loc(), "universal effects (forall)")),
            Some("increase") | Some("decrease") => {
                let target = items.get(1).and_then(SExpr::head);
                if target == Some("total-cost") {
                    Err(unsupported(e.loc(), ":action-costs"))
                } else {
                    Err(unsupported(e.loc(), ":numeric-fluents"))
                }
            }
            Some("assign") | Some("scale-up") | Some("scale-down") => {
                Err(unsupported(e.loc(), ":numeric-fluents"))
            }
            _ => {
                add.push(self.atom(e, vars)?);
                Ok(())
            }
        }
    }
}

/// Parses a problem and cross-checks it against the domain signature.
pub fn parse_problem(text: &str, domain: &DomainAst) -> Result<ProblemAst, PddlError> {
    let top = parse_one(text)?;
    let (name, sections) = define_header(&top, "problem")?;
    let hierarchy = TypeHierarchy::from_domain(domain);
    let mut problem = ProblemAst {
        name,
        ..Default::default()
    };
    let mut init_exprs: Vec<&SExpr> = Vec::new();
    let mut goal_expr = None;

    for section in sections {
        let items = expect_list(section, "problem section")?;
        let key = items
            .first()
            .and_then(SExpr::as_atom)
            .ok_or_else(|| malformed(section.loc(), "expected a section keyword"))?;
        match key {
            ":domain" => {
                let d = items
                    .get(1)
                    .ok_or_else(|| malformed(section.loc(), "missing domain name"))
                    .and_then(|e| check_identifier(e, "domain name"))?;
                if d != domain.name {
                    return Err(PddlError::DomainMismatch {
                        loc: section.loc(),
                        expected: domain.name.clone(),
                        found: d,
                    });
                }
                problem.domain_name = d;
            }
            ":requirements" => {
                for r in &items[1..] {
                    let r_name = expect_atom(r, "requirement")?;
                    if !SUPPORTED_REQUIREMENTS.contains(&r_name) {
                        return Err(unsupported(r.loc(), r_name));
                    }
                }
            }
            ":objects" => {
                for o in parse_typed_list(&items[1..], false)? {
                    if !hierarchy.contains(&o.ty) {
                        return Err(PddlError::UnknownType {
                            loc: section.loc(),
                            name: o.ty,
                        });
                    }
                    problem.objects.push(o);
                }
            }
            ":init" => init_exprs.extend(&items[1..]),
            ":goal" => {
                goal_expr = Some(
                    items
                        .get(1)
                        .ok_or_else(|| malformed(section.loc(), "empty goal"))?,
                )
            }
            other => {
                return Err(match unsupported_section(other) {
                    Some(c) => unsupported(section.loc(), c),
                    None => malformed(section.loc(), format!("unknown problem section `{other}`")),
                })
            }
        }
    }
    if problem.domain_name.is_empty() {
        return Err(malformed(top.loc(), "missing (:domain ...)"));
    }

    let mut objects: HashMap<&str, &str> = domain
        .constants
        .iter()
        .map(|c| (c.name.as_str(), c.ty.as_str()))
        .collect();
    for o in &problem.objects {
        if objects.insert(o.name.as_str(), o.ty.as_str()).is_some() {
            return Err(PddlError::Duplicate {
                loc: top.loc(),
                kind: "object",
                name: o.name.clone(),
            });
        }
    }
    let ctx = ProblemContext {
        hierarchy: &hierarchy,
        preds: domain
            .predicates
            .iter()
            .map(|p| (p.name.as_str(), p))
            .collect(),
        objects,
    };

    let mut init = Vec::with_capacity(init_exprs.len());
    for e in init_exprs {
        match e.head() {
            Some("=") => return Err(unsupported(e.loc(), ":numeric-fluents")),
            Some("not") => return Err(unsupported(e.loc(), "negative initial literal")),
            Some("at")
                if e.as_list()
                    .and_then(|l| l.get(1))
                    .and_then(SExpr::as_atom)
                    .is_some_and(|t| t.parse::<f64>().is_ok()) =>
            {
                return Err(unsupported(e.loc(), ":timed-initial-literals"))
            }
            _ => init.push(ctx.ground_atom(e)?),
        }
    }
    problem.init = init;

    let goal_expr = goal_expr.ok_or_else(|| malformed(top.loc(), "missing (:goal ...)"))?;
    ctx.collect_goal(goal_expr, &mut problem.goal)?;
    Ok(problem)
}

struct ProblemContext<'a> {
    hierarchy: &'a TypeHierarchy,
    preds: HashMap<&'a str, &'a PredicateDef>,
    objects: HashMap<&'a str, &'a str>,
}

impl ProblemContext<'_> {
    fn ground_atom(&self, e: &SExpr) -> Result<GroundAtomExpr, PddlError> {
        let items = expect_list(e, "ground atom")?;
        let pname = items
            .first()
            .ok_or_else(|| malformed(e.loc(), "empty atom"))
            .and_then(|h| expect_atom(h, "predicate"))?;
        let def = self
            .preds
            .get(pname)
            .ok_or_else(|| PddlError::UnknownPredicate {
                loc: e.loc(),
                name: pname.to_string(),
            })?;
        let args = &items[1..];
        if args.len() != def.params.len() {
            return Err(PddlError::ArityMismatch {
                loc: e.loc(),
                name: pname.to_string(),
                expected: def.params.len(),
                found: args.len(),
            });
        }
        let mut out = Vec::with_capacity(args.len());
        for (a, p) in args.iter().zip(&def.params) {
            let c = expect_atom(a, "constant")?;
            if c.starts_with('?') {
                return Err(PddlError::BadGoal {
                    loc: a.loc(),
                    msg: format!("variable `{c}` in a ground atom"),
                });
            }
            let ty = self
                .objects
                .get(c)
                .ok_or_else(|| PddlError::UnknownConstant {
                    loc: a.loc(),
                    name: c.to_string(),
                })?;
            if !self.hierarchy.is_subtype(ty, &p.ty) {
                return Err(PddlError::TypeMismatch {
                    loc: a.loc(),
                    predicate: pname.to_string(),
                    arg: c.to_string(),
                    expected: p.ty.clone(),
                    found: ty.to_string(),
                });
            }
            out.push(c.to_string());
        }
        Ok(GroundAtomExpr {
            predicate: pname.to_string(),
            args: out,
        })
    }

    fn collect_goal(&self, e: &SExpr, out: &mut Vec<GroundAtomExpr>) -> Result<(), PddlError> {
        let items = expect_list(e, "goal")?;
        match e.head() {
            None if items.is_empty() => Ok(()),
            Some("and") => {
                for sub in &items[1..] {
                    self.collect_goal(sub, out)?;
                }
                Ok(())
            }
            Some(
                h @ ("not" | "or" | "imply" | "exists" | "forall" | "=" | "when" | "preference"),
            ) => Err(PddlError::BadGoal {
                loc: e.loc(),
                msg: format!("`{h}` is not allowed"),
            }),
            _ => {
                out.push(self.ground_atom(e).map_err(|err| match err {
                    PddlError::Malformed { loc, msg } => PddlError::BadGoal { loc, msg },
                    other => other,
                })?);
                Ok(())
            }
        }
    }
}
