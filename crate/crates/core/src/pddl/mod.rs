//! PDDL frontend: STRIPS with `:typing` and negated `:equality`.

mod ast;
mod compile;
mod parser;
mod print;
mod sexpr;

use thiserror::Error;

pub use ast::*;
pub use compile::compile;
pub use parser::{parse_domain, parse_problem};
pub use sexpr::Loc;

use crate::bat::PlanningTask;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PddlError {
    #[error("{loc}: syntax error: {msg}")]
    Syntax { loc: Loc, msg: String },
    #[error("{loc}: unsupported construct `{construct}`")]
    Unsupported { loc: Loc, construct: String },
    #[error("{loc}: malformed input: {msg}")]
    Malformed { loc: Loc, msg: String },
    #[error("{loc}: unknown predicate `{name}`")]
    UnknownPredicate { loc: Loc, name: String },
    #[error("{loc}: unknown type `{name}`")]
    UnknownType { loc: Loc, name: String },
    #[error("{loc}: unknown constant `{name}`")]
    UnknownConstant { loc: Loc, name: String },
    #[error("{loc}: unknown variable `?{name}`")]
    UnknownVariable { loc: Loc, name: String },
    #[error("{loc}: `{name}` expects {expected} arguments, got {found}")]
    ArityMismatch {
        loc: Loc,
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("{loc}: argument `{arg}` of `{predicate}` has type `{found}`, expected `{expected}`")]
    TypeMismatch {
        loc: Loc,
        predicate: String,
        arg: String,
        expected: String,
        found: String,
    },
    #[error("{loc}: duplicate {kind} `{name}`")]
    Duplicate {
        loc: Loc,
        kind: &'static str,
        name: String,
    },
    #[error("{loc}: goal must be a conjunction of ground atoms: {msg}")]
    BadGoal { loc: Loc, msg: String },
    #[error("{loc}: problem is for domain `{found}`, expected `{expected}`")]
    DomainMismatch {
        loc: Loc,
        expected: String,
        found: String,
    },
}

/// Parses and compiles a domain/problem pair in one step.
pub fn load_task(
    domain_text: &str,
    problem_text: &str,
    bound: usize,
) -> Result<PlanningTask, PddlError> {
    let domain = parse_domain(domain_text)?;
    let problem = parse_problem(problem_text, &domain)?;
    compile(&domain, &problem, bound)
}
