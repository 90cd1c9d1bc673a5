//! PDDL pretty-printing. Output re-parses to the same AST.

use std::fmt::{self, Display, Formatter, Write};

use super::ast::*;

fn typed_list(out: &mut String, items: &[TypedName], var_prefix: &str) {
    let mut first = true;
    for t in items {
        if !first {
            out.push(' ');
        }
        first = false;
        let _ = write!(out, "{var_prefix}{} - {}", t.name, t.ty);
    }
}

impl Display for Term {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "?{v}"),
            Term::Const(c) => f.write_str(c),
        }
    }
}

impl Display for AtomExpr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

impl Display for Literal {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        if self.positive {
            write!(f, "{}", self.atom)
        } else {
            write!(f, "(not {})", self.atom)
        }
    }
}

impl Display for GroundAtomExpr {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

impl Display for DomainAst {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let mut out = format!("(define (domain {})\n", self.name);
        if !self.requirements.is_empty() {
            let _ = writeln!(out, "  (:requirements {})", self.requirements.join(" "));
        }
        if !self.types.is_empty() {
            out.push_str("  (:types ");
            typed_list(&mut out, &self.types, "");
            out.push_str(")\n");
        }
        if !self.constants.is_empty() {
            out.push_str("  (:constants ");
            typed_list(&mut out, &self.constants, "");
            out.push_str(")\n");
        }
        out.push_str("  (:predicates");
        for p in &self.predicates {
            let _ = write!(out, "\n    ({}", p.name);
            if !p.params.is_empty() {
                out.push(' ');
                typed_list(&mut out, &p.params, "?");
            }
            out.push(')');
        }
        out.push_str(")\n");
        for a in &self.actions {
            let _ = write!(out, "  (:action {}\n    :parameters (", a.name);
            typed_list(&mut out, &a.parameters, "?");
            out.push_str(")\n    :precondition (and");
            for l in &a.precondition {
                let _ = write!(out, " {l}");
            }
            out.push_str(")\n    :effect (and");
            for e in &a.add {
                let _ = write!(out, " {e}");
            }
            for e in &a.del {
                let _ = write!(out, " (not {e})");
            }
            out.push_str("))\n");
        }
        out.push(')');
        f.write_str(&out)
    }
}

impl Display for ProblemAst {
    fn fmt(&self, f: &mut Formatter<'_>) -> fmt::Result {
        let mut out = format!(
            "(define (problem {})\n  (:domain {})\n  (:objects ",
            self.name, self.domain_name
        );
        typed_list(&mut out, &self.objects, "");
        out.push_str(")\n  (:init");
        for a in &self.init {
            let _ = write!(out, "\n    {a}");
        }
        out.push_str(")\n  (:goal (and");
        for a in &self.goal {
            let _ = write!(out, " {a}");
        }
        out.push_str(")))");
        f.write_str(&out)
    }
}
