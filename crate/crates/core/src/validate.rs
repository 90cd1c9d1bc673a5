//! Independent plan validation and the plan file format.
//!
//! A plan file holds one action per line as `(name arg...)`, lowercase.
//! Blank lines and `;` comments are ignored.

use std::fmt;

use thiserror::Error;

use crate::bat::*;
use crate::reasoner::{progress, satisfy};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Valid,
    /// The action at this 0-based position was not possible when reached.
    PreconditionFailed {
        step: usize,
    },
    GoalUnsatisfied,
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        *self == Verdict::Valid
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Valid => f.write_str("valid"),
            Verdict::PreconditionFailed { step } => write!(f, "step-{step}-precondition-failed"),
            Verdict::GoalUnsatisfied => f.write_str("goal-unsatisfied"),
        }
    }
}

/// Precondition check written directly against the schema, without the grounder.
fn possible(task: &PlanningTask, st: &State, action: &GroundAction) -> bool {
    let Some(schema) = task.schemas.get(action.schema.index()) else {
        return false;
    };
    if action.args.len() != schema.arity() {
        return false;
    }
    let typed = schema
        .params
        .iter()
        .zip(&action.args)
        .all(|(p, &o)| o.index() < task.universe.len() && task.universe.is_instance(o, p.ty));
    typed
        && schema
            .precond_neq
            .iter()
            .all(|(a, b)| a.resolve(&action.args) != b.resolve(&action.args))
        && schema
            .preconditions(&action.args)
            .iter()
            .all(|atom| st.contains(atom))
}

/// Re-executes `actions` from the initial state, checking each precondition
/// in turn and the goal at the end.
pub fn validate(task: &PlanningTask, actions: &[GroundAction]) -> Verdict {
    let mut st = task.init.clone();
    for (step, a) in actions.iter().enumerate() {
        if !possible(task, &st, a) {
            return Verdict::PreconditionFailed { step };
        }
        st = progress(&st, a, task);
    }
    if satisfy(&st, &task.goal) {
        Verdict::Valid
    } else {
        Verdict::GoalUnsatisfied
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PlanParseError {
    #[error("line {line}: expected `(action arg...)`")]
    Syntax { line: usize },
    #[error("line {line}: unknown action `{name}`")]
    UnknownAction { line: usize, name: String },
    #[error("line {line}: unknown object `{name}`")]
    UnknownObject { line: usize, name: String },
    #[error("line {line}: `{name}` expects {expected} arguments, got {found}")]
    Arity {
        line: usize,
        name: String,
        expected: usize,
        found: usize,
    },
}

pub fn parse_plan(task: &PlanningTask, text: &str) -> Result<Vec<GroundAction>, PlanParseError> {
    let mut plan = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split(';').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let inner = content
            .strip_prefix('(')
            .and_then(|c| c.strip_suffix(')'))
            .ok_or(PlanParseError::Syntax { line })?;
        let mut words = inner.split_whitespace();
        let name = words.next().ok_or(PlanParseError::Syntax { line })?;
        let schema = task
            .schema_id(name)
            .ok_or_else(|| PlanParseError::UnknownAction {
                line,
                name: name.to_string(),
            })?;
        let args = words
            .map(|w| {
                task.object_id(w)
                    .ok_or_else(|| PlanParseError::UnknownObject {
                        line,
                        name: w.to_string(),
                    })
            })
            .collect::<Result<Tuple, _>>()?;
        let expected = task.schema(schema).arity();
        if args.len() != expected {
            return Err(PlanParseError::Arity {
                line,
                name: name.to_string(),
                expected,
                found: args.len(),
            });
        }
        plan.push(GroundAction { schema, args });
    }
    Ok(plan)
}

pub fn format_plan(task: &PlanningTask, actions: &[GroundAction]) -> String {
    let mut out = String::new();
    for a in actions {
        out.push_str(&task.display_action(a).to_string());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pddl::load_task;

    const BW: &str = include_str!("../fixtures/blocksworld/domain.pddl");
    const SUSSMAN: &str = include_str!("../fixtures/blocksworld/sussman.pddl");

    fn sussman() -> PlanningTask {
        load_task(BW, SUSSMAN, 100).unwrap()
    }

    fn acts(task: &PlanningTask, plan: &[(&str, &[&str])]) -> Vec<GroundAction> {
        plan.iter()
            .map(|(n, a)| task.action(n, a).unwrap())
            .collect()
    }

    #[test]
    fn sussman_plan_valid() {
        let task = sussman();
        let plan = acts(
            &task,
            &[
                ("move-b-to-t", &["c", "a"]),
                ("move-t-to-b", &["b", "c"]),
                ("move-t-to-b", &["a", "b"]),
            ],
        );
        assert_eq!(validate(&task, &plan), Verdict::Valid);
    }

    #[test]
    fn swapped_steps_fail_at_step_two() {
        let task = sussman();
        let plan = acts(
            &task,
            &[
                ("move-b-to-t", &["c", "a"]),
                ("move-t-to-b", &["a", "b"]),
                ("move-t-to-b", &["b", "c"]),
            ],
        );
        // a lands on b first, so b is no longer clear for the last move
        let v = validate(&task, &plan);
        assert_eq!(v, Verdict::PreconditionFailed { step: 2 });
        assert_eq!(v.to_string(), "step-2-precondition-failed");
    }

    #[test]
    fn goal_unsatisfied_and_empty_plans() {
        let task = sussman();
        assert_eq!(validate(&task, &[]), Verdict::GoalUnsatisfied);
        let zero = "(define (problem z) (:domain blocksworld) (:objects a) (:init (ontable a) (clear a)) (:goal (clear a)))";
        let task = load_task(BW, zero, 100).unwrap();
        assert_eq!(validate(&task, &[]), Verdict::Valid);
    }

    #[test]
    fn plan_text_round_trip() {
        let task = sussman();
        let plan = acts(
            &task,
            &[
                ("move-b-to-t", &["c", "a"]),
                ("move-t-to-b", &["b", "c"]),
                ("move-t-to-b", &["a", "b"]),
            ],
        );
        let text = format_plan(&task, &plan);
        assert_eq!(
            text,
            "(move-b-to-t c a)\n(move-t-to-b b c)\n(move-t-to-b a b)\n"
        );
        assert_eq!(parse_plan(&task, &text).unwrap(), plan);
        let with_noise = format!("; cost = 3\n\n{}  \n", text.to_uppercase());
        assert_eq!(parse_plan(&task, &with_noise).unwrap(), plan);
    }

    #[test]
    fn plan_parse_errors() {
        let task = sussman();
        assert_eq!(
            parse_plan(&task, "move-b-to-t c a"),
            Err(PlanParseError::Syntax { line: 1 })
        );
        assert!(matches!(
            parse_plan(&task, "\n(fly c a)"),
            Err(PlanParseError::UnknownAction { line: 2, .. })
        ));
        assert!(matches!(
            parse_plan(&task, "(move-b-to-t c q)"),
            Err(PlanParseError::UnknownObject { .. })
        ));
        assert!(matches!(
            parse_plan(&task, "(move-b-to-t c)"),
            Err(PlanParseError::Arity {
                expected: 2,
                found: 1,
                ..
            })
        ));
    }
}
