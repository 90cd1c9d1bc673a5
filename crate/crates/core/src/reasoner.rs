//! Closed-world reasoning: goal satisfaction, run-time grounding of action
//! schemas against a state, and progression of states through actions.

use crate::bat::*;

/// True iff every goal atom is in `st`.
pub fn satisfy(st: &State, goal: &[Atom]) -> bool {
    goal.iter().all(|g| st.contains(g))
}

/// True iff `action` is possible in `st`: argument types match, every positive
/// precondition holds and every inequality holds.
pub fn is_applicable(task: &PlanningTask, st: &State, action: &GroundAction) -> bool {
    let schema = task.schema(action.schema);
    action.args.len() == schema.arity()
        && schema
            .params
            .iter()
            .zip(&action.args)
            .all(|(p, &o)| o.index() < task.universe.len() && task.universe.is_instance(o, p.ty))
        && schema.inequalities_hold(&action.args)
        && schema
            .precond_pos
            .iter()
            .all(|p| st.holds(p.pred, &p.instantiate(&action.args).args))
}

/// All ground actions possible in `st`, ordered by schema declaration index
/// then argument indices.
pub fn find_all_possible_actions(task: &PlanningTask, st: &State) -> Vec<GroundAction> {
    let mut out = Vec::new();
    for (si, schema) in task.schemas.iter().enumerate() {
        let start = out.len();
        Grounder::new(task, schema, SchemaId(si as u32), st).run(&mut out);
        out[start..].sort_unstable_by(|a, b| a.args.cmp(&b.args));
    }
    out
}

/// Backtracking matcher for one schema. Precondition atoms are matched
/// most-selective-first (fewest candidate tuples in the state), and each
/// inequality is checked as soon as both of its sides are bound.
struct Grounder<'a> {
    task: &'a PlanningTask,
    schema: &'a ActionSchema,
    schema_id: SchemaId,
    st: &'a State,
    order: Vec<usize>,
    /// Inequalities that become decidable right after matching the i-th atom in `order`.
    neq_after: Vec<Vec<usize>>,
    /// Parameters bound by no precondition atom, enumerated from their type.
    free_params: Vec<usize>,
    binding: Vec<Option<ObjId>>,
}

impl<'a> Grounder<'a> {
    fn new(
        task: &'a PlanningTask,
        schema: &'a ActionSchema,
        schema_id: SchemaId,
        st: &'a State,
    ) -> Self {
        let mut order: Vec<usize> = (0..schema.precond_pos.len()).collect();
        order.sort_by_key(|&i| st.count(schema.precond_pos[i].pred));

        let mut bound_at = vec![None; schema.arity()];
        for (step, &i) in order.iter().enumerate() {
            for t in &schema.precond_pos[i].args {
                if let Term::Var(v) = *t {
                    bound_at[v].get_or_insert(step);
                }
            }
        }
        let free_params: Vec<usize> = (0..schema.arity())
            .filter(|&v| bound_at[v].is_none())
            .collect();
        // after the last atom, free params come next; index order.len() collects those
        let mut neq_after = vec![Vec::new(); order.len() + 1];
        for (k, (a, b)) in schema.precond_neq.iter().enumerate() {
            let when = |t: &Term| match *t {
                Term::Var(v) => bound_at[v].unwrap_or(order.len()),
                Term::Const(_) => 0,
            };
            neq_after[when(a).max(when(b))].push(k);
        }
        Grounder {
            task,
            schema,
            schema_id,
            st,
            order,
            neq_after,
            free_params,
            binding: vec![None; schema.arity()],
        }
    }

    fn run(mut self, out: &mut Vec<GroundAction>) {
        // inequalities between two constants are decided before any matching
        if !self.const_neqs_hold() {
            return;
        }
        if self.order.is_empty() {
            self.enumerate_free(0, out);
        } else {
            self.match_atom(0, out);
        }
    }

    fn neqs_hold(&self, ks: &[usize]) -> bool {
        ks.iter().all(|&k| {
            let (a, b) = self.schema.precond_neq[k];
            let val = |t: Term| match t {
                Term::Var(v) => self.binding[v],
                Term::Const(c) => Some(c),
            };
            match (val(a), val(b)) {
                (Some(x), Some(y)) => x != y,
                _ => true,
            }
        })
    }

    fn match_atom(&mut self, step: usize, out: &mut Vec<GroundAction>) {
        if step == self.order.len() {
            self.enumerate_free(0, out);
            return;
        }
        let (schema, st, universe) = (self.schema, self.st, &self.task.universe);
        let pattern = &schema.precond_pos[self.order[step]];
        let mut newly_bound: Vec<usize> = Vec::with_capacity(pattern.args.len());
        for tuple in st.tuples(pattern.pred) {
            let mut ok = true;
            for (t, &obj) in pattern.args.iter().zip(tuple.iter()) {
                match *t {
                    Term::Const(c) => {
                        if c != obj {
                            ok = false;
                            break;
                        }
                    }
                    Term::Var(v) => match self.binding[v] {
                        Some(b) => {
                            if b != obj {
                                ok = false;
                                break;
                            }
                        }
                        None => {
                            if !universe.is_instance(obj, schema.params[v].ty) {
                                ok = false;
                                break;
                            }
                            self.binding[v] = Some(obj);
                            newly_bound.push(v);
                        }
                    },
                }
            }
            if ok && self.neqs_hold(&self.neq_after[step]) {
                self.match_atom(step + 1, out);
            }
            for v in newly_bound.drain(..) {
                self.binding[v] = None;
            }
        }
    }

    fn const_neqs_hold(&self) -> bool {
        self.schema.precond_neq.iter().all(|(a, b)| match (a, b) {
            (Term::Const(x), Term::Const(y)) => x != y,
            _ => true,
        })
    }

    fn enumerate_free(&mut self, i: usize, out: &mut Vec<GroundAction>) {
        if i == self.free_params.len() {
            // free-parameter inequalities are all scheduled last
            if self.neqs_hold(&self.neq_after[self.order.len()]) {
                out.push(GroundAction {
                    schema: self.schema_id,
                    args: self
                        .binding
                        .iter()
                        .map(|b| b.expect("all params bound"))
                        .collect(),
                });
            }
            return;
        }
        let v = self.free_params[i];
        let task = self.task;
        let ty = self.schema.params[v].ty;
        for &obj in &task.universe.members[ty.index()] {
            self.binding[v] = Some(obj);
            self.enumerate_free(i + 1, out);
        }
        self.binding[v] = None;
    }
}

/// Successor state: delete effects removed, then add effects inserted.
/// The input state is left untouched.
pub fn progress(st: &State, action: &GroundAction, task: &PlanningTask) -> State {
    debug_assert!(
        is_applicable(task, st, action),
        "progressing through an inapplicable action {}",
        task.display_action(action)
    );
    let mut next = st.clone();
    apply_in_place(&mut next, action, task);
    next
}

pub(crate) fn apply_in_place(st: &mut State, action: &GroundAction, task: &PlanningTask) {
    let schema = task.schema(action.schema);
    for d in &schema.del {
        st.remove(&d.instantiate(&action.args));
    }
    for a in &schema.add {
        st.insert(a.instantiate(&action.args));
    }
}

/// State reached from `init` by executing the actions of `s` in order.
pub fn progress_along(init: &State, s: &Situation, task: &PlanningTask) -> State {
    let mut st = init.clone();
    for a in s.actions() {
        debug_assert!(is_applicable(task, &st, &a));
        apply_in_place(&mut st, &a, task);
    }
    st
}

/// True iff each action of `s` is possible in the state produced by its predecessors.
pub fn executable(init: &State, s: &Situation, task: &PlanningTask) -> bool {
    let mut st = init.clone();
    for a in s.actions() {
        if !is_applicable(task, &st, &a) {
            return false;
        }
        apply_in_place(&mut st, &a, task);
    }
    true
}
