//! Brute-force oracles shared by the integration tests.
//!
//! Nothing here calls the grounder, progression or heuristic code under test;
//! only the data types and PDDL loading are shared.

#![allow(dead_code)]

use std::collections::{HashSet, VecDeque};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;

use sitplan::bat::*;
use sitplan::pddl::load_task;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn load(domain: &str, problem: &str) -> PlanningTask {
    load_bounded(domain, problem, 100)
}

pub fn load_bounded(domain: &str, problem: &str, bound: usize) -> PlanningTask {
    let dir = fixtures().join(domain);
    let d = std::fs::read_to_string(dir.join("domain.pddl")).unwrap();
    let p = std::fs::read_to_string(dir.join(format!("{problem}.pddl"))).unwrap();
    load_task(&d, &p, bound).unwrap_or_else(|e| panic!("{domain}/{problem}: {e}"))
}

/// Every problem file in a fixture domain directory, sorted by name.
pub fn instances(domain: &str) -> Vec<String> {
    let mut names: Vec<String> = std::fs::read_dir(fixtures().join(domain))
        .unwrap()
        .filter_map(|e| {
            let name = e.unwrap().file_name().to_string_lossy().into_owned();
            let stem = name.strip_suffix(".pddl")?.to_string();
            (!stem.starts_with("domain")).then_some(stem)
        })
        .collect();
    names.sort();
    names
}

pub fn bw_instances(blocks: std::ops::RangeInclusive<usize>) -> Vec<String> {
    instances("blocksworld")
        .into_iter()
        .filter(|n| {
            n.strip_prefix("bw-")
                .and_then(|r| r.split('-').next())
                .and_then(|k| k.parse::<usize>().ok())
                .is_some_and(|k| blocks.contains(&k))
        })
        .collect()
}

fn instantiate(p: &AtomPattern, args: &[ObjId]) -> Atom {
    Atom::new(
        p.pred,
        p.args.iter().map(|t| match *t {
            Term::Var(i) => args[i],
            Term::Const(c) => c,
        }),
    )
}

fn resolve(t: &Term, args: &[ObjId]) -> ObjId {
    match *t {
        Term::Var(i) => args[i],
        Term::Const(c) => c,
    }
}

/// Every well-typed ground instance of every schema, in (schema, args) order.
pub fn all_ground_actions(task: &PlanningTask) -> Vec<GroundAction> {
    fn product(domains: &[Vec<ObjId>], prefix: &mut Vec<ObjId>, out: &mut Vec<Vec<ObjId>>) {
        match domains.split_first() {
            None => out.push(prefix.clone()),
            Some((first, rest)) => {
                for &o in first {
                    prefix.push(o);
                    product(rest, prefix, out);
                    prefix.pop();
                }
            }
        }
    }
    let mut out = Vec::new();
    for (si, schema) in task.schemas.iter().enumerate() {
        let domains: Vec<Vec<ObjId>> = schema
            .params
            .iter()
            .map(|p| {
                task.universe
                    .objects()
                    .filter(|&o| task.universe.is_instance(o, p.ty))
                    .collect()
            })
            .collect();
        let mut tuples = Vec::new();
        product(&domains, &mut Vec::new(), &mut tuples);
        out.extend(
            tuples
                .into_iter()
                .map(|args| GroundAction::new(SchemaId(si as u32), args)),
        );
    }
    out.sort();
    out
}

/// Preconditions and inequalities checked directly against the schema.
pub fn possible(task: &PlanningTask, st: &State, a: &GroundAction) -> bool {
    let schema = &task.schemas[a.schema.index()];
    schema
        .precond_neq
        .iter()
        .all(|(x, y)| resolve(x, &a.args) != resolve(y, &a.args))
        && schema
            .precond_pos
            .iter()
            .all(|p| st.contains(&instantiate(p, &a.args)))
}

/// Full grounding, then filtering by preconditions.
pub fn oracle_possible_actions(
    task: &PlanningTask,
    all: &[GroundAction],
    st: &State,
) -> Vec<GroundAction> {
    all.iter()
        .filter(|a| possible(task, st, a))
        .cloned()
        .collect()
}

/// STRIPS successor: delete, then add.
pub fn apply(task: &PlanningTask, st: &State, a: &GroundAction) -> State {
    let schema = &task.schemas[a.schema.index()];
    let mut next = st.clone();
    for p in &schema.del {
        next.remove(&instantiate(p, &a.args));
    }
    for p in &schema.add {
        next.insert(instantiate(p, &a.args));
    }
    next
}

fn goal_holds(st: &State, goal: &[Atom]) -> bool {
    goal.iter().all(|g| st.contains(g))
}

/// Shortest plan length by breadth-first search over states, if one of
/// length at most `max_depth` exists.
pub fn bfs_optimum(task: &PlanningTask, max_depth: usize) -> Option<usize> {
    let all = all_ground_actions(task);
    let mut seen: HashSet<Vec<Atom>> = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(task.init.sorted_atoms());
    queue.push_back((task.init.clone(), 0usize));
    while let Some((st, depth)) = queue.pop_front() {
        if goal_holds(&st, &task.goal) {
            return Some(depth);
        }
        if depth == max_depth {
            continue;
        }
        for a in oracle_possible_actions(task, &all, &st) {
            let next = apply(task, &st, &a);
            if seen.insert(next.sorted_atoms()) {
                queue.push_back((next, depth + 1));
            }
        }
    }
    None
}

/// Number of relaxed steps from `st` until every goal atom holds, or `None`
/// at the relaxed fixpoint. Each step applies all relaxed-possible actions.
pub fn relaxed_steps(
    task: &PlanningTask,
    all: &[GroundAction],
    st: &State,
    goal: &[Atom],
) -> Option<usize> {
    let mut cur = st.clone();
    let mut steps = 0;
    loop {
        if goal_holds(&cur, goal) {
            return Some(steps);
        }
        let mut next = cur.clone();
        for a in all.iter().filter(|a| possible(task, &cur, a)) {
            for p in &task.schemas[a.schema.index()].add {
                next.insert(instantiate(p, &a.args));
            }
        }
        if next.len() == cur.len() {
            return None;
        }
        cur = next;
        steps += 1;
    }
}

/// Random walk of up to `steps` actions from the initial state using the
/// oracle grounder.
pub fn random_walk<R: Rng>(
    task: &PlanningTask,
    all: &[GroundAction],
    steps: usize,
    rng: &mut R,
) -> State {
    let mut st = task.init.clone();
    for _ in 0..steps {
        let options = oracle_possible_actions(task, all, &st);
        let Some(a) = options.choose(rng) else { break };
        st = apply(task, &st, a);
    }
    st
}

/// Random blocks-world state: every block of the task placed into a random
/// set of towers.
pub fn random_bw_state<R: Rng>(task: &PlanningTask, rng: &mut R) -> State {
    let on = task.predicate_id("on").unwrap();
    let ontable = task.predicate_id("ontable").unwrap();
    let clear = task.predicate_id("clear").unwrap();
    let mut blocks: Vec<ObjId> = task.universe.objects().collect();
    blocks.shuffle(rng);
    let mut st = task.empty_state();
    let mut i = 0;
    while i < blocks.len() {
        let height = rng.gen_range(1..=blocks.len() - i);
        let tower = &blocks[i..i + height];
        st.insert(Atom::new(ontable, [tower[0]]));
        for w in tower.windows(2) {
            st.insert(Atom::new(on, [w[1], w[0]]));
        }
        st.insert(Atom::new(clear, [tower[height - 1]]));
        i += height;
    }
    st
}

/// Blocks-world successor evaluated from the printed successor state axioms,
/// fluent by fluent over the whole universe.
pub fn bw_ssa_successor(task: &PlanningTask, st: &State, a: &GroundAction) -> State {
    let on = task.predicate_id("on").unwrap();
    let ontable = task.predicate_id("ontable").unwrap();
    let clear = task.predicate_id("clear").unwrap();
    let name = task.schemas[a.schema.index()].name.as_str();
    let args = &a.args[..];
    let is = |schema: &str, pattern: &[Option<ObjId>]| {
        name == schema
            && pattern
                .iter()
                .zip(args)
                .all(|(p, &x)| p.is_none_or(|p| p == x))
    };
    let objs: Vec<ObjId> = task.universe.objects().collect();
    let mut next = task.empty_state();
    for &x in &objs {
        // clear(x): made true by moving some block off x, false when a block lands on x
        let clear_x = is("move-b-to-b", &[None, Some(x), None])
            || is("move-b-to-t", &[None, Some(x)])
            || (st.holds(clear, &[x])
                && !is("move-b-to-b", &[None, None, Some(x)])
                && !is("move-t-to-b", &[None, Some(x)]));
        if clear_x {
            next.insert(Atom::new(clear, [x]));
        }
        let ontable_x = is("move-b-to-t", &[Some(x), None])
            || (st.holds(ontable, &[x]) && !is("move-t-to-b", &[Some(x), None]));
        if ontable_x {
            next.insert(Atom::new(ontable, [x]));
        }
        for &y in &objs {
            let on_xy = is("move-b-to-b", &[Some(x), None, Some(y)])
                || is("move-t-to-b", &[Some(x), Some(y)])
                || (st.holds(on, &[x, y])
                    && !is("move-b-to-b", &[Some(x), Some(y), None])
                    && !is("move-b-to-t", &[Some(x), None]));
            if on_xy {
                next.insert(Atom::new(on, [x, y]));
            }
        }
    }
    next
}
