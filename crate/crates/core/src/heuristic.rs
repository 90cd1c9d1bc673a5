//! Relaxed planning-graph heuristic.
//!
//! A graph is grown from the evaluated state by repeatedly applying every
//! possible action whose add effects contribute something new, ignoring
//! deletes, until the goal holds or the look-ahead bound is exceeded. The
//! estimate is then extracted backwards: at each layer, every goal first
//! achieved there is assigned the achiever whose own preconditions are
//! cheapest to reach (recursively, on the graph below that layer), and the
//! cost is the number of distinct chosen achievers plus the cost of the
//! remaining goals and the achievers' preconditions one layer down.

use std::collections::HashMap;

use crate::bat::*;
use crate::reasoner::{find_all_possible_actions, satisfy};

/// Adds every add effect of `acts` to `st`; deletes are ignored.
pub fn relaxed_progress(st: &State, acts: &[GroundAction], task: &PlanningTask) -> State {
    let mut next = st.clone();
    for a in acts {
        for atom in task.schema(a.schema).add_effects(&a.args) {
            next.insert(atom);
        }
    }
    next
}

#[derive(Clone, Debug)]
pub struct Layer {
    /// Atoms first reached at this layer, sorted.
    pub new_effects: Vec<Atom>,
    /// Actions with at least one add effect in `new_effects`, in grounder order.
    pub new_actions: Vec<GroundAction>,
    /// Cumulative relaxed state after this layer.
    pub state: State,
    preconditions: Vec<Vec<Atom>>,
    /// For each new effect, indices into `new_actions` of the actions adding it.
    achievers: HashMap<Atom, Vec<usize>>,
}

#[derive(Clone, Debug)]
pub struct PlanningGraph {
    pub base_situation: Situation,
    pub base_state: State,
    pub layers: Vec<Layer>,
}

impl PlanningGraph {
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// State of the given view: the base state for 0, else layer `view - 1`.
    pub fn state_at(&self, view: usize) -> &State {
        match view {
            0 => &self.base_state,
            k => &self.layers[k - 1].state,
        }
    }
}

#[derive(Clone, Debug)]
pub enum GraphBuild {
    /// The goal holds in the last layer's state.
    Complete(PlanningGraph),
    /// The look-ahead bound was exceeded, or the relaxed fixpoint was
    /// reached without the goal.
    DepthExceeded(PlanningGraph),
}

impl GraphBuild {
    pub fn graph(&self) -> &PlanningGraph {
        match self {
            GraphBuild::Complete(g) | GraphBuild::DepthExceeded(g) => g,
        }
    }

    pub fn layers_built(&self) -> usize {
        self.graph().depth()
    }
}

/// Grows the relaxed planning graph from `st` while the goal does not hold
/// and the depth is at most `d`.
pub fn build_planning_graph(
    task: &PlanningTask,
    goal: &[Atom],
    d: usize,
    sn: &Situation,
    st: &State,
) -> GraphBuild {
    debug_assert!(d >= 1, "look-ahead bound must be positive");
    let mut pg = PlanningGraph {
        base_situation: sn.clone(),
        base_state: st.clone(),
        layers: Vec::new(),
    };
    let mut depth = 0;
    let mut current = st.clone();
    while !satisfy(&current, goal) && depth <= d {
        let mut new_actions = Vec::new();
        let mut preconditions = Vec::new();
        let mut achievers: HashMap<Atom, Vec<usize>> = HashMap::new();
        let mut next = current.clone();
        for a in find_all_possible_actions(task, &current) {
            let schema = task.schema(a.schema);
            let fresh: Vec<Atom> = schema
                .add_effects(&a.args)
                .into_iter()
                .filter(|e| !current.contains(e))
                .collect();
            if fresh.is_empty() {
                continue;
            }
            let idx = new_actions.len();
            for e in fresh {
                let list = achievers.entry(e.clone()).or_default();
                if list.last() != Some(&idx) {
                    list.push(idx);
                }
                next.insert(e);
            }
            let mut pre = schema.preconditions(&a.args);
            pre.sort_unstable();
            pre.dedup();
            preconditions.push(pre);
            new_actions.push(a);
        }
        if new_actions.is_empty() {
            // relaxed fixpoint: no later layer can add anything
            return GraphBuild::DepthExceeded(pg);
        }
        let mut new_effects: Vec<Atom> = achievers.keys().cloned().collect();
        new_effects.sort_unstable();
        pg.layers.push(Layer {
            new_effects,
            new_actions,
            state: next.clone(),
            preconditions,
            achievers,
        });
        current = next;
        depth += 1;
    }
    if depth > d {
        GraphBuild::DepthExceeded(pg)
    } else {
        GraphBuild::Complete(pg)
    }
}

/// Backward reachability estimate over a planning graph.
pub struct Reachability<'g> {
    pg: &'g PlanningGraph,
    memo: Option<HashMap<(Vec<Atom>, usize), usize>>,
    calls: u64,
    memo_hits: u64,
    shadow_every: u64,
}

impl<'g> Reachability<'g> {
    pub fn new(pg: &'g PlanningGraph) -> Self {
        Reachability {
            pg,
            memo: None,
            calls: 0,
            memo_hits: 0,
            shadow_every: 0,
        }
    }

    /// Caches results keyed by (goal set, view depth) for this graph only.
    pub fn memoized(pg: &'g PlanningGraph) -> Self {
        Reachability {
            memo: Some(HashMap::new()),
            // debug builds re-check a sample of cache hits against direct recursion
            shadow_every: if cfg!(debug_assertions) { 257 } else { 0 },
            ..Reachability::new(pg)
        }
    }

    pub fn calls(&self) -> u64 {
        self.calls
    }

    pub fn memo_hits(&self) -> u64 {
        self.memo_hits
    }

    /// Estimate for `goals` on the view consisting of the base and the first
    /// `view` layers. `goals` must be sorted and deduplicated.
    pub fn score(&mut self, goals: &[Atom], view: usize) -> usize {
        self.calls += 1;
        if view == 0 {
            return 0;
        }
        if let Some(memo) = &self.memo {
            if let Some(&v) = memo.get(&(goals.to_vec(), view)) {
                self.memo_hits += 1;
                if self.shadow_every > 0 && self.memo_hits.is_multiple_of(self.shadow_every) {
                    let direct = Reachability::new(self.pg).score(goals, view);
                    assert_eq!(
                        v, direct,
                        "memoized reachability diverged from direct recursion"
                    );
                }
                return v;
            }
        }
        let v = self.expand(goals, view);
        if let Some(memo) = &mut self.memo {
            memo.insert((goals.to_vec(), view), v);
        }
        v
    }

    fn expand(&mut self, goals: &[Atom], view: usize) -> usize {
        let pg = self.pg;
        let layer = &pg.layers[view - 1];
        let below = view - 1;
        let mut remain: Vec<Atom> = Vec::with_capacity(goals.len());
        let mut new_goals: Vec<Atom> = Vec::new();
        let mut best_support: Vec<usize> = Vec::new();
        for g in goals {
            let Some(relevant) = layer.achievers.get(g) else {
                remain.push(g.clone());
                continue;
            };
            // first minimum in layer order wins ties
            let mut best: Option<(usize, usize)> = None;
            for &ai in relevant {
                let est = self.score(&layer.preconditions[ai], below);
                if best.is_none_or(|(_, b)| est < b) {
                    best = Some((ai, est));
                }
            }
            let (ai, _) = best.expect("every new effect has an achiever");
            new_goals.extend(layer.preconditions[ai].iter().cloned());
            if !best_support.contains(&ai) {
                best_support.push(ai);
            }
        }
        let mut next = remain;
        next.append(&mut new_goals);
        next.sort_unstable();
        next.dedup();
        best_support.len() + self.score(&next, below)
    }
}

/// Reachability of `goals` on the view made of the first `view` layers of `pg`.
pub fn reachability(goals: &[Atom], pg: &PlanningGraph, view: usize) -> usize {
    let mut g = goals.to_vec();
    g.sort_unstable();
    g.dedup();
    Reachability::new(pg).score(&g, view)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HeuristicResult {
    pub value: usize,
    pub layers_built: usize,
    /// Set when the look-ahead bound was exceeded; then `value` is `L + d`.
    pub penalized: bool,
}

/// Heuristic estimate for situation `sn` of length `length` with state `st`
/// and look-ahead bound `d`.
pub fn h(
    task: &PlanningTask,
    goal: &[Atom],
    d: usize,
    sn: &Situation,
    length: usize,
    st: &State,
) -> HeuristicResult {
    evaluate_rpg(task, goal, d, sn, length, st, false)
}

fn evaluate_rpg(
    task: &PlanningTask,
    goal: &[Atom],
    d: usize,
    sn: &Situation,
    length: usize,
    st: &State,
    memo: bool,
) -> HeuristicResult {
    match build_planning_graph(task, goal, d, sn, st) {
        GraphBuild::DepthExceeded(pg) => HeuristicResult {
            value: length + d,
            layers_built: pg.depth(),
            penalized: true,
        },
        GraphBuild::Complete(pg) => {
            let mut goals = goal.to_vec();
            goals.sort_unstable();
            goals.dedup();
            let mut r = if memo {
                Reachability::memoized(&pg)
            } else {
                Reachability::new(&pg)
            };
            HeuristicResult {
                value: r.score(&goals, pg.depth()),
                layers_built: pg.depth(),
                penalized: false,
            }
        }
    }
}

/// A heuristic function handle used by the search.
pub trait Heuristic {
    /// Estimate for successor `sn` with state `st` and look-ahead bound `d`.
    fn evaluate(
        &self,
        task: &PlanningTask,
        sn: &Situation,
        d: usize,
        st: &State,
    ) -> HeuristicResult;

    fn name(&self) -> &'static str;
}

/// h = 0 everywhere; turns A* into uniform-cost search.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZeroHeuristic;

impl Heuristic for ZeroHeuristic {
    fn evaluate(&self, _: &PlanningTask, _: &Situation, _: usize, _: &State) -> HeuristicResult {
        HeuristicResult {
            value: 0,
            layers_built: 0,
            penalized: false,
        }
    }

    fn name(&self) -> &'static str {
        "zero"
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RpgHeuristic {
    /// Cache reachability sub-results within each evaluation.
    pub memo: bool,
}

impl Heuristic for RpgHeuristic {
    fn evaluate(
        &self,
        task: &PlanningTask,
        sn: &Situation,
        d: usize,
        st: &State,
    ) -> HeuristicResult {
        evaluate_rpg(task, &task.goal, d, sn, sn.len(), st, self.memo)
    }

    fn name(&self) -> &'static str {
        "rpg"
    }
}

impl<F> Heuristic for F
where
    F: Fn(&PlanningTask, &Situation, usize, &State) -> HeuristicResult,
{
    fn evaluate(
        &self,
        task: &PlanningTask,
        sn: &Situation,
        d: usize,
        st: &State,
    ) -> HeuristicResult {
        self(task, sn, d, st)
    }

    fn name(&self) -> &'static str {
        "custom"
    }
}
