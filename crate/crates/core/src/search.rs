//! A* over the situation tree.
//!
//! The frontier holds situations with their f-values. There is no closed
//! list: every situation is a distinct path from the initial situation, so
//! none can be reached twice. States are recomputed from the initial state
//! when a situation is popped, unless `cache_states` is set.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::bat::*;
use crate::heuristic::Heuristic;
use crate::reasoner::{find_all_possible_actions, progress, progress_along, satisfy};

#[derive(Clone, Debug)]
pub struct ResourceLimits {
    pub timeout: Option<Duration>,
    pub max_frontier: Option<usize>,
    /// Stop after this many goal checks.
    pub max_visited: Option<u64>,
}

impl Default for ResourceLimits {
    fn default() -> Self {
        ResourceLimits {
            timeout: Some(Duration::from_secs(30 * 60)),
            max_frontier: None,
            max_visited: None,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct SearchConfig {
    pub limits: ResourceLimits,
    /// Keep each frontier node's state instead of re-progressing from the initial state.
    pub cache_states: bool,
    /// Skip situations whose state was already popped. Not part of the
    /// situation-tree design; off by default.
    pub dedup: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    /// Incremented at every goal check.
    pub situations_visited: u64,
    pub expansions: u64,
    pub generated: u64,
    pub penalized: u64,
    pub max_frontier: usize,
    /// Expansions where a penalized sibling did not rank strictly behind a
    /// non-penalized sibling whose estimate was within the look-ahead bound.
    pub penalty_anomalies: u64,
    #[serde(serialize_with = "as_millis")]
    pub wall_time: Duration,
}

fn as_millis<S: serde::Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64() * 1e3)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LimitKind {
    Timeout,
    Frontier,
    Visited,
}

#[derive(Clone, Debug)]
pub enum SearchOutcome {
    Plan {
        situation: Situation,
        stats: SearchStats,
    },
    NoPlanWithinBound {
        stats: SearchStats,
    },
    ResourceLimit {
        kind: LimitKind,
        stats: SearchStats,
    },
}

impl SearchOutcome {
    pub fn stats(&self) -> &SearchStats {
        match self {
            SearchOutcome::Plan { stats, .. }
            | SearchOutcome::NoPlanWithinBound { stats }
            | SearchOutcome::ResourceLimit { stats, .. } => stats,
        }
    }

    pub fn situation(&self) -> Option<&Situation> {
        match self {
            SearchOutcome::Plan { situation, .. } => Some(situation),
            _ => None,
        }
    }
}

pub struct FrontierEntry {
    pub situation: Situation,
    pub f: usize,
    pub tie: u64,
    state: Option<State>,
}

impl PartialEq for FrontierEntry {
    fn eq(&self, other: &Self) -> bool {
        self.f == other.f && self.tie == other.tie
    }
}

impl Eq for FrontierEntry {}

impl Ord for FrontierEntry {
    // reversed: BinaryHeap is a max-heap, we pop the smallest (f, tie)
    fn cmp(&self, other: &Self) -> Ordering {
        (other.f, other.tie).cmp(&(self.f, self.tie))
    }
}

impl PartialOrd for FrontierEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Actions of a plan situation in execution order.
pub fn extract_plan(s: &Situation) -> Vec<GroundAction> {
    s.actions()
}

pub fn plan(
    task: &PlanningTask,
    heuristic: &dyn Heuristic,
    config: &SearchConfig,
) -> SearchOutcome {
    plan_with_progress(task, heuristic, config, 0, &mut |_| {})
}

/// Like [`plan`], calling `hook` every `every` expansions (never if 0).
pub fn plan_with_progress(
    task: &PlanningTask,
    heuristic: &dyn Heuristic,
    config: &SearchConfig,
    every: u64,
    hook: &mut dyn FnMut(&SearchStats),
) -> SearchOutcome {
    let start = Instant::now();
    let bound = task.bound;
    let limits = &config.limits;
    let mut stats = SearchStats::default();
    let mut frontier = BinaryHeap::new();
    frontier.push(FrontierEntry {
        situation: s0(),
        f: bound + 1,
        tie: 0,
        state: config.cache_states.then(|| task.init.clone()),
    });
    let mut tie = 1u64;
    let mut seen_states: HashSet<State> = HashSet::new();
    #[cfg(debug_assertions)]
    let mut popped: HashSet<Situation> = HashSet::new();

    let finish = |mut stats: SearchStats| {
        stats.wall_time = start.elapsed();
        stats
    };

    while let Some(entry) = frontier.pop() {
        if limits.timeout.is_some_and(|t| start.elapsed() >= t) {
            return SearchOutcome::ResourceLimit {
                kind: LimitKind::Timeout,
                stats: finish(stats),
            };
        }
        let s = entry.situation;
        #[cfg(debug_assertions)]
        debug_assert!(popped.insert(s.clone()), "situation popped twice: {s:?}");

        let now = match entry.state {
            Some(st) => st,
            None => progress_along(&task.init, &s, task),
        };
        if config.dedup && !seen_states.insert(now.clone()) {
            continue;
        }
        stats.situations_visited += 1;
        if satisfy(&now, &task.goal) {
            return SearchOutcome::Plan {
                situation: s,
                stats: finish(stats),
            };
        }
        if limits
            .max_visited
            .is_some_and(|m| stats.situations_visited >= m)
        {
            return SearchOutcome::ResourceLimit {
                kind: LimitKind::Visited,
                stats: finish(stats),
            };
        }
        // every successor would exceed the bound, so skip grounding
        if s.len() >= bound {
            continue;
        }
        let acts = find_all_possible_actions(task, &now);
        if acts.is_empty() {
            continue;
        }
        stats.expansions += 1;
        let d = bound - s.len();
        let mut worst_guided: Option<usize> = None;
        let mut best_penalized: Option<usize> = None;
        for a in acts {
            let st = progress(&now, &a, task);
            let sn = s.do_action(a);
            let r = heuristic.evaluate(task, &sn, d, &st);
            let f = sn.len() + r.value;
            if r.penalized {
                stats.penalized += 1;
                best_penalized = Some(best_penalized.map_or(f, |b| b.min(f)));
            } else if r.value <= d {
                worst_guided = Some(worst_guided.map_or(f, |w| w.max(f)));
            }
            frontier.push(FrontierEntry {
                situation: sn,
                f,
                tie,
                state: config.cache_states.then_some(st),
            });
            tie += 1;
            stats.generated += 1;
        }
        if let (Some(p), Some(g)) = (best_penalized, worst_guided) {
            if p <= g {
                stats.penalty_anomalies += 1;
                log::debug!("penalized successor f={p} does not trail guided sibling f={g}");
            }
        }
        stats.max_frontier = stats.max_frontier.max(frontier.len());
        if limits.max_frontier.is_some_and(|m| frontier.len() > m) {
            return SearchOutcome::ResourceLimit {
                kind: LimitKind::Frontier,
                stats: finish(stats),
            };
        }
        if every > 0 && stats.expansions % every == 0 {
            stats.wall_time = start.elapsed();
            hook(&stats);
        }
    }
    SearchOutcome::NoPlanWithinBound {
        stats: finish(stats),
    }
}
