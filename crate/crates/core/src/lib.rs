//! A lifted forward-search planner over situation trees.
//!
//! The frontier holds situations (action sequences from the initial
//! situation), states are recomputed by progression, actions are grounded
//! at run time from their schemas, and search is A* guided by a
//! delete-relaxation planning-graph heuristic.

pub mod bat;
pub mod bench;
pub mod heuristic;
pub mod pddl;
pub mod reasoner;
pub mod search;
pub mod validate;
