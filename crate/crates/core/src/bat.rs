//! Domain model: interned symbols, ground atoms and actions, closed-world
//! states, lifted action schemas, situations and the compiled planning task.

use std::collections::hash_map::DefaultHasher;
use std::collections::{HashMap, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use smallvec::SmallVec;

macro_rules! symbol {
    ($(#[$m:meta])* $name:ident) => {
        $(#[$m])*
        #[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(pub u32);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }
    };
}

symbol!(
    /// Interned object constant.
    ObjId
);
symbol!(PredId);
symbol!(SchemaId);
symbol!(TypeId);

/// Argument tuple of an atom or action.
pub type Tuple = SmallVec<[ObjId; 4]>;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Atom {
    pub pred: PredId,
    pub args: Tuple,
}

impl Atom {
    pub fn new(pred: PredId, args: impl IntoIterator<Item = ObjId>) -> Self {
        Atom {
            pred,
            args: args.into_iter().collect(),
        }
    }
}

/// An instantiated action schema. Ordered by (schema index, argument indices).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundAction {
    pub schema: SchemaId,
    pub args: Tuple,
}

impl GroundAction {
    pub fn new(schema: SchemaId, args: impl IntoIterator<Item = ObjId>) -> Self {
        GroundAction {
            schema,
            args: args.into_iter().collect(),
        }
    }
}

/// Closed-world set of ground atoms, indexed by predicate.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct State {
    by_pred: Vec<HashSet<Tuple>>,
}

impl State {
    pub fn new(num_predicates: usize) -> Self {
        State {
            by_pred: vec![HashSet::new(); num_predicates],
        }
    }

    pub fn from_atoms(num_predicates: usize, atoms: impl IntoIterator<Item = Atom>) -> Self {
        let mut st = State::new(num_predicates);
        for a in atoms {
            st.insert(a);
        }
        st
    }

    #[inline]
    pub fn contains(&self, atom: &Atom) -> bool {
        self.holds(atom.pred, &atom.args)
    }

    #[inline]
    pub fn holds(&self, pred: PredId, args: &[ObjId]) -> bool {
        self.by_pred
            .get(pred.index())
            .is_some_and(|set| set.contains(args))
    }

    /// Returns true if the atom was not already present.
    pub fn insert(&mut self, atom: Atom) -> bool {
        let i = atom.pred.index();
        if i >= self.by_pred.len() {
            self.by_pred.resize_with(i + 1, HashSet::new);
        }
        self.by_pred[i].insert(atom.args)
    }

    pub fn remove(&mut self, atom: &Atom) -> bool {
        self.by_pred
            .get_mut(atom.pred.index())
            .is_some_and(|set| set.remove(atom.args.as_slice()))
    }

    /// All tuples currently true for `pred`.
    pub fn tuples(&self, pred: PredId) -> impl Iterator<Item = &Tuple> + '_ {
        self.by_pred.get(pred.index()).into_iter().flatten()
    }

    pub fn count(&self, pred: PredId) -> usize {
        self.by_pred.get(pred.index()).map_or(0, HashSet::len)
    }

    pub fn len(&self) -> usize {
        self.by_pred.iter().map(HashSet::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = Atom> + '_ {
        self.by_pred.iter().enumerate().flat_map(|(p, set)| {
            set.iter().map(move |t| Atom {
                pred: PredId(p as u32),
                args: t.clone(),
            })
        })
    }

    pub fn sorted_atoms(&self) -> Vec<Atom> {
        let mut v: Vec<Atom> = self.iter().collect();
        v.sort_unstable();
        v
    }

    pub fn is_superset(&self, other: &State) -> bool {
        other.iter().all(|a| self.contains(&a))
    }
}

impl Hash for State {
    /// Order-independent: per-atom hashes are combined with a commutative sum.
    fn hash<H: Hasher>(&self, state: &mut H) {
        let mut acc: u64 = 0;
        let mut n: u64 = 0;
        for (p, set) in self.by_pred.iter().enumerate() {
            for t in set {
                let mut h = DefaultHasher::new();
                p.hash(&mut h);
                t.hash(&mut h);
                acc = acc.wrapping_add(h.finish());
                n += 1;
            }
        }
        state.write_u64(acc);
        state.write_u64(n);
    }
}

/// Term of a lifted atom: a schema parameter (by position) or a constant.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    Var(usize),
    Const(ObjId),
}

impl Term {
    #[inline]
    pub fn resolve(self, binding: &[ObjId]) -> ObjId {
        match self {
            Term::Var(i) => binding[i],
            Term::Const(c) => c,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AtomPattern {
    pub pred: PredId,
    pub args: Vec<Term>,
}

impl AtomPattern {
    pub fn instantiate(&self, binding: &[ObjId]) -> Atom {
        Atom {
            pred: self.pred,
            args: self.args.iter().map(|t| t.resolve(binding)).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub ty: TypeId,
}

/// Lifted STRIPS operator with inequality constraints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionSchema {
    pub name: String,
    pub params: Vec<Param>,
    pub precond_pos: Vec<AtomPattern>,
    pub precond_neq: Vec<(Term, Term)>,
    pub add: Vec<AtomPattern>,
    pub del: Vec<AtomPattern>,
}

impl ActionSchema {
    pub fn arity(&self) -> usize {
        self.params.len()
    }

    pub fn preconditions(&self, args: &[ObjId]) -> Vec<Atom> {
        self.precond_pos
            .iter()
            .map(|p| p.instantiate(args))
            .collect()
    }

    pub fn add_effects(&self, args: &[ObjId]) -> Vec<Atom> {
        self.add.iter().map(|p| p.instantiate(args)).collect()
    }

    pub fn del_effects(&self, args: &[ObjId]) -> Vec<Atom> {
        self.del.iter().map(|p| p.instantiate(args)).collect()
    }

    pub fn inequalities_hold(&self, args: &[ObjId]) -> bool {
        self.precond_neq
            .iter()
            .all(|(a, b)| a.resolve(args) != b.resolve(args))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredicateSig {
    pub name: String,
    pub params: Vec<TypeId>,
}

impl PredicateSig {
    pub fn arity(&self) -> usize {
        self.params.len()
    }
}

/// Object universe under domain closure, with the type hierarchy flattened.
#[derive(Clone, Debug, Default)]
pub struct Universe {
    pub type_names: Vec<String>,
    pub type_parent: Vec<Option<TypeId>>,
    pub object_names: Vec<String>,
    pub object_types: Vec<TypeId>,
    /// Constants of each type, including those of its subtypes, ascending.
    pub members: Vec<Vec<ObjId>>,
    is_a: Vec<Vec<bool>>,
}

impl Universe {
    pub fn new(
        type_names: Vec<String>,
        type_parent: Vec<Option<TypeId>>,
        object_names: Vec<String>,
        object_types: Vec<TypeId>,
    ) -> Self {
        let nt = type_names.len();
        let mut is_a = vec![vec![false; object_names.len()]; nt];
        let mut members = vec![Vec::new(); nt];
        for (o, &ty) in object_types.iter().enumerate() {
            let mut cur = Some(ty);
            let mut steps = 0;
            while let Some(t) = cur {
                if is_a[t.index()][o] || steps > nt {
                    break;
                }
                is_a[t.index()][o] = true;
                members[t.index()].push(ObjId(o as u32));
                cur = type_parent[t.index()];
                steps += 1;
            }
        }
        Universe {
            type_names,
            type_parent,
            object_names,
            object_types,
            members,
            is_a,
        }
    }

    pub fn len(&self) -> usize {
        self.object_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.object_names.is_empty()
    }

    #[inline]
    pub fn is_instance(&self, obj: ObjId, ty: TypeId) -> bool {
        self.is_a[ty.index()][obj.index()]
    }

    pub fn objects(&self) -> impl Iterator<Item = ObjId> {
        (0..self.object_names.len() as u32).map(ObjId)
    }
}

/// Compiled planning problem: schemas, universe, initial state, goal and bound.
#[derive(Clone, Debug)]
pub struct PlanningTask {
    pub domain_name: String,
    pub problem_name: String,
    pub predicates: Vec<PredicateSig>,
    pub universe: Universe,
    pub schemas: Vec<ActionSchema>,
    pub init: State,
    /// Positive ground goal atoms, sorted and deduplicated.
    pub goal: Vec<Atom>,
    pub bound: usize,
    /// Non-fatal findings from compilation, e.g. goals no action can add.
    pub warnings: Vec<String>,
    pub(crate) pred_index: HashMap<String, PredId>,
    pub(crate) schema_index: HashMap<String, SchemaId>,
    pub(crate) object_index: HashMap<String, ObjId>,
}

impl PlanningTask {
    pub fn schema(&self, id: SchemaId) -> &ActionSchema {
        &self.schemas[id.index()]
    }

    pub fn predicate_id(&self, name: &str) -> Option<PredId> {
        self.pred_index.get(&name.to_lowercase()).copied()
    }

    pub fn schema_id(&self, name: &str) -> Option<SchemaId> {
        self.schema_index.get(&name.to_lowercase()).copied()
    }

    pub fn object_id(&self, name: &str) -> Option<ObjId> {
        self.object_index.get(&name.to_lowercase()).copied()
    }

    pub fn empty_state(&self) -> State {
        State::new(self.predicates.len())
    }

    /// Builds a ground atom from names; `None` if any name is unknown.
    pub fn atom(&self, pred: &str, args: &[&str]) -> Option<Atom> {
        let p = self.predicate_id(pred)?;
        let args = args
            .iter()
            .map(|a| self.object_id(a))
            .collect::<Option<Tuple>>()?;
        (args.len() == self.predicates[p.index()].arity()).then_some(Atom { pred: p, args })
    }

    /// Builds a ground action from names; `None` if any name is unknown or the arity is wrong.
    pub fn action(&self, schema: &str, args: &[&str]) -> Option<GroundAction> {
        let s = self.schema_id(schema)?;
        let args = args
            .iter()
            .map(|a| self.object_id(a))
            .collect::<Option<Tuple>>()?;
        (args.len() == self.schema(s).arity()).then_some(GroundAction { schema: s, args })
    }

    pub fn display_atom<'a>(&'a self, atom: &'a Atom) -> impl fmt::Display + 'a {
        Named {
            task: self,
            head: &self.predicates[atom.pred.index()].name,
            args: &atom.args,
        }
    }

    /// Renders `(name arg...)`, the plan-file form of an action.
    pub fn display_action<'a>(&'a self, action: &'a GroundAction) -> impl fmt::Display + 'a {
        Named {
            task: self,
            head: &self.schemas[action.schema.index()].name,
            args: &action.args,
        }
    }
}

struct Named<'a> {
    task: &'a PlanningTask,
    head: &'a str,
    args: &'a [ObjId],
}

impl fmt::Display for Named<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.head)?;
        for a in self.args {
            write!(f, " {}", self.task.universe.object_names[a.index()])?;
        }
        f.write_str(")")
    }
}

struct SitNode {
    action: GroundAction,
    parent: Situation,
    len: usize,
    hash: u64,
}

/// A finite sequence of ground actions rooted at the initial situation.
///
/// Each node stores only its last action and a shared link to its parent,
/// so extending a situation is O(1) regardless of length.
#[derive(Clone, Default)]
pub struct Situation(Option<Arc<SitNode>>);

/// The initial situation.
pub fn s0() -> Situation {
    Situation(None)
}

/// Non-strict prefix relation between situations.
pub fn is_prefix(s: &Situation, s2: &Situation) -> bool {
    s.is_prefix_of(s2)
}

impl Situation {
    pub fn do_action(&self, action: GroundAction) -> Situation {
        let mut h = DefaultHasher::new();
        self.chain_hash().hash(&mut h);
        action.hash(&mut h);
        Situation(Some(Arc::new(SitNode {
            action,
            parent: self.clone(),
            len: self.len() + 1,
            hash: h.finish(),
        })))
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.0.as_ref().map_or(0, |n| n.len)
    }

    pub fn is_s0(&self) -> bool {
        self.0.is_none()
    }

    /// Same as [`Situation::is_s0`].
    pub fn is_empty(&self) -> bool {
        self.is_s0()
    }

    fn chain_hash(&self) -> u64 {
        self.0.as_ref().map_or(0, |n| n.hash)
    }

    pub fn last_action(&self) -> Option<&GroundAction> {
        self.0.as_ref().map(|n| &n.action)
    }

    pub fn parent(&self) -> Option<&Situation> {
        self.0.as_ref().map(|n| &n.parent)
    }

    /// Actions from the most recent back to the first.
    pub fn iter_rev(&self) -> impl Iterator<Item = &GroundAction> {
        let mut cur = self;
        std::iter::from_fn(move || {
            let node = cur.0.as_ref()?;
            cur = &node.parent;
            Some(&node.action)
        })
    }

    /// Actions in execution order, first action first.
    pub fn actions(&self) -> Vec<GroundAction> {
        let mut v: Vec<GroundAction> = self.iter_rev().cloned().collect();
        v.reverse();
        v
    }

    /// The prefix of this situation with the given length.
    pub fn ancestor(&self, len: usize) -> Option<&Situation> {
        if len > self.len() {
            return None;
        }
        let mut cur = self;
        while cur.len() > len {
            cur = cur.parent()?;
        }
        Some(cur)
    }

    pub fn is_prefix_of(&self, other: &Situation) -> bool {
        other.ancestor(self.len()).is_some_and(|a| a == self)
    }

    pub fn from_actions(actions: impl IntoIterator<Item = GroundAction>) -> Situation {
        actions.into_iter().fold(s0(), |s, a| s.do_action(a))
    }
}

impl PartialEq for Situation {
    fn eq(&self, other: &Self) -> bool {
        let (mut a, mut b) = (self, other);
        loop {
            match (&a.0, &b.0) {
                (None, None) => return true,
                (Some(x), Some(y)) => {
                    if Arc::ptr_eq(x, y) {
                        return true;
                    }
                    if x.len != y.len || x.hash != y.hash || x.action != y.action {
                        return false;
                    }
                    a = &x.parent;
                    b = &y.parent;
                }
                _ => return false,
            }
        }
    }
}

impl Eq for Situation {}

impl Hash for Situation {
    fn hash<H: Hasher>(&self, state: &mut H) {
        state.write_usize(self.len());
        state.write_u64(self.chain_hash());
    }
}

impl fmt::Debug for Situation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.actions()).finish()
    }
}

impl Drop for SitNode {
    // Unlink long parent chains iteratively so dropping a deep situation
    // cannot exhaust the stack.
    fn drop(&mut self) {
        let mut next = self.parent.0.take();
        while let Some(arc) = next {
            match Arc::try_unwrap(arc) {
                Ok(mut node) => next = node.parent.0.take(),
                Err(_) => break,
            }
        }
    }
}
