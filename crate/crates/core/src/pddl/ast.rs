use std::collections::HashMap;

/// The implicit root of every type hierarchy.
pub const ROOT_TYPE: &str = "object";

/// A name with its declared type, as found in PDDL typed lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypedName {
    pub name: String,
    pub ty: String,
}

impl TypedName {
    pub fn new(name: impl Into<String>, ty: impl Into<String>) -> Self {
        TypedName {
            name: name.into(),
            ty: ty.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    /// Variable, stored without the leading `?`.
    Var(String),
    Const(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AtomExpr {
    pub predicate: String,
    pub args: Vec<Term>,
}

/// Precondition literal. Negative literals only occur as inequalities,
/// i.e. with predicate `=`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Literal {
    pub atom: AtomExpr,
    pub positive: bool,
}

impl Literal {
    pub const EQUALITY: &'static str = "=";

    pub fn is_inequality(&self) -> bool {
        !self.positive && self.atom.predicate == Self::EQUALITY
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredicateDef {
    pub name: String,
    pub params: Vec<TypedName>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionDef {
    pub name: String,
    pub parameters: Vec<TypedName>,
    pub precondition: Vec<Literal>,
    pub add: Vec<AtomExpr>,
    pub del: Vec<AtomExpr>,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct DomainAst {
    pub name: String,
    pub requirements: Vec<String>,
    /// Declared types with their parent; the root type is never listed.
    pub types: Vec<TypedName>,
    pub constants: Vec<TypedName>,
    pub predicates: Vec<PredicateDef>,
    pub actions: Vec<ActionDef>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroundAtomExpr {
    pub predicate: String,
    pub args: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ProblemAst {
    pub name: String,
    pub domain_name: String,
    pub objects: Vec<TypedName>,
    pub init: Vec<GroundAtomExpr>,
    pub goal: Vec<GroundAtomExpr>,
}

/// Single-inheritance type tree rooted at [`ROOT_TYPE`].
#[derive(Clone, Debug)]
pub struct TypeHierarchy {
    parent: HashMap<String, String>,
}

impl TypeHierarchy {
    pub fn from_domain(domain: &DomainAst) -> Self {
        TypeHierarchy {
            parent: domain
                .types
                .iter()
                .map(|t| (t.name.clone(), t.ty.clone()))
                .collect(),
        }
    }

    pub fn contains(&self, ty: &str) -> bool {
        ty == ROOT_TYPE || self.parent.contains_key(ty)
    }

    /// Reflexive-transitive subtype test.
    pub fn is_subtype(&self, sub: &str, sup: &str) -> bool {
        if sup == ROOT_TYPE {
            return true;
        }
        let mut cur = sub;
        // bounded by the number of types, in case of a cycle slipping through
        for _ in 0..=self.parent.len() {
            if cur == sup {
                return true;
            }
            match self.parent.get(cur) {
                Some(p) => cur = p,
                None => return false,
            }
        }
        false
    }

    /// Two types can share an instance iff one is an ancestor of the other.
    pub fn overlaps(&self, a: &str, b: &str) -> bool {
        self.is_subtype(a, b) || self.is_subtype(b, a)
    }
}
