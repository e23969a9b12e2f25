//! Typed STRIPS with negative preconditions: parsing, grounding, state
//! semantics and cost-ordered search.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

mod ground;
mod parse;
mod search;
pub mod sexpr;

pub use ground::{ground, GroundAction, GroundedTask};
pub use parse::{parse_domain, parse_problem};
pub use search::{plan_symbolic, SearchError, SearchLimits, SearchMode, SearchStats};

use sexpr::Pos;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at {pos}: expected {expected}, found {found}")]
    Syntax { pos: Pos, expected: String, found: String },
    #[error("semantic error at {pos}: {message}")]
    Semantic { pos: Pos, message: String },
}

impl ParseError {
    pub(crate) fn syntax(pos: Pos, expected: &str, found: &str) -> Self {
        ParseError::Syntax { pos, expected: expected.to_string(), found: found.to_string() }
    }

    pub(crate) fn semantic(pos: Pos, message: impl Into<String>) -> Self {
        ParseError::Semantic { pos, message: message.into() }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ApplyError {
    #[error("precondition of {action} does not hold: {literal}")]
    PreconditionViolated { action: String, literal: String },
    #[error("unknown action {0}")]
    UnknownAction(String),
}

pub const ROOT_TYPE: &str = "object";

/// Single-inheritance type tree rooted at `object`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TypeHierarchy {
    parent: BTreeMap<String, String>,
}

impl TypeHierarchy {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare(&mut self, name: &str, parent: &str) {
        if name != ROOT_TYPE {
            self.parent.insert(name.to_string(), parent.to_string());
        }
    }

    pub fn contains(&self, name: &str) -> bool {
        name == ROOT_TYPE || self.parent.contains_key(name)
    }

    pub fn parent_of(&self, name: &str) -> Option<&str> {
        self.parent.get(name).map(String::as_str)
    }

    /// True when `ty` equals `ancestor` or inherits from it.
    pub fn is_subtype(&self, ty: &str, ancestor: &str) -> bool {
        let mut cur = ty;
        // bounded walk guards against accidental cycles in hand-built trees
        for _ in 0..=self.parent.len() + 1 {
            if cur == ancestor {
                return true;
            }
            match self.parent.get(cur) {
                Some(p) => cur = p,
                None => return ancestor == ROOT_TYPE,
            }
        }
        false
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        std::iter::once(ROOT_TYPE).chain(self.parent.keys().map(String::as_str))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Predicate {
    pub name: String,
    pub parameter_types: Vec<String>,
}

impl Predicate {
    pub fn arity(&self) -> usize {
        self.parameter_types.len()
    }
}

/// A possibly-lifted literal. Arguments starting with `?` are variables.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub predicate: String,
    pub args: Vec<String>,
    pub positive: bool,
}

impl Literal {
    pub fn pos(predicate: &str, args: &[&str]) -> Self {
        Literal { predicate: predicate.into(), args: args.iter().map(|s| s.to_string()).collect(), positive: true }
    }

    pub fn neg(predicate: &str, args: &[&str]) -> Self {
        Literal { positive: false, ..Self::pos(predicate, args) }
    }

    pub fn atom(&self) -> GroundAtom {
        GroundAtom { predicate: self.predicate.clone(), args: self.args.clone() }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if !self.positive {
            write!(f, "not ")?;
        }
        write!(f, "{}", self.atom())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActionSchema {
    pub name: String,
    pub parameters: Vec<(String, String)>,
    pub preconditions: Vec<Literal>,
    pub add: Vec<Literal>,
    pub delete: Vec<Literal>,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    pub name: String,
    pub types: TypeHierarchy,
    pub predicates: BTreeMap<String, Predicate>,
    pub schemas: Vec<ActionSchema>,
}

impl Domain {
    pub fn schema(&self, name: &str) -> Option<&ActionSchema> {
        self.schemas.iter().find(|s| s.name == name)
    }

    /// Predicates that no schema adds or deletes.
    pub fn static_predicates(&self) -> BTreeSet<&str> {
        let fluent: BTreeSet<&str> = self
            .schemas
            .iter()
            .flat_map(|s| s.add.iter().chain(&s.delete))
            .map(|l| l.predicate.as_str())
            .collect();
        self.predicates.keys().map(String::as_str).filter(|p| !fluent.contains(p)).collect()
    }

    /// Type-checks a ground atom against the predicate signature and universe.
    pub fn check_atom(&self, atom: &GroundAtom, universe: &BTreeMap<String, String>) -> Result<(), String> {
        let pred = self
            .predicates
            .get(&atom.predicate)
            .ok_or_else(|| format!("undeclared predicate {}", atom.predicate))?;
        if pred.arity() != atom.args.len() {
            return Err(format!(
                "predicate {} expects {} arguments, got {}",
                atom.predicate,
                pred.arity(),
                atom.args.len()
            ));
        }
        for (arg, ty) in atom.args.iter().zip(&pred.parameter_types) {
            let obj_ty = universe.get(arg).ok_or_else(|| format!("unknown object {arg}"))?;
            if !self.types.is_subtype(obj_ty, ty) {
                return Err(format!("object {arg} of type {obj_ty} is not a {ty} in {atom}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundAtom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl GroundAtom {
    pub fn new(predicate: &str, args: &[&str]) -> Self {
        GroundAtom { predicate: predicate.into(), args: args.iter().map(|s| s.to_string()).collect() }
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.predicate, self.args.join(","))
    }
}

/// Set of true ground atoms.
pub type SymbolicState = BTreeSet<GroundAtom>;

#[derive(Debug, Clone, PartialEq)]
pub struct SymbolicProblem {
    pub name: String,
    pub universe: BTreeMap<String, String>,
    pub init: SymbolicState,
    pub goal: Vec<Literal>,
}

/// One step of a symbolic plan: a schema name and its argument tuple.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PlanStep {
    pub schema: String,
    pub args: Vec<String>,
}

impl fmt::Display for PlanStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.schema, self.args.join(","))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolicPlan {
    pub steps: Vec<PlanStep>,
    pub cost: f64,
}

impl SymbolicPlan {
    pub fn same_sequence(&self, other: &SymbolicPlan) -> bool {
        self.steps == other.steps
    }

    pub fn names(&self) -> Vec<String> {
        self.steps.iter().map(ToString::to_string).collect()
    }
}

impl fmt::Display for SymbolicPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.names().join(", "))
    }
}

/// True iff every positive literal is in `state` and no negative one is.
pub fn holds(state: &SymbolicState, formula: &[Literal]) -> bool {
    formula.iter().all(|l| state.contains(&l.atom()) == l.positive)
}

/// `(state - delete) ∪ add`, rejecting actions whose preconditions fail.
pub fn apply(state: &SymbolicState, action: &GroundAction) -> Result<SymbolicState, ApplyError> {
    if let Some(l) = action.preconditions.iter().find(|l| state.contains(&l.atom()) != l.positive) {
        return Err(ApplyError::PreconditionViolated { action: action.name(), literal: l.to_string() });
    }
    let mut next: SymbolicState = state.difference(&action.delete.iter().cloned().collect()).cloned().collect();
    next.extend(action.add.iter().cloned());
    Ok(next)
}
