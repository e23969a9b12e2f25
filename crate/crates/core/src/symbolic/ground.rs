use std::collections::{BTreeMap, HashMap};
use std::fmt;

use super::{apply, holds, ActionSchema, ApplyError, Domain, GroundAtom, Literal, PlanStep, SymbolicPlan, SymbolicProblem, SymbolicState};

/// A schema with every parameter bound to an object.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundAction {
    pub schema: String,
    pub args: Vec<String>,
    pub preconditions: Vec<Literal>,
    pub add: Vec<GroundAtom>,
    pub delete: Vec<GroundAtom>,
    pub cost: f64,
}

impl GroundAction {
    pub fn name(&self) -> String {
        self.step().to_string()
    }

    pub fn step(&self) -> PlanStep {
        PlanStep { schema: self.schema.clone(), args: self.args.clone() }
    }
}

impl fmt::Display for GroundAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.schema, self.args.join(","))
    }
}

/// Atom-indexed form of an action used by the search.
#[derive(Debug, Clone)]
pub(crate) struct Compiled {
    pub pre_pos: Vec<usize>,
    pub pre_neg: Vec<usize>,
    pub add: Vec<usize>,
    pub del: Vec<usize>,
}

/// All type-consistent groundings of a domain over a problem universe.
#[derive(Debug, Clone)]
pub struct GroundedTask {
    pub actions: Vec<GroundAction>,
    pub init: SymbolicState,
    pub goal: Vec<Literal>,
    pub(crate) atoms: Vec<GroundAtom>,
    pub(crate) compiled: Vec<Compiled>,
    pub(crate) goal_pos: Vec<usize>,
    pub(crate) goal_neg: Vec<usize>,
    pub(crate) init_ids: Vec<usize>,
    by_step: HashMap<PlanStep, usize>,
}

fn substitute(lit: &Literal, binding: &BTreeMap<&str, &str>) -> GroundAtom {
    GroundAtom {
        predicate: lit.predicate.clone(),
        args: lit.args.iter().map(|a| binding.get(a.as_str()).map_or_else(|| a.clone(), |s| s.to_string())).collect(),
    }
}

fn instantiate(schema: &ActionSchema, args: &[&str]) -> GroundAction {
    let binding: BTreeMap<&str, &str> = schema.parameters.iter().map(|(v, _)| v.as_str()).zip(args.iter().copied()).collect();
    let add: Vec<GroundAtom> = schema.add.iter().map(|l| substitute(l, &binding)).collect();
    let delete = schema.delete.iter().map(|l| substitute(l, &binding)).filter(|a| !add.contains(a)).collect();
    let preconditions = schema
        .preconditions
        .iter()
        .map(|l| {
            let a = substitute(l, &binding);
            Literal { predicate: a.predicate, args: a.args, positive: l.positive }
        })
        .collect();
    GroundAction {
        schema: schema.name.clone(),
        args: args.iter().map(|s| s.to_string()).collect(),
        preconditions,
        add,
        delete,
        cost: schema.cost,
    }
}

/// Enumerates every grounding; the action list is sorted by schema name then argument tuple.
pub fn ground(domain: &Domain, problem: &SymbolicProblem) -> GroundedTask {
    let mut actions = Vec::new();
    for schema in &domain.schemas {
        let choices: Vec<Vec<&str>> = schema
            .parameters
            .iter()
            .map(|(_, ty)| {
                problem
                    .universe
                    .iter()
                    .filter(|(_, oty)| domain.types.is_subtype(oty, ty))
                    .map(|(o, _)| o.as_str())
                    .collect()
            })
            .collect();
        if choices.iter().any(Vec::is_empty) {
            continue;
        }
        let mut idx = vec![0usize; choices.len()];
        'odometer: loop {
            let args: Vec<&str> = idx.iter().zip(&choices).map(|(&i, c)| c[i]).collect();
            actions.push(instantiate(schema, &args));
            let mut k = idx.len();
            loop {
                if k == 0 {
                    break 'odometer;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < choices[k].len() {
                    break;
                }
                idx[k] = 0;
            }
        }
    }
    actions.sort_by(|a, b| (&a.schema, &a.args).cmp(&(&b.schema, &b.args)));
    GroundedTask::new(actions, problem.init.clone(), problem.goal.clone())
}

impl GroundedTask {
    pub fn new(actions: Vec<GroundAction>, init: SymbolicState, goal: Vec<Literal>) -> Self {
        let mut index: HashMap<GroundAtom, usize> = HashMap::new();
        let mut atoms = Vec::new();
        let mut intern = |a: GroundAtom, atoms: &mut Vec<GroundAtom>| -> usize {
            *index.entry(a.clone()).or_insert_with(|| {
                atoms.push(a);
                atoms.len() - 1
            })
        };
        let init_ids = init.iter().map(|a| intern(a.clone(), &mut atoms)).collect();
        let mut goal_pos = Vec::new();
        let mut goal_neg = Vec::new();
        for l in &goal {
            let id = intern(l.atom(), &mut atoms);
            if l.positive { goal_pos.push(id) } else { goal_neg.push(id) }
        }
        let compiled = actions
            .iter()
            .map(|a| {
                let mut c = Compiled { pre_pos: vec![], pre_neg: vec![], add: vec![], del: vec![] };
                for l in &a.preconditions {
                    let id = intern(l.atom(), &mut atoms);
                    if l.positive { c.pre_pos.push(id) } else { c.pre_neg.push(id) }
                }
                c.add = a.add.iter().map(|x| intern(x.clone(), &mut atoms)).collect();
                c.del = a.delete.iter().map(|x| intern(x.clone(), &mut atoms)).collect();
                c
            })
            .collect();
        let by_step = actions.iter().enumerate().map(|(i, a)| (a.step(), i)).collect();
        GroundedTask { actions, init, goal, atoms, compiled, goal_pos, goal_neg, init_ids, by_step }
    }

    pub fn action(&self, step: &PlanStep) -> Option<&GroundAction> {
        self.by_step.get(step).map(|&i| &self.actions[i])
    }

    pub fn is_goal(&self, state: &SymbolicState) -> bool {
        holds(state, &self.goal)
    }

    /// Same task with a different initial state.
    pub fn with_init(&self, init: SymbolicState) -> GroundedTask {
        GroundedTask::new(self.actions.clone(), init, self.goal.clone())
    }

    /// Applies the plan from `init`; returns every intermediate state, starting with `init`.
    pub fn rollout(&self, plan: &SymbolicPlan) -> Result<Vec<SymbolicState>, ApplyError> {
        let mut states = vec![self.init.clone()];
        for step in &plan.steps {
            let act = self.action(step).ok_or_else(|| ApplyError::UnknownAction(step.to_string()))?;
            let next = apply(states.last().expect("non-empty"), act)?;
            states.push(next);
        }
        Ok(states)
    }

    /// True when the plan applies from `init` and reaches the goal.
    pub fn validate(&self, plan: &SymbolicPlan) -> bool {
        self.rollout(plan).map(|s| self.is_goal(s.last().expect("non-empty"))).unwrap_or(false)
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }
}
