//! A* over grounded states with the additive heuristic, plus an exact
//! uniform-cost mode and plan forbidding.
//!
//! Forbidden plans are handled by tagging each search node with the set of
//! forbidden sequences its path is still a prefix of. Two nodes with the same
//! state but different tags are distinct, so an alternative path to a goal
//! state is never pruned by a forbidden one.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::time::{Duration, Instant};

use thiserror::Error;

use super::ground::GroundedTask;
use super::{PlanStep, SymbolicPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SearchMode {
    /// A* guided by h_add. Valid and deterministic, not guaranteed optimal.
    #[default]
    Additive,
    /// Uniform-cost search. Cost-optimal among non-forbidden plans.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchLimits {
    pub max_expansions: usize,
    pub max_time: Option<Duration>,
    pub mode: SearchMode,
}

impl Default for SearchLimits {
    fn default() -> Self {
        SearchLimits { max_expansions: 1_000_000, max_time: None, mode: SearchMode::Additive }
    }
}

impl SearchLimits {
    pub fn exact() -> Self {
        SearchLimits { mode: SearchMode::Exact, ..Self::default() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub expanded: usize,
    pub generated: usize,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SearchError {
    #[error("no plan exists (state space exhausted after {expanded} expansions)")]
    Infeasible { expanded: usize },
    #[error("search budget exhausted after {expanded} expansions")]
    BudgetExhausted { expanded: usize },
}

type Bits = Vec<u64>;

fn get(bits: &Bits, i: usize) -> bool {
    bits[i / 64] >> (i % 64) & 1 == 1
}

fn set(bits: &mut Bits, i: usize, v: bool) {
    if v {
        bits[i / 64] |= 1 << (i % 64);
    } else {
        bits[i / 64] &= !(1 << (i % 64));
    }
}

/// Forbidden sequences the current path still matches, or `None` once the
/// path has diverged from all of them.
type Tag = Option<(usize, Vec<u32>)>;

struct Node {
    state: Bits,
    tag: Tag,
    g: f64,
    parent: Option<usize>,
    action: Option<usize>,
}

#[derive(PartialEq)]
struct Entry {
    f: f64,
    h: f64,
    seq: u64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; invert so the smallest (f, h, seq) pops first.
        other
            .f
            .total_cmp(&self.f)
            .then_with(|| other.h.total_cmp(&self.h))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn additive(task: &GroundedTask, state: &Bits, scratch: &mut Vec<f64>) -> f64 {
    let n = task.atoms.len();
    scratch.clear();
    scratch.extend((0..n).map(|i| if get(state, i) { 0.0 } else { f64::INFINITY }));
    loop {
        let mut changed = false;
        for (c, a) in task.compiled.iter().zip(&task.actions) {
            let mut pre = 0.0;
            for &p in &c.pre_pos {
                pre += scratch[p];
                if pre.is_infinite() {
                    break;
                }
            }
            if pre.is_infinite() {
                continue;
            }
            let reach = pre + a.cost;
            for &q in &c.add {
                if reach < scratch[q] {
                    scratch[q] = reach;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    task.goal_pos.iter().map(|&g| scratch[g]).sum()
}

fn applicable(task: &GroundedTask, a: usize, state: &Bits) -> bool {
    let c = &task.compiled[a];
    c.pre_pos.iter().all(|&p| get(state, p)) && c.pre_neg.iter().all(|&p| !get(state, p))
}

fn is_goal(task: &GroundedTask, state: &Bits) -> bool {
    task.goal_pos.iter().all(|&p| get(state, p)) && task.goal_neg.iter().all(|&p| !get(state, p))
}

/// Indices of forbidden plans, by grounded action index per step.
fn compile_forbidden(task: &GroundedTask, forbidden: &[SymbolicPlan]) -> Vec<Option<Vec<usize>>> {
    let index: HashMap<PlanStep, usize> = task.actions.iter().enumerate().map(|(i, a)| (a.step(), i)).collect();
    forbidden
        .iter()
        .map(|p| p.steps.iter().map(|s| index.get(s).copied()).collect::<Option<Vec<_>>>())
        .collect()
}

/// Cost-ordered search for a plan that is not in `forbidden`.
///
/// Successors are generated in the task's sorted action order and ties on
/// `(f, h)` are broken by insertion order, so results are reproducible.
pub fn plan_symbolic(
    task: &GroundedTask,
    forbidden: &[SymbolicPlan],
    limits: &SearchLimits,
) -> Result<(SymbolicPlan, SearchStats), SearchError> {
    let started = Instant::now();
    let words = task.atoms.len().div_ceil(64).max(1);
    let mut init = vec![0u64; words];
    for &i in &task.init_ids {
        set(&mut init, i, true);
    }
    // sequences that mention unknown actions can never be produced
    let forbidden = compile_forbidden(task, forbidden);
    let live: Vec<u32> = (0..forbidden.len() as u32).filter(|&i| forbidden[i as usize].is_some()).collect();
    let root_tag: Tag = if live.is_empty() { None } else { Some((0, live)) };

    let mut scratch = Vec::new();
    let mut nodes: Vec<Node> = Vec::new();
    let mut best: HashMap<(Bits, Tag), f64> = HashMap::new();
    let mut open = BinaryHeap::new();
    let mut seq = 0u64;
    let mut stats = SearchStats::default();

    let heuristic = |state: &Bits, scratch: &mut Vec<f64>| match limits.mode {
        SearchMode::Additive => additive(task, state, scratch),
        SearchMode::Exact => 0.0,
    };

    let h0 = heuristic(&init, &mut scratch);
    if h0.is_infinite() {
        return Err(SearchError::Infeasible { expanded: 0 });
    }
    best.insert((init.clone(), root_tag.clone()), 0.0);
    nodes.push(Node { state: init, tag: root_tag, g: 0.0, parent: None, action: None });
    open.push(Entry { f: h0, h: h0, seq, node: 0 });

    while let Some(Entry { node: id, .. }) = open.pop() {
        let (g, stale) = {
            let n = &nodes[id];
            let key = (n.state.clone(), n.tag.clone());
            (n.g, best.get(&key).is_some_and(|&b| b < n.g))
        };
        if stale {
            continue;
        }
        if stats.expanded >= limits.max_expansions || limits.max_time.is_some_and(|t| started.elapsed() > t) {
            return Err(SearchError::BudgetExhausted { expanded: stats.expanded });
        }
        stats.expanded += 1;

        if is_goal(task, &nodes[id].state) {
            let hit_forbidden = match &nodes[id].tag {
                Some((depth, matching)) => {
                    matching.iter().any(|&m| forbidden[m as usize].as_ref().is_some_and(|p| p.len() == *depth))
                }
                None => false,
            };
            if !hit_forbidden {
                let mut steps = Vec::new();
                let mut cur = id;
                while let (Some(p), Some(a)) = (nodes[cur].parent, nodes[cur].action) {
                    steps.push(task.actions[a].step());
                    cur = p;
                }
                steps.reverse();
                return Ok((SymbolicPlan { steps, cost: g }, stats));
            }
        }

        for a in 0..task.actions.len() {
            if !applicable(task, a, &nodes[id].state) {
                continue;
            }
            let mut next = nodes[id].state.clone();
            let c = &task.compiled[a];
            for &d in &c.del {
                set(&mut next, d, false);
            }
            for &d in &c.add {
                set(&mut next, d, true);
            }
            let tag: Tag = match &nodes[id].tag {
                None => None,
                Some((depth, matching)) => {
                    let keep: Vec<u32> = matching
                        .iter()
                        .copied()
                        .filter(|&m| forbidden[m as usize].as_ref().is_some_and(|p| p.get(*depth) == Some(&a)))
                        .collect();
                    if keep.is_empty() { None } else { Some((depth + 1, keep)) }
                }
            };
            let ng = g + task.actions[a].cost;
            let key = (next, tag);
            if best.get(&key).is_some_and(|&b| b <= ng) {
                continue;
            }
            let h = heuristic(&key.0, &mut scratch);
            if h.is_infinite() {
                continue;
            }
            best.insert(key.clone(), ng);
            stats.generated += 1;
            seq += 1;
            nodes.push(Node { state: key.0, tag: key.1, g: ng, parent: Some(id), action: Some(a) });
            open.push(Entry { f: ng + h, h, seq, node: nodes.len() - 1 });
        }
    }
    Err(SearchError::Infeasible { expanded: stats.expanded })
}
