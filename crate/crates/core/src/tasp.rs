//! Hierarchical planning: abstraction of worlds into symbolic states, the
//! plan / refine / backtrack loop, and monitored plan execution.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Configuration, Trajectory};
use crate::motion::validate;
use crate::skills::{attempt_rng, build_cip, execute_policy, CipBudgets, CipInstance, GroundedSkill, SkillKind, SkillRegistry, Stage};
use crate::symbolic::{
    ground, holds, parse_domain, parse_problem, plan_symbolic, Domain, GroundAtom, ParseError, SearchError, SearchLimits,
    SymbolicPlan, SymbolicProblem, SymbolicState,
};
use crate::world::{load_scene, AttrValue, Holding, RegionKind, StaticScene, WorldError, WorldState};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("domain: {0}")]
    Domain(ParseError),
    #[error("problem: {0}")]
    Problem(ParseError),
    #[error("scene: {0}")]
    Scene(#[from] WorldError),
    #[error("skills: {0}")]
    Skills(#[from] crate::skills::RegistryError),
}

/// Everything a hybrid planning run needs.
#[derive(Debug, Clone)]
pub struct HybridProblem {
    pub world: WorldState,
    pub scene: StaticScene,
    pub domain: Domain,
    pub problem: SymbolicProblem,
    pub registry: SkillRegistry,
}

impl HybridProblem {
    pub fn from_texts(domain: &str, problem: &str, scene: &str, skills: &str) -> Result<Self, LoadError> {
        let domain = parse_domain(domain).map_err(LoadError::Domain)?;
        let problem = parse_problem(problem, &domain).map_err(LoadError::Problem)?;
        let (world, scene) = load_scene(scene)?;
        let registry = SkillRegistry::load(skills, &domain)?;
        Ok(HybridProblem { world, scene, domain, problem, registry })
    }

    pub fn abstract_state(&self, world: &WorldState) -> SymbolicState {
        abstract_world(world, &self.scene, &self.domain, &self.problem)
    }
}

/// α: world to symbolic state. Only atoms that type-check against the domain are emitted.
pub fn abstract_world(world: &WorldState, stat: &StaticScene, domain: &Domain, problem: &SymbolicProblem) -> SymbolicState {
    let mut atoms = SymbolicState::new();
    let mut emit = |p: &str, args: &[&str]| {
        let a = GroundAtom::new(p, args);
        if domain.check_atom(&a, &problem.universe).is_ok() {
            atoms.insert(a);
        }
    };
    if world.attached.is_empty() {
        emit("handempty", &[]);
    }
    for o in &world.attached {
        emit("holding", &[o]);
    }
    for o in world.objects.values() {
        if let Some(c) = &o.container {
            match world.objects.get(c).and_then(|c| c.holds) {
                Some(Holding::In) => emit("in", &[&o.id, c]),
                Some(Holding::On) => emit("on", &[&o.id, c]),
                None => {}
            }
        }
        match o.attributes.get("open").and_then(AttrValue::as_bool) {
            Some(true) => emit("open", &[&o.id]),
            Some(false) => emit("closed", &[&o.id]),
            None => {}
        }
        match o.attributes.get("dirty").and_then(AttrValue::as_bool) {
            Some(true) => emit("dirty", &[&o.id]),
            Some(false) => emit("clean", &[&o.id]),
            None => {}
        }
    }
    if let Some(room) = stat.room_of(&world.robot_config) {
        emit("at-region", &[&stat.robot_id, &room.id]);
    }
    for zone in stat.regions.iter().filter(|r| r.kind == RegionKind::Zone) {
        let Some(subject) = &zone.subject else { continue };
        let own = world.objects.get(subject).and_then(|o| o.articulation.as_deref());
        let clear = world
            .obstacles
            .iter()
            .filter(|o| Some(o.id.as_str()) != own)
            .all(|o| !o.active_polygon().intersects_polygon(&zone.polygon));
        if clear {
            emit("door-approach-clear", &[subject]);
        }
    }
    let statics = domain.static_predicates();
    for a in &problem.init {
        if statics.contains(a.predicate.as_str()) {
            atoms.insert(a.clone());
        }
    }
    atoms
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveLimits {
    pub seed: u64,
    pub max_samples: usize,
    pub max_backtracks: usize,
    pub timeout: Duration,
    pub search: SearchLimits,
    pub budgets: CipBudgets,
}

impl Default for SolveLimits {
    fn default() -> Self {
        SolveLimits {
            seed: 42,
            max_samples: 10,
            max_backtracks: 25,
            timeout: Duration::from_secs(120),
            search: SearchLimits::default(),
            budgets: CipBudgets::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub plan: usize,
    pub step: usize,
    pub skill: String,
    pub attempt: usize,
    pub stage: Stage,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub symbolic_plans: usize,
    pub backtracks: usize,
    pub resamples: usize,
    pub failures: Vec<FailureRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedStep {
    pub cip: CipInstance,
    /// Build attempts used for this step, including the successful one.
    pub attempts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridPlan {
    pub symbolic: SymbolicPlan,
    pub steps: Vec<PlannedStep>,
    pub stats: SolveStats,
}

impl HybridPlan {
    /// Display names of the skills in order.
    pub fn labels(&self) -> Vec<String> {
        self.steps.iter().map(|s| s.cip.skill.label.clone()).collect()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("no symbolic plan reaches the goal")]
    SymbolicInfeasible,
    #[error("no refinable plan within budget ({reason}); last failure: {}", last.as_ref().map_or("none".to_string(), |f| format!("{} at {}: {}", f.skill, f.stage, f.detail)))]
    InfeasibleWithinBudget { reason: String, last: Option<FailureRecord>, stats: Box<SolveStats> },
    #[error("no skill registered for {0}")]
    UnboundAction(String),
}

/// Plans symbolically, refines each plan left to right, and backtracks to the
/// next-best plan when a step exhausts its sample budget.
pub fn solve(problem: &HybridProblem, limits: &SolveLimits) -> Result<HybridPlan, SolveError> {
    let started = Instant::now();
    let init = problem.abstract_state(&problem.world);
    let sym_problem = SymbolicProblem { init, ..problem.problem.clone() };
    let task = ground(&problem.domain, &sym_problem);
    let mut stats = SolveStats::default();
    let mut forbidden: Vec<SymbolicPlan> = Vec::new();
    let out_of_budget = |reason: &str, stats: &SolveStats| SolveError::InfeasibleWithinBudget {
        reason: reason.into(),
        last: stats.failures.last().cloned(),
        stats: Box::new(stats.clone()),
    };

    for plan_index in 0.. {
        let remaining = limits.timeout.saturating_sub(started.elapsed());
        let search = SearchLimits { max_time: Some(limits.search.max_time.map_or(remaining, |t| t.min(remaining))), ..limits.search };
        let sym = match plan_symbolic(&task, &forbidden, &search) {
            Ok((p, _)) => p,
            Err(SearchError::Infeasible { .. }) if plan_index == 0 => return Err(SolveError::SymbolicInfeasible),
            Err(SearchError::Infeasible { .. }) => return Err(out_of_budget("no further symbolic plans", &stats)),
            Err(SearchError::BudgetExhausted { .. }) => return Err(out_of_budget("symbolic search budget", &stats)),
        };
        stats.symbolic_plans += 1;
        let predicted = task.rollout(&sym).expect("search returns applicable plans");

        let mut world = problem.world.clone();
        let mut steps = Vec::new();
        let mut refined = true;
        for (k, step) in sym.steps.iter().enumerate() {
            let skill =
                problem.registry.ground(step, &problem.domain).ok_or_else(|| SolveError::UnboundAction(step.to_string()))?;
            let mut done = None;
            for attempt in 0..limits.max_samples.max(1) {
                if started.elapsed() > limits.timeout {
                    return Err(out_of_budget("wall-clock limit", &stats));
                }
                let mut rng = attempt_rng(limits.seed, plan_index, k, attempt);
                let failure = match build_cip(&skill, &world, &problem.scene, &mut rng, &limits.budgets) {
                    Ok((cip, next)) => {
                        let got = problem.abstract_state(&next);
                        if got == predicted[k + 1] {
                            done = Some((cip, next, attempt + 1));
                            break;
                        }
                        let diff: Vec<String> = got.symmetric_difference(&predicted[k + 1]).map(ToString::to_string).collect();
                        (Stage::Consistency, format!("abstraction differs on {}", diff.join(", ")))
                    }
                    Err(f) => (f.stage, f.detail),
                };
                stats.resamples += 1;
                stats.failures.push(FailureRecord {
                    plan: plan_index,
                    step: k,
                    skill: skill.label.clone(),
                    attempt,
                    stage: failure.0,
                    detail: failure.1,
                });
            }
            match done {
                Some((cip, next, attempts)) => {
                    steps.push(PlannedStep { cip, attempts });
                    world = next;
                }
                None => {
                    refined = false;
                    break;
                }
            }
        }
        if refined {
            return Ok(HybridPlan { symbolic: sym, steps, stats });
        }
        if stats.backtracks >= limits.max_backtracks {
            return Err(out_of_budget("backtrack limit", &stats));
        }
        stats.backtracks += 1;
        forbidden.push(sym);
    }
    unreachable!("the plan loop only exits by returning")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub event: String,
    pub step: usize,
    pub skill: String,
    pub config: Configuration,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub added: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub removed: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check: Option<String>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExecError {
    #[error("contract violation at step {step} ({skill}): {check}")]
    ContractViolation { step: usize, skill: String, check: String },
    #[error("goal not satisfied by the final world")]
    GoalNotReached,
}

const MATCH_TOL: f64 = 1e-9;

/// Replays a plan and checks that the final world satisfies the goal.
pub fn execute(
    problem: &HybridProblem,
    steps: &[PlannedStep],
    resolution: f64,
) -> Result<(WorldState, Vec<TraceEvent>), (ExecError, Vec<TraceEvent>)> {
    let (world, trace) = replay(problem, steps, resolution)?;
    if !holds(&problem.abstract_state(&world), &problem.problem.goal) {
        return Err((ExecError::GoalNotReached, trace));
    }
    Ok((world, trace))
}

/// Runs steps through the simulator, asserting the CIP chain contract at every boundary.
pub fn replay(
    problem: &HybridProblem,
    steps: &[PlannedStep],
    resolution: f64,
) -> Result<(WorldState, Vec<TraceEvent>), (ExecError, Vec<TraceEvent>)> {
    let stat = &problem.scene;
    let fp = &stat.footprint;
    let mut world = problem.world.clone();
    let mut trace = Vec::new();
    for (k, ps) in steps.iter().enumerate() {
        let cip = &ps.cip;
        let label = cip.skill.label.clone();
        let skill: &GroundedSkill = &cip.skill;
        let event = |name: &str, w: &WorldState, before: &SymbolicState, check: Option<String>| {
            let after = problem.abstract_state(w);
            TraceEvent {
                event: name.into(),
                step: k,
                skill: label.clone(),
                config: w.robot_config,
                added: after.difference(before).map(ToString::to_string).collect(),
                removed: before.difference(&after).map(ToString::to_string).collect(),
                check,
            }
        };
        macro_rules! require {
            ($cond:expr, $check:expr) => {
                if !$cond {
                    return Err((ExecError::ContractViolation { step: k, skill: label.clone(), check: $check.to_string() }, trace));
                }
                trace.push(event("monitor", &world, &problem.abstract_state(&world), Some($check.to_string())));
            };
        }
        let cond = match skill.conditions(&world, stat) {
            Ok(c) => c,
            Err(e) => return Err((ExecError::ContractViolation { step: k, skill: label, check: e.to_string() }, trace)),
        };
        let lam_i = cond.initiation.envelope();
        let lam_b = cond.termination.envelope();
        let checked = |c: &crate::skills::Condition, w: &WorldState| c.check(w, stat).unwrap_or(false);

        require!(cip.head.start().approx_eq(&world.robot_config, MATCH_TOL), "head starts at the current configuration");
        if cip.head.waypoints.len() > 1 {
            require!(!checked(&cond.initiation, &world), "head.start outside I");
        }
        require!(validate(&cip.head, &world.scene(stat), fp, &world.attachment_radii(), resolution), "head collision-free");
        let before = problem.abstract_state(&world);
        world = match world.step_trajectory(stat, &cip.head, resolution) {
            Ok((w, _)) => w,
            Err(e) => return Err((ExecError::ContractViolation { step: k, skill: label, check: e.to_string() }, trace)),
        };
        trace.push(event("head", &world, &before, None));
        require!(world.robot_config.approx_eq(&cip.entry_config, MATCH_TOL), "head ends at the entry configuration");
        require!(checked(&lam_i, &world), "head.end in envelope of I");
        require!(checked(&cond.initiation, &world), "head.end in I");

        let before = problem.abstract_state(&world);
        let (next, policy) = match execute_policy(skill, &cond, &world, stat, resolution) {
            Ok(r) => r,
            Err(e) => return Err((ExecError::ContractViolation { step: k, skill: label, check: e.to_string() }, trace)),
        };
        world = next;
        trace.push(event("policy", &world, &before, None));
        require!(same_path(&policy, &cip.policy), "policy rollout matches the plan");
        if !cond.termination.is_unsatisfiable() {
            require!(checked(&cond.termination, &world), "policy terminal in beta");
        }

        require!(cip.tail.start().approx_eq(&world.robot_config, MATCH_TOL), "tail starts at the policy terminal");
        require!(validate(&cip.tail, &world.scene(stat), fp, &world.attachment_radii(), resolution), "tail collision-free");
        let before = problem.abstract_state(&world);
        world = match world.step_trajectory(stat, &cip.tail, resolution) {
            Ok((w, _)) => w,
            Err(e) => return Err((ExecError::ContractViolation { step: k, skill: label, check: e.to_string() }, trace)),
        };
        trace.push(event("tail", &world, &before, None));
        require!(world.robot_config.approx_eq(&cip.exit_config, MATCH_TOL), "tail ends at the exit configuration");
        require!(!checked(&lam_b, &world), "tail.end outside envelope of beta");
    }
    Ok((world, trace))
}

fn same_path(a: &Trajectory, b: &Trajectory) -> bool {
    a.waypoints.len() == b.waypoints.len() && a.waypoints.iter().zip(&b.waypoints).all(|(x, y)| x.approx_eq(y, MATCH_TOL))
}

/// Non-navigation skill labels, in plan order.
pub fn skill_skeleton(plan: &HybridPlan) -> Vec<String> {
    plan.steps.iter().filter(|s| s.cip.skill.kind != SkillKind::Goto).map(|s| s.cip.skill.label.clone()).collect()
}
