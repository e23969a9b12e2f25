//! On-disk plan and trace formats.
//!
//! A plan file records sha256 digests of the four inputs it was solved
//! against; [`check_digests`] refuses to replay it against anything else.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::geometry::{Configuration, Pose2, Trajectory};
use crate::skills::CipInstance;
use crate::symbolic::{PlanStep, SymbolicPlan};
use crate::tasp::{HybridPlan, HybridProblem, PlannedStep, SolveStats, TraceEvent};

pub const FORMAT: &str = "tasp-plan/1";

pub fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDigests {
    pub domain: String,
    pub problem: String,
    pub scene: String,
    pub skills: String,
}

impl InputDigests {
    pub fn of(domain: &str, problem: &str, scene: &str, skills: &str) -> Self {
        InputDigests { domain: sha256_hex(domain), problem: sha256_hex(problem), scene: sha256_hex(scene), skills: sha256_hex(skills) }
    }

    /// Names of the inputs whose digest differs.
    pub fn mismatches(&self, other: &InputDigests) -> Vec<&'static str> {
        let mut out = Vec::new();
        for (name, a, b) in [
            ("domain", &self.domain, &other.domain),
            ("problem", &self.problem, &other.problem),
            ("scene", &self.scene, &other.scene),
            ("skills", &self.skills, &other.skills),
        ] {
            if a != b {
                out.push(name);
            }
        }
        out
    }
}

/// `[x, y, theta, arm]`
pub type Waypoint = [f64; 4];

fn to_waypoint(c: &Configuration) -> Waypoint {
    c.as_array()
}

// theta is stored already normalized; rebuilding through a constructor could move it by an ulp
fn from_waypoint(w: &Waypoint) -> Configuration {
    Configuration { base: Pose2 { x: w[0], y: w[1], theta: w[2] }, arm: w[3] }
}

fn waypoints(t: &Trajectory) -> Vec<Waypoint> {
    t.waypoints.iter().map(to_waypoint).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub action: String,
    pub args: Vec<String>,
    pub skill: String,
    pub attempts: usize,
    pub entry: Waypoint,
    pub exit: Waypoint,
    pub head: Vec<Waypoint>,
    pub policy: Vec<Waypoint>,
    pub tail: Vec<Waypoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanFile {
    pub format: String,
    pub seed: u64,
    pub inputs: InputDigests,
    pub symbolic: Vec<String>,
    pub cost: f64,
    pub stats: SolveStats,
    pub steps: Vec<StepRecord>,
}

#[derive(Debug, Error)]
pub enum PlanIoError {
    #[error("malformed plan file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported plan format {0:?}")]
    Format(String),
    #[error("plan was made for different inputs ({})", .0.join(", "))]
    DigestMismatch(Vec<&'static str>),
    #[error("step {step}: {action} has no skill in the registry")]
    Unbound { step: usize, action: String },
    #[error("step {step}: empty trajectory")]
    EmptyTrajectory { step: usize },
}

impl PlanFile {
    pub fn new(plan: &HybridPlan, inputs: InputDigests, seed: u64) -> Self {
        let steps = plan
            .steps
            .iter()
            .map(|s| StepRecord {
                action: s.cip.skill.step.schema.clone(),
                args: s.cip.skill.step.args.clone(),
                skill: s.cip.skill.label.clone(),
                attempts: s.attempts,
                entry: to_waypoint(&s.cip.entry_config),
                exit: to_waypoint(&s.cip.exit_config),
                head: waypoints(&s.cip.head),
                policy: waypoints(&s.cip.policy),
                tail: waypoints(&s.cip.tail),
            })
            .collect();
        PlanFile {
            format: FORMAT.into(),
            seed,
            inputs,
            symbolic: plan.symbolic.steps.iter().map(ToString::to_string).collect(),
            cost: plan.symbolic.cost,
            stats: plan.stats.clone(),
            steps,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plan file serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, PlanIoError> {
        let f: PlanFile = serde_json::from_str(text)?;
        if f.format != FORMAT {
            return Err(PlanIoError::Format(f.format));
        }
        Ok(f)
    }

    pub fn check_digests(&self, actual: &InputDigests) -> Result<(), PlanIoError> {
        let bad = self.inputs.mismatches(actual);
        if bad.is_empty() {
            Ok(())
        } else {
            Err(PlanIoError::DigestMismatch(bad))
        }
    }

    /// Rebuilds executable steps, grounding each action through the problem's registry.
    pub fn planned_steps(&self, problem: &HybridProblem) -> Result<Vec<PlannedStep>, PlanIoError> {
        self.steps
            .iter()
            .enumerate()
            .map(|(k, r)| {
                let step = PlanStep { schema: r.action.clone(), args: r.args.clone() };
                let skill = problem
                    .registry
                    .ground(&step, &problem.domain)
                    .ok_or_else(|| PlanIoError::Unbound { step: k, action: step.to_string() })?;
                let traj = |w: &[Waypoint]| {
                    if w.is_empty() {
                        Err(PlanIoError::EmptyTrajectory { step: k })
                    } else {
                        Ok(Trajectory::new(w.iter().map(from_waypoint).collect()))
                    }
                };
                Ok(PlannedStep {
                    cip: CipInstance {
                        skill,
                        head: traj(&r.head)?,
                        policy: traj(&r.policy)?,
                        tail: traj(&r.tail)?,
                        entry_config: from_waypoint(&r.entry),
                        exit_config: from_waypoint(&r.exit),
                    },
                    attempts: r.attempts,
                })
            })
            .collect()
    }

    pub fn symbolic_plan(&self) -> SymbolicPlan {
        SymbolicPlan {
            steps: self.steps.iter().map(|r| PlanStep { schema: r.action.clone(), args: r.args.clone() }).collect(),
            cost: self.cost,
        }
    }
}

/// One JSON object per line.
pub fn trace_jsonl(events: &[TraceEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&serde_json::to_string(e).expect("trace event serializes"));
        out.push('\n');
    }
    out
}

pub fn parse_trace(text: &str) -> Result<Vec<TraceEvent>, PlanIoError> {
    text.lines().filter(|l| !l.trim().is_empty()).map(|l| Ok(serde_json::from_str(l)?)).collect()
}
