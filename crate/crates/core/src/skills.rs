//! Object-centric skills as options, their kinematic envelopes, and CIP
//! construction (head motion plan, policy rollout, tail motion plan).

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    angdiff, collision_free, end_effector, normalize_angle, point_segment_distance, Configuration, Footprint, Point, Polygon,
    Pose2, Trajectory,
};
use crate::motion::{plan_motion, Goal, GoalRegion, MotionError, MotionParams, MotionQuery};
use crate::symbolic::{Domain, PlanStep};
use crate::world::{AttrValue, StaticScene, WorldError, WorldState};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Target {
    Point { at: Point },
    Segment { from: Point, to: Point },
}

impl Target {
    pub fn distance(&self, p: Point) -> f64 {
        match self {
            Target::Point { at } => (p[0] - at[0]).hypot(p[1] - at[1]),
            Target::Segment { from, to } => point_segment_distance(p, *from, *to),
        }
    }

    /// Closest point of the target to `p`.
    pub fn closest(&self, p: Point) -> Point {
        match self {
            Target::Point { at } => *at,
            Target::Segment { from, to } => {
                let d = [to[0] - from[0], to[1] - from[1]];
                let l2 = d[0] * d[0] + d[1] * d[1];
                let t = if l2 == 0.0 { 0.0 } else { (((p[0] - from[0]) * d[0] + (p[1] - from[1]) * d[1]) / l2).clamp(0.0, 1.0) };
                [from[0] + t * d[0], from[1] + t * d[1]]
            }
        }
    }
}

/// Primitive spatial constraint over the robot configuration and attachments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "constraint", rename_all = "snake_case")]
pub enum Spatial {
    /// End-effector within `tolerance` of the target.
    Near { target: Target, tolerance: f64 },
    /// Heading within `tolerance` of the bearing from the base to the target.
    Facing { target: Target, tolerance: f64 },
    ArmRange { min: f64, max: f64 },
    InRegion { region: String, polygon: Polygon },
    Attached { object: String },
    HandEmpty,
    /// Satisfied by no configuration.
    Never,
}

impl Spatial {
    pub fn holds(&self, c: &Configuration, fp: &Footprint, attached: &BTreeSet<String>) -> bool {
        match self {
            Spatial::Near { target, tolerance } => target.distance(end_effector(c, fp).xy()) <= *tolerance,
            Spatial::Facing { target, tolerance } => {
                let p = target.closest(c.base.xy());
                let bearing = (p[1] - c.base.y).atan2(p[0] - c.base.x);
                angdiff(bearing, c.base.theta) <= *tolerance
            }
            Spatial::ArmRange { min, max } => c.arm >= *min && c.arm <= *max,
            Spatial::InRegion { polygon, .. } => polygon.contains(c.base.xy()),
            Spatial::Attached { object } => attached.contains(object),
            Spatial::HandEmpty => attached.is_empty(),
            Spatial::Never => false,
        }
    }
}

impl fmt::Display for Spatial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Spatial::Near { tolerance, .. } => write!(f, "near({tolerance})"),
            Spatial::Facing { tolerance, .. } => write!(f, "facing({tolerance})"),
            Spatial::ArmRange { min, max } => write!(f, "arm-range({min},{max})"),
            Spatial::InRegion { region, .. } => write!(f, "in-region({region})"),
            Spatial::Attached { object } => write!(f, "attached({object})"),
            Spatial::HandEmpty => f.write_str("hand-empty"),
            Spatial::Never => f.write_str("never"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub object: String,
    pub attribute: String,
    pub value: bool,
}

/// Conjunction of spatial constraints and observed attribute literals.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Condition {
    pub spatial: Vec<Spatial>,
    pub observational: Vec<Observation>,
}

impl Condition {
    /// λ: the condition with its observational conjunct dropped.
    pub fn envelope(&self) -> Condition {
        Condition { spatial: self.spatial.clone(), observational: vec![] }
    }

    pub fn is_unsatisfiable(&self) -> bool {
        self.spatial.contains(&Spatial::Never)
    }

    pub fn spatial_holds(&self, c: &Configuration, fp: &Footprint, attached: &BTreeSet<String>) -> bool {
        self.spatial.iter().all(|s| s.holds(c, fp, attached))
    }

    /// Full check against a world: spatial part at the robot's configuration, observations via `observe`.
    pub fn check(&self, world: &WorldState, stat: &StaticScene) -> Result<bool, WorldError> {
        for o in &self.observational {
            if world.observe(&o.object, &o.attribute)? != AttrValue::Bool(o.value) {
                return Ok(false);
            }
        }
        Ok(self.spatial_holds(&world.robot_config, &stat.footprint, &world.attached))
    }
}

pub fn kinematic_envelope(c: &Condition) -> Condition {
    c.envelope()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkillKind {
    Goto,
    Pick,
    Place,
    Articulate,
    Erase,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopeParams {
    #[serde(default = "default_arm_range")]
    pub arm_range: [f64; 2],
    /// Bearing from target to base: centre and half-width, radians.
    #[serde(default)]
    pub approach: Option<[f64; 2]>,
    #[serde(default = "default_facing")]
    pub facing_tolerance: f64,
    #[serde(default = "default_jitter")]
    pub heading_jitter: f64,
    #[serde(default = "default_jitter")]
    pub target_jitter: f64,
    /// Offset of the end-effector from a segment target along its left normal.
    #[serde(default)]
    pub standoff: f64,
    /// Minimum clearance kept from region boundaries when sampling navigation goals.
    #[serde(default = "default_clearance")]
    pub clearance: f64,
}

fn default_arm_range() -> [f64; 2] {
    [0.1, 1.0]
}
fn default_facing() -> f64 {
    0.15
}
fn default_jitter() -> f64 {
    0.02
}
fn default_clearance() -> f64 {
    0.4
}

impl Default for EnvelopeParams {
    fn default() -> Self {
        EnvelopeParams {
            arm_range: default_arm_range(),
            approach: None,
            facing_tolerance: default_facing(),
            heading_jitter: default_jitter(),
            target_jitter: default_jitter(),
            standoff: 0.0,
            clearance: default_clearance(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationSpec {
    pub object: String,
    pub attribute: String,
    pub value: bool,
}

/// Registry entry binding a symbolic schema to a skill.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkillSpec {
    pub kind: SkillKind,
    pub label: String,
    /// Schema variables shown in the skill's display name.
    #[serde(default)]
    pub display: Vec<String>,
    /// Role name (target, support, tool, room) to schema variable.
    #[serde(default)]
    pub roles: BTreeMap<String, String>,
    #[serde(default)]
    pub anchor: Option<String>,
    #[serde(default)]
    pub mode: Option<String>,
    #[serde(default)]
    pub envelope: EnvelopeParams,
    #[serde(default)]
    pub initiation: Vec<ObservationSpec>,
    #[serde(default)]
    pub termination: Vec<ObservationSpec>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegistryError {
    #[error("registry parse error: {0}")]
    Parse(String),
    #[error("schema {0} has no registry entry")]
    Missing(String),
    #[error("registry entry {0} names no schema of the domain")]
    UnknownSchema(String),
    #[error("registry entry {entry}: {message}")]
    Invalid { entry: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillRegistry {
    pub skills: BTreeMap<String, SkillSpec>,
}

const REQUIRED_ROLES: &[(SkillKind, &[&str])] = &[
    (SkillKind::Goto, &["target"]),
    (SkillKind::Pick, &["target"]),
    (SkillKind::Place, &["target", "support"]),
    (SkillKind::Articulate, &["target"]),
    (SkillKind::Erase, &["target", "tool"]),
];

impl SkillRegistry {
    /// Parses a registry and checks it covers every schema of `domain`.
    pub fn load(text: &str, domain: &Domain) -> Result<Self, RegistryError> {
        let reg: SkillRegistry = serde_json::from_str(text).map_err(|e| RegistryError::Parse(e.to_string()))?;
        for s in &domain.schemas {
            if !reg.skills.contains_key(&s.name) {
                return Err(RegistryError::Missing(s.name.clone()));
            }
        }
        for (name, spec) in &reg.skills {
            let schema = domain.schema(name).ok_or_else(|| RegistryError::UnknownSchema(name.clone()))?;
            let invalid = |message: String| RegistryError::Invalid { entry: name.clone(), message };
            let vars: BTreeSet<&str> = schema.parameters.iter().map(|(v, _)| v.as_str()).collect();
            for v in spec.display.iter().chain(spec.roles.values()) {
                if !vars.contains(v.as_str()) {
                    return Err(invalid(format!("{v} is not a parameter of the schema")));
                }
            }
            for o in spec.initiation.iter().chain(&spec.termination) {
                if o.object.starts_with('?') && !vars.contains(o.object.as_str()) {
                    return Err(invalid(format!("{} is not a parameter of the schema", o.object)));
                }
            }
            let required = REQUIRED_ROLES.iter().find(|(k, _)| *k == spec.kind).map(|(_, r)| *r).unwrap_or(&[]);
            for r in required {
                if !spec.roles.contains_key(*r) {
                    return Err(invalid(format!("missing role {r}")));
                }
            }
            if spec.kind == SkillKind::Articulate && (spec.mode.is_none() || spec.anchor.is_none()) {
                return Err(invalid("articulation skills need a mode and an anchor".into()));
            }
            let [lo, hi] = spec.envelope.arm_range;
            if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
                return Err(invalid("arm_range must lie within [0, 1]".into()));
            }
        }
        Ok(reg)
    }

    /// Binds a plan step to its skill.
    pub fn ground(&self, step: &PlanStep, domain: &Domain) -> Option<GroundedSkill> {
        let spec = self.skills.get(&step.schema)?;
        let schema = domain.schema(&step.schema)?;
        if schema.parameters.len() != step.args.len() {
            return None;
        }
        let binding: BTreeMap<&str, &str> =
            schema.parameters.iter().map(|(v, _)| v.as_str()).zip(step.args.iter().map(String::as_str)).collect();
        let bind = |v: &str| binding.get(v).map_or_else(|| v.to_string(), |s| s.to_string());
        let roles = spec.roles.iter().map(|(r, v)| (r.clone(), bind(v))).collect();
        let obs = |l: &[ObservationSpec]| {
            l.iter().map(|o| Observation { object: bind(&o.object), attribute: o.attribute.clone(), value: o.value }).collect()
        };
        Some(GroundedSkill {
            step: step.clone(),
            kind: spec.kind,
            label: format!("{}({})", spec.label, spec.display.iter().map(|v| bind(v)).collect::<Vec<_>>().join(",")),
            roles,
            anchor: spec.anchor.clone(),
            mode: spec.mode.clone(),
            envelope: spec.envelope.clone(),
            initiation_obs: obs(&spec.initiation),
            termination_obs: obs(&spec.termination),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundedSkill {
    pub step: PlanStep,
    pub kind: SkillKind,
    /// Display name, e.g. `Place(e1,f1)`.
    pub label: String,
    pub roles: BTreeMap<String, String>,
    pub anchor: Option<String>,
    pub mode: Option<String>,
    pub envelope: EnvelopeParams,
    pub initiation_obs: Vec<Observation>,
    pub termination_obs: Vec<Observation>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SkillError {
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("{skill}: missing role {role}")]
    MissingRole { skill: String, role: String },
    #[error("{skill}: unknown region {region}")]
    UnknownRegion { skill: String, region: String },
    #[error("{0}: no valid sample within budget")]
    Exhausted(String),
    #[error("{0}: initiation condition does not hold")]
    InitiationViolated(String),
    #[error("{skill}: policy failure: {reason}")]
    PolicyFailure { skill: String, reason: String },
}

/// The grounded initiation and termination conditions of a skill in a world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillConditions {
    pub initiation: Condition,
    pub termination: Condition,
    /// Where the end-effector is aimed.
    pub target: Option<Target>,
}

const STOWED_ARM_MIN: f64 = 0.05;

impl GroundedSkill {
    pub fn role(&self, role: &str) -> Result<&str, SkillError> {
        self.roles
            .get(role)
            .map(String::as_str)
            .ok_or_else(|| SkillError::MissingRole { skill: self.label.clone(), role: role.into() })
    }

    fn room_constraint(&self, stat: &StaticScene, role: &str) -> Result<Option<Spatial>, SkillError> {
        let Some(room) = self.roles.get(role) else { return Ok(None) };
        let region = stat
            .region(room)
            .ok_or_else(|| SkillError::UnknownRegion { skill: self.label.clone(), region: room.clone() })?;
        Ok(Some(Spatial::InRegion { region: room.clone(), polygon: region.polygon.clone() }))
    }

    /// Instantiates I and β against the world the skill will start from.
    pub fn conditions(&self, world: &WorldState, stat: &StaticScene) -> Result<SkillConditions, SkillError> {
        let tol = &stat.tolerances;
        let env = &self.envelope;
        let arm = Spatial::ArmRange { min: env.arm_range[0], max: env.arm_range[1] };
        let stowed = Spatial::ArmRange { min: STOWED_ARM_MIN, max: 1.0 };
        let room = self.room_constraint(stat, "room")?;
        let target_obj = self.role("target")?;
        let (target, tolerance) = match self.kind {
            SkillKind::Goto => {
                let region = self.room_constraint(stat, "target")?.expect("target role checked");
                let initiation = Condition {
                    spatial: vec![region, Spatial::ArmRange { min: 0.0, max: 0.0 }],
                    observational: self.initiation_obs.clone(),
                };
                let termination = Condition { spatial: vec![Spatial::Never], observational: self.termination_obs.clone() };
                return Ok(SkillConditions { initiation, termination, target: None });
            }
            SkillKind::Pick => {
                let o = world.object(target_obj)?;
                (Target::Point { at: [o.pose.x, o.pose.y] }, tol.grasp)
            }
            SkillKind::Place => (Target::Point { at: world.object(self.role("support")?)?.anchor("place") }, tol.place),
            SkillKind::Articulate => {
                let anchor = self.anchor.as_deref().unwrap_or("handle");
                (Target::Point { at: world.object(target_obj)?.anchor(anchor) }, tol.grasp)
            }
            SkillKind::Erase => {
                let s = world.surfaces.get(target_obj).ok_or_else(|| WorldError::UnknownObject(target_obj.into()))?;
                (Target::Segment { from: s.segment[0], to: s.segment[1] }, s.contact_tolerance)
            }
        };
        let near = Spatial::Near { target: target.clone(), tolerance };
        let facing = Spatial::Facing { target: target.clone(), tolerance: env.facing_tolerance };
        let (pre_hand, post_hand) = match self.kind {
            SkillKind::Pick => (Spatial::HandEmpty, Spatial::Attached { object: target_obj.into() }),
            SkillKind::Place => {
                let o = target_obj.to_string();
                (Spatial::Attached { object: o }, Spatial::HandEmpty)
            }
            SkillKind::Articulate => (Spatial::HandEmpty, Spatial::HandEmpty),
            SkillKind::Erase => {
                let tool = self.role("tool")?.to_string();
                (Spatial::Attached { object: tool.clone() }, Spatial::Attached { object: tool })
            }
            SkillKind::Goto => unreachable!(),
        };
        let mut ini = vec![pre_hand, near.clone(), facing, arm];
        let mut term = vec![post_hand, near, stowed];
        if let Some(r) = room {
            ini.push(r.clone());
            term.push(r);
        }
        Ok(SkillConditions {
            initiation: Condition { spatial: ini, observational: self.initiation_obs.clone() },
            termination: Condition { spatial: term, observational: self.termination_obs.clone() },
            target: Some(target),
        })
    }
}

fn left_normal(from: Point, to: Point) -> Point {
    let (dx, dy) = (to[0] - from[0], to[1] - from[1]);
    let l = dx.hypot(dy);
    [-dy / l, dx / l]
}

/// One raw draw from the skill's pose generator; may be invalid.
fn draw_entry(skill: &GroundedSkill, cond: &SkillConditions, stat: &StaticScene, rng: &mut ChaCha8Rng) -> Configuration {
    let env = &skill.envelope;
    let fp = &stat.footprint;
    let Some(target) = &cond.target else {
        // navigation: anywhere inside the goal room, arm stowed
        let poly = cond
            .initiation
            .spatial
            .iter()
            .find_map(|s| match s {
                Spatial::InRegion { polygon, .. } => Some(polygon),
                _ => None,
            })
            .expect("navigation conditions carry a region");
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for v in &poly.vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        let m = env.clearance;
        let x = if hi[0] - lo[0] > 2.0 * m { rng.gen_range(lo[0] + m..hi[0] - m) } else { (lo[0] + hi[0]) / 2.0 };
        let y = if hi[1] - lo[1] > 2.0 * m { rng.gen_range(lo[1] + m..hi[1] - m) } else { (lo[1] + hi[1]) / 2.0 };
        return Configuration::new(x, y, rng.gen_range(-PI..PI), 0.0);
    };
    let (q, default_bearing) = match target {
        Target::Point { at } => {
            let r = env.target_jitter * rng.gen_range(0.0f64..1.0).sqrt();
            let a = rng.gen_range(-PI..PI);
            ([at[0] + r * a.cos(), at[1] + r * a.sin()], None)
        }
        Target::Segment { from, to } => {
            let t = rng.gen_range(0.0..=1.0);
            let n = left_normal(*from, *to);
            let p = [from[0] + t * (to[0] - from[0]), from[1] + t * (to[1] - from[1])];
            ([p[0] + env.standoff * n[0], p[1] + env.standoff * n[1]], Some(n[1].atan2(n[0])))
        }
    };
    let bearing = match (env.approach, default_bearing) {
        (Some([c, w]), _) => c + rng.gen_range(-w..=w),
        (None, Some(b)) => b,
        (None, None) => rng.gen_range(-PI..PI),
    };
    let arm = rng.gen_range(env.arm_range[0]..=env.arm_range[1]);
    let d = fp.reach_at(arm);
    let (base_x, base_y) = (q[0] + d * bearing.cos(), q[1] + d * bearing.sin());
    let heading = normalize_angle(bearing + PI);
    let jitter = if env.heading_jitter > 0.0 { rng.gen_range(-env.heading_jitter..=env.heading_jitter) } else { 0.0 };
    Configuration::new(base_x, base_y, heading + jitter, arm)
}

/// Draws up to `count` collision-free configurations satisfying λ(I), using at most `draws` raw samples.
pub fn sample_entry(
    skill: &GroundedSkill,
    world: &WorldState,
    stat: &StaticScene,
    rng: &mut ChaCha8Rng,
    count: usize,
    draws: usize,
) -> Result<Vec<Configuration>, SkillError> {
    let cond = skill.conditions(world, stat)?;
    let envelope = cond.initiation.envelope();
    let scene = world.scene(stat);
    let held = world.attachment_radii();
    let mut out = Vec::new();
    for _ in 0..draws {
        let c = draw_entry(skill, &cond, stat, rng);
        if envelope.spatial_holds(&c, &stat.footprint, &world.attached) && collision_free(&scene, &c, &stat.footprint, &held) {
            out.push(c);
            if out.len() == count {
                break;
            }
        }
    }
    if out.is_empty() {
        Err(SkillError::Exhausted(skill.label.clone()))
    } else {
        Ok(out)
    }
}

/// Configurations outside λ(β): the current one if it already qualifies,
/// then arm retraction in place, then radial back-offs with the arm stowed.
pub fn sample_exit(
    skill: &GroundedSkill,
    termination: &Condition,
    world: &WorldState,
    stat: &StaticScene,
    rng: &mut ChaCha8Rng,
    draws: usize,
) -> Result<Configuration, SkillError> {
    let envelope = termination.envelope();
    let scene = world.scene(stat);
    let held = world.attachment_radii();
    let fp = &stat.footprint;
    let ok = |c: &Configuration| !envelope.spatial_holds(c, fp, &world.attached) && collision_free(&scene, c, fp, &held);
    let cur = world.robot_config;
    if ok(&cur) {
        return Ok(cur);
    }
    let stowed = cur.with_arm(0.0);
    if ok(&stowed) {
        return Ok(stowed);
    }
    let (s, c) = cur.base.theta.sin_cos();
    for _ in 0..draws {
        let back = rng.gen_range(0.05..1.0);
        let turn = rng.gen_range(-0.5..0.5);
        let cand = Configuration::new(cur.base.x - back * c, cur.base.y - back * s, cur.base.theta + turn, 0.0);
        if ok(&cand) {
            return Ok(cand);
        }
    }
    Err(SkillError::Exhausted(skill.label.clone()))
}

/// Arm extension that brings the end-effector closest to `p` along the current heading.
fn approach_arm(c: &Configuration, fp: &Footprint, p: Point) -> f64 {
    let (s, co) = c.base.theta.sin_cos();
    let along = (p[0] - c.base.x) * co + (p[1] - c.base.y) * s;
    ((along - fp.base_radius) / fp.arm_max_reach).clamp(0.0, 1.0)
}

/// Runs the policy from a world satisfying the initiation condition.
/// Returns the resulting world and the configurations the policy visited.
pub fn execute_policy(
    skill: &GroundedSkill,
    cond: &SkillConditions,
    world: &WorldState,
    stat: &StaticScene,
    resolution: f64,
) -> Result<(WorldState, Trajectory), SkillError> {
    if !cond.initiation.check(world, stat)? {
        return Err(SkillError::InitiationViolated(skill.label.clone()));
    }
    let fp = &stat.footprint;
    let fail = |reason: String| SkillError::PolicyFailure { skill: skill.label.clone(), reason };
    let entry = world.robot_config;
    let approach = |p: Point| -> Result<(WorldState, Vec<Configuration>), SkillError> {
        let reach = entry.with_arm(approach_arm(&entry, fp, p));
        let traj = Trajectory::new(vec![entry, reach]);
        let (w, _) = world.step_trajectory(stat, &traj, resolution).map_err(|e| fail(e.to_string()))?;
        Ok((w, traj.waypoints))
    };
    let (next, trace) = match skill.kind {
        SkillKind::Goto => (world.clone(), vec![entry]),
        SkillKind::Pick => {
            let o = world.object(skill.role("target")?)?;
            let (w, trace) = approach([o.pose.x, o.pose.y])?;
            (w.attach(stat, skill.role("target")?).map_err(|e| fail(e.to_string()))?, trace)
        }
        SkillKind::Place => {
            let support = skill.role("support")?;
            let (w, trace) = approach(world.object(support)?.anchor("place"))?;
            (w.detach(stat, skill.role("target")?, support).map_err(|e| fail(e.to_string()))?, trace)
        }
        SkillKind::Articulate => {
            let target = skill.role("target")?;
            let anchor = world.object(target)?.anchor(skill.anchor.as_deref().unwrap_or("handle"));
            let (w, trace) = approach(anchor)?;
            let mode = skill.mode.as_deref().unwrap_or("open");
            (w.set_articulation(stat, target, mode).map_err(|e| fail(e.to_string()))?, trace)
        }
        SkillKind::Erase => {
            let board = skill.role("target")?;
            let grid = world.surfaces.get(board).ok_or_else(|| WorldError::UnknownObject(board.into()))?.clone();
            let n = left_normal(grid.segment[0], grid.segment[1]);
            let ee0 = end_effector(&entry, fp).xy();
            let shift = |p: Point| -> Configuration {
                let q = [p[0] + skill.envelope.standoff * n[0], p[1] + skill.envelope.standoff * n[1]];
                Configuration { base: Pose2 { x: entry.base.x + q[0] - ee0[0], y: entry.base.y + q[1] - ee0[1], theta: entry.base.theta }, arm: entry.arm }
            };
            let mut trace = vec![entry];
            trace.extend((0..grid.cells.len()).map(|i| shift(grid.cell_center(i))));
            let mut w = world.clone();
            for (k, pair) in trace.windows(2).enumerate() {
                let ee = end_effector(&pair[1], fp).xy();
                if !grid.in_contact(ee) {
                    return Err(fail(format!("contact lost at sweep point {}", k + 1)));
                }
                let (moved, _) = w.step_trajectory(stat, &Trajectory::new(pair.to_vec()), resolution).map_err(|e| fail(e.to_string()))?;
                w = moved.wipe(board, ee)?;
            }
            (w, trace)
        }
    };
    if !cond.termination.is_unsatisfiable() && !cond.termination.check(&next, stat)? {
        return Err(fail("termination condition not reached".into()));
    }
    Ok((next, Trajectory::new(trace)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    EntrySampling,
    HeadPlan,
    Policy,
    ExitSampling,
    TailPlan,
    /// The rolled-forward world disagrees with the symbolic prediction.
    Consistency,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::EntrySampling => "entry-sampling",
            Stage::HeadPlan => "head-plan",
            Stage::Policy => "policy",
            Stage::ExitSampling => "exit-sampling",
            Stage::TailPlan => "tail-plan",
            Stage::Consistency => "consistency",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{skill} failed at {stage}: {detail}")]
pub struct CipFailure {
    pub skill: String,
    pub stage: Stage,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CipBudgets {
    /// Entry configurations sampled per build; the head plan targets any of them.
    pub entries: usize,
    /// Raw pose-generator draws allowed per sampling request.
    pub draws: usize,
    pub motion: MotionParams,
}

impl Default for CipBudgets {
    fn default() -> Self {
        CipBudgets { entries: 1, draws: 500, motion: MotionParams::default() }
    }
}

/// A skill wrapped with the motion plans that enter and leave it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CipInstance {
    pub skill: GroundedSkill,
    pub head: Trajectory,
    pub policy: Trajectory,
    pub tail: Trajectory,
    pub entry_config: Configuration,
    pub exit_config: Configuration,
}

fn plan(
    world: &WorldState,
    stat: &StaticScene,
    start: Configuration,
    goal: Goal,
    params: MotionParams,
) -> Result<Trajectory, MotionError> {
    plan_motion(&MotionQuery {
        start,
        goal,
        scene: world.scene(stat),
        footprint: stat.footprint,
        attachments: world.attachment_radii(),
        params,
    })
}

/// Builds a CIP from the current world. On success also returns the world after the tail.
pub fn build_cip(
    skill: &GroundedSkill,
    world: &WorldState,
    stat: &StaticScene,
    rng: &mut ChaCha8Rng,
    budgets: &CipBudgets,
) -> Result<(CipInstance, WorldState), CipFailure> {
    let failure = |stage: Stage, detail: String| CipFailure { skill: skill.label.clone(), stage, detail };
    let res = budgets.motion.resolution;
    let cond = skill.conditions(world, stat).map_err(|e| failure(Stage::EntrySampling, e.to_string()))?;
    let envelope = cond.initiation.envelope();
    let here = world.robot_config;

    let head = if envelope.spatial_holds(&here, &stat.footprint, &world.attached) {
        Trajectory::single(here)
    } else {
        let entries = sample_entry(skill, world, stat, rng, budgets.entries.max(1), budgets.draws)
            .map_err(|e| failure(Stage::EntrySampling, e.to_string()))?;
        let goal = if entries.len() == 1 {
            Goal::Config(entries[0])
        } else {
            let set = entries.clone();
            let pick = entries.clone();
            Goal::Region(GoalRegion {
                contains: Arc::new(move |c: &Configuration| set.iter().any(|e| c.approx_eq(e, 1e-9))),
                sample: Arc::new(move |r: &mut ChaCha8Rng| Some(pick[r.gen_range(0..pick.len())])),
            })
        };
        let params = MotionParams { seed: rng.gen(), ..budgets.motion };
        plan(world, stat, here, goal, params).map_err(|e| failure(Stage::HeadPlan, e.to_string()))?
    };
    let (at_entry, _) = world.step_trajectory(stat, &head, res).map_err(|e| failure(Stage::HeadPlan, e.to_string()))?;
    let entry_config = at_entry.robot_config;

    let (after_policy, policy) =
        execute_policy(skill, &cond, &at_entry, stat, res).map_err(|e| failure(Stage::Policy, e.to_string()))?;

    let exit_config = sample_exit(skill, &cond.termination, &after_policy, stat, rng, budgets.draws)
        .map_err(|e| failure(Stage::ExitSampling, e.to_string()))?;
    let tail_start = after_policy.robot_config;
    let params = MotionParams { seed: rng.gen(), ..budgets.motion };
    let tail = plan(&after_policy, stat, tail_start, Goal::Config(exit_config), params)
        .map_err(|e| failure(Stage::TailPlan, e.to_string()))?;
    let (done, _) = after_policy.step_trajectory(stat, &tail, res).map_err(|e| failure(Stage::TailPlan, e.to_string()))?;
    Ok((CipInstance { skill: skill.clone(), head, policy, tail, entry_config, exit_config: done.robot_config }, done))
}

/// Seeds an independent stream for one build attempt.
pub fn attempt_rng(seed: u64, plan_index: usize, step: usize, attempt: usize) -> ChaCha8Rng {
    let mut z = seed;
    for v in [plan_index as u64, step as u64, attempt as u64] {
        z = splitmix(z ^ splitmix(v.wrapping_add(0x9e37_79b9_7f4a_7c15)));
    }
    ChaCha8Rng::seed_from_u64(z)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
