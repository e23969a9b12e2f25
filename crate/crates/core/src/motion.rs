//! Goal-biased RRT with shortcut smoothing over the arm-on-a-disc C-space.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::{collision_free, distance, segment_valid, Configuration, Footprint, Scene, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionParams {
    pub step_size: f64,
    pub goal_bias: f64,
    pub max_iterations: usize,
    pub resolution: f64,
    pub shortcut_passes: usize,
    pub seed: u64,
}

impl Default for MotionParams {
    fn default() -> Self {
        MotionParams { step_size: 0.25, goal_bias: 0.1, max_iterations: 5000, resolution: 0.01, shortcut_passes: 50, seed: 0 }
    }
}

impl MotionParams {
    pub fn with_seed(seed: u64) -> Self {
        MotionParams { seed, ..Self::default() }
    }

    fn check(&self) -> Result<(), MotionError> {
        let ok = (0.0..=1.0).contains(&self.goal_bias)
            && self.step_size > 0.0
            && self.resolution > 0.0
            && self.max_iterations > 0
            && self.step_size.is_finite()
            && self.resolution.is_finite();
        if ok {
            Ok(())
        } else {
            Err(MotionError::BadParams)
        }
    }
}

pub type RegionPredicate = Arc<dyn Fn(&Configuration) -> bool + Send + Sync>;
pub type RegionSampler = Arc<dyn Fn(&mut ChaCha8Rng) -> Option<Configuration> + Send + Sync>;

/// A set of configurations given by a membership test and a generator of members.
#[derive(Clone)]
pub struct GoalRegion {
    pub contains: RegionPredicate,
    pub sample: RegionSampler,
}

impl fmt::Debug for GoalRegion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("GoalRegion")
    }
}

#[derive(Clone, Debug)]
pub enum Goal {
    Config(Configuration),
    Region(GoalRegion),
}

impl Goal {
    pub fn satisfied_by(&self, c: &Configuration) -> bool {
        match self {
            Goal::Config(g) => c.approx_eq(g, 1e-9),
            Goal::Region(r) => (r.contains)(c),
        }
    }
}

#[derive(Clone, Debug)]
pub struct MotionQuery {
    pub start: Configuration,
    pub goal: Goal,
    pub scene: Scene,
    pub footprint: Footprint,
    pub attachments: Vec<f64>,
    pub params: MotionParams,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MotionError {
    #[error("start configuration is in collision")]
    InvalidStart,
    #[error("goal configuration is in collision")]
    InvalidGoal,
    #[error("motion parameters out of range")]
    BadParams,
    #[error("no path found within {iterations} iterations")]
    Infeasible { iterations: usize },
}

struct Tree {
    nodes: Vec<Configuration>,
    parent: Vec<usize>,
}

impl Tree {
    fn nearest(&self, q: &Configuration, fp: &Footprint) -> usize {
        let mut best = (0, f64::INFINITY);
        for (i, n) in self.nodes.iter().enumerate() {
            let d = distance(n, q, fp);
            if d < best.1 {
                best = (i, d);
            }
        }
        best.0
    }

    fn push(&mut self, q: Configuration, parent: usize) -> usize {
        self.nodes.push(q);
        self.parent.push(parent);
        self.nodes.len() - 1
    }

    fn path_to(&self, mut i: usize) -> Vec<Configuration> {
        let mut out = vec![self.nodes[i]];
        while i != 0 {
            i = self.parent[i];
            out.push(self.nodes[i]);
        }
        out.reverse();
        out
    }
}

fn sample_uniform(rng: &mut ChaCha8Rng, scene: &Scene, fp: &Footprint) -> Configuration {
    let r = fp.base_radius;
    let (lo, hi) = (scene.bounds.min, scene.bounds.max);
    let x = if hi[0] - lo[0] > 2.0 * r { rng.gen_range(lo[0] + r..hi[0] - r) } else { (lo[0] + hi[0]) / 2.0 };
    let y = if hi[1] - lo[1] > 2.0 * r { rng.gen_range(lo[1] + r..hi[1] - r) } else { (lo[1] + hi[1]) / 2.0 };
    Configuration::new(x, y, rng.gen_range(-PI..PI), rng.gen_range(0.0..=1.0))
}

fn steer(from: &Configuration, to: &Configuration, step: f64, fp: &Footprint) -> Configuration {
    let d = distance(from, to, fp);
    if d <= step {
        *to
    } else {
        from.interpolate(to, step / d)
    }
}

/// Plans a collision-free trajectory from `query.start` to the goal.
pub fn plan_motion(query: &MotionQuery) -> Result<Trajectory, MotionError> {
    query.params.check()?;
    let (scene, fp, held, p) = (&query.scene, &query.footprint, query.attachments.as_slice(), &query.params);
    if !collision_free(scene, &query.start, fp, held) {
        return Err(MotionError::InvalidStart);
    }
    if query.goal.satisfied_by(&query.start) {
        return Ok(Trajectory::single(query.start));
    }
    if let Goal::Config(g) = &query.goal {
        if !collision_free(scene, g, fp, held) {
            return Err(MotionError::InvalidGoal);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let valid = |a: &Configuration, b: &Configuration| segment_valid(scene, a, b, fp, held, p.resolution);
    let admissible = |c: &Configuration| collision_free(scene, c, fp, held) && query.goal.satisfied_by(c);
    let draw_goal = |rng: &mut ChaCha8Rng| -> Option<Configuration> {
        match &query.goal {
            Goal::Config(g) => Some(*g),
            Goal::Region(r) => (r.sample)(rng).filter(|c| admissible(c)),
        }
    };

    let mut tree = Tree { nodes: vec![query.start], parent: vec![0] };
    let mut found = None;
    if let Some(g) = draw_goal(&mut rng) {
        if valid(&query.start, &g) {
            found = Some(tree.push(g, 0));
        }
    }
    let mut targets: Vec<Configuration> = Vec::new();
    for _ in 0..p.max_iterations {
        if found.is_some() {
            break;
        }
        let biased = rng.gen_bool(p.goal_bias);
        let target = if biased {
            match draw_goal(&mut rng) {
                Some(g) => {
                    targets.push(g);
                    g
                }
                None => sample_uniform(&mut rng, scene, fp),
            }
        } else {
            sample_uniform(&mut rng, scene, fp)
        };
        let near = tree.nearest(&target, fp);
        let q = steer(&tree.nodes[near], &target, p.step_size, fp);
        if !collision_free(scene, &q, fp, held) || !valid(&tree.nodes[near], &q) {
            continue;
        }
        let id = tree.push(q, near);
        if admissible(&q) {
            found = Some(id);
            break;
        }
        // connect straight to any known goal member within one step
        let goals: Vec<Configuration> = match &query.goal {
            Goal::Config(g) => vec![*g],
            Goal::Region(_) => targets.clone(),
        };
        for g in goals {
            if distance(&q, &g, fp) <= p.step_size && valid(&q, &g) {
                found = Some(tree.push(g, id));
                break;
            }
        }
    }
    let end = found.ok_or(MotionError::Infeasible { iterations: p.max_iterations })?;
    let raw = Trajectory::new(tree.path_to(end));
    Ok(shortcut_with(&raw, scene, fp, held, p, &mut rng))
}

/// Random waypoint-pair shortcutting with a generator seeded from `params.seed`.
pub fn shortcut(traj: &Trajectory, scene: &Scene, footprint: &Footprint, attachments: &[f64], params: &MotionParams) -> Trajectory {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed ^ 0x5eed_5407_c0de);
    shortcut_with(traj, scene, footprint, attachments, params, &mut rng)
}

fn shortcut_with(
    traj: &Trajectory,
    scene: &Scene,
    fp: &Footprint,
    held: &[f64],
    p: &MotionParams,
    rng: &mut ChaCha8Rng,
) -> Trajectory {
    let mut w = traj.waypoints.clone();
    for _ in 0..p.shortcut_passes {
        if w.len() < 3 {
            break;
        }
        let i = rng.gen_range(0..w.len() - 2);
        let j = rng.gen_range(i + 2..w.len());
        if segment_valid(scene, &w[i], &w[j], fp, held, p.resolution) {
            w.drain(i + 1..j);
        }
    }
    Trajectory::new(w)
}

/// True iff every consecutive waypoint pair passes the segment check.
pub fn validate(traj: &Trajectory, scene: &Scene, footprint: &Footprint, attachments: &[f64], resolution: f64) -> bool {
    if !traj.is_finite() {
        return false;
    }
    if traj.waypoints.len() == 1 {
        return collision_free(scene, traj.start(), footprint, attachments);
    }
    traj.waypoints
        .windows(2)
        .all(|w| segment_valid(scene, &w[0], &w[1], footprint, attachments, resolution))
}
