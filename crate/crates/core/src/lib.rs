//! Hierarchical task-and-skill planning over a deterministic 2D world.
//!
//! The crate is layered bottom-up:
//!
//! - [`symbolic`]: typed STRIPS parsing, grounding and A* search with plan forbidding.
//! - [`geometry`]: SE(2)+arm configurations, polygon scenes and the collision function.
//! - [`motion`]: seeded RRT with shortcut smoothing.
//! - [`world`]: scene loading and the deterministic simulator.
//! - [`skills`]: parameterized skills, kinematic envelopes and composable interaction
//!   primitives (head plan, policy, tail plan).
//! - [`tasp`]: abstraction, the plan/refine/backtrack loop and monitored execution.
//! - [`plan_io`] and [`render`]: plan/trace files and SVG output.

pub mod geometry;
pub mod motion;
pub mod plan_io;
pub mod render;
pub mod skills;
pub mod symbolic;
pub mod tasp;
pub mod world;

pub use geometry::{Configuration, Footprint, Obstacle, Pose2, Trajectory};
pub use tasp::{HybridPlan, HybridProblem};
pub use world::WorldState;
pub use symbolic::{Domain, GroundAtom, SymbolicPlan, SymbolicProblem, SymbolicState};


