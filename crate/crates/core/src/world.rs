//! Deterministic 2D world: robot, objects with attributes, an attachment
//! slot, articulated obstacles and wipeable surfaces.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{
    collision_free, end_effector, max_displacement, point_segment_distance, Bounds, Configuration, Footprint, GeometryError,
    Obstacle, Point, Polygon, Pose2, Scene, Trajectory,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorldError {
    #[error("scene parse error: {0}")]
    Parse(String),
    #[error("invalid scene: {0}")]
    Invalid(String),
    #[error("unknown object {0}")]
    UnknownObject(String),
    #[error("object {object} has no attribute {attribute}")]
    UnknownAttribute { object: String, attribute: String },
    #[error("gripper already holds {0}")]
    GripperOccupied(String),
    #[error("{object} is {distance:.3} m from the end-effector, beyond tolerance {tolerance}")]
    OutOfReach { object: String, distance: f64, tolerance: f64 },
    #[error("{0} is not attached")]
    NotAttached(String),
    #[error("{0} is not articulated")]
    NotArticulated(String),
    #[error("{object} has no mode {mode}")]
    UnknownMode { object: String, mode: String },
    #[error("switching {object} to {mode} would collide with the robot")]
    TransitionWouldCollide { object: String, mode: String },
    #[error("collision at waypoint {waypoint} of the trajectory")]
    Collision { waypoint: usize },
}

impl From<GeometryError> for WorldError {
    fn from(e: GeometryError) -> Self {
        WorldError::Invalid(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shape {
    Disc { radius: f64 },
    Polygon { vertices: Vec<Point> },
}

impl Shape {
    /// Radius of the smallest disc about the pose containing the shape.
    pub fn bounding_radius(&self) -> f64 {
        match self {
            Shape::Disc { radius } => *radius,
            Shape::Polygon { vertices } => vertices.iter().map(|v| v[0].hypot(v[1])).fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttrValue {
    Bool(bool),
    Num(f64),
}

impl AttrValue {
    pub fn as_bool(&self) -> Option<bool> {
        match self {
            AttrValue::Bool(b) => Some(*b),
            AttrValue::Num(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Holding {
    In,
    On,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectRecord {
    pub id: String,
    #[serde(rename = "type")]
    pub ty: String,
    pub pose: Pose2,
    pub shape: Shape,
    #[serde(default)]
    pub attributes: BTreeMap<String, AttrValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub container: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub articulation: Option<String>,
    /// Named interaction points in world coordinates.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub anchors: BTreeMap<String, Point>,
    /// How contained objects relate to this one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub holds: Option<Holding>,
}

impl ObjectRecord {
    pub fn anchor(&self, name: &str) -> Point {
        self.anchors.get(name).copied().unwrap_or([self.pose.x, self.pose.y])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceGrid {
    pub owner: String,
    pub segment: [Point; 2],
    /// true = dirty
    pub cells: Vec<bool>,
    pub contact_tolerance: f64,
}

impl SurfaceGrid {
    pub fn is_dirty(&self) -> bool {
        self.cells.iter().any(|&c| c)
    }

    /// Endpoints of cell `i`.
    pub fn cell(&self, i: usize) -> (Point, Point) {
        let [a, b] = self.segment;
        let n = self.cells.len() as f64;
        let at = |t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
        (at(i as f64 / n), at((i + 1) as f64 / n))
    }

    pub fn cell_center(&self, i: usize) -> Point {
        let (p, q) = self.cell(i);
        [(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0]
    }

    pub fn distance_to(&self, p: Point) -> f64 {
        point_segment_distance(p, self.segment[0], self.segment[1])
    }

    pub fn in_contact(&self, p: Point) -> bool {
        self.distance_to(p) <= self.contact_tolerance
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegionKind {
    Room,
    Zone,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub id: String,
    pub kind: RegionKind,
    pub polygon: Polygon,
    /// Object whose approach this zone guards.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subject: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    #[serde(default = "default_tol")]
    pub grasp: f64,
    #[serde(default = "default_tol")]
    pub place: f64,
    #[serde(default = "default_contact")]
    pub contact: f64,
}

fn default_tol() -> f64 {
    0.1
}

fn default_contact() -> f64 {
    0.05
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { grasp: 0.1, place: 0.1, contact: 0.05 }
    }
}

/// Parts of the scene no operation changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticScene {
    pub bounds: Bounds,
    pub footprint: Footprint,
    pub robot_id: String,
    pub regions: Vec<Region>,
    pub tolerances: Tolerances,
}

impl StaticScene {
    pub fn rooms(&self) -> impl Iterator<Item = &Region> {
        self.regions.iter().filter(|r| r.kind == RegionKind::Room)
    }

    pub fn region(&self, id: &str) -> Option<&Region> {
        self.regions.iter().find(|r| r.id == id)
    }

    /// First room, by declaration order, containing the base centre.
    pub fn room_of(&self, c: &Configuration) -> Option<&Region> {
        self.rooms().find(|r| r.polygon.contains(c.base.xy()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub objects: BTreeMap<String, ObjectRecord>,
    pub robot_config: Configuration,
    pub attached: BTreeSet<String>,
    pub surfaces: BTreeMap<String, SurfaceGrid>,
    pub obstacles: Vec<Obstacle>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum WorldEvent {
    SurfaceContact { surface: String, waypoint: usize },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    bounds: Bounds,
    robot: RobotSpec,
    #[serde(default)]
    tolerances: Option<Tolerances>,
    #[serde(default)]
    obstacles: Vec<ObstacleSpec>,
    #[serde(default)]
    regions: Vec<Region>,
    #[serde(default)]
    objects: Vec<ObjectRecord>,
    #[serde(default)]
    surfaces: Vec<SurfaceSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RobotSpec {
    #[serde(default = "default_robot_id")]
    id: String,
    pose: Pose2,
    #[serde(default)]
    arm: f64,
    footprint: Footprint,
    #[serde(default)]
    attached: Vec<String>,
}

fn default_robot_id() -> String {
    "robot".into()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ObstacleSpec {
    id: String,
    #[serde(default)]
    polygon: Option<Polygon>,
    #[serde(default)]
    modes: BTreeMap<String, Polygon>,
    #[serde(default)]
    active_mode: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SurfaceSpec {
    owner: String,
    segment: [Point; 2],
    cells: usize,
    dirty: Vec<bool>,
    #[serde(default)]
    contact_tolerance: Option<f64>,
}

fn invalid(msg: impl Into<String>) -> WorldError {
    WorldError::Invalid(msg.into())
}

/// Parses and validates a JSON scene.
pub fn load_scene(text: &str) -> Result<(WorldState, StaticScene), WorldError> {
    let file: SceneFile = serde_json::from_str(text).map_err(|e| WorldError::Parse(e.to_string()))?;
    file.robot.footprint.validate()?;
    if !(file.bounds.min[0] < file.bounds.max[0] && file.bounds.min[1] < file.bounds.max[1]) {
        return Err(invalid("bounds must have min < max"));
    }
    let tolerances = file.tolerances.unwrap_or_default();

    let mut obstacles = Vec::new();
    let mut seen = BTreeSet::new();
    for o in file.obstacles {
        if !seen.insert(o.id.clone()) {
            return Err(invalid(format!("duplicate obstacle {}", o.id)));
        }
        let obstacle = match (o.polygon, o.active_mode) {
            (Some(p), None) if o.modes.is_empty() => Obstacle::fixed(&o.id, p),
            (None, Some(m)) if !o.modes.is_empty() => Obstacle::articulated(&o.id, o.modes, &m)?,
            _ => return Err(invalid(format!("obstacle {} needs either a polygon or modes with an active_mode", o.id))),
        };
        obstacle.validate()?;
        obstacles.push(obstacle);
    }
    for r in &file.regions {
        r.polygon.validate(&r.id)?;
    }

    let mut objects = BTreeMap::new();
    for o in file.objects {
        if objects.contains_key(&o.id) {
            return Err(invalid(format!("duplicate object {}", o.id)));
        }
        if let Shape::Polygon { vertices } = &o.shape {
            Polygon::new(vertices.clone()).validate(&o.id)?;
        }
        objects.insert(o.id.clone(), o);
    }

    let mut surfaces = BTreeMap::new();
    for s in file.surfaces {
        if s.cells == 0 || s.dirty.len() != s.cells {
            return Err(invalid(format!("surface {} needs a dirty mask of {} >= 1 cells", s.owner, s.cells)));
        }
        let grid = SurfaceGrid {
            owner: s.owner.clone(),
            segment: s.segment,
            cells: s.dirty,
            contact_tolerance: s.contact_tolerance.unwrap_or(tolerances.contact),
        };
        surfaces.insert(s.owner, grid);
    }

    let robot_config = Configuration::new(file.robot.pose.x, file.robot.pose.y, file.robot.pose.theta, file.robot.arm);
    let world = WorldState { objects, robot_config, attached: file.robot.attached.into_iter().collect(), surfaces, obstacles };
    let stat = StaticScene {
        bounds: file.bounds,
        footprint: file.robot.footprint,
        robot_id: file.robot.id,
        regions: file.regions,
        tolerances,
    };
    world.validate(&stat)?;
    Ok((world, stat))
}

impl WorldState {
    pub fn object(&self, id: &str) -> Result<&ObjectRecord, WorldError> {
        self.objects.get(id).ok_or_else(|| WorldError::UnknownObject(id.into()))
    }

    pub fn scene(&self, stat: &StaticScene) -> Scene {
        Scene::new(stat.bounds, self.obstacles.clone())
    }

    pub fn obstacle(&self, id: &str) -> Option<&Obstacle> {
        self.obstacles.iter().find(|o| o.id == id)
    }

    pub fn holding(&self) -> Option<&str> {
        self.attached.iter().next().map(String::as_str)
    }

    /// Bounding radii of attached objects, for collision checking.
    pub fn attachment_radii(&self) -> Vec<f64> {
        self.attached.iter().filter_map(|id| self.objects.get(id)).map(|o| o.shape.bounding_radius()).collect()
    }

    pub fn end_effector(&self, stat: &StaticScene) -> Pose2 {
        end_effector(&self.robot_config, &stat.footprint)
    }

    pub fn is_collision_free(&self, stat: &StaticScene, c: &Configuration) -> bool {
        collision_free(&self.scene(stat), c, &stat.footprint, &self.attachment_radii())
    }

    /// Checks every scene invariant.
    pub fn validate(&self, stat: &StaticScene) -> Result<(), WorldError> {
        if self.attached.len() > 1 {
            return Err(invalid("at most one object can be attached"));
        }
        let ee = self.end_effector(stat);
        for id in &self.attached {
            let o = self.object(id)?;
            if o.pose != ee {
                return Err(invalid(format!("attached object {id} is not at the end-effector")));
            }
            if o.container.is_some() {
                return Err(invalid(format!("attached object {id} cannot have a container")));
            }
        }
        for o in self.objects.values() {
            if let Some(c) = &o.container {
                if !self.objects.contains_key(c) {
                    return Err(invalid(format!("container {c} of {} does not exist", o.id)));
                }
            }
            if let Some(a) = &o.articulation {
                let obs = self.obstacle(a).ok_or_else(|| invalid(format!("{} articulates unknown obstacle {a}", o.id)))?;
                let open = o.attributes.get("open").and_then(AttrValue::as_bool);
                let mode = obs.active_mode.as_deref();
                let consistent = match open {
                    Some(true) => mode == Some("open"),
                    Some(false) => mode == Some("closed"),
                    None => false,
                };
                if !consistent {
                    return Err(invalid(format!("open attribute of {} disagrees with obstacle mode {mode:?}", o.id)));
                }
            }
        }
        for (id, s) in &self.surfaces {
            let owner = self.object(id).map_err(|_| invalid(format!("surface owner {id} does not exist")))?;
            if owner.attributes.get("dirty").and_then(AttrValue::as_bool) != Some(s.is_dirty()) {
                return Err(invalid(format!("dirty attribute of {id} disagrees with its surface cells")));
            }
        }
        if !self.is_collision_free(stat, &self.robot_config) {
            return Err(invalid("robot configuration is in collision"));
        }
        Ok(())
    }

    pub fn observe(&self, object: &str, attribute: &str) -> Result<AttrValue, WorldError> {
        let o = self.object(object)?;
        o.attributes
            .get(attribute)
            .copied()
            .ok_or_else(|| WorldError::UnknownAttribute { object: object.into(), attribute: attribute.into() })
    }

    pub fn attach(&self, stat: &StaticScene, object: &str) -> Result<WorldState, WorldError> {
        if let Some(h) = self.holding() {
            return Err(WorldError::GripperOccupied(h.into()));
        }
        let o = self.object(object)?;
        let ee = self.end_effector(stat);
        let d = (o.pose.x - ee.x).hypot(o.pose.y - ee.y);
        if d > stat.tolerances.grasp {
            return Err(WorldError::OutOfReach { object: object.into(), distance: d, tolerance: stat.tolerances.grasp });
        }
        let mut w = self.clone();
        let rec = w.objects.get_mut(object).expect("checked");
        rec.pose = ee;
        rec.container = None;
        w.attached.insert(object.into());
        Ok(w)
    }

    /// Releases `object` onto `support`, whose "place" anchor must be within tolerance.
    pub fn detach(&self, stat: &StaticScene, object: &str, support: &str) -> Result<WorldState, WorldError> {
        if !self.attached.contains(object) {
            return Err(WorldError::NotAttached(object.into()));
        }
        let anchor = self.object(support)?.anchor("place");
        let ee = self.end_effector(stat);
        let d = (anchor[0] - ee.x).hypot(anchor[1] - ee.y);
        if d > stat.tolerances.place {
            return Err(WorldError::OutOfReach { object: support.into(), distance: d, tolerance: stat.tolerances.place });
        }
        let mut w = self.clone();
        w.attached.remove(object);
        let rec = w.objects.get_mut(object).expect("attached objects exist");
        rec.pose = ee;
        rec.container = Some(support.into());
        Ok(w)
    }

    /// Moves the robot to `c`, carrying attached objects. No collision check.
    pub fn with_config(&self, stat: &StaticScene, c: Configuration) -> WorldState {
        let mut w = self.clone();
        w.robot_config = c;
        let ee = end_effector(&c, &stat.footprint);
        for id in &self.attached {
            if let Some(o) = w.objects.get_mut(id) {
                o.pose = ee;
            }
        }
        w
    }

    /// Executes a trajectory, checking collisions at the given resolution.
    pub fn step_trajectory(
        &self,
        stat: &StaticScene,
        traj: &Trajectory,
        resolution: f64,
    ) -> Result<(WorldState, Vec<WorldEvent>), WorldError> {
        let scene = self.scene(stat);
        let held = self.attachment_radii();
        let fp = &stat.footprint;
        let mut events = Vec::new();
        let contact = |c: &Configuration, k: usize, events: &mut Vec<WorldEvent>| {
            let ee = end_effector(c, fp).xy();
            for (id, s) in &self.surfaces {
                if s.in_contact(ee) {
                    events.push(WorldEvent::SurfaceContact { surface: id.clone(), waypoint: k });
                }
            }
        };
        if !collision_free(&scene, traj.start(), fp, &held) {
            return Err(WorldError::Collision { waypoint: 0 });
        }
        contact(traj.start(), 0, &mut events);
        for (k, w) in traj.waypoints.windows(2).enumerate() {
            let n = (max_displacement(&w[0], &w[1], fp, &held) / resolution).ceil().max(1.0) as usize;
            for i in 1..=n {
                if !collision_free(&scene, &w[0].interpolate(&w[1], i as f64 / n as f64), fp, &held) {
                    return Err(WorldError::Collision { waypoint: k + 1 });
                }
            }
            contact(&w[1], k + 1, &mut events);
        }
        Ok((self.with_config(stat, *traj.end()), events))
    }

    /// Switches an articulated object's obstacle mode and its `open` attribute together.
    pub fn set_articulation(&self, stat: &StaticScene, object: &str, mode: &str) -> Result<WorldState, WorldError> {
        let o = self.object(object)?;
        let obs_id = o.articulation.clone().ok_or_else(|| WorldError::NotArticulated(object.into()))?;
        let idx = self.obstacles.iter().position(|x| x.id == obs_id).ok_or_else(|| WorldError::NotArticulated(object.into()))?;
        let swapped = self.obstacles[idx]
            .with_mode(mode)
            .map_err(|_| WorldError::UnknownMode { object: object.into(), mode: mode.into() })?;
        if self.obstacles[idx].active_mode.as_deref() == Some(mode) {
            return Ok(self.clone());
        }
        let mut w = self.clone();
        w.obstacles[idx] = swapped;
        w.objects.get_mut(object).expect("checked").attributes.insert("open".into(), AttrValue::Bool(mode == "open"));
        if !w.is_collision_free(stat, &w.robot_config) {
            return Err(WorldError::TransitionWouldCollide { object: object.into(), mode: mode.into() });
        }
        Ok(w)
    }

    /// Cleans every cell of `surface` whose centre is within contact tolerance of `p`.
    pub fn wipe(&self, surface: &str, p: Point) -> Result<WorldState, WorldError> {
        let s = self.surfaces.get(surface).ok_or_else(|| WorldError::UnknownObject(surface.into()))?;
        let mut w = self.clone();
        let grid = w.surfaces.get_mut(surface).expect("checked");
        for i in 0..s.cells.len() {
            let c = s.cell_center(i);
            if (p[0] - c[0]).hypot(p[1] - c[1]) <= s.contact_tolerance {
                grid.cells[i] = false;
            }
        }
        let dirty = grid.is_dirty();
        w.objects
            .get_mut(surface)
            .ok_or_else(|| WorldError::UnknownObject(surface.into()))?
            .attributes
            .insert("dirty".into(), AttrValue::Bool(dirty));
        Ok(w)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{"bounds": {"min": [0, 0], "max": [4, 4]},
        "robot": {"pose": {"x": 1, "y": 1, "theta": 0}, "footprint": {"base_radius": 0.25, "arm_max_reach": 0.5}}}"#;

    #[test]
    fn minimal_scene_has_no_objects() {
        let (w, s) = load_scene(MINIMAL).unwrap();
        assert!(w.objects.is_empty());
        assert_eq!(s.robot_id, "robot");
        assert_eq!(s.tolerances, Tolerances::default());
    }

    #[test]
    fn malformed_json_is_a_parse_error() {
        assert!(matches!(load_scene("{"), Err(WorldError::Parse(_))));
        assert!(matches!(load_scene(r#"{"bounds": 1}"#), Err(WorldError::Parse(_))));
    }

    fn with_cup(arm: f64, attached: bool) -> String {
        format!(
            r#"{{"bounds": {{"min": [0, 0], "max": [4, 4]}},
            "robot": {{"pose": {{"x": 1, "y": 1, "theta": 0}}, "arm": {arm}, "attached": {att},
                      "footprint": {{"base_radius": 0.25, "arm_max_reach": 0.5}}}},
            "objects": [{{"id": "cup", "type": "item", "pose": {{"x": 1.5, "y": 1, "theta": 0}},
                         "shape": {{"kind": "disc", "radius": 0.03}}}},
                        {{"id": "shelf", "type": "surface", "pose": {{"x": 1.5, "y": 1.05, "theta": 0}},
                         "shape": {{"kind": "disc", "radius": 0.1}}, "holds": "on", "anchors": {{"place": [1.75, 1.0]}}}}]}}"#,
            att = if attached { "[\"cup\"]" } else { "[]" }
        )
    }

    #[test]
    fn attached_pose_mismatch_rejected() {
        assert!(matches!(load_scene(&with_cup(0.0, true)), Err(WorldError::Invalid(_))));
        // at full extension the end-effector is 0.75 m out, not at the cup
        assert!(matches!(load_scene(&with_cup(1.0, true)), Err(WorldError::Invalid(_))));
    }

    #[test]
    fn attach_detach_round_trip() {
        let (w, s) = load_scene(&with_cup(0.5, false)).unwrap();
        let held = w.attach(&s, "cup").unwrap();
        assert_eq!(held.holding(), Some("cup"));
        assert!(matches!(held.attach(&s, "shelf"), Err(WorldError::GripperOccupied(_))));
        let moved = held.with_config(&s, w.robot_config.with_arm(1.0));
        let placed = moved.detach(&s, "cup", "shelf").unwrap();
        assert!(placed.attached.is_empty());
        assert_eq!(placed.objects["cup"].pose, placed.end_effector(&s));
        assert_eq!(placed.objects["cup"].container.as_deref(), Some("shelf"));
        assert!(matches!(w.detach(&s, "cup", "shelf"), Err(WorldError::NotAttached(_))));
    }

    #[test]
    fn observe_is_pure_and_reports_unknowns() {
        let (w, _) = load_scene(&with_cup(0.0, false)).unwrap();
        assert!(matches!(w.observe("cup", "dirty"), Err(WorldError::UnknownAttribute { .. })));
        assert!(matches!(w.observe("mug", "dirty"), Err(WorldError::UnknownObject(_))));
    }
}
