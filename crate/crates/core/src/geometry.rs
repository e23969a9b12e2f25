//! Configuration space, forward kinematics and the collision function for a
//! disc-base robot with a single prismatic arm in a polygonal world.

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("polygon {0} needs at least 3 vertices")]
    TooFewVertices(String),
    #[error("polygon {0} is self-intersecting")]
    SelfIntersecting(String),
    #[error("polygon {0} is not counter-clockwise")]
    Clockwise(String),
    #[error("polygon {0} has non-finite coordinates")]
    NonFinite(String),
    #[error("footprint dimensions must be strictly positive")]
    BadFootprint,
    #[error("obstacle {0}: active mode must be set iff modes are declared")]
    ModeMismatch(String),
    #[error("obstacle {id}: unknown mode {mode}")]
    UnknownMode { id: String, mode: String },
}

/// Wraps an angle into (-π, π].
pub fn normalize_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Unsigned shortest angular distance, in [0, π].
pub fn angdiff(a: f64, b: f64) -> f64 {
    normalize_angle(a - b).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose2 {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Pose2 { x, y, theta: normalize_angle(theta) }
    }

    pub fn xy(&self) -> [f64; 2] {
        [self.x, self.y]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub base: Pose2,
    /// Arm extension fraction in [0, 1].
    pub arm: f64,
}

impl Configuration {
    pub fn new(x: f64, y: f64, theta: f64, arm: f64) -> Self {
        Configuration { base: Pose2::new(x, y, theta), arm: arm.clamp(0.0, 1.0) }
    }

    pub fn is_finite(&self) -> bool {
        self.base.x.is_finite() && self.base.y.is_finite() && self.base.theta.is_finite() && self.arm.is_finite()
    }

    pub fn with_arm(&self, arm: f64) -> Self {
        Configuration { base: self.base, arm: arm.clamp(0.0, 1.0) }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.base.x, self.base.y, self.base.theta, self.arm]
    }

    /// Linear interpolation; heading follows the shortest arc.
    pub fn interpolate(&self, other: &Configuration, t: f64) -> Configuration {
        let dth = normalize_angle(other.base.theta - self.base.theta);
        Configuration::new(
            self.base.x + t * (other.base.x - self.base.x),
            self.base.y + t * (other.base.y - self.base.y),
            self.base.theta + t * dth,
            self.arm + t * (other.arm - self.arm),
        )
    }

    pub fn approx_eq(&self, other: &Configuration, tol: f64) -> bool {
        (self.base.x - other.base.x).abs() <= tol
            && (self.base.y - other.base.y).abs() <= tol
            && angdiff(self.base.theta, other.base.theta) <= tol
            && (self.arm - other.arm).abs() <= tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Footprint {
    pub base_radius: f64,
    pub arm_max_reach: f64,
}

impl Footprint {
    pub fn new(base_radius: f64, arm_max_reach: f64) -> Result<Self, GeometryError> {
        let f = Footprint { base_radius, arm_max_reach };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.base_radius > 0.0 && self.arm_max_reach > 0.0 && self.base_radius.is_finite() && self.arm_max_reach.is_finite() {
            Ok(())
        } else {
            Err(GeometryError::BadFootprint)
        }
    }

    /// Distance from base center to end-effector at a given extension.
    pub fn reach_at(&self, arm: f64) -> f64 {
        self.base_radius + arm * self.arm_max_reach
    }

    /// Extension that puts the end-effector at `dist` from the base center, if within range.
    pub fn arm_for_reach(&self, dist: f64) -> Option<f64> {
        let a = (dist - self.base_radius) / self.arm_max_reach;
        (-1e-12..=1.0 + 1e-12).contains(&a).then(|| a.clamp(0.0, 1.0))
    }
}

/// End-effector pose: the arm extends along the base heading from the base boundary.
pub fn end_effector(config: &Configuration, footprint: &Footprint) -> Pose2 {
    let r = footprint.reach_at(config.arm);
    let (s, c) = config.base.theta.sin_cos();
    Pose2 { x: config.base.x + r * c, y: config.base.y + r * s, theta: config.base.theta }
}

/// Weighted C-space metric: planar distance, heading scaled by base radius, arm scaled by reach.
pub fn distance(a: &Configuration, b: &Configuration, footprint: &Footprint) -> f64 {
    let dx = a.base.x - b.base.x;
    let dy = a.base.y - b.base.y;
    let dth = footprint.base_radius * angdiff(a.base.theta, b.base.theta);
    let darm = footprint.arm_max_reach * (a.arm - b.arm);
    (dx * dx + dy * dy + dth * dth + darm * darm).sqrt()
}

pub type Point = [f64; 2];

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = sub(b, a);
    let len2 = dot(ab, ab);
    let t = if len2 == 0.0 { 0.0 } else { (dot(sub(p, a), ab) / len2).clamp(0.0, 1.0) };
    let q = [a[0] + t * ab[0], a[1] + t * ab[1]];
    let d = sub(p, q);
    dot(d, d).sqrt()
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    cross(sub(b, a), sub(c, a))
}

fn on_segment(p: Point, a: Point, b: Point) -> bool {
    p[0] >= a[0].min(b[0]) && p[0] <= a[0].max(b[0]) && p[1] >= a[1].min(b[1]) && p[1] <= a[1].max(b[1])
}

/// Closed segment intersection (touching and collinear overlap count).
pub fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(p1, q1, q2))
        || (d2 == 0.0 && on_segment(p2, q1, q2))
        || (d3 == 0.0 && on_segment(q1, p1, p2))
        || (d4 == 0.0 && on_segment(q2, p1, p2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polygon {
    pub vertices: Vec<Point>,
}

impl Polygon {
    pub fn new(vertices: Vec<Point>) -> Self {
        Polygon { vertices }
    }

    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Polygon::new(vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn signed_area(&self) -> f64 {
        self.edges().map(|(a, b)| cross(a, b)).sum::<f64>() / 2.0
    }

    pub fn validate(&self, id: &str) -> Result<(), GeometryError> {
        let n = self.vertices.len();
        if n < 3 {
            return Err(GeometryError::TooFewVertices(id.into()));
        }
        if self.vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(GeometryError::NonFinite(id.into()));
        }
        let edges: Vec<_> = self.edges().collect();
        for i in 0..n {
            for j in i + 1..n {
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    // adjacent edges may only share their common vertex
                    let (a, b) = edges[i];
                    let (c, d) = edges[j];
                    let shared = if j == i + 1 { b } else { a };
                    let other = if j == i + 1 { d } else { c };
                    let own = if j == i + 1 { a } else { b };
                    if orient(own, shared, other) == 0.0 && dot(sub(own, shared), sub(other, shared)) > 0.0 {
                        return Err(GeometryError::SelfIntersecting(id.into()));
                    }
                    continue;
                }
                if segments_intersect(edges[i].0, edges[i].1, edges[j].0, edges[j].1) {
                    return Err(GeometryError::SelfIntersecting(id.into()));
                }
            }
        }
        if self.signed_area() <= 0.0 {
            return Err(GeometryError::Clockwise(id.into()));
        }
        Ok(())
    }

    /// Closed containment: boundary points are inside.
    pub fn contains(&self, p: Point) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if orient(a, b, p) == 0.0 && on_segment(p, a, b) {
                return true;
            }
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                if p[0] < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    pub fn boundary_distance(&self, p: Point) -> f64 {
        self.edges().map(|(a, b)| point_segment_distance(p, a, b)).fold(f64::INFINITY, f64::min)
    }

    pub fn intersects_disc(&self, c: Point, r: f64) -> bool {
        self.contains(c) || self.boundary_distance(c) <= r
    }

    pub fn intersects_segment(&self, a: Point, b: Point) -> bool {
        self.contains(a) || self.contains(b) || self.edges().any(|(p, q)| segments_intersect(a, b, p, q))
    }

    pub fn intersects_polygon(&self, other: &Polygon) -> bool {
        self.vertices.iter().any(|&v| other.contains(v))
            || other.vertices.iter().any(|&v| self.contains(v))
            || self.edges().any(|(a, b)| other.edges().any(|(c, d)| segments_intersect(a, b, c, d)))
    }

    pub fn centroid(&self) -> Point {
        let n = self.vertices.len() as f64;
        let s = self.vertices.iter().fold([0.0, 0.0], |acc, v| [acc[0] + v[0], acc[1] + v[1]]);
        [s[0] / n, s[1] / n]
    }
}

/// A closed polygonal obstacle. Articulated obstacles carry alternative
/// polygons keyed by mode label, one of which is active.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub id: String,
    pub polygon: Polygon,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub modes: BTreeMap<String, Polygon>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub active_mode: Option<String>,
}

impl Obstacle {
    pub fn fixed(id: &str, polygon: Polygon) -> Self {
        Obstacle { id: id.into(), polygon, modes: BTreeMap::new(), active_mode: None }
    }

    pub fn articulated(id: &str, modes: BTreeMap<String, Polygon>, active: &str) -> Result<Self, GeometryError> {
        let polygon = modes
            .get(active)
            .cloned()
            .ok_or_else(|| GeometryError::UnknownMode { id: id.into(), mode: active.into() })?;
        Ok(Obstacle { id: id.into(), polygon, modes, active_mode: Some(active.into()) })
    }

    pub fn active_polygon(&self) -> &Polygon {
        match &self.active_mode {
            Some(m) => self.modes.get(m).unwrap_or(&self.polygon),
            None => &self.polygon,
        }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.modes.is_empty() != self.active_mode.is_none() {
            return Err(GeometryError::ModeMismatch(self.id.clone()));
        }
        if let Some(m) = &self.active_mode {
            if !self.modes.contains_key(m) {
                return Err(GeometryError::UnknownMode { id: self.id.clone(), mode: m.clone() });
            }
        }
        self.polygon.validate(&self.id)?;
        for (m, p) in &self.modes {
            p.validate(&format!("{}[{m}]", self.id))?;
        }
        Ok(())
    }

    /// Copy of the obstacle with another mode made active.
    pub fn with_mode(&self, mode: &str) -> Result<Obstacle, GeometryError> {
        let polygon = self
            .modes
            .get(mode)
            .cloned()
            .ok_or_else(|| GeometryError::UnknownMode { id: self.id.clone(), mode: mode.into() })?;
        Ok(Obstacle { polygon, active_mode: Some(mode.into()), ..self.clone() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min: Point,
    pub max: Point,
}

impl Bounds {
    fn strictly_inside_disc(&self, c: Point, r: f64) -> bool {
        c[0] - r > self.min[0] && c[0] + r < self.max[0] && c[1] - r > self.min[1] && c[1] + r < self.max[1]
    }

    fn strictly_inside(&self, p: Point) -> bool {
        self.strictly_inside_disc(p, 0.0)
    }

    pub fn width(&self) -> f64 {
        self.max[0] - self.min[0]
    }

    pub fn height(&self) -> f64 {
        self.max[1] - self.min[1]
    }
}

/// Obstacles with their currently active modes, plus the world boundary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub bounds: Bounds,
    pub obstacles: Vec<Obstacle>,
}

impl Scene {
    pub fn new(bounds: Bounds, obstacles: Vec<Obstacle>) -> Self {
        Scene { bounds, obstacles }
    }

    pub fn obstacle(&self, id: &str) -> Option<&Obstacle> {
        self.obstacles.iter().find(|o| o.id == id)
    }
}

/// Radii of objects rigidly held at the end-effector.
pub type Attachments<'a> = &'a [f64];

fn arm_segment(config: &Configuration, footprint: &Footprint) -> Option<(Point, Point)> {
    (config.arm > 0.0).then(|| {
        let (s, c) = config.base.theta.sin_cos();
        let r0 = footprint.base_radius;
        let r1 = footprint.reach_at(config.arm);
        ([config.base.x + r0 * c, config.base.y + r0 * s], [config.base.x + r1 * c, config.base.y + r1 * s])
    })
}

/// F(c): base disc, arm segment and attached discs clear of every active
/// obstacle and strictly inside the world boundary.
pub fn collision_free(scene: &Scene, config: &Configuration, footprint: &Footprint, attachments: Attachments<'_>) -> bool {
    if !config.is_finite() {
        return false;
    }
    let base = config.base.xy();
    let ee = end_effector(config, footprint).xy();
    let arm = arm_segment(config, footprint);
    if !scene.bounds.strictly_inside_disc(base, footprint.base_radius) || !scene.bounds.strictly_inside(ee) {
        return false;
    }
    if attachments.iter().any(|&r| !scene.bounds.strictly_inside_disc(ee, r)) {
        return false;
    }
    scene.obstacles.iter().all(|o| {
        let poly = o.active_polygon();
        !poly.intersects_disc(base, footprint.base_radius)
            && arm.is_none_or(|(a, b)| !poly.intersects_segment(a, b))
            && attachments.iter().all(|&r| !poly.intersects_disc(ee, r))
    })
}

/// Conservative bound on how far any body point moves between two configurations.
pub fn max_displacement(a: &Configuration, b: &Configuration, footprint: &Footprint, attachments: Attachments<'_>) -> f64 {
    let held = attachments.iter().copied().fold(0.0, f64::max);
    let radius = footprint.reach_at(a.arm.max(b.arm)) + held;
    let lin = ((a.base.x - b.base.x).powi(2) + (a.base.y - b.base.y).powi(2)).sqrt();
    lin + radius * angdiff(a.base.theta, b.base.theta) + footprint.arm_max_reach * (a.arm - b.arm).abs()
}

/// Checks interpolated configurations so no body point moves more than `resolution` between checks.
pub fn segment_valid(
    scene: &Scene,
    a: &Configuration,
    b: &Configuration,
    footprint: &Footprint,
    attachments: Attachments<'_>,
    resolution: f64,
) -> bool {
    assert!(resolution > 0.0, "resolution must be positive");
    let steps = (max_displacement(a, b, footprint, attachments) / resolution).ceil().max(1.0) as usize;
    (0..=steps).all(|k| collision_free(scene, &a.interpolate(b, k as f64 / steps as f64), footprint, attachments))
}

/// Piecewise-linear path τ: [0,1] → C with waypoints spaced uniformly in parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub waypoints: Vec<Configuration>,
}

impl Trajectory {
    pub fn new(waypoints: Vec<Configuration>) -> Self {
        assert!(!waypoints.is_empty(), "a trajectory needs at least one waypoint");
        Trajectory { waypoints }
    }

    pub fn single(c: Configuration) -> Self {
        Trajectory { waypoints: vec![c] }
    }

    pub fn start(&self) -> &Configuration {
        &self.waypoints[0]
    }

    pub fn end(&self) -> &Configuration {
        self.waypoints.last().expect("non-empty trajectory")
    }

    pub fn eval(&self, s: f64) -> Configuration {
        let n = self.waypoints.len();
        if n == 1 || s <= 0.0 {
            return self.waypoints[0];
        }
        if s >= 1.0 {
            return *self.end();
        }
        let u = s * (n - 1) as f64;
        let i = u.floor() as usize;
        self.waypoints[i].interpolate(&self.waypoints[i + 1], u - i as f64)
    }

    pub fn length(&self, footprint: &Footprint) -> f64 {
        self.waypoints.windows(2).map(|w| distance(&w[0], &w[1], footprint)).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.waypoints.iter().all(Configuration::is_finite)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fp() -> Footprint {
        Footprint::new(0.3, 0.7).unwrap()
    }

    fn open_scene() -> Scene {
        Scene::new(Bounds { min: [-10.0, -10.0], max: [10.0, 10.0] }, vec![])
    }

    #[test]
    fn angle_normalization_range() {
        assert_eq!(normalize_angle(PI), PI);
        assert_eq!(normalize_angle(-PI), PI);
        assert!((normalize_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert!((angdiff(0.1, -0.1) - 0.2).abs() < 1e-12);
        assert!((angdiff(PI - 0.1, -PI + 0.1) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn end_effector_examples() {
        let e = end_effector(&Configuration::new(0.0, 0.0, 0.0, 0.0), &fp());
        assert!((e.x - 0.3).abs() < 1e-12 && e.y.abs() < 1e-12 && e.theta == 0.0);
        let e = end_effector(&Configuration::new(0.0, 0.0, PI / 2.0, 1.0), &fp());
        assert!(e.x.abs() < 1e-12 && (e.y - 1.0).abs() < 1e-12 && (e.theta - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn distance_examples() {
        let a = Configuration::new(0.0, 0.0, 0.0, 0.0);
        assert_eq!(distance(&a, &a, &fp()), 0.0);
        assert!((distance(&a, &Configuration::new(3.0, 4.0, 0.0, 0.0), &fp()) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn figure_eight_rejected() {
        let bowtie = Polygon::new(vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]);
        assert_eq!(bowtie.validate("bowtie"), Err(GeometryError::SelfIntersecting("bowtie".into())));
        let cw = Polygon::new(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]);
        assert!(matches!(cw.validate("cw"), Err(GeometryError::Clockwise(_))));
        assert!(Polygon::rect(0.0, 0.0, 1.0, 1.0).validate("ok").is_ok());
        let spike = Polygon::new(vec![[0.0, 0.0], [2.0, 0.0], [1.0, 0.0], [1.0, 1.0]]);
        assert!(spike.validate("spike").is_err());
    }

    #[test]
    fn empty_scene_is_free_and_base_in_obstacle_is_not() {
        let c = Configuration::new(0.0, 0.0, 0.3, 0.5);
        assert!(collision_free(&open_scene(), &c, &fp(), &[0.05]));
        let mut s = open_scene();
        s.obstacles.push(Obstacle::fixed("box", Polygon::rect(-1.0, -1.0, 1.0, 1.0)));
        assert!(!collision_free(&s, &c, &fp(), &[]));
    }

    #[test]
    fn boundary_contact_is_collision() {
        let f = Footprint::new(0.5, 0.5).unwrap();
        let mut s = open_scene();
        s.obstacles.push(Obstacle::fixed("box", Polygon::rect(1.0, -1.0, 2.0, 1.0)));
        // base disc exactly touching the left face
        let touching = Configuration::new(0.5, 0.0, PI / 2.0, 0.0);
        assert!(!collision_free(&s, &touching, &f, &[]));
        assert!(collision_free(&s, &Configuration::new(0.49, 0.0, PI / 2.0, 0.0), &f, &[]));
        // arm tip exactly on the face while the base is clear
        assert!(!collision_free(&s, &Configuration::new(0.0, 0.0, 0.0, 1.0), &f, &[]));
        assert!(collision_free(&s, &Configuration::new(0.0, 0.0, 0.0, 0.99), &f, &[]));
        // bounds are closed too
        assert!(!collision_free(&s, &Configuration::new(-9.5, 0.0, PI / 2.0, 0.0), &f, &[]));
    }

    #[test]
    fn attachment_changes_outcome() {
        let mut s = open_scene();
        s.obstacles.push(Obstacle::fixed("box", Polygon::rect(1.05, -1.0, 2.0, 1.0)));
        let c = Configuration::new(0.0, 0.0, 0.0, 1.0);
        assert!(collision_free(&s, &c, &fp(), &[]));
        assert!(!collision_free(&s, &c, &fp(), &[0.1]));
    }

    #[test]
    fn segment_crossing_obstacle_fails() {
        let mut s = open_scene();
        s.obstacles.push(Obstacle::fixed("wall", Polygon::rect(-0.05, -5.0, 0.05, 5.0)));
        let a = Configuration::new(-2.0, 0.0, 0.0, 0.0);
        let b = Configuration::new(2.0, 0.0, 0.0, 0.0);
        assert!(!segment_valid(&s, &a, &b, &fp(), &[], 0.01));
        assert!(segment_valid(&s, &a, &a, &fp(), &[], 0.01));
    }

    #[test]
    fn trajectory_eval_endpoints() {
        let t = Trajectory::new(vec![
            Configuration::new(0.0, 0.0, 0.0, 0.0),
            Configuration::new(1.0, 0.0, 0.0, 0.0),
            Configuration::new(1.0, 1.0, 0.0, 1.0),
        ]);
        assert_eq!(t.eval(0.0), t.waypoints[0]);
        assert_eq!(t.eval(1.0), t.waypoints[2]);
        assert!((t.eval(0.5).base.x - 1.0).abs() < 1e-12);
        assert!((t.length(&fp()) - (1.0 + (1.0f64 + 0.49).sqrt())).abs() < 1e-12);
    }

    #[test]
    fn mode_swap() {
        let mut modes = BTreeMap::new();
        modes.insert("closed".to_string(), Polygon::rect(0.0, 0.0, 1.0, 0.1));
        modes.insert("open".to_string(), Polygon::rect(0.0, 0.0, 0.1, 1.0));
        let door = Obstacle::articulated("door", modes, "closed").unwrap();
        door.validate().unwrap();
        let opened = door.with_mode("open").unwrap();
        assert!(opened.active_polygon().contains([0.05, 0.9]));
        assert!(door.with_mode("ajar").is_err());
    }
}
