//! Deterministic SVG drawings of scenes, plans and traces.

use std::fmt::Write;

use crate::geometry::{end_effector, Configuration, Point, Pose2};
use crate::plan_io::{PlanFile, Waypoint};
use crate::tasp::TraceEvent;
use crate::world::{RegionKind, Shape, StaticScene, WorldState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderOptions {
    /// Pixels per metre.
    pub scale: f64,
    pub regions: bool,
    pub surfaces: bool,
    pub robot: bool,
    pub trajectories: bool,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions { scale: 60.0, regions: true, surfaces: true, robot: true, trajectories: true }
    }
}

const STYLE: &str = "\
.region{fill:#f4f4f4;stroke:#bbb;stroke-width:1}\
.zone{fill:none;stroke:#c9a;stroke-width:1;stroke-dasharray:2 2}\
.obstacle{fill:#555;stroke:#222;stroke-width:1}\
.obstacle.inactive{fill:none;stroke:#555;stroke-dasharray:4 3}\
.object{fill:#8ab;stroke:#246;stroke-width:1}\
.cell.dirty{fill:#a33}.cell.clean{fill:#cfc}\
.robot{fill:none;stroke:#06c;stroke-width:2}.arm{stroke:#06c;stroke-width:2}\
.head{fill:none;stroke:#1a8;stroke-width:1.5}\
.policy{fill:none;stroke:#d60;stroke-width:2}\
.tail{fill:none;stroke:#77c;stroke-width:1.5;stroke-dasharray:3 2}\
.trace{fill:#000}";

struct Canvas {
    out: String,
    scale: f64,
    min: Point,
    max_y: f64,
}

impl Canvas {
    fn px(&self, p: Point) -> (f64, f64) {
        ((p[0] - self.min[0]) * self.scale, (self.max_y - p[1]) * self.scale)
    }

    fn points(&self, pts: impl IntoIterator<Item = Point>) -> String {
        let mut s = String::new();
        for (i, p) in pts.into_iter().enumerate() {
            let (x, y) = self.px(p);
            if i > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{x:.2},{y:.2}");
        }
        s
    }

    fn polygon(&mut self, class: &str, id: Option<&str>, pts: &[Point]) {
        let p = self.points(pts.iter().copied());
        let id = id.map(|i| format!(" data-id=\"{}\"", escape(i))).unwrap_or_default();
        let _ = writeln!(self.out, "<polygon class=\"{class}\"{id} points=\"{p}\"/>");
    }

    fn circle(&mut self, class: &str, c: Point, r: f64) {
        let (x, y) = self.px(c);
        let _ = writeln!(self.out, "<circle class=\"{class}\" cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"{:.2}\"/>", r * self.scale);
    }

    fn line(&mut self, class: &str, a: Point, b: Point) {
        let ((x1, y1), (x2, y2)) = (self.px(a), self.px(b));
        let _ = writeln!(self.out, "<line class=\"{class}\" x1=\"{x1:.2}\" y1=\"{y1:.2}\" x2=\"{x2:.2}\" y2=\"{y2:.2}\"/>");
    }

    fn polyline(&mut self, class: &str, w: &[Waypoint]) {
        let p = self.points(w.iter().map(|w| [w[0], w[1]]));
        let _ = writeln!(self.out, "<polyline class=\"{class}\" points=\"{p}\"/>");
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn place(pose: &Pose2, v: Point) -> Point {
    let (s, c) = pose.theta.sin_cos();
    [pose.x + c * v[0] - s * v[1], pose.y + s * v[0] + c * v[1]]
}

fn robot(cv: &mut Canvas, stat: &StaticScene, c: &Configuration) {
    let fp = &stat.footprint;
    cv.circle("robot", c.base.xy(), fp.base_radius);
    let ee = end_effector(c, fp);
    cv.line("arm", c.base.xy(), ee.xy());
}

pub fn render_svg(
    world: &WorldState,
    stat: &StaticScene,
    plan: Option<&PlanFile>,
    trace: Option<&[TraceEvent]>,
    opts: &RenderOptions,
) -> String {
    let b = &stat.bounds;
    let (w, h) = ((b.max[0] - b.min[0]) * opts.scale, (b.max[1] - b.min[1]) * opts.scale);
    let mut cv = Canvas { out: String::new(), scale: opts.scale, min: b.min, max_y: b.max[1] };
    let _ = writeln!(
        cv.out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.2} {h:.2}\">"
    );
    let _ = writeln!(cv.out, "<style>{STYLE}</style>");
    let _ = writeln!(cv.out, "<rect x=\"0\" y=\"0\" width=\"{w:.2}\" height=\"{h:.2}\" fill=\"#fff\" stroke=\"#000\"/>");

    if opts.regions {
        cv.out.push_str("<g id=\"regions\">\n");
        for r in &stat.regions {
            let class = match r.kind {
                RegionKind::Room => "region",
                RegionKind::Zone => "zone",
            };
            cv.polygon(class, Some(&r.id), &r.polygon.vertices);
        }
        cv.out.push_str("</g>\n");
    }

    cv.out.push_str("<g id=\"obstacles\">\n");
    for o in &world.obstacles {
        if o.modes.is_empty() {
            cv.polygon("obstacle", Some(&o.id), &o.polygon.vertices);
            continue;
        }
        for (mode, poly) in &o.modes {
            let active = o.active_mode.as_deref() == Some(mode.as_str());
            let class = if active { "obstacle active" } else { "obstacle inactive" };
            cv.polygon(class, Some(&format!("{}:{}", o.id, mode)), &poly.vertices);
        }
    }
    cv.out.push_str("</g>\n");

    cv.out.push_str("<g id=\"objects\">\n");
    for (id, o) in &world.objects {
        // articulated bodies are already drawn as obstacles
        if o.articulation.is_some() || *id == stat.robot_id {
            continue;
        }
        match &o.shape {
            Shape::Disc { radius } => cv.circle("object", o.pose.xy(), radius.max(0.02)),
            Shape::Polygon { vertices } => {
                let pts: Vec<Point> = vertices.iter().map(|v| place(&o.pose, *v)).collect();
                cv.polygon("object", Some(id), &pts);
            }
        }
    }
    cv.out.push_str("</g>\n");

    if opts.surfaces {
        cv.out.push_str("<g id=\"surfaces\">\n");
        for s in world.surfaces.values() {
            let [a, z] = s.segment;
            let n = s.cells.len().max(1) as f64;
            let (dx, dy) = ((z[0] - a[0]) / n, (z[1] - a[1]) / n);
            let len = dx.hypot(dy).max(1e-12);
            let (nx, ny) = (-dy / len * 0.06, dx / len * 0.06);
            for (i, dirty) in s.cells.iter().enumerate() {
                let p0 = [a[0] + dx * i as f64, a[1] + dy * i as f64];
                let p1 = [p0[0] + dx, p0[1] + dy];
                let quad = [p0, p1, [p1[0] + nx, p1[1] + ny], [p0[0] + nx, p0[1] + ny]];
                cv.polygon(if *dirty { "cell dirty" } else { "cell clean" }, None, &quad);
            }
        }
        cv.out.push_str("</g>\n");
    }

    if let (Some(plan), true) = (plan, opts.trajectories) {
        cv.out.push_str("<g id=\"trajectories\">\n");
        for (k, s) in plan.steps.iter().enumerate() {
            let _ = writeln!(cv.out, "<g class=\"step\" data-step=\"{k}\" data-skill=\"{}\">", escape(&s.skill));
            cv.polyline("head", &s.head);
            cv.polyline("policy", &s.policy);
            cv.polyline("tail", &s.tail);
            cv.out.push_str("</g>\n");
        }
        cv.out.push_str("</g>\n");
    }

    if let Some(events) = trace {
        cv.out.push_str("<g id=\"trace\">\n");
        for e in events {
            cv.circle("trace", e.config.base.xy(), 0.03);
        }
        cv.out.push_str("</g>\n");
    }

    if opts.robot {
        cv.out.push_str("<g id=\"robot\">\n");
        robot(&mut cv, stat, &world.robot_config);
        cv.out.push_str("</g>\n");
    }
    cv.out.push_str("</svg>\n");
    cv.out
}
