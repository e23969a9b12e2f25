//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tasp_core::symbolic::{apply, holds, GroundAction, GroundAtom, GroundedTask, Literal, SymbolicState};

pub fn data(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

pub fn read(rel: &str) -> String {
    std::fs::read_to_string(data(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

/// Breadth-first enumeration of the reachable state graph using only
/// `holds`/`apply`. Returns the optimal unit-cost plan length (if any), every
/// optimal plan as action-name sequences (capped), and the number of reachable states.
pub struct BfsResult {
    pub optimal_len: Option<usize>,
    pub optimal_plans: Vec<Vec<String>>,
    pub reachable: usize,
}

pub fn bfs(task: &GroundedTask, max_plans: usize) -> BfsResult {
    let mut depth: HashMap<SymbolicState, usize> = HashMap::new();
    let mut order = Vec::new();
    let mut queue = VecDeque::new();
    depth.insert(task.init.clone(), 0);
    queue.push_back(task.init.clone());
    let mut goal_depth = None;
    while let Some(s) = queue.pop_front() {
        let d = depth[&s];
        order.push(s.clone());
        if holds(&s, &task.goal) && goal_depth.is_none() {
            goal_depth = Some(d);
        }
        for a in &task.actions {
            if holds(&s, &a.preconditions) {
                let n = apply(&s, a).unwrap();
                if !depth.contains_key(&n) {
                    depth.insert(n.clone(), d + 1);
                    queue.push_back(n);
                }
            }
        }
    }
    let mut plans = Vec::new();
    if let Some(g) = goal_depth {
        // DFS along depth-increasing edges ending in goal states at depth g
        let mut stack: Vec<(SymbolicState, Vec<String>)> = vec![(task.init.clone(), vec![])];
        while let Some((s, path)) = stack.pop() {
            if plans.len() >= max_plans {
                break;
            }
            if path.len() == g {
                if holds(&s, &task.goal) {
                    plans.push(path);
                }
                continue;
            }
            for a in task.actions.iter().rev() {
                if holds(&s, &a.preconditions) {
                    let n = apply(&s, a).unwrap();
                    if depth.get(&n) == Some(&(path.len() + 1)) {
                        let mut p = path.clone();
                        p.push(a.name());
                        stack.push((n, p));
                    }
                }
            }
        }
    }
    plans.sort();
    BfsResult { optimal_len: goal_depth, optimal_plans: plans, reachable: order.len() }
}

/// All goal-reaching unit-cost plans up to `max_len` steps (simple-path or not), by cost.
pub fn enumerate_plans(task: &GroundedTask, max_len: usize, cap: usize) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    let mut frontier: Vec<(SymbolicState, Vec<String>)> = vec![(task.init.clone(), vec![])];
    for _ in 0..=max_len {
        let mut next = Vec::new();
        for (s, path) in frontier {
            if holds(&s, &task.goal) {
                out.push(path.clone());
                if out.len() >= cap {
                    return out;
                }
            }
            for a in &task.actions {
                if holds(&s, &a.preconditions) {
                    let mut p = path.clone();
                    p.push(a.name());
                    next.push((apply(&s, a).unwrap(), p));
                }
            }
        }
        frontier = next;
    }
    out
}

/// Random unit-cost STRIPS task over `atoms` propositions.
pub fn random_task(seed: u64, atoms: usize, actions: usize) -> GroundedTask {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let atom = |i: usize| GroundAtom::new(&format!("p{i}"), &[]);
    let lit = |i: usize, positive: bool| Literal { predicate: format!("p{i}"), args: vec![], positive };
    let mut acts = Vec::new();
    for k in 0..actions {
        let mut pre = Vec::new();
        let mut add = Vec::new();
        let mut del = Vec::new();
        for i in 0..atoms {
            match rng.gen_range(0..10) {
                0 | 1 => pre.push(lit(i, true)),
                2 => pre.push(lit(i, false)),
                _ => {}
            }
            match rng.gen_range(0..10) {
                0 | 1 => add.push(atom(i)),
                2 | 3 => del.push(atom(i)),
                _ => {}
            }
        }
        acts.push(GroundAction { schema: format!("a{k:02}"), args: vec![], preconditions: pre, add, delete: del, cost: 1.0 });
    }
    let init: SymbolicState = (0..atoms).filter(|_| rng.gen_bool(0.3)).map(atom).collect();
    let goal: Vec<Literal> = (0..atoms).filter(|_| rng.gen_bool(0.25)).map(|i| lit(i, true)).collect();
    GroundedTask::new(acts, init, goal)
}

/// Brute-force count of type-consistent argument tuples per schema.
pub fn grounding_counts(domain: &tasp_core::Domain, universe: &BTreeMap<String, String>) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    for s in &domain.schemas {
        let mut count = 0usize;
        let objs: Vec<&String> = universe.keys().collect();
        let n = s.parameters.len();
        let total = objs.len().pow(n as u32);
        for mut code in 0..total {
            let mut ok = true;
            for (_, ty) in &s.parameters {
                let o = objs[code % objs.len()];
                code /= objs.len();
                if !domain.types.is_subtype(&universe[o], ty) {
                    ok = false;
                }
            }
            if ok {
                count += 1;
            }
        }
        out.insert(s.name.clone(), count);
    }
    out
}

/// Winding-number point-in-polygon, boundary inclusive within `eps`.
pub fn winding_contains(poly: &[[f64; 2]], p: [f64; 2], eps: f64) -> bool {
    let n = poly.len();
    let mut wn = 0i32;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        if seg_dist(p, a, b) <= eps {
            return true;
        }
        let is_left = (b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1]);
        if a[1] <= p[1] {
            if b[1] > p[1] && is_left > 0.0 {
                wn += 1;
            }
        } else if b[1] <= p[1] && is_left < 0.0 {
            wn -= 1;
        }
    }
    wn != 0
}

pub fn seg_dist(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let l2 = dx * dx + dy * dy;
    let t = if l2 == 0.0 { 0.0 } else { (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / l2).clamp(0.0, 1.0) };
    ((p[0] - a[0] - t * dx).powi(2) + (p[1] - a[1] - t * dy).powi(2)).sqrt()
}

/// Points covering the robot body with spacing about `h`: disc interiors and
/// boundaries, and the arm segment.
#[allow(clippy::too_many_arguments)]
pub fn body_samples(x: f64, y: f64, th: f64, arm: f64, r: f64, reach: f64, held: &[f64], h: f64) -> Vec<[f64; 2]> {
    let mut pts = Vec::new();
    let disc = |cx: f64, cy: f64, rad: f64, pts: &mut Vec<[f64; 2]>| {
        let k = (rad / h).ceil() as i64;
        for i in -k..=k {
            for j in -k..=k {
                let (px, py) = (i as f64 * h, j as f64 * h);
                if px * px + py * py <= rad * rad {
                    pts.push([cx + px, cy + py]);
                }
            }
        }
        let m = ((std::f64::consts::TAU * rad / h).ceil() as usize).max(8);
        for i in 0..m {
            let a = std::f64::consts::TAU * i as f64 / m as f64;
            pts.push([cx + rad * a.cos(), cy + rad * a.sin()]);
        }
    };
    disc(x, y, r, &mut pts);
    let (s, c) = th.sin_cos();
    let tip = r + arm * reach;
    if arm > 0.0 {
        let m = ((arm * reach / h).ceil() as usize).max(1);
        for i in 0..=m {
            let d = r + (tip - r) * i as f64 / m as f64;
            pts.push([x + d * c, y + d * s]);
        }
    }
    for &hr in held {
        disc(x + tip * c, y + tip * s, hr, &mut pts);
    }
    pts
}

/// Dense collision oracle: any body sample inside an obstacle (with `eps` slack) or outside the bounds.
pub fn oracle_collides(
    polys: &[Vec<[f64; 2]>],
    bounds: ([f64; 2], [f64; 2]),
    pts: &[[f64; 2]],
    eps: f64,
) -> bool {
    pts.iter().any(|p| {
        p[0] <= bounds.0[0] + eps
            || p[0] >= bounds.1[0] - eps
            || p[1] <= bounds.0[1] + eps
            || p[1] >= bounds.1[1] - eps
            || polys.iter().any(|poly| winding_contains(poly, *p, eps))
    })
}

/// Grid reachability for a disc among axis-aligned rectangles `[x0,y0,x1,y1]`,
/// with `margin` extra clearance. Conservative: true only when a grid path exists.
pub fn disc_grid_connected(
    rects: &[[f64; 4]],
    bounds: ([f64; 2], [f64; 2]),
    r: f64,
    margin: f64,
    a: [f64; 2],
    b: [f64; 2],
    h: f64,
) -> bool {
    let clear = |p: [f64; 2]| {
        let need = r + margin;
        p[0] - need > bounds.0[0]
            && p[0] + need < bounds.1[0]
            && p[1] - need > bounds.0[1]
            && p[1] + need < bounds.1[1]
            && rects.iter().all(|q| {
                let dx = (q[0] - p[0]).max(0.0).max(p[0] - q[2]);
                let dy = (q[1] - p[1]).max(0.0).max(p[1] - q[3]);
                (dx * dx + dy * dy).sqrt() > need
            })
    };
    let nx = ((bounds.1[0] - bounds.0[0]) / h) as i64;
    let ny = ((bounds.1[1] - bounds.0[1]) / h) as i64;
    let cell = |p: [f64; 2]| (((p[0] - bounds.0[0]) / h).round() as i64, ((p[1] - bounds.0[1]) / h).round() as i64);
    let at = |c: (i64, i64)| [bounds.0[0] + c.0 as f64 * h, bounds.0[1] + c.1 as f64 * h];
    let (s, g) = (cell(a), cell(b));
    if !clear(at(s)) || !clear(at(g)) || !clear(a) || !clear(b) {
        return false;
    }
    let mut seen = std::collections::HashSet::new();
    let mut q = VecDeque::from([s]);
    seen.insert(s);
    while let Some(c) = q.pop_front() {
        if c == g {
            return true;
        }
        for (dx, dy) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            let n = (c.0 + dx, c.1 + dy);
            if n.0 < 0 || n.1 < 0 || n.0 > nx || n.1 > ny || seen.contains(&n) || !clear(at(n)) {
                continue;
            }
            seen.insert(n);
            q.push_back(n);
        }
    }
    false
}

pub fn whiteboard_problem() -> tasp_core::tasp::HybridProblem {
    tasp_core::tasp::HybridProblem::from_texts(
        &read("whiteboard/domain.pddl"),
        &read("whiteboard/problem.pddl"),
        &read("whiteboard/scene.json"),
        &read("whiteboard/skills.json"),
    )
    .unwrap()
}

pub fn solved_whiteboard() -> &'static (tasp_core::tasp::HybridProblem, tasp_core::tasp::HybridPlan) {
    use std::sync::OnceLock;
    static CELL: OnceLock<(tasp_core::tasp::HybridProblem, tasp_core::tasp::HybridPlan)> = OnceLock::new();
    CELL.get_or_init(|| {
        let p = whiteboard_problem();
        let plan = tasp_core::tasp::solve(&p, &tasp_core::tasp::SolveLimits::default()).expect("whiteboard solves");
        (p, plan)
    })
}

/// World just before step `k` of a solved plan.
pub fn world_before(p: &tasp_core::tasp::HybridProblem, plan: &tasp_core::tasp::HybridPlan, k: usize) -> tasp_core::WorldState {
    tasp_core::tasp::replay(p, &plan.steps[..k], 0.01).map_err(|(e, _)| e).expect("prefix replays").0
}

/// Random axis-aligned rectangles; only scenes the grid oracle proves solvable are kept.
pub fn benchmark_scene(seed: u64) -> (tasp_core::geometry::Scene, tasp_core::Configuration, tasp_core::Configuration) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bounds = ([0.0, 0.0], [10.0, 10.0]);
    loop {
        let rects: Vec<[f64; 4]> = (0..6)
            .map(|_| {
                let (x, y) = (rng.gen_range(0.5..8.5), rng.gen_range(0.5..8.5));
                [x, y, x + rng.gen_range(0.3..2.0), y + rng.gen_range(0.3..2.0)]
            })
            .collect();
        let a = [rng.gen_range(0.5..9.5), rng.gen_range(0.5..9.5)];
        let b = [rng.gen_range(0.5..9.5), rng.gen_range(0.5..9.5)];
        if !disc_grid_connected(&rects, bounds, 0.25, 0.02, a, b, 0.05) {
            continue;
        }
        let obstacles = rects
            .iter()
            .enumerate()
            .map(|(i, r)| tasp_core::Obstacle::fixed(&format!("r{i}"), tasp_core::geometry::Polygon::rect(r[0], r[1], r[2], r[3])))
            .collect();
        let scene = tasp_core::geometry::Scene::new(tasp_core::geometry::Bounds { min: bounds.0, max: bounds.1 }, obstacles);
        return (
            scene,
            tasp_core::Configuration::new(a[0], a[1], rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI), 0.0),
            tasp_core::Configuration::new(b[0], b[1], rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI), 0.0),
        );
    }
}
