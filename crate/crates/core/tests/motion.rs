mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tasp_core::geometry::*;
use tasp_core::motion::*;

fn fp() -> Footprint {
    Footprint::new(0.25, 0.5).unwrap()
}

fn query(scene: Scene, start: Configuration, goal: Configuration, seed: u64) -> MotionQuery {
    MotionQuery { start, goal: Goal::Config(goal), scene, footprint: fp(), attachments: vec![], params: MotionParams::with_seed(seed) }
}

fn open(min: [f64; 2], max: [f64; 2]) -> Scene {
    Scene::new(Bounds { min, max }, vec![])
}

#[test]
fn empty_scene_two_meters_after_smoothing() {
    let q = query(open([-5.0, -5.0], [5.0, 5.0]), Configuration::new(0.0, 0.0, 0.0, 0.0), Configuration::new(2.0, 0.0, 0.0, 0.0), 1);
    let t = plan_motion(&q).unwrap();
    assert_eq!(*t.start(), q.start);
    assert!(t.end().approx_eq(&Configuration::new(2.0, 0.0, 0.0, 0.0), 1e-9));
    let len = t.length(&q.footprint);
    assert!((2.0 - 1e-9..=2.0 * 1.05).contains(&len), "length {len}");
}

#[test]
fn corridor_detour_respects_analytic_bound() {
    // a 1 m x 4 m block between start and goal; the disc centre must pass |y| >= 2.25 at x = 0
    let block = Obstacle::fixed("block", Polygon::rect(-0.5, -2.0, 0.5, 2.0));
    let scene = Scene::new(Bounds { min: [-4.0, -4.0], max: [4.0, 4.0] }, vec![block]);
    let q = query(scene, Configuration::new(-2.0, 0.0, 0.0, 0.0), Configuration::new(2.0, 0.0, 0.0, 0.0), 9);
    let t = plan_motion(&q).unwrap();
    assert!(validate(&t, &q.scene, &q.footprint, &[], 0.01));
    let bound = 2.0 * (2.0f64 * 2.0 + 2.25 * 2.25).sqrt();
    assert!(t.length(&q.footprint) >= bound, "{} < {bound}", t.length(&q.footprint));
}

#[test]
fn same_seed_same_trajectory() {
    let block = Obstacle::fixed("block", Polygon::rect(-0.5, -2.0, 0.5, 2.0));
    let scene = Scene::new(Bounds { min: [-4.0, -4.0], max: [4.0, 4.0] }, vec![block]);
    let a = Configuration::new(-2.0, 0.0, 0.3, 0.2);
    let b = Configuration::new(2.0, 0.5, -1.0, 0.7);
    let t1 = plan_motion(&query(scene.clone(), a, b, 77)).unwrap();
    let t2 = plan_motion(&query(scene.clone(), a, b, 77)).unwrap();
    assert_eq!(t1, t2);
    let t3 = plan_motion(&query(scene, a, b, 78)).unwrap();
    assert!(t3.end().approx_eq(&b, 1e-9));
}

#[test]
fn region_goal_terminal_satisfies_predicate() {
    let target = [3.0, 1.0];
    let contains: RegionPredicate = Arc::new(move |c: &Configuration| {
        let e = end_effector(c, &Footprint::new(0.25, 0.5).unwrap());
        ((e.x - target[0]).powi(2) + (e.y - target[1]).powi(2)).sqrt() <= 0.05
    });
    let sample: RegionSampler = Arc::new(move |rng: &mut ChaCha8Rng| {
        let th: f64 = rng.gen_range(-PI..PI);
        let arm: f64 = rng.gen_range(0.0..1.0);
        let d = 0.25 + arm * 0.5;
        Some(Configuration::new(target[0] - d * th.cos(), target[1] - d * th.sin(), th, arm))
    });
    let wall = Obstacle::fixed("wall", Polygon::rect(1.0, -3.0, 1.2, 2.0));
    let q = MotionQuery {
        start: Configuration::new(-2.0, 0.0, 0.0, 0.0),
        goal: Goal::Region(GoalRegion { contains: contains.clone(), sample }),
        scene: Scene::new(Bounds { min: [-4.0, -4.0], max: [4.0, 4.0] }, vec![wall]),
        footprint: fp(),
        attachments: vec![],
        params: MotionParams::with_seed(4),
    };
    let t = plan_motion(&q).unwrap();
    assert!(contains(t.end()));
    assert!(validate(&t, &q.scene, &q.footprint, &[], 0.01));
}

#[test]
fn zigzag_shortcut_strictly_shorter() {
    let scene = open([-1.0, -2.0], [11.0, 2.0]);
    let w: Vec<Configuration> =
        (0..11).map(|i| Configuration::new(i as f64, if i % 2 == 0 { 0.0 } else { 1.0 }, 0.0, 0.0)).collect();
    let t = Trajectory::new(w);
    let params = MotionParams::with_seed(2);
    let s = shortcut(&t, &scene, &fp(), &[], &params);
    assert!(s.length(&fp()) < t.length(&fp()));
    assert_eq!(s.start(), t.start());
    assert_eq!(s.end(), t.end());
    assert!(validate(&s, &scene, &fp(), &[], 0.01));
}

#[test]
fn hundred_benchmark_scenes() {
    let (mut solved, mut fine_ok) = (0, 0);
    for seed in 0..100 {
        let (scene, a, b) = common::benchmark_scene(1000 + seed);
        let q = query(scene, a, b, seed);
        if let Ok(t) = plan_motion(&q) {
            solved += 1;
            assert!(validate(&t, &q.scene, &q.footprint, &[], q.params.resolution), "seed {seed}");
            assert!(t.end().approx_eq(&b, 1e-9));
            if validate(&t, &q.scene, &q.footprint, &[], q.params.resolution / 10.0) {
                fine_ok += 1;
            }
        }
    }
    assert!(solved >= 95, "solved {solved}/100");
    assert!(fine_ok >= 99.min(solved), "fine-resolution {fine_ok}/{solved}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn shortcut_preserves_endpoints_and_never_lengthens(pts in prop::collection::vec((0.5..9.5f64, 0.5..9.5f64, -3.0..3.0f64, 0.0..1.0f64), 2..12), seed in any::<u64>()) {
        let scene = open([0.0, 0.0], [10.0, 10.0]);
        let f = Footprint::new(0.2, 0.3).unwrap();
        let t = Trajectory::new(pts.iter().map(|&(x, y, th, a)| Configuration::new(x, y, th, a)).collect());
        let s = shortcut(&t, &scene, &f, &[], &MotionParams::with_seed(seed));
        prop_assert_eq!(s.start(), t.start());
        prop_assert_eq!(s.end(), t.end());
        prop_assert!(s.length(&f) <= t.length(&f) + 1e-9);
    }
}
