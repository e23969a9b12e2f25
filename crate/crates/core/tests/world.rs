mod common;

use proptest::prelude::*;
use tasp_core::geometry::{end_effector, Configuration, Trajectory};
use tasp_core::world::*;

fn whiteboard() -> (WorldState, StaticScene) {
    load_scene(&common::read("whiteboard/scene.json")).unwrap()
}

#[test]
fn whiteboard_scene_contents() {
    let (w, s) = whiteboard();
    assert!(w.objects.len() >= 5);
    for id in ["d1", "c1", "e1", "f1", "w1"] {
        assert!(w.objects.contains_key(id), "{id}");
    }
    let door = w.obstacle("d1-panel").unwrap();
    assert_eq!(door.modes.keys().collect::<Vec<_>>(), ["closed", "open"]);
    assert_eq!(door.active_mode.as_deref(), Some("closed"));
    assert_eq!(s.rooms().count(), 2);
    assert_eq!(s.room_of(&w.robot_config).unwrap().id, "room1");
}

#[test]
fn initial_observations() {
    let (w, _) = whiteboard();
    assert_eq!(w.observe("w1", "dirty").unwrap(), AttrValue::Bool(true));
    assert_eq!(w.observe("d1", "open").unwrap(), AttrValue::Bool(false));
    assert_eq!(w.observe("d1", "open"), w.observe("d1", "open"));
    assert!(w.observe("w1", "colour").is_err());
}

#[test]
fn inconsistent_articulation_rejected() {
    let text = common::read("whiteboard/scene.json").replacen(r#""attributes": {"open": false}, "articulation": "d1-panel""#, r#""attributes": {"open": true}, "articulation": "d1-panel""#, 1);
    assert!(matches!(load_scene(&text), Err(WorldError::Invalid(m)) if m.contains("d1")));
    let text = common::read("whiteboard/scene.json").replacen(r#""dirty": true"#, r#""dirty": false"#, 1);
    assert!(matches!(load_scene(&text), Err(WorldError::Invalid(_))));
}

#[test]
fn door_transitions() {
    let (w, s) = whiteboard();
    let opened = w.set_articulation(&s, "d1", "open").unwrap();
    assert_eq!(opened.observe("d1", "open").unwrap(), AttrValue::Bool(true));
    assert_eq!(opened.obstacle("d1-panel").unwrap().active_mode.as_deref(), Some("open"));
    opened.validate(&s).unwrap();
    assert_eq!(opened.set_articulation(&s, "d1", "open").unwrap(), opened);
    assert!(matches!(w.set_articulation(&s, "d1", "ajar"), Err(WorldError::UnknownMode { .. })));
    assert!(matches!(w.set_articulation(&s, "f1", "open"), Err(WorldError::NotArticulated(_))));

    // robot standing where the panel swings to
    let blocked = w.with_config(&s, Configuration::new(6.4, 3.2, 0.0, 0.0));
    blocked.validate(&s).unwrap();
    assert!(matches!(blocked.set_articulation(&s, "d1", "open"), Err(WorldError::TransitionWouldCollide { .. })));
}

#[test]
fn held_eraser_follows_end_effector() {
    let (w, s) = whiteboard();
    let w = w.set_articulation(&s, "c1", "open").unwrap();
    // reach down into the open drawer
    let grasp = Configuration::new(4.9, 0.75 + 0.25 + 0.6 * 0.8, -std::f64::consts::FRAC_PI_2, 0.8);
    let w = w.with_config(&s, grasp);
    assert!(w.is_collision_free(&s, &grasp));
    let held = w.attach(&s, "e1").unwrap();
    assert!(held.objects["e1"].container.is_none());
    let waypoints = [grasp,
        grasp.with_arm(0.0),
        Configuration::new(4.9, 2.5, 0.0, 0.0),
        Configuration::new(3.0, 3.0, 1.0, 0.5)];
    let mut cur = held.clone();
    for pair in waypoints.windows(2) {
        let (next, _) = cur.step_trajectory(&s, &Trajectory::new(pair.to_vec()), 0.01).unwrap();
        assert_eq!(next.objects["e1"].pose, end_effector(&next.robot_config, &s.footprint));
        next.validate(&s).unwrap();
        cur = next;
    }
    let (same, events) = held.step_trajectory(&s, &Trajectory::single(grasp), 0.01).unwrap();
    assert_eq!(same, held);
    assert!(events.is_empty());
}

#[test]
fn colliding_trajectory_is_reported() {
    let (w, s) = whiteboard();
    let through_wall = Trajectory::new(vec![w.robot_config, Configuration::new(8.0, 4.0, 0.0, 0.0)]);
    assert!(matches!(w.step_trajectory(&s, &through_wall, 0.01), Err(WorldError::Collision { waypoint: 1 })));
}

#[test]
fn board_contact_event() {
    let (w, s) = whiteboard();
    let w = w.with_config(&s, Configuration::new(6.135 + 0.25 + 0.6 * 0.5, 3.5, std::f64::consts::PI, 0.5));
    let (_, events) = w.step_trajectory(&s, &Trajectory::single(w.robot_config), 0.01).unwrap();
    assert_eq!(events, vec![WorldEvent::SurfaceContact { surface: "w1".into(), waypoint: 0 }]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn dirty_attribute_tracks_cells(wipes in prop::collection::vec(2.7..3.7f64, 0..12)) {
        let (mut w, _) = whiteboard();
        for y in wipes {
            w = w.wipe("w1", [6.135, y]).unwrap();
            let any = w.surfaces["w1"].cells.iter().any(|&c| c);
            prop_assert_eq!(w.observe("w1", "dirty").unwrap(), AttrValue::Bool(any));
        }
    }
}
