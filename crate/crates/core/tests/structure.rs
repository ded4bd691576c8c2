use std::f64::consts::FRAC_1_SQRT_2;
use artipg::exemplars::{exemplar, exemplar_text, CATEGORIES};
use artipg::program::structure::elaborate_unchecked;
use artipg::program::*;

#[test]
fn exemplars_validate() {
    for c in CATEGORIES {
        let p = exemplar(c).unwrap();
        assert_eq!(validate_program(&p), vec![], "{c}");
        let s = elaborate(&p, None).unwrap();
        for (i, r) in s.residuals() {
            assert!(r <= 1e-9, "{c} {} residual {r}", s.provenance[i].node_name());
        }
    }
}

#[test]
fn exemplar_roundtrip() {
    for c in CATEGORIES {
        let p = parse_program(exemplar_text(c).unwrap()).unwrap();
        let text = serialize_program(&p);
        let q = parse_program(&text).unwrap();
        assert_eq!(p, q);
        assert_eq!(serialize_program(&q), text);
    }
}

#[test]
fn usb_shape() {
    let p = exemplar("usb").unwrap();
    let advanced: Vec<_> = p.declarations.iter().filter(|d| d.advanced().is_some()).map(|d| d.name.as_str()).collect();
    assert_eq!(advanced, ["body", "cap"]);
    let s = elaborate_unchecked(&p).unwrap();
    assert!(s.joints.iter().any(|j| j.kind == JointKind::Revolute));
    println!("{:#?}", s.node_names());
}

use artipg::math::{rotation_about, Pt3, Vec3};
use artipg::program::kinematics::pose_distance;
use artipg::program::templates::REGISTRY;
use proptest::prelude::*;
use serde_json::json;

fn cuboid(name: &str, size: [f64; 3]) -> serde_json::Value {
    json!({"name": name, "label": name, "elementary": {"template": "Cuboid", "params": {
        "size_x": {"value": size[0]}, "size_y": {"value": size[1]}, "size_z": {"value": size[2]}}}})
}

fn program(root: &str, decls: Vec<serde_json::Value>, edges: Vec<serde_json::Value>) -> StructureProgram {
    let doc = json!({"version": "artipg-sp/1", "category": "test", "root": root,
                     "declarations": decls, "connectivity": edges});
    parse_program(&doc.to_string()).unwrap()
}

fn attach(parent: &str, child: &str, pf: &str, cf: &str, offset: [f64; 2]) -> serde_json::Value {
    json!({"parent": parent, "child": child, "relation": {"kind": "attach", "parent_face": pf,
           "child_face": cf, "offset": [{"value": offset[0]}, {"value": offset[1]}]}})
}

#[test]
fn single_cuboid_at_declared_pose() {
    let mut d = cuboid("a", [1.0, 2.0, 3.0]);
    d["pose"] = json!({"translation": [1.0, 2.0, 3.0], "rotation": [0.0, 0.0, 0.0, 1.0]});
    let s = elaborate(&program("a", vec![d], vec![]), None).unwrap();
    assert_eq!(s.instances.len(), 1);
    let t = s.instances[0].pose.translation.vector;
    assert_eq!([t.x, t.y, t.z], [1.0, 2.0, 3.0]);
    assert!((s.instances[0].pose.rotation.angle() - std::f64::consts::PI).abs() < 1e-12);
}

#[test]
fn attach_stacks_flush() {
    let p = program(
        "a",
        vec![cuboid("a", [1.0, 1.0, 0.4]), cuboid("b", [0.5, 0.5, 0.2])],
        vec![attach("a", "b", "pz", "nz", [0.0, 0.0])],
    );
    let s = elaborate(&p, None).unwrap();
    let b = &s.instances[1];
    let c = b.pose.translation.vector;
    assert!((c - Vec3::new(0.0, 0.0, 0.3)).norm() < 1e-15);
    // bottom of b touches top of a
    assert!((-b.world_support(&-Vec3::z()) - 0.2).abs() < 1e-15);
    assert!(!s.visible[0][4] && !s.visible[1][5]);
    assert_eq!(s.visible[0].iter().filter(|v| **v).count(), 5);
}

#[test]
fn coaxial_axes_collinear() {
    let cyl = |n: &str, r: f64, h: f64| {
        json!({"name": n, "label": n, "elementary": {"template": "Cylinder",
               "params": {"radius": {"value": r}, "height": {"value": h}}}})
    };
    let mut a = cyl("a", 0.2, 0.5);
    a["pose"] = json!({"translation": [0.1, -0.3, 0.2], "rotation": [0.9238795325112867, 0.3826834323650898, 0.0, 0.0]});
    let edge = json!({"parent": "a", "child": "b", "relation": {"kind": "coaxial", "parent_axis": "z",
                      "child_axis": "z", "offset": {"value": 0.4}, "spin": {"value": 0.3}}});
    let s = elaborate(&program("a", vec![a, cyl("b", 0.1, 0.3)], vec![edge]), None).unwrap();
    let (pa, pb) = (s.instances[0].pose, s.instances[1].pose);
    let (za, zb) = (pa.rotation * Vec3::z(), pb.rotation * Vec3::z());
    assert!(za.cross(&zb).norm() < 1e-9 && za.dot(&zb) > 0.0);
    let d = pb.translation.vector - pa.translation.vector;
    assert!((d - za * 0.4).norm() < 1e-12);
}

#[test]
fn fixed_relative_composes() {
    let edge = json!({"parent": "a", "child": "b", "relation": {"kind": "fixed_relative",
        "translation": [{"value": 0.0}, {"value": 3.0}, {"value": 0.0}], "axis": [0.0, 0.0, 1.0], "angle": {"value": 0.5}}});
    let mut a = cuboid("a", [1.0; 3]);
    a["pose"] = json!({"translation": [1.0, 0.0, 0.0], "rotation": [FRAC_1_SQRT_2, 0.0, FRAC_1_SQRT_2, 0.0]});
    let s = elaborate(&program("a", vec![a, cuboid("b", [1.0; 3])], vec![edge]), None).unwrap();
    let t = nalgebra::Isometry3::new(Vec3::new(0.0, 3.0, 0.0), Vec3::new(0.0, 0.0, 0.5));
    assert!(pose_distance(&s.instances[1].pose, &(s.instances[0].pose * t)) < 1e-15);
}

#[test]
fn floating_declaration_reported() {
    let p = program("a", vec![cuboid("a", [1.0; 3]), {
        let mut k = cuboid("knob", [0.1; 3]);
        k["pose"] = json!({"translation": [5.0, 0.0, 0.0], "rotation": [1.0, 0.0, 0.0, 0.0]});
        k
    }], vec![]);
    assert_eq!(validate_program(&p), vec![Diagnostic::Floating("knob".into())]);
}

#[test]
fn overlapping_siblings_collide() {
    let p = program(
        "base",
        vec![cuboid("base", [1.0, 1.0, 1.0]), cuboid("a", [2.0, 1.0, 0.5]), cuboid("b", [0.5, 1.0, 1.5])],
        vec![attach("base", "a", "pz", "nz", [0.0, 0.0]), attach("base", "b", "px", "nx", [0.0, 0.0])],
    );
    assert_eq!(validate_program(&p), vec![Diagnostic::Collision("a".into(), "b".into())]);
    assert!(matches!(elaborate(&p, None), Err(StructureError::ElaborationCollision(_))));
}

#[test]
fn embedded_cuboid_collides() {
    let edge = json!({"parent": "a", "child": "b", "relation": {"kind": "fixed_relative",
        "translation": [{"value": 0.1}, {"value": 0.0}, {"value": 0.0}], "axis": [0.0, 0.0, 1.0], "angle": {"value": 0.0}}});
    let p = program("a", vec![cuboid("a", [1.0; 3]), cuboid("b", [0.2; 3])], vec![edge]);
    assert_eq!(check_validity(&structure::elaborate_unchecked(&p).unwrap()).len(), 1);
}

fn with_legs(n: i64) -> StructureProgram {
    let mut p = exemplar("globe").unwrap();
    let base = p.declarations.iter_mut().find(|d| d.name == "base").unwrap();
    base.discrete_mut().get_mut("legs").unwrap().value = n;
    p
}

#[test]
fn globe_legs_rotationally_symmetric() {
    let s = elaborate(&with_legs(4), None).unwrap();
    let legs: Vec<usize> = (0..s.instances.len())
        .filter(|&i| s.provenance[i].part.as_deref() == Some("leg"))
        .collect();
    assert_eq!(legs.len(), 4);
    let reps: Vec<_> = legs.iter().map(|&i| s.provenance[i].repetition.unwrap()).collect();
    assert_eq!(reps, [0, 1, 2, 3]);
    let hub = s.instances[s.instances_of("base")[0]].pose;
    let axis = hub.rotation * Vec3::z();
    let center = Pt3::from(hub.translation.vector);
    for k in 0..4 {
        let turn = rotation_about(center, axis, std::f64::consts::FRAC_PI_2);
        let a = turn * Pt3::from(s.instances[legs[k]].pose.translation.vector);
        let b = s.instances[legs[(k + 1) % 4]].pose.translation.vector;
        assert!((a.coords - b).norm() < 1e-12, "leg {k}");
    }
}

#[test]
fn washing_door_swings_about_vertical_rim_axis() {
    let p = exemplar("washing_machine").unwrap();
    let rest = elaborate(&p, None).unwrap();
    let open = articulate(&rest, "door.hinge", std::f64::consts::FRAC_PI_2).unwrap();
    let door: Vec<usize> = rest.instances_of("door");
    let body: Vec<usize> = rest.instances_of("body");
    for &i in &body {
        assert_eq!(rest.instances[i].pose, open.instances[i].pose);
    }
    // hinge: vertical line through the rim point beside the door centre
    // door: diameter 0.4 mounted on the cabinet front plane y = -depth/2
    let glass = rest.instances[door[0]].pose.translation.vector;
    let plane = Vec3::new(glass.x, -0.55 / 2.0, glass.z);
    let candidates = [plane + Vec3::x() * 0.2, plane - Vec3::x() * 0.2];
    let matched = candidates.iter().any(|c| {
        [1.0, -1.0].iter().any(|sign| {
            let r = rotation_about(Pt3::from(*c), Vec3::z(), sign * std::f64::consts::FRAC_PI_2);
            door.iter().all(|&i| pose_distance(&open.instances[i].pose, &(r * rest.instances[i].pose)) < 1e-9)
        })
    });
    assert!(matched);
}

#[test]
fn articulation_basics() {
    let s = elaborate(&exemplar("usb").unwrap(), None).unwrap();
    let same = articulate(&s, "cap.swivel", 0.0).unwrap();
    assert_eq!(same, s);
    let there = articulate(&s, "cap.swivel", 1.2).unwrap();
    let back = articulate(&there, "cap.swivel", 0.0).unwrap();
    for (a, b) in back.instances.iter().zip(&s.instances) {
        assert!(pose_distance(&a.pose, &b.pose) < 1e-9);
    }
    assert!(matches!(articulate(&s, "cap.swivel", 4.0), Err(StructureError::JointOutOfRange { .. })));
    assert!(matches!(articulate(&s, "nope", 0.0), Err(StructureError::UnknownJoint(_))));

    let mut p = exemplar("usb").unwrap();
    let cap = p.declarations.iter_mut().find(|d| d.name == "cap").unwrap();
    if let DeclBody::Advanced(a) = &mut cap.body {
        a.template = "DetachedCap".into();
        a.params.remove("pin_fraction");
    }
    let s = elaborate(&p, None).unwrap();
    let moved = articulate(&s, "cap.pull", 0.02).unwrap();
    let j = &s.joints[s.joint_index("cap.pull").unwrap()];
    let world_dir = s.instances[j.parent].pose.rotation * (s.links[j.child].as_ref().unwrap().anchor.rotation * j.direction);
    for i in s.instances_of("cap") {
        let d = moved.instances[i].pose.translation.vector - s.instances[i].pose.translation.vector;
        assert!((d - world_dir * 0.02).norm() < 1e-12);
        assert!((world_dir - Vec3::z()).norm() < 1e-12, "pull is along the plug axis");
    }
}

fn single_template_program(name: &str, dims: [f64; 3]) -> StructureProgram {
    let t = REGISTRY.iter().find(|t| t.name == name).unwrap();
    let mut params = serde_json::Map::new();
    for (k, v) in ["width", "depth", "height"].iter().zip(dims) {
        params.insert(k.to_string(), json!({"value": v}));
    }
    let d = json!({"name": "x", "label": "x", "advanced": {"template": name, "role": t.role,
                   "essential": true, "params": params}});
    program("x", vec![d], vec![])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn templates_fill_their_dims(w in 0.32f64..0.6, d in 0.2f64..0.6, h in 0.1f64..0.15, k in 0usize..10) {
        let t = &REGISTRY[k];
        let square = !matches!(t.name, "RoundedRectBody" | "RoundTailBody" | "RotatedCap" | "DetachedCap" | "FrontLoadBody");
        let dims = [w, if square { w } else { d }, h];
        let s = structure::elaborate_unchecked(&single_template_program(t.name, dims)).unwrap();
        for (a, want) in dims.iter().enumerate() {
            let mut e = Vec3::zeros();
            e[a] = 1.0;
            let hi = s.instances.iter().map(|i| i.world_support(&e)).fold(f64::MIN, f64::max);
            let lo = s.instances.iter().map(|i| -i.world_support(&-e)).fold(f64::MAX, f64::min);
            prop_assert!((hi - lo - want).abs() < 1e-9, "{} axis {a}: {} vs {want}", t.name, hi - lo);
        }
        prop_assert_eq!(check_validity(&s), vec![]);
    }

    #[test]
    fn revolute_group_action(a in -1.5f64..1.5, b in -1.5f64..1.5) {
        let s = elaborate(&exemplar("globe").unwrap(), None).unwrap();
        let ab = articulate(&articulate(&s, "spin", a).unwrap(), "spin", a + b).unwrap();
        let direct = articulate(&s, "spin", a + b).unwrap();
        for (x, y) in ab.instances.iter().zip(&direct.instances) {
            prop_assert!(pose_distance(&x.pose, &y.pose) < 1e-9);
        }
    }

    #[test]
    fn any_leg_count_is_valid(n in 3i64..=6) {
        let p = with_legs(n);
        prop_assert_eq!(validate_program(&p), vec![]);
    }
}
