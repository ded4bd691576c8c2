use artipg::detail::complete::symmetry_maps;
use artipg::detail::pseudo::{pseudo_real_cloud, BumpParams};
use artipg::detail::*;
use artipg::math::{axis_angle, rng_from_seed, Pose, Pt3, Vec3};
use artipg::primitive::*;
use artipg::program::{elaborate, parse_program, Structure};
use nalgebra::Translation3;
use proptest::prelude::*;
use rand::Rng;
use serde_json::json;

fn scan_nearest(x: &Pt3, ys: &[Pt3]) -> usize {
    let mut best = 0;
    for j in 1..ys.len() {
        if (ys[j] - x).norm_squared() < (ys[best] - x).norm_squared() {
            best = j;
        }
    }
    best
}

fn random_cloud(rng: &mut impl Rng, n: usize, lattice: bool) -> Vec<Pt3> {
    (0..n)
        .map(|_| {
            if lattice {
                Pt3::new(rng.random_range(0..3) as f64, rng.random_range(0..3) as f64, rng.random_range(0..2) as f64)
            } else {
                Pt3::new(rng.random(), rng.random(), rng.random())
            }
        })
        .collect()
}

fn point_samples(xs: &[Pt3]) -> Vec<SurfaceSample> {
    xs.iter()
        .map(|p| SurfaceSample {
            primitive: PrimitiveId(0),
            patch: PatchId(0),
            uv: [0.5, 0.5],
            position: *p,
            normal: Vec3::z(),
            visible: true,
        })
        .collect()
}

#[test]
fn deformation_matches_scan_and_is_optimal() {
    let mut rng = rng_from_seed(11);
    for case in 0..200 {
        let lattice = case % 3 == 0;
        let nx = rng.random_range(1..=64);
        let ny = rng.random_range(1..=128);
        let xs = random_cloud(&mut rng, nx, lattice);
        let ys = random_cloud(&mut rng, ny, lattice);
        let f = compute_deformation(&point_samples(&xs), &ys, "case").unwrap();
        for (i, x) in xs.iter().enumerate() {
            let j = scan_nearest(x, &ys);
            assert_eq!(f.vectors[i], ys[j] - x, "case {case} point {i}");
            let moved = x + f.vectors[i];
            assert!(ys.contains(&moved));
            assert!(ys.iter().all(|y| f.vectors[i].norm() <= (y - x).norm()));
        }
    }
}

#[test]
fn identity_target_has_zero_cost() {
    let mut rng = rng_from_seed(3);
    let xs = random_cloud(&mut rng, 50, false);
    let f = compute_deformation(&point_samples(&xs), &xs, "self").unwrap();
    assert!(f.vectors.iter().all(|v| *v == Vec3::zeros()));
    assert_eq!(f.mean_cost(), 0.0);
    assert_eq!(f.frame, Frame::World);
}

proptest! {
    #[test]
    fn cost_does_not_grow_with_target(seed in any::<u64>(), extra in 1usize..40) {
        let mut rng = rng_from_seed(seed);
        let xs = point_samples(&random_cloud(&mut rng, 30, false));
        let mut ys = random_cloud(&mut rng, 20, false);
        let before = compute_deformation(&xs, &ys, "").unwrap();
        ys.extend(random_cloud(&mut rng, extra, false));
        let after = compute_deformation(&xs, &ys, "").unwrap();
        for (a, b) in before.vectors.iter().zip(&after.vectors) {
            prop_assert!(b.norm() <= a.norm());
        }
        prop_assert!(after.mean_cost() <= before.mean_cost());
    }

    #[test]
    fn relative_vectors_follow_rigid_motion(seed in any::<u64>(), t in prop::array::uniform3(-2.0f64..2.0)) {
        let mut rng = rng_from_seed(seed);
        let shapes = shapes();
        let k = rng.random_range(0..shapes.len());
        let inst = shapes[k].clone();
        let samples = sample_surface(std::slice::from_ref(&inst), 40, &|_, _| true, seed).unwrap();
        let vectors: Vec<Vec3> = (0..samples.len()).map(|_| Vec3::new(rng.random(), rng.random(), rng.random()) * 0.01).collect();
        let world = DetailField {
            bindings: samples.iter().map(|s| Binding { instance: 0, patch: s.patch, uv: s.uv }).collect(),
            vectors: vectors.clone(),
            frame: Frame::World,
            source: String::new(),
            unsourced: vec![],
        };
        let rel = encode_relative(&world, std::slice::from_ref(&inst)).unwrap();
        let back = decode_relative(&rel, std::slice::from_ref(&inst)).unwrap();
        for (a, b) in back.vectors.iter().zip(&vectors) {
            prop_assert!((a - b).norm() <= 1e-12);
        }

        let axis = Vec3::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
        let motion = Pose::from_parts(Translation3::new(t[0], t[1], t[2]), axis_angle(axis, rng.random_range(-3.0..3.0)));
        let mut moved = inst.clone();
        moved.pose = motion * inst.pose;
        let mut moved_world = world.clone();
        for v in &mut moved_world.vectors {
            *v = motion.rotation * *v;
        }
        let rel2 = encode_relative(&moved_world, std::slice::from_ref(&moved)).unwrap();
        for (a, b) in rel.vectors.iter().zip(&rel2.vectors) {
            prop_assert!((a - b).norm() <= 1e-9);
        }
    }
}

fn params(p: &[(&str, f64)]) -> ParamMap {
    p.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn posed(t: PrimitiveTemplateId, p: &[(&str, f64)]) -> PrimitiveInstance {
    let pose = Pose::from_parts(Translation3::new(0.3, -0.2, 0.1), axis_angle(Vec3::new(1.0, 2.0, 3.0), 0.7));
    PrimitiveInstance::new(PrimitiveId(0), t, params(p), pose, String::new()).unwrap()
}

fn shapes() -> Vec<PrimitiveInstance> {
    use PrimitiveTemplateId as T;
    vec![
        posed(T::Cuboid, &[("size_x", 0.4), ("size_y", 0.3), ("size_z", 0.2)]),
        posed(T::Cylinder, &[("radius", 0.1), ("height", 0.5)]),
        posed(T::Sphere, &[("radius", 0.2)]),
        posed(T::Torus, &[("major_radius", 0.3), ("minor_radius", 0.05)]),
    ]
}

#[test]
fn encoding_edge_cases() {
    let cyl = instantiate_primitive(
        PrimitiveTemplateId::Cylinder,
        &params(&[("radius", 0.1), ("height", 0.5)]),
        &Default::default(),
    )
    .unwrap();
    let h = 0.003;
    let field = DetailField {
        bindings: vec![Binding { instance: 0, patch: CYLINDER_LATERAL, uv: [0.25, 0.4] }],
        vectors: vec![Vec3::new(h, 0.0, 0.0)],
        frame: Frame::SurfaceRelative,
        source: String::new(),
        unsourced: vec![],
    };
    let w = decode_relative(&field, std::slice::from_ref(&cyl)).unwrap();
    assert!((w.vectors[0] - Vec3::new(0.0, h, 0.0)).norm() < 1e-15);

    let along_normal = DetailField { vectors: vec![Vec3::new(0.0, 0.01, 0.0)], frame: Frame::World, ..field.clone() };
    let r = encode_relative(&along_normal, std::slice::from_ref(&cyl)).unwrap();
    assert!((r.vectors[0] - Vec3::new(0.01, 0.0, 0.0)).norm() < 1e-15);

    let zero = DetailField { vectors: vec![Vec3::zeros()], frame: Frame::World, ..field.clone() };
    assert_eq!(encode_relative(&zero, std::slice::from_ref(&cyl)).unwrap().vectors, vec![Vec3::zeros()]);
    assert_eq!(encode_relative(&field, &[cyl]).unwrap_err(), DetailError::WrongFrame(Frame::SurfaceRelative));
}

fn structure(decls: serde_json::Value, edges: serde_json::Value) -> Structure {
    let root = decls[0]["name"].as_str().unwrap().to_string();
    let doc = json!({"version": "artipg-sp/1", "category": "test", "root": root,
                     "declarations": decls, "connectivity": edges});
    elaborate(&parse_program(&doc.to_string()).unwrap(), None).unwrap()
}

fn single(template: &str, p: serde_json::Value) -> Structure {
    structure(json!([{"name": "a", "label": "a", "elementary": {"template": template, "params": p}}]), json!([]))
}

fn relative_field(s: &Structure, n: usize, seed: u64) -> DetailField {
    let samples = sample_surface(&s.instances, n, &|i, p| s.is_visible(i, p), seed).unwrap();
    let mut rng = rng_from_seed(seed);
    DetailField {
        bindings: samples.iter().map(|x| Binding { instance: x.primitive.0 as usize, patch: x.patch, uv: x.uv }).collect(),
        vectors: samples.iter().map(|_| Vec3::new(rng.random(), rng.random(), rng.random())).collect(),
        frame: Frame::SurfaceRelative,
        source: "fixture".into(),
        unsourced: vec![],
    }
}

#[test]
fn hidden_cuboid_face_mirrors_opposite_face() {
    let mut s = single("Cuboid", json!({"size_x": {"value": 1.0}, "size_y": {"value": 1.0}, "size_z": {"value": 1.0}}));
    s.visible[0][5] = false;
    let field = relative_field(&s, 600, 1);
    assert!(field.bindings.iter().all(|b| b.patch != PatchId(5)));
    let done = complete_invisible(&s, &field).unwrap();
    assert_eq!(done.bindings[..field.len()], field.bindings[..]);
    assert_eq!(done.vectors[..field.len()], field.vectors[..]);
    let top: Vec<_> = (0..field.len()).filter(|&i| field.bindings[i].patch == PatchId(4)).collect();
    let bottom: Vec<_> = (field.len()..done.len()).collect();
    assert_eq!(top.len(), bottom.len());
    for (&i, &j) in top.iter().zip(&bottom) {
        assert_eq!(done.bindings[j].patch, PatchId(5));
        assert_eq!(done.bindings[j].uv, field.bindings[i].uv);
        assert_eq!(done.vectors[j], field.vectors[i]);
    }
    assert!(done.unsourced.is_empty());
}

#[test]
fn fully_visible_structure_is_unchanged() {
    let s = single("Cuboid", json!({"size_x": {"value": 1.0}, "size_y": {"value": 1.0}, "size_z": {"value": 1.0}}));
    let field = relative_field(&s, 600, 2);
    assert_eq!(complete_invisible(&s, &field).unwrap(), field);
    let world = DetailField { frame: Frame::World, ..field };
    assert!(complete_invisible(&s, &world).is_err());
}

#[test]
fn half_occluded_lateral_copies_half_turn() {
    let s = single("Cylinder", json!({"radius": {"value": 0.1}, "height": {"value": 0.4}}));
    let vis = |_: usize, p: PatchId, uv: [f64; 2]| p != CYLINDER_LATERAL || uv[0] < 0.5;
    let mut field = relative_field(&s, 800, 3);
    let keep: Vec<bool> = field.bindings.iter().map(|b| vis(0, b.patch, b.uv)).collect();
    let mut k = keep.iter();
    field.bindings.retain(|_| *k.next().unwrap());
    let mut k = keep.iter();
    field.vectors.retain(|_| *k.next().unwrap());

    let done = complete_partial(&s, &field, &vis).unwrap();
    let lateral: Vec<_> = (0..field.len()).filter(|&i| field.bindings[i].patch == CYLINDER_LATERAL).collect();
    assert_eq!(done.len(), field.len() + lateral.len());
    for (&i, j) in lateral.iter().zip(field.len()..) {
        let (a, b) = (field.bindings[i], done.bindings[j]);
        assert!((b.uv[0] - (a.uv[0] + 0.5)).abs() < 1e-15 && b.uv[1] == a.uv[1]);
        assert_eq!(done.vectors[j], field.vectors[i]);
        // the copy lands diametrically opposite
        let pa = s.instances[0].surface_point(a.patch, a.uv[0], a.uv[1]).unwrap();
        let pb = s.instances[0].surface_point(b.patch, b.uv[0], b.uv[1]).unwrap();
        let c = s.instances[0].pose.translation.vector;
        let axis = s.instances[0].pose.rotation * Vec3::z();
        let (ra, rb) = (pa.coords - c, pb.coords - c);
        assert!((ra.dot(&axis) - rb.dot(&axis)).abs() < 1e-12);
        assert!((ra - ra.dot(&axis) * axis + (rb - rb.dot(&axis) * axis)).norm() < 1e-12);
    }
}

#[test]
fn attached_faces_complete_from_symmetric_partners() {
    let cube = |n: &str, s: f64| json!({"name": n, "label": n, "elementary": {"template": "Cuboid", "params": {
        "size_x": {"value": s}, "size_y": {"value": s}, "size_z": {"value": s}}}});
    let s = structure(
        json!([cube("a", 1.0), cube("b", 0.5)]),
        json!([{"parent": "a", "child": "b", "relation": {"kind": "attach", "parent_face": "pz", "child_face": "nz",
                "offset": [{"value": 0.0}, {"value": 0.0}]}}]),
    );
    assert!(!s.is_visible(0, PatchId(4)) && !s.is_visible(1, PatchId(5)));
    let field = relative_field(&s, 1000, 4);
    let done = complete_invisible(&s, &field).unwrap();
    for (inst, hidden, partner) in [(0, 4, 5), (1, 5, 4)] {
        let count = |f: &DetailField, p: u16| f.bindings.iter().filter(|b| b.instance == inst && b.patch == PatchId(p)).count();
        assert_eq!(count(&done, hidden), count(&field, partner));
    }
}

#[test]
fn prism_and_round_maps() {
    let s = structure(
        json!([{"name": "a", "label": "a", "elementary": {"template": "PrismN", "params": {
            "width": {"value": 0.3}, "depth": {"value": 0.3}, "height": {"value": 0.2}, "arc_bulge": {"value": 0.0}},
            "discrete": {"side_count": {"value": 6}, "arc_sides": {"value": 0}}}}]),
        json!([]),
    );
    let maps = symmetry_maps(&s.instances[0].shape);
    // caps exchange, every side reaches the opposite one first
    assert!(maps.iter().any(|m| m.source == PRISM_BOTTOM && m.target == PRISM_TOP));
    for k in 0..6u16 {
        let first = maps.iter().find(|m| m.target == PatchId(2 + k)).unwrap();
        assert_eq!(first.source, PatchId(2 + (k + 3) % 6));
    }
    let sphere = single("Sphere", json!({"radius": {"value": 0.2}}));
    let m = symmetry_maps(&sphere.instances[0].shape);
    assert_eq!(m.len(), 1);
    assert_eq!(m[0].apply([0.75, 0.3]), [0.25, 0.3]);
}

#[test]
fn pseudo_cloud_is_seeded_and_near_surface() {
    let s = single("Cuboid", json!({"size_x": {"value": 1.0}, "size_y": {"value": 0.5}, "size_z": {"value": 0.3}}));
    let a = pseudo_real_cloud(&s, 500, 9, BumpParams::default()).unwrap();
    let b = pseudo_real_cloud(&s, 500, 9, BumpParams::default()).unwrap();
    let c = pseudo_real_cloud(&s, 500, 10, BumpParams::default()).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    let diag = (1.0f64 + 0.25 + 0.09).sqrt();
    let bound = diag * BumpParams::default().amplitude * (1.0 + 3f64.sqrt() * BumpParams::default().jitter) + 1e-12;
    let base = sample_surface(&s.instances, 500, &|_, _| true, 9).unwrap();
    for (p, q) in a.iter().zip(&base) {
        assert!((p - q.position).norm() <= bound);
    }
}
