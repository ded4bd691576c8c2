use artipg::exemplars::{exemplar, CATEGORIES};
use artipg::math::Vec3;
use artipg::program::*;
use artipg::rules::*;
use proptest::prelude::*;
use serde_json::json;

fn only(apa: bool, dpa: bool, cpa: f64, seed: u64) -> ManipulationConfig {
    ManipulationConfig { seed, cpa_scale: cpa, dpa_enabled: dpa, apa_enabled: apa, ..Default::default() }
}

#[test]
fn disabled_rules_are_identity() {
    for c in CATEGORIES {
        let p = exemplar(c).unwrap();
        let (q, t) = manipulate(&p, &ManipulationConfig::disabled(7)).unwrap();
        assert_eq!(q, p);
        assert!(t.alterations.is_empty());
    }
}

#[test]
fn single_template_roles_without_drops_are_identity() {
    let p = exemplar("washing_machine").unwrap();
    let cfg = ManipulationConfig { apa_drop_prob: 0.0, ..only(true, false, 0.0, 3) };
    for seed in 0..20 {
        let (q, _) = manipulate(&p, &ManipulationConfig { seed, ..cfg.clone() }).unwrap();
        assert_eq!(q, p);
    }
}

#[test]
fn manipulation_is_deterministic() {
    for c in CATEGORIES {
        let p = exemplar(c).unwrap();
        let cfg = ManipulationConfig { seed: 99, ..Default::default() };
        let (a, ta) = manipulate(&p, &cfg).unwrap();
        let (b, tb) = manipulate(&p, &cfg).unwrap();
        assert_eq!(serialize_program(&a), serialize_program(&b));
        assert_eq!(ta, tb);
    }
}

fn derived(p: &StructureProgram) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for d in &p.declarations {
        for (k, v) in d.params() {
            if let Param::Derived(e) = v {
                out.push((format!("{}.{k}", d.name), e.clone()));
            }
        }
    }
    out
}

#[test]
fn continuous_changes_stay_in_bounds_and_spare_derived_values() {
    for c in CATEGORIES {
        let p = exemplar(c).unwrap();
        let bounds: std::collections::BTreeMap<_, _> =
            free_params(&p).into_iter().map(|(t, _, lo, hi)| (t, (lo, hi))).collect();
        for seed in 0..300 {
            let (q, t) = manipulate(&p, &only(false, false, 0.2, seed)).unwrap();
            assert_eq!(derived(&p), derived(&q));
            for a in &t.alterations {
                let Alteration::Continuous { target, new, .. } = a else { panic!("{a:?}") };
                let (lo, hi) = bounds[target];
                assert!(lo <= *new && *new <= hi, "{c} {target}");
            }
            for (_, v, lo, hi) in free_params(&q) {
                assert!(lo <= v && v <= hi);
            }
        }
    }
}

#[test]
fn washing_machine_contacts_survive_resizing() {
    let p = exemplar("washing_machine").unwrap();
    for seed in 0..50 {
        let (q, t) = manipulate(&p, &only(false, false, 0.2, seed)).unwrap();
        assert!(!t.alterations.is_empty());
        let s = elaborate(&q, None).unwrap();
        for (_, r) in s.residuals() {
            assert!(r <= 1e-6);
        }
    }
}

#[test]
fn globe_leg_count_follows_discrete_change() {
    let p = exemplar("globe").unwrap();
    let mut seen = std::collections::BTreeSet::new();
    for seed in 0..60 {
        let (q, t) = manipulate(&p, &only(false, true, 0.0, seed)).unwrap();
        let legs = q.declarations.iter().find(|d| d.name == "base").unwrap().discrete()["legs"].value;
        seen.insert(legs);
        if let Some(Alteration::Discrete { old, new, replicates, .. }) =
            t.alterations.iter().find(|a| matches!(a, Alteration::Discrete { param, .. } if param == "legs"))
        {
            assert_eq!((*old, *new), (3, legs));
            assert_eq!(replicates.as_deref(), Some("leg"));
        }
        let s = elaborate(&q, None).unwrap();
        let mut reps: Vec<u32> = s
            .provenance
            .iter()
            .filter(|p| p.decl == "base" && p.part.as_deref() == Some("leg"))
            .map(|p| p.repetition.unwrap())
            .collect();
        reps.sort();
        assert_eq!(reps, (0..legs as u32).collect::<Vec<_>>());
    }
    assert_eq!(seen, (3..=6).collect());
}

#[test]
fn usb_arc_sides_stay_in_template_range() {
    let p = exemplar("usb").unwrap();
    for seed in 0..1000 {
        let (q, _) = manipulate(&p, &only(true, true, 0.0, seed)).unwrap();
        let body = q.declarations.iter().find(|d| d.name == "body").unwrap();
        if let Some(v) = body.discrete().get("arc_sides") {
            assert!((0..=4).contains(&v.value));
        }
    }
}

/// Extents of a declaration's instances measured along the axes of another
/// instance's frame.
fn extents_in(s: &Structure, decl: &str, frame: usize) -> Vec3 {
    let r = s.instances[frame].pose.rotation;
    let mut out = Vec3::zeros();
    for a in 0..3 {
        let mut e = Vec3::zeros();
        e[a] = 1.0;
        let d = r * e;
        let ids = s.instances_of(decl);
        let hi = ids.iter().map(|&i| s.instances[i].world_support(&d)).fold(f64::MIN, f64::max);
        let lo = ids.iter().map(|&i| -s.instances[i].world_support(&-d)).fold(f64::MAX, f64::min);
        out[a] = hi - lo;
    }
    out
}

#[test]
fn swapped_cap_inherits_dimensions() {
    let p = exemplar("usb").unwrap();
    let before = elaborate(&p, None).unwrap();
    let connector = before.instances_of("connector")[0];
    let old = extents_in(&before, "cap", connector);
    let mut swapped = 0;
    for seed in 0..40 {
        let cfg = ManipulationConfig { apa_drop_prob: 0.0, ..only(true, false, 0.0, seed) };
        let (q, t) = manipulate(&p, &cfg).unwrap();
        if !t.alterations.contains(&Alteration::Swap { decl: "cap".into(), old: "RotatedCap".into(), new: "DetachedCap".into() }) {
            continue;
        }
        swapped += 1;
        let after = elaborate(&q, None).unwrap();
        let new = extents_in(&after, "cap", after.instances_of("connector")[0]);
        assert!((new - old).norm() < 1e-6, "{old} vs {new}");
    }
    assert!(swapped > 5);
}

#[test]
fn globe_base_becomes_ring_base() {
    let p = exemplar("globe").unwrap();
    let to_ring = Alteration::Swap { decl: "base".into(), old: "LeggedBase".into(), new: "RingBase".into() };
    let hit = (0..40).find_map(|seed| {
        let (q, t) = manipulate(&p, &only(true, false, 0.0, seed)).unwrap();
        t.alterations.contains(&to_ring).then_some(q)
    });
    let q = hit.expect("a seed swapping the base");
    assert!(validate_program(&q).is_empty());
    assert!(q.declarations[0].discrete().get("legs").is_none());
}

#[test]
fn cap_can_be_dropped() {
    let p = exemplar("usb").unwrap();
    let cfg = ManipulationConfig { apa_drop_prob: 1.0, ..only(true, false, 0.0, 1) };
    let (q, t) = manipulate(&p, &cfg).unwrap();
    assert!(t.alterations.contains(&Alteration::Drop { decl: "cap".into() }));
    assert!(q.declarations.iter().all(|d| d.name != "cap"));
    assert!(q.label_regions.iter().all(|r| r.target != "cap"));
    assert!(q.declarations.iter().any(|d| d.name == "body"));
    assert!(validate_program(&q).is_empty());
}

fn crowded() -> StructureProgram {
    let cyl = |n: &str, r: serde_json::Value| json!({"name": n, "label": n, "elementary": {"template": "Cylinder",
        "params": {"radius": r, "height": {"value": 0.2}}}});
    let on_top = |c: &str, u: f64| json!({"parent": "plate", "child": c, "relation": {"kind": "attach",
        "parent_face": "pz", "child_face": "bottom_cap", "offset": [{"value": u}, {"value": 0.0}]}});
    let doc = json!({"version": "artipg-sp/1", "category": "test", "root": "plate",
        "declarations": [
            {"name": "plate", "label": "plate", "elementary": {"template": "Cuboid", "params": {
                "size_x": {"value": 2.0}, "size_y": {"value": 1.0}, "size_z": {"value": 0.1}}}},
            cyl("a", json!({"value": 0.1, "lo": 0.05, "hi": 0.6})),
            cyl("b", json!({"value": 0.1}))],
        "connectivity": [on_top("a", -0.3), on_top("b", 0.3)]});
    parse_program(&doc.to_string()).unwrap()
}

#[test]
fn oversized_radius_is_bisected_back() {
    let p = crowded();
    assert!(validate_program(&p).is_empty());
    let mut repaired = 0;
    for seed in 0..200 {
        let (q, t) = manipulate(&p, &only(false, false, 1.0, seed)).unwrap();
        assert!(validate_program(&q).is_empty());
        let Param::Free { value, .. } = q.declarations[1].params()["radius"] else { panic!() };
        let halved: Vec<_> = t.repairs.iter().filter_map(|r| match r {
            RepairEvent::Halved { from, to, .. } => Some((*from, *to)),
            _ => None,
        }).collect();
        for (from, to) in &halved {
            assert!((to - 0.1).abs() < (from - 0.1).abs());
        }
        if let Some((first, _)) = halved.first() {
            repaired += 1;
            assert!(*first > 0.5);
            assert!(0.1 < value && value < *first && value <= 0.5);
        }
        assert_eq!(replay(&p, &t).unwrap(), q);
    }
    assert!(repaired > 10, "{repaired}");
}

#[test]
fn bad_inputs_are_rejected() {
    let p = exemplar("usb").unwrap();
    let cfg = ManipulationConfig { cpa_scale: 1.5, ..Default::default() };
    assert!(matches!(manipulate(&p, &cfg), Err(RuleError::InvalidConfig(_))));
    let mut bad = crowded();
    bad.connectivity[1] = bad.connectivity[0].clone();
    bad.connectivity[1].child = "b".into();
    assert!(matches!(manipulate(&bad, &ManipulationConfig::default()), Err(RuleError::InvalidInput(_))));
}

#[test]
fn config_parses_with_defaults() {
    let c: ManipulationConfig = serde_json::from_str(r#"{"seed": 5, "cpa_scale": 0.1}"#).unwrap();
    assert_eq!(c, ManipulationConfig { seed: 5, cpa_scale: 0.1, ..Default::default() });
    assert!(serde_json::from_str::<ManipulationConfig>(r#"{"sed": 5}"#).is_err());
}

#[test]
fn seeded_sweep_stays_valid() {
    for c in CATEGORIES {
        let p = exemplar(c).unwrap();
        for seed in 0..200 {
            let (q, t) = manipulate(&p, &ManipulationConfig { seed, ..Default::default() }).unwrap();
            assert!(validate_program(&q).is_empty(), "{c} {seed}");
            let s = elaborate(&q, None).unwrap();
            assert!(s.residuals().iter().all(|(_, r)| *r <= 1e-6));
            assert_eq!(replay(&p, &t).unwrap(), q);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn trace_replays_exactly(seed in any::<u64>(), k in 0usize..3, scale in 0.0f64..1.0) {
        let p = exemplar(CATEGORIES[k]).unwrap();
        let (q, t) = manipulate(&p, &ManipulationConfig { seed, cpa_scale: scale, ..Default::default() }).unwrap();
        prop_assert_eq!(&replay(&p, &t).unwrap(), &q);
        let text = serde_json::to_string(&t).unwrap();
        let back: AlterationTrace = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(replay(&p, &back).unwrap(), q);
    }
}
