//! Pairwise primitive overlap tests.

use crate::math::Vec3;
use crate::primitive::{PrimitiveInstance, Shape};

/// Penetration below this depth counts as contact.
pub const CONTACT_TOL: f64 = 1e-6;

fn world_axes() -> Vec<Vec3> {
    let mut out = Vec::with_capacity(13);
    for x in -1i32..=1 {
        for y in -1i32..=1 {
            for z in -1i32..=1 {
                // one representative per antipodal pair
                let v = Vec3::new(x as f64, y as f64, z as f64);
                let first_nonzero = [x, y, z].into_iter().find(|c| *c != 0);
                if first_nonzero == Some(1) {
                    out.push(v.normalize());
                }
            }
        }
    }
    out
}

fn local_axes(i: &PrimitiveInstance) -> [Vec3; 3] {
    [i.pose.rotation * Vec3::x(), i.pose.rotation * Vec3::y(), i.pose.rotation * Vec3::z()]
}

/// Whether the closed solids overlap deeper than the contact tolerance.
///
/// Sphere pairs, sphere-torus pairs and parallel cylinders are tested
/// exactly; everything else uses separating axes over convex hulls, which
/// can only over-report.
pub fn overlaps(a: &PrimitiveInstance, b: &PrimitiveInstance, extra_axes: &[Vec3]) -> bool {
    let ca = a.pose.translation.vector;
    let cb = b.pose.translation.vector;
    match (&a.shape, &b.shape) {
        (Shape::Sphere { radius: ra }, Shape::Sphere { radius: rb }) => {
            return (ca - cb).norm() < ra + rb - CONTACT_TOL;
        }
        (Shape::Sphere { radius }, Shape::Torus { major, minor }) => {
            return sphere_torus(&ca, *radius, b, *major, *minor);
        }
        (Shape::Torus { major, minor }, Shape::Sphere { radius }) => {
            return sphere_torus(&cb, *radius, a, *major, *minor);
        }
        (Shape::Cylinder { radius: ra, height: ha }, Shape::Cylinder { radius: rb, height: hb }) => {
            let za = a.pose.rotation * Vec3::z();
            let zb = b.pose.rotation * Vec3::z();
            if za.cross(&zb).norm() < 1e-12 {
                let d = cb - ca;
                let axial = d.dot(&za);
                let radial = (d - axial * za).norm();
                let overlap_len = (ha + hb) / 2.0 - axial.abs();
                return radial < ra + rb - CONTACT_TOL && overlap_len > CONTACT_TOL;
            }
        }
        _ => {}
    }
    let mut axes = world_axes();
    let la = local_axes(a);
    let lb = local_axes(b);
    axes.extend_from_slice(&la);
    axes.extend_from_slice(&lb);
    for x in &la {
        for y in &lb {
            let c = x.cross(y);
            if c.norm() > 1e-9 {
                axes.push(c.normalize());
            }
        }
    }
    let d = cb - ca;
    if d.norm() > 1e-12 {
        axes.push(d.normalize());
    }
    axes.extend(extra_axes.iter().filter(|v| v.norm() > 1e-12).map(|v| v.normalize()));
    !axes.iter().any(|n| {
        let (a_hi, a_lo) = (a.world_support(n), -a.world_support(&-n));
        let (b_hi, b_lo) = (b.world_support(n), -b.world_support(&-n));
        a_hi < b_lo + CONTACT_TOL || b_hi < a_lo + CONTACT_TOL
    })
}

fn sphere_torus(center: &Vec3, radius: f64, torus: &PrimitiveInstance, major: f64, minor: f64) -> bool {
    let q = torus.pose.inverse_transform_vector(&(center - torus.pose.translation.vector));
    let ring = (q.x.hypot(q.y) - major).hypot(q.z);
    ring < minor + radius - CONTACT_TOL
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{axis_angle, Pose};
    use crate::primitive::{ParamMap, PrimitiveId, PrimitiveTemplateId as T};
    use nalgebra::Translation3;

    fn inst(t: T, p: &[(&str, f64)], at: [f64; 3]) -> PrimitiveInstance {
        let params: ParamMap = p.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        let pose = Pose::from_parts(Translation3::new(at[0], at[1], at[2]), axis_angle(Vec3::z(), 0.0));
        PrimitiveInstance::new(PrimitiveId(0), t, params, pose, String::new()).unwrap()
    }

    fn cube(at: [f64; 3]) -> PrimitiveInstance {
        inst(T::Cuboid, &[("size_x", 1.0), ("size_y", 1.0), ("size_z", 1.0)], at)
    }

    #[test]
    fn world_axis_set() {
        assert_eq!(world_axes().len(), 13);
    }

    #[test]
    fn touching_is_not_overlap() {
        assert!(!overlaps(&cube([0.0; 3]), &cube([1.0, 0.0, 0.0]), &[]));
        assert!(overlaps(&cube([0.0; 3]), &cube([0.9, 0.0, 0.0]), &[]));
        assert!(!overlaps(&cube([0.0; 3]), &cube([1.0, 1.0, 0.0]), &[]));
    }

    #[test]
    fn sphere_in_torus_hole() {
        let t = inst(T::Torus, &[("major_radius", 1.0), ("minor_radius", 0.2)], [0.0; 3]);
        let s = inst(T::Sphere, &[("radius", 0.7)], [0.0; 3]);
        assert!(!overlaps(&s, &t, &[]));
        let s = inst(T::Sphere, &[("radius", 0.85)], [0.0; 3]);
        assert!(overlaps(&t, &s, &[]));
    }

    #[test]
    fn parallel_cylinders() {
        let a = inst(T::Cylinder, &[("radius", 0.5), ("height", 1.0)], [0.0; 3]);
        let b = inst(T::Cylinder, &[("radius", 0.5), ("height", 1.0)], [0.8, 0.8, 0.0]);
        // hulls' bounding boxes overlap but the discs do not
        assert!(!overlaps(&a, &b, &[]));
        let b = inst(T::Cylinder, &[("radius", 0.5), ("height", 1.0)], [0.6, 0.6, 0.0]);
        assert!(overlaps(&a, &b, &[]));
    }
}
