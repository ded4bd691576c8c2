//! Area-uniform surface sampling with analytic bindings.

use super::{PatchId, PrimitiveError, PrimitiveId, PrimitiveInstance, Shape};
use crate::math::{rng_from_seed, Pt3, Vec3};
use rand::Rng;
use std::f64::consts::{PI, TAU};

/// A point tied to a primitive patch by its surface parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceSample {
    pub primitive: PrimitiveId,
    pub patch: PatchId,
    pub uv: [f64; 2],
    pub position: Pt3,
    pub normal: Vec3,
    pub visible: bool,
}

impl SurfaceSample {
    pub fn bind(
        instance: &PrimitiveInstance,
        patch: PatchId,
        uv: [f64; 2],
        visible: bool,
    ) -> Result<Self, PrimitiveError> {
        Ok(SurfaceSample {
            primitive: instance.id,
            patch,
            uv,
            position: instance.surface_point(patch, uv[0], uv[1])?,
            normal: instance.surface_frame(patch, uv[0], uv[1])?.normal,
            visible,
        })
    }
}

/// Maps two uniform variates to patch parameters so that the result is
/// uniform in area.
pub(crate) fn area_uniform_uv(shape: &Shape, patch: PatchId, w1: f64, w2: f64) -> [f64; 2] {
    match shape {
        Shape::Cuboid { .. } => [w1, w2],
        Shape::Cylinder { .. } => match patch.0 {
            0 => [w1, w2],
            _ => [w1, w2.sqrt()],
        },
        Shape::Sphere { .. } => [w1, (1.0 - 2.0 * w2).clamp(-1.0, 1.0).acos() / PI],
        Shape::Torus { major, minor } => [w1, invert_torus_cdf(*major, *minor, w2)],
        Shape::Prism(p) => match patch.0 {
            0 | 1 => {
                let areas = p.sector_areas();
                let total = p.cap_area();
                let target = w1 * total;
                let mut acc = 0.0;
                let mut k = areas.len() - 1;
                for (i, a) in areas.iter().enumerate() {
                    if target < acc + a {
                        k = i;
                        break;
                    }
                    acc += a;
                }
                let local = ((target - acc) / areas[k]).clamp(0.0, 1.0);
                let t = p.sides[k].invert_sector_cdf(local);
                let u = ((k as f64 + t) / p.side_count as f64).min(1.0);
                [u, w2.sqrt()]
            }
            _ => [w1, w2],
        },
    }
}

/// Tube angle fraction with density ∝ (R + r cos 2πv).
fn invert_torus_cdf(major: f64, minor: f64, w: f64) -> f64 {
    let k = minor / (TAU * major);
    let cdf = |v: f64| v + k * (TAU * v).sin();
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    let mut v = w;
    for _ in 0..60 {
        let f = cdf(v) - w;
        if f.abs() < 1e-15 {
            break;
        }
        if f > 0.0 {
            hi = v;
        } else {
            lo = v;
        }
        let d = 1.0 + k * TAU * (TAU * v).cos();
        let next = v - f / d;
        v = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
    }
    v.clamp(0.0, 1.0)
}

/// Draws `n` area-uniform samples over the visible patches.
///
/// Patches are allocated by a multinomial draw over visible areas; within a
/// patch the first variate is stratified. Output is ordered by (instance,
/// patch) and is a pure function of the arguments.
pub fn sample_surface(
    instances: &[PrimitiveInstance],
    n: usize,
    visible: &dyn Fn(usize, PatchId) -> bool,
    seed: u64,
) -> Result<Vec<SurfaceSample>, PrimitiveError> {
    let mut patches = Vec::new();
    let mut cumulative = Vec::new();
    let mut total = 0.0;
    for (i, inst) in instances.iter().enumerate() {
        for p in inst.patches() {
            let area = inst.shape.patch_area(p);
            if visible(i, p) && area > 0.0 {
                total += area;
                patches.push((i, p));
                cumulative.push(total);
            }
        }
    }
    if patches.is_empty() || n == 0 {
        return Err(PrimitiveError::NoVisibleSurface);
    }
    let mut rng = rng_from_seed(seed);
    let mut counts = vec![0usize; patches.len()];
    for _ in 0..n {
        let w = rng.random::<f64>() * total;
        let slot = cumulative.partition_point(|&c| c <= w).min(patches.len() - 1);
        counts[slot] += 1;
    }
    let mut out = Vec::with_capacity(n);
    for (&(i, patch), &count) in patches.iter().zip(&counts) {
        let inst = &instances[i];
        for k in 0..count {
            let w1 = (k as f64 + rng.random::<f64>()) / count as f64;
            let w2 = rng.random::<f64>();
            let uv = area_uniform_uv(&inst.shape, patch, w1.min(1.0), w2);
            out.push(SurfaceSample {
                primitive: inst.id,
                patch,
                uv,
                position: inst.pose * inst.shape.local_point_unchecked(patch, uv[0], uv[1]),
                normal: inst.pose.rotation
                    * inst.shape.local_frame_unchecked(patch, uv[0], uv[1]).normal,
                visible: true,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::RigidTransform;
    use crate::primitive::{instantiate_primitive, ParamMap, PrimitiveTemplateId};

    #[test]
    fn torus_cdf_inverse() {
        for w in [0.0, 0.2, 0.5, 0.9, 1.0] {
            let v = invert_torus_cdf(1.0, 0.4, w);
            let k = 0.4 / TAU;
            assert!((v + k * (TAU * v).sin() - w).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_empty_visibility() {
        let c = instantiate_primitive(
            PrimitiveTemplateId::Sphere,
            &ParamMap::from([("radius".to_string(), 1.0)]),
            &RigidTransform::default(),
        )
        .unwrap();
        let r = sample_surface(&[c], 10, &|_, _| false, 1);
        assert_eq!(r.unwrap_err(), PrimitiveError::NoVisibleSurface);
    }
}
