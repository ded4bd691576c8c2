//! Per-sample geometric details: the closest-point deformation from
//! structure samples to a target cloud, its encoding in surface frames, and
//! completion onto patches that were never observed.

pub mod complete;
pub mod kdtree;
pub mod pseudo;

pub use complete::{complete_invisible, complete_partial};
pub use kdtree::KdTree;

use crate::math::{Pt3, Vec3};
use crate::primitive::{PatchId, PrimitiveInstance, SurfaceFrame, SurfaceSample};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetailError {
    #[error("empty input")]
    EmptyInput,
    #[error("degenerate surface frame at binding {0}")]
    DegenerateFrame(usize),
    #[error("binding {0} references a missing primitive or patch")]
    BadBinding(usize),
    #[error("field is in the {0:?} frame")]
    WrongFrame(Frame),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    World,
    SurfaceRelative,
}

/// Analytic location of a field entry: instance index, patch and parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Binding {
    pub instance: usize,
    pub patch: PatchId,
    pub uv: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetailField {
    pub bindings: Vec<Binding>,
    pub vectors: Vec<Vec3>,
    pub frame: Frame,
    pub source: String,
    /// Patches that received no detail during completion.
    pub unsourced: Vec<(usize, PatchId)>,
}

impl DetailField {
    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    /// Mean displacement length, the minimized cost.
    pub fn mean_cost(&self) -> f64 {
        if self.vectors.is_empty() {
            return 0.0;
        }
        self.vectors.iter().map(|v| v.norm()).sum::<f64>() / self.vectors.len() as f64
    }
}

/// Closest-point displacement of every sample onto `target`.
///
/// `samples[i].primitive` must equal the index of its instance in the
/// structure the field will be used with.
pub fn compute_deformation(samples: &[SurfaceSample], target: &[Pt3], source: &str) -> Result<DetailField, DetailError> {
    if samples.is_empty() || target.is_empty() {
        return Err(DetailError::EmptyInput);
    }
    let tree = KdTree::new(target.to_vec());
    let mut bindings = Vec::with_capacity(samples.len());
    let mut vectors = Vec::with_capacity(samples.len());
    for s in samples {
        let (j, _) = tree.nearest(&s.position).expect("non-empty target");
        bindings.push(Binding {
            instance: s.primitive.0 as usize,
            patch: s.patch,
            uv: s.uv,
        });
        vectors.push(target[j] - s.position);
    }
    Ok(DetailField {
        bindings,
        vectors,
        frame: Frame::World,
        source: source.to_string(),
        unsourced: Vec::new(),
    })
}

fn frame_at(instances: &[PrimitiveInstance], b: &Binding, i: usize) -> Result<SurfaceFrame, DetailError> {
    let inst = instances.get(b.instance).ok_or(DetailError::BadBinding(i))?;
    let f = inst
        .surface_frame(b.patch, b.uv[0], b.uv[1])
        .map_err(|_| DetailError::BadBinding(i))?;
    let ok = [f.normal, f.tangent, f.bitangent]
        .iter()
        .all(|v| v.iter().all(|c| c.is_finite()) && (v.norm() - 1.0).abs() < 1e-9);
    if ok {
        Ok(f)
    } else {
        Err(DetailError::DegenerateFrame(i))
    }
}

/// Re-expresses world vectors in each binding's (normal, tangent, bitangent)
/// frame.
pub fn encode_relative(field: &DetailField, instances: &[PrimitiveInstance]) -> Result<DetailField, DetailError> {
    if field.frame != Frame::World {
        return Err(DetailError::WrongFrame(field.frame));
    }
    let mut out = field.clone();
    for (i, (b, v)) in field.bindings.iter().zip(&field.vectors).enumerate() {
        out.vectors[i] = frame_at(instances, b, i)?.to_local(v);
    }
    out.frame = Frame::SurfaceRelative;
    Ok(out)
}

/// Inverse of [`encode_relative`] against the (possibly moved) instances.
pub fn decode_relative(field: &DetailField, instances: &[PrimitiveInstance]) -> Result<DetailField, DetailError> {
    if field.frame != Frame::SurfaceRelative {
        return Err(DetailError::WrongFrame(field.frame));
    }
    let mut out = field.clone();
    for (i, (b, v)) in field.bindings.iter().zip(&field.vectors).enumerate() {
        out.vectors[i] = frame_at(instances, b, i)?.to_world(v);
    }
    out.frame = Frame::World;
    Ok(out)
}

/// World positions of the bindings on `instances`.
pub fn bound_positions(field: &DetailField, instances: &[PrimitiveInstance]) -> Result<Vec<Pt3>, DetailError> {
    field
        .bindings
        .iter()
        .enumerate()
        .map(|(i, b)| {
            instances
                .get(b.instance)
                .and_then(|inst| inst.surface_point(b.patch, b.uv[0], b.uv[1]).ok())
                .ok_or(DetailError::BadBinding(i))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::RigidTransform;
    use crate::primitive::{instantiate_primitive, ParamMap, PrimitiveId, PrimitiveTemplateId};

    fn sample_at(p: Pt3) -> SurfaceSample {
        SurfaceSample {
            primitive: PrimitiveId(0),
            patch: PatchId(0),
            uv: [0.5, 0.5],
            position: p,
            normal: Vec3::z(),
            visible: true,
        }
    }

    #[test]
    fn single_pair() {
        let f = compute_deformation(&[sample_at(Pt3::origin())], &[Pt3::new(1.0, 0.0, 0.0)], "y").unwrap();
        assert_eq!(f.vectors, vec![Vec3::new(1.0, 0.0, 0.0)]);
        assert_eq!(compute_deformation(&[], &[Pt3::origin()], "y").unwrap_err(), DetailError::EmptyInput);
    }

    #[test]
    fn cuboid_top_normal_offset_decodes_to_z() {
        let params: ParamMap = [("size_x", 1.0), ("size_y", 1.0), ("size_z", 1.0)]
            .iter()
            .map(|(k, v)| (k.to_string(), *v))
            .collect();
        let c = instantiate_primitive(PrimitiveTemplateId::Cuboid, &params, &RigidTransform::default()).unwrap();
        let field = DetailField {
            bindings: vec![Binding { instance: 0, patch: PatchId(4), uv: [0.3, 0.6] }],
            vectors: vec![Vec3::new(0.01, 0.0, 0.0)],
            frame: Frame::SurfaceRelative,
            source: String::new(),
            unsourced: Vec::new(),
        };
        let w = decode_relative(&field, &[c]).unwrap();
        assert!((w.vectors[0] - Vec3::new(0.0, 0.0, 0.01)).norm() < 1e-15);
    }
}
