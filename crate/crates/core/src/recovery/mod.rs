//! Transfer of relative details from an original structure onto a
//! manipulated one.

pub mod projection;

pub use projection::project_cross_template;

use crate::detail::{Binding, DetailField, Frame, KdTree};
use crate::math::Pt3;
use crate::primitive::{PatchId, SurfaceSample};
use crate::program::Structure;
use crate::rules::{Alteration, AlterationTrace};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RecoveryError {
    #[error("trace does not match the structures: {0}")]
    TraceMismatch(String),
    #[error("no detail for instance {0} patch {1}")]
    IncompleteField(usize, u16),
    #[error("detail field must be surface-relative")]
    WrongFrame,
    #[error("sample binding {0} cannot be resolved")]
    BadSample(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapKind {
    /// Same primitive, parameters may differ; (patch, uv) kept.
    Parametric,
    /// A new repetition reading from the repetition it copies.
    Replicated,
    /// Different primitive template; uv transferred through bands.
    Projected,
    NoSource,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MappedSample {
    pub target: Binding,
    pub source: Option<Binding>,
    pub kind: MapKind,
    /// Band projection fell back to the nearest band.
    pub approximate: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampleMapping {
    pub entries: Vec<MappedSample>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MappingStats {
    pub parametric: usize,
    pub replicated: usize,
    pub projected: usize,
    pub no_source: usize,
    /// Samples whose detail came from a completed (originally hidden) patch.
    pub symmetry_completed: usize,
    /// Samples mapped onto a patch that carries no detail; they keep the bare
    /// surface point.
    pub unsourced: usize,
}

impl MappingStats {
    pub fn total(&self) -> usize {
        self.parametric + self.replicated + self.projected + self.no_source
    }

    pub fn no_source_fraction(&self) -> f64 {
        if self.total() == 0 {
            0.0
        } else {
            self.no_source as f64 / self.total() as f64
        }
    }
}

impl SampleMapping {
    pub fn stats(&self) -> MappingStats {
        let mut s = MappingStats::default();
        for e in &self.entries {
            match e.kind {
                MapKind::Parametric => s.parametric += 1,
                MapKind::Replicated => s.replicated += 1,
                MapKind::Projected => s.projected += 1,
                MapKind::NoSource => s.no_source += 1,
            }
        }
        s
    }
}

/// Original instance and kind for every manipulated instance.
pub fn pair_instances(
    original: &Structure,
    manipulated: &Structure,
    trace: &AlterationTrace,
) -> Result<Vec<Option<(usize, MapKind)>>, RecoveryError> {
    let mut swapped = BTreeMap::new();
    let mut copies: BTreeMap<(&str, &str), i64> = BTreeMap::new();
    for a in &trace.alterations {
        match a {
            Alteration::Swap { decl, new, .. } => {
                if original.instances_of(decl).is_empty() {
                    return Err(RecoveryError::TraceMismatch(format!("`{decl}` is not in the original")));
                }
                swapped.insert(decl.as_str(), new.as_str());
            }
            Alteration::Drop { decl } => {
                if !manipulated.instances_of(decl).is_empty() {
                    return Err(RecoveryError::TraceMismatch(format!("dropped `{decl}` is still present")));
                }
            }
            Alteration::Discrete { decl, old, replicates: Some(part), .. } => {
                copies.entry((decl.as_str(), part.as_str())).or_insert(*old);
            }
            _ => {}
        }
    }
    let mut out = Vec::with_capacity(manipulated.instances.len());
    for (j, pj) in manipulated.provenance.iter().enumerate() {
        if let Some(&t) = swapped.get(pj.decl.as_str()) {
            if pj.template.as_deref() != Some(t) {
                return Err(RecoveryError::TraceMismatch(format!("`{}` is not a `{t}`", pj.decl)));
            }
            // parts with the same role, the same-named part first
            let mut same_role: Vec<usize> = original
                .instances_of(&pj.decl)
                .into_iter()
                .filter(|&i| original.provenance[i].part_role == pj.part_role)
                .collect();
            same_role.sort_by_key(|&i| original.provenance[i].part != pj.part);
            let pick = same_role
                .iter()
                .copied()
                .find(|&i| original.provenance[i].part == pj.part && original.provenance[i].repetition == pj.repetition)
                .or_else(|| {
                    let r = pj.repetition.unwrap_or(0) as usize;
                    (!same_role.is_empty()).then(|| same_role[r % same_role.len()])
                });
            out.push(pick.map(|i| (i, kind_for(original, manipulated, i, j, MapKind::Parametric))));
            continue;
        }
        let exact = (0..original.instances.len()).find(|&i| {
            let pi = &original.provenance[i];
            pi.decl == pj.decl && pi.part == pj.part && pi.repetition == pj.repetition
        });
        if let Some(i) = exact {
            out.push(Some((i, kind_for(original, manipulated, i, j, MapKind::Parametric))));
            continue;
        }
        let replica = match (&pj.part, pj.repetition) {
            (Some(part), Some(r)) => copies.get(&(pj.decl.as_str(), part.as_str())).and_then(|&old| {
                let src = r % old.max(1) as u32;
                (0..original.instances.len()).find(|&i| {
                    let pi = &original.provenance[i];
                    pi.decl == pj.decl && pi.part.as_deref() == Some(part) && pi.repetition == Some(src)
                })
            }),
            _ => None,
        };
        out.push(replica.map(|i| (i, kind_for(original, manipulated, i, j, MapKind::Replicated))));
    }
    Ok(out)
}

fn kind_for(original: &Structure, manipulated: &Structure, i: usize, j: usize, same: MapKind) -> MapKind {
    let (a, b) = (&original.instances[i].shape, &manipulated.instances[j].shape);
    if a.template() == b.template() && a.patch_count() == b.patch_count() {
        same
    } else {
        MapKind::Projected
    }
}

/// Source binding in `original` for every sample of `manipulated`.
pub fn build_mapping(
    original: &Structure,
    manipulated: &Structure,
    trace: &AlterationTrace,
    samples: &[SurfaceSample],
) -> Result<SampleMapping, RecoveryError> {
    let pairs = pair_instances(original, manipulated, trace)?;
    let mut entries = Vec::with_capacity(samples.len());
    for (k, s) in samples.iter().enumerate() {
        let j = s.primitive.0 as usize;
        let target = Binding { instance: j, patch: s.patch, uv: s.uv };
        let pair = pairs.get(j).ok_or(RecoveryError::BadSample(k))?;
        let entry = match *pair {
            None => MappedSample { target, source: None, kind: MapKind::NoSource, approximate: false },
            Some((i, MapKind::Projected)) => {
                let (patch, uv, exact) = project_cross_template(
                    &original.instances[i].shape,
                    &manipulated.instances[j].shape,
                    s.patch,
                    s.uv,
                );
                MappedSample {
                    target,
                    source: Some(Binding { instance: i, patch, uv }),
                    kind: MapKind::Projected,
                    approximate: !exact,
                }
            }
            Some((i, kind)) => MappedSample {
                target,
                source: Some(Binding { instance: i, patch: s.patch, uv: s.uv }),
                kind,
                approximate: false,
            },
        };
        entries.push(entry);
    }
    Ok(SampleMapping { entries })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetailScaling {
    /// Vectors keep their length when primitives resize.
    #[default]
    Absolute,
    /// Vectors scale with the ratio of instance diagonals.
    Proportional,
}

fn diagonal(s: &Structure, i: usize) -> f64 {
    let (lo, hi) = s.instances[i].shape.local_bounds();
    (hi - lo).norm()
}

/// Detailed world points of the manipulated structure, one per mapped
/// sample, and the mapping statistics.
pub fn migrate_details(
    relative: &DetailField,
    mapping: &SampleMapping,
    original: &Structure,
    manipulated: &Structure,
    scaling: DetailScaling,
) -> Result<(Vec<Pt3>, MappingStats), RecoveryError> {
    if relative.frame != Frame::SurfaceRelative {
        return Err(RecoveryError::WrongFrame);
    }
    let mut groups: BTreeMap<(usize, PatchId), Vec<usize>> = BTreeMap::new();
    for (k, b) in relative.bindings.iter().enumerate() {
        groups.entry((b.instance, b.patch)).or_default().push(k);
    }
    let mut trees: BTreeMap<(usize, PatchId), KdTree> = BTreeMap::new();
    let mut stats = mapping.stats();
    let mut out = Vec::with_capacity(mapping.entries.len());
    for (k, e) in mapping.entries.iter().enumerate() {
        let t = &e.target;
        let inst = manipulated.instances.get(t.instance).ok_or(RecoveryError::BadSample(k))?;
        let x = inst.surface_point(t.patch, t.uv[0], t.uv[1]).map_err(|_| RecoveryError::BadSample(k))?;
        let Some(src) = e.source else {
            out.push(x);
            continue;
        };
        let key = (src.instance, src.patch);
        let Some(members) = groups.get(&key) else {
            if relative.unsourced.contains(&key) {
                stats.unsourced += 1;
                out.push(x);
                continue;
            }
            return Err(RecoveryError::IncompleteField(src.instance, src.patch.0));
        };
        let shape = &original.instances[src.instance].shape;
        let tree = trees.entry(key).or_insert_with(|| {
            KdTree::new(
                members
                    .iter()
                    .map(|&m| {
                        let b = &relative.bindings[m];
                        shape.local_point_unchecked(b.patch, b.uv[0], b.uv[1])
                    })
                    .collect(),
            )
        });
        let q = shape.local_point_unchecked(src.patch, src.uv[0], src.uv[1]);
        let (m, _) = tree.nearest(&q).expect("non-empty group");
        if !original.is_visible(src.instance, src.patch) {
            stats.symmetry_completed += 1;
        }
        let mut v = relative.vectors[members[m]];
        if scaling == DetailScaling::Proportional {
            v *= diagonal(manipulated, t.instance) / diagonal(original, src.instance);
        }
        let frame = inst.surface_frame(t.patch, t.uv[0], t.uv[1]).map_err(|_| RecoveryError::BadSample(k))?;
        out.push(x + frame.to_world(&v));
    }
    Ok((out, stats))
}
