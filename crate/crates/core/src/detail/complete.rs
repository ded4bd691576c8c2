//! Detail completion through primitive symmetries.

use super::{Binding, DetailError, DetailField, Frame};
use crate::primitive::{PatchId, Shape, PRISM_BOTTOM, PRISM_TOP};
use crate::program::Structure;
use std::collections::BTreeMap;

/// Maps patch `source` at `(u, v)` to patch `target` at `(u + shift_u, v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryMap {
    pub source: PatchId,
    pub target: PatchId,
    pub shift_u: f64,
}

impl SymmetryMap {
    pub fn apply(&self, uv: [f64; 2]) -> [f64; 2] {
        [(uv[0] + self.shift_u).rem_euclid(1.0), uv[1]]
    }
}

fn map(source: u16, target: u16, shift_u: f64) -> SymmetryMap {
    SymmetryMap {
        source: PatchId(source),
        target: PatchId(target),
        shift_u,
    }
}

/// Symmetry maps of a shape, in order of preference per target.
///
/// Opposite cuboid faces and the two caps share (u, v) axes, so reflection
/// keeps the parameters. Round surfaces map onto themselves by a half turn;
/// prism sides map onto congruent sides, the opposite one first.
pub fn symmetry_maps(shape: &Shape) -> Vec<SymmetryMap> {
    match shape {
        Shape::Cuboid { .. } => (0..6).map(|f| map(f ^ 1, f, 0.0)).collect(),
        Shape::Cylinder { .. } => vec![map(2, 1, 0.0), map(1, 2, 0.0), map(0, 0, 0.5)],
        Shape::Sphere { .. } | Shape::Torus { .. } => vec![map(0, 0, 0.5)],
        Shape::Prism(p) => {
            let mut out = vec![map(PRISM_BOTTOM.0, PRISM_TOP.0, 0.0), map(PRISM_TOP.0, PRISM_BOTTOM.0, 0.0)];
            let n = p.side_count;
            for k in 0..n {
                let mut candidates: Vec<usize> = (0..n)
                    .filter(|&j| j != k)
                    .filter(|&j| {
                        let (a, b) = (&p.sides[k], &p.sides[j]);
                        a.is_arc() == b.is_arc() && (a.length() - b.length()).abs() <= 1e-9 * a.length()
                    })
                    .collect();
                // cyclic distance from the opposite side
                candidates.sort_by_key(|&j| {
                    let d = (j + n - k) % n;
                    (d as i64 - (n / 2) as i64).abs()
                });
                for j in candidates {
                    out.push(map(2 + j as u16, 2 + k as u16, 0.0));
                }
            }
            out
        }
    }
}

fn require_relative(field: &DetailField) -> Result<(), DetailError> {
    if field.frame == Frame::SurfaceRelative {
        Ok(())
    } else {
        Err(DetailError::WrongFrame(field.frame))
    }
}

/// Fills invisible patches, and visible patches without samples, by copying
/// entries from their first symmetric counterpart that has samples.
///
/// Existing entries are kept unchanged and first. Patches with no source are
/// listed in `unsourced` and receive no detail.
pub fn complete_invisible(structure: &Structure, field: &DetailField) -> Result<DetailField, DetailError> {
    require_relative(field)?;
    let mut by_patch: BTreeMap<(usize, PatchId), Vec<usize>> = BTreeMap::new();
    for (i, b) in field.bindings.iter().enumerate() {
        by_patch.entry((b.instance, b.patch)).or_default().push(i);
    }
    let mut out = field.clone();
    out.unsourced.clear();
    for (inst, instance) in structure.instances.iter().enumerate() {
        let maps = symmetry_maps(&instance.shape);
        for p in instance.patches() {
            let covered = structure.is_visible(inst, p) && by_patch.contains_key(&(inst, p));
            if covered {
                continue;
            }
            let source = maps.iter().find(|m| {
                m.target == p
                    && m.source != p
                    && structure.is_visible(inst, m.source)
                    && by_patch.contains_key(&(inst, m.source))
            });
            match source {
                Some(m) => {
                    for &i in &by_patch[&(inst, m.source)] {
                        out.bindings.push(Binding {
                            instance: inst,
                            patch: p,
                            uv: m.apply(field.bindings[i].uv),
                        });
                        out.vectors.push(field.vectors[i]);
                    }
                }
                None => out.unsourced.push((inst, p)),
            }
        }
    }
    Ok(out)
}

/// Completion under a point-level visibility predicate: every visible entry
/// whose symmetric image is hidden is copied there, using the first such map.
pub fn complete_partial(
    structure: &Structure,
    field: &DetailField,
    visible: &dyn Fn(usize, PatchId, [f64; 2]) -> bool,
) -> Result<DetailField, DetailError> {
    require_relative(field)?;
    let maps: Vec<Vec<SymmetryMap>> = structure.instances.iter().map(|i| symmetry_maps(&i.shape)).collect();
    let mut out = field.clone();
    for (b, v) in field.bindings.iter().zip(&field.vectors) {
        if !visible(b.instance, b.patch, b.uv) {
            continue;
        }
        let image = maps[b.instance]
            .iter()
            .filter(|m| m.source == b.patch)
            .map(|m| (m.target, m.apply(b.uv)))
            .find(|(t, uv)| !visible(b.instance, *t, *uv));
        if let Some((patch, uv)) = image {
            out.bindings.push(Binding {
                instance: b.instance,
                patch,
                uv,
            });
            out.vectors.push(*v);
        }
    }
    Ok(out)
}
