//! Labels defined on primitive parameters: semantic parts, affordance
//! regions and part poses, carried to sampled points by their bindings.

pub mod pose;

pub use pose::{part_pose, part_poses, PartPose};

use crate::detail::Binding;
use crate::expr::Expr;
use crate::primitive::{PatchId, PrimitiveTemplateId};
use crate::program::{evaluate, Bound, RegionSpec, Structure, StructureProgram, Values};
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use thiserror::Error;

/// Region bitmasks are stored in 32 bits.
pub const MAX_REGIONS: usize = 32;

/// Per-sample quantities a region constraint may use besides intrinsics.
pub const LOCAL_QUANTITIES: [&str; 8] = ["u", "v", "angle", "height_fraction", "x", "y", "z", "radial"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnnotateError {
    #[error("region `{0}` targets an unknown declaration `{1}`")]
    UnknownTarget(String, String),
    #[error("region `{label}` uses unknown quantity `{name}`")]
    UnresolvableQuantity { label: String, name: String },
    #[error("region `{label}`: {msg}")]
    InvalidExpression { label: String, msg: String },
    #[error("program values: {0}")]
    Program(String),
    #[error("{0} region labels exceed the {MAX_REGIONS}-bit mask")]
    TooManyRegions(usize),
    #[error("label `{0}` is not in the vocabulary")]
    UnknownLabel(String),
    #[error("no part {0}")]
    UnknownPart(usize),
    #[error("point {0} has no valid binding")]
    UnboundPoint(usize),
}

/// Semantic and region label names with their ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    pub semantic: Vec<String>,
    pub regions: Vec<String>,
}

impl Vocabulary {
    /// Labels of a category in declaration order.
    pub fn of(program: &StructureProgram) -> Result<Vocabulary, AnnotateError> {
        let mut semantic: Vec<String> = Vec::new();
        for d in &program.declarations {
            if !semantic.contains(&d.label) {
                semantic.push(d.label.clone());
            }
        }
        let mut regions: Vec<String> = Vec::new();
        for r in &program.label_regions {
            if !regions.contains(&r.label) {
                regions.push(r.label.clone());
            }
        }
        if regions.len() > MAX_REGIONS {
            return Err(AnnotateError::TooManyRegions(regions.len()));
        }
        Ok(Vocabulary { semantic, regions })
    }

    pub fn semantic_id(&self, label: &str) -> Option<u16> {
        self.semantic.iter().position(|l| l == label).map(|i| i as u16)
    }

    pub fn region_bit(&self, label: &str) -> Option<u32> {
        self.regions.iter().position(|l| l == label).map(|i| 1 << i)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Limit {
    Value(f64),
    Expr(Expr),
}

#[derive(Debug, Clone, PartialEq)]
struct Interval {
    quantity: Expr,
    lo: Option<Limit>,
    hi: Option<Limit>,
}

/// A region bound to the parameter values of one program.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub label: String,
    pub target: String,
    pub part_role: Option<String>,
    pub patches: Vec<String>,
    constraints: Vec<Interval>,
    values: Values,
}

fn known_name(name: &str, values: &Values) -> bool {
    if LOCAL_QUANTITIES.contains(&name) {
        return true;
    }
    if let Some((decl, param)) = name.split_once('.') {
        return values.get(decl, param).is_some();
    }
    PrimitiveTemplateId::ALL.iter().any(|t| t.param_names().any(|p| p == name))
}

pub fn compile_region(spec: &RegionSpec, program: &StructureProgram) -> Result<Region, AnnotateError> {
    if !program.declarations.iter().any(|d| d.name == spec.target) {
        return Err(AnnotateError::UnknownTarget(spec.label.clone(), spec.target.clone()));
    }
    let values = evaluate(program).map_err(|e| AnnotateError::Program(e.to_string()))?;
    let parse = |src: &str| -> Result<Expr, AnnotateError> {
        let e = Expr::parse(src).map_err(|e| AnnotateError::InvalidExpression { label: spec.label.clone(), msg: e.to_string() })?;
        if let Some(name) = e.references().into_iter().find(|n| !known_name(n, &values)) {
            return Err(AnnotateError::UnresolvableQuantity { label: spec.label.clone(), name });
        }
        Ok(e)
    };
    let limit = |b: &Option<Bound>| -> Result<Option<Limit>, AnnotateError> {
        Ok(match b {
            None => None,
            Some(Bound::Value(v)) => Some(Limit::Value(*v)),
            Some(Bound::Expr { expr }) => Some(Limit::Expr(parse(expr)?)),
        })
    };
    let mut constraints = Vec::new();
    for c in &spec.constraints {
        constraints.push(Interval { quantity: parse(&c.quantity)?, lo: limit(&c.lo)?, hi: limit(&c.hi)? });
    }
    Ok(Region {
        label: spec.label.clone(),
        target: spec.target.clone(),
        part_role: spec.part.clone(),
        patches: spec.patches.clone(),
        constraints,
        values,
    })
}

impl Region {
    /// Membership of a surface location. Depends only on the instance's
    /// intrinsics, provenance, patch and (u, v), never on its pose.
    pub fn contains(&self, s: &Structure, instance: usize, patch: PatchId, uv: [f64; 2]) -> bool {
        let prov = &s.provenance[instance];
        if prov.decl != self.target {
            return false;
        }
        if self.part_role.is_some() && prov.part_role != self.part_role {
            return false;
        }
        let inst = &s.instances[instance];
        if !self.patches.is_empty() && !self.patches.contains(&inst.shape.patch_name(patch)) {
            return false;
        }
        let Ok(p) = inst.shape.local_point(patch, uv[0], uv[1]) else { return false };
        let (lo, hi) = inst.shape.local_bounds();
        let lookup = |name: &str| -> Option<f64> {
            Some(match name {
                "u" => uv[0],
                "v" => uv[1],
                "angle" => TAU * uv[0],
                "height_fraction" => (p.z - lo.z) / (hi.z - lo.z),
                "x" => p.x,
                "y" => p.y,
                "z" => p.z,
                "radial" => p.x.hypot(p.y),
                _ => match name.split_once('.') {
                    Some((d, k)) => self.values.get(d, k)?,
                    None => *inst.intrinsic.get(name)?,
                },
            })
        };
        let eval = |l: &Limit| match l {
            Limit::Value(v) => Some(*v),
            Limit::Expr(e) => e.eval(&lookup).ok(),
        };
        self.constraints.iter().all(|c| {
            let Ok(q) = c.quantity.eval(&lookup) else { return false };
            let above = c.lo.as_ref().is_none_or(|l| eval(l).is_some_and(|l| l <= q));
            let below = c.hi.as_ref().is_none_or(|h| eval(h).is_some_and(|h| q <= h));
            above && below
        })
    }
}

pub fn compile_regions(program: &StructureProgram) -> Result<Vec<Region>, AnnotateError> {
    program.label_regions.iter().map(|r| compile_region(r, program)).collect()
}

/// Part index of every instance: instances sharing a semantic label and
/// joined by links without a joint form one part. Parts are numbered by
/// their lowest instance.
pub fn part_ids(s: &Structure) -> Vec<usize> {
    let n = s.instances.len();
    let mut root: Vec<usize> = (0..n).collect();
    fn find(root: &mut [usize], mut i: usize) -> usize {
        while root[i] != i {
            root[i] = root[root[i]];
            i = root[i];
        }
        i
    }
    for (c, l) in s.links.iter().enumerate() {
        let Some(l) = l else { continue };
        if l.joint.is_none() && s.instances[c].semantic_label == s.instances[l.parent].semantic_label {
            let (a, b) = (find(&mut root, c), find(&mut root, l.parent));
            root[a.max(b)] = a.min(b);
        }
    }
    let mut ids = vec![usize::MAX; n];
    let mut next = 0;
    for i in 0..n {
        let r = find(&mut root, i);
        if ids[r] == usize::MAX {
            ids[r] = next;
            next += 1;
        }
        ids[i] = ids[r];
    }
    ids
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PointLabel {
    pub semantic: u16,
    pub part: u16,
    pub affordance: u32,
}

pub fn propagate_labels(
    s: &Structure,
    regions: &[Region],
    vocabulary: &Vocabulary,
    bindings: &[Binding],
) -> Result<Vec<PointLabel>, AnnotateError> {
    let parts = part_ids(s);
    let bits: Vec<u32> = regions
        .iter()
        .map(|r| vocabulary.region_bit(&r.label).ok_or_else(|| AnnotateError::UnknownLabel(r.label.clone())))
        .collect::<Result<_, _>>()?;
    let semantic: Vec<u16> = s
        .instances
        .iter()
        .map(|i| vocabulary.semantic_id(&i.semantic_label).ok_or_else(|| AnnotateError::UnknownLabel(i.semantic_label.clone())))
        .collect::<Result<_, _>>()?;
    bindings
        .iter()
        .enumerate()
        .map(|(k, b)| {
            let inst = s.instances.get(b.instance).ok_or(AnnotateError::UnboundPoint(k))?;
            if b.patch.0 as usize >= inst.shape.patch_count() {
                return Err(AnnotateError::UnboundPoint(k));
            }
            let mut affordance = 0;
            for (r, bit) in regions.iter().zip(&bits) {
                if r.contains(s, b.instance, b.patch, b.uv) {
                    affordance |= bit;
                }
            }
            Ok(PointLabel { semantic: semantic[b.instance], part: parts[b.instance] as u16, affordance })
        })
        .collect()
}
