//! Alteration records and their replay.

use super::RuleError;
use crate::program::templates::{find_template, DIMS};
use crate::program::{Bound, DeclBody, IntParam, Param, StructureProgram};
use serde::{Deserialize, Serialize};

/// Location of a continuous parameter inside a program.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "in", rename_all = "snake_case")]
pub enum ParamTarget {
    Decl { decl: String, param: String },
    Edge { edge: usize, param: String },
    JointOrigin { joint: usize, axis: usize },
}

impl ParamTarget {
    pub fn get_mut<'a>(&self, p: &'a mut StructureProgram) -> Option<&'a mut Param> {
        match self {
            ParamTarget::Decl { decl, param } => p
                .declarations
                .iter_mut()
                .find(|d| &d.name == decl)
                .and_then(|d| d.params_mut().get_mut(param)),
            ParamTarget::Edge { edge, param } => p
                .connectivity
                .get_mut(*edge)?
                .relation
                .params_mut()
                .into_iter()
                .find(|(k, _)| k == param)
                .map(|(_, v)| v),
            ParamTarget::JointOrigin { joint, axis } => p.joints.get_mut(*joint)?.origin.get_mut(*axis),
        }
    }

    /// Declarations whose placement this parameter affects directly.
    pub fn touches(&self, p: &StructureProgram, decl: &str) -> bool {
        match self {
            ParamTarget::Decl { decl: d, .. } => d == decl,
            ParamTarget::Edge { edge, .. } => p
                .connectivity
                .get(*edge)
                .is_some_and(|e| e.parent == decl || e.child == decl),
            ParamTarget::JointOrigin { joint, .. } => {
                p.joints.get(*joint).is_some_and(|j| j.parent == decl || j.child == decl)
            }
        }
    }
}

impl std::fmt::Display for ParamTarget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ParamTarget::Decl { decl, param } => write!(f, "{decl}.{param}"),
            ParamTarget::Edge { edge, param } => write!(f, "edge[{edge}].{param}"),
            ParamTarget::JointOrigin { joint, axis } => write!(f, "joint[{joint}].origin[{axis}]"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Alteration {
    /// APA: advanced template replaced, overall dimensions kept.
    Swap { decl: String, old: String, new: String },
    /// APA: non-essential component removed with its edges, joints and regions.
    Drop { decl: String },
    /// DPA. New repetitions `i >= old` of the `replicates` part copy
    /// repetition `i % old`; repetitions `>= new` are removed.
    Discrete {
        decl: String,
        param: String,
        old: i64,
        new: i64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        replicates: Option<String>,
    },
    /// CPA.
    Continuous { target: ParamTarget, old: f64, new: f64 },
}

impl Alteration {
    pub fn decl<'a>(&'a self, p: &'a StructureProgram) -> Vec<&'a str> {
        match self {
            Alteration::Swap { decl, .. } | Alteration::Drop { decl } | Alteration::Discrete { decl, .. } => {
                vec![decl.as_str()]
            }
            Alteration::Continuous { target, .. } => p
                .declarations
                .iter()
                .filter(|d| target.touches(p, &d.name))
                .map(|d| d.name.as_str())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum RepairEvent {
    Halved { target: ParamTarget, from: f64, to: f64 },
    Reverted { alteration: Alteration },
}

/// Everything a manipulation did. `alterations` holds the effective changes;
/// `repairs` records how the exception handling arrived at them.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AlterationTrace {
    pub alterations: Vec<Alteration>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub repairs: Vec<RepairEvent>,
}

/// Reapplies a trace to the program it was recorded on.
pub fn replay(program: &StructureProgram, trace: &AlterationTrace) -> Result<StructureProgram, RuleError> {
    let mut p = program.clone();
    for a in &trace.alterations {
        apply(&mut p, a)?;
    }
    Ok(p)
}

pub(crate) fn apply(p: &mut StructureProgram, a: &Alteration) -> Result<(), RuleError> {
    let missing = |d: &str| RuleError::Replay(format!("no declaration `{d}`"));
    match a {
        Alteration::Swap { decl, new, .. } => swap_template(p, decl, new)?,
        Alteration::Drop { decl } => drop_decl(p, decl),
        Alteration::Discrete { decl, param, new, .. } => {
            let d = p.declarations.iter_mut().find(|d| &d.name == decl).ok_or_else(|| missing(decl))?;
            let slot = d
                .discrete_mut()
                .get_mut(param)
                .ok_or_else(|| RuleError::Replay(format!("no discrete `{decl}.{param}`")))?;
            slot.value = *new;
        }
        Alteration::Continuous { target, new, .. } => match target.get_mut(p) {
            Some(Param::Free { value, .. }) => *value = *new,
            _ => return Err(RuleError::Replay(format!("`{target}` is not a free parameter"))),
        },
    }
    Ok(())
}

/// Replaces the template of an advanced declaration. Dimensions and
/// parameters the new template shares are kept if they fit its ranges;
/// the rest take the template defaults, free within the template ranges.
pub(crate) fn swap_template(p: &mut StructureProgram, decl: &str, new: &str) -> Result<(), RuleError> {
    let t = find_template(new).ok_or_else(|| RuleError::Replay(format!("unknown template `{new}`")))?;
    let d = p
        .declarations
        .iter_mut()
        .find(|d| d.name == decl)
        .ok_or_else(|| RuleError::Replay(format!("no declaration `{decl}`")))?;
    let DeclBody::Advanced(a) = &mut d.body else {
        return Err(RuleError::Replay(format!("`{decl}` is not advanced")));
    };
    a.template = new.to_string();
    let old = std::mem::take(&mut a.params);
    for (k, v) in &old {
        if DIMS.contains(&k.as_str()) {
            a.params.insert(k.clone(), v.clone());
        }
    }
    for tp in t.params {
        let inside = |x: f64| (tp.lo..=tp.hi).contains(&x);
        let carried = old.get(tp.name).and_then(|v| match v {
            Param::Fixed(x) if inside(*x) => Some(v.clone()),
            Param::Free { value, lo, hi } if inside(*value) => Some(Param::Free {
                value: *value,
                lo: lo.max(tp.lo),
                hi: hi.min(tp.hi),
            }),
            Param::Derived(_) => Some(v.clone()),
            _ => None,
        });
        let fresh = Param::Free { value: tp.default, lo: tp.lo, hi: tp.hi };
        a.params.insert(tp.name.to_string(), carried.unwrap_or(fresh));
    }
    let old = std::mem::take(&mut a.discrete);
    for td in t.discrete {
        let carried = old
            .get(td.name)
            .filter(|v| (td.lo..=td.hi).contains(&v.value))
            .map(|v| IntParam { value: v.value, lo: Some(td.lo), hi: Some(td.hi) });
        a.discrete.insert(
            td.name.to_string(),
            carried.unwrap_or(IntParam { value: td.default, lo: Some(td.lo), hi: Some(td.hi) }),
        );
    }
    Ok(())
}

/// Removes a declaration and everything that refers to it.
pub(crate) fn drop_decl(p: &mut StructureProgram, decl: &str) {
    p.declarations.retain(|d| d.name != decl);
    p.connectivity.retain(|e| e.parent != decl && e.child != decl);
    p.joints.retain(|j| j.parent != decl && j.child != decl);
    p.label_regions.retain(|r| r.target != decl);
}

/// `decl.param` references from expressions that survive dropping `decl`.
pub(crate) fn external_references(p: &StructureProgram, decl: &str) -> Vec<String> {
    let mut sources: Vec<(bool, &str)> = Vec::new();
    for d in &p.declarations {
        for v in d.params().values() {
            if let Param::Derived(src) = v {
                sources.push((d.name == decl, src));
            }
        }
    }
    for e in &p.connectivity {
        let own = e.parent == decl || e.child == decl;
        for (_, v) in e.relation.params() {
            if let Param::Derived(src) = v {
                sources.push((own, src));
            }
        }
    }
    for j in &p.joints {
        for v in &j.origin {
            if let Param::Derived(src) = v {
                sources.push((j.parent == decl || j.child == decl, src));
            }
        }
    }
    for r in &p.label_regions {
        for c in &r.constraints {
            for b in [&c.lo, &c.hi].into_iter().flatten() {
                if let Bound::Expr { expr } = b {
                    sources.push((r.target == decl, expr));
                }
            }
        }
    }
    let prefix = format!("{decl}.");
    let mut out = Vec::new();
    for (own, src) in sources {
        if own {
            continue;
        }
        if let Ok(e) = crate::expr::Expr::parse(src) {
            for r in e.references() {
                if r.starts_with(&prefix) && !out.contains(&r) {
                    out.push(r);
                }
            }
        }
    }
    out
}
