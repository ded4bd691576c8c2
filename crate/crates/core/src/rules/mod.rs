//! Randomized structure manipulation (advanced-template swaps, discrete and
//! continuous parameter changes) and the repair loop that keeps results valid.

pub mod trace;

pub use trace::{replay, Alteration, AlterationTrace, ParamTarget, RepairEvent};

use crate::math::rng_from_seed;
use crate::program::templates::{find_template, templates_with_role, AdvancedTemplate, DIMS};
use crate::program::{validate_program, Diagnostic, Param, Relation, StructureProgram};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;
use trace::{apply, external_references};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RuleError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("input program is invalid: {}", list(.0))]
    InvalidInput(Vec<Diagnostic>),
    #[error("no template with role `{role}` fits `{decl}`")]
    NoCompatibleTemplate { decl: String, role: String },
    #[error("repair failed after {stage}: {}", list(.diagnostics))]
    RepairFailed { stage: Stage, diagnostics: Vec<Diagnostic> },
    #[error("cannot replay: {0}")]
    Replay(String),
}

fn list(d: &[Diagnostic]) -> String {
    d.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Advanced,
    Discrete,
    Continuous,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Advanced => "APA",
            Stage::Discrete => "DPA",
            Stage::Continuous => "CPA",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ManipulationConfig {
    pub seed: u64,
    /// Perturbation half-width as a fraction of each parameter's range.
    pub cpa_scale: f64,
    pub dpa_enabled: bool,
    pub apa_enabled: bool,
    pub apa_drop_prob: f64,
    pub max_repair_iters: u32,
}

impl Default for ManipulationConfig {
    fn default() -> Self {
        ManipulationConfig {
            seed: 0,
            cpa_scale: 0.2,
            dpa_enabled: true,
            apa_enabled: true,
            apa_drop_prob: 0.1,
            max_repair_iters: 8,
        }
    }
}

impl ManipulationConfig {
    /// Every rule off: manipulation is the identity.
    pub fn disabled(seed: u64) -> Self {
        ManipulationConfig { seed, cpa_scale: 0.0, dpa_enabled: false, apa_enabled: false, ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), RuleError> {
        if !(0.0..=1.0).contains(&self.cpa_scale) {
            return Err(RuleError::InvalidConfig(format!("cpa_scale {} outside [0, 1]", self.cpa_scale)));
        }
        if !(0.0..=1.0).contains(&self.apa_drop_prob) {
            return Err(RuleError::InvalidConfig(format!("apa_drop_prob {} outside [0, 1]", self.apa_drop_prob)));
        }
        Ok(())
    }
}

fn candidates(p: &StructureProgram, decl: &str) -> Result<Vec<&'static AdvancedTemplate>, RuleError> {
    let d = p.declarations.iter().find(|d| d.name == decl).expect("declaration");
    let a = d.advanced().expect("advanced declaration");
    let current = find_template(&a.template).ok_or_else(|| RuleError::NoCompatibleTemplate {
        decl: decl.to_string(),
        role: a.role.clone(),
    })?;
    let mut pool: Vec<&'static AdvancedTemplate> = match p.templates.get(&a.role) {
        Some(names) => names.iter().filter_map(|n| find_template(n)).filter(|t| t.role == a.role).collect(),
        None => templates_with_role(&a.role).collect(),
    };
    if !pool.iter().any(|t| t.name == current.name) {
        pool.insert(0, current);
    }
    let mut anchors = Vec::new();
    for e in &p.connectivity {
        let (pa, ca) = match &e.relation {
            Relation::Attach { parent_face, child_face, .. } => (parent_face, child_face),
            Relation::Coaxial { parent_axis, child_axis, .. } => (parent_axis, child_axis),
            Relation::FixedRelative { .. } => continue,
        };
        if e.parent == decl {
            anchors.push(pa.as_str());
        }
        if e.child == decl {
            anchors.push(ca.as_str());
        }
    }
    let refs = external_references(p, decl);
    pool.retain(|t| {
        anchors.iter().all(|n| t.anchor(n).is_some())
            && refs.iter().all(|r| {
                let name = &r[decl.len() + 1..];
                DIMS.contains(&name) || t.param(name).is_some() || t.discrete_param(name).is_some()
            })
    });
    Ok(pool)
}

fn droppable(p: &StructureProgram, decl: &str) -> bool {
    let d = p.declarations.iter().find(|d| d.name == decl).expect("declaration");
    let non_essential = d.advanced().is_some_and(|a| !a.essential);
    non_essential
        && p.root != decl
        && !p.connectivity.iter().any(|e| e.parent == decl)
        && !p.joints.iter().any(|j| j.parent == decl)
        && external_references(p, decl).is_empty()
}

/// APA proposals: per advanced declaration a uniform template choice among
/// the role-compatible ones, then a drop draw for non-essential leaves.
pub fn propose_advanced<R: Rng + ?Sized>(
    p: &StructureProgram,
    config: &ManipulationConfig,
    rng: &mut R,
) -> Result<Vec<Alteration>, RuleError> {
    let mut out = Vec::new();
    for d in &p.declarations {
        let Some(a) = d.advanced() else { continue };
        let pool = candidates(p, &d.name)?;
        let pick = pool[rng.random_range(0..pool.len())];
        if pick.name != a.template {
            out.push(Alteration::Swap { decl: d.name.clone(), old: a.template.clone(), new: pick.name.to_string() });
        }
        let coin: f64 = rng.random();
        if coin < config.apa_drop_prob && droppable(p, &d.name) {
            out.push(Alteration::Drop { decl: d.name.clone() });
        }
    }
    Ok(out)
}

/// DPA proposals: every bounded discrete parameter redrawn uniformly.
pub fn propose_discrete<R: Rng + ?Sized>(p: &StructureProgram, rng: &mut R) -> Vec<Alteration> {
    let mut out = Vec::new();
    for d in &p.declarations {
        for (k, v) in d.discrete() {
            let Some((lo, hi)) = v.bounds() else { continue };
            if lo >= hi {
                continue;
            }
            let new = rng.random_range(lo..=hi);
            if new != v.value {
                let replicates = d
                    .advanced()
                    .and_then(|a| find_template(&a.template))
                    .and_then(|t| t.discrete_param(k))
                    .and_then(|t| t.replicates)
                    .map(str::to_string);
                out.push(Alteration::Discrete { decl: d.name.clone(), param: k.clone(), old: v.value, new, replicates });
            }
        }
    }
    out
}

/// Every free continuous parameter of the program, in a fixed order.
pub fn free_params(p: &StructureProgram) -> Vec<(ParamTarget, f64, f64, f64)> {
    let mut out = Vec::new();
    let mut push = |target: ParamTarget, param: &Param| {
        if let Param::Free { value, lo, hi } = param {
            out.push((target, *value, *lo, *hi));
        }
    };
    for d in &p.declarations {
        for (k, v) in d.params() {
            push(ParamTarget::Decl { decl: d.name.clone(), param: k.clone() }, v);
        }
    }
    for (i, e) in p.connectivity.iter().enumerate() {
        for (k, v) in e.relation.params() {
            push(ParamTarget::Edge { edge: i, param: k.to_string() }, v);
        }
    }
    for (i, j) in p.joints.iter().enumerate() {
        for (axis, v) in j.origin.iter().enumerate() {
            push(ParamTarget::JointOrigin { joint: i, axis }, v);
        }
    }
    out
}

/// CPA proposals: uniform offsets within `±scale·(hi − lo)`, clamped.
pub fn propose_continuous<R: Rng + ?Sized>(p: &StructureProgram, scale: f64, rng: &mut R) -> Vec<Alteration> {
    let mut out = Vec::new();
    for (target, value, lo, hi) in free_params(p) {
        let w: f64 = rng.random_range(-1.0..=1.0);
        let new = (value + w * scale * (hi - lo)).clamp(lo, hi);
        if new != value {
            out.push(Alteration::Continuous { target, old: value, new });
        }
    }
    out
}

fn build(base: &StructureProgram, alts: &[Alteration]) -> Result<StructureProgram, RuleError> {
    let mut p = base.clone();
    for a in alts {
        apply(&mut p, a)?;
    }
    Ok(p)
}

fn involved(diags: &[Diagnostic]) -> Vec<String> {
    let decl = |n: &str| n.split('.').next().unwrap_or(n).to_string();
    let mut out = Vec::new();
    for d in diags {
        match d {
            Diagnostic::Floating(n) => out.push(decl(n)),
            Diagnostic::Collision(a, b) => {
                out.push(decl(a));
                out.push(decl(b));
            }
            Diagnostic::OutOfBounds { param, .. } => out.push(decl(param)),
            Diagnostic::Elaboration(_) => {}
        }
    }
    out
}

/// Exception handling: until `base + alts` validates, halve the continuous
/// changes near the offending declarations (all of them if none is named),
/// reverting them outright once `max_iters` halvings are spent; discrete and
/// template changes are reverted most recent offender first.
pub fn repair(
    base: &StructureProgram,
    mut alts: Vec<Alteration>,
    stage: Stage,
    max_iters: u32,
    log: &mut Vec<RepairEvent>,
) -> Result<(StructureProgram, Vec<Alteration>), RuleError> {
    let mut halvings = 0;
    loop {
        let p = build(base, &alts)?;
        let diags = validate_program(&p);
        if diags.is_empty() {
            return Ok((p, alts));
        }
        if alts.is_empty() {
            return Err(RuleError::RepairFailed { stage, diagnostics: diags });
        }
        let culprits = involved(&diags);
        let hits = |a: &Alteration| a.decl(&p).iter().any(|d| culprits.iter().any(|c| c == d));
        match stage {
            Stage::Advanced | Stage::Discrete => {
                let i = alts.iter().rposition(hits).unwrap_or(alts.len() - 1);
                log.push(RepairEvent::Reverted { alteration: alts.remove(i) });
            }
            Stage::Continuous if halvings >= max_iters => {
                for a in alts.drain(..) {
                    log.push(RepairEvent::Reverted { alteration: a });
                }
            }
            Stage::Continuous => {
                halvings += 1;
                let any = alts.iter().any(hits);
                for a in alts.iter_mut() {
                    if any && !hits(a) {
                        continue;
                    }
                    if let Alteration::Continuous { target, old, new } = a {
                        let to = *old + (*new - *old) / 2.0;
                        log.push(RepairEvent::Halved { target: target.clone(), from: *new, to });
                        *new = to;
                    }
                }
                alts.retain(|a| !matches!(a, Alteration::Continuous { old, new, .. } if old == new));
            }
        }
    }
}

fn stage<R: Rng + ?Sized>(
    p: &StructureProgram,
    which: Stage,
    config: &ManipulationConfig,
    rng: &mut R,
) -> Result<(StructureProgram, AlterationTrace), RuleError> {
    let alts = match which {
        Stage::Advanced => propose_advanced(p, config, rng)?,
        Stage::Discrete => propose_discrete(p, rng),
        Stage::Continuous => propose_continuous(p, config.cpa_scale, rng),
    };
    let mut repairs = Vec::new();
    let (q, alterations) = repair(p, alts, which, config.max_repair_iters, &mut repairs)?;
    Ok((q, AlterationTrace { alterations, repairs }))
}

pub fn alter_advanced<R: Rng + ?Sized>(
    p: &StructureProgram,
    config: &ManipulationConfig,
    rng: &mut R,
) -> Result<(StructureProgram, AlterationTrace), RuleError> {
    stage(p, Stage::Advanced, config, rng)
}

pub fn alter_discrete<R: Rng + ?Sized>(
    p: &StructureProgram,
    config: &ManipulationConfig,
    rng: &mut R,
) -> Result<(StructureProgram, AlterationTrace), RuleError> {
    stage(p, Stage::Discrete, config, rng)
}

pub fn alter_continuous<R: Rng + ?Sized>(
    p: &StructureProgram,
    config: &ManipulationConfig,
    rng: &mut R,
) -> Result<(StructureProgram, AlterationTrace), RuleError> {
    stage(p, Stage::Continuous, config, rng)
}

/// APA, then DPA, then CPA, each validated and repaired. A pure function
/// of its arguments.
pub fn manipulate(
    program: &StructureProgram,
    config: &ManipulationConfig,
) -> Result<(StructureProgram, AlterationTrace), RuleError> {
    config.validate()?;
    let diags = validate_program(program);
    if !diags.is_empty() {
        return Err(RuleError::InvalidInput(diags));
    }
    let mut rng = rng_from_seed(config.seed);
    let mut p = program.clone();
    let mut trace = AlterationTrace::default();
    let mut run = |which: Stage, p: &mut StructureProgram| -> Result<(), RuleError> {
        let (q, t) = stage(p, which, config, &mut rng)?;
        *p = q;
        trace.alterations.extend(t.alterations);
        trace.repairs.extend(t.repairs);
        Ok(())
    };
    if config.apa_enabled {
        run(Stage::Advanced, &mut p)?;
    }
    if config.dpa_enabled {
        run(Stage::Discrete, &mut p)?;
    }
    if config.cpa_scale > 0.0 {
        run(Stage::Continuous, &mut p)?;
    }
    Ok((p, trace))
}
