//! Program and structure diagnostics.

use super::collision::overlaps;
use super::document::{Param, StructureProgram};
use super::kinematics::Placement;
use super::structure::{elaborate_unchecked, Structure};
use crate::math::Vec3;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Diagnostic {
    /// A declaration with no incoming pose-defining edge.
    Floating(String),
    /// Two instances whose volumes overlap.
    Collision(String, String),
    /// A free parameter outside its declared bounds.
    OutOfBounds { param: String, value: f64 },
    /// The program could not be elaborated.
    Elaboration(String),
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::Floating(d) => write!(f, "floating declaration `{d}`"),
            Diagnostic::Collision(a, b) => write!(f, "collision between `{a}` and `{b}`"),
            Diagnostic::OutOfBounds { param, value } => write!(f, "`{param}` = {value} outside its bounds"),
            Diagnostic::Elaboration(m) => write!(f, "elaboration failed: {m}"),
        }
    }
}

/// Empty iff the program elaborates at rest into a connected, collision-free
/// structure with every free parameter inside its bounds.
pub fn validate_program(program: &StructureProgram) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    for d in &program.declarations {
        for (k, p) in d.params() {
            if let Param::Free { value, lo, hi } = p {
                if !(lo <= value && value <= hi) {
                    out.push(Diagnostic::OutOfBounds { param: format!("{}.{k}", d.name), value: *value });
                }
            }
        }
        for (k, p) in d.discrete() {
            if let Some((lo, hi)) = p.bounds() {
                if !(lo..=hi).contains(&p.value) {
                    out.push(Diagnostic::OutOfBounds {
                        param: format!("{}.{k}", d.name),
                        value: p.value as f64,
                    });
                }
            }
        }
    }
    match elaborate_unchecked(program) {
        Ok(s) => out.extend(check_validity(&s)),
        Err(e) => out.push(Diagnostic::Elaboration(e.to_string())),
    }
    out
}

/// Floating declarations, then colliding instance pairs. Pairs joined by an
/// edge authored inside a template are exempt; their overlap is intended.
pub fn check_validity(s: &Structure) -> Vec<Diagnostic> {
    let mut out: Vec<Diagnostic> = s.floating.iter().cloned().map(Diagnostic::Floating).collect();
    let names = s.node_names();
    let n = s.instances.len();
    for i in 0..n {
        for j in i + 1..n {
            let link = match (&s.links[i], &s.links[j]) {
                (_, Some(l)) if l.parent == i => Some((l, i)),
                (Some(l), _) if l.parent == j => Some((l, j)),
                _ => None,
            };
            let mut extra = Vec::new();
            if let Some((l, parent)) = link {
                if l.internal {
                    continue;
                }
                if let Placement::Attach { .. } = l.placement {
                    extra.push(s.instances[parent].pose.rotation * (l.anchor.rotation * Vec3::z()));
                }
            }
            if overlaps(&s.instances[i], &s.instances[j], &extra) {
                out.push(Diagnostic::Collision(names[i].clone(), names[j].clone()));
            }
        }
    }
    out
}
