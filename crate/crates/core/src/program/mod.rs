//! Structure programs: document model, parsing, canonical serialization,
//! parameter evaluation and elaboration into posed primitives.

pub mod document;
pub mod collision;
pub mod kinematics;
pub mod structure;
pub mod templates;
pub mod validate;

pub use document::*;
pub use structure::{articulate, elaborate, Provenance, ResolvedJoint, Structure, StructureError};
pub use validate::{check_validity, validate_program, Diagnostic};

use crate::canonical;
use crate::expr::{Expr, ExprError};
use crate::primitive::{PrimitiveTemplateId, CUBOID_FACES};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;
use templates::find_template;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProgramError {
    #[error("syntax error at line {line}, column {column}: {msg}")]
    Syntax { line: usize, column: usize, msg: String },
    #[error("unsupported document version `{0}`")]
    Version(String),
    #[error("unknown template `{0}`")]
    UnknownTemplate(String),
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("unbound reference `{0}`")]
    UnboundReference(String),
    #[error("connectivity is not a tree at `{0}`")]
    CyclicConnectivity(String),
    #[error("invalid expression in {context}: {source}")]
    InvalidExpression { context: String, source: ExprError },
    #[error("parameter `{0}` depends on itself")]
    CyclicParameter(String),
    #[error("`{decl}` has no anchor `{anchor}`")]
    UnknownAnchor { decl: String, anchor: String },
    #[error("template `{template}` of `{decl}` does not realize role `{role}`")]
    RoleMismatch { decl: String, template: String, role: String },
    #[error("joint `{joint}`: {reason}")]
    InvalidJoint { joint: String, reason: String },
}

/// Parses and checks a program document.
pub fn parse_program(text: &str) -> Result<StructureProgram, ProgramError> {
    let program: StructureProgram = serde_json::from_str(text).map_err(|e| ProgramError::Syntax {
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })?;
    check_program(&program)?;
    Ok(program)
}

/// Canonical text of a program.
pub fn serialize_program(program: &StructureProgram) -> String {
    canonical::to_canonical_string(program).expect("program documents always serialize")
}

fn parse_expr(src: &str, context: &str) -> Result<Expr, ProgramError> {
    Expr::parse(src).map_err(|source| ProgramError::InvalidExpression {
        context: context.to_string(),
        source,
    })
}

fn elementary_face_known(template: PrimitiveTemplateId, name: &str) -> bool {
    match template {
        PrimitiveTemplateId::Cuboid => CUBOID_FACES.contains(&name),
        PrimitiveTemplateId::Cylinder => ["lateral", "top_cap", "bottom_cap"].contains(&name),
        PrimitiveTemplateId::PrismN => {
            ["top_cap", "bottom_cap"].contains(&name)
                || name.strip_prefix("side_").is_some_and(|k| k.parse::<u32>().is_ok())
        }
        PrimitiveTemplateId::Sphere | PrimitiveTemplateId::Torus => name == "surface",
    }
}

fn axis_known(template: PrimitiveTemplateId, name: &str) -> bool {
    name == "z" || (template == PrimitiveTemplateId::Cuboid && (name == "x" || name == "y"))
}

/// Name, template and reference checks shared by parsing and the
/// procedural rules.
pub fn check_program(p: &StructureProgram) -> Result<(), ProgramError> {
    if p.version != FORMAT_VERSION {
        return Err(ProgramError::Version(p.version.clone()));
    }
    let mut decls: BTreeMap<&str, &Declaration> = BTreeMap::new();
    for d in &p.declarations {
        if decls.insert(d.name.as_str(), d).is_some() {
            return Err(ProgramError::DuplicateName(d.name.clone()));
        }
        match &d.body {
            DeclBody::Elementary(e) => {
                PrimitiveTemplateId::from_name(&e.template)
                    .ok_or_else(|| ProgramError::UnknownTemplate(e.template.clone()))?;
            }
            DeclBody::Advanced(a) => {
                let t = find_template(&a.template)
                    .ok_or_else(|| ProgramError::UnknownTemplate(a.template.clone()))?;
                if t.role != a.role {
                    return Err(ProgramError::RoleMismatch {
                        decl: d.name.clone(),
                        template: a.template.clone(),
                        role: a.role.clone(),
                    });
                }
            }
        }
    }
    for (role, names) in &p.templates {
        for n in names {
            let t = find_template(n).ok_or_else(|| ProgramError::UnknownTemplate(n.clone()))?;
            if t.role != *role {
                return Err(ProgramError::RoleMismatch {
                    decl: String::new(),
                    template: n.clone(),
                    role: role.clone(),
                });
            }
        }
    }
    if !decls.contains_key(p.root.as_str()) {
        return Err(ProgramError::UnboundReference(p.root.clone()));
    }

    let lookup = |name: &str| {
        decls
            .get(name)
            .copied()
            .ok_or_else(|| ProgramError::UnboundReference(name.to_string()))
    };
    let check_face = |decl: &Declaration, face: &str, axis: bool| -> Result<(), ProgramError> {
        let ok = match &decl.body {
            DeclBody::Elementary(e) => {
                let t = PrimitiveTemplateId::from_name(&e.template).expect("checked above");
                if axis {
                    axis_known(t, face)
                } else {
                    elementary_face_known(t, face)
                }
            }
            DeclBody::Advanced(a) => {
                let t = find_template(&a.template).expect("checked above");
                matches!(
                    (t.anchor(face), axis),
                    (Some(templates::Anchor::Face { .. }), false) | (Some(templates::Anchor::Axis { .. }), true)
                )
            }
        };
        if ok {
            Ok(())
        } else {
            Err(ProgramError::UnknownAnchor {
                decl: decl.name.clone(),
                anchor: face.to_string(),
            })
        }
    };

    let mut parent_of: BTreeMap<&str, &str> = BTreeMap::new();
    for e in &p.connectivity {
        let parent = lookup(&e.parent)?;
        let child = lookup(&e.child)?;
        if e.child == p.root || e.parent == e.child || parent_of.contains_key(e.child.as_str()) {
            return Err(ProgramError::CyclicConnectivity(e.child.clone()));
        }
        parent_of.insert(&e.child, &e.parent);
        match &e.relation {
            Relation::Attach { parent_face, child_face, .. } => {
                check_face(parent, parent_face, false)?;
                check_face(child, child_face, false)?;
            }
            Relation::Coaxial { parent_axis, child_axis, .. } => {
                check_face(parent, parent_axis, true)?;
                check_face(child, child_axis, true)?;
            }
            Relation::FixedRelative { .. } => {}
        }
    }
    for start in parent_of.keys() {
        let mut seen = BTreeSet::new();
        let mut cur = *start;
        while let Some(&up) = parent_of.get(cur) {
            if !seen.insert(cur) {
                return Err(ProgramError::CyclicConnectivity(cur.to_string()));
            }
            cur = up;
        }
    }

    let mut joint_names = BTreeSet::new();
    for j in &p.joints {
        if !joint_names.insert(j.name.as_str()) {
            return Err(ProgramError::DuplicateName(j.name.clone()));
        }
        lookup(&j.parent)?;
        lookup(&j.child)?;
        let invalid = |reason: &str| ProgramError::InvalidJoint {
            joint: j.name.clone(),
            reason: reason.to_string(),
        };
        if parent_of.get(j.child.as_str()) != Some(&j.parent.as_str()) {
            return Err(invalid("no connectivity edge from parent to child"));
        }
        let [dx, dy, dz] = j.direction;
        if j.kind != JointKind::Fixed && (dx * dx + dy * dy + dz * dz - 1.0).abs() > 1e-9 {
            return Err(invalid("direction must be unit length"));
        }
        let [lo, hi] = j.range;
        if !(lo <= j.rest && j.rest <= hi) {
            return Err(invalid("rest value outside range"));
        }
    }

    for (ctx, src) in expressions(p) {
        let e = parse_expr(src, &ctx)?;
        for r in e.references() {
            let (decl, param) = r
                .split_once('.')
                .ok_or_else(|| ProgramError::UnboundReference(r.clone()))?;
            let d = lookup(decl).map_err(|_| ProgramError::UnboundReference(r.clone()))?;
            if !d.params().contains_key(param) && !d.discrete().contains_key(param) {
                return Err(ProgramError::UnboundReference(r.clone()));
            }
        }
    }
    evaluate(p)?;
    Ok(())
}

/// All derived-parameter expressions of the program with a context label.
fn expressions(p: &StructureProgram) -> Vec<(String, &str)> {
    let mut out = Vec::new();
    for d in &p.declarations {
        for (k, v) in d.params() {
            if let Param::Derived(src) = v {
                out.push((format!("{}.{}", d.name, k), src.as_str()));
            }
        }
    }
    for e in &p.connectivity {
        for (k, v) in e.relation.params() {
            if let Param::Derived(src) = v {
                out.push((format!("edge {}->{} {}", e.parent, e.child, k), src.as_str()));
            }
        }
    }
    for j in &p.joints {
        for v in &j.origin {
            if let Param::Derived(src) = v {
                out.push((format!("joint {} origin", j.name), src.as_str()));
            }
        }
    }
    out
}

/// Numeric values of every declaration parameter, keyed `decl.param`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Values {
    pub continuous: BTreeMap<String, f64>,
    pub discrete: BTreeMap<String, i64>,
}

impl Values {
    pub fn get(&self, decl: &str, param: &str) -> Option<f64> {
        let key = format!("{decl}.{param}");
        self.continuous
            .get(&key)
            .copied()
            .or_else(|| self.discrete.get(&key).map(|&v| v as f64))
    }

    /// Evaluates an edge or joint parameter.
    pub fn eval(&self, param: &Param) -> Result<f64, ProgramError> {
        match param {
            Param::Fixed(v) | Param::Free { value: v, .. } => Ok(*v),
            Param::Derived(src) => {
                let e = parse_expr(src, src)?;
                e.eval(&|name| {
                    self.continuous
                        .get(name)
                        .copied()
                        .or_else(|| self.discrete.get(name).map(|&v| v as f64))
                })
                .map_err(|source| ProgramError::InvalidExpression {
                    context: src.clone(),
                    source,
                })
            }
        }
    }
}

/// Resolves every declaration parameter, following derived expressions.
pub fn evaluate(p: &StructureProgram) -> Result<Values, ProgramError> {
    let mut values = Values::default();
    let mut sources: BTreeMap<String, &Param> = BTreeMap::new();
    for d in &p.declarations {
        for (k, v) in d.params() {
            sources.insert(format!("{}.{}", d.name, k), v);
        }
        for (k, v) in d.discrete() {
            values.discrete.insert(format!("{}.{}", d.name, k), v.value);
        }
    }
    fn resolve(
        key: &str,
        sources: &BTreeMap<String, &Param>,
        values: &mut Values,
        stack: &mut Vec<String>,
    ) -> Result<f64, ProgramError> {
        if let Some(v) = values.continuous.get(key) {
            return Ok(*v);
        }
        if let Some(v) = values.discrete.get(key) {
            return Ok(*v as f64);
        }
        let param = sources
            .get(key)
            .ok_or_else(|| ProgramError::UnboundReference(key.to_string()))?;
        let v = match param {
            Param::Fixed(v) | Param::Free { value: v, .. } => *v,
            Param::Derived(src) => {
                if stack.iter().any(|s| s == key) {
                    return Err(ProgramError::CyclicParameter(key.to_string()));
                }
                stack.push(key.to_string());
                let e = parse_expr(src, key)?;
                let mut resolved = BTreeMap::new();
                for r in e.references() {
                    resolved.insert(r.clone(), resolve(&r, sources, values, stack)?);
                }
                stack.pop();
                e.eval(&|n| resolved.get(n).copied())
                    .map_err(|source| ProgramError::InvalidExpression {
                        context: key.to_string(),
                        source,
                    })?
            }
        };
        values.continuous.insert(key.to_string(), v);
        Ok(v)
    }
    let keys: Vec<String> = sources.keys().cloned().collect();
    for k in keys {
        resolve(&k, &sources, &mut values, &mut Vec::new())?;
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const MINIMAL: &str = r#"{
        "version": "artipg-sp/1",
        "category": "block",
        "root": "a",
        "declarations": [
            {"name": "a", "label": "block",
             "elementary": {"template": "Cuboid",
                            "params": {"size_x": {"value": 1.0}, "size_y": {"value": 0.5},
                                       "size_z": {"value": 0.25, "lo": 0.2, "hi": 0.3}}}}
        ]
    }"#;

    #[test]
    fn minimal_document() {
        let p = parse_program(MINIMAL).unwrap();
        assert_eq!(p.declarations.len(), 1);
        assert_eq!(p.root, "a");
        let text = serialize_program(&p);
        assert_eq!(parse_program(&text).unwrap(), p);
        assert_eq!(serialize_program(&parse_program(&text).unwrap()), text);
    }

    #[test]
    fn syntax_error_has_position() {
        match parse_program("{\n  \"version\": ,\n}") {
            Err(ProgramError::Syntax { line, column, .. }) => {
                assert_eq!(line, 2);
                assert!(column > 0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unbound_edge_reference() {
        let mut v: serde_json::Value = serde_json::from_str(MINIMAL).unwrap();
        v["connectivity"] = serde_json::json!([
            {"parent": "a", "child": "door",
             "relation": {"kind": "attach", "parent_face": "pz", "child_face": "nz"}}
        ]);
        let err = parse_program(&v.to_string()).unwrap_err();
        assert_eq!(err, ProgramError::UnboundReference("door".into()));
    }

    #[test]
    fn derived_parameters_and_cycles() {
        let mut v: serde_json::Value = serde_json::from_str(MINIMAL).unwrap();
        v["declarations"][0]["elementary"]["params"]["size_y"] = serde_json::json!({"expr": "a.size_x / 4"});
        let p = parse_program(&v.to_string()).unwrap();
        assert_eq!(evaluate(&p).unwrap().get("a", "size_y"), Some(0.25));
        v["declarations"][0]["elementary"]["params"]["size_x"] = serde_json::json!({"expr": "a.size_y * 2"});
        assert!(matches!(
            parse_program(&v.to_string()),
            Err(ProgramError::CyclicParameter(_))
        ));
    }

    #[test]
    fn duplicate_and_unknown() {
        let mut v: serde_json::Value = serde_json::from_str(MINIMAL).unwrap();
        let d = v["declarations"][0].clone();
        v["declarations"].as_array_mut().unwrap().push(d);
        assert_eq!(parse_program(&v.to_string()).unwrap_err(), ProgramError::DuplicateName("a".into()));
        let mut v: serde_json::Value = serde_json::from_str(MINIMAL).unwrap();
        v["declarations"][0]["elementary"]["template"] = "Cone".into();
        assert_eq!(parse_program(&v.to_string()).unwrap_err(), ProgramError::UnknownTemplate("Cone".into()));
    }
}
