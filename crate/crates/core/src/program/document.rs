//! Serde model of the structure-program document.

use crate::math::RigidTransform;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const FORMAT_VERSION: &str = "artipg-sp/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureProgram {
    pub version: String,
    pub category: String,
    pub root: String,
    /// Role name to the advanced templates that may realize it.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub templates: BTreeMap<String, Vec<String>>,
    pub declarations: Vec<Declaration>,
    #[serde(default)]
    pub connectivity: Vec<ConnectivityEdge>,
    #[serde(default)]
    pub joints: Vec<JointSpec>,
    #[serde(default)]
    pub label_regions: Vec<RegionSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Declaration {
    pub name: String,
    pub label: String,
    /// Only meaningful on the root or on floating declarations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pose: Option<RigidTransform>,
    #[serde(flatten)]
    pub body: DeclBody,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeclBody {
    Elementary(ElementaryDecl),
    Advanced(AdvancedDecl),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementaryDecl {
    pub template: String,
    pub params: BTreeMap<String, Param>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub discrete: BTreeMap<String, IntParam>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdvancedDecl {
    pub template: String,
    pub role: String,
    /// Non-essential components may be dropped by template alteration.
    pub essential: bool,
    /// `width`, `depth`, `height` plus the template's own parameters.
    pub params: BTreeMap<String, Param>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub discrete: BTreeMap<String, IntParam>,
}

impl Declaration {
    pub fn template_name(&self) -> &str {
        match &self.body {
            DeclBody::Elementary(e) => &e.template,
            DeclBody::Advanced(a) => &a.template,
        }
    }

    pub fn params(&self) -> &BTreeMap<String, Param> {
        match &self.body {
            DeclBody::Elementary(e) => &e.params,
            DeclBody::Advanced(a) => &a.params,
        }
    }

    pub fn params_mut(&mut self) -> &mut BTreeMap<String, Param> {
        match &mut self.body {
            DeclBody::Elementary(e) => &mut e.params,
            DeclBody::Advanced(a) => &mut a.params,
        }
    }

    pub fn discrete(&self) -> &BTreeMap<String, IntParam> {
        match &self.body {
            DeclBody::Elementary(e) => &e.discrete,
            DeclBody::Advanced(a) => &a.discrete,
        }
    }

    pub fn discrete_mut(&mut self) -> &mut BTreeMap<String, IntParam> {
        match &mut self.body {
            DeclBody::Elementary(e) => &mut e.discrete,
            DeclBody::Advanced(a) => &mut a.discrete,
        }
    }

    pub fn advanced(&self) -> Option<&AdvancedDecl> {
        match &self.body {
            DeclBody::Advanced(a) => Some(a),
            DeclBody::Elementary(_) => None,
        }
    }
}

/// A continuous parameter: fixed, free within bounds, or derived from others.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamDoc", into = "ParamDoc")]
pub enum Param {
    Fixed(f64),
    Free { value: f64, lo: f64, hi: f64 },
    Derived(String),
}

impl Default for Param {
    fn default() -> Self {
        Param::Fixed(0.0)
    }
}

impl Param {
    pub fn bounds(&self) -> Option<(f64, f64)> {
        match self {
            Param::Free { lo, hi, .. } => Some((*lo, *hi)),
            _ => None,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    expr: Option<String>,
}

impl TryFrom<ParamDoc> for Param {
    type Error = String;

    fn try_from(d: ParamDoc) -> Result<Self, String> {
        match d {
            ParamDoc { value: Some(v), lo: None, hi: None, expr: None } => Ok(Param::Fixed(v)),
            ParamDoc { value: Some(value), lo: Some(lo), hi: Some(hi), expr: None } => {
                if lo > hi {
                    return Err(format!("bounds [{lo}, {hi}] are reversed"));
                }
                Ok(Param::Free { value, lo, hi })
            }
            ParamDoc { value: None, lo: None, hi: None, expr: Some(e) } => Ok(Param::Derived(e)),
            _ => Err("parameter must be {value}, {value, lo, hi} or {expr}".to_string()),
        }
    }
}

impl From<Param> for ParamDoc {
    fn from(p: Param) -> Self {
        match p {
            Param::Fixed(v) => ParamDoc { value: Some(v), lo: None, hi: None, expr: None },
            Param::Free { value, lo, hi } => {
                ParamDoc { value: Some(value), lo: Some(lo), hi: Some(hi), expr: None }
            }
            Param::Derived(e) => ParamDoc { value: None, lo: None, hi: None, expr: Some(e) },
        }
    }
}

/// An integer parameter; free when bounds are present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntParam {
    pub value: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<i64>,
}

impl IntParam {
    pub fn fixed(value: i64) -> Self {
        IntParam { value, lo: None, hi: None }
    }

    pub fn bounds(&self) -> Option<(i64, i64)> {
        match (self.lo, self.hi) {
            (Some(lo), Some(hi)) => Some((lo, hi)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectivityEdge {
    pub parent: String,
    pub child: String,
    pub relation: Relation,
}

/// Pose-defining relation of a child to its parent.
///
/// * `attach`: the child face is placed flush against the parent face,
///   normals opposed. Removes 3 DoF; `offset` (meters along the parent face
///   tangent and bitangent) and `spin` (about the contact normal) pin the rest.
/// * `coaxial`: the child axis is made collinear with the parent axis.
///   Removes 4 DoF; `offset` (along the axis) and `spin` pin the rest.
/// * `fixed_relative`: the child frame is the parent frame composed with a
///   rigid transform. Removes 6 DoF.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Relation {
    Attach {
        parent_face: String,
        child_face: String,
        #[serde(default)]
        offset: [Param; 2],
        #[serde(default)]
        spin: Param,
    },
    Coaxial {
        parent_axis: String,
        child_axis: String,
        #[serde(default)]
        offset: Param,
        #[serde(default)]
        spin: Param,
    },
    FixedRelative {
        translation: [Param; 3],
        /// Rotation axis; ignored when the angle is zero.
        axis: [f64; 3],
        #[serde(default)]
        angle: Param,
    },
}

impl Relation {
    pub fn dof_removed(&self) -> u32 {
        match self {
            Relation::Attach { .. } => 3,
            Relation::Coaxial { .. } => 4,
            Relation::FixedRelative { .. } => 6,
        }
    }

    pub fn params_mut(&mut self) -> Vec<(&'static str, &mut Param)> {
        match self {
            Relation::Attach { offset: [a, b], spin, .. } => {
                vec![("offset_u", a), ("offset_v", b), ("spin", spin)]
            }
            Relation::Coaxial { offset, spin, .. } => vec![("offset", offset), ("spin", spin)],
            Relation::FixedRelative { translation: [x, y, z], angle, .. } => {
                vec![("tx", x), ("ty", y), ("tz", z), ("angle", angle)]
            }
        }
    }

    pub fn params(&self) -> Vec<(&'static str, &Param)> {
        match self {
            Relation::Attach { offset: [a, b], spin, .. } => {
                vec![("offset_u", a), ("offset_v", b), ("spin", spin)]
            }
            Relation::Coaxial { offset, spin, .. } => vec![("offset", offset), ("spin", spin)],
            Relation::FixedRelative { translation: [x, y, z], angle, .. } => {
                vec![("tx", x), ("ty", y), ("tz", z), ("angle", angle)]
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointKind {
    Revolute,
    Prismatic,
    Fixed,
}

/// A joint on the incoming edge of `child`. `origin` and `direction` are
/// expressed in the parent's anchor frame of that edge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointSpec {
    pub name: String,
    pub kind: JointKind,
    pub parent: String,
    pub child: String,
    #[serde(default)]
    pub origin: [Param; 3],
    pub direction: [f64; 3],
    pub range: [f64; 2],
    #[serde(default)]
    pub rest: f64,
}

/// Analytic label region: all points of the target whose quantities satisfy
/// every constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub label: String,
    pub target: String,
    /// Restricts an advanced target to parts with this role.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub part: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub patches: Vec<String>,
    #[serde(default)]
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constraint {
    /// Expression over surface quantities and the primitive's intrinsics.
    pub quantity: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<Bound>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<Bound>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Bound {
    Value(f64),
    Expr { expr: String },
}
