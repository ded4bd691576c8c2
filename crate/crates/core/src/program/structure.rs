//! Elaboration of programs into posed elementary primitives.

use super::document::*;
use super::kinematics::{joint_transform, pose_distance, Placement};
use super::templates::{find_template, Anchor, Assembly, TemplateArgs};
use super::validate::{check_validity, Diagnostic};
use super::{evaluate, ProgramError, Values};
use crate::math::{axis_angle, Pose, Vec3};
use crate::primitive::{
    ParamMap, PatchId, PrimitiveError, PrimitiveId, PrimitiveInstance, PrimitiveTemplateId,
};
use nalgebra::Translation3;
use std::collections::{BTreeMap, VecDeque};
use thiserror::Error;

/// Contact, axis and relative-pose residual tolerance.
pub const RESIDUAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StructureError {
    #[error(transparent)]
    Program(#[from] ProgramError),
    #[error("`{decl}`: {reason}")]
    InvalidParameter { decl: String, reason: String },
    #[error("`{node}`: {source}")]
    Primitive { node: String, source: PrimitiveError },
    #[error("unknown joint `{0}`")]
    UnknownJoint(String),
    #[error("joint `{joint}` value {value} outside [{lo}, {hi}]")]
    JointOutOfRange { joint: String, value: f64, lo: f64, hi: f64 },
    #[error("residual {residual:e} at `{node}` exceeds tolerance")]
    ResidualTooLarge { node: String, residual: f64 },
    #[error("invalid structure: {0:?}")]
    ElaborationCollision(Vec<Diagnostic>),
}

/// Where an instance came from.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Provenance {
    pub decl: String,
    /// Set for instances produced by an advanced template.
    pub template: Option<String>,
    pub part: Option<String>,
    pub part_role: Option<String>,
    pub repetition: Option<u32>,
}

impl Provenance {
    pub fn node_name(&self) -> String {
        match (&self.part, self.repetition) {
            (None, _) => self.decl.clone(),
            (Some(p), None) => format!("{}.{}", self.decl, p),
            (Some(p), Some(i)) => format!("{}.{}[{}]", self.decl, p, i),
        }
    }
}

/// Pose-defining link from an instance to its parent.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub parent: usize,
    pub placement: Placement,
    /// Parent-local anchor frame.
    pub anchor: Pose,
    /// Jointed anchor frame to child-local frame.
    pub mount: Pose,
    pub joint: Option<usize>,
    /// Edge authored inside an advanced template.
    pub internal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedJoint {
    pub name: String,
    pub kind: JointKind,
    pub parent: usize,
    pub child: usize,
    /// Axis point and unit direction in the anchor frame of the child's link.
    pub origin: Vec3,
    pub direction: Vec3,
    pub range: [f64; 2],
    pub rest: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Structure {
    pub category: String,
    pub instances: Vec<PrimitiveInstance>,
    pub provenance: Vec<Provenance>,
    pub links: Vec<Option<Link>>,
    /// Poses of unlinked instances.
    pub base_poses: Vec<Pose>,
    /// Parents before children.
    pub order: Vec<usize>,
    pub joints: Vec<ResolvedJoint>,
    pub joint_values: Vec<f64>,
    /// Per instance, per patch.
    pub visible: Vec<Vec<bool>>,
    /// Declarations other than the root with no incoming pose-defining edge.
    pub floating: Vec<String>,
}

fn invalid(decl: &str, reason: impl Into<String>) -> StructureError {
    StructureError::InvalidParameter {
        decl: decl.to_string(),
        reason: reason.into(),
    }
}

/// Template arguments for an advanced declaration, defaults filled in.
pub fn template_args(decl: &Declaration, values: &Values) -> Result<TemplateArgs, StructureError> {
    let a = decl.advanced().expect("advanced declaration");
    let t = find_template(&a.template).ok_or_else(|| ProgramError::UnknownTemplate(a.template.clone()))?;
    let mut dims = [0.0; 3];
    for (slot, name) in dims.iter_mut().zip(super::templates::DIMS) {
        *slot = values
            .get(&decl.name, name)
            .ok_or_else(|| invalid(&decl.name, format!("missing `{name}`")))?;
    }
    let mut params = BTreeMap::new();
    for name in a.params.keys() {
        if !t.param_names().any(|n| n == name) {
            return Err(invalid(&decl.name, format!("unexpected parameter `{name}`")));
        }
    }
    for p in t.params {
        let v = values.get(&decl.name, p.name).unwrap_or(p.default);
        if !(p.lo..=p.hi).contains(&v) {
            return Err(invalid(&decl.name, format!("`{}` = {v} outside [{}, {}]", p.name, p.lo, p.hi)));
        }
        params.insert(p.name.to_string(), v);
    }
    let mut discrete = BTreeMap::new();
    for name in a.discrete.keys() {
        if t.discrete_param(name).is_none() {
            return Err(invalid(&decl.name, format!("unexpected discrete parameter `{name}`")));
        }
    }
    for p in t.discrete {
        let v = a.discrete.get(p.name).map(|d| d.value).unwrap_or(p.default);
        if !(p.lo..=p.hi).contains(&v) {
            return Err(invalid(&decl.name, format!("`{}` = {v} outside [{}, {}]", p.name, p.lo, p.hi)));
        }
        discrete.insert(p.name.to_string(), v);
    }
    Ok(TemplateArgs { dims, params, discrete })
}

fn elementary_params(decl: &Declaration, e: &ElementaryDecl, values: &Values) -> Result<ParamMap, StructureError> {
    let mut map = ParamMap::new();
    for k in e.params.keys() {
        map.insert(k.clone(), values.get(&decl.name, k).expect("evaluated"));
    }
    for (k, v) in &e.discrete {
        map.insert(k.clone(), v.value as f64);
    }
    Ok(map)
}

struct DeclNodes {
    first: usize,
    assembly: Option<Assembly>,
}

impl DeclNodes {
    /// Instance index of the named part; the root for elementary decls.
    fn part(&self, name: &str) -> Option<usize> {
        match &self.assembly {
            None => Some(self.first),
            Some(a) => a.parts.iter().position(|p| p.name == name).map(|i| self.first + i),
        }
    }
}

/// Builds the structure at rest, validates it, then applies `joint_values`.
pub fn elaborate(
    program: &StructureProgram,
    joint_values: Option<&BTreeMap<String, f64>>,
) -> Result<Structure, StructureError> {
    let s = elaborate_unchecked(program)?;
    let diags = check_validity(&s);
    if !diags.is_empty() {
        return Err(StructureError::ElaborationCollision(diags));
    }
    match joint_values {
        None => Ok(s),
        Some(values) => {
            let mut s = s;
            for (name, v) in values {
                s = articulate(&s, name, *v)?;
            }
            Ok(s)
        }
    }
}

/// Builds and poses every instance at rest joint values, without collision
/// or floating checks.
pub fn elaborate_unchecked(program: &StructureProgram) -> Result<Structure, StructureError> {
    let values = evaluate(program)?;
    let mut instances = Vec::new();
    let mut provenance = Vec::new();
    let mut links: Vec<Option<Link>> = Vec::new();
    let mut base_poses = Vec::new();
    let mut joints = Vec::new();
    let mut nodes: BTreeMap<&str, DeclNodes> = BTreeMap::new();
    let mut pending_internal_joints = Vec::new();

    for decl in &program.declarations {
        let pose = match &decl.pose {
            Some(t) => t
                .to_pose()
                .ok_or_else(|| invalid(&decl.name, "pose quaternion is not unit length"))?,
            None => Pose::identity(),
        };
        let first = instances.len();
        let make = |id: usize, template: PrimitiveTemplateId, intrinsic: ParamMap, node: &str| {
            PrimitiveInstance::new(PrimitiveId(id as u32), template, intrinsic, Pose::identity(), decl.label.clone())
                .map_err(|source| StructureError::Primitive { node: node.to_string(), source })
        };
        match &decl.body {
            DeclBody::Elementary(e) => {
                let template = PrimitiveTemplateId::from_name(&e.template)
                    .ok_or_else(|| ProgramError::UnknownTemplate(e.template.clone()))?;
                let intrinsic = elementary_params(decl, e, &values)?;
                instances.push(make(first, template, intrinsic, &decl.name)?);
                provenance.push(Provenance {
                    decl: decl.name.clone(),
                    template: None,
                    part: None,
                    part_role: None,
                    repetition: None,
                });
                links.push(None);
                base_poses.push(pose);
                nodes.insert(&decl.name, DeclNodes { first, assembly: None });
            }
            DeclBody::Advanced(a) => {
                let t = find_template(&a.template).expect("checked by parse");
                let args = template_args(decl, &values)?;
                let asm = t.build(&args).map_err(|r| invalid(&decl.name, r))?;
                for (i, part) in asm.parts.iter().enumerate() {
                    let prov = Provenance {
                        decl: decl.name.clone(),
                        template: Some(a.template.clone()),
                        part: Some(part.name.to_string()),
                        part_role: Some(part.role.to_string()),
                        repetition: part.repetition,
                    };
                    instances.push(make(first + i, part.template, part.intrinsic.clone(), &prov.node_name())?);
                    provenance.push(prov);
                    links.push(None);
                    base_poses.push(if i == 0 { pose } else { Pose::identity() });
                }
                for e in &asm.edges {
                    let (p, c) = (first + e.parent, first + e.child);
                    links[c] = Some(Link {
                        parent: p,
                        anchor: e.placement.anchor(&instances[p].shape).map_err(|source| {
                            StructureError::Primitive { node: provenance[p].node_name(), source }
                        })?,
                        mount: e.placement.mount(&instances[c].shape).map_err(|source| {
                            StructureError::Primitive { node: provenance[c].node_name(), source }
                        })?,
                        placement: e.placement.clone(),
                        joint: None,
                        internal: true,
                    });
                }
                for j in &asm.joints {
                    pending_internal_joints.push((decl.name.clone(), first + j.part, j.clone()));
                }
                nodes.insert(&decl.name, DeclNodes { first, assembly: Some(asm) });
            }
        }
    }

    let decl_by_name: BTreeMap<&str, &Declaration> =
        program.declarations.iter().map(|d| (d.name.as_str(), d)).collect();

    // resolves an anchor name of a declaration to (instance, patch or axis)
    let resolve = |decl: &str, anchor: &str, axis: bool, instances: &[PrimitiveInstance]| {
        let d = decl_by_name[decl];
        let n = &nodes[decl];
        let fail = || ProgramError::UnknownAnchor { decl: decl.to_string(), anchor: anchor.to_string() };
        let (idx, name) = match d.advanced() {
            None => (n.first, anchor.to_string()),
            Some(a) => {
                let t = find_template(&a.template).expect("checked by parse");
                match (t.anchor(anchor), axis) {
                    (Some(Anchor::Face { part, patch }), false) => (n.part(part).ok_or_else(fail)?, patch.to_string()),
                    (Some(Anchor::Axis { part, axis }), true) => (n.part(part).ok_or_else(fail)?, axis.to_string()),
                    _ => return Err(StructureError::from(fail())),
                }
            }
        };
        if axis {
            instances[idx].shape.axis_frame(&name).map_err(|_| fail())?;
            Ok((idx, None, name))
        } else {
            let patch = instances[idx].shape.patch_by_name(&name).map_err(|_| fail())?;
            Ok((idx, Some(patch), name))
        }
    };

    for edge in &program.connectivity {
        let child_root = nodes[edge.child.as_str()].first;
        let parent_root = nodes[edge.parent.as_str()].first;
        let (parent, placement) = match &edge.relation {
            Relation::Attach { parent_face, child_face, offset, spin } => {
                let (p, pp, _) = resolve(&edge.parent, parent_face, false, &instances)?;
                let (c, cp, _) = resolve(&edge.child, child_face, false, &instances)?;
                if c != child_root {
                    return Err(invalid(&edge.child, format!("anchor `{child_face}` is not on the root part")));
                }
                (
                    p,
                    Placement::Attach {
                        parent_patch: pp.expect("face"),
                        child_patch: cp.expect("face"),
                        offset: [values.eval(&offset[0])?, values.eval(&offset[1])?],
                        spin: values.eval(spin)?,
                    },
                )
            }
            Relation::Coaxial { parent_axis, child_axis, offset, spin } => {
                let (p, _, pa) = resolve(&edge.parent, parent_axis, true, &instances)?;
                let (c, _, ca) = resolve(&edge.child, child_axis, true, &instances)?;
                if c != child_root {
                    return Err(invalid(&edge.child, format!("axis `{child_axis}` is not on the root part")));
                }
                (
                    p,
                    Placement::Coaxial {
                        parent_axis: pa,
                        child_axis: ca,
                        offset: values.eval(offset)?,
                        spin: values.eval(spin)?,
                    },
                )
            }
            Relation::FixedRelative { translation, axis, angle } => {
                let t = Translation3::new(
                    values.eval(&translation[0])?,
                    values.eval(&translation[1])?,
                    values.eval(&translation[2])?,
                );
                let rot = axis_angle(Vec3::from(*axis), values.eval(angle)?);
                (parent_root, Placement::Fixed(Pose::from_parts(t, rot)))
            }
        };
        let anchor = placement
            .anchor(&instances[parent].shape)
            .map_err(|source| StructureError::Primitive { node: edge.parent.clone(), source })?;
        let mount = placement
            .mount(&instances[child_root].shape)
            .map_err(|source| StructureError::Primitive { node: edge.child.clone(), source })?;
        links[child_root] = Some(Link { parent, placement, anchor, mount, joint: None, internal: false });
    }

    for j in &program.joints {
        let child = nodes[j.child.as_str()].first;
        let link = links[child].as_mut().expect("checked by parse");
        let origin = Vec3::new(values.eval(&j.origin[0])?, values.eval(&j.origin[1])?, values.eval(&j.origin[2])?);
        let direction = Vec3::from(j.direction);
        joints.push(ResolvedJoint {
            name: j.name.clone(),
            kind: j.kind,
            parent: link.parent,
            child,
            origin,
            direction: if direction.norm() > 0.0 { direction.normalize() } else { Vec3::z() },
            range: j.range,
            rest: j.rest,
        });
        link.joint = Some(joints.len() - 1);
    }
    for (decl, child, j) in pending_internal_joints {
        let name = format!("{decl}.{}", j.name);
        // a template used unmounted has no edge for its mounting joint
        let Some(link) = links[child].as_mut() else { continue };
        if link.joint.is_some() {
            return Err(invalid(&decl, format!("joint `{}` conflicts with a program joint", j.name)));
        }
        joints.push(ResolvedJoint {
            name,
            kind: j.kind,
            parent: link.parent,
            child,
            origin: j.origin,
            direction: j.direction.normalize(),
            range: j.range,
            rest: 0.0f64.clamp(j.range[0], j.range[1]),
        });
        link.joint = Some(joints.len() - 1);
    }

    let mut children: Vec<Vec<usize>> = vec![Vec::new(); instances.len()];
    for (i, l) in links.iter().enumerate() {
        if let Some(l) = l {
            children[l.parent].push(i);
        }
    }
    let mut order = Vec::with_capacity(instances.len());
    let mut queue: VecDeque<usize> = (0..instances.len()).filter(|&i| links[i].is_none()).collect();
    while let Some(i) = queue.pop_front() {
        order.push(i);
        queue.extend(children[i].iter().copied());
    }
    if order.len() != instances.len() {
        let stuck = (0..instances.len()).find(|i| !order.contains(i)).unwrap_or(0);
        return Err(ProgramError::CyclicConnectivity(provenance[stuck].node_name()).into());
    }

    let mut visible: Vec<Vec<bool>> = instances.iter().map(|i| vec![true; i.shape.patch_count()]).collect();
    for (c, l) in links.iter().enumerate() {
        if let Some(Link { parent, placement: Placement::Attach { parent_patch, child_patch, .. }, .. }) = l {
            visible[*parent][parent_patch.0 as usize] = false;
            visible[c][child_patch.0 as usize] = false;
        }
    }

    let floating = program
        .declarations
        .iter()
        .filter(|d| d.name != program.root && links[nodes[d.name.as_str()].first].is_none())
        .map(|d| d.name.clone())
        .collect();

    let joint_values = joints.iter().map(|j| j.rest).collect();
    let mut s = Structure {
        category: program.category.clone(),
        instances,
        provenance,
        links,
        base_poses,
        order,
        joints,
        joint_values,
        visible,
        floating,
    };
    s.update_poses();
    if let Some((i, r)) = s
        .residuals()
        .into_iter()
        .find(|(_, r)| r.is_nan() || *r > RESIDUAL_TOL)
    {
        return Err(StructureError::ResidualTooLarge { node: s.provenance[i].node_name(), residual: r });
    }
    Ok(s)
}

impl Structure {
    fn joint_pose(&self, j: usize) -> Pose {
        let joint = &self.joints[j];
        joint_transform(joint.kind, &joint.origin, &joint.direction, self.joint_values[j])
    }

    /// Recomputes every pose from links and current joint values.
    pub fn update_poses(&mut self) {
        for k in 0..self.order.len() {
            let i = self.order[k];
            let pose = match &self.links[i] {
                None => self.base_poses[i],
                Some(l) => {
                    let j = l.joint.map(|j| self.joint_pose(j)).unwrap_or_else(Pose::identity);
                    self.instances[l.parent].pose * l.anchor * j * l.mount
                }
            };
            self.instances[i].pose = pose;
        }
    }

    /// Geometric residual of every link, measured on the current poses.
    pub fn residuals(&self) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        for (c, l) in self.links.iter().enumerate() {
            let Some(l) = l else { continue };
            let parent = &self.instances[l.parent];
            let child = &self.instances[c];
            let j = l.joint.map(|j| self.joint_pose(j)).unwrap_or_else(Pose::identity);
            let a = parent.pose * l.anchor * j;
            let r = match &l.placement {
                Placement::Attach { child_patch, .. } => match child.shape.face_frame(*child_patch) {
                    Ok(f) => {
                        let cf = child.pose * f;
                        let an = a.rotation * Vec3::z();
                        let d = cf.translation.vector - a.translation.vector;
                        let gap = d.dot(&an);
                        let in_plane = (d - gap * an).norm();
                        let normal = (cf.rotation * Vec3::z() + an).norm();
                        let tangent = (cf.rotation * Vec3::x() - a.rotation * Vec3::x()).norm();
                        gap.abs().max(in_plane).max(normal).max(tangent)
                    }
                    Err(_) => f64::INFINITY,
                },
                Placement::Coaxial { child_axis, .. } => match child.shape.axis_frame(child_axis) {
                    Ok(f) => {
                        let cf = child.pose * f;
                        let az = a.rotation * Vec3::z();
                        let cz = cf.rotation * Vec3::z();
                        let d = cf.translation.vector - a.translation.vector;
                        let radial = (d - d.dot(&az) * az).norm();
                        let angle = cz.cross(&az).norm() + if cz.dot(&az) < 0.0 { 1.0 } else { 0.0 };
                        radial.max(d.dot(&az).abs()).max(angle)
                    }
                    Err(_) => f64::INFINITY,
                },
                Placement::Fixed(_) => pose_distance(&child.pose, &a),
            };
            out.push((c, r));
        }
        out
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joints.iter().position(|j| j.name == name)
    }

    /// Whether instance `i` lies in the subtree rooted at `root`.
    pub fn in_subtree(&self, root: usize, mut i: usize) -> bool {
        loop {
            if i == root {
                return true;
            }
            match &self.links[i] {
                Some(l) => i = l.parent,
                None => return false,
            }
        }
    }

    pub fn node_names(&self) -> Vec<String> {
        self.provenance.iter().map(Provenance::node_name).collect()
    }

    /// Instances produced by a declaration.
    pub fn instances_of(&self, decl: &str) -> Vec<usize> {
        (0..self.instances.len()).filter(|&i| self.provenance[i].decl == decl).collect()
    }

    pub fn is_visible(&self, instance: usize, patch: PatchId) -> bool {
        self.visible[instance].get(patch.0 as usize).copied().unwrap_or(false)
    }

    /// Same structure with all joints at their rest values.
    pub fn at_rest(&self) -> Structure {
        let mut s = self.clone();
        for (v, j) in s.joint_values.iter_mut().zip(&s.joints) {
            *v = j.rest;
        }
        s.update_poses();
        s
    }

    /// Poses of every instance with all joints at rest.
    pub fn rest_poses(&self) -> Vec<Pose> {
        self.at_rest().instances.iter().map(|i| i.pose).collect()
    }
}

/// Sets one joint value and re-poses the joint's subtree.
pub fn articulate(structure: &Structure, joint: &str, value: f64) -> Result<Structure, StructureError> {
    let j = structure
        .joint_index(joint)
        .ok_or_else(|| StructureError::UnknownJoint(joint.to_string()))?;
    let [lo, hi] = structure.joints[j].range;
    if !(lo..=hi).contains(&value) {
        return Err(StructureError::JointOutOfRange { joint: joint.to_string(), value, lo, hi });
    }
    let mut s = structure.clone();
    s.joint_values[j] = value;
    s.update_poses();
    Ok(s)
}
