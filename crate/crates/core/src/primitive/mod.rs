//! Elementary primitive templates and their analytic surfaces.
//!
//! Every primitive lives in a local frame centered on its bounding box, with
//! its symmetry axis (if any) along local z. Each surface patch is
//! parameterized over `(u, v) ∈ [0,1]²`:
//!
//! | template | patch        | mapping |
//! |----------|--------------|---------|
//! | Cuboid   | px nx py ny pz nz | x faces `(u,v) → (y,z)`, y faces `(z,x)`, z faces `(x,y)`; opposite faces share axes |
//! | Cylinder | lateral      | `φ = 2πu`, `z = (v − ½)h` |
//! | Cylinder | top_cap, bottom_cap | `φ = 2πu`, `ρ = v r` |
//! | Sphere   | surface      | `φ = 2πu`, `θ = πv` (θ polar from +z) |
//! | Torus    | surface      | `φ = 2πu` around z, `ψ = 2πv` around the tube |
//! | PrismN   | side_k       | `u` along side k, `z = (v − ½)h` |
//! | PrismN   | top_cap, bottom_cap | `u` selects the fan sector `⌊u n⌋`, `v` the radial fraction |
//!
//! The surface tangent is always `∂p/∂u` normalized; on the degenerate rows
//! (poles, cap centers) it is the limit along a fixed meridian.

mod prism;
pub mod sampling;

pub use prism::{Prism, Side};
pub use sampling::{sample_surface, SurfaceSample};

use crate::math::{frame_pose, Pose, Pt3, RigidTransform, Vec3};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fmt;
use thiserror::Error;

pub type ParamMap = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PrimitiveError {
    #[error("missing parameter `{0}`")]
    MissingParameter(String),
    #[error("unexpected parameter `{0}`")]
    UnexpectedParameter(String),
    #[error("parameter `{0}` out of range")]
    OutOfRange(String),
    #[error("quaternion is not unit length")]
    NonUnitQuaternion,
    #[error("unknown patch `{0}`")]
    UnknownPatch(String),
    #[error("surface parameter ({0}, {1}) outside [0,1]²")]
    ParameterOutOfDomain(f64, f64),
    #[error("patch `{0}` is not planar")]
    NotPlanar(String),
    #[error("unknown axis `{0}`")]
    UnknownAxis(String),
    #[error("no visible surface with positive area")]
    NoVisibleSurface,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PrimitiveTemplateId {
    Cuboid,
    Cylinder,
    Sphere,
    Torus,
    PrismN,
}

impl PrimitiveTemplateId {
    pub const ALL: [PrimitiveTemplateId; 5] = [
        PrimitiveTemplateId::Cuboid,
        PrimitiveTemplateId::Cylinder,
        PrimitiveTemplateId::Sphere,
        PrimitiveTemplateId::Torus,
        PrimitiveTemplateId::PrismN,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PrimitiveTemplateId::Cuboid => "Cuboid",
            PrimitiveTemplateId::Cylinder => "Cylinder",
            PrimitiveTemplateId::Sphere => "Sphere",
            PrimitiveTemplateId::Torus => "Torus",
            PrimitiveTemplateId::PrismN => "PrismN",
        }
    }

    pub fn from_name(name: &str) -> Option<PrimitiveTemplateId> {
        Self::ALL.into_iter().find(|t| t.name() == name)
    }

    /// Continuous intrinsic parameters, in meters unless noted.
    pub fn continuous_params(self) -> &'static [&'static str] {
        match self {
            PrimitiveTemplateId::Cuboid => &["size_x", "size_y", "size_z"],
            PrimitiveTemplateId::Cylinder => &["radius", "height"],
            PrimitiveTemplateId::Sphere => &["radius"],
            PrimitiveTemplateId::Torus => &["major_radius", "minor_radius"],
            // arc_bulge: sagitta as a fraction of the chord, in [0, 0.2]
            PrimitiveTemplateId::PrismN => &["width", "depth", "height", "arc_bulge"],
        }
    }

    /// Integer intrinsic parameters with their allowed range.
    pub fn discrete_params(self) -> &'static [(&'static str, i64, i64)] {
        match self {
            PrimitiveTemplateId::PrismN => &[("side_count", 3, 8), ("arc_sides", 0, 8)],
            _ => &[],
        }
    }

    pub fn param_names(self) -> impl Iterator<Item = &'static str> {
        self.continuous_params()
            .iter()
            .copied()
            .chain(self.discrete_params().iter().map(|d| d.0))
    }
}

impl fmt::Display for PrimitiveTemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PrimitiveId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PatchId(pub u16);

pub const CUBOID_FACES: [&str; 6] = ["px", "nx", "py", "ny", "pz", "nz"];
pub const CYLINDER_LATERAL: PatchId = PatchId(0);
pub const CYLINDER_TOP: PatchId = PatchId(1);
pub const CYLINDER_BOTTOM: PatchId = PatchId(2);
pub const PRISM_TOP: PatchId = PatchId(0);
pub const PRISM_BOTTOM: PatchId = PatchId(1);

/// Resolved shape with parameters unpacked.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Cuboid { size: Vec3 },
    Cylinder { radius: f64, height: f64 },
    Sphere { radius: f64 },
    Torus { major: f64, minor: f64 },
    Prism(Prism),
}

/// Local surface frame. `tangent × bitangent = normal` is not assumed;
/// `bitangent = normal × tangent`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceFrame {
    pub normal: Vec3,
    pub tangent: Vec3,
    pub bitangent: Vec3,
    /// Set on parameterization singularities, where the tangent is a limit.
    pub singular: bool,
}

impl SurfaceFrame {
    fn new(normal: Vec3, tangent: Vec3, singular: bool) -> Self {
        SurfaceFrame {
            normal,
            tangent,
            bitangent: normal.cross(&tangent),
            singular,
        }
    }

    fn transformed(&self, pose: &Pose) -> Self {
        SurfaceFrame {
            normal: pose.rotation * self.normal,
            tangent: pose.rotation * self.tangent,
            bitangent: pose.rotation * self.bitangent,
            singular: self.singular,
        }
    }

    /// Rows (n, t, b): maps world vectors into frame coordinates.
    pub fn to_local(&self, v: &Vec3) -> Vec3 {
        Vec3::new(self.normal.dot(v), self.tangent.dot(v), self.bitangent.dot(v))
    }

    pub fn to_world(&self, c: &Vec3) -> Vec3 {
        self.normal * c.x + self.tangent * c.y + self.bitangent * c.z
    }
}

fn cyl(phi: f64) -> (f64, f64) {
    (phi.cos(), phi.sin())
}

impl Shape {
    pub fn template(&self) -> PrimitiveTemplateId {
        match self {
            Shape::Cuboid { .. } => PrimitiveTemplateId::Cuboid,
            Shape::Cylinder { .. } => PrimitiveTemplateId::Cylinder,
            Shape::Sphere { .. } => PrimitiveTemplateId::Sphere,
            Shape::Torus { .. } => PrimitiveTemplateId::Torus,
            Shape::Prism(_) => PrimitiveTemplateId::PrismN,
        }
    }

    pub fn patch_count(&self) -> usize {
        match self {
            Shape::Cuboid { .. } => 6,
            Shape::Cylinder { .. } => 3,
            Shape::Sphere { .. } | Shape::Torus { .. } => 1,
            Shape::Prism(p) => 2 + p.side_count,
        }
    }

    pub fn patches(&self) -> impl Iterator<Item = PatchId> {
        (0..self.patch_count() as u16).map(PatchId)
    }

    pub fn patch_name(&self, patch: PatchId) -> String {
        let i = patch.0 as usize;
        match self {
            Shape::Cuboid { .. } => CUBOID_FACES[i].to_string(),
            Shape::Cylinder { .. } => ["lateral", "top_cap", "bottom_cap"][i].to_string(),
            Shape::Sphere { .. } | Shape::Torus { .. } => "surface".to_string(),
            Shape::Prism(_) => match i {
                0 => "top_cap".to_string(),
                1 => "bottom_cap".to_string(),
                k => format!("side_{}", k - 2),
            },
        }
    }

    pub fn patch_by_name(&self, name: &str) -> Result<PatchId, PrimitiveError> {
        self.patches()
            .find(|p| self.patch_name(*p) == name)
            .ok_or_else(|| PrimitiveError::UnknownPatch(name.to_string()))
    }

    fn check(&self, patch: PatchId, u: f64, v: f64) -> Result<(), PrimitiveError> {
        if patch.0 as usize >= self.patch_count() {
            return Err(PrimitiveError::UnknownPatch(format!("#{}", patch.0)));
        }
        if !(0.0..=1.0).contains(&u) || !(0.0..=1.0).contains(&v) {
            return Err(PrimitiveError::ParameterOutOfDomain(u, v));
        }
        Ok(())
    }

    /// Cuboid face axes: (normal axis, sign, u axis, v axis).
    pub(crate) fn cuboid_face(patch: PatchId) -> (usize, f64, usize, usize) {
        let i = patch.0 as usize;
        let axis = i / 2;
        let sign = if i.is_multiple_of(2) { 1.0 } else { -1.0 };
        (axis, sign, (axis + 1) % 3, (axis + 2) % 3)
    }

    pub fn local_point(&self, patch: PatchId, u: f64, v: f64) -> Result<Pt3, PrimitiveError> {
        self.check(patch, u, v)?;
        Ok(self.local_point_unchecked(patch, u, v))
    }

    pub(crate) fn local_point_unchecked(&self, patch: PatchId, u: f64, v: f64) -> Pt3 {
        match self {
            Shape::Cuboid { size } => {
                let (a, s, ua, va) = Self::cuboid_face(patch);
                let mut p = Pt3::origin();
                p[a] = s * size[a] / 2.0;
                p[ua] = (u - 0.5) * size[ua];
                p[va] = (v - 0.5) * size[va];
                p
            }
            Shape::Cylinder { radius, height } => {
                let (c, s) = cyl(TAU * u);
                match patch.0 {
                    0 => Pt3::new(radius * c, radius * s, (v - 0.5) * height),
                    1 => Pt3::new(v * radius * c, v * radius * s, height / 2.0),
                    _ => Pt3::new(v * radius * c, v * radius * s, -height / 2.0),
                }
            }
            Shape::Sphere { radius } => {
                let (c, s) = cyl(TAU * u);
                let (st, ct) = (PI * v).sin_cos();
                Pt3::new(radius * st * c, radius * st * s, radius * ct)
            }
            Shape::Torus { major, minor } => {
                let (c, s) = cyl(TAU * u);
                let (sp, cp) = (TAU * v).sin_cos();
                let ring = major + minor * cp;
                Pt3::new(ring * c, ring * s, minor * sp)
            }
            Shape::Prism(p) => match patch.0 {
                0 | 1 => {
                    let (k, t) = p.cap_boundary(u);
                    let b = p.sides[k].point(t);
                    let z = if patch.0 == 0 { p.height / 2.0 } else { -p.height / 2.0 };
                    Pt3::new(v * b[0], v * b[1], z)
                }
                k => {
                    let b = p.sides[k as usize - 2].point(u);
                    Pt3::new(b[0], b[1], (v - 0.5) * p.height)
                }
            },
        }
    }

    pub fn local_frame(&self, patch: PatchId, u: f64, v: f64) -> Result<SurfaceFrame, PrimitiveError> {
        self.check(patch, u, v)?;
        Ok(self.local_frame_unchecked(patch, u, v))
    }

    pub(crate) fn local_frame_unchecked(&self, patch: PatchId, u: f64, v: f64) -> SurfaceFrame {
        let meridian = |phi: f64| {
            let (c, s) = cyl(phi);
            Vec3::new(-s, c, 0.0)
        };
        match self {
            Shape::Cuboid { .. } => {
                let (a, s, ua, _) = Self::cuboid_face(patch);
                let mut n = Vec3::zeros();
                n[a] = s;
                let mut t = Vec3::zeros();
                t[ua] = 1.0;
                SurfaceFrame::new(n, t, false)
            }
            Shape::Cylinder { .. } => {
                let phi = TAU * u;
                let (c, s) = cyl(phi);
                match patch.0 {
                    0 => SurfaceFrame::new(Vec3::new(c, s, 0.0), meridian(phi), false),
                    1 => SurfaceFrame::new(Vec3::z(), meridian(phi), v == 0.0),
                    _ => SurfaceFrame::new(-Vec3::z(), meridian(phi), v == 0.0),
                }
            }
            Shape::Sphere { .. } => {
                let phi = TAU * u;
                let (c, s) = cyl(phi);
                let (st, ct) = (PI * v).sin_cos();
                let n = Vec3::new(st * c, st * s, ct);
                SurfaceFrame::new(n, meridian(phi), v == 0.0 || v == 1.0)
            }
            Shape::Torus { .. } => {
                let phi = TAU * u;
                let (c, s) = cyl(phi);
                let (sp, cp) = (TAU * v).sin_cos();
                SurfaceFrame::new(Vec3::new(cp * c, cp * s, sp), meridian(phi), false)
            }
            Shape::Prism(p) => match patch.0 {
                0 | 1 => {
                    let (k, t) = p.cap_boundary(u);
                    let d = p.sides[k].derivative(t);
                    let tan = Vec3::new(d[0], d[1], 0.0).normalize();
                    let n = if patch.0 == 0 { Vec3::z() } else { -Vec3::z() };
                    SurfaceFrame::new(n, tan, v == 0.0)
                }
                k => {
                    let side = &p.sides[k as usize - 2];
                    let d = side.derivative(u);
                    let n = side.normal(u);
                    SurfaceFrame::new(
                        Vec3::new(n[0], n[1], 0.0),
                        Vec3::new(d[0], d[1], 0.0).normalize(),
                        false,
                    )
                }
            },
        }
    }

    pub fn patch_area(&self, patch: PatchId) -> f64 {
        match self {
            Shape::Cuboid { size } => {
                let (_, _, ua, va) = Self::cuboid_face(patch);
                size[ua] * size[va]
            }
            Shape::Cylinder { radius, height } => match patch.0 {
                0 => TAU * radius * height,
                _ => PI * radius * radius,
            },
            Shape::Sphere { radius } => 4.0 * PI * radius * radius,
            Shape::Torus { major, minor } => 4.0 * PI * PI * major * minor,
            Shape::Prism(p) => match patch.0 {
                0 | 1 => p.cap_area(),
                k => p.sides[k as usize - 2].length() * p.height,
            },
        }
    }

    pub fn total_area(&self) -> f64 {
        self.patches().map(|p| self.patch_area(p)).sum()
    }

    /// Whether the patch is flat, i.e. usable as an attachment face.
    pub fn is_planar(&self, patch: PatchId) -> bool {
        match self {
            Shape::Cuboid { .. } => true,
            Shape::Cylinder { .. } => patch.0 != 0,
            Shape::Sphere { .. } | Shape::Torus { .. } => false,
            Shape::Prism(p) => patch.0 < 2 || !p.sides[patch.0 as usize - 2].is_arc(),
        }
    }

    /// Attachment frame of a planar patch in local coordinates: origin at the
    /// face's reference point, x along the face tangent, z along the outward
    /// normal.
    pub fn face_frame(&self, patch: PatchId) -> Result<Pose, PrimitiveError> {
        if patch.0 as usize >= self.patch_count() {
            return Err(PrimitiveError::UnknownPatch(format!("#{}", patch.0)));
        }
        if !self.is_planar(patch) {
            return Err(PrimitiveError::NotPlanar(self.patch_name(patch)));
        }
        let (origin, tangent, normal) = match self {
            Shape::Cuboid { .. } => {
                let f = self.local_frame_unchecked(patch, 0.5, 0.5);
                (self.local_point_unchecked(patch, 0.5, 0.5), f.tangent, f.normal)
            }
            Shape::Cylinder { height, .. } => {
                let z = if patch.0 == 1 { height / 2.0 } else { -height / 2.0 };
                let n = if patch.0 == 1 { Vec3::z() } else { -Vec3::z() };
                (Pt3::new(0.0, 0.0, z), Vec3::x(), n)
            }
            Shape::Prism(p) => match patch.0 {
                0 | 1 => {
                    let z = if patch.0 == 0 { p.height / 2.0 } else { -p.height / 2.0 };
                    let n = if patch.0 == 0 { Vec3::z() } else { -Vec3::z() };
                    (Pt3::new(0.0, 0.0, z), Vec3::x(), n)
                }
                _ => {
                    let f = self.local_frame_unchecked(patch, 0.5, 0.5);
                    (self.local_point_unchecked(patch, 0.5, 0.5), f.tangent, f.normal)
                }
            },
            Shape::Sphere { .. } | Shape::Torus { .. } => unreachable!("checked planar"),
        };
        Ok(frame_pose(origin, tangent, normal.cross(&tangent), normal))
    }

    /// Coaxial reference frame: origin at the center, z along the named axis.
    pub fn axis_frame(&self, axis: &str) -> Result<Pose, PrimitiveError> {
        let o = Pt3::origin();
        match (self, axis) {
            (_, "z") => Ok(Pose::identity()),
            (Shape::Cuboid { .. }, "x") => Ok(frame_pose(o, Vec3::y(), Vec3::z(), Vec3::x())),
            (Shape::Cuboid { .. }, "y") => Ok(frame_pose(o, Vec3::z(), Vec3::x(), Vec3::y())),
            _ => Err(PrimitiveError::UnknownAxis(axis.to_string())),
        }
    }

    /// Max of p·d over the solid, for a local direction `d`.
    pub fn support(&self, d: &Vec3) -> f64 {
        match self {
            Shape::Cuboid { size } => {
                (d.x.abs() * size.x + d.y.abs() * size.y + d.z.abs() * size.z) / 2.0
            }
            Shape::Cylinder { radius, height } => {
                radius * d.x.hypot(d.y) + d.z.abs() * height / 2.0
            }
            Shape::Sphere { radius } => radius * d.norm(),
            Shape::Torus { major, minor } => major * d.x.hypot(d.y) + minor * d.norm(),
            Shape::Prism(p) => p.support([d.x, d.y, d.z]),
        }
    }

    /// Tight axis-aligned bounds in the local frame.
    pub fn local_bounds(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::zeros();
        let mut hi = Vec3::zeros();
        for a in 0..3 {
            let mut d = Vec3::zeros();
            d[a] = 1.0;
            hi[a] = self.support(&d);
            lo[a] = -self.support(&-d);
        }
        (lo, hi)
    }
}

/// A posed elementary primitive.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimitiveInstance {
    pub id: PrimitiveId,
    pub template: PrimitiveTemplateId,
    pub intrinsic: ParamMap,
    pub shape: Shape,
    pub pose: Pose,
    pub semantic_label: String,
}

fn require(params: &ParamMap, name: &str) -> Result<f64, PrimitiveError> {
    params
        .get(name)
        .copied()
        .ok_or_else(|| PrimitiveError::MissingParameter(name.to_string()))
}

fn positive(params: &ParamMap, name: &str) -> Result<f64, PrimitiveError> {
    let v = require(params, name)?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(PrimitiveError::OutOfRange(name.to_string()))
    }
}

/// Validates intrinsic parameters and builds the shape.
pub fn build_shape(template: PrimitiveTemplateId, params: &ParamMap) -> Result<Shape, PrimitiveError> {
    for name in params.keys() {
        if !template.param_names().any(|n| n == name) {
            return Err(PrimitiveError::UnexpectedParameter(name.clone()));
        }
    }
    Ok(match template {
        PrimitiveTemplateId::Cuboid => Shape::Cuboid {
            size: Vec3::new(
                positive(params, "size_x")?,
                positive(params, "size_y")?,
                positive(params, "size_z")?,
            ),
        },
        PrimitiveTemplateId::Cylinder => Shape::Cylinder {
            radius: positive(params, "radius")?,
            height: positive(params, "height")?,
        },
        PrimitiveTemplateId::Sphere => Shape::Sphere {
            radius: positive(params, "radius")?,
        },
        PrimitiveTemplateId::Torus => {
            let major = positive(params, "major_radius")?;
            let minor = positive(params, "minor_radius")?;
            if minor >= major {
                return Err(PrimitiveError::OutOfRange("minor_radius".into()));
            }
            Shape::Torus { major, minor }
        }
        PrimitiveTemplateId::PrismN => {
            let mut ints = [0usize; 2];
            for (slot, (name, lo, hi)) in ints.iter_mut().zip(template.discrete_params()) {
                let v = require(params, name)?;
                if v.fract() != 0.0 || v < *lo as f64 || v > *hi as f64 {
                    return Err(PrimitiveError::OutOfRange(name.to_string()));
                }
                *slot = v as usize;
            }
            let [side_count, arc_sides] = ints;
            if arc_sides > side_count {
                return Err(PrimitiveError::OutOfRange("arc_sides".into()));
            }
            let bulge = require(params, "arc_bulge")?;
            if !(0.0..=0.2).contains(&bulge) {
                return Err(PrimitiveError::OutOfRange("arc_bulge".into()));
            }
            Shape::Prism(Prism::new(
                side_count,
                positive(params, "width")?,
                positive(params, "depth")?,
                positive(params, "height")?,
                arc_sides,
                bulge,
            ))
        }
    })
}

/// Constructs a validated primitive with an identity id and empty label.
pub fn instantiate_primitive(
    template: PrimitiveTemplateId,
    intrinsic: &ParamMap,
    pose: &RigidTransform,
) -> Result<PrimitiveInstance, PrimitiveError> {
    let pose = pose.to_pose().ok_or(PrimitiveError::NonUnitQuaternion)?;
    PrimitiveInstance::new(PrimitiveId(0), template, intrinsic.clone(), pose, String::new())
}

impl PrimitiveInstance {
    pub fn new(
        id: PrimitiveId,
        template: PrimitiveTemplateId,
        intrinsic: ParamMap,
        pose: Pose,
        semantic_label: String,
    ) -> Result<Self, PrimitiveError> {
        let shape = build_shape(template, &intrinsic)?;
        Ok(PrimitiveInstance {
            id,
            template,
            intrinsic,
            shape,
            pose,
            semantic_label,
        })
    }

    pub fn patches(&self) -> impl Iterator<Item = PatchId> {
        self.shape.patches()
    }

    pub fn patch_by_name(&self, name: &str) -> Result<PatchId, PrimitiveError> {
        self.shape.patch_by_name(name)
    }

    pub fn surface_point(&self, patch: PatchId, u: f64, v: f64) -> Result<Pt3, PrimitiveError> {
        Ok(self.pose * self.shape.local_point(patch, u, v)?)
    }

    pub fn surface_frame(&self, patch: PatchId, u: f64, v: f64) -> Result<SurfaceFrame, PrimitiveError> {
        Ok(self.shape.local_frame(patch, u, v)?.transformed(&self.pose))
    }

    /// Area of one patch, or of the whole surface when `patch` is `None`.
    pub fn surface_area(&self, patch: Option<PatchId>) -> Result<f64, PrimitiveError> {
        match patch {
            None => Ok(self.shape.total_area()),
            Some(p) if (p.0 as usize) < self.shape.patch_count() => Ok(self.shape.patch_area(p)),
            Some(p) => Err(PrimitiveError::UnknownPatch(format!("#{}", p.0))),
        }
    }

    /// Support value along a world direction.
    pub fn world_support(&self, d: &Vec3) -> f64 {
        let local = self.pose.rotation.inverse() * d;
        d.dot(&self.pose.translation.vector) + self.shape.support(&local)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(pairs: &[(&str, f64)]) -> ParamMap {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn inst(t: PrimitiveTemplateId, p: &[(&str, f64)]) -> PrimitiveInstance {
        instantiate_primitive(t, &params(p), &RigidTransform::default()).unwrap()
    }

    #[test]
    fn cylinder_patches() {
        let c = inst(PrimitiveTemplateId::Cylinder, &[("radius", 0.1), ("height", 0.3)]);
        let names: Vec<_> = c.patches().map(|p| c.shape.patch_name(p)).collect();
        assert_eq!(names, ["lateral", "top_cap", "bottom_cap"]);
    }

    #[test]
    fn construction_errors() {
        let bad = instantiate_primitive(
            PrimitiveTemplateId::Cylinder,
            &params(&[("radius", -1.0), ("height", 0.3)]),
            &RigidTransform::default(),
        );
        assert_eq!(bad.unwrap_err(), PrimitiveError::OutOfRange("radius".into()));
        let bad = instantiate_primitive(
            PrimitiveTemplateId::Torus,
            &params(&[("major_radius", 0.05), ("minor_radius", 0.06)]),
            &RigidTransform::default(),
        );
        assert_eq!(bad.unwrap_err(), PrimitiveError::OutOfRange("minor_radius".into()));
        let bad = instantiate_primitive(
            PrimitiveTemplateId::Sphere,
            &ParamMap::new(),
            &RigidTransform::default(),
        );
        assert_eq!(bad.unwrap_err(), PrimitiveError::MissingParameter("radius".into()));
        let bad = instantiate_primitive(
            PrimitiveTemplateId::Sphere,
            &params(&[("radius", 1.0)]),
            &RigidTransform {
                translation: [0.0; 3],
                rotation: [2.0, 0.0, 0.0, 0.0],
            },
        );
        assert_eq!(bad.unwrap_err(), PrimitiveError::NonUnitQuaternion);
        let bad = instantiate_primitive(
            PrimitiveTemplateId::PrismN,
            &params(&[
                ("width", 1.0),
                ("depth", 1.0),
                ("height", 1.0),
                ("arc_bulge", 0.1),
                ("side_count", 2.0),
                ("arc_sides", 0.0),
            ]),
            &RigidTransform::default(),
        );
        assert_eq!(bad.unwrap_err(), PrimitiveError::OutOfRange("side_count".into()));
    }

    #[test]
    fn sphere_points_follow_polar_formula() {
        let s = inst(PrimitiveTemplateId::Sphere, &[("radius", 1.0)]);
        let p = s.surface_point(PatchId(0), 0.3, 0.0).unwrap();
        assert!((p - Pt3::new(0.0, 0.0, 1.0)).norm() < 1e-15);
        let s = inst(PrimitiveTemplateId::Sphere, &[("radius", 2.0)]);
        let p = s.surface_point(PatchId(0), 0.0, 0.5).unwrap();
        assert!((p - Pt3::new(2.0, 0.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn cuboid_face_center_and_frame() {
        let c = inst(
            PrimitiveTemplateId::Cuboid,
            &[("size_x", 1.0), ("size_y", 1.0), ("size_z", 1.0)],
        );
        let pz = c.patch_by_name("pz").unwrap();
        let p = c.surface_point(pz, 0.5, 0.5).unwrap();
        assert_eq!(p, Pt3::new(0.0, 0.0, 0.5));
        let f = c.surface_frame(pz, 0.2, 0.9).unwrap();
        assert_eq!(f.normal, Vec3::z());
        assert_eq!(f.tangent, Vec3::x());
    }

    #[test]
    fn cylinder_lateral_normal_is_radial() {
        let c = inst(PrimitiveTemplateId::Cylinder, &[("radius", 0.1), ("height", 0.3)]);
        let f = c.surface_frame(CYLINDER_LATERAL, 0.0, 0.4).unwrap();
        assert!((f.normal - Vec3::x()).norm() < 1e-15);
        assert!(!f.singular);
        assert!(c.surface_frame(CYLINDER_TOP, 0.3, 0.0).unwrap().singular);
    }

    #[test]
    fn domain_and_patch_errors() {
        let c = inst(PrimitiveTemplateId::Sphere, &[("radius", 1.0)]);
        assert!(matches!(
            c.surface_point(PatchId(0), 1.1, 0.0),
            Err(PrimitiveError::ParameterOutOfDomain(..))
        ));
        assert!(matches!(
            c.surface_point(PatchId(3), 0.1, 0.0),
            Err(PrimitiveError::UnknownPatch(_))
        ));
        assert!(matches!(c.surface_area(Some(PatchId(1))), Err(PrimitiveError::UnknownPatch(_))));
    }

    #[test]
    fn closed_form_areas() {
        let s = inst(PrimitiveTemplateId::Sphere, &[("radius", 1.0)]);
        assert!((s.surface_area(None).unwrap() - 4.0 * PI).abs() < 1e-12);
        let c = inst(PrimitiveTemplateId::Cylinder, &[("radius", 1.0), ("height", 2.0)]);
        assert!((c.surface_area(Some(CYLINDER_LATERAL)).unwrap() - 4.0 * PI).abs() < 1e-12);
        let b = inst(
            PrimitiveTemplateId::Cuboid,
            &[("size_x", 0.2), ("size_y", 0.3), ("size_z", 0.4)],
        );
        assert!((b.surface_area(None).unwrap() - 0.52).abs() < 1e-12);
    }

    #[test]
    fn face_frames_point_outward() {
        let b = inst(
            PrimitiveTemplateId::Cuboid,
            &[("size_x", 0.2), ("size_y", 0.3), ("size_z", 0.4)],
        );
        for p in b.patches() {
            let f = b.shape.face_frame(p).unwrap();
            let n = f.rotation * Vec3::z();
            assert!(n.dot(&f.translation.vector) > 0.0);
        }
        let s = inst(PrimitiveTemplateId::Sphere, &[("radius", 1.0)]);
        assert!(matches!(s.shape.face_frame(PatchId(0)), Err(PrimitiveError::NotPlanar(_))));
    }
}
