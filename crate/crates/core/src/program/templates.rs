//! Registry of advanced templates.
//!
//! Each template expands overall dimensions `(width, depth, height)` plus its
//! own parameters into elementary parts whose local bounding box has exactly
//! those extents. Part 0 is the template root; its local frame is the
//! template frame.

use super::document::JointKind;
use super::kinematics::Placement;
use crate::math::{axis_angle, Pose, Pt3, Vec3};
use crate::primitive::{build_shape, ParamMap, PrimitiveTemplateId as T, Shape};
use nalgebra::Translation3;
use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemplateParam {
    pub name: &'static str,
    pub default: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemplateDiscrete {
    pub name: &'static str,
    pub default: i64,
    pub lo: i64,
    pub hi: i64,
    /// Name of the part whose repetition count this parameter controls.
    pub replicates: Option<&'static str>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Anchor {
    Face { part: &'static str, patch: &'static str },
    Axis { part: &'static str, axis: &'static str },
}

impl Anchor {
    pub fn part(&self) -> &'static str {
        match self {
            Anchor::Face { part, .. } | Anchor::Axis { part, .. } => part,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TemplateArgs {
    pub dims: [f64; 3],
    pub params: BTreeMap<String, f64>,
    pub discrete: BTreeMap<String, i64>,
}

impl TemplateArgs {
    fn p(&self, name: &str) -> f64 {
        self.params[name]
    }

    fn d(&self, name: &str) -> i64 {
        self.discrete[name]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Part {
    pub name: &'static str,
    /// Functional role, used to pair parts across template alteration.
    pub role: &'static str,
    pub repetition: Option<u32>,
    pub template: T,
    pub intrinsic: ParamMap,
    pub shape: Shape,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InternalEdge {
    pub parent: usize,
    pub child: usize,
    pub placement: Placement,
}

/// Joint authored by the template. Origin and direction are in the anchor
/// frame of the incoming edge of `part`; for part 0 that edge is the
/// program-level edge mounting the template.
#[derive(Debug, Clone, PartialEq)]
pub struct InternalJoint {
    pub name: &'static str,
    pub kind: JointKind,
    pub part: usize,
    pub origin: Vec3,
    pub direction: Vec3,
    pub range: [f64; 2],
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assembly {
    pub parts: Vec<Part>,
    pub edges: Vec<InternalEdge>,
    pub joints: Vec<InternalJoint>,
}

pub struct AdvancedTemplate {
    pub name: &'static str,
    pub role: &'static str,
    pub params: &'static [TemplateParam],
    pub discrete: &'static [TemplateDiscrete],
    pub anchors: &'static [(&'static str, Anchor)],
    build: fn(&TemplateArgs) -> Result<Assembly, String>,
}

impl std::fmt::Debug for AdvancedTemplate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AdvancedTemplate").field("name", &self.name).field("role", &self.role).finish()
    }
}

pub const DIMS: [&str; 3] = ["width", "depth", "height"];

impl AdvancedTemplate {
    pub fn anchor(&self, name: &str) -> Option<Anchor> {
        self.anchors.iter().find(|(n, _)| *n == name).map(|(_, a)| *a)
    }

    /// Names of all continuous parameters, dimensions first.
    pub fn param_names(&self) -> impl Iterator<Item = &'static str> + '_ {
        DIMS.iter().copied().chain(self.params.iter().map(|p| p.name))
    }

    pub fn param(&self, name: &str) -> Option<&TemplateParam> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn discrete_param(&self, name: &str) -> Option<&TemplateDiscrete> {
        self.discrete.iter().find(|p| p.name == name)
    }

    pub fn build(&self, args: &TemplateArgs) -> Result<Assembly, String> {
        for (i, d) in args.dims.iter().enumerate() {
            if !(d.is_finite() && *d > 0.0) {
                return Err(format!("{} must be positive", DIMS[i]));
            }
        }
        (self.build)(args)
    }
}

pub static REGISTRY: &[AdvancedTemplate] = &[
    AdvancedTemplate {
        name: "RoundedRectBody",
        role: "Body",
        params: &[TemplateParam { name: "arc_bulge", default: 0.1, lo: 0.02, hi: 0.2 }],
        discrete: &[TemplateDiscrete { name: "arc_sides", default: 2, lo: 0, hi: 4, replicates: None }],
        anchors: &[
            ("top", Anchor::Face { part: "main", patch: "top_cap" }),
            ("mount", Anchor::Face { part: "main", patch: "bottom_cap" }),
        ],
        build: rounded_rect_body,
    },
    AdvancedTemplate {
        name: "RoundTailBody",
        role: "Body",
        params: &[
            TemplateParam { name: "arc_bulge", default: 0.1, lo: 0.02, hi: 0.2 },
            TemplateParam { name: "tail_fraction", default: 0.25, lo: 0.1, hi: 0.4 },
        ],
        discrete: &[TemplateDiscrete { name: "arc_sides", default: 0, lo: 0, hi: 4, replicates: None }],
        anchors: &[("top", Anchor::Face { part: "main", patch: "top_cap" })],
        build: round_tail_body,
    },
    AdvancedTemplate {
        name: "RotatedCap",
        role: "Cap",
        params: &[TemplateParam { name: "pin_fraction", default: 0.3, lo: 0.15, hi: 0.5 }],
        discrete: &[],
        anchors: &[("mount", Anchor::Face { part: "pin", patch: "bottom_cap" })],
        build: rotated_cap,
    },
    AdvancedTemplate {
        name: "DetachedCap",
        role: "Cap",
        params: &[TemplateParam { name: "travel", default: 0.03, lo: 0.01, hi: 0.05 }],
        discrete: &[],
        anchors: &[("mount", Anchor::Face { part: "sleeve", patch: "nz" })],
        build: detached_cap,
    },
    AdvancedTemplate {
        name: "LeggedBase",
        role: "Base",
        params: &[
            TemplateParam { name: "leg_ratio", default: 0.12, lo: 0.05, hi: 0.2 },
            TemplateParam { name: "hub_fraction", default: 0.35, lo: 0.2, hi: 0.6 },
        ],
        discrete: &[TemplateDiscrete { name: "legs", default: 3, lo: 3, hi: 6, replicates: Some("leg") }],
        anchors: &[("top", Anchor::Face { part: "hub", patch: "top_cap" })],
        build: legged_base,
    },
    AdvancedTemplate {
        name: "RingBase",
        role: "Base",
        params: &[TemplateParam { name: "ring_ratio", default: 0.15, lo: 0.08, hi: 0.25 }],
        discrete: &[],
        anchors: &[("top", Anchor::Face { part: "hub", patch: "top_cap" })],
        build: ring_base,
    },
    AdvancedTemplate {
        name: "SimpleBracket",
        role: "Bracket",
        params: &[],
        discrete: &[],
        anchors: &[("axis", Anchor::Axis { part: "ring", axis: "z" })],
        build: simple_bracket,
    },
    AdvancedTemplate {
        name: "ComplexBracket",
        role: "Bracket",
        params: &[TemplateParam { name: "pin_ratio", default: 0.6, lo: 0.3, hi: 0.8 }],
        discrete: &[],
        anchors: &[("axis", Anchor::Axis { part: "ring", axis: "z" })],
        build: complex_bracket,
    },
    AdvancedTemplate {
        name: "FrontLoadBody",
        role: "Body",
        params: &[
            TemplateParam { name: "panel_fraction", default: 0.15, lo: 0.1, hi: 0.25 },
            TemplateParam { name: "panel_depth", default: 0.3, lo: 0.2, hi: 0.5 },
            TemplateParam { name: "knob_ratio", default: 0.35, lo: 0.2, hi: 0.45 },
        ],
        discrete: &[],
        anchors: &[
            ("front", Anchor::Face { part: "cabinet", patch: "ny" }),
            ("top", Anchor::Face { part: "panel", patch: "pz" }),
        ],
        build: front_load_body,
    },
    AdvancedTemplate {
        name: "DoorAssembly",
        role: "Door",
        params: &[TemplateParam { name: "glass_fraction", default: 0.5, lo: 0.2, hi: 0.9 }],
        discrete: &[],
        anchors: &[("mount", Anchor::Face { part: "glass", patch: "bottom_cap" })],
        build: door_assembly,
    },
];

pub fn find_template(name: &str) -> Option<&'static AdvancedTemplate> {
    REGISTRY.iter().find(|t| t.name == name)
}

pub fn templates_with_role(role: &str) -> impl Iterator<Item = &'static AdvancedTemplate> + '_ {
    REGISTRY.iter().filter(move |t| t.role == role)
}

fn params(pairs: &[(&str, f64)]) -> ParamMap {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

impl Assembly {
    fn add(
        &mut self,
        name: &'static str,
        role: &'static str,
        repetition: Option<u32>,
        template: T,
        intrinsic: ParamMap,
    ) -> Result<usize, String> {
        let shape = build_shape(template, &intrinsic).map_err(|e| format!("part `{name}`: {e}"))?;
        self.parts.push(Part { name, role, repetition, template, intrinsic, shape });
        Ok(self.parts.len() - 1)
    }

    /// Attach `child_face` of `child` onto `parent_face` of `parent`, with the
    /// child's contact point landing on the projection of `target` (parent
    /// local coordinates) onto the parent face.
    fn attach_at(
        &mut self,
        parent: usize,
        parent_face: &str,
        child: usize,
        child_face: &str,
        target: Pt3,
    ) -> Result<[f64; 2], String> {
        let pshape = &self.parts[parent].shape;
        let parent_patch = pshape.patch_by_name(parent_face).map_err(|e| e.to_string())?;
        let child_patch = self.parts[child].shape.patch_by_name(child_face).map_err(|e| e.to_string())?;
        let frame = pshape.face_frame(parent_patch).map_err(|e| e.to_string())?;
        let q = frame.inverse() * target;
        let offset = [q.x, q.y];
        self.edges.push(InternalEdge {
            parent,
            child,
            placement: Placement::Attach { parent_patch, child_patch, offset, spin: 0.0 },
        });
        Ok(offset)
    }

    fn fixed(&mut self, parent: usize, child: usize, pose: Pose) {
        self.edges.push(InternalEdge { parent, child, placement: Placement::Fixed(pose) });
    }
}

/// PrismN parameters whose cross-section has exactly `width` x `depth` extents.
fn fitted_prism(width: f64, depth: f64, height: f64, arc_sides: i64, bulge: f64) -> Result<ParamMap, String> {
    let (mut w, mut d) = (width, depth);
    let mut map = ParamMap::new();
    for _ in 0..200 {
        map = params(&[
            ("side_count", 4.0),
            ("arc_sides", arc_sides as f64),
            ("arc_bulge", bulge),
            ("width", w),
            ("depth", d),
            ("height", height),
        ]);
        let shape = build_shape(T::PrismN, &map).map_err(|e| e.to_string())?;
        let (lo, hi) = shape.local_bounds();
        let (ex, ey) = (hi.x - lo.x, hi.y - lo.y);
        if (ex - width).abs() < 1e-14 * width && (ey - depth).abs() < 1e-14 * depth {
            return Ok(map);
        }
        w *= width / ex;
        d *= depth / ey;
    }
    Ok(map)
}

fn rounded_rect_body(a: &TemplateArgs) -> Result<Assembly, String> {
    let [w, d, h] = a.dims;
    let mut asm = Assembly::default();
    let prism = fitted_prism(w, d, h, a.d("arc_sides"), a.p("arc_bulge"))?;
    asm.add("main", "shell", None, T::PrismN, prism)?;
    Ok(asm)
}

fn round_tail_body(a: &TemplateArgs) -> Result<Assembly, String> {
    let [w, d, h] = a.dims;
    let tail_h = h * a.p("tail_fraction");
    let mut asm = Assembly::default();
    let prism = fitted_prism(w, d, h - tail_h, a.d("arc_sides"), a.p("arc_bulge"))?;
    let main = asm.add("main", "shell", None, T::PrismN, prism)?;
    // the tail disc stays inside the footprint so the extents are unchanged
    let r = 0.5 * w.min(d);
    let tail = asm.add("tail", "tail", None, T::Cylinder, params(&[("radius", r), ("height", tail_h)]))?;
    asm.attach_at(main, "bottom_cap", tail, "top_cap", Pt3::origin())?;
    Ok(asm)
}

fn rotated_cap(a: &TemplateArgs) -> Result<Assembly, String> {
    let [w, d, h] = a.dims;
    let pin_h = h * a.p("pin_fraction");
    let r = 0.2 * w.min(d);
    let mut asm = Assembly::default();
    let pin = asm.add("pin", "pin", None, T::Cylinder, params(&[("radius", r), ("height", pin_h)]))?;
    let cover = asm.add(
        "cover",
        "shell",
        None,
        T::Cuboid,
        params(&[("size_x", w), ("size_y", d), ("size_z", h - pin_h)]),
    )?;
    // pin sits near one end of the cover, which swivels about it
    let s = 0.5 * w - 1.5 * r;
    let offset = asm.attach_at(pin, "top_cap", cover, "nz", Pt3::new(s, 0.0, 0.5 * pin_h))?;
    asm.joints.push(InternalJoint {
        name: "swivel",
        kind: JointKind::Revolute,
        part: cover,
        origin: Vec3::new(-offset[0], -offset[1], 0.0),
        direction: Vec3::z(),
        range: [0.0, PI],
    });
    Ok(asm)
}

fn detached_cap(a: &TemplateArgs) -> Result<Assembly, String> {
    let [w, d, h] = a.dims;
    let mut asm = Assembly::default();
    asm.add("sleeve", "shell", None, T::Cuboid, params(&[("size_x", w), ("size_y", d), ("size_z", h)]))?;
    asm.joints.push(InternalJoint {
        name: "pull",
        kind: JointKind::Prismatic,
        part: 0,
        origin: Vec3::zeros(),
        direction: Vec3::z(),
        range: [0.0, a.p("travel")],
    });
    Ok(asm)
}

fn legged_base(a: &TemplateArgs) -> Result<Assembly, String> {
    let [w, _, h] = a.dims;
    let hub_h = h * a.p("hub_fraction");
    let leg_r = 0.5 * w * a.p("leg_ratio");
    let n = a.d("legs");
    let mut asm = Assembly::default();
    let hub = asm.add("hub", "hub", None, T::Cylinder, params(&[("radius", 0.5 * w), ("height", hub_h)]))?;
    let rho = 0.5 * w - leg_r;
    for i in 0..n {
        let theta = TAU * i as f64 / n as f64;
        let leg = asm.add(
            "leg",
            "support",
            Some(i as u32),
            T::Cylinder,
            params(&[("radius", leg_r), ("height", h - hub_h)]),
        )?;
        let target = Pt3::new(rho * theta.cos(), rho * theta.sin(), -0.5 * hub_h);
        asm.attach_at(hub, "bottom_cap", leg, "top_cap", target)?;
    }
    Ok(asm)
}

fn ring_base(a: &TemplateArgs) -> Result<Assembly, String> {
    let [w, _, h] = a.dims;
    let minor = 0.5 * w * a.p("ring_ratio");
    let major = 0.5 * w - minor;
    let hub_h = h - 2.0 * minor;
    if hub_h <= 0.0 {
        return Err("height must exceed the ring tube diameter".into());
    }
    let mut asm = Assembly::default();
    let ring = asm.add(
        "ring",
        "support",
        None,
        T::Torus,
        params(&[("major_radius", major), ("minor_radius", minor)]),
    )?;
    let hub = asm.add("hub", "hub", None, T::Cylinder, params(&[("radius", major), ("height", hub_h)]))?;
    asm.edges.push(InternalEdge {
        parent: ring,
        child: hub,
        placement: Placement::Coaxial {
            parent_axis: "z".into(),
            child_axis: "z".into(),
            offset: minor + 0.5 * hub_h,
            spin: 0.0,
        },
    });
    Ok(asm)
}

fn bracket_ring(asm: &mut Assembly, a: &TemplateArgs) -> Result<(f64, f64), String> {
    let [w, _, h] = a.dims;
    let minor = 0.5 * h;
    let major = 0.5 * w - minor;
    if major <= minor {
        return Err("width must exceed twice the height".into());
    }
    asm.add("ring", "ring", None, T::Torus, params(&[("major_radius", major), ("minor_radius", minor)]))?;
    Ok((major, minor))
}

fn simple_bracket(a: &TemplateArgs) -> Result<Assembly, String> {
    let mut asm = Assembly::default();
    bracket_ring(&mut asm, a)?;
    Ok(asm)
}

fn complex_bracket(a: &TemplateArgs) -> Result<Assembly, String> {
    let mut asm = Assembly::default();
    let (major, minor) = bracket_ring(&mut asm, a)?;
    let inner = major - minor;
    let len = 0.15 * inner;
    let radius = minor * a.p("pin_ratio");
    // two axle pins reaching inward from the ring along local y
    for (name, sign) in [("pin_top", 1.0), ("pin_bottom", -1.0)] {
        let pin = asm.add(name, "pin", None, T::Cylinder, params(&[("radius", radius), ("height", len)]))?;
        let pose = Pose::from_parts(
            Translation3::new(0.0, sign * (inner - 0.5 * len), 0.0),
            axis_angle(Vec3::x(), FRAC_PI_2),
        );
        asm.fixed(0, pin, pose);
    }
    Ok(asm)
}

fn front_load_body(a: &TemplateArgs) -> Result<Assembly, String> {
    let [w, d, h] = a.dims;
    let panel_h = h * a.p("panel_fraction");
    let panel_d = d * a.p("panel_depth");
    let cab_h = h - panel_h;
    let mut asm = Assembly::default();
    let cabinet = asm.add(
        "cabinet",
        "cabinet",
        None,
        T::Cuboid,
        params(&[("size_x", w), ("size_y", d), ("size_z", cab_h)]),
    )?;
    let panel = asm.add(
        "panel",
        "panel",
        None,
        T::Cuboid,
        params(&[("size_x", w), ("size_y", panel_d), ("size_z", panel_h)]),
    )?;
    // control panel along the back edge, front is -y
    asm.attach_at(cabinet, "pz", panel, "nz", Pt3::new(0.0, 0.5 * (d - panel_d), 0.5 * cab_h))?;
    let knob_r = a.p("knob_ratio") * panel_h;
    let knob_h = 0.3 * (d - panel_d);
    let knob = asm.add("knob", "knob", None, T::Cylinder, params(&[("radius", knob_r), ("height", knob_h)]))?;
    asm.attach_at(panel, "ny", knob, "bottom_cap", Pt3::new(0.3 * w, -0.5 * panel_d, 0.0))?;
    Ok(asm)
}

fn door_assembly(a: &TemplateArgs) -> Result<Assembly, String> {
    let [diameter, _, thickness] = a.dims;
    let glass_t = thickness * a.p("glass_fraction");
    let glass_r = 0.5 * diameter - thickness;
    if glass_r <= 0.0 {
        return Err("width must exceed twice the height".into());
    }
    let minor = 0.5 * thickness;
    let major = 0.5 * diameter - minor;
    let mut asm = Assembly::default();
    let glass = asm.add("glass", "glass", None, T::Cylinder, params(&[("radius", glass_r), ("height", glass_t)]))?;
    let ring = asm.add(
        "ring",
        "ring",
        None,
        T::Torus,
        params(&[("major_radius", major), ("minor_radius", minor)]),
    )?;
    // ring and glass both rest on the mounting plane
    asm.edges.push(InternalEdge {
        parent: glass,
        child: ring,
        placement: Placement::Coaxial {
            parent_axis: "z".into(),
            child_axis: "z".into(),
            offset: minor - 0.5 * glass_t,
            spin: 0.0,
        },
    });
    // vertical hinge along the rim, in the mounting face frame
    asm.joints.push(InternalJoint {
        name: "hinge",
        kind: JointKind::Revolute,
        part: 0,
        origin: Vec3::new(0.0, 0.5 * diameter, 0.0),
        direction: Vec3::x(),
        range: [0.0, 1.9],
    });
    Ok(asm)
}
