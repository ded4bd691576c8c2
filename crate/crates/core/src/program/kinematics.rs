//! Closed-form placement of a child primitive relative to its parent.

use super::document::JointKind;
use crate::math::{axis_angle, rotation_about, Pose, Pt3, Vec3};
use crate::primitive::{PatchId, PrimitiveError, Shape};
use nalgebra::{Translation3, UnitQuaternion};
use std::f64::consts::PI;

/// A numeric, resolved pose-defining relation.
#[derive(Debug, Clone, PartialEq)]
pub enum Placement {
    Attach {
        parent_patch: PatchId,
        child_patch: PatchId,
        offset: [f64; 2],
        spin: f64,
    },
    Coaxial {
        parent_axis: String,
        child_axis: String,
        offset: f64,
        spin: f64,
    },
    Fixed(Pose),
}

/// Half turn about local x: maps a face frame onto the opposing contact frame.
pub fn flip() -> Pose {
    Pose::from_parts(Translation3::identity(), axis_angle(Vec3::x(), PI))
}

fn rot_z(angle: f64) -> Pose {
    Pose::from_parts(Translation3::identity(), UnitQuaternion::from_axis_angle(&Vec3::z_axis(), angle))
}

impl Placement {
    /// Parent-local anchor frame in which the joint acts.
    pub fn anchor(&self, parent: &Shape) -> Result<Pose, PrimitiveError> {
        Ok(match self {
            Placement::Attach { parent_patch, offset, spin, .. } => {
                parent.face_frame(*parent_patch)?
                    * Translation3::new(offset[0], offset[1], 0.0)
                    * rot_z(*spin)
            }
            Placement::Coaxial { parent_axis, offset, spin, .. } => {
                parent.axis_frame(parent_axis)? * Translation3::new(0.0, 0.0, *offset) * rot_z(*spin)
            }
            Placement::Fixed(t) => *t,
        })
    }

    /// Maps the (jointed) anchor frame to the child's local frame.
    pub fn mount(&self, child: &Shape) -> Result<Pose, PrimitiveError> {
        Ok(match self {
            Placement::Attach { child_patch, .. } => flip() * child.face_frame(*child_patch)?.inverse(),
            Placement::Coaxial { child_axis, .. } => child.axis_frame(child_axis)?.inverse(),
            Placement::Fixed(_) => Pose::identity(),
        })
    }
}

/// Joint displacement in anchor coordinates.
pub fn joint_transform(kind: JointKind, origin: &Vec3, direction: &Vec3, value: f64) -> Pose {
    match kind {
        JointKind::Revolute => rotation_about(Pt3::from(*origin), *direction, value),
        JointKind::Prismatic => Pose::from_parts(
            Translation3::from(direction.normalize() * value),
            UnitQuaternion::identity(),
        ),
        JointKind::Fixed => Pose::identity(),
    }
}

/// Distance between two poses: translation error plus rotation angle.
pub fn pose_distance(a: &Pose, b: &Pose) -> f64 {
    let d = a.inverse() * b;
    d.translation.vector.norm().max(d.rotation.angle())
}
