//! 7-DoF part poses: one scale, a rotation and a translation.
//!
//! A part's canonical frame is axis-aligned with its origin at the center of
//! the part's world bounding box at rest. The pose is the rigid motion from
//! rest to the current configuration expressed in that frame, together with
//! the box diagonal as scale, so a part at rest has identity rotation and
//! zero translation.

use super::{part_ids, AnnotateError};
use crate::math::{Pose, Vec3};
use crate::program::Structure;
use nalgebra::{Translation3, UnitQuaternion};

#[derive(Debug, Clone, PartialEq)]
pub struct PartPose {
    pub id: usize,
    pub label: String,
    pub scale: f64,
    pub rotation: UnitQuaternion<f64>,
    pub translation: Vec3,
    /// World position of the canonical frame's origin.
    pub center: Vec3,
}

impl PartPose {
    pub fn rigid(&self) -> Pose {
        Pose::from_parts(Translation3::from(self.translation), self.rotation)
    }

    pub fn canonical_frame(&self) -> Pose {
        Pose::from_parts(Translation3::from(self.center), UnitQuaternion::identity())
    }

    /// World placement of something whose rest placement is `rest`.
    pub fn place(&self, rest: &Pose) -> Pose {
        let c = self.canonical_frame();
        c * self.rigid() * c.inverse() * rest
    }
}

fn world_box(s: &Structure, members: &[usize]) -> (Vec3, Vec3) {
    let mut lo = Vec3::repeat(f64::MAX);
    let mut hi = Vec3::repeat(f64::MIN);
    for a in 0..3 {
        let mut e = Vec3::zeros();
        e[a] = 1.0;
        for &i in members {
            hi[a] = hi[a].max(s.instances[i].world_support(&e));
            lo[a] = lo[a].min(-s.instances[i].world_support(&-e));
        }
    }
    (lo, hi)
}

pub fn part_poses(s: &Structure) -> Vec<PartPose> {
    let ids = part_ids(s);
    let n = ids.iter().max().map_or(0, |m| m + 1);
    let rest = s.at_rest();
    (0..n)
        .map(|id| {
            let members: Vec<usize> = (0..ids.len()).filter(|&i| ids[i] == id).collect();
            let (lo, hi) = world_box(&rest, &members);
            let center = (lo + hi) / 2.0;
            let first = members[0];
            let motion = s.instances[first].pose * rest.instances[first].pose.inverse();
            let c = Pose::from_parts(Translation3::from(center), UnitQuaternion::identity());
            let local = c.inverse() * motion * c;
            PartPose {
                id,
                label: s.instances[first].semantic_label.clone(),
                scale: (hi - lo).norm(),
                rotation: local.rotation,
                translation: local.translation.vector,
                center,
            }
        })
        .collect()
}

pub fn part_pose(s: &Structure, part: usize) -> Result<PartPose, AnnotateError> {
    part_poses(s).into_iter().nth(part).ok_or(AnnotateError::UnknownPart(part))
}
