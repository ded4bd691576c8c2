//! Small geometric and seeding helpers shared across modules.

use nalgebra::{Isometry3, Point3, Translation3, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

pub type Pose = Isometry3<f64>;
pub type Vec3 = Vector3<f64>;
pub type Pt3 = Point3<f64>;

/// Tolerance on quaternion norm accepted at construction.
pub const QUAT_NORM_TOL: f64 = 1e-9;

/// Rigid transform as it appears in documents: translation in meters and a
/// unit quaternion stored `[w, x, y, z]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RigidTransform {
    pub translation: [f64; 3],
    pub rotation: [f64; 4],
}

impl Default for RigidTransform {
    fn default() -> Self {
        RigidTransform {
            translation: [0.0; 3],
            rotation: [1.0, 0.0, 0.0, 0.0],
        }
    }
}

impl RigidTransform {
    pub fn quaternion_norm(&self) -> f64 {
        self.rotation.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Converts to an isometry. Returns `None` if the quaternion is not unit
    /// within [`QUAT_NORM_TOL`].
    pub fn to_pose(&self) -> Option<Pose> {
        if (self.quaternion_norm() - 1.0).abs() > QUAT_NORM_TOL {
            return None;
        }
        let [w, x, y, z] = self.rotation;
        let q = UnitQuaternion::new_normalize(nalgebra::Quaternion::new(w, x, y, z));
        let [tx, ty, tz] = self.translation;
        Some(Isometry3::from_parts(Translation3::new(tx, ty, tz), q))
    }

    pub fn from_pose(pose: &Pose) -> Self {
        let q = pose.rotation.quaternion();
        RigidTransform {
            translation: [pose.translation.x, pose.translation.y, pose.translation.z],
            rotation: [q.w, q.i, q.j, q.k],
        }
    }
}

/// Quaternion components `[w, x, y, z]`.
pub fn quat_wxyz(q: &UnitQuaternion<f64>) -> [f64; 4] {
    let q = q.quaternion();
    [q.w, q.i, q.j, q.k]
}

pub fn axis_angle(axis: Vec3, angle: f64) -> UnitQuaternion<f64> {
    match Unit::try_new(axis, 1e-15) {
        Some(a) => UnitQuaternion::from_axis_angle(&a, angle),
        None => UnitQuaternion::identity(),
    }
}

/// Rotation of `angle` about an axis through `origin` with direction `dir`.
pub fn rotation_about(origin: Pt3, dir: Vec3, angle: f64) -> Pose {
    let rot = axis_angle(dir, angle);
    let shift = origin.coords - rot * origin.coords;
    Isometry3::from_parts(Translation3::from(shift), rot)
}

/// Pose whose local x, y, z axes are `tangent`, `bitangent`, `normal`.
pub fn frame_pose(origin: Pt3, tangent: Vec3, bitangent: Vec3, normal: Vec3) -> Pose {
    let m = nalgebra::Matrix3::from_columns(&[tangent, bitangent, normal]);
    let rot = UnitQuaternion::from_rotation_matrix(&nalgebra::Rotation3::from_matrix_unchecked(m));
    Isometry3::from_parts(Translation3::from(origin.coords), rot)
}

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of stream `index` under `master`.
///
/// `splitmix64(master ^ splitmix64(index))`. Streams are independent of how
/// many other streams were derived, so any single object can be regenerated.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

pub fn rng_from_seed(seed: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_about_keeps_origin_fixed() {
        let o = Pt3::new(1.0, 2.0, 3.0);
        let p = rotation_about(o, Vec3::z(), 0.7);
        assert!((p * o - o).norm() < 1e-15);
    }

    #[test]
    fn non_unit_quaternion_rejected() {
        let t = RigidTransform {
            translation: [0.0; 3],
            rotation: [1.0, 0.1, 0.0, 0.0],
        };
        assert!(t.to_pose().is_none());
        assert!(RigidTransform::default().to_pose().is_some());
    }

    #[test]
    fn derived_seeds_differ() {
        let a = derive_seed(42, 0);
        let b = derive_seed(42, 1);
        assert_ne!(a, b);
        assert_eq!(a, derive_seed(42, 0));
    }
}
