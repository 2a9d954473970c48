//! Articulated robot descriptions.
//!
//! A [`RobotModel`] is a kinematic tree of rigid links connected by revolute
//! joints, rooted at a floating pelvis (link 0). Models carry everything the
//! rest of the crate needs: inertial data for dynamics, named keypoints with
//! tracking weight classes, ground-contact spheres, PD gain and torque-limit
//! defaults, and a bilateral [`SymmetryMap`] used by the mirror operators.
//!
//! Conventions:
//! * World frame: x forward, y left, z up; gravity acts along −z.
//! * Each joint's frame coincides with its child link's frame. The joint
//!   origin is expressed in the parent link frame; the rotation axis in the
//!   child frame. Joints are topologically sorted with `child == index + 1`.
//! * Models are required to be *geometrically* bilaterally symmetric across
//!   the x–z plane: validation checks that masses, centers of mass, inertias,
//!   joint placements, axes, limits, keypoints, and contact spheres mirror
//!   exactly. This is what makes the mirror operators exact.
//! * The keypoint set must include at least `pelvis`, `head`, `l_hand`,
//!   `r_hand`, `l_foot`, and `r_foot`.

mod builtin;
pub(crate) mod serde_util;

pub use builtin::{chain, free_body, mini_humanoid, single_joint_rig};

use nalgebra::{Isometry3, Matrix3, Translation3, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

use crate::math;

/// Current on-disk model document version.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Names every model must expose as keypoints.
pub const REQUIRED_KEYPOINTS: [&str; 6] =
    ["pelvis", "head", "l_hand", "r_hand", "l_foot", "r_foot"];

/// Errors produced when loading or validating a model.
#[derive(Debug, Error)]
pub enum ModelError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("model document parse error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("model validation failed: {0}")]
    Validation(String),
}

/// Tracking weight class of a keypoint. End effectors (head, hands) are
/// weighted highest in the keypoint tracking reward, then upper-body, then
/// lower-body keypoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightClass {
    EndEffector,
    Upper,
    Lower,
}

/// Weight class of a joint for the joint-space tracking rewards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JointClass {
    Upper,
    Lower,
}

/// A rigid link. The link frame sits at the parent joint; inertial data is
/// given about the link's center of mass, in the link frame.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinkSpec {
    pub name: String,
    /// Mass in kg. Must be positive.
    pub mass: f64,
    /// Center of mass in the link frame, m.
    #[serde(with = "serde_util::vec3")]
    pub com: Vector3<f64>,
    /// Rotational inertia about the center of mass, link frame, kg·m².
    /// Must be symmetric positive definite.
    #[serde(with = "serde_util::mat3")]
    pub inertia: Matrix3<f64>,
}

/// A revolute joint connecting `parent` to `child`. The child link frame is
/// obtained from the parent frame by translating to `origin` and rotating by
/// the joint angle about `axis`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JointSpec {
    pub name: String,
    pub parent: usize,
    pub child: usize,
    /// Joint anchor in the parent link frame, m.
    #[serde(with = "serde_util::vec3")]
    pub origin: Vector3<f64>,
    /// Unit rotation axis in the child link frame.
    #[serde(with = "serde_util::vec3")]
    pub axis: Vector3<f64>,
    /// [lower, upper] position limits, rad.
    pub limits: [f64; 2],
    /// Actuator torque limit, N·m.
    pub torque_limit: f64,
    /// Default PD gains (may be scaled by domain randomization).
    pub kp: f64,
    pub kd: f64,
    pub class: JointClass,
}

/// A named point rigidly attached to a link, used for tracking rewards,
/// observations, and metrics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KeypointSpec {
    pub name: String,
    pub link: usize,
    /// Offset in the link frame, m.
    #[serde(with = "serde_util::vec3")]
    pub offset: Vector3<f64>,
    pub class: WeightClass,
}

/// A ground-contact sphere rigidly attached to a link.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContactSphere {
    pub link: usize,
    /// Sphere center in the link frame, m.
    #[serde(with = "serde_util::vec3")]
    pub offset: Vector3<f64>,
    /// Sphere radius, m. Must be positive.
    pub radius: f64,
}

/// The reflection plane used by the mirror operators. Only the sagittal x–z
/// plane is defined today; the enum keeps the document format extensible.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MirrorPlane {
    #[default]
    SagittalXz,
}

/// Bilateral symmetry of the robot: involutive joint and keypoint
/// permutations with per-joint signs, plus the base mirror plane.
///
/// `mirror[i] = joint_sign[i] * value[joint_perm[i]]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SymmetryMap {
    pub joint_perm: Vec<usize>,
    pub joint_sign: Vec<f64>,
    pub keypoint_perm: Vec<usize>,
    #[serde(default)]
    pub base_mirror: MirrorPlane,
}

/// A complete articulated robot description. See the module docs for frame
/// conventions and symmetry requirements.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RobotModel {
    pub format_version: u32,
    pub name: String,
    /// links[0] is the floating-base root (pelvis).
    pub links: Vec<LinkSpec>,
    /// Topologically sorted: joints[j].child == j + 1.
    pub joints: Vec<JointSpec>,
    pub keypoints: Vec<KeypointSpec>,
    pub contact_spheres: Vec<ContactSphere>,
    /// Resting joint positions, rad. Must be symmetric and within limits.
    pub default_pose: Vec<f64>,
    /// Resting base position (standing on flat ground at z = 0).
    #[serde(with = "serde_util::vec3")]
    pub default_root_pos: Vector3<f64>,
    pub symmetry: SymmetryMap,
}

impl RobotModel {
    pub fn n_joints(&self) -> usize {
        self.joints.len()
    }

    pub fn n_links(&self) -> usize {
        self.links.len()
    }

    pub fn n_keypoints(&self) -> usize {
        self.keypoints.len()
    }

    /// Index of the joint whose child is `link`, if any (root has none).
    pub fn parent_joint_of(&self, link: usize) -> Option<usize> {
        if link == 0 {
            None
        } else {
            Some(link - 1)
        }
    }

    /// Parent link of `link` (root has none).
    pub fn parent_link_of(&self, link: usize) -> Option<usize> {
        self.parent_joint_of(link).map(|j| self.joints[j].parent)
    }

    pub fn joint_index(&self, name: &str) -> Option<usize> {
        self.joints.iter().position(|j| j.name == name)
    }

    pub fn keypoint_index(&self, name: &str) -> Option<usize> {
        self.keypoints.iter().position(|k| k.name == name)
    }

    /// Links that carry contact spheres (the "feet"), sorted by index.
    pub fn feet_links(&self) -> Vec<usize> {
        let mut feet: Vec<usize> = self.contact_spheres.iter().map(|s| s.link).collect();
        feet.sort_unstable();
        feet.dedup();
        feet
    }

    /// Link permutation induced by the joint permutation (root maps to root).
    pub fn link_perm(&self) -> Vec<usize> {
        let mut perm = vec![0usize; self.links.len()];
        for (j, joint) in self.joints.iter().enumerate() {
            perm[joint.child] = self.joints[self.symmetry.joint_perm[j]].child;
        }
        perm
    }

    /// Permutation mapping each contact sphere to its mirror image. Validation
    /// guarantees the mirrored multiset matches, so a greedy match is exact.
    pub fn contact_sphere_perm(&self) -> Vec<usize> {
        let link_perm = self.link_perm();
        let mut perm = vec![usize::MAX; self.contact_spheres.len()];
        let mut taken = vec![false; self.contact_spheres.len()];
        for (i, s) in self.contact_spheres.iter().enumerate() {
            let want_link = link_perm[s.link];
            let want_offset = crate::math::mirror_vec(&s.offset);
            let j = (0..self.contact_spheres.len())
                .find(|&k| {
                    let c = &self.contact_spheres[k];
                    !taken[k]
                        && c.link == want_link
                        && (c.offset - want_offset).norm() < 1e-9
                        && (c.radius - s.radius).abs() < 1e-9
                })
                .expect("validated models have a mirror-matched sphere set");
            taken[j] = true;
            perm[i] = j;
        }
        perm
    }

    /// Default PD gain vectors from the per-joint model fields.
    pub fn default_gains(&self) -> (Vec<f64>, Vec<f64>) {
        (
            self.joints.iter().map(|j| j.kp).collect(),
            self.joints.iter().map(|j| j.kd).collect(),
        )
    }

    /// Per-joint torque limits from the model fields.
    pub fn torque_limits(&self) -> Vec<f64> {
        self.joints.iter().map(|j| j.torque_limit).collect()
    }

    // ── Forward kinematics ──────────────────────────────────────────────

    /// World pose of every link frame. `q` must have `n_joints` entries and
    /// `base` must carry a unit rotation (guaranteed by `Isometry3`).
    pub fn fk(&self, base: &Isometry3<f64>, q: &[f64]) -> Vec<Isometry3<f64>> {
        assert_eq!(q.len(), self.n_joints(), "joint vector length mismatch");
        let mut poses = Vec::with_capacity(self.links.len());
        poses.push(*base);
        for (j, joint) in self.joints.iter().enumerate() {
            let rot = UnitQuaternion::from_axis_angle(&Unit::new_unchecked(joint.axis), q[j]);
            let local = Isometry3::from_parts(Translation3::from(joint.origin), rot);
            poses.push(poses[joint.parent] * local);
        }
        poses
    }

    /// Forward kinematics from raw components, validating the quaternion.
    /// `quat_wxyz` must be unit within 1e-6; it is renormalized before use.
    pub fn fk_from_raw(
        &self,
        pos: [f64; 3],
        quat_wxyz: [f64; 4],
        q: &[f64],
    ) -> Result<Vec<Isometry3<f64>>, ModelError> {
        if q.len() != self.n_joints() {
            return Err(ModelError::Validation(format!(
                "joint vector has {} entries, model has {} joints",
                q.len(),
                self.n_joints()
            )));
        }
        let quat =
            nalgebra::Quaternion::new(quat_wxyz[0], quat_wxyz[1], quat_wxyz[2], quat_wxyz[3]);
        let norm = quat.norm();
        if (norm - 1.0).abs() > 1e-6 {
            return Err(ModelError::Validation(format!(
                "base quaternion norm {norm} deviates from 1 by more than 1e-6"
            )));
        }
        let base = Isometry3::from_parts(
            Translation3::new(pos[0], pos[1], pos[2]),
            UnitQuaternion::new_unchecked(quat / norm),
        );
        Ok(self.fk(&base, q))
    }

    /// World positions of all keypoints given link poses from [`Self::fk`].
    pub fn keypoints_global(&self, poses: &[Isometry3<f64>]) -> Vec<Vector3<f64>> {
        self.keypoints
            .iter()
            .map(|k| poses[k.link].transform_point(&k.offset.into()).coords)
            .collect()
    }

    /// World orientations of the links each keypoint is attached to.
    pub fn keypoint_rotations(&self, poses: &[Isometry3<f64>]) -> Vec<UnitQuaternion<f64>> {
        self.keypoints
            .iter()
            .map(|k| poses[k.link].rotation)
            .collect()
    }

    /// Heading frame of a pelvis pose: origin at the pelvis position, rotation
    /// yaw-only (z axis stays world-up).
    pub fn heading_frame(pelvis: &Isometry3<f64>) -> Isometry3<f64> {
        Isometry3::from_parts(
            pelvis.translation,
            math::yaw_quat(math::yaw_of(&pelvis.rotation)),
        )
    }

    /// Keypoint positions expressed in the pelvis heading frame. The pelvis
    /// keypoint itself maps to the origin.
    pub fn keypoints_local(&self, poses: &[Isometry3<f64>]) -> Vec<Vector3<f64>> {
        let frame = Self::heading_frame(&poses[0]);
        let inv = frame.inverse();
        self.keypoints
            .iter()
            .map(|k| {
                let p = poses[k.link].transform_point(&k.offset.into());
                inv.transform_point(&p).coords
            })
            .collect()
    }

    // ── Mirror operators ────────────────────────────────────────────────

    /// Mirror a per-joint vector (positions, velocities, actions, torques):
    /// `out[i] = sign[i] * v[perm[i]]`. Involutive.
    pub fn mirror_joint_vector(&self, v: &[f64]) -> Vec<f64> {
        let s = &self.symmetry;
        (0..v.len())
            .map(|i| s.joint_sign[i] * v[s.joint_perm[i]])
            .collect()
    }

    /// Permute a per-joint vector without sign flips (for magnitudes such as
    /// gain or torque scales).
    pub fn permute_joint_vector(&self, v: &[f64]) -> Vec<f64> {
        (0..v.len())
            .map(|i| v[self.symmetry.joint_perm[i]])
            .collect()
    }

    /// Mirror per-keypoint 3-vectors (positions or linear velocities, any
    /// frame aligned with the x–z plane): permutation plus y negation.
    pub fn mirror_keypoint_vec3(&self, pts: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
        let perm = &self.symmetry.keypoint_perm;
        (0..pts.len())
            .map(|i| math::mirror_vec(&pts[perm[i]]))
            .collect()
    }

    /// Mirror per-keypoint angular 3-vectors: permutation plus the axial map.
    pub fn mirror_keypoint_axial(&self, ws: &[Vector3<f64>]) -> Vec<Vector3<f64>> {
        let perm = &self.symmetry.keypoint_perm;
        (0..ws.len())
            .map(|i| math::mirror_axial(&ws[perm[i]]))
            .collect()
    }

    /// Mirror per-keypoint orientations: permutation plus quaternion mirror.
    pub fn mirror_keypoint_quat(&self, qs: &[UnitQuaternion<f64>]) -> Vec<UnitQuaternion<f64>> {
        let perm = &self.symmetry.keypoint_perm;
        (0..qs.len())
            .map(|i| math::mirror_quat(&qs[perm[i]]))
            .collect()
    }

    /// Mirror a base pose across the sagittal plane.
    pub fn mirror_base_pose(pose: &Isometry3<f64>) -> Isometry3<f64> {
        Isometry3::from_parts(
            Translation3::from(math::mirror_vec(&pose.translation.vector)),
            math::mirror_quat(&pose.rotation),
        )
    }

    // ── Validation ──────────────────────────────────────────────────────

    /// Check every structural and symmetry invariant; the error names the
    /// first violated one.
    pub fn validate(&self) -> Result<(), ModelError> {
        let fail = |msg: String| Err(ModelError::Validation(msg));
        let n = self.n_joints();

        if self.format_version != MODEL_FORMAT_VERSION {
            return fail(format!(
                "format_version {} unsupported (expected {MODEL_FORMAT_VERSION})",
                self.format_version
            ));
        }
        if self.links.is_empty() {
            return fail("model has no links".into());
        }
        if self.links.len() != n + 1 {
            return fail(format!(
                "link count {} != joint count {} + 1 (tree with one root)",
                self.links.len(),
                n
            ));
        }

        // Unique names.
        for (what, names) in [
            (
                "link",
                self.links
                    .iter()
                    .map(|l| l.name.clone())
                    .collect::<Vec<_>>(),
            ),
            (
                "joint",
                self.joints.iter().map(|j| j.name.clone()).collect(),
            ),
            (
                "keypoint",
                self.keypoints.iter().map(|k| k.name.clone()).collect(),
            ),
        ] {
            let mut sorted = names.clone();
            sorted.sort();
            sorted.dedup();
            if sorted.len() != names.len() {
                return fail(format!("duplicate {what} names"));
            }
        }

        // Tree structure and joint data.
        for (j, joint) in self.joints.iter().enumerate() {
            if joint.child != j + 1 {
                return fail(format!(
                    "joint '{}' has child {} but topological order requires {}",
                    joint.name,
                    joint.child,
                    j + 1
                ));
            }
            if joint.parent >= joint.child {
                return fail(format!("joint '{}' parent must precede child", joint.name));
            }
            if (joint.axis.norm() - 1.0).abs() > 1e-9 {
                return fail(format!("joint '{}' axis is not unit length", joint.name));
            }
            if joint.limits[0] >= joint.limits[1] {
                return fail(format!("joint '{}' has empty limit interval", joint.name));
            }
            if joint.torque_limit <= 0.0 {
                return fail(format!(
                    "joint '{}' torque limit must be positive",
                    joint.name
                ));
            }
            if joint.kp < 0.0 || joint.kd < 0.0 {
                return fail(format!("joint '{}' gains must be non-negative", joint.name));
            }
        }

        // Link inertial data.
        for link in &self.links {
            if link.mass <= 0.0 {
                return fail(format!("link '{}' mass must be positive", link.name));
            }
            if (link.inertia - link.inertia.transpose()).amax() > 1e-9 {
                return fail(format!("link '{}' inertia is not symmetric", link.name));
            }
            if nalgebra::Cholesky::new(link.inertia).is_none() {
                return fail(format!(
                    "link '{}' inertia is not positive definite",
                    link.name
                ));
            }
        }

        // Default pose.
        if self.default_pose.len() != n {
            return fail("default_pose length does not match joint count".into());
        }
        for (j, (&q, joint)) in self.default_pose.iter().zip(&self.joints).enumerate() {
            if q < joint.limits[0] || q > joint.limits[1] {
                return fail(format!(
                    "default_pose[{j}] outside limits of '{}'",
                    joint.name
                ));
            }
        }
        if self.default_root_pos.y.abs() > 1e-9 {
            return fail("default_root_pos must lie on the sagittal plane (y = 0)".into());
        }

        // Keypoints.
        for kp in &self.keypoints {
            if kp.link >= self.links.len() {
                return fail(format!("keypoint '{}' references invalid link", kp.name));
            }
        }
        for required in REQUIRED_KEYPOINTS {
            if self.keypoint_index(required).is_none() {
                return fail(format!("required keypoint '{required}' is missing"));
            }
        }

        // Contact spheres.
        for (i, s) in self.contact_spheres.iter().enumerate() {
            if s.link >= self.links.len() {
                return fail(format!("contact sphere {i} references invalid link"));
            }
            if s.radius <= 0.0 {
                return fail(format!("contact sphere {i} radius must be positive"));
            }
        }

        self.validate_symmetry()
    }

    /// Symmetry-map and geometric mirror checks. Tolerance 1e-9 throughout.
    fn validate_symmetry(&self) -> Result<(), ModelError> {
        let fail = |msg: String| Err(ModelError::Validation(msg));
        let tol = 1e-9;
        let n = self.n_joints();
        let s = &self.symmetry;

        if s.joint_perm.len() != n || s.joint_sign.len() != n {
            return fail("symmetry joint maps must have one entry per joint".into());
        }
        if s.keypoint_perm.len() != self.keypoints.len() {
            return fail("symmetry keypoint_perm must have one entry per keypoint".into());
        }
        for (i, &p) in s.joint_perm.iter().enumerate() {
            if p >= n || s.joint_perm[p] != i {
                return fail(format!("joint_perm is not an involution at index {i}"));
            }
            if s.joint_sign[i].abs() != 1.0 {
                return fail(format!("joint_sign[{i}] must be +1 or -1"));
            }
            if s.joint_sign[p] != s.joint_sign[i] {
                return fail(format!("joint_sign must agree across the pair ({i}, {p})"));
            }
        }
        for (i, &p) in s.keypoint_perm.iter().enumerate() {
            if p >= self.keypoints.len() || s.keypoint_perm[p] != i {
                return fail(format!("keypoint_perm is not an involution at index {i}"));
            }
            if self.keypoints[i].class != self.keypoints[p].class {
                return fail(format!(
                    "keypoint classes differ across the pair ({i}, {p})"
                ));
            }
        }

        let link_perm = self.link_perm();

        // Geometric mirror of joints and their child links.
        for (j, joint) in self.joints.iter().enumerate() {
            let jm = &self.joints[s.joint_perm[j]];
            let sign = s.joint_sign[j];
            if jm.parent != link_perm[joint.parent] {
                return fail(format!("joint '{}' parent does not mirror", joint.name));
            }
            if (jm.origin - math::mirror_vec(&joint.origin)).norm() > tol {
                return fail(format!("joint '{}' origin does not mirror", joint.name));
            }
            let expected_axis = if sign < 0.0 {
                math::mirror_vec(&joint.axis)
            } else {
                -math::mirror_vec(&joint.axis)
            };
            if (jm.axis - expected_axis).norm() > tol {
                return fail(format!(
                    "joint '{}' axis does not mirror consistently with its sign",
                    joint.name
                ));
            }
            let expected_limits = if sign < 0.0 {
                [-joint.limits[1], -joint.limits[0]]
            } else {
                joint.limits
            };
            if (jm.limits[0] - expected_limits[0]).abs() > tol
                || (jm.limits[1] - expected_limits[1]).abs() > tol
            {
                return fail(format!("joint '{}' limits do not mirror", joint.name));
            }
            if (jm.torque_limit - joint.torque_limit).abs() > tol
                || (jm.kp - joint.kp).abs() > tol
                || (jm.kd - joint.kd).abs() > tol
            {
                return fail(format!("joint '{}' actuation does not mirror", joint.name));
            }
            if jm.class != joint.class {
                return fail(format!("joint '{}' class does not mirror", joint.name));
            }
        }

        let mirror_mat = Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, 1.0));
        for (l, link) in self.links.iter().enumerate() {
            let lm = &self.links[link_perm[l]];
            if (lm.mass - link.mass).abs() > tol {
                return fail(format!("link '{}' mass does not mirror", link.name));
            }
            if (lm.com - math::mirror_vec(&link.com)).norm() > tol {
                return fail(format!(
                    "link '{}' center of mass does not mirror",
                    link.name
                ));
            }
            if (lm.inertia - mirror_mat * link.inertia * mirror_mat).amax() > tol {
                return fail(format!("link '{}' inertia does not mirror", link.name));
            }
        }

        for (k, kp) in self.keypoints.iter().enumerate() {
            let km = &self.keypoints[s.keypoint_perm[k]];
            if km.link != link_perm[kp.link] {
                return fail(format!("keypoint '{}' link does not mirror", kp.name));
            }
            if (km.offset - math::mirror_vec(&kp.offset)).norm() > tol {
                return fail(format!("keypoint '{}' offset does not mirror", kp.name));
            }
        }

        // Contact spheres must match as a multiset under the mirror.
        for (i, sph) in self.contact_spheres.iter().enumerate() {
            let target_link = link_perm[sph.link];
            let target_offset = math::mirror_vec(&sph.offset);
            let found = self.contact_spheres.iter().any(|o| {
                o.link == target_link
                    && (o.offset - target_offset).norm() <= tol
                    && (o.radius - sph.radius).abs() <= tol
            });
            if !found {
                return fail(format!("contact sphere {i} has no mirrored counterpart"));
            }
        }

        // The resting pose must be its own mirror image.
        let mirrored_pose = self.mirror_joint_vector(&self.default_pose);
        for (j, (&a, &b)) in self.default_pose.iter().zip(&mirrored_pose).enumerate() {
            if (a - b).abs() > tol {
                return fail(format!("default_pose[{j}] is not mirror-symmetric"));
            }
        }

        Ok(())
    }
}

/// Load a model from a JSON document, or the built-in `mini-humanoid` by
/// name. The returned model has passed [`RobotModel::validate`].
pub fn load_model(path_or_name: &str) -> Result<RobotModel, ModelError> {
    let model = if path_or_name == "mini-humanoid" {
        mini_humanoid()
    } else {
        let text = std::fs::read_to_string(path_or_name)?;
        serde_json::from_str(&text)?
    };
    model.validate()?;
    Ok(model)
}

/// Serialize a model to pretty JSON at `path`.
pub fn save_model(model: &RobotModel, path: &Path) -> Result<(), ModelError> {
    let text = serde_json::to_string_pretty(model)?;
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests;
