use approx::assert_relative_eq;
use nalgebra::{Isometry3, Translation3, UnitQuaternion, Vector3};
use proptest::prelude::*;

use super::*;
use crate::math;

fn base_at(pos: Vector3<f64>, rot: UnitQuaternion<f64>) -> Isometry3<f64> {
    Isometry3::from_parts(Translation3::from(pos), rot)
}

#[test]
fn mini_humanoid_passes_validation() {
    mini_humanoid()
        .validate()
        .expect("builtin model must validate");
}

#[test]
fn single_joint_rig_passes_validation() {
    single_joint_rig().validate().expect("rig must validate");
}

#[test]
fn mini_humanoid_counts() {
    let m = mini_humanoid();
    assert_eq!(m.n_joints(), 12);
    assert_eq!(m.n_links(), 13);
    assert_eq!(m.n_keypoints(), 11);
    assert_eq!(m.feet_links(), vec![3, 6]);
    assert_eq!(m.contact_spheres.len(), 8);
}

#[test]
fn load_model_by_builtin_name() {
    let m = load_model("mini-humanoid").unwrap();
    assert_eq!(m.name, "mini-humanoid");
}

#[test]
fn fk_single_joint_trigonometry() {
    // Arm of length 0.5 rotated +90 degrees about +y: the hand offset
    // (0, 0.05, -0.5) maps to (-0.5, 0.05, 0) relative to the base.
    let m = single_joint_rig();
    let base = base_at(Vector3::new(0.0, 0.0, 1.0), UnitQuaternion::identity());
    let poses = m.fk(&base, &[std::f64::consts::FRAC_PI_2]);
    let kps = m.keypoints_global(&poses);
    let l_hand = kps[m.keypoint_index("l_hand").unwrap()];
    assert_relative_eq!(l_hand, Vector3::new(-0.5, 0.05, 1.0), epsilon = 1e-12);
}

#[test]
fn fk_two_link_chain_matches_planar_trigonometry() {
    let m = chain(2);
    let base = base_at(Vector3::new(0.0, 0.0, 2.0), UnitQuaternion::identity());
    for &(t1, t2) in &[(0.3, -0.7), (1.2, 0.4), (-0.9, 1.8)] {
        let poses = m.fk(&base, &[t1, t2]);
        // Pitch about +y swings the rod tip toward -x for positive angles.
        let elbow = Vector3::new(-0.4 * t1.sin(), 0.0, 2.0 - 0.4 * t1.cos());
        let tip = elbow + Vector3::new(-0.4 * (t1 + t2).sin(), 0.0, -0.4 * (t1 + t2).cos());
        assert_relative_eq!(
            poses[1].translation.vector,
            Vector3::new(0.0, 0.0, 2.0),
            epsilon = 1e-12
        );
        assert_relative_eq!(poses[2].translation.vector, elbow, epsilon = 1e-12);
        let tip_world = poses[2]
            .transform_point(&Vector3::new(0.0, 0.0, -0.4).into())
            .coords;
        assert_relative_eq!(tip_world, tip, epsilon = 1e-12);
    }
}

#[test]
fn fk_from_raw_rejects_non_unit_quaternion() {
    let m = single_joint_rig();
    let err = m
        .fk_from_raw([0.0; 3], [1.0, 0.2, 0.0, 0.0], &[0.0])
        .unwrap_err();
    assert!(err.to_string().contains("quaternion"), "got: {err}");
}

#[test]
fn fk_from_raw_rejects_wrong_joint_count() {
    let m = single_joint_rig();
    assert!(m
        .fk_from_raw([0.0; 3], [1.0, 0.0, 0.0, 0.0], &[0.0, 0.0])
        .is_err());
}

#[test]
fn keypoints_local_pelvis_is_origin_and_heading_strips_yaw() {
    let m = mini_humanoid();
    let rot = math::yaw_quat(1.1) * UnitQuaternion::from_axis_angle(&Vector3::y_axis(), 0.35);
    let base = base_at(Vector3::new(2.0, -1.0, 0.7), rot);
    let poses = m.fk(&base, &m.default_pose);
    let local = m.keypoints_local(&poses);
    let pelvis = m.keypoint_index("pelvis").unwrap();
    assert_relative_eq!(local[pelvis], Vector3::zeros(), epsilon = 1e-12);

    // Independent oracle: rotate the displacement by the inverse yaw, where
    // yaw comes from the rotation-matrix heading of the x axis.
    let global = m.keypoints_global(&poses);
    let fwd = rot * Vector3::x();
    let yaw = fwd.y.atan2(fwd.x);
    for (g, l) in global.iter().zip(&local) {
        let expect = math::yaw_quat(yaw).inverse() * (g - base.translation.vector);
        assert_relative_eq!(*l, expect, epsilon = 1e-12);
    }
}

#[test]
fn heading_frame_of_tilted_pelvis_matches_yaw_oracle() {
    let rot = UnitQuaternion::from_euler_angles(0.2, -0.5, 2.0);
    let frame = RobotModel::heading_frame(&base_at(Vector3::new(1.0, 2.0, 3.0), rot));
    // z axis remains world-up and the yaw matches the quaternion formula.
    assert_relative_eq!(frame.rotation * Vector3::z(), Vector3::z(), epsilon = 1e-12);
    assert_relative_eq!(
        math::yaw_of(&frame.rotation),
        math::yaw_of(&rot),
        epsilon = 1e-12
    );
}

#[test]
fn mirror_joint_vector_swaps_sides_with_signs() {
    let m = mini_humanoid();
    let v: Vec<f64> = (0..12).map(|i| i as f64 + 1.0).collect();
    let w = m.mirror_joint_vector(&v);
    let r_hip = m.joint_index("r_hip_pitch").unwrap();
    let l_hip = m.joint_index("l_hip_pitch").unwrap();
    assert_eq!(w[r_hip], v[l_hip]);
    let r_roll = m.joint_index("r_shoulder_roll").unwrap();
    let l_roll = m.joint_index("l_shoulder_roll").unwrap();
    assert_eq!(w[r_roll], -v[l_roll]);
}

#[test]
fn mirror_maps_are_involutions() {
    let m = mini_humanoid();
    let v: Vec<f64> = (0..12).map(|i| (i as f64 * 0.37).sin()).collect();
    assert_eq!(m.mirror_joint_vector(&m.mirror_joint_vector(&v)), v);

    let pts: Vec<Vector3<f64>> = (0..11)
        .map(|i| Vector3::new(i as f64, 0.1 * i as f64, -0.2))
        .collect();
    let twice = m.mirror_keypoint_vec3(&m.mirror_keypoint_vec3(&pts));
    for (a, b) in twice.iter().zip(&pts) {
        assert_eq!(a, b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Forward kinematics commutes with the mirror: running FK on the
    /// mirrored state equals mirroring the keypoints of the original state.
    #[test]
    fn fk_is_mirror_equivariant(
        px in -2.0f64..2.0, py in -2.0f64..2.0, pz in 0.2f64..1.5,
        roll in -0.6f64..0.6, pitch in -0.6f64..0.6, yaw in -3.0f64..3.0,
        seed in 0u64..1000,
    ) {
        let m = mini_humanoid();
        let mut q = Vec::with_capacity(12);
        let mut s = seed;
        for j in &m.joints {
            // Cheap deterministic pseudo-random angles within limits.
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let u = (s >> 11) as f64 / (1u64 << 53) as f64;
            q.push(j.limits[0] + u * (j.limits[1] - j.limits[0]));
        }
        let base = base_at(
            Vector3::new(px, py, pz),
            UnitQuaternion::from_euler_angles(roll, pitch, yaw),
        );

        let kps = m.keypoints_global(&m.fk(&base, &q));
        let rots = m.keypoint_rotations(&m.fk(&base, &q));

        let base_m = RobotModel::mirror_base_pose(&base);
        let q_m = m.mirror_joint_vector(&q);
        let poses_m = m.fk(&base_m, &q_m);
        let kps_m = m.keypoints_global(&poses_m);
        let rots_m = m.keypoint_rotations(&poses_m);

        let expect = m.mirror_keypoint_vec3(&kps);
        for (a, b) in kps_m.iter().zip(&expect) {
            prop_assert!((a - b).norm() <= 1e-9, "keypoint mismatch: {a} vs {b}");
        }
        let expect_rot = m.mirror_keypoint_quat(&rots);
        for (a, b) in rots_m.iter().zip(&expect_rot) {
            prop_assert!(math::quat_angle(a, b) <= 1e-9, "rotation mismatch");
        }

        // Local keypoints obey the same permutation + y-negation map.
        let local = m.keypoints_local(&m.fk(&base, &q));
        let local_m = m.keypoints_local(&poses_m);
        let expect_local = m.mirror_keypoint_vec3(&local);
        for (a, b) in local_m.iter().zip(&expect_local) {
            prop_assert!((a - b).norm() <= 1e-9, "local keypoint mismatch: {a} vs {b}");
        }
    }
}

#[test]
fn validation_rejects_non_unit_axis() {
    let mut m = mini_humanoid();
    m.joints[0].axis = Vector3::new(0.0, 2.0, 0.0);
    let err = m.validate().unwrap_err().to_string();
    assert!(err.contains("axis"), "got: {err}");
}

#[test]
fn validation_rejects_asymmetric_mass() {
    let mut m = mini_humanoid();
    m.links[1].mass += 0.5; // r_thigh heavier than l_thigh
    let err = m.validate().unwrap_err().to_string();
    assert!(err.contains("mass does not mirror"), "got: {err}");
}

#[test]
fn validation_rejects_missing_required_keypoint() {
    let mut m = mini_humanoid();
    let idx = m.keypoint_index("head").unwrap();
    m.keypoints[idx].name = "skull".into();
    // Keep the permutation valid so the failure is about the missing name.
    let err = m.validate().unwrap_err().to_string();
    assert!(err.contains("head"), "got: {err}");
}

#[test]
fn validation_rejects_non_involutive_permutation() {
    let mut m = mini_humanoid();
    m.symmetry.joint_perm[0] = 1;
    let err = m.validate().unwrap_err().to_string();
    assert!(err.contains("involution"), "got: {err}");
}

#[test]
fn validation_rejects_bad_default_pose() {
    let mut m = mini_humanoid();
    m.default_pose[1] = 5.0; // outside knee limits
    let err = m.validate().unwrap_err().to_string();
    assert!(err.contains("default_pose"), "got: {err}");
}

#[test]
fn model_document_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    let m = mini_humanoid();
    save_model(&m, &path).unwrap();
    let loaded = load_model(path.to_str().unwrap()).unwrap();
    assert_eq!(
        serde_json::to_string(&m).unwrap(),
        serde_json::to_string(&loaded).unwrap()
    );
}

#[test]
fn load_model_rejects_malformed_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{ not json").unwrap();
    assert!(matches!(
        load_model(path.to_str().unwrap()),
        Err(ModelError::Json(_))
    ));
}

#[test]
fn link_perm_pairs_sides() {
    let m = mini_humanoid();
    let lp = m.link_perm();
    assert_eq!(lp[0], 0);
    assert_eq!(lp[1], 4); // r_thigh <-> l_thigh
    assert_eq!(lp[3], 6); // r_foot <-> l_foot
    assert_eq!(lp[9], 12); // r_forearm <-> l_forearm
    for (i, &p) in lp.iter().enumerate() {
        assert_eq!(lp[p], i, "link_perm must be an involution");
    }
}
