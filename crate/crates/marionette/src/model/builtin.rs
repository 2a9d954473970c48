//! Built-in models: the default `mini-humanoid` plus small rigs used by
//! dynamics oracles and learning smoke tests.
//!
//! The mini-humanoid is a 12-DoF biped: per leg hip pitch, knee, and ankle
//! pitch; per arm shoulder pitch, shoulder roll, and elbow. Torso and head are
//! lumped into the pelvis link. It stands ~1.1 m tall at the head keypoint and
//! has a total mass of ~33 kg. The left side is generated from the right by
//! the exact mirror construction, so symmetry validation holds to the last
//! bit.

use nalgebra::{Matrix3, Vector3};

use super::{
    ContactSphere, JointClass, JointSpec, KeypointSpec, LinkSpec, MirrorPlane, RobotModel,
    SymmetryMap, WeightClass, MODEL_FORMAT_VERSION,
};
use crate::math;

/// Inertia of a solid cuboid with side lengths `lx, ly, lz` about its center.
fn cuboid_inertia(mass: f64, lx: f64, ly: f64, lz: f64) -> Matrix3<f64> {
    let c = mass / 12.0;
    Matrix3::from_diagonal(&Vector3::new(
        c * (ly * ly + lz * lz),
        c * (lx * lx + lz * lz),
        c * (lx * lx + ly * ly),
    ))
}

/// Inertia of a solid cylinder with axis z, radius `r`, length `l`.
fn cylinder_inertia_z(mass: f64, r: f64, l: f64) -> Matrix3<f64> {
    let ixx = mass * (3.0 * r * r + l * l) / 12.0;
    Matrix3::from_diagonal(&Vector3::new(ixx, ixx, mass * r * r / 2.0))
}

/// Inertia of a solid sphere of radius `r`.
fn sphere_inertia(mass: f64, r: f64) -> Matrix3<f64> {
    Matrix3::from_diagonal(&Vector3::from_element(0.4 * mass * r * r))
}

/// Mirror a link across the sagittal plane.
fn mirror_link(src: &LinkSpec, name: &str) -> LinkSpec {
    let m = Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, 1.0));
    LinkSpec {
        name: name.into(),
        mass: src.mass,
        com: math::mirror_vec(&src.com),
        inertia: m * src.inertia * m,
    }
}

/// Mirror a joint across the sagittal plane. `sign` is the symmetry sign of
/// the pair (+1 keeps the angle, −1 negates it); the axis and limits follow.
fn mirror_joint(src: &JointSpec, name: &str, parent: usize, child: usize, sign: f64) -> JointSpec {
    let axis = if sign < 0.0 {
        math::mirror_vec(&src.axis)
    } else {
        -math::mirror_vec(&src.axis)
    };
    let limits = if sign < 0.0 {
        [-src.limits[1], -src.limits[0]]
    } else {
        src.limits
    };
    JointSpec {
        name: name.into(),
        parent,
        child,
        origin: math::mirror_vec(&src.origin),
        axis,
        limits,
        torque_limit: src.torque_limit,
        kp: src.kp,
        kd: src.kd,
        class: src.class,
    }
}

/// The default built-in humanoid. Validated by construction (checked in
/// tests): `load_model("mini-humanoid")` returns exactly this.
pub fn mini_humanoid() -> RobotModel {
    let y = Vector3::y();

    // ── Links (right side authored, left mirrored) ──────────────────────
    let pelvis = LinkSpec {
        name: "pelvis".into(),
        mass: 14.0,
        com: Vector3::new(0.0, 0.0, 0.15),
        inertia: cuboid_inertia(14.0, 0.25, 0.30, 0.55),
    };
    let r_thigh = LinkSpec {
        name: "r_thigh".into(),
        mass: 3.0,
        com: Vector3::new(0.0, 0.0, -0.14),
        inertia: cylinder_inertia_z(3.0, 0.05, 0.30),
    };
    let r_shin = LinkSpec {
        name: "r_shin".into(),
        mass: 2.0,
        com: Vector3::new(0.0, 0.0, -0.13),
        inertia: cylinder_inertia_z(2.0, 0.04, 0.30),
    };
    // Feet are deliberately heavy and flat. The sole spheres load the foot's
    // pitch/roll inertia through their levers plus the ankle servo, and
    // explicit penalty contact at 200 Hz is only stable while
    // 2·c·dt/I + k·dt²/I stays below 4 for every such mode; a light thin
    // foot rocks itself airborne within a few control steps.
    let r_foot = LinkSpec {
        name: "r_foot".into(),
        mass: 2.5,
        com: Vector3::new(0.02, 0.0, -0.03),
        inertia: cuboid_inertia(2.5, 0.30, 0.14, 0.08),
    };
    let r_shoulder = LinkSpec {
        name: "r_shoulder".into(),
        mass: 0.3,
        com: Vector3::zeros(),
        inertia: sphere_inertia(0.3, 0.04),
    };
    let r_upper_arm = LinkSpec {
        name: "r_upper_arm".into(),
        mass: 1.2,
        com: Vector3::new(0.0, 0.0, -0.11),
        inertia: cylinder_inertia_z(1.2, 0.04, 0.24),
    };
    let r_forearm = LinkSpec {
        name: "r_forearm".into(),
        mass: 0.8,
        com: Vector3::new(0.0, 0.0, -0.10),
        inertia: cylinder_inertia_z(0.8, 0.035, 0.22),
    };

    // ── Joints (right side authored, left mirrored) ─────────────────────
    // Leg gains are sized for passive stance stability: with the feet on
    // penalty springs the gravitational stiffness of the pitch stack (foot,
    // ankle, knee, hip in absolute angles) must stay positive definite, and
    // the series compliance of every stage below erodes each joint's own
    // margin. kp = 250 per joint leaves ≈ +60 N·m/rad in the softest
    // direction; at kp = 100 the stack is outright unstable and the robot
    // topples from rest in about two seconds.
    let r_hip_pitch = JointSpec {
        name: "r_hip_pitch".into(),
        parent: 0,
        child: 1,
        origin: Vector3::new(0.0, -0.09, -0.04),
        axis: y,
        limits: [-2.0, 2.0],
        torque_limit: 80.0,
        kp: 250.0,
        kd: 8.0,
        class: JointClass::Lower,
    };
    let r_knee = JointSpec {
        name: "r_knee".into(),
        parent: 1,
        child: 2,
        origin: Vector3::new(0.0, 0.0, -0.30),
        axis: y,
        limits: [-0.05, 2.4],
        torque_limit: 80.0,
        kp: 250.0,
        kd: 8.0,
        class: JointClass::Lower,
    };
    let r_ankle_pitch = JointSpec {
        name: "r_ankle_pitch".into(),
        parent: 2,
        child: 3,
        origin: Vector3::new(0.0, 0.0, -0.30),
        axis: y,
        limits: [-1.0, 1.0],
        torque_limit: 40.0,
        kp: 250.0,
        kd: 6.0,
        class: JointClass::Lower,
    };
    let r_shoulder_pitch = JointSpec {
        name: "r_shoulder_pitch".into(),
        parent: 0,
        child: 7,
        origin: Vector3::new(0.0, -0.16, 0.35),
        axis: y,
        limits: [-2.8, 2.8],
        torque_limit: 30.0,
        kp: 30.0,
        kd: 1.5,
        class: JointClass::Upper,
    };
    // Right-arm abduction (lifting the arm away from the body) is a negative
    // roll about +x; the mirrored left joint flips the interval.
    let r_shoulder_roll = JointSpec {
        name: "r_shoulder_roll".into(),
        parent: 7,
        child: 8,
        origin: Vector3::zeros(),
        axis: Vector3::x(),
        limits: [-2.5, 0.3],
        torque_limit: 30.0,
        kp: 30.0,
        kd: 1.5,
        class: JointClass::Upper,
    };
    let r_elbow = JointSpec {
        name: "r_elbow".into(),
        parent: 8,
        child: 9,
        origin: Vector3::new(0.0, 0.0, -0.24),
        axis: y,
        limits: [-2.4, 0.05],
        torque_limit: 15.0,
        kp: 15.0,
        kd: 0.8,
        class: JointClass::Upper,
    };

    let links = vec![
        pelvis,
        r_thigh.clone(),
        r_shin.clone(),
        r_foot.clone(),
        mirror_link(&r_thigh, "l_thigh"),
        mirror_link(&r_shin, "l_shin"),
        mirror_link(&r_foot, "l_foot"),
        r_shoulder.clone(),
        r_upper_arm.clone(),
        r_forearm.clone(),
        mirror_link(&r_shoulder, "l_shoulder"),
        mirror_link(&r_upper_arm, "l_upper_arm"),
        mirror_link(&r_forearm, "l_forearm"),
    ];

    let joints = vec![
        r_hip_pitch.clone(),
        r_knee.clone(),
        r_ankle_pitch.clone(),
        mirror_joint(&r_hip_pitch, "l_hip_pitch", 0, 4, 1.0),
        mirror_joint(&r_knee, "l_knee", 4, 5, 1.0),
        mirror_joint(&r_ankle_pitch, "l_ankle_pitch", 5, 6, 1.0),
        r_shoulder_pitch.clone(),
        r_shoulder_roll.clone(),
        r_elbow.clone(),
        mirror_joint(&r_shoulder_pitch, "l_shoulder_pitch", 0, 10, 1.0),
        mirror_joint(&r_shoulder_roll, "l_shoulder_roll", 10, 11, -1.0),
        mirror_joint(&r_elbow, "l_elbow", 11, 12, 1.0),
    ];

    // ── Keypoints ───────────────────────────────────────────────────────
    let kp = |name: &str, link: usize, offset: Vector3<f64>, class: WeightClass| KeypointSpec {
        name: name.into(),
        link,
        offset,
        class,
    };
    let keypoints = vec![
        kp("pelvis", 0, Vector3::zeros(), WeightClass::Upper),
        kp("torso", 0, Vector3::new(0.0, 0.0, 0.25), WeightClass::Upper),
        kp(
            "head",
            0,
            Vector3::new(0.0, 0.0, 0.45),
            WeightClass::EndEffector,
        ),
        kp(
            "r_hand",
            9,
            Vector3::new(0.0, 0.0, -0.22),
            WeightClass::EndEffector,
        ),
        kp(
            "l_hand",
            12,
            Vector3::new(0.0, 0.0, -0.22),
            WeightClass::EndEffector,
        ),
        kp("r_elbow", 9, Vector3::zeros(), WeightClass::Upper),
        kp("l_elbow", 12, Vector3::zeros(), WeightClass::Upper),
        kp("r_knee", 2, Vector3::zeros(), WeightClass::Lower),
        kp("l_knee", 5, Vector3::zeros(), WeightClass::Lower),
        kp(
            "r_foot",
            3,
            Vector3::new(0.03, 0.0, -0.04),
            WeightClass::Lower,
        ),
        kp(
            "l_foot",
            6,
            Vector3::new(0.03, 0.0, -0.04),
            WeightClass::Lower,
        ),
    ];

    // ── Contact spheres: four per foot at the sole corners ──────────────
    // The heel/toe rows sit ±0.09 m from the foot's center of mass, which
    // sets the foot-ground rotational stiffness the ankle leans on.
    let mut contact_spheres = Vec::new();
    for foot in [3usize, 6] {
        for &x in &[-0.07, 0.11] {
            for &yy in &[-0.03, 0.03] {
                contact_spheres.push(ContactSphere {
                    link: foot,
                    offset: Vector3::new(x, yy, -0.04),
                    radius: 0.01,
                });
            }
        }
    }

    let symmetry = SymmetryMap {
        joint_perm: vec![3, 4, 5, 0, 1, 2, 9, 10, 11, 6, 7, 8],
        joint_sign: vec![1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, -1.0, 1.0, 1.0, -1.0, 1.0],
        keypoint_perm: vec![0, 1, 2, 4, 3, 6, 5, 8, 7, 10, 9],
        base_mirror: MirrorPlane::SagittalXz,
    };

    RobotModel {
        format_version: MODEL_FORMAT_VERSION,
        name: "mini-humanoid".into(),
        links,
        joints,
        keypoints,
        contact_spheres,
        default_pose: vec![0.0; 12],
        // Hip drop 0.04 + thigh 0.30 + shin 0.30 + ankle-to-sole 0.05.
        default_root_pos: Vector3::new(0.0, 0.0, 0.69),
        symmetry,
    }
}

/// A single-joint rig used by learning smoke tests: one pitch joint swinging
/// a 0.5 m arm under a fixed base. Carries the required keypoint names so it
/// passes full validation and can drive the tracking environment.
pub fn single_joint_rig() -> RobotModel {
    let base = LinkSpec {
        name: "pelvis".into(),
        mass: 50.0,
        com: Vector3::zeros(),
        inertia: Matrix3::from_diagonal(&Vector3::new(5.0, 5.0, 5.0)),
    };
    let arm = LinkSpec {
        name: "arm".into(),
        mass: 1.0,
        com: Vector3::new(0.0, 0.0, -0.25),
        inertia: cylinder_inertia_z(1.0, 0.02, 0.5),
    };
    let swing = JointSpec {
        name: "swing".into(),
        parent: 0,
        child: 1,
        origin: Vector3::zeros(),
        axis: Vector3::y(),
        limits: [-3.0, 3.0],
        torque_limit: 40.0,
        kp: 20.0,
        kd: 1.0,
        class: JointClass::Lower,
    };
    let kp = |name: &str, link: usize, offset: Vector3<f64>, class: WeightClass| KeypointSpec {
        name: name.into(),
        link,
        offset,
        class,
    };
    RobotModel {
        format_version: MODEL_FORMAT_VERSION,
        name: "single-joint-rig".into(),
        links: vec![base, arm],
        joints: vec![swing],
        keypoints: vec![
            kp("pelvis", 0, Vector3::zeros(), WeightClass::Upper),
            kp(
                "head",
                0,
                Vector3::new(0.0, 0.0, 0.2),
                WeightClass::EndEffector,
            ),
            kp(
                "l_hand",
                1,
                Vector3::new(0.0, 0.05, -0.5),
                WeightClass::EndEffector,
            ),
            kp(
                "r_hand",
                1,
                Vector3::new(0.0, -0.05, -0.5),
                WeightClass::EndEffector,
            ),
            kp(
                "l_foot",
                1,
                Vector3::new(0.0, 0.05, -0.25),
                WeightClass::Lower,
            ),
            kp(
                "r_foot",
                1,
                Vector3::new(0.0, -0.05, -0.25),
                WeightClass::Lower,
            ),
        ],
        contact_spheres: vec![],
        default_pose: vec![0.0],
        default_root_pos: Vector3::new(0.0, 0.0, 1.0),
        symmetry: SymmetryMap {
            joint_perm: vec![0],
            joint_sign: vec![1.0],
            keypoint_perm: vec![0, 1, 3, 2, 5, 4],
            base_mirror: MirrorPlane::SagittalXz,
        },
    }
}

/// An `n`-link serial chain of 0.4 m rods with pitch joints, used by the
/// dynamics oracles (pendulum periods, energy and momentum conservation,
/// Lagrangian checks). Carries no keypoints or contact spheres and therefore
/// does not pass full validation; it is a test rig, not a loadable robot.
pub fn chain(n: usize) -> RobotModel {
    assert!(n >= 1);
    let mut links = vec![LinkSpec {
        name: "root".into(),
        mass: 1.0,
        com: Vector3::zeros(),
        inertia: Matrix3::from_diagonal(&Vector3::new(0.01, 0.01, 0.01)),
    }];
    let mut joints = Vec::new();
    for i in 0..n {
        links.push(LinkSpec {
            name: format!("rod{i}"),
            mass: 1.0,
            com: Vector3::new(0.0, 0.0, -0.2),
            inertia: cylinder_inertia_z(1.0, 0.02, 0.4),
        });
        joints.push(JointSpec {
            name: format!("j{i}"),
            parent: i,
            child: i + 1,
            origin: if i == 0 {
                Vector3::zeros()
            } else {
                Vector3::new(0.0, 0.0, -0.4)
            },
            axis: Vector3::y(),
            limits: [-10.0, 10.0],
            torque_limit: 1e3,
            kp: 0.0,
            kd: 0.0,
            class: JointClass::Lower,
        });
    }
    RobotModel {
        format_version: MODEL_FORMAT_VERSION,
        name: format!("chain{n}"),
        links,
        joints,
        keypoints: vec![],
        contact_spheres: vec![],
        default_pose: vec![0.0; n],
        default_root_pos: Vector3::new(0.0, 0.0, 2.0),
        symmetry: SymmetryMap {
            joint_perm: (0..n).collect(),
            joint_sign: vec![1.0; n],
            keypoint_perm: vec![],
            base_mirror: MirrorPlane::SagittalXz,
        },
    }
}

/// A single free rigid body with its center of mass at the link origin and
/// distinct principal inertias. Used by momentum-conservation oracles.
pub fn free_body() -> RobotModel {
    RobotModel {
        format_version: MODEL_FORMAT_VERSION,
        name: "free-body".into(),
        links: vec![LinkSpec {
            name: "body".into(),
            mass: 2.5,
            com: Vector3::zeros(),
            inertia: Matrix3::from_diagonal(&Vector3::new(0.1, 0.2, 0.3)),
        }],
        joints: vec![],
        keypoints: vec![],
        contact_spheres: vec![],
        default_pose: vec![],
        default_root_pos: Vector3::new(0.0, 0.0, 1.0),
        symmetry: SymmetryMap {
            joint_perm: vec![],
            joint_sign: vec![],
            keypoint_perm: vec![],
            base_mirror: MirrorPlane::SagittalXz,
        },
    }
}
