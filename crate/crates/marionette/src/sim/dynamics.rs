//! Floating-base rigid-body dynamics in generalized coordinates.
//!
//! Generalized velocity ordering: `u = [v_base (world, 3), ω_base (world, 3),
//! q̇ (n)]`, with `v_base` the velocity of the base frame origin. All spatial
//! algebra is done in the world frame about the world origin, so composite
//! inertias add without frame transport. Spatial vectors are `[angular;
//! linear]`.
//!
//! * Mass matrix: composite-rigid-body algorithm — `M[i][j] = s_iᵀ I^c s_j`
//!   with `I^c` the composite spatial inertia of the deeper dof's subtree.
//! * Bias forces: recursive Newton–Euler with zero generalized acceleration;
//!   the result `b(q, u)` collects Coriolis, centrifugal, and gravity terms so
//!   the equations of motion read `M(q) u̇ = τ − b(q, u) + Σ Jᵀ f_ext`.

use nalgebra::{DMatrix, DVector, Isometry3, Matrix3, Matrix6, UnitQuaternion, Vector3, Vector6};

use crate::math::skew;
use crate::model::RobotModel;

/// Per-step kinematic cache: world link poses plus derived world-frame
/// quantities used by the dynamics algorithms.
#[derive(Debug, Clone)]
pub struct Kinematics {
    pub poses: Vec<Isometry3<f64>>,
    /// World center of mass per link.
    pub com_w: Vec<Vector3<f64>>,
    /// World rotational inertia about the center of mass per link.
    pub inertia_w: Vec<Matrix3<f64>>,
    /// World joint axis per joint.
    pub axis_w: Vec<Vector3<f64>>,
    /// World joint anchor per joint (== child link origin).
    pub anchor_w: Vec<Vector3<f64>>,
}

/// Per-link world-frame velocities. `lin` is the velocity of the link frame
/// origin (not the center of mass).
#[derive(Debug, Clone)]
pub struct Velocities {
    pub ang: Vec<Vector3<f64>>,
    pub lin: Vec<Vector3<f64>>,
}

/// Forward kinematics plus the world-frame inertial quantities.
pub fn kinematics(model: &RobotModel, base: &Isometry3<f64>, q: &[f64]) -> Kinematics {
    let poses = model.fk(base, q);
    let mut com_w = Vec::with_capacity(model.n_links());
    let mut inertia_w = Vec::with_capacity(model.n_links());
    for (link, pose) in model.links.iter().zip(&poses) {
        let r = pose.rotation.to_rotation_matrix().into_inner();
        com_w.push(pose.transform_point(&link.com.into()).coords);
        inertia_w.push(r * link.inertia * r.transpose());
    }
    let mut axis_w = Vec::with_capacity(model.n_joints());
    let mut anchor_w = Vec::with_capacity(model.n_joints());
    for (j, joint) in model.joints.iter().enumerate() {
        // The axis is invariant under the joint's own rotation, so rotating by
        // the child frame equals rotating by the parent frame.
        axis_w.push(poses[j + 1].rotation * joint.axis);
        anchor_w.push(poses[j + 1].translation.vector);
    }
    Kinematics {
        poses,
        com_w,
        inertia_w,
        axis_w,
        anchor_w,
    }
}

/// Propagate world-frame link velocities down the tree.
pub fn velocities(
    model: &RobotModel,
    kin: &Kinematics,
    base_linvel: &Vector3<f64>,
    base_angvel: &Vector3<f64>,
    qd: &[f64],
) -> Velocities {
    let n_links = model.n_links();
    let mut ang = Vec::with_capacity(n_links);
    let mut lin = Vec::with_capacity(n_links);
    ang.push(*base_angvel);
    lin.push(*base_linvel);
    for (j, joint) in model.joints.iter().enumerate() {
        let p = joint.parent;
        let r = kin.anchor_w[j] - kin.poses[p].translation.vector;
        // The joint anchor is a material point of the parent link.
        lin.push(lin[p] + ang[p].cross(&r));
        ang.push(ang[p] + kin.axis_w[j] * qd[j]);
    }
    Velocities { ang, lin }
}

/// Spatial inertia of one link about the world origin ([angular; linear]).
fn spatial_inertia(mass: f64, com_w: &Vector3<f64>, inertia_w: &Matrix3<f64>) -> Matrix6<f64> {
    let cx = skew(com_w);
    let mut m6 = Matrix6::zeros();
    m6.fixed_view_mut::<3, 3>(0, 0)
        .copy_from(&(inertia_w + mass * cx * cx.transpose()));
    m6.fixed_view_mut::<3, 3>(0, 3).copy_from(&(mass * cx));
    m6.fixed_view_mut::<3, 3>(3, 0)
        .copy_from(&(mass * cx.transpose()));
    m6.fixed_view_mut::<3, 3>(3, 3)
        .copy_from(&(Matrix3::identity() * mass));
    m6
}

fn spat(ang: Vector3<f64>, lin: Vector3<f64>) -> Vector6<f64> {
    Vector6::new(ang.x, ang.y, ang.z, lin.x, lin.y, lin.z)
}

/// Motion subspace (unit twist about the world origin) of each generalized
/// velocity coordinate.
fn motion_subspaces(model: &RobotModel, kin: &Kinematics) -> Vec<Vector6<f64>> {
    let xb = kin.poses[0].translation.vector;
    let mut s = Vec::with_capacity(6 + model.n_joints());
    for k in 0..3 {
        let mut e = Vector3::zeros();
        e[k] = 1.0;
        s.push(spat(Vector3::zeros(), e));
    }
    for k in 0..3 {
        let mut e = Vector3::zeros();
        e[k] = 1.0;
        // Rotation about the base origin: the material point at the world
        // origin moves with x_b × ω.
        s.push(spat(e, xb.cross(&e)));
    }
    for j in 0..model.n_joints() {
        let a = kin.axis_w[j];
        s.push(spat(a, kin.anchor_w[j].cross(&a)));
    }
    s
}

/// Dense joint-space mass matrix, dimension `(6 + n) × (6 + n)`, via the
/// composite-rigid-body algorithm. Symmetric positive definite for any valid
/// model and configuration.
pub fn mass_matrix(model: &RobotModel, kin: &Kinematics) -> DMatrix<f64> {
    let n = model.n_joints();
    let dim = 6 + n;
    let s = motion_subspaces(model, kin);

    // Composite spatial inertias: accumulate children into parents. Children
    // always have a higher link index than their parent.
    let mut composite: Vec<Matrix6<f64>> = model
        .links
        .iter()
        .enumerate()
        .map(|(l, link)| spatial_inertia(link.mass, &kin.com_w[l], &kin.inertia_w[l]))
        .collect();
    for l in (1..model.n_links()).rev() {
        let parent = model.joints[l - 1].parent;
        let child = composite[l];
        composite[parent] += child;
    }

    let mut m = DMatrix::zeros(dim, dim);

    // Base block: the composite inertia of the whole tree.
    for a in 0..6 {
        let f = composite[0] * s[a];
        for b in 0..=a {
            let v = s[b].dot(&f);
            m[(a, b)] = v;
            m[(b, a)] = v;
        }
    }

    // Joint rows: pair each joint with its ancestors (and the base).
    for j in 0..n {
        let dof = 6 + j;
        let f = composite[j + 1] * s[dof];
        m[(dof, dof)] = s[dof].dot(&f);
        let mut link = model.joints[j].parent;
        while link != 0 {
            let anc = 6 + (link - 1); // joint whose child is `link`
            let v = s[anc].dot(&f);
            m[(dof, anc)] = v;
            m[(anc, dof)] = v;
            link = model.joints[link - 1].parent;
        }
        for b in 0..6 {
            let v = s[b].dot(&f);
            m[(dof, b)] = v;
            m[(b, dof)] = v;
        }
    }
    m
}

/// Bias forces `b(q, u)` (Coriolis, centrifugal, gravity) via recursive
/// Newton–Euler with zero generalized acceleration: the generalized force the
/// actuators would have to apply to sustain the current velocities.
///
/// `gravity` is the magnitude of the field acting along −z.
pub fn bias_forces(
    model: &RobotModel,
    kin: &Kinematics,
    vel: &Velocities,
    qd: &[f64],
    gravity: f64,
) -> DVector<f64> {
    let n = model.n_joints();
    let n_links = model.n_links();
    let g_vec = Vector3::new(0.0, 0.0, -gravity);

    // Forward pass: accelerations with u̇ = 0 (velocity products only). The
    // joint axis is carried by the parent, so its rate is ω_p × a.
    let mut ang_acc = vec![Vector3::zeros(); n_links];
    let mut lin_acc = vec![Vector3::zeros(); n_links]; // of link origins
    for (j, joint) in model.joints.iter().enumerate() {
        let p = joint.parent;
        let c = j + 1;
        let r = kin.anchor_w[j] - kin.poses[p].translation.vector;
        ang_acc[c] = ang_acc[p] + vel.ang[p].cross(&kin.axis_w[j]) * qd[j];
        lin_acc[c] = lin_acc[p] + ang_acc[p].cross(&r) + vel.ang[p].cross(&vel.ang[p].cross(&r));
    }

    // Net applied wrench per body (about each link origin) required for the
    // current motion against gravity.
    let mut force = vec![Vector3::zeros(); n_links];
    let mut torque = vec![Vector3::zeros(); n_links];
    for l in 0..n_links {
        let rc = kin.com_w[l] - kin.poses[l].translation.vector;
        let a_com = lin_acc[l] + ang_acc[l].cross(&rc) + vel.ang[l].cross(&vel.ang[l].cross(&rc));
        let mass = model.links[l].mass;
        let f = mass * (a_com - g_vec);
        let iw = &kin.inertia_w[l];
        let tau_com = iw * ang_acc[l] + vel.ang[l].cross(&(iw * vel.ang[l]));
        force[l] = f;
        torque[l] = tau_com + rc.cross(&f);
    }

    // Backward pass: accumulate child wrenches into parents.
    for l in (1..n_links).rev() {
        let p = model.joints[l - 1].parent;
        let r = kin.poses[l].translation.vector - kin.poses[p].translation.vector;
        let (f_child, n_child) = (force[l], torque[l]);
        force[p] += f_child;
        torque[p] += n_child + r.cross(&f_child);
    }

    let mut b = DVector::zeros(6 + n);
    b.fixed_rows_mut::<3>(0).copy_from(&force[0]);
    b.fixed_rows_mut::<3>(3).copy_from(&torque[0]);
    for j in 0..n {
        b[6 + j] = kin.axis_w[j].dot(&torque[j + 1]);
    }
    b
}

/// Accumulate `Jᵀ f` for a force applied at a world point rigidly attached to
/// `link`, into the generalized force vector `out`.
pub fn apply_point_force(
    model: &RobotModel,
    kin: &Kinematics,
    link: usize,
    point_w: &Vector3<f64>,
    force_w: &Vector3<f64>,
    out: &mut DVector<f64>,
) {
    // Base translation columns are the identity.
    for k in 0..3 {
        out[k] += force_w[k];
    }
    // Base rotation columns: velocity of the point is ω × (p − x_b).
    let r = point_w - kin.poses[0].translation.vector;
    let torque = r.cross(force_w);
    for k in 0..3 {
        out[3 + k] += torque[k];
    }
    // Joint columns along the ancestor path: a_j × (p − o_j).
    let mut l = link;
    while l != 0 {
        let j = l - 1;
        out[6 + j] += kin.axis_w[j]
            .cross(&(point_w - kin.anchor_w[j]))
            .dot(force_w);
        l = model.joints[j].parent;
    }
}

/// Assemble the generalized velocity vector from base velocities and `qd`.
pub fn assemble_u(
    base_linvel: &Vector3<f64>,
    base_angvel: &Vector3<f64>,
    qd: &[f64],
) -> DVector<f64> {
    let mut u = DVector::zeros(6 + qd.len());
    u.fixed_rows_mut::<3>(0).copy_from(base_linvel);
    u.fixed_rows_mut::<3>(3).copy_from(base_angvel);
    for (i, &v) in qd.iter().enumerate() {
        u[6 + i] = v;
    }
    u
}

/// Integrate a world-frame angular velocity over `dt` onto a quaternion and
/// renormalize.
pub fn integrate_quat(
    quat: &UnitQuaternion<f64>,
    ang_vel: &Vector3<f64>,
    dt: f64,
) -> UnitQuaternion<f64> {
    let step = UnitQuaternion::from_scaled_axis(ang_vel * dt);
    UnitQuaternion::new_normalize((step * quat).into_inner())
}
