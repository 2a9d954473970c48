//! Physics simulation: PD-actuated articulated rigid-body dynamics with
//! penalty ground contact, stepped by semi-implicit Euler.
//!
//! The control loop runs at 50 Hz; each control step integrates 4 physics
//! substeps (200 Hz). A control step:
//!
//! 1. pushes the commanded action through the actuation [`DelayBuffer`],
//! 2. maps the delayed action to PD position targets
//!    (`q_des = default_pose + scale · clip(action)`),
//! 3. optionally applies an impulsive push as a base velocity change,
//! 4. runs the substeps: PD torques (clamped to actuator limits), contact
//!    forces, forward dynamics `(M + dt·diag(kd)) u̇ = τ − b + Jᵀ f`, then
//!    semi-implicit Euler (velocities first, then positions; quaternion
//!    renormalized).
//!
//! The `dt·diag(kd)` term evaluates the PD damping torque at the post-step
//! joint velocity. Purely explicit joint damping at 200 Hz caps kd at
//! `2·I_eff/dt` along the leg chain's least-inertia directions — far below
//! what a stiff stance needs — and blows up as a velocity zigzag at the
//! substep frequency; the implicit term is stable for any kd and costs
//! nothing since the solve is already dense.
//!
//! Joint limits are soft — the simulator never clamps positions; staying in
//! range is the controller's job. Any non-finite state aborts the step with
//! [`SimError::NonFinite`] so callers can reset the episode.

use std::collections::VecDeque;

use nalgebra::{DVector, Isometry3, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::RobotModel;

pub mod contact;
pub mod dynamics;
#[cfg(test)]
mod tests;

pub use contact::{Contact, ContactParams};

/// Error raised by the stepper; both variants mean the episode is dead.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("non-finite {what} at t = {time:.4} s")]
    NonFinite { time: f64, what: &'static str },
    #[error("mass-matrix solve failed at t = {time:.4} s")]
    Singular { time: f64 },
}

/// Simulation parameters. Defaults reproduce the training setup.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    /// Control period in seconds (50 Hz).
    pub dt_control: f64,
    /// Physics substeps per control step (4 → 200 Hz).
    pub substeps: usize,
    /// Gravity magnitude along −z.
    pub gravity: f64,
    /// Ground contact spring stiffness (N/m).
    pub contact_stiffness: f64,
    /// Ground contact damping (N·s/m), used for normal and tangential terms.
    pub contact_damping: f64,
    /// Stiction anchor-spring stiffness (N/m); see [`contact`].
    pub contact_tangential_stiffness: f64,
    /// Coulomb friction coefficient.
    pub friction: f64,
    /// Radians of PD target offset per unit of action.
    pub action_scale: f64,
    /// Symmetric clip applied to raw actions before scaling.
    pub action_clip: f64,
    /// When true the base is welded to its current pose and only the joints
    /// integrate. Used by low-dimensional rigs and dynamics tests.
    pub fixed_base: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt_control: 1.0 / 50.0,
            substeps: 4,
            gravity: 9.81,
            // Calibrated for the mini-humanoid: two-foot rest penetration
            // ≈ 1.8 mm (< 2 mm) while every planted-foot mode stays inside
            // the explicit-integration stability region at 200 Hz.
            contact_stiffness: 2.2e4,
            contact_damping: 50.0,
            contact_tangential_stiffness: 1.0e4,
            friction: 1.0,
            action_scale: 0.25,
            action_clip: 10.0,
            fixed_base: false,
        }
    }
}

impl SimConfig {
    /// Physics substep length.
    pub fn dt_sim(&self) -> f64 {
        self.dt_control / self.substeps as f64
    }

    pub fn contact_params(&self) -> ContactParams {
        ContactParams {
            stiffness: self.contact_stiffness,
            damping: self.contact_damping,
            tangential_stiffness: self.contact_tangential_stiffness,
            friction: self.friction,
        }
    }
}

/// Per-joint PD gains and torque limits, possibly scaled by domain
/// randomization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PdGains {
    pub kp: Vec<f64>,
    pub kd: Vec<f64>,
    pub torque_limit: Vec<f64>,
}

impl PdGains {
    pub fn from_model(model: &RobotModel) -> Self {
        Self {
            kp: model.joints.iter().map(|j| j.kp).collect(),
            kd: model.joints.iter().map(|j| j.kd).collect(),
            torque_limit: model.joints.iter().map(|j| j.torque_limit).collect(),
        }
    }

    /// Fold per-joint gain and motor-strength scales into effective gains.
    /// Motor strength multiplies the produced torque, so it scales both
    /// gains; the hardware torque limit is unchanged.
    pub fn scaled(&self, kp_scale: &[f64], kd_scale: &[f64], motor_scale: &[f64]) -> Self {
        let n = self.kp.len();
        assert!(kp_scale.len() == n && kd_scale.len() == n && motor_scale.len() == n);
        Self {
            kp: (0..n)
                .map(|i| self.kp[i] * kp_scale[i] * motor_scale[i])
                .collect(),
            kd: (0..n)
                .map(|i| self.kd[i] * kd_scale[i] * motor_scale[i])
                .collect(),
            torque_limit: self.torque_limit.clone(),
        }
    }
}

/// Full dynamic state of the robot. Base velocities are world-frame; `linvel`
/// is the velocity of the base frame origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub time: f64,
    pub base_pos: Vector3<f64>,
    pub base_quat: UnitQuaternion<f64>,
    pub base_linvel: Vector3<f64>,
    pub base_angvel: Vector3<f64>,
    pub q: Vec<f64>,
    pub qd: Vec<f64>,
    /// World contact force per collision sphere from the latest substep.
    pub contact_forces: Vec<Vector3<f64>>,
    /// Per-sphere stiction anchors (see [`contact`]); `None` when separated.
    pub contact_anchors: Vec<Option<Vector3<f64>>>,
}

impl SimState {
    /// Rest state: default pose at the default root position, zero velocity.
    pub fn at_rest(model: &RobotModel) -> Self {
        Self {
            time: 0.0,
            base_pos: model.default_root_pos,
            base_quat: UnitQuaternion::identity(),
            base_linvel: Vector3::zeros(),
            base_angvel: Vector3::zeros(),
            q: model.default_pose.clone(),
            qd: vec![0.0; model.n_joints()],
            contact_forces: vec![Vector3::zeros(); model.contact_spheres.len()],
            contact_anchors: vec![None; model.contact_spheres.len()],
        }
    }

    pub fn base_iso(&self) -> Isometry3<f64> {
        Isometry3::from_parts(Translation3::from(self.base_pos), self.base_quat)
    }

    /// First non-finite field, if any.
    pub fn non_finite_field(&self) -> Option<&'static str> {
        if !(self.base_pos.iter().all(|v| v.is_finite())) {
            return Some("base position");
        }
        if !self.base_quat.coords.iter().all(|v| v.is_finite()) {
            return Some("base orientation");
        }
        if !self.base_linvel.iter().all(|v| v.is_finite())
            || !self.base_angvel.iter().all(|v| v.is_finite())
        {
            return Some("base velocity");
        }
        if !self.q.iter().all(|v| v.is_finite()) {
            return Some("joint positions");
        }
        if !self.qd.iter().all(|v| v.is_finite()) {
            return Some("joint velocities");
        }
        None
    }

    /// Reflect the whole state across the robot's sagittal plane. Contact
    /// forces are permuted to the mirrored sphere and reflected.
    pub fn mirrored(&self, model: &RobotModel) -> Self {
        let mirrored_base = RobotModel::mirror_base_pose(&self.base_iso());
        let sphere_perm = model.contact_sphere_perm();
        let mut forces = vec![Vector3::zeros(); self.contact_forces.len()];
        let mut anchors = vec![None; self.contact_anchors.len()];
        for (i, f) in self.contact_forces.iter().enumerate() {
            forces[sphere_perm[i]] = crate::math::mirror_vec(f);
            anchors[sphere_perm[i]] = self.contact_anchors[i].map(|a| crate::math::mirror_vec(&a));
        }
        Self {
            time: self.time,
            base_pos: mirrored_base.translation.vector,
            base_quat: mirrored_base.rotation,
            base_linvel: crate::math::mirror_vec(&self.base_linvel),
            base_angvel: crate::math::mirror_axial(&self.base_angvel),
            q: model.mirror_joint_vector(&self.q),
            qd: model.mirror_joint_vector(&self.qd),
            contact_forces: forces,
            contact_anchors: anchors,
        }
    }
}

/// FIFO actuation delay in whole control steps. Delay 0 is a passthrough.
#[derive(Debug, Clone)]
pub struct DelayBuffer {
    delay: usize,
    queue: VecDeque<Vec<f64>>,
}

impl DelayBuffer {
    pub fn new(delay: usize) -> Self {
        Self {
            delay,
            queue: VecDeque::with_capacity(delay + 1),
        }
    }

    pub fn delay(&self) -> usize {
        self.delay
    }

    /// Clear history; until the buffer refills, the oldest queued action is
    /// replayed (so the first pushes after a reset come out immediately).
    pub fn reset(&mut self) {
        self.queue.clear();
    }

    /// Enqueue the newest action and return the one to apply this step.
    pub fn push_and_get(&mut self, action: &[f64]) -> Vec<f64> {
        self.queue.push_back(action.to_vec());
        while self.queue.len() > self.delay + 1 {
            self.queue.pop_front();
        }
        self.queue
            .front()
            .expect("queue is never empty after a push")
            .clone()
    }
}

/// What happened during one control step.
#[derive(Debug, Clone)]
pub struct StepInfo {
    /// Action after the delay buffer — what the PD controller actually saw.
    pub applied_action: Vec<f64>,
    /// PD position targets derived from the applied action.
    pub q_des: Vec<f64>,
    /// Clamped PD torques from the final substep.
    pub torques: Vec<f64>,
    /// Contact states from the final substep.
    pub contacts: Vec<Contact>,
}

/// Map a raw policy action to PD position targets.
pub fn action_to_target(model: &RobotModel, cfg: &SimConfig, action: &[f64]) -> Vec<f64> {
    model
        .default_pose
        .iter()
        .zip(action)
        .map(|(d, a)| d + cfg.action_scale * a.clamp(-cfg.action_clip, cfg.action_clip))
        .collect()
}

/// Clamped PD torques for the current joint state.
pub fn pd_torques(gains: &PdGains, q_des: &[f64], q: &[f64], qd: &[f64]) -> Vec<f64> {
    (0..q.len())
        .map(|i| {
            let tau = gains.kp[i] * (q_des[i] - q[i]) - gains.kd[i] * qd[i];
            tau.clamp(-gains.torque_limit[i], gains.torque_limit[i])
        })
        .collect()
}

/// Generalized accelerations for given joint torques and the current state
/// (gravity and contact included), with every force evaluated explicitly.
/// Exposed for tests and analysis.
pub fn forward_dynamics(
    model: &RobotModel,
    cfg: &SimConfig,
    state: &SimState,
    torques: &[f64],
) -> Result<DVector<f64>, SimError> {
    let kin = dynamics::kinematics(model, &state.base_iso(), &state.q);
    let vel = dynamics::velocities(
        model,
        &kin,
        &state.base_linvel,
        &state.base_angvel,
        &state.qd,
    );
    let contacts = contact::contact_forces(
        model,
        &kin,
        &vel,
        &state.contact_anchors,
        &cfg.contact_params(),
    );
    solve_accelerations(model, cfg, state, &kin, &vel, torques, &[], &contacts)
}

/// Solve `(M + dt·diag(damping)) u̇ = τ − b + Jᵀf`.
///
/// `implicit_damping` holds per-joint `kd·dt` terms added to the joint
/// diagonal: the PD damping torque is thereby evaluated at the post-step
/// velocity (`rhs` already carries `−kd·q̇` at the current one), which keeps
/// arbitrarily large kd stable under explicit integration. Pass an empty
/// slice for a plain explicit solve.
#[allow(clippy::too_many_arguments)]
fn solve_accelerations(
    model: &RobotModel,
    cfg: &SimConfig,
    state: &SimState,
    kin: &dynamics::Kinematics,
    vel: &dynamics::Velocities,
    torques: &[f64],
    implicit_damping: &[f64],
    contacts: &[Contact],
) -> Result<DVector<f64>, SimError> {
    let n = model.n_joints();
    let mut m = dynamics::mass_matrix(model, kin);
    let b = dynamics::bias_forces(model, kin, vel, &state.qd, cfg.gravity);
    for (j, kd_dt) in implicit_damping.iter().enumerate() {
        m[(6 + j, 6 + j)] += kd_dt;
    }

    let mut rhs = -b;
    for (j, tau) in torques.iter().enumerate() {
        rhs[6 + j] += tau;
    }
    for c in contacts {
        if c.active() {
            dynamics::apply_point_force(model, kin, c.link, &c.point, &c.force, &mut rhs);
        }
    }

    let udot = if cfg.fixed_base {
        let mj = m.view((6, 6), (n, n)).into_owned();
        let rj = rhs.rows(6, n).into_owned();
        let sol = mj
            .lu()
            .solve(&rj)
            .ok_or(SimError::Singular { time: state.time })?;
        let mut full = DVector::zeros(6 + n);
        full.rows_mut(6, n).copy_from(&sol);
        full
    } else {
        m.lu()
            .solve(&rhs)
            .ok_or(SimError::Singular { time: state.time })?
    };
    Ok(udot)
}

/// Advance one physics substep with fixed joint torques and implicit joint
/// damping. Returns the contact states used for the step.
fn substep(
    model: &RobotModel,
    cfg: &SimConfig,
    gains: &PdGains,
    state: &mut SimState,
    torques: &[f64],
) -> Result<Vec<Contact>, SimError> {
    let dt = cfg.dt_sim();
    let kin = dynamics::kinematics(model, &state.base_iso(), &state.q);
    let vel = dynamics::velocities(
        model,
        &kin,
        &state.base_linvel,
        &state.base_angvel,
        &state.qd,
    );
    let contacts = contact::contact_forces(
        model,
        &kin,
        &vel,
        &state.contact_anchors,
        &cfg.contact_params(),
    );
    let kd_dt: Vec<f64> = gains.kd.iter().map(|kd| kd * dt).collect();
    let udot = solve_accelerations(model, cfg, state, &kin, &vel, torques, &kd_dt, &contacts)?;

    // Semi-implicit Euler: update velocities first, advance positions with
    // the new velocities.
    if !cfg.fixed_base {
        state.base_linvel += udot.fixed_rows::<3>(0) * dt;
        state.base_angvel += udot.fixed_rows::<3>(3) * dt;
        state.base_pos += state.base_linvel * dt;
        state.base_quat = dynamics::integrate_quat(&state.base_quat, &state.base_angvel, dt);
    }
    for j in 0..model.n_joints() {
        state.qd[j] += udot[6 + j] * dt;
        state.q[j] += state.qd[j] * dt;
    }
    state.time += dt;
    for (i, c) in contacts.iter().enumerate() {
        state.contact_forces[i] = c.force;
        state.contact_anchors[i] = c.next_anchor;
    }

    if let Some(what) = state.non_finite_field() {
        return Err(SimError::NonFinite {
            time: state.time,
            what,
        });
    }
    Ok(contacts)
}

/// Advance one control step (see the module docs for the sequence).
pub fn step_control(
    model: &RobotModel,
    cfg: &SimConfig,
    gains: &PdGains,
    state: &mut SimState,
    action: &[f64],
    push_delta_v: Option<Vector3<f64>>,
    delay: &mut DelayBuffer,
) -> Result<StepInfo, SimError> {
    assert_eq!(action.len(), model.n_joints(), "action dimension mismatch");
    if !action.iter().all(|a| a.is_finite()) {
        return Err(SimError::NonFinite {
            time: state.time,
            what: "action",
        });
    }

    let applied_action = delay.push_and_get(action);
    let q_des = action_to_target(model, cfg, &applied_action);
    if let Some(dv) = push_delta_v {
        state.base_linvel += dv;
    }

    let mut torques = vec![0.0; model.n_joints()];
    let mut contacts = Vec::new();
    for _ in 0..cfg.substeps {
        torques = pd_torques(gains, &q_des, &state.q, &state.qd);
        contacts = substep(model, cfg, gains, state, &torques)?;
    }

    Ok(StepInfo {
        applied_action,
        q_des,
        torques,
        contacts,
    })
}

/// Kinetic and potential energy of the current state. Potential is measured
/// from z = 0, so only differences are meaningful.
pub fn energy(model: &RobotModel, state: &SimState, gravity: f64) -> (f64, f64) {
    let kin = dynamics::kinematics(model, &state.base_iso(), &state.q);
    let m = dynamics::mass_matrix(model, &kin);
    let u = dynamics::assemble_u(&state.base_linvel, &state.base_angvel, &state.qd);
    let kinetic = 0.5 * u.dot(&(&m * &u));
    let potential: f64 = model
        .links
        .iter()
        .enumerate()
        .map(|(l, link)| link.mass * gravity * kin.com_w[l].z)
        .sum();
    (kinetic, potential)
}

/// Total world-frame linear momentum.
pub fn linear_momentum(model: &RobotModel, state: &SimState) -> Vector3<f64> {
    let kin = dynamics::kinematics(model, &state.base_iso(), &state.q);
    let vel = dynamics::velocities(
        model,
        &kin,
        &state.base_linvel,
        &state.base_angvel,
        &state.qd,
    );
    let mut p = Vector3::zeros();
    for (l, link) in model.links.iter().enumerate() {
        let rc = kin.com_w[l] - kin.poses[l].translation.vector;
        let v_com = vel.lin[l] + vel.ang[l].cross(&rc);
        p += link.mass * v_com;
    }
    p
}
