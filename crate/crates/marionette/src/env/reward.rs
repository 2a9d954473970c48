//! The tracking reward stack, per-foot step bookkeeping, and termination.
//!
//! Four tracking terms score how closely the robot follows the goal — joint
//! positions, joint velocities, keypoint positions, and keypoint orientations
//! — each as `exp(−Σ wⱼ eⱼ / σ²)` over squared per-item errors with class
//! weights normalized to sum to one. The remaining terms regularize behavior:
//! action smoothness, actuation effort, joint accelerations, hard joint
//! limits, foot slip while loaded, base uprightness, contact force magnitude,
//! foot flatness, step height above the desired clearance, and step air time
//! relative to the desired duration, plus a termination penalty and an alive
//! bonus. Every term is reported unweighted; the weighted sum is a dot
//! product with the configured weights, so logs can attribute the total
//! exactly.
//!
//! Step bookkeeping: a step begins when a foot's summed contact force drops
//! below 1 N (lift-off) and ends at touchdown. While airborne, the tracker
//! accumulates air time and the maximum ground clearance (lowest sphere
//! bottom above z = 0); touchdown reports the completed step's air time once.
//!
//! Termination fires when the mean keypoint distance to the goal exceeds the
//! configured threshold, or when the unit projected-gravity vector tilts past
//! the configured x/y component bound.

use nalgebra::{Isometry3, Vector3};

use super::{EnvConfig, GoalFrame, RewardConfig};
use crate::math;
use crate::model::{JointClass, RobotModel, WeightClass};
use crate::sim::dynamics::Velocities;
use crate::sim::SimState;

/// A foot counts as loaded when its summed contact force exceeds this.
pub const FOOT_LOAD_THRESHOLD_N: f64 = 1.0;

// ── Weighted exponential tracking kernel ────────────────────────────────

/// `exp(−Σ wⱼ eⱼ / σ²)` with the weights normalized to sum to one. Exactly 1
/// when all errors are zero, strictly decreasing in each error.
pub fn weighted_exp_reward(errors: &[f64], weights: &[f64], sigma: f64) -> f64 {
    assert_eq!(errors.len(), weights.len(), "one weight per error");
    assert!(sigma > 0.0, "sigma must be positive, got {sigma}");
    let mass: f64 = weights.iter().sum();
    assert!(mass > 0.0, "weights must have positive total mass");
    let s: f64 = errors.iter().zip(weights).map(|(e, w)| w * e).sum();
    (-s / (mass * sigma * sigma)).exp()
}

/// Raw per-keypoint class weights (end-effector / upper / lower).
pub fn keypoint_class_weights(model: &RobotModel, cfg: &RewardConfig) -> Vec<f64> {
    model
        .keypoints
        .iter()
        .map(|k| match k.class {
            WeightClass::EndEffector => cfg.keypoint_weight_end_effector,
            WeightClass::Upper => cfg.keypoint_weight_upper,
            WeightClass::Lower => cfg.keypoint_weight_lower,
        })
        .collect()
}

/// Raw per-joint class weights (upper / lower).
pub fn joint_class_weights(model: &RobotModel, cfg: &RewardConfig) -> Vec<f64> {
    model
        .joints
        .iter()
        .map(|j| match j.class {
            JointClass::Upper => cfg.joint_weight_upper,
            JointClass::Lower => cfg.joint_weight_lower,
        })
        .collect()
}

// ── Foot step bookkeeping ───────────────────────────────────────────────

/// Per-foot contact snapshot for one control step, in `feet_links` order.
#[derive(Debug, Clone)]
pub struct FeetStatus {
    /// World contact force summed over the foot's spheres.
    pub force: Vec<Vector3<f64>>,
    /// True while the foot is airborne (force below the load threshold).
    pub in_air: Vec<bool>,
    /// Maximum ground clearance reached since lift-off.
    pub max_clearance: Vec<f64>,
    /// `Some(air time)` exactly on the touchdown step that ends a step.
    pub landed_air_time: Vec<Option<f64>>,
}

impl FeetStatus {
    /// All feet planted with zero force — the neutral crafted-test input.
    pub fn grounded(n_feet: usize) -> FeetStatus {
        FeetStatus {
            force: vec![Vector3::zeros(); n_feet],
            in_air: vec![false; n_feet],
            max_clearance: vec![0.0; n_feet],
            landed_air_time: vec![None; n_feet],
        }
    }
}

/// Tracks lift-off/touchdown cycles of each foot across control steps.
#[derive(Debug, Clone)]
pub struct FeetTracker {
    feet: Vec<usize>,
    in_air: Vec<bool>,
    air_time: Vec<f64>,
    max_clearance: Vec<f64>,
}

impl FeetTracker {
    /// All feet start planted.
    pub fn new(model: &RobotModel) -> FeetTracker {
        let feet = model.feet_links();
        let n = feet.len();
        FeetTracker {
            feet,
            in_air: vec![false; n],
            air_time: vec![0.0; n],
            max_clearance: vec![0.0; n],
        }
    }

    pub fn feet(&self) -> &[usize] {
        &self.feet
    }

    /// Advance one control step from the post-step poses and per-sphere
    /// contact forces. Airborne steps count `dt` of air time each, including
    /// the lift-off step.
    pub fn update(
        &mut self,
        model: &RobotModel,
        poses: &[Isometry3<f64>],
        contact_forces: &[Vector3<f64>],
        dt: f64,
    ) -> FeetStatus {
        let n = self.feet.len();
        let mut force = vec![Vector3::zeros(); n];
        let mut clearance = vec![f64::INFINITY; n];
        for (s, f) in model.contact_spheres.iter().zip(contact_forces) {
            let i = self
                .feet
                .iter()
                .position(|&l| l == s.link)
                .expect("sphere on a foot link");
            force[i] += f;
            let bottom = poses[s.link].transform_point(&s.offset.into()).z - s.radius;
            clearance[i] = clearance[i].min(bottom);
        }
        let mut status = FeetStatus {
            force,
            in_air: vec![false; n],
            max_clearance: vec![0.0; n],
            landed_air_time: vec![None; n],
        };
        for (i, &clear) in clearance.iter().enumerate() {
            let airborne = status.force[i].norm() < FOOT_LOAD_THRESHOLD_N;
            if airborne {
                if !self.in_air[i] {
                    self.in_air[i] = true;
                    self.air_time[i] = 0.0;
                    self.max_clearance[i] = 0.0;
                }
                self.air_time[i] += dt;
                self.max_clearance[i] = self.max_clearance[i].max(clear);
            } else if self.in_air[i] {
                status.landed_air_time[i] = Some(self.air_time[i]);
                self.in_air[i] = false;
                self.air_time[i] = 0.0;
                self.max_clearance[i] = 0.0;
            }
            status.in_air[i] = self.in_air[i];
            status.max_clearance[i] = self.max_clearance[i];
        }
        status
    }
}

// ── Reward terms ────────────────────────────────────────────────────────

/// Unweighted values of every reward term for one control step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardTerms {
    pub joint_pos: f64,
    pub joint_vel: f64,
    pub body_pos: f64,
    pub body_rot: f64,
    pub action_rate: f64,
    pub energy: f64,
    pub dof_acc: f64,
    pub dof_limits: f64,
    pub feet_slip: f64,
    pub orientation: f64,
    pub feet_contact: f64,
    pub feet_orientation: f64,
    pub feet_max_height: f64,
    pub feet_air_time: f64,
    pub termination: f64,
    pub alive: f64,
}

impl RewardTerms {
    /// All-zero terms; used when the simulation state is unusable.
    pub fn zeros() -> RewardTerms {
        RewardTerms {
            joint_pos: 0.0,
            joint_vel: 0.0,
            body_pos: 0.0,
            body_rot: 0.0,
            action_rate: 0.0,
            energy: 0.0,
            dof_acc: 0.0,
            dof_limits: 0.0,
            feet_slip: 0.0,
            orientation: 0.0,
            feet_contact: 0.0,
            feet_orientation: 0.0,
            feet_max_height: 0.0,
            feet_air_time: 0.0,
            termination: 0.0,
            alive: 0.0,
        }
    }

    /// `(name, unweighted, weighted)` triples in layout order.
    pub fn breakdown(&self, cfg: &RewardConfig) -> Vec<(&'static str, f64, f64)> {
        vec![
            (
                "joint_pos",
                self.joint_pos,
                cfg.w_joint_pos * self.joint_pos,
            ),
            (
                "joint_vel",
                self.joint_vel,
                cfg.w_joint_vel * self.joint_vel,
            ),
            ("body_pos", self.body_pos, cfg.w_body_pos * self.body_pos),
            ("body_rot", self.body_rot, cfg.w_body_rot * self.body_rot),
            (
                "action_rate",
                self.action_rate,
                cfg.w_action_rate * self.action_rate,
            ),
            ("energy", self.energy, cfg.w_energy * self.energy),
            ("dof_acc", self.dof_acc, cfg.w_dof_acc * self.dof_acc),
            (
                "dof_limits",
                self.dof_limits,
                cfg.w_dof_limits * self.dof_limits,
            ),
            (
                "feet_slip",
                self.feet_slip,
                cfg.w_feet_slip * self.feet_slip,
            ),
            (
                "orientation",
                self.orientation,
                cfg.w_orientation * self.orientation,
            ),
            (
                "feet_contact",
                self.feet_contact,
                cfg.w_feet_contact * self.feet_contact,
            ),
            (
                "feet_orientation",
                self.feet_orientation,
                cfg.w_feet_orientation * self.feet_orientation,
            ),
            (
                "feet_max_height",
                self.feet_max_height,
                cfg.w_feet_max_height * self.feet_max_height,
            ),
            (
                "feet_air_time",
                self.feet_air_time,
                cfg.w_feet_air_time * self.feet_air_time,
            ),
            (
                "termination",
                self.termination,
                cfg.w_termination * self.termination,
            ),
            ("alive", self.alive, cfg.w_alive * self.alive),
        ]
    }

    /// Weighted sum of all terms.
    pub fn total(&self, cfg: &RewardConfig) -> f64 {
        self.breakdown(cfg).iter().map(|(_, _, w)| w).sum()
    }
}

/// Everything `compute_reward_terms` needs about one transition. `poses` and
/// `vel` must be derived from `state`; `qd_prev` is the joint velocity before
/// the step; `feet` is the tracker output for this step.
#[derive(Debug)]
pub struct RewardInputs<'a> {
    pub state: &'a SimState,
    pub poses: &'a [Isometry3<f64>],
    pub vel: &'a Velocities,
    pub qd_prev: &'a [f64],
    pub action_prev: &'a [f64],
    pub action: &'a [f64],
    pub torques: &'a [f64],
    pub goal: &'a GoalFrame,
    pub feet: &'a FeetStatus,
    pub terminated: bool,
    pub dt: f64,
}

/// Evaluate every reward term for one control step against the clean goal.
pub fn compute_reward_terms(
    model: &RobotModel,
    cfg: &RewardConfig,
    inp: &RewardInputs,
) -> RewardTerms {
    let state = inp.state;
    let joint_w = joint_class_weights(model, cfg);
    let kp_w = keypoint_class_weights(model, cfg);

    let e_q: Vec<f64> = state
        .q
        .iter()
        .zip(&inp.goal.q)
        .map(|(a, b)| (a - b) * (a - b))
        .collect();
    let e_qd: Vec<f64> = state
        .qd
        .iter()
        .zip(&inp.goal.qd)
        .map(|(a, b)| (a - b) * (a - b))
        .collect();
    let keypoints = model.keypoints_global(inp.poses);
    let e_kp: Vec<f64> = keypoints
        .iter()
        .zip(&inp.goal.keypoint_pos)
        .map(|(a, b)| (a - b).norm_squared())
        .collect();
    let rotations = model.keypoint_rotations(inp.poses);
    let e_rot: Vec<f64> = rotations
        .iter()
        .zip(&inp.goal.keypoint_rot)
        .map(|(a, b)| {
            let d = math::quat_angle(b, a);
            d * d
        })
        .collect();

    let action_rate: f64 = inp
        .action_prev
        .iter()
        .zip(inp.action)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let energy: f64 = inp
        .torques
        .iter()
        .zip(&state.qd)
        .map(|(t, qd)| (t * qd) * (t * qd))
        .sum();
    let dof_acc: f64 = state
        .qd
        .iter()
        .zip(inp.qd_prev)
        .map(|(a, b)| {
            let acc = (a - b) / inp.dt;
            acc * acc
        })
        .sum();
    let dof_limits = model
        .joints
        .iter()
        .zip(&state.q)
        .filter(|(j, &q)| q < j.limits[0] || q > j.limits[1])
        .count() as f64;

    let feet = model.feet_links();
    let mut feet_slip = 0.0;
    let mut feet_contact = 0.0;
    let mut feet_orientation = 0.0;
    let mut feet_max_height = 0.0;
    let mut feet_air_time = 0.0;
    for (i, &foot) in feet.iter().enumerate() {
        let f = inp.feet.force[i].norm();
        feet_contact += f;
        if f > FOOT_LOAD_THRESHOLD_N {
            feet_slip += inp.vel.lin[foot].xy().norm();
        }
        let g_foot = inp.poses[foot]
            .rotation
            .inverse_transform_vector(&-Vector3::z());
        feet_orientation += g_foot.xy().norm_squared();
        if inp.feet.in_air[i] {
            feet_max_height += (inp.feet.max_clearance[i] - cfg.step_height_m).max(0.0);
        }
        if let Some(t_air) = inp.feet.landed_air_time[i] {
            feet_air_time += t_air - cfg.step_air_time_s;
        }
    }

    let g_base = state.base_quat.inverse_transform_vector(&-Vector3::z());

    RewardTerms {
        joint_pos: weighted_exp_reward(&e_q, &joint_w, cfg.sigma_joint_pos),
        joint_vel: weighted_exp_reward(&e_qd, &joint_w, cfg.sigma_joint_vel),
        body_pos: weighted_exp_reward(&e_kp, &kp_w, cfg.sigma_body_pos),
        body_rot: weighted_exp_reward(&e_rot, &kp_w, cfg.sigma_body_rot),
        action_rate,
        energy,
        dof_acc,
        dof_limits,
        feet_slip,
        orientation: g_base.xy().norm_squared(),
        feet_contact,
        feet_orientation,
        feet_max_height,
        feet_air_time,
        termination: if inp.terminated { 1.0 } else { 0.0 },
        alive: if inp.terminated { 0.0 } else { 1.0 },
    }
}

// ── Termination ─────────────────────────────────────────────────────────

/// Why an episode ended early.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Mean keypoint distance to the goal exceeded the threshold.
    KeypointDeviation,
    /// The projected gravity vector tilted past the x/y component bound.
    Fall,
    /// The simulation produced a non-finite state; forced by the environment.
    NonFinite,
}

/// Early-termination check: mean keypoint deviation first, then tilt.
pub fn check_termination(
    cfg: &EnvConfig,
    state: &SimState,
    keypoints: &[Vector3<f64>],
    goal_keypoints: &[Vector3<f64>],
) -> Option<Termination> {
    let mean_dev = keypoints
        .iter()
        .zip(goal_keypoints)
        .map(|(a, b)| (a - b).norm())
        .sum::<f64>()
        / keypoints.len() as f64;
    if mean_dev > cfg.keypoint_termination_m {
        return Some(Termination::KeypointDeviation);
    }
    let g = state.base_quat.inverse_transform_vector(&-Vector3::z());
    if g.x.abs() > cfg.gravity_termination_xy || g.y.abs() > cfg.gravity_termination_xy {
        return Some(Termination::Fall);
    }
    None
}
