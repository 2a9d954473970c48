//! Observation assembly and mirroring for the tracking policies.
//!
//! Both layouts share a proprioceptive core: `[q, q̇, base-frame angular
//! velocity, projected gravity, previous action, heading-local keypoint
//! positions]`.
//!
//! * **Teacher** (single step): the proprioceptive core, the global keypoint
//!   state (positions, orientations as wxyz quaternions, linear and angular
//!   velocities), the current goal keypoints, the goal-minus-robot position
//!   difference, and a privileged block carrying the episode's sampled
//!   physics parameters plus per-foot contact forces.
//! * **Student** (stacked): the last `history_len` proprioceptive cores,
//!   oldest first and padded at the front with the earliest entry, followed
//!   by the next `goal_future_len` goal keypoint frames, padded at the end
//!   with the final frame.
//!
//! Gaussian observation noise is added per component in emission order, so a
//! builder is a pure function of its inputs and the rng state. A zero
//! standard deviation draws nothing from the rng; the noiseless critic
//! variant is therefore built by passing an all-zero noise config. Noisy
//! quaternion components are emitted without renormalization — they model a
//! perturbed sensor reading, not a rotation. The goal-difference block is
//! computed from the already-noisy goal and body blocks so that one noise
//! draw per quantity stays internally consistent.
//!
//! Each layout has a mirror operator reflecting the observation across the
//! robot's sagittal plane. Mirrors are permutations and sign flips only, so
//! they are exact involutions (bit-for-bit) and commute with building the
//! observation from a mirrored state up to floating-point rounding.

use nalgebra::{DVector, Vector3};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::ops::Range;

use super::{EnvConfig, GoalFrame, ObsNoiseConfig, RandomizedParams};
use crate::model::RobotModel;
use crate::motion::GoalTrack;
use crate::sim::dynamics::{self, Velocities};
use crate::sim::SimState;
use rand::Rng;

// ── Layout arithmetic ───────────────────────────────────────────────────

/// Length of the per-step proprioceptive core:
/// `n + n + 3 + 3 + n + 3k` for `n` joints and `k` keypoints.
pub fn proprio_dim(model: &RobotModel) -> usize {
    3 * model.n_joints() + 6 + 3 * model.n_keypoints()
}

/// Length of the privileged physics-parameter block: base CoM bias (3),
/// per-foot friction, per-link mass scales, per-joint Kd/Kp/torque scales,
/// and per-foot contact forces (3 each).
pub fn privileged_dim(model: &RobotModel) -> usize {
    let f = model.feet_links().len();
    3 + f + model.n_links() + 3 * model.n_joints() + 3 * f
}

/// Length of the single-step teacher observation.
pub fn teacher_obs_dim(model: &RobotModel) -> usize {
    let k = model.n_keypoints();
    proprio_dim(model) + 13 * k + 3 * k + 3 * k + privileged_dim(model)
}

/// Length of the stacked student observation.
pub fn student_obs_dim(model: &RobotModel, cfg: &EnvConfig) -> usize {
    cfg.history_len * proprio_dim(model) + cfg.goal_future_len * 3 * model.n_keypoints()
}

/// Index ranges of the teacher observation's blocks, in layout order.
#[derive(Debug, Clone)]
pub struct TeacherBlocks {
    pub proprio: Range<usize>,
    pub body_pos: Range<usize>,
    pub body_quat: Range<usize>,
    pub body_lin_vel: Range<usize>,
    pub body_ang_vel: Range<usize>,
    pub goal_pos: Range<usize>,
    pub goal_diff: Range<usize>,
    pub privileged: Range<usize>,
}

/// Block boundaries of the teacher layout for `model`.
pub fn teacher_blocks(model: &RobotModel) -> TeacherBlocks {
    let k = model.n_keypoints();
    let mut at = 0;
    let mut next = |len: usize| {
        let r = at..at + len;
        at += len;
        r
    };
    TeacherBlocks {
        proprio: next(proprio_dim(model)),
        body_pos: next(3 * k),
        body_quat: next(4 * k),
        body_lin_vel: next(3 * k),
        body_ang_vel: next(3 * k),
        goal_pos: next(3 * k),
        goal_diff: next(3 * k),
        privileged: next(privileged_dim(model)),
    }
}

// ── Builders ────────────────────────────────────────────────────────────

fn jitter(rng: &mut ChaCha8Rng, std: f64) -> f64 {
    if std == 0.0 {
        0.0
    } else {
        std * rng.sample::<f64, _>(StandardNormal)
    }
}

fn push_noisy(
    out: &mut Vec<f64>,
    values: impl IntoIterator<Item = f64>,
    std: f64,
    rng: &mut ChaCha8Rng,
) {
    for v in values {
        out.push(v + jitter(rng, std));
    }
}

fn push_proprio(
    out: &mut Vec<f64>,
    model: &RobotModel,
    state: &SimState,
    poses: &[nalgebra::Isometry3<f64>],
    prev_action: &[f64],
    noise: &ObsNoiseConfig,
    rng: &mut ChaCha8Rng,
) {
    push_noisy(out, state.q.iter().copied(), noise.joint_pos, rng);
    push_noisy(out, state.qd.iter().copied(), noise.joint_vel, rng);
    let w_base = state.base_quat.inverse_transform_vector(&state.base_angvel);
    push_noisy(out, w_base.iter().copied(), noise.root_ang_vel, rng);
    let g_base = state.base_quat.inverse_transform_vector(&-Vector3::z());
    push_noisy(out, g_base.iter().copied(), noise.projected_gravity, rng);
    out.extend_from_slice(prev_action);
    for p in model.keypoints_local(poses) {
        push_noisy(out, p.iter().copied(), noise.local_body_pos, rng);
    }
}

/// The proprioceptive core on its own: what the student records each step.
pub fn build_proprio(
    model: &RobotModel,
    state: &SimState,
    prev_action: &[f64],
    noise: &ObsNoiseConfig,
    rng: &mut ChaCha8Rng,
) -> DVector<f64> {
    let poses = model.fk(&state.base_iso(), &state.q);
    let mut out = Vec::with_capacity(proprio_dim(model));
    push_proprio(&mut out, model, state, &poses, prev_action, noise, rng);
    DVector::from_vec(out)
}

/// Single-step observation of the privileged teacher (and, with zero noise
/// and a zero goal offset, of the critic). The goal passed in is used as-is;
/// per-episode goal offsets are the caller's responsibility.
pub fn build_teacher_obs(
    model: &RobotModel,
    state: &SimState,
    prev_action: &[f64],
    goal: &GoalFrame,
    params: &RandomizedParams,
    noise: &ObsNoiseConfig,
    rng: &mut ChaCha8Rng,
) -> DVector<f64> {
    let kin = dynamics::kinematics(model, &state.base_iso(), &state.q);
    let vel = dynamics::velocities(
        model,
        &kin,
        &state.base_linvel,
        &state.base_angvel,
        &state.qd,
    );
    let blocks = teacher_blocks(model);
    let mut out = Vec::with_capacity(teacher_obs_dim(model));

    push_proprio(&mut out, model, state, &kin.poses, prev_action, noise, rng);
    for p in model.keypoints_global(&kin.poses) {
        push_noisy(&mut out, p.iter().copied(), noise.global_body_pos, rng);
    }
    for r in model.keypoint_rotations(&kin.poses) {
        let c = [r.w, r.i, r.j, r.k];
        push_noisy(&mut out, c, noise.global_body_quat, rng);
    }
    let kvel = keypoint_velocities(model, &kin, &vel);
    for (v, _) in &kvel {
        push_noisy(&mut out, v.iter().copied(), noise.global_body_lin_vel, rng);
    }
    for (_, w) in &kvel {
        push_noisy(&mut out, w.iter().copied(), noise.global_body_ang_vel, rng);
    }
    for p in &goal.keypoint_pos {
        push_noisy(&mut out, p.iter().copied(), noise.goal_keypoints, rng);
    }
    // Goal difference from the noisy blocks already emitted.
    for i in 0..3 * model.n_keypoints() {
        out.push(out[blocks.goal_pos.start + i] - out[blocks.body_pos.start + i]);
    }
    push_privileged(&mut out, model, state, params);
    DVector::from_vec(out)
}

/// World linear and angular velocity of each keypoint.
fn keypoint_velocities(
    model: &RobotModel,
    kin: &dynamics::Kinematics,
    vel: &Velocities,
) -> Vec<(Vector3<f64>, Vector3<f64>)> {
    model
        .keypoints
        .iter()
        .map(|kp| {
            let p = kin.poses[kp.link].transform_point(&kp.offset.into()).coords;
            let r = p - kin.poses[kp.link].translation.vector;
            (
                vel.lin[kp.link] + vel.ang[kp.link].cross(&r),
                vel.ang[kp.link],
            )
        })
        .collect()
}

fn push_privileged(
    out: &mut Vec<f64>,
    model: &RobotModel,
    state: &SimState,
    params: &RandomizedParams,
) {
    out.extend_from_slice(params.base_com_bias.as_slice());
    let feet = model.feet_links();
    for _ in &feet {
        out.push(params.friction);
    }
    out.extend_from_slice(&params.mass_scale);
    out.extend_from_slice(&params.kd_scale);
    out.extend_from_slice(&params.kp_scale);
    out.extend_from_slice(&params.torque_scale);
    for f in foot_forces(model, state) {
        out.extend_from_slice(f.as_slice());
    }
}

/// World contact force summed over each foot's spheres, in `feet_links`
/// order.
pub fn foot_forces(model: &RobotModel, state: &SimState) -> Vec<Vector3<f64>> {
    let feet = model.feet_links();
    let mut sums = vec![Vector3::zeros(); feet.len()];
    for (s, force) in model.contact_spheres.iter().zip(&state.contact_forces) {
        let i = feet
            .iter()
            .position(|&l| l == s.link)
            .expect("sphere on a foot link");
        sums[i] += force;
    }
    sums
}

/// Stacked observation of the student policy. `history` holds the noisy
/// proprioceptive cores recorded so far, oldest first and never empty; goal
/// frames are read from `track` starting at `cursor` with the per-episode
/// `goal_offset` added before the per-step keypoint noise.
pub fn build_student_obs(
    cfg: &EnvConfig,
    history: &[DVector<f64>],
    track: &GoalTrack,
    cursor: usize,
    goal_offset: &Vector3<f64>,
    noise: &ObsNoiseConfig,
    rng: &mut ChaCha8Rng,
) -> DVector<f64> {
    assert!(!history.is_empty(), "history must hold at least one entry");
    let proprio = history[0].len();
    let k = track.keypoint_pos[0].len();
    let mut out = Vec::with_capacity(cfg.history_len * proprio + cfg.goal_future_len * 3 * k);
    for i in 0..cfg.history_len {
        let idx = (history.len() + i).saturating_sub(cfg.history_len);
        out.extend_from_slice(history[idx.min(history.len() - 1)].as_slice());
    }
    let last = track.n_frames() - 1;
    for i in 0..cfg.goal_future_len {
        for p in &track.keypoint_pos[(cursor + i).min(last)] {
            push_noisy(
                &mut out,
                (p + goal_offset).iter().copied(),
                noise.goal_keypoints,
                rng,
            );
        }
    }
    DVector::from_vec(out)
}

// ── Mirrors ─────────────────────────────────────────────────────────────

/// `dst[i] = sign[i] · src[perm[i]]` over per-joint blocks.
fn mirror_joints(model: &RobotModel, src: &[f64], dst: &mut [f64]) {
    let s = &model.symmetry;
    for i in 0..src.len() {
        dst[i] = s.joint_sign[i] * src[s.joint_perm[i]];
    }
}

fn permute_joints(model: &RobotModel, src: &[f64], dst: &mut [f64]) {
    for i in 0..src.len() {
        dst[i] = src[model.symmetry.joint_perm[i]];
    }
}

/// Polar 3-vector blocks: permutation plus y negation.
fn mirror_polar3(src: &[f64], dst: &mut [f64], perm: &[usize]) {
    for (i, &p) in perm.iter().enumerate() {
        dst[3 * i] = src[3 * p];
        dst[3 * i + 1] = -src[3 * p + 1];
        dst[3 * i + 2] = src[3 * p + 2];
    }
}

/// Axial 3-vector blocks: permutation plus x and z negation.
fn mirror_axial3(src: &[f64], dst: &mut [f64], perm: &[usize]) {
    for (i, &p) in perm.iter().enumerate() {
        dst[3 * i] = -src[3 * p];
        dst[3 * i + 1] = src[3 * p + 1];
        dst[3 * i + 2] = -src[3 * p + 2];
    }
}

/// wxyz quaternion blocks: permutation plus the coefficient map
/// `(w,x,y,z) ↦ (w,−x,y,−z)` (exact, norm-preserving).
fn mirror_quat4(src: &[f64], dst: &mut [f64], perm: &[usize]) {
    for (i, &p) in perm.iter().enumerate() {
        dst[4 * i] = src[4 * p];
        dst[4 * i + 1] = -src[4 * p + 1];
        dst[4 * i + 2] = src[4 * p + 2];
        dst[4 * i + 3] = -src[4 * p + 3];
    }
}

fn permute_scalars(src: &[f64], dst: &mut [f64], perm: &[usize]) {
    for (i, &p) in perm.iter().enumerate() {
        dst[i] = src[p];
    }
}

/// Positions of each foot's mirror image within the `feet_links` list.
fn feet_perm(model: &RobotModel) -> Vec<usize> {
    let feet = model.feet_links();
    let link_perm = model.link_perm();
    feet.iter()
        .map(|&f| {
            let mirrored = link_perm[f];
            feet.iter()
                .position(|&g| g == mirrored)
                .expect("feet are paired")
        })
        .collect()
}

fn mirror_proprio_slice(model: &RobotModel, src: &[f64], dst: &mut [f64]) {
    let n = model.n_joints();
    let kp_perm = &model.symmetry.keypoint_perm;
    mirror_joints(model, &src[0..n], &mut dst[0..n]);
    mirror_joints(model, &src[n..2 * n], &mut dst[n..2 * n]);
    mirror_axial3(&src[2 * n..2 * n + 3], &mut dst[2 * n..2 * n + 3], &[0]);
    mirror_polar3(
        &src[2 * n + 3..2 * n + 6],
        &mut dst[2 * n + 3..2 * n + 6],
        &[0],
    );
    mirror_joints(
        model,
        &src[2 * n + 6..3 * n + 6],
        &mut dst[2 * n + 6..3 * n + 6],
    );
    let kp = 3 * n + 6;
    mirror_polar3(&src[kp..], &mut dst[kp..], kp_perm);
}

/// Reflect a proprioceptive core across the sagittal plane.
pub fn mirror_proprio(model: &RobotModel, obs: &DVector<f64>) -> DVector<f64> {
    assert_eq!(obs.len(), proprio_dim(model), "proprio length mismatch");
    let mut out = DVector::zeros(obs.len());
    mirror_proprio_slice(model, obs.as_slice(), out.as_mut_slice());
    out
}

/// Reflect a teacher observation across the sagittal plane.
pub fn mirror_teacher_obs(model: &RobotModel, obs: &DVector<f64>) -> DVector<f64> {
    assert_eq!(
        obs.len(),
        teacher_obs_dim(model),
        "teacher obs length mismatch"
    );
    let b = teacher_blocks(model);
    let kp_perm = &model.symmetry.keypoint_perm;
    let src = obs.as_slice();
    let mut out = DVector::zeros(obs.len());
    let dst = out.as_mut_slice();

    mirror_proprio_slice(model, &src[b.proprio.clone()], &mut dst[b.proprio.clone()]);
    mirror_polar3(
        &src[b.body_pos.clone()],
        &mut dst[b.body_pos.clone()],
        kp_perm,
    );
    mirror_quat4(
        &src[b.body_quat.clone()],
        &mut dst[b.body_quat.clone()],
        kp_perm,
    );
    mirror_polar3(
        &src[b.body_lin_vel.clone()],
        &mut dst[b.body_lin_vel.clone()],
        kp_perm,
    );
    mirror_axial3(
        &src[b.body_ang_vel.clone()],
        &mut dst[b.body_ang_vel.clone()],
        kp_perm,
    );
    mirror_polar3(
        &src[b.goal_pos.clone()],
        &mut dst[b.goal_pos.clone()],
        kp_perm,
    );
    mirror_polar3(
        &src[b.goal_diff.clone()],
        &mut dst[b.goal_diff.clone()],
        kp_perm,
    );

    let n = model.n_joints();
    let l = model.n_links();
    let fp = feet_perm(model);
    let f = fp.len();
    let p = b.privileged.start;
    mirror_polar3(&src[p..p + 3], &mut dst[p..p + 3], &[0]);
    permute_scalars(&src[p + 3..p + 3 + f], &mut dst[p + 3..p + 3 + f], &fp);
    let m = p + 3 + f;
    permute_scalars(&src[m..m + l], &mut dst[m..m + l], &model.link_perm());
    permute_joints(model, &src[m + l..m + l + n], &mut dst[m + l..m + l + n]);
    permute_joints(
        model,
        &src[m + l + n..m + l + 2 * n],
        &mut dst[m + l + n..m + l + 2 * n],
    );
    permute_joints(
        model,
        &src[m + l + 2 * n..m + l + 3 * n],
        &mut dst[m + l + 2 * n..m + l + 3 * n],
    );
    let ff = m + l + 3 * n;
    mirror_polar3(&src[ff..], &mut dst[ff..], &fp);
    out
}

/// Reflect a student observation across the sagittal plane.
pub fn mirror_student_obs(model: &RobotModel, cfg: &EnvConfig, obs: &DVector<f64>) -> DVector<f64> {
    assert_eq!(
        obs.len(),
        student_obs_dim(model, cfg),
        "student obs length mismatch"
    );
    let pd = proprio_dim(model);
    let kp_perm = &model.symmetry.keypoint_perm;
    let src = obs.as_slice();
    let mut out = DVector::zeros(obs.len());
    let dst = out.as_mut_slice();
    for i in 0..cfg.history_len {
        let r = i * pd..(i + 1) * pd;
        mirror_proprio_slice(model, &src[r.clone()], &mut dst[r]);
    }
    let goals = cfg.history_len * pd;
    let frame = 3 * model.n_keypoints();
    for i in 0..cfg.goal_future_len {
        let r = goals + i * frame..goals + (i + 1) * frame;
        mirror_polar3(&src[r.clone()], &mut dst[r], kp_perm);
    }
    out
}
