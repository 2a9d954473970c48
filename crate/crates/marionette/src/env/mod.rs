//! The motion-tracking environment: goal scheduling, observation assembly,
//! the reward stack, termination, and domain randomization.
//!
//! A [`TrackingEnv`] owns one simulated robot and a dataset of goal tracks
//! derived from reference clips (resampled to the control rate at
//! construction). Each episode starts on the first frame of a sampled track
//! with freshly sampled physics randomization; each control step applies the
//! action through the simulator (with actuation delay and scheduled velocity
//! pushes), advances the goal cursor, scores the new state against the clean
//! goal, and checks termination. When a motion runs out mid-episode the next
//! one is sampled **without resetting the simulation**, so policies see the
//! transition between motions.
//!
//! Conventions that tests rely on:
//!
//! * Rewards always use the clean goal. Goal keypoint offsets and Gaussian
//!   observation noise perturb only what the actor sees; the critic variant
//!   is built with zero noise and no offset.
//! * Randomization ranges are `[lo, hi]`; a degenerate range (`lo == hi`)
//!   draws nothing from the rng and yields `lo`, so a fully degenerate config
//!   is deterministic. `DomainRandConfig::disabled()` is the identity.
//! * Pushes fire on the episode clock every `push_interval_s` seconds,
//!   snapped to the nearest control step (intervals ≤ 0 disable them), as
//!   instantaneous base velocity deltas with independent x/y components.
//! * Rng draw order is fixed: on reset — track index (for [`TrackingEnv::reset`]),
//!   randomization draws, initial proprio noise; per step — push components
//!   (when due), resampled track index (at motion end), then observation
//!   noise in emission order.

pub mod obs;
pub mod reward;

pub use obs::{
    build_proprio, build_student_obs, build_teacher_obs, foot_forces, mirror_proprio,
    mirror_student_obs, mirror_teacher_obs, privileged_dim, proprio_dim, student_obs_dim,
    teacher_blocks, teacher_obs_dim, TeacherBlocks,
};
pub use reward::{
    check_termination, compute_reward_terms, joint_class_weights, keypoint_class_weights,
    weighted_exp_reward, FeetStatus, FeetTracker, RewardInputs, RewardTerms, Termination,
    FOOT_LOAD_THRESHOLD_N,
};

use nalgebra::{DVector, UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math;
use crate::model::RobotModel;
use crate::motion::{self, GoalTrack, MotionClip, MotionError};
use crate::sim::{self, DelayBuffer, PdGains, SimConfig, SimState};


#[derive(Debug, Error)]
pub enum EnvError {
    #[error("invalid environment config: {0}")]
    Invalid(String),
    #[error(transparent)]
    Motion(#[from] MotionError),
}

// ── Configuration ───────────────────────────────────────────────────────

/// Episode structure: control rate, observation window lengths, termination
/// thresholds, and motion-end handling.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    /// Control steps per second; goal tracks are resampled to this rate.
    pub control_hz: f64,
    /// Proprioceptive steps stacked into the student observation.
    pub history_len: usize,
    /// Goal keypoint frames stacked into the student observation.
    pub goal_future_len: usize,
    /// Mean keypoint deviation that ends the episode, m.
    pub keypoint_termination_m: f64,
    /// Bound on |x| and |y| of the unit projected gravity before a fall.
    pub gravity_termination_xy: f64,
    /// Sample a new motion at clip end instead of truncating the episode.
    pub resample_on_motion_end: bool,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            control_hz: 50.0,
            history_len: 10,
            goal_future_len: 10,
            keypoint_termination_m: 0.5,
            gravity_termination_xy: 0.7,
            resample_on_motion_end: true,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        if !(self.control_hz.is_finite() && self.control_hz > 0.0) {
            return Err(EnvError::Invalid(format!(
                "control_hz must be positive, got {}",
                self.control_hz
            )));
        }
        if self.history_len == 0 || self.goal_future_len == 0 {
            return Err(EnvError::Invalid(
                "history and goal future lengths must be at least 1".into(),
            ));
        }
        if self.keypoint_termination_m <= 0.0 || self.gravity_termination_xy <= 0.0 {
            return Err(EnvError::Invalid(
                "termination thresholds must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Reward weights, tracking kernel widths, class weight ratios, and desired
/// step shape. Weights multiply the unweighted terms of [`RewardTerms`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    pub w_joint_pos: f64,
    pub w_joint_vel: f64,
    pub w_body_pos: f64,
    pub w_body_rot: f64,
    pub w_action_rate: f64,
    pub w_energy: f64,
    pub w_dof_acc: f64,
    pub w_dof_limits: f64,
    pub w_feet_slip: f64,
    pub w_orientation: f64,
    pub w_feet_contact: f64,
    pub w_feet_orientation: f64,
    pub w_feet_max_height: f64,
    pub w_feet_air_time: f64,
    pub w_termination: f64,
    pub w_alive: f64,
    /// Tracking kernel widths (see [`weighted_exp_reward`]).
    pub sigma_joint_pos: f64,
    pub sigma_joint_vel: f64,
    pub sigma_body_pos: f64,
    pub sigma_body_rot: f64,
    /// Raw keypoint class weight ratios, normalized per term.
    pub keypoint_weight_end_effector: f64,
    pub keypoint_weight_upper: f64,
    pub keypoint_weight_lower: f64,
    /// Raw joint class weight ratios, normalized per term.
    pub joint_weight_upper: f64,
    pub joint_weight_lower: f64,
    /// Desired maximum foot clearance during a step, m.
    pub step_height_m: f64,
    /// Desired step air time, s.
    pub step_air_time_s: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            w_joint_pos: 32.0,
            w_joint_vel: 16.0,
            w_body_pos: 50.0,
            w_body_rot: 20.0,
            w_action_rate: -1.0,
            w_energy: -1e-6,
            w_dof_acc: -3e-6,
            w_dof_limits: -100.0,
            w_feet_slip: -5.0,
            w_orientation: -50.0,
            w_feet_contact: -0.03,
            w_feet_orientation: -62.5,
            w_feet_max_height: -2500.0,
            w_feet_air_time: 1000.0,
            w_termination: -200.0,
            w_alive: 20.0,
            sigma_joint_pos: 0.5,
            sigma_joint_vel: 10.0,
            sigma_body_pos: 0.3,
            sigma_body_rot: 1.0,
            keypoint_weight_end_effector: 4.0,
            keypoint_weight_upper: 2.0,
            keypoint_weight_lower: 1.0,
            joint_weight_upper: 2.0,
            joint_weight_lower: 1.0,
            step_height_m: 0.1,
            step_air_time_s: 0.25,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        let sigmas = [
            self.sigma_joint_pos,
            self.sigma_joint_vel,
            self.sigma_body_pos,
            self.sigma_body_rot,
        ];
        if sigmas.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(EnvError::Invalid("tracking sigmas must be positive".into()));
        }
        let classes = [
            self.keypoint_weight_end_effector,
            self.keypoint_weight_upper,
            self.keypoint_weight_lower,
            self.joint_weight_upper,
            self.joint_weight_lower,
        ];
        if classes.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(EnvError::Invalid("class weights must be positive".into()));
        }
        Ok(())
    }
}

/// Standard deviations of the additive Gaussian observation noise, applied
/// to actor observations only. Zero disables a field without consuming rng
/// draws.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObsNoiseConfig {
    pub joint_pos: f64,
    pub joint_vel: f64,
    pub root_ang_vel: f64,
    pub projected_gravity: f64,
    pub local_body_pos: f64,
    pub global_body_pos: f64,
    pub global_body_quat: f64,
    pub global_body_lin_vel: f64,
    pub global_body_ang_vel: f64,
    pub goal_keypoints: f64,
}

impl Default for ObsNoiseConfig {
    fn default() -> Self {
        ObsNoiseConfig {
            joint_pos: 0.01,
            joint_vel: 0.1,
            root_ang_vel: 0.5,
            projected_gravity: 0.1,
            local_body_pos: 0.01,
            global_body_pos: 0.01,
            global_body_quat: 0.01,
            global_body_lin_vel: 0.2,
            global_body_ang_vel: 0.5,
            goal_keypoints: 0.05,
        }
    }
}

impl ObsNoiseConfig {
    /// No noise anywhere — the critic's view.
    pub fn zeros() -> ObsNoiseConfig {
        ObsNoiseConfig {
            joint_pos: 0.0,
            joint_vel: 0.0,
            root_ang_vel: 0.0,
            projected_gravity: 0.0,
            local_body_pos: 0.0,
            global_body_pos: 0.0,
            global_body_quat: 0.0,
            global_body_lin_vel: 0.0,
            global_body_ang_vel: 0.0,
            goal_keypoints: 0.0,
        }
    }

    fn stds(&self) -> [f64; 10] {
        [
            self.joint_pos,
            self.joint_vel,
            self.root_ang_vel,
            self.projected_gravity,
            self.local_body_pos,
            self.global_body_pos,
            self.global_body_quat,
            self.global_body_lin_vel,
            self.global_body_ang_vel,
            self.goal_keypoints,
        ]
    }
}

/// Physics and observation randomization ranges. All ranges are `[lo, hi]`
/// with `lo == hi` meaning "disabled" (no rng draw, value `lo`).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DomainRandConfig {
    /// Seconds between base velocity pushes; ≤ 0 disables pushes.
    pub push_interval_s: f64,
    /// Range of each horizontal push velocity component, m/s.
    pub push_speed_m_s: [f64; 2],
    /// Ground friction coefficient.
    pub friction: [f64; 2],
    /// Additive base CoM offset per axis, m.
    pub base_com_bias_m: [f64; 2],
    /// Multiplicative per-link mass scale.
    pub mass_scale: [f64; 2],
    /// Multiplicative per-joint proportional gain scale.
    pub kp_scale: [f64; 2],
    /// Multiplicative per-joint derivative gain scale.
    pub kd_scale: [f64; 2],
    /// Multiplicative per-joint torque limit scale.
    pub torque_scale: [f64; 2],
    /// Whole control steps of actuation delay, sampled uniformly.
    pub control_delay: [usize; 2],
    /// Additive per-episode goal keypoint offset per axis, m.
    pub goal_offset_m: [f64; 2],
    pub noise: ObsNoiseConfig,
}

impl Default for DomainRandConfig {
    fn default() -> Self {
        DomainRandConfig {
            push_interval_s: 5.0,
            push_speed_m_s: [-1.0, 1.0],
            friction: [0.4, 1.25],
            base_com_bias_m: [-0.1, 0.1],
            mass_scale: [0.7, 1.3],
            kp_scale: [0.75, 1.25],
            kd_scale: [0.75, 1.25],
            torque_scale: [0.5, 1.5],
            control_delay: [0, 3],
            goal_offset_m: [-0.02, 0.02],
            noise: ObsNoiseConfig::default(),
        }
    }
}

impl DomainRandConfig {
    /// Identity randomization: nominal physics, zero noise, no pushes.
    pub fn disabled() -> DomainRandConfig {
        DomainRandConfig {
            push_interval_s: 0.0,
            push_speed_m_s: [0.0, 0.0],
            friction: [SimConfig::default().friction; 2],
            base_com_bias_m: [0.0, 0.0],
            mass_scale: [1.0, 1.0],
            kp_scale: [1.0, 1.0],
            kd_scale: [1.0, 1.0],
            torque_scale: [1.0, 1.0],
            control_delay: [0, 0],
            goal_offset_m: [0.0, 0.0],
            noise: ObsNoiseConfig::zeros(),
        }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let ranges = [
            ("push_speed_m_s", self.push_speed_m_s),
            ("friction", self.friction),
            ("base_com_bias_m", self.base_com_bias_m),
            ("mass_scale", self.mass_scale),
            ("kp_scale", self.kp_scale),
            ("kd_scale", self.kd_scale),
            ("torque_scale", self.torque_scale),
            ("goal_offset_m", self.goal_offset_m),
        ];
        for (name, [lo, hi]) in ranges {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(EnvError::Invalid(format!(
                    "{name} range [{lo}, {hi}] is not well-ordered"
                )));
            }
        }
        if self.control_delay[0] > self.control_delay[1] {
            return Err(EnvError::Invalid(
                "control_delay range is not well-ordered".into(),
            ));
        }
        if self.friction[0] <= 0.0 {
            return Err(EnvError::Invalid("friction must be positive".into()));
        }
        if self.mass_scale[0] <= 0.0
            || self.kp_scale[0] < 0.0
            || self.kd_scale[0] < 0.0
            || self.torque_scale[0] < 0.0
        {
            return Err(EnvError::Invalid(
                "multiplicative scales must not be negative".into(),
            ));
        }
        if self
            .noise
            .stds()
            .iter()
            .any(|s| !(s.is_finite() && *s >= 0.0))
        {
            return Err(EnvError::Invalid(
                "noise standard deviations must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

// ── Sampled randomization ───────────────────────────────────────────────

/// One episode's sampled physics parameters. These are exactly the values a
/// privileged observation exposes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomizedParams {
    pub friction: f64,
    #[serde(with = "crate::model::serde_util::vec3")]
    pub base_com_bias: Vector3<f64>,
    /// Per-link mass (and inertia) scale.
    pub mass_scale: Vec<f64>,
    pub kd_scale: Vec<f64>,
    pub kp_scale: Vec<f64>,
    pub torque_scale: Vec<f64>,
    pub control_delay: usize,
    #[serde(with = "crate::model::serde_util::vec3")]
    pub goal_offset: Vector3<f64>,
}

impl RandomizedParams {
    /// Identity parameters for `model` under the default simulator friction.
    pub fn nominal(model: &RobotModel) -> RandomizedParams {
        RandomizedParams {
            friction: SimConfig::default().friction,
            base_com_bias: Vector3::zeros(),
            mass_scale: vec![1.0; model.n_links()],
            kd_scale: vec![1.0; model.n_joints()],
            kp_scale: vec![1.0; model.n_joints()],
            torque_scale: vec![1.0; model.n_joints()],
            control_delay: 0,
            goal_offset: Vector3::zeros(),
        }
    }
}

fn draw(rng: &mut ChaCha8Rng, range: [f64; 2]) -> f64 {
    if range[0] == range[1] {
        range[0]
    } else {
        rng.random_range(range[0]..=range[1])
    }
}

/// Draw one episode's parameters. Draw order: friction, CoM bias (xyz),
/// per-link mass scales, per-joint Kp, Kd, then torque scales, control delay,
/// goal offset (xyz). Degenerate ranges draw nothing.
pub fn sample_randomization(
    model: &RobotModel,
    cfg: &DomainRandConfig,
    rng: &mut ChaCha8Rng,
) -> RandomizedParams {
    let friction = draw(rng, cfg.friction);
    let base_com_bias = Vector3::new(
        draw(rng, cfg.base_com_bias_m),
        draw(rng, cfg.base_com_bias_m),
        draw(rng, cfg.base_com_bias_m),
    );
    let mass_scale = (0..model.n_links())
        .map(|_| draw(rng, cfg.mass_scale))
        .collect();
    let kp_scale: Vec<f64> = (0..model.n_joints())
        .map(|_| draw(rng, cfg.kp_scale))
        .collect();
    let kd_scale: Vec<f64> = (0..model.n_joints())
        .map(|_| draw(rng, cfg.kd_scale))
        .collect();
    let torque_scale = (0..model.n_joints())
        .map(|_| draw(rng, cfg.torque_scale))
        .collect();
    let control_delay = if cfg.control_delay[0] == cfg.control_delay[1] {
        cfg.control_delay[0]
    } else {
        rng.random_range(cfg.control_delay[0]..=cfg.control_delay[1])
    };
    let goal_offset = Vector3::new(
        draw(rng, cfg.goal_offset_m),
        draw(rng, cfg.goal_offset_m),
        draw(rng, cfg.goal_offset_m),
    );
    RandomizedParams {
        friction,
        base_com_bias,
        mass_scale,
        kd_scale,
        kp_scale,
        torque_scale,
        control_delay,
        goal_offset,
    }
}

/// Bake sampled parameters into a simulation model, config, and gains.
/// Mass scales multiply both mass and rotational inertia (fixed geometry);
/// the CoM bias shifts the base link's center of mass.
pub fn apply_randomization(
    model: &RobotModel,
    sim_cfg: &SimConfig,
    params: &RandomizedParams,
) -> (RobotModel, SimConfig, PdGains) {
    let mut m = model.clone();
    for (link, s) in m.links.iter_mut().zip(&params.mass_scale) {
        link.mass *= s;
        link.inertia *= *s;
    }
    m.links[0].com += params.base_com_bias;
    let mut cfg = sim_cfg.clone();
    cfg.friction = params.friction;
    let mut gains = PdGains::from_model(model);
    for i in 0..model.n_joints() {
        gains.kp[i] *= params.kp_scale[i];
        gains.kd[i] *= params.kd_scale[i];
        gains.torque_limit[i] *= params.torque_scale[i];
    }
    (m, cfg, gains)
}

// ── Goals and mirrors ───────────────────────────────────────────────────

/// One goal frame: target joint state and keypoint poses.
#[derive(Debug, Clone, PartialEq)]
pub struct GoalFrame {
    pub q: Vec<f64>,
    pub qd: Vec<f64>,
    pub keypoint_pos: Vec<Vector3<f64>>,
    pub keypoint_rot: Vec<UnitQuaternion<f64>>,
}

impl GoalFrame {
    pub fn from_track(track: &GoalTrack, frame: usize) -> GoalFrame {
        GoalFrame {
            q: track.q[frame].clone(),
            qd: track.qd[frame].clone(),
            keypoint_pos: track.keypoint_pos[frame].clone(),
            keypoint_rot: track.keypoint_rot[frame].clone(),
        }
    }
}

/// Reflect a goal frame across the sagittal plane.
pub fn mirror_goal_frame(model: &RobotModel, goal: &GoalFrame) -> GoalFrame {
    GoalFrame {
        q: model.mirror_joint_vector(&goal.q),
        qd: model.mirror_joint_vector(&goal.qd),
        keypoint_pos: model.mirror_keypoint_vec3(&goal.keypoint_pos),
        keypoint_rot: model.mirror_keypoint_quat(&goal.keypoint_rot),
    }
}

/// Reflect a full simulation state across the sagittal plane, permuting the
/// per-sphere contact slots onto their mirror images.
pub fn mirror_sim_state(model: &RobotModel, state: &SimState) -> SimState {
    let perm = model.contact_sphere_perm();
    SimState {
        time: state.time,
        base_pos: math::mirror_vec(&state.base_pos),
        base_quat: math::mirror_quat(&state.base_quat),
        base_linvel: math::mirror_vec(&state.base_linvel),
        base_angvel: math::mirror_axial(&state.base_angvel),
        q: model.mirror_joint_vector(&state.q),
        qd: model.mirror_joint_vector(&state.qd),
        contact_forces: perm
            .iter()
            .map(|&p| math::mirror_vec(&state.contact_forces[p]))
            .collect(),
        contact_anchors: perm
            .iter()
            .map(|&p| state.contact_anchors[p].map(|a| math::mirror_vec(&a)))
            .collect(),
    }
}

// ── The environment ─────────────────────────────────────────────────────

/// Outcome of one control step.
#[derive(Debug, Clone)]
pub struct StepResult {
    /// Unweighted reward terms for this step.
    pub terms: RewardTerms,
    /// Weighted total reward.
    pub total: f64,
    pub terminated: Option<Termination>,
    /// The motion ended with resampling disabled; the episode was cut short
    /// without a termination penalty.
    pub truncated: bool,
    /// `terminated or truncated`; the environment has already reset itself.
    pub done: bool,
    /// A new motion was sampled mid-episode (no reset).
    pub motion_resampled: bool,
    /// Velocity delta applied to the base this step, if a push fired.
    pub push: Option<Vector3<f64>>,
    /// Critic observation of the final state when truncated, for value
    /// bootstrapping across the cut.
    pub bootstrap_obs: Option<DVector<f64>>,
    /// Simulation time at the end of the step, before any reset.
    pub time: f64,
}

/// A single tracking environment instance. See the module docs.
#[derive(Debug, Clone)]
pub struct TrackingEnv {
    model: RobotModel,
    sim_cfg: SimConfig,
    env_cfg: EnvConfig,
    reward_cfg: RewardConfig,
    rand_cfg: DomainRandConfig,
    tracks: Vec<GoalTrack>,
    track_names: Vec<String>,
    rng: ChaCha8Rng,
    // Per-episode state.
    params: RandomizedParams,
    sim_model: RobotModel,
    sim_run: SimConfig,
    gains: PdGains,
    delay: DelayBuffer,
    state: SimState,
    feet: FeetTracker,
    track_idx: usize,
    cursor: usize,
    episode_time: f64,
    next_push: f64,
    prev_action: Vec<f64>,
    history: Vec<DVector<f64>>,
}

impl TrackingEnv {
    /// Build an environment over `clips`, resampling each to the control
    /// rate, and reset it once. The simulator control period must match
    /// `1 / control_hz`.
    pub fn new(
        model: RobotModel,
        sim_cfg: SimConfig,
        env_cfg: EnvConfig,
        reward_cfg: RewardConfig,
        rand_cfg: DomainRandConfig,
        clips: &[MotionClip],
        seed: u64,
    ) -> Result<TrackingEnv, EnvError> {
        env_cfg.validate()?;
        reward_cfg.validate()?;
        rand_cfg.validate()?;
        if clips.is_empty() {
            return Err(EnvError::Invalid(
                "at least one motion clip is required".into(),
            ));
        }
        if (sim_cfg.dt_control * env_cfg.control_hz - 1.0).abs() > 1e-9 {
            return Err(EnvError::Invalid(format!(
                "simulator control period {} does not match control_hz {}",
                sim_cfg.dt_control, env_cfg.control_hz
            )));
        }
        let mut tracks = Vec::with_capacity(clips.len());
        let mut track_names = Vec::with_capacity(clips.len());
        for clip in clips {
            let resampled = motion::resample(clip, env_cfg.control_hz)?;
            tracks.push(GoalTrack::derive(&resampled, &model)?);
            track_names.push(clip.name.clone());
        }
        let n = model.n_joints();
        let params = RandomizedParams::nominal(&model);
        let (sim_model, sim_run, gains) = apply_randomization(&model, &sim_cfg, &params);
        let mut env = TrackingEnv {
            state: SimState::at_rest(&model),
            feet: FeetTracker::new(&model),
            model,
            sim_cfg,
            env_cfg,
            reward_cfg,
            rand_cfg,
            tracks,
            track_names,
            rng: ChaCha8Rng::seed_from_u64(seed),
            params,
            sim_model,
            sim_run,
            gains,
            delay: DelayBuffer::new(0),
            track_idx: 0,
            cursor: 0,
            episode_time: 0.0,
            next_push: 0.0,
            prev_action: vec![0.0; n],
            history: Vec::new(),
        };
        env.reset();
        Ok(env)
    }

    // ── Accessors ───────────────────────────────────────────────────

    pub fn model(&self) -> &RobotModel {
        &self.model
    }

    pub fn env_cfg(&self) -> &EnvConfig {
        &self.env_cfg
    }

    pub fn reward_cfg(&self) -> &RewardConfig {
        &self.reward_cfg
    }

    pub fn state(&self) -> &SimState {
        &self.state
    }

    pub fn params(&self) -> &RandomizedParams {
        &self.params
    }

    pub fn n_tracks(&self) -> usize {
        self.tracks.len()
    }

    pub fn track_idx(&self) -> usize {
        self.track_idx
    }

    pub fn track_name(&self, idx: usize) -> &str {
        &self.track_names[idx]
    }

    pub fn track(&self, idx: usize) -> &GoalTrack {
        &self.tracks[idx]
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    /// The clean goal frame at the current cursor.
    pub fn goal_frame(&self) -> GoalFrame {
        GoalFrame::from_track(&self.tracks[self.track_idx], self.cursor)
    }

    /// Current world keypoint positions of the robot.
    pub fn keypoints(&self) -> Vec<Vector3<f64>> {
        let poses = self.model.fk(&self.state.base_iso(), &self.state.q);
        self.model.keypoints_global(&poses)
    }

    // ── Episode control ─────────────────────────────────────────────

    /// Start a new episode on a uniformly sampled motion.
    pub fn reset(&mut self) {
        let idx = self.rng.random_range(0..self.tracks.len());
        self.reset_to(idx);
    }

    /// Start a new episode on a specific motion: sample randomization, place
    /// the robot on the first goal frame (lifted if any contact sphere would
    /// start underground), and seed the proprioceptive history.
    pub fn reset_to(&mut self, track_idx: usize) {
        assert!(track_idx < self.tracks.len(), "track index out of range");
        self.track_idx = track_idx;
        self.cursor = 0;
        self.params = sample_randomization(&self.model, &self.rand_cfg, &mut self.rng);
        let (m, c, g) = apply_randomization(&self.model, &self.sim_cfg, &self.params);
        self.sim_model = m;
        self.sim_run = c;
        self.gains = g;
        self.delay = DelayBuffer::new(self.params.control_delay);

        let track = &self.tracks[track_idx];
        let mut state = SimState::at_rest(&self.model);
        state.base_pos = track.root_pos[0];
        state.base_quat = track.root_quat[0];
        state.base_linvel = track.root_lin_vel[0];
        state.base_angvel = track.root_ang_vel[0];
        state.q = track.q[0].clone();
        state.qd = track.qd[0].clone();
        let poses = self.model.fk(&state.base_iso(), &state.q);
        let mut lowest = f64::INFINITY;
        for s in &self.model.contact_spheres {
            lowest = lowest.min(poses[s.link].transform_point(&s.offset.into()).z - s.radius);
        }
        if lowest < 0.0 {
            state.base_pos.z -= lowest;
        }
        self.state = state;

        self.feet = FeetTracker::new(&self.model);
        self.episode_time = 0.0;
        self.next_push = self.rand_cfg.push_interval_s;
        self.prev_action = vec![0.0; self.model.n_joints()];
        self.history.clear();
        let p = build_proprio(
            &self.model,
            &self.state,
            &self.prev_action,
            &self.rand_cfg.noise,
            &mut self.rng,
        );
        self.history.push(p);
    }

    /// Apply one action. See the module docs for the step sequence; the
    /// environment resets itself whenever the returned result says `done`.
    pub fn step(&mut self, action: &[f64]) -> StepResult {
        assert_eq!(
            action.len(),
            self.model.n_joints(),
            "action dimension mismatch"
        );
        let dt = self.sim_cfg.dt_control;
        let qd_prev = self.state.qd.clone();

        let mut push = None;
        // Half-step slack so accumulated clock rounding never defers a push.
        if self.rand_cfg.push_interval_s > 0.0 && self.episode_time + 0.5 * dt >= self.next_push {
            let dv = Vector3::new(
                draw(&mut self.rng, self.rand_cfg.push_speed_m_s),
                draw(&mut self.rng, self.rand_cfg.push_speed_m_s),
                0.0,
            );
            self.next_push += self.rand_cfg.push_interval_s;
            push = Some(dv);
        }

        let stepped = sim::step_control(
            &self.sim_model,
            &self.sim_run,
            &self.gains,
            &mut self.state,
            action,
            push,
            &mut self.delay,
        );
        let info = match stepped {
            Ok(info) => info,
            Err(_) => {
                let terms = RewardTerms {
                    termination: 1.0,
                    ..RewardTerms::zeros()
                };
                let total = terms.total(&self.reward_cfg);
                let time = self.state.time;
                self.reset();
                return StepResult {
                    terms,
                    total,
                    terminated: Some(Termination::NonFinite),
                    truncated: false,
                    done: true,
                    motion_resampled: false,
                    push,
                    bootstrap_obs: None,
                    time,
                };
            }
        };

        let mut motion_resampled = false;
        let mut truncated = false;
        if self.cursor + 1 < self.tracks[self.track_idx].n_frames() {
            self.cursor += 1;
        } else if self.env_cfg.resample_on_motion_end {
            self.track_idx = self.rng.random_range(0..self.tracks.len());
            self.cursor = 0;
            motion_resampled = true;
        } else {
            truncated = true;
        }

        let kin = sim::dynamics::kinematics(&self.model, &self.state.base_iso(), &self.state.q);
        let vel = sim::dynamics::velocities(
            &self.model,
            &kin,
            &self.state.base_linvel,
            &self.state.base_angvel,
            &self.state.qd,
        );
        let feet_status = self
            .feet
            .update(&self.model, &kin.poses, &self.state.contact_forces, dt);
        let goal = self.goal_frame();
        let keypoints = self.model.keypoints_global(&kin.poses);
        let terminated =
            check_termination(&self.env_cfg, &self.state, &keypoints, &goal.keypoint_pos);
        let terms = compute_reward_terms(
            &self.model,
            &self.reward_cfg,
            &RewardInputs {
                state: &self.state,
                poses: &kin.poses,
                vel: &vel,
                qd_prev: &qd_prev,
                action_prev: &self.prev_action,
                action,
                torques: &info.torques,
                goal: &goal,
                feet: &feet_status,
                terminated: terminated.is_some(),
                dt,
            },
        );
        let total = terms.total(&self.reward_cfg);

        self.episode_time += dt;
        self.prev_action = action.to_vec();
        let time = self.state.time;
        let done = terminated.is_some() || truncated;
        let bootstrap_obs = if truncated && terminated.is_none() {
            Some(self.critic_obs())
        } else {
            None
        };
        if done {
            self.reset();
        } else {
            let p = build_proprio(
                &self.model,
                &self.state,
                &self.prev_action,
                &self.rand_cfg.noise,
                &mut self.rng,
            );
            self.history.push(p);
            if self.history.len() > self.env_cfg.history_len {
                self.history.remove(0);
            }
        }

        StepResult {
            terms,
            total,
            terminated,
            truncated,
            done,
            motion_resampled,
            push,
            bootstrap_obs,
            time,
        }
    }

    // ── Observations ────────────────────────────────────────────────

    /// Noisy single-step observation for the teacher actor, with the
    /// per-episode goal offset applied.
    pub fn teacher_obs(&mut self) -> DVector<f64> {
        let mut goal = self.goal_frame();
        for p in &mut goal.keypoint_pos {
            *p += self.params.goal_offset;
        }
        build_teacher_obs(
            &self.model,
            &self.state,
            &self.prev_action,
            &goal,
            &self.params,
            &self.rand_cfg.noise,
            &mut self.rng,
        )
    }

    /// Noiseless teacher-layout observation with the clean goal — what the
    /// critic sees. Draws nothing from the rng.
    pub fn critic_obs(&mut self) -> DVector<f64> {
        build_teacher_obs(
            &self.model,
            &self.state,
            &self.prev_action,
            &self.goal_frame(),
            &self.params,
            &ObsNoiseConfig::zeros(),
            &mut self.rng,
        )
    }

    /// Noisy stacked observation for the student actor.
    pub fn student_obs(&mut self) -> DVector<f64> {
        build_student_obs(
            &self.env_cfg,
            &self.history,
            &self.tracks[self.track_idx],
            self.cursor,
            &self.params.goal_offset,
            &self.rand_cfg.noise,
            &mut self.rng,
        )
    }
}
