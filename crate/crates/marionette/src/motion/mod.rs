//! Reference motion clips: file I/O, resampling, procedural generators,
//! synthetic corruption, retargeting, dataset handling, and goal tracks.
//!
//! A [`MotionClip`] is a uniformly sampled sequence of robot configurations
//! (root pose plus joint angles). Clips come from three places: procedural
//! [`generate`]rs, JSON files ([`load_clip`] / [`save_clip`]), and
//! [`corrupt`]ion of an existing clip into a degraded copy that mimics the
//! artifacts of markerless motion capture. A clip is turned into training
//! goals by [`GoalTrack::derive`], which runs forward kinematics per frame
//! and differentiates numerically.
//!
//! Noise amplitude convention: corruption strength is specified in meters of
//! keypoint error. Joint-angle noise uses the small-angle equivalence
//! **1 m of keypoint error ≙ 1 rad of joint error at unit limb length**, so a
//! `keypoint_noise_std` of 0.05 applies 0.05 rad of joint jitter and 0.05 m
//! of root jitter. This keeps one scalar knob meaningful across both spaces.
//!
//! All randomness is drawn from a single ChaCha8 stream seeded from the
//! corruption spec, with stages applied in a fixed order, so identical inputs
//! give bit-identical outputs.

use std::f64::consts::{PI, TAU};
use std::path::Path;

use nalgebra::{Isometry3, Quaternion, Translation3, UnitQuaternion, Vector3};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{JointClass, RobotModel};


/// Sample rate of procedurally generated clips, Hz. Matches the control rate
/// of the tracking environment so generated goals need no resampling.
pub const GEN_FPS: f64 = 50.0;

/// Errors produced while loading, generating, or transforming clips.
#[derive(Debug, Error)]
pub enum MotionError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("motion document parse error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid motion clip: {0}")]
    Invalid(String),
}

// ── Clip type ───────────────────────────────────────────────────────────

/// One sampled configuration of the robot.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionFrame {
    /// Root position in the world frame, m.
    pub root_pos: Vector3<f64>,
    /// Root orientation in the world frame.
    pub root_quat: UnitQuaternion<f64>,
    /// Joint angles, rad, in the clip's joint order.
    pub q: Vec<f64>,
}

/// A uniformly sampled reference motion.
///
/// Invariants (checked by [`MotionClip::validate`], enforced on every load):
/// positive finite sample rate, at least two frames, a constant joint count
/// equal to `joint_names.len()`, unit root quaternions, and finite values
/// throughout. `provenance` is empty for clean clips and lists one entry per
/// corruption applied otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionClip {
    pub name: String,
    /// Sample rate, Hz.
    pub fps: f64,
    /// Joint names, defining the meaning and order of each frame's `q`.
    pub joint_names: Vec<String>,
    pub frames: Vec<MotionFrame>,
    /// Corruption log; empty means the clip is clean.
    pub provenance: Vec<String>,
}

impl MotionClip {
    /// Time of frame `i`, s.
    pub fn frame_time(&self, i: usize) -> f64 {
        i as f64 / self.fps
    }

    /// Clip duration (time from first to last frame), s.
    pub fn duration(&self) -> f64 {
        (self.frames.len().saturating_sub(1)) as f64 / self.fps
    }

    pub fn n_joints(&self) -> usize {
        self.joint_names.len()
    }

    pub fn is_clean(&self) -> bool {
        self.provenance.is_empty()
    }

    /// Checks the clip invariants listed on the type.
    pub fn validate(&self) -> Result<(), MotionError> {
        let fail = |msg: String| Err(MotionError::Invalid(msg));
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return fail(format!("fps must be positive and finite, got {}", self.fps));
        }
        if self.frames.len() < 2 {
            return fail(format!("≥ 2 frames required, got {}", self.frames.len()));
        }
        for (i, f) in self.frames.iter().enumerate() {
            if f.q.len() != self.joint_names.len() {
                return fail(format!(
                    "frame {i}: {} joint angles, expected {}",
                    f.q.len(),
                    self.joint_names.len()
                ));
            }
            let finite = f.q.iter().all(|v| v.is_finite())
                && f.root_pos.iter().all(|v| v.is_finite())
                && f.root_quat.coords.iter().all(|v| v.is_finite());
            if !finite {
                return fail(format!("frame {i}: non-finite value"));
            }
        }
        Ok(())
    }

    /// Root pose of frame `i` as an isometry.
    pub fn root_pose(&self, i: usize) -> Isometry3<f64> {
        let f = &self.frames[i];
        Isometry3::from_parts(Translation3::from(f.root_pos), f.root_quat)
    }

    /// The clip reflected through the sagittal plane: joint vectors pass
    /// through the model's symmetry map and the root pose through the base
    /// mirror. Mirroring twice returns the original clip.
    pub fn mirrored(&self, model: &RobotModel) -> MotionClip {
        let frames = self
            .frames
            .iter()
            .map(|f| {
                let pose = RobotModel::mirror_base_pose(&Isometry3::from_parts(
                    Translation3::from(f.root_pos),
                    f.root_quat,
                ));
                MotionFrame {
                    root_pos: pose.translation.vector,
                    root_quat: pose.rotation,
                    q: model.mirror_joint_vector(&f.q),
                }
            })
            .collect();
        MotionClip {
            name: self.name.clone(),
            fps: self.fps,
            joint_names: self.joint_names.clone(),
            frames,
            provenance: self.provenance.clone(),
        }
    }
}

// ── JSON document format ────────────────────────────────────────────────
//
// {
//   "name": "...", "fps": 50.0, "joints": ["r_hip_pitch", ...],
//   "provenance": ["..."],                    // omitted when clean
//   "frames": [
//     {"t": 0.0, "root_pos": [x,y,z], "root_quat": [w,x,y,z], "q": [...]},
//     ...
//   ]
// }
//
// `t` is informational (always i/fps); it is regenerated on save and not
// trusted on load. Quaternions are stored scalar-first.

#[derive(Serialize, Deserialize)]
struct FrameDoc {
    t: f64,
    root_pos: [f64; 3],
    root_quat: [f64; 4],
    q: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ClipDoc {
    name: String,
    fps: f64,
    joints: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    provenance: Vec<String>,
    frames: Vec<FrameDoc>,
}

impl MotionClip {
    /// Serializes to the JSON document format (pretty-printed). Floats use
    /// shortest round-trip formatting, so save → load reproduces every value
    /// bit for bit.
    pub fn to_json(&self) -> String {
        let doc = ClipDoc {
            name: self.name.clone(),
            fps: self.fps,
            joints: self.joint_names.clone(),
            provenance: self.provenance.clone(),
            frames: self
                .frames
                .iter()
                .enumerate()
                .map(|(i, f)| FrameDoc {
                    t: self.frame_time(i),
                    root_pos: [f.root_pos.x, f.root_pos.y, f.root_pos.z],
                    root_quat: [f.root_quat.w, f.root_quat.i, f.root_quat.j, f.root_quat.k],
                    q: f.q.clone(),
                })
                .collect(),
        };
        let mut s = serde_json::to_string_pretty(&doc).expect("clip serialization cannot fail");
        s.push('\n');
        s
    }

    /// Parses and validates a clip from the JSON document format.
    pub fn from_json(text: &str) -> Result<MotionClip, MotionError> {
        let doc: ClipDoc = serde_json::from_str(text)?;
        let frames = doc
            .frames
            .iter()
            .enumerate()
            .map(|(i, f)| {
                let [w, x, y, z] = f.root_quat;
                let raw = Quaternion::new(w, x, y, z);
                let norm = raw.norm();
                if (norm - 1.0).abs() > 1e-6 {
                    return Err(MotionError::Invalid(format!(
                        "frame {i}: root_quat norm {norm} is not 1"
                    )));
                }
                // Unit-norm inputs (every quaternion we ever write) are kept
                // bit-exact; slightly off-unit hand-written ones are fixed up.
                let root_quat = if (norm - 1.0).abs() < 1e-12 {
                    UnitQuaternion::new_unchecked(raw)
                } else {
                    UnitQuaternion::from_quaternion(raw)
                };
                Ok(MotionFrame {
                    root_pos: Vector3::new(f.root_pos[0], f.root_pos[1], f.root_pos[2]),
                    root_quat,
                    q: f.q.clone(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let clip = MotionClip {
            name: doc.name,
            fps: doc.fps,
            joint_names: doc.joints,
            frames,
            provenance: doc.provenance,
        };
        clip.validate()?;
        Ok(clip)
    }
}

/// Loads and validates a clip from a JSON file.
pub fn load_clip(path: &Path) -> Result<MotionClip, MotionError> {
    MotionClip::from_json(&std::fs::read_to_string(path)?)
}

/// Saves a clip to a JSON file. `load_clip` of the result reproduces the clip
/// exactly.
pub fn save_clip(clip: &MotionClip, path: &Path) -> Result<(), MotionError> {
    Ok(std::fs::write(path, clip.to_json())?)
}

// ── Resampling ──────────────────────────────────────────────────────────

/// Resamples a clip to `target_fps` by linear interpolation of positions and
/// joint angles and spherical interpolation of root orientations between
/// consecutive source frames. The duration is preserved to within one target
/// frame; resampling to the clip's own rate returns an identical clip.
pub fn resample(clip: &MotionClip, target_fps: f64) -> Result<MotionClip, MotionError> {
    if !(target_fps.is_finite() && target_fps > 0.0) {
        return Err(MotionError::Invalid(format!(
            "target fps must be positive and finite, got {target_fps}"
        )));
    }
    let n_in = clip.frames.len();
    let ratio = clip.fps / target_fps;
    let n_out = (((n_in - 1) as f64 / ratio).round() as usize + 1).max(2);
    let mut frames = Vec::with_capacity(n_out);
    for i in 0..n_out {
        let s = (i as f64 * ratio).clamp(0.0, (n_in - 1) as f64);
        let i0 = (s.floor() as usize).min(n_in - 2);
        let a = s - i0 as f64;
        // Samples landing exactly on a source frame are copied bit-for-bit.
        if a == 0.0 {
            frames.push(clip.frames[i0].clone());
            continue;
        }
        if a == 1.0 {
            frames.push(clip.frames[i0 + 1].clone());
            continue;
        }
        let (f0, f1) = (&clip.frames[i0], &clip.frames[i0 + 1]);
        frames.push(MotionFrame {
            root_pos: f0.root_pos.lerp(&f1.root_pos, a),
            root_quat: f0.root_quat.slerp(&f1.root_quat, a),
            q: f0
                .q
                .iter()
                .zip(&f1.q)
                .map(|(x0, x1)| x0 + a * (x1 - x0))
                .collect(),
        });
    }
    Ok(MotionClip {
        name: clip.name.clone(),
        fps: target_fps,
        joint_names: clip.joint_names.clone(),
        frames,
        provenance: clip.provenance.clone(),
    })
}

// ── Procedural generators ───────────────────────────────────────────────

/// Kinds of procedurally generated motion. All kinds start and end exactly at
/// the model's default pose, so composites are continuous at the seams. Every
/// kind except `Squat` keeps the root fixed at the default standing pose;
/// `Squat` lowers the root consistently with the crouch.
#[derive(Debug, Clone, PartialEq)]
pub enum MotionKind {
    /// Hold the default pose.
    Stand,
    /// Raise the right arm sideways and wave the forearm.
    Wave,
    /// Reach forward with the right arm and return.
    Reach,
    /// Periodic knee bends with a consistently lowered root.
    Squat,
    /// Alternating bent-leg lifts with counter-swinging arms; the root stays
    /// put.
    WalkInPlace,
    /// The parts generated with the same parameters and concatenated.
    Composite(Vec<MotionKind>),
}

impl MotionKind {
    fn label(&self) -> String {
        match self {
            MotionKind::Stand => "stand".into(),
            MotionKind::Wave => "wave".into(),
            MotionKind::Reach => "reach".into(),
            MotionKind::Squat => "squat".into(),
            MotionKind::WalkInPlace => "walk_in_place".into(),
            MotionKind::Composite(parts) => {
                let names: Vec<String> = parts.iter().map(|p| p.label()).collect();
                format!("composite({})", names.join("+"))
            }
        }
    }
}

/// Parameters shared by all generators.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GenParams {
    /// Clip length, s.
    pub duration_s: f64,
    /// Peak excursion scale, rad. 0 collapses every kind to `Stand`.
    pub amplitude: f64,
    /// Oscillation rate, Hz, for the periodic kinds (`Wave` forearm, `Squat`
    /// bends, `WalkInPlace` steps). Snapped to a whole number of cycles per
    /// clip so motions end where they began.
    pub frequency_hz: f64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            duration_s: 4.0,
            amplitude: 0.5,
            frequency_hz: 0.5,
        }
    }
}

/// Generates a reference clip at [`GEN_FPS`]. All trajectories are C¹
/// sinusoids; angles are verified against the model's joint limits and an
/// over-driven joint is an error rather than a silent clamp.
pub fn generate(
    kind: &MotionKind,
    params: &GenParams,
    model: &RobotModel,
) -> Result<MotionClip, MotionError> {
    if !(params.duration_s.is_finite() && params.duration_s > 0.0) {
        return Err(MotionError::Invalid(format!(
            "duration must be positive, got {}",
            params.duration_s
        )));
    }
    if !(params.amplitude.is_finite() && params.amplitude >= 0.0) {
        return Err(MotionError::Invalid(format!(
            "amplitude must be non-negative, got {}",
            params.amplitude
        )));
    }
    if !(params.frequency_hz.is_finite() && params.frequency_hz > 0.0) {
        return Err(MotionError::Invalid(format!(
            "frequency must be positive, got {}",
            params.frequency_hz
        )));
    }
    let clip = generate_unchecked(kind, params, model)?;
    for (i, f) in clip.frames.iter().enumerate() {
        for (j, joint) in model.joints.iter().enumerate() {
            if f.q[j] < joint.limits[0] || f.q[j] > joint.limits[1] {
                return Err(MotionError::Invalid(format!(
                    "{}: frame {i} drives joint {} to {:.3} rad, outside [{}, {}]; \
                     lower the amplitude",
                    kind.label(),
                    joint.name,
                    f.q[j],
                    joint.limits[0],
                    joint.limits[1]
                )));
            }
        }
    }
    Ok(clip)
}

fn generate_unchecked(
    kind: &MotionKind,
    params: &GenParams,
    model: &RobotModel,
) -> Result<MotionClip, MotionError> {
    if let MotionKind::Composite(parts) = kind {
        if parts.is_empty() {
            return Err(MotionError::Invalid("composite of zero parts".into()));
        }
        let mut frames = Vec::new();
        for p in parts {
            frames.extend(generate_unchecked(p, params, model)?.frames);
        }
        return Ok(MotionClip {
            name: kind.label(),
            fps: GEN_FPS,
            joint_names: model.joints.iter().map(|j| j.name.clone()).collect(),
            frames,
            provenance: vec![],
        });
    }

    let joint = |name: &str| {
        model
            .joint_index(name)
            .ok_or_else(|| MotionError::Invalid(format!("model {} lacks joint {name}", model.name)))
    };
    let n = ((params.duration_s * GEN_FPS).round() as usize).max(1) + 1;
    // Exact span between first and last frame; periodic terms complete a
    // whole number of cycles over it so every kind ends at the default pose.
    let span = (n - 1) as f64 / GEN_FPS;
    let cycles = (params.frequency_hz * span).round().max(1.0);
    let freq = cycles / span;
    let amp = params.amplitude;

    let mut frames = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / GEN_FPS;
        // Fade-in/out envelope: zero with zero slope at both ends.
        let env = (PI * t / span).sin().powi(2);
        let mut q = model.default_pose.clone();
        let mut root_pos = model.default_root_pos;
        match kind {
            MotionKind::Stand => {}
            MotionKind::Wave => {
                // Arm raised sideways, forearm oscillating.
                q[joint("r_shoulder_roll")?] += -1.5 * amp * env;
                q[joint("r_elbow")?] += -amp * env * (0.5 + 0.5 * (TAU * freq * t).sin());
            }
            MotionKind::Reach => {
                // One smooth reach forward and back; frequency is unused.
                q[joint("r_shoulder_pitch")?] += -1.6 * amp * env;
                q[joint("r_elbow")?] += -0.5 * amp * env;
            }
            MotionKind::Squat => {
                let bend = amp * (PI * freq * t).sin().powi(2);
                for side in ["r", "l"] {
                    q[joint(&format!("{side}_hip_pitch"))?] += -bend;
                    q[joint(&format!("{side}_knee"))?] += 2.0 * bend;
                    q[joint(&format!("{side}_ankle_pitch"))?] += -bend;
                }
                // Keep the feet planted: the hip-to-ankle drop under this
                // bend is (thigh + shin)·(1 − cos bend).
                let leg = model.joints[joint("r_knee")?].origin.norm()
                    + model.joints[joint("r_ankle_pitch")?].origin.norm();
                root_pos.z -= leg * (1.0 - bend.cos());
            }
            MotionKind::WalkInPlace => {
                let s = (TAU * freq * t).sin();
                let lift = [s.max(0.0).powi(2), (-s).max(0.0).powi(2)];
                for (k, side) in ["r", "l"].into_iter().enumerate() {
                    let bend = amp * lift[k];
                    q[joint(&format!("{side}_hip_pitch"))?] += -bend;
                    q[joint(&format!("{side}_knee"))?] += 2.0 * bend;
                    q[joint(&format!("{side}_ankle_pitch"))?] += -bend;
                }
                // Arms counter-swing their same-side leg.
                let swing = 0.4 * amp * s;
                q[joint("r_shoulder_pitch")?] += swing;
                q[joint("l_shoulder_pitch")?] += -swing;
            }
            MotionKind::Composite(_) => unreachable!("handled above"),
        }
        frames.push(MotionFrame {
            root_pos,
            root_quat: UnitQuaternion::identity(),
            q,
        });
    }
    Ok(MotionClip {
        name: kind.label(),
        fps: GEN_FPS,
        joint_names: model.joints.iter().map(|j| j.name.clone()).collect(),
        frames,
        provenance: vec![],
    })
}

// ── Synthetic corruption ────────────────────────────────────────────────

/// Corruption magnitudes for [`corrupt`]. The all-zero spec (any seed) is the
/// identity. See the module docs for the meter-to-radian noise convention.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Gaussian jitter std, in meters of keypoint error (≙ rad of joint
    /// error); applied per frame to every joint angle and the root pose.
    pub keypoint_noise_std: f64,
    /// Per-limb, per-window probability of freezing a limb's joints.
    pub occlusion_prob: f64,
    /// Occlusion window length, s.
    pub occlusion_hold_s: f64,
    /// Per-frame probability of a single-joint spike.
    pub pose_spike_prob: f64,
    /// Spike magnitude, rad; the result is clamped to the joint limits
    /// widened by 0.2 rad, so spikes may be mildly infeasible but not absurd.
    pub pose_spike_mag: f64,
    /// Root drift speed, m/s, along a random fixed horizontal direction.
    pub drift_rate: f64,
    /// Per-clip probability of swapping the left and right joint groups.
    pub lr_swap_prob: f64,
    /// Length of the swapped interval, s (covers the whole clip if longer).
    pub lr_swap_duration_s: f64,
    pub seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec {
            keypoint_noise_std: 0.0,
            occlusion_prob: 0.0,
            occlusion_hold_s: 0.5,
            pose_spike_prob: 0.0,
            pose_spike_mag: 1.0,
            drift_rate: 0.0,
            lr_swap_prob: 0.0,
            lr_swap_duration_s: 1.0,
            seed: 0,
        }
    }
}

/// Produces a degraded copy of `clip`, logging every applied corruption into
/// the result's provenance. Stages run in a fixed order — left/right swap,
/// occlusion, spikes, jitter, drift — over one seeded stream; a stage whose
/// magnitude is zero draws nothing, so the all-zero spec returns the clip
/// bit-identically.
pub fn corrupt(clip: &MotionClip, spec: &NoiseSpec, model: &RobotModel) -> MotionClip {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = clip.clone();
    let fps = out.fps;
    let n = out.frames.len();
    let duration = out.duration();
    let mut log: Vec<String> = Vec::new();

    // Left/right swap: mocap skeletons intermittently mislabel sides. The
    // joint vector passes through the symmetry map; the root is untouched.
    if spec.lr_swap_prob > 0.0 && rng.random::<f64>() < spec.lr_swap_prob {
        let dur = spec.lr_swap_duration_s;
        let t0 = rng.random_range(0.0..=(duration - dur).max(0.0));
        let t1 = t0 + dur;
        for i in 0..n {
            let t = i as f64 / fps;
            if t >= t0 && t <= t1 {
                out.frames[i].q = model.mirror_joint_vector(&out.frames[i].q);
            }
        }
        log.push(format!("lr_swap t=[{t0:.3},{t1:.3}]"));
    }

    // Occlusion: a hidden limb's joints hold their last confident estimate.
    if spec.occlusion_prob > 0.0 && spec.occlusion_hold_s > 0.0 {
        let groups = limb_groups(model);
        let hold = spec.occlusion_hold_s;
        let n_windows = (duration / hold).ceil().max(1.0) as usize;
        for w in 0..n_windows {
            let (t0, t1) = (w as f64 * hold, (w as f64 + 1.0) * hold);
            let first = (t0 * fps).ceil() as usize;
            if first >= n {
                break;
            }
            for (label, joints) in &groups {
                if rng.random::<f64>() >= spec.occlusion_prob {
                    continue;
                }
                let held: Vec<f64> = joints.iter().map(|&j| out.frames[first].q[j]).collect();
                let mut i = first;
                while i < n && (i as f64 / fps) < t1 {
                    for (k, &j) in joints.iter().enumerate() {
                        out.frames[i].q[j] = held[k];
                    }
                    i += 1;
                }
                log.push(format!("occlusion {label} t=[{t0:.3},{t1:.3})"));
            }
        }
    }

    // Pose spikes: single-frame gross misestimates of one joint.
    if spec.pose_spike_prob > 0.0 {
        for i in 0..n {
            if rng.random::<f64>() >= spec.pose_spike_prob {
                continue;
            }
            let j = rng.random_range(0..model.n_joints());
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let [lo, hi] = model.joints[j].limits;
            let spiked = out.frames[i].q[j] + sign * spec.pose_spike_mag;
            out.frames[i].q[j] = spiked.clamp(lo - 0.2, hi + 0.2);
            log.push(format!(
                "pose_spike frame={i} joint={}",
                model.joints[j].name
            ));
        }
    }

    // Gaussian jitter on every joint angle and the root pose.
    if spec.keypoint_noise_std > 0.0 {
        let std = spec.keypoint_noise_std;
        let normal = |rng: &mut ChaCha8Rng| -> f64 { rng.sample(StandardNormal) };
        for f in &mut out.frames {
            for v in &mut f.q {
                *v += std * normal(&mut rng);
            }
            for v in f.root_pos.iter_mut() {
                *v += std * normal(&mut rng);
            }
            let tilt = Vector3::new(normal(&mut rng), normal(&mut rng), normal(&mut rng)) * std;
            f.root_quat = UnitQuaternion::from_scaled_axis(tilt) * f.root_quat;
        }
        log.push(format!("keypoint_noise std={std}"));
    }

    // Slow horizontal drift, as from an unregistered moving camera.
    if spec.drift_rate > 0.0 {
        let heading = rng.random_range(0.0..TAU);
        let dir = Vector3::new(heading.cos(), heading.sin(), 0.0);
        for i in 0..n {
            out.frames[i].root_pos += dir * (spec.drift_rate * (i as f64 / fps));
        }
        log.push(format!(
            "drift rate={} dir=[{:.3},{:.3}]",
            spec.drift_rate, dir.x, dir.y
        ));
    }

    out.provenance.extend(log);
    out
}

/// Joints grouped into limbs for occlusion: (side prefix, joint class) pairs
/// with stable labels, e.g. `l_leg` = left-side lower-body joints.
fn limb_groups(model: &RobotModel) -> Vec<(String, Vec<usize>)> {
    let mut groups = Vec::new();
    for side in ["l", "r"] {
        for (class, part) in [(JointClass::Upper, "arm"), (JointClass::Lower, "leg")] {
            let joints: Vec<usize> = model
                .joints
                .iter()
                .enumerate()
                .filter(|(_, j)| j.class == class && j.name.starts_with(&format!("{side}_")))
                .map(|(i, _)| i)
                .collect();
            if !joints.is_empty() {
                groups.push((format!("{side}_{part}"), joints));
            }
        }
    }
    groups
}

// ── Retargeting and dataset handling ────────────────────────────────────

/// Maps a clip recorded on `src` onto `dst`: angles are matched by joint name
/// and clamped to the destination limits, and the root height is scaled by
/// the ratio of standing root heights (a proxy for leg length). Returns the
/// retargeted clip and the number of angle clamps performed. The models must
/// expose the same joint names.
pub fn retarget_scale(
    clip: &MotionClip,
    src: &RobotModel,
    dst: &RobotModel,
) -> Result<(MotionClip, usize), MotionError> {
    let src_names: Vec<&str> = src.joints.iter().map(|j| j.name.as_str()).collect();
    if clip.joint_names != src_names {
        return Err(MotionError::Invalid(format!(
            "clip joints do not match source model {}",
            src.name
        )));
    }
    let map: Vec<usize> = dst
        .joints
        .iter()
        .map(|j| {
            clip.joint_names
                .iter()
                .position(|n| n == &j.name)
                .ok_or_else(|| {
                    MotionError::Invalid(format!(
                        "topology mismatch: source model has no joint {}",
                        j.name
                    ))
                })
        })
        .collect::<Result<Vec<_>, _>>()?;
    if map.len() != clip.joint_names.len() {
        return Err(MotionError::Invalid(format!(
            "topology mismatch: {} source joints vs {} destination joints",
            clip.joint_names.len(),
            map.len()
        )));
    }
    let height_ratio = dst.default_root_pos.z / src.default_root_pos.z;
    let mut clamps = 0usize;
    let frames = clip
        .frames
        .iter()
        .map(|f| {
            let q = dst
                .joints
                .iter()
                .zip(&map)
                .map(|(j, &s)| {
                    let v = f.q[s].clamp(j.limits[0], j.limits[1]);
                    if v != f.q[s] {
                        clamps += 1;
                    }
                    v
                })
                .collect();
            let mut root_pos = f.root_pos;
            root_pos.z *= height_ratio;
            MotionFrame {
                root_pos,
                root_quat: f.root_quat,
                q,
            }
        })
        .collect();
    Ok((
        MotionClip {
            name: clip.name.clone(),
            fps: clip.fps,
            joint_names: dst.joints.iter().map(|j| j.name.clone()).collect(),
            frames,
            provenance: clip.provenance.clone(),
        },
        clamps,
    ))
}

/// Retargeting quality: the total out-of-limit angle (rad) that clamping to
/// this model's limits would remove per frame, averaged over frames. Zero if
/// and only if every angle is within limits.
pub fn retarget_error(clip: &MotionClip, model: &RobotModel) -> Result<f64, MotionError> {
    let names: Vec<&str> = model.joints.iter().map(|j| j.name.as_str()).collect();
    if clip.joint_names != names {
        return Err(MotionError::Invalid(format!(
            "clip joints do not match model {}",
            model.name
        )));
    }
    let total: f64 = clip
        .frames
        .iter()
        .map(|f| {
            f.q.iter()
                .zip(&model.joints)
                .map(|(&v, j)| (v - v.clamp(j.limits[0], j.limits[1])).abs())
                .sum::<f64>()
        })
        .sum();
    Ok(total / clip.frames.len() as f64)
}

/// Retains the clips whose [`retarget_error`] does not exceed `max_error`.
pub fn filter_dataset(
    clips: Vec<MotionClip>,
    model: &RobotModel,
    max_error: f64,
) -> Result<Vec<MotionClip>, MotionError> {
    let mut kept = Vec::new();
    for clip in clips {
        if retarget_error(&clip, model)? <= max_error {
            kept.push(clip);
        }
    }
    Ok(kept)
}

/// Splits clips into train/eval sets by a seeded shuffle: every clip lands in
/// exactly one side, with `round(n · train_ratio)` in the training set.
pub fn split_dataset(
    clips: Vec<MotionClip>,
    train_ratio: f64,
    seed: u64,
) -> Result<(Vec<MotionClip>, Vec<MotionClip>), MotionError> {
    if !(train_ratio > 0.0 && train_ratio < 1.0) {
        return Err(MotionError::Invalid(format!(
            "train ratio must be in (0, 1), got {train_ratio}"
        )));
    }
    let mut clips = clips;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    clips.shuffle(&mut rng);
    let n_train = ((clips.len() as f64 * train_ratio).round() as usize).min(clips.len());
    let eval = clips.split_off(n_train);
    Ok((clips, eval))
}

// ── Goal tracks ─────────────────────────────────────────────────────────

/// A motion clip expanded into per-frame tracking goals: keypoint positions
/// and link orientations from forward kinematics, joint angles, and central
/// finite-difference velocities at the clip rate. Indexed `[frame][keypoint]`
/// / `[frame][joint]`. Derivation is pure arithmetic on the clip, so deriving
/// twice gives bit-identical tracks.
#[derive(Debug, Clone, PartialEq)]
pub struct GoalTrack {
    pub fps: f64,
    pub root_pos: Vec<Vector3<f64>>,
    pub root_quat: Vec<UnitQuaternion<f64>>,
    pub root_lin_vel: Vec<Vector3<f64>>,
    /// World-frame root angular velocity, rad/s.
    pub root_ang_vel: Vec<Vector3<f64>>,
    pub q: Vec<Vec<f64>>,
    pub qd: Vec<Vec<f64>>,
    /// World-frame keypoint positions, m.
    pub keypoint_pos: Vec<Vec<Vector3<f64>>>,
    /// World-frame orientations of each keypoint's parent link.
    pub keypoint_rot: Vec<Vec<UnitQuaternion<f64>>>,
}

impl GoalTrack {
    pub fn n_frames(&self) -> usize {
        self.q.len()
    }

    /// Expands `clip` into goals for `model`. The clip's joint order must
    /// match the model's.
    pub fn derive(clip: &MotionClip, model: &RobotModel) -> Result<GoalTrack, MotionError> {
        let names: Vec<&str> = model.joints.iter().map(|j| j.name.as_str()).collect();
        if clip.joint_names != names {
            return Err(MotionError::Invalid(format!(
                "clip joints do not match model {}",
                model.name
            )));
        }
        let n = clip.frames.len();
        let fps = clip.fps;
        let mut track = GoalTrack {
            fps,
            root_pos: Vec::with_capacity(n),
            root_quat: Vec::with_capacity(n),
            root_lin_vel: Vec::with_capacity(n),
            root_ang_vel: Vec::with_capacity(n),
            q: Vec::with_capacity(n),
            qd: Vec::with_capacity(n),
            keypoint_pos: Vec::with_capacity(n),
            keypoint_rot: Vec::with_capacity(n),
        };
        for (i, f) in clip.frames.iter().enumerate() {
            let poses = model.fk(&clip.root_pose(i), &f.q);
            track.root_pos.push(f.root_pos);
            track.root_quat.push(f.root_quat);
            track.q.push(f.q.clone());
            track.keypoint_pos.push(model.keypoints_global(&poses));
            track.keypoint_rot.push(model.keypoint_rotations(&poses));

            // Central differences inside the clip, one-sided at the ends.
            let (ia, ib, scale) = if i == 0 {
                (0, 1, fps)
            } else if i == n - 1 {
                (n - 2, n - 1, fps)
            } else {
                (i - 1, i + 1, fps / 2.0)
            };
            let (fa, fb) = (&clip.frames[ia], &clip.frames[ib]);
            track.qd.push(
                fa.q.iter()
                    .zip(&fb.q)
                    .map(|(a, b)| (b - a) * scale)
                    .collect(),
            );
            track.root_lin_vel.push((fb.root_pos - fa.root_pos) * scale);
            track
                .root_ang_vel
                .push((fb.root_quat * fa.root_quat.inverse()).scaled_axis() * scale);
        }
        Ok(track)
    }
}
