//! marionette — a self-contained framework for training humanoid motion-tracking
//! policies on a single machine.
//!
//! The crate covers the whole pipeline:
//!
//! * [`model`] — articulated robot descriptions (links, joints, keypoints,
//!   bilateral symmetry maps) with forward kinematics and mirror operators.
//! * [`sim`] — floating-base rigid-body dynamics in generalized coordinates
//!   (composite rigid-body mass matrix, recursive Newton–Euler bias forces,
//!   penalty ground contact, PD actuation, semi-implicit Euler integration).
//! * [`motion`] — reference motion clips: file I/O, procedural generators,
//!   synthetic corruption, retargeting, dataset splits, and goal tracks.
//! * [`env`] — the tracking environment: observations for teacher and student
//!   policies, the weighted tracking reward stack, termination, and domain
//!   randomization.
//! * [`net`] — multilayer perceptrons with hand-written backpropagation,
//!   Gaussian policies, running input normalization, and Adam.
//! * [`train`] — PPO with an auxiliary mirror-symmetry surrogate, and
//!   teacher-to-student distillation.
//! * [`eval`] — tracking metrics (success rate, keypoint errors in global and
//!   heading-local frames) and deterministic report emission.
//!
//! Everything is `f64`, seeded, and single-threaded, so every pipeline stage is
//! reproducible bit-for-bit given the same inputs and seeds.

pub mod env;
pub mod eval;
pub mod math;
pub mod model;
pub mod motion;
pub mod net;
pub mod sim;
pub mod train;
