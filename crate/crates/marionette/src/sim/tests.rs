use approx::{assert_abs_diff_eq, assert_relative_eq};
use nalgebra::{UnitQuaternion, Vector3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::contact::ContactParams;
use super::dynamics;
use super::*;
use crate::model::{self, ContactSphere, RobotModel};

// ── helpers ─────────────────────────────────────────────────────────────

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random dynamic state with joints inside their limits. `near_ground`
/// places the base low enough that feet may touch or penetrate the floor.
fn random_state(model: &RobotModel, r: &mut ChaCha8Rng, near_ground: bool) -> SimState {
    let mut s = SimState::at_rest(model);
    let dz = if near_ground {
        r.random_range(-0.02..0.01)
    } else {
        r.random_range(0.3..0.6)
    };
    s.base_pos += Vector3::new(r.random_range(-0.1..0.1), r.random_range(-0.1..0.1), dz);
    s.base_quat = UnitQuaternion::from_scaled_axis(Vector3::new(
        r.random_range(-0.15..0.15),
        r.random_range(-0.15..0.15),
        r.random_range(-0.15..0.15),
    ));
    s.base_linvel = Vector3::new(
        r.random_range(-0.5..0.5),
        r.random_range(-0.5..0.5),
        r.random_range(-0.5..0.5),
    );
    s.base_angvel = Vector3::new(
        r.random_range(-0.5..0.5),
        r.random_range(-0.5..0.5),
        r.random_range(-0.5..0.5),
    );
    for (j, joint) in model.joints.iter().enumerate() {
        let [lo, hi] = joint.limits;
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        s.q[j] = mid + r.random_range(-0.6..0.6) * half;
        s.qd[j] = r.random_range(-1.0..1.0);
    }
    s
}

fn kinetic_from_links(model: &RobotModel, state: &SimState) -> f64 {
    let kin = dynamics::kinematics(model, &state.base_iso(), &state.q);
    let vel = dynamics::velocities(
        model,
        &kin,
        &state.base_linvel,
        &state.base_angvel,
        &state.qd,
    );
    let mut t = 0.0;
    for (l, link) in model.links.iter().enumerate() {
        let rc = kin.com_w[l] - kin.poses[l].translation.vector;
        let v_com = vel.lin[l] + vel.ang[l].cross(&rc);
        t += 0.5 * link.mass * v_com.norm_squared()
            + 0.5 * vel.ang[l].dot(&(kin.inertia_w[l] * vel.ang[l]));
    }
    t
}

/// Total momentum about the world origin: (linear, angular).
fn total_momentum(model: &RobotModel, state: &SimState) -> (Vector3<f64>, Vector3<f64>) {
    let kin = dynamics::kinematics(model, &state.base_iso(), &state.q);
    let vel = dynamics::velocities(
        model,
        &kin,
        &state.base_linvel,
        &state.base_angvel,
        &state.qd,
    );
    let mut p = Vector3::zeros();
    let mut l_tot = Vector3::zeros();
    for (l, link) in model.links.iter().enumerate() {
        let rc = kin.com_w[l] - kin.poses[l].translation.vector;
        let v_com = vel.lin[l] + vel.ang[l].cross(&rc);
        p += link.mass * v_com;
        l_tot += kin.inertia_w[l] * vel.ang[l] + link.mass * kin.com_w[l].cross(&v_com);
    }
    (p, l_tot)
}

// ── mass matrix ─────────────────────────────────────────────────────────

#[test]
fn mass_matrix_matches_summed_link_kinetic_energy() {
    let mut r = rng(11);
    for model in [model::mini_humanoid(), model::chain(3)] {
        for _ in 0..50 {
            let s = random_state(&model, &mut r, false);
            let kin = dynamics::kinematics(&model, &s.base_iso(), &s.q);
            let m = dynamics::mass_matrix(&model, &kin);
            let u = dynamics::assemble_u(&s.base_linvel, &s.base_angvel, &s.qd);
            let t_matrix = 0.5 * u.dot(&(&m * &u));
            let t_links = kinetic_from_links(&model, &s);
            assert_relative_eq!(t_matrix, t_links, max_relative = 1e-10, epsilon = 1e-12);
        }
    }
}

#[test]
fn mass_matrix_is_symmetric_positive_definite() {
    let model = model::mini_humanoid();
    let mut r = rng(12);
    for _ in 0..200 {
        let s = random_state(&model, &mut r, false);
        let kin = dynamics::kinematics(&model, &s.base_iso(), &s.q);
        let m = dynamics::mass_matrix(&model, &kin);
        let asym = (&m - m.transpose()).abs().max();
        assert!(asym < 1e-10, "asymmetry {asym}");
        assert!(m.clone().cholesky().is_some(), "not positive definite");
    }
}

#[test]
fn free_body_mass_matrix_has_exact_blocks() {
    let model = model::free_body();
    let mut r = rng(13);
    for _ in 0..20 {
        let mut s = SimState::at_rest(&model);
        s.base_pos = Vector3::new(
            r.random_range(-2.0..2.0),
            r.random_range(-2.0..2.0),
            r.random_range(0.5..3.0),
        );
        s.base_quat = UnitQuaternion::from_scaled_axis(Vector3::new(
            r.random_range(-3.0..3.0),
            r.random_range(-3.0..3.0),
            r.random_range(-3.0..3.0),
        ));
        let kin = dynamics::kinematics(&model, &s.base_iso(), &s.q);
        let m = dynamics::mass_matrix(&model, &kin);
        let mass = model.links[0].mass;
        let rot = s.base_quat.to_rotation_matrix().into_inner();
        let iw = rot * model.links[0].inertia * rot.transpose();
        for a in 0..3 {
            for b in 0..3 {
                let expect_t = if a == b { mass } else { 0.0 };
                assert_abs_diff_eq!(m[(a, b)], expect_t, epsilon = 1e-12);
                assert_abs_diff_eq!(m[(3 + a, 3 + b)], iw[(a, b)], epsilon = 1e-10);
                // Couplings vanish because the center of mass sits at the
                // base origin — the world-origin parallel-axis terms cancel.
                assert_abs_diff_eq!(m[(a, 3 + b)], 0.0, epsilon = 1e-10);
            }
        }
    }
}

#[test]
fn point_force_projection_preserves_power() {
    let model = model::mini_humanoid();
    let mut r = rng(14);
    for _ in 0..50 {
        let s = random_state(&model, &mut r, false);
        let kin = dynamics::kinematics(&model, &s.base_iso(), &s.q);
        let vel = dynamics::velocities(&model, &kin, &s.base_linvel, &s.base_angvel, &s.qd);
        let link = r.random_range(0..model.n_links());
        let point = kin.poses[link].translation.vector
            + Vector3::new(
                r.random_range(-0.2..0.2),
                r.random_range(-0.2..0.2),
                r.random_range(-0.2..0.2),
            );
        let force = Vector3::new(
            r.random_range(-50.0..50.0),
            r.random_range(-50.0..50.0),
            r.random_range(-50.0..50.0),
        );
        let mut gen_force = nalgebra::DVector::zeros(6 + model.n_joints());
        dynamics::apply_point_force(&model, &kin, link, &point, &force, &mut gen_force);
        let u = dynamics::assemble_u(&s.base_linvel, &s.base_angvel, &s.qd);
        let v_point =
            vel.lin[link] + vel.ang[link].cross(&(point - kin.poses[link].translation.vector));
        assert_relative_eq!(
            gen_force.dot(&u),
            force.dot(&v_point),
            max_relative = 1e-10,
            epsilon = 1e-10
        );
    }
}

// ── bias forces against closed forms ────────────────────────────────────

#[test]
fn static_pendulum_bias_is_gravity_torque() {
    let model = model::chain(1);
    let cfg = SimConfig {
        fixed_base: true,
        ..SimConfig::default()
    };
    let mass = model.links[1].mass;
    let lc = -model.links[1].com.z;
    for i in -10..=10 {
        let theta = i as f64 * 0.1;
        let mut s = SimState::at_rest(&model);
        s.q[0] = theta;
        let kin = dynamics::kinematics(&model, &s.base_iso(), &s.q);
        let vel = dynamics::velocities(&model, &kin, &s.base_linvel, &s.base_angvel, &s.qd);
        let b = dynamics::bias_forces(&model, &kin, &vel, &s.qd, cfg.gravity);
        assert_abs_diff_eq!(b[6], mass * cfg.gravity * lc * theta.sin(), epsilon = 1e-12);
    }
}

#[test]
fn double_pendulum_matches_textbook_closed_form() {
    let model = model::chain(2);
    let g = 9.81;
    let (m1, m2) = (model.links[1].mass, model.links[2].mass);
    let l1 = -model.joints[1].origin.z;
    let (lc1, lc2) = (-model.links[1].com.z, -model.links[2].com.z);
    let (i1, i2) = (
        model.links[1].inertia[(1, 1)],
        model.links[2].inertia[(1, 1)],
    );
    let mut r = rng(15);
    for _ in 0..30 {
        let (t1, t2) = (r.random_range(-2.0..2.0), r.random_range(-2.0..2.0));
        let (w1, w2) = (r.random_range(-3.0..3.0), r.random_range(-3.0..3.0));
        let mut s = SimState::at_rest(&model);
        s.q = vec![t1, t2];
        s.qd = vec![w1, w2];
        let kin = dynamics::kinematics(&model, &s.base_iso(), &s.q);
        let vel = dynamics::velocities(&model, &kin, &s.base_linvel, &s.base_angvel, &s.qd);
        let m = dynamics::mass_matrix(&model, &kin);
        let b = dynamics::bias_forces(&model, &kin, &vel, &s.qd, g);

        let c2 = t2.cos();
        let s2 = t2.sin();
        let m11 = m1 * lc1 * lc1 + i1 + m2 * (l1 * l1 + lc2 * lc2 + 2.0 * l1 * lc2 * c2) + i2;
        let m12 = m2 * (lc2 * lc2 + l1 * lc2 * c2) + i2;
        let m22 = m2 * lc2 * lc2 + i2;
        let h = m2 * l1 * lc2 * s2;
        let b1 = -h * (2.0 * w1 * w2 + w2 * w2)
            + (m1 * lc1 + m2 * l1) * g * t1.sin()
            + m2 * lc2 * g * (t1 + t2).sin();
        let b2 = h * w1 * w1 + m2 * lc2 * g * (t1 + t2).sin();

        assert_relative_eq!(m[(6, 6)], m11, max_relative = 1e-10);
        assert_relative_eq!(m[(6, 7)], m12, max_relative = 1e-10);
        assert_relative_eq!(m[(7, 7)], m22, max_relative = 1e-10);
        assert_relative_eq!(b[6], b1, max_relative = 1e-9, epsilon = 1e-9);
        assert_relative_eq!(b[7], b2, max_relative = 1e-9, epsilon = 1e-9);
    }
}

/// Independent route to the bias vector for a fixed base:
/// `b_i = Σ_jk ∂M_ij/∂q_k q̇_j q̇_k − ½ Σ_jk ∂M_jk/∂q_i q̇_j q̇_k + ∂V/∂q_i`,
/// with every derivative taken by central differences of the mass matrix and
/// the potential.
#[test]
fn bias_matches_lagrangian_finite_differences() {
    let model = model::chain(3);
    let n = model.n_joints();
    let g = 9.81;
    let base = SimState::at_rest(&model).base_iso();
    let h = 1e-6;

    let joint_mass = |q: &[f64]| {
        let kin = dynamics::kinematics(&model, &base, q);
        dynamics::mass_matrix(&model, &kin)
            .view((6, 6), (n, n))
            .into_owned()
    };
    let potential = |q: &[f64]| {
        let kin = dynamics::kinematics(&model, &base, q);
        model
            .links
            .iter()
            .enumerate()
            .map(|(l, link)| link.mass * g * kin.com_w[l].z)
            .sum::<f64>()
    };

    let mut r = rng(16);
    for _ in 0..10 {
        let q: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();
        let qd: Vec<f64> = (0..n).map(|_| r.random_range(-1.0..1.0)).collect();

        let mut dm = Vec::with_capacity(n); // dm[k] = ∂M/∂q_k
        for k in 0..n {
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp[k] += h;
            qm[k] -= h;
            dm.push((joint_mass(&qp) - joint_mass(&qm)) / (2.0 * h));
        }

        let mut b_fd = vec![0.0; n];
        for i in 0..n {
            let mut v = 0.0;
            for j in 0..n {
                for k in 0..n {
                    v += dm[k][(i, j)] * qd[j] * qd[k];
                    v -= 0.5 * dm[i][(j, k)] * qd[j] * qd[k];
                }
            }
            let mut qp = q.clone();
            let mut qm = q.clone();
            qp[i] += h;
            qm[i] -= h;
            v += (potential(&qp) - potential(&qm)) / (2.0 * h);
            b_fd[i] = v;
        }

        let mut s = SimState::at_rest(&model);
        s.q = q.clone();
        s.qd = qd.clone();
        let kin = dynamics::kinematics(&model, &base, &q);
        let vel = dynamics::velocities(&model, &kin, &s.base_linvel, &s.base_angvel, &s.qd);
        let b = dynamics::bias_forces(&model, &kin, &vel, &s.qd, g);
        for i in 0..n {
            assert_relative_eq!(b[6 + i], b_fd[i], max_relative = 1e-5, epsilon = 1e-6);
        }
    }
}

// ── integrator behaviour ────────────────────────────────────────────────

#[test]
fn pendulum_small_oscillations_at_analytic_period() {
    let model = model::chain(1);
    let cfg = SimConfig {
        fixed_base: true,
        ..SimConfig::default()
    };
    let gains = PdGains::from_model(&model); // zero gains: free swing
    let mut delay = DelayBuffer::new(0);
    let mut s = SimState::at_rest(&model);
    s.q[0] = 0.05;

    let mass = model.links[1].mass;
    let lc = -model.links[1].com.z;
    let i_pivot = model.links[1].inertia[(1, 1)] + mass * lc * lc;
    let expected = 2.0 * std::f64::consts::PI * (i_pivot / (mass * cfg.gravity * lc)).sqrt();

    let mut crossings = Vec::new();
    let mut prev = (s.time, s.q[0]);
    for _ in 0..500 {
        step_control(&model, &cfg, &gains, &mut s, &[0.0], None, &mut delay).unwrap();
        let cur = (s.time, s.q[0]);
        if prev.1 > 0.0 && cur.1 <= 0.0 {
            // Linear interpolation of the downward zero crossing.
            let frac = prev.1 / (prev.1 - cur.1);
            crossings.push(prev.0 + frac * (cur.0 - prev.0));
        }
        prev = cur;
    }
    assert!(crossings.len() >= 4, "pendulum did not oscillate");
    let period = (crossings.last().unwrap() - crossings[0]) / (crossings.len() - 1) as f64;
    assert_relative_eq!(period, expected, max_relative = 0.01);
}

#[test]
fn swinging_chain_energy_has_bounded_drift() {
    let model = model::chain(3);
    let cfg = SimConfig {
        fixed_base: true,
        ..SimConfig::default()
    };
    let gains = PdGains::from_model(&model);
    let mut delay = DelayBuffer::new(0);
    let mut s = SimState::at_rest(&model);
    s.q = vec![0.25, 0.15, 0.1];

    let v_rest = energy(&model, &SimState::at_rest(&model), cfg.gravity).1;
    let e_of = |s: &SimState| {
        let (t, v) = energy(&model, s, cfg.gravity);
        t + v - v_rest
    };
    let e0 = e_of(&s);
    assert!(e0 > 0.0);

    let steps = 500; // 10 s at 50 Hz control, 200 Hz physics
    let mut series = Vec::with_capacity(steps);
    for _ in 0..steps {
        step_control(&model, &cfg, &gains, &mut s, &[0.0; 3], None, &mut delay).unwrap();
        series.push(e_of(&s));
    }
    // Symplectic integration bounds the oscillation; drift is the change in
    // the windowed mean.
    let first: f64 = series[..50].iter().sum::<f64>() / 50.0;
    let last: f64 = series[steps - 50..].iter().sum::<f64>() / 50.0;
    assert!(
        ((last - first) / e0).abs() <= 0.01,
        "energy drift {:.4}% exceeds 1%",
        100.0 * ((last - first) / e0).abs()
    );
    let worst = series
        .iter()
        .map(|e| ((e - e0) / e0).abs())
        .fold(0.0, f64::max);
    assert!(
        worst <= 0.03,
        "energy excursion {:.4}% exceeds 3%",
        100.0 * worst
    );
}

#[test]
fn free_fall_matches_discrete_closed_form() {
    let model = model::free_body();
    let cfg = SimConfig::default();
    let gains = PdGains::from_model(&model);
    let mut delay = DelayBuffer::new(0);
    let mut s = SimState::at_rest(&model);
    let z0 = s.base_pos.z;
    let dt = cfg.dt_sim();

    for _ in 0..10 {
        step_control(&model, &cfg, &gains, &mut s, &[], None, &mut delay).unwrap();
    }
    // Semi-implicit Euler: v_k = −g·k·dt, z_k = z0 − g·dt²·k(k+1)/2.
    let k = (10 * cfg.substeps) as f64;
    assert_abs_diff_eq!(s.base_linvel.z, -cfg.gravity * k * dt, epsilon = 1e-12);
    assert_abs_diff_eq!(
        s.base_pos.z,
        z0 - cfg.gravity * dt * dt * k * (k + 1.0) / 2.0,
        epsilon = 1e-12
    );
}

#[test]
fn free_body_conserves_linear_momentum_exactly() {
    let model = model::free_body();
    let cfg = SimConfig {
        gravity: 0.0,
        ..SimConfig::default()
    };
    let gains = PdGains::from_model(&model);
    let mut delay = DelayBuffer::new(0);

    // Linear momentum is conserved to machine precision per step, for any
    // tumble rate: the translational equations carry no velocity products.
    let mut s = SimState::at_rest(&model);
    s.base_linvel = Vector3::new(0.3, -0.2, 0.1);
    s.base_angvel = Vector3::new(0.5, -0.4, 0.3);
    let (mut p_prev, _) = total_momentum(&model, &s);
    for _ in 0..200 {
        step_control(&model, &cfg, &gains, &mut s, &[], None, &mut delay).unwrap();
        let (p, _) = total_momentum(&model, &s);
        assert!(
            (p - p_prev).norm() <= 1e-8 * p_prev.norm(),
            "per-step linear drift"
        );
        assert!(
            (p - p_prev).norm() <= 1e-13,
            "should be exact, not merely small"
        );
        p_prev = p;
    }
}

#[test]
fn free_body_gentle_tumble_conserves_angular_momentum() {
    // Gyroscopic precession is discretized explicitly, so angular momentum
    // drifts O(dt²·ω²) per step; at ω ≈ 0.03 rad/s that is below 1e-7.
    let model = model::free_body();
    let cfg = SimConfig {
        gravity: 0.0,
        ..SimConfig::default()
    };
    let gains = PdGains::from_model(&model);
    let mut delay = DelayBuffer::new(0);
    let mut s = SimState::at_rest(&model);
    s.base_angvel = Vector3::new(0.02, -0.015, 0.01);
    let (_, l0) = total_momentum(&model, &s);
    let mut l_prev = l0;
    for _ in 0..400 {
        step_control(&model, &cfg, &gains, &mut s, &[], None, &mut delay).unwrap();
        let (_, l) = total_momentum(&model, &s);
        assert!(
            (l - l_prev).norm() <= 1e-7 * l0.norm(),
            "per-step angular momentum change too large"
        );
        l_prev = l;
    }
}

#[test]
fn floating_chain_momentum_drift_is_discretization_bounded() {
    let model = model::chain(3);
    let cfg = SimConfig {
        gravity: 0.0,
        ..SimConfig::default()
    };
    let gains = PdGains::from_model(&model);

    // Gentle articulated motion: per-step relative linear-momentum change
    // stays below 1e-8 (the O(dt²·ω²) error shrinks quadratically).
    let mut delay = DelayBuffer::new(0);
    let mut s = SimState::at_rest(&model);
    s.base_linvel = Vector3::new(0.05, 0.02, 0.01);
    s.base_angvel = Vector3::new(0.01, 0.015, -0.008);
    s.qd = vec![0.01, -0.012, 0.008];
    let scale = total_mass(&model) * 0.1;
    let (mut p_prev, _) = total_momentum(&model, &s);
    for _ in 0..100 {
        step_control(&model, &cfg, &gains, &mut s, &[0.0; 3], None, &mut delay).unwrap();
        let (p, _) = total_momentum(&model, &s);
        assert!((p - p_prev).norm() <= 1e-8 * scale, "per-step linear drift");
        p_prev = p;
    }

    // Faster motion: drift grows with ω² but stays small over a second.
    let mut delay = DelayBuffer::new(0);
    let mut s = SimState::at_rest(&model);
    s.base_linvel = Vector3::new(0.2, 0.1, 0.05);
    s.base_angvel = Vector3::new(0.05, 0.08, -0.04);
    s.qd = vec![0.2, -0.15, 0.1];
    let (p0, l0) = total_momentum(&model, &s);
    for _ in 0..50 {
        step_control(&model, &cfg, &gains, &mut s, &[0.0; 3], None, &mut delay).unwrap();
    }
    let (p1, l1) = total_momentum(&model, &s);
    assert!(
        (p1 - p0).norm() <= 3e-4,
        "linear drift {}",
        (p1 - p0).norm()
    );
    assert!(
        (l1 - l0).norm() <= 3e-4 * l0.norm(),
        "angular drift {}",
        (l1 - l0).norm()
    );
}

fn total_mass(model: &RobotModel) -> f64 {
    model.links.iter().map(|l| l.mass).sum()
}

// ── contact ─────────────────────────────────────────────────────────────

fn puck() -> RobotModel {
    let mut m = model::free_body();
    m.contact_spheres.push(ContactSphere {
        link: 0,
        offset: Vector3::zeros(),
        radius: 0.1,
    });
    m
}

#[test]
fn ground_contact_forces_match_hand_arithmetic() {
    let model = puck();
    let params = ContactParams {
        stiffness: 2.2e4,
        damping: 60.0,
        tangential_stiffness: 1.0e4,
        friction: 1.0,
    };
    // Fresh touchdown: the anchor coincides with the point, so the tangential
    // force is purely viscous.
    let eval = |pos: Vector3<f64>, linvel: Vector3<f64>| {
        let mut s = SimState::at_rest(&model);
        s.base_pos = pos;
        s.base_linvel = linvel;
        let kin = dynamics::kinematics(&model, &s.base_iso(), &s.q);
        let vel = dynamics::velocities(&model, &kin, &s.base_linvel, &s.base_angvel, &s.qd);
        contact::contact_forces(&model, &kin, &vel, &s.contact_anchors, &params)[0].clone()
    };

    // Static penetration of 5 mm: pure spring normal force, 22000·0.005.
    let c = eval(Vector3::new(0.0, 0.0, 0.095), Vector3::zeros());
    assert!(c.active() && !c.slipping);
    assert_abs_diff_eq!(c.force, Vector3::new(0.0, 0.0, 110.0), epsilon = 1e-12);

    // Descending at 0.5 m/s adds 60·0.5 of damping to the normal force.
    let c = eval(Vector3::new(0.0, 0.0, 0.095), Vector3::new(0.0, 0.0, -0.5));
    assert_abs_diff_eq!(c.force, Vector3::new(0.0, 0.0, 140.0), epsilon = 1e-12);

    // Gentle slide stays inside the friction cone: |f_t| = 60·1 < μN = 110.
    let c = eval(Vector3::new(0.0, 0.0, 0.095), Vector3::new(1.0, 0.0, 0.0));
    assert!(!c.slipping);
    assert_abs_diff_eq!(c.force, Vector3::new(-60.0, 0.0, 110.0), epsilon = 1e-12);

    // Fast slide saturates it: 60·10 clamps to μN = 110.
    let c = eval(Vector3::new(0.0, 0.0, 0.095), Vector3::new(10.0, 0.0, 0.0));
    assert!(c.slipping);
    assert_abs_diff_eq!(c.force, Vector3::new(-110.0, 0.0, 110.0), epsilon = 1e-12);

    // Fast retreat kills the normal force (no suction) and with it friction:
    // 22000·0.005 − 60·3 < 0.
    let c = eval(Vector3::new(0.0, 0.0, 0.095), Vector3::new(0.5, 0.0, 3.0));
    assert_abs_diff_eq!(c.force, Vector3::zeros(), epsilon = 1e-12);

    // Separated sphere reports inactive zero force and drops its anchor.
    let c = eval(Vector3::new(0.0, 0.0, 0.2), Vector3::zeros());
    assert!(!c.active());
    assert_abs_diff_eq!(c.force, Vector3::zeros(), epsilon = 1e-12);
    assert!(c.next_anchor.is_none());
}

#[test]
fn stiction_anchor_holds_and_drags() {
    let model = puck();
    let params = ContactParams {
        stiffness: 2.2e4,
        damping: 60.0,
        tangential_stiffness: 1.0e4,
        friction: 1.0,
    };
    let eval = |anchor: Option<Vector3<f64>>| {
        let mut s = SimState::at_rest(&model);
        s.base_pos = Vector3::new(0.0, 0.0, 0.095); // N = 110
        s.contact_anchors[0] = anchor;
        let kin = dynamics::kinematics(&model, &s.base_iso(), &s.q);
        let vel = dynamics::velocities(&model, &kin, &s.base_linvel, &s.base_angvel, &s.qd);
        contact::contact_forces(&model, &kin, &vel, &s.contact_anchors, &params)[0].clone()
    };

    // Sphere displaced 5 mm past its anchor at rest: stiction spring pulls
    // back with 1e4·0.005 = 50 N < μN, anchor stays put.
    let c = eval(Some(Vector3::new(-0.005, 0.0, 0.0)));
    assert!(!c.slipping);
    assert_abs_diff_eq!(c.force, Vector3::new(-50.0, 0.0, 110.0), epsilon = 1e-12);
    assert_abs_diff_eq!(
        c.next_anchor.unwrap(),
        Vector3::new(-0.005, 0.0, 0.0),
        epsilon = 1e-15
    );

    // Displaced 20 mm: 200 N exceeds μN = 110, so the force clamps and the
    // anchor is dragged to where the spring alone carries 110 N.
    let c = eval(Some(Vector3::new(-0.02, 0.0, 0.0)));
    assert!(c.slipping);
    assert_abs_diff_eq!(c.force, Vector3::new(-110.0, 0.0, 110.0), epsilon = 1e-12);
    assert_abs_diff_eq!(
        c.next_anchor.unwrap(),
        Vector3::new(-0.011, 0.0, 0.0),
        epsilon = 1e-12
    );
}

#[test]
fn humanoid_settles_standing_on_its_feet() {
    let model = model::mini_humanoid();
    let cfg = SimConfig::default();
    let gains = PdGains::from_model(&model);
    let mut delay = DelayBuffer::new(0);
    let mut s = SimState::at_rest(&model);
    let action = vec![0.0; model.n_joints()];

    for _ in 0..100 {
        step_control(&model, &cfg, &gains, &mut s, &action, None, &mut delay).unwrap();
    }
    let weight = total_mass(&model) * cfg.gravity;
    let vertical: f64 = s.contact_forces.iter().map(|f| f.z).sum();
    assert_relative_eq!(vertical, weight, max_relative = 0.05);
    assert!(
        s.base_pos.z > 0.64 && s.base_pos.z < 0.70,
        "height {}",
        s.base_pos.z
    );
    assert!(
        s.base_pos.xy().norm() < 0.05,
        "drifted {}",
        s.base_pos.xy().norm()
    );
    assert!(
        s.base_linvel.norm() < 0.05,
        "still moving {}",
        s.base_linvel.norm()
    );
}

// ── stepping semantics ──────────────────────────────────────────────────

#[test]
fn control_step_is_deterministic() {
    let model = model::mini_humanoid();
    let cfg = SimConfig::default();
    let gains = PdGains::from_model(&model);
    let mut r = rng(17);
    let s0 = random_state(&model, &mut r, true);
    let actions: Vec<Vec<f64>> = (0..10)
        .map(|_| {
            (0..model.n_joints())
                .map(|_| r.random_range(-2.0..2.0))
                .collect()
        })
        .collect();

    let run = || {
        let mut s = s0.clone();
        let mut delay = DelayBuffer::new(1);
        for a in &actions {
            step_control(&model, &cfg, &gains, &mut s, a, None, &mut delay).unwrap();
        }
        s
    };
    assert_eq!(
        run(),
        run(),
        "identical inputs must give bit-identical states"
    );
}

#[test]
fn push_changes_base_velocity_instantaneously() {
    let model = model::free_body();
    let cfg = SimConfig {
        gravity: 0.0,
        ..SimConfig::default()
    };
    let gains = PdGains::from_model(&model);
    let mut delay = DelayBuffer::new(0);
    let mut s = SimState::at_rest(&model);
    step_control(
        &model,
        &cfg,
        &gains,
        &mut s,
        &[],
        Some(Vector3::new(1.0, 0.0, 0.0)),
        &mut delay,
    )
    .unwrap();
    assert_abs_diff_eq!(s.base_linvel.x, 1.0, epsilon = 1e-15);
    assert_abs_diff_eq!(s.base_pos.x, cfg.dt_control, epsilon = 1e-12);
}

#[test]
fn fixed_base_pins_the_base() {
    let model = model::single_joint_rig();
    let cfg = SimConfig {
        fixed_base: true,
        ..SimConfig::default()
    };
    let gains = PdGains::from_model(&model);
    let mut delay = DelayBuffer::new(0);
    let mut s = SimState::at_rest(&model);
    let before = s.base_pos;
    for _ in 0..20 {
        step_control(&model, &cfg, &gains, &mut s, &[3.0], None, &mut delay).unwrap();
    }
    assert_eq!(s.base_pos, before);
    assert!(s.q[0].abs() > 0.05, "joint should have moved");
}

#[test]
fn delay_buffer_lags_by_whole_steps() {
    let mut d = DelayBuffer::new(2);
    assert_eq!(d.push_and_get(&[0.0]), vec![0.0]);
    assert_eq!(d.push_and_get(&[1.0]), vec![0.0]);
    assert_eq!(d.push_and_get(&[2.0]), vec![0.0]);
    assert_eq!(d.push_and_get(&[3.0]), vec![1.0]);
    d.reset();
    assert_eq!(d.push_and_get(&[9.0]), vec![9.0]);

    let mut passthrough = DelayBuffer::new(0);
    assert_eq!(passthrough.push_and_get(&[4.0]), vec![4.0]);
    assert_eq!(passthrough.push_and_get(&[5.0]), vec![5.0]);
}

#[test]
fn actions_are_clipped_scaled_and_torque_limited() {
    let model = model::single_joint_rig();
    let cfg = SimConfig::default();
    let q_des = action_to_target(&model, &cfg, &[100.0]);
    assert_abs_diff_eq!(
        q_des[0],
        cfg.action_scale * cfg.action_clip,
        epsilon = 1e-15
    );
    let q_des = action_to_target(&model, &cfg, &[-1.0]);
    assert_abs_diff_eq!(q_des[0], -0.25, epsilon = 1e-15);

    let gains = PdGains::from_model(&model);
    let tau = pd_torques(&gains, &[10.0], &[0.0], &[0.0]);
    assert_abs_diff_eq!(tau[0], gains.torque_limit[0], epsilon = 1e-15);
    let tau = pd_torques(&gains, &[0.01], &[0.0], &[0.0]);
    assert_abs_diff_eq!(tau[0], gains.kp[0] * 0.01, epsilon = 1e-12);
}

#[test]
fn non_finite_inputs_are_reported_as_errors() {
    let model = model::single_joint_rig();
    let cfg = SimConfig {
        fixed_base: true,
        ..SimConfig::default()
    };
    let gains = PdGains::from_model(&model);
    let mut delay = DelayBuffer::new(0);
    let mut s = SimState::at_rest(&model);
    let err =
        step_control(&model, &cfg, &gains, &mut s, &[f64::NAN], None, &mut delay).unwrap_err();
    assert!(matches!(err, SimError::NonFinite { what: "action", .. }));

    let mut s = SimState::at_rest(&model);
    s.qd[0] = 1e300;
    let err = step_control(&model, &cfg, &gains, &mut s, &[0.0], None, &mut delay).unwrap_err();
    assert!(matches!(err, SimError::NonFinite { .. }));
}

// ── symmetry ────────────────────────────────────────────────────────────

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    /// Stepping and sagittal mirroring commute: mirror(step(s, a)) ==
    /// step(mirror(s), mirror(a)) including ground contact and pushes.
    #[test]
    fn control_step_commutes_with_mirroring(seed in any::<u64>()) {
        let model = model::mini_humanoid();
        let cfg = SimConfig::default();
        let gains = PdGains::from_model(&model);
        let mut r = rng(seed);
        let s0 = random_state(&model, &mut r, true);
        let action: Vec<f64> =
            (0..model.n_joints()).map(|_| r.random_range(-2.0..2.0)).collect();
        let push = Vector3::new(
            r.random_range(-0.5..0.5),
            r.random_range(-0.5..0.5),
            0.0,
        );

        let mut a = s0.clone();
        let mut delay_a = DelayBuffer::new(0);
        step_control(&model, &cfg, &gains, &mut a, &action, Some(push), &mut delay_a)
            .unwrap();
        let a_mirrored = a.mirrored(&model);

        let mut b = s0.mirrored(&model);
        let mut delay_b = DelayBuffer::new(0);
        step_control(
            &model,
            &cfg,
            &gains,
            &mut b,
            &model.mirror_joint_vector(&action),
            Some(crate::math::mirror_vec(&push)),
            &mut delay_b,
        )
        .unwrap();

        prop_assert!((a_mirrored.base_pos - b.base_pos).norm() < 1e-9);
        prop_assert!(
            (a_mirrored.base_quat.coords - b.base_quat.coords).norm() < 1e-9
        );
        prop_assert!((a_mirrored.base_linvel - b.base_linvel).norm() < 1e-9);
        prop_assert!((a_mirrored.base_angvel - b.base_angvel).norm() < 1e-9);
        for j in 0..model.n_joints() {
            prop_assert!((a_mirrored.q[j] - b.q[j]).abs() < 1e-9);
            prop_assert!((a_mirrored.qd[j] - b.qd[j]).abs() < 1e-9);
        }
        for (fa, fb) in a_mirrored.contact_forces.iter().zip(&b.contact_forces) {
            prop_assert!((fa - fb).norm() < 1e-7); // forces are O(10²) N
        }
    }
}
