//! Penalty-based ground contact for the collision spheres.
//!
//! The ground is the plane z = 0. Each sphere whose center dips below its
//! radius gets a spring–damper normal force and a stick–slip tangential
//! force clamped to the friction cone:
//!
//! * normal:      `N = max(0, k·(r − h) − d·v_z)` along +z
//! * tangential:  `f_t = −k_t·(p − anchor) − d·v_xy`, rescaled so
//!   `‖f_t‖ ≤ μ·N`
//!
//! The anchor is the horizontal point where the sphere touched down. While
//! the cone clamp is inactive the anchor spring emulates stiction (a purely
//! viscous tangential force would let a standing robot skate and topple);
//! when the clamp engages, the anchor is dragged along so the spring alone
//! carries exactly the cone-edge force on the next step — the usual
//! return-mapping friction model. Anchors reset on separation.

use nalgebra::Vector3;

use crate::model::RobotModel;

use super::dynamics::{Kinematics, Velocities};

/// One collision sphere's contact state for a substep. Spheres out of contact
/// report a zero force so the vector always indexes 1:1 with
/// `model.contact_spheres`.
#[derive(Debug, Clone)]
pub struct Contact {
    /// Index into `model.contact_spheres`.
    pub sphere: usize,
    /// Link the sphere is attached to.
    pub link: usize,
    /// World position of the sphere center.
    pub point: Vector3<f64>,
    /// World force applied to the link at `point`.
    pub force: Vector3<f64>,
    /// Center penetration depth below contact onset (`r − h`), ≤ 0 when apart.
    pub penetration: f64,
    /// True when the tangential force sits on the friction-cone boundary.
    pub slipping: bool,
    /// Anchor to carry into the next substep (`None` when separated).
    pub next_anchor: Option<Vector3<f64>>,
}

impl Contact {
    pub fn active(&self) -> bool {
        self.penetration > 0.0
    }
}

/// Contact parameters; see [`crate::sim::SimConfig`] for the defaults.
#[derive(Debug, Clone, Copy)]
pub struct ContactParams {
    pub stiffness: f64,
    pub damping: f64,
    /// Stiffness of the stiction anchor spring.
    pub tangential_stiffness: f64,
    pub friction: f64,
}

/// Evaluate all sphere–ground contacts for the current kinematic state.
/// `anchors` holds the per-sphere stiction anchors from the previous substep
/// (z components are ignored); the returned contacts carry the updated ones.
pub fn contact_forces(
    model: &RobotModel,
    kin: &Kinematics,
    vel: &Velocities,
    anchors: &[Option<Vector3<f64>>],
    params: &ContactParams,
) -> Vec<Contact> {
    let mut out = Vec::with_capacity(model.contact_spheres.len());
    for (i, sphere) in model.contact_spheres.iter().enumerate() {
        let link = sphere.link;
        let point = kin.poses[link]
            .transform_point(&sphere.offset.into())
            .coords;
        let penetration = sphere.radius - point.z;
        let mut force = Vector3::zeros();
        let mut slipping = false;
        let mut next_anchor = None;
        if penetration > 0.0 {
            let v =
                vel.lin[link] + vel.ang[link].cross(&(point - kin.poses[link].translation.vector));
            let normal = (params.stiffness * penetration - params.damping * v.z).max(0.0);

            let anchor = anchors[i].unwrap_or(point);
            let stretch = Vector3::new(point.x - anchor.x, point.y - anchor.y, 0.0);
            let mut tangential = -params.tangential_stiffness * stretch
                - params.damping * Vector3::new(v.x, v.y, 0.0);
            let limit = params.friction * normal;
            let t_mag = tangential.norm();
            if t_mag > limit {
                tangential *= if t_mag > 0.0 { limit / t_mag } else { 0.0 };
                slipping = true;
                // Drag the anchor so the spring alone carries the cone-edge
                // force from here; anchors live on the ground plane.
                let dragged = point + tangential / params.tangential_stiffness;
                next_anchor = Some(Vector3::new(dragged.x, dragged.y, 0.0));
            } else {
                next_anchor = Some(Vector3::new(anchor.x, anchor.y, 0.0));
            }
            force = tangential + Vector3::new(0.0, 0.0, normal);
        }
        out.push(Contact {
            sphere: i,
            link,
            point,
            force,
            penetration,
            slipping,
            next_anchor,
        });
    }
    out
}
