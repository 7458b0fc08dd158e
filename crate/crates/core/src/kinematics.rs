//! Swimmer kinematics: body-frame velocities driven by the feedback signal,
//! the rigid-body pose derivative, and the exact change of variables to the
//! averaged frame that strips the periodic helical motion.
//!
//! With `n = Ω₀/ω` the helix axis in body coordinates and `E(σ)` the rotation
//! by `σ` about `n`, the averaged frame is
//!
//! ```text
//! R̄ = R E(ωt)ᵀ,      p̄ = p − ε R̄ δ(ωt)
//! ```
//!
//! where `δ` is the zero-mean primitive of `E(σ)V − V̄`, i.e.
//! `δ(σ) = sin σ · V⊥ − cos σ · (n × V)` with `V̄ = (n·V) n` and `V⊥ = V − V̄`.
//! Differentiating gives the averaged dynamics without approximation:
//!
//! ```text
//! dp̄/dt = R̄ (ε η V_η(ωt) + V̄),      dR̄/dt = η R̄ hat(Ω_η(ωt))
//! Ω_η(σ) = E(σ) Ω₁,                  V_η(σ) = δ(σ) × Ω_η(σ)
//! ```

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{require_finite, require_positive, ParamError};
use crate::geometry::{hat, rot_axis_angle, rotate_about, Mat3, Vec3};

/// Speed and spin rates of the swimmer. `*_0` are the constant rates, `*_1`
/// the gains applied to the feedback signal η.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwimmerParams {
    pub v: f64,
    pub omega_par_0: f64,
    pub omega_perp_0: f64,
    pub omega_par_1: f64,
    pub omega_perp_1: f64,
}

impl SwimmerParams {
    /// Sea urchin sperm tuning with speed `l0` per second.
    pub fn fig2(l0: f64) -> Self {
        Self {
            v: l0,
            omega_par_0: -5.0,
            omega_perp_0: -7.0,
            omega_par_1: -5.0,
            omega_perp_1: -1.0,
        }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        require_positive("v", self.v)?;
        require_finite("omega_par_0", self.omega_par_0)?;
        require_finite("omega_perp_0", self.omega_perp_0)?;
        require_finite("omega_par_1", self.omega_par_1)?;
        require_finite("omega_perp_1", self.omega_perp_1)?;
        if self.omega() <= 0.0 {
            return Err(ParamError::new(
                "omega_perp_0",
                "omega_par_0 and omega_perp_0 cannot both be zero",
            ));
        }
        Ok(())
    }

    /// Frequency of the periodic swimming pattern, `sqrt(ω⊥,0² + ω∥,0²)`.
    #[inline]
    pub fn omega(&self) -> f64 {
        self.omega_perp_0.hypot(self.omega_par_0)
    }

    #[inline]
    pub fn eps(&self) -> f64 {
        1.0 / self.omega()
    }

    #[inline]
    pub fn period(&self) -> f64 {
        TAU / self.omega()
    }

    /// Constant body angular velocity Ω₀.
    #[inline]
    pub fn omega0(&self) -> Vec3 {
        Vec3::new(self.omega_par_0, 0.0, self.omega_perp_0)
    }

    /// Feedback gain vector Ω₁.
    #[inline]
    pub fn omega1(&self) -> Vec3 {
        Vec3::new(self.omega_par_1, 0.0, self.omega_perp_1)
    }

    /// Unit helix axis `Ω₀/ω` in body coordinates.
    #[inline]
    pub fn axis(&self) -> Vec3 {
        self.omega0() / self.omega()
    }

    #[inline]
    pub fn body_speed(&self) -> Vec3 {
        Vec3::new(self.v, 0.0, 0.0)
    }

    /// True when motion stays in the plane orthogonal to body z.
    pub fn is_planar(&self) -> bool {
        self.omega_par_0 == 0.0 && self.omega_par_1 == 0.0
    }

    /// Phase `ωt` reduced to `[0, 2π)`.
    #[inline]
    pub fn phase(&self, t: f64) -> f64 {
        (self.omega() * t).rem_euclid(TAU)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub p: Vec3,
    pub r: Mat3,
}

impl Pose {
    pub fn new(p: Vec3, r: Mat3) -> Self {
        Self { p, r }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragedPose {
    pub p_bar: Vec3,
    pub r_bar: Mat3,
}

/// Body linear and angular velocity for feedback value `eta`.
#[inline]
pub fn body_velocity(params: &SwimmerParams, eta: f64) -> (Vec3, Vec3) {
    (
        params.body_speed(),
        Vec3::new(
            params.omega_par_0 + params.omega_par_1 * eta,
            0.0,
            params.omega_perp_0 + params.omega_perp_1 * eta,
        ),
    )
}

/// `(ṗ, Ṙ) = (R V, R hat(Ω))`.
#[inline]
pub fn pose_derivative(pose: &Pose, v: &Vec3, omega: &Vec3) -> (Vec3, Mat3) {
    (pose.r * v, pose.r * hat(omega))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HelixInvariants {
    /// Mean velocity in body coordinates, along the helix axis.
    pub v_bar: Vec3,
    pub radius: f64,
    /// Axial drift speed `‖V̄‖`.
    pub pitch_speed: f64,
    pub period: f64,
}

impl HelixInvariants {
    /// Axial advance per turn.
    pub fn pitch(&self) -> f64 {
        self.pitch_speed * self.period
    }
}

pub fn helix_invariants(params: &SwimmerParams) -> HelixInvariants {
    let w = params.omega();
    let w2 = w * w;
    HelixInvariants {
        v_bar: params.omega0() * (params.v * params.omega_par_0 / w2),
        radius: params.v * params.omega_perp_0.abs() / w2,
        pitch_speed: params.v * params.omega_par_0.abs() / w,
        period: TAU / w,
    }
}

/// Zero-mean periodic offset `δ(σ)`; `ε δ` is the position oscillation
/// about the averaged position.
pub fn periodic_offset(params: &SwimmerParams, sigma: f64) -> Vec3 {
    let n = params.axis();
    let v = params.body_speed();
    let v_perp = v - n.dot(&v) * n;
    let (s, c) = sigma.rem_euclid(TAU).sin_cos();
    s * v_perp - c * n.cross(&v)
}

/// Feedback coefficients `(V_η(σ), Ω_η(σ))` of the averaged dynamics.
pub fn feedback_coefficients(params: &SwimmerParams, sigma: f64) -> (Vec3, Vec3) {
    let sigma = sigma.rem_euclid(TAU);
    let omega_eta = rotate_about(&params.axis(), sigma, &params.omega1());
    let v_eta = periodic_offset(params, sigma).cross(&omega_eta);
    (v_eta, omega_eta)
}

/// `exp(hat(Ω₀) t)`, evaluated through the reduced phase.
#[inline]
pub fn spin(params: &SwimmerParams, t: f64) -> Mat3 {
    rot_axis_angle(&params.axis(), params.phase(t))
}

/// Maps the instantaneous pose at time `t` to the averaged frame.
pub fn averaged_frame(pose: &Pose, t: f64, params: &SwimmerParams) -> AveragedPose {
    let sigma = params.phase(t);
    let r_bar = pose.r * rot_axis_angle(&params.axis(), sigma).transpose();
    let p_bar = pose.p - params.eps() * (r_bar * periodic_offset(params, sigma));
    AveragedPose { p_bar, r_bar }
}

/// Inverse of [`averaged_frame`].
pub fn reconstruct_pose(avg: &AveragedPose, t: f64, params: &SwimmerParams) -> Pose {
    let sigma = params.phase(t);
    Pose {
        p: avg.p_bar + params.eps() * (avg.r_bar * periodic_offset(params, sigma)),
        r: avg.r_bar * rot_axis_angle(&params.axis(), sigma),
    }
}

/// Right-hand side of the averaged dynamics at phase `sigma` and feedback `eta`.
pub fn averaged_derivative(
    avg: &AveragedPose,
    sigma: f64,
    eta: f64,
    params: &SwimmerParams,
) -> (Vec3, Mat3) {
    let (v_eta, omega_eta) = feedback_coefficients(params, sigma);
    let v_bar = helix_invariants(params).v_bar;
    (
        avg.r_bar * (params.eps() * eta * v_eta + v_bar),
        avg.r_bar * hat(&(eta * omega_eta)),
    )
}
