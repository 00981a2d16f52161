//! Tailed single-rigid-body dynamics.
//!
//! The robot is a floating rigid body with a point-mass tail on a
//! yaw-pitch(-telescope) gimbal. All dynamics are expressed at the *system*
//! center of mass, where translation decouples exactly and the internal
//! (rotation + tail) dynamics reduce to a two-body problem with the reduced
//! mass `mu = m_b m_t / (m_b + m_t)`.

mod dynamics;
mod params;
mod state;
pub mod tail;

pub use dynamics::{DynamicsError, ExternalForces, StateDerivative};
pub use params::{ParamError, RobotParams};
pub use state::SystemState;

use nalgebra::{Vector2, Vector3};

/// Dynamics model with a configurable number of actuated tail DoF.
///
/// The planning model actuates pitch and yaw only and holds the boom length
/// frozen (at whatever length the state carries, normally the extended
/// length); the simulation model also actuates the telescoping joint.
#[derive(Debug, Clone)]
pub struct TailedBodyModel {
    params: RobotParams,
    nt: usize,
}

impl TailedBodyModel {
    /// 2-DoF tail (pitch, yaw), boom length frozen. 16-dim state tangent.
    pub fn planning(params: RobotParams) -> Result<Self, ParamError> {
        params.validate()?;
        Ok(Self { params, nt: 2 })
    }

    /// 3-DoF tail (pitch, yaw, telescope). 18-dim state tangent.
    pub fn simulation(params: RobotParams) -> Result<Self, ParamError> {
        params.validate()?;
        Ok(Self { params, nt: 3 })
    }

    pub fn params(&self) -> &RobotParams {
        &self.params
    }

    /// Number of actuated tail DoF (2 or 3).
    pub fn tail_dofs(&self) -> usize {
        self.nt
    }

    /// Velocity-space dimension: 6 base + tail DoF.
    pub fn nv(&self) -> usize {
        6 + self.nt
    }

    /// State tangent dimension (pose and velocity): `12 + 2 nt`.
    pub fn tangent_dim(&self) -> usize {
        12 + 2 * self.nt
    }

    pub(crate) fn tail_kinematics(&self, x: &SystemState) -> tail::TailKinematics {
        tail::kinematics(&self.params.tail_mount, &x.tail, &x.tail_rate, self.nt)
    }

    /// Body CoM position in the inertial frame.
    pub fn body_position(&self, x: &SystemState) -> Vector3<f64> {
        let k = self.tail_kinematics(x);
        let s_b = -(self.params.tail_mass / self.params.total_mass()) * k.rho;
        x.p + x.quat * s_b
    }

    /// Body CoM velocity in the inertial frame.
    pub fn body_velocity(&self, x: &SystemState) -> Vector3<f64> {
        let k = self.tail_kinematics(x);
        let f = self.params.tail_mass / self.params.total_mass();
        x.v + x.quat * (x.omega.cross(&(-f * k.rho)) - f * k.rho_dot)
    }

    /// Tail point-mass position in the inertial frame.
    pub fn tail_tip_position(&self, x: &SystemState) -> Vector3<f64> {
        let k = self.tail_kinematics(x);
        let s_t = (self.params.body_mass / self.params.total_mass()) * k.rho;
        x.p + x.quat * s_t
    }

    /// Tail point-mass velocity in the inertial frame.
    pub fn tail_tip_velocity(&self, x: &SystemState) -> Vector3<f64> {
        let k = self.tail_kinematics(x);
        let f = self.params.body_mass / self.params.total_mass();
        x.v + x.quat * (x.omega.cross(&(f * k.rho)) + f * k.rho_dot)
    }

    /// Tail point relative to the body CoM in the body frame:
    /// `mount + length * direction`.
    pub fn tail_tip_body(&self, tail: &Vector3<f64>) -> Vector3<f64> {
        self.params.tail_mount + tail.z * tail::direction(tail.x, tail.y)
    }

    /// Foot position in the inertial frame (feet are rigid body offsets).
    pub fn foot_position(&self, x: &SystemState, foot: usize) -> Vector3<f64> {
        let k = self.tail_kinematics(x);
        let s_b = -(self.params.tail_mass / self.params.total_mass()) * k.rho;
        x.p + x.quat * (s_b + self.params.foot_offsets[foot])
    }

    /// Foot velocity in the inertial frame.
    pub fn foot_velocity(&self, x: &SystemState, foot: usize) -> Vector3<f64> {
        let k = self.tail_kinematics(x);
        let f = self.params.tail_mass / self.params.total_mass();
        let c = -f * k.rho + self.params.foot_offsets[foot];
        x.v + x.quat * (x.omega.cross(&c) - f * k.rho_dot)
    }

    /// Workspace-cone violation in radians: zero inside the cone,
    /// `cone_angle - half_angle` outside.
    pub fn workspace_violation(&self, tail: &Vector3<f64>) -> f64 {
        let (margin, _) = tail::cone_margin(tail.x, tail.y, self.params.workspace_half_angle);
        margin.max(0.0)
    }

    /// Signed cone margin (negative inside) and its gradient in
    /// `(pitch, yaw)`, for the planner's constraint handling.
    pub fn cone_margin(&self, tail: &Vector3<f64>) -> (f64, Vector2<f64>) {
        tail::cone_margin(tail.x, tail.y, self.params.workspace_half_angle)
    }

    /// Total angular momentum about the system CoM, inertial frame.
    ///
    /// Conserved during flight under gravity for any tail torques, since
    /// internal torques and a uniform field exert no moment about the CoM.
    pub fn angular_momentum_about_com(&self, x: &SystemState) -> Vector3<f64> {
        let k = self.tail_kinematics(x);
        let mu = self.params.reduced_mass();
        let spin = self.params.body_inertia.component_mul(&x.omega);
        let orbital = mu * k.rho.cross(&(x.omega.cross(&k.rho) + k.rho_dot));
        x.quat * (spin + orbital)
    }
}
