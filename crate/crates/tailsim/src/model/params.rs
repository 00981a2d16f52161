//! Physical parameters of the tailed quadruped.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ParamError {
    #[error("body mass must be positive, got {0}")]
    BodyMass(f64),
    #[error("tail mass must be non-negative, got {0}")]
    TailMass(f64),
    #[error("body inertia diagonal must be positive, got {0:?}")]
    BodyInertia([f64; 3]),
    #[error("tail length range must satisfy 0 < min < max, got [{0}, {1}]")]
    TailLengthRange(f64, f64),
    #[error("torque box must satisfy min < max with 0 inside, got [{0}, {1}]")]
    TorqueBox(f64, f64),
    #[error("workspace half-angle must lie in (0, 89 deg], got {0} rad")]
    WorkspaceHalfAngle(f64),
    #[error("gimbal rotor inertia must be non-negative, got {0}")]
    RotorInertia(f64),
    #[error("gravity must be positive, got {0}")]
    Gravity(f64),
    #[error("leg rest length must be positive, got {0}")]
    LegRestLength(f64),
}

/// Mass, geometry and actuation limits of the robot.
///
/// The body is a single rigid body with a diagonal inertia tensor; the tail
/// is a point mass on a yaw-pitch gimbal with a telescoping boom. Foot
/// positions are rigid offsets from the body frame used for touchdown
/// geometry and stance forces.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RobotParams {
    /// Body mass (kg).
    pub body_mass: f64,
    /// Diagonal body inertia about the body CoM (kg m^2).
    pub body_inertia: Vector3<f64>,
    /// Tail point mass (kg).
    pub tail_mass: f64,
    /// Telescoping length range (m), measured mount to point mass.
    pub tail_length_min: f64,
    pub tail_length_max: f64,
    /// Gimbal mount in the body frame, relative to the body CoM (m).
    pub tail_mount: Vector3<f64>,
    /// Tail joint torque box (N m), shared by the pitch and yaw joints.
    /// Actuator-scale estimate; override from config for a specific build.
    pub torque_min: f64,
    pub torque_max: f64,
    /// Half-angle of the conical tail workspace about the retracted axis
    /// (rad). Must stay short of the 90 deg gimbal singularity.
    pub workspace_half_angle: f64,
    /// Reflected rotor + gearbox inertia on each gimbal axis (kg m^2).
    /// Keeps the yaw axis inertia positive even when the tail pitches
    /// through the gimbal singularity.
    pub gimbal_rotor_inertia: f64,
    /// Gravitational acceleration (m/s^2, positive down).
    pub gravity: f64,
    /// Foot positions in the body frame, relative to the body CoM (m):
    /// front-left, front-right, rear-left, rear-right.
    pub foot_offsets: [Vector3<f64>; 4],
    /// Virtual leg rest length (m); feet sit this far below the hips.
    pub leg_rest_length: f64,
}

impl RobotParams {
    /// Tailed A1 quadruped used for the simulated drops.
    pub fn tailed_a1() -> Self {
        Self {
            body_mass: 12.45,
            body_inertia: Vector3::new(0.12, 0.39, 0.45),
            tail_mass: 1.25,
            tail_length_min: 0.12,
            tail_length_max: 0.49,
            tail_mount: Vector3::new(-0.15, 0.0, 0.05),
            torque_min: -6.0,
            torque_max: 6.0,
            workspace_half_angle: 80f64.to_radians(),
            gimbal_rotor_inertia: 1e-4,
            gravity: 9.81,
            foot_offsets: [
                Vector3::new(0.18, 0.13, -0.27),
                Vector3::new(0.18, -0.13, -0.27),
                Vector3::new(-0.18, 0.13, -0.27),
                Vector3::new(-0.18, -0.13, -0.27),
            ],
            leg_rest_length: 0.27,
        }
    }

    /// Lighter bench platform with the same tail hardware.
    pub fn test_platform() -> Self {
        Self {
            body_mass: 11.5,
            body_inertia: Vector3::new(0.05, 0.25, 0.22),
            ..Self::tailed_a1()
        }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.body_mass > 0.0) {
            return Err(ParamError::BodyMass(self.body_mass));
        }
        if !(self.tail_mass >= 0.0) {
            return Err(ParamError::TailMass(self.tail_mass));
        }
        if !self.body_inertia.iter().all(|&i| i > 0.0) {
            return Err(ParamError::BodyInertia(self.body_inertia.into()));
        }
        if !(self.tail_length_min > 0.0 && self.tail_length_min < self.tail_length_max) {
            return Err(ParamError::TailLengthRange(
                self.tail_length_min,
                self.tail_length_max,
            ));
        }
        if !(self.torque_min < self.torque_max && self.torque_min <= 0.0 && self.torque_max >= 0.0)
        {
            return Err(ParamError::TorqueBox(self.torque_min, self.torque_max));
        }
        if !(self.workspace_half_angle > 0.0
            && self.workspace_half_angle <= 89f64.to_radians())
        {
            return Err(ParamError::WorkspaceHalfAngle(self.workspace_half_angle));
        }
        if !(self.gimbal_rotor_inertia >= 0.0) {
            return Err(ParamError::RotorInertia(self.gimbal_rotor_inertia));
        }
        if !(self.gravity > 0.0) {
            return Err(ParamError::Gravity(self.gravity));
        }
        if !(self.leg_rest_length > 0.0) {
            return Err(ParamError::LegRestLength(self.leg_rest_length));
        }
        Ok(())
    }

    /// Combined body + tail mass (kg).
    pub fn total_mass(&self) -> f64 {
        self.body_mass + self.tail_mass
    }

    /// Reduced mass of the body-tail pair, `m_b m_t / (m_b + m_t)`.
    pub fn reduced_mass(&self) -> f64 {
        self.body_mass * self.tail_mass / self.total_mass()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tailed_a1_totals() {
        let p = RobotParams::tailed_a1();
        p.validate().unwrap();
        assert!((p.total_mass() - 13.70).abs() < 1e-12);
    }

    #[test]
    fn test_platform_differs_only_in_body() {
        let p = RobotParams::test_platform();
        p.validate().unwrap();
        assert_eq!(p.body_mass, 11.5);
        assert_eq!(p.body_inertia, Vector3::new(0.05, 0.25, 0.22));
        assert_eq!(p.tail_mass, RobotParams::tailed_a1().tail_mass);
    }

    #[test]
    fn invalid_params_are_rejected() {
        let mut p = RobotParams::tailed_a1();
        p.body_mass = 0.0;
        assert!(matches!(p.validate(), Err(ParamError::BodyMass(_))));

        let mut p = RobotParams::tailed_a1();
        p.tail_length_min = 0.6;
        assert!(matches!(p.validate(), Err(ParamError::TailLengthRange(..))));

        let mut p = RobotParams::tailed_a1();
        p.torque_min = 1.0;
        assert!(matches!(p.validate(), Err(ParamError::TorqueBox(..))));

        // A one-sided box that still contains zero torque is legal.
        let mut p = RobotParams::tailed_a1();
        p.torque_max = 0.0;
        assert!(p.validate().is_ok());

        // Massless tail is a legal degenerate case.
        let mut p = RobotParams::tailed_a1();
        p.tail_mass = 0.0;
        assert!(p.validate().is_ok());
    }
}
