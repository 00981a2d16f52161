//! Penalty ground contact for the flat floor at `z = 0`.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

/// Compliant contact: spring-damper normal force plus viscous tangential
/// friction clamped to a Coulomb cone.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContactModel {
    /// Normal stiffness (N/m).
    pub stiffness: f64,
    /// Normal damping (N·s/m).
    pub damping: f64,
    /// Coulomb friction coefficient.
    pub friction: f64,
    /// Tangential viscous damping (N·s/m), clamped to the friction cone.
    pub tangential_damping: f64,
    /// Penetration that counts as contact for detection purposes (m).
    pub tolerance: f64,
}

impl Default for ContactModel {
    fn default() -> Self {
        Self {
            stiffness: 30_000.0,
            damping: 1_000.0,
            friction: 0.8,
            tangential_damping: 1_000.0,
            tolerance: 1e-3,
        }
    }
}

impl ContactModel {
    /// Ground reaction force on a point with world position `pos` and world
    /// velocity `vel`. Zero above the ground; the normal component never
    /// pulls down and the tangential component stays inside the friction
    /// cone.
    pub fn point_force(&self, pos: &Vector3<f64>, vel: &Vector3<f64>) -> Vector3<f64> {
        let penetration = -pos.z;
        if penetration <= 0.0 {
            return Vector3::zeros();
        }
        let normal = (self.stiffness * penetration - self.damping * vel.z).max(0.0);
        let mut tangential = -self.tangential_damping * Vector3::new(vel.x, vel.y, 0.0);
        let cap = self.friction * normal;
        let t_norm = tangential.norm();
        if t_norm > cap {
            tangential *= cap / t_norm;
        }
        Vector3::new(tangential.x, tangential.y, normal)
    }

    /// Geometric contact test with the detection tolerance.
    pub fn in_contact(&self, pos: &Vector3<f64>) -> bool {
        -pos.z > self.tolerance
    }
}
