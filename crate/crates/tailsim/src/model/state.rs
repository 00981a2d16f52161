//! Full dynamic state of the falling robot and its tangent-space coordinates.

use nalgebra::{DVector, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::spatial::{rotation_between, rotation_exp};

/// State of the floating body plus tail.
///
/// `p` is the position of the *system* center of mass (body + tail) in the
/// inertial frame; body position is derived. This choice decouples the
/// translational dynamics exactly: the CoM is in free fall whenever no
/// external force acts, regardless of tail motion.
///
/// `tail` stacks `[pitch, yaw, length]`. The planning model holds `length`
/// frozen at the extended value and exposes a 2-DoF tail; the simulation
/// model actuates all three.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    /// System CoM position, inertial frame (m).
    pub p: Vector3<f64>,
    /// Body orientation (body-to-inertial).
    pub quat: UnitQuaternion<f64>,
    /// Tail coordinates `[pitch (rad), yaw (rad), length (m)]`.
    pub tail: Vector3<f64>,
    /// CoM velocity, inertial frame (m/s).
    pub v: Vector3<f64>,
    /// Body angular velocity, body frame (rad/s).
    pub omega: Vector3<f64>,
    /// Tail coordinate rates.
    pub tail_rate: Vector3<f64>,
}

impl SystemState {
    /// Rest state at a given CoM height with the tail extended straight back.
    pub fn at_rest(height: f64, quat: UnitQuaternion<f64>, tail_length: f64) -> Self {
        Self {
            p: Vector3::new(0.0, 0.0, height),
            quat,
            tail: Vector3::new(0.0, 0.0, tail_length),
            v: Vector3::zeros(),
            omega: Vector3::zeros(),
            tail_rate: Vector3::zeros(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.p.iter().all(|x| x.is_finite())
            && self.quat.coords.iter().all(|x| x.is_finite())
            && self.tail.iter().all(|x| x.is_finite())
            && self.v.iter().all(|x| x.is_finite())
            && self.omega.iter().all(|x| x.is_finite())
            && self.tail_rate.iter().all(|x| x.is_finite())
    }

    /// Retracts the state by a body-side tangent increment with `nt` tail
    /// DoF: `[dp, dphi, dtail, dv, domega, dtail_rate]`, orientation via the
    /// exponential map.
    pub fn apply_tangent(&self, dx: &DVector<f64>, nt: usize) -> Self {
        debug_assert_eq!(dx.len(), 12 + 2 * nt);
        let mut out = self.clone();
        for i in 0..3 {
            out.p[i] += dx[i];
        }
        out.quat = self.quat * rotation_exp(&Vector3::new(dx[3], dx[4], dx[5]));
        for i in 0..nt {
            out.tail[i] += dx[6 + i];
        }
        let o = 6 + nt;
        for i in 0..3 {
            out.v[i] += dx[o + i];
            out.omega[i] += dx[o + 3 + i];
        }
        for i in 0..nt {
            out.tail_rate[i] += dx[o + 6 + i];
        }
        out
    }

    /// Tangent increment taking `self` to `other` (inverse of
    /// [`Self::apply_tangent`] to first order, exact for the orientation).
    pub fn tangent_to(&self, other: &Self, nt: usize) -> DVector<f64> {
        let mut dx = DVector::zeros(12 + 2 * nt);
        let phi = rotation_between(&self.quat, &other.quat);
        for i in 0..3 {
            dx[i] = other.p[i] - self.p[i];
            dx[3 + i] = phi[i];
        }
        for i in 0..nt {
            dx[6 + i] = other.tail[i] - self.tail[i];
        }
        let o = 6 + nt;
        for i in 0..3 {
            dx[o + i] = other.v[i] - self.v[i];
            dx[o + 3 + i] = other.omega[i] - self.omega[i];
        }
        for i in 0..nt {
            dx[o + 6 + i] = other.tail_rate[i] - self.tail_rate[i];
        }
        dx
    }

    /// Flat serialization `[p, quat(xyzw), tail pitch/yaw(/len), v, omega,
    /// tail rates]` with `nt` tail entries per group.
    pub fn to_flat(&self, nt: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(13 + 2 * nt);
        out.extend(self.p.iter());
        out.extend([self.quat.i, self.quat.j, self.quat.k, self.quat.w]);
        out.extend(self.tail.iter().take(nt));
        out.extend(self.v.iter());
        out.extend(self.omega.iter());
        out.extend(self.tail_rate.iter().take(nt));
        out
    }

    /// Inverse of [`Self::to_flat`]. Planning states (2 tail entries) restore
    /// the frozen length from `tail_length`.
    pub fn from_flat(flat: &[f64], nt: usize, tail_length: f64) -> Option<Self> {
        if flat.len() != 13 + 2 * nt {
            return None;
        }
        let quat = crate::spatial::try_unit_quat([flat[3], flat[4], flat[5], flat[6]]).ok()?;
        let mut tail = Vector3::new(0.0, 0.0, tail_length);
        let mut tail_rate = Vector3::zeros();
        for i in 0..nt {
            tail[i] = flat[7 + i];
        }
        let o = 7 + nt;
        let v = Vector3::new(flat[o], flat[o + 1], flat[o + 2]);
        let omega = Vector3::new(flat[o + 3], flat[o + 4], flat[o + 5]);
        for i in 0..nt {
            tail_rate[i] = flat[o + 6 + i];
        }
        Some(Self {
            p: Vector3::new(flat[0], flat[1], flat[2]),
            quat,
            tail,
            v,
            omega,
            tail_rate,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn tangent_round_trip_both_dimensions() {
        let a = SystemState::at_rest(1.85, UnitQuaternion::identity(), 0.49);
        for nt in [2usize, 3] {
            let mut dx = DVector::zeros(12 + 2 * nt);
            for i in 0..dx.len() {
                dx[i] = 0.01 * (i as f64 + 1.0) * if i % 2 == 0 { 1.0 } else { -1.0 };
            }
            let b = a.apply_tangent(&dx, nt);
            let back = a.tangent_to(&b, nt);
            for i in 0..dx.len() {
                assert_abs_diff_eq!(back[i], dx[i], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn flat_round_trip() {
        let mut x = SystemState::at_rest(1.0, UnitQuaternion::identity(), 0.49);
        x.omega = Vector3::new(0.1, -0.2, 0.3);
        x.tail = Vector3::new(0.4, -0.6, 0.3);
        for nt in [2usize, 3] {
            let flat = x.to_flat(nt);
            assert_eq!(flat.len(), 13 + 2 * nt);
            let y = SystemState::from_flat(&flat, nt, 0.3).unwrap();
            assert_eq!(x, y);
        }
    }
}
