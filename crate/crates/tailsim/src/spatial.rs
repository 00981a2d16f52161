//! Rotation and attitude utilities shared by the planner, controller and
//! simulator.
//!
//! Conventions used throughout the crate:
//!
//! * Quaternions are unit, stored/serialized in `[x, y, z, w]` order and map
//!   body-frame vectors into the inertial frame.
//! * Euler angles are intrinsic Z-Y-X (yaw about z, then pitch about the new
//!   y, then roll about the new x).
//! * Rotation increments live on the body side: `q_next = q * exp(phi)` with
//!   `phi` a body-frame rotation vector.

use nalgebra::{Matrix3, Quaternion, UnitQuaternion, Vector3};
use thiserror::Error;

/// Largest allowed deviation of a quaternion norm from 1 before the input is
/// rejected as invalid.
pub const UNIT_NORM_TOL: f64 = 1e-6;

/// Margin (rad) from `pitch = +/- pi/2` below which Euler extraction reports
/// gimbal lock.
pub const GIMBAL_LOCK_MARGIN: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum SpatialError {
    #[error("quaternion norm {norm} deviates from 1 by more than {UNIT_NORM_TOL}")]
    NotUnit { norm: f64 },
    #[error("Euler extraction undefined: pitch within {GIMBAL_LOCK_MARGIN} rad of +/- pi/2")]
    GimbalLock,
}

/// Intrinsic Z-Y-X Euler angles in radians.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct EulerYpr {
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
}

impl EulerYpr {
    pub fn new(yaw: f64, pitch: f64, roll: f64) -> Self {
        Self { yaw, pitch, roll }
    }

    pub fn from_degrees(yaw: f64, pitch: f64, roll: f64) -> Self {
        Self {
            yaw: yaw.to_radians(),
            pitch: pitch.to_radians(),
            roll: roll.to_radians(),
        }
    }

    pub fn to_degrees(self) -> [f64; 3] {
        [
            self.yaw.to_degrees(),
            self.pitch.to_degrees(),
            self.roll.to_degrees(),
        ]
    }
}

/// Builds a unit quaternion from `[x, y, z, w]` coordinates, normalizing
/// small drift and rejecting inputs whose norm deviates beyond
/// [`UNIT_NORM_TOL`].
pub fn try_unit_quat(coords: [f64; 4]) -> Result<UnitQuaternion<f64>, SpatialError> {
    let q = Quaternion::new(coords[3], coords[0], coords[1], coords[2]);
    let norm = q.norm();
    if (norm - 1.0).abs() > UNIT_NORM_TOL {
        return Err(SpatialError::NotUnit { norm });
    }
    Ok(UnitQuaternion::from_quaternion(q))
}

/// Returns quaternion coordinates in `[x, y, z, w]` order.
pub fn quat_coords(q: &UnitQuaternion<f64>) -> [f64; 4] {
    [q.i, q.j, q.k, q.w]
}

/// Rotation matrix of a unit quaternion (body-to-inertial).
pub fn rotation_from_quat(q: &UnitQuaternion<f64>) -> Matrix3<f64> {
    q.to_rotation_matrix().into_inner()
}

/// Exponential map: rotation vector (body frame, rad) to unit quaternion.
///
/// Uses the half-angle series for small angles so the map is smooth through
/// zero.
pub fn rotation_exp(phi: &Vector3<f64>) -> UnitQuaternion<f64> {
    let angle = phi.norm();
    let half = 0.5 * angle;
    // sin(half)/angle, series below sqrt(eps) to avoid cancellation.
    let k = if angle < 1e-8 {
        0.5 - angle * angle / 48.0
    } else {
        half.sin() / angle
    };
    let q = Quaternion::new(half.cos(), k * phi.x, k * phi.y, k * phi.z);
    UnitQuaternion::new_normalize(q)
}

/// Logarithm map: unit quaternion to the shortest rotation vector (|phi| <=
/// pi). The sign ambiguity q ~ -q is resolved toward the short geodesic.
pub fn rotation_log(q: &UnitQuaternion<f64>) -> Vector3<f64> {
    let (w, v) = {
        let w = q.w;
        let v = Vector3::new(q.i, q.j, q.k);
        if w < 0.0 {
            (-w, -v)
        } else {
            (w, v)
        }
    };
    let vn = v.norm();
    if vn < 1e-12 {
        return v * 2.0;
    }
    let angle = 2.0 * vn.atan2(w);
    v * (angle / vn)
}

/// Body-frame rotation vector taking `from` to `to`: `to = from * exp(phi)`.
pub fn rotation_between(from: &UnitQuaternion<f64>, to: &UnitQuaternion<f64>) -> Vector3<f64> {
    rotation_log(&(from.inverse() * to))
}

/// Integrates a body-frame angular velocity over `dt` with the exponential
/// map: `q_next = q * exp(omega * dt)`. Unit norm is preserved by
/// construction.
pub fn quat_integrate(
    q: &UnitQuaternion<f64>,
    omega_body: &Vector3<f64>,
    dt: f64,
) -> UnitQuaternion<f64> {
    q * rotation_exp(&(omega_body * dt))
}

/// Scalar attitude error `0.5 * tr(I - R(q_d)^T R(q))`, in `[0, 2]`.
///
/// Zero iff the orientations coincide; 2 at a half-turn. Symmetric in its
/// arguments and invariant to a common right multiplication.
pub fn attitude_error(q_d: &UnitQuaternion<f64>, q: &UnitQuaternion<f64>) -> f64 {
    let e = rotation_from_quat(q_d).transpose() * rotation_from_quat(q);
    0.5 * (3.0 - e.trace())
}

/// Gradient of [`attitude_error`] with respect to a body-side rotation
/// increment of `q`: `d e(q_d, q exp(phi)) / d phi` at `phi = 0`.
pub fn attitude_error_gradient(
    q_d: &UnitQuaternion<f64>,
    q: &UnitQuaternion<f64>,
) -> Vector3<f64> {
    let e = rotation_from_quat(q_d).transpose() * rotation_from_quat(q);
    0.5 * vee(&(e - e.transpose()))
}

/// Hessian of [`attitude_error`] with respect to a body-side rotation
/// increment of `q`. Exact (not a Gauss-Newton approximation); equals the
/// identity at zero error.
pub fn attitude_error_hessian(
    q_d: &UnitQuaternion<f64>,
    q: &UnitQuaternion<f64>,
) -> Matrix3<f64> {
    let e = rotation_from_quat(q_d).transpose() * rotation_from_quat(q);
    let sym = 0.5 * (e + e.transpose());
    -0.5 * (sym - e.trace() * Matrix3::identity())
}

/// Tilt error `1 - cos(angle between the two body z-axes)`.
///
/// Measures only how far `q` is from upright relative to `q_d`; rotations
/// about the shared z-axis (yaw) do not change it. Zero iff the z-axes
/// coincide; 2 when inverted.
pub fn tilt_error(q_d: &UnitQuaternion<f64>, q: &UnitQuaternion<f64>) -> f64 {
    let e = rotation_from_quat(q_d).transpose() * rotation_from_quat(q);
    1.0 - e[(2, 2)]
}

/// Gradient of [`tilt_error`] with respect to a body-side rotation
/// increment of `q`: `d tilt(q_d, q exp(phi)) / d phi` at `phi = 0`.
pub fn tilt_error_gradient(q_d: &UnitQuaternion<f64>, q: &UnitQuaternion<f64>) -> Vector3<f64> {
    let e = rotation_from_quat(q_d).transpose() * rotation_from_quat(q);
    let a = e.transpose() * Vector3::z();
    a.cross(&Vector3::z())
}

/// Hessian of [`tilt_error`] with respect to a body-side rotation
/// increment of `q`. Exact; equals `diag(1, 1, 0)` at zero error (yaw is
/// the flat direction).
pub fn tilt_error_hessian(q_d: &UnitQuaternion<f64>, q: &UnitQuaternion<f64>) -> Matrix3<f64> {
    let e = rotation_from_quat(q_d).transpose() * rotation_from_quat(q);
    let a = e.transpose() * Vector3::z();
    let z = Vector3::z();
    a.dot(&z) * Matrix3::identity() - 0.5 * (a * z.transpose() + z * a.transpose())
}

/// Skew-symmetric cross-product matrix of `v`.
pub fn hat(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of [`hat`] on the skew-symmetric part of `m`.
pub fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// Inverse tangent of the exponential map for body-side increments,
/// `dexp^{-1}_{-sigma}(omega)`.
///
/// Used by the Runge-Kutta-Munthe-Kaas integrator: if the orientation is
/// written `q(t) = q_0 * exp(sigma(t))` then `sigma' = dexpinv(sigma, omega)`
/// reproduces `omega` as the body angular velocity.
pub fn dexpinv(sigma: &Vector3<f64>, omega: &Vector3<f64>) -> Vector3<f64> {
    let theta2 = sigma.norm_squared();
    // omega + 1/2 sigma x omega + c2 sigma x (sigma x omega), with
    // c2 = (1 - theta/2 * cot(theta/2)) / theta^2 -> 1/12 as theta -> 0.
    let c2 = if theta2 < 1e-12 {
        1.0 / 12.0 + theta2 / 720.0
    } else {
        let theta = theta2.sqrt();
        let half = 0.5 * theta;
        (1.0 - half * half.cos() / half.sin()) / theta2
    };
    let s_x_w = sigma.cross(omega);
    omega + 0.5 * s_x_w + c2 * sigma.cross(&s_x_w)
}

/// Quaternion from intrinsic Z-Y-X Euler angles.
pub fn quat_from_euler(e: &EulerYpr) -> UnitQuaternion<f64> {
    UnitQuaternion::from_euler_angles(e.roll, e.pitch, e.yaw)
}

/// Intrinsic Z-Y-X Euler angles of a quaternion. Fails within
/// [`GIMBAL_LOCK_MARGIN`] of the `pitch = +/- pi/2` singularity.
pub fn euler_from_quat(q: &UnitQuaternion<f64>) -> Result<EulerYpr, SpatialError> {
    let r = rotation_from_quat(q);
    let sin_pitch = -r[(2, 0)];
    if sin_pitch.abs() >= (std::f64::consts::FRAC_PI_2 - GIMBAL_LOCK_MARGIN).sin() {
        return Err(SpatialError::GimbalLock);
    }
    Ok(EulerYpr {
        yaw: r[(1, 0)].atan2(r[(0, 0)]),
        pitch: sin_pitch.asin(),
        roll: r[(2, 1)].atan2(r[(2, 2)]),
    })
}

/// Distance between two unit quaternions that treats `q` and `-q` as equal:
/// the smaller of the two chordal distances.
pub fn quat_distance(a: &UnitQuaternion<f64>, b: &UnitQuaternion<f64>) -> f64 {
    let d = (a.coords - b.coords).norm();
    let s = (a.coords + b.coords).norm();
    d.min(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity_quaternion_round_trips() {
        let q = try_unit_quat([0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(quat_coords(&q), [0.0, 0.0, 0.0, 1.0]);
        assert_abs_diff_eq!(rotation_from_quat(&q), Matrix3::identity(), epsilon = 1e-15);
    }

    #[test]
    fn non_unit_quaternion_is_rejected() {
        let err = try_unit_quat([0.0, 0.0, 0.0, 1.1]).unwrap_err();
        assert!(matches!(err, SpatialError::NotUnit { .. }));
    }

    #[test]
    fn attitude_error_examples() {
        let id = UnitQuaternion::identity();
        assert_abs_diff_eq!(attitude_error(&id, &id), 0.0, epsilon = 1e-15);

        // 90 deg yaw: e = 1.
        let yaw90 = quat_from_euler(&EulerYpr::from_degrees(90.0, 0.0, 0.0));
        assert_abs_diff_eq!(attitude_error(&id, &yaw90), 1.0, epsilon = 1e-12);

        // 180 deg about any axis: e = 2.
        let half_turn = rotation_exp(&Vector3::new(0.0, std::f64::consts::PI, 0.0));
        assert_abs_diff_eq!(attitude_error(&id, &half_turn), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn attitude_error_antipodal_quaternions_agree() {
        let q = quat_from_euler(&EulerYpr::from_degrees(31.0, -14.0, 55.0));
        let neg = UnitQuaternion::from_quaternion(-q.into_inner());
        let d = quat_from_euler(&EulerYpr::from_degrees(-20.0, 10.0, 5.0));
        assert_abs_diff_eq!(
            attitude_error(&d, &q),
            attitude_error(&d, &neg),
            epsilon = 1e-15
        );
    }

    #[test]
    fn euler_round_trip_example() {
        let e = EulerYpr::from_degrees(15.0, 25.0, 35.0);
        let q = quat_from_euler(&e);
        let back = euler_from_quat(&q).unwrap();
        assert_abs_diff_eq!(back.yaw, e.yaw, epsilon = 1e-9);
        assert_abs_diff_eq!(back.pitch, e.pitch, epsilon = 1e-9);
        assert_abs_diff_eq!(back.roll, e.roll, epsilon = 1e-9);
    }

    #[test]
    fn gimbal_lock_reports_error() {
        let q = quat_from_euler(&EulerYpr::from_degrees(10.0, 90.0, 0.0));
        assert_eq!(euler_from_quat(&q).unwrap_err(), SpatialError::GimbalLock);
    }

    #[test]
    fn quat_integrate_preserves_norm_and_matches_axis_rotation() {
        let q = quat_from_euler(&EulerYpr::from_degrees(5.0, -40.0, 12.0));
        let omega = Vector3::new(0.0, 0.0, 2.0);
        let stepped = quat_integrate(&q, &omega, 0.25);
        assert_abs_diff_eq!(stepped.norm(), 1.0, epsilon = 1e-14);
        // Body-frame z rotation of 0.5 rad.
        let expected = q * UnitQuaternion::from_axis_angle(&Vector3::z_axis(), 0.5);
        assert!(quat_distance(&stepped, &expected) < 1e-14);
    }

    #[test]
    fn log_is_inverse_of_exp() {
        let phi = Vector3::new(0.3, -1.2, 0.7);
        let q = rotation_exp(&phi);
        assert_abs_diff_eq!(rotation_log(&q), phi, epsilon = 1e-12);
        // Short-side resolution: the log of a 350 deg turn is a -10 deg turn.
        let big = rotation_exp(&Vector3::new(0.0, 0.0, 350f64.to_radians()));
        assert_abs_diff_eq!(
            rotation_log(&big),
            Vector3::new(0.0, 0.0, -10f64.to_radians()),
            epsilon = 1e-12
        );
    }

    #[test]
    fn attitude_error_gradient_matches_finite_differences() {
        let qd = quat_from_euler(&EulerYpr::from_degrees(40.0, -10.0, 25.0));
        let q = quat_from_euler(&EulerYpr::from_degrees(-15.0, 30.0, 5.0));
        let g = attitude_error_gradient(&qd, &q);
        let h = 1e-6;
        for i in 0..3 {
            let mut dphi = Vector3::zeros();
            dphi[i] = h;
            let plus = attitude_error(&qd, &(q * rotation_exp(&dphi)));
            let minus = attitude_error(&qd, &(q * rotation_exp(&(-dphi))));
            assert_abs_diff_eq!(g[i], (plus - minus) / (2.0 * h), epsilon = 1e-8);
        }
    }

    #[test]
    fn attitude_error_hessian_matches_finite_differences() {
        // Second differences of the scalar map phi -> e(qd, q exp(phi)) in a
        // fixed tangent chart at q; this is the quantity the planner
        // quadratizes.
        let qd = quat_from_euler(&EulerYpr::from_degrees(40.0, -10.0, 25.0));
        let q = quat_from_euler(&EulerYpr::from_degrees(-15.0, 30.0, 5.0));
        let hess = attitude_error_hessian(&qd, &q);
        let f = |phi: Vector3<f64>| attitude_error(&qd, &(q * rotation_exp(&phi)));
        let h = 1e-4;
        for i in 0..3 {
            for j in 0..3 {
                let mut ei = Vector3::zeros();
                let mut ej = Vector3::zeros();
                ei[i] = h;
                ej[j] = h;
                let fd = (f(ei + ej) - f(ei - ej) - f(-ei + ej) + f(-ei - ej)) / (4.0 * h * h);
                assert_abs_diff_eq!(hess[(j, i)], fd, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn tilt_error_ignores_yaw_and_measures_tilt() {
        let id = UnitQuaternion::identity();
        let yaw = quat_from_euler(&EulerYpr::from_degrees(137.0, 0.0, 0.0));
        assert_abs_diff_eq!(tilt_error(&id, &yaw), 0.0, epsilon = 1e-12);
        // Pure pitch by theta tilts the z-axis by theta.
        let pitch = quat_from_euler(&EulerYpr::from_degrees(0.0, 30.0, 0.0));
        assert_abs_diff_eq!(
            tilt_error(&id, &pitch),
            1.0 - 30f64.to_radians().cos(),
            epsilon = 1e-12
        );
        // A body-side yaw after tilting leaves the z-axis where it was.
        let body_yaw = rotation_exp(&Vector3::new(0.0, 0.0, 1.1));
        assert_abs_diff_eq!(
            tilt_error(&id, &(pitch * body_yaw)),
            tilt_error(&id, &pitch),
            epsilon = 1e-12
        );
        let qd = quat_from_euler(&EulerYpr::from_degrees(40.0, -10.0, 25.0));
        assert_abs_diff_eq!(tilt_error(&qd, &qd), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn tilt_error_derivatives_match_finite_differences() {
        let qd = quat_from_euler(&EulerYpr::from_degrees(40.0, -10.0, 25.0));
        let q = quat_from_euler(&EulerYpr::from_degrees(-15.0, 30.0, 5.0));
        let g = tilt_error_gradient(&qd, &q);
        let hess = tilt_error_hessian(&qd, &q);
        let f = |phi: Vector3<f64>| tilt_error(&qd, &(q * rotation_exp(&phi)));
        let h = 1e-6;
        for i in 0..3 {
            let mut dphi = Vector3::zeros();
            dphi[i] = h;
            let fd = (f(dphi) - f(-dphi)) / (2.0 * h);
            assert_abs_diff_eq!(g[i], fd, epsilon = 1e-8);
        }
        let h = 1e-4;
        for i in 0..3 {
            for j in 0..3 {
                let mut ei = Vector3::zeros();
                let mut ej = Vector3::zeros();
                ei[i] = h;
                ej[j] = h;
                let fd = (f(ei + ej) - f(ei - ej) - f(-ei + ej) + f(-ei - ej)) / (4.0 * h * h);
                assert_abs_diff_eq!(hess[(j, i)], fd, epsilon = 1e-6);
            }
        }
        // At zero error the flat direction is yaw.
        let h0 = tilt_error_hessian(&qd, &qd);
        assert_abs_diff_eq!(h0, Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, 0.0)), epsilon = 1e-12);
    }

    #[test]
    fn dexpinv_reproduces_exact_body_velocity() {
        // d/dt [q0 * exp(sigma(t))] must have body angular velocity omega when
        // sigma' = dexpinv(sigma, omega). Verify with a finite-difference
        // derivative of the reconstructed quaternion path.
        let sigma = Vector3::new(0.4, -0.2, 0.9);
        let omega = Vector3::new(1.3, 0.5, -2.0);
        let sdot = dexpinv(&sigma, &omega);
        let h = 1e-6;
        let q_plus = rotation_exp(&(sigma + h * sdot));
        let q_minus = rotation_exp(&(sigma - h * sdot));
        let dq = (q_plus.into_inner().coords - q_minus.into_inner().coords) / (2.0 * h);
        // Body velocity from qdot: omega = 2 * vec(q^-1 qdot).
        let q = rotation_exp(&sigma);
        let qdot = Quaternion::from_parts(dq.w, dq.xyz());
        let w_body = (q.inverse().into_inner() * qdot) * 2.0;
        assert_abs_diff_eq!(w_body.i, omega.x, epsilon = 1e-6);
        assert_abs_diff_eq!(w_body.j, omega.y, epsilon = 1e-6);
        assert_abs_diff_eq!(w_body.k, omega.z, epsilon = 1e-6);
        assert_abs_diff_eq!(w_body.w, 0.0, epsilon = 1e-6);
    }
}
