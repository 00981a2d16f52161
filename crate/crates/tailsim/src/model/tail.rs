//! Tail gimbal kinematics.
//!
//! The tail boom leaves the mount along the body `-x` axis at zero
//! configuration and is steered yaw-then-pitch: the unit direction is
//! `d(pitch, yaw) = R_z(yaw) R_y(-pitch) (-x)`, so positive pitch sweeps the
//! tip downward and positive yaw sweeps it toward `-y`.

use nalgebra::{Matrix3, Vector2, Vector3};

/// Unit boom direction in the body frame.
pub fn direction(pitch: f64, yaw: f64) -> Vector3<f64> {
    let (sp, cp) = pitch.sin_cos();
    let (sy, cy) = yaw.sin_cos();
    Vector3::new(-cp * cy, -cp * sy, -sp)
}

/// First partials of [`direction`] with respect to pitch and yaw.
pub fn direction_partials(pitch: f64, yaw: f64) -> (Vector3<f64>, Vector3<f64>) {
    let (sp, cp) = pitch.sin_cos();
    let (sy, cy) = yaw.sin_cos();
    (
        Vector3::new(sp * cy, sp * sy, -cp),
        Vector3::new(cp * sy, -cp * cy, 0.0),
    )
}

/// Second partials of [`direction`]: `(d_pp, d_py, d_yy)`.
pub fn direction_second_partials(
    pitch: f64,
    yaw: f64,
) -> (Vector3<f64>, Vector3<f64>, Vector3<f64>) {
    let (sp, cp) = pitch.sin_cos();
    let (sy, cy) = yaw.sin_cos();
    (
        Vector3::new(cp * cy, cp * sy, sp),
        Vector3::new(-sp * sy, sp * cy, 0.0),
        Vector3::new(cp * cy, cp * sy, 0.0),
    )
}

/// Kinematics of the tail point relative to the body CoM, evaluated at one
/// tail configuration: position, Jacobian and the acceleration remainder at
/// zero joint acceleration.
pub struct TailKinematics {
    /// Tail point relative to the body CoM, body frame (m).
    pub rho: Vector3<f64>,
    /// Local velocity `d rho / dt` for the current rates (m/s).
    pub rho_dot: Vector3<f64>,
    /// Jacobian of `rho` in the actuated tail coordinates, 3 x nt.
    pub jac: Matrix3<f64>,
    /// Velocity-product acceleration: `d^2 rho / dt^2` at zero joint
    /// acceleration (m/s^2).
    pub accel_bias: Vector3<f64>,
}

/// Evaluates [`TailKinematics`] for `nt` actuated tail DoF (2 freezes the
/// boom length; 3 actuates it). Unused Jacobian columns are zero.
pub fn kinematics(
    mount: &Vector3<f64>,
    tail: &Vector3<f64>,
    tail_rate: &Vector3<f64>,
    nt: usize,
) -> TailKinematics {
    let (pitch, yaw, len) = (tail.x, tail.y, tail.z);
    let d = direction(pitch, yaw);
    let (dp, dy) = direction_partials(pitch, yaw);
    let (dpp, dpy, dyy) = direction_second_partials(pitch, yaw);

    let mut jac = Matrix3::zeros();
    jac.set_column(0, &(len * dp));
    jac.set_column(1, &(len * dy));
    if nt == 3 {
        jac.set_column(2, &d);
    }

    let (rp, ry) = (tail_rate.x, tail_rate.y);
    let rl = if nt == 3 { tail_rate.z } else { 0.0 };
    let d_dot = dp * rp + dy * ry;
    let rho_dot = len * d_dot + rl * d;
    // d/dt of the Jacobian contracted with the current rates.
    let mut accel_bias = len * (dpp * rp * rp + 2.0 * dpy * rp * ry + dyy * ry * ry);
    if nt == 3 {
        accel_bias += 2.0 * rl * d_dot;
    }

    TailKinematics {
        rho: mount + len * d,
        rho_dot,
        jac,
        accel_bias,
    }
}

/// Deflection of the boom from the retracted axis: the cone angle
/// `acos(cos(pitch) cos(yaw))` in `[0, pi]`.
pub fn cone_angle(pitch: f64, yaw: f64) -> f64 {
    (pitch.cos() * yaw.cos()).clamp(-1.0, 1.0).acos()
}

/// Signed workspace-cone margin `cone_angle - half_angle` (rad, negative
/// inside) and its gradient in `(pitch, yaw)`.
///
/// The gradient is zeroed at the cone axis, where the angle is not
/// differentiable but the constraint is far from active.
pub fn cone_margin(pitch: f64, yaw: f64, half_angle: f64) -> (f64, Vector2<f64>) {
    let u = (pitch.cos() * yaw.cos()).clamp(-1.0, 1.0);
    let margin = u.acos() - half_angle;
    let s2 = 1.0 - u * u;
    if s2 < 1e-12 {
        return (margin, Vector2::zeros());
    }
    let k = 1.0 / s2.sqrt();
    (
        margin,
        Vector2::new(pitch.sin() * yaw.cos() * k, pitch.cos() * yaw.sin() * k),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn zero_config_points_back() {
        assert_abs_diff_eq!(
            direction(0.0, 0.0),
            Vector3::new(-1.0, 0.0, 0.0),
            epsilon = 1e-15
        );
    }

    #[test]
    fn quarter_turn_pitch_points_down() {
        assert_abs_diff_eq!(
            direction(FRAC_PI_2, 0.0),
            Vector3::new(0.0, 0.0, -1.0),
            epsilon = 1e-15
        );
    }

    #[test]
    fn direction_partials_match_finite_differences() {
        let (pitch, yaw) = (0.7, -1.1);
        let h = 1e-6;
        let (dp, dy) = direction_partials(pitch, yaw);
        let fd_p = (direction(pitch + h, yaw) - direction(pitch - h, yaw)) / (2.0 * h);
        let fd_y = (direction(pitch, yaw + h) - direction(pitch, yaw - h)) / (2.0 * h);
        assert_abs_diff_eq!(dp, fd_p, epsilon = 1e-9);
        assert_abs_diff_eq!(dy, fd_y, epsilon = 1e-9);

        let (dpp, dpy, dyy) = direction_second_partials(pitch, yaw);
        let (dp_p, dy_p) = direction_partials(pitch + h, yaw);
        let (dp_m, dy_m) = direction_partials(pitch - h, yaw);
        assert_abs_diff_eq!(dpp, (dp_p - dp_m) / (2.0 * h), epsilon = 1e-9);
        assert_abs_diff_eq!(dpy, (dy_p - dy_m) / (2.0 * h), epsilon = 1e-9);
        let (_, dy_yp) = direction_partials(pitch, yaw + h);
        let (_, dy_ym) = direction_partials(pitch, yaw - h);
        assert_abs_diff_eq!(dyy, (dy_yp - dy_ym) / (2.0 * h), epsilon = 1e-9);
    }

    #[test]
    fn kinematics_velocity_matches_finite_differences() {
        let mount = Vector3::new(-0.15, 0.0, 0.05);
        let tail = Vector3::new(0.4, -0.8, 0.3);
        let rate = Vector3::new(1.5, 2.0, -0.7);
        let h = 1e-6;
        for nt in [2usize, 3] {
            let k = kinematics(&mount, &tail, &rate, nt);
            let mut step = rate * h;
            if nt == 2 {
                step.z = 0.0;
            }
            let kp = kinematics(&mount, &(tail + step), &rate, nt);
            let km = kinematics(&mount, &(tail - step), &rate, nt);
            let fd_vel = (kp.rho - km.rho) / (2.0 * h);
            assert_abs_diff_eq!(k.rho_dot, fd_vel, epsilon = 1e-8);
            let fd_acc = (kp.rho_dot - km.rho_dot) / (2.0 * h);
            assert_abs_diff_eq!(k.accel_bias, fd_acc, epsilon = 1e-8);
            // Jacobian times rates reproduces the velocity.
            let jr = k.jac
                * Vector3::new(rate.x, rate.y, if nt == 3 { rate.z } else { 0.0 });
            assert_abs_diff_eq!(k.rho_dot, jr, epsilon = 1e-12);
        }
    }

    #[test]
    fn cone_margin_example() {
        // 85 deg pitch against an 80 deg cone: 5 deg violation.
        let (margin, _) = cone_margin(85f64.to_radians(), 0.0, 80f64.to_radians());
        assert_abs_diff_eq!(margin, 5f64.to_radians(), epsilon = 1e-12);
    }

    #[test]
    fn cone_margin_gradient_matches_finite_differences() {
        let (pitch, yaw) = (0.9, 0.6);
        let half = 80f64.to_radians();
        let (_, g) = cone_margin(pitch, yaw, half);
        let h = 1e-7;
        let fd_p = (cone_margin(pitch + h, yaw, half).0 - cone_margin(pitch - h, yaw, half).0)
            / (2.0 * h);
        let fd_y = (cone_margin(pitch, yaw + h, half).0 - cone_margin(pitch, yaw - h, half).0)
            / (2.0 * h);
        assert_abs_diff_eq!(g.x, fd_p, epsilon = 1e-6);
        assert_abs_diff_eq!(g.y, fd_y, epsilon = 1e-6);
    }
}
