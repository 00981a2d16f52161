//! Fixed-step Lie-group integration of the robot state.
//!
//! Classical fourth-order Runge-Kutta in the Munthe-Kaas formulation: the
//! orientation is advanced as `q_0 * exp(sigma)` with the stage derivatives
//! of `sigma` corrected by `dexpinv`, so the scheme keeps its full order on
//! the rotation group while every other coordinate integrates as a plain
//! vector. Unit quaternion norm is preserved by construction.

use nalgebra::Vector3;

use crate::model::{DynamicsError, StateDerivative, SystemState};
use crate::spatial::{dexpinv, rotation_exp};

/// Stage slope of the full state.
#[derive(Clone, Copy)]
struct Slope {
    dp: Vector3<f64>,
    dsigma: Vector3<f64>,
    dtail: Vector3<f64>,
    dv: Vector3<f64>,
    domega: Vector3<f64>,
    dtail_rate: Vector3<f64>,
}

fn offset(x0: &SystemState, slope: &Slope, h: f64) -> SystemState {
    SystemState {
        p: x0.p + h * slope.dp,
        quat: x0.quat * rotation_exp(&(h * slope.dsigma)),
        tail: x0.tail + h * slope.dtail,
        v: x0.v + h * slope.dv,
        omega: x0.omega + h * slope.domega,
        tail_rate: x0.tail_rate + h * slope.dtail_rate,
    }
}

/// One RK4 step of `dt` seconds under the acceleration field `accel`.
///
/// `accel` is evaluated at the four stage states; controls held constant
/// across the step belong inside the closure.
pub fn rk4_step<F>(x0: &SystemState, dt: f64, mut accel: F) -> Result<SystemState, DynamicsError>
where
    F: FnMut(&SystemState) -> Result<StateDerivative, DynamicsError>,
{
    let slope_at = |x: &SystemState, sigma: &Vector3<f64>, du: &StateDerivative| Slope {
        dp: x.v,
        dsigma: dexpinv(sigma, &x.omega),
        dtail: x.tail_rate,
        dv: du.linear,
        domega: du.angular,
        dtail_rate: du.tail,
    };

    let du1 = accel(x0)?;
    let k1 = slope_at(x0, &Vector3::zeros(), &du1);

    let x2 = offset(x0, &k1, 0.5 * dt);
    let du2 = accel(&x2)?;
    let k2 = slope_at(&x2, &(0.5 * dt * k1.dsigma), &du2);

    let x3 = offset(x0, &k2, 0.5 * dt);
    let du3 = accel(&x3)?;
    let k3 = slope_at(&x3, &(0.5 * dt * k2.dsigma), &du3);

    let x4 = offset(x0, &k3, dt);
    let du4 = accel(&x4)?;
    let k4 = slope_at(&x4, &(dt * k3.dsigma), &du4);

    let sixth = dt / 6.0;
    Ok(SystemState {
        p: x0.p + sixth * (k1.dp + 2.0 * k2.dp + 2.0 * k3.dp + k4.dp),
        quat: x0.quat
            * rotation_exp(
                &(sixth * (k1.dsigma + 2.0 * k2.dsigma + 2.0 * k3.dsigma + k4.dsigma)),
            ),
        tail: x0.tail + sixth * (k1.dtail + 2.0 * k2.dtail + 2.0 * k3.dtail + k4.dtail),
        v: x0.v + sixth * (k1.dv + 2.0 * k2.dv + 2.0 * k3.dv + k4.dv),
        omega: x0.omega + sixth * (k1.domega + 2.0 * k2.domega + 2.0 * k3.domega + k4.domega),
        tail_rate: x0.tail_rate
            + sixth * (k1.dtail_rate + 2.0 * k2.dtail_rate + 2.0 * k3.dtail_rate + k4.dtail_rate),
    })
}
