//! Equations of motion: mass matrix, inverse and forward dynamics, external
//! force maps.
//!
//! Velocity coordinates are `u = [dp, omega, dq_t]` (CoM velocity, body
//! angular velocity, tail rates); the equations of motion are
//! `M(q) du + b(q, u) + g = S^T tau + Q_ext`. At the system CoM the mass
//! matrix is block diagonal in translation, `M_pp = (m_b + m_t) I`, with no
//! translation-rotation coupling, and gravity enters only the translational
//! rows.

use nalgebra::{DMatrix, DVector, Matrix6, Vector3, Vector6};
use thiserror::Error;

use super::{tail::TailKinematics, SystemState, TailedBodyModel};
use crate::spatial::hat;

/// Mass threshold below which the tail is treated as massless: its
/// coordinates are frozen and it transmits no force.
const MASSLESS_TAIL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("singular mass matrix (tail pitch at the gimbal singularity?)")]
    SingularMassMatrix,
}

/// Accelerations produced by the forward dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateDerivative {
    /// CoM linear acceleration, inertial frame (m/s^2).
    pub linear: Vector3<f64>,
    /// Body angular acceleration, body frame (rad/s^2).
    pub angular: Vector3<f64>,
    /// Tail coordinate accelerations; the telescoping entry is zero for the
    /// planning model.
    pub tail: Vector3<f64>,
}

/// External forces applied to the system, world frame.
#[derive(Debug, Clone, Default)]
pub struct ExternalForces {
    /// Forces at body-fixed points: `(offset from body CoM, body frame;
    /// force, world frame)`.
    pub body_points: Vec<(Vector3<f64>, Vector3<f64>)>,
    /// Force at the tail point mass.
    pub tail_point: Option<Vector3<f64>>,
}

impl ExternalForces {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.body_points.is_empty() && self.tail_point.is_none()
    }
}

/// Generalized external force split into its coordinate groups.
pub(crate) struct GeneralizedForce {
    pub linear: Vector3<f64>,
    pub angular: Vector3<f64>,
    pub tail: Vector3<f64>,
}

impl TailedBodyModel {
    /// Relative acceleration of the tail point with respect to the body CoM,
    /// body frame, for the given joint accelerations (`ddq` telescoping entry
    /// ignored for the planning model).
    fn relative_accel(
        &self,
        x: &SystemState,
        k: &TailKinematics,
        domega: &Vector3<f64>,
        ddq: &Vector3<f64>,
    ) -> Vector3<f64> {
        let w = &x.omega;
        w.cross(&w.cross(&k.rho)) + 2.0 * w.cross(&k.rho_dot) + domega.cross(&k.rho)
            + k.jac * ddq
            + k.accel_bias
    }

    /// Full `nv x nv` mass matrix in `[dp, omega, dq_t]` coordinates.
    pub fn mass_matrix(&self, x: &SystemState) -> DMatrix<f64> {
        let nv = self.nv();
        let k = self.tail_kinematics(x);
        let mu = self.params.reduced_mass();
        let rho_hat = hat(&k.rho);

        let mut m = DMatrix::zeros(nv, nv);
        for i in 0..3 {
            m[(i, i)] = self.params.total_mass();
            m[(3 + i, 3 + i)] = self.params.body_inertia[i];
        }
        let ww = -mu * rho_hat * rho_hat;
        let wq = mu * rho_hat * k.jac;
        let qq = mu * k.jac.transpose() * k.jac;
        for i in 0..3 {
            for j in 0..3 {
                m[(3 + i, 3 + j)] += ww[(i, j)];
            }
            for j in 0..self.nt {
                m[(3 + i, 6 + j)] = wq[(i, j)];
                m[(6 + j, 3 + i)] = wq[(i, j)];
            }
        }
        for i in 0..self.nt {
            for j in 0..self.nt {
                m[(6 + i, 6 + j)] = qq[(i, j)];
            }
        }
        // Reflected actuator inertia on the gimbal axes.
        for i in 0..self.nt.min(2) {
            m[(6 + i, 6 + i)] += self.params.gimbal_rotor_inertia;
        }
        m
    }

    /// Generalized force required to produce the accelerations `du`
    /// (`[ddp, domega, ddq_t]`), excluding external contact forces:
    /// `ID(q, u, du) = M du + b + g`.
    pub fn inverse_dynamics(&self, x: &SystemState, du: &DVector<f64>) -> DVector<f64> {
        debug_assert_eq!(du.len(), self.nv());
        let k = self.tail_kinematics(x);
        let mu = self.params.reduced_mass();
        let ddp = Vector3::new(du[0], du[1], du[2]);
        let domega = Vector3::new(du[3], du[4], du[5]);
        let mut ddq = Vector3::zeros();
        for i in 0..self.nt {
            ddq[i] = du[6 + i];
        }

        let a_rel = self.relative_accel(x, &k, &domega, &ddq);
        let gravity = Vector3::new(0.0, 0.0, -self.params.gravity);
        let inertia = &self.params.body_inertia;

        let row_p = self.params.total_mass() * (ddp - gravity);
        let row_w = inertia.component_mul(&domega)
            + x.omega.cross(&inertia.component_mul(&x.omega))
            + mu * k.rho.cross(&a_rel);
        let row_q = mu * k.jac.transpose() * a_rel;

        let mut out = DVector::zeros(self.nv());
        for i in 0..3 {
            out[i] = row_p[i];
            out[3 + i] = row_w[i];
        }
        for i in 0..self.nt {
            out[6 + i] = row_q[i];
        }
        for i in 0..self.nt.min(2) {
            out[6 + i] += self.params.gimbal_rotor_inertia * ddq[i];
        }
        out
    }

    /// Velocity-product and gravity forces: `ID(q, u, 0)`.
    pub fn bias_forces(&self, x: &SystemState) -> DVector<f64> {
        self.inverse_dynamics(x, &DVector::zeros(self.nv()))
    }

    pub(crate) fn generalized_external(
        &self,
        x: &SystemState,
        k: &TailKinematics,
        ext: &ExternalForces,
    ) -> GeneralizedForce {
        let mass_ratio_t = self.params.tail_mass / self.params.total_mass();
        let mass_ratio_b = self.params.body_mass / self.params.total_mass();
        let rt = x.quat.inverse();

        let mut linear = Vector3::zeros();
        let mut angular = Vector3::zeros();
        let mut tail = Vector3::zeros();
        for (offset, force) in &ext.body_points {
            let f_body = rt * force;
            linear += force;
            angular += (offset - mass_ratio_t * k.rho).cross(&f_body);
            tail -= mass_ratio_t * (k.jac.transpose() * f_body);
        }
        if let Some(force) = ext.tail_point {
            let f_body = rt * force;
            linear += force;
            angular += (mass_ratio_b * k.rho).cross(&f_body);
            tail += mass_ratio_b * (k.jac.transpose() * f_body);
        }
        GeneralizedForce {
            linear,
            angular,
            tail,
        }
    }

    /// Forward dynamics: accelerations under actuated tail forces `tau`
    /// (pitch, yaw, and telescoping force for the simulation model) plus
    /// external forces.
    pub fn forward_dynamics(
        &self,
        x: &SystemState,
        tau: &[f64],
        ext: &ExternalForces,
    ) -> Result<StateDerivative, DynamicsError> {
        debug_assert_eq!(tau.len(), self.nt);
        let k = self.tail_kinematics(x);
        let mu = self.params.reduced_mass();
        let massless = self.params.tail_mass < MASSLESS_TAIL;
        let gravity = Vector3::new(0.0, 0.0, -self.params.gravity);
        let q_ext = self.generalized_external(x, &k, ext);

        // Translation decouples: CoM acceleration is gravity plus net force.
        let linear = gravity + q_ext.linear / self.params.total_mass();

        // Internal 6x6 system in [omega, dq_t]; unused tail slots are padded
        // with unit diagonal and zero right-hand side so they stay inert.
        let inertia = &self.params.body_inertia;
        let rho_hat = hat(&k.rho);
        let ww = -mu * rho_hat * rho_hat;
        let wq = mu * rho_hat * k.jac;
        let qq = mu * k.jac.transpose() * k.jac;

        let mut m = Matrix6::zeros();
        for i in 0..3 {
            m[(i, i)] = inertia[i];
            for j in 0..3 {
                m[(i, j)] += ww[(i, j)];
                m[(i, 3 + j)] = wq[(i, j)];
                m[(3 + j, i)] = wq[(i, j)];
                m[(3 + i, 3 + j)] = qq[(i, j)];
            }
        }
        for i in 0..self.nt.min(2) {
            m[(3 + i, 3 + i)] += self.params.gimbal_rotor_inertia;
        }

        // Velocity-product bias at zero joint acceleration.
        let a_rel0 = self.relative_accel(x, &k, &Vector3::zeros(), &Vector3::zeros());
        let bias_w = x.omega.cross(&inertia.component_mul(&x.omega)) + mu * k.rho.cross(&a_rel0);
        let bias_q = mu * k.jac.transpose() * a_rel0;

        let mut rhs = Vector6::zeros();
        for i in 0..3 {
            rhs[i] = q_ext.angular[i] - bias_w[i];
        }
        for i in 0..self.nt {
            rhs[3 + i] = tau[i] + q_ext.tail[i] - bias_q[i];
        }

        // Pad frozen or massless tail slots.
        for i in 0..3 {
            let inactive = i >= self.nt || massless;
            if inactive {
                for j in 0..6 {
                    m[(3 + i, j)] = 0.0;
                    m[(j, 3 + i)] = 0.0;
                }
                m[(3 + i, 3 + i)] = 1.0;
                rhs[3 + i] = 0.0;
            }
        }

        let chol = m
            .cholesky()
            .ok_or(DynamicsError::SingularMassMatrix)?;
        let sol = chol.solve(&rhs);
        if !sol.iter().all(|v| v.is_finite()) {
            return Err(DynamicsError::SingularMassMatrix);
        }

        Ok(StateDerivative {
            linear,
            angular: Vector3::new(sol[0], sol[1], sol[2]),
            tail: Vector3::new(sol[3], sol[4], sol[5]),
        })
    }

    /// Generalized external force vector `Q_ext` in `[dp, omega, dq_t]`
    /// coordinates, for verification against the inverse dynamics.
    pub fn external_generalized_force(
        &self,
        x: &SystemState,
        ext: &ExternalForces,
    ) -> DVector<f64> {
        let k = self.tail_kinematics(x);
        let q = self.generalized_external(x, &k, ext);
        let mut out = DVector::zeros(self.nv());
        for i in 0..3 {
            out[i] = q.linear[i];
            out[3 + i] = q.angular[i];
        }
        for i in 0..self.nt {
            out[6 + i] = q.tail[i];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RobotParams;
    use approx::assert_abs_diff_eq;
    use nalgebra::UnitQuaternion;

    fn swinging_state() -> SystemState {
        SystemState {
            p: Vector3::new(0.3, -0.2, 1.4),
            quat: UnitQuaternion::from_euler_angles(0.3, -0.5, 0.9),
            tail: Vector3::new(0.5, -0.7, 0.37),
            v: Vector3::new(0.4, 0.1, -2.0),
            omega: Vector3::new(1.2, -2.5, 0.8),
            tail_rate: Vector3::new(3.0, -1.5, 0.6),
        }
    }

    #[test]
    fn rest_state_free_falls() {
        let model = TailedBodyModel::planning(RobotParams::tailed_a1()).unwrap();
        let x = SystemState::at_rest(1.85, UnitQuaternion::identity(), 0.49);
        let du = model
            .forward_dynamics(&x, &[0.0, 0.0], &ExternalForces::none())
            .unwrap();
        assert_abs_diff_eq!(du.linear, Vector3::new(0.0, 0.0, -9.81), epsilon = 1e-12);
        assert_abs_diff_eq!(du.angular, Vector3::zeros(), epsilon = 1e-12);
        assert_abs_diff_eq!(du.tail, Vector3::zeros(), epsilon = 1e-12);
    }

    #[test]
    fn pitch_torque_reacts_on_body() {
        // A positive pitch torque swings the tail tip down; momentum
        // conservation rotates the body the opposite way about the pitch
        // axis. The pitch joint axis is -y (positive pitch is R_y(-theta)),
        // so the tail's physical rotation about +y is -du.tail.x and the
        // opposite body reaction makes the coordinate signs equal.
        let model = TailedBodyModel::planning(RobotParams::tailed_a1()).unwrap();
        let x = SystemState::at_rest(1.85, UnitQuaternion::identity(), 0.49);
        let du = model
            .forward_dynamics(&x, &[1.0, 0.0], &ExternalForces::none())
            .unwrap();
        assert!(du.tail.x > 0.0);
        assert!(du.angular.y * (-du.tail.x) < 0.0);
        // CoM stays in free fall regardless of internal torques.
        assert_abs_diff_eq!(du.linear, Vector3::new(0.0, 0.0, -9.81), epsilon = 1e-12);
    }

    #[test]
    fn forward_inverse_round_trip() {
        for nt in [2usize, 3] {
            let params = RobotParams::tailed_a1();
            let model = if nt == 2 {
                TailedBodyModel::planning(params).unwrap()
            } else {
                TailedBodyModel::simulation(params).unwrap()
            };
            let x = swinging_state();
            let tau: Vec<f64> = (0..nt).map(|i| 2.0 - i as f64).collect();
            let du = model.forward_dynamics(&x, &tau, &ExternalForces::none()).unwrap();

            let mut du_vec = DVector::zeros(model.nv());
            for i in 0..3 {
                du_vec[i] = du.linear[i];
                du_vec[3 + i] = du.angular[i];
            }
            for i in 0..nt {
                du_vec[6 + i] = du.tail[i];
            }
            let gen = model.inverse_dynamics(&x, &du_vec);
            for i in 0..6 {
                assert_abs_diff_eq!(gen[i], 0.0, epsilon = 1e-9);
            }
            for i in 0..nt {
                assert_abs_diff_eq!(gen[6 + i], tau[i], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn mass_matrix_translational_block_is_total_mass() {
        let model = TailedBodyModel::simulation(RobotParams::tailed_a1()).unwrap();
        let m = model.mass_matrix(&swinging_state());
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 13.70 } else { 0.0 };
                assert_abs_diff_eq!(m[(i, j)], expect, epsilon = 1e-12);
                // No translation-rotation coupling at the CoM.
                assert_abs_diff_eq!(m[(i, 3 + j)], 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn massless_tail_reduces_to_rigid_body() {
        let mut params = RobotParams::tailed_a1();
        params.tail_mass = 0.0;
        let model = TailedBodyModel::planning(params.clone()).unwrap();
        let mut x = swinging_state();
        x.tail_rate = Vector3::new(5.0, 4.0, 0.0);
        let du = model.forward_dynamics(&x, &[3.0, -2.0], &ExternalForces::none()).unwrap();

        // Euler equations of the bare body.
        let i_b = params.body_inertia;
        let expected = Vector3::new(
            (-(x.omega.y * x.omega.z) * (i_b.z - i_b.y)) / i_b.x,
            (-(x.omega.z * x.omega.x) * (i_b.x - i_b.z)) / i_b.y,
            (-(x.omega.x * x.omega.y) * (i_b.y - i_b.x)) / i_b.z,
        );
        assert_abs_diff_eq!(du.angular, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(du.linear, Vector3::new(0.0, 0.0, -9.81), epsilon = 1e-12);
        assert_abs_diff_eq!(du.tail, Vector3::zeros(), epsilon = 1e-12);
    }

    #[test]
    fn external_forces_satisfy_virtual_work() {
        // The generalized force of a point force must equal F . dx_pt/dq for
        // every pose coordinate, checked by finite differences through the
        // tangent chart.
        let model = TailedBodyModel::simulation(RobotParams::tailed_a1()).unwrap();
        let x = swinging_state();
        let foot_force = Vector3::new(30.0, -80.0, 260.0);
        let tail_force = Vector3::new(-12.0, 5.0, 40.0);
        let mut ext = ExternalForces::none();
        ext.body_points
            .push((model.params().foot_offsets[1], foot_force));
        ext.tail_point = Some(tail_force);
        let q_ext = model.external_generalized_force(&x, &ext);

        let h = 1e-7;
        let nt = model.tail_dofs();
        for i in 0..model.nv() {
            let mut dx = DVector::zeros(model.tangent_dim());
            dx[i] = h;
            let xp = x.apply_tangent(&dx, nt);
            dx[i] = -h;
            let xm = x.apply_tangent(&dx, nt);
            let dfoot = (model.foot_position(&xp, 1) - model.foot_position(&xm, 1)) / (2.0 * h);
            let dtail = (model.tail_tip_position(&xp) - model.tail_tip_position(&xm)) / (2.0 * h);
            let work = foot_force.dot(&dfoot) + tail_force.dot(&dtail);
            assert_abs_diff_eq!(q_ext[i], work, epsilon = 1e-5);
        }
    }
}
