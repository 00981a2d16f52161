//! Runtime controllers and the drop phase machine.
//!
//! A drop passes through three phases: `FlightReorient` (track the planned
//! reorientation), `FlightRetract` (keep tracking the attitude reference
//! while reeling the tail in), and `Stance` (virtual-leg compliance after
//! touchdown). Transitions only move forward; controllers are pure
//! functions of time, state, and configuration.

use nalgebra::{DMatrix, UnitQuaternion, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::model::{RobotParams, SystemState, TailedBodyModel};
use crate::spatial;
use crate::trajopt::Solution;

/// Number of planned (gimbal) torque channels.
const NT_PLAN: usize = 2;

/// Drop phases, in the only order they can occur.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Phase {
    FlightReorient,
    FlightRetract,
    Stance,
}

/// Mutable phase-machine state for one drop.
#[derive(Debug, Clone)]
pub struct PhaseState {
    pub phase: Phase,
    /// Time the current phase was entered (s).
    pub entered_at: f64,
    /// Tail length at the moment retraction started (m).
    pub retract_start_length: f64,
    /// Set when contact happened while still reorienting.
    pub early_touchdown: bool,
}

impl PhaseState {
    pub fn new() -> Self {
        Self {
            phase: Phase::FlightReorient,
            entered_at: 0.0,
            retract_start_length: 0.0,
            early_touchdown: false,
        }
    }
}

impl Default for PhaseState {
    fn default() -> Self {
        Self::new()
    }
}

/// Thresholds and gains for the phase machine and the non-tracking
/// controllers. Constructed per drop; see [`PhaseConfig::for_drop`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhaseConfig {
    /// Goal orientation the flight phase steers toward.
    pub goal: UnitQuaternion<f64>,
    /// Attitude error (`1 - cos(angle)`) below which reorientation is
    /// considered done and retraction may start.
    pub attitude_tolerance: f64,
    /// Height of the system center of mass below which retraction starts
    /// regardless of attitude (m).
    pub retract_height: f64,
    /// Hard time budget for the reorientation phase (s).
    pub flight_budget: f64,
    /// Tail reel-in speed (m/s).
    pub retract_speed: f64,
    /// Telescoping servo gains and force limit.
    pub retract_kp: f64,
    pub retract_kd: f64,
    pub retract_force_limit: f64,
    /// Extra viscous damping on the gimbal while the tail reels in; counters
    /// the rate amplification a shrinking tail produces.
    pub retract_gimbal_damping: f64,
    /// Anti-windup slack for the reel-in command (m): when the telescoping
    /// joint stalls under load, the command trails this far below the
    /// measured length instead of running ahead, keeping the servo pull
    /// bounded and letting the reel resume cleanly when the load drops.
    pub retract_backlash: f64,
    /// Tail length that already clears the ground in a level landing (m).
    /// The retraction trigger only has to reach this length by touchdown —
    /// the reel keeps running through stance to full retraction — which
    /// lets the reorientation keep the flight time that reeling all the
    /// way in would have consumed.
    pub retract_clearance_length: f64,
    /// Gimbal hold gains used during stance. Damping-dominant on purpose: a
    /// stiff hold would whip the retracted tail at full torque and shake
    /// the body during the landing.
    pub tail_hold_kp: f64,
    pub tail_hold_kd: f64,
    /// Virtual-leg stance parameters.
    pub stance_stiffness: f64,
    pub stance_damping: f64,
    /// Damping on the non-axial hip velocity of a loaded strut. A planted
    /// foot grips the ground, so the leg resists sideways hip motion; this
    /// is what kills body sway and rocking, which near-vertical struts
    /// alone barely oppose.
    pub stance_lateral_damping: f64,
    /// Per-leg force bound (N).
    pub stance_force_limit: f64,
    /// Foot penetration that counts as contact (m).
    pub contact_tolerance: f64,
}

impl PhaseConfig {
    /// Configuration for a drop released at rest from `height` with the
    /// given goal orientation and reorientation budget.
    ///
    /// The retraction trigger height is chosen so that the remaining fall
    /// time at the trigger is just enough to reel the tail down to the
    /// clearance length: a drop tall enough to finish reorienting keeps
    /// the whole budget, while a short drop sacrifices part of the
    /// reorientation so the tail is clear of the ground before touchdown.
    pub fn for_drop(
        goal: &UnitQuaternion<f64>,
        height: f64,
        flight_budget: f64,
        params: &RobotParams,
    ) -> Self {
        let clearance = Self::DEFAULT_CLEARANCE_LENGTH
            .clamp(params.tail_length_min, params.tail_length_max);
        let ramp = (params.tail_length_max - clearance) / Self::DEFAULT_RETRACT_SPEED;
        // Touchdown estimate for a level landing: the center of mass falls
        // until the feet reach the ground.
        let fall = (height + params.foot_offsets[0].z).max(0.0);
        let t_touchdown = (2.0 * fall / params.gravity).sqrt();
        let t_trigger = (t_touchdown - ramp).max(0.0);
        let retract_height = height - 0.5 * params.gravity * t_trigger * t_trigger;
        Self {
            goal: *goal,
            attitude_tolerance: 0.015,
            retract_height,
            flight_budget,
            retract_speed: Self::DEFAULT_RETRACT_SPEED,
            retract_kp: 5000.0,
            retract_kd: 150.0,
            retract_force_limit: 60.0,
            retract_gimbal_damping: 0.4,
            retract_backlash: 0.02,
            retract_clearance_length: clearance,
            tail_hold_kp: 4.0,
            tail_hold_kd: 2.0,
            stance_stiffness: 5000.0,
            stance_damping: 300.0,
            stance_lateral_damping: 250.0,
            stance_force_limit: 1500.0,
            contact_tolerance: 1e-3,
        }
    }

    pub const DEFAULT_RETRACT_SPEED: f64 = 2.0;
    pub const DEFAULT_CLEARANCE_LENGTH: f64 = 0.20;
}

/// True when the reorientation phase should hand over to retraction.
pub fn should_retract(t: f64, x: &SystemState, config: &PhaseConfig) -> bool {
    spatial::attitude_error(&config.goal, &x.quat) < config.attitude_tolerance
        || x.p.z < config.retract_height
        || t >= config.flight_budget
}

/// Commanded tail length `elapsed` seconds after retraction started: a ramp
/// from the latched start length down to the minimum at the configured
/// speed, then constant.
pub fn retraction_command(elapsed: f64, start_length: f64, config: &PhaseConfig) -> f64 {
    (start_length - config.retract_speed * elapsed.max(0.0)).max(0.0)
}

/// Retraction command clamped to the telescoping joint range.
pub fn retraction_command_clamped(
    elapsed: f64,
    start_length: f64,
    params: &RobotParams,
    config: &PhaseConfig,
) -> f64 {
    retraction_command(elapsed, start_length, config)
        .clamp(params.tail_length_min, params.tail_length_max)
}

/// Advance the phase machine one tick.
///
/// `any_contact` is the geometric foot-contact flag for the current state.
/// Contact always wins: touching down during reorientation jumps straight
/// to stance and records the anomaly.
pub fn step_phase(
    mut state: PhaseState,
    t: f64,
    x: &SystemState,
    any_contact: bool,
    config: &PhaseConfig,
) -> PhaseState {
    match state.phase {
        Phase::FlightReorient => {
            if any_contact {
                state.phase = Phase::Stance;
                state.entered_at = t;
                state.retract_start_length = x.tail.z;
                state.early_touchdown = true;
            } else if should_retract(t, x, config) {
                state.phase = Phase::FlightRetract;
                state.entered_at = t;
                state.retract_start_length = x.tail.z;
            }
        }
        Phase::FlightRetract => {
            if any_contact {
                state.phase = Phase::Stance;
                state.entered_at = t;
            }
        }
        Phase::Stance => {}
    }
    state
}

/// Error raised when a tracking policy cannot be built from a solution.
#[derive(Debug, thiserror::Error)]
pub enum PolicyError {
    #[error("solution has no knots")]
    EmptySolution,
    #[error("solution and gain counts disagree")]
    MismatchedGains,
}

/// Time-varying tracking controller built from a planned solution:
/// feedforward torque plus planner feedback gains on the deviation from the
/// interpolated reference.
#[derive(Debug, Clone)]
pub struct TrackingPolicy {
    states: Vec<SystemState>,
    controls: Vec<Vector2<f64>>,
    gains: Vec<DMatrix<f64>>,
    dt: f64,
    torque_lo: f64,
    torque_hi: f64,
}

impl TrackingPolicy {
    pub fn new(solution: &Solution, params: &RobotParams) -> Result<Self, PolicyError> {
        if solution.controls.is_empty() || solution.states.len() != solution.controls.len() + 1 {
            return Err(PolicyError::EmptySolution);
        }
        if solution.gains.len() != solution.controls.len() {
            return Err(PolicyError::MismatchedGains);
        }
        Ok(Self {
            states: solution.states.clone(),
            controls: solution.controls.clone(),
            gains: solution.gains.clone(),
            dt: solution.dt,
            torque_lo: params.torque_min,
            torque_hi: params.torque_max,
        })
    }

    /// Duration covered by the reference trajectory (s).
    pub fn duration(&self) -> f64 {
        self.controls.len() as f64 * self.dt
    }

    /// Reference state at `t`, linearly interpolated between knots and
    /// clamped to the terminal state beyond the horizon.
    pub fn reference(&self, t: f64) -> SystemState {
        let n = self.controls.len();
        let s = (t / self.dt).max(0.0);
        let k = (s.floor() as usize).min(n - 1);
        let alpha = (s - k as f64).clamp(0.0, 1.0);
        if alpha == 0.0 {
            return self.states[k].clone();
        }
        let step = self.states[k].tangent_to(&self.states[k + 1], NT_PLAN);
        self.states[k].apply_tangent(&(alpha * step), NT_PLAN)
    }

    /// Gimbal torques at `(t, x)`: feedforward plus gain feedback on the
    /// tangent deviation from the reference, clamped to the torque box.
    /// The flag is true when `t` ran past the planned horizon and the
    /// terminal reference was used.
    pub fn control(&self, t: f64, x: &SystemState) -> (Vector2<f64>, bool) {
        let n = self.controls.len();
        let k = ((t / self.dt).floor() as isize).clamp(0, n as isize - 1) as usize;
        let past_end = t >= self.duration();
        let x_ref = self.reference(t);
        // Feedforward is zero-order-hold; past the horizon the plan has
        // stopped, so only feedback acts.
        let u_ff = if past_end {
            Vector2::zeros()
        } else {
            self.controls[k]
        };
        let dx = x_ref.tangent_to(x, NT_PLAN);
        let du = &self.gains[k] * dx;
        let tau = Vector2::new(
            (u_ff[0] + du[0]).clamp(self.torque_lo, self.torque_hi),
            (u_ff[1] + du[1]).clamp(self.torque_lo, self.torque_hi),
        );
        (tau, past_end)
    }

    /// Tracking control for the reel-in phase: same feedforward and gains
    /// as [`Self::control`], but the reference's gimbal pose and rate are
    /// blended toward center by an amount that grows as the tail shortens.
    /// Swinging a long tail home would trade the attitude the maneuver
    /// just bought for gimbal tidiness — the momentum exchange scales with
    /// the tail's moment of inertia — while a short tail swings home almost
    /// for free. The blend uses that same inertia ratio. The flag is true
    /// past the planned horizon.
    pub fn landing_control(
        &self,
        t: f64,
        x: &SystemState,
        tail_length_min: f64,
    ) -> (Vector2<f64>, bool) {
        let n = self.controls.len();
        let k = ((t / self.dt).floor() as isize).clamp(0, n as isize - 1) as usize;
        let past_end = t >= self.duration();
        let u_ff = if past_end {
            Vector2::zeros()
        } else {
            self.controls[k]
        };
        let mut target = self.reference(t);
        let l = x.tail.z.max(tail_length_min);
        let hold = 1.0 - (tail_length_min / l).powi(3);
        target.tail.x *= hold;
        target.tail.y *= hold;
        target.tail.z = x.tail.z;
        target.tail_rate.x *= hold;
        target.tail_rate.y *= hold;
        let dx = target.tangent_to(x, NT_PLAN);
        let du = &self.gains[k] * dx;
        let tau = Vector2::new(
            (u_ff[0] + du[0]).clamp(self.torque_lo, self.torque_hi),
            (u_ff[1] + du[1]).clamp(self.torque_lo, self.torque_hi),
        );
        (tau, past_end)
    }

    /// Feedforward torque alone (for ablation runs), clamped to the box.
    pub fn feedforward(&self, t: f64) -> Vector2<f64> {
        let n = self.controls.len();
        if t >= self.duration() {
            return Vector2::zeros();
        }
        let k = ((t / self.dt).floor() as isize).clamp(0, n as isize - 1) as usize;
        Vector2::new(
            self.controls[k][0].clamp(self.torque_lo, self.torque_hi),
            self.controls[k][1].clamp(self.torque_lo, self.torque_hi),
        )
    }
}

/// Telescoping servo force toward `cmd` with command rate `cmd_rate`,
/// saturated at the configured limit. The saturation is what makes fast
/// swings stall the reel-in: beyond the limit the servo cannot fight the
/// centrifugal load.
pub fn retraction_force(x: &SystemState, cmd: f64, cmd_rate: f64, config: &PhaseConfig) -> f64 {
    let f = config.retract_kp * (cmd - x.tail.z) + config.retract_kd * (cmd_rate - x.tail_rate.z);
    f.clamp(-config.retract_force_limit, config.retract_force_limit)
}

/// Gimbal hold torques toward the straight-back rest pose, used in stance.
pub fn tail_hold_torques(x: &SystemState, params: &RobotParams, config: &PhaseConfig) -> Vector2<f64> {
    let tau = Vector2::new(
        -config.tail_hold_kp * x.tail.x - config.tail_hold_kd * x.tail_rate.x,
        -config.tail_hold_kp * x.tail.y - config.tail_hold_kd * x.tail_rate.y,
    );
    Vector2::new(
        tau[0].clamp(params.torque_min, params.torque_max),
        tau[1].clamp(params.torque_min, params.torque_max),
    )
}

/// One virtual leg in stance: the foot is anchored where it first touched
/// and the leg acts as a spring-damper strut from the hip to that anchor.
#[derive(Debug, Clone, Copy)]
pub struct LegAnchor {
    /// World-frame contact point (z = 0).
    pub point: Vector3<f64>,
    /// Time the foot first touched (s).
    pub touched_at: f64,
}

/// Per-leg stance forces, indexed like the feet: `Some((hip offset from
/// the body center of mass, body frame; force, world frame))` for anchored
/// legs, `None` otherwise.
///
/// Each strut regulates its length to the leg rest length and damps both
/// its extension rate and the body rotation felt at the hip. Tangential
/// force is kept inside the friction cone and the total inside the
/// configured bound.
pub fn stance_leg_forces(
    model: &TailedBodyModel,
    x: &SystemState,
    anchors: &[Option<LegAnchor>; 4],
    friction: f64,
    config: &PhaseConfig,
) -> [Option<(Vector3<f64>, Vector3<f64>)>; 4] {
    let params = model.params();
    let body_pos = model.body_position(x);
    let body_vel = model.body_velocity(x);
    let rot = x.quat;
    std::array::from_fn(|i| {
        let anchor = anchors[i]?;
        // Hip: the top of the leg, directly above the foot offset.
        let r_hip = Vector3::new(params.foot_offsets[i].x, params.foot_offsets[i].y, 0.0);
        let hip = body_pos + rot * r_hip;
        let hip_vel = body_vel + rot * x.omega.cross(&r_hip);
        let strut = hip - anchor.point;
        let len = strut.norm();
        if len < 1e-9 {
            return None;
        }
        let axis = strut / len;
        let rate = axis.dot(&hip_vel);
        let spring = config.stance_stiffness * (params.leg_rest_length - len)
            - config.stance_damping * rate;
        let mut force = spring.max(0.0) * axis;
        // Only a loaded strut grips the ground; damp the sideways hip
        // motion it resists.
        if spring > 0.0 {
            let lateral_vel = hip_vel - rate * axis;
            force -= config.stance_lateral_damping * lateral_vel;
        }
        // Friction cone on the ground reaction.
        let normal = force.z.max(0.0);
        let mut tangential = Vector3::new(force.x, force.y, 0.0);
        let cap = friction * normal;
        if tangential.norm() > cap {
            tangential = tangential.normalize() * cap;
        }
        force = Vector3::new(tangential.x, tangential.y, normal);
        if force.norm() > config.stance_force_limit {
            force = force.normalize() * config.stance_force_limit;
        }
        Some((r_hip, force))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn config() -> PhaseConfig {
        PhaseConfig::for_drop(
            &UnitQuaternion::identity(),
            1.85,
            0.4,
            &RobotParams::tailed_a1(),
        )
    }

    #[test]
    fn retraction_ramp_hits_minimum_on_schedule() {
        let params = RobotParams::tailed_a1();
        let cfg = config();
        assert_abs_diff_eq!(
            retraction_command_clamped(0.0, 0.49, &params, &cfg),
            0.49,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            retraction_command_clamped(0.1, 0.49, &params, &cfg),
            0.29,
            epsilon = 1e-12
        );
        // Full travel at 2 m/s takes (0.49 - 0.12) / 2 = 0.185 s.
        assert_abs_diff_eq!(
            retraction_command_clamped(0.185, 0.49, &params, &cfg),
            0.12,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            retraction_command_clamped(0.5, 0.49, &params, &cfg),
            0.12,
            epsilon = 1e-12
        );
    }

    #[test]
    fn retract_triggers_on_attitude_height_or_budget() {
        let cfg = config();
        let mut x = SystemState::at_rest(1.5, UnitQuaternion::identity(), 0.49);
        // At the goal: attitude trigger.
        assert!(should_retract(0.1, &x, &cfg));
        // Tilted and high and early: no trigger.
        x.quat = spatial::quat_from_euler(&spatial::EulerYpr::from_degrees(0.0, 40.0, 0.0));
        assert!(!should_retract(0.1, &x, &cfg));
        // Below the trigger height.
        x.p.z = cfg.retract_height - 0.01;
        assert!(should_retract(0.1, &x, &cfg));
        // Budget exhausted.
        x.p.z = cfg.retract_height + 0.5;
        assert!(should_retract(cfg.flight_budget, &x, &cfg));
    }

    #[test]
    fn phases_only_move_forward() {
        let cfg = config();
        let x = SystemState::at_rest(1.5, UnitQuaternion::identity(), 0.49);
        let s0 = PhaseState::new();
        // Attitude already at goal: reorient hands over to retract.
        let s1 = step_phase(s0, 0.05, &x, false, &cfg);
        assert_eq!(s1.phase, Phase::FlightRetract);
        assert_abs_diff_eq!(s1.retract_start_length, 0.49, epsilon = 1e-12);
        // Contact moves retract to stance; stance is absorbing.
        let s2 = step_phase(s1, 0.3, &x, true, &cfg);
        assert_eq!(s2.phase, Phase::Stance);
        let s3 = step_phase(s2.clone(), 0.4, &x, false, &cfg);
        assert_eq!(s3.phase, Phase::Stance);
        assert!(!s3.early_touchdown);
    }

    #[test]
    fn contact_during_reorient_is_flagged_early() {
        let cfg = config();
        let mut x = SystemState::at_rest(1.5, UnitQuaternion::identity(), 0.49);
        x.quat = spatial::quat_from_euler(&spatial::EulerYpr::from_degrees(0.0, 40.0, 0.0));
        let s = step_phase(PhaseState::new(), 0.1, &x, true, &cfg);
        assert_eq!(s.phase, Phase::Stance);
        assert!(s.early_touchdown);
    }

    #[test]
    fn level_rest_stance_supports_the_weight() {
        let params = RobotParams::tailed_a1();
        let model = TailedBodyModel::simulation(params.clone()).unwrap();
        let cfg = config();
        // Body level with the tail retracted and centered, shifted so the
        // feet sit exactly on the ground (legs at rest length).
        let mut x = SystemState::at_rest(
            params.leg_rest_length,
            UnitQuaternion::identity(),
            params.tail_length_min,
        );
        x.p.z -= model.foot_position(&x, 0).z;
        let anchors: [Option<LegAnchor>; 4] = std::array::from_fn(|i| {
            let p = model.foot_position(&x, i);
            Some(LegAnchor {
                point: Vector3::new(p.x, p.y, 0.0),
                touched_at: 0.0,
            })
        });
        // Equilibrium compression: push the body down until the springs
        // carry the weight, then total vertical force matches it.
        let weight = params.total_mass() * params.gravity;
        let drop = weight / (4.0 * cfg.stance_stiffness);
        let mut settled = x.clone();
        settled.p.z -= drop;
        let forces = stance_leg_forces(&model, &settled, &anchors, 0.8, &cfg);
        assert!(forces.iter().all(Option::is_some));
        let total: f64 = forces.iter().flatten().map(|(_, f)| f.z).sum();
        assert_abs_diff_eq!(total, weight, epsilon = weight * 1e-6);
    }

    #[test]
    fn stance_forces_respect_friction_and_bounds() {
        let params = RobotParams::tailed_a1();
        let model = TailedBodyModel::simulation(params.clone()).unwrap();
        let cfg = config();
        let mut x = SystemState::at_rest(
            params.leg_rest_length - 0.08,
            spatial::quat_from_euler(&spatial::EulerYpr::from_degrees(5.0, 8.0, -6.0)),
            params.tail_length_min,
        );
        x.v = Vector3::new(0.4, -0.3, -1.5);
        x.omega = Vector3::new(1.0, -2.0, 0.5);
        let anchors: [Option<LegAnchor>; 4] = std::array::from_fn(|i| {
            let p = model.foot_position(&x, i);
            Some(LegAnchor {
                point: Vector3::new(p.x + 0.02, p.y - 0.01, 0.0),
                touched_at: 0.0,
            })
        });
        let friction = 0.8;
        for (_, f) in stance_leg_forces(&model, &x, &anchors, friction, &cfg)
            .iter()
            .flatten()
        {
            assert!(f.norm() <= cfg.stance_force_limit + 1e-9);
            let tangential = Vector3::new(f.x, f.y, 0.0).norm();
            assert!(tangential <= friction * f.z.max(0.0) + 1e-9);
            assert!(f.z >= -1e-12, "legs cannot pull the body down");
        }
    }
}
