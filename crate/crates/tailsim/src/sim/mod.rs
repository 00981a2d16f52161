//! Fixed-rate drop simulation: fall, reorient, retract, land, score.
//!
//! The simulated plant is the three-actuator model (gimbal pitch/yaw
//! torques plus telescoping force); it may be perturbed relative to the
//! model the plan and controller were built from. Ground contact is a
//! penalty model evaluated inside every integrator stage, so contact
//! forces are continuous functions of state and runs are bit-for-bit
//! deterministic.

mod contact;
mod log;

pub use contact::ContactModel;
pub use log::{LandingVerdict, SimEvent, Tick, TrajectoryLog};

use nalgebra::{UnitQuaternion, Vector2, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::control::{
    retraction_command_clamped, retraction_force, stance_leg_forces, step_phase,
    tail_hold_torques, LegAnchor, Phase, PhaseConfig, PhaseState, PolicyError, TrackingPolicy,
};
use crate::integrator::rk4_step;
use crate::model::{
    DynamicsError, ExternalForces, ParamError, RobotParams, SystemState, TailedBodyModel,
};
use crate::spatial;
use crate::trajopt::{self, CostWeights, Solution, SolverSettings, TrajOptError};

/// Multiplicative perturbations applied to the simulated plant only; the
/// plan and the controller keep using the nominal model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelErrorSpec {
    pub tail_mass_scale: f64,
    pub body_mass_scale: f64,
    pub body_inertia_scale: f64,
}

impl Default for ModelErrorSpec {
    fn default() -> Self {
        Self {
            tail_mass_scale: 1.0,
            body_mass_scale: 1.0,
            body_inertia_scale: 1.0,
        }
    }
}

impl ModelErrorSpec {
    pub fn is_nominal(&self) -> bool {
        *self == Self::default()
    }

    /// Perturbed copy of `params`, re-validated.
    pub fn apply(&self, params: &RobotParams) -> Result<RobotParams, ParamError> {
        let mut p = params.clone();
        p.tail_mass *= self.tail_mass_scale;
        p.body_mass *= self.body_mass_scale;
        p.body_inertia *= self.body_inertia_scale;
        p.validate()?;
        Ok(p)
    }
}

/// One drop to simulate: release pose, goal, timing, plant perturbation,
/// and controller ablations.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    /// Release orientation as yaw/pitch/roll in degrees.
    pub initial_euler_deg: [f64; 3],
    /// Goal orientation as yaw/pitch/roll in degrees (level by default).
    pub goal_euler_deg: [f64; 3],
    /// Release height of the system center of mass (m).
    pub drop_height: f64,
    /// Release velocity of the center of mass (m/s, world frame).
    pub initial_velocity: [f64; 3],
    /// Release angular velocity (rad/s, body frame).
    pub initial_angular_velocity: [f64; 3],
    /// Reorientation time budget handed to the planner (s).
    pub flight_budget: f64,
    /// Planner knot spacing (s).
    pub plan_dt: f64,
    /// Simulation tick (s).
    pub sim_dt: f64,
    /// Wall-clock cap on simulated time (s).
    pub max_time: f64,
    /// Ground friction coefficient.
    pub friction: f64,
    /// Plant perturbation.
    pub model_error: ModelErrorSpec,
    /// Apply planner feedback gains (false = feedforward only).
    pub feedback: bool,
    /// Allow the retraction phase (false = tail stays out, ablation).
    pub retract: bool,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            initial_euler_deg: [0.0; 3],
            goal_euler_deg: [0.0; 3],
            drop_height: 1.85,
            initial_velocity: [0.0; 3],
            initial_angular_velocity: [0.0; 3],
            flight_budget: 0.4,
            plan_dt: 0.002,
            sim_dt: 0.001,
            max_time: 3.0,
            friction: 0.8,
            model_error: ModelErrorSpec::default(),
            feedback: true,
            retract: true,
        }
    }
}

impl Scenario {
    /// Drop released at rest from `height` with the given attitude.
    pub fn drop_from(yaw_deg: f64, pitch_deg: f64, roll_deg: f64, height: f64) -> Self {
        Self {
            initial_euler_deg: [yaw_deg, pitch_deg, roll_deg],
            drop_height: height,
            ..Self::default()
        }
    }

    pub fn initial_quat(&self) -> UnitQuaternion<f64> {
        spatial::quat_from_euler(&spatial::EulerYpr::from_degrees(
            self.initial_euler_deg[0],
            self.initial_euler_deg[1],
            self.initial_euler_deg[2],
        ))
    }

    pub fn goal_quat(&self) -> UnitQuaternion<f64> {
        spatial::quat_from_euler(&spatial::EulerYpr::from_degrees(
            self.goal_euler_deg[0],
            self.goal_euler_deg[1],
            self.goal_euler_deg[2],
        ))
    }

    /// Release state: tail fully extended and centered.
    pub fn initial_state(&self, params: &RobotParams) -> SystemState {
        let mut x =
            SystemState::at_rest(self.drop_height, self.initial_quat(), params.tail_length_max);
        x.v = Vector3::from_row_slice(&self.initial_velocity);
        x.omega = Vector3::from_row_slice(&self.initial_angular_velocity);
        x
    }

    /// Number of planner knots implied by the budget and knot spacing.
    pub fn plan_knots(&self) -> usize {
        ((self.flight_budget / self.plan_dt).round() as usize).max(2)
    }
}

/// Thresholds used to score a landing.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoringConfig {
    /// Roll/pitch error allowed at touchdown (degrees).
    pub max_touchdown_error_deg: f64,
    /// All four feet must touch within this window after touchdown (s).
    pub feet_down_window: f64,
    /// Angular rate below which the body counts as still (rad/s).
    pub settle_rate: f64,
    /// How long the body must stay still (s).
    pub settle_hold: f64,
    /// Non-foot penetration that counts as a ground strike (m).
    pub strike_tolerance: f64,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        Self {
            max_touchdown_error_deg: 10.0,
            feet_down_window: 0.3,
            settle_rate: 0.2,
            settle_hold: 0.5,
            strike_tolerance: 2e-3,
        }
    }
}

/// Everything produced by one simulated drop.
#[derive(Debug, Clone)]
pub struct DropReport {
    pub log: TrajectoryLog,
    pub verdict: LandingVerdict,
}

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid plant parameters: {0}")]
    Params(#[from] ParamError),
    #[error("tracking policy: {0}")]
    Policy(#[from] PolicyError),
    #[error("dynamics failed at t = {t:.4} s: {source}")]
    Dynamics { t: f64, source: DynamicsError },
    #[error("state diverged (non-finite) at t = {t:.4} s")]
    Diverged { t: f64 },
}

/// Bottom corners of the torso box, body frame, relative to the body
/// center of mass. Used both as penalty contact points and to score
/// non-foot ground strikes.
fn body_corner_offsets() -> [Vector3<f64>; 4] {
    let (hx, hy, hz) = (0.134, 0.097, 0.057);
    [
        Vector3::new(hx, hy, -hz),
        Vector3::new(hx, -hy, -hz),
        Vector3::new(-hx, hy, -hz),
        Vector3::new(-hx, -hy, -hz),
    ]
}

/// Hard-stop torques/forces keeping the tail joints inside their physical
/// range; always active in the plant, independent of the controller.
///
/// Stop stiffness and damping are capped relative to the reflected inertia
/// of each axis, which varies enormously: the gimbal yaw inertia collapses
/// toward the rotor inertia as the pitch angle nears 90 degrees. A stop
/// sized for the nominal inertia would ring such a light axis far above
/// the integration rate and blow the simulation up; capping keeps every
/// stop's natural frequency and decay rate resolvable at the fixed tick.
fn joint_stop_torques(x: &SystemState, params: &RobotParams) -> Vector3<f64> {
    const ANGLE_STOP_K: f64 = 2_500.0;
    const LIN_STOP_K: f64 = 2e5;
    /// Stiffness-to-inertia bound (1/s^2); sqrt of it times the 1 ms tick
    /// stays comfortably inside the integrator's stability region.
    const MAX_K_OVER_I: f64 = 1.5e6;
    let mu = params.body_mass * params.tail_mass / (params.body_mass + params.tail_mass);
    let rotor = params.gimbal_rotor_inertia;
    let l = x.tail.z;
    let cp = x.tail.x.cos();
    let inertia = [
        mu * l * l + rotor,           // gimbal pitch
        mu * l * l * cp * cp + rotor, // gimbal yaw
        mu,                           // telescoping joint
    ];
    let base_k = [ANGLE_STOP_K, ANGLE_STOP_K, LIN_STOP_K];
    let mut k = [0.0; 3];
    let mut c = [0.0; 3];
    for i in 0..3 {
        k[i] = base_k[i].min(MAX_K_OVER_I * inertia[i]);
        c[i] = (k[i] * inertia[i]).sqrt();
    }
    let pitch_stop = 85f64.to_radians();
    let yaw_stop = 120f64.to_radians();
    let mut tau = Vector3::zeros();
    for (axis, stop) in [(0usize, pitch_stop), (1usize, yaw_stop)] {
        let q = x.tail[axis];
        let qd = x.tail_rate[axis];
        if q > stop {
            tau[axis] += -k[axis] * (q - stop) - c[axis] * qd;
        } else if q < -stop {
            tau[axis] += -k[axis] * (q + stop) - c[axis] * qd;
        }
    }
    let ld = x.tail_rate.z;
    if l < params.tail_length_min {
        tau.z += k[2] * (params.tail_length_min - l) - c[2] * ld;
    } else if l > params.tail_length_max {
        tau.z += -k[2] * (l - params.tail_length_max) - c[2] * ld;
    }
    tau
}

/// External forces on the plant at one state, with the per-point breakdown
/// kept for logging.
struct ForceSnapshot {
    ext: ExternalForces,
    foot: [Vector3<f64>; 4],
    tail: Vector3<f64>,
}

fn assemble_external(
    plant: &TailedBodyModel,
    x: &SystemState,
    anchors: &[Option<LegAnchor>; 4],
    corners: &[Vector3<f64>; 4],
    contact: &ContactModel,
    phase_cfg: &PhaseConfig,
) -> ForceSnapshot {
    let mut ext = ExternalForces::none();
    let mut foot = [Vector3::zeros(); 4];
    let struts = stance_leg_forces(plant, x, anchors, contact.friction, phase_cfg);
    for i in 0..4 {
        match &struts[i] {
            Some((r_hip, f)) => {
                if f.norm() > 0.0 {
                    ext.body_points.push((*r_hip, *f));
                    foot[i] = *f;
                }
            }
            None => {
                // Unanchored feet still get plain penalty contact so brief
                // grazes in flight push back physically.
                let pos = plant.foot_position(x, i);
                let vel = plant.foot_velocity(x, i);
                let f = contact.point_force(&pos, &vel);
                if f.norm() > 0.0 {
                    ext.body_points.push((plant.params().foot_offsets[i], f));
                    foot[i] = f;
                }
            }
        }
    }
    let body_pos = plant.body_position(x);
    let body_vel = plant.body_velocity(x);
    for c in corners {
        let pos = body_pos + x.quat * c;
        let vel = body_vel + x.quat * x.omega.cross(c);
        let f = contact.point_force(&pos, &vel);
        if f.norm() > 0.0 {
            ext.body_points.push((*c, f));
        }
    }
    let tail_pos = plant.tail_tip_position(x);
    let tail_vel = plant.tail_tip_velocity(x);
    let tail_f = contact.point_force(&tail_pos, &tail_vel);
    if tail_f.norm() > 0.0 {
        ext.tail_point = Some(tail_f);
    }
    ForceSnapshot {
        ext,
        foot,
        tail: tail_f,
    }
}

/// Simulate one drop under the phased controller.
///
/// `params` is the nominal model the controller believes in; the plant is
/// built from it plus the scenario's perturbation. The run ends at
/// `max_time`, or earlier once the robot has visibly settled.
pub fn simulate(
    plan: &Solution,
    scenario: &Scenario,
    params: &RobotParams,
    phase_cfg: &PhaseConfig,
    contact: &ContactModel,
    scoring: &ScoringConfig,
) -> Result<DropReport, SimError> {
    let plant_params = scenario.model_error.apply(params)?;
    let plant = TailedBodyModel::simulation(plant_params)?;
    let policy = TrackingPolicy::new(plan, params)?;
    let goal = scenario.goal_quat();
    let corners = body_corner_offsets();

    // The no-retract ablation never satisfies the retraction trigger, so
    // the phase machine stays in reorientation until contact.
    let mut cfg = phase_cfg.clone();
    if !scenario.retract {
        cfg.attitude_tolerance = -1.0;
        cfg.retract_height = f64::NEG_INFINITY;
        cfg.flight_budget = f64::INFINITY;
    }

    let dt = scenario.sim_dt;
    let steps = (scenario.max_time / dt).round() as usize;
    let mut x = scenario.initial_state(params);
    let mut log = TrajectoryLog::new(dt);
    let mut phase = PhaseState::new();
    let mut anchors: [Option<LegAnchor>; 4] = [None; 4];
    let mut first_touch: [Option<f64>; 4] = [None; 4];
    let mut retract_started: Option<(f64, f64)> = None;
    let mut past_plan_noted = false;
    let mut settle_noted = false;
    let mut last_high_rate = 0.0f64;
    let mut max_foot_pen = 0.0f64;
    let mut max_body_pen = 0.0f64;
    let mut touchdown_tail_length = None;

    for step in 0..=steps {
        let t = step as f64 * dt;

        // Foot anchoring on the tick state: a foot that penetrates gets an
        // anchor at its contact point; an anchored leg whose strut has gone
        // slack (foot lifted) releases it again.
        let body_pos_tick = plant.body_position(&x);
        for i in 0..4 {
            match anchors[i] {
                None => {
                    let fp = plant.foot_position(&x, i);
                    if contact.in_contact(&fp) {
                        anchors[i] = Some(LegAnchor {
                            point: Vector3::new(fp.x, fp.y, 0.0),
                            touched_at: t,
                        });
                        if first_touch[i].is_none() {
                            first_touch[i] = Some(t);
                            log.note(t, format!("foot {i} touchdown"));
                        }
                    }
                }
                Some(anchor) => {
                    let r_hip = Vector3::new(
                        params.foot_offsets[i].x,
                        params.foot_offsets[i].y,
                        0.0,
                    );
                    let hip = body_pos_tick + x.quat * r_hip;
                    if (hip - anchor.point).norm() > params.leg_rest_length + 5e-3 {
                        anchors[i] = None;
                        log.note(t, format!("foot {i} lifted"));
                    }
                }
            }
        }
        let any_contact = anchors.iter().any(Option::is_some);
        if any_contact && touchdown_tail_length.is_none() {
            touchdown_tail_length = Some(x.tail.z);
        }

        // Phase machine.
        let before = phase.phase;
        phase = step_phase(phase, t, &x, any_contact, &cfg);
        if phase.phase != before {
            log.note(t, format!("phase {:?} -> {:?}", before, phase.phase));
            if phase.early_touchdown && before == Phase::FlightReorient {
                log.note(t, "touchdown before reorientation finished".to_string());
            }
            if phase.phase == Phase::FlightRetract {
                retract_started = Some((phase.entered_at, phase.retract_start_length));
            }
        }

        // Controls for this tick (zero-order hold).
        let flight_gimbal = |t: f64, x: &SystemState| -> (Vector2<f64>, bool) {
            if scenario.feedback {
                policy.control(t, x)
            } else {
                (policy.feedforward(t), t >= policy.duration())
            }
        };
        let ramp = |t0: f64, l0: f64| {
            let raw = retraction_command_clamped(t - t0, l0, params, &cfg);
            // Winch anti-windup: under stall the command trails just below
            // the measured length instead of running ahead.
            let cmd = raw.max((x.tail.z - cfg.retract_backlash).min(params.tail_length_max));
            // The rate command stays at reel speed while the ramp runs so a
            // stalled servo keeps pulling inward at full force instead of
            // braking whatever reel-in motion it still has.
            let rate = if raw > params.tail_length_min {
                -cfg.retract_speed
            } else {
                0.0
            };
            (cmd, rate)
        };
        let (gimbal, length_command, command_rate) = match phase.phase {
            Phase::FlightReorient => {
                let (g, past) = flight_gimbal(t, &x);
                if past && !past_plan_noted {
                    log.note(t, "tracking past the planned horizon".to_string());
                    past_plan_noted = true;
                }
                (g, params.tail_length_max, 0.0)
            }
            Phase::FlightRetract => {
                let (t0, l0) = retract_started.expect("retract phase without start marker");
                let (cmd, rate) = ramp(t0, l0);
                // Track the plan with the reference gimbal pose blended
                // toward center as the tail shortens: the feedforward still
                // finishes the maneuver, while the feedback folds the tail
                // home for touchdown instead of parking it wherever the
                // plan left off.
                let mut g = if scenario.feedback {
                    let (g, past) = policy.landing_control(t, &x, params.tail_length_min);
                    if past && !past_plan_noted {
                        log.note(t, "tracking past the planned horizon".to_string());
                        past_plan_noted = true;
                    }
                    g
                } else {
                    Vector2::zeros()
                };
                // Reeling the tail in amplifies its swing rates; extra
                // viscous damping keeps the gimbal from winding up.
                g.x = (g.x - cfg.retract_gimbal_damping * x.tail_rate.x)
                    .clamp(params.torque_min, params.torque_max);
                g.y = (g.y - cfg.retract_gimbal_damping * x.tail_rate.y)
                    .clamp(params.torque_min, params.torque_max);
                (g, cmd, rate)
            }
            Phase::Stance => {
                let g = tail_hold_torques(&x, params, &cfg);
                let (cmd, rate) = match retract_started {
                    // Retraction keeps running through touchdown.
                    Some((t0, l0)) => ramp(t0, l0),
                    None => (
                        phase
                            .retract_start_length
                            .clamp(params.tail_length_min, params.tail_length_max),
                        0.0,
                    ),
                };
                (g, cmd, rate)
            }
        };
        let prismatic = retraction_force(&x, length_command, command_rate, &cfg);
        let tau_cmd = [gimbal.x, gimbal.y, prismatic];

        // Log the tick with forces evaluated at the tick state. Penetration
        // is only meaningful for penalty-contact (unanchored) feet: once a
        // leg is anchored its compliance comes from the strut, and the rigid
        // flight-geometry foot point is inside the compressed leg.
        let snap = assemble_external(&plant, &x, &anchors, &corners, contact, &cfg);
        for i in 0..4 {
            if anchors[i].is_none() {
                max_foot_pen = max_foot_pen.max(-plant.foot_position(&x, i).z);
            }
        }
        let body_pos = plant.body_position(&x);
        for c in &corners {
            max_body_pen = max_body_pen.max(-(body_pos + x.quat * c).z);
        }
        max_body_pen = max_body_pen.max(-plant.tail_tip_position(&x).z);
        log.ticks.push(Tick {
            t,
            state: x.clone(),
            phase: phase.phase,
            gimbal_torque: gimbal,
            prismatic_force: prismatic,
            length_command,
            foot_forces: snap.foot,
            tail_force: snap.tail,
            attitude_error: spatial::attitude_error(&goal, &x.quat),
            tilt_error: spatial::tilt_error(&goal, &x.quat),
        });

        // Settle bookkeeping (reporting only: the run always covers the
        // full window so late failures, like an extended tail drooping
        // to the ground, still show up).
        if x.omega.norm() >= scoring.settle_rate {
            last_high_rate = t;
        }
        if !settle_noted
            && phase.phase == Phase::Stance
            && anchors.iter().all(Option::is_some)
            && t - last_high_rate >= scoring.settle_hold + 0.1
        {
            log.note(t, "settled".to_string());
            settle_noted = true;
        }
        if step == steps {
            break;
        }

        // Integrate one tick; contacts and joint stops are state-dependent
        // inside the stages, the commanded torques are held.
        let next = rk4_step(&x, dt, |xs| {
            let fb = assemble_external(&plant, xs, &anchors, &corners, contact, &cfg);
            let stops = joint_stop_torques(xs, plant.params());
            let tau = [
                tau_cmd[0] + stops.x,
                tau_cmd[1] + stops.y,
                tau_cmd[2] + stops.z,
            ];
            plant.forward_dynamics(xs, &tau, &fb.ext)
        })
        .map_err(|source| SimError::Dynamics { t, source })?;
        if !next.is_finite() {
            return Err(SimError::Diverged { t });
        }
        x = next;
    }

    let verdict = score_landing(
        &log,
        &goal,
        scoring,
        &first_touch,
        phase.early_touchdown,
        touchdown_tail_length,
        max_foot_pen,
        max_body_pen,
    );
    Ok(DropReport { log, verdict })
}

/// Score a finished run against the landing criteria: touchdown roll/pitch
/// inside the tolerance, all feet down quickly, a sustained still period,
/// and no non-foot ground strike.
#[allow(clippy::too_many_arguments)]
fn score_landing(
    log: &TrajectoryLog,
    goal: &UnitQuaternion<f64>,
    scoring: &ScoringConfig,
    first_touch: &[Option<f64>; 4],
    early_touchdown: bool,
    touchdown_tail_length: Option<f64>,
    max_foot_pen: f64,
    max_body_pen: f64,
) -> LandingVerdict {
    let mut reasons = Vec::new();

    let touch_times: Vec<f64> = first_touch.iter().flatten().copied().collect();
    let touchdown_time = touch_times.iter().cloned().fold(f64::INFINITY, f64::min);
    let touchdown_time = touchdown_time.is_finite().then_some(touchdown_time);
    let feet_down_time = (touch_times.len() == 4)
        .then(|| touch_times.iter().cloned().fold(0.0f64, f64::max));

    // Attitude error at touchdown.
    let touchdown_error_deg = touchdown_time.and_then(|td| {
        let idx = ((td / log.dt).round() as usize).min(log.ticks.len().saturating_sub(1));
        let err = goal.inverse() * log.ticks[idx].state.quat;
        spatial::euler_from_quat(&err)
            .ok()
            .map(|e| [e.yaw.to_degrees(), e.pitch.to_degrees(), e.roll.to_degrees()])
    });

    match touchdown_time {
        None => reasons.push("never touched down".to_string()),
        Some(td) => {
            match touchdown_error_deg {
                Some([_, pitch, roll]) => {
                    if pitch.abs() > scoring.max_touchdown_error_deg
                        || roll.abs() > scoring.max_touchdown_error_deg
                    {
                        reasons.push(format!(
                            "touchdown attitude error {pitch:.1} deg pitch / {roll:.1} deg roll \
                             exceeds {:.1} deg",
                            scoring.max_touchdown_error_deg
                        ));
                    }
                }
                None => reasons.push("touchdown attitude near gimbal lock".to_string()),
            }
            match feet_down_time {
                Some(fd) if fd - td <= scoring.feet_down_window => {}
                _ => reasons.push(format!(
                    "not all feet down within {:.2} s of touchdown",
                    scoring.feet_down_window
                )),
            }
        }
    }

    // Sustained stillness at the end of the run.
    let settle_time = {
        let mut start = None;
        let mut run_start = log.duration();
        for tk in log.ticks.iter().rev() {
            if tk.state.omega.norm() < scoring.settle_rate {
                run_start = tk.t;
            } else {
                break;
            }
        }
        if log.duration() - run_start >= scoring.settle_hold {
            start = Some(run_start);
        }
        start
    };
    if settle_time.is_none() {
        reasons.push(format!(
            "never stayed below {:.2} rad/s for {:.2} s",
            scoring.settle_rate, scoring.settle_hold
        ));
    }

    if max_body_pen > scoring.strike_tolerance {
        reasons.push(format!(
            "body or tail struck the ground ({:.1} mm penetration)",
            max_body_pen * 1e3
        ));
    }

    LandingVerdict {
        success: reasons.is_empty(),
        failure_reasons: reasons,
        touchdown_time,
        touchdown_error_deg,
        feet_down_time,
        settle_time,
        touchdown_tail_length,
        max_foot_penetration: max_foot_pen,
        max_body_penetration: max_body_pen,
        early_touchdown,
    }
}

/// Plan summary carried in batch results.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanSummary {
    pub converged: bool,
    pub iterations: usize,
    pub terminal_attitude_error: f64,
    pub stationarity: f64,
    pub max_cone_violation: f64,
    pub warnings: Vec<String>,
}

impl From<&Solution> for PlanSummary {
    fn from(s: &Solution) -> Self {
        Self {
            converged: s.converged,
            iterations: s.iterations,
            terminal_attitude_error: s.terminal_attitude_error,
            stationarity: s.stationarity,
            max_cone_violation: s.max_cone_violation,
            warnings: s.warnings.clone(),
        }
    }
}

/// Plan and simulate one drop end to end.
#[derive(Debug)]
pub struct DropOutcome {
    pub plan: Solution,
    pub report: DropReport,
}

#[derive(Debug, thiserror::Error)]
pub enum DropError {
    #[error("planning failed: {0}")]
    Plan(#[from] TrajOptError),
    #[error("simulation failed: {0}")]
    Sim(#[from] SimError),
}

/// Plan the reorientation for `scenario` and simulate the drop with
/// default phase, contact, and scoring configurations.
///
/// A plan that stopped short of full convergence is still simulated (the
/// verdict tells whether it was good enough); hard planner errors abort.
pub fn run_drop(
    scenario: &Scenario,
    params: &RobotParams,
    weights: &CostWeights,
    settings: &SolverSettings,
) -> Result<DropOutcome, DropError> {
    let model = TailedBodyModel::planning(params.clone()).map_err(SimError::Params)?;
    let x0 = scenario.initial_state(params);
    let goal = scenario.goal_quat();
    let plan = trajopt::solve_reorientation(
        &model,
        &x0,
        &goal,
        scenario.plan_knots(),
        scenario.plan_dt,
        weights.clone(),
        settings,
        None,
    )?;
    let phase_cfg =
        PhaseConfig::for_drop(&goal, scenario.drop_height, scenario.flight_budget, params);
    let contact = ContactModel {
        friction: scenario.friction,
        ..ContactModel::default()
    };
    let report = simulate(
        &plan,
        scenario,
        params,
        &phase_cfg,
        &contact,
        &ScoringConfig::default(),
    )?;
    Ok(DropOutcome { plan, report })
}

/// One row of a batch sweep.
#[derive(Debug)]
pub struct BatchItem {
    pub index: usize,
    pub scenario: Scenario,
    pub plan: Option<PlanSummary>,
    pub verdict: Option<LandingVerdict>,
    pub error: Option<String>,
}

impl BatchItem {
    pub fn landed(&self) -> bool {
        self.verdict.as_ref().is_some_and(|v| v.success)
    }
}

/// Run a set of scenarios in parallel. Results come back in input order
/// and each run is independent and deterministic, so the outcome does not
/// depend on thread scheduling.
pub fn batch_run(
    scenarios: &[Scenario],
    params: &RobotParams,
    weights: &CostWeights,
    settings: &SolverSettings,
) -> Vec<BatchItem> {
    scenarios
        .par_iter()
        .enumerate()
        .map(|(index, scenario)| match run_drop(scenario, params, weights, settings) {
            Ok(outcome) => BatchItem {
                index,
                scenario: scenario.clone(),
                plan: Some(PlanSummary::from(&outcome.plan)),
                verdict: Some(outcome.report.verdict),
                error: None,
            },
            Err(e) => BatchItem {
                index,
                scenario: scenario.clone(),
                plan: None,
                verdict: None,
                error: Some(e.to_string()),
            },
        })
        .collect()
}

/// Cartesian yaw/pitch/roll grid of drop scenarios at one height.
pub fn grid_scenarios(angles_deg: &[f64], height: f64) -> Vec<Scenario> {
    let mut out = Vec::new();
    for &yaw in angles_deg {
        for &pitch in angles_deg {
            for &roll in angles_deg {
                out.push(Scenario::drop_from(yaw, pitch, roll, height));
            }
        }
    }
    out
}
