//! Per-tick trajectory logs and landing verdicts.

use nalgebra::{Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::control::Phase;
use crate::model::SystemState;

/// One simulation tick.
#[derive(Debug, Clone)]
pub struct Tick {
    pub t: f64,
    pub state: SystemState,
    pub phase: Phase,
    /// Gimbal torques actually applied (N·m).
    pub gimbal_torque: Vector2<f64>,
    /// Telescoping servo force actually applied (N).
    pub prismatic_force: f64,
    /// Commanded tail length (m).
    pub length_command: f64,
    /// Ground reaction transmitted through each leg (world frame, N).
    pub foot_forces: [Vector3<f64>; 4],
    /// Ground reaction on the tail tip (world frame, N).
    pub tail_force: Vector3<f64>,
    /// Attitude error `1 - cos(angle)` against the goal.
    pub attitude_error: f64,
    /// Tilt part of the error (body z-axis against the goal z-axis).
    pub tilt_error: f64,
}

/// Timestamped note emitted by the simulator (phase changes, anomalies).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimEvent {
    pub t: f64,
    pub what: String,
}

/// Full record of one simulated drop.
#[derive(Debug, Clone)]
pub struct TrajectoryLog {
    /// Tick period (s).
    pub dt: f64,
    pub ticks: Vec<Tick>,
    pub events: Vec<SimEvent>,
}

impl TrajectoryLog {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            ticks: Vec::new(),
            events: Vec::new(),
        }
    }

    pub fn note(&mut self, t: f64, what: impl Into<String>) {
        self.events.push(SimEvent { t, what: what.into() });
    }

    pub fn duration(&self) -> f64 {
        self.ticks.last().map_or(0.0, |tk| tk.t)
    }

    /// Largest total vertical ground force over the log (N).
    pub fn peak_ground_force(&self) -> f64 {
        self.ticks
            .iter()
            .map(|tk| tk.foot_forces.iter().map(|f| f.z).sum::<f64>() + tk.tail_force.z)
            .fold(0.0, f64::max)
    }

    /// Touchdown detected from the vertical acceleration of the center of
    /// mass: the first tick whose acceleration magnitude exceeds
    /// `g_multiple` times gravity. A cross-check for the geometric
    /// detection; on a clean landing the two agree within a couple of
    /// ticks.
    pub fn touchdown_by_deceleration(&self, g_multiple: f64, gravity: f64) -> Option<f64> {
        let threshold = g_multiple * gravity;
        for pair in self.ticks.windows(2) {
            let dv = (pair[1].state.v - pair[0].state.v) / self.dt;
            // Remove free-fall gravity so flight reads near zero.
            let accel = (dv + Vector3::new(0.0, 0.0, gravity)).norm();
            if accel > threshold {
                return Some(pair[1].t);
            }
        }
        None
    }
}

/// Outcome of scoring a simulated landing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LandingVerdict {
    pub success: bool,
    /// Empty on success; each entry names one violated criterion.
    pub failure_reasons: Vec<String>,
    /// First foot contact (s).
    pub touchdown_time: Option<f64>,
    /// Attitude error against the goal at touchdown, as yaw/pitch/roll in
    /// degrees.
    pub touchdown_error_deg: Option<[f64; 3]>,
    /// Time by which all four feet had touched (s).
    pub feet_down_time: Option<f64>,
    /// Start of the sustained low-rotation window (s).
    pub settle_time: Option<f64>,
    /// Tail length at touchdown (m).
    pub touchdown_tail_length: Option<f64>,
    /// Worst foot penetration below the ground plane (m).
    pub max_foot_penetration: f64,
    /// Worst chassis (body corner) penetration (m).
    pub max_body_penetration: f64,
    /// Largest ground reaction on the tail tip (N). Any sustained value
    /// means the tail touched the ground; penetration depth alone would
    /// hide a tail resting on stiff contact.
    pub max_tail_contact_force: f64,
    /// Contact happened before reorientation handed over to retraction.
    pub early_touchdown: bool,
}

impl LandingVerdict {
    pub fn failed(reasons: Vec<String>) -> Self {
        Self {
            success: false,
            failure_reasons: reasons,
            touchdown_time: None,
            touchdown_error_deg: None,
            feet_down_time: None,
            settle_time: None,
            touchdown_tail_length: None,
            max_foot_penetration: 0.0,
            max_body_penetration: 0.0,
            max_tail_contact_force: 0.0,
            early_touchdown: false,
        }
    }
}
