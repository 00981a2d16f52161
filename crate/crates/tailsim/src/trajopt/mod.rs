//! Trajectory optimization for aerial reorientation.
//!
//! A Gauss-Newton differential-dynamic-programming engine ([`ddp`]) works on
//! any [`ddp::ShootingProblem`]; the flight-phase problem with torque box
//! bounds and the tail workspace cone lives in [`reorient`]. The top-level
//! entry point is [`solve_reorientation`].

pub mod barrier;
pub mod ddp;
pub mod reorient;

use nalgebra::{DMatrix, UnitQuaternion, Vector2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::SystemState;

pub use ddp::{open_loop_cost_gradient, DdpOptions, DdpResult, ShootingProblem, StageQuadratic};
pub use reorient::{solve_reorientation, CostWeights, ReorientationProblem};

#[derive(Debug, Error, PartialEq)]
pub enum TrajOptError {
    #[error("horizon must contain at least one knot")]
    EmptyHorizon,
    #[error("planning requires the 2-joint model with the telescoping length frozen")]
    WrongModel,
    #[error("knot spacing must be positive and finite")]
    BadTimeStep,
    #[error("initial state must be finite")]
    BadInitialState,
    #[error("warm-start control count {got} does not match horizon {expected}")]
    BadGuess { expected: usize, got: usize },
    #[error("initial guess produced a non-finite rollout")]
    UnstableGuess,
}

/// Solver schedule: iteration budget, tolerances, regularization, line
/// search, constraint handling.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    /// Total iteration budget across all constraint stages.
    pub max_iterations: usize,
    pub cost_tolerance: f64,
    /// Convergence threshold on the max-norm of the control gradient.
    pub gradient_tolerance: f64,
    pub initial_reg: f64,
    pub reg_increase: f64,
    pub reg_decrease: f64,
    pub reg_floor: f64,
    pub reg_max: f64,
    pub line_search_factor: f64,
    pub line_search_min: f64,
    pub armijo: f64,
    /// Initial quadratic penalty on cone violations.
    pub al_penalty_init: f64,
    pub al_penalty_growth: f64,
    pub al_penalty_max: f64,
    /// Maximum number of multiplier-update stages.
    pub al_max_outer: usize,
    /// Iteration cap per stage; early stages are solved inexactly so
    /// constraint terms engage before the unconstrained landscape is
    /// over-polished.
    pub al_inner_iterations: usize,
    pub constraint_tolerance: f64,
    pub barrier_weight: f64,
    /// Fraction of the torque range below which the barrier switches to its
    /// quadratic extension.
    pub barrier_margin_fraction: f64,
    pub barrier_growth: f64,
    /// Relative step for finite-difference linearization.
    pub fd_step: f64,
    /// Number of deterministic initial guesses tried when no warm start is
    /// given. Gyration-shaped seeds let the solver reach multi-stroke
    /// maneuvers that a zero seed cannot; values of 0 or 1 disable
    /// multi-start.
    pub multi_start_seeds: usize,
    /// Terminal attitude error below which the first converged seed is
    /// accepted without trying the rest.
    pub early_exit_error: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            max_iterations: 400,
            cost_tolerance: 1e-7,
            gradient_tolerance: 1e-4,
            initial_reg: 1e-6,
            reg_increase: 2.0,
            reg_decrease: 0.5,
            reg_floor: 1e-9,
            reg_max: 1e10,
            line_search_factor: 0.5,
            line_search_min: 1e-4,
            armijo: 1e-4,
            al_penalty_init: 1.0,
            al_penalty_growth: 10.0,
            al_penalty_max: 1e8,
            al_max_outer: 16,
            al_inner_iterations: 80,
            constraint_tolerance: 1e-4,
            barrier_weight: 0.05,
            barrier_margin_fraction: 0.1,
            barrier_growth: 10.0,
            fd_step: 1e-6,
            multi_start_seeds: 5,
            early_exit_error: 2e-3,
        }
    }
}

/// A planned reorientation: knot states, torque profile, and the feedback
/// gains of the final backward pass for closed-loop tracking.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Solution {
    pub states: Vec<SystemState>,
    /// Gimbal torques, one per knot interval, clamped to the box.
    pub controls: Vec<Vector2<f64>>,
    /// Feedback gains, torque rows by state-tangent columns.
    pub gains: Vec<DMatrix<f64>>,
    pub dt: f64,
    pub goal: UnitQuaternion<f64>,
    /// Final value of the staged objective (barrier and multiplier terms
    /// included).
    pub cost: f64,
    /// Objective without barrier and multiplier terms.
    pub objective: f64,
    pub terminal_attitude_error: f64,
    pub iterations: usize,
    pub converged: bool,
    pub stationarity: f64,
    pub max_cone_violation: f64,
    /// Accepted costs of every stage, concatenated.
    pub cost_history: Vec<f64>,
    /// Index into `cost_history` where each stage begins.
    pub stage_boundaries: Vec<usize>,
    pub warnings: Vec<String>,
}

impl Solution {
    /// Planned duration of the maneuver.
    pub fn duration(&self) -> f64 {
        self.dt * self.controls.len() as f64
    }

    /// Reference state at time `t`, nearest knot at or before `t`.
    pub fn knot_index(&self, t: f64) -> usize {
        if self.dt <= 0.0 {
            return 0;
        }
        ((t / self.dt).floor() as usize).min(self.controls.len().saturating_sub(1))
    }
}
