//! Flight-phase reorientation as a shooting problem, plus the augmented
//! Lagrangian outer loop that enforces the tail workspace cone.
//!
//! Controls are the two gimbal torques; the telescoping joint is frozen at
//! its current length during planning. Torque box bounds enter through a
//! relaxed log barrier whose weight grows if a solution overshoots the box;
//! the workspace cone enters through multiplier terms updated between solver
//! stages.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3, UnitQuaternion, Vector2};
use serde::{Deserialize, Serialize};

use crate::model::{ExternalForces, SystemState, TailedBodyModel};
use crate::spatial;
use crate::trajopt::barrier::RelaxedLogBarrier;
use crate::trajopt::ddp::{self, DdpOptions, ShootingProblem, StageQuadratic};
use crate::trajopt::{Solution, SolverSettings, TrajOptError};

/// Weights of the reorientation objective. Running terms are integrated
/// (multiplied by the knot spacing); terminal terms are not.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct CostWeights {
    pub attitude: f64,
    /// Running weight on tilt. Pushes the leveling part of the maneuver
    /// toward the start of the horizon so that an early switch to tail
    /// retraction (forced by short flights) still happens from a nearly
    /// level posture.
    pub tilt: f64,
    pub angular_rate: f64,
    pub tail_rate: f64,
    /// Running weight pulling the gimbal toward its centered pose. Keeps the
    /// swing from wandering further off-axis than the maneuver needs.
    pub tail_pose: f64,
    pub torque: f64,
    pub terminal_attitude: f64,
    /// Extra terminal weight on tilt (deviation of the body z-axis from the
    /// goal's z-axis). With two torque inputs, three-axis reorientations
    /// that exhaust the tail workspace cannot always be completed exactly;
    /// this weight steers any unavoidable residual into yaw, which does not
    /// endanger the landing, instead of roll or pitch, which do.
    pub terminal_tilt: f64,
    pub terminal_angular_rate: f64,
    pub terminal_tail_rate: f64,
    /// Terminal weight pulling the gimbal back to its centered pose. A plan
    /// that ends with the tail folded along the body axis hands the landing
    /// controller a clean start: reeling in a centered tail is purely radial
    /// motion and exchanges no angular momentum with the body. Reorientation
    /// remains possible because cyclic gimbal loops produce net body rotation
    /// even when the tail returns to where it started.
    pub terminal_tail_pose: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self {
            attitude: 1.0,
            tilt: 25.0,
            angular_rate: 0.1,
            tail_rate: 0.01,
            tail_pose: 0.02,
            torque: 0.01,
            terminal_attitude: 500.0,
            terminal_tilt: 6000.0,
            terminal_angular_rate: 20.0,
            terminal_tail_rate: 0.5,
            terminal_tail_pose: 2.0,
        }
    }
}

/// Tangent-space slot offsets for the 2-joint planning state.
const PHI: usize = 3;
const TAIL: usize = 6;
const OMEGA: usize = 11;
const TAIL_RATE: usize = 14;
const NT: usize = 2;

pub struct ReorientationProblem {
    model: TailedBodyModel,
    x0: SystemState,
    goal: UnitQuaternion<f64>,
    n_knots: usize,
    dt: f64,
    weights: CostWeights,
    torque_lo: f64,
    torque_hi: f64,
    barrier: RelaxedLogBarrier,
    /// Cone multipliers, one per knot including the terminal state.
    lambda: Vec<f64>,
    rho: f64,
    fd_step: f64,
}

impl ReorientationProblem {
    pub fn new(
        model: &TailedBodyModel,
        x0: &SystemState,
        goal: &UnitQuaternion<f64>,
        n_knots: usize,
        dt: f64,
        weights: CostWeights,
        settings: &SolverSettings,
    ) -> Result<Self, TrajOptError> {
        if model.tail_dofs() != NT {
            return Err(TrajOptError::WrongModel);
        }
        if n_knots == 0 {
            return Err(TrajOptError::EmptyHorizon);
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(TrajOptError::BadTimeStep);
        }
        if !x0.is_finite() {
            return Err(TrajOptError::BadInitialState);
        }
        let lo = model.params().torque_min;
        let hi = model.params().torque_max;
        Ok(Self {
            model: model.clone(),
            x0: x0.clone(),
            goal: *goal,
            n_knots,
            dt,
            weights,
            torque_lo: lo,
            torque_hi: hi,
            barrier: RelaxedLogBarrier::new(
                settings.barrier_weight,
                settings.barrier_margin_fraction * (hi - lo),
                0.5 * (hi - lo),
            ),
            lambda: vec![0.0; n_knots + 1],
            rho: settings.al_penalty_init,
            fd_step: settings.fd_step,
        })
    }

    pub fn goal(&self) -> &UnitQuaternion<f64> {
        &self.goal
    }

    fn poisoned() -> SystemState {
        let mut x = SystemState::at_rest(0.0, UnitQuaternion::identity(), 0.3);
        x.p.x = f64::NAN;
        x
    }

    /// Augmented Lagrangian term of the cone constraint at knot `k`.
    fn cone_term(&self, k: usize, x: &SystemState) -> f64 {
        let (margin, _) = self.model.cone_margin(&x.tail);
        let s = (self.lambda[k] + self.rho * margin).max(0.0);
        (s * s - self.lambda[k] * self.lambda[k]) / (2.0 * self.rho)
    }

    /// Gradient and Gauss-Newton Hessian of the cone term in the two gimbal
    /// slots.
    fn cone_quadratic(&self, k: usize, x: &SystemState) -> (Vector2<f64>, Matrix2<f64>) {
        let (margin, grad) = self.model.cone_margin(&x.tail);
        let s = self.lambda[k] + self.rho * margin;
        if s > 0.0 {
            (s * grad, self.rho * grad * grad.transpose())
        } else {
            (Vector2::zeros(), Matrix2::zeros())
        }
    }

    fn barrier_cost(&self, u: &DVector<f64>) -> f64 {
        let mut c = 0.0;
        for j in 0..NT {
            c += self.barrier.value(u[j] - self.torque_lo);
            c += self.barrier.value(self.torque_hi - u[j]);
        }
        c
    }

    /// Objective without barrier and multiplier terms, for reporting.
    pub fn raw_objective(&self, xs: &[SystemState], us: &[DVector<f64>]) -> f64 {
        let w = &self.weights;
        let mut cost = 0.0;
        for (k, u) in us.iter().enumerate() {
            let x = &xs[k];
            let mut c = w.attitude * spatial::attitude_error(&self.goal, &x.quat);
            c += w.tilt * spatial::tilt_error(&self.goal, &x.quat);
            c += 0.5 * w.angular_rate * x.omega.norm_squared();
            c += 0.5 * w.tail_rate * x.tail_rate.xy().norm_squared();
            c += 0.5 * w.tail_pose * x.tail.xy().norm_squared();
            c += 0.5 * w.torque * u.norm_squared();
            cost += c * self.dt;
        }
        let xn = xs.last().unwrap();
        cost += w.terminal_attitude * spatial::attitude_error(&self.goal, &xn.quat);
        cost += w.terminal_tilt * spatial::tilt_error(&self.goal, &xn.quat);
        cost += 0.5 * w.terminal_angular_rate * xn.omega.norm_squared();
        cost += 0.5 * w.terminal_tail_rate * xn.tail_rate.xy().norm_squared();
        cost += 0.5 * w.terminal_tail_pose * xn.tail.xy().norm_squared();
        cost
    }

    /// Largest cone-margin violation over a trajectory.
    pub fn max_cone_violation(&self, xs: &[SystemState]) -> f64 {
        xs.iter()
            .map(|x| self.model.workspace_violation(&x.tail))
            .fold(0.0, f64::max)
    }

    /// Largest overshoot of the torque box over a control sequence.
    pub fn max_box_violation(&self, us: &[DVector<f64>]) -> f64 {
        us.iter()
            .flat_map(|u| u.iter())
            .map(|&t| (self.torque_lo - t).max(t - self.torque_hi).max(0.0))
            .fold(0.0, f64::max)
    }

    fn update_multipliers(&mut self, xs: &[SystemState]) {
        for (k, x) in xs.iter().enumerate() {
            let (margin, _) = self.model.cone_margin(&x.tail);
            self.lambda[k] = (self.lambda[k] + self.rho * margin).max(0.0);
        }
    }

    /// Scale-aware central-difference step for tangent direction `i`.
    fn state_step(&self, x: &SystemState, i: usize) -> f64 {
        let scale = match i {
            0..=2 => x.p[i].abs(),
            3..=5 => 1.0,
            6..=7 => x.tail[i - TAIL].abs(),
            8..=10 => x.v[i - 8].abs(),
            11..=13 => x.omega[i - OMEGA].abs(),
            _ => x.tail_rate[i - TAIL_RATE].abs(),
        };
        self.fd_step * scale.max(1.0)
    }
}

/// Clamp a symmetric 3x3 Hessian to its positive-semidefinite part; far
/// from the goal the exact attitude and tilt Hessians pick up negative
/// eigenvalues which would destabilize the backward pass.
fn psd_part(h: Matrix3<f64>) -> Matrix3<f64> {
    let eig = h.symmetric_eigen();
    let clamped = eig.eigenvalues.map(|v| v.max(0.0));
    &eig.eigenvectors * Matrix3::from_diagonal(&clamped) * eig.eigenvectors.transpose()
}

fn psd_attitude_hessian(goal: &UnitQuaternion<f64>, q: &UnitQuaternion<f64>) -> Matrix3<f64> {
    psd_part(spatial::attitude_error_hessian(goal, q))
}

impl ShootingProblem for ReorientationProblem {
    type State = SystemState;

    fn horizon(&self) -> usize {
        self.n_knots
    }

    fn tangent_dim(&self) -> usize {
        12 + 2 * NT
    }

    fn control_dim(&self) -> usize {
        NT
    }

    fn initial_state(&self) -> SystemState {
        self.x0.clone()
    }

    fn step(&self, _k: usize, x: &SystemState, u: &DVector<f64>) -> SystemState {
        let tau = [u[0], u[1]];
        crate::integrator::rk4_step(x, self.dt, |xs| {
            self.model.forward_dynamics(xs, &tau, &ExternalForces::none())
        })
        .unwrap_or_else(|_| Self::poisoned())
    }

    fn difference(&self, base: &SystemState, other: &SystemState) -> DVector<f64> {
        base.tangent_to(other, NT)
    }

    fn linearize(
        &self,
        k: usize,
        x: &SystemState,
        u: &DVector<f64>,
    ) -> (DMatrix<f64>, DMatrix<f64>) {
        let n = self.tangent_dim();
        let center = self.step(k, x, u);
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            let h = self.state_step(x, i);
            let mut dx = DVector::zeros(n);
            dx[i] = h;
            let fp = self.step(k, &x.apply_tangent(&dx, NT), u);
            dx[i] = -h;
            let fm = self.step(k, &x.apply_tangent(&dx, NT), u);
            let col = (self.difference(&center, &fp) - self.difference(&center, &fm))
                / (2.0 * h);
            a.set_column(i, &col);
        }
        let mut b = DMatrix::zeros(n, NT);
        for j in 0..NT {
            let h = self.fd_step * u[j].abs().max(1.0);
            let mut up = u.clone();
            up[j] += h;
            let fp = self.step(k, x, &up);
            up[j] -= 2.0 * h;
            let fm = self.step(k, x, &up);
            let col = (self.difference(&center, &fp) - self.difference(&center, &fm))
                / (2.0 * h);
            b.set_column(j, &col);
        }
        (a, b)
    }

    fn stage_cost(&self, k: usize, x: &SystemState, u: &DVector<f64>) -> f64 {
        let w = &self.weights;
        let mut c = w.attitude * spatial::attitude_error(&self.goal, &x.quat);
        c += w.tilt * spatial::tilt_error(&self.goal, &x.quat);
        c += 0.5 * w.angular_rate * x.omega.norm_squared();
        c += 0.5 * w.tail_rate * x.tail_rate.xy().norm_squared();
        c += 0.5 * w.tail_pose * x.tail.xy().norm_squared();
        c += 0.5 * w.torque * u.norm_squared();
        // Barrier and constraint terms act per knot, not per unit time, so
        // their strength does not dilute with finer discretizations.
        c * self.dt + self.barrier_cost(u) + self.cone_term(k, x)
    }

    fn terminal_cost(&self, x: &SystemState) -> f64 {
        let w = &self.weights;
        w.terminal_attitude * spatial::attitude_error(&self.goal, &x.quat)
            + w.terminal_tilt * spatial::tilt_error(&self.goal, &x.quat)
            + 0.5 * w.terminal_angular_rate * x.omega.norm_squared()
            + 0.5 * w.terminal_tail_rate * x.tail_rate.xy().norm_squared()
            + 0.5 * w.terminal_tail_pose * x.tail.xy().norm_squared()
            + self.cone_term(self.n_knots, x)
    }

    fn stage_quadratic(&self, k: usize, x: &SystemState, u: &DVector<f64>) -> StageQuadratic {
        let n = self.tangent_dim();
        let w = &self.weights;
        let dt = self.dt;
        let mut lx = DVector::zeros(n);
        let mut lxx = DMatrix::zeros(n, n);
        let mut lu = DVector::zeros(NT);
        let mut luu = DMatrix::zeros(NT, NT);

        let ge = spatial::attitude_error_gradient(&self.goal, &x.quat);
        let he = psd_attitude_hessian(&self.goal, &x.quat);
        let gt = spatial::tilt_error_gradient(&self.goal, &x.quat);
        let ht = psd_part(spatial::tilt_error_hessian(&self.goal, &x.quat));
        for i in 0..3 {
            lx[PHI + i] += (w.attitude * ge[i] + w.tilt * gt[i]) * dt;
            lx[OMEGA + i] += w.angular_rate * dt * x.omega[i];
            lxx[(OMEGA + i, OMEGA + i)] += w.angular_rate * dt;
            for j in 0..3 {
                lxx[(PHI + i, PHI + j)] += (w.attitude * he[(i, j)] + w.tilt * ht[(i, j)]) * dt;
            }
        }
        for i in 0..NT {
            lx[TAIL_RATE + i] += w.tail_rate * dt * x.tail_rate[i];
            lxx[(TAIL_RATE + i, TAIL_RATE + i)] += w.tail_rate * dt;
            lx[TAIL + i] += w.tail_pose * dt * x.tail[i];
            lxx[(TAIL + i, TAIL + i)] += w.tail_pose * dt;
            lu[i] += w.torque * dt * u[i];
            luu[(i, i)] += w.torque * dt;
            let (_, g_lo, h_lo) = self.barrier.eval(u[i] - self.torque_lo);
            let (_, g_hi, h_hi) = self.barrier.eval(self.torque_hi - u[i]);
            lu[i] += g_lo - g_hi;
            luu[(i, i)] += h_lo + h_hi;
        }
        let (cg, ch) = self.cone_quadratic(k, x);
        for i in 0..NT {
            lx[TAIL + i] += cg[i];
            for j in 0..NT {
                lxx[(TAIL + i, TAIL + j)] += ch[(i, j)];
            }
        }

        StageQuadratic {
            lx,
            lu,
            lxx,
            luu,
            lux: DMatrix::zeros(NT, n),
        }
    }

    fn terminal_quadratic(&self, x: &SystemState) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.tangent_dim();
        let w = &self.weights;
        let mut lx = DVector::zeros(n);
        let mut lxx = DMatrix::zeros(n, n);
        let ge = spatial::attitude_error_gradient(&self.goal, &x.quat);
        let he = psd_attitude_hessian(&self.goal, &x.quat);
        let gt = spatial::tilt_error_gradient(&self.goal, &x.quat);
        let ht = psd_part(spatial::tilt_error_hessian(&self.goal, &x.quat));
        for i in 0..3 {
            lx[PHI + i] += w.terminal_attitude * ge[i] + w.terminal_tilt * gt[i];
            lx[OMEGA + i] += w.terminal_angular_rate * x.omega[i];
            lxx[(OMEGA + i, OMEGA + i)] += w.terminal_angular_rate;
            for j in 0..3 {
                lxx[(PHI + i, PHI + j)] +=
                    w.terminal_attitude * he[(i, j)] + w.terminal_tilt * ht[(i, j)];
            }
        }
        for i in 0..NT {
            lx[TAIL_RATE + i] += w.terminal_tail_rate * x.tail_rate[i];
            lxx[(TAIL_RATE + i, TAIL_RATE + i)] += w.terminal_tail_rate;
            lx[TAIL + i] += w.terminal_tail_pose * x.tail[i];
            lxx[(TAIL + i, TAIL + i)] += w.terminal_tail_pose;
        }
        let (cg, ch) = self.cone_quadratic(self.n_knots, x);
        for i in 0..NT {
            lx[TAIL + i] += cg[i];
            for j in 0..NT {
                lxx[(TAIL + i, TAIL + j)] += ch[(i, j)];
            }
        }
        (lx, lxx)
    }

    fn state_ok(&self, x: &SystemState) -> bool {
        x.is_finite()
    }
}

/// One fully staged solve (inner solves plus multiplier updates) from a
/// given control seed.
fn run_staged(
    mut problem: ReorientationProblem,
    mut us: Vec<DVector<f64>>,
    settings: &SolverSettings,
) -> Solution {
    let goal = problem.goal;
    let dt = problem.dt;
    let mut warnings = Vec::new();
    let mut history = Vec::new();
    let mut boundaries = Vec::new();
    let mut total_iterations = 0;
    let mut converged = false;
    let mut stationarity = f64::INFINITY;
    let mut gains = Vec::new();
    let mut xs = Vec::new();
    let mut cost = f64::INFINITY;
    let mut prev_viol = f64::INFINITY;

    for stage in 0..settings.al_max_outer {
        let remaining = settings.max_iterations.saturating_sub(total_iterations);
        if remaining == 0 {
            break;
        }
        let opts = DdpOptions {
            max_iterations: remaining.min(settings.al_inner_iterations),
            cost_tolerance: settings.cost_tolerance,
            gradient_tolerance: settings.gradient_tolerance,
            initial_reg: settings.initial_reg,
            reg_increase: settings.reg_increase,
            reg_decrease: settings.reg_decrease,
            reg_floor: settings.reg_floor,
            reg_max: settings.reg_max,
            line_search_factor: settings.line_search_factor,
            line_search_min: settings.line_search_min,
            armijo: settings.armijo,
        };
        boundaries.push(history.len());
        let res = ddp::solve(&problem, us, &opts);
        history.extend_from_slice(&res.cost_history);
        total_iterations += res.iterations;
        us = res.controls;
        xs = res.states;
        gains = res.gains;
        stationarity = res.stationarity;
        cost = res.cost;

        let viol = problem.max_cone_violation(&xs);
        let box_viol = problem.max_box_violation(&us);
        if std::env::var("TAILSIM_TRACE").is_ok() {
            eprintln!(
                "stage {stage}: inner_conv={} iters={} viol={viol:.3e} box={box_viol:.3e} \
                 rho={:.1e} lam_max={:.3e} stat={:.2e}",
                res.converged,
                res.iterations,
                problem.rho,
                problem.lambda.iter().cloned().fold(0.0f64, f64::max),
                res.stationarity,
            );
        }
        if res.converged && viol <= settings.constraint_tolerance && box_viol <= 1e-8 {
            converged = true;
            break;
        }
        if viol > settings.constraint_tolerance {
            problem.update_multipliers(&xs);
            if viol > 0.5 * prev_viol {
                problem.rho =
                    (problem.rho * settings.al_penalty_growth).min(settings.al_penalty_max);
            }
            prev_viol = viol;
        }
        if box_viol > 1e-8 {
            problem.barrier.weight *= settings.barrier_growth;
            warnings.push(format!(
                "torque bound overshoot {box_viol:.2e}; barrier weight raised to {}",
                problem.barrier.weight
            ));
        }
    }

    let max_cone_violation = problem.max_cone_violation(&xs);
    let box_violation = problem.max_box_violation(&us);
    if box_violation > 1e-6 {
        warnings.push(format!(
            "final torques clamped; box overshoot was {box_violation:.2e}"
        ));
        converged = false;
    }
    let controls: Vec<Vector2<f64>> = us
        .iter()
        .map(|u| {
            Vector2::new(
                u[0].clamp(problem.torque_lo, problem.torque_hi),
                u[1].clamp(problem.torque_lo, problem.torque_hi),
            )
        })
        .collect();
    let objective = problem.raw_objective(&xs, &us);
    let terminal_attitude_error = spatial::attitude_error(&goal, &xs.last().unwrap().quat);

    Solution {
        states: xs,
        controls,
        gains,
        dt,
        goal,
        cost,
        objective,
        terminal_attitude_error,
        iterations: total_iterations,
        converged,
        stationarity,
        max_cone_violation,
        cost_history: history,
        stage_boundaries: boundaries,
        warnings,
    }
}

/// Deterministic control seeds: a zero seed plus gyration primitives of both
/// chiralities and one or two sweeps over the horizon. The swirling seeds
/// place the solver in multi-stroke basins that zero initialization never
/// reaches for large reorientations.
fn candidate_seeds(count: usize, n_knots: usize, dt: f64, amplitude: f64) -> Vec<Vec<DVector<f64>>> {
    let period = n_knots as f64 * dt;
    let mut seeds = vec![vec![DVector::zeros(2); n_knots]];
    let shapes: [(f64, f64); 4] = [(1.0, 1.0), (1.0, -1.0), (2.0, 1.0), (2.0, -1.0)];
    for (cycles, chirality) in shapes {
        if seeds.len() >= count.max(1) {
            break;
        }
        let seed = (0..n_knots)
            .map(|k| {
                let phase = 2.0 * std::f64::consts::PI * cycles * (k as f64 * dt) / period;
                DVector::from_vec(vec![
                    amplitude * phase.sin(),
                    amplitude * chirality * phase.cos(),
                ])
            })
            .collect();
        seeds.push(seed);
    }
    seeds.truncate(count.max(1));
    seeds
}

/// Ranking for multi-start: prefer converged and feasible, then terminal
/// accuracy.
fn seed_score(s: &Solution, tol: f64) -> f64 {
    let mut score = s.terminal_attitude_error;
    if !s.converged {
        score += 10.0;
    }
    score += 100.0 * (s.max_cone_violation - tol).max(0.0);
    score
}

/// Plan a flight-phase reorientation to `goal` from `x0`.
///
/// Each staged solve alternates inner minimization with multiplier and
/// penalty updates; without a warm start, several deterministic seeds are
/// tried and the best result kept. The returned history concatenates the
/// accepted costs of the winning seed's stages; `stage_boundaries` marks
/// where each stage begins.
#[allow(clippy::too_many_arguments)]
pub fn solve_reorientation(
    model: &TailedBodyModel,
    x0: &SystemState,
    goal: &UnitQuaternion<f64>,
    n_knots: usize,
    dt: f64,
    weights: CostWeights,
    settings: &SolverSettings,
    initial_controls: Option<Vec<Vector2<f64>>>,
) -> Result<Solution, TrajOptError> {
    let fresh_problem = || {
        ReorientationProblem::new(model, x0, goal, n_knots, dt, weights.clone(), settings)
    };
    let rollout_finite = |us: &[DVector<f64>]| -> bool {
        let problem = match fresh_problem() {
            Ok(p) => p,
            Err(_) => return false,
        };
        let mut x = problem.initial_state();
        for (k, u) in us.iter().enumerate() {
            x = problem.step(k, &x, u);
            if !x.is_finite() {
                return false;
            }
        }
        true
    };

    if let Some(guess) = initial_controls {
        if guess.len() != n_knots {
            return Err(TrajOptError::BadGuess {
                expected: n_knots,
                got: guess.len(),
            });
        }
        let us: Vec<DVector<f64>> = guess
            .iter()
            .map(|u| DVector::from_column_slice(u.as_slice()))
            .collect();
        if !rollout_finite(&us) {
            return Err(TrajOptError::UnstableGuess);
        }
        return Ok(run_staged(fresh_problem()?, us, settings));
    }

    let e0 = spatial::attitude_error(goal, &x0.quat);
    let half_turn = e0 > 2.0 - 1e-9;
    let amplitude = 0.4 * model.params().torque_max.min(-model.params().torque_min);
    let mut seeds = candidate_seeds(settings.multi_start_seeds, n_knots, dt, amplitude);
    if half_turn {
        // A half turn is a stationary saddle of the attitude error; the zero
        // seed cannot leave it, so nudge it.
        seeds[0] = vec![DVector::from_element(2, 1e-3); n_knots];
    }

    let mut best: Option<(f64, usize, Solution)> = None;
    let total = seeds.len();
    for (idx, seed) in seeds.into_iter().enumerate() {
        if !rollout_finite(&seed) {
            continue;
        }
        let mut solution = run_staged(fresh_problem()?, seed, settings);
        if half_turn && idx == 0 {
            solution.warnings.push(
                "initial attitude is a half turn from the goal; broke the symmetry \
                 with a small torque seed"
                    .to_string(),
            );
        }
        let score = seed_score(&solution, settings.constraint_tolerance);
        let early = solution.converged
            && solution.terminal_attitude_error <= settings.early_exit_error;
        let better = match &best {
            Some((best_score, _, _)) => score < *best_score,
            None => true,
        };
        if better {
            best = Some((score, idx, solution));
        }
        if early {
            break;
        }
    }

    let (_, winner, mut solution) = best.ok_or(TrajOptError::UnstableGuess)?;
    if winner != 0 {
        solution.warnings.push(format!(
            "multi-start: gyration seed {winner} of {total} won over the zero seed"
        ));
    }
    Ok(solution)
}
