//! Gauss-Newton differential dynamic programming over a generic shooting
//! problem.
//!
//! The engine is written against the [`ShootingProblem`] trait so the same
//! backward pass, regularization schedule and line search can be exercised on
//! small linear-quadratic problems (where the result must match a standalone
//! Riccati recursion) and on the full manifold-valued reorientation problem.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

/// Quadratic expansion of one stage cost around a trajectory point.
pub struct StageQuadratic {
    pub lx: DVector<f64>,
    pub lu: DVector<f64>,
    pub lxx: DMatrix<f64>,
    pub luu: DMatrix<f64>,
    /// Mixed term, control rows by state columns.
    pub lux: DMatrix<f64>,
}

/// Discrete-time optimal control problem with manifold states.
///
/// States live on a manifold with a fixed-dimension tangent space; the
/// `difference` chart maps nearby states to tangent coordinates. Costs and
/// dynamics may vary by knot index.
pub trait ShootingProblem: Sync {
    type State: Clone + Send + Sync;

    /// Number of controls (states number one more).
    fn horizon(&self) -> usize;
    fn tangent_dim(&self) -> usize;
    fn control_dim(&self) -> usize;
    fn initial_state(&self) -> Self::State;

    /// One discrete dynamics step.
    fn step(&self, k: usize, x: &Self::State, u: &DVector<f64>) -> Self::State;

    /// Tangent coordinates of `other` in the chart centered at `base`.
    fn difference(&self, base: &Self::State, other: &Self::State) -> DVector<f64>;

    /// Jacobians (A, B) of `difference(step(x, u) around nominal)` with
    /// respect to state tangent and control.
    fn linearize(&self, k: usize, x: &Self::State, u: &DVector<f64>)
        -> (DMatrix<f64>, DMatrix<f64>);

    fn stage_cost(&self, k: usize, x: &Self::State, u: &DVector<f64>) -> f64;
    fn terminal_cost(&self, x: &Self::State) -> f64;
    fn stage_quadratic(&self, k: usize, x: &Self::State, u: &DVector<f64>) -> StageQuadratic;
    fn terminal_quadratic(&self, x: &Self::State) -> (DVector<f64>, DMatrix<f64>);

    /// Whether a state is usable; rollouts through unusable states are
    /// rejected by the line search.
    fn state_ok(&self, _x: &Self::State) -> bool {
        true
    }
}

#[derive(Debug, Clone)]
pub struct DdpOptions {
    pub max_iterations: usize,
    pub cost_tolerance: f64,
    pub gradient_tolerance: f64,
    pub initial_reg: f64,
    pub reg_increase: f64,
    pub reg_decrease: f64,
    pub reg_floor: f64,
    pub reg_max: f64,
    pub line_search_factor: f64,
    pub line_search_min: f64,
    pub armijo: f64,
}

impl Default for DdpOptions {
    fn default() -> Self {
        Self {
            max_iterations: 200,
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
        }
    }
}

pub struct DdpResult<S> {
    pub states: Vec<S>,
    pub controls: Vec<DVector<f64>>,
    /// Feedback gains, control rows by state-tangent columns, one per knot.
    pub gains: Vec<DMatrix<f64>>,
    pub cost: f64,
    /// Accepted costs, starting with the initial trajectory cost.
    pub cost_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Max-norm of the control gradient at the returned trajectory.
    pub stationarity: f64,
    pub reg: f64,
}

struct BackwardPass {
    ff: Vec<DVector<f64>>,
    gains: Vec<DMatrix<f64>>,
    d1: f64,
    d2: f64,
    stationarity: f64,
}

fn rollout<P: ShootingProblem>(
    problem: &P,
    controls: &[DVector<f64>],
) -> (Vec<P::State>, f64) {
    let mut states = Vec::with_capacity(controls.len() + 1);
    states.push(problem.initial_state());
    let mut cost = 0.0;
    for (k, u) in controls.iter().enumerate() {
        cost += problem.stage_cost(k, &states[k], u);
        let next = problem.step(k, &states[k], u);
        if !problem.state_ok(&next) {
            return (states, f64::INFINITY);
        }
        states.push(next);
    }
    cost += problem.terminal_cost(states.last().unwrap());
    if !cost.is_finite() {
        cost = f64::INFINITY;
    }
    (states, cost)
}

/// Closed-loop rollout along the previous trajectory with step length alpha.
fn feedback_rollout<P: ShootingProblem>(
    problem: &P,
    xs: &[P::State],
    us: &[DVector<f64>],
    bp: &BackwardPass,
    alpha: f64,
) -> (Vec<P::State>, Vec<DVector<f64>>, f64) {
    let n = us.len();
    let mut new_xs = Vec::with_capacity(n + 1);
    let mut new_us = Vec::with_capacity(n);
    new_xs.push(problem.initial_state());
    let mut cost = 0.0;
    for k in 0..n {
        let dx = problem.difference(&xs[k], &new_xs[k]);
        let u = &us[k] + alpha * &bp.ff[k] + &bp.gains[k] * dx;
        cost += problem.stage_cost(k, &new_xs[k], &u);
        let next = problem.step(k, &new_xs[k], &u);
        new_us.push(u);
        if !problem.state_ok(&next) {
            return (new_xs, new_us, f64::INFINITY);
        }
        new_xs.push(next);
    }
    cost += problem.terminal_cost(new_xs.last().unwrap());
    if !cost.is_finite() {
        cost = f64::INFINITY;
    }
    (new_xs, new_us, cost)
}

/// Backward Riccati sweep. Returns None if the regularized Quu fails its
/// Cholesky factorization at any knot.
fn backward_pass(
    lin: &[(DMatrix<f64>, DMatrix<f64>)],
    quads: &[StageQuadratic],
    terminal: &(DVector<f64>, DMatrix<f64>),
    reg: f64,
) -> Option<BackwardPass> {
    let n = lin.len();
    let mut vx = terminal.0.clone();
    let mut vxx = terminal.1.clone();
    let mut ff = vec![DVector::zeros(0); n];
    let mut gains = vec![DMatrix::zeros(0, 0); n];
    let mut d1 = 0.0;
    let mut d2 = 0.0;
    let mut stationarity: f64 = 0.0;
    for k in (0..n).rev() {
        let (a, b) = &lin[k];
        let q = &quads[k];
        let qx = &q.lx + a.transpose() * &vx;
        let qu = &q.lu + b.transpose() * &vx;
        let vxx_a = &vxx * a;
        let qxx = &q.lxx + a.transpose() * &vxx_a;
        let qux = &q.lux + b.transpose() * &vxx_a;
        let mut quu = &q.luu + b.transpose() * &vxx * b;
        for i in 0..quu.nrows() {
            quu[(i, i)] += reg;
        }
        let chol = quu.clone().cholesky()?;
        let kff = -chol.solve(&qu);
        let kfb = -chol.solve(&qux);
        d1 += kff.dot(&qu);
        d2 += (kff.transpose() * &quu * &kff)[(0, 0)];
        stationarity = stationarity.max(qu.amax());

        vx = &qx + kfb.transpose() * (&quu * &kff + &qu) + qux.transpose() * &kff;
        vxx = &qxx
            + kfb.transpose() * &quu * &kfb
            + kfb.transpose() * &qux
            + qux.transpose() * &kfb;
        vxx = 0.5 * (&vxx + vxx.transpose());
        ff[k] = kff;
        gains[k] = kfb;
    }
    Some(BackwardPass {
        ff,
        gains,
        d1,
        d2,
        stationarity,
    })
}

/// Gradient of the open-loop cost with respect to the initial-state tangent,
/// controls held fixed. Plain adjoint recursion over the same linearization
/// the solver uses; serves as an independent consistency probe for cost and
/// dynamics derivatives.
pub fn open_loop_cost_gradient<P: ShootingProblem>(
    problem: &P,
    xs: &[P::State],
    us: &[DVector<f64>],
) -> DVector<f64> {
    let n = us.len();
    let (mut g, _) = problem.terminal_quadratic(&xs[n]);
    for k in (0..n).rev() {
        let (a, _) = problem.linearize(k, &xs[k], &us[k]);
        let q = problem.stage_quadratic(k, &xs[k], &us[k]);
        g = q.lx + a.transpose() * g;
    }
    g
}

pub fn solve<P: ShootingProblem>(
    problem: &P,
    init_controls: Vec<DVector<f64>>,
    opts: &DdpOptions,
) -> DdpResult<P::State> {
    assert_eq!(init_controls.len(), problem.horizon());
    let (mut xs, mut cost) = rollout(problem, &init_controls);
    let mut us = init_controls;
    assert!(
        cost.is_finite(),
        "initial trajectory has non-finite cost; bad initial guess"
    );
    let mut history = vec![cost];
    let mut reg = opts.initial_reg;
    let mut gains = Vec::new();
    let mut stationarity = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    let mut stalls = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        let lin: Vec<_> = (0..us.len())
            .into_par_iter()
            .map(|k| problem.linearize(k, &xs[k], &us[k]))
            .collect();
        let quads: Vec<_> = (0..us.len())
            .into_par_iter()
            .map(|k| problem.stage_quadratic(k, &xs[k], &us[k]))
            .collect();
        let terminal = problem.terminal_quadratic(xs.last().unwrap());

        let bp = loop {
            match backward_pass(&lin, &quads, &terminal, reg) {
                Some(bp) => break Some(bp),
                None => {
                    reg = (reg * opts.reg_increase).max(opts.reg_floor * 10.0);
                    if reg > opts.reg_max {
                        break None;
                    }
                }
            }
        };
        let Some(bp) = bp else {
            break;
        };
        gains = bp.gains.clone();
        stationarity = bp.stationarity;
        if stationarity < opts.gradient_tolerance {
            converged = true;
            break;
        }

        let mut alpha = 1.0;
        let mut accepted = false;
        while alpha >= opts.line_search_min {
            let (try_xs, try_us, try_cost) = feedback_rollout(problem, &xs, &us, &bp, alpha);
            let model_reduction = -(alpha * bp.d1 + 0.5 * alpha * alpha * bp.d2);
            let enough = if model_reduction > 0.0 {
                cost - try_cost >= opts.armijo * model_reduction
            } else {
                try_cost < cost
            };
            if try_cost.is_finite() && enough {
                let improvement = cost - try_cost;
                xs = try_xs;
                us = try_us;
                cost = try_cost;
                history.push(cost);
                accepted = true;
                reg = (reg * opts.reg_decrease).max(opts.reg_floor);
                if improvement < opts.cost_tolerance * cost.abs().max(1.0) {
                    stalls += 1;
                } else {
                    stalls = 0;
                }
                break;
            }
            alpha *= opts.line_search_factor;
        }
        if !accepted {
            reg *= opts.reg_increase;
            if reg > opts.reg_max {
                break;
            }
        } else if stalls >= 2 {
            // Progress is below the cost tolerance; whether this counts as
            // convergence is decided by the stationarity check below.
            break;
        }
    }

    // Report stationarity at the final accepted trajectory.
    if !us.is_empty() {
        let lin: Vec<_> = (0..us.len())
            .into_par_iter()
            .map(|k| problem.linearize(k, &xs[k], &us[k]))
            .collect();
        let quads: Vec<_> = (0..us.len())
            .into_par_iter()
            .map(|k| problem.stage_quadratic(k, &xs[k], &us[k]))
            .collect();
        let terminal = problem.terminal_quadratic(xs.last().unwrap());
        // Report gains and stationarity with minimal regularization so they
        // reflect the problem rather than the last trust-region state.
        let final_bp = backward_pass(&lin, &quads, &terminal, opts.reg_floor)
            .or_else(|| backward_pass(&lin, &quads, &terminal, reg.max(opts.reg_floor)));
        if let Some(bp) = final_bp {
            stationarity = bp.stationarity;
            gains = bp.gains;
            if stationarity < opts.gradient_tolerance {
                converged = true;
            }
        }
    }

    DdpResult {
        states: xs,
        controls: us,
        gains,
        cost,
        cost_history: history,
        iterations,
        converged,
        stationarity,
        reg,
    }
}
