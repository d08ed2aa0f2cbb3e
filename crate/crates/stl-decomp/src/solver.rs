//! Log-barrier interior-point solver for the decomposition program.
//!
//! The program minimizes a smooth convex objective over rows `g_i(theta) >= 0`
//! that are affine or concave quadratic, so a textbook barrier method with
//! damped Newton centering converges without tuning. A phase-one pass
//! (minimize the common relaxation `s` over `g_i + s >= 0`) produces a
//! strictly feasible start or an infeasibility certificate.
//!
//! The solver is deterministic: no randomness, fixed iteration order, dense
//! Cholesky with an escalating diagonal shift for the rank-deficient
//! directions that rectangle-splitting introduces (the objective does not
//! depend on how a path splits its aggregate center between edges).

use thiserror::Error;

use crate::linalg::{cholesky_solve_regularized, dot, norm, Mat};
use crate::program::Program;

/// Margin required to treat a point as strictly feasible.
const STRICT_MARGIN: f64 = 1e-9;
/// Newton decrement threshold: stop centering when `lambda^2 / 2` drops below.
const NEWTON_DECREMENT: f64 = 1e-10;
/// Smallest line-search step before centering is declared stalled.
const MIN_STEP: f64 = 1e-18;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("initial point has {got} values, program has {expected} variables")]
    PointSize { expected: usize, got: usize },
    #[error("Newton system could not be factorized at barrier weight {t:.3e}")]
    LinearSolve { t: f64 },
    #[error("non-finite value encountered during solve")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// Duality gap below tolerance.
    Optimal,
    /// Strictly feasible point found but the gap target was not reached
    /// within the iteration budget.
    Feasible,
    /// Phase one certified that no strictly feasible point exists.
    Infeasible,
    /// Phase one ran out of iterations without a verdict.
    IterLimit,
}

impl SolveStatus {
    pub fn label(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Feasible => "feasible",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::IterLimit => "iteration_limit",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverParams {
    /// Duality gap target `m / t`.
    pub tol: f64,
    /// Initial barrier weight.
    pub t_init: f64,
    /// Barrier weight multiplier per outer stage.
    pub mu: f64,
    /// Newton iterations per centering stage.
    pub max_newton: usize,
    /// Outer barrier stages.
    pub max_outer: usize,
    /// Armijo sufficient-decrease coefficient.
    pub armijo: f64,
    /// Line-search step shrink factor.
    pub backtrack: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            tol: 1e-6,
            t_init: 1.0,
            mu: 5.0,
            max_newton: 50,
            max_outer: 60,
            armijo: 1e-4,
            backtrack: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub status: SolveStatus,
    pub theta: Vec<f64>,
    pub objective: f64,
    /// Smallest row margin at `theta`.
    pub min_margin: f64,
    /// Duality gap `m / t` at the final barrier stage.
    pub gap: f64,
    /// Norm of the scaled stationarity residual at the final point.
    pub kkt_residual: f64,
    pub newton_iters: usize,
    pub outer_iters: usize,
    /// Largest constraint violation when infeasible.
    pub max_violation: Option<f64>,
    /// Objective value after each outer stage (determinism probe).
    pub trace: Vec<f64>,
}

/// Common shape for the main program and its phase-one relaxation.
trait Model {
    fn num_vars(&self) -> usize;
    fn num_rows(&self) -> usize;
    fn objective(&self, x: &[f64]) -> f64;
    fn objective_grad(&self, x: &[f64], out: &mut [f64]);
    fn objective_hess_add(&self, x: &[f64], scale: f64, h: &mut Mat);
    fn row_value(&self, i: usize, x: &[f64]) -> f64;
    fn row_grad_add(&self, i: usize, x: &[f64], scale: f64, out: &mut [f64]);
    fn row_neg_hess_add(&self, i: usize, x: &[f64], scale: f64, h: &mut Mat);
}

impl Model for &Program {
    fn num_vars(&self) -> usize {
        Program::num_vars(self)
    }
    fn num_rows(&self) -> usize {
        self.rows().len()
    }
    fn objective(&self, x: &[f64]) -> f64 {
        Program::objective(self, x)
    }
    fn objective_grad(&self, x: &[f64], out: &mut [f64]) {
        Program::objective_grad(self, x, out)
    }
    fn objective_hess_add(&self, x: &[f64], scale: f64, h: &mut Mat) {
        Program::objective_hess_add(self, x, scale, h)
    }
    fn row_value(&self, i: usize, x: &[f64]) -> f64 {
        self.rows()[i].value(x)
    }
    fn row_grad_add(&self, i: usize, x: &[f64], scale: f64, out: &mut [f64]) {
        self.rows()[i].add_grad(x, scale, out)
    }
    fn row_neg_hess_add(&self, i: usize, _x: &[f64], scale: f64, h: &mut Mat) {
        self.rows()[i].add_neg_hess(scale, h)
    }
}

/// Phase-one relaxation: variables `(theta, s)`, rows `g_i(theta) + s`,
/// objective `s`.
struct PhaseOne<'a> {
    base: &'a Program,
}

impl Model for PhaseOne<'_> {
    fn num_vars(&self) -> usize {
        self.base.num_vars() + 1
    }
    fn num_rows(&self) -> usize {
        self.base.rows().len()
    }
    fn objective(&self, x: &[f64]) -> f64 {
        x[self.base.num_vars()]
    }
    fn objective_grad(&self, x: &[f64], out: &mut [f64]) {
        out[x.len() - 1] += 1.0;
    }
    fn objective_hess_add(&self, _x: &[f64], _scale: f64, _h: &mut Mat) {}
    fn row_value(&self, i: usize, x: &[f64]) -> f64 {
        let nv = self.base.num_vars();
        self.base.rows()[i].value(&x[..nv]) + x[nv]
    }
    fn row_grad_add(&self, i: usize, x: &[f64], scale: f64, out: &mut [f64]) {
        let nv = self.base.num_vars();
        self.base.rows()[i].add_grad(&x[..nv], scale, out);
        out[nv] += scale;
    }
    fn row_neg_hess_add(&self, i: usize, _x: &[f64], scale: f64, h: &mut Mat) {
        self.base.rows()[i].add_neg_hess(scale, h);
    }
}

struct Centering {
    newton_iters: usize,
}

/// Barrier potential `t * f(x) - sum log g_i(x)`; infinity outside the
/// strictly feasible set.
fn potential<M: Model>(model: &M, t: f64, x: &[f64]) -> f64 {
    let mut p = t * model.objective(x);
    for i in 0..model.num_rows() {
        let g = model.row_value(i, x);
        if g <= 0.0 {
            return f64::INFINITY;
        }
        p -= g.ln();
    }
    p
}

fn min_margin<M: Model>(model: &M, x: &[f64]) -> f64 {
    let mut m = f64::INFINITY;
    for i in 0..model.num_rows() {
        m = m.min(model.row_value(i, x));
    }
    m
}

/// Damped Newton minimization of the barrier potential at fixed `t`.
/// `stop_early` lets phase one bail out as soon as the underlying program
/// becomes strictly feasible.
fn center<M: Model>(
    model: &M,
    t: f64,
    x: &mut Vec<f64>,
    params: &SolverParams,
    mut stop_early: impl FnMut(&[f64]) -> bool,
) -> Result<Centering, SolverError> {
    let n = model.num_vars();
    let m = model.num_rows();
    let mut iters = 0;
    for _ in 0..params.max_newton {
        if stop_early(x) {
            break;
        }
        let mut grad = vec![0.0; n];
        model.objective_grad(x, &mut grad);
        for g in grad.iter_mut() {
            *g *= t;
        }
        let mut hess = Mat::zeros(n);
        model.objective_hess_add(x, t, &mut hess);
        let mut row_grad = vec![0.0; n];
        for i in 0..m {
            let gi = model.row_value(i, x);
            if !gi.is_finite() || gi <= 0.0 {
                return Err(SolverError::NonFinite);
            }
            model.row_grad_add(i, x, -1.0 / gi, &mut grad);
            row_grad.iter_mut().for_each(|v| *v = 0.0);
            model.row_grad_add(i, x, 1.0, &mut row_grad);
            let nz: Vec<usize> =
                (0..n).filter(|&j| row_grad[j] != 0.0).collect();
            let w = 1.0 / (gi * gi);
            for &a in &nz {
                for &b in &nz {
                    hess.add(a, b, w * row_grad[a] * row_grad[b]);
                }
            }
            model.row_neg_hess_add(i, x, 1.0 / gi, &mut hess);
        }
        let rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
        let step = cholesky_solve_regularized(&hess, &rhs)
            .ok_or(SolverError::LinearSolve { t })?;
        let decrement = -dot(&grad, &step);
        if !decrement.is_finite() {
            return Err(SolverError::NonFinite);
        }
        if decrement / 2.0 < NEWTON_DECREMENT {
            break;
        }
        // Backtracking line search with a strict-feasibility guard built
        // into the potential.
        let p0 = potential(model, t, x);
        let slope = dot(&grad, &step);
        let mut alpha = 1.0;
        let mut accepted = false;
        while alpha > MIN_STEP {
            let cand: Vec<f64> =
                x.iter().zip(&step).map(|(xi, si)| xi + alpha * si).collect();
            let p = potential(model, t, &cand);
            if p <= p0 + params.armijo * alpha * slope {
                *x = cand;
                accepted = true;
                break;
            }
            alpha *= params.backtrack;
        }
        iters += 1;
        if !accepted {
            break;
        }
    }
    Ok(Centering { newton_iters: iters })
}

/// Minimizes the program objective from `theta0`, running phase one first
/// when the start is not strictly feasible.
pub fn solve(
    program: &Program,
    theta0: &[f64],
    params: &SolverParams,
) -> Result<Solution, SolverError> {
    let n = program.num_vars();
    if theta0.len() != n {
        return Err(SolverError::PointSize { expected: n, got: theta0.len() });
    }
    if n == 0 {
        return Ok(Solution {
            status: SolveStatus::Optimal,
            theta: Vec::new(),
            objective: 0.0,
            min_margin: f64::INFINITY,
            gap: 0.0,
            kkt_residual: 0.0,
            newton_iters: 0,
            outer_iters: 0,
            max_violation: None,
            trace: Vec::new(),
        });
    }
    let m = program.rows().len();
    let mut newton_total = 0;
    let mut x = theta0.to_vec();
    if m == 0 {
        let objective = program.objective(&x);
        return Ok(Solution {
            status: SolveStatus::Feasible,
            theta: x,
            objective,
            min_margin: f64::INFINITY,
            gap: f64::INFINITY,
            kkt_residual: f64::NAN,
            newton_iters: 0,
            outer_iters: 0,
            max_violation: None,
            trace: Vec::new(),
        });
    }

    if min_margin(&program, &x) <= STRICT_MARGIN {
        match phase_one(program, &x, params, &mut newton_total)? {
            PhaseOneOutcome::Feasible(point) => x = point,
            PhaseOneOutcome::Infeasible { violation } => {
                return Ok(Solution {
                    status: SolveStatus::Infeasible,
                    objective: f64::NAN,
                    min_margin: -violation,
                    gap: f64::NAN,
                    kkt_residual: f64::NAN,
                    newton_iters: newton_total,
                    outer_iters: 0,
                    max_violation: Some(violation),
                    trace: Vec::new(),
                    theta: x,
                });
            }
            PhaseOneOutcome::Undecided => {
                return Ok(Solution {
                    status: SolveStatus::IterLimit,
                    objective: f64::NAN,
                    min_margin: min_margin(&program, &x),
                    gap: f64::NAN,
                    kkt_residual: f64::NAN,
                    newton_iters: newton_total,
                    outer_iters: 0,
                    max_violation: None,
                    trace: Vec::new(),
                    theta: x,
                });
            }
        }
    }

    let model = &program;
    let mut t = params.t_init;
    let mut gap = f64::INFINITY;
    let mut outer = 0;
    let mut trace = Vec::new();
    let mut reached_tol = false;
    for _ in 0..params.max_outer {
        let stage = center(model, t, &mut x, params, |_| false)?;
        newton_total += stage.newton_iters;
        outer += 1;
        trace.push(program.objective(&x));
        gap = m as f64 / t;
        if gap <= params.tol {
            reached_tol = true;
            break;
        }
        t *= params.mu;
    }

    let objective = program.objective(&x);
    let final_margin = min_margin(&program, &x);
    let kkt = kkt_residual(program, t, &x);
    Ok(Solution {
        status: if reached_tol { SolveStatus::Optimal } else { SolveStatus::Feasible },
        theta: x,
        objective,
        min_margin: final_margin,
        gap,
        kkt_residual: kkt,
        newton_iters: newton_total,
        outer_iters: outer,
        max_violation: None,
        trace,
    })
}

/// Scaled stationarity residual `| grad f - sum grad g_i / (t g_i) |`.
fn kkt_residual(program: &Program, t: f64, x: &[f64]) -> f64 {
    let n = program.num_vars();
    let mut r = vec![0.0; n];
    program.objective_grad(x, &mut r);
    for row in program.rows() {
        let g = row.value(x);
        if g > 0.0 {
            row.add_grad(x, -1.0 / (t * g), &mut r);
        }
    }
    norm(&r)
}

enum PhaseOneOutcome {
    Feasible(Vec<f64>),
    Infeasible { violation: f64 },
    Undecided,
}

fn phase_one(
    program: &Program,
    theta0: &[f64],
    params: &SolverParams,
    newton_total: &mut usize,
) -> Result<PhaseOneOutcome, SolverError> {
    let model = PhaseOne { base: program };
    let nv = program.num_vars();
    let base_margin = min_margin(&program, theta0);
    let mut x = theta0.to_vec();
    // Start with slack comparable to the violation scale: a slack of 1
    // against violations of 1e4 pins the worst row to the barrier wall and
    // stalls Newton.
    x.push(2.0 * (-base_margin).max(0.0) + 1.0);

    let m = model.num_rows() as f64;
    let mut t = params.t_init;
    for _ in 0..params.max_outer {
        let mut hit_feasible = false;
        let stage = center(&model, t, &mut x, params, |point| {
            if min_margin(&program, &point[..nv]) > STRICT_MARGIN {
                hit_feasible = true;
                return true;
            }
            false
        })?;
        *newton_total += stage.newton_iters;
        if hit_feasible || min_margin(&program, &x[..nv]) > STRICT_MARGIN {
            x.truncate(nv);
            return Ok(PhaseOneOutcome::Feasible(x));
        }
        if m / t <= params.tol {
            // Converged with s still nonnegative: infeasible.
            let violation = (-min_margin(&program, &x[..nv])).max(0.0);
            return Ok(PhaseOneOutcome::Infeasible { violation });
        }
        t *= params.mu;
    }
    Ok(PhaseOneOutcome::Undecided)
}
