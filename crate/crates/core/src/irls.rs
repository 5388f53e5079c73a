//! IRLS with constant curvature weights.
//!
//! Each outer iteration linearizes the loss at the current point and replaces
//! the per-row curvature by its global bound `L = 3 / (4 delta)`. The
//! resulting penalized least-squares problem on the working response
//! `z = X b~ - u / L` is solved by cyclic coordinate descent; with constant
//! weights the coordinate denominators are all `lambda2 + L`.

use crate::data::StandardizedDesign;
use crate::error::Result;
use crate::fit::{
    check_inputs, column_gradient, fitting_penalty, gradient_factors, initial_point, intercept_gradient,
    kkt_violation, margins, objective, Engine, ModelFit, SolveOutcome, SolverOptions, WarmStart,
};
use crate::loss::LossSpec;
use crate::penalty::{soft_threshold, PenaltySpec, WeightedPenalty};

/// Inner coordinate-descent passes allowed per outer iteration.
pub const MAX_INNER_PASSES: usize = 100;

/// Linearization of the loss at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkingResponse {
    /// `z_i = X_i b~ - u_i / L`
    pub z: Vec<f64>,
    /// `u_i = y_i B'(y_i X_i b~)`
    pub u: Vec<f64>,
    /// Constant curvature weight `L`.
    pub phi: f64,
}

pub fn working_response(
    design: &StandardizedDesign,
    y: &[f64],
    loss: &LossSpec,
    beta0: f64,
    beta: &[f64],
) -> WorkingResponse {
    let eta = design.linear_predictor(beta0, beta);
    let phi = loss.big_l();
    let u: Vec<f64> = eta.iter().zip(y).map(|(&e, &yi)| yi * loss.grad(yi * e)).collect();
    let z = eta.iter().zip(&u).map(|(&e, &ui)| e - ui / phi).collect();
    WorkingResponse { z, u, phi }
}

pub fn irls_fit(
    design: &StandardizedDesign,
    y: &[f64],
    loss: &LossSpec,
    penalty: &PenaltySpec,
    opts: &SolverOptions,
    warm: Option<&WarmStart>,
) -> Result<ModelFit> {
    irls_fit_observed(design, y, loss, penalty, opts, warm, &mut |_, _| {})
}

/// As [`irls_fit`], calling `observer(beta0, beta)` after every outer iteration.
pub fn irls_fit_observed(
    design: &StandardizedDesign,
    y: &[f64],
    loss: &LossSpec,
    penalty: &PenaltySpec,
    opts: &SolverOptions,
    warm: Option<&WarmStart>,
    observer: &mut dyn FnMut(f64, &[f64]),
) -> Result<ModelFit> {
    check_inputs(design, y, opts, warm)?;
    let weighted = fitting_penalty(design, penalty)?;
    let out = irls_solve(design, y, loss, &weighted, opts, warm, observer);
    let objective = objective(design, y, loss, penalty, out.beta0, &out.beta);
    Ok(ModelFit {
        beta0: out.beta0,
        beta: out.beta,
        objective,
        passes: out.passes,
        converged: out.converged,
        delta: loss.delta(),
        penalty: penalty.clone(),
        engine: Engine::Irls,
    })
}

/// Inner solver state. `grad[i] = u_i + L X_i (b - b~) = -L (z_i - X_i b)`,
/// i.e. the scaled working residual, so coordinate gradients of the
/// least-squares model are plain column dot products.
struct Inner<'a> {
    design: &'a StandardizedDesign,
    penalty: &'a WeightedPenalty,
    phi: f64,
    beta0: f64,
    beta: Vec<f64>,
    grad: Vec<f64>,
}

impl Inner<'_> {
    fn sweep(&mut self, coords: impl Iterator<Item = usize>) -> f64 {
        let phi = self.phi;
        let omega = self.penalty.lambda2 + phi;
        let mut max_change: f64 = 0.0;
        for j in coords {
            let col = self.design.column(j);
            let z = -column_gradient(col, &self.grad) + phi * self.beta[j];
            let new = soft_threshold(z, self.penalty.threshold(j)) / omega;
            let diff = new - self.beta[j];
            if diff != 0.0 {
                self.beta[j] = new;
                let step = phi * diff;
                for (g, &x) in self.grad.iter_mut().zip(col) {
                    *g += x * step;
                }
                max_change = max_change.max(diff.abs());
            }
        }
        let diff0 = -intercept_gradient(&self.grad) / phi;
        if diff0 != 0.0 {
            self.beta0 += diff0;
            let step = phi * diff0;
            self.grad.iter_mut().for_each(|g| *g += step);
            max_change = max_change.max(diff0.abs());
        }
        max_change
    }

    /// Coordinate descent over `coords` until a sweep moves less than `tol`,
    /// or the pass budget runs out. With the active-set option, sweeps over
    /// the nonzero coordinates alternate with sweeps over all of `coords`.
    fn solve(&mut self, coords: &[usize], tol: f64, use_active_set: bool, max_passes: usize) {
        let mut passes = 0;
        let mut active = Vec::with_capacity(coords.len());
        while passes < max_passes {
            let change = self.sweep(coords.iter().copied());
            passes += 1;
            if change < tol {
                return;
            }
            if use_active_set {
                active.clear();
                active.extend(coords.iter().copied().filter(|&j| self.beta[j] != 0.0));
                while passes < max_passes {
                    let c = self.sweep(active.iter().copied());
                    passes += 1;
                    if c < tol {
                        break;
                    }
                }
            }
        }
    }
}

/// Coordinates outside `working` whose zero value violates optimality by
/// more than `slack`, i.e. `|g_j| > lambda1 w_j + slack` at `(beta0, beta)`,
/// together with the KKT residual there. Smaller violations are within the
/// convergence tolerance.
#[allow(clippy::too_many_arguments)]
fn violators(
    design: &StandardizedDesign,
    y: &[f64],
    loss: &LossSpec,
    penalty: &WeightedPenalty,
    beta0: f64,
    beta: &[f64],
    working: &[bool],
    slack: f64,
) -> (Vec<usize>, f64) {
    let r = margins(design, y, beta0, beta);
    let mut d = vec![0.0; r.len()];
    gradient_factors(&r, y, loss, &mut d);
    let mut worst = intercept_gradient(&d).abs();
    let mut add = Vec::new();
    for (j, &b) in beta.iter().enumerate() {
        let g = column_gradient(design.column(j), &d);
        let thr = penalty.threshold(j);
        worst = worst.max(kkt_violation(g, b, thr, penalty.lambda2));
        if !working[j] && g.abs() > thr + slack {
            add.push(j);
        }
    }
    (add, worst)
}

/// Outer iterations run on a working set (all coordinates without the
/// active-set option; otherwise the nonzero coordinates plus any found to
/// violate optimality, starting with those at the initial point). Coordinates outside it stay at zero, so once the
/// restricted problem has converged a single gradient pass over the rest
/// either certifies the full solution or names coordinates to add.
pub(crate) fn irls_solve(
    design: &StandardizedDesign,
    y: &[f64],
    loss: &LossSpec,
    penalty: &WeightedPenalty,
    opts: &SolverOptions,
    warm: Option<&WarmStart>,
    observer: &mut dyn FnMut(f64, &[f64]),
) -> SolveOutcome {
    let (mut beta0, mut beta) = initial_point(design, y, loss, warm);
    let p = beta.len();
    let mut working: Vec<bool> = beta.iter().map(|&b| !opts.use_active_set || b != 0.0).collect();
    for j in violators(design, y, loss, penalty, beta0, &beta, &working, opts.tol).0 {
        working[j] = true;
    }
    let mut coords: Vec<usize> = (0..p).filter(|&j| working[j]).collect();
    let mut u = vec![0.0; y.len()];
    let mut outer = 0;
    let mut converged = false;
    while outer < opts.max_passes {
        let r = margins(design, y, beta0, &beta);
        gradient_factors(&r, y, loss, &mut u);
        let mut inner = Inner {
            design,
            penalty,
            phi: loss.big_l(),
            beta0,
            beta: beta.clone(),
            grad: u.clone(),
        };
        inner.solve(&coords, opts.tol, opts.use_active_set, MAX_INNER_PASSES);
        let change = inner
            .beta
            .iter()
            .zip(&beta)
            .map(|(a, b)| (a - b).abs())
            .fold((inner.beta0 - beta0).abs(), f64::max);
        beta0 = inner.beta0;
        beta = inner.beta;
        outer += 1;
        observer(beta0, &beta);
        if change < opts.tol {
            let (add, kkt) = violators(design, y, loss, penalty, beta0, &beta, &working, opts.tol);
            if !add.is_empty() {
                for j in add {
                    working[j] = true;
                }
                coords = (0..p).filter(|&j| working[j]).collect();
                continue;
            }
            if kkt <= 10.0 * opts.tol {
                converged = true;
                break;
            }
        }
    }
    SolveOutcome { beta0, beta, passes: outer, converged }
}
