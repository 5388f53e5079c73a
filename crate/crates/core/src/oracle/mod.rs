//! Reference solvers used only to verify the engines.
//!
//! Nothing here shares code with the engines beyond the loss itself:
//! gradients, objectives and margins are recomputed with plain loops.

pub mod simplex;

use serde::{Deserialize, Serialize};

use crate::data::StandardizedDesign;
use crate::error::{BernError, Result};
use crate::loss::{hinge, LossSpec};
use crate::penalty::{soft_threshold, PenaltySpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// `1 / (L sigma_max^2 / n + lambda2)`, with `sigma_max` the largest
    /// singular value of `[1, X]`.
    Lipschitz,
    Constant(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleFit {
    pub beta0: f64,
    pub beta: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn raw_margins(design: &StandardizedDesign, y: &[f64], b0: f64, beta: &[f64]) -> Vec<f64> {
    let n = design.n();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let mut eta = b0;
        for (k, &b) in beta.iter().enumerate() {
            eta += design.column(k)[i] * b;
        }
        out[i] = y[i] * eta;
    }
    out
}

fn oracle_objective(design: &StandardizedDesign, y: &[f64], loss: &LossSpec, l1: &[f64], l2: f64, b0: f64, beta: &[f64]) -> f64 {
    let r = raw_margins(design, y, b0, beta);
    let data: f64 = r.iter().map(|&t| loss.value(t)).sum::<f64>() / r.len() as f64;
    let pen: f64 = beta.iter().zip(l1).map(|(b, t)| t * b.abs() + 0.5 * l2 * b * b).sum();
    data + pen
}

/// Largest singular value of `[1, X]` by power iteration on its Gram matrix.
pub fn sigma_max(design: &StandardizedDesign) -> f64 {
    let (n, p) = (design.n(), design.n_retained());
    let col = |k: usize, i: usize| if k == 0 { 1.0 } else { design.column(k - 1)[i] };
    let mut gram = vec![vec![0.0; p + 1]; p + 1];
    for a in 0..=p {
        for b in a..=p {
            let s: f64 = (0..n).map(|i| col(a, i) * col(b, i)).sum();
            gram[a][b] = s;
            gram[b][a] = s;
        }
    }
    let mut v = vec![1.0; p + 1];
    let mut lambda = 0.0;
    for _ in 0..10_000 {
        let w: Vec<f64> = gram.iter().map(|row| row.iter().zip(&v).map(|(g, x)| g * x).sum()).collect();
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        v = w.iter().map(|x| x / norm).collect();
        let done = (norm - lambda).abs() <= 1e-15 * norm;
        lambda = norm;
        if done {
            break;
        }
    }
    lambda.sqrt()
}

/// Proximal gradient (ISTA) on the elastic-net or adaptive elastic-net
/// objective. Stops when no coordinate moves by more than `tol` in a step.
pub fn prox_grad_fit(
    design: &StandardizedDesign,
    y: &[f64],
    loss: &LossSpec,
    penalty: &PenaltySpec,
    step_rule: StepRule,
    tol: f64,
    max_iters: usize,
) -> Result<OracleFit> {
    if !penalty.family().is_convex() {
        return Err(BernError::InvalidPenalty("the oracle handles convex penalties only".into()));
    }
    penalty.check_dimension(design.p_total())?;
    let n = design.n();
    let p = design.n_retained();
    let thresholds: Vec<f64> = design.retained().iter().map(|&j| penalty.lambda1() * penalty.weight(j)).collect();
    let l2 = penalty.lambda2();
    let step = match step_rule {
        // The power-iteration estimate is from below; a small margin keeps the step safe.
        StepRule::Lipschitz => {
            let s = sigma_max(design) * (1.0 + 1e-6);
            1.0 / (loss.big_l() * s * s / n as f64 + l2)
        }
        StepRule::Constant(h) => h,
    };
    let mut b0 = 0.0;
    let mut beta = vec![0.0; p];
    let mut converged = false;
    let mut iterations = 0;
    let mut d = vec![0.0; n];
    while iterations < max_iters {
        iterations += 1;
        let r = raw_margins(design, y, b0, &beta);
        for i in 0..n {
            d[i] = loss.grad(r[i]) * y[i] / n as f64;
        }
        let g0: f64 = d.iter().sum();
        let new_b0 = b0 - step * g0;
        let mut change = (new_b0 - b0).abs();
        b0 = new_b0;
        for k in 0..p {
            let g: f64 = design.column(k).iter().zip(&d).map(|(x, di)| x * di).sum::<f64>() + l2 * beta[k];
            let nb = soft_threshold(beta[k] - step * g, step * thresholds[k]);
            change = change.max((nb - beta[k]).abs());
            beta[k] = nb;
        }
        if change < tol {
            converged = true;
            break;
        }
    }
    let objective = oracle_objective(design, y, loss, &thresholds, l2, b0, &beta);
    Ok(OracleFit { beta0: b0, beta, objective, iterations, converged })
}

/// Golden-section search for a minimizer of a unimodal `f` on `[a, b]`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        if c >= d {
            break;
        }
    }
    0.5 * (a + b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub beta0: f64,
    pub beta: Vec<f64>,
    /// `(1/n) sum_i (1 - r_i)_+ + lambda1 |beta|_1` at the recovered point.
    pub objective: f64,
    /// Optimal value of the dual LP; a certified lower bound on the hinge optimum.
    pub dual_objective: f64,
}

/// Exact minimizer of `(1/n) sum_i (1 - y_i(b0 + x_i'b))_+ + lambda1 |b|_1`.
///
/// Solves the dual `max sum u_i` over `0 <= u_i <= 1/n`, `sum y_i u_i = 0`,
/// `|sum_i y_i x_ij u_i| <= lambda1`, whose slack basis is feasible. The
/// primal slacks, intercept and coefficients are the shadow prices of those
/// constraints.
pub fn hinge_l1_lp(design: &StandardizedDesign, y: &[f64], lambda1: f64) -> Result<LpSolution> {
    let (n, p) = (design.n(), design.n_retained());
    if y.len() != n {
        return Err(BernError::DimensionMismatch { what: "labels", expected: n, got: y.len() });
    }
    if !(lambda1 >= 0.0 && lambda1.is_finite()) {
        return Err(BernError::InvalidPenalty(format!("lambda1 must be >= 0, got {lambda1}")));
    }
    let mut a: Vec<Vec<f64>> = Vec::with_capacity(n + 2 + 2 * p);
    let mut b = Vec::with_capacity(n + 2 + 2 * p);
    for i in 0..n {
        let mut row = vec![0.0; n];
        row[i] = 1.0;
        a.push(row);
        b.push(1.0 / n as f64);
    }
    a.push(y.to_vec());
    b.push(0.0);
    a.push(y.iter().map(|v| -v).collect());
    b.push(0.0);
    for k in 0..p {
        let row: Vec<f64> = (0..n).map(|i| y[i] * design.column(k)[i]).collect();
        a.push(row.iter().map(|v| -v).collect());
        a.push(row);
        b.push(lambda1);
        b.push(lambda1);
    }
    let sol = simplex::maximize(&vec![1.0; n], &a, &b, 1_000_000)?;
    let beta0 = sol.duals[n] - sol.duals[n + 1];
    let beta: Vec<f64> = (0..p).map(|k| sol.duals[n + 3 + 2 * k] - sol.duals[n + 2 + 2 * k]).collect();
    let r = raw_margins(design, y, beta0, &beta);
    let objective = r.iter().map(|&t| hinge(t)).sum::<f64>() / n as f64 + lambda1 * beta.iter().map(|b| b.abs()).sum::<f64>();
    Ok(LpSolution { beta0, beta, objective, dual_objective: sol.objective })
}
