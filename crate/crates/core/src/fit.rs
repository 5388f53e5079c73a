//! Types shared by the solvers: options, fitted models, objective and
//! optimality checks.

use serde::{Deserialize, Serialize};

use crate::data::{destandardize_coefficients, StandardizedDesign};
use crate::error::{BernError, Result};
use crate::loss::LossSpec;
use crate::penalty::{penalty_value, PenaltySpec, WeightedPenalty};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    /// MM-majorized cyclic coordinate descent.
    Gcd,
    /// Constant-curvature IRLS with an inner coordinate descent.
    Irls,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Gcd => "gcd",
            Engine::Irls => "irls",
        }
    }
}

impl std::str::FromStr for Engine {
    type Err = BernError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gcd" => Ok(Engine::Gcd),
            "irls" => Ok(Engine::Irls),
            other => Err(BernError::InvalidOptions(format!("unknown engine `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Cap on coordinate sweeps (GCD) or outer iterations (IRLS).
    pub max_passes: usize,
    /// Stop when the largest coordinate change of a full sweep drops below this.
    pub tol: f64,
    pub use_active_set: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { max_passes: 10_000, tol: 1e-7, use_active_set: true }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(BernError::InvalidOptions(format!("tol must be > 0, got {}", self.tol)));
        }
        if self.max_passes == 0 {
            return Err(BernError::InvalidOptions("max_passes must be >= 1".into()));
        }
        Ok(())
    }
}

/// Starting point in the fitting (standardized, retained-column) space.
#[derive(Debug, Clone, PartialEq)]
pub struct WarmStart {
    pub beta0: f64,
    pub beta: Vec<f64>,
}

impl From<&ModelFit> for WarmStart {
    fn from(f: &ModelFit) -> Self {
        WarmStart { beta0: f.beta0, beta: f.beta.clone() }
    }
}

/// A fitted linear classifier with its diagnostics.
///
/// Fits produced by the engines live in the standardized space of the design
/// they were fitted on; [`ModelFit::destandardize`] maps them to raw features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFit {
    pub beta0: f64,
    pub beta: Vec<f64>,
    /// Training objective at `(beta0, beta)`.
    pub objective: f64,
    pub passes: usize,
    pub converged: bool,
    pub delta: f64,
    pub penalty: PenaltySpec,
    pub engine: Engine,
}

impl ModelFit {
    pub fn nonzero_count(&self) -> usize {
        self.beta.iter().filter(|&&b| b != 0.0).count()
    }

    /// Same model expressed on the raw columns of the data `design` came from.
    pub fn destandardize(&self, design: &StandardizedDesign) -> Result<ModelFit> {
        let (beta0, beta) = destandardize_coefficients(self.beta0, &self.beta, design)?;
        Ok(ModelFit { beta0, beta, ..self.clone() })
    }
}

/// `y_i (beta0 + x_i' beta)` for every row.
pub fn margins(design: &StandardizedDesign, y: &[f64], beta0: f64, beta: &[f64]) -> Vec<f64> {
    let mut r = design.linear_predictor(beta0, beta);
    for (ri, &yi) in r.iter_mut().zip(y) {
        *ri *= yi;
    }
    r
}

/// `(1/n) sum_i B(y_i (beta0 + x_i' beta))`.
pub fn mean_loss(design: &StandardizedDesign, y: &[f64], loss: &LossSpec, beta0: f64, beta: &[f64]) -> f64 {
    let r = margins(design, y, beta0, beta);
    r.iter().map(|&t| loss.value(t)).sum::<f64>() / r.len() as f64
}

/// Full objective under any penalty family, recomputed from scratch.
pub fn objective(
    design: &StandardizedDesign,
    y: &[f64],
    loss: &LossSpec,
    penalty: &PenaltySpec,
    beta0: f64,
    beta: &[f64],
) -> f64 {
    mean_loss(design, y, loss, beta0, beta) + penalty_value(beta, penalty)
}

/// `d_i = B'(r_i) y_i`, the per-row factor of every loss gradient.
#[inline]
pub(crate) fn gradient_factors(margins: &[f64], y: &[f64], loss: &LossSpec, out: &mut [f64]) {
    for ((o, &r), &yi) in out.iter_mut().zip(margins).zip(y) {
        *o = loss.grad(r) * yi;
    }
}

/// `(1/n) sum_i d_i x_ij`. Every gradient in the crate goes through this so
/// identical inputs produce identical bits.
#[inline]
pub(crate) fn column_gradient(column: &[f64], factors: &[f64]) -> f64 {
    column_dot(column, factors) / column.len() as f64
}

/// Dot product with four fixed accumulation lanes, so the summation order
/// (and hence every bit of the result) depends only on the inputs.
#[inline]
pub(crate) fn column_dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, d) in ca.zip(cb) {
        for k in 0..4 {
            acc[k] += x[k] * d[k];
        }
    }
    let mut tail = 0.0;
    for (&x, &d) in ra.iter().zip(rb) {
        tail += x * d;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
pub(crate) fn intercept_gradient(factors: &[f64]) -> f64 {
    factors.iter().sum::<f64>() / factors.len() as f64
}

/// Largest violation of the optimality conditions of the weighted elastic-net
/// problem at `(beta0, beta)`.
pub fn kkt_residual(
    design: &StandardizedDesign,
    y: &[f64],
    loss: &LossSpec,
    penalty: &WeightedPenalty,
    beta0: f64,
    beta: &[f64],
) -> f64 {
    let r = margins(design, y, beta0, beta);
    let mut d = vec![0.0; r.len()];
    gradient_factors(&r, y, loss, &mut d);
    let mut worst = intercept_gradient(&d).abs();
    for (k, &b) in beta.iter().enumerate() {
        let g = column_gradient(design.column(k), &d);
        worst = worst.max(kkt_violation(g, b, penalty.threshold(k), penalty.lambda2));
    }
    worst
}

/// Optimality violation of one coordinate with loss gradient `g`.
#[inline]
pub(crate) fn kkt_violation(g: f64, b: f64, thr: f64, lambda2: f64) -> f64 {
    if b != 0.0 {
        (g + lambda2 * b + thr * b.signum()).abs()
    } else {
        (g.abs() - thr).max(0.0)
    }
}

/// Minimizer of `(1/n) sum_i B(y_i b0)` over the intercept alone.
///
/// The derivative is nondecreasing in `b0`, negative at `-(1 + delta)` and
/// positive at `1 + delta` when both classes are present, so bisection
/// converges to the midpoint of the stationary set.
pub fn intercept_only(y: &[f64], loss: &LossSpec) -> f64 {
    let deriv = |b0: f64| -> f64 {
        y.iter().map(|&yi| loss.grad(yi * b0) * yi).sum::<f64>() / y.len() as f64
    };
    let reach = 1.0 + loss.delta();
    let (mut lo, mut hi) = (-reach, reach);
    let has_pos = y.iter().any(|&v| v > 0.0);
    let has_neg = y.iter().any(|&v| v < 0.0);
    if !has_neg {
        return hi;
    }
    if !has_pos {
        return lo;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let g = deriv(mid);
        if g < 0.0 {
            lo = mid;
        } else if g > 0.0 {
            hi = mid;
        } else {
            // Flat stationary set: locate both ends and return its midpoint.
            let (mut a, mut b) = (lo, mid);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                if deriv(m) < 0.0 { a = m } else { b = m }
            }
            let left = b;
            let (mut a, mut b) = (mid, hi);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                if deriv(m) > 0.0 { b = m } else { a = m }
            }
            return 0.5 * (left + a);
        }
    }
    0.5 * (lo + hi)
}

/// Raw result of an engine run in the fitting space.
#[derive(Debug, Clone)]
pub(crate) struct SolveOutcome {
    pub beta0: f64,
    pub beta: Vec<f64>,
    pub passes: usize,
    pub converged: bool,
}

/// Cold start: the intercept-only model.
pub(crate) fn initial_point(design: &StandardizedDesign, y: &[f64], loss: &LossSpec, warm: Option<&WarmStart>) -> (f64, Vec<f64>) {
    match warm {
        Some(w) => (w.beta0, w.beta.clone()),
        None => (intercept_only(y, loss), vec![0.0; design.n_retained()]),
    }
}

pub(crate) fn check_inputs(
    design: &StandardizedDesign,
    y: &[f64],
    opts: &SolverOptions,
    warm: Option<&WarmStart>,
) -> Result<()> {
    opts.validate()?;
    if y.len() != design.n() {
        return Err(BernError::DimensionMismatch { what: "labels", expected: design.n(), got: y.len() });
    }
    if let Some(w) = warm {
        if w.beta.len() != design.n_retained() {
            return Err(BernError::DimensionMismatch {
                what: "warm start",
                expected: design.n_retained(),
                got: w.beta.len(),
            });
        }
    }
    Ok(())
}

/// Weighted penalty for the retained columns of `design`.
pub(crate) fn fitting_penalty(design: &StandardizedDesign, penalty: &PenaltySpec) -> Result<WeightedPenalty> {
    penalty.check_dimension(design.p_total())?;
    Ok(penalty.to_weighted()?.restrict(design.retained()))
}
