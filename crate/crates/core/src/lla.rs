//! Local linear approximation for the SCAD and MCP penalties.
//!
//! The concave part of the penalty is linearized at the current iterate,
//! which turns each step into a weighted elastic-net problem with weights
//! `w_j = P'(|b_j|) / lambda1`. Each step is warm-started at the previous
//! iterate, and both engines only ever decrease their objective, so the true
//! nonconvex objective is non-increasing across iterations.

use crate::data::StandardizedDesign;
use crate::error::{BernError, Result};
use crate::fit::{check_inputs, objective, Engine, ModelFit, SolveOutcome, SolverOptions, WarmStart};
use crate::gcd::gcd_solve;
use crate::irls::irls_solve;
use crate::loss::LossSpec;
use crate::penalty::{nonconvex_deriv, PenaltySpec, WeightedPenalty};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LlaOptions {
    pub max_iters: usize,
    /// Stop once the largest weight change falls below this.
    pub weight_tol: f64,
}

impl Default for LlaOptions {
    fn default() -> Self {
        LlaOptions { max_iters: 5, weight_tol: 1e-6 }
    }
}

/// One LLA iterate: the weights used for the step and the resulting fit.
#[derive(Debug, Clone)]
pub struct LlaState {
    pub iteration: usize,
    pub weights: Vec<f64>,
    /// Fit in the standardized space; `objective` holds the nonconvex objective.
    pub fit: ModelFit,
}

/// `P'(|b_j|) / lambda1` for every coordinate.
pub fn lla_weights(beta: &[f64], penalty: &PenaltySpec) -> Result<Vec<f64>> {
    let l1 = penalty.lambda1();
    beta.iter()
        .map(|b| Ok((nonconvex_deriv(b.abs(), penalty)? / l1).clamp(0.0, 1.0)))
        .collect()
}

pub(crate) fn solve_weighted(
    engine: Engine,
    design: &StandardizedDesign,
    y: &[f64],
    loss: &LossSpec,
    penalty: &WeightedPenalty,
    opts: &SolverOptions,
    warm: Option<&WarmStart>,
) -> SolveOutcome {
    match engine {
        Engine::Gcd => gcd_solve(design, y, loss, penalty, opts, warm, &mut |_, _| {}),
        Engine::Irls => irls_solve(design, y, loss, penalty, opts, warm, &mut |_, _| {}),
    }
}

pub fn lla_fit(
    design: &StandardizedDesign,
    y: &[f64],
    loss: &LossSpec,
    penalty: &PenaltySpec,
    opts: &SolverOptions,
    engine: Engine,
    lla: &LlaOptions,
    warm: Option<&WarmStart>,
) -> Result<ModelFit> {
    let history = lla_fit_with_history(design, y, loss, penalty, opts, engine, lla, warm)?;
    Ok(history.into_iter().last().expect("at least the initial fit").fit)
}

/// Runs LLA and returns every iterate, starting with the Lasso initializer
/// (iteration 0, unit weights).
#[allow(clippy::too_many_arguments)]
pub fn lla_fit_with_history(
    design: &StandardizedDesign,
    y: &[f64],
    loss: &LossSpec,
    penalty: &PenaltySpec,
    opts: &SolverOptions,
    engine: Engine,
    lla: &LlaOptions,
    warm: Option<&WarmStart>,
) -> Result<Vec<LlaState>> {
    check_inputs(design, y, opts, warm)?;
    if penalty.family().is_convex() {
        return Err(BernError::InvalidPenalty("LLA needs a SCAD or MCP penalty".into()));
    }
    if penalty.lambda1() <= 0.0 {
        return Err(BernError::InvalidPenalty("LLA needs lambda1 > 0".into()));
    }
    let p = design.n_retained();
    let mut weights = vec![1.0; p];
    let mut penalty_w = WeightedPenalty {
        lambda1: penalty.lambda1(),
        lambda2: penalty.lambda2(),
        weights: Some(weights.clone()),
    };
    let make_fit = |out: SolveOutcome, converged: bool| ModelFit {
        objective: objective(design, y, loss, penalty, out.beta0, &out.beta),
        beta0: out.beta0,
        beta: out.beta,
        passes: out.passes,
        converged,
        delta: loss.delta(),
        penalty: penalty.clone(),
        engine,
    };
    let first = solve_weighted(engine, design, y, loss, &penalty_w, opts, warm);
    let mut all_converged = first.converged;
    let mut history = vec![LlaState { iteration: 0, weights: weights.clone(), fit: make_fit(first, all_converged) }];
    for it in 1..=lla.max_iters {
        let prev = &history.last().unwrap().fit;
        let new_weights = lla_weights(&prev.beta, penalty)?;
        let shift = new_weights.iter().zip(&weights).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if shift < lla.weight_tol {
            break;
        }
        weights = new_weights;
        penalty_w.weights = Some(weights.clone());
        let out = solve_weighted(engine, design, y, loss, &penalty_w, opts, Some(&WarmStart::from(prev)));
        all_converged &= out.converged;
        history.push(LlaState { iteration: it, weights: weights.clone(), fit: make_fit(out, all_converged) });
    }
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{standardize, Dataset};
    use ndarray::Array2;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn toy(n: usize, p: usize, seed: u64) -> (StandardizedDesign, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((n, p), |_| rng.random::<f64>() * 2.0 - 1.0);
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let z = 2.0 * x[[i, 0]] - 1.5 * x[[i, 1]] + x[[i, 2]] + 0.8 * (rng.random::<f64>() - 0.5);
                if z >= 0.0 { 1.0 } else { -1.0 }
            })
            .collect();
        (standardize(&Dataset::new(x, y.clone()).unwrap()).unwrap(), y)
    }

    #[test]
    fn zero_iterate_gives_unit_weights() {
        let scad = PenaltySpec::scad(0.3, 0.0, 3.7).unwrap();
        let mcp = PenaltySpec::mcp(0.3, 0.0, 3.0).unwrap();
        assert_eq!(lla_weights(&[0.0; 4], &scad).unwrap(), vec![1.0; 4]);
        assert_eq!(lla_weights(&[0.0; 4], &mcp).unwrap(), vec![1.0; 4]);
        // Past a * lambda1 the derivative vanishes.
        assert_eq!(lla_weights(&[2.0, -5.0], &scad).unwrap(), vec![0.0, 0.0]);
        assert_eq!(lla_weights(&[0.9, -5.0], &mcp).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn descends_and_weights_in_range() {
        let (design, y) = toy(50, 10, 1);
        let loss = LossSpec::new(0.5).unwrap();
        for pen in [PenaltySpec::scad(0.05, 0.0, 3.7).unwrap(), PenaltySpec::mcp(0.05, 0.0, 3.0).unwrap()] {
            for engine in [Engine::Gcd, Engine::Irls] {
                let hist = lla_fit_with_history(&design, &y, &loss, &pen, &SolverOptions::default(), engine, &LlaOptions::default(), None).unwrap();
                assert!(!hist.is_empty());
                for w in hist.windows(2) {
                    assert!(w[1].fit.objective <= w[0].fit.objective + 1e-10);
                }
                for s in &hist {
                    assert!(s.weights.iter().all(|&w| (0.0..=1.0).contains(&w)));
                }
                let last = hist.last().unwrap();
                assert!(last.fit.objective <= hist[0].fit.objective);
            }
        }
    }

    #[test]
    fn null_fixed_point() {
        let (design, y) = toy(30, 5, 2);
        let loss = LossSpec::new(0.5).unwrap();
        let pen = PenaltySpec::scad(10.0, 0.0, 3.7).unwrap();
        let hist = lla_fit_with_history(&design, &y, &loss, &pen, &SolverOptions::default(), Engine::Gcd, &LlaOptions::default(), None).unwrap();
        // Weights stay at one, so the loop stops after the initializer.
        assert_eq!(hist.len(), 1);
        assert!(hist[0].fit.beta.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn rejects_convex_family() {
        let (design, y) = toy(20, 3, 3);
        let loss = LossSpec::new(0.5).unwrap();
        let pen = PenaltySpec::elastic_net(0.1, 0.0).unwrap();
        assert!(lla_fit(&design, &y, &loss, &pen, &SolverOptions::default(), Engine::Irls, &LlaOptions::default(), None).is_err());
    }
}
