//! Regularization paths with warm starts.

use serde::{Deserialize, Serialize};

use crate::data::StandardizedDesign;
use crate::error::{BernError, Result};
use crate::fit::{
    check_inputs, column_gradient, fitting_penalty, gradient_factors, intercept_only, Engine, ModelFit,
    SolverOptions, WarmStart,
};
use crate::gcd::gcd_fit;
use crate::irls::irls_fit;
use crate::lla::{lla_fit, LlaOptions};
use crate::loss::LossSpec;
use crate::penalty::PenaltySpec;

/// Fits one model with any penalty family; SCAD and MCP go through LLA.
pub fn fit_model(
    design: &StandardizedDesign,
    y: &[f64],
    loss: &LossSpec,
    penalty: &PenaltySpec,
    engine: Engine,
    opts: &SolverOptions,
    warm: Option<&WarmStart>,
) -> Result<ModelFit> {
    if !penalty.family().is_convex() {
        return lla_fit(design, y, loss, penalty, opts, engine, &LlaOptions::default(), warm);
    }
    match engine {
        Engine::Gcd => gcd_fit(design, y, loss, penalty, opts, warm),
        Engine::Irls => irls_fit(design, y, loss, penalty, opts, warm),
    }
}

/// Ratio `lambda_min / lambda_max` used when none is given.
pub fn default_ratio(n: usize, p: usize) -> f64 {
    if n < p {
        0.01
    } else {
        1e-4
    }
}

pub const DEFAULT_N_LAMBDA: usize = 100;

/// Smallest `lambda1` at which every coefficient is zero.
///
/// At the intercept-only model the soft-threshold argument of coordinate `j`
/// is `-g_j`, so the fit stays at zero iff `|g_j| <= lambda1 w_j`. The value
/// is nudged up by ulps until that comparison holds in floating point.
pub fn lambda_max(design: &StandardizedDesign, y: &[f64], loss: &LossSpec, penalty: &PenaltySpec) -> Result<f64> {
    check_inputs(design, y, &SolverOptions::default(), None)?;
    let weighted = if penalty.family().is_convex() {
        fitting_penalty(design, penalty)?
    } else {
        PenaltySpec::elastic_net(penalty.lambda1(), penalty.lambda2())?.to_weighted()?
    };
    let b0 = intercept_only(y, loss);
    let r: Vec<f64> = y.iter().map(|&yi| yi * b0).collect();
    let mut d = vec![0.0; y.len()];
    gradient_factors(&r, y, loss, &mut d);
    let grads: Vec<f64> = (0..design.n_retained()).map(|k| column_gradient(design.column(k), &d).abs()).collect();
    let mut lmax = grads
        .iter()
        .enumerate()
        .map(|(k, g)| g / weighted.weight(k))
        .fold(0.0, f64::max);
    if lmax <= 0.0 {
        return Err(BernError::InvalidData("the intercept-only model is already optimal for every lambda".into()));
    }
    while grads.iter().enumerate().any(|(k, &g)| lmax * weighted.weight(k) < g) {
        lmax = lmax.next_up();
    }
    Ok(lmax)
}

/// `n_lambda` log-spaced values from `lambda_max` down to `ratio * lambda_max`.
pub fn lambda_grid(
    design: &StandardizedDesign,
    y: &[f64],
    loss: &LossSpec,
    penalty: &PenaltySpec,
    n_lambda: usize,
    ratio: f64,
) -> Result<Vec<f64>> {
    if n_lambda < 2 {
        return Err(BernError::InvalidConfig(format!("n_lambda must be >= 2, got {n_lambda}")));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(BernError::InvalidConfig(format!("ratio must be in (0, 1), got {ratio}")));
    }
    let lmax = lambda_max(design, y, loss, penalty)?;
    Ok(log_grid(lmax, n_lambda, ratio))
}

pub(crate) fn log_grid(lmax: f64, n_lambda: usize, ratio: f64) -> Vec<f64> {
    let last = n_lambda - 1;
    (0..n_lambda)
        .map(|k| match k {
            0 => lmax,
            k if k == last => lmax * ratio,
            k => lmax * ratio.powf(k as f64 / last as f64),
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathResult {
    pub lambdas: Vec<f64>,
    /// Fits in the standardized space of the design.
    pub fits: Vec<ModelFit>,
    pub nonzero_counts: Vec<usize>,
}

impl PathResult {
    pub fn all_converged(&self) -> bool {
        self.fits.iter().all(|f| f.converged)
    }
}

/// Fits every `lambda1` of a decreasing grid, warm-starting each fit from
/// the previous one. `penalty.lambda1()` is ignored.
pub fn fit_path(
    design: &StandardizedDesign,
    y: &[f64],
    loss: &LossSpec,
    penalty: &PenaltySpec,
    grid: &[f64],
    engine: Engine,
    opts: &SolverOptions,
) -> Result<PathResult> {
    if grid.is_empty() {
        return Err(BernError::InvalidConfig("empty lambda grid".into()));
    }
    if grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(BernError::InvalidConfig("lambda grid must be strictly decreasing".into()));
    }
    let mut fits: Vec<ModelFit> = Vec::with_capacity(grid.len());
    for &lambda in grid {
        let pen = penalty.with_lambda1(lambda)?;
        let warm = fits.last().map(WarmStart::from);
        fits.push(fit_model(design, y, loss, &pen, engine, opts, warm.as_ref())?);
    }
    let nonzero_counts = fits.iter().map(ModelFit::nonzero_count).collect();
    Ok(PathResult { lambdas: grid.to_vec(), fits, nonzero_counts })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{standardize, Dataset};
    use ndarray::{array, Array2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn toy(n: usize, p: usize, seed: u64) -> (StandardizedDesign, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((n, p), |_| rng.random::<f64>() * 2.0 - 1.0);
        let y: Vec<f64> = (0..n)
            .map(|i| if x[[i, 0]] - x[[i, 1]] + 0.5 * (rng.random::<f64>() - 0.5) >= 0.0 { 1.0 } else { -1.0 })
            .collect();
        (standardize(&Dataset::new(x, y.clone()).unwrap()).unwrap(), y)
    }

    #[test]
    fn grid_shape() {
        let (design, y) = toy(30, 5, 1);
        let loss = LossSpec::new(2.0).unwrap();
        let pen = PenaltySpec::lasso(1.0).unwrap();
        let g = lambda_grid(&design, &y, &loss, &pen, 2, 0.5).unwrap();
        let lmax = lambda_max(&design, &y, &loss, &pen).unwrap();
        assert_eq!(g, vec![lmax, 0.5 * lmax]);
        let g = lambda_grid(&design, &y, &loss, &pen, 10, 0.01).unwrap();
        assert!(g.windows(2).all(|w| w[1] < w[0]));
        assert!(lambda_grid(&design, &y, &loss, &pen, 1, 0.5).is_err());
        assert!(lambda_grid(&design, &y, &loss, &pen, 5, 1.0).is_err());
    }

    #[test]
    fn lambda_max_zeroes_every_engine() {
        let (design, y) = toy(40, 8, 2);
        for &d in &[0.1, 0.5, 2.0] {
            let loss = LossSpec::new(d).unwrap();
            let aen = PenaltySpec::adaptive(1.0, 0.1, (0..8).map(|j| 0.3 + j as f64 * 0.37).collect()).unwrap();
            for pen in [PenaltySpec::elastic_net(1.0, 0.1).unwrap(), aen] {
                let lmax = lambda_max(&design, &y, &loss, &pen).unwrap();
                for engine in [Engine::Gcd, Engine::Irls] {
                    let fit = fit_model(&design, &y, &loss, &pen.with_lambda1(lmax).unwrap(), engine, &SolverOptions::default(), None).unwrap();
                    assert!(fit.beta.iter().all(|&b| b == 0.0), "{engine:?} delta {d}");
                    // Just below lambda_max something enters.
                    let below = fit_model(&design, &y, &loss, &pen.with_lambda1(0.95 * lmax).unwrap(), engine, &SolverOptions::default(), None).unwrap();
                    assert!(below.nonzero_count() > 0);
                }
            }
        }
    }

    #[test]
    fn lambda_max_hand_computed() {
        // Four rows, balanced labels, one informative column (+-1) and one
        // column orthogonal to the labels. With delta < 1 the null intercept
        // is 0 and B'(0) = -1, so g_j = -(1/n) sum_i y_i x_ij.
        let x = array![[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]];
        let y = vec![1.0, 1.0, -1.0, -1.0];
        let design = standardize(&Dataset::new(x, y.clone()).unwrap()).unwrap();
        let loss = LossSpec::new(0.5).unwrap();
        let lmax = lambda_max(&design, &y, &loss, &PenaltySpec::lasso(1.0).unwrap()).unwrap();
        assert!((lmax - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_lambda_path_equals_direct_fit() {
        let (design, y) = toy(30, 5, 3);
        let loss = LossSpec::new(0.5).unwrap();
        let pen = PenaltySpec::lasso(0.05).unwrap();
        let path = fit_path(&design, &y, &loss, &pen, &[0.05], Engine::Irls, &SolverOptions::default()).unwrap();
        let direct = fit_model(&design, &y, &loss, &pen, Engine::Irls, &SolverOptions::default(), None).unwrap();
        assert_eq!(path.fits[0], direct);
        assert_eq!(path.nonzero_counts[0], direct.nonzero_count());
    }

    #[test]
    fn warm_and_cold_agree() {
        let (design, y) = toy(50, 6, 4);
        let loss = LossSpec::new(1.0).unwrap();
        let pen = PenaltySpec::elastic_net(1.0, 0.01).unwrap();
        let grid = lambda_grid(&design, &y, &loss, &pen, 8, 0.05).unwrap();
        for engine in [Engine::Gcd, Engine::Irls] {
            let path = fit_path(&design, &y, &loss, &pen, &grid, engine, &SolverOptions::default()).unwrap();
            for (k, &l) in grid.iter().enumerate() {
                let cold = fit_model(&design, &y, &loss, &pen.with_lambda1(l).unwrap(), engine, &SolverOptions::default(), None).unwrap();
                assert!((cold.objective - path.fits[k].objective).abs() <= 1e-8, "{engine:?} k={k}");
            }
        }
    }

    #[test]
    fn rejects_unsorted_grid() {
        let (design, y) = toy(20, 3, 5);
        let loss = LossSpec::new(1.0).unwrap();
        let pen = PenaltySpec::lasso(1.0).unwrap();
        assert!(fit_path(&design, &y, &loss, &pen, &[0.1, 0.2], Engine::Gcd, &SolverOptions::default()).is_err());
        assert!(fit_path(&design, &y, &loss, &pen, &[], Engine::Gcd, &SolverOptions::default()).is_err());
    }

    #[test]
    fn nonconvex_path_runs() {
        let (design, y) = toy(40, 6, 6);
        let loss = LossSpec::new(0.5).unwrap();
        let pen = PenaltySpec::scad(1.0, 0.0, 3.7).unwrap();
        let grid = lambda_grid(&design, &y, &loss, &pen, 5, 0.1).unwrap();
        let path = fit_path(&design, &y, &loss, &pen, &grid, Engine::Irls, &SolverOptions::default()).unwrap();
        assert_eq!(path.nonzero_counts[0], 0);
        assert!(path.nonzero_counts[4] > 0);
    }
}
