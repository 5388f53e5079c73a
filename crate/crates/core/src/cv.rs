//! Stratified k-fold cross-validation over a lambda grid.

use ndarray::Axis;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{standardize, Dataset};
use crate::error::{BernError, Result};
use crate::fit::{Engine, SolverOptions};
use crate::loss::LossSpec;
use crate::metrics::{classification_report, predict};
use crate::path::fit_path;
use crate::penalty::PenaltySpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum CvMetric {
    /// Misclassification rate on the held-out fold.
    #[default]
    #[serde(rename = "mr")]
    Mr,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub lambdas: Vec<f64>,
    pub mean_metric: Vec<f64>,
    /// Sample standard deviation across folds (0 with a single distinct value).
    pub sd_metric: Vec<f64>,
    pub lambda_min: f64,
    pub lambda_1se: f64,
    pub folds: usize,
    pub seed: u64,
}

impl CvResult {
    pub fn index_min(&self) -> usize {
        self.lambdas.iter().position(|&l| l == self.lambda_min).expect("lambda_min is on the grid")
    }
}

/// Fold index for every row.
///
/// Rows of each class are shuffled with a seeded ChaCha8 stream and dealt
/// round-robin; the deal continues across classes so overall fold sizes also
/// differ by at most one.
pub fn stratified_folds(y: &[f64], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(BernError::Folds(format!("need at least 2 folds, got {k}")));
    }
    if k > y.len() {
        return Err(BernError::Folds(format!("{k} folds for {} rows", y.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = vec![usize::MAX; y.len()];
    let mut next = 0;
    for class in [1.0, -1.0] {
        let mut rows: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        // A class confined to one fold would vanish from that fold's training split.
        if rows.len() < 2 {
            return Err(BernError::Folds(format!(
                "class {class:+} has {} row(s); every training split needs both classes",
                rows.len()
            )));
        }
        rows.shuffle(&mut rng);
        for i in rows {
            assignment[i] = next;
            next = (next + 1) % k;
        }
    }
    Ok(assignment)
}

/// Misclassification rate of every grid point on every fold; `[fold][lambda]`.
#[allow(clippy::too_many_arguments)]
fn fold_errors(
    data: &Dataset,
    loss: &LossSpec,
    penalty: &PenaltySpec,
    grid: &[f64],
    assignment: &[usize],
    folds: usize,
    engine: Engine,
    opts: &SolverOptions,
) -> Result<Vec<Vec<f64>>> {
    let per_fold: Vec<(Vec<f64>, bool)> = (0..folds)
        .into_par_iter()
        .map(|f| -> Result<(Vec<f64>, bool)> {
            let train: Vec<usize> = (0..data.n()).filter(|&i| assignment[i] != f).collect();
            let valid: Vec<usize> = (0..data.n()).filter(|&i| assignment[i] == f).collect();
            let train = data.subset(&train)?;
            let valid_x = data.x().select(Axis(0), &valid);
            let valid_y: Vec<f64> = valid.iter().map(|&i| data.y()[i]).collect();
            let design = standardize(&train)?;
            let path = fit_path(&design, train.y(), loss, penalty, grid, engine, opts)?;
            let errors = path
                .fits
                .iter()
                .map(|fit| {
                    let raw = fit.destandardize(&design)?;
                    let pred = predict(&raw, &valid_x)?;
                    Ok(classification_report(&valid_y, &pred)?.mr)
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok((errors, path.all_converged()))
        })
        .collect::<Result<_>>()?;
    // Logged after the ordered merge so output does not depend on scheduling.
    for (f, (_, converged)) in per_fold.iter().enumerate() {
        if !converged {
            log::warn!("fold {f}: some path fits did not converge");
        }
    }
    Ok(per_fold.into_iter().map(|(e, _)| e).collect())
}

/// k-fold CV of the path defined by `grid` (decreasing). Each fold is
/// standardized on its own training rows. Folds run in parallel on the
/// current rayon pool; results are merged in fold order.
#[allow(clippy::too_many_arguments)]
pub fn cross_validate(
    data: &Dataset,
    loss: &LossSpec,
    penalty: &PenaltySpec,
    grid: &[f64],
    folds: usize,
    seed: u64,
    engine: Engine,
    opts: &SolverOptions,
    _metric: CvMetric,
) -> Result<CvResult> {
    data.require_both_classes()?;
    let assignment = stratified_folds(data.y(), folds, seed)?;
    let errors = fold_errors(data, loss, penalty, grid, &assignment, folds, engine, opts)?;
    let (mean_metric, sd_metric) = summarize(&errors, grid.len());
    let (lambda_min, lambda_1se) = select(grid, &mean_metric, &sd_metric);
    Ok(CvResult { lambdas: grid.to_vec(), mean_metric, sd_metric, lambda_min, lambda_1se, folds, seed })
}

fn summarize(errors: &[Vec<f64>], m: usize) -> (Vec<f64>, Vec<f64>) {
    let k = errors.len() as f64;
    let mut mean = vec![0.0; m];
    let mut sd = vec![0.0; m];
    for l in 0..m {
        let mu = errors.iter().map(|e| e[l]).sum::<f64>() / k;
        let ss = errors.iter().map(|e| (e[l] - mu).powi(2)).sum::<f64>();
        mean[l] = mu;
        sd[l] = if k > 1.0 { (ss / (k - 1.0)).sqrt() } else { 0.0 };
    }
    (mean, sd)
}

/// `lambda_min`: smallest mean error, ties to the largest lambda.
/// `lambda_1se`: largest lambda whose mean is within one sd of that minimum.
fn select(grid: &[f64], mean: &[f64], sd: &[f64]) -> (f64, f64) {
    let mut best = 0;
    for l in 1..grid.len() {
        if mean[l] < mean[best] {
            best = l;
        }
    }
    let bound = mean[best] + sd[best];
    let one_se = (0..grid.len()).find(|&l| mean[l] <= bound).unwrap_or(best);
    (grid[best], grid[one_se].max(grid[best]))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cv2dResult {
    pub lambda2s: Vec<f64>,
    pub results: Vec<CvResult>,
    pub best_lambda1: f64,
    pub best_lambda2: f64,
}

/// CV over a `(lambda1, lambda2)` grid. Every `lambda2` uses the same folds;
/// the winner has the smallest mean error, ties broken by larger `lambda1`,
/// then by the earlier `lambda2`.
#[allow(clippy::too_many_arguments)]
pub fn cross_validate_2d(
    data: &Dataset,
    loss: &LossSpec,
    penalty: &PenaltySpec,
    grid: &[f64],
    lambda2s: &[f64],
    folds: usize,
    seed: u64,
    engine: Engine,
    opts: &SolverOptions,
) -> Result<Cv2dResult> {
    if lambda2s.is_empty() {
        return Err(BernError::InvalidConfig("empty lambda2 grid".into()));
    }
    let results = lambda2s
        .iter()
        .map(|&l2| {
            let pen = penalty.with_lambda2(l2)?;
            cross_validate(data, loss, &pen, grid, folds, seed, engine, opts, CvMetric::Mr)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (k, r) in results.iter().enumerate().skip(1) {
        if r.mean_metric[r.index_min()] < results[best].mean_metric[results[best].index_min()] {
            best = k;
        }
    }
    Ok(Cv2dResult {
        lambda2s: lambda2s.to_vec(),
        best_lambda1: results[best].lambda_min,
        best_lambda2: lambda2s[best],
        results,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use proptest::prelude::*;

    #[test]
    fn select_rules() {
        let grid = [4.0, 3.0, 2.0, 1.0];
        let (lmin, l1se) = select(&grid, &[0.5, 0.2, 0.1, 0.1], &[0.0, 0.0, 0.15, 0.0]);
        assert_eq!(lmin, 2.0);
        assert_eq!(l1se, 3.0);
        let (lmin, l1se) = select(&grid, &[0.3, 0.3, 0.3, 0.3], &[0.0; 4]);
        assert_eq!((lmin, l1se), (4.0, 4.0));
    }

    #[test]
    fn folds_reject_degenerate() {
        assert!(stratified_folds(&[1.0, -1.0, 1.0, -1.0], 1, 0).is_err());
        assert!(stratified_folds(&[1.0, -1.0, 1.0], 4, 0).is_err());
        assert!(stratified_folds(&[1.0, -1.0, 1.0, 1.0], 2, 0).is_err());
    }

    proptest! {
        #[test]
        fn folds_partition_and_balance(labels in proptest::collection::vec(any::<bool>(), 4..80), k in 2usize..8, seed in 0u64..1000) {
            let y: Vec<f64> = labels.iter().map(|&b| if b { 1.0 } else { -1.0 }).collect();
            let pos = y.iter().filter(|&&v| v > 0.0).count();
            prop_assume!(pos >= 2 && y.len() - pos >= 2 && k <= y.len());
            let a = stratified_folds(&y, k, seed).unwrap();
            prop_assert!(a.iter().all(|&f| f < k));
            for class in [1.0, -1.0] {
                let mut counts = vec![0usize; k];
                for (i, &f) in a.iter().enumerate() {
                    if y[i] == class { counts[f] += 1; }
                }
                prop_assert!(counts.iter().max().unwrap() - counts.iter().min().unwrap() <= 1);
            }
            let mut totals = vec![0usize; k];
            for &f in &a { totals[f] += 1; }
            prop_assert!(totals.iter().max().unwrap() - totals.iter().min().unwrap() <= 1);
            prop_assert_eq!(a, stratified_folds(&y, k, seed).unwrap());
        }
    }

    #[test]
    fn leave_one_out_separable() {
        let x: Array2<f64> = array![[-3.0], [-2.0], [-1.5], [1.5], [2.0], [3.0]];
        let y = vec![-1.0, -1.0, -1.0, 1.0, 1.0, 1.0];
        let data = Dataset::new(x, y).unwrap();
        let loss = LossSpec::new(0.5).unwrap();
        let grid = [0.1, 0.01, 0.001];
        let r = cross_validate(&data, &loss, &PenaltySpec::lasso(1.0).unwrap(), &grid, 6, 1, Engine::Gcd, &SolverOptions::default(), CvMetric::Mr).unwrap();
        assert_eq!(r.mean_metric[r.index_min()], 0.0);
        assert!(r.lambda_1se >= r.lambda_min);
    }
}
