//! Replicated simulation experiments: path timings, cross-validated
//! accuracy and oracle verification.
//!
//! Timings are measured sequentially around the path fit only. Every other
//! cell depends only on the seeds and is identical across runs and thread
//! counts.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cv::{cross_validate, CvMetric};
use crate::data::standardize;
use crate::error::Result;
use crate::fit::{objective, Engine, SolverOptions};
use crate::loss::LossSpec;
use crate::metrics::{classification_report, predict, PerfReport, PerfSummary};
use crate::oracle::{hinge_l1_lp, prox_grad_fit, StepRule};
use crate::path::{default_ratio, fit_model, fit_path, lambda_grid, PathResult};
use crate::penalty::PenaltySpec;
use crate::simdata::{generate, generate_with_test, Scenario, ScenarioConfig};

/// Seed of replication `rep`.
pub fn rep_seed(base: u64, rep: usize) -> u64 {
    base.wrapping_add(rep as u64)
}

#[derive(Debug, Clone)]
pub struct TimingConfig {
    pub base: ScenarioConfig,
    pub reps: usize,
    pub deltas: Vec<f64>,
    pub n_lambda: usize,
    pub ratio: Option<f64>,
    pub lambda2: f64,
    pub opts: SolverOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRow {
    pub delta: f64,
    /// Mean wall time in seconds of one full path.
    pub gcd_time: f64,
    pub irls_time: f64,
    /// Mean over replications of the smallest test MR along the path.
    pub gcd_best_mr: f64,
    pub irls_best_mr: f64,
    /// Largest relative objective gap between the engines at any path point.
    pub max_rel_gap: f64,
    pub all_converged: bool,
}

impl TimingRow {
    pub const CSV_HEADER: &'static str = "delta,gcd_time,irls_time,gcd_best_mr,irls_best_mr,max_rel_gap,all_converged";

    pub fn csv_row(&self, with_times: bool) -> String {
        let t = |v: f64| if with_times { format!("{v:.6}") } else { "NA".to_string() };
        format!(
            "{},{},{},{},{},{:.3e},{}",
            self.delta,
            t(self.gcd_time),
            t(self.irls_time),
            self.gcd_best_mr,
            self.irls_best_mr,
            self.max_rel_gap,
            self.all_converged
        )
    }
}

fn best_test_mr(path: &PathResult, design: &crate::data::StandardizedDesign, x: &ndarray::Array2<f64>, y: &[f64]) -> Result<f64> {
    let mut best = f64::INFINITY;
    for fit in &path.fits {
        let pred = predict(&fit.destandardize(design)?, x)?;
        best = best.min(classification_report(y, &pred)?.mr);
    }
    Ok(best)
}

/// Path timings of both engines for every `delta`, averaged over replications.
pub fn run_timing(cfg: &TimingConfig) -> Result<Vec<TimingRow>> {
    let mut rows = Vec::with_capacity(cfg.deltas.len());
    for &delta in &cfg.deltas {
        let loss = LossSpec::new(delta)?;
        let mut row = TimingRow {
            delta,
            gcd_time: 0.0,
            irls_time: 0.0,
            gcd_best_mr: 0.0,
            irls_best_mr: 0.0,
            max_rel_gap: 0.0,
            all_converged: true,
        };
        for rep in 0..cfg.reps {
            let sim_cfg = ScenarioConfig { seed: rep_seed(cfg.base.seed, rep), ..cfg.base };
            let (train, test) = generate_with_test(&sim_cfg, sim_cfg.n)?;
            let design = standardize(&train.data)?;
            let y = train.data.y();
            let pen = PenaltySpec::elastic_net(1.0, cfg.lambda2)?;
            let ratio = cfg.ratio.unwrap_or_else(|| default_ratio(design.n(), design.p_total()));
            let grid = lambda_grid(&design, y, &loss, &pen, cfg.n_lambda, ratio)?;
            let mut paths = Vec::with_capacity(2);
            for engine in [Engine::Gcd, Engine::Irls] {
                let start = Instant::now();
                let path = fit_path(&design, y, &loss, &pen, &grid, engine, &cfg.opts)?;
                let secs = start.elapsed().as_secs_f64();
                let mr = best_test_mr(&path, &design, test.data.x(), test.data.y())?;
                match engine {
                    Engine::Gcd => {
                        row.gcd_time += secs;
                        row.gcd_best_mr += mr;
                    }
                    Engine::Irls => {
                        row.irls_time += secs;
                        row.irls_best_mr += mr;
                    }
                }
                row.all_converged &= path.all_converged();
                paths.push(path);
            }
            for (a, b) in paths[0].fits.iter().zip(&paths[1].fits) {
                let gap = (a.objective - b.objective).abs() / a.objective.abs().max(f64::MIN_POSITIVE);
                row.max_rel_gap = row.max_rel_gap.max(gap);
            }
        }
        let r = cfg.reps.max(1) as f64;
        row.gcd_time /= r;
        row.irls_time /= r;
        row.gcd_best_mr /= r;
        row.irls_best_mr /= r;
        rows.push(row);
    }
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct AccuracyConfig {
    pub base: ScenarioConfig,
    pub reps: usize,
    pub n_test: usize,
    pub folds: usize,
    pub delta: f64,
    /// `lambda2` is held fixed while CV picks `lambda1`.
    pub penalty: PenaltySpec,
    pub n_lambda: usize,
    pub ratio: Option<f64>,
    pub engine: Engine,
    pub opts: SolverOptions,
}

/// One replication: generate, choose `lambda1` by CV on the training set,
/// refit on the whole training set and score on the test set.
pub fn accuracy_replication(cfg: &AccuracyConfig, rep: usize) -> Result<PerfReport> {
    let sim_cfg = ScenarioConfig { seed: rep_seed(cfg.base.seed, rep), ..cfg.base };
    let (train, test) = generate_with_test(&sim_cfg, cfg.n_test)?;
    let loss = LossSpec::new(cfg.delta)?;
    let design = standardize(&train.data)?;
    let y = train.data.y();
    let ratio = cfg.ratio.unwrap_or_else(|| default_ratio(design.n(), design.p_total()));
    let grid = lambda_grid(&design, y, &loss, &cfg.penalty, cfg.n_lambda, ratio)?;
    let cv = cross_validate(&train.data, &loss, &cfg.penalty, &grid, cfg.folds, sim_cfg.seed, cfg.engine, &cfg.opts, CvMetric::Mr)?;
    let path = fit_path(&design, y, &loss, &cfg.penalty, &grid[..=cv.index_min()], cfg.engine, &cfg.opts)?;
    let fit = path.fits.last().expect("nonempty path").destandardize(&design)?;
    let pred = predict(&fit, test.data.x())?;
    PerfReport::evaluate(test.data.y(), &pred, &train.beta_true, &fit.beta)
}

/// Per-replication reports (in replication order) and their means.
pub fn run_accuracy(cfg: &AccuracyConfig) -> Result<(Vec<PerfReport>, Option<PerfSummary>)> {
    let reports = (0..cfg.reps)
        .into_par_iter()
        .map(|rep| accuracy_replication(cfg, rep))
        .collect::<Result<Vec<_>>>()?;
    let summary = PerfSummary::from_reports(&reports);
    Ok((reports, summary))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyRow {
    pub check: String,
    pub instances: usize,
    pub failures: usize,
    /// Worst observed value of the checked quantity.
    pub worst: f64,
    pub tolerance: f64,
}

impl VerifyRow {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    pub const CSV_HEADER: &'static str = "check,instances,failures,worst,tolerance,status";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{:.3e},{:.1e},{}",
            self.check,
            self.instances,
            self.failures,
            self.worst,
            self.tolerance,
            if self.passed() { "pass" } else { "FAIL" }
        )
    }
}

fn small_instance(n: usize, p: usize, seed: u64) -> Result<crate::simdata::SimulatedData> {
    let mut cfg = ScenarioConfig::new(Scenario::S1, n, p, seed);
    cfg.rho = 0.3;
    generate(&cfg)
}

/// Engines against the proximal-gradient oracle, and the hinge-LP sandwich.
pub fn run_verify(reps: usize, seed: u64) -> Result<Vec<VerifyRow>> {
    const AGREE_TOL: f64 = 1e-6;
    const SANDWICH_SLACK: f64 = 1e-9;
    let opts = SolverOptions { tol: 1e-10, ..SolverOptions::default() };
    let agree: Vec<Vec<f64>> = (0..reps)
        .into_par_iter()
        .map(|rep| -> Result<Vec<f64>> {
            let s = rep_seed(seed, rep);
            let sim = small_instance(20, 5, s)?;
            let design = standardize(&sim.data)?;
            let y = sim.data.y();
            let loss = LossSpec::new([0.1, 0.5, 1.0, 2.0][rep % 4])?;
            let base = PenaltySpec::elastic_net(1.0, [0.0, 0.01, 0.1][rep % 3])?;
            let grid = lambda_grid(&design, y, &loss, &base, 10, 0.05)?;
            let pen = base.with_lambda1(grid[3 + rep % 6])?;
            let oracle = prox_grad_fit(&design, y, &loss, &pen, StepRule::Lipschitz, 1e-14, 20_000_000)?;
            [Engine::Gcd, Engine::Irls]
                .iter()
                .map(|&engine| {
                    let fit = fit_model(&design, y, &loss, &pen, engine, &opts, None)?;
                    let obj = objective(&design, y, &loss, &pen, fit.beta0, &fit.beta);
                    Ok((obj - oracle.objective).abs() / oracle.objective.abs())
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (k, engine) in [Engine::Gcd, Engine::Irls].iter().enumerate() {
        let gaps: Vec<f64> = agree.iter().map(|g| g[k]).collect();
        rows.push(VerifyRow {
            check: format!("oracle_agreement_{}", engine.name()),
            instances: gaps.len(),
            failures: gaps.iter().filter(|&&g| !(g <= AGREE_TOL)).count(),
            worst: gaps.iter().cloned().fold(0.0, f64::max),
            tolerance: AGREE_TOL,
        });
    }
    let sandwich_reps = reps.min(10);
    for delta in [0.5, 2.0] {
        let loss = LossSpec::new(delta)?;
        let outcomes: Vec<(f64, f64)> = (0..sandwich_reps)
            .into_par_iter()
            .map(|rep| -> Result<(f64, f64)> {
                let sim = small_instance(40, 8, rep_seed(seed ^ 0x5a5a, rep))?;
                let design = standardize(&sim.data)?;
                let y = sim.data.y();
                let lambda1 = 0.02 * (1 + rep % 5) as f64;
                let lp = hinge_l1_lp(&design, y, lambda1)?;
                let pen = PenaltySpec::lasso(lambda1)?;
                let fit = fit_model(&design, y, &loss, &pen, Engine::Irls, &opts, None)?;
                // (lower violation, upper violation beyond delta)
                Ok((lp.objective - fit.objective, fit.objective - lp.objective - delta))
            })
            .collect::<Result<_>>()?;
        rows.push(VerifyRow {
            check: format!("lp_sandwich_lower_delta{delta}"),
            instances: outcomes.len(),
            failures: outcomes.iter().filter(|o| o.0 > 0.0).count(),
            worst: outcomes.iter().map(|o| o.0).fold(f64::NEG_INFINITY, f64::max),
            tolerance: 0.0,
        });
        rows.push(VerifyRow {
            check: format!("lp_sandwich_upper_delta{delta}"),
            instances: outcomes.len(),
            failures: outcomes.iter().filter(|o| o.1 > SANDWICH_SLACK).count(),
            worst: outcomes.iter().map(|o| o.1).fold(f64::NEG_INFINITY, f64::max),
            tolerance: SANDWICH_SLACK,
        });
    }
    Ok(rows)
}
