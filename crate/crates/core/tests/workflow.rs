mod common;

use bernsvm::cv::{cross_validate, stratified_folds, CvMetric};
use bernsvm::lla::{lla_fit_with_history, LlaOptions};
use bernsvm::metrics::{classification_report, predict, PerfReport};
use bernsvm::oracle::hinge_l1_lp;
use bernsvm::persist::ModelFile;
use bernsvm::simdata::{generate_with_test, Scenario, ScenarioConfig};
use bernsvm::{
    fit_model, fit_path, lambda_grid, read_csv, standardize, write_csv, Dataset, Engine, LossSpec, PenaltySpec,
    SolverOptions,
};
use common::toy;
use ndarray::Array2;

#[test]
fn simulate_cv_refit_persist_predict() {
    let mut cfg = ScenarioConfig::new(Scenario::S3, 60, 120, 4);
    cfg.rho = 0.8;
    cfg.xi = 0.3;
    let (train, test) = generate_with_test(&cfg, 200).unwrap();

    let mut buf = Vec::new();
    write_csv(&train.data, "y", &mut buf).unwrap();
    let data = read_csv(buf.as_slice(), "y").unwrap();
    assert_eq!(data.x(), train.data.x());
    assert_eq!(data.y(), train.data.y());

    let design = standardize(&data).unwrap();
    let loss = LossSpec::new(2.0).unwrap();
    let pen = PenaltySpec::elastic_net(1.0, 0.75).unwrap();
    let grid = lambda_grid(&design, data.y(), &loss, &pen, 30, 0.01).unwrap();
    let opts = SolverOptions::default();
    let cv = cross_validate(&data, &loss, &pen, &grid, 5, 9, Engine::Gcd, &opts, CvMetric::Mr).unwrap();
    assert!(cv.lambda_1se >= cv.lambda_min);

    let path = fit_path(&design, data.y(), &loss, &pen, &grid[..=cv.index_min()], Engine::Gcd, &opts).unwrap();
    let fit = path.fits.last().unwrap();
    let raw = fit.destandardize(&design).unwrap();

    let file = ModelFile::from_fit(fit, &design, data.feature_names(), "y").unwrap();
    let mut json = Vec::new();
    file.write(&mut json).unwrap();
    let loaded = ModelFile::read(json.as_slice()).unwrap().to_fit();
    let direct = predict(&raw, test.data.x()).unwrap();
    assert_eq!(predict(&loaded, test.data.x()).unwrap(), direct);

    let report = PerfReport::evaluate(test.data.y(), &direct, &test.beta_true, &raw.beta).unwrap();
    assert!(report.mr < 0.3, "test MR {}", report.mr);
    assert!(((1.0 - report.se) + (1.0 - report.sp) - report.mr).abs() < 1e-12);
}

#[test]
fn raw_and_standardized_models_score_identically() {
    let (data, design) = toy(40, 5, 21);
    let loss = LossSpec::new(1.0).unwrap();
    let fit = fit_model(&design, data.y(), &loss, &PenaltySpec::elastic_net(0.01, 0.0).unwrap(), Engine::Irls, &SolverOptions::default(), None).unwrap();
    let raw = fit.destandardize(&design).unwrap();
    let std_scores = design.linear_predictor(fit.beta0, &fit.beta);
    let raw_scores = bernsvm::metrics::decision_function(&raw, data.x()).unwrap();
    for (a, b) in std_scores.iter().zip(&raw_scores) {
        assert!((a - b).abs() <= 1e-10);
    }
}

#[test]
fn cv_is_bitwise_reproducible() {
    let (data, design) = toy(50, 8, 22);
    let loss = LossSpec::new(2.0).unwrap();
    let pen = PenaltySpec::lasso(1.0).unwrap();
    let grid = lambda_grid(&design, data.y(), &loss, &pen, 15, 0.05).unwrap();
    let run = || cross_validate(&data, &loss, &pen, &grid, 5, 3, Engine::Irls, &SolverOptions::default(), CvMetric::Mr).unwrap();
    let a = run();
    let b = run();
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn identical_folds_have_zero_spread() {
    // Every row of a class is the same point, so every fold sees the same problem.
    let n = 20;
    let y: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let x = Array2::from_shape_fn((n, 2), |(i, j)| if y[i] > 0.0 { 1.0 + j as f64 } else { -1.0 });
    let data = Dataset::new(x, y).unwrap();
    let design = standardize(&data).unwrap();
    let loss = LossSpec::new(0.5).unwrap();
    let pen = PenaltySpec::lasso(1.0).unwrap();
    let grid = lambda_grid(&design, data.y(), &loss, &pen, 8, 0.05).unwrap();
    let cv = cross_validate(&data, &loss, &pen, &grid, 5, 1, Engine::Gcd, &SolverOptions::default(), CvMetric::Mr).unwrap();
    assert!(cv.sd_metric.iter().all(|&s| s == 0.0));
}

#[test]
fn fold_standardizers_never_see_validation_rows() {
    let (data, _) = toy(30, 3, 23);
    // Skew one column so that dropping rows moves its mean.
    let mut x = data.x().clone();
    for i in 0..x.nrows() {
        x[[i, 0]] = (i as f64).powi(2);
    }
    let data = Dataset::new(x, data.y().to_vec()).unwrap();
    let full = standardize(&data).unwrap();
    let assignment = stratified_folds(data.y(), 3, 5).unwrap();
    for k in 0..3 {
        let train: Vec<usize> = (0..data.n()).filter(|&i| assignment[i] != k).collect();
        let fold = standardize(&data.subset(&train).unwrap()).unwrap();
        let mean: f64 = train.iter().map(|&i| data.x()[[i, 0]]).sum::<f64>() / train.len() as f64;
        assert!((fold.centers()[0] - mean).abs() <= 1e-9 * mean.abs());
        assert!(fold.centers()[0] != full.centers()[0]);
    }
}

#[test]
fn smoothed_optimum_is_sandwiched_by_the_hinge_lp() {
    for seed in 0..3 {
        let (data, design) = toy(30, 6, 30 + seed);
        let y = data.y();
        let lambda1 = 0.03;
        let lp = hinge_l1_lp(&design, y, lambda1).unwrap();
        assert!((lp.objective - lp.dual_objective).abs() <= 1e-9);
        for &delta in &[0.5, 2.0] {
            let loss = LossSpec::new(delta).unwrap();
            let opts = SolverOptions { tol: 1e-10, ..Default::default() };
            let fit = fit_model(&design, y, &loss, &PenaltySpec::lasso(lambda1).unwrap(), Engine::Gcd, &opts, None).unwrap();
            assert!(lp.objective <= fit.objective + 1e-9);
            assert!(fit.objective <= lp.objective + delta + 1e-9);
        }
    }
}

#[test]
fn lla_refines_without_hurting_accuracy() {
    let (data, design) = toy(80, 20, 40);
    let (test, _) = toy(400, 20, 40);
    let loss = LossSpec::new(2.0).unwrap();
    for pen in [PenaltySpec::scad(0.02, 0.0, 3.7).unwrap(), PenaltySpec::mcp(0.02, 0.0, 3.0).unwrap()] {
        let hist = lla_fit_with_history(&design, data.y(), &loss, &pen, &SolverOptions::default(), Engine::Irls, &LlaOptions::default(), None).unwrap();
        for w in hist.windows(2) {
            assert!(w[1].fit.objective <= w[0].fit.objective + 1e-10);
        }
        let mr = |i: usize| {
            let raw = hist[i].fit.destandardize(&design).unwrap();
            classification_report(test.y(), &predict(&raw, test.x()).unwrap()).unwrap().mr
        };
        assert!(mr(hist.len() - 1) <= mr(0) + 0.05);
    }
}
