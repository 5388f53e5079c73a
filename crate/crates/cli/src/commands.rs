use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::anyhow;
use clap::{Args, Parser, Subcommand, ValueEnum};

use bernsvm::cv::{cross_validate, CvMetric};
use bernsvm::experiments::{run_accuracy, run_timing, run_verify, AccuracyConfig, TimingConfig, TimingRow, VerifyRow};
use bernsvm::metrics::{classification_report, decision_function, predict, PerfReport};
use bernsvm::path::{default_ratio, fit_model, fit_path, lambda_grid, DEFAULT_N_LAMBDA};
use bernsvm::persist::ModelFile;
use bernsvm::simdata::{generate_with_test, Scenario, ScenarioConfig};
use bernsvm::data::read_features;
use bernsvm::{read_csv_path, standardize, BernError, Dataset, Engine, LossSpec, PenaltyFamily, PenaltySpec, SolverOptions};

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_NOT_CONVERGED: u8 = 3;

pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl From<BernError> for Failure {
    fn from(e: BernError) -> Self {
        let code = match &e {
            BernError::InvalidDelta(_)
            | BernError::InvalidPenalty(_)
            | BernError::InvalidOptions(_)
            | BernError::InvalidConfig(_)
            | BernError::Folds(_)
            | BernError::DimensionMismatch { .. } => EXIT_USAGE,
            _ => EXIT_DATA,
        };
        Failure { code, error: e.into() }
    }
}

fn usage(msg: impl std::fmt::Display) -> Failure {
    Failure { code: EXIT_USAGE, error: anyhow!("{msg}") }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure { code: EXIT_DATA, error: anyhow!("{}: {e}", path.display()) }
}

type CmdResult = std::result::Result<(), Failure>;

#[derive(Parser, Debug)]
#[command(name = "bernsvm", version, about = "Sparse linear SVMs with the Bernstein-smoothed hinge loss")]
pub struct Cli {
    /// Worker threads for cv and bench; 0 uses every core.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Log more (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Fit one model and write it as JSON.
    Fit(FitArgs),
    /// Apply a saved model to a CSV file.
    Predict(PredictArgs),
    /// Fit a warm-started regularization path.
    Path(PathArgs),
    /// Choose lambda1 by stratified k-fold cross-validation.
    Cv(CvArgs),
    /// Generate a simulated dataset.
    Simulate(SimulateArgs),
    /// Replicated timing, accuracy or verification experiments.
    Bench(BenchArgs),
}

#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    /// Headered CSV file.
    #[arg(long)]
    pub data: PathBuf,
    /// Name of the label column (values +-1 or 0/1).
    #[arg(long, default_value = "y")]
    pub label: String,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// en, lasso, aen, scad or mcp.
    #[arg(long, default_value = "en")]
    pub penalty: String,
    #[arg(long, default_value_t = 0.0)]
    pub lambda2: f64,
    /// Half-width of the smoothing band around margin 1.
    #[arg(long, default_value_t = 2.0)]
    pub delta: f64,
    #[arg(long, value_enum, default_value_t = EngineArg::Irls)]
    pub engine: EngineArg,
    /// Concavity parameter of SCAD (default 3.7) or MCP (default 3).
    #[arg(long)]
    pub a: Option<f64>,
    /// Comma-separated positive adaptive weights, one per feature (aen).
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1e-7)]
    pub tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_passes: usize,
    /// Exit with code 3 if any fit fails to converge.
    #[arg(long)]
    pub strict: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineArg {
    Gcd,
    Irls,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Gcd => Engine::Gcd,
            EngineArg::Irls => Engine::Irls,
        }
    }
}

impl ModelArgs {
    fn loss(&self) -> Result<LossSpec, Failure> {
        Ok(LossSpec::new(self.delta)?)
    }

    fn penalty(&self, lambda1: f64) -> Result<PenaltySpec, Failure> {
        let family: PenaltyFamily = self.penalty.parse()?;
        if self.penalty.eq_ignore_ascii_case("lasso") && self.lambda2 != 0.0 {
            return Err(usage("the lasso penalty has lambda2 = 0"));
        }
        Ok(PenaltySpec::from_parts(family, lambda1, self.lambda2, self.weights.clone(), self.a)?)
    }

    fn opts(&self) -> Result<SolverOptions, Failure> {
        let opts = SolverOptions { tol: self.tol, max_passes: self.max_passes, ..SolverOptions::default() };
        opts.validate()?;
        Ok(opts)
    }
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub lambda1: f64,
    /// Model file; the JSON goes to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Label column; when present in the file, MR/SE/SP are reported.
    #[arg(long)]
    pub label: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GridArgs {
    #[arg(long, default_value_t = DEFAULT_N_LAMBDA)]
    pub n_lambda: usize,
    /// lambda_min / lambda_max; 0.01 when n < p, else 1e-4.
    #[arg(long)]
    pub ratio: Option<f64>,
}

#[derive(Args, Debug)]
pub struct PathArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Path table (CSV); stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CvArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// CV table (CSV); stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Where to write the model refitted at lambda_min on all rows.
    #[arg(long)]
    pub model_out: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioArg {
    S1,
    S2,
    S3,
}

impl From<ScenarioArg> for Scenario {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::S1 => Scenario::S1,
            ScenarioArg::S2 => Scenario::S2,
            ScenarioArg::S3 => Scenario::S3,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct ScenarioArgs {
    #[arg(long, value_enum, default_value_t = ScenarioArg::S1)]
    pub scenario: ScenarioArg,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long, default_value_t = 3.0)]
    pub snr: f64,
    #[arg(long)]
    pub xi: Option<f64>,
    #[arg(long, default_value_t = 0.3)]
    pub target_prob: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

impl ScenarioArgs {
    /// Defaults follow the published designs: S1 n=100, p=5000, rho=0.5;
    /// S2 n=100, p=1000, rho=0.5; S3 n=50, p=800, rho=0.8, xi=0.3.
    fn config(&self) -> Result<ScenarioConfig, Failure> {
        let scenario: Scenario = self.scenario.into();
        let (n, p, rho, xi) = match scenario {
            Scenario::S1 => (100, 5000, 0.5, 0.05),
            Scenario::S2 => (100, 1000, 0.5, 0.05),
            Scenario::S3 => (50, 800, 0.8, 0.3),
        };
        let cfg = ScenarioConfig {
            scenario,
            n: self.n.unwrap_or(n),
            p: self.p.unwrap_or(p),
            rho: self.rho.unwrap_or(rho),
            snr: self.snr,
            xi: self.xi.unwrap_or(xi),
            target_prob: self.target_prob,
            seed: self.seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    /// Data CSV (label column `y` first).
    #[arg(long, default_value = "sim.csv")]
    pub out: PathBuf,
    /// Truth sidecar; defaults to the data path with `.truth.json`.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Also write an independent test set of this many rows.
    #[arg(long)]
    pub n_test: Option<usize>,
    #[arg(long)]
    pub test_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[arg(long, default_value_t = 10)]
    pub reps: usize,
    /// Smoothing widths for the timing table (S1, S2).
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.1,0.5,1,2")]
    pub deltas: Vec<f64>,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Ridge weight; defaults to 0 for timing and 0.75 for S3 accuracy.
    #[arg(long)]
    pub lambda2: Option<f64>,
    /// S3 accuracy: en or lasso.
    #[arg(long, default_value = "en")]
    pub penalty: String,
    /// S3 accuracy: smoothing width.
    #[arg(long, default_value_t = 2.0)]
    pub delta: f64,
    /// S3 accuracy: engine (default gcd, which is much faster on strongly
    /// correlated designs; both engines reach the same optimum).
    #[arg(long, value_enum)]
    pub engine: Option<EngineArg>,
    #[arg(long, default_value_t = 10)]
    pub folds: usize,
    #[arg(long, default_value_t = 200)]
    pub n_test: usize,
    /// Run the oracle agreement and hinge-LP sandwich checks instead.
    #[arg(long)]
    pub verify: bool,
    /// Write NA instead of wall times, for reproducible output.
    #[arg(long)]
    pub no_times: bool,
    /// S3 accuracy: per-replication reports (CSV).
    #[arg(long)]
    pub per_rep: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Exit with code 3 if a verification row fails or a fit does not converge.
    #[arg(long)]
    pub strict: bool,
}

pub fn run(command: Command) -> CmdResult {
    match command {
        Command::Fit(a) => cmd_fit(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Path(a) => cmd_path(a),
        Command::Cv(a) => cmd_cv(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

fn load(args: &DataArgs) -> Result<Dataset, Failure> {
    Ok(read_csv_path(&args.data, &args.label)?)
}

/// Writes `content` to `path`, or to stdout when there is no path.
/// Returns whether stdout was used.
fn emit(path: Option<&Path>, content: &str) -> Result<bool, Failure> {
    match path {
        Some(p) => {
            fs::write(p, content).map_err(|e| io_failure(p, e))?;
            Ok(false)
        }
        None => {
            print!("{content}");
            Ok(true)
        }
    }
}

/// Summary lines go to stdout unless stdout already carries the artifact.
fn summary(to_stderr: bool, text: &str) {
    if to_stderr {
        eprint!("{text}");
    } else {
        print!("{text}");
    }
}

fn not_converged(what: &str) -> Failure {
    Failure { code: EXIT_NOT_CONVERGED, error: anyhow!("{what} did not converge") }
}

fn cmd_fit(a: FitArgs) -> CmdResult {
    let data = load(&a.data)?;
    data.require_both_classes()?;
    let loss = a.model.loss()?;
    let penalty = a.model.penalty(a.lambda1)?;
    let opts = a.model.opts()?;
    let design = standardize(&data)?;
    let fit = fit_model(&design, data.y(), &loss, &penalty, a.model.engine.into(), &opts, None)?;
    let file = ModelFile::from_fit(&fit, &design, data.feature_names(), &a.data.label)?;
    let mut json = serde_json::to_string_pretty(&file).map_err(|e| Failure { code: EXIT_DATA, error: e.into() })?;
    json.push('\n');
    let on_stdout = emit(a.out.as_deref(), &json)?;
    let mut s = String::new();
    let _ = writeln!(s, "engine={}", file.engine.name());
    let _ = writeln!(s, "penalty={}", file.penalty.family().name());
    let _ = writeln!(s, "lambda1={}", file.penalty.lambda1());
    let _ = writeln!(s, "lambda2={}", file.penalty.lambda2());
    let _ = writeln!(s, "delta={}", file.delta);
    let _ = writeln!(s, "converged={}", file.converged);
    let _ = writeln!(s, "passes={}", file.passes);
    let _ = writeln!(s, "objective={}", file.training_objective);
    let _ = writeln!(s, "nonzero={}", file.nonzero);
    summary(on_stdout, &s);
    if a.model.strict && !fit.converged {
        return Err(not_converged("the fit"));
    }
    Ok(())
}

fn cmd_predict(a: PredictArgs) -> CmdResult {
    let model = ModelFile::load(&a.model)?;
    let label = a.label.clone().unwrap_or_else(|| model.label.clone());
    let text = fs::read_to_string(&a.data).map_err(|e| io_failure(&a.data, e))?;
    let x = read_features(text.as_bytes(), &model.feature_names)?;
    let has_label = csv_header(&text).iter().any(|h| *h == label);
    let y = if has_label { Some(bernsvm::read_csv(text.as_bytes(), &label)?.y().to_vec()) } else { None };
    let fit = model.to_fit();
    let scores = decision_function(&fit, &x)?;
    let pred = predict(&fit, &x)?;
    let mut out = String::from("score,prediction\n");
    for (s, p) in scores.iter().zip(&pred) {
        let _ = writeln!(out, "{s},{p}");
    }
    let on_stdout = emit(a.out.as_deref(), &out)?;
    if let Some(y) = y {
        let r = classification_report(&y, &pred)?;
        summary(on_stdout, &format!("mr={}\nse={}\nsp={}\nn_test={}\n", r.mr, r.se, r.sp, y.len()));
    }
    Ok(())
}

fn csv_header(text: &str) -> Vec<String> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    rdr.headers().map(|h| h.iter().map(str::to_string).collect()).unwrap_or_default()
}

fn grid_for(design: &bernsvm::StandardizedDesign, y: &[f64], loss: &LossSpec, pen: &PenaltySpec, g: &GridArgs) -> Result<Vec<f64>, Failure> {
    let ratio = g.ratio.unwrap_or_else(|| default_ratio(design.n(), design.p_total()));
    Ok(lambda_grid(design, y, loss, pen, g.n_lambda, ratio)?)
}

fn cmd_path(a: PathArgs) -> CmdResult {
    let data = load(&a.data)?;
    data.require_both_classes()?;
    let loss = a.model.loss()?;
    let penalty = a.model.penalty(1.0)?;
    let opts = a.model.opts()?;
    let design = standardize(&data)?;
    let grid = grid_for(&design, data.y(), &loss, &penalty, &a.grid)?;
    let path = fit_path(&design, data.y(), &loss, &penalty, &grid, a.model.engine.into(), &opts)?;
    let mut out = String::from("lambda,nnz,objective,converged,passes\n");
    for (k, fit) in path.fits.iter().enumerate() {
        let _ = writeln!(out, "{},{},{},{},{}", path.lambdas[k], path.nonzero_counts[k], fit.objective, fit.converged, fit.passes);
    }
    emit(a.out.as_deref(), &out)?;
    if a.model.strict && !path.all_converged() {
        return Err(not_converged("a path fit"));
    }
    Ok(())
}

fn cmd_cv(a: CvArgs) -> CmdResult {
    let data = load(&a.data)?;
    data.require_both_classes()?;
    let loss = a.model.loss()?;
    let penalty = a.model.penalty(1.0)?;
    let opts = a.model.opts()?;
    let engine: Engine = a.model.engine.into();
    let design = standardize(&data)?;
    let grid = grid_for(&design, data.y(), &loss, &penalty, &a.grid)?;
    let cv = cross_validate(&data, &loss, &penalty, &grid, a.folds, a.seed, engine, &opts, CvMetric::Mr)?;
    let path = fit_path(&design, data.y(), &loss, &penalty, &grid, engine, &opts)?;
    let mut out = String::from("lambda,mean_mr,sd_mr,nnz\n");
    for k in 0..grid.len() {
        let _ = writeln!(out, "{},{},{},{}", grid[k], cv.mean_metric[k], cv.sd_metric[k], path.nonzero_counts[k]);
    }
    let on_stdout = emit(a.out.as_deref(), &out)?;
    let best = &path.fits[cv.index_min()];
    if let Some(p) = &a.model_out {
        let file = ModelFile::from_fit(best, &design, data.feature_names(), &a.data.label)?;
        file.save(p)?;
    }
    let mut s = String::new();
    let _ = writeln!(s, "folds={}", cv.folds);
    let _ = writeln!(s, "seed={}", cv.seed);
    let _ = writeln!(s, "lambda_min={}", cv.lambda_min);
    let _ = writeln!(s, "lambda_1se={}", cv.lambda_1se);
    let _ = writeln!(s, "cv_mr={}", cv.mean_metric[cv.index_min()]);
    let _ = writeln!(s, "nonzero={}", best.nonzero_count());
    summary(on_stdout, &s);
    if a.model.strict && !path.all_converged() {
        return Err(not_converged("a path fit"));
    }
    Ok(())
}

fn truth_path(data: &Path) -> PathBuf {
    data.with_extension("truth.json")
}

fn cmd_simulate(a: SimulateArgs) -> CmdResult {
    let cfg = a.scenario.config()?;
    let n_test = match (a.n_test, &a.test_out) {
        (Some(n), Some(_)) => n,
        (None, None) => 0,
        _ => return Err(usage("--n-test and --test-out go together")),
    };
    if a.n_test == Some(0) {
        return Err(usage("--n-test must be positive"));
    }
    let (train, test) = if n_test > 0 {
        let (tr, te) = generate_with_test(&cfg, n_test)?;
        (tr, Some(te))
    } else {
        (bernsvm::simdata::generate(&cfg)?, None)
    };
    let truth = a.truth.clone().unwrap_or_else(|| truth_path(&a.out));
    train.write_files(&cfg, &a.out, &truth)?;
    if let (Some(te), Some(path)) = (test, &a.test_out) {
        let file = fs::File::create(path).map_err(|e| io_failure(path, e))?;
        bernsvm::write_csv(&te.data, "y", std::io::BufWriter::new(file))?;
    }
    let positives = train.data.y().iter().filter(|&&v| v > 0.0).count();
    print!(
        "scenario={:?}\nn={}\np={}\nrho={}\nseed={}\nactive={}\npositives={}\ndata={}\ntruth={}\n",
        cfg.scenario,
        cfg.n,
        cfg.p,
        cfg.rho,
        cfg.seed,
        train.active_set.len(),
        positives,
        a.out.display(),
        truth.display()
    );
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> CmdResult {
    if a.reps == 0 {
        return Err(usage("--reps must be positive"));
    }
    let opts = SolverOptions::default();
    if a.verify {
        let rows = run_verify(a.reps, a.scenario.seed)?;
        let mut out = format!("{}\n", VerifyRow::CSV_HEADER);
        for r in &rows {
            let _ = writeln!(out, "{}", r.csv_row());
        }
        emit(a.out.as_deref(), &out)?;
        if a.strict && rows.iter().any(|r| !r.passed()) {
            return Err(Failure { code: EXIT_NOT_CONVERGED, error: anyhow!("a verification check failed") });
        }
        return Ok(());
    }
    let base = a.scenario.config()?;
    match base.scenario {
        Scenario::S1 | Scenario::S2 => {
            if a.deltas.is_empty() {
                return Err(usage("--deltas is empty"));
            }
            for &d in &a.deltas {
                LossSpec::new(d)?;
            }
            let cfg = TimingConfig {
                base,
                reps: a.reps,
                deltas: a.deltas.clone(),
                n_lambda: a.grid.n_lambda,
                ratio: a.grid.ratio,
                lambda2: a.lambda2.unwrap_or(0.0),
                opts,
            };
            let rows = run_timing(&cfg)?;
            let mut out = format!("{}\n", TimingRow::CSV_HEADER);
            for r in &rows {
                let _ = writeln!(out, "{}", r.csv_row(!a.no_times));
            }
            emit(a.out.as_deref(), &out)?;
            if a.strict && rows.iter().any(|r| !r.all_converged) {
                return Err(not_converged("a path fit"));
            }
        }
        Scenario::S3 => {
            let family: PenaltyFamily = a.penalty.parse()?;
            let lambda2 = match (family, a.penalty.eq_ignore_ascii_case("lasso")) {
                (_, true) => 0.0,
                (PenaltyFamily::ElasticNet, false) => a.lambda2.unwrap_or(0.75),
                _ => return Err(usage("accuracy benchmarks support en and lasso")),
            };
            let cfg = AccuracyConfig {
                base,
                reps: a.reps,
                n_test: a.n_test,
                folds: a.folds,
                delta: a.delta,
                penalty: PenaltySpec::elastic_net(1.0, lambda2)?,
                n_lambda: a.grid.n_lambda,
                ratio: a.grid.ratio,
                engine: a.engine.unwrap_or(EngineArg::Gcd).into(),
                opts,
            };
            let (reports, summary) = run_accuracy(&cfg)?;
            if let Some(p) = &a.per_rep {
                let mut s = format!("rep,{}\n", PerfReport::CSV_HEADER);
                for (k, r) in reports.iter().enumerate() {
                    let _ = writeln!(s, "{k},{}", r.csv_row());
                }
                fs::write(p, s).map_err(|e| io_failure(p, e))?;
            }
            let m = summary.expect("reps > 0");
            let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| format!("{x:.4}"));
            let out = format!(
                "scenario,rho,xi,penalty,lambda2,reps,mr,se,sp,pr,rc\ns3,{},{},{},{},{},{:.4},{:.4},{:.4},{},{}\n",
                base.rho,
                base.xi,
                a.penalty.to_ascii_lowercase(),
                lambda2,
                m.reps,
                m.mr,
                m.se,
                m.sp,
                opt(m.pr),
                opt(m.rc)
            );
            emit(a.out.as_deref(), &out)?;
        }
    }
    Ok(())
}
