//! Simulation scenarios for sparse classification benchmarks.
//!
//! Features are compound-symmetric Gaussians: `x = sqrt(rho) g 1 +
//! sqrt(1 - rho) eps` with one shared `g` per row. All randomness comes from
//! `ChaCha8Rng::seed_from_u64(seed)`, drawn in a fixed order (coefficients,
//! then rows, each row as `g, eps_1..eps_p, noise, label`), so output is
//! reproducible across platforms.

use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::data::{write_csv, Dataset};
use crate::error::{BernError, Result};

/// Draws used to calibrate the Scenario 3 intercept.
pub const CALIBRATION_DRAWS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    /// Alternating, geometrically decaying signal on the first 50 features.
    S1,
    /// Blocks of +-1 signal on features 1-25 and 51-75.
    S2,
    /// `floor(p xi)` small random effects and an unbalanced (30%) positive class.
    S3,
}

impl std::str::FromStr for Scenario {
    type Err = BernError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "s1" | "1" => Ok(Scenario::S1),
            "s2" | "2" => Ok(Scenario::S2),
            "s3" | "3" => Ok(Scenario::S3),
            other => Err(BernError::InvalidConfig(format!("unknown scenario `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub n: usize,
    pub p: usize,
    pub rho: f64,
    /// `beta' Sigma beta / sigma^2` (S1, S2).
    pub snr: f64,
    /// Fraction of active features (S3).
    pub xi: f64,
    /// Marginal `P(y = +1)` (S3).
    pub target_prob: f64,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn new(scenario: Scenario, n: usize, p: usize, seed: u64) -> Self {
        ScenarioConfig { scenario, n, p, rho: 0.0, snr: 3.0, xi: 0.05, target_prob: 0.3, seed }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(BernError::InvalidConfig(m));
        if self.n < 2 || self.p < 1 {
            return bad(format!("need n >= 2 and p >= 1, got n = {}, p = {}", self.n, self.p));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return bad(format!("rho must be in [0, 1), got {}", self.rho));
        }
        match self.scenario {
            Scenario::S1 | Scenario::S2 => {
                if !(self.snr.is_finite() && self.snr > 0.0) {
                    return bad(format!("snr must be > 0, got {}", self.snr));
                }
            }
            Scenario::S3 => {
                if !(self.xi > 0.0 && self.xi <= 1.0) || (self.p as f64 * self.xi).floor() < 1.0 {
                    return bad(format!("xi must be in (0, 1] with floor(p xi) >= 1, got {}", self.xi));
                }
                if !(self.target_prob > 0.0 && self.target_prob < 1.0) {
                    return bad(format!("target_prob must be in (0, 1), got {}", self.target_prob));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SimulatedData {
    pub data: Dataset,
    pub beta_true: Vec<f64>,
    pub beta0_true: f64,
    /// Zero-based indices of the nonzero entries of `beta_true`.
    pub active_set: Vec<usize>,
}

/// Sidecar record of the generating truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub config: ScenarioConfig,
    pub beta0_true: f64,
    pub beta_true: Vec<f64>,
    pub active_set: Vec<usize>,
    pub noise_sd: f64,
}

/// Scenario 1 coefficient for the 1-based index `j`.
pub fn s1_coefficient(j: usize) -> f64 {
    if j > 50 {
        return 0.0;
    }
    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
    sign * (-(2.0 * j as f64 - 1.0) / 20.0).exp()
}

/// `beta' Sigma beta` under compound symmetry.
pub fn signal_variance(beta: &[f64], rho: f64) -> f64 {
    let sq: f64 = beta.iter().map(|b| b * b).sum();
    let s: f64 = beta.iter().sum();
    (1.0 - rho) * sq + rho * s * s
}

fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn draw_beta(cfg: &ScenarioConfig, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let p = cfg.p;
    match cfg.scenario {
        Scenario::S1 => (1..=p).map(s1_coefficient).collect(),
        Scenario::S2 => {
            let u = Uniform::new(0.9, 1.1).expect("valid range");
            (1..=p)
                .map(|j| match j {
                    1..=25 => u.sample(rng),
                    51..=75 => -1.0,
                    _ => 0.0,
                })
                .collect()
        }
        Scenario::S3 => {
            let s = (p as f64 * cfg.xi).floor() as usize;
            let flip = Bernoulli::new(0.3).expect("valid probability");
            let u = Uniform::new(0.0, 0.5).expect("valid range");
            let mut beta = vec![0.0; p];
            for b in beta.iter_mut().take(s) {
                let sign = if flip.sample(rng) { -1.0 } else { 1.0 };
                // Redraw the measure-zero case so the active set has exactly s entries.
                let mut mag = 0.0;
                while mag == 0.0 {
                    mag = u.sample(rng);
                }
                *b = sign * mag;
            }
            beta
        }
    }
}

/// Intercept giving marginal `P(y = +1) = target` when
/// `beta0 + x' beta ~ beta0 + N(0, tau^2)`.
///
/// Bisection on a Monte Carlo average over a fixed set of normal draws
/// (common random numbers, so the estimate is monotone in `beta0`).
pub fn calibrate_intercept(tau: f64, target: f64, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let draws: Vec<f64> = (0..CALIBRATION_DRAWS).map(|_| tau * rng.sample::<f64, _>(StandardNormal)).collect();
    let marginal = |b0: f64| draws.iter().map(|&z| logistic(b0 + z)).sum::<f64>() / draws.len() as f64;
    let (mut lo, mut hi) = (-50.0 - 10.0 * tau, 50.0 + 10.0 * tau);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if marginal(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

struct Truthful {
    beta: Vec<f64>,
    beta0: f64,
    noise_sd: f64,
}

fn truth_for(cfg: &ScenarioConfig, rng: &mut ChaCha8Rng) -> Truthful {
    let beta = draw_beta(cfg, rng);
    let var = signal_variance(&beta, cfg.rho);
    match cfg.scenario {
        Scenario::S1 | Scenario::S2 => Truthful { beta, beta0: 0.0, noise_sd: (var / cfg.snr).sqrt() },
        Scenario::S3 => {
            let beta0 = calibrate_intercept(var.sqrt(), cfg.target_prob, cfg.seed);
            Truthful { beta, beta0, noise_sd: 0.0 }
        }
    }
}

fn draw_rows(cfg: &ScenarioConfig, n: usize, truth: &Truthful, rng: &mut ChaCha8Rng) -> Result<Dataset> {
    let p = cfg.p;
    let (a, b) = (cfg.rho.sqrt(), (1.0 - cfg.rho).sqrt());
    let mut x = Array2::zeros((n, p));
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let g: f64 = rng.sample(StandardNormal);
        let mut z = truth.beta0;
        for j in 0..p {
            let e: f64 = rng.sample(StandardNormal);
            let v = a * g + b * e;
            x[[i, j]] = v;
            z += v * truth.beta[j];
        }
        if truth.noise_sd > 0.0 {
            z += truth.noise_sd * rng.sample::<f64, _>(StandardNormal);
        }
        let u: f64 = rng.random();
        y.push(if u < logistic(z) { 1.0 } else { -1.0 });
    }
    let names = (1..=p).map(|j| format!("x{j}")).collect();
    Dataset::with_names(x, y, names)
}

fn package(data: Dataset, truth: &Truthful) -> SimulatedData {
    SimulatedData {
        data,
        active_set: truth.beta.iter().enumerate().filter(|(_, &b)| b != 0.0).map(|(j, _)| j).collect(),
        beta_true: truth.beta.clone(),
        beta0_true: truth.beta0,
    }
}

pub fn generate(cfg: &ScenarioConfig) -> Result<SimulatedData> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let truth = truth_for(cfg, &mut rng);
    Ok(package(draw_rows(cfg, cfg.n, &truth, &mut rng)?, &truth))
}

/// Training set of `cfg.n` rows plus an independent test set of `n_test`
/// rows from the same coefficients. The training set equals `generate(cfg)`.
pub fn generate_with_test(cfg: &ScenarioConfig, n_test: usize) -> Result<(SimulatedData, SimulatedData)> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let truth = truth_for(cfg, &mut rng);
    let train = draw_rows(cfg, cfg.n, &truth, &mut rng)?;
    let test = draw_rows(cfg, n_test, &truth, &mut rng)?;
    Ok((package(train, &truth), package(test, &truth)))
}

impl SimulatedData {
    pub fn truth(&self, config: &ScenarioConfig) -> Truth {
        let noise_sd = match config.scenario {
            Scenario::S3 => 0.0,
            _ => (signal_variance(&self.beta_true, config.rho) / config.snr).sqrt(),
        };
        Truth {
            config: *config,
            beta0_true: self.beta0_true,
            beta_true: self.beta_true.clone(),
            active_set: self.active_set.clone(),
            noise_sd,
        }
    }

    /// Writes the data as CSV (label column `y` first) and the truth as JSON.
    pub fn write_files(&self, config: &ScenarioConfig, csv_path: &Path, truth_path: &Path) -> Result<()> {
        let file = std::fs::File::create(csv_path)?;
        write_csv(&self.data, "y", std::io::BufWriter::new(file))?;
        let mut out = std::io::BufWriter::new(std::fs::File::create(truth_path)?);
        serde_json::to_writer_pretty(&mut out, &self.truth(config))?;
        writeln!(out)?;
        Ok(())
    }
}
