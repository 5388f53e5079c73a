//! Shared workloads for the benchmarks.

use bernsvm::simdata::{generate, Scenario, ScenarioConfig};
use bernsvm::{lambda_grid, standardize, Dataset, LossSpec, PenaltySpec, StandardizedDesign};

/// A standardized simulated design with its labels and a Lasso path grid.
pub struct Workload {
    pub data: Dataset,
    pub design: StandardizedDesign,
    pub loss: LossSpec,
    pub penalty: PenaltySpec,
    pub grid: Vec<f64>,
}

impl Workload {
    /// Scenario 1 with correlation 0.5 and a path of `n_lambda` points down
    /// to `ratio * lambda_max`.
    pub fn scenario1(n: usize, p: usize, delta: f64, n_lambda: usize, ratio: f64, seed: u64) -> Workload {
        let mut cfg = ScenarioConfig::new(Scenario::S1, n, p, seed);
        cfg.rho = 0.5;
        let data = generate(&cfg).expect("valid scenario").data;
        let design = standardize(&data).expect("standardizable");
        let loss = LossSpec::new(delta).expect("positive delta");
        let penalty = PenaltySpec::lasso(1.0).expect("valid penalty");
        let grid = lambda_grid(&design, data.y(), &loss, &penalty, n_lambda, ratio).expect("grid");
        Workload { data, design, loss, penalty, grid }
    }

    pub fn y(&self) -> &[f64] {
        self.data.y()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn workload_shapes() {
        let w = Workload::scenario1(30, 12, 2.0, 8, 0.05, 1);
        assert_eq!(w.design.n(), 30);
        assert_eq!(w.grid.len(), 8);
        assert!(w.grid.windows(2).all(|g| g[0] > g[1]));
    }
}
