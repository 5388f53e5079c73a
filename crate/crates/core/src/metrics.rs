//! Prediction and the five evaluation measures (MR, SE, SP, PR, RC).
//!
//! SE and SP follow the simulation-study definitions literally: the error
//! count within each class is divided by the total number of test rows, not
//! by the class size. Consequently `(1 - SE) + (1 - SP) = MR`.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{BernError, Result};
use crate::fit::ModelFit;

/// `beta0 + x_i' beta` for every row.
pub fn decision_function(fit: &ModelFit, x: &Array2<f64>) -> Result<Vec<f64>> {
    if x.ncols() != fit.beta.len() {
        return Err(BernError::DimensionMismatch { what: "feature columns", expected: fit.beta.len(), got: x.ncols() });
    }
    Ok(x.rows()
        .into_iter()
        .map(|row| row.iter().zip(&fit.beta).fold(fit.beta0, |acc, (&v, &b)| acc + v * b))
        .collect())
}

/// Predicted labels; a zero score is classified as +1.
pub fn predict(fit: &ModelFit, x: &Array2<f64>) -> Result<Vec<f64>> {
    Ok(decision_function(fit, x)?.into_iter().map(|s| if s >= 0.0 { 1.0 } else { -1.0 }).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub mr: f64,
    pub se: f64,
    pub sp: f64,
}

pub fn classification_report(y_true: &[f64], y_pred: &[f64]) -> Result<ClassificationReport> {
    if y_true.len() != y_pred.len() {
        return Err(BernError::DimensionMismatch { what: "predictions", expected: y_true.len(), got: y_pred.len() });
    }
    if y_true.is_empty() {
        return Err(BernError::InvalidData("no test rows".into()));
    }
    let n = y_true.len() as f64;
    let (mut err_pos, mut err_neg) = (0.0, 0.0);
    for (&t, &p) in y_true.iter().zip(y_pred) {
        let e = ((t - p) / 2.0).powi(2);
        if t > 0.0 {
            err_pos += e;
        } else {
            err_neg += e;
        }
    }
    Ok(ClassificationReport { mr: (err_pos + err_neg) / n, se: 1.0 - err_pos / n, sp: 1.0 - err_neg / n })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    /// Absent when nothing was selected.
    pub pr: Option<f64>,
    /// Absent when the truth has no active coordinate.
    pub rc: Option<f64>,
}

/// Precision and recall of the selected support; nonzero means exactly `!= 0`.
pub fn selection_report(beta_true: &[f64], beta_hat: &[f64]) -> Result<SelectionReport> {
    if beta_true.len() != beta_hat.len() {
        return Err(BernError::DimensionMismatch { what: "coefficients", expected: beta_true.len(), got: beta_hat.len() });
    }
    let both = beta_true.iter().zip(beta_hat).filter(|(&t, &h)| t != 0.0 && h != 0.0).count();
    let selected = beta_hat.iter().filter(|&&h| h != 0.0).count();
    let truth = beta_true.iter().filter(|&&t| t != 0.0).count();
    let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
    Ok(SelectionReport { pr: ratio(both, selected), rc: ratio(both, truth) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerfReport {
    pub mr: f64,
    pub se: f64,
    pub sp: f64,
    pub pr: Option<f64>,
    pub rc: Option<f64>,
    pub n_test: usize,
}

impl PerfReport {
    pub fn evaluate(y_true: &[f64], y_pred: &[f64], beta_true: &[f64], beta_hat: &[f64]) -> Result<Self> {
        let c = classification_report(y_true, y_pred)?;
        let s = selection_report(beta_true, beta_hat)?;
        Ok(PerfReport { mr: c.mr, se: c.se, sp: c.sp, pr: s.pr, rc: s.rc, n_test: y_true.len() })
    }

    /// `key=value` lines; undefined measures are written as `NA`.
    pub fn to_key_value(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| format!("{x}"));
        format!(
            "mr={}\nse={}\nsp={}\npr={}\nrc={}\nn_test={}\n",
            self.mr, self.se, self.sp, opt(self.pr), opt(self.rc), self.n_test
        )
    }

    pub const CSV_HEADER: &'static str = "mr,se,sp,pr,rc,n_test";

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(String::new, |x| format!("{x}"));
        format!("{},{},{},{},{},{}", self.mr, self.se, self.sp, opt(self.pr), opt(self.rc), self.n_test)
    }
}

/// Mean of each measure over replications, skipping undefined PR/RC values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerfSummary {
    pub mr: f64,
    pub se: f64,
    pub sp: f64,
    pub pr: Option<f64>,
    pub rc: Option<f64>,
    pub reps: usize,
}

impl PerfSummary {
    pub fn from_reports(reports: &[PerfReport]) -> Option<Self> {
        if reports.is_empty() {
            return None;
        }
        let n = reports.len() as f64;
        let mean_opt = |f: fn(&PerfReport) -> Option<f64>| {
            let vals: Vec<f64> = reports.iter().filter_map(f).collect();
            (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
        };
        Some(PerfSummary {
            mr: reports.iter().map(|r| r.mr).sum::<f64>() / n,
            se: reports.iter().map(|r| r.se).sum::<f64>() / n,
            sp: reports.iter().map(|r| r.sp).sum::<f64>() / n,
            pr: mean_opt(|r| r.pr),
            rc: mean_opt(|r| r.rc),
            reps: reports.len(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fit::Engine;
    use crate::penalty::PenaltySpec;
    use ndarray::array;
    use proptest::prelude::*;

    fn fit(beta0: f64, beta: Vec<f64>) -> ModelFit {
        ModelFit {
            beta0,
            beta,
            objective: 0.0,
            passes: 0,
            converged: true,
            delta: 2.0,
            penalty: PenaltySpec::lasso(0.1).unwrap(),
            engine: Engine::Irls,
        }
    }

    #[test]
    fn predict_examples() {
        let x = array![[1.0], [-2.0], [0.0]];
        assert_eq!(predict(&fit(2.0, vec![0.0]), &x).unwrap(), vec![1.0, 1.0, 1.0]);
        assert_eq!(predict(&fit(0.0, vec![0.0]), &x).unwrap(), vec![1.0, 1.0, 1.0]);
        assert_eq!(predict(&fit(0.0, vec![1.0]), &array![[-3.0], [5.0]]).unwrap(), vec![-1.0, 1.0]);
        assert!(predict(&fit(0.0, vec![1.0, 2.0]), &x).is_err());
    }

    #[test]
    fn classification_examples() {
        let r = classification_report(&[1.0, -1.0, 1.0, 1.0], &[1.0, 1.0, 1.0, -1.0]).unwrap();
        assert_eq!(r.mr, 0.5);
        assert_eq!(r.se, 0.75);
        assert_eq!(r.sp, 0.75);
        let perfect = classification_report(&[1.0, -1.0], &[1.0, -1.0]).unwrap();
        assert_eq!((perfect.mr, perfect.se, perfect.sp), (0.0, 1.0, 1.0));
        let wrong = classification_report(&[1.0, 1.0, 1.0], &[-1.0, -1.0, -1.0]).unwrap();
        assert_eq!((wrong.mr, wrong.se, wrong.sp), (1.0, 0.0, 1.0));
        assert!(classification_report(&[1.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn selection_examples() {
        let t = [1.0, 0.0, -2.0, 3.0, 0.0];
        let r = selection_report(&t, &t).unwrap();
        assert_eq!((r.pr, r.rc), (Some(1.0), Some(1.0)));
        let r = selection_report(&t, &[0.0; 5]).unwrap();
        assert_eq!((r.pr, r.rc), (None, Some(0.0)));
        let r = selection_report(&[1.0, 0.0], &[1.0, 1.0]).unwrap();
        assert_eq!((r.pr, r.rc), (Some(0.5), Some(1.0)));
    }

    #[test]
    fn summary_skips_undefined() {
        let a = PerfReport { mr: 0.1, se: 0.9, sp: 1.0, pr: None, rc: Some(0.0), n_test: 10 };
        let b = PerfReport { mr: 0.3, se: 0.8, sp: 0.9, pr: Some(0.5), rc: Some(1.0), n_test: 10 };
        let s = PerfSummary::from_reports(&[a, b]).unwrap();
        assert!((s.mr - 0.2).abs() < 1e-15);
        assert_eq!(s.pr, Some(0.5));
        assert_eq!(s.rc, Some(0.5));
        assert!(a.to_key_value().contains("pr=NA"));
        assert_eq!(a.csv_row(), "0.1,0.9,1,,0,10");
    }

    fn labels() -> impl Strategy<Value = Vec<(bool, bool)>> {
        proptest::collection::vec((any::<bool>(), any::<bool>()), 1..60)
    }

    proptest! {
        #[test]
        fn error_partition(pairs in labels()) {
            let t: Vec<f64> = pairs.iter().map(|p| if p.0 { 1.0 } else { -1.0 }).collect();
            let p: Vec<f64> = pairs.iter().map(|p| if p.1 { 1.0 } else { -1.0 }).collect();
            let r = classification_report(&t, &p).unwrap();
            prop_assert!(((1.0 - r.se) + (1.0 - r.sp) - r.mr).abs() < 1e-12);
            for v in [r.mr, r.se, r.sp] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }

        #[test]
        fn permutation_invariant(pairs in labels(), rot in 0usize..60) {
            let t: Vec<f64> = pairs.iter().map(|p| if p.0 { 1.0 } else { -1.0 }).collect();
            let p: Vec<f64> = pairs.iter().map(|p| if p.1 { 1.0 } else { -1.0 }).collect();
            let k = rot % t.len();
            let mut t2 = t.clone();
            let mut p2 = p.clone();
            t2.rotate_left(k);
            p2.rotate_left(k);
            let a = classification_report(&t, &p).unwrap();
            let b = classification_report(&t2, &p2).unwrap();
            prop_assert!((a.mr - b.mr).abs() < 1e-15 && (a.se - b.se).abs() < 1e-15 && (a.sp - b.sp).abs() < 1e-15);
            let sa = selection_report(&t, &p).unwrap();
            let sb = selection_report(&t2, &p2).unwrap();
            prop_assert_eq!(sa, sb);
        }
    }
}
