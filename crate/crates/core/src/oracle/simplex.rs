//! Dense tableau simplex for `max c'u  s.t.  A u <= b, u >= 0` with `b >= 0`.
//!
//! The slack basis is feasible because `b >= 0`, so no phase one is needed.
//! Bland's rule (smallest eligible index for entering and leaving) rules out
//! cycling on the degenerate rows these problems have.

use crate::error::{BernError, Result};

const PIVOT_EPS: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct SimplexSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Shadow price of each constraint row (the solution of the dual LP).
    pub duals: Vec<f64>,
    pub pivots: usize,
}

/// `a` is row-major with `m` rows of length `c.len()`.
pub fn maximize(c: &[f64], a: &[Vec<f64>], b: &[f64], max_pivots: usize) -> Result<SimplexSolution> {
    let nv = c.len();
    let m = a.len();
    if b.len() != m || a.iter().any(|row| row.len() != nv) {
        return Err(BernError::InvalidData("simplex: inconsistent dimensions".into()));
    }
    if b.iter().any(|&v| !(v >= 0.0)) {
        return Err(BernError::InvalidData("simplex: right-hand side must be nonnegative".into()));
    }
    let width = nv + m + 1;
    let rhs = width - 1;
    // Row 0 is the objective row; row r + 1 is constraint r.
    let mut t = vec![vec![0.0; width]; m + 1];
    for (j, &cj) in c.iter().enumerate() {
        t[0][j] = -cj;
    }
    for r in 0..m {
        t[r + 1][..nv].copy_from_slice(&a[r]);
        t[r + 1][nv + r] = 1.0;
        t[r + 1][rhs] = b[r];
    }
    let mut basis: Vec<usize> = (nv..nv + m).collect();
    let mut pivots = 0;
    loop {
        let Some(enter) = (0..rhs).find(|&j| t[0][j] < -PIVOT_EPS) else { break };
        let mut leave: Option<usize> = None;
        let mut best = f64::INFINITY;
        for r in 0..m {
            let coef = t[r + 1][enter];
            if coef > PIVOT_EPS {
                let ratio = t[r + 1][rhs] / coef;
                let better = match leave {
                    None => true,
                    Some(l) => ratio < best || (ratio == best && basis[r] < basis[l]),
                };
                if better {
                    best = ratio;
                    leave = Some(r);
                }
            }
        }
        let Some(leave) = leave else {
            return Err(BernError::InvalidData("simplex: problem is unbounded".into()));
        };
        pivot(&mut t, leave + 1, enter);
        basis[leave] = enter;
        pivots += 1;
        if pivots >= max_pivots {
            return Err(BernError::InvalidData(format!("simplex: no optimum after {pivots} pivots")));
        }
    }
    let mut x = vec![0.0; nv];
    for (r, &v) in basis.iter().enumerate() {
        if v < nv {
            x[v] = t[r + 1][rhs];
        }
    }
    let duals = (0..m).map(|r| t[0][nv + r]).collect();
    Ok(SimplexSolution { x, objective: t[0][rhs], duals, pivots })
}

fn pivot(t: &mut [Vec<f64>], row: usize, col: usize) {
    let p = t[row][col];
    for v in t[row].iter_mut() {
        *v /= p;
    }
    let pivot_row = t[row].clone();
    for (r, line) in t.iter_mut().enumerate() {
        if r == row {
            continue;
        }
        let f = line[col];
        if f != 0.0 {
            for (v, &pv) in line.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            line[col] = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_instance() {
        // max 3x + 5y  s.t. x <= 4, 2y <= 12, 3x + 2y <= 18  ->  (2, 6), value 36.
        let a = vec![vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 2.0]];
        let s = maximize(&[3.0, 5.0], &a, &[4.0, 12.0, 18.0], 100).unwrap();
        assert!((s.objective - 36.0).abs() < 1e-12);
        assert!((s.x[0] - 2.0).abs() < 1e-12 && (s.x[1] - 6.0).abs() < 1e-12);
        // Dual: min 4a + 12b + 18c  s.t. a + 3c >= 3, 2b + 2c >= 5  ->  (0, 1.5, 1).
        assert!((s.duals[0]).abs() < 1e-12);
        assert!((s.duals[1] - 1.5).abs() < 1e-12);
        assert!((s.duals[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unbounded_is_error() {
        let a = vec![vec![1.0, -1.0]];
        assert!(maximize(&[1.0, 1.0], &a, &[1.0], 100).is_err());
    }

    #[test]
    fn degenerate_terminates() {
        // Beale-style degenerate instance that cycles under the largest-coefficient rule.
        let a = vec![
            vec![0.25, -60.0, -0.04, 9.0],
            vec![0.5, -90.0, -0.02, 3.0],
            vec![0.0, 0.0, 1.0, 0.0],
        ];
        let s = maximize(&[0.75, -150.0, 0.02, -6.0], &a, &[0.0, 0.0, 1.0], 1000).unwrap();
        assert!((s.objective - 0.05).abs() < 1e-12);
    }
}
