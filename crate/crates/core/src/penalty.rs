//! Penalty families and the scalar operators the solvers are built from.

use serde::{Deserialize, Serialize};

use crate::error::{BernError, Result};

pub const DEFAULT_SCAD_A: f64 = 3.7;
pub const DEFAULT_MCP_A: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyFamily {
    /// `lambda1 |b| + lambda2 / 2 b^2`
    #[serde(rename = "en")]
    ElasticNet,
    /// Elastic net with per-coordinate positive L1 weights.
    #[serde(rename = "aen")]
    AdaptiveElasticNet,
    #[serde(rename = "scad")]
    Scad,
    #[serde(rename = "mcp")]
    Mcp,
}

impl PenaltyFamily {
    pub fn is_convex(self) -> bool {
        matches!(self, PenaltyFamily::ElasticNet | PenaltyFamily::AdaptiveElasticNet)
    }

    pub fn name(self) -> &'static str {
        match self {
            PenaltyFamily::ElasticNet => "en",
            PenaltyFamily::AdaptiveElasticNet => "aen",
            PenaltyFamily::Scad => "scad",
            PenaltyFamily::Mcp => "mcp",
        }
    }
}

impl std::str::FromStr for PenaltyFamily {
    type Err = BernError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "en" | "lasso" => Ok(PenaltyFamily::ElasticNet),
            "aen" => Ok(PenaltyFamily::AdaptiveElasticNet),
            "scad" | "scaden" => Ok(PenaltyFamily::Scad),
            "mcp" | "mcpen" => Ok(PenaltyFamily::Mcp),
            other => Err(BernError::InvalidPenalty(format!("unknown family `{other}`"))),
        }
    }
}

/// A validated penalty `sum_j P_lambda1(|b_j|) + lambda2 / 2 ||b||^2`.
///
/// The intercept is never penalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    family: PenaltyFamily,
    lambda1: f64,
    lambda2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
}

fn check_lambdas(lambda1: f64, lambda2: f64) -> Result<()> {
    if !(lambda1.is_finite() && lambda1 >= 0.0) {
        return Err(BernError::InvalidPenalty(format!("lambda1 must be >= 0, got {lambda1}")));
    }
    if !(lambda2.is_finite() && lambda2 >= 0.0) {
        return Err(BernError::InvalidPenalty(format!("lambda2 must be >= 0, got {lambda2}")));
    }
    Ok(())
}

impl PenaltySpec {
    pub fn elastic_net(lambda1: f64, lambda2: f64) -> Result<Self> {
        check_lambdas(lambda1, lambda2)?;
        Ok(PenaltySpec {
            family: PenaltyFamily::ElasticNet,
            lambda1,
            lambda2,
            weights: None,
            a: None,
        })
    }

    pub fn lasso(lambda1: f64) -> Result<Self> {
        Self::elastic_net(lambda1, 0.0)
    }

    pub fn adaptive(lambda1: f64, lambda2: f64, weights: Vec<f64>) -> Result<Self> {
        check_lambdas(lambda1, lambda2)?;
        if weights.is_empty() {
            return Err(BernError::InvalidPenalty("adaptive weights are empty".into()));
        }
        if let Some((j, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w > 0.0))
        {
            return Err(BernError::InvalidPenalty(format!(
                "adaptive weight {j} must be finite and > 0, got {w}"
            )));
        }
        Ok(PenaltySpec {
            family: PenaltyFamily::AdaptiveElasticNet,
            lambda1,
            lambda2,
            weights: Some(weights),
            a: None,
        })
    }

    pub fn scad(lambda1: f64, lambda2: f64, a: f64) -> Result<Self> {
        check_lambdas(lambda1, lambda2)?;
        if !(a.is_finite() && a > 2.0) {
            return Err(BernError::InvalidPenalty(format!("SCAD requires a > 2, got {a}")));
        }
        Ok(PenaltySpec {
            family: PenaltyFamily::Scad,
            lambda1,
            lambda2,
            weights: None,
            a: Some(a),
        })
    }

    pub fn mcp(lambda1: f64, lambda2: f64, a: f64) -> Result<Self> {
        check_lambdas(lambda1, lambda2)?;
        if !(a.is_finite() && a > 1.0) {
            return Err(BernError::InvalidPenalty(format!("MCP requires a > 1, got {a}")));
        }
        Ok(PenaltySpec {
            family: PenaltyFamily::Mcp,
            lambda1,
            lambda2,
            weights: None,
            a: Some(a),
        })
    }

    /// Builds a spec of the given family, using the default concavity when `a` is absent.
    pub fn from_parts(
        family: PenaltyFamily,
        lambda1: f64,
        lambda2: f64,
        weights: Option<Vec<f64>>,
        a: Option<f64>,
    ) -> Result<Self> {
        match family {
            PenaltyFamily::ElasticNet => Self::elastic_net(lambda1, lambda2),
            PenaltyFamily::AdaptiveElasticNet => Self::adaptive(
                lambda1,
                lambda2,
                weights.ok_or_else(|| BernError::InvalidPenalty("AEN needs weights".into()))?,
            ),
            PenaltyFamily::Scad => Self::scad(lambda1, lambda2, a.unwrap_or(DEFAULT_SCAD_A)),
            PenaltyFamily::Mcp => Self::mcp(lambda1, lambda2, a.unwrap_or(DEFAULT_MCP_A)),
        }
    }

    pub fn family(&self) -> PenaltyFamily {
        self.family
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    pub fn lambda2(&self) -> f64 {
        self.lambda2
    }

    /// Concavity parameter; `None` for the convex families.
    pub fn a(&self) -> Option<f64> {
        self.a
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    /// L1 weight of coordinate `j` (1 unless adaptive).
    #[inline]
    pub fn weight(&self, j: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[j])
    }

    /// Same penalty with a different `lambda1`.
    pub fn with_lambda1(&self, lambda1: f64) -> Result<Self> {
        check_lambdas(lambda1, self.lambda2)?;
        Ok(PenaltySpec { lambda1, ..self.clone() })
    }

    pub fn with_lambda2(&self, lambda2: f64) -> Result<Self> {
        check_lambdas(self.lambda1, lambda2)?;
        Ok(PenaltySpec { lambda2, ..self.clone() })
    }

    /// Checks that per-coordinate data matches a design with `p` columns.
    pub fn check_dimension(&self, p: usize) -> Result<()> {
        match &self.weights {
            Some(w) if w.len() != p => Err(BernError::DimensionMismatch {
                what: "adaptive weights",
                expected: p,
                got: w.len(),
            }),
            _ => Ok(()),
        }
    }

    /// `P_lambda1(t)` for a single `t = |b_j| >= 0`, without the ridge term.
    pub fn coordinate_value(&self, j: usize, t: f64) -> f64 {
        let l1 = self.lambda1;
        match self.family {
            PenaltyFamily::ElasticNet | PenaltyFamily::AdaptiveElasticNet => {
                l1 * self.weight(j) * t
            }
            PenaltyFamily::Scad => scad_value(t, l1, self.a.unwrap_or(DEFAULT_SCAD_A)),
            PenaltyFamily::Mcp => mcp_value(t, l1, self.a.unwrap_or(DEFAULT_MCP_A)),
        }
    }

    /// The weighted-L1 surrogate used by the convex engines.
    pub fn to_weighted(&self) -> Result<WeightedPenalty> {
        if !self.family.is_convex() {
            return Err(BernError::InvalidPenalty(format!(
                "family `{}` needs the LLA outer loop",
                self.family.name()
            )));
        }
        Ok(WeightedPenalty {
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            weights: self.weights.clone(),
        })
    }
}

/// Elastic net with per-coordinate L1 weights `w_j >= 0`.
///
/// This is the problem both engines actually solve. Zero weights are allowed
/// here (LLA produces them) even though user-facing adaptive specs reject them.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedPenalty {
    pub lambda1: f64,
    pub lambda2: f64,
    pub weights: Option<Vec<f64>>,
}

impl WeightedPenalty {
    #[inline]
    pub fn weight(&self, j: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[j])
    }

    /// Threshold `lambda1 w_j` of coordinate `j`.
    #[inline]
    pub fn threshold(&self, j: usize) -> f64 {
        self.lambda1 * self.weight(j)
    }

    pub fn value(&self, beta: &[f64]) -> f64 {
        let mut l1 = 0.0;
        let mut l2 = 0.0;
        for (j, &b) in beta.iter().enumerate() {
            l1 += self.weight(j) * b.abs();
            l2 += b * b;
        }
        self.lambda1 * l1 + 0.5 * self.lambda2 * l2
    }

    /// Keeps only the weights of the listed coordinates.
    pub fn restrict(&self, keep: &[usize]) -> WeightedPenalty {
        WeightedPenalty {
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            weights: self
                .weights
                .as_ref()
                .map(|w| keep.iter().map(|&j| w[j]).collect()),
        }
    }
}

/// `S(z, t) = sign(z) max(|z| - t, 0)`; `|z| == t` maps to zero.
#[inline]
pub fn soft_threshold(z: f64, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// SCAD value at `t >= 0`.
pub fn scad_value(t: f64, lambda1: f64, a: f64) -> f64 {
    if t <= lambda1 {
        lambda1 * t
    } else if t <= a * lambda1 {
        -(t * t - 2.0 * a * lambda1 * t + lambda1 * lambda1) / (2.0 * (a - 1.0))
    } else {
        (a + 1.0) * lambda1 * lambda1 / 2.0
    }
}

/// MCP value at `t >= 0`.
pub fn mcp_value(t: f64, lambda1: f64, a: f64) -> f64 {
    if t < lambda1 * a {
        lambda1 * (t - t * t / (2.0 * lambda1 * a))
    } else {
        lambda1 * lambda1 * a / 2.0
    }
}

/// `sum_j P_lambda1(|b_j|) + lambda2 / 2 ||b||^2`.
pub fn penalty_value(beta: &[f64], spec: &PenaltySpec) -> f64 {
    let mut total = 0.0;
    let mut sq = 0.0;
    for (j, &b) in beta.iter().enumerate() {
        total += spec.coordinate_value(j, b.abs());
        sq += b * b;
    }
    total + 0.5 * spec.lambda2 * sq
}

/// Derivative of the SCAD or MCP value at `t >= 0`, in `[0, lambda1]`.
pub fn nonconvex_deriv(t: f64, spec: &PenaltySpec) -> Result<f64> {
    debug_assert!(t >= 0.0);
    let l1 = spec.lambda1;
    match (spec.family, spec.a) {
        (PenaltyFamily::Scad, Some(a)) => Ok(if t <= l1 {
            l1
        } else {
            (a * l1 - t).max(0.0) / (a - 1.0)
        }),
        (PenaltyFamily::Mcp, Some(a)) => Ok((l1 - t / a).max(0.0)),
        (f, _) => Err(BernError::InvalidPenalty(format!(
            "nonconvex derivative is undefined for family `{}`",
            f.name()
        ))),
    }
}
