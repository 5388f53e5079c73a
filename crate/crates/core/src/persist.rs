//! Versioned JSON model files.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::StandardizedDesign;
use crate::error::{BernError, Result};
use crate::fit::{Engine, ModelFit};
use crate::penalty::PenaltySpec;

pub const SCHEMA_VERSION: u32 = 1;

/// A fitted model on the raw feature scale, plus what produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema_version: u32,
    pub label: String,
    pub feature_names: Vec<String>,
    pub delta: f64,
    pub penalty: PenaltySpec,
    pub engine: Engine,
    pub beta0: f64,
    pub beta: Vec<f64>,
    /// Objective on the standardized training data at convergence.
    pub training_objective: f64,
    pub converged: bool,
    pub passes: usize,
    pub nonzero: usize,
}

impl ModelFile {
    /// `fit` must be in the standardized space of `design`.
    pub fn from_fit(fit: &ModelFit, design: &StandardizedDesign, feature_names: &[String], label: &str) -> Result<Self> {
        if feature_names.len() != design.p_total() {
            return Err(BernError::DimensionMismatch {
                what: "feature names",
                expected: design.p_total(),
                got: feature_names.len(),
            });
        }
        let raw = fit.destandardize(design)?;
        Ok(ModelFile {
            schema_version: SCHEMA_VERSION,
            label: label.to_string(),
            feature_names: feature_names.to_vec(),
            delta: fit.delta,
            penalty: fit.penalty.clone(),
            engine: fit.engine,
            nonzero: raw.nonzero_count(),
            beta0: raw.beta0,
            beta: raw.beta,
            training_objective: fit.objective,
            converged: fit.converged,
            passes: fit.passes,
        })
    }

    /// The raw-scale model as a [`ModelFit`] for prediction.
    pub fn to_fit(&self) -> ModelFit {
        ModelFit {
            beta0: self.beta0,
            beta: self.beta.clone(),
            objective: self.training_objective,
            passes: self.passes,
            converged: self.converged,
            delta: self.delta,
            penalty: self.penalty.clone(),
            engine: self.engine,
        }
    }

    pub fn write<W: Write>(&self, mut writer: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut writer, self)?;
        writeln!(writer)?;
        Ok(())
    }

    pub fn read<R: Read>(reader: R) -> Result<Self> {
        let m: ModelFile = serde_json::from_reader(reader)?;
        if m.schema_version != SCHEMA_VERSION {
            return Err(BernError::InvalidData(format!(
                "model schema version {} is not supported (expected {SCHEMA_VERSION})",
                m.schema_version
            )));
        }
        if m.beta.len() != m.feature_names.len() {
            return Err(BernError::InvalidData("model coefficients and feature names differ in length".into()));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write(std::io::BufWriter::new(std::fs::File::create(path)?))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}
