//! Versioned JSON model files. Floats serialize with shortest-round-trip
//! formatting, so load(save(model)) reproduces every matrix exactly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SnmfError};
use crate::factorization::FactorPair;
use crate::numerics::{DenseMatrix, NonNegMatrix};
use crate::supervised::{LogRegModel, SnmfHyper, TraceEntry};

pub const MODEL_SCHEMA: &str = "snmf-model/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitMode {
    Nmf,
    Snmf,
}

impl std::fmt::Display for FitMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FitMode::Nmf => write!(f, "nmf"),
            FitMode::Snmf => write!(f, "snmf"),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema: String,
    pub mode: FitMode,
    pub u: DenseMatrix,
    pub v: DenseMatrix,
    pub logreg: Option<LogRegModel>,
    pub hyper: Option<SnmfHyper>,
    pub trace: Vec<TraceEntry>,
}

impl ModelFile {
    pub fn factors(&self) -> Result<FactorPair> {
        FactorPair::new(
            NonNegMatrix::new(self.u.clone())?,
            NonNegMatrix::new(self.v.clone())?,
        )
    }
}

pub fn save_model(path: &Path, model: &ModelFile) -> Result<()> {
    let json = serde_json::to_vec_pretty(model)?;
    crate::report::write_atomic(path, &json)
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    let text = std::fs::read_to_string(path)?;
    let model: ModelFile = serde_json::from_str(&text)?;
    if model.schema != MODEL_SCHEMA {
        return Err(SnmfError::InvalidConfig(format!(
            "unsupported model schema {:?}, expected {MODEL_SCHEMA:?}",
            model.schema
        )));
    }
    // validate factor invariants on the way in
    model.factors()?;
    Ok(model)
}
