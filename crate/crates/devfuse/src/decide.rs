//! JSON-backed multi-expert decision making.
//!
//! Input schema:
//!
//! ```json
//! {
//!   "alternatives": 3,
//!   "diagonal": 0.5,
//!   "experts": [
//!     { "name": "e1", "matrix": [[0.5, 0.2, 0.9], [0.8, 0.5, 0.4], [0.1, 0.6, 0.5]] }
//!   ]
//! }
//! ```
//!
//! `diagonal` is optional; when absent it is inferred from the first
//! diagonal entry. Expert weights come from a separate JSON file holding a
//! bare array, defaulting to unit weights. Output holds the collective
//! matrix, the preference column, and the ranking as 1-based alternative
//! indices, best first.

use std::path::Path;

use serde::{Deserialize, Serialize};

use devfuse_core::decision::{
    collective_matrix, preference_column, ExpertWeights, PreferenceTensor,
};

use crate::error::{Error, Result};
use crate::util::atomic_write;

#[derive(Debug, Deserialize)]
pub struct PreferenceInput {
    pub alternatives: usize,
    #[serde(default)]
    pub diagonal: Option<f64>,
    pub experts: Vec<ExpertInput>,
}

#[derive(Debug, Deserialize)]
pub struct ExpertInput {
    pub name: String,
    pub matrix: Vec<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize, PartialEq)]
pub struct DecisionOutput {
    pub collective: Vec<Vec<f64>>,
    pub column: Vec<f64>,
    /// 1-based alternative indices, best first.
    pub ranking: Vec<usize>,
}

pub fn load_preferences(path: &Path) -> Result<(PreferenceTensor, Vec<String>)> {
    let bytes = std::fs::read(path)
        .map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))?;
    let input: PreferenceInput = serde_json::from_slice(&bytes).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    if input.experts.is_empty() {
        return Err(Error::invalid("preference file lists no experts"));
    }
    for expert in &input.experts {
        if expert.matrix.len() != input.alternatives
            || expert
                .matrix
                .iter()
                .any(|row| row.len() != input.alternatives)
        {
            return Err(Error::invalid(format!(
                "expert {} matrix is not {p} x {p}",
                expert.name,
                p = input.alternatives
            )));
        }
    }
    let diagonal = match input.diagonal {
        Some(d) => d,
        None => input.experts[0]
            .matrix
            .first()
            .and_then(|row| row.first())
            .copied()
            .ok_or_else(|| Error::invalid("empty preference matrix"))?,
    };
    let matrices: Vec<Vec<Vec<f64>>> = input.experts.iter().map(|e| e.matrix.clone()).collect();
    let names = input.experts.into_iter().map(|e| e.name).collect();
    let tensor = PreferenceTensor::from_expert_matrices(&matrices, diagonal)
        .map_err(|e| Error::invalid(format!("{}: {e}", path.display())))?;
    Ok((tensor, names))
}

pub fn load_weights(path: &Path, experts: usize) -> Result<ExpertWeights> {
    let bytes = std::fs::read(path)
        .map_err(|e| Error::invalid(format!("cannot read {}: {e}", path.display())))?;
    let weights: Vec<f64> = serde_json::from_slice(&bytes).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    if weights.len() != experts {
        return Err(Error::invalid(format!(
            "{} weights for {} experts",
            weights.len(),
            experts
        )));
    }
    ExpertWeights::new(weights).map_err(|e| Error::invalid(e.to_string()))
}

/// Full pipeline: fuse expert matrices, aggregate rows, rank, and
/// optionally write the result JSON atomically.
pub fn run_decide(
    prefs_path: &Path,
    weights_path: Option<&Path>,
    epsilon: f64,
    out: Option<&Path>,
) -> Result<DecisionOutput> {
    let (tensor, _names) = load_preferences(prefs_path)?;
    let weights = match weights_path {
        Some(p) => load_weights(p, tensor.experts())?,
        None => ExpertWeights::unit(tensor.experts()),
    };
    let collective = collective_matrix(&tensor, &weights, epsilon)?;
    let column = preference_column(&collective, epsilon)?;
    let output = DecisionOutput {
        collective: collective.to_rows(),
        column: column.values().to_vec(),
        ranking: column.ranking().iter().map(|i| i + 1).collect(),
    };
    if let Some(path) = out {
        let mut json = serde_json::to_vec_pretty(&output).expect("serializable output");
        json.push(b'\n');
        atomic_write(path, &json)?;
    }
    Ok(output)
}
