//! Per-layer activation probes and their top-layer ensemble.

mod bundle;
mod ensemble;
mod mlp;
mod standardize;
mod train;

use std::collections::BTreeMap;
use std::path::Path;

use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ndjson::NdjsonReader;
use crate::scoring::{open_unit, sigmoid};

pub use bundle::{ProbeBundle, BUNDLE_MAGIC, BUNDLE_VERSION};
pub use ensemble::{ensemble_infer, rank_layers, select_layers, LayerSelection, ENSEMBLE_SIZE};
pub use mlp::{Gradients, Mlp};
pub use standardize::{Standardizer, STD_GUARD};
pub use train::{
    stratified_split, train_layers, train_probe, train_probe_traced, Dataset, LayerTrainingReport,
};

pub const MOMENTUM: f64 = 0.9;

/// Probe training hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden_dim: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub validation_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden_dim: 128,
            learning_rate: 1e-3,
            epochs: 30,
            batch_size: 64,
            seed: 0,
            validation_fraction: 0.2,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_dim == 0 || self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::invalid(
                "hidden_dim, epochs and batch_size must be positive",
            ));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::invalid("validation_fraction must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// One row of the feature file: a sample's pooled activations at one layer
/// (mean-pool followed by weight-pool).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerFeatureVector {
    pub sample_id: String,
    pub layer: usize,
    pub features: Vec<f64>,
}

/// A trained probe for one layer, including the feature standardization it
/// was trained under.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeParams {
    pub layer: usize,
    pub standardizer: Standardizer,
    pub mlp: Mlp,
    pub trained: bool,
}

impl ProbeParams {
    pub fn input_dim(&self) -> usize {
        self.mlp.input_dim()
    }
}

/// Membership confidence of one probe for one raw feature vector.
pub fn probe_infer(params: &ProbeParams, features: &[f64]) -> Result<f64> {
    if features.len() != params.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: params.input_dim(),
            actual: features.len(),
        });
    }
    let x = params
        .standardizer
        .transform_row(ArrayView1::from(features));
    Ok(open_unit(sigmoid(params.mlp.logit(x.view()))))
}

/// All feature rows of a run, indexed by sample and layer.
#[derive(Debug, Clone, Default)]
pub struct FeatureTable {
    by_sample: BTreeMap<String, BTreeMap<usize, Vec<f64>>>,
    dims: BTreeMap<usize, usize>,
}

impl FeatureTable {
    pub fn insert(&mut self, row: LayerFeatureVector) -> Result<()> {
        if let Some(dim) = row.features.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteFeature {
                sample_id: row.sample_id,
                dim,
            });
        }
        let dim = *self.dims.entry(row.layer).or_insert(row.features.len());
        if dim != row.features.len() {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: row.features.len(),
            });
        }
        let slot = self.by_sample.entry(row.sample_id.clone()).or_default();
        if slot.insert(row.layer, row.features).is_some() {
            return Err(Error::invalid(format!(
                "duplicate features for sample `{}` at layer {}",
                row.sample_id, row.layer
            )));
        }
        Ok(())
    }

    /// Loads a feature NDJSON file, reporting the line of any bad row.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut table = Self::default();
        for row in NdjsonReader::<_, LayerFeatureVector>::open(path)? {
            let (line, row) = row?;
            table.insert(row).map_err(|e| Error::Schema {
                path: path.to_path_buf(),
                line,
                message: e.to_string(),
            })?;
        }
        Ok(table)
    }

    pub fn layers(&self) -> Vec<usize> {
        self.dims.keys().copied().collect()
    }

    pub fn dim(&self, layer: usize) -> Option<usize> {
        self.dims.get(&layer).copied()
    }

    pub fn sample_ids(&self) -> impl Iterator<Item = &str> {
        self.by_sample.keys().map(String::as_str)
    }

    pub fn sample(&self, id: &str) -> Option<&BTreeMap<usize, Vec<f64>>> {
        self.by_sample.get(id)
    }

    pub fn get(&self, id: &str, layer: usize) -> Option<&[f64]> {
        self.by_sample.get(id)?.get(&layer).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.by_sample.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_sample.is_empty()
    }
}
