use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::train::{validation_auc, Dataset};
use super::{probe_infer, ProbeParams};
use crate::error::{Error, Result};

/// Number of layers whose probes are averaged at inference.
pub const ENSEMBLE_SIZE: usize = 5;

/// Layers ranked by validation AUC, best first, and the chosen prefix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSelection {
    pub ranked: Vec<(usize, f64)>,
    pub chosen: Vec<usize>,
}

/// Ranks layers by descending AUC (lower layer index first on ties) and
/// keeps the top [`ENSEMBLE_SIZE`].
pub fn rank_layers(mut aucs: Vec<(usize, f64)>) -> LayerSelection {
    aucs.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let chosen = aucs.iter().take(ENSEMBLE_SIZE).map(|&(l, _)| l).collect();
    LayerSelection {
        ranked: aucs,
        chosen,
    }
}

/// Scores every probe on its layer's validation data and ranks the layers.
pub fn select_layers(
    probes: &[ProbeParams],
    validation: &BTreeMap<usize, Dataset>,
) -> Result<LayerSelection> {
    let aucs = probes
        .iter()
        .map(|p| {
            let data = validation
                .get(&p.layer)
                .ok_or(Error::MissingLayer(p.layer))?;
            Ok((p.layer, validation_auc(p, data)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(rank_layers(aucs))
}

/// Mean membership confidence of the chosen layers' probes.
pub fn ensemble_infer(
    selection: &LayerSelection,
    probes: &BTreeMap<usize, ProbeParams>,
    features: &BTreeMap<usize, Vec<f64>>,
) -> Result<f64> {
    if selection.chosen.is_empty() {
        return Err(Error::invalid("layer selection is empty"));
    }
    let mut sum = 0.0;
    for layer in &selection.chosen {
        let probe = probes.get(layer).ok_or(Error::MissingLayer(*layer))?;
        let x = features.get(layer).ok_or(Error::MissingLayer(*layer))?;
        sum += probe_infer(probe, x)?;
    }
    Ok(sum / selection.chosen.len() as f64)
}
