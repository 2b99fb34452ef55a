use std::collections::HashMap;

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{
    ensemble::rank_layers, FeatureTable, Mlp, ProbeBundle, ProbeParams, Standardizer, TrainConfig,
    MOMENTUM,
};
use crate::error::{Error, Result};
use crate::eval::auc_roc;
use crate::sample::Label;

/// Labeled feature rows for one layer.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub ids: Vec<String>,
    pub x: Array2<f64>,
    pub labels: Vec<Label>,
}

impl Dataset {
    pub fn new(ids: Vec<String>, rows: Vec<Vec<f64>>, labels: Vec<Label>) -> Result<Self> {
        if ids.len() != rows.len() || ids.len() != labels.len() {
            return Err(Error::invalid("ids, rows and labels differ in length"));
        }
        let dim = rows.first().map_or(0, Vec::len);
        let mut x = Array2::zeros((rows.len(), dim));
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: row.len(),
                });
            }
            if let Some(d) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteFeature {
                    sample_id: ids[i].clone(),
                    dim: d,
                });
            }
            x.row_mut(i).assign(&Array1::from(row.clone()));
        }
        Ok(Self { ids, x, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn targets(&self) -> Array1<f64> {
        self.labels
            .iter()
            .map(|l| if l.is_member() { 1.0 } else { 0.0 })
            .collect()
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            ids: idx.iter().map(|&i| self.ids[i].clone()).collect(),
            x: self.x.select(Axis(0), idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

/// Seeded split keeping each class's share on both sides. Returns sorted
/// `(train, validation)` row indices.
pub fn stratified_split(
    labels: &[Label],
    validation_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for class in [Label::NonMember, Label::Member] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.len() < 2 {
            return Err(Error::SingleClass);
        }
        idx.shuffle(&mut rng);
        let n_val =
            ((validation_fraction * idx.len() as f64).round() as usize).clamp(1, idx.len() - 1);
        val.extend_from_slice(&idx[..n_val]);
        train.extend_from_slice(&idx[n_val..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    Ok((train, val))
}

fn check_classes(labels: &[Label]) -> Result<()> {
    let members = labels.iter().filter(|l| l.is_member()).count();
    if members < 2 || labels.len() - members < 2 {
        return Err(Error::SingleClass);
    }
    Ok(())
}

/// Trains one probe on the full dataset given.
pub fn train_probe(data: &Dataset, config: &TrainConfig, layer: usize) -> Result<ProbeParams> {
    train_probe_traced(data, config, layer).map(|(p, _)| p)
}

/// Like [`train_probe`], also returning the training-set loss after each
/// epoch.
pub fn train_probe_traced(
    data: &Dataset,
    config: &TrainConfig,
    layer: usize,
) -> Result<(ProbeParams, Vec<f64>)> {
    config.validate()?;
    check_classes(&data.labels)?;

    let standardizer = Standardizer::fit(data.x.view());
    let x = standardizer.transform(data.x.view());
    let y = data.targets();

    let mut rng =
        ChaCha8Rng::seed_from_u64(config.seed ^ (layer as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut mlp = Mlp::init(x.ncols(), config.hidden_dim, &mut rng);
    let mut velocity = Mlp::zeros(x.ncols(), config.hidden_dim);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let xb = x.select(Axis(0), batch);
            let yb = y.select(Axis(0), batch);
            let (_, g) = mlp.loss_and_gradients(xb.view(), yb.view());
            let lr = config.learning_rate;
            velocity
                .w1
                .zip_mut_with(&g.w1, |v, g| *v = MOMENTUM * *v - lr * g);
            velocity
                .b1
                .zip_mut_with(&g.b1, |v, g| *v = MOMENTUM * *v - lr * g);
            velocity
                .w2
                .zip_mut_with(&g.w2, |v, g| *v = MOMENTUM * *v - lr * g);
            velocity.b2 = MOMENTUM * velocity.b2 - lr * g.b2;
            mlp.w1 += &velocity.w1;
            mlp.b1 += &velocity.b1;
            mlp.w2 += &velocity.w2;
            mlp.b2 += velocity.b2;
        }
        history.push(mlp.loss(x.view(), y.view()));
    }

    Ok((
        ProbeParams {
            layer,
            standardizer,
            mlp,
            trained: true,
        },
        history,
    ))
}

/// Validation AUC of a trained probe.
pub(crate) fn validation_auc(probe: &ProbeParams, data: &Dataset) -> Result<f64> {
    let scores = data
        .x
        .rows()
        .into_iter()
        .map(|row| {
            let x = probe.standardizer.transform_row(row);
            Ok(probe.mlp.logit(x.view()))
        })
        .collect::<Result<Vec<f64>>>()?;
    auc_roc(&scores, &data.labels)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerTrainingReport {
    pub layer: usize,
    pub validation_auc: f64,
    pub final_loss: f64,
}

/// Trains one probe per layer on a shared stratified split and selects the
/// best layers by validation AUC.
///
/// Only samples that are labeled and have features at every layer take
/// part; they are ordered by id so the result does not depend on file order.
pub fn train_layers(
    table: &FeatureTable,
    labels: &HashMap<String, Label>,
    config: &TrainConfig,
) -> Result<(ProbeBundle, Vec<LayerTrainingReport>)> {
    config.validate()?;
    let layers = table.layers();
    if layers.is_empty() {
        return Err(Error::invalid("feature table is empty"));
    }
    let ids: Vec<String> = table
        .sample_ids()
        .filter(|id| labels.contains_key(*id))
        .filter(|id| {
            let s = table.sample(id).expect("listed id");
            layers.iter().all(|l| s.contains_key(l))
        })
        .map(str::to_owned)
        .collect();
    let y: Vec<Label> = ids.iter().map(|id| labels[id]).collect();
    let (train_idx, val_idx) = stratified_split(&y, config.validation_fraction, config.seed)?;

    let trained = layers
        .par_iter()
        .map(|&layer| {
            let rows = ids
                .iter()
                .map(|id| table.get(id, layer).expect("filtered").to_vec())
                .collect();
            let data = Dataset::new(ids.clone(), rows, y.clone())?;
            let train = data.subset(&train_idx);
            let val = data.subset(&val_idx);
            let (probe, history) = train_probe_traced(&train, config, layer)?;
            let auc = validation_auc(&probe, &val)?;
            Ok((
                probe,
                LayerTrainingReport {
                    layer,
                    validation_auc: auc,
                    final_loss: history.last().copied().unwrap_or(f64::NAN),
                },
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let (probes, reports): (Vec<_>, Vec<_>) = trained.into_iter().unzip();
    let selection = rank_layers(
        reports
            .iter()
            .map(|r: &LayerTrainingReport| (r.layer, r.validation_auc))
            .collect(),
    );
    Ok((ProbeBundle { probes, selection }, reports))
}
