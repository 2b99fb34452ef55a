//! File-level stages of a batch run. Every stage reads NDJSON inputs,
//! fans work out over the current rayon pool in fixed-size chunks and
//! writes its output in input order.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::eval::{build_report, write_roc_csv, EvalReport, ScoredSample};
use crate::mask::{CharWeightMask, ExternalLints, MaskEngine, MaskRecord};
use crate::ndjson::{NdjsonReader, NdjsonWriter};
use crate::probe::{
    probe_infer, train_layers, FeatureTable, LayerFeatureVector, LayerTrainingReport, ProbeBundle,
    TrainConfig,
};
use crate::sample::{read_manifest, Label, Language, SourceSample};
use crate::scoring::{score_sample, MembershipScore, TokenRecordRow};

/// Records handed to the worker pool at a time.
pub const CHUNK: usize = 256;

/// Refuses to run when an output path names one of the inputs.
pub fn ensure_distinct(inputs: &[&Path], outputs: &[&Path]) -> Result<()> {
    let key = |p: &Path| -> PathBuf {
        std::fs::canonicalize(p).unwrap_or_else(|_| {
            let parent = p
                .parent()
                .filter(|d| !d.as_os_str().is_empty())
                .unwrap_or(Path::new("."));
            let parent = std::fs::canonicalize(parent).unwrap_or_else(|_| parent.to_path_buf());
            parent.join(p.file_name().unwrap_or_default())
        })
    };
    let mut seen = HashMap::new();
    for p in inputs.iter().chain(outputs) {
        if let Some(prev) = seen.insert(key(p), *p) {
            return Err(Error::invalid(format!(
                "paths must be distinct: `{}` and `{}` name the same file",
                prev.display(),
                p.display()
            )));
        }
    }
    Ok(())
}

fn schema(path: &Path, line: usize, e: impl ToString) -> Error {
    Error::Schema {
        path: path.to_path_buf(),
        line,
        message: e.to_string(),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct MaskSummary {
    pub samples: usize,
    pub degraded: usize,
}

/// Builds one mask row per manifest sample.
pub fn run_mask(manifest: &Path, lints: Option<&Path>, out: &Path) -> Result<MaskSummary> {
    let mut inputs = vec![manifest];
    inputs.extend(lints);
    ensure_distinct(&inputs, &[out])?;
    let samples = read_manifest(manifest)?;
    let externals = lints.map(ExternalLints::load).transpose()?;
    let engine = MaskEngine::default();

    let mut writer = NdjsonWriter::create(out)?;
    let mut summary = MaskSummary::default();
    for chunk in samples.chunks(CHUNK) {
        let records: Vec<MaskRecord> = chunk
            .par_iter()
            .map(|s| {
                let ext = externals
                    .as_ref()
                    .map(|x| x.for_sample(&s.id, s.char_len()));
                engine.build(s, ext.as_deref()).to_record()
            })
            .collect();
        for r in &records {
            if r.degraded {
                log::debug!(
                    "sample `{}`: parse failed, regex fallback used",
                    r.sample_id
                );
                summary.degraded += 1;
            }
            writer.write(r)?;
        }
        summary.samples += records.len();
    }
    writer.finish()?;
    Ok(summary)
}

/// Loads a mask file keyed by sample id.
pub fn load_masks(path: &Path) -> Result<HashMap<String, CharWeightMask>> {
    let mut masks = HashMap::new();
    for row in NdjsonReader::<_, MaskRecord>::open(path)? {
        let (line, record) = row?;
        let mask = CharWeightMask::try_from(record).map_err(|e| schema(path, line, e))?;
        let id = mask.sample_id.clone();
        if masks.insert(id.clone(), mask).is_some() {
            return Err(schema(
                path,
                line,
                format!("duplicate mask for sample `{id}`"),
            ));
        }
    }
    Ok(masks)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ScoreSummary {
    pub samples: usize,
    pub scored: usize,
    pub missing: usize,
}

/// Scores every manifest sample from its mask and token records. Samples
/// without token records or mask keep null scores.
pub fn run_score(
    manifest: &Path,
    masks: &Path,
    tokens: &Path,
    out: &Path,
    k_percent: f64,
) -> Result<ScoreSummary> {
    ensure_distinct(&[manifest, masks, tokens], &[out])?;
    if !(k_percent > 0.0 && k_percent <= 100.0) {
        return Err(Error::invalid(format!(
            "k_percent must lie in (0, 100], got {k_percent}"
        )));
    }
    let samples = read_manifest(manifest)?;
    let masks = load_masks(masks)?;
    let known: HashSet<&str> = samples.iter().map(|s| s.id.as_str()).collect();

    let mut scored: HashMap<String, MembershipScore> = HashMap::new();
    let mut reader = NdjsonReader::<_, TokenRecordRow>::open(tokens)?;
    loop {
        let chunk = reader.by_ref().take(CHUNK).collect::<Result<Vec<_>>>()?;
        if chunk.is_empty() {
            break;
        }
        let results: Vec<Option<(usize, String, Result<_>)>> = chunk
            .into_par_iter()
            .map(|(line, row)| {
                if !known.contains(row.sample_id.as_str()) {
                    log::warn!(
                        "token records for unknown sample `{}` ignored",
                        row.sample_id
                    );
                    return None;
                }
                let Some(mask) = masks.get(&row.sample_id) else {
                    log::warn!("no mask for sample `{}`; scores left null", row.sample_id);
                    return None;
                };
                Some((
                    line,
                    row.sample_id.clone(),
                    score_sample(mask, &row, k_percent),
                ))
            })
            .collect();
        for (line, id, result) in results.into_iter().flatten() {
            let s = result.map_err(|e| schema(tokens, line, e))?;
            let row = MembershipScore::empty(id.clone(), None).with_logit_scores(s);
            if scored.insert(id.clone(), row).is_some() {
                return Err(schema(
                    tokens,
                    line,
                    format!("duplicate token records for `{id}`"),
                ));
            }
        }
    }

    let mut writer = NdjsonWriter::create(out)?;
    let mut summary = ScoreSummary::default();
    for s in &samples {
        let row = match scored.remove(&s.id) {
            Some(mut row) => {
                summary.scored += 1;
                row.label = s.label;
                row
            }
            None => {
                log::warn!("sample `{}`: no token records, scores left null", s.id);
                summary.missing += 1;
                MembershipScore::empty(s.id.clone(), s.label)
            }
        };
        writer.write(&row)?;
        summary.samples += 1;
    }
    writer.finish()?;
    Ok(summary)
}

/// Labels of a manifest, optionally restricted to `ids`.
pub fn manifest_labels(
    samples: &[SourceSample],
    ids: Option<&HashSet<String>>,
) -> HashMap<String, Label> {
    samples
        .iter()
        .filter(|s| ids.is_none_or(|ids| ids.contains(&s.id)))
        .filter_map(|s| s.label.map(|l| (s.id.clone(), l)))
        .collect()
}

/// Trains per-layer probes on the labeled samples (restricted to `ids` when
/// given) and writes the bundle.
pub fn run_train(
    features: &Path,
    manifest: &Path,
    ids: Option<&HashSet<String>>,
    config: &TrainConfig,
    out: &Path,
) -> Result<Vec<LayerTrainingReport>> {
    ensure_distinct(&[features, manifest], &[out])?;
    config.validate()?;
    let samples = read_manifest(manifest)?;
    let labels = manifest_labels(&samples, ids);
    let table = FeatureTable::load(features)?;
    let (bundle, reports) = train_layers(&table, &labels, config)?;
    bundle.save(out)?;
    Ok(reports)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct InferSummary {
    pub samples: usize,
    pub probed: usize,
    pub missing: usize,
}

/// Adds ensemble probe scores and the fused score to a scores file.
///
/// Feature rows are streamed; only the bundle's chosen layers are evaluated.
pub fn run_infer(
    features: &Path,
    bundle: &Path,
    scores: &Path,
    out: &Path,
    alpha: f64,
) -> Result<InferSummary> {
    ensure_distinct(&[features, bundle, scores], &[out])?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::invalid(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )));
    }
    let bundle = ProbeBundle::load(bundle)?;
    let chosen = bundle.selection.chosen.clone();
    if chosen.is_empty() {
        return Err(Error::Bundle("no layers selected".into()));
    }
    let rows: Vec<MembershipScore> = crate::ndjson::read_all(scores)?;

    let mut per_sample: HashMap<String, BTreeMap<usize, f64>> = HashMap::new();
    let mut reader = NdjsonReader::<_, LayerFeatureVector>::open(features)?;
    loop {
        let chunk = reader.by_ref().take(CHUNK).collect::<Result<Vec<_>>>()?;
        if chunk.is_empty() {
            break;
        }
        let probs: Vec<Option<(usize, String, usize, Result<f64>)>> = chunk
            .into_par_iter()
            .map(|(line, row)| {
                let probe = bundle
                    .probe(row.layer)
                    .filter(|_| chosen.contains(&row.layer))?;
                if let Some(dim) = row.features.iter().position(|v| !v.is_finite()) {
                    let e = Error::NonFiniteFeature {
                        sample_id: row.sample_id.clone(),
                        dim,
                    };
                    return Some((line, row.sample_id, row.layer, Err(e)));
                }
                Some((
                    line,
                    row.sample_id,
                    row.layer,
                    probe_infer(probe, &row.features),
                ))
            })
            .collect();
        for (line, id, layer, p) in probs.into_iter().flatten() {
            let p = p.map_err(|e| schema(features, line, e))?;
            if per_sample
                .entry(id.clone())
                .or_default()
                .insert(layer, p)
                .is_some()
            {
                return Err(schema(
                    features,
                    line,
                    format!("duplicate features for `{id}` at layer {layer}"),
                ));
            }
        }
    }

    let mut writer = NdjsonWriter::create(out)?;
    let mut summary = InferSummary::default();
    for row in rows {
        let probs = per_sample.get(&row.sample_id);
        let mean = probs.and_then(|p| {
            let mut sum = 0.0;
            for layer in &chosen {
                sum += p.get(layer)?;
            }
            Some(sum / chosen.len() as f64)
        });
        let row = match mean {
            Some(p) => {
                summary.probed += 1;
                row.with_probe(p, alpha)?
            }
            None => {
                log::warn!(
                    "sample `{}`: features missing for a selected layer, probe score left null",
                    row.sample_id
                );
                summary.missing += 1;
                row
            }
        };
        writer.write(&row)?;
        summary.samples += 1;
    }
    writer.finish()?;
    Ok(summary)
}

/// Builds the AUC report from a scores file. Languages come from the
/// manifest; labels from the scores file, falling back to the manifest.
/// Only `ids` are evaluated when given. The report is written to `out` and
/// one `roc_<method>.csv` per method next to it.
pub fn run_eval(
    scores: &Path,
    manifest: &Path,
    ids: Option<&HashSet<String>>,
    out: &Path,
) -> Result<EvalReport> {
    ensure_distinct(&[scores, manifest], &[out])?;
    let samples = read_manifest(manifest)?;
    let meta: HashMap<&str, (Language, Option<Label>)> = samples
        .iter()
        .map(|s| (s.id.as_str(), (s.language, s.label)))
        .collect();

    let mut rows: Vec<(Language, Label, MembershipScore)> = Vec::new();
    for row in NdjsonReader::<_, MembershipScore>::open(scores)? {
        let (line, score) = row?;
        if ids.is_some_and(|ids| !ids.contains(&score.sample_id)) {
            continue;
        }
        let Some(&(language, manifest_label)) = meta.get(score.sample_id.as_str()) else {
            return Err(schema(
                scores,
                line,
                format!("sample `{}` is not in the manifest", score.sample_id),
            ));
        };
        let label = match (score.label, manifest_label) {
            (Some(a), Some(b)) if a != b => {
                return Err(schema(
                    scores,
                    line,
                    format!("label of `{}` disagrees with the manifest", score.sample_id),
                ));
            }
            (Some(l), _) | (None, Some(l)) => l,
            (None, None) => {
                log::warn!(
                    "sample `{}` is unlabeled and left out of evaluation",
                    score.sample_id
                );
                continue;
            }
        };
        rows.push((language, label, score));
    }
    let scored: Vec<ScoredSample<'_>> = rows
        .iter()
        .map(|(language, label, score)| ScoredSample {
            language: *language,
            label: *label,
            score,
        })
        .collect();
    let report = build_report(&scored)?;

    let mut w = BufWriter::new(File::create(out)?);
    serde_json::to_writer_pretty(&mut w, &report).map_err(std::io::Error::from)?;
    writeln!(w)?;
    w.flush()?;
    let dir = out.parent().unwrap_or(Path::new(""));
    for (method, points) in &report.roc {
        let mut w = BufWriter::new(File::create(dir.join(format!("roc_{method}.csv")))?);
        write_roc_csv(&mut w, points)?;
        w.flush()?;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distinct_paths_are_enforced() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.ndjson");
        std::fs::write(&a, "").unwrap();
        let same = dir.path().join(".").join("a.ndjson");
        assert!(ensure_distinct(&[&a], &[&same]).is_err());
        assert!(ensure_distinct(&[&a], &[&dir.path().join("b.ndjson")]).is_ok());
    }
}
