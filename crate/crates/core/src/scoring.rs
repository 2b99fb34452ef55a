//! Membership scores computed from per-token model statistics.
//!
//! Every scorer is oriented so that larger values mean "more likely a
//! training member".

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::CharWeightMask;
use crate::projection::{project, TokenSpan, TokenWeights};
use crate::sample::Label;

pub const DEFAULT_K_PERCENT: f64 = 20.0;
pub const DEFAULT_ALPHA: f64 = 0.5;

/// Largest log-probability rounding error tolerated before a record is
/// rejected; smaller positive values are clamped to zero.
const LOGPROB_SLACK: f64 = 1e-6;

/// Statistics of one predicted (target) token.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TokenRecord {
    pub index: usize,
    pub start: usize,
    pub end: usize,
    pub z: f64,
    pub logprob: f64,
}

/// Standardized logit of the correct token.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZScore {
    pub value: f64,
    /// All logits were equal; `value` is set to zero by convention.
    pub degenerate: bool,
}

/// Z-score of `logits[correct]` against the whole vocabulary, using the
/// population standard deviation.
pub fn zscore(logits: &[f64], correct: usize) -> Result<ZScore> {
    if logits.len() < 2 {
        return Err(Error::invalid("vocabulary must have at least two entries"));
    }
    if correct >= logits.len() {
        return Err(Error::invalid(format!(
            "correct index {correct} outside vocabulary of {}",
            logits.len()
        )));
    }
    if logits.iter().any(|l| !l.is_finite()) {
        return Err(Error::invalid("logits must be finite"));
    }
    let first = logits[0];
    if logits.iter().all(|&l| l == first) {
        return Ok(ZScore {
            value: 0.0,
            degenerate: true,
        });
    }
    let n = logits.len() as f64;
    let mean = logits.iter().sum::<f64>() / n;
    let var = logits.iter().map(|l| (l - mean) * (l - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if std == 0.0 {
        return Ok(ZScore {
            value: 0.0,
            degenerate: true,
        });
    }
    Ok(ZScore {
        value: (logits[correct] - mean) / std,
        degenerate: false,
    })
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Keeps a probability strictly inside (0, 1) once sigmoids saturate.
pub(crate) fn open_unit(p: f64) -> f64 {
    p.clamp(f64::EPSILON, 1.0 - f64::EPSILON)
}

/// Weighted mean of `σ(z)` over the scored positions.
///
/// `weights` covers the full token sequence; only positions that appear in
/// `records` contribute, and their weights are renormalized to sum to one.
pub fn anomaly_score(records: &[TokenRecord], weights: &TokenWeights) -> Result<f64> {
    if weights.len() < 2 {
        return Err(Error::invalid(
            "a sequence needs at least two tokens to have a prediction step",
        ));
    }
    if records.is_empty() {
        return Err(Error::invalid("no scored positions"));
    }
    let mut seen = vec![false; weights.len()];
    let mut total = 0.0;
    let mut acc = 0.0;
    for r in records {
        if r.index == 0 || r.index >= weights.len() || std::mem::replace(&mut seen[r.index], true) {
            return Err(Error::invalid(format!(
                "scored position {} is not a unique target in 1..{}",
                r.index,
                weights.len()
            )));
        }
        if !r.z.is_finite() {
            return Err(Error::invalid(format!(
                "non-finite z at position {}",
                r.index
            )));
        }
        let w = weights.raw[r.index];
        total += w;
        acc += w * sigmoid(r.z);
    }
    Ok(open_unit(acc / total))
}

/// Mean log-probability of the targets (the negated loss).
pub fn loss_score(records: &[TokenRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::invalid("loss needs at least one scored token"));
    }
    Ok(records.iter().map(|r| r.logprob).sum::<f64>() / records.len() as f64)
}

/// Mean log-probability of the least likely `k_percent` of targets.
pub fn mink_score(records: &[TokenRecord], k_percent: f64) -> Result<f64> {
    if !(k_percent > 0.0 && k_percent <= 100.0) {
        return Err(Error::invalid(format!(
            "k must lie in (0, 100], got {k_percent}"
        )));
    }
    if records.is_empty() {
        return Err(Error::invalid("min-k needs at least one scored token"));
    }
    let n = records.len();
    let count = mink_count(n, k_percent);
    if count == n {
        return loss_score(records);
    }
    let mut lp: Vec<f64> = records.iter().map(|r| r.logprob).collect();
    lp.sort_by(f64::total_cmp);
    Ok(lp[..count].iter().sum::<f64>() / count as f64)
}

/// `⌈k/100 · n⌉`, clamped to `1..=n`. Products that land within 1e-9 of an
/// integer are snapped to it so decimal percentages do not round up.
pub fn mink_count(n: usize, k_percent: f64) -> usize {
    let exact = k_percent * n as f64 / 100.0;
    let snapped = if (exact - exact.round()).abs() < 1e-9 {
        exact.round()
    } else {
        exact.ceil()
    };
    (snapped as usize).clamp(1, n)
}

/// Convex combination of the anomaly and probe scores.
pub fn fuse(anomaly: f64, probe: f64, alpha: f64) -> Result<f64> {
    for (name, v) in [("anomaly", anomaly), ("probe", probe), ("alpha", alpha)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::invalid(format!(
                "{name} must lie in [0, 1], got {v}"
            )));
        }
    }
    Ok(alpha * anomaly + (1.0 - alpha) * probe)
}

/// Wire form of one sample's token statistics as dumped by the prober:
/// spans over every position, `z`/`logprob` over positions `1..n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenRecordRow {
    pub sample_id: String,
    pub tokens: Vec<(usize, usize)>,
    pub z: Vec<f64>,
    pub logprob: Vec<f64>,
}

impl TokenRecordRow {
    pub fn token_spans(&self) -> Vec<TokenSpan> {
        self.tokens
            .iter()
            .enumerate()
            .map(|(i, &(s, e))| TokenSpan::new(i, s, e))
            .collect()
    }

    /// Target records for positions `1..n`.
    pub fn records(&self) -> Result<Vec<TokenRecord>> {
        let scored = self.tokens.len().saturating_sub(1);
        if self.z.len() != scored || self.logprob.len() != scored {
            return Err(Error::invalid(format!(
                "sample `{}`: {} tokens need {} z/logprob values, got {}/{}",
                self.sample_id,
                self.tokens.len(),
                scored,
                self.z.len(),
                self.logprob.len()
            )));
        }
        (1..self.tokens.len())
            .map(|i| {
                let (start, end) = self.tokens[i];
                let z = self.z[i - 1];
                let mut logprob = self.logprob[i - 1];
                if !z.is_finite() || !logprob.is_finite() || logprob > LOGPROB_SLACK {
                    return Err(Error::invalid(format!(
                        "sample `{}`: invalid statistics at position {i} (z={z}, logprob={logprob})",
                        self.sample_id
                    )));
                }
                logprob = logprob.min(0.0);
                Ok(TokenRecord {
                    index: i,
                    start,
                    end,
                    z,
                    logprob,
                })
            })
            .collect()
    }
}

/// Output-logit scores of one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogitScores {
    pub anomaly: f64,
    pub loss: f64,
    pub mink: f64,
}

/// Projects the mask onto the sample's tokens and computes the anomaly score
/// together with both baselines.
pub fn score_sample(
    mask: &CharWeightMask,
    row: &TokenRecordRow,
    k_percent: f64,
) -> Result<LogitScores> {
    let weights = project(mask, &row.token_spans())?;
    let records = row.records()?;
    Ok(LogitScores {
        anomaly: anomaly_score(&records, &weights)?,
        loss: loss_score(&records)?,
        mink: mink_score(&records, k_percent)?,
    })
}

/// One row of the scores file. Absent components serialize as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipScore {
    pub sample_id: String,
    pub anomaly: Option<f64>,
    pub probe: Option<f64>,
    pub fused: Option<f64>,
    pub loss: Option<f64>,
    pub mink: Option<f64>,
    pub label: Option<Label>,
}

impl MembershipScore {
    pub fn empty(sample_id: impl Into<String>, label: Option<Label>) -> Self {
        Self {
            sample_id: sample_id.into(),
            anomaly: None,
            probe: None,
            fused: None,
            loss: None,
            mink: None,
            label,
        }
    }

    pub fn with_logit_scores(mut self, s: LogitScores) -> Self {
        self.anomaly = Some(s.anomaly);
        self.loss = Some(s.loss);
        self.mink = Some(s.mink);
        self
    }

    /// Attaches a probe score and, when an anomaly score exists, the fusion.
    pub fn with_probe(mut self, probe: f64, alpha: f64) -> Result<Self> {
        self.probe = Some(probe);
        self.fused = match self.anomaly {
            Some(a) => Some(fuse(a, probe, alpha)?),
            None => None,
        };
        Ok(self)
    }
}
