//! Projection of character weights onto model subword tokens.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::{CharWeightMask, Tier};

/// Character span of one token; `start == end` marks a zero-width special.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSpan {
    pub index: usize,
    pub start: usize,
    pub end: usize,
}

impl TokenSpan {
    pub fn new(index: usize, start: usize, end: usize) -> Self {
        Self { index, start, end }
    }
}

/// Per-token weights of one sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenWeights {
    pub sample_id: String,
    pub raw: Vec<f64>,
    pub normalized: Vec<f64>,
}

impl TokenWeights {
    /// Builds weights from raw values, normalizing over all positions.
    pub fn from_raw(sample_id: impl Into<String>, raw: Vec<f64>) -> Result<Self> {
        let total: f64 = raw.iter().sum();
        if raw.is_empty() || !(total > 0.0) || raw.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::invalid(
                "token weights must be non-empty, finite, non-negative and not all zero",
            ));
        }
        let normalized = raw.iter().map(|w| w / total).collect();
        Ok(Self {
            sample_id: sample_id.into(),
            raw,
            normalized,
        })
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }
}

/// Assigns each token the maximum character weight inside its span.
///
/// Spans may arrive in any order; they are placed by their `index`, which
/// must run contiguously from zero.
pub fn project(mask: &CharWeightMask, spans: &[TokenSpan]) -> Result<TokenWeights> {
    if spans.is_empty() {
        return Err(Error::invalid(
            "cannot project onto an empty token sequence",
        ));
    }
    let mut ordered: Vec<Option<TokenSpan>> = vec![None; spans.len()];
    for span in spans {
        match ordered.get_mut(span.index) {
            Some(slot @ None) => *slot = Some(*span),
            _ => {
                return Err(Error::invalid(format!(
                    "token indices must be a permutation of 0..{}; saw {}",
                    spans.len(),
                    span.index
                )))
            }
        }
    }

    let tiers = mask.tiers();
    let raw = ordered
        .into_iter()
        .map(|s| {
            let s = s.expect("slots filled");
            if s.end > mask.length || s.start > s.end {
                return Err(Error::SpanOutOfBounds {
                    index: s.index,
                    start: s.start,
                    end: s.end,
                    length: mask.length,
                });
            }
            let tier = tiers[s.start..s.end]
                .iter()
                .copied()
                .max()
                .unwrap_or(Tier::Boilerplate);
            Ok(tier.weight())
        })
        .collect::<Result<Vec<_>>>()?;
    TokenWeights::from_raw(mask.sample_id.clone(), raw)
}
