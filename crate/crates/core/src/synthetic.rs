//! Synthetic membership data built on top of real source files.
//!
//! Each synthetic sample is a window of lines from a real file. Its mask is
//! computed by the regular mask engine and projected onto a simple subword
//! tokenization; per-token z-scores are then drawn so that only tokens with
//! weight ≥ 3.0 separate members from non-members:
//!
//! | token weight | member      | non-member |
//! |--------------|-------------|------------|
//! | < 3.0        | N(2, 1)     | N(2, 1)    |
//! | ≥ 3.0        | N(1, 1) + 1 | N(0, 1)    |
//!
//! Per-layer features imitate mean-pooled and weight-pooled hidden states
//! in which members carry a layer-dependent shift on high-weight tokens.

use std::path::Path;
use std::sync::LazyLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use regex::Regex;

use crate::error::{Error, Result};
use crate::mask::{build_mask, TextIndex};
use crate::ndjson::NdjsonWriter;
use crate::probe::LayerFeatureVector;
use crate::projection::{project, TokenSpan};
use crate::sample::{Label, SourceSample};
use crate::scoring::TokenRecordRow;

/// Token weights at or above this carry the membership signal.
pub const SIGNAL_WEIGHT: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub samples: usize,
    pub seed: u64,
    /// Upper bound on the characters of one sample window.
    pub max_chars: usize,
    pub layers: usize,
    /// Hidden size; feature vectors have twice this dimension.
    pub hidden: usize,
    /// Largest member shift applied to hidden states (at the middle layer).
    pub peak_shift: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            samples: 2000,
            seed: 0,
            max_chars: 4000,
            layers: 8,
            hidden: 8,
            peak_shift: 0.8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticSample {
    pub sample: SourceSample,
    pub tokens: TokenRecordRow,
    pub features: Vec<LayerFeatureVector>,
}

#[derive(Debug, Clone, Default)]
pub struct SyntheticCorpus {
    pub samples: Vec<SyntheticSample>,
}

impl SyntheticCorpus {
    /// Writes `manifest.ndjson`, `tokens.ndjson` and `features.ndjson`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let mut manifest = NdjsonWriter::create(dir.join("manifest.ndjson"))?;
        let mut tokens = NdjsonWriter::create(dir.join("tokens.ndjson"))?;
        let mut features = NdjsonWriter::create(dir.join("features.ndjson"))?;
        for s in &self.samples {
            manifest.write(&s.sample)?;
            tokens.write(&s.tokens)?;
            for f in &s.features {
                features.write(f)?;
            }
        }
        manifest.finish()?;
        tokens.finish()?;
        features.finish()?;
        Ok(())
    }
}

static PIECE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"[A-Za-z]{1,5}|[0-9]{1,3}|[ \t]{1,8}|\r?\n|[^\x00-\x7f]|.").unwrap()
});

/// Splits text into short subword-like pieces, preceded by a zero-width
/// beginning-of-sequence token.
pub fn tokenize(text: &str) -> Vec<TokenSpan> {
    let index = TextIndex::new(text);
    let mut spans = vec![TokenSpan::new(0, 0, 0)];
    for m in PIECE.find_iter(text) {
        let (s, e) = index.char_range(m.start(), m.end());
        spans.push(TokenSpan::new(spans.len(), s, e));
    }
    spans
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// `ln σ(z)` without overflow.
fn log_sigmoid(z: f64) -> f64 {
    -((-z).max(0.0) + (-z.abs()).exp().ln_1p())
}

/// A run of whole lines of `content` starting at a random line, at most
/// `max_chars` characters long (a single longer line is cut).
fn window<R: Rng>(content: &str, max_chars: usize, rng: &mut R) -> String {
    let lines: Vec<&str> = content.split_inclusive('\n').collect();
    if lines.is_empty() {
        return String::new();
    }
    let len = |l: &str| l.chars().count();
    let mut start = rng.gen_range(0..lines.len());
    let mut end = start;
    let mut chars = 0;
    while end < lines.len() && chars + len(lines[end]) <= max_chars {
        chars += len(lines[end]);
        end += 1;
    }
    if end == start {
        return lines[start].chars().take(max_chars).collect();
    }
    // Windows that hit the end of the file grow backwards instead.
    while start > 0 && chars + len(lines[start - 1]) <= max_chars {
        start -= 1;
        chars += len(lines[start]);
    }
    lines[start..end].concat()
}

fn layer_shift(layer: usize, layers: usize, peak: f64) -> f64 {
    let mid = (layers as f64 - 1.0) / 2.0;
    let width = (layers as f64 / 4.0).max(1.0);
    peak * (-((layer as f64 - mid) / width).powi(2)).exp()
}

/// Generates a balanced synthetic corpus (even indices are members).
pub fn generate(sources: &[SourceSample], config: &SyntheticConfig) -> Result<SyntheticCorpus> {
    if sources.is_empty() {
        return Err(Error::invalid(
            "synthetic generation needs at least one source file",
        ));
    }
    if config.layers == 0 || config.hidden == 0 || config.max_chars == 0 {
        return Err(Error::invalid(
            "layers, hidden and max_chars must be positive",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut out = Vec::with_capacity(config.samples);

    for i in 0..config.samples {
        let member = i % 2 == 0;
        // Re-draw windows that are too short to carry a prediction step.
        let (content, spans, mask, language) = loop {
            let src = &sources[rng.gen_range(0..sources.len())];
            let content = window(&src.content, config.max_chars, &mut rng);
            let spans = tokenize(&content);
            if spans.len() >= 3 {
                let probe_sample = SourceSample::new("", src.language, content.as_str());
                let mask = build_mask(&probe_sample, None);
                break (content, spans, mask, src.language);
            }
        };
        let id = format!("syn-{i:05}");
        let weights = project(&mask, &spans)?;

        let mut z = Vec::with_capacity(spans.len() - 1);
        let mut logprob = Vec::with_capacity(spans.len() - 1);
        for &w in &weights.raw[1..] {
            let value = if w >= SIGNAL_WEIGHT {
                if member {
                    normal(&mut rng) + 2.0
                } else {
                    normal(&mut rng)
                }
            } else {
                normal(&mut rng) + 2.0
            };
            z.push(value);
            logprob.push(log_sigmoid(value));
        }

        let features = (0..config.layers)
            .map(|layer| {
                let shift = if member {
                    layer_shift(layer, config.layers, config.peak_shift)
                } else {
                    0.0
                };
                let h = config.hidden;
                let mut mean_pool = vec![0.0; h];
                let mut weight_pool = vec![0.0; h];
                for (t, &w) in weights.raw.iter().enumerate() {
                    let signal = if w >= SIGNAL_WEIGHT { shift } else { 0.0 };
                    for d in 0..h {
                        let v = normal(&mut rng) + signal;
                        mean_pool[d] += v;
                        weight_pool[d] += weights.normalized[t] * v;
                    }
                }
                let n = weights.raw.len() as f64;
                mean_pool.iter_mut().for_each(|v| *v /= n);
                mean_pool.extend(weight_pool);
                LayerFeatureVector {
                    sample_id: id.clone(),
                    layer,
                    features: mean_pool,
                }
            })
            .collect();

        out.push(SyntheticSample {
            sample: SourceSample::new(id.clone(), language, content)
                .with_label(Label::from(member)),
            tokens: TokenRecordRow {
                sample_id: id,
                tokens: spans.iter().map(|s| (s.start, s.end)).collect(),
                z,
                logprob,
            },
            features,
        });
    }
    Ok(SyntheticCorpus { samples: out })
}
