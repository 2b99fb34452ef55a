//! Character-level anomaly weighting of source code.
//!
//! Every character of a sample receives one of five weights. Syntax-aware
//! classification, formatting lints, an English dictionary check over
//! identifiers and a developer-tag scan each contribute [`AnomalySpan`]s;
//! a character's final weight is the maximum over all spans covering it,
//! defaulting to the boilerplate weight.

mod dictionary;
mod fallback;
mod lint;
mod syntax;
mod tags;
mod text;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sample::SourceSample;

pub use dictionary::{dictionary_check, split_identifier, Wordlist};
pub use lint::{
    import_lint_diagnostics, lint_format, ExternalLints, LintDiagnostic, LintRule, MAX_LINE_CHARS,
};
pub use syntax::{classify_syntax, SyntaxOutcome};
pub use tags::{psych_tag_scan, PSYCH_TAGS};
pub use text::TextIndex;

/// Identifiers at least this long (in Unicode scalars) are "long".
pub const LONG_IDENTIFIER_CHARS: usize = 10;
/// Identifiers shorter than this are treated as boilerplate.
pub const MIN_IDENTIFIER_CHARS: usize = 3;

/// The closed set of weights a character can carry, ordered by weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub enum Tier {
    #[default]
    Boilerplate,
    Standard,
    Long,
    Literal,
    Severe,
}

impl Tier {
    pub const ALL: [Tier; 5] = [
        Tier::Boilerplate,
        Tier::Standard,
        Tier::Long,
        Tier::Literal,
        Tier::Severe,
    ];

    pub const fn weight(self) -> f64 {
        match self {
            Tier::Boilerplate => 0.1,
            Tier::Standard => 1.0,
            Tier::Long => 3.0,
            Tier::Literal => 5.0,
            Tier::Severe => 10.0,
        }
    }

    /// Maps a decoded weight back onto its tier. Only the five canonical
    /// values are accepted.
    pub fn from_weight(w: f64) -> Option<Tier> {
        Tier::ALL
            .into_iter()
            .find(|t| (t.weight() - w).abs() < 1e-9)
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.weight())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnomalyKind {
    Boilerplate,
    StandardIdentifier,
    LongIdentifier,
    StringLiteral,
    LintError,
    Comment,
    MultilingualSlippage,
    PsychTag,
}

impl AnomalyKind {
    pub const fn tier(self) -> Tier {
        match self {
            AnomalyKind::Boilerplate => Tier::Boilerplate,
            AnomalyKind::StandardIdentifier => Tier::Standard,
            AnomalyKind::LongIdentifier => Tier::Long,
            AnomalyKind::StringLiteral | AnomalyKind::LintError => Tier::Literal,
            AnomalyKind::Comment | AnomalyKind::MultilingualSlippage | AnomalyKind::PsychTag => {
                Tier::Severe
            }
        }
    }

    pub const fn weight(self) -> f64 {
        self.tier().weight()
    }

    pub fn is_identifier(self) -> bool {
        matches!(
            self,
            AnomalyKind::StandardIdentifier | AnomalyKind::LongIdentifier
        )
    }

    /// Classification of an identifier by its length alone; `None` when it
    /// is too short to carry weight.
    pub fn for_identifier_len(len: usize) -> Option<AnomalyKind> {
        if len >= LONG_IDENTIFIER_CHARS {
            Some(AnomalyKind::LongIdentifier)
        } else if len >= MIN_IDENTIFIER_CHARS {
            Some(AnomalyKind::StandardIdentifier)
        } else {
            None
        }
    }
}

/// A classified character range `[start, end)` in Unicode scalar offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AnomalySpan {
    pub start: usize,
    pub end: usize,
    pub kind: AnomalyKind,
}

impl AnomalySpan {
    pub fn new(start: usize, end: usize, kind: AnomalyKind) -> Self {
        debug_assert!(start < end, "empty span {start}..{end}");
        Self { start, end, kind }
    }

    pub fn weight(&self) -> f64 {
        self.kind.weight()
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }
}

/// A maximal run of characters sharing one non-boilerplate weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WeightRun {
    pub start: usize,
    pub end: usize,
    pub tier: Tier,
}

/// Per-character weights of one sample, stored as sorted, non-overlapping
/// runs. Characters outside every run weigh [`Tier::Boilerplate`].
#[derive(Debug, Clone, PartialEq)]
pub struct CharWeightMask {
    pub sample_id: String,
    pub length: usize,
    pub degraded: bool,
    runs: Vec<WeightRun>,
}

impl CharWeightMask {
    /// Compresses a per-character tier array into run form.
    pub fn from_tiers(sample_id: impl Into<String>, tiers: &[Tier], degraded: bool) -> Self {
        let mut runs: Vec<WeightRun> = Vec::new();
        for (i, &tier) in tiers.iter().enumerate() {
            if tier == Tier::Boilerplate {
                continue;
            }
            match runs.last_mut() {
                Some(run) if run.end == i && run.tier == tier => run.end = i + 1,
                _ => runs.push(WeightRun {
                    start: i,
                    end: i + 1,
                    tier,
                }),
            }
        }
        Self {
            sample_id: sample_id.into(),
            length: tiers.len(),
            degraded,
            runs,
        }
    }

    /// Builds a mask from explicit runs, validating ordering and bounds.
    pub fn from_runs(
        sample_id: impl Into<String>,
        length: usize,
        degraded: bool,
        runs: Vec<WeightRun>,
    ) -> Result<Self> {
        let mut prev_end = 0;
        for run in &runs {
            if run.start >= run.end || run.end > length {
                return Err(Error::invalid(format!(
                    "span {}..{} outside mask of length {length}",
                    run.start, run.end
                )));
            }
            if run.start < prev_end {
                return Err(Error::invalid(format!(
                    "span {}..{} overlaps or precedes the previous span",
                    run.start, run.end
                )));
            }
            prev_end = run.end;
        }
        Ok(Self {
            sample_id: sample_id.into(),
            length,
            degraded,
            runs,
        })
    }

    pub fn runs(&self) -> &[WeightRun] {
        &self.runs
    }

    pub fn tiers(&self) -> Vec<Tier> {
        let mut tiers = vec![Tier::Boilerplate; self.length];
        for run in &self.runs {
            tiers[run.start..run.end].fill(run.tier);
        }
        tiers
    }

    /// The per-character weight array; its length always equals `length`.
    pub fn materialize(&self) -> Vec<f64> {
        self.tiers().into_iter().map(Tier::weight).collect()
    }

    pub fn to_record(&self) -> MaskRecord {
        MaskRecord {
            sample_id: self.sample_id.clone(),
            length: self.length,
            degraded: self.degraded,
            spans: self
                .runs
                .iter()
                .map(|r| (r.start, r.end, r.tier.weight()))
                .collect(),
        }
    }
}

/// Wire form of a mask: one NDJSON row per sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskRecord {
    pub sample_id: String,
    pub length: usize,
    pub degraded: bool,
    pub spans: Vec<(usize, usize, f64)>,
}

impl TryFrom<MaskRecord> for CharWeightMask {
    type Error = Error;

    fn try_from(rec: MaskRecord) -> Result<Self> {
        let runs = rec
            .spans
            .iter()
            .map(|&(start, end, w)| {
                Tier::from_weight(w)
                    .filter(|t| *t != Tier::Boilerplate)
                    .map(|tier| WeightRun { start, end, tier })
                    .ok_or_else(|| Error::invalid(format!("span weight {w} is not a mask weight")))
            })
            .collect::<Result<Vec<_>>>()?;
        CharWeightMask::from_runs(rec.sample_id, rec.length, rec.degraded, runs)
    }
}

/// Everything the mask engine derived for one sample.
#[derive(Debug, Clone)]
pub struct MaskAnalysis {
    /// All contributing spans before the max-merge, in no particular order.
    pub spans: Vec<AnomalySpan>,
    pub mask: CharWeightMask,
}

/// Combines the individual signal extractors into a mask.
#[derive(Debug, Clone, Copy)]
pub struct MaskEngine<'w> {
    wordlist: &'w Wordlist,
}

impl Default for MaskEngine<'static> {
    fn default() -> Self {
        Self {
            wordlist: Wordlist::bundled(),
        }
    }
}

impl<'w> MaskEngine<'w> {
    pub fn with_wordlist(wordlist: &'w Wordlist) -> Self {
        Self { wordlist }
    }

    pub fn analyze(
        &self,
        sample: &SourceSample,
        externals: Option<&[LintDiagnostic]>,
    ) -> MaskAnalysis {
        let chars: Vec<char> = sample.content.chars().collect();
        let SyntaxOutcome {
            mut spans,
            degraded,
        } = classify_syntax(sample);

        for span in spans.iter_mut().filter(|s| s.kind.is_identifier()) {
            let ident: String = chars[span.start..span.end].iter().collect();
            if !dictionary_check(&ident, self.wordlist) {
                span.kind = AnomalyKind::MultilingualSlippage;
            }
        }

        let lints = lint_format(sample);
        spans.extend(
            lints
                .iter()
                .chain(externals.unwrap_or_default())
                .filter(|d| d.start < d.end && d.end <= chars.len())
                .map(|d| AnomalySpan::new(d.start, d.end, AnomalyKind::LintError)),
        );
        spans.extend(psych_tag_scan(sample));

        let mut tiers = vec![Tier::Boilerplate; chars.len()];
        for span in &spans {
            let tier = span.kind.tier();
            for t in &mut tiers[span.start..span.end] {
                if tier > *t {
                    *t = tier;
                }
            }
        }
        MaskAnalysis {
            spans,
            mask: CharWeightMask::from_tiers(sample.id.clone(), &tiers, degraded),
        }
    }

    pub fn build(
        &self,
        sample: &SourceSample,
        externals: Option<&[LintDiagnostic]>,
    ) -> CharWeightMask {
        self.analyze(sample, externals).mask
    }
}

/// Builds the character weight mask of `sample` with the bundled wordlist.
pub fn build_mask(sample: &SourceSample, externals: Option<&[LintDiagnostic]>) -> CharWeightMask {
    MaskEngine::default().build(sample, externals)
}
