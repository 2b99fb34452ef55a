use std::sync::LazyLock;

use regex::Regex;

use super::text::TextIndex;
use super::{AnomalyKind, AnomalySpan};
use crate::sample::SourceSample;

pub const PSYCH_TAGS: [&str; 6] = ["TODO", "FIXME", "HACK", "XXX", "WTF", "NOTE"];

static TAG: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(&format!(r"\b(?:{})\b", PSYCH_TAGS.join("|"))).unwrap());

/// Finds developer annotation markers anywhere in the text.
pub fn psych_tag_scan(sample: &SourceSample) -> Vec<AnomalySpan> {
    let text = &sample.content;
    let mut index = None;
    TAG.find_iter(text)
        .map(|m| {
            let index = index.get_or_insert_with(|| TextIndex::new(text));
            let (s, e) = index.char_range(m.start(), m.end());
            AnomalySpan::new(s, e, AnomalyKind::PsychTag)
        })
        .collect()
}
