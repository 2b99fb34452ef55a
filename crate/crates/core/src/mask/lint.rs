//! Native formatting lints and the bridge for externally produced ones.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ndjson::NdjsonReader;
use crate::sample::SourceSample;

/// Lines longer than this many characters are overlong.
pub const MAX_LINE_CHARS: usize = 120;
/// Blank lines allowed in a row before the rest of the run is flagged.
const MAX_BLANK_RUN: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LintRule {
    TrailingWhitespace,
    MixedTabsSpaces,
    InconsistentIndent,
    MultipleBlankLines,
    OverlongLine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LintDiagnostic {
    pub start: usize,
    pub end: usize,
    pub rule: LintRule,
}

impl LintDiagnostic {
    pub fn new(start: usize, end: usize, rule: LintRule) -> Self {
        Self { start, end, rule }
    }
}

struct Line {
    /// Character offset of the first character.
    start: usize,
    /// Characters up to (not including) `\r\n` / `\n`.
    chars: Vec<char>,
    /// Offset one past the line terminator, or `start + chars.len()` at EOF.
    end_with_newline: usize,
    has_newline: bool,
}

impl Line {
    fn is_blank(&self) -> bool {
        self.chars.iter().all(|c| matches!(c, ' ' | '\t' | '\x0c'))
    }

    fn indent_len(&self) -> usize {
        self.chars
            .iter()
            .take_while(|c| matches!(c, ' ' | '\t'))
            .count()
    }
}

fn split_lines(text: &str) -> Vec<Line> {
    let mut lines = Vec::new();
    let mut offset = 0;
    let mut rest = text;
    while !rest.is_empty() {
        let (body, has_newline, consumed) = match rest.find('\n') {
            Some(i) => (&rest[..i], true, i + 1),
            None => (rest, false, rest.len()),
        };
        let body_chars: Vec<char> = body.chars().collect();
        let terminator_chars = usize::from(has_newline);
        let total = body_chars.len() + terminator_chars;
        let mut chars = body_chars;
        if has_newline && chars.last() == Some(&'\r') {
            chars.pop();
        }
        lines.push(Line {
            start: offset,
            chars,
            end_with_newline: offset + total,
            has_newline,
        });
        offset += total;
        rest = &rest[consumed..];
    }
    lines
}

/// Runs the five native formatting rules over a sample.
pub fn lint_format(sample: &SourceSample) -> Vec<LintDiagnostic> {
    let lines = split_lines(&sample.content);
    let mut out = Vec::new();

    for line in &lines {
        if line.has_newline {
            let trailing = line
                .chars
                .iter()
                .rev()
                .take_while(|c| matches!(c, ' ' | '\t'))
                .count();
            if trailing > 0 {
                let end = line.start + line.chars.len();
                out.push(LintDiagnostic::new(
                    end - trailing,
                    end,
                    LintRule::TrailingWhitespace,
                ));
            }
        }
        if line.chars.len() > MAX_LINE_CHARS {
            out.push(LintDiagnostic::new(
                line.start + MAX_LINE_CHARS,
                line.start + line.chars.len(),
                LintRule::OverlongLine,
            ));
        }
        if !line.is_blank() {
            let indent = &line.chars[..line.indent_len()];
            if indent.contains(&'\t') && indent.contains(&' ') {
                out.push(LintDiagnostic::new(
                    line.start,
                    line.start + indent.len(),
                    LintRule::MixedTabsSpaces,
                ));
            }
        }
    }

    out.extend(blank_runs(&lines));
    out.extend(inconsistent_indents(&lines));
    out.sort();
    out
}

fn blank_runs(lines: &[Line]) -> Vec<LintDiagnostic> {
    let mut out = Vec::new();
    let mut run: Vec<&Line> = Vec::new();
    let mut flush = |run: &mut Vec<&Line>| {
        if run.len() > MAX_BLANK_RUN {
            let first = run[MAX_BLANK_RUN];
            let last = run[run.len() - 1];
            if first.start < last.end_with_newline {
                out.push(LintDiagnostic::new(
                    first.start,
                    last.end_with_newline,
                    LintRule::MultipleBlankLines,
                ));
            }
        }
        run.clear();
    };
    for line in lines {
        if line.is_blank() {
            run.push(line);
        } else {
            flush(&mut run);
        }
    }
    flush(&mut run);
    out
}

/// The most frequent positive indentation step between consecutive
/// non-blank lines, smallest step winning ties.
fn dominant_indent_unit(lines: &[Line]) -> Option<usize> {
    let indents: Vec<usize> = lines
        .iter()
        .filter(|l| !l.is_blank())
        .map(Line::indent_len)
        .collect();
    let mut counts: HashMap<usize, usize> = HashMap::new();
    for pair in indents.windows(2) {
        if pair[1] > pair[0] {
            *counts.entry(pair[1] - pair[0]).or_default() += 1;
        }
    }
    counts
        .into_iter()
        .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))
        .map(|(unit, _)| unit)
}

fn inconsistent_indents(lines: &[Line]) -> Vec<LintDiagnostic> {
    let Some(unit) = dominant_indent_unit(lines) else {
        return Vec::new();
    };
    lines
        .iter()
        .filter(|l| !l.is_blank())
        .filter_map(|l| {
            let n = l.indent_len();
            (n % unit != 0)
                .then(|| LintDiagnostic::new(l.start, l.start + n, LintRule::InconsistentIndent))
        })
        .collect()
}

#[derive(Debug, Deserialize)]
struct ExternalRow {
    sample_id: String,
    start: usize,
    end: usize,
    rule: LintRule,
}

/// Diagnostics produced by an external linter, grouped by sample.
#[derive(Debug, Default, Clone)]
pub struct ExternalLints {
    by_sample: HashMap<String, Vec<LintDiagnostic>>,
}

impl ExternalLints {
    /// Loads an NDJSON diagnostics file. Any malformed row rejects the whole
    /// file with an error naming its line.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut by_sample: HashMap<String, Vec<LintDiagnostic>> = HashMap::new();
        for row in NdjsonReader::<_, ExternalRow>::open(path)? {
            let (_, row) = row?;
            by_sample
                .entry(row.sample_id)
                .or_default()
                .push(LintDiagnostic::new(row.start, row.end, row.rule));
        }
        Ok(Self { by_sample })
    }

    /// In-bounds diagnostics for one sample; invalid ranges are dropped with
    /// a warning.
    pub fn for_sample(&self, sample_id: &str, content_len: usize) -> Vec<LintDiagnostic> {
        let Some(diags) = self.by_sample.get(sample_id) else {
            return Vec::new();
        };
        diags
            .iter()
            .filter(|d| {
                let ok = d.start < d.end && d.end <= content_len;
                if !ok {
                    log::warn!(
                        "skipping external diagnostic {}..{} for `{sample_id}`: content has {content_len} characters",
                        d.start,
                        d.end
                    );
                }
                ok
            })
            .copied()
            .collect()
    }
}

/// Reads external diagnostics for a single sample of `content_len` characters.
pub fn import_lint_diagnostics(
    path: impl AsRef<Path>,
    sample_id: &str,
    content_len: usize,
) -> Result<Vec<LintDiagnostic>> {
    Ok(ExternalLints::load(path)?.for_sample(sample_id, content_len))
}
