use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ndjson::NdjsonReader;

/// The five source languages the mask engine understands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Python,
    Java,
    Go,
    Ruby,
    Rust,
}

impl Language {
    pub const ALL: [Language; 5] = [
        Language::Python,
        Language::Java,
        Language::Go,
        Language::Ruby,
        Language::Rust,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Language::Python => "python",
            Language::Java => "java",
            Language::Go => "go",
            Language::Ruby => "ruby",
            Language::Rust => "rust",
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Language {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Language::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unsupported language `{s}`")))
    }
}

/// Ground-truth membership label. Serialized as `1` (member) or `0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Label {
    NonMember,
    Member,
}

impl Label {
    pub fn is_member(self) -> bool {
        self == Label::Member
    }
}

impl TryFrom<u8> for Label {
    type Error = String;

    fn try_from(v: u8) -> std::result::Result<Self, String> {
        match v {
            0 => Ok(Label::NonMember),
            1 => Ok(Label::Member),
            other => Err(format!("label must be 0 or 1, got {other}")),
        }
    }
}

impl From<Label> for u8 {
    fn from(l: Label) -> u8 {
        match l {
            Label::NonMember => 0,
            Label::Member => 1,
        }
    }
}

impl From<bool> for Label {
    fn from(member: bool) -> Self {
        if member {
            Label::Member
        } else {
            Label::NonMember
        }
    }
}

/// One source file of the evaluation corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSample {
    pub id: String,
    pub language: Language,
    #[serde(default)]
    pub label: Option<Label>,
    pub content: String,
}

impl SourceSample {
    pub fn new(id: impl Into<String>, language: Language, content: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            language,
            label: None,
            content: content.into(),
        }
    }

    pub fn with_label(mut self, label: Label) -> Self {
        self.label = Some(label);
        self
    }

    /// Length of the content in Unicode scalar values.
    pub fn char_len(&self) -> usize {
        self.content.chars().count()
    }
}

/// Reads an NDJSON manifest, rejecting empty or duplicate ids.
pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<SourceSample>> {
    let path = path.as_ref();
    let mut seen = HashSet::new();
    let mut samples = Vec::new();
    for row in NdjsonReader::<_, SourceSample>::open(path)? {
        let (line, sample) = row?;
        let problem = if sample.id.is_empty() {
            Some("empty sample id".to_string())
        } else if !seen.insert(sample.id.clone()) {
            Some(format!("duplicate sample id `{}`", sample.id))
        } else {
            None
        };
        if let Some(message) = problem {
            return Err(Error::Schema {
                path: path.to_path_buf(),
                line,
                message,
            });
        }
        samples.push(sample);
    }
    Ok(samples)
}
