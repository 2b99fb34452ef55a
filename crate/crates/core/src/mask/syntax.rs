use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::LazyLock;

use regex::Regex;
use tree_sitter::{Node, Parser, Tree};

use super::fallback;
use super::text::TextIndex;
use super::{AnomalyKind, AnomalySpan};
use crate::sample::{Language, SourceSample};

/// Fraction of the text that may sit inside parser error nodes before the
/// tree is abandoned in favour of the regex classifier.
const MAX_ERROR_FRACTION: f64 = 0.5;

pub(super) static IDENTIFIER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^[A-Za-z_][A-Za-z0-9_]*$").unwrap());

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxOutcome {
    pub spans: Vec<AnomalySpan>,
    /// The grammar could not make sense of the text; spans come from the
    /// regex classifier instead.
    pub degraded: bool,
}

struct Grammar {
    identifiers: &'static [&'static str],
    strings: &'static [&'static str],
    comments: &'static [&'static str],
}

fn grammar(lang: Language) -> &'static Grammar {
    match lang {
        Language::Python => &Grammar {
            identifiers: &["identifier"],
            strings: &["string"],
            comments: &["comment"],
        },
        Language::Java => &Grammar {
            identifiers: &["identifier", "type_identifier"],
            strings: &["string_literal"],
            comments: &["line_comment", "block_comment"],
        },
        Language::Go => &Grammar {
            identifiers: &[
                "identifier",
                "field_identifier",
                "type_identifier",
                "package_identifier",
                "label_name",
            ],
            strings: &["interpreted_string_literal", "raw_string_literal"],
            comments: &["comment"],
        },
        Language::Ruby => &Grammar {
            identifiers: &[
                "identifier",
                "constant",
                "instance_variable",
                "class_variable",
                "global_variable",
                "hash_key_symbol",
                "simple_symbol",
            ],
            strings: &["string", "string_array", "heredoc_body"],
            comments: &["comment"],
        },
        Language::Rust => &Grammar {
            identifiers: &[
                "identifier",
                "type_identifier",
                "field_identifier",
                "shorthand_field_identifier",
            ],
            strings: &["string_literal", "raw_string_literal"],
            comments: &["line_comment", "block_comment"],
        },
    }
}

fn ts_language(lang: Language) -> tree_sitter::Language {
    match lang {
        Language::Python => tree_sitter_python::LANGUAGE.into(),
        Language::Java => tree_sitter_java::LANGUAGE.into(),
        Language::Go => tree_sitter_go::LANGUAGE.into(),
        Language::Ruby => tree_sitter_ruby::LANGUAGE.into(),
        Language::Rust => tree_sitter_rust::LANGUAGE.into(),
    }
}

thread_local! {
    static PARSERS: RefCell<HashMap<Language, Parser>> = RefCell::new(HashMap::new());
}

fn parse(lang: Language, text: &str) -> Option<Tree> {
    PARSERS.with(|cell| {
        let mut parsers = cell.borrow_mut();
        let parser = match parsers.entry(lang) {
            std::collections::hash_map::Entry::Occupied(e) => e.into_mut(),
            std::collections::hash_map::Entry::Vacant(e) => {
                let mut p = Parser::new();
                p.set_language(&ts_language(lang)).ok()?;
                e.insert(p)
            }
        };
        parser.parse(text, None)
    })
}

/// Classifies identifiers, string literals and comments of a sample.
///
/// Uses the language grammar when the parse is usable and falls back to the
/// regex classifier (flagging the outcome as degraded) otherwise.
pub fn classify_syntax(sample: &SourceSample) -> SyntaxOutcome {
    let text = sample.content.as_str();
    if text.is_empty() {
        return SyntaxOutcome {
            spans: Vec::new(),
            degraded: false,
        };
    }
    let index = TextIndex::new(text);
    let tree = parse(sample.language, text);
    match tree {
        Some(tree) if !too_broken(&tree, text.len()) => SyntaxOutcome {
            spans: collect_spans(sample.language, &tree, text, &index),
            degraded: false,
        },
        _ => SyntaxOutcome {
            spans: fallback::classify(sample.language, text, &index),
            degraded: true,
        },
    }
}

fn too_broken(tree: &Tree, len: usize) -> bool {
    let root = tree.root_node();
    if root.is_error() {
        return true;
    }
    if !root.has_error() {
        return false;
    }
    let mut error_bytes = 0usize;
    let mut stack = vec![root];
    while let Some(node) = stack.pop() {
        if node.is_error() {
            error_bytes += node.end_byte() - node.start_byte();
            continue;
        }
        if node.has_error() {
            let mut cursor = node.walk();
            stack.extend(node.children(&mut cursor));
        }
    }
    error_bytes as f64 > MAX_ERROR_FRACTION * len as f64
}

fn collect_spans(lang: Language, tree: &Tree, text: &str, index: &TextIndex) -> Vec<AnomalySpan> {
    let g = grammar(lang);
    let mut spans = Vec::new();
    let mut cursor = tree.walk();
    let mut visit = |node: Node| {
        let kind = node.kind();
        let (sb, eb) = (node.start_byte(), node.end_byte());
        if sb >= eb {
            return;
        }
        if g.comments.contains(&kind) {
            let raw = &text[sb..eb];
            let trimmed = raw.trim_end_matches(['\n', '\r']);
            let (s, e) = index.char_range(sb, sb + trimmed.len());
            if s < e {
                spans.push(AnomalySpan::new(s, e, AnomalyKind::Comment));
            }
        } else if g.strings.contains(&kind) {
            let (s, e) = index.char_range(sb, eb);
            spans.push(AnomalySpan::new(s, e, AnomalyKind::StringLiteral));
        } else if node.child_count() == 0 && g.identifiers.contains(&kind) {
            if let Some(span) = identifier_span(&text[sb..eb], sb, index) {
                spans.push(span);
            }
        }
    };

    // Pre-order walk over every node.
    loop {
        visit(cursor.node());
        if cursor.goto_first_child() {
            continue;
        }
        loop {
            if cursor.goto_next_sibling() {
                break;
            }
            if !cursor.goto_parent() {
                return spans;
            }
        }
    }
}

/// Span for an identifier token. Ruby sigils (`@`, `@@`, `$`, `:`) and a
/// trailing `:` on hash keys are not part of the name.
fn identifier_span(raw: &str, start_byte: usize, index: &TextIndex) -> Option<AnomalySpan> {
    let name_start = raw.len() - raw.trim_start_matches(['@', '$', ':']).len();
    let name = raw[name_start..].trim_end_matches(':');
    if !IDENTIFIER.is_match(name) {
        return None;
    }
    let kind = AnomalyKind::for_identifier_len(name.chars().count())?;
    let sb = start_byte + name_start;
    let (s, e) = index.char_range(sb, sb + name.len());
    Some(AnomalySpan::new(s, e, kind))
}
