//! Grammar-free classification used when a parse is unusable.
//!
//! A single alternation regex per language acts as a tiny lexer: at each
//! position the first matching alternative wins, so string and comment
//! bodies are consumed before the identifier pattern can see them.

use std::sync::LazyLock;

use regex::Regex;

use super::text::TextIndex;
use super::{AnomalyKind, AnomalySpan};
use crate::sample::Language;

const IDENT: &str = r"(?P<ident>[A-Za-z_][A-Za-z0-9_]*)";

static PYTHON: LazyLock<Regex> = LazyLock::new(|| {
    lexer(&[
        r#"(?P<string>(?s:""".*?"""|'''.*?''')|"(?:[^"\\\n]|\\.)*"|'(?:[^'\\\n]|\\.)*')"#,
        r"(?P<comment>#[^\n]*)",
    ])
});

static RUBY: LazyLock<Regex> = LazyLock::new(|| {
    lexer(&[
        r"(?P<comment>(?m:^=begin\b(?s:.*?)^=end\b[^\n]*)|#[^\n]*)",
        r#"(?P<string>"(?s:(?:[^"\\]|\\.)*)"|'(?s:(?:[^'\\]|\\.)*)')"#,
    ])
});

static JAVA: LazyLock<Regex> = LazyLock::new(|| {
    lexer(&[
        r"(?P<comment>//[^\n]*|(?s:/\*.*?\*/))",
        r#"(?P<string>(?s:""".*?""")|"(?:[^"\\\n]|\\.)*")"#,
        r"(?P<skip>'(?:[^'\\\n]|\\.)*')",
    ])
});

static GO: LazyLock<Regex> = LazyLock::new(|| {
    lexer(&[
        r"(?P<comment>//[^\n]*|(?s:/\*.*?\*/))",
        r#"(?P<string>`[^`]*`|"(?:[^"\\\n]|\\.)*")"#,
        r"(?P<skip>'(?:[^'\\\n]|\\.)*')",
    ])
});

static RUST: LazyLock<Regex> = LazyLock::new(|| {
    lexer(&[
        r"(?P<comment>//[^\n]*|(?s:/\*.*?\*/))",
        r##"(?P<string>b?r#+"(?s:.*?)"#+|b?r"[^"]*"|b?"(?s:(?:[^"\\]|\\.)*)")"##,
        r"(?P<skip>b?'(?:[^'\\\n]|\\.)')",
    ])
});

fn lexer(parts: &[&str]) -> Regex {
    let mut pattern = parts.join("|");
    pattern.push('|');
    pattern.push_str(IDENT);
    Regex::new(&pattern).expect("fallback lexer pattern")
}

fn lexer_for(lang: Language) -> &'static Regex {
    match lang {
        Language::Python => &PYTHON,
        Language::Ruby => &RUBY,
        Language::Java => &JAVA,
        Language::Go => &GO,
        Language::Rust => &RUST,
    }
}

fn keywords(lang: Language) -> &'static [&'static str] {
    match lang {
        Language::Python => &[
            "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class",
            "continue", "def", "del", "elif", "else", "except", "finally", "for", "from", "global",
            "if", "import", "in", "is", "lambda", "nonlocal", "not", "or", "pass", "raise",
            "return", "try", "while", "with", "yield",
        ],
        Language::Java => &[
            "abstract",
            "assert",
            "boolean",
            "break",
            "byte",
            "case",
            "catch",
            "char",
            "class",
            "const",
            "continue",
            "default",
            "do",
            "double",
            "else",
            "enum",
            "extends",
            "false",
            "final",
            "finally",
            "float",
            "for",
            "goto",
            "if",
            "implements",
            "import",
            "instanceof",
            "int",
            "interface",
            "long",
            "native",
            "new",
            "null",
            "package",
            "private",
            "protected",
            "public",
            "return",
            "short",
            "static",
            "strictfp",
            "super",
            "switch",
            "synchronized",
            "this",
            "throw",
            "throws",
            "transient",
            "true",
            "try",
            "var",
            "void",
            "volatile",
            "while",
        ],
        Language::Go => &[
            "break",
            "case",
            "chan",
            "const",
            "continue",
            "default",
            "defer",
            "else",
            "fallthrough",
            "for",
            "func",
            "go",
            "goto",
            "if",
            "import",
            "interface",
            "map",
            "package",
            "range",
            "return",
            "select",
            "struct",
            "switch",
            "type",
            "var",
            "nil",
            "true",
            "false",
        ],
        Language::Ruby => &[
            "BEGIN", "END", "alias", "and", "begin", "break", "case", "class", "def", "defined",
            "do", "else", "elsif", "end", "ensure", "false", "for", "if", "in", "module", "next",
            "nil", "not", "or", "redo", "rescue", "retry", "return", "self", "super", "then",
            "true", "undef", "unless", "until", "when", "while", "yield",
        ],
        Language::Rust => &[
            "as", "async", "await", "break", "const", "continue", "crate", "dyn", "else", "enum",
            "extern", "false", "fn", "for", "if", "impl", "in", "let", "loop", "match", "mod",
            "move", "mut", "pub", "ref", "return", "self", "Self", "static", "struct", "super",
            "trait", "true", "type", "unsafe", "use", "where", "while", "bool", "char", "str",
            "u8", "u16", "u32", "u64", "u128", "usize", "i8", "i16", "i32", "i64", "i128", "isize",
            "f32", "f64",
        ],
    }
}

pub(super) fn classify(lang: Language, text: &str, index: &TextIndex) -> Vec<AnomalySpan> {
    let kw = keywords(lang);
    let mut spans = Vec::new();
    for caps in lexer_for(lang).captures_iter(text) {
        let (m, kind) = if let Some(m) = caps.name("comment") {
            (m, AnomalyKind::Comment)
        } else if let Some(m) = caps.name("string") {
            (m, AnomalyKind::StringLiteral)
        } else if let Some(m) = caps.name("ident") {
            if kw.contains(&m.as_str()) {
                continue;
            }
            match AnomalyKind::for_identifier_len(m.as_str().chars().count()) {
                Some(kind) => (m, kind),
                None => continue,
            }
        } else {
            continue;
        };
        let (s, e) = index.char_range(m.start(), m.end());
        if s < e {
            spans.push(AnomalySpan::new(s, e, kind));
        }
    }
    spans
}
