use std::collections::HashSet;
use std::sync::LazyLock;

const BUNDLED_WORDS: &str = include_str!("../../data/words.txt");

/// Parts of this many characters or fewer are ignored by the check.
const MAX_IGNORED_PART_CHARS: usize = 2;

/// A set of lowercase English words.
#[derive(Debug, Clone, Default)]
pub struct Wordlist {
    words: HashSet<String>,
}

static BUNDLED: LazyLock<Wordlist> = LazyLock::new(|| Wordlist::parse(BUNDLED_WORDS));

impl Wordlist {
    /// The English word list shipped with the crate.
    pub fn bundled() -> &'static Wordlist {
        &BUNDLED
    }

    /// Parses one word per line; entries are lowercased, blanks skipped.
    pub fn parse(text: &str) -> Self {
        text.lines()
            .map(str::trim)
            .filter(|w| !w.is_empty())
            .map(str::to_lowercase)
            .collect()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

impl FromIterator<String> for Wordlist {
    fn from_iter<I: IntoIterator<Item = String>>(iter: I) -> Self {
        Self {
            words: iter.into_iter().collect(),
        }
    }
}

/// Splits an identifier into lowercase sub-words.
///
/// Boundaries are underscores, digits (which are dropped), lower-to-upper
/// transitions (`totalRevenue`) and the end of an uppercase run followed by
/// a capitalised word (`HTTPServer` → `http`, `server`).
pub fn split_identifier(ident: &str) -> Vec<String> {
    let mut parts = Vec::new();
    for segment in ident.split(|c: char| c == '_' || c.is_ascii_digit()) {
        let chars: Vec<char> = segment.chars().collect();
        let mut start = 0;
        for i in 1..chars.len() {
            let (prev, cur) = (chars[i - 1], chars[i]);
            let next_lower = chars.get(i + 1).is_some_and(|c| c.is_lowercase());
            let boundary = (prev.is_lowercase() && cur.is_uppercase())
                || (prev.is_uppercase() && cur.is_uppercase() && next_lower);
            if boundary {
                parts.push(chars[start..i].iter().collect::<String>().to_lowercase());
                start = i;
            }
        }
        if start < chars.len() {
            parts.push(chars[start..].iter().collect::<String>().to_lowercase());
        }
    }
    parts
}

/// True when every sub-word longer than two characters is an English word.
pub fn dictionary_check(ident: &str, wordlist: &Wordlist) -> bool {
    split_identifier(ident)
        .iter()
        .filter(|p| p.chars().count() > MAX_IGNORED_PART_CHARS)
        .all(|p| wordlist.contains(p))
}
