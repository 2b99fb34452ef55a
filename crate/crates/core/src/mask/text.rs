/// Byte-offset to character-offset translation for one text.
///
/// Parsers and regexes report UTF-8 byte offsets; masks, lints and token
/// spans are all indexed by Unicode scalar value.
#[derive(Debug, Clone)]
pub struct TextIndex {
    /// `char_of[b]` is the index of the character containing byte `b`;
    /// the final entry maps the end of the text to the character count.
    char_of: Vec<u32>,
    starts_char: Vec<bool>,
}

impl TextIndex {
    pub fn new(text: &str) -> Self {
        let mut char_of = Vec::with_capacity(text.len() + 1);
        let mut starts_char = Vec::with_capacity(text.len() + 1);
        let mut count = 0u32;
        for (ci, ch) in text.chars().enumerate() {
            for k in 0..ch.len_utf8() {
                char_of.push(ci as u32);
                starts_char.push(k == 0);
            }
            count = ci as u32 + 1;
        }
        char_of.push(count);
        starts_char.push(true);
        Self {
            char_of,
            starts_char,
        }
    }

    pub fn char_len(&self) -> usize {
        *self.char_of.last().unwrap_or(&0) as usize
    }

    /// Character containing `byte` (clamped to the text end).
    pub fn char_floor(&self, byte: usize) -> usize {
        let b = byte.min(self.char_of.len() - 1);
        self.char_of[b] as usize
    }

    /// First character boundary at or after `byte`, as a character index.
    pub fn char_ceil(&self, byte: usize) -> usize {
        let b = byte.min(self.char_of.len() - 1);
        if self.starts_char[b] {
            self.char_of[b] as usize
        } else {
            self.char_of[b] as usize + 1
        }
    }

    /// Converts a byte range to the smallest character range covering it.
    pub fn char_range(&self, start: usize, end: usize) -> (usize, usize) {
        (self.char_floor(start), self.char_ceil(end))
    }
}
