//! Line-delimited JSON helpers shared by every on-disk record type.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

/// Streaming reader yielding `(line_number, record)` pairs. Blank lines are
/// skipped; any other line that fails to decode is a schema error carrying
/// its 1-based line number.
pub struct NdjsonReader<R, T> {
    path: PathBuf,
    inner: R,
    line: usize,
    buf: String,
    _marker: std::marker::PhantomData<T>,
}

impl<T: DeserializeOwned> NdjsonReader<BufReader<File>, T> {
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path)?;
        Ok(Self::new(path, BufReader::new(file)))
    }
}

impl<R: BufRead, T: DeserializeOwned> NdjsonReader<R, T> {
    pub fn new(path: impl Into<PathBuf>, inner: R) -> Self {
        Self {
            path: path.into(),
            inner,
            line: 0,
            buf: String::new(),
            _marker: std::marker::PhantomData,
        }
    }

    fn schema_error(&self, message: impl Into<String>) -> Error {
        Error::Schema {
            path: self.path.clone(),
            line: self.line,
            message: message.into(),
        }
    }
}

impl<R: BufRead, T: DeserializeOwned> Iterator for NdjsonReader<R, T> {
    type Item = Result<(usize, T)>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            self.line += 1;
            match self.inner.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) if e.kind() == std::io::ErrorKind::InvalidData => {
                    return Some(Err(self.schema_error("line is not valid UTF-8")));
                }
                Err(e) => return Some(Err(e.into())),
            }
            let text = self.buf.trim_end_matches(['\n', '\r']);
            if text.trim().is_empty() {
                continue;
            }
            return Some(
                serde_json::from_str(text)
                    .map(|record| (self.line, record))
                    .map_err(|e| self.schema_error(e.to_string())),
            );
        }
    }
}

/// Reads every record of a file, failing on the first malformed line.
pub fn read_all<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    NdjsonReader::open(path)?
        .map(|r| r.map(|(_, record)| record))
        .collect()
}

pub struct NdjsonWriter<W: Write> {
    inner: W,
}

impl NdjsonWriter<BufWriter<File>> {
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        Ok(Self::new(BufWriter::new(File::create(path)?)))
    }
}

impl<W: Write> NdjsonWriter<W> {
    pub fn new(inner: W) -> Self {
        Self { inner }
    }

    pub fn write<T: Serialize>(&mut self, record: &T) -> Result<()> {
        serde_json::to_writer(&mut self.inner, record).map_err(std::io::Error::from)?;
        self.inner.write_all(b"\n")?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner.flush()?;
        Ok(self.inner)
    }
}
