//! Line-delimited JSON record IO with positioned errors.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::marker::PhantomData;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum JsonlError {
    #[error("cannot open {path}: {source}")]
    Open {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("io error at {path}:{line}: {source}")]
    Io {
        path: PathBuf,
        line: usize,
        #[source]
        source: io::Error,
    },
    #[error("malformed record at {path}:{line}: {message}")]
    Malformed {
        path: PathBuf,
        /// 1-based line number.
        line: usize,
        message: String,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl JsonlError {
    pub fn malformed(path: &Path, line: usize, message: impl Into<String>) -> Self {
        JsonlError::Malformed {
            path: path.to_path_buf(),
            line,
            message: message.into(),
        }
    }
}

/// Iterator over `(line_number, record)` pairs of a JSONL file. Blank lines
/// are skipped; malformed lines are yielded as positioned errors rather than
/// terminating the stream.
pub struct JsonlReader<T> {
    path: PathBuf,
    lines: io::Lines<BufReader<File>>,
    line_no: usize,
    _marker: PhantomData<T>,
}

impl<T: DeserializeOwned> JsonlReader<T> {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, JsonlError> {
        let path = path.as_ref().to_path_buf();
        let file = File::open(&path).map_err(|source| JsonlError::Open {
            path: path.clone(),
            source,
        })?;
        Ok(JsonlReader {
            path,
            lines: BufReader::new(file).lines(),
            line_no: 0,
            _marker: PhantomData,
        })
    }
}

impl<T: DeserializeOwned> Iterator for JsonlReader<T> {
    type Item = Result<(usize, T), JsonlError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = self.lines.next()?;
            self.line_no += 1;
            match line {
                Err(source) => {
                    return Some(Err(JsonlError::Io {
                        path: self.path.clone(),
                        line: self.line_no,
                        source,
                    }))
                }
                Ok(text) => {
                    if text.trim().is_empty() {
                        continue;
                    }
                    return Some(match serde_json::from_str::<T>(&text) {
                        Ok(record) => Ok((self.line_no, record)),
                        Err(e) => Err(JsonlError::malformed(&self.path, self.line_no, e.to_string())),
                    });
                }
            }
        }
    }
}

/// Read a whole JSONL file, failing on the first malformed line.
pub fn read_all<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>, JsonlError> {
    JsonlReader::open(path)?
        .map(|item| item.map(|(_, record)| record))
        .collect()
}

/// Write records as one JSON object per line.
pub fn write_all<T: Serialize>(
    path: impl AsRef<Path>,
    records: impl IntoIterator<Item = T>,
) -> Result<usize, JsonlError> {
    let path = path.as_ref();
    let wrap = |source| JsonlError::Write {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(wrap)?;
    let mut out = BufWriter::new(file);
    let mut count = 0;
    for record in records {
        let line = serde_json::to_string(&record)
            .map_err(|e| wrap(io::Error::new(io::ErrorKind::InvalidData, e)))?;
        out.write_all(line.as_bytes()).map_err(wrap)?;
        out.write_all(b"\n").map_err(wrap)?;
        count += 1;
    }
    out.flush().map_err(wrap)?;
    Ok(count)
}
