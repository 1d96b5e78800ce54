//! Reader for pre-annotated corpora.
//!
//! One token per line, tab-separated `index surface coarse_pos head_index`, with a
//! blank line between sentences. Indexes are 1-based; a head of `0` or `_` marks the
//! root. Lines starting with `#` are comments.

use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::Path;

use thiserror::Error;

use super::{AnnotatedSentence, AnnotatedToken, Pos};

#[derive(Debug, Error)]
pub enum AnnotatedError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn parse_error(line: usize, message: impl Into<String>) -> AnnotatedError {
    AnnotatedError::Parse {
        line,
        message: message.into(),
    }
}

/// Streaming sentence reader over any buffered source.
pub struct AnnotatedReader<R> {
    lines: io::Lines<R>,
    line_no: usize,
    failed: bool,
}

impl<R: BufRead> AnnotatedReader<R> {
    pub fn new(reader: R) -> Self {
        AnnotatedReader {
            lines: reader.lines(),
            line_no: 0,
            failed: false,
        }
    }

    fn next_sentence(&mut self) -> Result<Option<AnnotatedSentence>, AnnotatedError> {
        // (line number, raw head field) kept until the sentence length is known
        let mut rows: Vec<(usize, String)> = Vec::new();
        let mut tokens = Vec::new();
        while let Some(line) = self.lines.next() {
            let line = line?;
            self.line_no += 1;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                if tokens.is_empty() {
                    continue;
                }
                break;
            }
            if line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 4 {
                return Err(parse_error(
                    self.line_no,
                    format!("expected 4 tab-separated columns, found {}", cols.len()),
                ));
            }
            let index: usize = cols[0]
                .trim()
                .parse()
                .map_err(|_| parse_error(self.line_no, format!("bad token index `{}`", cols[0])))?;
            if index != tokens.len() + 1 {
                return Err(parse_error(
                    self.line_no,
                    format!(
                        "token index {index} out of sequence, expected {}",
                        tokens.len() + 1
                    ),
                ));
            }
            let surface = cols[1].trim();
            if surface.is_empty() {
                return Err(parse_error(self.line_no, "empty token"));
            }
            let pos = cols[2].trim();
            if pos.is_empty() {
                return Err(parse_error(self.line_no, "empty part-of-speech tag"));
            }
            tokens.push(AnnotatedToken {
                surface: surface.to_string(),
                pos: Pos::from_coarse_tag(pos),
                head: None,
            });
            rows.push((self.line_no, cols[3].trim().to_string()));
        }
        if tokens.is_empty() {
            return Ok(None);
        }
        let n = tokens.len();
        for (i, (line, head)) in rows.iter().enumerate() {
            if head == "_" || head == "0" {
                continue;
            }
            let h: usize = head
                .parse()
                .map_err(|_| parse_error(*line, format!("bad head index `{head}`")))?;
            if h > n {
                return Err(parse_error(
                    *line,
                    format!("head index {h} out of range 1..={n}"),
                ));
            }
            if h == i + 1 {
                return Err(parse_error(*line, "token is its own head"));
            }
            tokens[i].head = Some(h - 1);
        }
        Ok(Some(AnnotatedSentence { tokens }))
    }
}

impl<R: BufRead> Iterator for AnnotatedReader<R> {
    type Item = Result<AnnotatedSentence, AnnotatedError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        match self.next_sentence() {
            Ok(s) => s.map(Ok),
            Err(e) => {
                self.failed = true;
                Some(Err(e))
            }
        }
    }
}

/// Opens an annotated corpus file.
pub fn read_annotated(
    path: impl AsRef<Path>,
) -> Result<AnnotatedReader<BufReader<File>>, AnnotatedError> {
    Ok(AnnotatedReader::new(BufReader::new(File::open(path)?)))
}
