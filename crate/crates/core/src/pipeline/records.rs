//! Tab-separated co-occurrence record streams.
//!
//! A header line carries the settings the records were extracted under, then one
//! record per line: `object head pos dimension value_std source_value source_unit distance`.
//! An empty head column means no head.

use std::io::{self, BufRead, Write};

use thiserror::Error;

use super::{BuildSettings, CooccurrenceRecord, ObjectKey, Pos};
use crate::textfmt::{fmt_distance, fmt_real, header_fields, header_get, parse_distance};
use crate::units::{Dimension, Quantity};

const MAGIC: &str = "doq-records";
const VERSION: &str = "1";

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn format_error(line: usize, message: impl Into<String>) -> RecordError {
    RecordError::Format {
        line,
        message: message.into(),
    }
}

pub fn write_record_header<W: Write + ?Sized>(
    w: &mut W,
    settings: &BuildSettings,
) -> io::Result<()> {
    writeln!(
        w,
        "{MAGIC}\t{VERSION}\tregistry={}\tmax_distance={}\tmax_phrase_len={}\tmin_phrase_count={}",
        settings.registry_version,
        fmt_distance(settings.max_distance),
        settings.max_phrase_len,
        settings.min_phrase_count
    )
}

pub fn write_record<W: Write + ?Sized>(w: &mut W, r: &CooccurrenceRecord) -> io::Result<()> {
    writeln!(
        w,
        "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
        r.object.surface,
        r.object.head.as_deref().unwrap_or(""),
        r.object.pos,
        r.quantity.dimension,
        fmt_real(r.quantity.value_std),
        fmt_real(r.quantity.source_value),
        r.quantity.source_unit,
        r.token_distance
    )
}

pub(crate) fn parse_settings(
    fields: &[(&str, &str)],
    line: usize,
) -> Result<BuildSettings, RecordError> {
    let get = |key: &str| {
        header_get(fields, key).ok_or_else(|| format_error(line, format!("header lacks `{key}`")))
    };
    let bad = |key: &str| format_error(line, format!("bad header value for `{key}`"));
    Ok(BuildSettings {
        registry_version: get("registry")?.to_string(),
        max_distance: parse_distance(get("max_distance")?).ok_or_else(|| bad("max_distance"))?,
        max_phrase_len: get("max_phrase_len")?
            .parse()
            .map_err(|_| bad("max_phrase_len"))?,
        min_phrase_count: get("min_phrase_count")?
            .parse()
            .map_err(|_| bad("min_phrase_count"))?,
    })
}

fn parse_record(line: &str, line_no: usize) -> Result<CooccurrenceRecord, RecordError> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != 8 {
        return Err(format_error(
            line_no,
            format!("expected 8 columns, found {}", cols.len()),
        ));
    }
    let err = |what: &str, v: &str| format_error(line_no, format!("bad {what} `{v}`"));
    let real = |what: &str, v: &str| v.parse::<f64>().map_err(|_| err(what, v));
    if cols[0].is_empty() {
        return Err(format_error(line_no, "empty object"));
    }
    let pos: Pos = cols[2]
        .parse()
        .map_err(|_| err("part of speech", cols[2]))?;
    let dimension: Dimension = cols[3].parse().map_err(|_| err("dimension", cols[3]))?;
    let value_std = real("value", cols[4])?;
    if !value_std.is_finite() {
        return Err(err("value", cols[4]));
    }
    Ok(CooccurrenceRecord {
        object: ObjectKey {
            surface: cols[0].to_string(),
            pos,
            head: (!cols[1].is_empty()).then(|| cols[1].to_string()),
        },
        quantity: Quantity {
            dimension,
            value_std,
            source_value: real("source value", cols[5])?,
            source_unit: cols[6].to_string(),
        },
        token_distance: cols[7].parse().map_err(|_| err("distance", cols[7]))?,
    })
}

/// Streams records after validating the header.
pub struct RecordReader<R> {
    lines: io::Lines<R>,
    settings: BuildSettings,
    line_no: usize,
    failed: bool,
}

impl<R: BufRead> RecordReader<R> {
    pub fn new(reader: R) -> Result<Self, RecordError> {
        let mut lines = reader.lines();
        let header = lines
            .next()
            .transpose()?
            .ok_or_else(|| format_error(1, "empty record stream"))?;
        let mut parts = header.trim_end_matches('\r').split('\t');
        if parts.next() != Some(MAGIC) {
            return Err(format_error(1, "not a record stream"));
        }
        if parts.next() != Some(VERSION) {
            return Err(format_error(1, "unsupported record stream version"));
        }
        let settings = parse_settings(&header_fields(parts), 1)?;
        Ok(RecordReader {
            lines,
            settings,
            line_no: 1,
            failed: false,
        })
    }

    pub fn settings(&self) -> &BuildSettings {
        &self.settings
    }
}

impl<R: BufRead> Iterator for RecordReader<R> {
    type Item = Result<CooccurrenceRecord, RecordError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => {
                    self.failed = true;
                    return Some(Err(e.into()));
                }
            };
            self.line_no += 1;
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let r = parse_record(line, self.line_no);
            self.failed = r.is_err();
            return Some(r);
        }
    }
}
