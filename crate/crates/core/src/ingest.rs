//! Transaction ingestion: edge-list parsing and calendar-quarter slicing.
//!
//! The input is a line-oriented CSV or TSV edge list, one transfer per line:
//!
//! ```text
//! src,dst,amount,timestamp
//! ```
//!
//! where `amount` is a non-negative quantity and `timestamp` is seconds since
//! the Unix epoch. A header line is detected by a non-numeric amount field and
//! skipped; lines starting with `#` and blank lines are ignored. The delimiter
//! (comma or tab) is detected from the first data line.

use std::io::BufRead;

use chrono::{TimeZone, Utc};

use crate::error::{Error, Result};

/// One timestamped weighted edge of the transaction network.
#[derive(Debug, Clone, PartialEq)]
pub struct TransactionRecord {
    /// External identifier of the paying node.
    pub src: String,
    /// External identifier of the receiving node.
    pub dst: String,
    /// Transferred quantity, `>= 0`, arbitrary scale.
    pub amount: f64,
    /// Seconds since the Unix epoch, UTC.
    pub timestamp: i64,
}

/// Streaming parser over an edge-list reader.
///
/// Yields one `Result<TransactionRecord>` per well-formed data line, in input
/// order. Errors carry the 1-based line number of the offending line.
pub struct TransactionReader<R: BufRead> {
    lines: std::io::Lines<R>,
    line_no: usize,
    delimiter: Option<char>,
    header_checked: bool,
}

impl<R: BufRead> TransactionReader<R> {
    pub fn new(reader: R) -> Self {
        Self { lines: reader.lines(), line_no: 0, delimiter: None, header_checked: false }
    }

    fn parse_line(&mut self, line: &str) -> Result<Option<TransactionRecord>> {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            return Ok(None);
        }
        let delim = *self
            .delimiter
            .get_or_insert(if trimmed.contains('\t') { '\t' } else { ',' });
        let fields: Vec<&str> = trimmed.split(delim).map(str::trim).collect();

        // A first data line whose amount field is not numeric is a header.
        if !self.header_checked {
            self.header_checked = true;
            if fields.len() == 4 && fields[2].parse::<f64>().is_err() {
                return Ok(None);
            }
        }

        if fields.len() != 4 {
            return Err(Error::MalformedLine {
                line: self.line_no,
                reason: format!("expected 4 fields, got {}", fields.len()),
            });
        }
        if fields[0].is_empty() || fields[1].is_empty() {
            return Err(Error::MalformedLine {
                line: self.line_no,
                reason: "empty node identifier".into(),
            });
        }
        let amount: f64 = fields[2].parse().map_err(|_| Error::MalformedLine {
            line: self.line_no,
            reason: format!("bad amount {:?}", fields[2]),
        })?;
        if !amount.is_finite() {
            return Err(Error::MalformedLine {
                line: self.line_no,
                reason: format!("non-finite amount {:?}", fields[2]),
            });
        }
        if amount < 0.0 {
            return Err(Error::NegativeAmount { line: self.line_no });
        }
        let timestamp: i64 = fields[3].parse().map_err(|_| Error::MalformedLine {
            line: self.line_no,
            reason: format!("bad timestamp {:?}", fields[3]),
        })?;
        Ok(Some(TransactionRecord {
            src: fields[0].to_owned(),
            dst: fields[1].to_owned(),
            amount,
            timestamp,
        }))
    }
}

impl<R: BufRead> Iterator for TransactionReader<R> {
    type Item = Result<TransactionRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(e) => return Some(Err(e.into())),
            };
            self.line_no += 1;
            match self.parse_line(&line) {
                Ok(Some(record)) => return Some(Ok(record)),
                Ok(None) => continue,
                Err(e) => return Some(Err(e)),
            }
        }
    }
}

/// Parses an edge-list stream into transaction records.
pub fn parse_transactions<R: BufRead>(reader: R) -> TransactionReader<R> {
    TransactionReader::new(reader)
}

/// Collects every record of an edge-list stream, stopping at the first error.
pub fn read_transactions<R: BufRead>(reader: R) -> Result<Vec<TransactionRecord>> {
    parse_transactions(reader).collect()
}

/// UTC timestamp of the first instant of a calendar quarter.
pub fn quarter_start(year: i32, quarter: u8) -> Result<i64> {
    if !(1..=4).contains(&quarter) {
        return Err(Error::InvalidParameter(format!("quarter must be 1..=4, got {quarter}")));
    }
    let month = 3 * (quarter as u32 - 1) + 1;
    Utc.with_ymd_and_hms(year, month, 1, 0, 0, 0)
        .single()
        .map(|dt| dt.timestamp())
        .ok_or_else(|| Error::InvalidParameter(format!("invalid year {year}")))
}

/// Half-open UTC time window `[start, end)` of a calendar quarter.
pub fn quarter_bounds(year: i32, quarter: u8) -> Result<(i64, i64)> {
    let start = quarter_start(year, quarter)?;
    let end = if quarter == 4 { quarter_start(year + 1, 1)? } else { quarter_start(year, quarter + 1)? };
    Ok((start, end))
}

/// Keeps exactly the records whose timestamp falls inside the given calendar
/// quarter (UTC, half-open interval).
pub fn slice_by_quarter<I>(records: I, year: i32, quarter: u8) -> Result<Vec<TransactionRecord>>
where
    I: IntoIterator<Item = TransactionRecord>,
{
    let (start, end) = quarter_bounds(year, quarter)?;
    Ok(records
        .into_iter()
        .filter(|r| r.timestamp >= start && r.timestamp < end)
        .collect())
}
