//! Reading and writing multichannel series as plain CSV.
//!
//! Layout: header row of channel ids, then one row per sample tick with
//! one decimal-float column per channel. Channels of unequal length are
//! written with empty trailing cells; on read, a column's nonempty cells
//! must form a contiguous prefix.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::embedding::TimeSeries;

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("empty input")]
    EmptyInput,
    #[error("header has an empty channel id in column {col}")]
    EmptyChannelId { col: usize },
    #[error("no data rows")]
    NoDataRows,
    #[error("row {row} has {got} columns, header has {want}")]
    ColumnCountMismatch { row: usize, got: usize, want: usize },
    #[error("row {row}, column {col}: cannot parse {text:?} as a float")]
    BadFloat { row: usize, col: usize, text: String },
    #[error("row {row}, column {col}: non-finite value")]
    NonFinite { row: usize, col: usize },
    #[error("row {row}, column {col}: value after an empty cell in the same column")]
    HoleInColumn { row: usize, col: usize },
    #[error("column {col} ({id:?}) has no samples")]
    EmptyChannel { col: usize, id: String },
}

/// Parses CSV text into one series per column.
///
/// Rows and columns in errors are 1-based; the header is row 1. Cell text
/// is trimmed of surrounding spaces; empty cells are only legal as a
/// contiguous column suffix (shorter channel).
pub fn parse_csv(text: &str) -> Result<Vec<TimeSeries>, CsvError> {
    let mut lines = text.lines();
    let header = loop {
        match lines.next() {
            None => return Err(CsvError::EmptyInput),
            Some(l) if l.trim().is_empty() => continue,
            Some(l) => break l,
        }
    };
    let ids: Vec<String> = header.split(',').map(|c| c.trim().to_string()).collect();
    for (i, id) in ids.iter().enumerate() {
        if id.is_empty() {
            return Err(CsvError::EmptyChannelId { col: i + 1 });
        }
    }
    let want = ids.len();
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); want];
    let mut closed = vec![false; want]; // column has seen an empty cell
    let mut row = 1usize;
    for line in lines {
        row += 1;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != want {
            return Err(CsvError::ColumnCountMismatch { row, got: cells.len(), want });
        }
        for (i, cell) in cells.iter().enumerate() {
            let col = i + 1;
            if cell.is_empty() {
                closed[i] = true;
                continue;
            }
            if closed[i] {
                return Err(CsvError::HoleInColumn { row, col });
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| CsvError::BadFloat { row, col, text: (*cell).to_string() })?;
            if !v.is_finite() {
                return Err(CsvError::NonFinite { row, col });
            }
            columns[i].push(v);
        }
    }
    if columns.iter().all(|c| c.is_empty()) {
        return Err(CsvError::NoDataRows);
    }
    ids.into_iter()
        .zip(columns)
        .enumerate()
        .map(|(i, (id, samples))| {
            if samples.is_empty() {
                return Err(CsvError::EmptyChannel { col: i + 1, id });
            }
            // finiteness and nonemptiness were checked cell by cell
            Ok(TimeSeries::new(id, samples).expect("validated during parse"))
        })
        .collect()
}

/// Renders channels as CSV text. Floats use the shortest representation
/// that round-trips, so write/parse is lossless.
///
/// Panics if `channels` is empty or an id contains a comma, CR, or LF
/// (the format has no quoting).
pub fn to_csv(channels: &[TimeSeries]) -> String {
    assert!(!channels.is_empty(), "need at least one channel");
    for ch in channels {
        assert!(
            !ch.id().contains([',', '\r', '\n']),
            "channel id {:?} cannot be written unquoted",
            ch.id()
        );
    }
    let rows = channels.iter().map(|c| c.len()).max().unwrap();
    let mut out = String::new();
    for (i, ch) in channels.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(ch.id());
    }
    out.push('\n');
    for r in 0..rows {
        for (i, ch) in channels.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            if let Some(v) = ch.samples().get(r) {
                write!(out, "{v}").unwrap();
            }
        }
        out.push('\n');
    }
    out
}

pub fn read_csv_file(path: &Path) -> Result<Vec<TimeSeries>, CsvError> {
    parse_csv(&fs::read_to_string(path)?)
}

pub fn write_csv_file(path: &Path, channels: &[TimeSeries]) -> Result<(), CsvError> {
    Ok(fs::write(path, to_csv(channels))?)
}
