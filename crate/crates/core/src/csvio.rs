//! Numeric CSV tables with a required header row.
//!
//! Values are written in shortest round-trip exponent form, so a table read
//! back and written again is byte-identical.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// A parsed table: one row of values per data line, plus each row's 1-based line number.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub lines: Vec<usize>,
}

pub fn read_table(path: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_table(&text, path)
}

pub fn parse_table(text: &str, path: &Path) -> Result<Table> {
    let parse_err = |line: Option<usize>, message: String| Error::Parse { path: path.to_path_buf(), line, message };
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let header: Vec<String> =
        reader.headers().map_err(|e| parse_err(Some(1), e.to_string()))?.iter().map(str::to_owned).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(parse_err(Some(1), "missing header row".into()));
    }
    if header.iter().any(|h| h.parse::<f64>().is_ok()) {
        return Err(parse_err(Some(1), "header row required, found numeric data".into()));
    }

    let mut rows = Vec::new();
    let mut lines = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize);
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let row = record
            .iter()
            .map(|field| {
                field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(Some(line), format!("not a finite number: {field:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
        lines.push(line);
    }
    Ok(Table { header, rows, lines })
}

impl Table {
    /// Fails unless the header is exactly `expected`.
    pub fn expect_header(&self, expected: &[&str], path: &Path) -> Result<()> {
        if self.header.iter().map(String::as_str).eq(expected.iter().copied()) {
            Ok(())
        } else {
            Err(Error::Parse {
                path: path.to_path_buf(),
                line: Some(1),
                message: format!("expected header `{}`, found `{}`", expected.join(","), self.header.join(",")),
            })
        }
    }

    pub fn column(&self, i: usize) -> impl Iterator<Item = f64> + '_ {
        self.rows.iter().map(move |r| r[i])
    }
}

pub fn format_table<'a, I>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            write!(out, "{v:e}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn write_table<'a, I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    std::fs::write(path, format_table(header, rows)).map_err(|e| Error::io(path, e))
}
