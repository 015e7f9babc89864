//! Plain-text set files and JSON report files.
//!
//! A set file holds one decimal integer per line. Blank lines and anything
//! after `#` are ignored. [`write_set`] emits the elements in increasing
//! order, one per line, so reading and rewriting a file it produced gives
//! back the same bytes.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use num_bigint::BigInt;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::intsets::IntSet;
use crate::json;

/// Parses set-file text. Repeated values are an error unless `dedupe`.
pub fn parse_set(text: &str, dedupe: bool) -> Result<IntSet> {
    let mut seen = BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let value: BigInt = line.parse().map_err(|_| Error::Parse {
            line: i + 1,
            message: format!("not an integer: {line:?}"),
        })?;
        if !seen.insert(value.clone()) && !dedupe {
            return Err(Error::Parse { line: i + 1, message: format!("duplicate element {value}") });
        }
    }
    Ok(seen.into_iter().collect())
}

pub fn read_set(path: &Path, dedupe: bool) -> Result<IntSet> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_set(&text, dedupe)
}

pub fn format_set(a: &IntSet) -> String {
    let mut out = String::new();
    for x in a {
        out.push_str(&x.to_string());
        out.push('\n');
    }
    out
}

pub fn write_set(path: &Path, a: &IntSet) -> Result<()> {
    write_text(path, &format_set(a))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Writes `report` as canonical JSON.
pub fn write_report<T: Serialize>(path: &Path, report: &T) -> Result<()> {
    write_text(path, &json::to_canonical_string(report)?)
}
