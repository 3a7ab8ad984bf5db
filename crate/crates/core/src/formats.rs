//! Plain-text file formats.
//!
//! * 1D CSV: one integer per line.
//! * 2D CSV: one row per line, comma-separated integers, no header.
//! * PGM: plain `P2` grayscale with negatives clamped to zero.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::pipeline::Shape;

/// Parses either CSV layout. A file with a comma anywhere is a grid.
pub fn parse_csv(text: &str) -> Result<(Shape, Vec<i64>)> {
    let lines: Vec<&str> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect();
    if lines.is_empty() {
        return Err(Error::InvalidInput("empty CSV".into()));
    }
    let parse = |s: &str, line: usize| {
        s.trim()
            .parse::<i64>()
            .map_err(|_| Error::InvalidInput(format!("line {}: '{}' is not an integer", line + 1, s)))
    };
    if !lines.iter().any(|l| l.contains(',')) {
        let values = lines
            .iter()
            .enumerate()
            .map(|(i, l)| parse(l, i))
            .collect::<Result<Vec<_>>>()?;
        return Ok((Shape::Line { len: values.len() }, values));
    }
    let mut values = Vec::new();
    let mut cols = None;
    for (i, l) in lines.iter().enumerate() {
        let row = l
            .split(',')
            .map(|cell| parse(cell, i))
            .collect::<Result<Vec<_>>>()?;
        match cols {
            None => cols = Some(row.len()),
            Some(c) if c != row.len() => {
                return Err(Error::InvalidInput(format!(
                    "line {}: {} columns, expected {c}",
                    i + 1,
                    row.len()
                )))
            }
            _ => {}
        }
        values.extend(row);
    }
    let cols = cols.expect("non-empty");
    Ok((
        Shape::Grid {
            rows: lines.len(),
            cols,
        },
        values,
    ))
}

/// Parses a CSV whose entries must all be nonnegative.
pub fn parse_counts_csv(text: &str) -> Result<(Shape, Vec<u64>)> {
    let (shape, values) = parse_csv(text)?;
    let counts = values
        .into_iter()
        .enumerate()
        .map(|(i, v)| {
            u64::try_from(v)
                .map_err(|_| Error::InvalidInput(format!("entry {i} is negative ({v})")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((shape, counts))
}

pub fn to_csv<T: std::fmt::Display>(shape: Shape, values: &[T]) -> String {
    let mut out = String::new();
    match shape {
        Shape::Line { .. } => {
            for v in values {
                let _ = writeln!(out, "{v}");
            }
        }
        Shape::Grid { cols, .. } => {
            for row in values.chunks(cols.max(1)) {
                let cells: Vec<String> = row.iter().map(ToString::to_string).collect();
                let _ = writeln!(out, "{}", cells.join(","));
            }
        }
    }
    out
}

/// Plain PGM rendering; returns the text and how many pixels were clamped at 0.
pub fn to_pgm(rows: usize, cols: usize, values: &[i64]) -> (String, usize) {
    let clamped = values.iter().filter(|&&v| v < 0).count();
    let max = values.iter().copied().max().unwrap_or(0).max(1);
    let mut out = format!("P2\n{cols} {rows}\n{max}\n");
    for row in values.chunks(cols.max(1)) {
        let cells: Vec<String> = row.iter().map(|v| v.max(&0).to_string()).collect();
        let _ = writeln!(out, "{}", cells.join(" "));
    }
    (out, clamped)
}
