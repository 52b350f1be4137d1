//! Canonical text format for coefficient tables.
//!
//! ```text
//! k=12 N=1
//! 1 1
//! 2 -24
//! ```
//!
//! `#` starts a comment; blank lines are ignored. Indices run 1, 2, 3, ...
//! without gaps.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use num_bigint::BigInt;

use super::{EigenForm, FormSource};
use crate::error::{Error, Result};

pub fn write_coefficients<W: Write>(form: &EigenForm, mut out: W) -> Result<()> {
    writeln!(out, "k={} N={}", form.weight(), form.level())?;
    for (i, a) in form.coefficients().iter().enumerate() {
        writeln!(out, "{} {}", i + 1, a)?;
    }
    out.flush()?;
    Ok(())
}

pub(super) fn read_file(path: &Path) -> Result<EigenForm> {
    let file = std::fs::File::open(path)?;
    read_from(BufReader::new(file), path)
}

fn parse_header(line: &str) -> Option<(u32, u64)> {
    let mut k = None;
    let mut n = None;
    for field in line.split_whitespace() {
        let (key, value) = field.split_once('=')?;
        match key {
            "k" => k = Some(value.parse().ok()?),
            "N" => n = Some(value.parse().ok()?),
            _ => return None,
        }
    }
    Some((k?, n?))
}

pub(super) fn read_from<R: BufRead>(reader: R, path: &Path) -> Result<EigenForm> {
    let load_err = |line: usize, reason: String| Error::Load {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let mut header = None;
    let mut table = Vec::new();
    // line number of each a(n), for error reporting
    let mut lines_of = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if header.is_none() {
            header = Some(
                parse_header(content)
                    .ok_or_else(|| load_err(lineno, format!("expected `k=<int> N=<int>`, got `{content}`")))?,
            );
            continue;
        }
        let mut fields = content.split_whitespace();
        let (Some(n), Some(a), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(load_err(lineno, format!("expected `<n> <a(n)>`, got `{content}`")));
        };
        let n: u64 = n
            .parse()
            .map_err(|_| load_err(lineno, format!("bad index `{n}`")))?;
        let expected = table.len() as u64 + 1;
        if n != expected {
            return Err(load_err(lineno, format!("expected n = {expected}, found n = {n}")));
        }
        let a: BigInt = a
            .parse()
            .map_err(|_| load_err(lineno, format!("bad coefficient `{a}` for n = {n}")))?;
        table.push(a);
        lines_of.push(lineno);
    }
    let (k, level) = header.ok_or_else(|| load_err(0, "missing header".into()))?;
    if table.is_empty() {
        return Err(load_err(0, "no coefficients".into()));
    }
    EigenForm::from_table(k, level, table, FormSource::File).map_err(|e| match e {
        Error::Invariant { n, reason } => load_err(lines_of[n as usize - 1], format!("n = {n}: {reason}")),
        other => load_err(1, other.to_string()),
    })
}
