//! Shared helpers for the tab-separated formats.
//!
//! Every format is UTF-8 with LF line endings and a fixed header line. Reals
//! are written with the shortest decimal that round-trips to the same `f64`.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// Shortest round-trip decimal for a finite double.
pub fn fmt_f64(value: f64) -> String {
    let mut buf = ryu::Buffer::new();
    buf.format_finite(value).to_owned()
}

pub fn parse_f64(cell: &str, line: usize) -> Result<f64> {
    let value: f64 = cell
        .parse()
        .map_err(|_| Error::parse(line, format!("not a number: `{cell}`")))?;
    if !value.is_finite() {
        return Err(Error::parse(line, format!("non-finite value: `{cell}`")));
    }
    Ok(value)
}

/// Numbered, newline-stripped lines of a reader (1-based line numbers).
pub(crate) struct Lines<R> {
    inner: R,
    line: usize,
    buf: String,
}

impl<R: BufRead> Lines<R> {
    pub fn new(inner: R) -> Self {
        Self {
            inner,
            line: 0,
            buf: String::new(),
        }
    }

    pub fn next_line(&mut self) -> Result<Option<(usize, &str)>> {
        self.buf.clear();
        let n = self.inner.read_line(&mut self.buf).map_err(|e| {
            if e.kind() == std::io::ErrorKind::InvalidData {
                Error::parse(self.line + 1, "invalid UTF-8")
            } else {
                Error::Io(e)
            }
        })?;
        if n == 0 {
            return Ok(None);
        }
        self.line += 1;
        let text = self.buf.strip_suffix('\n').unwrap_or(&self.buf);
        if text.ends_with('\r') {
            return Err(Error::parse(self.line, "CR line endings are not accepted"));
        }
        Ok(Some((self.line, text)))
    }

    /// Reads the first line and checks it against `expected`.
    pub fn expect_header(&mut self, expected: &str) -> Result<()> {
        match self.next_line()? {
            Some((_, h)) if h == expected => Ok(()),
            Some((n, h)) => Err(Error::parse(
                n,
                format!(
                    "bad header `{h}`, expected `{}`",
                    expected.replace('\t', "\\t")
                ),
            )),
            None => Err(Error::parse(1, "missing header")),
        }
    }
}

/// Splits a line into exactly `n` tab-separated cells.
pub(crate) fn split_exact(text: &str, n: usize, line: usize) -> Result<Vec<&str>> {
    let cells: Vec<&str> = text.split('\t').collect();
    if cells.len() != n {
        return Err(Error::parse(
            line,
            format!("expected {n} fields, found {}", cells.len()),
        ));
    }
    Ok(cells)
}

pub(crate) fn check_id(id: &str, line: usize) -> Result<()> {
    if id.is_empty() {
        return Err(Error::parse(line, "empty identifier"));
    }
    Ok(())
}

/// One-ID-per-line gene universe file with header `gene_id`.
pub fn read_gene_list<R: BufRead>(reader: R) -> Result<Vec<String>> {
    let mut lines = Lines::new(reader);
    lines.expect_header("gene_id")?;
    let mut seen = std::collections::HashSet::new();
    let mut ids = Vec::new();
    while let Some((n, text)) = lines.next_line()? {
        let cells = split_exact(text, 1, n)?;
        check_id(cells[0], n)?;
        if !seen.insert(cells[0].to_owned()) {
            return Err(Error::parse(n, format!("duplicate gene id `{}`", cells[0])));
        }
        ids.push(cells[0].to_owned());
    }
    Ok(ids)
}

pub fn write_gene_list<W: Write>(ids: &[String], mut out: W) -> Result<()> {
    writeln!(out, "gene_id")?;
    for id in ids {
        writeln!(out, "{id}")?;
    }
    Ok(())
}
