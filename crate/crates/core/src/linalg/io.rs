//! Plain-text matrix format: a header line `N M`, then `N` lines of `M`
//! whitespace-separated reals.

use std::io::{BufRead, Write};

use super::matrix::Matrix;
use crate::error::{Error, Result};
use crate::scalar::{fmt_real, Scalar};

pub(crate) fn parse_real<T: Scalar>(tok: &str, line: usize) -> Result<T> {
    let v: T = tok
        .parse()
        .map_err(|e| Error::parse(line, format!("bad number {tok:?}: {e}")))?;
    if !v.is_finite() {
        return Err(Error::parse(line, format!("non-finite value {tok:?}")));
    }
    Ok(v)
}

pub(crate) fn parse_count(tok: &str, line: usize, what: &str) -> Result<usize> {
    tok.parse()
        .map_err(|_| Error::parse(line, format!("bad {what} {tok:?}")))
}

/// Line-numbered iterator over the text, 1-based.
pub(crate) struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    pub last: usize,
}

impl<'a> Lines<'a> {
    pub fn new(text: &'a str) -> Self {
        Lines {
            inner: text.lines().enumerate(),
            last: 0,
        }
    }

    /// Next line that is not blank.
    pub fn next_nonblank(&mut self) -> Option<(usize, &'a str)> {
        for (i, l) in self.inner.by_ref() {
            self.last = i + 1;
            if !l.trim().is_empty() {
                return Some((i + 1, l));
            }
        }
        None
    }
}

/// Reads `rows` lines of `cols` reals into a matrix.
pub(crate) fn parse_block<T: Scalar>(lines: &mut Lines<'_>, rows: usize, cols: usize) -> Result<Matrix<T>> {
    let mut m = Matrix::zeros(rows, cols);
    for i in 0..rows {
        let (ln, l) = lines
            .next_nonblank()
            .ok_or_else(|| Error::parse(lines.last + 1, format!("expected {rows} rows, found {i}")))?;
        let mut count = 0;
        for (j, tok) in l.split_whitespace().enumerate() {
            if j >= cols {
                return Err(Error::parse(ln, format!("more than {cols} entries")));
            }
            m[(i, j)] = parse_real(tok, ln)?;
            count += 1;
        }
        if count != cols {
            return Err(Error::parse(ln, format!("expected {cols} entries, found {count}")));
        }
    }
    Ok(m)
}

pub fn parse_matrix<T: Scalar>(text: &str) -> Result<Matrix<T>> {
    let mut lines = Lines::new(text);
    let (ln, header) = lines.next_nonblank().ok_or_else(|| Error::parse(1, "empty input"))?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 2 {
        return Err(Error::parse(ln, "header must be `N M`"));
    }
    let rows = parse_count(toks[0], ln, "row count")?;
    let cols = parse_count(toks[1], ln, "column count")?;
    if rows == 0 || cols == 0 {
        return Err(Error::parse(ln, "dimensions must be positive"));
    }
    let m = parse_block(&mut lines, rows, cols)?;
    if let Some((ln, _)) = lines.next_nonblank() {
        return Err(Error::parse(ln, "trailing content after matrix"));
    }
    Ok(m)
}

pub fn read_matrix<T: Scalar>(mut r: impl BufRead) -> Result<Matrix<T>> {
    let mut s = String::new();
    r.read_to_string(&mut s)?;
    parse_matrix(&s)
}

pub(crate) fn write_block<T: Scalar>(w: &mut impl Write, m: &Matrix<T>) -> std::io::Result<()> {
    let mut line = String::new();
    for i in 0..m.nrows() {
        line.clear();
        for j in 0..m.ncols() {
            if j > 0 {
                line.push(' ');
            }
            line.push_str(&fmt_real(m[(i, j)]));
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
    }
    Ok(())
}

pub fn write_matrix<T: Scalar>(mut w: impl Write, m: &Matrix<T>) -> Result<()> {
    writeln!(w, "{} {}", m.nrows(), m.ncols())?;
    write_block(&mut w, m)?;
    Ok(())
}

pub fn matrix_to_string<T: Scalar>(m: &Matrix<T>) -> String {
    let mut buf = Vec::new();
    write_matrix(&mut buf, m).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}
