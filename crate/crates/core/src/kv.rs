//! Flat `key=value` text used for certificates and plans.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::linalg::io::parse_real;
use crate::scalar::{fmt_real, Scalar};

#[derive(Clone, Debug, Default)]
pub struct KvMap {
    entries: Vec<(String, String, usize)>,
}

impl KvMap {
    /// Blank lines and lines starting with `#` are ignored.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<(String, String, usize)> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let ln = i + 1;
            let t = line.trim();
            if t.is_empty() || t.starts_with('#') {
                continue;
            }
            let (k, v) = t
                .split_once('=')
                .ok_or_else(|| Error::parse(ln, "expected key=value"))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::parse(ln, "empty key"));
            }
            if entries.iter().any(|e| e.0 == k) {
                return Err(Error::parse(ln, format!("duplicate key {k:?}")));
            }
            entries.push((k.to_string(), v.trim().to_string(), ln));
        }
        Ok(KvMap { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|e| e.0 == key).map(|e| e.1.as_str())
    }

    fn line_of(&self, key: &str) -> usize {
        self.entries.iter().find(|e| e.0 == key).map_or(0, |e| e.2)
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key)
            .ok_or_else(|| Error::parse(0, format!("missing key {key:?}")))
    }

    pub fn real<T: Scalar>(&self, key: &str) -> Result<T> {
        parse_real(self.require(key)?, self.line_of(key))
    }

    pub fn opt_real<T: Scalar>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => parse_real(v, self.line_of(key)).map(Some),
        }
    }

    pub fn count(&self, key: &str) -> Result<usize> {
        let v = self.require(key)?;
        v.parse()
            .map_err(|_| Error::parse(self.line_of(key), format!("bad count {v:?} for {key}")))
    }

    pub fn flag(&self, key: &str) -> Result<bool> {
        match self.require(key)? {
            "1" => Ok(true),
            "0" => Ok(false),
            v => Err(Error::parse(self.line_of(key), format!("expected 0 or 1 for {key}, got {v:?}"))),
        }
    }

    /// Comma-separated reals.
    pub fn reals<T: Scalar>(&self, key: &str) -> Result<Vec<T>> {
        let v = self.require(key)?;
        let ln = self.line_of(key);
        if v.is_empty() {
            return Ok(Vec::new());
        }
        v.split(',').map(|t| parse_real(t.trim(), ln)).collect()
    }

    /// Wraps errors from a value parser with the key's line number.
    pub fn with_line<V>(&self, key: &str, f: impl FnOnce(&str) -> Result<V>) -> Result<V> {
        let v = self.require(key)?;
        f(v).map_err(|e| match e {
            Error::Parse { .. } => e,
            other => Error::parse(self.line_of(key), other.to_string()),
        })
    }
}

#[derive(Default)]
pub struct KvWriter {
    buf: String,
}

impl KvWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn str(&mut self, key: &str, v: impl std::fmt::Display) -> &mut Self {
        let _ = writeln!(self.buf, "{key}={v}");
        self
    }

    pub fn real<T: Scalar>(&mut self, key: &str, v: T) -> &mut Self {
        self.str(key, fmt_real(v))
    }

    pub fn flag(&mut self, key: &str, v: bool) -> &mut Self {
        self.str(key, u8::from(v))
    }

    pub fn reals<T: Scalar>(&mut self, key: &str, v: &[T]) -> &mut Self {
        let s: Vec<String> = v.iter().map(|&x| fmt_real(x)).collect();
        self.str(key, s.join(","))
    }

    pub fn finish(&self) -> String {
        self.buf.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_lookup() {
        let m = KvMap::parse("# comment\na=1.5\n\nb = 0\nlist=1,2.5\n").unwrap();
        assert_eq!(m.real::<f64>("a").unwrap(), 1.5);
        assert!(!m.flag("b").unwrap());
        assert_eq!(m.reals::<f64>("list").unwrap(), vec![1.0, 2.5]);
        assert!(m.real::<f64>("zzz").is_err());
    }

    #[test]
    fn errors_have_lines() {
        match KvMap::parse("a=1\nbroken\n") {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(KvMap::parse("a=1\na=2\n").is_err());
        let m = KvMap::parse("x=1\ny=nan\n").unwrap();
        match m.real::<f64>("y") {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn writer_round_trip() {
        let text = KvWriter::new().real("x", 0.1f64).flag("p", true).finish();
        let m = KvMap::parse(&text).unwrap();
        assert_eq!(m.real::<f64>("x").unwrap(), 0.1);
        assert!(m.flag("p").unwrap());
    }
}
