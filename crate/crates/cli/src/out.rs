use std::ffi::OsString;
use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use idfactor::Error;

/// One `key=value` line on stdout; `message`, when present, is last and runs to the end of the line.
pub struct Summary {
    fields: Vec<(String, String)>,
    message: Option<String>,
    code: u8,
}

impl Summary {
    pub fn new(command: &str) -> Self {
        Summary {
            fields: vec![("command".into(), command.into())],
            message: None,
            code: 0,
        }
    }

    pub fn set(&mut self, key: &str, v: impl Display) {
        let v = v.to_string().split_whitespace().collect::<Vec<_>>().join("_");
        match self.fields.iter_mut().find(|(k, _)| k == key) {
            Some(f) => f.1 = v,
            None => self.fields.push((key.into(), v)),
        }
    }

    pub fn status(&mut self, status: &str, code: u8) {
        self.fields.insert(1, ("status".into(), status.into()));
        self.code = code;
    }

    pub fn error(&mut self, code: u8, msg: &str) {
        self.status("error", code);
        self.message = Some(msg.replace('\n', " "));
    }

    pub fn finish(self) -> ExitCode {
        let mut line: Vec<String> = self.fields.iter().map(|(k, v)| format!("{k}={v}")).collect();
        line.push(format!("exit={}", self.code));
        if let Some(m) = &self.message {
            line.push(format!("message={m}"));
        }
        println!("{}", line.join(" "));
        ExitCode::from(self.code)
    }
}

/// An error with its exit code: 2 for violated hypotheses, 1 otherwise.
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        let error = e.into();
        let hypothesis = error
            .chain()
            .any(|c| matches!(c.downcast_ref::<Error>(), Some(Error::Hypothesis(_))) || c.is::<idfactor::Hypothesis>());
        Failure {
            code: if hypothesis { 2 } else { 1 },
            error,
        }
    }
}

pub fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = OsString::from(prefix.as_os_str());
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Writes through a temporary file in the target directory and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).with_context(|| format!("creating a file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .map_err(|e| e.error)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
