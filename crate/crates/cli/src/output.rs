//! Artifact writing: CSV formatting and write-then-rename.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use lowner::Complex64 as C64;
use lowner::Series;
use serde::Serialize;

/// 17 significant digits, `.` decimal, `-0` printed as `0`.
pub fn num(v: f64) -> String {
    format!("{:.16e}", v + 0.0)
}

/// Rows `label,k,re,im` for each series.
pub fn series_csv(rows: &[(String, &Series)]) -> String {
    let mut s = String::from("series,k,re,im\n");
    for (label, series) in rows {
        for k in series.lo()..=series.hi() {
            let c = series.coeff(k);
            let _ = writeln!(s, "{label},{k},{},{}", num(c.re), num(c.im));
        }
    }
    s
}

pub fn complex_pair(c: C64) -> [f64; 2] {
    [c.re, c.im]
}

pub struct Outputs {
    pub dir: PathBuf,
    pub written: Vec<String>,
}

impl Outputs {
    pub fn new(dir: PathBuf) -> Self {
        Self {
            dir,
            written: Vec::new(),
        }
    }

    /// Writes `name` in the output directory through a temporary file and a rename.
    pub fn write(&mut self, name: &str, contents: &[u8]) -> std::io::Result<()> {
        std::fs::create_dir_all(&self.dir)?;
        write_atomic(&self.dir.join(name), contents)?;
        if !self.written.iter().any(|w| w == name) {
            self.written.push(name.to_string());
        }
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> std::io::Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(std::io::Error::other)?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }
}

pub fn write_atomic(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
