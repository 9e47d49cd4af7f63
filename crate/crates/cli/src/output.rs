//! JSON records and CSV series, to stdout or as files in `--out`.

use std::io::Write;
use std::path::PathBuf;

use serde::Serialize;

use crate::CliError;

pub struct Output {
    dir: Option<PathBuf>,
    written: usize,
}

/// Shortest round-trip decimal, switching to exponent form for very small or large magnitudes.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

impl Output {
    pub fn new(dir: Option<PathBuf>) -> Result<Self, CliError> {
        if let Some(d) = &dir {
            std::fs::create_dir_all(d)
                .map_err(|e| CliError::Config(format!("cannot create output directory {}: {e}", d.display())))?;
        }
        Ok(Self { dir, written: 0 })
    }

    fn emit(&mut self, file: &str, bytes: &[u8]) -> Result<(), CliError> {
        match &self.dir {
            Some(d) => std::fs::write(d.join(file), bytes)?,
            None => {
                let mut so = std::io::stdout().lock();
                if self.written > 0 {
                    so.write_all(b"\n")?;
                }
                so.write_all(bytes)?;
                so.flush()?;
            }
        }
        self.written += 1;
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Failure(e.to_string()))?;
        s.push('\n');
        self.emit(&format!("{name}.json"), s.as_bytes())
    }

    pub fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let fail = |e: csv::Error| CliError::Failure(e.to_string());
        w.write_record(header).map_err(fail)?;
        for r in rows {
            w.write_record(r).map_err(fail)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Failure(e.to_string()))?;
        self.emit(&format!("{name}.csv"), &bytes)
    }
}
