//! Deterministic serialization: compact JSON with every float written with
//! 17 significant digits, NaN written as `null`, and CSV tables.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use clap::ValueEnum;
use serde::Serialize;
use serde_json::ser::Formatter;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

struct FixedDigits;

impl Formatter for FixedDigits {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{}", float(value))
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }
}

/// `value` with 17 significant digits; exact on round trip.
pub fn float(value: f64) -> String {
    format!("{value:.16e}")
}

/// Like [`float`], with NaN as an empty CSV field.
pub fn csv_float(value: f64) -> String {
    if value.is_nan() {
        String::new()
    } else {
        float(value)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedDigits);
    value
        .serialize(&mut ser)
        .map_err(|e| CliError::Io(format!("serializing output: {e}")))?;
    let mut s = String::from_utf8(buf).map_err(|e| CliError::Io(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn to_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io_err = |e: csv::Error| CliError::Io(format!("writing csv: {e}"));
    w.write_record(header).map_err(io_err)?;
    for row in rows {
        w.write_record(&row).map_err(io_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Io(format!("writing csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| CliError::Io(e.to_string()))
}

/// Rendered results, written only once every stage has succeeded.
#[derive(Default)]
pub struct Pending {
    files: Vec<(std::path::PathBuf, String)>,
    stdout: String,
}

impl Pending {
    pub fn to(&mut self, path: Option<&Path>, content: String) {
        match path {
            Some(p) => self.files.push((p.to_path_buf(), content)),
            None => self.stdout.push_str(&content),
        }
    }

    /// Writes every file to a sibling temporary first and renames them only
    /// once all writes succeeded, so a failure leaves no truncated result.
    pub fn flush(self) -> CliResult<()> {
        let mut staged = Vec::with_capacity(self.files.len());
        for (path, content) in &self.files {
            let mut tmp = path.as_os_str().to_owned();
            tmp.push(".partial");
            let tmp = std::path::PathBuf::from(tmp);
            if let Err(e) = fs::write(&tmp, content) {
                let _ = fs::remove_file(&tmp);
                for (t, _) in &staged {
                    let _ = fs::remove_file(t);
                }
                return Err(CliError::Io(format!("writing {}: {e}", path.display())));
            }
            staged.push((tmp, path));
        }
        for (tmp, path) in staged {
            fs::rename(&tmp, path)
                .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))?;
        }
        io::stdout()
            .write_all(self.stdout.as_bytes())
            .map_err(|e| CliError::Io(format!("writing stdout: {e}")))
    }
}
