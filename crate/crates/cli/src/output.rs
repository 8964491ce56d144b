//! Deterministic artifacts: compact JSON and CSV, every float written with 17
//! significant digits.

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::ser::Formatter;

use crate::CliError;

struct Fixed17;

impl Formatter for Fixed17 {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{}", fmt_f64(value))
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
}

/// `{:.16e}`; non-finite values never reach here through serde_json.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Fixed17);
    value.serialize(&mut ser).expect("in-memory JSON serialization");
    buf.push(b'\n');
    buf
}

pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self { text: header.join(",") + "\n" }
    }

    pub fn row(&mut self, ints: &[i64], floats: &[f64]) {
        let cells: Vec<String> = ints.iter().map(|n| n.to_string()).chain(floats.iter().map(|x| fmt_f64(*x))).collect();
        self.text += &cells.join(",");
        self.text.push('\n');
    }
}

/// Where a command's artifacts go: the JSON at `out` (stdout when unset) and
/// an optional CSV next to it with the extension swapped.
pub struct Sink {
    out: Option<PathBuf>,
}

impl Sink {
    pub fn new(out: Option<PathBuf>) -> Self {
        Self { out }
    }

    pub fn json<T: Serialize>(&self, value: &T) -> Result<(), CliError> {
        let bytes = to_json(value);
        match &self.out {
            Some(p) => write_file(p, &bytes),
            None => io::stdout().write_all(&bytes).map_err(|e| CliError::Io { path: "<stdout>".into(), source: e }),
        }
    }

    pub fn csv(&self, table: &Csv) -> Result<(), CliError> {
        match &self.out {
            Some(p) => write_file(&p.with_extension("csv"), table.text.as_bytes()),
            None => Ok(()),
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })
}
