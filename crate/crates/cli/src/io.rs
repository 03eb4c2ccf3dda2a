//! CSV input and atomic output.

use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use wpca::format::parse_f64;

use crate::error::CliError;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "WPCA_OUTPUT_DIR";

/// A numeric matrix read from CSV, with its header when one was present.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvMatrix {
    pub header: Option<Vec<String>>,
    pub values: DMatrix<f64>,
}

/// Reads a numeric CSV. Lines starting with `#` are skipped; the first row
/// is taken as a header when any of its fields is not a number.
pub fn read_matrix(path: &Path) -> Result<CsvMatrix, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    parse_matrix(&text).map_err(|e| match e {
        CliError::Usage(msg) => CliError::Usage(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse_matrix(text: &str) -> Result<CsvMatrix, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut header = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Usage(format!("malformed CSV: {e}")))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(i as u64 + 1);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let parsed: Option<Vec<f64>> = rec.iter().map(parse_f64).collect();
        match parsed {
            Some(row) => {
                if let Some(bad) = row.iter().find(|v| !v.is_finite()) {
                    return Err(CliError::Usage(format!("line {line}: non-finite value {bad}")));
                }
                if let Some(first) = rows.first().map(Vec::len).or(header.as_ref().map(Vec::len)) {
                    if row.len() != first {
                        return Err(CliError::Usage(format!(
                            "ragged CSV: line {line} has {} fields, expected {first}",
                            row.len()
                        )));
                    }
                }
                rows.push(row);
            }
            None if rows.is_empty() && header.is_none() => {
                header = Some(rec.iter().map(str::to_string).collect());
            }
            None => {
                let field = rec.iter().find(|f| parse_f64(f).is_none()).unwrap_or_default();
                return Err(CliError::Usage(format!("line {line}: non-numeric field {field:?}")));
            }
        }
    }
    if rows.is_empty() {
        return Err(CliError::Usage("no data rows".into()));
    }
    let (n, p) = (rows.len(), rows[0].len());
    let values = DMatrix::from_row_iterator(n, p, rows.into_iter().flatten());
    Ok(CsvMatrix { header, values })
}

/// Where a command's output goes.
#[derive(Debug, Clone, PartialEq)]
pub enum Sink {
    Stdout,
    File(PathBuf),
}

impl Sink {
    /// `--out` if given, else `default_name` inside the output directory
    /// from the environment, else stdout.
    pub fn resolve(out: Option<PathBuf>, default_name: &str) -> Self {
        match out {
            Some(p) if p.as_os_str() == "-" => Sink::Stdout,
            Some(p) => Sink::File(p),
            None => match std::env::var_os(OUTPUT_DIR_ENV) {
                Some(dir) if !dir.is_empty() => Sink::File(PathBuf::from(dir).join(default_name)),
                _ => Sink::Stdout,
            },
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Sink::Stdout => "-".into(),
            Sink::File(p) => p.display().to_string(),
        }
    }

    /// Writes `bytes` in one go; files are replaced atomically.
    pub fn write(&self, bytes: &[u8]) -> Result<(), CliError> {
        match self {
            Sink::Stdout => {
                let mut out = std::io::stdout().lock();
                out.write_all(bytes)
                    .and_then(|_| out.flush())
                    .map_err(|e| CliError::Internal(format!("cannot write to stdout: {e}")))
            }
            Sink::File(path) => write_atomic(path, bytes),
        }
    }
}

/// Writes to a temporary file beside `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let fail = |e: std::io::Error| CliError::Usage(format!("cannot write {}: {e}", path.display()));
    std::fs::create_dir_all(&dir).map_err(fail)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(fail)?;
    tmp.write_all(bytes).and_then(|_| tmp.flush()).map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}
