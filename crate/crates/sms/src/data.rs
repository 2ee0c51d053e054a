//! Dataset CSV ingestion and atomic file output.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use sms_core::Dataset;

use crate::error::{Error, Result};

/// Reads a dataset: first non-comment row holds the variable names, every
/// later row one sample. Lines starting with `#` are skipped.
pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(file, path)
}

/// As [`read_dataset`] from any reader; `path` only labels errors.
pub fn parse_dataset(reader: impl Read, path: &Path) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let csv_err = |row: u64, column: usize, message: String| Error::Csv {
        path: path.to_path_buf(),
        row,
        column,
        message,
    };
    let names: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_err(1, 0, e.to_string()))?
        .iter()
        .map(str::to_owned)
        .collect();
    if names.iter().all(String::is_empty) {
        return Err(csv_err(1, 0, "missing header row".into()));
    }
    if let Some(k) = names.iter().position(String::is_empty) {
        return Err(csv_err(1, k + 1, "empty variable name".into()));
    }
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            csv_err(line, 0, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != names.len() {
            let column = record.len().min(names.len()) + 1;
            return Err(csv_err(
                line,
                column,
                format!("expected {} cells, found {}", names.len(), record.len()),
            ));
        }
        for (k, cell) in record.iter().enumerate() {
            if cell.is_empty() {
                return Err(csv_err(line, k + 1, format!("missing value for `{}`", names[k])));
            }
            let x: f64 = cell
                .parse()
                .map_err(|_| csv_err(line, k + 1, format!("cannot parse `{cell}` as a number")))?;
            if !x.is_finite() {
                return Err(csv_err(line, k + 1, format!("non-finite value `{cell}`")));
            }
            columns[k].push(x);
        }
    }
    Ok(Dataset::from_columns(names, columns)?)
}

/// Writes `d` as CSV after `#`-prefixed header lines.
pub fn write_dataset(w: &mut impl Write, d: &Dataset, comments: &[String]) -> std::io::Result<()> {
    write_comments(w, comments)?;
    writeln!(w, "{}", d.names().join(","))?;
    for r in 0..d.n_samples() {
        let row: Vec<String> = d.row(r).iter().map(|x| format!("{x:.17e}")).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

pub fn write_comments(w: &mut impl Write, comments: &[String]) -> std::io::Result<()> {
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    Ok(())
}

/// Writes to a temporary file next to `path` and renames it into place, so
/// `path` is either complete or untouched.
pub fn write_atomic(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<&mut File>) -> std::io::Result<()>,
) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        body(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    tmp.as_file().sync_all().map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
