//! Comma-separated text with a header row. Floats are written with 17 significant digits,
//! which round-trips every `f64` exactly.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{CliError, CliResult};

pub fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt).unwrap_or_else(|| "NA".into())
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::Data(format!("{}: {other:?}", path.display())),
    }
}

pub fn write_csv<S: AsRef<str>>(path: &Path, header: &[S], rows: impl IntoIterator<Item = Vec<String>>) -> CliResult<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(header.iter().map(|h| h.as_ref())).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    let mut f = BufWriter::new(File::create(path).map_err(|e| CliError::io(path, e))?);
    f.write_all(text.as_bytes()).and_then(|_| f.flush()).map_err(|e| CliError::io(path, e))
}

pub fn create_dir(path: &Path) -> CliResult<()> {
    std::fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

/// Header and numeric rows of a table. Cells that are not numbers are data errors naming
/// the one-based data row.
pub fn read_table(path: &Path) -> CliResult<(Vec<String>, Vec<Vec<f64>>)> {
    let file = File::open(path).map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))?;
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header: Vec<String> = r.headers().map_err(|e| csv_err(path, e))?.iter().map(str::to_owned).collect();
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let row = rec
            .iter()
            .map(|cell| parse_cell(cell).ok_or_else(|| CliError::Data(format!("{} row {}: '{cell}' is not a number", path.display(), i + 1))))
            .collect::<CliResult<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

fn parse_cell(cell: &str) -> Option<f64> {
    match cell {
        "NA" | "" => Some(f64::NAN),
        c => c.parse().ok(),
    }
}

pub fn column(header: &[String], rows: &[Vec<f64>], name: &str, path: &Path) -> CliResult<Vec<f64>> {
    let k = header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| CliError::Data(format!("{} has no column '{name}'", path.display())))?;
    Ok(rows.iter().map(|r| r[k]).collect())
}

/// The return series: the named column, else the only column, else a column called `y`.
/// A file whose first line is numeric is read as a headerless single column.
pub fn read_series(path: &Path, name: Option<&str>) -> CliResult<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    let first = text.lines().next().unwrap_or("").trim();
    let headerless = name.is_none() && !first.contains(',') && first.parse::<f64>().is_ok();
    let (header, rows) = if headerless {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let v = parse_cell(line.trim())
                .ok_or_else(|| CliError::Data(format!("{} row {}: '{}' is not a number", path.display(), i + 1, line.trim())))?;
            rows.push(vec![v]);
        }
        (vec!["y".to_owned()], rows)
    } else {
        read_table(path)?
    };
    let y = match name {
        Some(n) => column(&header, &rows, n, path)?,
        None if header.len() == 1 => rows.iter().map(|r| r[0]).collect(),
        None => column(&header, &rows, "y", path).map_err(|_| {
            CliError::Config(format!("{} has several columns; choose one with --column", path.display()))
        })?,
    };
    if y.is_empty() {
        return Err(CliError::Data(format!("{} contains no observations", path.display())));
    }
    if let Some(i) = y.iter().position(|v| !v.is_finite()) {
        return Err(CliError::Data(format!("{} row {}: observation is not finite", path.display(), i + 1)));
    }
    Ok(y)
}
