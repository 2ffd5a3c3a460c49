//! Data import and report writers: CSV, JSON mirrors, and text tables.

use std::fs;
use std::path::Path;

use misreport::Sample;
use serde::Serialize;

use crate::config::DataConfig;
use crate::Failure;

/// Serializes a float with 17 significant digits, enough to round-trip any
/// double through decimal text bit-exactly.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Compact rendering for human-readable tables.
pub fn fmt_short(v: f64) -> String {
    format!("{v:.4}")
}

fn find_column(headers: &csv::StringRecord, name: &str) -> Result<usize, Failure> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Failure::data(format!("column {name:?} not found in data header")))
}

fn parse_cell(record: &csv::StringRecord, idx: usize, row: usize) -> Result<f64, Failure> {
    let raw = record.get(idx).ok_or_else(|| {
        Failure::data(format!("row {row} has no column {idx}"))
    })?;
    raw.trim()
        .parse::<f64>()
        .map_err(|_| Failure::data(format!("row {row}, column {idx}: not a number: {raw:?}")))
}

/// Reads a headered CSV and assembles a sample from the configured column
/// roles.
pub fn load_sample(data: &DataConfig, path: &Path) -> Result<Sample, Failure> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Failure::data(format!("cannot read {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| Failure::data(format!("cannot read header of {}: {e}", path.display())))?
        .clone();

    let y_idx = find_column(&headers, &data.y)?;
    let x_idx: Vec<usize> = data
        .x
        .iter()
        .map(|name| find_column(&headers, name))
        .collect::<Result<_, _>>()?;
    let z_idx = data.z.as_deref().map(|name| find_column(&headers, name)).transpose()?;
    let w_idx = data.w.as_deref().map(|name| find_column(&headers, name)).transpose()?;

    let mut y = Vec::new();
    let mut x = Vec::new();
    let mut z = z_idx.map(|_| Vec::new());
    let mut w = w_idx.map(|_| Vec::new());
    for (row, record) in reader.records().enumerate() {
        let record =
            record.map_err(|e| Failure::data(format!("row {row}: {e}")))?;
        let y_val = parse_cell(&record, y_idx, row)?;
        if y_val != 0.0 && y_val != 1.0 {
            return Err(Failure::data(format!(
                "row {row}: response must be 0 or 1, got {y_val}"
            )));
        }
        y.push(y_val as u8);
        for idx in &x_idx {
            x.push(parse_cell(&record, *idx, row)?);
        }
        if let (Some(col), Some(idx)) = (z.as_mut(), z_idx) {
            col.push(parse_cell(&record, idx, row)?);
        }
        if let (Some(col), Some(idx)) = (w.as_mut(), w_idx) {
            col.push(parse_cell(&record, idx, row)?);
        }
    }
    Ok(Sample::new(y, x, x_idx.len(), z, w, data.w_levels.clone())?)
}

/// Writes one CSV file, creating the output directory if needed.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), Failure> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| {
            Failure::config(format!("cannot create output directory {}: {e}", dir.display()))
        })?;
    }
    let mut writer = csv::Writer::from_path(path)
        .map_err(|e| Failure::config(format!("cannot write {}: {e}", path.display())))?;
    writer
        .write_record(header)
        .and_then(|()| rows.iter().try_for_each(|r| writer.write_record(r)))
        .and_then(|()| writer.flush().map_err(Into::into))
        .map_err(|e| Failure::config(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Writes the JSON mirror of a report.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| {
            Failure::config(format!("cannot create output directory {}: {e}", dir.display()))
        })?;
    }
    let body = serde_json::to_string_pretty(value)
        .map_err(|e| Failure::config(format!("cannot serialize report: {e}")))?;
    fs::write(path, body)
        .map_err(|e| Failure::config(format!("cannot write {}: {e}", path.display())))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn render_row(out: &mut String, widths: &[usize], cells: &[String]) {
    for (i, cell) in cells.iter().enumerate() {
        if i > 0 {
            out.push_str("  ");
        }
        let width = widths.get(i).copied().unwrap_or(0);
        out.push_str(&format!("{cell:<width$}"));
    }
    while out.ends_with(' ') {
        out.pop();
    }
    out.push('\n');
}

/// Renders a fixed-width text table.
pub fn text_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            if i < widths.len() {
                widths[i] = widths[i].max(cell.len());
            }
        }
    }
    let mut out = String::new();
    let header_cells: Vec<String> = header.iter().map(|h| h.to_string()).collect();
    render_row(&mut out, &widths, &header_cells);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    render_row(&mut out, &widths, &rule);
    for row in rows {
        render_row(&mut out, &widths, row);
    }
    out
}
