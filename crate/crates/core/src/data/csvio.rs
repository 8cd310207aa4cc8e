use super::{Dataset, MIN_ROWS};
use crate::{DgpError, Result};
use std::io::{Read, Write};
use std::path::Path;

/// Reads a headed CSV file. The target is the named column, or the last
/// column when `target` is `None`; all other columns become features.
pub fn load_csv(path: impl AsRef<Path>, target: Option<&str>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| {
        DgpError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })?;
    read_csv(file, target)
}

pub fn read_csv<R: Read>(reader: R, target: Option<&str>) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header.len() < 2 {
        return Err(DgpError::Data(format!(
            "need at least one feature and one target column, header has {}",
            header.len()
        )));
    }
    let t = match target {
        Some(name) => header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DgpError::Data(format!("target column `{name}` not found in header {header:?}")))?,
        None => header.len() - 1,
    };

    let mut x = Vec::new();
    let mut y = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        // header is line 1
        let line = r + 2;
        let record = record?;
        if record.len() != header.len() {
            return Err(DgpError::Data(format!(
                "row {line}: {} cells, header has {}",
                record.len(),
                header.len()
            )));
        }
        let mut row = Vec::with_capacity(header.len() - 1);
        for (c, cell) in record.iter().enumerate() {
            let v: f64 = cell
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| DgpError::Data(format!("row {line}, column `{}`: `{cell}` is not a finite number", header[c])))?;
            if c == t {
                y.push(v);
            } else {
                row.push(v);
            }
        }
        x.push(row);
    }
    if y.len() < MIN_ROWS {
        return Err(DgpError::Data(format!("need at least {MIN_ROWS} data rows, got {}", y.len())));
    }
    let names = header
        .iter()
        .enumerate()
        .filter(|&(c, _)| c != t)
        .map(|(_, h)| h.clone())
        .collect();
    Dataset::new(x, y, names, header[t].clone())
}

/// Writes features then target, one row per sample, in row order.
pub fn write_csv<W: Write>(ds: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = ds.variable_names().iter().map(String::as_str).collect();
    header.push(ds.target_name());
    w.write_record(&header)?;
    for (row, y) in ds.x().iter().zip(ds.y()) {
        let cells: Vec<String> = row.iter().chain(std::iter::once(y)).map(|v| format!("{v:?}")).collect();
        w.write_record(&cells)?;
    }
    w.flush()?;
    Ok(())
}
