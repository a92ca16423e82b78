use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::numcore::{ResponseVector, SpectraMatrix};

/// Raw cells of a comma-separated file, one `Vec` per record, with the
/// 1-based line number of each record.
fn read_records(path: &Path) -> Result<Vec<(usize, Vec<String>)>> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Error::Format {
            path: path.into(),
            message: e.to_string(),
        })?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let line = rec.position().map_or(out.len() + 1, |p| p.line() as usize);
        out.push((line, rec.iter().map(str::to_owned).collect()));
    }
    Ok(out)
}

fn parse_number(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// A numeric first row is read as a wavelength axis when it is strictly
/// increasing on a nanometre scale (all >= 100) and the row after it is
/// not shaped like an axis as well.
fn looks_like_wavelengths(first: &[f64], next: Option<&[f64]>) -> bool {
    let axis_like = |row: &[f64]| {
        row.windows(2).all(|p| p[1] > p[0]) && row.first().is_some_and(|&v| v >= 100.0)
    };
    axis_like(first) && next.is_some_and(|row| !axis_like(row))
}

/// Loads a samples-by-channels table. A first row whose first cell is not
/// numeric is a header; numeric header cells become wavelengths. A first
/// column of non-numeric data cells becomes sample ids.
pub fn load_spectra_csv(path: impl AsRef<Path>) -> Result<SpectraMatrix> {
    let path = path.as_ref();
    let records = read_records(path)?;
    let Some((_, first)) = records.first() else {
        return Err(Error::Format {
            path: path.into(),
            message: "file contains no rows".into(),
        });
    };

    let first_numeric: Option<Vec<f64>> = first.iter().map(|c| parse_number(c)).collect();
    let has_header = match &first_numeric {
        None => parse_number(&first[0]).is_none(),
        Some(vals) => {
            let next: Option<Vec<f64>> = records
                .get(1)
                .and_then(|(_, r)| r.iter().map(|c| parse_number(c)).collect());
            looks_like_wavelengths(vals, next.as_deref())
        }
    };
    let body = if has_header {
        &records[1..]
    } else {
        &records[..]
    };
    if body.is_empty() {
        return Err(Error::Format {
            path: path.into(),
            message: "file contains a header but no spectra".into(),
        });
    }
    let has_ids = body.iter().all(|(_, r)| parse_number(&r[0]).is_none());
    let skip = usize::from(has_ids);

    let width = body[0].1.len();
    let mut ids = Vec::new();
    let mut values = Vec::with_capacity(body.len() * width);
    for (line, row) in body {
        if row.len() != width {
            return Err(Error::Ragged {
                path: path.into(),
                row: *line,
                expected: width,
                found: row.len(),
            });
        }
        if has_ids {
            ids.push(row[0].clone());
        }
        for (j, cell) in row.iter().enumerate().skip(skip) {
            values.push(parse_number(cell).ok_or_else(|| Error::Parse {
                path: path.into(),
                row: *line,
                column: j + 1,
                value: cell.clone(),
            })?);
        }
    }
    let d = width - skip;
    if d == 0 {
        return Err(Error::Format {
            path: path.into(),
            message: "no spectral channels".into(),
        });
    }
    let mut spectra = SpectraMatrix::new(DMatrix::from_row_slice(body.len(), d, &values))?;

    if has_header {
        if first.len() != width {
            return Err(Error::Ragged {
                path: path.into(),
                row: records[0].0,
                expected: width,
                found: first.len(),
            });
        }
        let axis: Option<Vec<f64>> = first[skip..].iter().map(|c| parse_number(c)).collect();
        if let Some(axis) = axis {
            spectra = spectra.with_wavelengths(axis).map_err(|e| Error::Format {
                path: path.into(),
                message: format!("header: {e}"),
            })?;
        }
    }
    if has_ids {
        spectra = spectra.with_sample_ids(ids)?;
    }
    Ok(spectra)
}

/// Writes spectra with shortest round-trip decimal formatting.
pub fn save_spectra_csv(path: impl AsRef<Path>, spectra: &SpectraMatrix) -> Result<()> {
    let mut out = String::new();
    write_spectra(&mut out, spectra);
    super::write_atomic(path.as_ref(), out.as_bytes())
}

fn write_spectra(out: &mut String, spectra: &SpectraMatrix) {
    use std::fmt::Write as _;
    let ids = spectra.sample_ids();
    if let Some(axis) = spectra.wavelengths() {
        let mut cells: Vec<String> = Vec::with_capacity(axis.len() + 1);
        if ids.is_some() {
            cells.push("sample".into());
        }
        cells.extend(axis.iter().map(|w| w.to_string()));
        let _ = writeln!(out, "{}", cells.join(","));
    }
    for (i, row) in spectra.values().row_iter().enumerate() {
        let mut cells: Vec<String> = Vec::with_capacity(row.len() + 1);
        if let Some(ids) = ids {
            cells.push(ids[i].clone());
        }
        cells.extend(row.iter().map(|v| v.to_string()));
        let _ = writeln!(out, "{}", cells.join(","));
    }
}

/// Named reference values, one column per analyte.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseTable {
    pub names: Vec<String>,
    pub values: DMatrix<f64>,
}

impl ResponseTable {
    pub fn get(&self, name: &str) -> Result<ResponseVector> {
        let j = self
            .names
            .iter()
            .position(|n| n.eq_ignore_ascii_case(name))
            .ok_or_else(|| {
                Error::InvalidInput(format!(
                    "unknown response {name:?}; available: {}",
                    self.names.join(", ")
                ))
            })?;
        ResponseVector::new(self.values.column(j).into_owned())
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }
}

/// Loads a response table. The header row names the analytes.
pub fn load_responses_csv(path: impl AsRef<Path>) -> Result<ResponseTable> {
    let path = path.as_ref();
    let records = read_records(path)?;
    let Some((_, header)) = records.first() else {
        return Err(Error::Format {
            path: path.into(),
            message: "file contains no rows".into(),
        });
    };
    if header.iter().any(|c| parse_number(c).is_some()) {
        return Err(Error::Format {
            path: path.into(),
            message: "response files need a header row naming each analyte".into(),
        });
    }
    let width = header.len();
    let mut values = Vec::new();
    for (line, row) in &records[1..] {
        if row.len() != width {
            return Err(Error::Ragged {
                path: path.into(),
                row: *line,
                expected: width,
                found: row.len(),
            });
        }
        for (j, cell) in row.iter().enumerate() {
            values.push(parse_number(cell).ok_or_else(|| Error::Parse {
                path: path.into(),
                row: *line,
                column: j + 1,
                value: cell.clone(),
            })?);
        }
    }
    let n = records.len() - 1;
    if n == 0 {
        return Err(Error::Format {
            path: path.into(),
            message: "no response rows".into(),
        });
    }
    Ok(ResponseTable {
        names: header.clone(),
        values: DMatrix::from_row_slice(n, width, &values),
    })
}

pub fn save_responses_csv(path: impl AsRef<Path>, table: &ResponseTable) -> Result<()> {
    let mut out = Vec::new();
    writeln!(out, "{}", table.names.join(",")).expect("write to Vec");
    for row in table.values.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", cells.join(",")).expect("write to Vec");
    }
    super::write_atomic(path.as_ref(), &out)
}

impl ResponseTable {
    pub fn single(name: impl Into<String>, values: &DVector<f64>) -> Self {
        Self {
            names: vec![name.into()],
            values: DMatrix::from_column_slice(values.len(), 1, values.as_slice()),
        }
    }
}
