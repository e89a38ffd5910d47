use std::path::Path;

use super::{normalize_to_sqrt_d, Dataset, NormalizeMode};
use crate::error::{Error, Result};
use crate::network::Label;
use crate::numerics::Matrix;

/// How the label column is decoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelCoding {
    /// `1`/`+1` map to `+1`; `-1` and `0` map to `-1`.
    Binary,
    /// Integer class index in `0..classes`.
    Classes(usize),
}

/// Layout of a dataset CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvSchema {
    pub label_column: String,
    pub coding: LabelCoding,
    pub normalize: NormalizeMode,
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            label_column: "label".into(),
            coding: LabelCoding::Binary,
            normalize: NormalizeMode::Cap,
        }
    }
}

/// Reads a headed CSV in which every column except the label is a feature.
pub fn load_csv(path: &Path, schema: &CsvSchema) -> Result<Dataset> {
    let err = |message: String| Error::Csv {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| err(e.to_string()))?;
    let headers = reader.headers().map_err(|e| err(e.to_string()))?.clone();
    let label_idx = headers
        .iter()
        .position(|h| h == schema.label_column)
        .ok_or_else(|| err(format!("no column named '{}'", schema.label_column)))?;
    let d = headers.len() - 1;
    if d == 0 {
        return Err(err("no feature columns".into()));
    }
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| err(format!("line {line}: {e}")))?;
        if record.len() != headers.len() {
            return Err(err(format!(
                "line {line}: expected {} fields, found {}",
                headers.len(),
                record.len()
            )));
        }
        for (j, cell) in record.iter().enumerate() {
            if j == label_idx {
                labels.push(parse_label(cell, schema.coding).map_err(|m| err(format!("line {line}: {m}")))?);
            } else {
                let v: f64 = cell
                    .parse()
                    .map_err(|_| err(format!("line {line}: non-numeric cell '{cell}'")))?;
                if !v.is_finite() {
                    return Err(err(format!("line {line}: non-finite cell '{cell}'")));
                }
                features.push(v);
            }
        }
    }
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let x = Matrix::from_vec(labels.len(), d, features)?;
    Dataset::new(normalize_to_sqrt_d(&x, schema.normalize)?, labels)
}

fn parse_label(cell: &str, coding: LabelCoding) -> std::result::Result<Label, String> {
    let v: f64 = cell.parse().map_err(|_| format!("unknown label '{cell}'"))?;
    match coding {
        LabelCoding::Binary if v == 1.0 => Ok(Label::Sign(1.0)),
        LabelCoding::Binary if v == -1.0 || v == 0.0 => Ok(Label::Sign(-1.0)),
        LabelCoding::Classes(k) if v >= 0.0 && v.fract() == 0.0 && (v as usize) < k => Ok(Label::Class(v as usize)),
        _ => Err(format!("unknown label '{cell}'")),
    }
}

/// Writes features as `x0..x{d-1}` followed by the label column.
pub fn write_csv(path: &Path, data: &Dataset, label_column: &str) -> Result<()> {
    let err = |e: csv::Error| Error::Csv {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    let mut header: Vec<String> = (0..data.dim()).map(|j| format!("x{j}")).collect();
    header.push(label_column.to_string());
    w.write_record(&header).map_err(err)?;
    for (x, y) in data.iter() {
        let mut row: Vec<String> = x.iter().map(|v| format!("{v:?}")).collect();
        row.push(y.to_string());
        w.write_record(&row).map_err(err)?;
    }
    w.flush()?;
    Ok(())
}
