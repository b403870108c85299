use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::{Matrix, Rng};

/// Numeric feature table with integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularDataset {
    pub x: Matrix,
    /// Dense labels in `0..class_names.len()`.
    pub y: Vec<usize>,
    pub feature_names: Vec<String>,
    /// Label index → original label text, in order of first appearance.
    pub class_names: Vec<String>,
    pub label_name: String,
    /// Column position the label had in the source file.
    pub label_position: usize,
}

impl TabularDataset {
    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Same labels and metadata, different feature matrix and names.
    pub fn with_features(&self, x: Matrix, feature_names: Vec<String>) -> Result<Self> {
        if x.rows() != self.y.len() || feature_names.len() != x.cols() {
            return Err(Error::invalid("feature matrix does not fit the dataset"));
        }
        Ok(TabularDataset {
            x,
            feature_names,
            ..self.clone()
        })
    }

    /// Rows `idx` in the given order.
    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        Ok(TabularDataset {
            x: self.x.select_rows(idx)?,
            y: idx.iter().map(|&i| self.y[i]).collect(),
            ..self.clone()
        })
    }

    /// Writes the table back as CSV with the label column at its original
    /// position (or last, if fewer feature columns remain).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let pos = self.label_position.min(self.feature_names.len());
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.insert(pos, &self.label_name);
        w.write_record(&header).map_err(csv_err)?;
        for (row, &label) in self.x.row_iter().zip(&self.y) {
            let mut fields: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            fields.insert(pos, self.class_names[label].clone());
            w.write_record(&fields).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Format(format!("csv: {e}")))?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(f)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(format!("csv: {e}"))
}

pub fn load_csv(path: &Path, label_column: &str) -> Result<TabularDataset> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(f, label_column).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Parses comma-separated text with a mandatory header row. Every column
/// except `label_column` must hold numbers; labels become dense integers by
/// order of first appearance.
pub fn read_csv<R: Read>(input: R, label_column: &str) -> Result<TabularDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(input);
    let headers: Vec<String> = reader
        .headers()
        .map_err(csv_err)?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let label_position = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::invalid(format!("label column '{label_column}' not found")))?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != label_position)
        .map(|(_, h)| h.clone())
        .collect();
    if feature_names.is_empty() {
        return Err(Error::invalid("CSV has no feature columns"));
    }

    let mut data = Vec::new();
    let mut y = Vec::new();
    let mut class_names: Vec<String> = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let line = row_idx + 2;
        for (col, field) in record.iter().enumerate() {
            if col == label_position {
                let label = field.trim();
                let id = match class_names.iter().position(|c| c == label) {
                    Some(id) => id,
                    None => {
                        class_names.push(label.to_string());
                        class_names.len() - 1
                    }
                };
                y.push(id);
                continue;
            }
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::Format(format!(
                    "non-numeric value '{field}' at row {line}, column '{}'",
                    headers[col]
                ))
            })?;
            if !v.is_finite() {
                return Err(Error::Format(format!(
                    "non-finite value '{field}' at row {line}, column '{}'",
                    headers[col]
                )));
            }
            data.push(v);
        }
    }
    if y.is_empty() {
        return Err(Error::Format("no data rows".into()));
    }
    let x = Matrix::from_vec(y.len(), feature_names.len(), data)?;
    Ok(TabularDataset {
        x,
        y,
        feature_names,
        class_names,
        label_name: label_column.to_string(),
        label_position,
    })
}

/// Per class, `floor(test_fraction · n_c)` rows go to the test part, picked
/// in the order of one seeded shuffle of all rows; both parts keep that
/// shuffled order.
pub fn stratified_split(
    ds: &TabularDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(TabularDataset, TabularDataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "test fraction {test_fraction} outside (0, 1)"
        )));
    }
    let mut per_class = vec![0usize; ds.n_classes()];
    for &l in &ds.y {
        per_class[l] += 1;
    }
    let mut quota: Vec<usize> = per_class
        .iter()
        .map(|&n| (test_fraction * n as f64).floor() as usize)
        .collect();
    let order = Rng::new(seed).permutation(ds.y.len());
    let (mut train_idx, mut test_idx) = (Vec::new(), Vec::new());
    for i in order {
        let q = &mut quota[ds.y[i]];
        if *q > 0 {
            *q -= 1;
            test_idx.push(i);
        } else {
            train_idx.push(i);
        }
    }
    if train_idx.is_empty() || test_idx.is_empty() {
        return Err(Error::invalid(format!(
            "test fraction {test_fraction} leaves an empty part"
        )));
    }
    Ok((ds.subset(&train_idx)?, ds.subset(&test_idx)?))
}
