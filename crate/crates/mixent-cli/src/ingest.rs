//! CSV ingestion: header-row CSV, UTF-8, '.' decimal separator.

use std::io::Write;
use std::path::Path;

use mixent::Matrix;

use crate::{CliError, CliResult};

/// A rectangular numeric dataset with optional per-row group labels.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub rows: Matrix,
    pub column_names: Vec<String>,
    pub groups: Option<Vec<String>>,
}

impl Dataset {
    pub fn n_rows(&self) -> usize {
        self.rows.n_rows()
    }

    /// Distinct group labels in first-appearance order, with row indices.
    pub fn group_indices(&self) -> Vec<(Option<String>, Vec<usize>)> {
        match &self.groups {
            None => vec![(None, (0..self.n_rows()).collect())],
            Some(labels) => {
                let mut order: Vec<String> = Vec::new();
                for label in labels {
                    if !order.contains(label) {
                        order.push(label.clone());
                    }
                }
                order
                    .into_iter()
                    .map(|label| {
                        let idx: Vec<usize> = labels
                            .iter()
                            .enumerate()
                            .filter(|(_, l)| **l == label)
                            .map(|(i, _)| i)
                            .collect();
                        (Some(label), idx)
                    })
                    .collect()
            }
        }
    }
}

/// Read selected numeric columns (all columns except the group column when
/// `columns` is empty). Parse failures report the 1-based data line number.
pub fn read_csv(
    path: &Path,
    columns: &[String],
    group_by: Option<&str>,
) -> CliResult<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();

    let group_idx = match group_by {
        Some(name) => Some(
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| CliError::Usage(format!("group column '{name}' not in header")))?,
        ),
        None => None,
    };

    let selected: Vec<usize> = if columns.is_empty() {
        (0..headers.len()).filter(|i| Some(*i) != group_idx).collect()
    } else {
        columns
            .iter()
            .map(|name| {
                headers
                    .iter()
                    .position(|h| h == name)
                    .ok_or_else(|| CliError::Usage(format!("column '{name}' not in header")))
            })
            .collect::<CliResult<Vec<_>>>()?
    };
    if selected.is_empty() {
        return Err(CliError::Usage("no data columns selected".into()));
    }

    let mut values: Vec<Vec<f64>> = Vec::new();
    let mut groups: Vec<String> = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let line_no = line + 2; // header is line 1
        let record = record.map_err(|e| CliError::Data(format!("line {line_no}: {e}")))?;
        let mut row = Vec::with_capacity(selected.len());
        for &ci in &selected {
            let raw = record.get(ci).ok_or_else(|| {
                CliError::Data(format!("line {line_no}: missing column {}", headers[ci]))
            })?;
            let v: f64 = raw.trim().parse().map_err(|_| {
                CliError::Data(format!(
                    "line {line_no}: column '{}' is not numeric: '{raw}'",
                    headers[ci]
                ))
            })?;
            if !v.is_finite() {
                return Err(CliError::Data(format!(
                    "line {line_no}: column '{}' is not finite",
                    headers[ci]
                )));
            }
            row.push(v);
        }
        values.push(row);
        if let Some(gi) = group_idx {
            groups.push(
                record
                    .get(gi)
                    .ok_or_else(|| CliError::Data(format!("line {line_no}: missing group value")))?
                    .trim()
                    .to_string(),
            );
        }
    }
    if values.len() < 2 {
        return Err(CliError::Data(format!(
            "{}: need at least 2 data rows, got {}",
            path.display(),
            values.len()
        )));
    }
    let rows = Matrix::from_rows(&values).map_err(|e| CliError::Data(e.to_string()))?;
    Ok(Dataset {
        rows,
        column_names: selected.iter().map(|&i| headers[i].clone()).collect(),
        groups: group_idx.map(|_| groups),
    })
}

/// Replace every column by consecutive log-returns, dropping the first row.
/// All values must be strictly positive prices.
pub fn to_log_returns(rows: &Matrix) -> CliResult<Matrix> {
    let n = rows.n_rows();
    let d = rows.n_cols();
    if n < 3 {
        return Err(CliError::Data(
            "log-returns need at least 3 price rows".into(),
        ));
    }
    for i in 0..n {
        for j in 0..d {
            if !(rows.get(i, j) > 0.0) {
                return Err(CliError::Data(format!(
                    "log-returns need positive prices; row {} column {} is {}",
                    i + 1,
                    j + 1,
                    rows.get(i, j)
                )));
            }
        }
    }
    let mut out = Matrix::zeros(n - 1, d);
    for i in 1..n {
        for j in 0..d {
            out.set(i - 1, j, rows.get(i, j).ln() - rows.get(i - 1, j).ln());
        }
    }
    Ok(out)
}

/// Write a dataset back out with 17 significant digits, so a read round-trip
/// reproduces every value exactly.
pub fn write_csv<W: Write>(dataset: &Dataset, mut w: W) -> CliResult<()> {
    let mut header = Vec::new();
    if dataset.groups.is_some() {
        header.push("group".to_string());
    }
    header.extend(dataset.column_names.iter().cloned());
    writeln!(w, "{}", header.join(","))?;
    for i in 0..dataset.n_rows() {
        let mut fields = Vec::with_capacity(header.len());
        if let Some(groups) = &dataset.groups {
            fields.push(groups[i].clone());
        }
        for v in dataset.rows.row(i) {
            fields.push(format!("{v:.16e}"));
        }
        writeln!(w, "{}", fields.join(","))?;
    }
    Ok(())
}
