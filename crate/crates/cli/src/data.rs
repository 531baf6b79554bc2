//! Dataset CSV ingestion: header `x0,..,x{dx-1},y0,..,y{dy-1}`.

use std::path::Path;

use crate::error::CliError;

/// Column layout expected in a dataset file.
#[derive(Debug, Clone, Copy)]
pub struct Layout {
    pub input: &'static str,
    pub input_dim: usize,
    pub output: &'static str,
    /// `None` reads inputs only and ignores any output columns.
    pub output_dim: Option<usize>,
}

pub type Samples = Vec<(Vec<f64>, Vec<f64>)>;

fn column_index(header: &csv::StringRecord, name: &str) -> Result<usize, CliError> {
    header
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| CliError::Data(format!("dataset is missing column '{name}'")))
}

fn is_output_column(name: &str, prefix: &str) -> bool {
    name.strip_prefix(prefix).is_some_and(|s| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()))
}

pub fn read_samples(path: &Path, layout: Layout) -> Result<Samples, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| CliError::Data(format!("cannot read dataset {}: {e}", path.display())))?;
    let header = reader
        .headers()
        .map_err(|e| CliError::Data(format!("malformed dataset header: {e}")))?
        .clone();
    let inputs: Vec<usize> = (0..layout.input_dim)
        .map(|k| column_index(&header, &format!("{}{k}", layout.input)))
        .collect::<Result<_, _>>()?;
    let outputs: Vec<usize> = match layout.output_dim {
        Some(dy) => (0..dy)
            .map(|k| column_index(&header, &format!("{}{k}", layout.output)))
            .collect::<Result<_, _>>()?,
        None => Vec::new(),
    };
    for (i, name) in header.iter().enumerate() {
        let ignored = layout.output_dim.is_none() && is_output_column(name.trim(), layout.output);
        if !inputs.contains(&i) && !outputs.contains(&i) && !ignored {
            return Err(CliError::Data(format!("dataset has unexpected column '{}'", name.trim())));
        }
    }

    let mut samples = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| CliError::Data(format!("malformed dataset line {line}: {e}")))?;
        let parse = |cols: &[usize]| -> Result<Vec<f64>, CliError> {
            cols.iter()
                .map(|&c| {
                    let field = record.get(c).unwrap_or("").trim();
                    let v: f64 = field.parse().map_err(|_| {
                        CliError::Data(format!("line {line}, column '{}': '{field}' is not a number", &header[c]))
                    })?;
                    if v.is_finite() {
                        Ok(v)
                    } else {
                        Err(CliError::Data(format!("line {line}, column '{}': value is not finite", &header[c])))
                    }
                })
                .collect()
        };
        samples.push((parse(&inputs)?, parse(&outputs)?));
    }
    if samples.is_empty() {
        return Err(CliError::Data(format!("dataset {} has no rows", path.display())));
    }
    Ok(samples)
}
