//! CSV ingestion. UTF-8, comma-separated, mandatory header row. Columns
//! named `Weight` and `Label` are pulled out of the feature matrix; a
//! `Label` cell must be `s` (signal) or `b` (background).

use std::path::Path;

use crate::error::{Error, Result};

use super::{EventTable, Label, PreprocessRecipe};

/// Load a CSV file into an [`EventTable`], applying the recipe's jet filter
/// (the filter column is consumed). All remaining non-Weight/Label columns
/// must parse as finite reals; a bad cell reports its 1-based data row.
pub fn load_csv(path: impl AsRef<Path>, recipe: &PreprocessRecipe) -> Result<EventTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path.as_ref())?;

    let headers: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if headers.is_empty() {
        return Err(Error::Schema("empty header row".into()));
    }
    let weight_col = headers.iter().position(|h| h == "Weight");
    let label_col = headers.iter().position(|h| h == "Label");
    let jet_col = match &recipe.jet_filter {
        Some(f) => Some(
            headers
                .iter()
                .position(|h| h == &f.column)
                .ok_or_else(|| Error::Schema(format!("missing jet filter column '{}'", f.column)))?,
        ),
        None => None,
    };

    let feature_idx: Vec<usize> = (0..headers.len())
        .filter(|j| Some(*j) != weight_col && Some(*j) != label_col && Some(*j) != jet_col)
        .collect();
    if feature_idx.is_empty() {
        return Err(Error::Schema("no feature columns in header".into()));
    }

    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); feature_idx.len()];
    let mut weights: Vec<f64> = Vec::new();
    let mut labels: Vec<Label> = Vec::new();

    for (rec_no, record) in reader.records().enumerate() {
        let row = rec_no + 1;
        let record = record?;
        if record.len() != headers.len() {
            return Err(Error::Parse {
                row,
                msg: format!("{} fields, expected {}", record.len(), headers.len()),
            });
        }
        if let Some(j) = jet_col {
            let v = parse_cell(&record[j], &headers[j], row)?;
            if v != recipe.jet_filter.as_ref().expect("jet filter set").equals {
                continue;
            }
        }
        for (slot, &j) in feature_idx.iter().enumerate() {
            columns[slot].push(parse_cell(&record[j], &headers[j], row)?);
        }
        if let Some(j) = weight_col {
            let w = parse_cell(&record[j], &headers[j], row)?;
            if w < 0.0 {
                return Err(Error::Parse { row, msg: format!("negative weight {w}") });
            }
            weights.push(w);
        }
        if let Some(j) = label_col {
            labels.push(match &record[j] {
                "s" => Label::Signal,
                "b" => Label::Background,
                other => {
                    return Err(Error::Parse {
                        row,
                        msg: format!("label '{other}' is not 's' or 'b'"),
                    })
                }
            });
        }
    }

    if columns[0].is_empty() {
        return Err(Error::Size("no rows survived ingestion".into()));
    }
    let names = feature_idx.iter().map(|&j| headers[j].clone()).collect();
    EventTable::new(
        names,
        columns,
        weight_col.map(|_| weights),
        label_col.map(|_| labels),
    )
}

/// Write a table back to CSV, appending Weight/Label columns when present.
pub fn write_csv(table: &EventTable, path: impl AsRef<Path>) -> Result<()> {
    let mut writer = csv::Writer::from_path(path.as_ref())?;
    let mut header: Vec<String> = table.names().to_vec();
    if table.weights().is_some() {
        header.push("Weight".into());
    }
    if table.labels().is_some() {
        header.push("Label".into());
    }
    writer.write_record(&header)?;
    let mut record: Vec<String> = Vec::with_capacity(header.len());
    for i in 0..table.n_rows() {
        record.clear();
        for j in 0..table.n_cols() {
            // {} prints the shortest decimal that round-trips the f64
            record.push(format!("{}", table.column(j)[i]));
        }
        if let Some(w) = table.weights() {
            record.push(format!("{}", w[i]));
        }
        if let Some(l) = table.labels() {
            record.push(match l[i] {
                Label::Signal => "s".into(),
                Label::Background => "b".into(),
            });
        }
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}

fn parse_cell(cell: &str, column: &str, row: usize) -> Result<f64> {
    let v: f64 = cell.parse().map_err(|_| Error::Parse {
        row,
        msg: format!("'{cell}' in column '{column}' is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            row,
            msg: format!("'{cell}' in column '{column}' is not finite"),
        });
    }
    Ok(v)
}
