//! Reading datasets and moment summaries, and writing results.
//!
//! Two input shapes are accepted: CSV with a header row of variable names
//! and one observation per line, and a moment-summary JSON document
//! `{"mean": [...], "cov": [[...]], "convention": "..."}`. The JSON path
//! exists so exact analytic instances can be fed to the tools without
//! fabricating data. Numbers are written in shortest round-trip form, so
//! exporting and re-ingesting a summary reproduces it bit for bit.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{McvError, Result};
use crate::linalg::Matrix;
use crate::moments::{Convention, DataSet, MomentSummary};
use crate::sims::ExperimentResult;

/// Either of the two accepted input shapes.
#[derive(Debug, Clone)]
pub enum Input {
    Data(DataSet),
    Moments(MomentSummary),
}

/// Wire form of a moment summary.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct MomentSummaryJson {
    mean: Vec<f64>,
    cov: Vec<Vec<f64>>,
    convention: Convention,
}

/// Parses a dataset from CSV text: header row of names, numeric rows.
pub fn dataset_from_csv(text: &str) -> Result<DataSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let names: Vec<String> = reader
        .headers()
        .map_err(|e| McvError::Parse(format!("CSV header: {e}")))?
        .iter()
        .map(|s| s.to_string())
        .collect();
    if names.is_empty() {
        return Err(McvError::Parse("CSV has no columns".into()));
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| McvError::Parse(format!("CSV row {}: {e}", i + 2)))?;
        let row: Vec<f64> = record
            .iter()
            .enumerate()
            .map(|(j, field)| {
                field.parse::<f64>().map_err(|_| {
                    McvError::Parse(format!(
                        "CSV row {}, column {}: `{field}` is not a number",
                        i + 2,
                        j + 1
                    ))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    DataSet::new(names, &rows)
}

/// Renders a dataset as CSV with its header row.
pub fn dataset_to_csv(data: &DataSet) -> String {
    let mut out = String::new();
    out.push_str(&data.names().join(","));
    out.push('\n');
    for i in 0..data.n_obs() {
        let fields: Vec<String> = data.row(i).iter().map(|x| format!("{x}")).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Parses a moment summary from its JSON wire form, validating symmetry and
/// dimensions through the usual constructor.
pub fn moment_summary_from_json(text: &str) -> Result<MomentSummary> {
    let wire: MomentSummaryJson =
        serde_json::from_str(text).map_err(|e| McvError::Parse(format!("summary JSON: {e}")))?;
    let cov = Matrix::from_rows(&wire.cov)?;
    MomentSummary::new(wire.mean, cov, wire.convention)
}

/// Renders a moment summary as JSON, numbers in shortest round-trip form.
pub fn moment_summary_to_json(ms: &MomentSummary) -> String {
    let wire = MomentSummaryJson {
        mean: ms.mean().to_vec(),
        cov: (0..ms.dim()).map(|i| ms.cov().row(i).to_vec()).collect(),
        convention: ms.convention(),
    };
    serde_json::to_string_pretty(&wire).expect("summary serialization cannot fail")
}

/// Reads a file and dispatches on content: a document whose first
/// non-whitespace byte is `{` is treated as a moment-summary JSON,
/// anything else as CSV.
pub fn read_input(path: &Path) -> Result<Input> {
    let mut text = String::new();
    std::fs::File::open(path)
        .map_err(|e| McvError::Io(format!("{}: {e}", path.display())))?
        .read_to_string(&mut text)
        .map_err(|e| McvError::Io(format!("{}: {e}", path.display())))?;
    parse_input(&text)
}

/// Content-dispatching parser behind [`read_input`].
pub fn parse_input(text: &str) -> Result<Input> {
    match text.trim_start().chars().next() {
        Some('{') => Ok(Input::Moments(moment_summary_from_json(text)?)),
        Some(_) => Ok(Input::Data(dataset_from_csv(text)?)),
        None => Err(McvError::Parse("empty input".into())),
    }
}

/// Renders an experiment sweep as CSV with columns
/// `x_value,metric_id,value`.
pub fn experiment_result_csv(result: &ExperimentResult) -> String {
    let mut out = String::from("x_value,metric_id,value\n");
    for cell in &result.cells {
        out.push_str(&format!("{},{},{}\n", cell.x, cell.metric_id, cell.value));
    }
    out
}
