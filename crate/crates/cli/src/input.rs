//! CSV ingestion.
//!
//! Expected header (exact names, any order, extra columns ignored):
//! `label,a_positive,b_positive,double_positive,negative[,total]`.

use std::fs::File;
use std::path::Path;

use ddpcr_core::{Dataset, ReplicateCounts};

use crate::error::CliError;

const REQUIRED: [&str; 5] = [
    "label",
    "a_positive",
    "b_positive",
    "double_positive",
    "negative",
];

struct Columns {
    label: usize,
    a: usize,
    b: usize,
    d: usize,
    n: usize,
    total: Option<usize>,
}

fn locate(headers: &csv::StringRecord, path: &Path) -> Result<Columns, CliError> {
    let find = |name: &str| headers.iter().position(|h| h.trim() == name);
    let mut idx = [0usize; 5];
    for (slot, name) in idx.iter_mut().zip(REQUIRED) {
        *slot = find(name).ok_or_else(|| CliError::MissingColumn {
            path: path.to_path_buf(),
            column: name.to_string(),
        })?;
    }
    Ok(Columns {
        label: idx[0],
        a: idx[1],
        b: idx[2],
        d: idx[3],
        n: idx[4],
        total: find("total"),
    })
}

pub fn parse_csv(path: &Path) -> Result<Dataset, CliError> {
    let file = File::open(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_reader(file, path)
}

/// Parses CSV text; `path` is only used in diagnostics.
pub fn parse_reader<R: std::io::Read>(reader: R, path: &Path) -> Result<Dataset, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| malformed(path, 1, e.to_string()))?
        .clone();
    let cols = locate(&headers, path)?;

    let mut replicates = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            malformed(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        let field = |i: usize, name: &str| {
            record
                .get(i)
                .ok_or_else(|| malformed(path, line, format!("missing value for `{name}`")))
        };
        let label = field(cols.label, "label")?.to_string();
        if label.is_empty() {
            return Err(malformed(path, line, "empty label".into()));
        }
        let count = |i: usize, name: &str| -> Result<u64, CliError> {
            let raw = field(i, name)?;
            let v: i64 = raw.parse().map_err(|_| {
                malformed(path, line, format!("`{name}` is not an integer: `{raw}`"))
            })?;
            u64::try_from(v).map_err(|_| CliError::Data {
                path: path.to_path_buf(),
                source: ddpcr_core::Error::NegativeCount {
                    replicate: label.clone(),
                    field: name.to_string(),
                },
            })
        };
        let rep = ReplicateCounts::new(
            label.clone(),
            count(cols.a, "a_positive")?,
            count(cols.b, "b_positive")?,
            count(cols.d, "double_positive")?,
            count(cols.n, "negative")?,
        );
        if let Some(t) = cols.total {
            if record.get(t).is_some_and(|s| !s.is_empty()) {
                let stated = count(t, "total")?;
                if stated != rep.total() {
                    return Err(CliError::TotalMismatch {
                        path: path.to_path_buf(),
                        line,
                        stated,
                        computed: rep.total(),
                    });
                }
            }
        }
        replicates.push(rep);
    }
    if replicates.is_empty() {
        return Err(CliError::Data {
            path: path.to_path_buf(),
            source: ddpcr_core::Error::EmptyDataset,
        });
    }
    Ok(Dataset::new(replicates))
}

fn malformed(path: &Path, line: u64, reason: String) -> CliError {
    CliError::MalformedRow {
        path: path.to_path_buf(),
        line,
        reason,
    }
}

/// Writes a dataset in the input schema, including the total column.
pub fn write_dataset<W: std::io::Write>(dataset: &Dataset, writer: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "label",
        "a_positive",
        "b_positive",
        "double_positive",
        "negative",
        "total",
    ])?;
    for r in &dataset.replicates {
        w.write_record([
            r.label.clone(),
            r.a_positives.to_string(),
            r.b_positives.to_string(),
            r.double_positives.to_string(),
            r.negatives.to_string(),
            r.total().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
