//! Arm-level CSV reading and writing.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use super::CliError;
use crate::network::{build_dataset, impute_date, Dataset, RawRecord};

pub const HEADER: [&str; 5] = ["study", "date", "treatment", "events", "total"];

fn parse_count(field: &str, name: &str, line: u64) -> Result<u64, CliError> {
    field.trim().parse().map_err(|_| CliError::Row {
        line,
        message: format!("{name} {field:?} is not a nonnegative integer"),
    })
}

/// Parses arm rows from CSV text. Line numbers in errors are 1-based and
/// count the header.
pub fn parse_records<R: std::io::Read>(reader: R) -> Result<Vec<RawRecord>, CliError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut rows = rdr.records();
    let header = match rows.next() {
        Some(h) => h.map_err(|e| CliError::Row {
            line: 1,
            message: e.to_string(),
        })?,
        None => {
            return Err(CliError::Header {
                found: String::new(),
            })
        }
    };
    if header.iter().ne(HEADER) {
        return Err(CliError::Header {
            found: header.iter().collect::<Vec<_>>().join(","),
        });
    }
    let mut out = Vec::new();
    for row in rows {
        let row = row.map_err(|e| CliError::Row {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() == 1 && row[0].trim().is_empty() {
            continue;
        }
        if row.len() != HEADER.len() {
            return Err(CliError::Row {
                line,
                message: format!("expected {} fields, found {}", HEADER.len(), row.len()),
            });
        }
        let study = row[0].trim();
        let treatment = row[2].trim();
        if study.is_empty() || treatment.is_empty() {
            return Err(CliError::Row {
                line,
                message: "study and treatment must be nonempty".into(),
            });
        }
        let date = impute_date(row[1].trim()).map_err(|e| CliError::Row {
            line,
            message: e.to_string(),
        })?;
        let events = parse_count(&row[3], "events", line)?;
        let total = parse_count(&row[4], "total", line)?;
        if total == 0 {
            return Err(CliError::Row {
                line,
                message: "total must be positive".into(),
            });
        }
        if events > total {
            return Err(CliError::Row {
                line,
                message: format!("events {events} exceed total {total}"),
            });
        }
        out.push(RawRecord {
            study: study.to_string(),
            date,
            treatment: treatment.to_string(),
            events,
            total,
        });
    }
    Ok(out)
}

/// Reads and validates an arm-level CSV file.
pub fn ingest(path: &Path) -> Result<Dataset, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let records = parse_records(file)?;
    Ok(build_dataset(&records)?)
}

/// Writes `data` in the ingestion format with full dates.
pub fn write_csv(data: &Dataset, path: &Path) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Csv(e.to_string()))?;
    w.write_record(HEADER)
        .map_err(|e| CliError::Csv(e.to_string()))?;
    for r in data.records() {
        w.write_record([
            r.study,
            r.date.format("%Y-%m-%d").to_string(),
            r.treatment,
            r.events.to_string(),
            r.total.to_string(),
        ])
        .map_err(|e| CliError::Csv(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    let mut f = File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(text.as_bytes())
        .map_err(|e| CliError::io(path, e))
}
