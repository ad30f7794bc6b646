//! CSV ingest and export.
//!
//! Dialect: comma separated, header row required, `.` decimal point, UTF-8.
//! Rows are numbered from 1 for the first data row; the header is row 0.

use std::io::{Read, Write};
use std::path::Path;

use rdcensor_core::{ObservedRecord, ObservedSample};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMapping {
    pub time: String,
    pub status: String,
    pub forcing: String,
    /// Without a treatment column every record is untreated.
    pub treatment: Option<String>,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        Self {
            time: "time".into(),
            status: "status".into(),
            forcing: "forcing".into(),
            treatment: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("column `{0}` not found in header")]
    MissingColumn(String),
    #[error("row {row}: column `{column}` has unparseable value `{value}`")]
    ParseError { row: usize, column: String, value: String },
    #[error("row {row}: column `{column}` is empty")]
    MissingValue { row: usize, column: String },
    #[error("row {row}: observed time {value} is not positive")]
    NonPositiveTime { row: usize, value: f64 },
    #[error("row {row}: column `{column}` must be 0 or 1, found `{value}`")]
    NotBinary { row: usize, column: String, value: String },
    #[error("file contains no data rows")]
    Empty,
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize, IngestError> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| IngestError::MissingColumn(name.to_owned()))
}

fn field<'a>(rec: &'a csv::StringRecord, idx: usize, row: usize, name: &str) -> Result<&'a str, IngestError> {
    match rec.get(idx).map(str::trim) {
        Some(v) if !v.is_empty() => Ok(v),
        _ => Err(IngestError::MissingValue {
            row,
            column: name.to_owned(),
        }),
    }
}

fn real(rec: &csv::StringRecord, idx: usize, row: usize, name: &str) -> Result<f64, IngestError> {
    let v = field(rec, idx, row, name)?;
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(IngestError::ParseError {
            row,
            column: name.to_owned(),
            value: v.to_owned(),
        }),
    }
}

fn binary(rec: &csv::StringRecord, idx: usize, row: usize, name: &str) -> Result<bool, IngestError> {
    let v = field(rec, idx, row, name)?;
    match v.parse::<f64>() {
        Ok(0.0) => Ok(false),
        Ok(1.0) => Ok(true),
        _ => Err(IngestError::NotBinary {
            row,
            column: name.to_owned(),
            value: v.to_owned(),
        }),
    }
}

pub fn read_sample_from<R: Read>(reader: R, mapping: &ColumnMapping) -> Result<ObservedSample, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let it = column(&headers, &mapping.time)?;
    let is = column(&headers, &mapping.status)?;
    let iw = column(&headers, &mapping.forcing)?;
    let iz = mapping.treatment.as_deref().map(|c| column(&headers, c)).transpose()?;
    let mut records = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = k + 1;
        let time = real(&rec, it, row, &mapping.time)?;
        if time <= 0.0 {
            return Err(IngestError::NonPositiveTime { row, value: time });
        }
        let event = binary(&rec, is, row, &mapping.status)?;
        let forcing = real(&rec, iw, row, &mapping.forcing)?;
        let treated = match (iz, &mapping.treatment) {
            (Some(i), Some(name)) => binary(&rec, i, row, name)?,
            _ => false,
        };
        records.push(ObservedRecord::new(time, event, forcing, treated));
    }
    ObservedSample::new(records).map_err(|_| IngestError::Empty)
}

pub fn read_sample(path: &Path, mapping: &ColumnMapping) -> Result<ObservedSample, IngestError> {
    let file = std::fs::File::open(path).map_err(|source| IngestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_sample_from(std::io::BufReader::new(file), mapping)
}

/// Writes `time,status,forcing,treatment` with shortest round-trip floats.
pub fn write_sample_to<W: Write>(writer: W, sample: &ObservedSample) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["time", "status", "forcing", "treatment"])?;
    for r in sample {
        w.write_record([
            r.time_obs.to_string(),
            u8::from(r.event).to_string(),
            r.forcing.to_string(),
            u8::from(r.treated).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sample(path: &Path, sample: &ObservedSample) -> csv::Result<()> {
    write_sample_to(std::fs::File::create(path)?, sample)
}

/// Mapping matching the columns written by [`write_sample`].
pub fn sample_mapping() -> ColumnMapping {
    ColumnMapping {
        treatment: Some("treatment".into()),
        ..ColumnMapping::default()
    }
}
