use std::path::Path;

use serde::Serialize;

use crate::causality::ProbeRow;
use crate::error::{Error, Result};
use crate::sampling::SampleRecord;

use super::experiments::{LambdaRow, NearestRow};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// One named check performed by an experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Assertion {
    pub fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        }
    }
}

/// The JSON report. Field order is fixed and maps are ordered, so two runs
/// of the same config differ only in `wall_time_s`.
#[derive(Clone, Debug, Serialize)]
pub struct Report<C: Serialize, R: Serialize> {
    pub schema_version: u32,
    pub tool_version: &'static str,
    pub experiment: &'static str,
    pub config: C,
    pub results: R,
    pub assertions: Vec<Assertion>,
    pub passed: bool,
    pub wall_time_s: f64,
}

pub(crate) fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// A CSV row type with a fixed column list.
pub trait CsvRow: Serialize {
    const HEADER: &'static [&'static str];
}

impl CsvRow for SampleRecord {
    const HEADER: &'static [&'static str] =
        &["sample_id", "second_schmidt", "product_distance", "seed"];
}

impl CsvRow for NearestRow {
    const HEADER: &'static [&'static str] = &[
        "sample_id",
        "overlap",
        "distance",
        "iterations",
        "converged",
    ];
}

impl CsvRow for ProbeRow {
    const HEADER: &'static [&'static str] = &["epsilon", "defect", "choi_distance"];
}

impl CsvRow for LambdaRow {
    const HEADER: &'static [&'static str] = &["lambda", "scalar", "coeff_f", "coeff_g"];
}

/// Header plus one row per sample. Floats are written in shortest
/// round-trip form, so parsing the file back recovers every value exactly.
pub fn emit_csv<T: CsvRow>(samples: &[T], path: &Path) -> Result<()> {
    let io = |source| Error::Io {
        path: path.display().to_string(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io)?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(file);
    w.write_record(T::HEADER)?;
    for s in samples {
        w.serialize(s)?;
    }
    w.flush().map_err(io)?;
    Ok(())
}
