//! Report documents and their CSV/JSON renderings.

use std::path::{Path, PathBuf};

use serde::Serialize;

use spinmer_core::eigensolve::Spectrum;
use spinmer_core::io::{fmt_float, to_json_string, write_atomic, CsvTable};
use spinmer_core::ligandfield::TSCurve;
use spinmer_core::models::{HeisenbergFit, SpinmerismSweep};
use spinmer_core::spinproj::ProjectionRow;
use spinmer_core::HARTREE_TO_CM1;

use crate::config::{FragmentConfig, RunConfig};
use crate::error::CliError;
use crate::Format;

pub const TOOL: &str = "spinmer";

#[derive(Debug, Clone, Serialize)]
pub struct Options {
    pub format: Format,
    pub tol_degeneracy_cm1: f64,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    /// From `SOURCE_DATE_EPOCH` (0 when unset), so reruns are byte-identical.
    pub timestamp: String,
    pub config: RunConfig,
    pub options: Options,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumRow {
    pub index: usize,
    /// Relative to the lowest eigenvalue.
    pub energy_cm1: f64,
    pub multiplicity: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_hartree: Option<f64>,
}

pub fn spectrum_rows(spectrum: &Spectrum, absolute: bool) -> Vec<SpectrumRow> {
    let ground = spectrum.eigenvalues.first().copied().unwrap_or(0.0);
    spectrum
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &e)| SpectrumRow {
            index: i,
            energy_cm1: (e - ground) * HARTREE_TO_CM1,
            multiplicity: spectrum.multiplicity(i),
            energy_hartree: absolute.then_some(e),
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectionRecord {
    pub spectrum_index: usize,
    #[serde(flatten)]
    pub row: ProjectionRow,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProjectionBlock {
    pub fragments: FragmentConfig,
    /// Labels of the weight columns, `S_<A>=s_A|S_<B>=s_B`.
    pub columns: Vec<String>,
    pub rows: Vec<ProjectionRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepBlock {
    #[serde(flatten)]
    pub sweep: SpinmerismSweep,
    pub flagged_steps: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BasisRecord {
    pub index: usize,
    pub occupation: String,
    pub alpha: u32,
    pub beta: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_a: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BasisBlock {
    pub norb: usize,
    pub n_alpha: usize,
    pub n_beta: usize,
    pub dimension: usize,
    pub determinants: Vec<BasisRecord>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReportDocument {
    pub metadata: Metadata,
    #[serde(flatten)]
    pub exchange: Option<HeisenbergFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<Vec<SpectrumRow>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub projection: Option<ProjectionBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ts_diagram: Option<TSCurve>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub basis: Option<BasisBlock>,
}

impl ReportDocument {
    pub fn new(metadata: Metadata) -> Self {
        Self { metadata, exchange: None, spectrum: None, projection: None, sweep: None, ts_diagram: None, basis: None }
    }
}

/// `1/2`-style text for a spin given as 2S.
pub fn spin_text(twice_s: u32) -> String {
    if twice_s % 2 == 0 {
        (twice_s / 2).to_string()
    } else {
        format!("{twice_s}/2")
    }
}

pub fn opt_float(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

pub fn timestamp() -> Result<String, CliError> {
    let secs = match std::env::var("SOURCE_DATE_EPOCH") {
        Ok(s) => s
            .trim()
            .parse::<i64>()
            .map_err(|_| CliError::Config(format!("SOURCE_DATE_EPOCH='{s}' is not an integer")))?,
        Err(_) => 0,
    };
    let t = chrono::DateTime::from_timestamp(secs, 0)
        .ok_or_else(|| CliError::Config(format!("SOURCE_DATE_EPOCH={secs} is out of range")))?;
    Ok(t.to_rfc3339_opts(chrono::SecondsFormat::Secs, true))
}

/// Writes `<stem>.csv` and/or `<stem>.json` into `out`.
pub fn write_outputs(
    out: &Path,
    stem: &str,
    format: Format,
    table: &CsvTable,
    doc: &ReportDocument,
) -> Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    let mut written = Vec::new();
    if format.csv() {
        let path = out.join(format!("{stem}.csv"));
        write_atomic(&path, table.to_csv_string()?.as_bytes())?;
        written.push(path);
    }
    if format.json() {
        let path = out.join(format!("{stem}.json"));
        write_atomic(&path, to_json_string(doc)?.as_bytes())?;
        written.push(path);
    }
    Ok(written)
}
