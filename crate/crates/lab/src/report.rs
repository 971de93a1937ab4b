//! File formats: the sweep CSV, its JSON metadata record, and atomic writes.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use sssplus_core::{ProcedureParams, Rational};

use crate::montecarlo::{ExperimentConfig, FdrEstimate, CI_METHOD};
use crate::LabError;

/// Column order of the sweep CSV.
pub const CSV_HEADER: [&str; 15] = [
    "n", "trials", "alpha", "c", "t", "a", "b", "mean_fdp", "std_err", "ci_low", "ci_high", "p_hit_end", "z_hat",
    "mean_K", "seed",
];

/// One CSV row: an estimate plus the parameters that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: u64,
    pub trials: u64,
    pub alpha: Rational,
    pub c: Rational,
    pub t: Rational,
    pub a: u64,
    pub b: u64,
    pub mean_fdp: f64,
    pub std_err: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub p_hit_end: f64,
    pub z_hat: f64,
    #[serde(rename = "mean_K")]
    pub mean_k: f64,
    pub seed: u64,
}

impl SweepRow {
    pub fn new(params: &ProcedureParams, seed: u64, estimate: &FdrEstimate) -> Self {
        Self {
            n: estimate.n,
            trials: estimate.trials,
            alpha: params.alpha(),
            c: params.c(),
            t: params.t(),
            a: params.a(),
            b: params.b(),
            mean_fdp: estimate.mean_fdp,
            std_err: estimate.std_err,
            ci_low: estimate.ci_low,
            ci_high: estimate.ci_high,
            p_hit_end: estimate.p_hit_end,
            z_hat: estimate.z_hat,
            mean_k: estimate.mean_k,
            seed,
        }
    }
}

pub fn write_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<(), LabError> {
    let mut writer = csv::Writer::from_writer(out);
    if rows.is_empty() {
        writer.write_record(CSV_HEADER)?;
    }
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<SweepRow>, LabError> {
    let mut reader = csv::Reader::from_reader(input);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_HEADER {
        return Err(LabError::Usage(format!("unexpected CSV header: {}", header.join(","))));
    }
    reader.deserialize().map(|row| row.map_err(LabError::from)).collect()
}

pub fn csv_string(rows: &[SweepRow]) -> Result<String, LabError> {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

/// Provenance record written next to every sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub tool: String,
    pub version: String,
    pub alpha: Rational,
    pub c: Rational,
    pub t: Rational,
    pub a: u64,
    pub b: u64,
    pub trials: u64,
    pub seed: u64,
    pub confidence_level: Rational,
    pub ci_method: String,
    pub rng: String,
    pub n_values: Vec<u64>,
}

impl RunMetadata {
    pub fn new(config: &ExperimentConfig, n_values: &[u64]) -> Self {
        let p = &config.params;
        Self {
            tool: "sssplus".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            alpha: p.alpha(),
            c: p.c(),
            t: p.t(),
            a: p.a(),
            b: p.b(),
            trials: config.trials,
            seed: config.master_seed,
            confidence_level: config.confidence_level,
            ci_method: CI_METHOD.into(),
            rng: "chacha8; key = (seed, n), stream = trial index".into(),
            n_values: n_values.to_vec(),
        }
    }
}

/// Path of the metadata file that accompanies `csv_path`.
pub fn metadata_path(csv_path: &Path) -> PathBuf {
    let mut name = csv_path.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

/// Writes `contents` to `path` through a temporary sibling and a rename, so
/// readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), LabError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let file_name = path
        .file_name()
        .ok_or_else(|| LabError::Usage(format!("not a file path: {}", path.display())))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(format!(".{}.tmp", std::process::id()));
    let tmp = dir.join(tmp_name);
    let result = std::fs::write(&tmp, contents).and_then(|()| std::fs::rename(&tmp, path));
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    Ok(result?)
}
