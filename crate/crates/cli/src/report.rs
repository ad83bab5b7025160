//! Report emission: a JSON envelope carrying the configuration, schedule,
//! version, seed and verdicts around each command's payload, plus a CSV of
//! raw samples. Both formats are deterministic functions of the inputs, so
//! identical configurations produce byte-identical files regardless of the
//! worker-thread cap.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use selberg_lab::dirpoly::ParameterSchedule;
use selberg_lab::{Error, Result};

use crate::config::RunConfig;

/// Build-time version stamp (git describe over the working tree).
pub const VERSION: &str = env!("SELBERG_LAB_VERSION");

#[derive(Debug, Serialize)]
pub struct Envelope<'a, R: Serialize> {
    pub version: &'static str,
    pub command: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub config: &'a RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<&'a ParameterSchedule>,
    pub verdicts: Vec<(String, bool)>,
    pub pass: bool,
    pub report: R,
}

/// One raw-sample row of the CSV: (t, value, excluded).
pub type SampleRow = (f64, f64, bool);

pub fn report_path(out_dir: &Path, command: &str) -> PathBuf {
    out_dir.join(format!("{command}_report.json"))
}

pub fn samples_path(out_dir: &Path, command: &str) -> PathBuf {
    out_dir.join(format!("{command}_samples.csv"))
}

pub fn write_report<R: Serialize>(out_dir: &Path, envelope: &Envelope<R>) -> Result<PathBuf> {
    fs::create_dir_all(out_dir)?;
    let path = report_path(out_dir, envelope.command);
    let json = serde_json::to_string_pretty(envelope)
        .map_err(|e| Error::InvalidArgument(format!("report serialization failed: {e}")))?;
    fs::write(&path, format!("{json}\n"))?;
    Ok(path)
}

pub fn write_samples(out_dir: &Path, command: &str, rows: &[SampleRow]) -> Result<PathBuf> {
    fs::create_dir_all(out_dir)?;
    let path = samples_path(out_dir, command);
    let mut body = String::with_capacity(32 * rows.len() + 32);
    body.push_str("index,t,value,excluded\n");
    for (i, (t, value, excluded)) in rows.iter().enumerate() {
        body.push_str(&format!("{i},{t:.16e},{value:.16e},{}\n", u8::from(*excluded)));
    }
    fs::write(&path, body)?;
    Ok(path)
}
