//! On-disk coefficient cache.
//!
//! Coefficient tables are expensive to regenerate (the symmetric-square
//! lifts especially), so the command-line driver persists them as plain
//! text files keyed by (form id, limit). A file has a five-line header --
//! format version, form id, limit, normalization tag, SHA-256 of the body
//! -- then a blank line, then one coefficient per record in decimal with
//! 17 significant digits, which is exactly enough to round-trip an f64.
//!
//! The checksum covers the body bytes as stored, so any corruption of the
//! records is detected before a single value is parsed. Files written by
//! a different format version are rejected outright rather than migrated;
//! regenerating a table is always safe, reinterpreting one is not.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::forms::{builtin_descriptor, CoefficientTable, Form};

/// Version stamp written into every cache file.
pub const CACHE_FORMAT_VERSION: u32 = 1;

/// Normalization tag for tables in the unitary (Hecke lambda, lambda(1) = 1)
/// normalization -- the only one this crate produces or accepts.
pub const NORMALIZATION_TAG: &str = "unitary";

const HEADER_MAGIC: &str = "selberg-lab coefficient cache v";

/// Environment variable naming the cache directory.
pub const CACHE_DIR_ENV: &str = "SELBERG_LAB_CACHE";

/// Parsed contents of one cache file, header fields plus the decoded body.
///
/// `values` follows the table convention: index 0 is padding, so the file's
/// record r lands at `values[r]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CacheEntry {
    pub format_version: u32,
    pub form_id: String,
    pub limit: u64,
    pub normalization: String,
    pub checksum: String,
    pub values: Vec<f64>,
}

/// Whether `load_or_generate` found a verified file or had to build one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheStatus {
    Hit,
    Miss,
}

/// Cache directory: `SELBERG_LAB_CACHE` if set, else `.selberg-lab-cache`
/// under the current directory.
pub fn default_cache_dir() -> PathBuf {
    match std::env::var_os(CACHE_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => PathBuf::from(".selberg-lab-cache"),
    }
}

/// File path for a (form id, limit) pair inside `dir`.
pub fn cache_path(dir: &Path, form_id: &str, limit: u64) -> PathBuf {
    dir.join(format!("{form_id}-{limit}.coeffs"))
}

fn hex_sha256(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

fn render_body(table: &CoefficientTable) -> String {
    let values = table.values();
    let mut body = String::with_capacity(values.len() * 24);
    for &v in &values[1..] {
        // 17 significant digits: 1 before the point, 16 after.
        body.push_str(&format!("{v:.16e}\n"));
    }
    body
}

/// Writes `table` as a cache file at `path`, creating parent directories.
///
/// The file is staged under a temporary name and renamed into place so a
/// crash mid-write cannot leave a truncated file at the final path.
pub fn write_entry(path: &Path, table: &CoefficientTable) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let body = render_body(table);
    let header = format!(
        "{HEADER_MAGIC}{CACHE_FORMAT_VERSION}\nform {}\nlimit {}\nnormalization {NORMALIZATION_TAG}\nsha256 {}\n",
        table.form_id,
        table.limit,
        hex_sha256(body.as_bytes()),
    );
    let staging = path.with_extension("coeffs.tmp");
    fs::write(&staging, format!("{header}\n{body}"))?;
    fs::rename(&staging, path)?;
    Ok(())
}

fn header_field<'a>(line: Option<&'a str>, key: &str) -> Result<&'a str> {
    let line = line.ok_or_else(|| Error::CacheFormat(format!("missing `{key}` header line")))?;
    line.strip_prefix(key)
        .and_then(|rest| rest.strip_prefix(' '))
        .ok_or_else(|| Error::CacheFormat(format!("expected `{key} ...` header line, got `{line}`")))
}

/// Reads and fully validates a cache file: format version, header shape,
/// body checksum, record count, and numeric parse of every record.
pub fn read_entry(path: &Path) -> Result<CacheEntry> {
    let text = fs::read_to_string(path)?;
    let (header, body) = text
        .split_once("\n\n")
        .ok_or_else(|| Error::CacheFormat("missing blank line between header and body".to_string()))?;
    let mut lines = header.lines();

    let magic = lines
        .next()
        .ok_or_else(|| Error::CacheFormat("empty cache file".to_string()))?;
    let version: u32 = magic
        .strip_prefix(HEADER_MAGIC)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::CacheFormat(format!("unrecognized cache header `{magic}`")))?;
    if version != CACHE_FORMAT_VERSION {
        return Err(Error::CacheFormat(format!(
            "cache format version {version} is not supported (this build reads \
             version {CACHE_FORMAT_VERSION}); delete the file and regenerate"
        )));
    }

    let form_id = header_field(lines.next(), "form")?.to_string();
    let limit: u64 = header_field(lines.next(), "limit")?
        .parse()
        .map_err(|_| Error::CacheFormat("limit header is not an integer".to_string()))?;
    let normalization = header_field(lines.next(), "normalization")?.to_string();
    if normalization != NORMALIZATION_TAG {
        return Err(Error::CacheFormat(format!(
            "unknown normalization `{normalization}` (expected `{NORMALIZATION_TAG}`)"
        )));
    }
    let checksum = header_field(lines.next(), "sha256")?.to_string();
    if let Some(extra) = lines.next() {
        return Err(Error::CacheFormat(format!("unexpected header line `{extra}`")));
    }

    let actual = hex_sha256(body.as_bytes());
    if actual != checksum {
        return Err(Error::CacheFormat(format!(
            "checksum mismatch for `{}`: file is corrupted (header {}, body {})",
            path.display(),
            &checksum[..checksum.len().min(12)],
            &actual[..12],
        )));
    }

    let mut values = Vec::with_capacity(limit as usize + 1);
    values.push(0.0);
    for (i, record) in body.lines().enumerate() {
        let v: f64 = record.parse().map_err(|_| {
            Error::CacheFormat(format!("record {} is not a number: `{record}`", i + 1))
        })?;
        values.push(v);
    }
    if values.len() as u64 - 1 != limit {
        return Err(Error::CacheFormat(format!(
            "record count {} does not match declared limit {limit}",
            values.len() - 1
        )));
    }

    Ok(CacheEntry {
        format_version: version,
        form_id,
        limit,
        normalization,
        checksum,
        values,
    })
}

/// Rebuilds a built-in form from a validated entry.
pub fn form_from_entry(entry: CacheEntry) -> Result<Form> {
    let descriptor = builtin_descriptor(&entry.form_id)?;
    let table = CoefficientTable::from_values(
        entry.form_id,
        descriptor.degree,
        "coefficient cache",
        entry.values,
    )?;
    Form::new(descriptor, table)
}

/// Loads a built-in form from `dir`, generating and persisting it on a miss.
///
/// A hit is only reported after the file passes every `read_entry` check and
/// its header matches the requested id and limit, so the returned table is
/// bitwise equal to what a fresh generation would produce.
pub fn load_or_generate(dir: &Path, form_id: &str, limit: u64) -> Result<(Form, CacheStatus)> {
    let path = cache_path(dir, form_id, limit);
    if path.exists() {
        let entry = read_entry(&path)?;
        if entry.form_id != form_id || entry.limit != limit {
            return Err(Error::CacheFormat(format!(
                "cache file `{}` declares ({}, {}) but ({form_id}, {limit}) was requested",
                path.display(),
                entry.form_id,
                entry.limit,
            )));
        }
        Ok((form_from_entry(entry)?, CacheStatus::Hit))
    } else {
        let form = Form::builtin(form_id, limit)?;
        write_entry(&path, &form.table)?;
        Ok((form, CacheStatus::Miss))
    }
}
