//! On-disk formats shared by the pipeline stages.
//!
//! Export matrices cache as a columnar `country,product,value` CSV (every
//! cell, row-major over the sorted labels) next to a JSON manifest with the
//! dimensions and a content checksum. Dense numeric matrices cache as raw
//! little-endian f64 tiles with the labels and parameters in their manifest.
//! Values round-trip bit-exactly: text floats use the shortest
//! representation that parses back to the same bits, tiles store the bits.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::metrics::{ConvergenceReport, SophisticationVector};
use crate::trade_data::ExportMatrix;

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("{path}: not found; {hint}")]
    Missing { path: PathBuf, hint: String },
    #[error("{path}: checksum does not match its manifest")]
    ChecksumMismatch { path: PathBuf },
    #[error("{path}: {reason}")]
    Malformed { path: PathBuf, reason: String },
    #[error("cache is locked by {path}; remove it if no other run is active")]
    Locked { path: PathBuf },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Write `bytes` to `path` unless the file already holds exactly them.
/// Returns true when the file changed. Parent directories are created.
pub fn write_if_changed(path: &Path, bytes: &[u8]) -> Result<bool, CacheError> {
    if let Ok(existing) = fs::read(path) {
        if existing == bytes {
            return Ok(false);
        }
    }
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut f = fs::File::create(path)?;
    f.write_all(bytes)?;
    Ok(true)
}

fn read_required(path: &Path, hint: &str) -> Result<Vec<u8>, CacheError> {
    fs::read(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            CacheError::Missing {
                path: path.to_path_buf(),
                hint: hint.to_string(),
            }
        } else {
            CacheError::Io(e)
        }
    })
}

/// Exclusive lock on a cache directory, held for the duration of a write
/// phase. Creating the guard creates `.lock`; dropping it removes it.
pub struct CacheLock {
    path: PathBuf,
}

impl CacheLock {
    pub fn acquire(dir: &Path) -> Result<CacheLock, CacheError> {
        fs::create_dir_all(dir)?;
        let path = dir.join(".lock");
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(CacheLock { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(CacheError::Locked { path })
            }
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for CacheLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ExportManifest {
    pub year: i32,
    pub countries: usize,
    pub products: usize,
    pub rows: usize,
    pub sha256: String,
}

pub fn export_cache_path(dir: &Path, year: i32) -> PathBuf {
    dir.join(format!("exports_{year}.csv"))
}

/// Cache one year's export matrix under `dir`. Returns the CSV path.
pub fn write_export_matrix(dir: &Path, m: &ExportMatrix) -> Result<PathBuf, CacheError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["country", "product", "value"])?;
    for (c, country) in m.countries.iter().enumerate() {
        for (p, product) in m.products.iter().enumerate() {
            w.write_record([country, product, &format!("{}", m.values[(c, p)])])?;
        }
    }
    let bytes = w.into_inner().expect("vec writer");
    let manifest = ExportManifest {
        year: m.year,
        countries: m.countries.len(),
        products: m.products.len(),
        rows: m.countries.len() * m.products.len(),
        sha256: sha256_hex(&bytes),
    };
    let path = export_cache_path(dir, m.year);
    write_if_changed(&path, &bytes)?;
    write_if_changed(
        &manifest_path(&path),
        &to_pretty_json(&manifest)?,
    )?;
    Ok(path)
}

/// Load one year's export matrix, verifying the manifest checksum and shape.
pub fn read_export_matrix(dir: &Path, year: i32) -> Result<ExportMatrix, CacheError> {
    let path = export_cache_path(dir, year);
    let hint = format!("run `prodspace ingest` covering year {year} first");
    let bytes = read_required(&path, &hint)?;
    let manifest: ExportManifest =
        serde_json::from_slice(&read_required(&manifest_path(&path), &hint)?)?;
    if sha256_hex(&bytes) != manifest.sha256 {
        return Err(CacheError::ChecksumMismatch { path });
    }

    let mut rdr = csv::Reader::from_reader(bytes.as_slice());
    let mut countries: Vec<String> = Vec::new();
    let mut products: Vec<String> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let malformed = |reason: &str| CacheError::Malformed {
            path: path.clone(),
            reason: reason.to_string(),
        };
        if row.len() != 3 {
            return Err(malformed("expected 3 columns"));
        }
        if countries.last().map(String::as_str) != Some(&row[0]) {
            countries.push(row[0].to_string());
        }
        if countries.len() == 1 {
            products.push(row[1].to_string());
        }
        values.push(row[2].parse().map_err(|_| malformed("bad value"))?);
    }
    if countries.len() != manifest.countries
        || products.len() != manifest.products
        || values.len() != manifest.rows
    {
        return Err(CacheError::Malformed {
            path,
            reason: "shape does not match the manifest".into(),
        });
    }
    let values = Array2::from_shape_vec((countries.len(), products.len()), values)
        .map_err(|_| CacheError::Malformed {
            path,
            reason: "row count is not countries x products".into(),
        })?;
    Ok(ExportMatrix {
        year,
        countries,
        products,
        values,
    })
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TileManifest {
    pub rows: usize,
    pub cols: usize,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub sha256: String,
    /// Free-form parameters of whatever produced the tile (threshold, years,
    /// iteration depth, ...).
    pub params: serde_json::Value,
}

fn manifest_path(data_path: &Path) -> PathBuf {
    data_path.with_extension("manifest.json")
}

/// Write a dense matrix as a raw little-endian f64 tile plus manifest.
pub fn write_tile(
    path: &Path,
    row_labels: &[String],
    col_labels: &[String],
    values: &Array2<f64>,
    params: serde_json::Value,
) -> Result<(), CacheError> {
    assert_eq!(values.dim(), (row_labels.len(), col_labels.len()));
    let mut bytes = Vec::with_capacity(values.len() * 8);
    for v in values.iter() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    let manifest = TileManifest {
        rows: row_labels.len(),
        cols: col_labels.len(),
        row_labels: row_labels.to_vec(),
        col_labels: col_labels.to_vec(),
        sha256: sha256_hex(&bytes),
        params,
    };
    write_if_changed(path, &bytes)?;
    write_if_changed(&manifest_path(path), &to_pretty_json(&manifest)?)?;
    Ok(())
}

/// Load a tile and its manifest, verifying checksum and shape.
pub fn read_tile(path: &Path, hint: &str) -> Result<(TileManifest, Array2<f64>), CacheError> {
    let bytes = read_required(path, hint)?;
    let manifest: TileManifest =
        serde_json::from_slice(&read_required(&manifest_path(path), hint)?)?;
    if sha256_hex(&bytes) != manifest.sha256 {
        return Err(CacheError::ChecksumMismatch {
            path: path.to_path_buf(),
        });
    }
    if bytes.len() != manifest.rows * manifest.cols * 8 {
        return Err(CacheError::Malformed {
            path: path.to_path_buf(),
            reason: "byte length does not match the manifest shape".into(),
        });
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let values = Array2::from_shape_vec((manifest.rows, manifest.cols), values)
        .expect("length checked above");
    Ok((manifest, values))
}

/// Serialized sophistication vector plus the convergence report of the run
/// that produced it.
#[derive(Debug, Serialize, Deserialize)]
pub struct SophisticationFile {
    pub products: Vec<String>,
    pub values: Vec<f64>,
    pub defined: Vec<bool>,
    pub depth: usize,
    pub degenerate: bool,
    pub convergence: Option<ConvergenceReport>,
}

pub fn write_sophistication(
    path: &Path,
    s: &SophisticationVector,
    convergence: Option<ConvergenceReport>,
) -> Result<(), CacheError> {
    let file = SophisticationFile {
        products: s.products.clone(),
        values: s.values.clone(),
        defined: s.defined.clone(),
        depth: s.depth,
        degenerate: s.degenerate,
        convergence,
    };
    write_if_changed(path, &to_pretty_json(&file)?)?;
    Ok(())
}

pub fn read_sophistication(
    path: &Path,
    hint: &str,
) -> Result<(SophisticationVector, Option<ConvergenceReport>), CacheError> {
    let file: SophisticationFile = serde_json::from_slice(&read_required(path, hint)?)?;
    Ok((
        SophisticationVector {
            products: file.products,
            values: file.values,
            defined: file.defined,
            depth: file.depth,
            degenerate: file.degenerate,
        },
        file.convergence,
    ))
}

pub fn to_pretty_json<T: Serialize>(value: &T) -> Result<Vec<u8>, CacheError> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}
