//! Shared command plumbing: the resolved context, the cache directory
//! layout, and the conversions between typed matrices and cached tiles.
//!
//! Tile files carry values only. The derived flags (zero rows and columns on
//! RCA, isolation on proximity) are recomputed on load, which is exact: a
//! zero RCA row happens only for a zero-export country and a zero world
//! column only for an untraded product.

pub mod graph;
pub mod ingest;
pub mod integrate;
pub mod metrics;
pub mod report;
pub mod views;

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use ndarray::Array2;
use serde_json::json;

use prodspace::cache::{self, CacheError};
use prodspace::metrics::{
    ConvergenceReport, DensityVector, MMatrix, ProximityMatrix, RcaMatrix, SophisticationVector,
};
use prodspace::trade_data::{CountryRegistry, ExportMatrix, ProductRegistry};

use crate::config::{FileConfig, RunConfig};

pub struct Ctx {
    pub cfg: RunConfig,
    /// Raw file keys, kept so per-command flags can warn when they displace
    /// a configured value.
    pub file: FileConfig,
}

impl Ctx {
    pub fn exports_dir(&self) -> PathBuf {
        self.cfg.data_dir.join("cache").join("exports")
    }

    pub fn metrics_dir(&self) -> PathBuf {
        self.cfg.data_dir.join("cache").join("metrics")
    }

    pub fn registry_dir(&self) -> PathBuf {
        self.cfg.data_dir.join("cache").join("registry")
    }

    pub fn rca_path(&self, year: i32) -> PathBuf {
        self.metrics_dir().join(format!("rca_{year}.tile"))
    }

    pub fn m_path(&self, year: i32) -> PathBuf {
        self.metrics_dir().join(format!("m_{year}.tile"))
    }

    pub fn phi_year_path(&self, year: i32) -> PathBuf {
        self.metrics_dir().join(format!("proximity_{year}.tile"))
    }

    /// The proximity matrix downstream stages consume (mean over the years
    /// or the pooled-years variant, per config).
    pub fn phi_path(&self) -> PathBuf {
        self.metrics_dir().join("proximity.tile")
    }

    pub fn density_path(&self, year: i32) -> PathBuf {
        self.metrics_dir().join(format!("density_{year}.tile"))
    }

    pub fn sophistication_path(&self) -> PathBuf {
        self.metrics_dir().join("sophistication.json")
    }

    pub fn read_exports(&self, year: i32) -> Result<ExportMatrix, CacheError> {
        cache::read_export_matrix(&self.exports_dir(), year)
    }

    pub fn write_rca(&self, r: &RcaMatrix) -> Result<(), CacheError> {
        cache::write_tile(
            &self.rca_path(r.year),
            &r.countries,
            &r.products,
            &r.values,
            json!({"kind": "rca", "year": r.year}),
        )
    }

    pub fn read_rca(&self, year: i32) -> Result<RcaMatrix, CacheError> {
        let hint = "run `prodspace metrics --stage rca` first";
        let (manifest, values) = cache::read_tile(&self.rca_path(year), hint)?;
        Ok(rca_from_tile(year, manifest, values))
    }

    pub fn write_m(&self, m: &MMatrix) -> Result<(), CacheError> {
        let values = m.bits.mapv(|b| if b { 1.0 } else { 0.0 });
        cache::write_tile(
            &self.m_path(m.year),
            &m.countries,
            &m.products,
            &values,
            json!({"kind": "m", "year": m.year, "threshold": m.threshold}),
        )
    }

    pub fn read_m(&self, year: i32) -> Result<MMatrix> {
        let hint = "run `prodspace metrics --stage m` first";
        let path = self.m_path(year);
        let (manifest, values) = cache::read_tile(&path, hint)?;
        let threshold = manifest.params["threshold"]
            .as_f64()
            .ok_or_else(|| CacheError::Malformed {
                path,
                reason: "manifest params lack a threshold".into(),
            })?;
        Ok(MMatrix {
            year,
            countries: manifest.row_labels,
            products: manifest.col_labels,
            threshold,
            bits: values.mapv(|v| v != 0.0),
        })
    }

    pub fn write_phi(&self, path: &Path, phi: &ProximityMatrix, params: serde_json::Value) -> Result<(), CacheError> {
        cache::write_tile(path, &phi.products, &phi.products, &phi.values, params)
    }

    pub fn read_phi(&self) -> Result<ProximityMatrix, CacheError> {
        let hint = "run `prodspace metrics --stage proximity` first";
        let (manifest, values) = cache::read_tile(&self.phi_path(), hint)?;
        Ok(phi_from_tile(manifest.col_labels, values))
    }

    pub fn write_density(&self, year: i32, all: &[DensityVector]) -> Result<(), CacheError> {
        let countries: Vec<String> = all.iter().map(|d| d.country.clone()).collect();
        let products = all[0].products.clone();
        let mut values = Array2::zeros((countries.len(), products.len()));
        for (c, d) in all.iter().enumerate() {
            for (p, &v) in d.values.iter().enumerate() {
                values[(c, p)] = v;
            }
        }
        cache::write_tile(
            &self.density_path(year),
            &countries,
            &products,
            &values,
            json!({"kind": "density", "year": year, "isolated": all[0].isolated}),
        )
    }

    pub fn read_density(&self, year: i32, country: &str) -> Result<DensityVector> {
        let hint = "run `prodspace metrics --stage density` first";
        let path = self.density_path(year);
        let (manifest, values) = cache::read_tile(&path, hint)?;
        let row = manifest
            .row_labels
            .binary_search_by(|c| c.as_str().cmp(country))
            .map_err(|_| {
                anyhow::anyhow!(
                    "country `{country}` is not in the {year} density cache; \
                     re-run `prodspace metrics` if it entered the data later"
                )
            })?;
        let isolated: Vec<bool> = serde_json::from_value(manifest.params["isolated"].clone())
            .map_err(|_| CacheError::Malformed {
                path,
                reason: "manifest params lack isolation flags".into(),
            })?;
        Ok(DensityVector {
            country: country.to_string(),
            products: manifest.col_labels,
            values: values.row(row).to_vec(),
            isolated,
        })
    }

    pub fn read_sophistication(
        &self,
    ) -> Result<(SophisticationVector, Option<ConvergenceReport>), CacheError> {
        cache::read_sophistication(
            &self.sophistication_path(),
            "run `prodspace metrics --stage sophistication` first",
        )
    }

    /// Product names, or an empty registry when none were ingested.
    pub fn product_registry(&self) -> Result<ProductRegistry> {
        let path = self.registry_dir().join("products.csv");
        match std::fs::read(&path) {
            Ok(bytes) => ProductRegistry::from_reader(bytes.as_slice())
                .with_context(|| format!("reading {}", path.display())),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                Ok(ProductRegistry::default())
            }
            Err(e) => Err(e).with_context(|| format!("reading {}", path.display())),
        }
    }

    pub fn country_registry(&self) -> Result<Option<CountryRegistry>> {
        let path = self.registry_dir().join("countries.csv");
        match std::fs::read(&path) {
            Ok(bytes) => Ok(Some(
                CountryRegistry::from_reader(bytes.as_slice())
                    .with_context(|| format!("reading {}", path.display()))?,
            )),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e).with_context(|| format!("reading {}", path.display())),
        }
    }
}

fn rca_from_tile(year: i32, manifest: cache::TileManifest, values: Array2<f64>) -> RcaMatrix {
    let zero_export_countries = values
        .rows()
        .into_iter()
        .map(|r| r.iter().all(|&v| v == 0.0))
        .collect();
    let zero_world_products = values
        .columns()
        .into_iter()
        .map(|c| c.iter().all(|&v| v == 0.0))
        .collect();
    RcaMatrix {
        year,
        countries: manifest.row_labels,
        products: manifest.col_labels,
        values,
        zero_export_countries,
        zero_world_products,
    }
}

fn phi_from_tile(products: Vec<String>, values: Array2<f64>) -> ProximityMatrix {
    let isolated = values
        .rows()
        .into_iter()
        .enumerate()
        .map(|(i, row)| row.iter().enumerate().all(|(j, &v)| i == j || v == 0.0))
        .collect();
    ProximityMatrix {
        products,
        values,
        isolated,
    }
}
