//! The matrix family derived from an export matrix: revealed comparative
//! advantage (RCA), the binary M-matrix of who competitively exports what,
//! co-export proximity between products, the density of a country's basket
//! around each product, and the method-of-reflections recursion with its
//! z-scored sophistication index.

mod density;
mod proximity;
mod reflections;

pub use density::{density, density_all, DensityVector};
pub use proximity::{average_proximity, proximity, ProximityMatrix};
pub use reflections::{
    reflections, sophistication, ConvergenceReport, ReflectionsState, SophisticationVector,
};

use ndarray::Array2;
use thiserror::Error;

use crate::trade_data::ExportMatrix;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("matrix world total is zero")]
    AllZeroMatrix,
    #[error("country `{0}` not present")]
    UnknownCountry(String),
    #[error("binarization threshold must be a positive finite number, got {0}")]
    BadThreshold(f64),
    #[error("expected {expected} products, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("inputs do not share one product ordering")]
    OrderingMismatch,
    #[error("empty input list")]
    EmptyInput,
    #[error("product `{0}` missing from the target ordering")]
    NotAligned(String),
    #[error("matrix is empty after removing zero rows and columns")]
    EmptyAfterFilter,
    #[error("reflections depth must be at least {0}")]
    BadDepth(usize),
}

/// Revealed comparative advantage per (country, product): the country's
/// export share in the product over the product's share of world trade.
#[derive(Debug, Clone, PartialEq)]
pub struct RcaMatrix {
    pub year: i32,
    pub countries: Vec<String>,
    pub products: Vec<String>,
    pub values: Array2<f64>,
    /// Flags countries whose total exports were zero (their row is all zero).
    pub zero_export_countries: Vec<bool>,
    /// Flags products whose world total was zero (their column is all zero).
    pub zero_world_products: Vec<bool>,
}

impl RcaMatrix {
    pub fn country_index(&self, code: &str) -> Option<usize> {
        self.countries
            .binary_search_by(|c| c.as_str().cmp(code))
            .ok()
    }

    pub fn product_index(&self, code: &str) -> Option<usize> {
        self.products
            .binary_search_by(|p| p.as_str().cmp(code))
            .ok()
    }

    pub fn row(&self, country: &str) -> Option<&[f64]> {
        let i = self.country_index(country)?;
        self.values.row(i).to_slice()
    }

    /// Re-index onto a superset product ordering; products absent from this
    /// matrix read as zero RCA and count as zero-world columns.
    pub fn aligned_to(&self, products: &[String]) -> Result<RcaMatrix, MetricsError> {
        let mut values = Array2::zeros((self.countries.len(), products.len()));
        let mut zero_world = vec![true; products.len()];
        for (old, code) in self.products.iter().enumerate() {
            let new = products
                .binary_search(code)
                .map_err(|_| MetricsError::NotAligned(code.clone()))?;
            values.column_mut(new).assign(&self.values.column(old));
            zero_world[new] = self.zero_world_products[old];
        }
        Ok(RcaMatrix {
            year: self.year,
            countries: self.countries.clone(),
            products: products.to_vec(),
            values,
            zero_export_countries: self.zero_export_countries.clone(),
            zero_world_products: zero_world,
        })
    }
}

/// Compute RCA for every cell. Countries with zero total exports and
/// products with zero world totals produce zero rows/columns and are
/// flagged rather than treated as errors; an entirely zero matrix is one.
pub fn rca(m: &ExportMatrix) -> Result<RcaMatrix, MetricsError> {
    // one row-major pass for all three marginals, so a lone country or a
    // lone product shares the grand total's exact additions and its RCA
    // lands on 1 rather than an ulp off the binarization threshold
    let (nc, np) = m.values.dim();
    let mut country_tot = vec![0.0f64; nc];
    let mut world_tot = vec![0.0f64; np];
    let mut grand = 0.0f64;
    for ((c, p), &v) in m.values.indexed_iter() {
        country_tot[c] += v;
        world_tot[p] += v;
        grand += v;
    }
    if grand == 0.0 {
        return Err(MetricsError::AllZeroMatrix);
    }
    let mut values = Array2::zeros(m.values.dim());
    for (c, ct) in country_tot.iter().enumerate() {
        if *ct == 0.0 {
            continue;
        }
        for (p, wt) in world_tot.iter().enumerate() {
            if *wt == 0.0 {
                continue;
            }
            values[(c, p)] = (m.values[(c, p)] / ct) / (wt / grand);
        }
    }
    Ok(RcaMatrix {
        year: m.year,
        countries: m.countries.clone(),
        products: m.products.clone(),
        values,
        zero_export_countries: country_tot.iter().map(|&t| t == 0.0).collect(),
        zero_world_products: world_tot.iter().map(|&t| t == 0.0).collect(),
    })
}

/// A country's export shares across products, summing to 1 unless the
/// country exported nothing at all (then the vector is zero and flagged).
#[derive(Debug, Clone, PartialEq)]
pub struct ExportShares {
    pub country: String,
    pub values: Vec<f64>,
    pub zero_total: bool,
}

pub fn export_shares(m: &ExportMatrix, country: &str) -> Result<ExportShares, MetricsError> {
    let idx = m
        .country_index(country)
        .ok_or_else(|| MetricsError::UnknownCountry(country.to_string()))?;
    let row = m.values.row(idx);
    let total = row.sum();
    let values = if total == 0.0 {
        vec![0.0; row.len()]
    } else {
        row.iter().map(|&v| v / total).collect()
    };
    Ok(ExportShares {
        country: country.to_string(),
        values,
        zero_total: total == 0.0,
    })
}

/// The binary M-matrix: a bit per (country, product) set when RCA clears the
/// threshold. The comparison is inclusive, so a cell exactly at the
/// threshold counts as exported with advantage.
#[derive(Debug, Clone, PartialEq)]
pub struct MMatrix {
    pub year: i32,
    pub countries: Vec<String>,
    pub products: Vec<String>,
    pub threshold: f64,
    pub bits: Array2<bool>,
}

impl MMatrix {
    pub fn country_index(&self, code: &str) -> Option<usize> {
        self.countries
            .binary_search_by(|c| c.as_str().cmp(code))
            .ok()
    }

    /// The country's bit row as a slice (rows of a row-major matrix are
    /// contiguous).
    pub fn row_bits(&self, idx: usize) -> &[bool] {
        self.bits.row(idx).to_slice().expect("row-major layout")
    }

    /// Re-index the bits onto a superset product ordering; products absent
    /// from this matrix come out as zero bits.
    pub fn aligned_to(&self, products: &[String]) -> Result<MMatrix, MetricsError> {
        let mut bits = Array2::from_elem((self.countries.len(), products.len()), false);
        for (old, code) in self.products.iter().enumerate() {
            let new = products
                .binary_search(code)
                .map_err(|_| MetricsError::NotAligned(code.clone()))?;
            for c in 0..self.countries.len() {
                bits[(c, new)] = self.bits[(c, old)];
            }
        }
        Ok(MMatrix {
            year: self.year,
            countries: self.countries.clone(),
            products: products.to_vec(),
            threshold: self.threshold,
            bits,
        })
    }
}

pub fn binarize(r: &RcaMatrix, threshold: f64) -> Result<MMatrix, MetricsError> {
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(MetricsError::BadThreshold(threshold));
    }
    Ok(MMatrix {
        year: r.year,
        countries: r.countries.clone(),
        products: r.products.clone(),
        threshold,
        bits: r.values.mapv(|v| v >= threshold),
    })
}

/// Products exported with advantage per country (row sums of M).
pub fn diversification(m: &MMatrix) -> Vec<u32> {
    m.bits
        .rows()
        .into_iter()
        .map(|row| row.iter().filter(|&&b| b).count() as u32)
        .collect()
}

/// Countries exporting each product with advantage (column sums of M).
pub fn ubiquity(m: &MMatrix) -> Vec<u32> {
    m.bits
        .columns()
        .into_iter()
        .map(|col| col.iter().filter(|&&b| b).count() as u32)
        .collect()
}
