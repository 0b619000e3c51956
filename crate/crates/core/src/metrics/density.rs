//! Density: how much of each product's proximity neighborhood a country's
//! export basket already covers.
//!
//! For a country with bit row m and proximity matrix phi, the density at
//! product p is sum(m_j * phi_pj, j != p) / sum(phi_pj, j != p). A product
//! with an all-zero neighborhood has no meaningful ratio; it gets density 0
//! and an isolated flag instead of an error.

use rayon::prelude::*;

use super::{MMatrix, MetricsError, ProximityMatrix};

/// Density of one country's basket around every product.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityVector {
    pub country: String,
    pub products: Vec<String>,
    pub values: Vec<f64>,
    /// Set where the product's proximity neighborhood is empty (density 0).
    pub isolated: Vec<bool>,
}

impl DensityVector {
    pub fn product_index(&self, code: &str) -> Option<usize> {
        self.products
            .binary_search_by(|p| p.as_str().cmp(code))
            .ok()
    }

    pub fn value(&self, code: &str) -> Option<f64> {
        self.product_index(code).map(|i| self.values[i])
    }
}

fn kernel(bits: &[bool], phi: &ProximityMatrix, denom: &[f64]) -> (Vec<f64>, Vec<bool>) {
    let n = denom.len();
    let mut acc = vec![0.0f64; n];
    for (j, &set) in bits.iter().enumerate() {
        if !set {
            continue;
        }
        let row = phi.values.row(j);
        let row = row.to_slice().expect("row-major layout");
        for (a, &v) in acc.iter_mut().zip(row) {
            *a += v;
        }
    }
    let mut values = vec![0.0f64; n];
    let mut isolated = vec![false; n];
    for p in 0..n {
        if denom[p] == 0.0 {
            isolated[p] = true;
            continue;
        }
        // the basket sum picked up the stored diagonal 1 whenever p itself
        // is in the basket; both sums must exclude it
        let num = acc[p] - if bits[p] { 1.0 } else { 0.0 };
        // summation order can push the ratio an ulp past the unit interval
        values[p] = (num / denom[p]).clamp(0.0, 1.0);
    }
    (values, isolated)
}

/// Density of `bits` (a country's M row aligned to `phi.products`) around
/// every product.
pub fn density(
    country: &str,
    bits: &[bool],
    phi: &ProximityMatrix,
) -> Result<DensityVector, MetricsError> {
    if bits.len() != phi.products.len() {
        return Err(MetricsError::DimensionMismatch {
            expected: phi.products.len(),
            got: bits.len(),
        });
    }
    let denom = phi.neighbor_weight();
    let (values, isolated) = kernel(bits, phi, &denom);
    Ok(DensityVector {
        country: country.to_string(),
        products: phi.products.clone(),
        values,
        isolated,
    })
}

/// Density for every country in the M-matrix at once, sharing the
/// denominator work. The M-matrix must already be aligned to `phi.products`.
pub fn density_all(
    m: &MMatrix,
    phi: &ProximityMatrix,
) -> Result<Vec<DensityVector>, MetricsError> {
    if m.products != phi.products {
        return Err(MetricsError::OrderingMismatch);
    }
    let denom = phi.neighbor_weight();
    Ok((0..m.countries.len())
        .into_par_iter()
        .map(|c| {
            let (values, isolated) = kernel(m.row_bits(c), phi, &denom);
            DensityVector {
                country: m.countries[c].clone(),
                products: phi.products.clone(),
                values,
                isolated,
            }
        })
        .collect())
}
