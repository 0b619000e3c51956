//! Co-export proximity between products.
//!
//! The proximity of products i and j is the smaller of the two conditional
//! probabilities of exporting one with advantage given the other, which
//! reduces to the co-export count divided by the larger ubiquity. The kernel
//! packs each product's exporter set into 64-bit words so the pairwise
//! counts are popcounts; a full 232-country, 5109-product matrix takes well
//! under a minute.

use ndarray::Array2;
use rayon::prelude::*;

use super::{ubiquity, MMatrix, MetricsError};

/// Symmetric product-by-product proximity, diagonal stored as 1. The
/// diagonal is a storage convention only: density sums and graph edges
/// always exclude it.
#[derive(Debug, Clone, PartialEq)]
pub struct ProximityMatrix {
    pub products: Vec<String>,
    pub values: Array2<f64>,
    /// Set for products whose off-diagonal row is entirely zero.
    pub isolated: Vec<bool>,
}

impl ProximityMatrix {
    pub fn product_index(&self, code: &str) -> Option<usize> {
        self.products
            .binary_search_by(|p| p.as_str().cmp(code))
            .ok()
    }

    /// Off-diagonal row sums, the denominators of every density ratio.
    pub fn neighbor_weight(&self) -> Vec<f64> {
        self.values
            .rows()
            .into_iter()
            .enumerate()
            .map(|(i, row)| row.iter().enumerate().map(|(j, &v)| if i == j { 0.0 } else { v }).sum())
            .collect()
    }

    /// Re-index onto a superset product ordering. Products absent here get
    /// zero rows and columns (and a 1 on the diagonal, per the storage
    /// convention), so they average as zeros across years.
    pub fn aligned_to(&self, products: &[String]) -> Result<ProximityMatrix, MetricsError> {
        let n = products.len();
        let map: Vec<usize> = self
            .products
            .iter()
            .map(|code| {
                products
                    .binary_search(code)
                    .map_err(|_| MetricsError::NotAligned(code.clone()))
            })
            .collect::<Result<_, _>>()?;
        let mut values = Array2::zeros((n, n));
        for i in 0..n {
            values[(i, i)] = 1.0;
        }
        for (oi, &ni) in map.iter().enumerate() {
            for (oj, &nj) in map.iter().enumerate() {
                values[(ni, nj)] = self.values[(oi, oj)];
            }
        }
        Ok(from_values(products.to_vec(), values))
    }
}

fn from_values(products: Vec<String>, values: Array2<f64>) -> ProximityMatrix {
    let isolated = values
        .rows()
        .into_iter()
        .enumerate()
        .map(|(i, row)| {
            row.iter()
                .enumerate()
                .all(|(j, &v)| i == j || v == 0.0)
        })
        .collect();
    ProximityMatrix {
        products,
        values,
        isolated,
    }
}

/// Pairwise proximity of all products in the M-matrix. Pairs where either
/// product has zero ubiquity get proximity 0.
pub fn proximity(m: &MMatrix) -> ProximityMatrix {
    let n_countries = m.countries.len();
    let n = m.products.len();
    let words = n_countries.div_ceil(64).max(1);

    // exporter set of each product, packed by country index
    let mut exporters = vec![0u64; n * words];
    for c in 0..n_countries {
        for p in 0..n {
            if m.bits[(c, p)] {
                exporters[p * words + c / 64] |= 1u64 << (c % 64);
            }
        }
    }
    let ubiq = ubiquity(m);

    let mut values = vec![0.0f64; n * n];
    values
        .par_chunks_mut(n.max(1))
        .enumerate()
        .for_each(|(i, row)| {
            row[i] = 1.0;
            if ubiq[i] == 0 {
                return;
            }
            let wi = &exporters[i * words..(i + 1) * words];
            for (j, slot) in row.iter_mut().enumerate() {
                if j == i || ubiq[j] == 0 {
                    continue;
                }
                let wj = &exporters[j * words..(j + 1) * words];
                let co: u32 = wi.iter().zip(wj).map(|(a, b)| (a & b).count_ones()).sum();
                *slot = co as f64 / ubiq[i].max(ubiq[j]) as f64;
            }
        });

    let values = Array2::from_shape_vec((n, n), values).expect("square shape");
    from_values(m.products.clone(), values)
}

/// Element-wise mean of per-year proximity matrices. All inputs must share
/// one product ordering; align them with
/// [`ProximityMatrix::aligned_to`] first.
pub fn average_proximity(mats: &[ProximityMatrix]) -> Result<ProximityMatrix, MetricsError> {
    let first = mats.first().ok_or(MetricsError::EmptyInput)?;
    if mats.iter().any(|m| m.products != first.products) {
        return Err(MetricsError::OrderingMismatch);
    }
    let mut values = Array2::zeros(first.values.dim());
    for m in mats {
        values += &m.values;
    }
    values /= mats.len() as f64;
    Ok(from_values(first.products.clone(), values))
}
