//! The method of reflections and the sophistication index derived from it.
//!
//! Starting from diversification (k_c,0) and ubiquity (k_p,0), each
//! iteration averages the other side's previous values over the bipartite
//! links: k_c,N is the mean of k_p,N-1 across the country's products and
//! vice versa. Countries and products with no links are removed before the
//! recursion so the averages are always well defined.

use serde::{Deserialize, Serialize};

use super::{MMatrix, MetricsError};

/// All iteration levels of the recursion on the filtered matrix.
/// `k_country[n]` and `k_product[n]` hold level n, aligned to the filtered
/// `countries` / `products` orderings.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionsState {
    pub countries: Vec<String>,
    pub products: Vec<String>,
    pub removed_countries: Vec<String>,
    pub removed_products: Vec<String>,
    pub k_country: Vec<Vec<f64>>,
    pub k_product: Vec<Vec<f64>>,
}

impl ReflectionsState {
    pub fn depth(&self) -> usize {
        self.k_country.len() - 1
    }

    /// How much the product ranking still moves at the end of the run:
    /// level N against level N-2 (same parity, so like is compared with
    /// like). `None` when fewer than two iterations were run.
    pub fn convergence(&self) -> Option<ConvergenceReport> {
        let n = self.depth();
        if n < 2 {
            return None;
        }
        let newer = average_ranks(&self.k_product[n]);
        let older = average_ranks(&self.k_product[n - 2]);
        let count = newer.len();
        let mean_rank_shift = if count == 0 {
            0.0
        } else {
            newer
                .iter()
                .zip(&older)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
                / count as f64
                / count as f64
        };
        Some(ConvergenceReport {
            depth: n,
            spearman: spearman(&self.k_product[n], &self.k_product[n - 2]),
            mean_rank_shift,
        })
    }
}

/// Rank stability of the last two same-parity iterations. `mean_rank_shift`
/// is the mean absolute rank displacement divided by the product count, so 0
/// means the ordering froze.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub depth: usize,
    pub spearman: f64,
    pub mean_rank_shift: f64,
}

/// Run the recursion to the given depth (number of iterations beyond the
/// level-0 counts). Zero rows and columns are removed first; a matrix with
/// nothing left is an error.
pub fn reflections(m: &MMatrix, depth: usize) -> Result<ReflectionsState, MetricsError> {
    let keep_c: Vec<usize> = (0..m.countries.len())
        .filter(|&c| m.bits.row(c).iter().any(|&b| b))
        .collect();
    let keep_p: Vec<usize> = (0..m.products.len())
        .filter(|&p| m.bits.column(p).iter().any(|&b| b))
        .collect();
    if keep_c.is_empty() || keep_p.is_empty() {
        return Err(MetricsError::EmptyAfterFilter);
    }

    let sub: Vec<Vec<bool>> = keep_c
        .iter()
        .map(|&c| keep_p.iter().map(|&p| m.bits[(c, p)]).collect())
        .collect();
    let nc = keep_c.len();
    let np = keep_p.len();

    let k_c0: Vec<f64> = sub
        .iter()
        .map(|row| row.iter().filter(|&&b| b).count() as f64)
        .collect();
    let k_p0: Vec<f64> = (0..np)
        .map(|p| sub.iter().filter(|row| row[p]).count() as f64)
        .collect();

    let mut k_country = vec![k_c0];
    let mut k_product = vec![k_p0];
    for _ in 0..depth {
        let prev_c = k_country.last().unwrap();
        let prev_p = k_product.last().unwrap();
        let mut next_c = vec![0.0; nc];
        let mut next_p = vec![0.0; np];
        for (c, row) in sub.iter().enumerate() {
            let sum: f64 = row
                .iter()
                .zip(prev_p)
                .filter(|(&b, _)| b)
                .map(|(_, &k)| k)
                .sum();
            next_c[c] = sum / k_country[0][c];
        }
        for p in 0..np {
            let sum: f64 = sub
                .iter()
                .zip(prev_c)
                .filter(|(row, _)| row[p])
                .map(|(_, &k)| k)
                .sum();
            next_p[p] = sum / k_product[0][p];
        }
        k_country.push(next_c);
        k_product.push(next_p);
    }

    Ok(ReflectionsState {
        countries: keep_c.iter().map(|&c| m.countries[c].clone()).collect(),
        products: keep_p.iter().map(|&p| m.products[p].clone()).collect(),
        removed_countries: (0..m.countries.len())
            .filter(|c| !keep_c.contains(c))
            .map(|c| m.countries[c].clone())
            .collect(),
        removed_products: (0..m.products.len())
            .filter(|p| !keep_p.contains(p))
            .map(|p| m.products[p].clone())
            .collect(),
        k_country,
        k_product,
    })
}

/// Product sophistication: the level-`depth` product reflections, z-scored
/// with the population standard deviation, sign-pinned so the result
/// correlates non-negatively with the level-1 values (average exporter
/// diversification). Products removed by the zero filter stay in the output
/// with `defined` unset.
#[derive(Debug, Clone, PartialEq)]
pub struct SophisticationVector {
    pub products: Vec<String>,
    pub values: Vec<f64>,
    pub defined: Vec<bool>,
    pub depth: usize,
    /// Set when the level had zero variance; all defined values are 0.
    pub degenerate: bool,
}

impl SophisticationVector {
    pub fn value(&self, code: &str) -> Option<f64> {
        let i = self
            .products
            .binary_search_by(|p| p.as_str().cmp(code))
            .ok()?;
        self.defined[i].then_some(self.values[i])
    }
}

pub fn sophistication(m: &MMatrix, depth: usize) -> Result<SophisticationVector, MetricsError> {
    if depth < 1 {
        return Err(MetricsError::BadDepth(1));
    }
    let state = reflections(m, depth)?;
    let level = &state.k_product[depth];

    let mean = level.iter().sum::<f64>() / level.len() as f64;
    let sd = population_std(level, mean);
    let degenerate = sd == 0.0;
    let mut z: Vec<f64> = if degenerate {
        vec![0.0; level.len()]
    } else {
        level.iter().map(|&k| (k - mean) / sd).collect()
    };
    if !degenerate && pearson(level, &state.k_product[1]) < 0.0 {
        for v in &mut z {
            *v = -*v;
        }
    }

    let mut values = vec![0.0; m.products.len()];
    let mut defined = vec![false; m.products.len()];
    for (filtered_idx, code) in state.products.iter().enumerate() {
        let full_idx = m
            .products
            .binary_search(code)
            .expect("filtered products come from m");
        values[full_idx] = z[filtered_idx];
        defined[full_idx] = true;
    }
    Ok(SophisticationVector {
        products: m.products.clone(),
        values,
        defined,
        depth,
        degenerate,
    })
}

fn population_std(values: &[f64], mean: f64) -> f64 {
    let var = values.iter().map(|&v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
    var.sqrt()
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        cov += (a - mx) * (b - my);
        vx += (a - mx).powi(2);
        vy += (b - my).powi(2);
    }
    if vx == 0.0 || vy == 0.0 {
        return 0.0;
    }
    cov / (vx * vy).sqrt()
}

/// Ranks with ties averaged, 1-based.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation; 1.0 when both sides are constant (no ranking
/// to disagree about), 0.0 when only one is.
fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let constant = |v: &[f64]| v.iter().all(|&a| a == v[0]);
    if x.is_empty() || (constant(x) && constant(y)) {
        return 1.0;
    }
    pearson(&average_ranks(x), &average_ranks(y))
}
