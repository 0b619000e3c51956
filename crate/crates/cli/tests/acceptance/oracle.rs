//! Naive reference implementations used to cross-check the production kernels.
//!
//! Everything here is written straight from the definitions with plain loops and
//! owned `Vec`s, sharing no code with the library under test. Where the library
//! has a choice of evaluation order, the oracle deliberately picks a different
//! one (e.g. RCA as `x*T / (rowsum*colsum)` instead of a ratio of shares), so
//! agreement within tolerance is evidence and not an echo.

/// RCA as (x_cp * grand_total) / (row_total_c * col_total_p); zero when either
/// marginal total is zero.
pub fn rca(x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let rows = x.len();
    let cols = if rows == 0 { 0 } else { x[0].len() };
    let mut row_tot = vec![0.0f64; rows];
    let mut col_tot = vec![0.0f64; cols];
    let mut grand = 0.0f64;
    for (c, row) in x.iter().enumerate() {
        for (p, &v) in row.iter().enumerate() {
            row_tot[c] += v;
            col_tot[p] += v;
            grand += v;
        }
    }
    let mut out = vec![vec![0.0f64; cols]; rows];
    for c in 0..rows {
        for p in 0..cols {
            if row_tot[c] > 0.0 && col_tot[p] > 0.0 {
                out[c][p] = x[c][p] * grand / (row_tot[c] * col_tot[p]);
            }
        }
    }
    out
}

/// Inclusive binarization: entry set when rca >= threshold.
pub fn binarize(rca: &[Vec<f64>], threshold: f64) -> Vec<Vec<bool>> {
    rca.iter()
        .map(|row| row.iter().map(|&v| v >= threshold).collect())
        .collect()
}

/// Row sums of the binary matrix (products per country).
pub fn diversification(m: &[Vec<bool>]) -> Vec<u32> {
    m.iter()
        .map(|row| row.iter().filter(|&&b| b).count() as u32)
        .collect()
}

/// Column sums of the binary matrix (countries per product).
pub fn ubiquity(m: &[Vec<bool>]) -> Vec<u32> {
    let cols = if m.is_empty() { 0 } else { m[0].len() };
    (0..cols)
        .map(|p| m.iter().filter(|row| row[p]).count() as u32)
        .collect()
}

/// Proximity as the minimum of the two conditional probabilities
/// P(i|j) = co/u_j and P(j|i) = co/u_i, computed separately and then min'd.
/// Zero when either ubiquity is zero; diagonal stored as 1.
pub fn proximity(m: &[Vec<bool>]) -> Vec<Vec<f64>> {
    let cols = if m.is_empty() { 0 } else { m[0].len() };
    let ubiq = ubiquity(m);
    let mut out = vec![vec![0.0f64; cols]; cols];
    for i in 0..cols {
        out[i][i] = 1.0;
        for j in 0..cols {
            if i == j {
                continue;
            }
            if ubiq[i] == 0 || ubiq[j] == 0 {
                continue;
            }
            let co = m.iter().filter(|row| row[i] && row[j]).count() as f64;
            let p_i_given_j = co / ubiq[j] as f64;
            let p_j_given_i = co / ubiq[i] as f64;
            out[i][j] = p_i_given_j.min(p_j_given_i);
        }
    }
    out
}

/// Density of every (country, product) cell: the proximity-weighted share of
/// product p's neighborhood already covered by country c's export set, with
/// the diagonal excluded from both sums. Zero-denominator cells yield 0.
pub fn density(m: &[Vec<bool>], phi: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let mut out = vec![vec![0.0f64; cols]; rows];
    for c in 0..rows {
        for p in 0..cols {
            let mut num = 0.0f64;
            let mut den = 0.0f64;
            for j in 0..cols {
                if j == p {
                    continue;
                }
                if m[c][j] {
                    num += phi[p][j];
                }
                den += phi[p][j];
            }
            if den > 0.0 {
                out[c][p] = num / den;
            }
        }
    }
    out
}

/// Outcome of the naive reflections recursion on the filtered matrix.
pub struct ReflectionsOracle {
    /// Indices (into the original matrix) of countries kept after filtering.
    pub kept_countries: Vec<usize>,
    /// Indices of products kept after filtering.
    pub kept_products: Vec<usize>,
    /// k_c levels 0..=n, each aligned to `kept_countries`.
    pub k_country: Vec<Vec<f64>>,
    /// k_p levels 0..=n, each aligned to `kept_products`.
    pub k_product: Vec<Vec<f64>>,
}

/// Method-of-reflections recursion, written as the direct double loop over the
/// matrix with empty rows and columns dropped first.
pub fn reflections(m: &[Vec<bool>], n: usize) -> ReflectionsOracle {
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let kept_countries: Vec<usize> = (0..rows).filter(|&c| m[c].iter().any(|&b| b)).collect();
    let kept_products: Vec<usize> = (0..cols)
        .filter(|&p| m.iter().any(|row| row[p]))
        .collect();
    let sub: Vec<Vec<bool>> = kept_countries
        .iter()
        .map(|&c| kept_products.iter().map(|&p| m[c][p]).collect())
        .collect();
    let nc = kept_countries.len();
    let np = kept_products.len();
    let mut k_country = vec![vec![0.0f64; nc]];
    let mut k_product = vec![vec![0.0f64; np]];
    for c in 0..nc {
        k_country[0][c] = sub[c].iter().filter(|&&b| b).count() as f64;
    }
    for p in 0..np {
        k_product[0][p] = sub.iter().filter(|row| row[p]).count() as f64;
    }
    for level in 1..=n {
        let prev_c = &k_country[level - 1];
        let prev_p = &k_product[level - 1];
        let mut next_c = vec![0.0f64; nc];
        let mut next_p = vec![0.0f64; np];
        for c in 0..nc {
            let mut sum = 0.0f64;
            for p in 0..np {
                if sub[c][p] {
                    sum += prev_p[p];
                }
            }
            next_c[c] = sum / k_country[0][c];
        }
        for p in 0..np {
            let mut sum = 0.0f64;
            for c in 0..nc {
                if sub[c][p] {
                    sum += prev_c[c];
                }
            }
            next_p[p] = sum / k_product[0][p];
        }
        k_country.push(next_c);
        k_product.push(next_p);
    }
    ReflectionsOracle {
        kept_countries,
        kept_products,
        k_country,
        k_product,
    }
}
