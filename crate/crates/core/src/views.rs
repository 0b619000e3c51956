//! Country-level views over the metrics: node annotations for the graph
//! (advantage tiers, export sizes and growth, opportunity deciles), the
//! ranked appendix-style tables, and the density/sophistication scatter.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{DensityVector, RcaMatrix, SophisticationVector};
use crate::trade_data::{ExportMatrix, ProductRegistry};

#[derive(Debug, Error)]
pub enum ViewsError {
    #[error("country `{0}` not present")]
    UnknownCountry(String),
    #[error("density vector belongs to `{got}`, not `{want}`")]
    CountryMismatch { want: String, got: String },
    #[error("table size must be positive")]
    BadCount,
    #[error("annotation lists do not share one product ordering")]
    OrderingMismatch,
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// RCA at or above this is a strong (competitive) export.
pub const TIER_STRONG_MIN: f64 = 1.0;
/// RCA at or above this (but under the strong bound) is marginal.
pub const TIER_MARGINAL_MIN: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Strong,
    Marginal,
    Absent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Growth {
    Increased,
    Decreased,
    Flat,
}

/// Per-product annotation attached to graph exports. Views fill the fields
/// they know about; [`merge_annotations`] overlays several views.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeAnnotation {
    pub product: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tier: Option<Tier>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub size_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub growth: Option<Growth>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decile: Option<u8>,
}

impl NodeAnnotation {
    fn bare(product: &str) -> NodeAnnotation {
        NodeAnnotation {
            product: product.to_string(),
            tier: None,
            size_value: None,
            growth: None,
            decile: None,
        }
    }
}

fn tier_for(rca: f64) -> Tier {
    if rca >= TIER_STRONG_MIN {
        Tier::Strong
    } else if rca >= TIER_MARGINAL_MIN {
        Tier::Marginal
    } else {
        Tier::Absent
    }
}

/// Tier every product of the RCA matrix for one country.
pub fn rca_view(country: &str, rca: &RcaMatrix) -> Result<Vec<NodeAnnotation>, ViewsError> {
    let row = rca
        .row(country)
        .ok_or_else(|| ViewsError::UnknownCountry(country.to_string()))?;
    Ok(rca
        .products
        .iter()
        .zip(row)
        .map(|(product, &v)| NodeAnnotation {
            tier: Some(tier_for(v)),
            ..NodeAnnotation::bare(product)
        })
        .collect())
}

/// Size each product by the newer year's export value and mark whether it
/// grew against the base year. Products (or the whole country) missing from
/// the base year compare against zero; byte-equal values are `Flat`.
pub fn export_value_view(
    country: &str,
    base: &ExportMatrix,
    current: &ExportMatrix,
) -> Result<Vec<NodeAnnotation>, ViewsError> {
    let row = current
        .row(country)
        .ok_or_else(|| ViewsError::UnknownCountry(country.to_string()))?;
    let base_row = base.row(country);
    Ok(current
        .products
        .iter()
        .zip(row)
        .map(|(product, &v1)| {
            let v0 = base_row
                .and_then(|r| base.product_index(product).map(|i| r[i]))
                .unwrap_or(0.0);
            let growth = if v1 > v0 {
                Growth::Increased
            } else if v1 < v0 {
                Growth::Decreased
            } else {
                Growth::Flat
            };
            NodeAnnotation {
                size_value: Some(v1),
                growth: Some(growth),
                ..NodeAnnotation::bare(product)
            }
        })
        .collect())
}

/// Decile of the assignment rank among `n` candidates ordered by falling
/// density. Ten or more candidates use balanced rank-quantile bins; fewer
/// spread proportionally across 1..10 so the extremes land on 1 and 10.
fn decile_for(rank: usize, n: usize) -> u8 {
    if n >= 10 {
        (1 + rank * 10 / n) as u8
    } else if n == 1 {
        1
    } else {
        (1.0 + 9.0 * rank as f64 / (n - 1) as f64).round() as u8
    }
}

/// Decile products the country does not yet export (RCA below `cutoff`) by
/// how dense their neighborhood already is: decile 1 is the closest tenth.
/// Products at or above the cutoff are tiered but carry no decile.
pub fn opportunities_view(
    country: &str,
    densities: &DensityVector,
    rca: &RcaMatrix,
    cutoff: f64,
) -> Result<Vec<NodeAnnotation>, ViewsError> {
    if densities.country != country {
        return Err(ViewsError::CountryMismatch {
            want: country.to_string(),
            got: densities.country.clone(),
        });
    }
    if rca.country_index(country).is_none() {
        return Err(ViewsError::UnknownCountry(country.to_string()));
    }
    let rca_row = rca.row(country).expect("checked above");
    let rca_of = |product: &str| {
        rca.product_index(product)
            .map(|i| rca_row[i])
            .unwrap_or(0.0)
    };

    let mut eligible: Vec<usize> = (0..densities.products.len())
        .filter(|&i| rca_of(&densities.products[i]) < cutoff)
        .collect();
    eligible.sort_by(|&a, &b| {
        densities.values[b]
            .total_cmp(&densities.values[a])
            .then_with(|| densities.products[a].cmp(&densities.products[b]))
    });
    let mut decile_of: BTreeMap<&str, u8> = BTreeMap::new();
    let n = eligible.len();
    for (rank, &i) in eligible.iter().enumerate() {
        decile_of.insert(densities.products[i].as_str(), decile_for(rank, n));
    }

    Ok(densities
        .products
        .iter()
        .map(|product| NodeAnnotation {
            tier: Some(tier_for(rca_of(product))),
            decile: decile_of.get(product.as_str()).copied(),
            ..NodeAnnotation::bare(product)
        })
        .collect())
}

/// Re-index annotations onto a product universe (typically the graph's node
/// list). Products the view never saw come out with only their code set.
pub fn align_annotations(
    annotations: Vec<NodeAnnotation>,
    universe: &[String],
) -> Vec<NodeAnnotation> {
    let mut by_product: BTreeMap<String, NodeAnnotation> = annotations
        .into_iter()
        .map(|a| (a.product.clone(), a))
        .collect();
    universe
        .iter()
        .map(|p| {
            by_product
                .remove(p)
                .unwrap_or_else(|| NodeAnnotation::bare(p))
        })
        .collect()
}

/// Overlay several aligned annotation lists; the first view to claim a field
/// wins. All lists must share one product ordering.
pub fn merge_annotations(
    views: Vec<Vec<NodeAnnotation>>,
) -> Result<Vec<NodeAnnotation>, ViewsError> {
    let mut iter = views.into_iter();
    let mut merged = iter.next().ok_or(ViewsError::OrderingMismatch)?;
    for overlay in iter {
        if overlay.len() != merged.len() {
            return Err(ViewsError::OrderingMismatch);
        }
        for (m, o) in merged.iter_mut().zip(overlay) {
            if m.product != o.product {
                return Err(ViewsError::OrderingMismatch);
            }
            m.tier = m.tier.or(o.tier);
            m.size_value = m.size_value.or(o.size_value);
            m.growth = m.growth.or(o.growth);
            m.decile = m.decile.or(o.decile);
        }
    }
    Ok(merged)
}

/// One row of a ranked country table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub rank: usize,
    pub product: String,
    pub name: String,
    pub rca_base: f64,
    pub rca_current: f64,
    pub exports_base: f64,
    pub exports_current: f64,
    /// Share of the country's current-year exports, as a fraction.
    pub share_current: f64,
    pub density: f64,
    pub sophistication: Option<f64>,
}

/// Everything the ranked tables draw on, for one country and a pair of
/// years. Base-year matrices may cover different products than current ones;
/// lookups fall back to zero.
pub struct TableInputs<'a> {
    pub rca_base: &'a RcaMatrix,
    pub rca_current: &'a RcaMatrix,
    pub exports_base: &'a ExportMatrix,
    pub exports_current: &'a ExportMatrix,
    pub density: &'a DensityVector,
    pub sophistication: &'a SophisticationVector,
    pub registry: &'a ProductRegistry,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableSort {
    ExportValue,
    Rca,
}

struct RowSource<'a> {
    country: String,
    inputs: &'a TableInputs<'a>,
    current_row: &'a [f64],
    current_total: f64,
    rca_current_row: &'a [f64],
}

impl<'a> RowSource<'a> {
    fn new(country: &str, inputs: &'a TableInputs<'a>) -> Result<RowSource<'a>, ViewsError> {
        if inputs.density.country != country {
            return Err(ViewsError::CountryMismatch {
                want: country.to_string(),
                got: inputs.density.country.clone(),
            });
        }
        let ci = inputs
            .exports_current
            .country_index(country)
            .ok_or_else(|| ViewsError::UnknownCountry(country.to_string()))?;
        let current_row = inputs
            .exports_current
            .values
            .row(ci)
            .to_slice()
            .expect("row-major layout");
        let rca_current_row = inputs
            .rca_current
            .row(country)
            .ok_or_else(|| ViewsError::UnknownCountry(country.to_string()))?;
        Ok(RowSource {
            country: country.to_string(),
            inputs,
            current_row,
            current_total: current_row.iter().sum(),
            rca_current_row,
        })
    }

    fn exports_current(&self, product: &str) -> f64 {
        self.inputs
            .exports_current
            .product_index(product)
            .map(|i| self.current_row[i])
            .unwrap_or(0.0)
    }

    fn rca_current(&self, product: &str) -> f64 {
        self.inputs
            .rca_current
            .product_index(product)
            .map(|i| self.rca_current_row[i])
            .unwrap_or(0.0)
    }

    fn exports_base(&self, product: &str) -> f64 {
        self.inputs
            .exports_base
            .row(&self.country)
            .and_then(|r| {
                self.inputs
                    .exports_base
                    .product_index(product)
                    .map(|i| r[i])
            })
            .unwrap_or(0.0)
    }

    fn rca_base(&self, product: &str) -> f64 {
        self.inputs
            .rca_base
            .row(&self.country)
            .and_then(|r| self.inputs.rca_base.product_index(product).map(|i| r[i]))
            .unwrap_or(0.0)
    }

    fn row(&self, rank: usize, product: &str) -> TableRow {
        let current = self.exports_current(product);
        TableRow {
            rank,
            product: product.to_string(),
            name: self.inputs.registry.name(product).to_string(),
            rca_base: self.rca_base(product),
            rca_current: self.rca_current(product),
            exports_base: self.exports_base(product),
            exports_current: current,
            share_current: if self.current_total > 0.0 {
                current / self.current_total
            } else {
                0.0
            },
            density: self.inputs.density.value(product).unwrap_or(0.0),
            sophistication: self.inputs.sophistication.value(product),
        }
    }
}

/// The country's top `n` currently exported products, ranked by the chosen
/// key (current export value or current RCA); ties break on the HS code.
pub fn top_exports_table(
    country: &str,
    inputs: &TableInputs,
    sort: TableSort,
    n: usize,
) -> Result<Vec<TableRow>, ViewsError> {
    if n == 0 {
        return Err(ViewsError::BadCount);
    }
    let source = RowSource::new(country, inputs)?;
    let mut products: Vec<&String> = inputs.exports_current.products.iter().collect();
    products.sort_by(|a, b| {
        let key = |p: &str| match sort {
            TableSort::ExportValue => source.exports_current(p),
            TableSort::Rca => source.rca_current(p),
        };
        key(b).total_cmp(&key(a)).then_with(|| a.cmp(b))
    });
    Ok(products
        .into_iter()
        .take(n)
        .enumerate()
        .map(|(i, p)| source.row(i + 1, p))
        .collect())
}

/// The country's top `n` unexploited products (current RCA under `cutoff`)
/// ranked by density; optionally keep only products with positive
/// sophistication. The candidate universe is the density vector's product
/// list, so products absent from the current year's exports are in play.
pub fn opportunity_table(
    country: &str,
    inputs: &TableInputs,
    cutoff: f64,
    require_positive_sophistication: bool,
    n: usize,
) -> Result<Vec<TableRow>, ViewsError> {
    if n == 0 {
        return Err(ViewsError::BadCount);
    }
    let source = RowSource::new(country, inputs)?;
    let mut candidates: Vec<(&String, f64)> = inputs
        .density
        .products
        .iter()
        .zip(&inputs.density.values)
        .filter(|(p, _)| source.rca_current(p) < cutoff)
        .filter(|(p, _)| {
            !require_positive_sophistication
                || inputs.sophistication.value(p).is_some_and(|s| s > 0.0)
        })
        .map(|(p, &d)| (p, d))
        .collect();
    candidates.sort_by(|(pa, da), (pb, db)| db.total_cmp(da).then_with(|| pa.cmp(pb)));
    Ok(candidates
        .into_iter()
        .take(n)
        .enumerate()
        .map(|(i, (p, _))| source.row(i + 1, p))
        .collect())
}

/// Emit a ranked table as CSV with the appendix header layout; the year pair
/// fills the column titles.
pub fn write_table_csv(
    rows: &[TableRow],
    year_base: i32,
    year_current: i32,
    w: impl Write,
) -> Result<(), ViewsError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "RANK".to_string(),
        "Product Code (HS-6)".to_string(),
        "Product Name".to_string(),
        format!("RCA {year_base}"),
        format!("RCA {year_current}"),
        format!("Exports {year_base}"),
        format!("Exports {year_current}"),
        format!("Export Share {year_current}"),
        "Density".to_string(),
        "Sophistication".to_string(),
    ])?;
    for row in rows {
        out.write_record([
            row.rank.to_string(),
            row.product.clone(),
            row.name.clone(),
            row.rca_base.to_string(),
            row.rca_current.to_string(),
            row.exports_base.to_string(),
            row.exports_current.to_string(),
            format!("{:.2}%", row.share_current * 100.0),
            row.density.to_string(),
            row.sophistication.map(|s| s.to_string()).unwrap_or_default(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// One basket (a country or a combined region) whose unexploited products
/// feed the scatter. `bits` selects the basket and `rca` gates eligibility;
/// both are aligned to the proximity products.
pub struct ScatterOwner<'a> {
    pub label: &'a str,
    pub bits: &'a [bool],
    pub rca: &'a [f64],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatterPoint {
    pub owner: String,
    pub product: String,
    pub density: f64,
    pub sophistication: Option<f64>,
}

/// Density against sophistication for every product each owner does not yet
/// export (RCA under `cutoff`): the raw material of the opportunity scatter.
pub fn density_sophistication_scatter(
    owners: &[ScatterOwner],
    phi: &crate::metrics::ProximityMatrix,
    sophistication: &SophisticationVector,
    cutoff: f64,
) -> Result<Vec<ScatterPoint>, ViewsError> {
    let mut points = Vec::new();
    for owner in owners {
        let dens = crate::metrics::density(owner.label, owner.bits, phi)
            .map_err(|_| ViewsError::OrderingMismatch)?;
        if owner.rca.len() != phi.products.len() {
            return Err(ViewsError::OrderingMismatch);
        }
        for (i, product) in phi.products.iter().enumerate() {
            if owner.rca[i] >= cutoff {
                continue;
            }
            points.push(ScatterPoint {
                owner: owner.label.to_string(),
                product: product.clone(),
                density: dens.values[i],
                sophistication: sophistication.value(product),
            });
        }
    }
    Ok(points)
}

pub fn write_scatter_csv(points: &[ScatterPoint], w: impl Write) -> Result<(), ViewsError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["owner", "hs6", "density", "sophistication"])?;
    for p in points {
        out.write_record([
            p.owner.clone(),
            p.product.clone(),
            p.density.to_string(),
            p.sophistication.map(|s| s.to_string()).unwrap_or_default(),
        ])?;
    }
    out.flush()?;
    Ok(())
}
