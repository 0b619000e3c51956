//! Regional-integration scenarios: combine several countries into one
//! notional exporter, measure how much closer the merged basket moves each
//! member to products it does not yet export, and decompose the winners by
//! sector.

use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::{density, rca, MetricsError, MMatrix, ProximityMatrix, RcaMatrix};
use crate::trade_data::{classify_sector, ExportMatrix, ProductRegistry, SectorClass};

#[derive(Debug, Error)]
pub enum IntegrationError {
    #[error("a scenario needs at least two member countries")]
    TooFewMembers,
    #[error("member `{0}` appears twice")]
    DuplicateMember(String),
    #[error("country `{0}` not present")]
    UnknownCountry(String),
    #[error("region label `{0}` collides with an existing country")]
    LabelCollision(String),
    #[error("inputs are not aligned to one product list")]
    NotAligned,
    #[error("regional basket is missing the member product `{0}`")]
    NotSuperset(String),
    #[error("candidate cutoff must be a positive finite value")]
    BadCutoff,
    #[error("no such scenario mode `{0}` (expected max-rca or pooled-exports)")]
    BadMode(String),
    #[error("ranking size must be positive")]
    BadCount,
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// How the member baskets become one regional exporter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioMode {
    /// The region claims a product when any member does: regional RCA is the
    /// elementwise maximum over members.
    MaxRca,
    /// Member export rows are summed into a single exporter before RCA is
    /// recomputed against unchanged world totals.
    PooledExports,
}

impl FromStr for ScenarioMode {
    type Err = IntegrationError;

    fn from_str(s: &str) -> Result<ScenarioMode, IntegrationError> {
        match s.to_ascii_lowercase().as_str() {
            "max-rca" | "max_rca" | "maxrca" => Ok(ScenarioMode::MaxRca),
            "pooled" | "pooled-exports" | "pooled_exports" => Ok(ScenarioMode::PooledExports),
            other => Err(IntegrationError::BadMode(other.to_string())),
        }
    }
}

pub const DEFAULT_CANDIDATE_CUTOFF: f64 = 0.5;
pub const DEFAULT_TOP_N: usize = 150;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    /// Name the combined exporter goes by in outputs.
    pub label: String,
    pub members: Vec<String>,
    pub mode: ScenarioMode,
    /// Members only count gains on products they export below this RCA.
    pub candidate_cutoff: f64,
    /// Ranking length per member.
    pub top_n: usize,
}

impl ScenarioSpec {
    pub fn new(label: &str, members: &[&str], mode: ScenarioMode) -> ScenarioSpec {
        ScenarioSpec {
            label: label.to_string(),
            members: members.iter().map(|m| m.to_string()).collect(),
            mode,
            candidate_cutoff: DEFAULT_CANDIDATE_CUTOFF,
            top_n: DEFAULT_TOP_N,
        }
    }

    fn validate(&self) -> Result<(), IntegrationError> {
        if self.members.len() < 2 {
            return Err(IntegrationError::TooFewMembers);
        }
        let mut seen = std::collections::BTreeSet::new();
        for m in &self.members {
            if !seen.insert(m) {
                return Err(IntegrationError::DuplicateMember(m.clone()));
            }
        }
        if !(self.candidate_cutoff > 0.0 && self.candidate_cutoff.is_finite()) {
            return Err(IntegrationError::BadCutoff);
        }
        if self.top_n == 0 {
            return Err(IntegrationError::BadCount);
        }
        Ok(())
    }
}

/// Elementwise maximum of the members' RCA rows.
pub fn combine_max_rca(r: &RcaMatrix, members: &[String]) -> Result<Vec<f64>, IntegrationError> {
    let mut combined = vec![0.0; r.products.len()];
    for member in members {
        let row = r
            .row(member)
            .ok_or_else(|| IntegrationError::UnknownCountry(member.clone()))?;
        for (c, &v) in combined.iter_mut().zip(row) {
            *c = f64::max(*c, v);
        }
    }
    Ok(combined)
}

/// Replace the member rows with a single summed row labelled `label`. The
/// column sums are untouched, so world totals and every other country's RCA
/// stay what they were.
pub fn combine_pooled_exports(
    exports: &ExportMatrix,
    members: &[String],
    label: &str,
) -> Result<ExportMatrix, IntegrationError> {
    let mut member_rows = Vec::with_capacity(members.len());
    for member in members {
        member_rows.push(
            exports
                .country_index(member)
                .ok_or_else(|| IntegrationError::UnknownCountry(member.clone()))?,
        );
    }
    let mut countries: Vec<String> = exports
        .countries
        .iter()
        .filter(|c| !members.contains(c))
        .cloned()
        .collect();
    if countries.iter().any(|c| c == label) {
        return Err(IntegrationError::LabelCollision(label.to_string()));
    }
    let insert_at = countries
        .binary_search(&label.to_string())
        .expect_err("collision checked above");
    countries.insert(insert_at, label.to_string());

    let mut values = ndarray::Array2::zeros((countries.len(), exports.products.len()));
    for (new_row, country) in countries.iter().enumerate() {
        if country == label {
            for &old in &member_rows {
                let row = exports.values.row(old);
                values
                    .row_mut(new_row)
                    .iter_mut()
                    .zip(row)
                    .for_each(|(v, &x)| *v += x);
            }
        } else {
            let old = exports.country_index(country).expect("kept country");
            values.row_mut(new_row).assign(&exports.values.row(old));
        }
    }
    Ok(ExportMatrix {
        year: exports.year,
        countries,
        products: exports.products.clone(),
        values,
    })
}

/// Member and regional densities over one product list, with the gain each
/// product picks up from the region's additional exports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityDelta {
    pub products: Vec<String>,
    pub member: Vec<f64>,
    pub regional: Vec<f64>,
    /// Share of each product's neighborhood covered by regional products the
    /// member lacks. Never negative, and member + delta recovers regional up
    /// to rounding.
    pub delta: Vec<f64>,
}

/// Densities before and after the member adopts the regional basket. The
/// regional basket must contain every member product, which makes the gain a
/// plain sum over the added products.
pub fn density_delta(
    member_bits: &[bool],
    regional_bits: &[bool],
    phi: &ProximityMatrix,
) -> Result<DensityDelta, IntegrationError> {
    let n = phi.products.len();
    if member_bits.len() != n || regional_bits.len() != n {
        return Err(IntegrationError::NotAligned);
    }
    for i in 0..n {
        if member_bits[i] && !regional_bits[i] {
            return Err(IntegrationError::NotSuperset(phi.products[i].clone()));
        }
    }
    let member = density("member", member_bits, phi)?;
    let regional = density("regional", regional_bits, phi)?;

    let denom = phi.neighbor_weight();
    let mut acc = vec![0.0; n];
    for j in 0..n {
        if regional_bits[j] && !member_bits[j] {
            let row = phi.values.row(j);
            let row = row.to_slice().expect("row-major layout");
            for (a, &w) in acc.iter_mut().zip(row) {
                *a += w;
            }
        }
    }
    let delta: Vec<f64> = (0..n)
        .map(|p| {
            if denom[p] == 0.0 {
                return 0.0;
            }
            // a product newly added to the basket contributed its stored
            // diagonal 1 to its own accumulator; take it back out
            let added_self = regional_bits[p] && !member_bits[p];
            let num = acc[p] - if added_self { 1.0 } else { 0.0 };
            (num / denom[p]).max(0.0)
        })
        .collect();
    Ok(DensityDelta {
        products: phi.products.clone(),
        member: member.values,
        regional: regional.values,
        delta,
    })
}

/// One product a member could reach more easily inside the region.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedGain {
    pub product: String,
    pub delta: f64,
    pub member_density: f64,
    pub regional_density: f64,
    /// The region adds nothing around this product; it ranks on retention
    /// only because the candidate list is exhausted.
    pub zero_gain: bool,
}

/// Rank the member's candidate products (RCA under `cutoff`) by their
/// density gain, largest first, HS code breaking ties; keep `top_n`.
pub fn rank_density_gains(
    dd: &DensityDelta,
    member_rca: &[f64],
    cutoff: f64,
    top_n: usize,
) -> Result<Vec<RankedGain>, IntegrationError> {
    if !(cutoff > 0.0 && cutoff.is_finite()) {
        return Err(IntegrationError::BadCutoff);
    }
    if top_n == 0 {
        return Err(IntegrationError::BadCount);
    }
    if member_rca.len() != dd.products.len() {
        return Err(IntegrationError::NotAligned);
    }
    let mut candidates: Vec<usize> = (0..dd.products.len())
        .filter(|&i| member_rca[i] < cutoff)
        .collect();
    candidates.sort_by(|&a, &b| {
        dd.delta[b]
            .total_cmp(&dd.delta[a])
            .then_with(|| dd.products[a].cmp(&dd.products[b]))
    });
    Ok(candidates
        .into_iter()
        .take(top_n)
        .map(|i| RankedGain {
            product: dd.products[i].clone(),
            delta: dd.delta[i],
            member_density: dd.member[i],
            regional_density: dd.regional[i],
            zero_gain: dd.delta[i] == 0.0,
        })
        .collect())
}

/// Sector mix of a ranking. Products without a numeric HS code fall out of
/// the denominator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SectorFractions {
    pub agriculture_and_food: f64,
    pub textiles_and_garments: f64,
    pub other: f64,
    /// Gains that carried a classifiable code.
    pub counted: usize,
}

pub fn sector_decomposition(gains: &[RankedGain]) -> SectorFractions {
    let mut counts = [0usize; 3];
    for gain in gains {
        if let Ok(sector) = classify_sector(&gain.product) {
            let slot = match sector {
                SectorClass::AgricultureAndFood => 0,
                SectorClass::TextilesAndGarments => 1,
                SectorClass::Other => 2,
            };
            counts[slot] += 1;
        }
    }
    let counted: usize = counts.iter().sum();
    let frac = |c: usize| {
        if counted == 0 {
            0.0
        } else {
            c as f64 / counted as f64
        }
    };
    SectorFractions {
        agriculture_and_food: frac(counts[0]),
        textiles_and_garments: frac(counts[1]),
        other: frac(counts[2]),
        counted,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemberScenario {
    pub country: String,
    /// The member's own densities over the scenario product list.
    pub density: Vec<f64>,
    /// Gain against the member's effective regional basket (its own products
    /// plus the region's).
    pub delta: Vec<f64>,
    pub ranking: Vec<RankedGain>,
    pub sectors: SectorFractions,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioResult {
    pub spec: ScenarioSpec,
    pub products: Vec<String>,
    pub regional_rca: Vec<f64>,
    pub regional_bits: Vec<bool>,
    /// Density of the pure regional basket, before any per-member padding.
    pub regional_density: Vec<f64>,
    pub members: Vec<MemberScenario>,
}

/// Run a full scenario. `r` and `m` must already be aligned to `phi`'s
/// product list; `exports` is only consulted in pooled mode and may cover a
/// subset of those products.
///
/// Pooling can dilute a member product below the export threshold, so each
/// member is compared against its own basket united with the regional one;
/// gains stay nonnegative either way.
pub fn run_scenario(
    spec: &ScenarioSpec,
    exports: &ExportMatrix,
    r: &RcaMatrix,
    m: &MMatrix,
    phi: &ProximityMatrix,
) -> Result<ScenarioResult, IntegrationError> {
    spec.validate()?;
    if r.products != phi.products || m.products != phi.products {
        return Err(IntegrationError::NotAligned);
    }
    for member in &spec.members {
        if r.country_index(member).is_none() || m.country_index(member).is_none() {
            return Err(IntegrationError::UnknownCountry(member.clone()));
        }
    }

    let regional_rca = match spec.mode {
        ScenarioMode::MaxRca => combine_max_rca(r, &spec.members)?,
        ScenarioMode::PooledExports => {
            let pooled = combine_pooled_exports(exports, &spec.members, &spec.label)?;
            let pooled_rca = rca(&pooled)?;
            let row = pooled_rca
                .row(&spec.label)
                .ok_or_else(|| IntegrationError::UnknownCountry(spec.label.clone()))?;
            // re-index from the export products onto the scenario list
            let mut aligned = vec![0.0; phi.products.len()];
            for (i, code) in phi.products.iter().enumerate() {
                if let Some(j) = pooled_rca.product_index(code) {
                    aligned[i] = row[j];
                }
            }
            aligned
        }
    };
    let regional_bits: Vec<bool> = regional_rca.iter().map(|&v| v >= m.threshold).collect();
    let regional_density = density(&spec.label, &regional_bits, phi)?;

    let mut members = Vec::with_capacity(spec.members.len());
    for member in &spec.members {
        let bits = m.row_bits(m.country_index(member).expect("checked above"));
        let effective: Vec<bool> = bits
            .iter()
            .zip(&regional_bits)
            .map(|(&own, &reg)| own || reg)
            .collect();
        let dd = density_delta(bits, &effective, phi)?;
        let member_rca = r.row(member).expect("checked above");
        let ranking = rank_density_gains(&dd, member_rca, spec.candidate_cutoff, spec.top_n)?;
        let sectors = sector_decomposition(&ranking);
        members.push(MemberScenario {
            country: member.clone(),
            density: dd.member,
            delta: dd.delta,
            ranking,
            sectors,
        });
    }

    Ok(ScenarioResult {
        spec: spec.clone(),
        products: phi.products.clone(),
        regional_rca,
        regional_bits,
        regional_density: regional_density.values,
        members,
    })
}

/// Scenario result as pretty JSON, one trailing newline.
pub fn write_scenario_json(
    result: &ScenarioResult,
    mut w: impl Write,
) -> Result<(), IntegrationError> {
    serde_json::to_writer_pretty(&mut w, result)?;
    w.write_all(b"\n")?;
    Ok(())
}

/// Rankings side by side: two columns per member, code and name, padded with
/// empty cells when rankings differ in length.
pub fn write_rankings_csv(
    result: &ScenarioResult,
    registry: &ProductRegistry,
    w: impl Write,
) -> Result<(), IntegrationError> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = Vec::new();
    for member in &result.members {
        header.push(format!("{} HS-6 code", member.country));
        header.push(format!("{} Product Name", member.country));
    }
    out.write_record(&header)?;
    let depth = result
        .members
        .iter()
        .map(|m| m.ranking.len())
        .max()
        .unwrap_or(0);
    for i in 0..depth {
        let mut record = Vec::new();
        for member in &result.members {
            match member.ranking.get(i) {
                Some(gain) => {
                    record.push(gain.product.clone());
                    record.push(registry.name(&gain.product).to_string());
                }
                None => {
                    record.push(String::new());
                    record.push(String::new());
                }
            }
        }
        out.write_record(&record)?;
    }
    out.flush()?;
    Ok(())
}
