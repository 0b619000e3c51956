//! Ingestion of bilateral trade records and aggregation into per-year
//! country-by-product export matrices.
//!
//! Input files are delimited text (comma or tab) with a header row. Column
//! names are matched case-insensitively against the canonical names
//! `year, exporter, importer, product, value, quantity`, with the short
//! BACI names `t, i, j, k, v, q` accepted as aliases. Values are in
//! thousands of USD. Malformed rows never abort a run: they are collected
//! into an [`IngestReport`] so they can be quarantined next to the output.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::Read;

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TradeDataError {
    #[error("input has no header row")]
    MissingHeader,
    #[error("missing mandatory column `{0}` (accepted aliases: {1})")]
    MissingColumn(&'static str, &'static str),
    #[error("no records for year {0}")]
    NoRecordsForYear(i32),
    #[error("product code `{0}` is not a numeric HS-6 code")]
    BadProductCode(String),
    #[error("registry row {0}: expected `{1}`")]
    BadRegistryRow(u64, &'static str),
    #[error("country `{0}` not present in the matrix")]
    UnknownCountry(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// One bilateral flow: `exporter` shipped `product` to `importer` in `year`.
/// `value` is in thousands of USD, `quantity` in metric tons when present.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeRecord {
    pub year: i32,
    pub exporter: String,
    pub importer: String,
    /// HS-6 code, zero-padded to six digits by the parser.
    pub product: String,
    pub value: f64,
    pub quantity: Option<f64>,
}

/// Coarse sector buckets used by the scenario decompositions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SectorClass {
    AgricultureAndFood,
    TextilesAndGarments,
    Other,
}

impl SectorClass {
    pub fn label(self) -> &'static str {
        match self {
            SectorClass::AgricultureAndFood => "agriculture-and-food",
            SectorClass::TextilesAndGarments => "textiles-and-garments",
            SectorClass::Other => "other",
        }
    }
}

/// Bucket an HS-6 code by its numeric range: everything below 280000 counts
/// as agriculture and food (this deliberately includes the mineral chapters),
/// 500000 up to but not including 680000 is textiles and garments, and the
/// rest is other.
pub fn classify_sector(code: &str) -> Result<SectorClass, TradeDataError> {
    let n: u32 = code
        .parse()
        .map_err(|_| TradeDataError::BadProductCode(code.to_string()))?;
    Ok(if n < 280_000 {
        SectorClass::AgricultureAndFood
    } else if (500_000..680_000).contains(&n) {
        SectorClass::TextilesAndGarments
    } else {
        SectorClass::Other
    })
}

/// Maps numeric country codes to ISO-3 and carries display names.
/// Loaded from a `code,iso3,name` CSV.
#[derive(Debug, Clone, Default)]
pub struct CountryRegistry {
    iso3_by_numeric: HashMap<String, String>,
    name_by_iso3: HashMap<String, String>,
}

impl CountryRegistry {
    pub fn from_reader(r: impl Read) -> Result<Self, TradeDataError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let mut reg = CountryRegistry::default();
        for (idx, row) in rdr.records().enumerate() {
            let row = row?;
            if row.len() < 3 {
                return Err(TradeDataError::BadRegistryRow(
                    idx as u64 + 2,
                    "code,iso3,name",
                ));
            }
            let iso3 = row[1].trim().to_string();
            reg.iso3_by_numeric
                .insert(row[0].trim().to_string(), iso3.clone());
            reg.name_by_iso3.insert(iso3, row[2].trim().to_string());
        }
        Ok(reg)
    }

    pub fn iso3_for(&self, numeric: &str) -> Option<&str> {
        self.iso3_by_numeric.get(numeric).map(String::as_str)
    }

    pub fn name(&self, iso3: &str) -> Option<&str> {
        self.name_by_iso3.get(iso3).map(String::as_str)
    }
}

/// Product display names keyed by HS-6 code, from an `hs6,name` CSV.
/// Codes missing here resolve to an empty name, never a guessed one.
#[derive(Debug, Clone, Default)]
pub struct ProductRegistry {
    names: BTreeMap<String, String>,
}

impl ProductRegistry {
    pub fn from_reader(r: impl Read) -> Result<Self, TradeDataError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(r);
        let mut names = BTreeMap::new();
        for (idx, row) in rdr.records().enumerate() {
            let row = row?;
            if row.len() < 2 {
                return Err(TradeDataError::BadRegistryRow(idx as u64 + 2, "hs6,name"));
            }
            names.insert(pad_product(row[0].trim()), row[1].trim().to_string());
        }
        Ok(ProductRegistry { names })
    }

    pub fn name(&self, hs6: &str) -> &str {
        // queries get the same zero-padding as stored keys, so short codes
        // resolve no matter which form the caller holds
        self.names
            .get(&pad_product(hs6))
            .map(String::as_str)
            .unwrap_or("")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

fn pad_product(code: &str) -> String {
    format!("{code:0>6}")
}

/// How to read a delimited input stream. `delimiter: None` sniffs the header
/// line: tab wins if present, comma otherwise.
#[derive(Debug, Clone, Default)]
pub struct IngestFormat {
    pub delimiter: Option<u8>,
}

/// One rejected input row, kept verbatim for the quarantine sidecar.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RowError {
    /// 1-based line number in the input (the header is line 1).
    pub line: u64,
    pub reason: String,
    pub raw: String,
}

/// Outcome of a parse: row counts, rejected rows, and country codes that had
/// no registry mapping (their records are kept under an `N`-prefixed code).
#[derive(Debug, Default)]
pub struct IngestReport {
    pub rows_ok: usize,
    pub rejected: Vec<RowError>,
    pub unmapped_countries: BTreeSet<String>,
}

const COLUMNS: [(&str, &str, bool); 6] = [
    ("year", "t", true),
    ("exporter", "i", true),
    ("importer", "j", true),
    ("product", "k", true),
    ("value", "v", true),
    ("quantity", "q", false),
];

/// Parse a delimited stream of trade records. Every input row either becomes
/// a [`TradeRecord`] or lands in the report's rejected list; only a missing
/// header or a missing mandatory column aborts the parse.
pub fn parse_trade_records(
    input: impl Read,
    format: &IngestFormat,
    countries: Option<&CountryRegistry>,
) -> Result<(Vec<TradeRecord>, IngestReport), TradeDataError> {
    let mut buf = Vec::new();
    let mut input = input;
    input.read_to_end(&mut buf)?;
    let delimiter = match format.delimiter {
        Some(d) => d,
        None => {
            let header_end = buf.iter().position(|&b| b == b'\n').unwrap_or(buf.len());
            if buf[..header_end].contains(&b'\t') {
                b'\t'
            } else {
                b','
            }
        }
    };

    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .flexible(true)
        .from_reader(buf.as_slice());

    let headers = rdr.headers()?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(TradeDataError::MissingHeader);
    }
    let mut col = [usize::MAX; 6];
    for (slot, (canonical, alias, required)) in COLUMNS.iter().enumerate() {
        let found = headers.iter().position(|h| {
            let h = h.trim();
            h.eq_ignore_ascii_case(canonical) || h.eq_ignore_ascii_case(alias)
        });
        match found {
            Some(i) => col[slot] = i,
            None if *required => return Err(TradeDataError::MissingColumn(canonical, alias)),
            None => {}
        }
    }

    let mut records = Vec::new();
    let mut report = IngestReport::default();
    let mut raw = csv::ByteRecord::new();
    let delim = (delimiter as char).to_string();
    while rdr.read_byte_record(&mut raw)? {
        let line = raw.position().map(|p| p.line()).unwrap_or(0);
        match parse_row(&raw, &col, countries, &mut report) {
            Ok(rec) => {
                records.push(rec);
                report.rows_ok += 1;
            }
            Err(reason) => {
                // the reader does not keep the original line, so rejoin the fields
                let fields: Vec<_> = raw.iter().map(String::from_utf8_lossy).collect();
                report.rejected.push(RowError {
                    line,
                    reason,
                    raw: fields.join(&delim),
                });
            }
        }
    }
    Ok((records, report))
}

fn parse_row(
    raw: &csv::ByteRecord,
    col: &[usize; 6],
    countries: Option<&CountryRegistry>,
    report: &mut IngestReport,
) -> Result<TradeRecord, String> {
    let field = |slot: usize| -> Result<&str, String> {
        let idx = col[slot];
        let bytes = raw
            .get(idx)
            .ok_or_else(|| format!("missing field `{}`", COLUMNS[slot].0))?;
        std::str::from_utf8(bytes)
            .map(str::trim)
            .map_err(|_| format!("field `{}` is not valid UTF-8", COLUMNS[slot].0))
    };

    let year: i32 = field(0)?
        .parse()
        .map_err(|_| format!("bad year `{}`", field(0).unwrap_or("")))?;

    let mut country = |slot: usize| -> Result<String, String> {
        let code = field(slot)?;
        if code.is_empty() {
            return Err(format!("empty `{}`", COLUMNS[slot].0));
        }
        if code.bytes().all(|b| b.is_ascii_digit()) {
            if let Some(iso3) = countries.and_then(|reg| reg.iso3_for(code)) {
                return Ok(iso3.to_string());
            }
            report.unmapped_countries.insert(code.to_string());
            return Ok(format!("N{code}"));
        }
        Ok(code.to_string())
    };
    let exporter = country(1)?;
    let importer = country(2)?;

    let product = field(3)?;
    if product.is_empty() || product.len() > 6 || !product.bytes().all(|b| b.is_ascii_digit()) {
        return Err(format!("bad product code `{product}`"));
    }
    let product = pad_product(product);

    let value: f64 = field(4)?
        .parse()
        .map_err(|_| format!("bad value `{}`", field(4).unwrap_or("")))?;
    if !value.is_finite() || value < 0.0 {
        return Err(format!("negative or non-finite value `{value}`"));
    }

    let quantity = if col[5] == usize::MAX {
        None
    } else {
        let s = field(5)?;
        if s.is_empty() || s == "NA" {
            None
        } else {
            Some(s.parse().map_err(|_| format!("bad quantity `{s}`"))?)
        }
    };

    Ok(TradeRecord {
        year,
        exporter,
        importer,
        product,
        value,
        quantity,
    })
}

/// Country-by-product export totals for one year. Row and column labels are
/// sorted ascending; `values[(c, p)]` is the summed export value of country
/// `countries[c]` in product `products[p]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExportMatrix {
    pub year: i32,
    pub countries: Vec<String>,
    pub products: Vec<String>,
    pub values: Array2<f64>,
}

impl ExportMatrix {
    pub fn country_index(&self, code: &str) -> Option<usize> {
        self.countries.binary_search_by(|c| c.as_str().cmp(code)).ok()
    }

    pub fn product_index(&self, code: &str) -> Option<usize> {
        self.products.binary_search_by(|p| p.as_str().cmp(code)).ok()
    }

    pub fn row(&self, country: &str) -> Option<ArrayView1<'_, f64>> {
        self.country_index(country).map(|i| self.values.row(i))
    }

    /// Per-country totals (row sums).
    pub fn country_totals(&self) -> Array1<f64> {
        self.values.sum_axis(ndarray::Axis(1))
    }

    /// Per-product world totals (column sums).
    pub fn world_totals(&self) -> Array1<f64> {
        self.values.sum_axis(ndarray::Axis(0))
    }
}

/// Sum the given year's records into an [`ExportMatrix`], summing over
/// importers. Flows where exporter equals importer are dropped. The country
/// and product orderings are the sorted distinct codes observed that year.
pub fn aggregate_exports(
    records: &[TradeRecord],
    year: i32,
) -> Result<ExportMatrix, TradeDataError> {
    let mut sums: BTreeMap<(&str, &str), f64> = BTreeMap::new();
    for rec in records {
        if rec.year != year || rec.exporter == rec.importer {
            continue;
        }
        *sums
            .entry((rec.exporter.as_str(), rec.product.as_str()))
            .or_insert(0.0) += rec.value;
    }
    if sums.is_empty() {
        return Err(TradeDataError::NoRecordsForYear(year));
    }
    let countries: Vec<String> = sums
        .keys()
        .map(|(c, _)| c.to_string())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let products: Vec<String> = sums
        .keys()
        .map(|(_, p)| p.to_string())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut values = Array2::zeros((countries.len(), products.len()));
    for ((country, product), value) in &sums {
        let ci = countries
            .binary_search_by(|c| c.as_str().cmp(country))
            .unwrap();
        let pi = products
            .binary_search_by(|p| p.as_str().cmp(product))
            .unwrap();
        values[(ci, pi)] = *value;
    }
    Ok(ExportMatrix {
        year,
        countries,
        products,
        values,
    })
}

/// Align several years onto the union of their labels and sum the cells.
/// Used by the pooled-years proximity path; `year` is set to the latest input.
pub fn sum_matrices(mats: &[ExportMatrix]) -> Result<ExportMatrix, TradeDataError> {
    let year = mats
        .iter()
        .map(|m| m.year)
        .max()
        .ok_or(TradeDataError::NoRecordsForYear(0))?;
    let countries: Vec<String> = mats
        .iter()
        .flat_map(|m| m.countries.iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let products: Vec<String> = mats
        .iter()
        .flat_map(|m| m.products.iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut values = Array2::zeros((countries.len(), products.len()));
    for m in mats {
        let crows: Vec<usize> = m
            .countries
            .iter()
            .map(|c| countries.binary_search(c).unwrap())
            .collect();
        let pcols: Vec<usize> = m
            .products
            .iter()
            .map(|p| products.binary_search(p).unwrap())
            .collect();
        for (ci, &cu) in crows.iter().enumerate() {
            for (pi, &pu) in pcols.iter().enumerate() {
                values[(cu, pu)] += m.values[(ci, pi)];
            }
        }
    }
    Ok(ExportMatrix {
        year,
        countries,
        products,
        values,
    })
}

/// Shape and coverage summary of an export matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixReport {
    pub countries: usize,
    pub products: usize,
    pub world_total: f64,
    /// Countries whose whole row is zero.
    pub zero_rows: Vec<String>,
    /// Products whose whole column is zero.
    pub zero_cols: Vec<String>,
}

/// Summarize a matrix: dimensions, world total, and any all-zero rows or
/// columns (reported, not treated as errors).
pub fn validate_matrix(m: &ExportMatrix) -> MatrixReport {
    let row_tot = m.country_totals();
    let col_tot = m.world_totals();
    MatrixReport {
        countries: m.countries.len(),
        products: m.products.len(),
        world_total: row_tot.sum(),
        zero_rows: m
            .countries
            .iter()
            .zip(row_tot.iter())
            .filter(|(_, &t)| t == 0.0)
            .map(|(c, _)| c.clone())
            .collect(),
        zero_cols: m
            .products
            .iter()
            .zip(col_tot.iter())
            .filter(|(_, &t)| t == 0.0)
            .map(|(p, _)| p.clone())
            .collect(),
    }
}
