//! `prodspace ingest`: parse raw trade files into per-year export matrices.
//!
//! Rejected rows go to a `rejected.csv` sidecar in the exports cache instead
//! of aborting the run; the summary names the sidecar when it is written.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};

use prodspace::cache::{self, CacheLock};
use prodspace::trade_data::{
    aggregate_exports, parse_trade_records, validate_matrix, CountryRegistry, IngestFormat,
    IngestReport, ProductRegistry, TradeRecord,
};

use super::Ctx;
use crate::config::{override_value, YearRange};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Delimiter {
    Comma,
    Tab,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Raw trade file; repeat for several.
    #[arg(long, required = true)]
    pub input: Vec<PathBuf>,
    /// Years to aggregate, inclusive (e.g. 2003:2005).
    #[arg(long)]
    pub years: Option<YearRange>,
    /// Country registry CSV (code,iso3,name), kept in the cache for later
    /// commands.
    #[arg(long)]
    pub countries: Option<PathBuf>,
    /// Product registry CSV (hs6,name), kept in the cache for later
    /// commands.
    #[arg(long)]
    pub products: Option<PathBuf>,
    /// Field delimiter; sniffed from the header when omitted.
    #[arg(long, value_enum)]
    pub delimiter: Option<Delimiter>,
}

pub fn run(ctx: &Ctx, args: &IngestArgs) -> Result<()> {
    let years = override_value("years", ctx.cfg.years, ctx.file.years, args.years);
    let exports_dir = ctx.exports_dir();
    let _lock = CacheLock::acquire(&exports_dir)?;

    let countries = load_country_registry(ctx, args)?;
    install_product_registry(ctx, args)?;

    let format = IngestFormat {
        delimiter: args.delimiter.map(|d| match d {
            Delimiter::Comma => b',',
            Delimiter::Tab => b'\t',
        }),
    };

    let mut records: Vec<TradeRecord> = Vec::new();
    let mut rejected: Vec<(String, prodspace::trade_data::RowError)> = Vec::new();
    let mut rows_ok = 0usize;
    let mut unmapped = std::collections::BTreeSet::new();
    for input in &args.input {
        let file = std::fs::File::open(input)
            .with_context(|| format!("opening {}", input.display()))?;
        let (mut recs, report) = parse_trade_records(file, &format, countries.as_ref())
            .with_context(|| format!("parsing {}", input.display()))?;
        records.append(&mut recs);
        let IngestReport {
            rows_ok: ok,
            rejected: rej,
            unmapped_countries,
        } = report;
        rows_ok += ok;
        rejected.extend(rej.into_iter().map(|e| (input.display().to_string(), e)));
        unmapped.extend(unmapped_countries);
    }

    write_quarantine(&exports_dir, &rejected)?;

    println!(
        "ingest: {} file(s), {} rows ok, {} rejected{}",
        args.input.len(),
        rows_ok,
        rejected.len(),
        if rejected.is_empty() {
            String::new()
        } else {
            format!(" (see {})", exports_dir.join("rejected.csv").display())
        }
    );
    if !unmapped.is_empty() {
        log::warn!(
            "{} country code(s) had no registry mapping and were kept N-prefixed: {}",
            unmapped.len(),
            unmapped.iter().cloned().collect::<Vec<_>>().join(", ")
        );
    }

    for year in years.iter() {
        let matrix = aggregate_exports(&records, year)?;
        cache::write_export_matrix(&exports_dir, &matrix)?;
        let report = validate_matrix(&matrix);
        println!(
            "  {year}: {} countries x {} products, world total {:.3e}",
            report.countries, report.products, report.world_total
        );
        if !report.zero_rows.is_empty() || !report.zero_cols.is_empty() {
            log::warn!(
                "{year}: {} all-zero country row(s), {} all-zero product column(s)",
                report.zero_rows.len(),
                report.zero_cols.len()
            );
        }
    }
    Ok(())
}

fn load_country_registry(ctx: &Ctx, args: &IngestArgs) -> Result<Option<CountryRegistry>> {
    match &args.countries {
        Some(path) => {
            let bytes =
                std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
            let reg = CountryRegistry::from_reader(bytes.as_slice())
                .with_context(|| format!("reading {}", path.display()))?;
            cache::write_if_changed(&ctx.registry_dir().join("countries.csv"), &bytes)?;
            Ok(Some(reg))
        }
        None => ctx.country_registry(),
    }
}

fn install_product_registry(ctx: &Ctx, args: &IngestArgs) -> Result<()> {
    if let Some(path) = &args.products {
        let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        // parsed only to validate; consumers read it back from the cache
        ProductRegistry::from_reader(bytes.as_slice())
            .with_context(|| format!("reading {}", path.display()))?;
        cache::write_if_changed(&ctx.registry_dir().join("products.csv"), &bytes)?;
    }
    Ok(())
}

fn write_quarantine(
    dir: &Path,
    rejected: &[(String, prodspace::trade_data::RowError)],
) -> Result<()> {
    let path = dir.join("rejected.csv");
    if rejected.is_empty() {
        // a sidecar from an earlier run would misreport this one
        if path.exists() {
            std::fs::remove_file(&path)?;
        }
        return Ok(());
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["input", "line", "reason", "raw"])?;
    for (input, e) in rejected {
        w.write_record([input, &e.line.to_string(), &e.reason, &e.raw])?;
    }
    let bytes = w.into_inner().expect("vec writer");
    cache::write_if_changed(&path, &bytes)?;
    Ok(())
}
