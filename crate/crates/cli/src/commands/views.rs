//! `prodspace views`: country-level tables, node annotations, and the
//! density/sophistication scatter, all against the cached metrics.

use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::{Args, Subcommand, ValueEnum};

use prodspace::cache::to_pretty_json;
use prodspace::metrics::{MMatrix, RcaMatrix, SophisticationVector};
use prodspace::trade_data::{ExportMatrix, ProductRegistry};
use prodspace::views::{
    align_annotations, density_sophistication_scatter, export_value_view, merge_annotations,
    opportunities_view, opportunity_table, rca_view, top_exports_table, write_scatter_csv,
    write_table_csv,
};
use prodspace::{NodeAnnotation, ScatterOwner, TableInputs, TableSort};

use super::Ctx;
use crate::config::override_value;
use crate::manifest::Manifest;

#[derive(Debug, Subcommand)]
pub enum ViewsCmd {
    /// Ranked table of what the country already exports.
    Table(TableArgs),
    /// Ranked table of what the country is closest to but not exporting.
    Opportunities(OpportunitiesArgs),
    /// Merged per-product annotations for the graph exporter.
    Annotations(AnnotationsArgs),
    /// Density against sophistication for unexported products.
    Scatter(ScatterArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SortArg {
    Value,
    Rca,
}

impl SortArg {
    fn as_sort(self) -> (TableSort, &'static str) {
        match self {
            SortArg::Value => (TableSort::ExportValue, "value"),
            SortArg::Rca => (TableSort::Rca, "rca"),
        }
    }
}

#[derive(Debug, Args)]
pub struct TableArgs {
    /// The country the table is about.
    #[arg(long)]
    pub country: String,
    /// Ranking key.
    #[arg(long, value_enum, default_value = "value")]
    pub sort: SortArg,
    /// Number of rows.
    #[arg(long, default_value_t = 30)]
    pub top: usize,
    /// Comparison year (defaults to the start of the configured range).
    #[arg(long)]
    pub base_year: Option<i32>,
    /// Ranked year (defaults to the end of the configured range).
    #[arg(long)]
    pub year: Option<i32>,
    /// Directory the outputs land in.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OpportunitiesArgs {
    /// The country the ranking is about.
    #[arg(long)]
    pub country: String,
    /// RCA below this marks a product as not yet exported.
    #[arg(long)]
    pub cutoff: Option<f64>,
    /// Keep only products with above-average sophistication.
    #[arg(long)]
    pub require_positive_sophistication: bool,
    /// Number of rows.
    #[arg(long, default_value_t = 30)]
    pub top: usize,
    /// Comparison year (defaults to the start of the configured range).
    #[arg(long)]
    pub base_year: Option<i32>,
    /// Ranked year (defaults to the end of the configured range).
    #[arg(long)]
    pub year: Option<i32>,
    /// Directory the outputs land in.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnnotationsArgs {
    /// The country whose basket colors the annotations.
    #[arg(long)]
    pub country: String,
    /// RCA below this marks a product as an open opportunity.
    #[arg(long)]
    pub cutoff: Option<f64>,
    /// Comparison year (defaults to the start of the configured range).
    #[arg(long)]
    pub base_year: Option<i32>,
    /// Annotated year (defaults to the end of the configured range).
    #[arg(long)]
    pub year: Option<i32>,
    /// Directory the outputs land in.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScatterArgs {
    /// Comma-separated country codes, one point set per country.
    #[arg(long, value_delimiter = ',', required = true)]
    pub countries: Vec<String>,
    /// RCA below this marks a product as not yet exported.
    #[arg(long)]
    pub cutoff: Option<f64>,
    /// Scatter year (defaults to the end of the configured range).
    #[arg(long)]
    pub year: Option<i32>,
    /// Directory the outputs land in.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(ctx: &Ctx, cmd: &ViewsCmd) -> Result<()> {
    match cmd {
        ViewsCmd::Table(args) => {
            let mut man = Manifest::new("views table", &ctx.cfg);
            let (sort, _) = args.sort.as_sort();
            emit_table(
                ctx,
                &args.country,
                sort,
                args.top,
                year_pair(ctx, args.base_year, args.year),
                &mut man,
                &args.out,
            )?;
            man.finish(&args.out)?;
        }
        ViewsCmd::Opportunities(args) => {
            let mut man = Manifest::new("views opportunities", &ctx.cfg);
            emit_opportunities(
                ctx,
                &args.country,
                cutoff(ctx, args.cutoff),
                args.require_positive_sophistication,
                args.top,
                year_pair(ctx, args.base_year, args.year),
                &mut man,
                &args.out,
            )?;
            man.finish(&args.out)?;
        }
        ViewsCmd::Annotations(args) => {
            let mut man = Manifest::new("views annotations", &ctx.cfg);
            emit_annotations(
                ctx,
                &args.country,
                cutoff(ctx, args.cutoff),
                year_pair(ctx, args.base_year, args.year),
                &mut man,
                &args.out,
            )?;
            man.finish(&args.out)?;
        }
        ViewsCmd::Scatter(args) => {
            let mut man = Manifest::new("views scatter", &ctx.cfg);
            emit_scatter(
                ctx,
                &args.countries,
                cutoff(ctx, args.cutoff),
                args.year.unwrap_or(ctx.cfg.years.end),
                &mut man,
                &args.out,
            )?;
            man.finish(&args.out)?;
        }
    }
    Ok(())
}

pub fn year_pair(ctx: &Ctx, base: Option<i32>, current: Option<i32>) -> (i32, i32) {
    (
        base.unwrap_or(ctx.cfg.years.start),
        current.unwrap_or(ctx.cfg.years.end),
    )
}

fn cutoff(ctx: &Ctx, flag: Option<f64>) -> f64 {
    override_value(
        "cutoff",
        ctx.cfg.opportunity_cutoff,
        ctx.file.opportunity_cutoff,
        flag,
    )
}

/// The owned matrices behind one country's [`TableInputs`].
struct Loaded {
    rca_base: RcaMatrix,
    rca_current: RcaMatrix,
    exports_base: ExportMatrix,
    exports_current: ExportMatrix,
    density: prodspace::DensityVector,
    sophistication: SophisticationVector,
    registry: ProductRegistry,
}

impl Loaded {
    fn read(ctx: &Ctx, country: &str, years: (i32, i32), man: &mut Manifest) -> Result<Loaded> {
        let (base, current) = years;
        let loaded = Loaded {
            rca_base: ctx.read_rca(base)?,
            rca_current: ctx.read_rca(current)?,
            exports_base: ctx.read_exports(base)?,
            exports_current: ctx.read_exports(current)?,
            density: ctx.read_density(current, country)?,
            sophistication: ctx.read_sophistication()?.0,
            registry: ctx.product_registry()?,
        };
        for path in [
            ctx.rca_path(base),
            ctx.rca_path(current),
            prodspace::cache::export_cache_path(&ctx.exports_dir(), base),
            prodspace::cache::export_cache_path(&ctx.exports_dir(), current),
            ctx.density_path(current),
            ctx.sophistication_path(),
        ] {
            man.input(&path)?;
        }
        Ok(loaded)
    }

    fn inputs(&self) -> TableInputs<'_> {
        TableInputs {
            rca_base: &self.rca_base,
            rca_current: &self.rca_current,
            exports_base: &self.exports_base,
            exports_current: &self.exports_current,
            density: &self.density,
            sophistication: &self.sophistication,
            registry: &self.registry,
        }
    }
}

#[allow(clippy::too_many_arguments)]
pub fn emit_table(
    ctx: &Ctx,
    country: &str,
    sort: TableSort,
    top: usize,
    years: (i32, i32),
    man: &mut Manifest,
    out: &Path,
) -> Result<()> {
    let loaded = Loaded::read(ctx, country, years, man)?;
    let rows = top_exports_table(country, &loaded.inputs(), sort, top)?;
    let mut bytes = Vec::new();
    write_table_csv(&rows, years.0, years.1, &mut bytes)?;
    let key = match sort {
        TableSort::ExportValue => "value",
        TableSort::Rca => "rca",
    };
    man.output(out, &format!("{country}_top_{key}.csv"), &bytes)?;
    println!("views table: {country}, {} row(s) by {key}", rows.len());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
pub fn emit_opportunities(
    ctx: &Ctx,
    country: &str,
    cutoff: f64,
    require_positive_sophistication: bool,
    top: usize,
    years: (i32, i32),
    man: &mut Manifest,
    out: &Path,
) -> Result<()> {
    let loaded = Loaded::read(ctx, country, years, man)?;
    let rows = opportunity_table(
        country,
        &loaded.inputs(),
        cutoff,
        require_positive_sophistication,
        top,
    )?;
    let mut bytes = Vec::new();
    write_table_csv(&rows, years.0, years.1, &mut bytes)?;
    let name = if require_positive_sophistication {
        format!("{country}_opportunities_sophisticated.csv")
    } else {
        format!("{country}_opportunities.csv")
    };
    man.output(out, &name, &bytes)?;
    println!(
        "views opportunities: {country}, {} row(s) under RCA {cutoff}",
        rows.len()
    );
    Ok(())
}

/// Build the merged annotation list for one country without writing it.
pub fn annotations_for(
    ctx: &Ctx,
    country: &str,
    cutoff: f64,
    years: (i32, i32),
    man: &mut Manifest,
) -> Result<Vec<NodeAnnotation>> {
    let loaded = Loaded::read(ctx, country, years, man)?;
    // the density products are the proximity products, i.e. the graph nodes
    let universe = loaded.density.products.clone();
    let views = vec![
        opportunities_view(country, &loaded.density, &loaded.rca_current, cutoff)?,
        align_annotations(rca_view(country, &loaded.rca_current)?, &universe),
        align_annotations(
            export_value_view(country, &loaded.exports_base, &loaded.exports_current)?,
            &universe,
        ),
    ];
    Ok(merge_annotations(views)?)
}

pub fn emit_annotations(
    ctx: &Ctx,
    country: &str,
    cutoff: f64,
    years: (i32, i32),
    man: &mut Manifest,
    out: &Path,
) -> Result<()> {
    let merged = annotations_for(ctx, country, cutoff, years, man)?;
    man.output(
        out,
        &format!("{country}_annotations.json"),
        &to_pretty_json(&merged)?,
    )?;
    println!(
        "views annotations: {country}, {} product(s) at cutoff {cutoff}",
        merged.len()
    );
    Ok(())
}

pub fn emit_scatter(
    ctx: &Ctx,
    countries: &[String],
    cutoff: f64,
    year: i32,
    man: &mut Manifest,
    out: &Path,
) -> Result<()> {
    let phi = ctx.read_phi()?;
    let (sophistication, _) = ctx.read_sophistication()?;
    let m: MMatrix = ctx.read_m(year)?.aligned_to(&phi.products)?;
    let r: RcaMatrix = ctx.read_rca(year)?.aligned_to(&phi.products)?;
    for path in [
        ctx.phi_path(),
        ctx.sophistication_path(),
        ctx.m_path(year),
        ctx.rca_path(year),
    ] {
        man.input(&path)?;
    }

    let mut owners = Vec::with_capacity(countries.len());
    for country in countries {
        let ci = m.country_index(country).ok_or_else(|| {
            prodspace::metrics::MetricsError::UnknownCountry(country.clone())
        })?;
        let rca_row = r
            .row(country)
            .ok_or_else(|| prodspace::metrics::MetricsError::UnknownCountry(country.clone()))?;
        owners.push(ScatterOwner {
            label: country,
            bits: m.row_bits(ci),
            rca: rca_row,
        });
    }
    let points = density_sophistication_scatter(&owners, &phi, &sophistication, cutoff)?;
    let mut bytes = Vec::new();
    write_scatter_csv(&points, &mut bytes)?;
    man.output(out, "scatter.csv", &bytes)?;
    println!(
        "views scatter: {} point(s) across {} owner(s)",
        points.len(),
        countries.len()
    );
    Ok(())
}
