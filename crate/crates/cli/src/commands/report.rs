//! `prodspace report`: one directory with everything about a country under
//! a single manifest: the annotated, laid-out graph, the ranked tables, the
//! scatter, and (when members are given) the integration scenario.

use std::path::PathBuf;

use anyhow::Result;
use clap::Args;

use prodspace::{ScenarioSpec, TableSort};

use super::graph::{FormatArg, GraphPlan};
use super::views::year_pair;
use super::{graph, integrate, views, Ctx};
use crate::manifest::Manifest;

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// The country the report is about.
    #[arg(long)]
    pub country: String,
    /// Comma-separated member codes; given, the report adds the integration
    /// scenario and scatters every member.
    #[arg(long, value_delimiter = ',')]
    pub members: Vec<String>,
    /// How scenario members combine into one exporter.
    #[arg(long, value_enum, default_value = "max-rca")]
    pub mode: integrate::ModeArg,
    /// Name the combined region goes by; members joined by `+` when omitted.
    #[arg(long)]
    pub label: Option<String>,
    /// Rows per ranked table.
    #[arg(long, default_value_t = 30)]
    pub top: usize,
    /// Ranking length per scenario member.
    #[arg(long, default_value_t = prodspace::integration::DEFAULT_TOP_N)]
    pub top_gains: usize,
    /// Comparison year (defaults to the start of the configured range).
    #[arg(long)]
    pub base_year: Option<i32>,
    /// Report year (defaults to the end of the configured range).
    #[arg(long)]
    pub year: Option<i32>,
    /// Directory the outputs land in.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(ctx: &Ctx, args: &ReportArgs) -> Result<()> {
    let mut man = Manifest::new("report", &ctx.cfg);
    let years = year_pair(ctx, args.base_year, args.year);
    let country = &args.country;
    let cutoff = ctx.cfg.opportunity_cutoff;

    let annotations = views::annotations_for(ctx, country, cutoff, years, &mut man)?;
    let plan = GraphPlan {
        threshold: ctx.cfg.proximity_threshold,
        rule: ctx.cfg.threshold_rule,
        formats: vec![FormatArg::Csv, FormatArg::Json, FormatArg::Gexf],
        layout: true,
        seed: ctx.cfg.layout_seed,
        annotations: Some(annotations),
        percolation_grid: Vec::new(),
    };
    graph::emit(ctx, &plan, &mut man, &args.out)?;

    for sort in [TableSort::ExportValue, TableSort::Rca] {
        views::emit_table(ctx, country, sort, args.top, years, &mut man, &args.out)?;
    }
    for sophisticated in [false, true] {
        views::emit_opportunities(
            ctx,
            country,
            cutoff,
            sophisticated,
            args.top,
            years,
            &mut man,
            &args.out,
        )?;
    }
    views::emit_annotations(ctx, country, cutoff, years, &mut man, &args.out)?;

    let scatter_over: Vec<String> = if args.members.is_empty() {
        vec![country.clone()]
    } else {
        args.members.clone()
    };
    views::emit_scatter(ctx, &scatter_over, cutoff, years.1, &mut man, &args.out)?;

    if !args.members.is_empty() {
        let spec = ScenarioSpec {
            label: args
                .label
                .clone()
                .unwrap_or_else(|| args.members.join("+")),
            members: args.members.clone(),
            mode: args.mode.into(),
            candidate_cutoff: ctx.cfg.candidate_cutoff,
            top_n: args.top_gains,
        };
        integrate::emit(ctx, &spec, years.1, &mut man, &args.out)?;
    }

    let path = man.finish(&args.out)?;
    println!(
        "report: {} file(s) for {country} under {}",
        man.outputs.len(),
        path.parent().unwrap_or(&args.out).display()
    );
    Ok(())
}
