//! `prodspace integrate`: evaluate a regional-integration scenario against
//! the cached metrics and emit the scenario report plus the side-by-side
//! gain rankings.

use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::{Args, ValueEnum};

use prodspace::integration::{run_scenario, write_rankings_csv, write_scenario_json};
use prodspace::{ScenarioMode, ScenarioSpec};

use super::Ctx;
use crate::config::override_value;
use crate::manifest::Manifest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    MaxRca,
    PooledExports,
}

impl From<ModeArg> for ScenarioMode {
    fn from(m: ModeArg) -> ScenarioMode {
        match m {
            ModeArg::MaxRca => ScenarioMode::MaxRca,
            ModeArg::PooledExports => ScenarioMode::PooledExports,
        }
    }
}

#[derive(Debug, Args)]
pub struct IntegrateArgs {
    /// Comma-separated member country codes (at least two).
    #[arg(long, value_delimiter = ',', required = true)]
    pub members: Vec<String>,
    /// How the members combine into one exporter.
    #[arg(long, value_enum, default_value = "max-rca")]
    pub mode: ModeArg,
    /// Name the combined region goes by; members joined by `+` when omitted.
    #[arg(long)]
    pub label: Option<String>,
    /// Members only count gains on products they export below this RCA.
    #[arg(long)]
    pub cutoff: Option<f64>,
    /// Ranking length per member.
    #[arg(long, default_value_t = prodspace::integration::DEFAULT_TOP_N)]
    pub top: usize,
    /// Year the scenario runs on (defaults to the end of the configured
    /// range).
    #[arg(long)]
    pub year: Option<i32>,
    /// Directory the outputs land in.
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(ctx: &Ctx, args: &IntegrateArgs) -> Result<()> {
    let mut man = Manifest::new("integrate", &ctx.cfg);
    let spec = spec_from_args(ctx, args);
    emit(ctx, &spec, args.year.unwrap_or(ctx.cfg.years.end), &mut man, &args.out)?;
    man.finish(&args.out)?;
    Ok(())
}

pub fn spec_from_args(ctx: &Ctx, args: &IntegrateArgs) -> ScenarioSpec {
    ScenarioSpec {
        label: args
            .label
            .clone()
            .unwrap_or_else(|| args.members.join("+")),
        members: args.members.clone(),
        mode: args.mode.into(),
        candidate_cutoff: override_value(
            "cutoff",
            ctx.cfg.candidate_cutoff,
            ctx.file.candidate_cutoff,
            args.cutoff,
        ),
        top_n: args.top,
    }
}

pub fn emit(
    ctx: &Ctx,
    spec: &ScenarioSpec,
    year: i32,
    man: &mut Manifest,
    out: &Path,
) -> Result<()> {
    let phi = ctx.read_phi()?;
    let r = ctx.read_rca(year)?.aligned_to(&phi.products)?;
    let m = ctx.read_m(year)?.aligned_to(&phi.products)?;
    let exports = ctx.read_exports(year)?;
    let registry = ctx.product_registry()?;
    for path in [
        ctx.phi_path(),
        ctx.rca_path(year),
        ctx.m_path(year),
        prodspace::cache::export_cache_path(&ctx.exports_dir(), year),
    ] {
        man.input(&path)?;
    }

    let result = run_scenario(spec, &exports, &r, &m, &phi)?;

    let mut bytes = Vec::new();
    write_scenario_json(&result, &mut bytes)?;
    man.output(out, "scenario.json", &bytes)?;
    let mut bytes = Vec::new();
    write_rankings_csv(&result, &registry, &mut bytes)?;
    man.output(out, "rankings.csv", &bytes)?;

    println!(
        "integrate: {} over {} member(s), year {year}",
        result.spec.label,
        result.members.len()
    );
    for member in &result.members {
        let lead = member
            .ranking
            .iter()
            .find(|g| !g.zero_gain)
            .map(|g| format!("top gain {} (+{:.4})", g.product, g.delta))
            .unwrap_or_else(|| "no positive gain".to_string());
        println!(
            "  {}: {}, sector mix {:.0}% agriculture / {:.0}% textiles / {:.0}% other",
            member.country,
            lead,
            member.sectors.agriculture_and_food * 100.0,
            member.sectors.textiles_and_garments * 100.0,
            member.sectors.other * 100.0
        );
    }
    Ok(())
}
