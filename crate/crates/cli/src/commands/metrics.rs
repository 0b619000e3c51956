//! `prodspace metrics`: derive the cached matrix family from the export
//! cache. Stages are explicit and each consumes the previous stage's files,
//! so a missing prerequisite names the command to run rather than silently
//! recomputing it.

use std::collections::BTreeSet;

use anyhow::Result;
use clap::{Args, ValueEnum};
use serde_json::json;

use prodspace::cache::{self, CacheLock};
use prodspace::metrics::{
    average_proximity, binarize, density_all, proximity, rca, reflections, sophistication,
    ProximityMatrix,
};
use prodspace::trade_data::sum_matrices;

use super::Ctx;
use crate::config::{override_value, ProximityYears, YearRange};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Stage {
    Rca,
    M,
    Proximity,
    Density,
    Sophistication,
    All,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Which stage to compute.
    #[arg(long, value_enum, default_value = "all")]
    pub stage: Stage,
    /// Years to cover, inclusive (e.g. 2003:2005).
    #[arg(long)]
    pub years: Option<YearRange>,
    /// RCA at or above this sets an M-matrix bit.
    #[arg(long)]
    pub rca_threshold: Option<f64>,
    /// Reflections iterations behind the sophistication scores.
    #[arg(long)]
    pub reflections_depth: Option<usize>,
    /// How the configured years combine into the downstream proximity
    /// matrix.
    #[arg(long, value_enum)]
    pub proximity_years: Option<ProximityYears>,
}

pub fn run(ctx: &Ctx, args: &MetricsArgs) -> Result<()> {
    let years = override_value("years", ctx.cfg.years, ctx.file.years, args.years);
    let threshold = override_value(
        "rca-threshold",
        ctx.cfg.rca_threshold,
        ctx.file.rca_threshold,
        args.rca_threshold,
    );
    let depth = override_value(
        "reflections-depth",
        ctx.cfg.reflections_depth,
        ctx.file.reflections_depth,
        args.reflections_depth,
    );
    let combine = override_value(
        "proximity-years",
        ctx.cfg.proximity_years,
        ctx.file.proximity_years,
        args.proximity_years,
    );
    let _lock = CacheLock::acquire(&ctx.metrics_dir())?;

    let all = args.stage == Stage::All;
    if all || args.stage == Stage::Rca {
        stage_rca(ctx, years)?;
    }
    if all || args.stage == Stage::M {
        stage_m(ctx, years, threshold)?;
    }
    if all || args.stage == Stage::Proximity {
        stage_proximity(ctx, years, threshold, combine)?;
    }
    if all || args.stage == Stage::Density {
        stage_density(ctx, years)?;
    }
    if all || args.stage == Stage::Sophistication {
        stage_sophistication(ctx, years, depth)?;
    }
    Ok(())
}

fn stage_rca(ctx: &Ctx, years: YearRange) -> Result<()> {
    for year in years.iter() {
        let exports = ctx.read_exports(year)?;
        let r = rca(&exports)?;
        ctx.write_rca(&r)?;
        println!(
            "metrics rca {year}: {} countries x {} products",
            r.countries.len(),
            r.products.len()
        );
    }
    Ok(())
}

fn stage_m(ctx: &Ctx, years: YearRange, threshold: f64) -> Result<()> {
    for year in years.iter() {
        let r = ctx.read_rca(year)?;
        let m = binarize(&r, threshold)?;
        ctx.write_m(&m)?;
        let set = m.bits.iter().filter(|&&b| b).count();
        println!(
            "metrics m {year}: {set} of {} bits set at threshold {threshold}",
            m.bits.len()
        );
    }
    Ok(())
}

fn stage_proximity(
    ctx: &Ctx,
    years: YearRange,
    threshold: f64,
    combine: ProximityYears,
) -> Result<()> {
    let phi = match combine {
        ProximityYears::MeanOfYears => {
            let mut per_year = Vec::new();
            for year in years.iter() {
                let m = ctx.read_m(year)?;
                let phi = proximity(&m);
                ctx.write_phi(
                    &ctx.phi_year_path(year),
                    &phi,
                    json!({"kind": "proximity", "year": year, "threshold": m.threshold}),
                )?;
                println!(
                    "metrics proximity {year}: {} products",
                    phi.products.len()
                );
                per_year.push(phi);
            }
            let union: Vec<String> = per_year
                .iter()
                .flat_map(|p| p.products.iter().cloned())
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            let aligned: Vec<ProximityMatrix> = per_year
                .iter()
                .map(|p| p.aligned_to(&union))
                .collect::<Result<_, _>>()?;
            let mean = average_proximity(&aligned)?;
            ctx.write_phi(
                &ctx.phi_path(),
                &mean,
                json!({
                    "kind": "proximity",
                    "method": "mean-of-years",
                    "years": years.to_string(),
                }),
            )?;
            mean
        }
        ProximityYears::PooledYears => {
            let mats: Vec<_> = years
                .iter()
                .map(|y| ctx.read_exports(y))
                .collect::<Result<_, _>>()?;
            let pooled = sum_matrices(&mats)?;
            let m = binarize(&rca(&pooled)?, threshold)?;
            let phi = proximity(&m);
            ctx.write_phi(
                &ctx.phi_path(),
                &phi,
                json!({
                    "kind": "proximity",
                    "method": "pooled-years",
                    "years": years.to_string(),
                    "threshold": threshold,
                }),
            )?;
            phi
        }
    };
    let method = match combine {
        ProximityYears::MeanOfYears => "mean over years",
        ProximityYears::PooledYears => "pooled years",
    };
    println!(
        "metrics proximity: {method} {years}, {} products",
        phi.products.len()
    );
    Ok(())
}

fn stage_density(ctx: &Ctx, years: YearRange) -> Result<()> {
    let phi = ctx.read_phi()?;
    for year in years.iter() {
        let m = ctx.read_m(year)?.aligned_to(&phi.products)?;
        let all = density_all(&m, &phi)?;
        ctx.write_density(year, &all)?;
        println!("metrics density {year}: {} countries", all.len());
    }
    Ok(())
}

fn stage_sophistication(ctx: &Ctx, years: YearRange, depth: usize) -> Result<()> {
    let m = ctx.read_m(years.end)?;
    let s = sophistication(&m, depth)?;
    let convergence = reflections(&m, depth)?.convergence();
    cache::write_sophistication(&ctx.sophistication_path(), &s, convergence.clone())?;
    match &convergence {
        Some(c) => println!(
            "metrics sophistication: year {}, depth {depth}, rank correlation {:.4} against depth {}",
            years.end,
            c.spearman,
            depth - 2
        ),
        None => println!("metrics sophistication: year {}, depth {depth}", years.end),
    }
    if s.degenerate {
        log::warn!("sophistication has zero variance; all defined values are 0");
    }
    Ok(())
}
