//! `prodspace graph`: threshold the cached proximity matrix into the product
//! space and export it, optionally laid out and annotated.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};

use prodspace::product_space::{
    build_graph_with, export_graph, layout, percolation_sweep, percolation_threshold,
};
use prodspace::views::align_annotations;
use prodspace::{GraphFormat, NodeAnnotation, ThresholdRule};

use super::Ctx;
use crate::config::override_value;
use crate::manifest::Manifest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleArg {
    Inclusive,
    Exclusive,
}

impl From<RuleArg> for ThresholdRule {
    fn from(r: RuleArg) -> ThresholdRule {
        match r {
            RuleArg::Inclusive => ThresholdRule::Inclusive,
            RuleArg::Exclusive => ThresholdRule::Exclusive,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
    Gexf,
}

impl FormatArg {
    fn as_format(self) -> (GraphFormat, &'static str) {
        match self {
            FormatArg::Csv => (GraphFormat::EdgeCsv, "edges.csv"),
            FormatArg::Json => (GraphFormat::NodeLinkJson, "graph.json"),
            FormatArg::Gexf => (GraphFormat::Gexf, "graph.gexf"),
        }
    }
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    /// Minimum proximity for an edge.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Whether a proximity exactly at the threshold keeps its edge.
    #[arg(long, value_enum)]
    pub rule: Option<RuleArg>,
    /// Output format; repeat for several. All three when omitted.
    #[arg(long = "format", value_enum)]
    pub formats: Vec<FormatArg>,
    /// Compute node coordinates (connected part force-directed, isolated
    /// nodes parked in a side grid).
    #[arg(long)]
    pub layout: bool,
    /// Layout random seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Node annotations JSON from `prodspace views annotations`.
    #[arg(long)]
    pub annotations: Option<PathBuf>,
    /// Comma-separated thresholds to sweep for the giant-component decay
    /// curve.
    #[arg(long, value_delimiter = ',')]
    pub percolation_grid: Vec<f64>,
    /// Directory the outputs land in.
    #[arg(long)]
    pub out: PathBuf,
}

/// Everything `emit` needs, resolved from flags and config.
pub struct GraphPlan {
    pub threshold: f64,
    pub rule: ThresholdRule,
    pub formats: Vec<FormatArg>,
    pub layout: bool,
    pub seed: u64,
    pub annotations: Option<Vec<NodeAnnotation>>,
    pub percolation_grid: Vec<f64>,
}

impl GraphPlan {
    pub fn from_args(ctx: &Ctx, args: &GraphArgs, man: &mut Manifest) -> Result<GraphPlan> {
        let annotations = match &args.annotations {
            Some(path) => {
                let bytes =
                    std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
                let list: Vec<NodeAnnotation> = serde_json::from_slice(&bytes)
                    .with_context(|| format!("parsing {}", path.display()))?;
                man.input(path)?;
                Some(list)
            }
            None => None,
        };
        Ok(GraphPlan {
            threshold: override_value(
                "threshold",
                ctx.cfg.proximity_threshold,
                ctx.file.proximity_threshold,
                args.threshold,
            ),
            rule: override_value(
                "rule",
                ctx.cfg.threshold_rule,
                ctx.file.threshold_rule,
                args.rule.map(ThresholdRule::from),
            ),
            formats: if args.formats.is_empty() {
                vec![FormatArg::Csv, FormatArg::Json, FormatArg::Gexf]
            } else {
                args.formats.clone()
            },
            layout: args.layout,
            seed: override_value(
                "seed",
                ctx.cfg.layout_seed,
                ctx.file.layout_seed,
                args.seed,
            ),
            annotations,
            percolation_grid: args.percolation_grid.clone(),
        })
    }
}

pub fn run(ctx: &Ctx, args: &GraphArgs) -> Result<()> {
    let mut man = Manifest::new("graph", &ctx.cfg);
    let plan = GraphPlan::from_args(ctx, args, &mut man)?;
    emit(ctx, &plan, &mut man, &args.out)?;
    man.finish(&args.out)?;
    Ok(())
}

pub fn emit(ctx: &Ctx, plan: &GraphPlan, man: &mut Manifest, out: &Path) -> Result<()> {
    let phi = ctx.read_phi()?;
    man.input(&ctx.phi_path())?;

    let mut graph = build_graph_with(&phi, plan.threshold, plan.rule)?;
    let registry = ctx.product_registry()?;
    if !registry.is_empty() {
        graph.annotate_names(&registry);
    }
    if ctx.sophistication_path().exists() {
        let (scores, _) = ctx.read_sophistication()?;
        man.input(&ctx.sophistication_path())?;
        graph.annotate_sophistication(&scores);
    } else {
        println!("graph: no sophistication cache; nodes carry no scores");
    }

    let annotations = plan.annotations.as_ref().map(|list| {
        let codes: Vec<String> = graph.nodes.iter().map(|n| n.code.clone()).collect();
        align_annotations(list.clone(), &codes)
    });
    let coords = plan.layout.then(|| layout(&graph, plan.seed));

    for format in &plan.formats {
        let (format, name) = format.as_format();
        let mut bytes = Vec::new();
        export_graph(
            &graph,
            annotations.as_deref(),
            coords.as_ref(),
            format,
            &mut bytes,
        )?;
        man.output(out, name, &bytes)?;
    }

    if !plan.percolation_grid.is_empty() {
        let points = percolation_sweep(&phi, &plan.percolation_grid, plan.rule)?;
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["threshold", "giant_fraction", "edge_count"])?;
        for p in &points {
            w.write_record([
                p.threshold.to_string(),
                p.giant_fraction.to_string(),
                p.edge_count.to_string(),
            ])?;
        }
        man.output(out, "percolation.csv", &w.into_inner().expect("vec writer"))?;
        match percolation_threshold(&points) {
            Some(t) => println!("graph percolation: giant component holds past threshold {t}"),
            None => println!("graph percolation: giant component never reaches half the nodes"),
        }
    }

    println!(
        "graph: {} nodes, {} edges at threshold {} ({} component(s), {} isolated)",
        graph.nodes.len(),
        graph.edges.len(),
        plan.threshold,
        graph.components.len(),
        graph.isolated.len()
    );
    Ok(())
}
