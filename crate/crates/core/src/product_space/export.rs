//! Graph exchange formats: a plain edge-list CSV, a node-link JSON document
//! that survives a round trip, and GEXF 1.2 for desktop graph tools.

use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{connectivity, GraphError, LayoutResult, SpaceEdge, SpaceGraph, SpaceNode, ThresholdRule};
use crate::trade_data::SectorClass;
use crate::views::{Growth, NodeAnnotation, Tier};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    EdgeCsv,
    NodeLinkJson,
    Gexf,
}

impl FromStr for GraphFormat {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<GraphFormat, GraphError> {
        match s.to_ascii_lowercase().as_str() {
            "csv" | "edges" | "edge-csv" => Ok(GraphFormat::EdgeCsv),
            "json" | "node-link" | "nodelink" => Ok(GraphFormat::NodeLinkJson),
            "gexf" => Ok(GraphFormat::Gexf),
            other => Err(GraphError::UnknownFormat(other.to_string())),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct NodeLinkDoc {
    threshold: f64,
    rule: ThresholdRule,
    nodes: Vec<NodeRecord>,
    links: Vec<LinkRecord>,
}

#[derive(Serialize, Deserialize)]
struct NodeRecord {
    id: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sector: Option<SectorClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sophistication: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tier: Option<Tier>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    size_value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    growth: Option<Growth>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    decile: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    y: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct LinkRecord {
    source: String,
    target: String,
    weight: f64,
}

fn check_annotations(
    g: &SpaceGraph,
    annotations: Option<&[NodeAnnotation]>,
) -> Result<(), GraphError> {
    if let Some(anns) = annotations {
        if anns.len() != g.nodes.len() {
            return Err(GraphError::AnnotationMismatch(format!(
                "{} annotations for {} nodes",
                anns.len(),
                g.nodes.len()
            )));
        }
        for (node, a) in g.nodes.iter().zip(anns) {
            if node.code != a.product {
                return Err(GraphError::AnnotationMismatch(format!(
                    "annotation `{}` against node `{}`",
                    a.product, node.code
                )));
            }
        }
    }
    Ok(())
}

/// Serialize the graph. Annotations and layout, when given, must be aligned
/// to the node list; the CSV format carries edges only and ignores both.
pub fn export_graph<W: Write>(
    g: &SpaceGraph,
    annotations: Option<&[NodeAnnotation]>,
    layout: Option<&LayoutResult>,
    format: GraphFormat,
    w: W,
) -> Result<(), GraphError> {
    check_annotations(g, annotations)?;
    if let Some(l) = layout {
        if l.coordinates.len() != g.nodes.len() {
            return Err(GraphError::LayoutMismatch);
        }
    }
    match format {
        GraphFormat::EdgeCsv => write_edge_csv(g, w),
        GraphFormat::NodeLinkJson => write_node_link(g, annotations, layout, w),
        GraphFormat::Gexf => write_gexf(g, annotations, layout, w),
    }
}

fn write_edge_csv<W: Write>(g: &SpaceGraph, w: W) -> Result<(), GraphError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["source", "target", "weight"])?;
    for e in &g.edges {
        out.write_record([
            g.nodes[e.a].code.clone(),
            g.nodes[e.b].code.clone(),
            e.weight.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

fn write_node_link<W: Write>(
    g: &SpaceGraph,
    annotations: Option<&[NodeAnnotation]>,
    layout: Option<&LayoutResult>,
    mut w: W,
) -> Result<(), GraphError> {
    let doc = NodeLinkDoc {
        threshold: g.threshold,
        rule: g.rule,
        nodes: g
            .nodes
            .iter()
            .enumerate()
            .map(|(i, n)| {
                let a = annotations.map(|anns| &anns[i]);
                NodeRecord {
                    id: n.code.clone(),
                    name: n.name.clone(),
                    sector: n.sector,
                    sophistication: n.sophistication,
                    tier: a.and_then(|a| a.tier),
                    size_value: a.and_then(|a| a.size_value),
                    growth: a.and_then(|a| a.growth),
                    decile: a.and_then(|a| a.decile),
                    x: layout.map(|l| l.coordinates[i].0),
                    y: layout.map(|l| l.coordinates[i].1),
                }
            })
            .collect(),
        links: g
            .edges
            .iter()
            .map(|e| LinkRecord {
                source: g.nodes[e.a].code.clone(),
                target: g.nodes[e.b].code.clone(),
                weight: e.weight,
            })
            .collect(),
    };
    serde_json::to_writer_pretty(&mut w, &doc)?;
    w.write_all(b"\n")?;
    Ok(())
}

/// Rebuild a graph from its node-link document. Components and isolation are
/// derived from the edges, so a document written by [`export_graph`] imports
/// back to an identical graph. View and layout fields are not graph state
/// and are dropped.
pub fn import_node_link(r: impl std::io::Read) -> Result<SpaceGraph, GraphError> {
    let doc: NodeLinkDoc = serde_json::from_reader(r)?;
    let mut index_of = std::collections::BTreeMap::new();
    let mut nodes = Vec::with_capacity(doc.nodes.len());
    for (i, n) in doc.nodes.into_iter().enumerate() {
        if index_of.insert(n.id.clone(), i).is_some() {
            return Err(GraphError::Malformed(format!("duplicate node `{}`", n.id)));
        }
        nodes.push(SpaceNode {
            code: n.id,
            name: n.name,
            sector: n.sector,
            sophistication: n.sophistication,
        });
    }
    let mut edges = Vec::with_capacity(doc.links.len());
    for l in &doc.links {
        let a = *index_of
            .get(&l.source)
            .ok_or_else(|| GraphError::Malformed(format!("unknown node `{}`", l.source)))?;
        let b = *index_of
            .get(&l.target)
            .ok_or_else(|| GraphError::Malformed(format!("unknown node `{}`", l.target)))?;
        if a == b {
            return Err(GraphError::Malformed(format!("self edge at `{}`", l.source)));
        }
        edges.push(SpaceEdge {
            a: a.min(b),
            b: a.max(b),
            weight: l.weight,
        });
    }
    let (components, isolated) = connectivity(nodes.len(), &edges);
    Ok(SpaceGraph {
        nodes,
        edges,
        threshold: doc.threshold,
        rule: doc.rule,
        components,
        isolated,
    })
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            _ => out.push(c),
        }
    }
    out
}

fn tier_label(t: Tier) -> &'static str {
    match t {
        Tier::Strong => "strong",
        Tier::Marginal => "marginal",
        Tier::Absent => "absent",
    }
}

fn growth_label(g: Growth) -> &'static str {
    match g {
        Growth::Increased => "increased",
        Growth::Decreased => "decreased",
        Growth::Flat => "flat",
    }
}

fn write_gexf<W: Write>(
    g: &SpaceGraph,
    annotations: Option<&[NodeAnnotation]>,
    layout: Option<&LayoutResult>,
    mut w: W,
) -> Result<(), GraphError> {
    writeln!(w, r#"<?xml version="1.0" encoding="UTF-8"?>"#)?;
    let viz = if layout.is_some() {
        r#" xmlns:viz="http://www.gexf.net/1.2draft/viz""#
    } else {
        ""
    };
    writeln!(
        w,
        r#"<gexf xmlns="http://www.gexf.net/1.2draft"{viz} version="1.2">"#
    )?;
    writeln!(w, r#"  <graph mode="static" defaultedgetype="undirected">"#)?;
    writeln!(w, r#"    <attributes class="node">"#)?;
    writeln!(w, r#"      <attribute id="0" title="name" type="string"/>"#)?;
    writeln!(w, r#"      <attribute id="1" title="sector" type="string"/>"#)?;
    writeln!(
        w,
        r#"      <attribute id="2" title="sophistication" type="double"/>"#
    )?;
    writeln!(w, r#"      <attribute id="3" title="tier" type="string"/>"#)?;
    writeln!(
        w,
        r#"      <attribute id="4" title="export_value" type="double"/>"#
    )?;
    writeln!(w, r#"      <attribute id="5" title="growth" type="string"/>"#)?;
    writeln!(
        w,
        r#"      <attribute id="6" title="opportunity_decile" type="integer"/>"#
    )?;
    writeln!(w, r#"    </attributes>"#)?;
    writeln!(w, r#"    <nodes>"#)?;
    for (i, n) in g.nodes.iter().enumerate() {
        let label = if n.name.is_empty() { &n.code } else { &n.name };
        writeln!(
            w,
            r#"      <node id="{}" label="{}">"#,
            xml_escape(&n.code),
            xml_escape(label)
        )?;
        let a = annotations.map(|anns| &anns[i]);
        let mut attvalues: Vec<(u8, String)> = Vec::new();
        if !n.name.is_empty() {
            attvalues.push((0, xml_escape(&n.name)));
        }
        if let Some(sector) = n.sector {
            attvalues.push((1, sector.label().to_string()));
        }
        if let Some(s) = n.sophistication {
            attvalues.push((2, s.to_string()));
        }
        if let Some(t) = a.and_then(|a| a.tier) {
            attvalues.push((3, tier_label(t).to_string()));
        }
        if let Some(v) = a.and_then(|a| a.size_value) {
            attvalues.push((4, v.to_string()));
        }
        if let Some(gr) = a.and_then(|a| a.growth) {
            attvalues.push((5, growth_label(gr).to_string()));
        }
        if let Some(d) = a.and_then(|a| a.decile) {
            attvalues.push((6, d.to_string()));
        }
        if !attvalues.is_empty() {
            writeln!(w, r#"        <attvalues>"#)?;
            for (id, value) in attvalues {
                writeln!(w, r#"          <attvalue for="{id}" value="{value}"/>"#)?;
            }
            writeln!(w, r#"        </attvalues>"#)?;
        }
        if let Some(l) = layout {
            let (x, y) = l.coordinates[i];
            writeln!(w, r#"        <viz:position x="{x}" y="{y}" z="0"/>"#)?;
        }
        writeln!(w, r#"      </node>"#)?;
    }
    writeln!(w, r#"    </nodes>"#)?;
    writeln!(w, r#"    <edges>"#)?;
    for (i, e) in g.edges.iter().enumerate() {
        writeln!(
            w,
            r#"      <edge id="{}" source="{}" target="{}" weight="{}"/>"#,
            i,
            xml_escape(&g.nodes[e.a].code),
            xml_escape(&g.nodes[e.b].code),
            e.weight
        )?;
    }
    writeln!(w, r#"    </edges>"#)?;
    writeln!(w, r#"  </graph>"#)?;
    writeln!(w, r#"</gexf>"#)?;
    Ok(())
}
