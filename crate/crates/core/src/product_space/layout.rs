//! Deterministic force-directed coordinates for drawing the space: a seeded
//! Fruchterman-Reingold pass over the connected nodes, with every isolated
//! node parked in a grid to the right of the drawing.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::SpaceGraph;

#[derive(Debug, Clone, PartialEq)]
pub struct LayoutResult {
    /// One `(x, y)` per graph node, in node order.
    pub coordinates: Vec<(f64, f64)>,
    /// Isolated nodes in the order they fill the side grid (by code).
    pub grid_block: Vec<usize>,
}

const ITERATIONS: usize = 150;
const START_TEMPERATURE: f64 = 0.1;

/// Compute coordinates for every node. The same seed always produces the
/// same layout; edge weights strengthen attraction so tight clusters pull
/// closer than loose ones.
pub fn layout(g: &SpaceGraph, seed: u64) -> LayoutResult {
    let n = g.nodes.len();
    let mut is_isolated = vec![false; n];
    for &i in &g.isolated {
        is_isolated[i] = true;
    }
    let connected: Vec<usize> = (0..n).filter(|&i| !is_isolated[i]).collect();
    let mut local = vec![usize::MAX; n];
    for (li, &ni) in connected.iter().enumerate() {
        local[ni] = li;
    }
    let nc = connected.len();
    // ideal pairwise distance for a unit-area drawing
    let k = if nc > 0 { (1.0 / nc as f64).sqrt() } else { 1.0 };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pos: Vec<(f64, f64)> = (0..nc)
        .map(|_| (rng.gen::<f64>(), rng.gen::<f64>()))
        .collect();

    for iteration in 0..ITERATIONS {
        let temperature =
            START_TEMPERATURE * (1.0 - iteration as f64 / ITERATIONS as f64);
        // repulsion between every pair, each node summed in index order so
        // the result does not depend on how rayon splits the range
        let mut disp: Vec<(f64, f64)> = (0..nc)
            .into_par_iter()
            .map(|i| {
                let (xi, yi) = pos[i];
                let mut d = (0.0, 0.0);
                for (j, &(xj, yj)) in pos.iter().enumerate() {
                    if j == i {
                        continue;
                    }
                    let (dx, dy) = (xi - xj, yi - yj);
                    let dist = (dx * dx + dy * dy).sqrt().max(1e-9);
                    let f = k * k / (dist * dist);
                    d.0 += dx * f;
                    d.1 += dy * f;
                }
                d
            })
            .collect();
        for e in &g.edges {
            let (a, b) = (local[e.a], local[e.b]);
            let (dx, dy) = (pos[a].0 - pos[b].0, pos[a].1 - pos[b].1);
            let dist = (dx * dx + dy * dy).sqrt().max(1e-9);
            let f = dist / k * e.weight;
            disp[a].0 -= dx * f;
            disp[a].1 -= dy * f;
            disp[b].0 += dx * f;
            disp[b].1 += dy * f;
        }
        for (p, &(dx, dy)) in pos.iter_mut().zip(&disp) {
            let len = (dx * dx + dy * dy).sqrt();
            if len > 0.0 {
                let step = temperature.min(len) / len;
                p.0 += dx * step;
                p.1 += dy * step;
            }
        }
    }

    let mut coordinates = vec![(0.0, 0.0); n];
    for (li, &ni) in connected.iter().enumerate() {
        coordinates[ni] = pos[li];
    }

    // park isolated nodes in a square-ish grid right of the drawing
    let (mut max_x, mut min_y) = (0.0f64, 0.0f64);
    for &(x, y) in &pos {
        max_x = max_x.max(x);
        min_y = min_y.min(y);
    }
    let mut grid_block = g.isolated.clone();
    grid_block.sort_by(|&a, &b| g.nodes[a].code.cmp(&g.nodes[b].code));
    let cols = (grid_block.len() as f64).sqrt().ceil().max(1.0) as usize;
    let corner_x = max_x + 3.0 * k;
    for (slot, &node) in grid_block.iter().enumerate() {
        coordinates[node] = (
            corner_x + (slot % cols) as f64 * k,
            min_y + (slot / cols) as f64 * k,
        );
    }

    LayoutResult {
        coordinates,
        grid_block,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::product_space::tests::toy_phi;
    use crate::product_space::{build_graph, SpaceEdge};

    fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
        ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
    }

    #[test]
    fn connected_pair_sits_closer_than_the_parked_node() {
        let g = build_graph(&toy_phi(), 0.45).unwrap();
        let l = layout(&g, 7);
        assert_eq!(l.coordinates.len(), 3);
        assert_eq!(l.grid_block, vec![2]);
        let pq = dist(l.coordinates[0], l.coordinates[1]);
        assert!(pq < dist(l.coordinates[0], l.coordinates[2]));
        assert!(pq < dist(l.coordinates[1], l.coordinates[2]));
        assert!(l.coordinates.iter().all(|c| c.0.is_finite() && c.1.is_finite()));
    }

    #[test]
    fn linked_pair_settles_near_the_ideal_spacing() {
        let g = SpaceGraph {
            nodes: toy_phi()
                .products
                .iter()
                .take(2)
                .map(|code| super::super::SpaceNode {
                    code: code.clone(),
                    name: String::new(),
                    sector: None,
                    sophistication: None,
                })
                .collect(),
            edges: vec![SpaceEdge {
                a: 0,
                b: 1,
                weight: 1.0,
            }],
            threshold: 0.45,
            rule: super::super::ThresholdRule::Inclusive,
            components: vec![vec![0, 1]],
            isolated: vec![],
        };
        let l = layout(&g, 42);
        let k = (1.0f64 / 2.0).sqrt();
        let d = dist(l.coordinates[0], l.coordinates[1]);
        assert!((d - k).abs() < 0.5 * k, "distance {d} vs ideal {k}");
    }

    #[test]
    fn same_seed_repeats_and_new_seed_moves() {
        let g = build_graph(&toy_phi(), 0.45).unwrap();
        let a = layout(&g, 11);
        let b = layout(&g, 11);
        assert_eq!(a, b);
        let c = layout(&g, 12);
        assert_ne!(a.coordinates[0], c.coordinates[0]);
    }

    #[test]
    fn grid_fills_by_code_even_when_indices_disagree() {
        let mut phi = toy_phi();
        phi.values.fill(0.0);
        for i in 0..3 {
            phi.values[(i, i)] = 1.0;
        }
        phi.products = vec!["z".into(), "a".into(), "m".into()];
        phi.isolated = vec![true, true, true];
        let g = build_graph(&phi, 0.45).unwrap();
        let l = layout(&g, 1);
        assert_eq!(l.grid_block, vec![1, 2, 0]); // a, m, z
        // codes fill the grid left-to-right then wrap
        let (a, m, z) = (l.coordinates[1], l.coordinates[2], l.coordinates[0]);
        assert!(a.0 < m.0 && a.1 == m.1);
        assert!(z.1 > a.1 && z.0 == a.0);
    }

    #[test]
    fn fully_isolated_graph_still_lays_out() {
        let mut phi = toy_phi();
        phi.values.fill(0.0);
        phi.isolated = vec![true, true, true];
        let g = build_graph(&phi, 0.45).unwrap();
        let l = layout(&g, 5);
        assert_eq!(l.grid_block.len(), 3);
        assert!(l.coordinates.iter().all(|c| c.0.is_finite()));
    }
}
