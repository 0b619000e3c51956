//! Threshold sweep: how the giant component dissolves as the edge threshold
//! rises, used to justify where the space is cut.

use serde::{Deserialize, Serialize};

use crate::metrics::ProximityMatrix;

use super::{DisjointSets, GraphError, SpaceEdge, ThresholdRule};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercolationPoint {
    pub threshold: f64,
    /// Largest component size over the count of nodes that have at least one
    /// edge at the sweep's lowest threshold.
    pub giant_fraction: f64,
    pub edge_count: usize,
}

/// Evaluate the graph at every threshold in `grid` (ascending). The fraction
/// denominator is fixed at the lowest threshold so the curve measures decay
/// of one population rather than a moving target.
pub fn percolation_sweep(
    phi: &ProximityMatrix,
    grid: &[f64],
    rule: ThresholdRule,
) -> Result<Vec<PercolationPoint>, GraphError> {
    if grid.is_empty() || grid.iter().any(|t| !t.is_finite()) {
        return Err(GraphError::BadGrid);
    }
    let mut thresholds = grid.to_vec();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();

    let n = phi.products.len();
    let mut all_edges: Vec<SpaceEdge> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let w = phi.values[(i, j)];
            if rule.keeps(w, thresholds[0]) {
                all_edges.push(SpaceEdge {
                    a: i,
                    b: j,
                    weight: w,
                });
            }
        }
    }
    let mut connected = vec![false; n];
    for e in &all_edges {
        connected[e.a] = true;
        connected[e.b] = true;
    }
    let population = connected.iter().filter(|&&c| c).count();

    let mut points = Vec::with_capacity(thresholds.len());
    for &t in &thresholds {
        let mut sets = DisjointSets::new(n);
        let mut edge_count = 0usize;
        for e in &all_edges {
            if rule.keeps(e.weight, t) {
                sets.union(e.a, e.b);
                edge_count += 1;
            }
        }
        let mut sizes = std::collections::HashMap::new();
        for (i, &in_population) in connected.iter().enumerate() {
            if in_population {
                *sizes.entry(sets.find(i)).or_insert(0usize) += 1;
            }
        }
        let giant = sizes
            .values()
            .filter(|&&s| s > 1)
            .copied()
            .max()
            .unwrap_or(0);
        points.push(PercolationPoint {
            threshold: t,
            giant_fraction: if population > 0 {
                giant as f64 / population as f64
            } else {
                0.0
            },
            edge_count,
        });
    }
    Ok(points)
}

/// The largest swept threshold whose giant component still holds at least
/// half the population, if any does.
pub fn percolation_threshold(points: &[PercolationPoint]) -> Option<f64> {
    points
        .iter()
        .filter(|p| p.giant_fraction >= 0.5)
        .map(|p| p.threshold)
        .fold(None, |best, t| Some(best.map_or(t, |b: f64| b.max(t))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::product_space::tests::toy_phi;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn toy_sweep_matches_hand_counts() {
        let points = percolation_sweep(&toy_phi(), &[0.4, 0.6], ThresholdRule::Inclusive).unwrap();
        assert_eq!(points.len(), 2);
        // at 0.4 the p-q edge stands and both connected nodes sit in it
        assert_abs_diff_eq!(points[0].giant_fraction, 1.0, epsilon = 1e-12);
        assert_eq!(points[0].edge_count, 1);
        // at 0.6 the edge is gone
        assert_abs_diff_eq!(points[1].giant_fraction, 0.0, epsilon = 1e-12);
        assert_eq!(points[1].edge_count, 0);
        assert_eq!(percolation_threshold(&points), Some(0.4));
    }

    #[test]
    fn fractions_never_rise_with_the_threshold() {
        // a path graph: weights 0.9 - 0.7 - 0.5 - 0.3 over five nodes
        let mut values = ndarray::Array2::<f64>::eye(5);
        for (i, w) in [(0usize, 0.9), (1, 0.7), (2, 0.5), (3, 0.3)] {
            values[(i, i + 1)] = w;
            values[(i + 1, i)] = w;
        }
        let phi = ProximityMatrix {
            products: (0..5).map(|i| format!("{i}")).collect(),
            values,
            isolated: vec![false; 5],
        };
        let grid: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
        let points = percolation_sweep(&phi, &grid, ThresholdRule::Inclusive).unwrap();
        for w in points.windows(2) {
            assert!(w[1].giant_fraction <= w[0].giant_fraction + 1e-12);
            assert!(w[1].edge_count <= w[0].edge_count);
        }
        // population is everyone connected at 0.1: all five nodes
        assert_abs_diff_eq!(points[0].giant_fraction, 1.0, epsilon = 1e-12);
        // at 0.8 a single 0.9 edge remains: two nodes of five
        assert_abs_diff_eq!(points[7].giant_fraction, 0.4, epsilon = 1e-12);
        // 0.7 keeps its own edge, so three of five nodes still hang together
        assert_eq!(percolation_threshold(&points), Some(0.7));
    }

    #[test]
    fn duplicate_and_unsorted_grids_are_normalized() {
        let phi = toy_phi();
        let points = percolation_sweep(&phi, &[0.6, 0.4, 0.6], ThresholdRule::Inclusive).unwrap();
        assert_eq!(points.len(), 2);
        assert!(points[0].threshold < points[1].threshold);
    }

    #[test]
    fn empty_and_nan_grids_are_rejected() {
        let phi = toy_phi();
        assert!(percolation_sweep(&phi, &[], ThresholdRule::Inclusive).is_err());
        assert!(percolation_sweep(&phi, &[0.4, f64::NAN], ThresholdRule::Inclusive).is_err());
    }

    #[test]
    fn graph_with_no_edges_reports_zero_everywhere() {
        let phi = ProximityMatrix {
            products: vec!["a".into(), "b".into()],
            values: array![[1.0, 0.0], [0.0, 1.0]],
            isolated: vec![true, true],
        };
        let points = percolation_sweep(&phi, &[0.2, 0.4], ThresholdRule::Inclusive).unwrap();
        assert!(points.iter().all(|p| p.giant_fraction == 0.0));
        assert_eq!(percolation_threshold(&points), None);
    }
}
