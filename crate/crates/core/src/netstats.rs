//! Aggregate statistics of a weighted directed network.
//!
//! With `E` the number of positive cells (self-loops included) and `W` the
//! total weight:
//!
//! - density = E / n_active², where n_active counts sectors with at least
//!   one incident edge
//! - average degree = E / n_total, average strength = W / n_total
//! - average weight = W / E
//!
//! Reciprocity, transitivity and assortativity ignore self-loops and are
//! `None` when undefined.

use std::fmt::Write as _;

use crate::iot::{truncate, Direction, FlowMatrix, IotError};

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkStatsReport {
    pub density: f64,
    pub avg_degree: f64,
    pub avg_strength: f64,
    pub avg_weight: f64,
    pub reciprocity: Option<f64>,
    pub transitivity: Option<f64>,
    pub assortativity: Option<f64>,
    pub n_total: usize,
    pub n_active: usize,
    pub n_edges: usize,
}

pub const UNDEFINED: &str = "NA";

pub(crate) fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| UNDEFINED.to_string(), |x| x.to_string())
}

impl NetworkStatsReport {
    pub const CSV_HEADER: &'static str = "density,avg_degree,avg_strength,avg_weight,reciprocity,\
transitivity,assortativity,n_total,n_active,n_edges";

    pub fn csv_fields(&self) -> String {
        let mut s = String::new();
        write!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            self.density,
            self.avg_degree,
            self.avg_strength,
            self.avg_weight,
            fmt_opt(self.reciprocity),
            fmt_opt(self.transitivity),
            fmt_opt(self.assortativity),
            self.n_total,
            self.n_active,
            self.n_edges
        )
        .unwrap();
        s
    }
}

/// Adjacency of the loop-free graph as bitsets.
struct BitGraph {
    words: usize,
    rows: Vec<u64>,
}

impl BitGraph {
    fn new(n: usize) -> Self {
        let words = n.div_ceil(64).max(1);
        BitGraph { words, rows: vec![0; n * words] }
    }

    fn set(&mut self, i: usize, j: usize) {
        self.rows[i * self.words + j / 64] |= 1 << (j % 64);
    }

    fn row(&self, i: usize) -> &[u64] {
        &self.rows[i * self.words..(i + 1) * self.words]
    }

    fn has(&self, i: usize, j: usize) -> bool {
        self.row(i)[j / 64] >> (j % 64) & 1 == 1
    }

    fn common(&self, i: usize, j: usize) -> u64 {
        self.row(i).iter().zip(self.row(j)).map(|(a, b)| (a & b).count_ones() as u64).sum()
    }
}

pub fn network_stats(m: &FlowMatrix) -> NetworkStatsReport {
    let n = m.n();
    let edge = |i: usize, j: usize| m.get(i, j) > 0.0;

    let mut active = vec![false; n];
    let mut n_edges = 0usize;
    let mut out_deg = vec![0u64; n];
    let mut in_deg = vec![0u64; n];
    let mut sym = BitGraph::new(n);
    let (mut directed, mut mutual) = (0u64, 0u64);
    for i in 0..n {
        for j in 0..n {
            if !edge(i, j) {
                continue;
            }
            n_edges += 1;
            active[i] = true;
            active[j] = true;
            if i != j {
                directed += 1;
                out_deg[i] += 1;
                in_deg[j] += 1;
                sym.set(i, j);
                sym.set(j, i);
                if edge(j, i) {
                    mutual += 1;
                }
            }
        }
    }
    let n_active = active.iter().filter(|&&a| a).count();
    let total = m.total();
    let per_node = |x: f64| if n == 0 { 0.0 } else { x / n as f64 };

    let reciprocity = (directed > 0).then(|| mutual as f64 / directed as f64);

    // closed triples: every edge {i,j} closes |N(i) ∩ N(j)| wedges
    let mut closed = 0u64;
    let mut wedges = 0u64;
    for i in 0..n {
        let k: u64 = sym.row(i).iter().map(|w| w.count_ones() as u64).sum();
        wedges += k * k.saturating_sub(1) / 2;
        for j in (i + 1)..n {
            if sym.has(i, j) {
                closed += sym.common(i, j);
            }
        }
    }
    let transitivity = (wedges > 0).then(|| closed as f64 / wedges as f64);

    let mut xs = Vec::with_capacity(directed as usize);
    let mut ys = Vec::with_capacity(directed as usize);
    for i in 0..n {
        for j in 0..n {
            if i != j && edge(i, j) {
                xs.push(out_deg[i] as f64);
                ys.push(in_deg[j] as f64);
            }
        }
    }
    let assortativity = crate::stats::pearson(&xs, &ys).filter(|_| xs.len() >= 2);

    NetworkStatsReport {
        density: if n_active == 0 { 0.0 } else { n_edges as f64 / (n_active * n_active) as f64 },
        avg_degree: per_node(n_edges as f64),
        avg_strength: per_node(total),
        avg_weight: if n_edges == 0 { 0.0 } else { total / n_edges as f64 },
        reciprocity,
        transitivity,
        assortativity,
        n_total: n,
        n_active,
        n_edges,
    }
}

/// Edge count, average degree and density implied by published averages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImpliedCounts {
    pub edges: f64,
    pub avg_degree: f64,
    pub density: f64,
}

/// Recovers E = n_total · strength / weight and the degree and density it implies.
pub fn implied_counts(avg_strength: f64, avg_weight: f64, n_total: usize, n_active: usize) -> ImpliedCounts {
    let edges = avg_strength * n_total as f64 / avg_weight;
    ImpliedCounts {
        edges,
        avg_degree: edges / n_total as f64,
        density: edges / (n_active * n_active) as f64,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub threshold: f64,
    pub density: f64,
    pub n_edges: usize,
}

/// Density after truncating at each threshold. Shares always come from `m`.
pub fn density_sweep(
    m: &FlowMatrix,
    thresholds: &[f64],
    direction: Direction,
) -> Result<Vec<SweepPoint>, IotError> {
    thresholds
        .iter()
        .map(|&t| {
            let s = network_stats(&truncate(m, t, direction)?);
            Ok(SweepPoint { threshold: t, density: s.density, n_edges: s.n_edges })
        })
        .collect()
}

/// `start:end:step` grid, inclusive of `end` when it lies on the grid.
pub fn threshold_grid(start: f64, end: f64, step: f64) -> Vec<f64> {
    assert!(step > 0.0 && end >= start, "bad threshold grid");
    let steps = ((end - start) / step + 1e-9).floor() as usize;
    (0..=steps).map(|k| start + k as f64 * step).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iot::WeightKind;

    fn fm(n: usize, cells: Vec<f64>) -> FlowMatrix {
        let labels = (0..n).map(|i| format!("s{i}")).collect();
        FlowMatrix::new(labels, cells, WeightKind::Value, None).unwrap()
    }

    #[test]
    fn complete_graph_with_loops() {
        let s = network_stats(&fm(3, vec![1.0; 9]));
        assert_eq!(s.density, 1.0);
        assert_eq!(s.avg_degree, 3.0);
        assert_eq!(s.reciprocity, Some(1.0));
        assert_eq!(s.transitivity, Some(1.0));
        assert_eq!(s.avg_weight, 1.0);
        assert_eq!(s.avg_strength, 3.0);
        // regular graph: constant degrees
        assert_eq!(s.assortativity, None);
    }

    #[test]
    fn empty_graph() {
        let s = network_stats(&fm(4, vec![0.0; 16]));
        assert_eq!((s.density, s.avg_degree, s.avg_strength, s.avg_weight), (0.0, 0.0, 0.0, 0.0));
        assert_eq!((s.reciprocity, s.transitivity, s.assortativity), (None, None, None));
        assert_eq!(s.n_active, 0);
    }

    #[test]
    fn inactive_sector_leaves_density_denominator() {
        // 2 active of 3 sectors, edges 0->1, 1->0, 0->0
        let s = network_stats(&fm(3, vec![1.0, 2.0, 0.0, 3.0, 0.0, 0.0, 0.0, 0.0, 0.0]));
        assert_eq!(s.n_edges, 3);
        assert_eq!(s.n_active, 2);
        assert_eq!(s.density, 0.75);
        assert_eq!(s.avg_degree, 1.0);
        assert_eq!(s.avg_weight, 2.0);
    }

    #[test]
    fn one_way_edges_have_zero_reciprocity() {
        let s = network_stats(&fm(3, vec![0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]));
        assert_eq!(s.reciprocity, Some(0.0));
        // a triangle once symmetrised
        assert_eq!(s.transitivity, Some(1.0));
    }

    #[test]
    fn star_assortativity_is_negative() {
        // hub 0 supplies 1..4, which each supply 0 back
        let n = 5;
        let mut cells = vec![0.0; n * n];
        for j in 1..n {
            cells[j] = 1.0;
            cells[j * n] = 1.0;
        }
        let s = network_stats(&fm(n, cells));
        assert_eq!(s.transitivity, Some(0.0));
        assert!(s.assortativity.unwrap() < 0.0);
    }

    #[test]
    fn published_payment_column_identities() {
        let c = implied_counts(8872.127, 154.505, 104, 104);
        assert!((c.edges - 5972.0).abs() < 1.0);
        assert!((c.avg_degree - 57.423).abs() < 0.05);
        assert!((c.density - 0.552).abs() < 0.001);
    }

    #[test]
    fn grid_includes_end() {
        let g = threshold_grid(0.0, 0.05, 0.0025);
        assert_eq!(g.len(), 21);
        assert!((g[20] - 0.05).abs() < 1e-15);
    }
}
