//! Slow reference implementations used to check the production code.
//! None of them call into the modules they check.

use crate::iot::FlowMatrix;
use crate::netstats::NetworkStatsReport;

fn naive_pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n < 2 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let cov: f64 = (0..n).map(|k| (x[k] - mx) * (y[k] - my)).sum();
    let vx: f64 = (0..n).map(|k| (x[k] - mx).powi(2)).sum();
    let vy: f64 = (0..n).map(|k| (y[k] - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        None
    } else {
        Some(cov / (vx.sqrt() * vy.sqrt()))
    }
}

/// Product-moment correlation from the textbook formula.
pub fn oracle_pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    naive_pearson(x, y)
}

/// Rank by counting: `1 + #less + (#equal − 1) / 2`.
pub fn oracle_ranks(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|&v| {
            let less = x.iter().filter(|&&w| w < v).count() as f64;
            let equal = x.iter().filter(|&&w| w == v).count() as f64;
            1.0 + less + (equal - 1.0) / 2.0
        })
        .collect()
}

pub fn oracle_spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    naive_pearson(&oracle_ranks(x), &oracle_ranks(y))
}

/// Type-7 quantile by sorting a copy.
pub fn oracle_quantile(xs: &[f64], p: f64) -> f64 {
    let mut s = xs.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let pos = p * (s.len() as f64 - 1.0);
    let below = pos.floor() as usize;
    let above = pos.ceil() as usize;
    s[below] + (pos - below as f64) * (s[above] - s[below])
}

/// Network statistics by exhaustive pair and triple enumeration.
pub fn oracle_network_stats(m: &FlowMatrix) -> NetworkStatsReport {
    let n = m.n();
    let e = |i: usize, j: usize| m.get(i, j) > 0.0;
    let linked = |i: usize, j: usize| i != j && (e(i, j) || e(j, i));

    let mut edges = 0usize;
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            total += m.get(i, j);
            if e(i, j) {
                edges += 1;
            }
        }
    }
    let active = (0..n).filter(|&i| (0..n).any(|j| e(i, j) || e(j, i))).count();

    let mut directed = 0usize;
    let mut both = 0usize;
    for i in 0..n {
        for j in 0..n {
            if i != j && e(i, j) {
                directed += 1;
                if e(j, i) {
                    both += 1;
                }
            }
        }
    }

    let mut open = 0usize;
    let mut closed = 0usize;
    for centre in 0..n {
        for a in 0..n {
            for b in (a + 1)..n {
                if a == centre || b == centre || !linked(centre, a) || !linked(centre, b) {
                    continue;
                }
                open += 1;
                if linked(a, b) {
                    closed += 1;
                }
            }
        }
    }

    let out_deg = |i: usize| (0..n).filter(|&j| j != i && e(i, j)).count() as f64;
    let in_deg = |j: usize| (0..n).filter(|&i| i != j && e(i, j)).count() as f64;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j && e(i, j) {
                xs.push(out_deg(i));
                ys.push(in_deg(j));
            }
        }
    }

    let nf = n as f64;
    NetworkStatsReport {
        density: if active > 0 { edges as f64 / (active * active) as f64 } else { 0.0 },
        avg_degree: if n > 0 { edges as f64 / nf } else { 0.0 },
        avg_strength: if n > 0 { total / nf } else { 0.0 },
        avg_weight: if edges > 0 { total / edges as f64 } else { 0.0 },
        reciprocity: if directed > 0 { Some(both as f64 / directed as f64) } else { None },
        transitivity: if open > 0 { Some(closed as f64 / open as f64) } else { None },
        assortativity: naive_pearson(&xs, &ys),
        n_total: n,
        n_active: active,
        n_edges: edges,
    }
}

/// Partial sum `Σ_{k<terms} ((1 − α) W)^k (α/n) 1`, rescaled to sum to one.
pub fn oracle_neumann_influence(shares: &FlowMatrix, alpha: f64, terms: usize) -> Vec<f64> {
    assert!(terms >= 1);
    let n = shares.n();
    let mut term = vec![alpha / n as f64; n];
    let mut acc = term.clone();
    for _ in 1..terms {
        let mut next = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                next[i] += (1.0 - alpha) * shares.get(i, j) * term[j];
            }
        }
        for i in 0..n {
            acc[i] += next[i];
        }
        term = next;
    }
    let s: f64 = acc.iter().sum();
    acc.iter().map(|v| v / s).collect()
}

/// All-pairs hop counts by Floyd–Warshall over links whose input share
/// (cell over column total) is positive and at least `threshold`.
pub fn oracle_floyd_warshall(m: &FlowMatrix, threshold: f64, symmetrize: bool) -> Vec<Option<u32>> {
    let n = m.n();
    let col: Vec<f64> = (0..n).map(|j| (0..n).map(|i| m.get(i, j)).sum()).collect();
    let link = |i: usize, j: usize| {
        let s = if col[j] > 0.0 { m.get(i, j) / col[j] } else { 0.0 };
        i != j && s > 0.0 && s >= threshold
    };
    const INF: u64 = u64::MAX / 4;
    let mut d = vec![INF; n * n];
    for i in 0..n {
        d[i * n + i] = 0;
        for j in 0..n {
            if link(i, j) || (symmetrize && link(j, i)) {
                d[i * n + j] = d[i * n + j].min(1);
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i * n + k] + d[k * n + j];
                if via < d[i * n + j] {
                    d[i * n + j] = via;
                }
            }
        }
    }
    d.into_iter().map(|v| (v < INF).then_some(v as u32)).collect()
}
