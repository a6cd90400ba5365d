//! Katz-Bonacich influence vector over input-share networks.
//!
//! With `W[i][j]` the share of supplier `i` in buyer `j`'s inputs and a
//! labour share `α`, the influence vector solves
//!
//! ```text
//! v = (α / n) · [I − (1 − α) W]⁻¹ · 1
//! ```
//!
//! and is rescaled to sum to one. A sector that supplies much of the
//! economy's inputs, directly or through its customers, ranks high.
//! Column sums of `W` are at most one, so the spectral radius of
//! `(1 − α) W` is below one and the system is always solvable.

use std::collections::HashMap;
use std::io::Read;

use thiserror::Error;

use crate::concordance::{apply_filter, FilterError, SectorFilter};
use crate::iot::{to_shares, Direction, FlowMatrix, IotError, WeightKind};
use crate::linalg;
use crate::period::Period;

const COLUMN_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CentralityError {
    #[error("expected an input-share matrix, got {0}")]
    NotShareMatrix(WeightKind),
    #[error("input shares of `{sector}` sum to {sum} > 1")]
    ColumnSumExceedsOne { sector: String, sum: f64 },
    #[error("labour share {0} outside (0, 1)")]
    InvalidAlpha(f64),
    #[error("empty network")]
    Empty,
    #[error("linear system is singular")]
    Singular,
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Iot(#[from] IotError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceVector {
    pub labels: Vec<String>,
    /// Nonnegative, sums to one.
    pub values: Vec<f64>,
    pub alpha: f64,
    /// Weight of the flows the shares were computed from, when known.
    pub source_kind: Option<WeightKind>,
    pub period: Option<Period>,
}

pub fn influence_vector(shares: &FlowMatrix, alpha: f64) -> Result<InfluenceVector, CentralityError> {
    if shares.kind() != WeightKind::InputShare {
        return Err(CentralityError::NotShareMatrix(shares.kind()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(CentralityError::InvalidAlpha(alpha));
    }
    let n = shares.n();
    if n == 0 {
        return Err(CentralityError::Empty);
    }
    for (j, &sum) in shares.column_sums().iter().enumerate() {
        if sum > 1.0 + COLUMN_SUM_TOLERANCE {
            return Err(CentralityError::ColumnSumExceedsOne {
                sector: shares.labels()[j].clone(),
                sum,
            });
        }
    }

    // Solve in label order so that relabelling the input permutes the
    // output bit for bit.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| shares.labels()[a].cmp(&shares.labels()[b]));
    let decay = 1.0 - alpha;
    let mut system = vec![0.0; n * n];
    for (r, &i) in order.iter().enumerate() {
        for (c, &j) in order.iter().enumerate() {
            let identity = if r == c { 1.0 } else { 0.0 };
            system[r * n + c] = identity - decay * shares.get(i, j);
        }
    }
    let rhs = vec![alpha / n as f64; n];
    let solved = linalg::solve(system, rhs).ok_or(CentralityError::Singular)?;
    let total: f64 = solved.iter().sum();
    let mut values = vec![0.0; n];
    for (r, &i) in order.iter().enumerate() {
        values[i] = solved[r] / total;
    }
    Ok(InfluenceVector {
        labels: shares.labels().to_vec(),
        values,
        alpha,
        source_kind: None,
        period: shares.period(),
    })
}

/// Influence vector of a value or count network, optionally after removing
/// filtered sectors. Shares are recomputed on the reduced network.
pub fn influence_from_flows(
    flows: &FlowMatrix,
    alpha: f64,
    filter: Option<&SectorFilter>,
) -> Result<InfluenceVector, CentralityError> {
    let reduced = match filter {
        Some(f) => apply_filter(flows, f)?,
        None => flows.clone(),
    };
    let shares = to_shares(&reduced, Direction::Input, None)?;
    let mut v = influence_vector(&shares, alpha)?;
    v.source_kind = Some(flows.kind());
    Ok(v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedSector {
    pub code: String,
    pub value: f64,
    pub description: Option<String>,
}

/// The `k` most influential sectors, ties broken by ascending code.
pub fn top_k(
    v: &InfluenceVector,
    k: usize,
    descriptions: Option<&HashMap<String, String>>,
) -> Vec<RankedSector> {
    assert!(k >= 1, "k must be positive");
    let mut idx: Vec<usize> = (0..v.values.len()).collect();
    idx.sort_by(|&a, &b| {
        v.values[b].total_cmp(&v.values[a]).then_with(|| v.labels[a].cmp(&v.labels[b]))
    });
    idx.into_iter()
        .take(k)
        .map(|i| RankedSector {
            code: v.labels[i].clone(),
            value: v.values[i],
            description: descriptions.and_then(|d| d.get(&v.labels[i]).cloned()),
        })
        .collect()
}

/// Empirical `P(X ≥ x)` at each distinct value, ascending in `x`.
pub fn ccdf(values: &[f64]) -> Vec<(f64, f64)> {
    assert!(!values.is_empty(), "ccdf of empty sample");
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut out = Vec::new();
    for (i, &x) in sorted.iter().enumerate() {
        if i == 0 || sorted[i - 1] != x {
            out.push((x, (sorted.len() - i) as f64 / n));
        }
    }
    out
}

/// Reads `code,description` rows.
pub fn read_descriptions<R: Read>(reader: R) -> Result<HashMap<String, String>, csv::Error> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let mut out = HashMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() >= 2 {
            out.insert(rec[0].to_string(), rec[1].to_string());
        }
    }
    Ok(out)
}
