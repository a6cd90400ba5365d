//! Cell-by-cell disagreement between two networks.

use std::fmt::Write as _;

use thiserror::Error;

use crate::iot::FlowMatrix;
use crate::stats::quantile_sorted;

/// Probabilities of the quantile report columns.
pub const REPORT_PROBS: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiffError {
    #[error("including one-sided zeros needs a positive scale floor")]
    ScaleFloorRequired,
    #[error("scale floor {0} must be positive and finite")]
    InvalidScaleFloor(f64),
    #[error("sample {0} is not positive")]
    NonPositiveSample(f64),
    #[error("empty sample")]
    EmptySample,
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("histogram needs at least one bin")]
    NoBins,
}

/// Treatment of cells that are zero in exactly one matrix. Cells zero in
/// both are always skipped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ZeroPolicy {
    DropOneSided,
    /// Keep every cell, dividing by `max(min(a, b), scale_floor)`.
    Include { scale_floor: Option<f64> },
}

fn pairs(a: &FlowMatrix, b: &FlowMatrix) -> Vec<(f64, f64)> {
    let (a, b) = FlowMatrix::align(a, b);
    a.cells().iter().copied().zip(b.cells().iter().copied()).filter(|&(x, y)| x > 0.0 || y > 0.0).collect()
}

fn cell_diffs(
    a: &FlowMatrix,
    b: &FlowMatrix,
    policy: ZeroPolicy,
    f: impl Fn(f64, f64, f64) -> f64,
) -> Result<Vec<f64>, DiffError> {
    let cells = pairs(a, b);
    match policy {
        ZeroPolicy::DropOneSided => Ok(cells
            .into_iter()
            .filter(|&(x, y)| x > 0.0 && y > 0.0)
            .map(|(x, y)| f(x, y, x.min(y)))
            .collect()),
        ZeroPolicy::Include { scale_floor } => {
            let floor = scale_floor.ok_or(DiffError::ScaleFloorRequired)?;
            if !(floor.is_finite() && floor > 0.0) {
                return Err(DiffError::InvalidScaleFloor(floor));
            }
            Ok(cells.into_iter().map(|(x, y)| f(x, y, x.min(y).max(floor))).collect())
        }
    }
}

/// `max(a, b) / min(a, b)` per cell, in row-major order of the common labels.
pub fn proportional_diff(a: &FlowMatrix, b: &FlowMatrix, policy: ZeroPolicy) -> Result<Vec<f64>, DiffError> {
    cell_diffs(a, b, policy, |x, y, denom| x.max(y) / denom)
}

/// `100 · |a − b| / min(a, b)` per cell.
pub fn scaled_pct_diff(a: &FlowMatrix, b: &FlowMatrix, policy: ZeroPolicy) -> Result<Vec<f64>, DiffError> {
    cell_diffs(a, b, policy, |x, y, denom| 100.0 * (x - y).abs() / denom)
}

/// Type-7 quantiles.
pub fn quantiles(xs: &[f64], probs: &[f64]) -> Result<Vec<f64>, DiffError> {
    if xs.is_empty() {
        return Err(DiffError::EmptySample);
    }
    if let Some(&p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(DiffError::InvalidProbability(p));
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(probs.iter().map(|&p| quantile_sorted(&sorted, p)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `bins + 1` edges in log10 units.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Equal-width bins over `[log10 min, log10 max]`. Bins are closed on the
/// right, and the first bin also holds the minimum.
pub fn log10_histogram(xs: &[f64], bins: usize) -> Result<Histogram, DiffError> {
    if bins == 0 {
        return Err(DiffError::NoBins);
    }
    if xs.is_empty() {
        return Err(DiffError::EmptySample);
    }
    if let Some(&bad) = xs.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(DiffError::NonPositiveSample(bad));
    }
    let logs: Vec<f64> = xs.iter().map(|v| v.log10()).collect();
    let lo = logs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Ok(Histogram { edges: vec![lo, hi], counts: vec![xs.len()] });
    }
    let width = (hi - lo) / bins as f64;
    let edges = (0..=bins).map(|k| if k == bins { hi } else { lo + k as f64 * width }).collect();
    let mut counts = vec![0; bins];
    for l in logs {
        let k = ((l - lo) / width).ceil() as isize - 1;
        counts[k.clamp(0, bins as isize - 1) as usize] += 1;
    }
    Ok(Histogram { edges, counts })
}

pub fn histogram_csv(h: &Histogram) -> String {
    let mut s = String::from("log10_lo,log10_hi,count\n");
    for (k, c) in h.counts.iter().enumerate() {
        writeln!(s, "{},{},{}", h.edges[k], h.edges[k + 1], c).unwrap();
    }
    s
}

/// One labelled row per sample with 25/50/75/100% quantile columns.
pub fn quantile_csv(rows: &[(String, Vec<f64>)]) -> Result<String, DiffError> {
    let mut s = String::from("label,25%,50%,75%,100%\n");
    for (label, xs) in rows {
        let q = quantiles(xs, &REPORT_PROBS)?;
        writeln!(s, "{label},{},{},{},{}", q[0], q[1], q[2], q[3]).unwrap();
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iot::WeightKind;

    fn fm(cells: Vec<f64>) -> FlowMatrix {
        FlowMatrix::new(vec!["a".into(), "b".into()], cells, WeightKind::Value, None).unwrap()
    }

    #[test]
    fn ratio_and_percent() {
        let a = fm(vec![10.0, 3.0, 0.0, 0.0]);
        let b = fm(vec![5.0, 3.0, 4.0, 0.0]);
        assert_eq!(proportional_diff(&a, &b, ZeroPolicy::DropOneSided).unwrap(), vec![2.0, 1.0]);
        assert_eq!(scaled_pct_diff(&a, &b, ZeroPolicy::DropOneSided).unwrap(), vec![100.0, 0.0]);
        assert_eq!(
            scaled_pct_diff(&a, &b, ZeroPolicy::Include { scale_floor: None }),
            Err(DiffError::ScaleFloorRequired)
        );
        let inc = ZeroPolicy::Include { scale_floor: Some(1.0) };
        assert_eq!(proportional_diff(&a, &b, inc).unwrap(), vec![2.0, 1.0, 4.0]);
        assert_eq!(scaled_pct_diff(&a, &b, inc).unwrap(), vec![100.0, 0.0, 400.0]);
    }

    #[test]
    fn quantile_by_hand() {
        let q = quantiles(&[4.0, 1.0, 3.0, 2.0], &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(q, vec![1.0, 2.5, 4.0]);
        assert_eq!(quantiles(&[], &[0.5]), Err(DiffError::EmptySample));
        assert_eq!(quantiles(&[1.0], &[1.5]), Err(DiffError::InvalidProbability(1.5)));
    }

    #[test]
    fn histogram_bins() {
        let h = log10_histogram(&[1.0, 10.0, 100.0], 2).unwrap();
        assert_eq!(h.edges, vec![0.0, 1.0, 2.0]);
        assert_eq!(h.counts, vec![2, 1]);
        let single = log10_histogram(&[7.0, 7.0], 5).unwrap();
        assert_eq!(single.counts, vec![2]);
        assert_eq!(log10_histogram(&[1.0, 0.0], 2), Err(DiffError::NonPositiveSample(0.0)));
    }

    #[test]
    fn csv_shapes() {
        let csv = quantile_csv(&[("IxI".to_string(), vec![1.0, 2.0, 3.0, 4.0, 5.0])]).unwrap();
        assert_eq!(csv, "label,25%,50%,75%,100%\nIxI,2,3,4,5\n");
        let h = log10_histogram(&[1.0, 10.0, 100.0], 2).unwrap();
        assert_eq!(histogram_csv(&h), "log10_lo,log10_hi,count\n0,1,2\n1,2,1\n");
    }
}
