//! Network distance between sectors and how strongly their growth rates
//! co-move at each distance.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt::Write as _;

use thiserror::Error;

use crate::iot::{to_shares, Direction, FlowMatrix, IotError, WeightKind};
use crate::netstats::fmt_opt;
use crate::period::{Frequency, Period};
use crate::series::{correlate, paired, yoy_growth, TimeSeries, Window};
use crate::stats::Method;

/// Months needed before any year-on-year growth rate exists.
pub const MIN_MONTHS: usize = 13;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistcorrError {
    #[error("need at least {MIN_MONTHS} monthly matrices, got {0}")]
    TooFewPeriods(usize),
    #[error("monthly matrix {0} has no monthly period")]
    MissingPeriod(usize),
    #[error("period {0} appears twice")]
    DuplicatePeriod(Period),
    #[error(transparent)]
    Iot(#[from] IotError),
}

/// Hop counts; `None` marks unreachable pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    pub labels: Vec<String>,
    pub hops: Vec<Option<u32>>,
    pub threshold: f64,
    /// Whether links were treated as undirected.
    pub symmetrized: bool,
}

impl DistanceMatrix {
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<u32> {
        self.hops[i * self.n() + j]
    }
}

/// Drops links with input share below `threshold`, then counts the fewest
/// hops between every ordered pair. A directed link `i → j` means `i`
/// supplies `j`.
pub fn shortest_paths(m: &FlowMatrix, threshold: f64, symmetrize: bool) -> Result<DistanceMatrix, IotError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(IotError::InvalidThreshold(threshold));
    }
    let shares = to_shares(m, Direction::Input, None)?;
    let n = m.n();
    let link = |i: usize, j: usize| i != j && shares.get(i, j) > 0.0 && shares.get(i, j) >= threshold;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            if link(i, j) || (symmetrize && link(j, i)) {
                adj[i].push(j);
            }
        }
    }
    let mut hops = vec![None; n * n];
    let mut queue = VecDeque::new();
    for s in 0..n {
        hops[s * n + s] = Some(0);
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            let d = hops[s * n + u].unwrap();
            for &v in &adj[u] {
                if hops[s * n + v].is_none() {
                    hops[s * n + v] = Some(d + 1);
                    queue.push_back(v);
                }
            }
        }
    }
    Ok(DistanceMatrix { labels: m.labels().to_vec(), hops, threshold, symmetrized: symmetrize })
}

/// How pair correlations at one distance are summarised.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregation {
    /// Mean of the per-pair coefficients.
    Mean,
    /// One coefficient over the pooled observations of every pair, each
    /// pair entered in both orientations.
    Pooled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceBin {
    pub distance: u32,
    pub mean_corr: Option<f64>,
    pub n_pairs: usize,
    pub n_undefined: usize,
}

/// Monthly year-on-year growth of every sector's input (column) or output
/// (row) total. Sectors missing from a month have no observation there.
pub fn sector_growth(
    monthly: &[FlowMatrix],
    labels: &[String],
    side: Direction,
) -> Result<Vec<TimeSeries>, DistcorrError> {
    let mut dated: Vec<(Period, &FlowMatrix)> = Vec::with_capacity(monthly.len());
    for (k, m) in monthly.iter().enumerate() {
        match m.period() {
            Some(p) if p.frequency() == Frequency::Monthly => dated.push((p, m)),
            _ => return Err(DistcorrError::MissingPeriod(k)),
        }
    }
    dated.sort_by_key(|(p, _)| *p);
    if let Some(w) = dated.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(DistcorrError::DuplicatePeriod(w[0].0));
    }
    let mut levels: Vec<Vec<(Period, f64)>> = vec![Vec::new(); labels.len()];
    for (p, m) in dated {
        let sums = match side {
            Direction::Input => m.column_sums(),
            Direction::Output => m.row_sums(),
        };
        let pos: HashMap<&str, usize> = m.labels().iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
        for (k, label) in labels.iter().enumerate() {
            if let Some(&i) = pos.get(label.as_str()) {
                levels[k].push((p, sums[i]));
            }
        }
    }
    Ok(levels
        .into_iter()
        .map(|obs| yoy_growth(&TimeSeries::new(Frequency::Monthly, obs).expect("sorted unique periods")))
        .collect())
}

#[derive(Default)]
struct Accumulator {
    coefs: Vec<f64>,
    n_pairs: usize,
    n_undefined: usize,
    pooled_x: Vec<f64>,
    pooled_y: Vec<f64>,
}

/// Correlation of sector growth rates grouped by network distance.
///
/// Pairs whose correlation is undefined are left out of the summary and
/// counted in `n_undefined`. Bins are ordered by distance; unreachable
/// pairs are ignored.
pub fn growth_corr_by_distance(
    monthly: &[FlowMatrix],
    distances: &DistanceMatrix,
    side: Direction,
    method: Method,
    window: &Window,
    aggregation: Aggregation,
) -> Result<Vec<DistanceBin>, DistcorrError> {
    if monthly.len() < MIN_MONTHS {
        return Err(DistcorrError::TooFewPeriods(monthly.len()));
    }
    let growth = sector_growth(monthly, &distances.labels, side)?;
    let n = distances.n();

    // canonical order: by distance, then label pair
    let mut pairs: Vec<(u32, usize, usize)> = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = match (distances.get(i, j), distances.get(j, i)) {
                (Some(a), Some(b)) => Some(a.min(b)),
                (a, b) => a.or(b),
            };
            if let Some(d) = d.filter(|&d| d > 0) {
                let (a, b) = if distances.labels[i] <= distances.labels[j] { (i, j) } else { (j, i) };
                pairs.push((d, a, b));
            }
        }
    }
    pairs.sort_by(|x, y| {
        x.0.cmp(&y.0)
            .then_with(|| distances.labels[x.1].cmp(&distances.labels[y.1]))
            .then_with(|| distances.labels[x.2].cmp(&distances.labels[y.2]))
    });

    let mut bins: BTreeMap<u32, Accumulator> = BTreeMap::new();
    for (d, i, j) in pairs {
        let e = bins.entry(d).or_default();
        e.n_pairs += 1;
        match aggregation {
            Aggregation::Mean => match correlate(&growth[i], &growth[j], method, window) {
                Ok(r) => e.coefs.push(r),
                Err(_) => e.n_undefined += 1,
            },
            Aggregation::Pooled => {
                let (x, y) = paired(&growth[i], &growth[j], window);
                if x.is_empty() {
                    e.n_undefined += 1;
                }
                // both orientations, so the pooled coefficient is symmetric in the pair
                e.pooled_x.extend(&x);
                e.pooled_x.extend(&y);
                e.pooled_y.extend(&y);
                e.pooled_y.extend(&x);
            }
        }
    }
    Ok(bins
        .into_iter()
        .map(|(distance, acc)| {
            let mean_corr = match aggregation {
                Aggregation::Mean => {
                    (!acc.coefs.is_empty()).then(|| acc.coefs.iter().sum::<f64>() / acc.coefs.len() as f64)
                }
                Aggregation::Pooled => crate::series::correlate_vectors(&acc.pooled_x, &acc.pooled_y, method).ok(),
            };
            DistanceBin { distance, mean_corr, n_pairs: acc.n_pairs, n_undefined: acc.n_undefined }
        })
        .collect())
}

pub const CSV_HEADER: &str = "threshold,side,weight,method,distance,mean_corr,n_pairs,n_undefined";

pub fn to_csv(bins: &[DistanceBin], threshold: f64, side: Direction, weight: WeightKind, method: Method) -> String {
    let side = match side {
        Direction::Input => "input",
        Direction::Output => "output",
    };
    let mut s = String::new();
    writeln!(s, "{CSV_HEADER}").unwrap();
    for b in bins {
        writeln!(
            s,
            "{threshold},{side},{weight},{method},{},{},{},{}",
            b.distance,
            fmt_opt(b.mean_corr),
            b.n_pairs,
            b.n_undefined
        )
        .unwrap();
    }
    s
}
