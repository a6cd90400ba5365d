//! Sector × sector flow matrices built from ledgers, with share
//! normalisation and truncation.
//!
//! Orientation is fixed: `cell[i][j]` is the flow of goods from supplier
//! `i` to buyer `j`, i.e. money paid by `j` to `i`. Row sums are sector
//! outputs and column sums are sector inputs.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::concordance::ConcordanceTable;
use crate::ingest::TransactionRecord;
use crate::period::{Frequency, Period};
use crate::stats::quantile_sorted;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatrixError {
    #[error("{cells} cells do not form a square matrix over {labels} labels")]
    NotSquare { labels: usize, cells: usize },
    #[error("negative entry at ({row}, {col})")]
    NegativeEntry { row: usize, col: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IotError {
    #[error("negative denominator for sector {0}")]
    NegativeDenominator(usize),
    #[error("expected {expected} denominators, found {found}")]
    DenominatorLength { expected: usize, found: usize },
    #[error("cannot compute shares of a {0} matrix")]
    NotWeightMatrix(WeightKind),
    #[error("threshold {0} outside [0, 1]")]
    InvalidThreshold(f64),
    #[error("quantile {0} outside [0, 1)")]
    InvalidQuantile(f64),
}

/// What a matrix cell measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeightKind {
    /// Pounds (ledger-built) or £ million (official tables).
    Value,
    Count,
    InputShare,
    OutputShare,
}

impl WeightKind {
    pub fn is_share(self) -> bool {
        matches!(self, WeightKind::InputShare | WeightKind::OutputShare)
    }
}

impl fmt::Display for WeightKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightKind::Value => "value",
            WeightKind::Count => "count",
            WeightKind::InputShare => "input-share",
            WeightKind::OutputShare => "output-share",
        })
    }
}

impl FromStr for WeightKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "value" => Ok(WeightKind::Value),
            "count" => Ok(WeightKind::Count),
            "input-share" => Ok(WeightKind::InputShare),
            "output-share" => Ok(WeightKind::OutputShare),
            _ => Err(format!("unknown weight kind `{s}`")),
        }
    }
}

/// Ledger weight to aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Weight {
    Value,
    Count,
}

impl From<Weight> for WeightKind {
    fn from(w: Weight) -> Self {
        match w {
            Weight::Value => WeightKind::Value,
            Weight::Count => WeightKind::Count,
        }
    }
}

impl FromStr for Weight {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "value" => Ok(Weight::Value),
            "count" => Ok(Weight::Count),
            _ => Err(format!("unknown weight `{s}`")),
        }
    }
}

/// Share normalisation direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    /// Divide by the buyer's column total.
    Input,
    /// Divide by the supplier's row total.
    Output,
}

impl Direction {
    pub fn share_kind(self) -> WeightKind {
        match self {
            Direction::Input => WeightKind::InputShare,
            Direction::Output => WeightKind::OutputShare,
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Input => "input",
            Direction::Output => "output",
        })
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "input" => Ok(Direction::Input),
            "output" => Ok(Direction::Output),
            _ => Err(format!("unknown direction `{s}`")),
        }
    }
}

/// Dense labelled n×n nonnegative matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowMatrix {
    labels: Vec<String>,
    cells: Vec<f64>,
    kind: WeightKind,
    period: Option<Period>,
}

impl FlowMatrix {
    pub fn new(
        labels: Vec<String>,
        cells: Vec<f64>,
        kind: WeightKind,
        period: Option<Period>,
    ) -> Result<Self, MatrixError> {
        let n = labels.len();
        if cells.len() != n * n {
            return Err(MatrixError::NotSquare { labels: n, cells: cells.len() });
        }
        let mut seen = HashSet::with_capacity(n);
        for l in &labels {
            if !seen.insert(l.as_str()) {
                return Err(MatrixError::DuplicateLabel(l.clone()));
            }
        }
        for (k, &v) in cells.iter().enumerate() {
            if !v.is_finite() {
                return Err(MatrixError::NonFinite { row: k / n, col: k % n });
            }
            if v < 0.0 {
                return Err(MatrixError::NegativeEntry { row: k / n, col: k % n });
            }
        }
        Ok(FlowMatrix { labels, cells, kind, period })
    }

    pub fn zeros(labels: Vec<String>, kind: WeightKind, period: Option<Period>) -> Self {
        let n = labels.len();
        FlowMatrix::new(labels, vec![0.0; n * n], kind, period).expect("zero matrix is valid")
    }

    /// Same shape and metadata, new cells. Cells must already be valid.
    fn with_cells(&self, cells: Vec<f64>, kind: WeightKind) -> Self {
        debug_assert_eq!(cells.len(), self.cells.len());
        FlowMatrix { labels: self.labels.clone(), cells, kind, period: self.period }
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn kind(&self) -> WeightKind {
        self.kind
    }

    pub fn period(&self) -> Option<Period> {
        self.period
    }

    pub fn set_period(&mut self, period: Option<Period>) {
        self.period = period;
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.cells[i * self.n() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.n();
        &self.cells[i * n..(i + 1) * n]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Supplier outputs.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n()).map(|i| self.row(i).iter().sum()).collect()
    }

    /// Buyer inputs.
    pub fn column_sums(&self) -> Vec<f64> {
        let n = self.n();
        let mut sums = vec![0.0; n];
        for i in 0..n {
            for (s, v) in sums.iter_mut().zip(self.row(i)) {
                *s += v;
            }
        }
        sums
    }

    pub fn total(&self) -> f64 {
        self.cells.iter().sum()
    }

    /// Number of strictly positive cells, self-loops included.
    pub fn edge_count(&self) -> usize {
        self.cells.iter().filter(|&&v| v > 0.0).count()
    }

    /// Sub-matrix on the given sector indices, in that order.
    pub fn select(&self, idx: &[usize]) -> FlowMatrix {
        let mut cells = Vec::with_capacity(idx.len() * idx.len());
        for &i in idx {
            for &j in idx {
                cells.push(self.get(i, j));
            }
        }
        FlowMatrix {
            labels: idx.iter().map(|&i| self.labels[i].clone()).collect(),
            cells,
            kind: self.kind,
            period: self.period,
        }
    }

    /// Multiplies every cell by `c > 0`.
    pub fn scaled(&self, c: f64) -> FlowMatrix {
        assert!(c > 0.0 && c.is_finite(), "scale must be positive");
        self.with_cells(self.cells.iter().map(|v| v * c).collect(), self.kind)
    }

    /// Restricts both matrices to their common labels, in `a`'s order.
    pub fn align(a: &FlowMatrix, b: &FlowMatrix) -> (FlowMatrix, FlowMatrix) {
        let b_pos: HashMap<&str, usize> =
            b.labels.iter().enumerate().map(|(j, l)| (l.as_str(), j)).collect();
        let (ia, ib): (Vec<usize>, Vec<usize>) = a
            .labels
            .iter()
            .enumerate()
            .filter_map(|(i, l)| b_pos.get(l.as_str()).map(|&j| (i, j)))
            .unzip();
        (a.select(&ia), b.select(&ib))
    }
}

/// Integer-exact matrix of pence or counts, before conversion to floats.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LedgerMatrix {
    pub labels: Vec<String>,
    pub cells: Vec<u64>,
    pub weight: Weight,
    pub period: Period,
}

impl LedgerMatrix {
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    /// Elementwise sum of same-labelled matrices, stamped with `period`.
    pub fn sum(mats: &[LedgerMatrix], period: Period) -> Option<LedgerMatrix> {
        let first = mats.first()?;
        let mut cells = vec![0u64; first.cells.len()];
        for m in mats {
            assert_eq!(m.labels, first.labels, "summing matrices with different labels");
            assert_eq!(m.weight, first.weight, "summing matrices with different weights");
            for (c, v) in cells.iter_mut().zip(&m.cells) {
                *c += v;
            }
        }
        Some(LedgerMatrix { labels: first.labels.clone(), cells, weight: first.weight, period })
    }

    /// Aggregates SIC-labelled sectors into CPA classes; unmatched sectors drop out.
    pub fn aggregate_sectors(&self, table: &ConcordanceTable) -> LedgerMatrix {
        let k = table.universe().len();
        let class: Vec<Option<usize>> = self.labels.iter().map(|l| table.class_index(l)).collect();
        let n = self.n();
        let mut cells = vec![0u64; k * k];
        for i in 0..n {
            let Some(ci) = class[i] else { continue };
            for j in 0..n {
                if let Some(cj) = class[j] {
                    cells[ci * k + cj] += self.cells[i * n + j];
                }
            }
        }
        LedgerMatrix {
            labels: table.universe().to_vec(),
            cells,
            weight: self.weight,
            period: self.period,
        }
    }

    pub fn to_flow(&self) -> FlowMatrix {
        let cells = self
            .cells
            .iter()
            .map(|&v| match self.weight {
                Weight::Value => v as f64 / 100.0,
                Weight::Count => v as f64,
            })
            .collect();
        FlowMatrix {
            labels: self.labels.clone(),
            cells,
            kind: self.weight.into(),
            period: Some(self.period),
        }
    }
}

/// Sector resolution of a build.
#[derive(Debug, Clone, Copy)]
pub enum Granularity<'a> {
    /// Ledger SIC codes as they appear.
    Sic5,
    /// CPA classes of the concordance; records with an unmatched end are skipped.
    Cpa(&'a ConcordanceTable),
}

#[derive(Debug, Clone)]
pub struct BuildOptions<'a> {
    pub granularity: Granularity<'a>,
    pub period_agg: Frequency,
    pub weight: Weight,
    /// Declared SIC universe; codes outside it are skipped. Defaults to
    /// every code seen in the records. Ignored at CPA granularity.
    pub universe: Option<Vec<String>>,
}

/// Builds exact integer matrices, one per period in ascending order.
pub fn build_ledger_matrices(
    records: &[TransactionRecord],
    opts: &BuildOptions<'_>,
) -> Vec<LedgerMatrix> {
    let labels: Vec<String> = match (&opts.granularity, &opts.universe) {
        (Granularity::Cpa(t), _) => t.universe().to_vec(),
        (Granularity::Sic5, Some(u)) => u.clone(),
        (Granularity::Sic5, None) => {
            let mut codes: Vec<String> = records
                .iter()
                .flat_map(|r| [r.payer.as_str(), r.payee.as_str()])
                .collect::<HashSet<_>>()
                .into_iter()
                .map(String::from)
                .collect();
            codes.sort();
            codes
        }
    };
    let n = labels.len();
    let position: HashMap<&str, usize> =
        labels.iter().enumerate().map(|(i, l)| (l.as_str(), i)).collect();
    let locate = |code: &str| match opts.granularity {
        Granularity::Cpa(t) => t.class_index(code),
        Granularity::Sic5 => position.get(code).copied(),
    };

    let mut by_period: BTreeMap<Period, Vec<u64>> = BTreeMap::new();
    for r in records {
        let (Some(buyer), Some(supplier)) = (locate(r.payer.as_str()), locate(r.payee.as_str()))
        else {
            continue;
        };
        let period = match opts.period_agg {
            Frequency::Monthly => r.period,
            Frequency::Annual => r.period.to_annual(),
        };
        let cells = by_period.entry(period).or_insert_with(|| vec![0; n * n]);
        cells[supplier * n + buyer] += match opts.weight {
            Weight::Value => r.value.0,
            Weight::Count => r.count,
        };
    }
    by_period
        .into_iter()
        .map(|(period, cells)| LedgerMatrix {
            labels: labels.clone(),
            cells,
            weight: opts.weight,
            period,
        })
        .collect()
}

/// Builds flow matrices (pounds or counts), one per period in ascending order.
pub fn build_matrices(records: &[TransactionRecord], opts: &BuildOptions<'_>) -> Vec<FlowMatrix> {
    build_ledger_matrices(records, opts).iter().map(LedgerMatrix::to_flow).collect()
}

/// Normalises to input (column) or output (row) shares.
///
/// Zero denominators yield all-zero columns (rows). A matrix that is
/// already a share matrix in the requested direction is returned as is
/// when no external denominators are given.
pub fn to_shares(
    m: &FlowMatrix,
    direction: Direction,
    denominators: Option<&[f64]>,
) -> Result<FlowMatrix, IotError> {
    let target = direction.share_kind();
    if m.kind == target && denominators.is_none() {
        return Ok(m.clone());
    }
    if m.kind.is_share() {
        return Err(IotError::NotWeightMatrix(m.kind));
    }
    let n = m.n();
    let denom: Vec<f64> = match denominators {
        Some(d) => {
            if d.len() != n {
                return Err(IotError::DenominatorLength { expected: n, found: d.len() });
            }
            if let Some(i) = d.iter().position(|&v| v < 0.0 || v.is_nan()) {
                return Err(IotError::NegativeDenominator(i));
            }
            d.to_vec()
        }
        None => match direction {
            Direction::Input => m.column_sums(),
            Direction::Output => m.row_sums(),
        },
    };
    let mut cells = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let d = match direction {
                Direction::Input => denom[j],
                Direction::Output => denom[i],
            };
            cells.push(if d > 0.0 { m.get(i, j) / d } else { 0.0 });
        }
    }
    Ok(m.with_cells(cells, target))
}

/// Zeroes cells whose input (output) share is below `threshold`.
///
/// Shares come from the untruncated matrix; surviving cells keep their
/// original weights.
pub fn truncate(m: &FlowMatrix, threshold: f64, direction: Direction) -> Result<FlowMatrix, IotError> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(IotError::InvalidThreshold(threshold));
    }
    let shares = to_shares(m, direction, None)?;
    let cells = m
        .cells
        .iter()
        .zip(&shares.cells)
        .map(|(&v, &s)| if s < threshold { 0.0 } else { v })
        .collect();
    Ok(m.with_cells(cells, m.kind))
}

/// Removes positive cells strictly below the type-7 `q`-quantile of the
/// positive cell values.
pub fn truncate_by_quantile(m: &FlowMatrix, q: f64) -> Result<FlowMatrix, IotError> {
    if !(0.0..1.0).contains(&q) {
        return Err(IotError::InvalidQuantile(q));
    }
    let mut positive: Vec<f64> = m.cells.iter().copied().filter(|&v| v > 0.0).collect();
    if positive.is_empty() {
        return Ok(m.clone());
    }
    positive.sort_by(f64::total_cmp);
    let cut = quantile_sorted(&positive, q);
    let cells = m.cells.iter().map(|&v| if v < cut { 0.0 } else { v }).collect();
    Ok(m.with_cells(cells, m.kind))
}
