//! Aggregate time series, their transforms, and correlation batteries.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::ingest::{MacroSeries, TransactionRecord};
use crate::iot::{to_shares, Direction, FlowMatrix, IotError, Weight};
use crate::netstats::fmt_opt;
use crate::period::{Frequency, Period, PeriodRange};
use crate::stats::Method;

/// Fewest paired observations a correlation is computed from.
pub const MIN_OVERLAP: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeriesError {
    #[error("periods must be strictly increasing ({0} follows a later or equal period)")]
    NotIncreasing(Period),
    #[error("series mixes monthly and annual periods")]
    MixedFrequency,
    #[error("base period {0} missing")]
    MissingBase(Period),
    #[error("base period {0} has value zero")]
    ZeroBase(Period),
    #[error("only {got} paired observations, need at least {MIN_OVERLAP}")]
    InsufficientOverlap { got: usize },
    #[error("correlation undefined (constant input)")]
    Undefined,
    #[error(transparent)]
    Iot(#[from] IotError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub frequency: Frequency,
    observations: Vec<(Period, f64)>,
}

impl TimeSeries {
    pub fn new(frequency: Frequency, observations: Vec<(Period, f64)>) -> Result<Self, SeriesError> {
        for w in observations.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(SeriesError::NotIncreasing(w[1].0));
            }
        }
        if observations.iter().any(|(p, _)| p.frequency() != frequency) {
            return Err(SeriesError::MixedFrequency);
        }
        Ok(TimeSeries { frequency, observations })
    }

    pub fn from_macro(m: &MacroSeries) -> Result<Self, SeriesError> {
        let freq = m.observations.first().map_or(Frequency::Monthly, |(p, _)| p.frequency());
        TimeSeries::new(freq, m.observations.clone())
    }

    pub fn observations(&self) -> &[(Period, f64)] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn get(&self, p: Period) -> Option<f64> {
        self.observations
            .binary_search_by(|(q, _)| q.cmp(&p))
            .ok()
            .map(|i| self.observations[i].1)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> TimeSeries {
        TimeSeries {
            frequency: self.frequency,
            observations: self.observations.iter().map(|&(p, v)| (p, f(v))).collect(),
        }
    }

    /// Annual series from a monthly one: sums over years with all twelve
    /// months present. Annual input is returned unchanged.
    pub fn annual_sum(&self) -> TimeSeries {
        if self.frequency == Frequency::Annual {
            return self.clone();
        }
        let mut years: BTreeMap<i32, (usize, f64)> = BTreeMap::new();
        for &(p, v) in &self.observations {
            let e = years.entry(p.year_of()).or_insert((0, 0.0));
            e.0 += 1;
            e.1 += v;
        }
        TimeSeries {
            frequency: Frequency::Annual,
            observations: years
                .into_iter()
                .filter(|(_, (n, _))| *n == 12)
                .map(|(y, (_, s))| (Period::Year(y), s))
                .collect(),
        }
    }
}

/// Per-period totals of value (pounds) or count, summed exactly.
/// Periods without records are absent.
pub fn aggregate_ledger(records: &[TransactionRecord], weight: Weight, period_agg: Frequency) -> TimeSeries {
    let mut sums: BTreeMap<Period, u64> = BTreeMap::new();
    for r in records {
        let p = match period_agg {
            Frequency::Monthly => r.period,
            Frequency::Annual => r.period.to_annual(),
        };
        let add = match weight {
            Weight::Value => r.value.0,
            Weight::Count => r.count,
        };
        *sums.entry(p).or_insert(0) += add;
    }
    let observations = sums
        .into_iter()
        .map(|(p, s)| {
            let v = match weight {
                Weight::Value => crate::money::Pence(s).to_gbp(),
                Weight::Count => s as f64,
            };
            (p, v)
        })
        .collect();
    TimeSeries { frequency: period_agg, observations }
}

/// Value divided by count on common periods; periods with zero count are dropped.
pub fn average_value(value: &TimeSeries, count: &TimeSeries) -> TimeSeries {
    let observations = value
        .observations
        .iter()
        .filter_map(|&(p, v)| count.get(p).filter(|&c| c != 0.0).map(|c| (p, v / c)))
        .collect();
    TimeSeries { frequency: value.frequency, observations }
}

/// Percentage growth over the same period a year earlier. Periods whose
/// lag is missing or zero are omitted.
pub fn yoy_growth(s: &TimeSeries) -> TimeSeries {
    let observations = s
        .observations
        .iter()
        .filter_map(|&(p, v)| {
            s.get(p.previous_year()).filter(|&lag| lag != 0.0).map(|lag| (p, 100.0 * (v / lag - 1.0)))
        })
        .collect();
    TimeSeries { frequency: s.frequency, observations }
}

pub fn index_to_base(s: &TimeSeries, base: Period) -> Result<TimeSeries, SeriesError> {
    let b = s.get(base).ok_or(SeriesError::MissingBase(base))?;
    if b == 0.0 {
        return Err(SeriesError::ZeroBase(base));
    }
    Ok(s.map(|v| if v == b { 100.0 } else { v * 100.0 / b }))
}

/// Periods admitted to a correlation: inside some `include` range (or any
/// period if there are none) and outside every `exclude` range.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Window {
    pub include: Vec<PeriodRange>,
    pub exclude: Vec<PeriodRange>,
}

impl Window {
    pub fn all() -> Self {
        Window::default()
    }

    /// Drops March 2020 to December 2022; for annual data this removes
    /// 2020, 2021 and 2022.
    pub fn excluding_covid() -> Self {
        Window {
            include: Vec::new(),
            exclude: vec![PeriodRange::new(Period::month(2020, 3), Period::month(2022, 12))],
        }
    }

    pub fn admits(&self, p: Period) -> bool {
        (self.include.is_empty() || self.include.iter().any(|r| r.contains(p)))
            && !self.exclude.iter().any(|r| r.contains(p))
    }

    pub fn descriptor(&self) -> String {
        let list = |rs: &[PeriodRange], none: &str| {
            if rs.is_empty() {
                none.to_string()
            } else {
                rs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
            }
        };
        format!("include={};exclude={}", list(&self.include, "all"), list(&self.exclude, "none"))
    }
}

/// Correlation of two numeric vectors with at least [`MIN_OVERLAP`] pairs.
pub fn correlate_vectors(x: &[f64], y: &[f64], method: Method) -> Result<f64, SeriesError> {
    if x.len() < MIN_OVERLAP {
        return Err(SeriesError::InsufficientOverlap { got: x.len() });
    }
    method.correlate(x, y).ok_or(SeriesError::Undefined)
}

/// Pairs observations on common admitted periods where both sides are finite.
pub fn paired(a: &TimeSeries, b: &TimeSeries, window: &Window) -> (Vec<f64>, Vec<f64>) {
    a.observations
        .iter()
        .filter(|(p, v)| window.admits(*p) && v.is_finite())
        .filter_map(|&(p, v)| b.get(p).filter(|w| w.is_finite()).map(|w| (v, w)))
        .unzip()
}

pub fn correlate(a: &TimeSeries, b: &TimeSeries, method: Method, window: &Window) -> Result<f64, SeriesError> {
    let (x, y) = paired(a, b, window);
    correlate_vectors(&x, &y, method)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeTransform {
    Raw,
    /// `log10` of cells positive in both matrices.
    Log10Positive,
    InputShare,
    OutputShare,
}

impl std::str::FromStr for EdgeTransform {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "raw" => Ok(EdgeTransform::Raw),
            "log10" | "log10-positive" => Ok(EdgeTransform::Log10Positive),
            "input-share" => Ok(EdgeTransform::InputShare),
            "output-share" => Ok(EdgeTransform::OutputShare),
            _ => Err(format!("unknown edge transform `{s}`")),
        }
    }
}

/// Cell-by-cell correlation over the common labels of two matrices.
pub fn edge_correlation(
    a: &FlowMatrix,
    b: &FlowMatrix,
    transform: EdgeTransform,
    include_diagonal: bool,
    method: Method,
) -> Result<f64, SeriesError> {
    let (a, b) = FlowMatrix::align(a, b);
    let (a, b) = match transform {
        EdgeTransform::InputShare => (to_shares(&a, Direction::Input, None)?, to_shares(&b, Direction::Input, None)?),
        EdgeTransform::OutputShare => {
            (to_shares(&a, Direction::Output, None)?, to_shares(&b, Direction::Output, None)?)
        }
        EdgeTransform::Raw | EdgeTransform::Log10Positive => (a, b),
    };
    let n = a.n();
    let (mut x, mut y) = (Vec::new(), Vec::new());
    for i in 0..n {
        for j in 0..n {
            if i == j && !include_diagonal {
                continue;
            }
            let (u, v) = (a.get(i, j), b.get(i, j));
            if transform == EdgeTransform::Log10Positive {
                if u > 0.0 && v > 0.0 {
                    x.push(u.log10());
                    y.push(v.log10());
                }
            } else {
                x.push(u);
                y.push(v);
            }
        }
    }
    correlate_vectors(&x, &y, method)
}

#[derive(Debug, Clone, Copy)]
pub enum NodeTransform<'a> {
    Levels,
    /// Per-sector growth of each matrix relative to its prior-period matrix.
    Growth { prior_a: &'a FlowMatrix, prior_b: &'a FlowMatrix },
}

fn side_totals(m: &FlowMatrix, side: Direction) -> HashMap<&str, f64> {
    let sums = match side {
        Direction::Input => m.column_sums(),
        Direction::Output => m.row_sums(),
    };
    m.labels().iter().map(String::as_str).zip(sums).collect()
}

/// Correlation of sector input totals (column sums) or output totals (row
/// sums) across two matrices, over their common labels.
pub fn node_correlation(
    a: &FlowMatrix,
    b: &FlowMatrix,
    side: Direction,
    transform: NodeTransform<'_>,
    method: Method,
) -> Result<f64, SeriesError> {
    let ta = side_totals(a, side);
    let tb = side_totals(b, side);
    let growth = |now: f64, before: Option<f64>| match before {
        Some(p) if p != 0.0 => Some(100.0 * (now / p - 1.0)),
        _ => None,
    };
    let (mut x, mut y) = (Vec::new(), Vec::new());
    let priors = match transform {
        NodeTransform::Levels => None,
        NodeTransform::Growth { prior_a, prior_b } => Some((side_totals(prior_a, side), side_totals(prior_b, side))),
    };
    for label in a.labels() {
        let (Some(&va), Some(&vb)) = (ta.get(label.as_str()), tb.get(label.as_str())) else { continue };
        match &priors {
            None => {
                x.push(va);
                y.push(vb);
            }
            Some((pa, pb)) => {
                let ga = growth(va, pa.get(label.as_str()).copied());
                let gb = growth(vb, pb.get(label.as_str()).copied());
                if let (Some(ga), Some(gb)) = (ga, gb) {
                    x.push(ga);
                    y.push(gb);
                }
            }
        }
    }
    correlate_vectors(&x, &y, method)
}

/// Rows and columns of a benchmark grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Correlation,
    /// Annual payment aggregate over annual benchmark aggregate.
    Share { year: i32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub label: String,
    pub kind: RowKind,
    pub cells: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationTable {
    pub columns: Vec<String>,
    pub rows: Vec<TableRow>,
    pub method: Method,
    pub window: Window,
    pub growth: bool,
}

impl CorrelationTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        writeln!(s, "#window: {}", self.window.descriptor()).unwrap();
        writeln!(s, "#method: {}; transform: {}", self.method, if self.growth { "growth" } else { "levels" })
            .unwrap();
        writeln!(s, "row,{}", self.columns.join(",")).unwrap();
        for r in &self.rows {
            let cells: Vec<String> = r.cells.iter().map(|&c| fmt_opt(c)).collect();
            writeln!(s, "{},{}", r.label, cells.join(",")).unwrap();
        }
        s
    }
}

impl fmt::Display for CorrelationTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_csv())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkSpec {
    pub method: Method,
    pub window: Window,
    pub growth: bool,
    /// Adds one share row per payment series for this year.
    pub share_year: Option<i32>,
}

/// Annualises a payment series. Averages named `X_AVG` are recomputed as
/// annual `X_VALUE` over annual `X_COUNT` when both siblings exist.
fn annualise_payment(name: &str, s: &TimeSeries, all: &[(String, TimeSeries)]) -> TimeSeries {
    if s.frequency == Frequency::Annual {
        return s.clone();
    }
    if let Some(stem) = name.strip_suffix("_AVG") {
        let find = |suffix: &str| all.iter().find(|(n, _)| *n == format!("{stem}{suffix}")).map(|(_, t)| t);
        if let (Some(v), Some(c)) = (find("_VALUE"), find("_COUNT")) {
            return average_value(&v.annual_sum(), &c.annual_sum());
        }
    }
    s.annual_sum()
}

/// Correlations of every payment series (monthly and yearly rows) against
/// every benchmark series. Cells that cannot be computed are `None`.
pub fn benchmark_table(
    payments: &[(String, TimeSeries)],
    benchmarks: &[(String, TimeSeries)],
    spec: &BenchmarkSpec,
) -> CorrelationTable {
    let tf = |s: TimeSeries| if spec.growth { yoy_growth(&s) } else { s };
    let bench_monthly: Vec<Option<TimeSeries>> = benchmarks
        .iter()
        .map(|(_, s)| (s.frequency == Frequency::Monthly).then(|| tf(s.clone())))
        .collect();
    let bench_yearly: Vec<TimeSeries> = benchmarks.iter().map(|(_, s)| tf(s.annual_sum())).collect();

    let mut rows = Vec::new();
    for (name, s) in payments {
        if s.frequency == Frequency::Monthly {
            let m = tf(s.clone());
            let cells = bench_monthly
                .iter()
                .map(|b| b.as_ref().and_then(|b| correlate(&m, b, spec.method, &spec.window).ok()))
                .collect();
            rows.push(TableRow { label: format!("{name} monthly"), kind: RowKind::Correlation, cells });
        }
        let y = tf(annualise_payment(name, s, payments));
        let cells = bench_yearly.iter().map(|b| correlate(&y, b, spec.method, &spec.window).ok()).collect();
        rows.push(TableRow { label: format!("{name} yearly"), kind: RowKind::Correlation, cells });
    }
    if let Some(year) = spec.share_year {
        let p = Period::Year(year);
        for (name, s) in payments {
            let num = annualise_payment(name, s, payments).get(p);
            let cells = benchmarks
                .iter()
                .map(|(_, b)| match (num, b.annual_sum().get(p)) {
                    (Some(n), Some(d)) if d != 0.0 => Some(n / d),
                    _ => None,
                })
                .collect();
            rows.push(TableRow { label: format!("{name} share {year}"), kind: RowKind::Share { year }, cells });
        }
    }
    CorrelationTable {
        columns: benchmarks.iter().map(|(n, _)| n.clone()).collect(),
        rows,
        method: spec.method,
        window: spec.window.clone(),
        growth: spec.growth,
    }
}

/// `X_VALUE`, `X_COUNT` and `X_AVG` monthly series derived from a ledger.
pub fn payment_series(records: &[TransactionRecord], stem: &str) -> Vec<(String, TimeSeries)> {
    let value = aggregate_ledger(records, Weight::Value, Frequency::Monthly);
    let count = aggregate_ledger(records, Weight::Count, Frequency::Monthly);
    let avg = average_value(&value, &count);
    vec![(format!("{stem}_VALUE"), value), (format!("{stem}_COUNT"), count), (format!("{stem}_AVG"), avg)]
}
