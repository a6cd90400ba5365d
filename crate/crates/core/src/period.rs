//! Calendar periods: `YYYY-MM` months and `YYYY` years.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid period `{0}` (expected YYYY-MM or YYYY)")]
pub struct PeriodParseError(pub String);

/// Sampling frequency of a period or series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Frequency {
    Monthly,
    Annual,
}

/// A calendar month or a calendar year.
///
/// Ordering is chronological by the first month a period covers, with a
/// year sorting before its own January.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Period {
    Month { year: i32, month: u8 },
    Year(i32),
}

impl Period {
    pub fn month(year: i32, month: u8) -> Self {
        assert!((1..=12).contains(&month), "month out of range: {month}");
        Period::Month { year, month }
    }

    pub fn year_of(self) -> i32 {
        match self {
            Period::Month { year, .. } | Period::Year(year) => year,
        }
    }

    pub fn frequency(self) -> Frequency {
        match self {
            Period::Month { .. } => Frequency::Monthly,
            Period::Year(_) => Frequency::Annual,
        }
    }

    /// The annual period containing this one.
    pub fn to_annual(self) -> Period {
        Period::Year(self.year_of())
    }

    /// Months since year 0, for the first month covered.
    fn first_month_index(self) -> i64 {
        match self {
            Period::Month { year, month } => year as i64 * 12 + (month as i64 - 1),
            Period::Year(year) => year as i64 * 12,
        }
    }

    fn last_month_index(self) -> i64 {
        match self {
            Period::Month { .. } => self.first_month_index(),
            Period::Year(year) => year as i64 * 12 + 11,
        }
    }

    /// Inclusive span of month indices covered by this period.
    pub fn month_span(self) -> (i64, i64) {
        (self.first_month_index(), self.last_month_index())
    }

    /// Same period one year earlier (same month for monthly periods).
    pub fn previous_year(self) -> Period {
        match self {
            Period::Month { year, month } => Period::Month { year: year - 1, month },
            Period::Year(year) => Period::Year(year - 1),
        }
    }

    /// The next period of the same frequency.
    pub fn succ(self) -> Period {
        match self {
            Period::Month { year, month: 12 } => Period::Month { year: year + 1, month: 1 },
            Period::Month { year, month } => Period::Month { year, month: month + 1 },
            Period::Year(year) => Period::Year(year + 1),
        }
    }

    /// Inclusive range of periods of the same frequency.
    pub fn range_inclusive(start: Period, end: Period) -> Vec<Period> {
        assert_eq!(start.frequency(), end.frequency(), "mixed-frequency range");
        let mut out = Vec::new();
        let mut p = start;
        while p <= end {
            out.push(p);
            p = p.succ();
        }
        out
    }
}

impl Ord for Period {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        let rank = |p: &Period| match p {
            Period::Year(_) => 0u8,
            Period::Month { .. } => 1,
        };
        self.first_month_index()
            .cmp(&other.first_month_index())
            .then(rank(self).cmp(&rank(other)))
    }
}

impl PartialOrd for Period {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Period::Month { year, month } => write!(f, "{year:04}-{month:02}"),
            Period::Year(year) => write!(f, "{year:04}"),
        }
    }
}

impl FromStr for Period {
    type Err = PeriodParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || PeriodParseError(s.to_string());
        let digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
        match s.split_once('-') {
            None if s.len() == 4 && digits(s) => Ok(Period::Year(s.parse().map_err(|_| err())?)),
            Some((y, m)) if y.len() == 4 && m.len() == 2 && digits(y) && digits(m) => {
                let month: u8 = m.parse().map_err(|_| err())?;
                if !(1..=12).contains(&month) {
                    return Err(err());
                }
                Ok(Period::Month { year: y.parse().map_err(|_| err())?, month })
            }
            _ => Err(err()),
        }
    }
}

/// Inclusive period range, e.g. `2020-03:2022-12` or `2020:2022`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PeriodRange {
    pub start: Period,
    pub end: Period,
}

impl PeriodRange {
    pub fn new(start: Period, end: Period) -> Self {
        PeriodRange { start, end }
    }

    /// True when `p` overlaps the range in calendar months.
    ///
    /// A year overlaps a monthly range if any of its months does.
    pub fn contains(&self, p: Period) -> bool {
        let (lo, _) = self.start.month_span();
        let (_, hi) = self.end.month_span();
        let (a, b) = p.month_span();
        a <= hi && b >= lo
    }
}

impl fmt::Display for PeriodRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.start, self.end)
    }
}

impl FromStr for PeriodRange {
    type Err = PeriodParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s.split_once(':').ok_or_else(|| PeriodParseError(s.to_string()))?;
        let range = PeriodRange::new(a.parse()?, b.parse()?);
        if range.start > range.end {
            return Err(PeriodParseError(s.to_string()));
        }
        Ok(range)
    }
}
