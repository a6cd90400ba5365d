use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign};
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MoneyParseError {
    #[error("negative amount `{0}`")]
    Negative(String),
    #[error("malformed amount `{0}` (expected digits with at most two decimals)")]
    Malformed(String),
}

/// Nonnegative money amount in integer pence.
///
/// Sums of pence are exact and order-independent.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pence(pub u64);

impl Pence {
    pub const ZERO: Pence = Pence(0);

    pub fn from_pounds_pence(pounds: u64, pence: u64) -> Self {
        Pence(pounds * 100 + pence)
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// Value in pounds. Exact while the amount is below 2^53 pence.
    pub fn to_gbp(self) -> f64 {
        self.0 as f64 / 100.0
    }
}

impl Add for Pence {
    type Output = Pence;
    fn add(self, rhs: Pence) -> Pence {
        Pence(self.0 + rhs.0)
    }
}

impl AddAssign for Pence {
    fn add_assign(&mut self, rhs: Pence) {
        self.0 += rhs.0;
    }
}

impl Sum for Pence {
    fn sum<I: Iterator<Item = Pence>>(iter: I) -> Pence {
        iter.fold(Pence::ZERO, Add::add)
    }
}

impl fmt::Display for Pence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:02}", self.0 / 100, self.0 % 100)
    }
}

impl FromStr for Pence {
    type Err = MoneyParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let malformed = || MoneyParseError::Malformed(s.to_string());
        if let Some(rest) = s.strip_prefix('-') {
            // "-0" and "-0.00" are still negative input
            return if rest.parse::<Pence>().is_ok() {
                Err(MoneyParseError::Negative(s.to_string()))
            } else {
                Err(malformed())
            };
        }
        let (whole, frac) = match s.split_once('.') {
            Some((w, f)) => (w, f),
            None => (s, ""),
        };
        if whole.is_empty() || !whole.bytes().all(|b| b.is_ascii_digit()) {
            return Err(malformed());
        }
        if frac.len() > 2 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(malformed());
        }
        if s.ends_with('.') {
            return Err(malformed());
        }
        let pounds: u64 = whole.parse().map_err(|_| malformed())?;
        let pence: u64 = match frac.len() {
            0 => 0,
            1 => frac.parse::<u64>().map_err(|_| malformed())? * 10,
            _ => frac.parse().map_err(|_| malformed())?,
        };
        pounds
            .checked_mul(100)
            .and_then(|p| p.checked_add(pence))
            .map(Pence)
            .ok_or_else(malformed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimal_amounts() {
        assert_eq!("1500.00".parse::<Pence>().unwrap(), Pence(150_000));
        assert_eq!("1500".parse::<Pence>().unwrap(), Pence(150_000));
        assert_eq!("0.5".parse::<Pence>().unwrap(), Pence(50));
        assert_eq!("12.34".parse::<Pence>().unwrap(), Pence(1234));
    }

    #[test]
    fn rejects_bad_amounts() {
        assert!(matches!("-1.00".parse::<Pence>(), Err(MoneyParseError::Negative(_))));
        for bad in ["", ".5", "1.", "1.234", "1e3", "abc", "1,000.00", " 1"] {
            assert!(matches!(bad.parse::<Pence>(), Err(MoneyParseError::Malformed(_))), "{bad}");
        }
    }

    #[test]
    fn display_round_trips() {
        for p in [0u64, 5, 99, 100, 150_000, 123_456_789] {
            let s = Pence(p).to_string();
            assert_eq!(s.parse::<Pence>().unwrap(), Pence(p));
        }
    }
}
