//! SIC → CPA concordance by longest-prefix match, and sector filters.
//!
//! A concordance row maps a 1–5 digit SIC prefix to a CPA class. A code is
//! mapped by the longest prefix present in the table. Rows with an empty
//! CPA column are explicit exclusions: codes under that prefix stay
//! unmatched even when a shorter prefix would map them. Rows with an empty
//! prefix declare a CPA class that has no SIC members (it still belongs to
//! the class universe).

use std::collections::{HashMap, HashSet};
use std::io::Read;
use std::path::Path;

use thiserror::Error;

use crate::ingest::{SectorCode, TransactionRecord};
use crate::iot::FlowMatrix;

static DEFAULT_CONCORDANCE: &str = include_str!("../data/default_concordance.csv");

#[derive(Debug, Error)]
pub enum ConcordanceError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("line {line}: bad header, expected `sic_prefix,cpa_code`")]
    BadHeader { line: u64 },
    #[error("line {line}: invalid SIC prefix `{prefix}`")]
    BadPrefix { line: u64, prefix: String },
    #[error("line {line}: duplicate SIC prefix `{prefix}`")]
    DuplicatePrefix { line: u64, prefix: String },
    #[error("line {line}: row has neither prefix nor CPA code")]
    EmptyRow { line: u64 },
    #[error("unknown CPA class `{0}`")]
    UnknownClass(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FilterError {
    #[error("filter `{0}` has no prefixes")]
    NoPrefixes(String),
    #[error("filter `{name}`: invalid token `{token}`")]
    BadToken { name: String, token: String },
    #[error("filter `{0}` removes every sector")]
    EmptyResult(String),
    #[error("unknown filter `{0}`")]
    UnknownFilter(String),
}

/// One row of a concordance file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConcordanceRow {
    pub sic_prefix: Option<String>,
    pub cpa_code: Option<String>,
}

impl ConcordanceRow {
    pub fn mapping(prefix: &str, cpa: &str) -> Self {
        ConcordanceRow { sic_prefix: Some(prefix.into()), cpa_code: Some(cpa.into()) }
    }

    pub fn exclusion(prefix: &str) -> Self {
        ConcordanceRow { sic_prefix: Some(prefix.into()), cpa_code: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcordanceTable {
    /// prefix → index into `universe`, `None` for explicit exclusions
    entries: HashMap<String, Option<usize>>,
    universe: Vec<String>,
}

impl ConcordanceTable {
    /// Builds a table from rows in file order. The class universe is
    /// ordered by first appearance.
    pub fn from_rows<I>(rows: I) -> Result<Self, ConcordanceError>
    where
        I: IntoIterator<Item = ConcordanceRow>,
    {
        let mut entries = HashMap::new();
        let mut universe: Vec<String> = Vec::new();
        let mut class_index: HashMap<String, usize> = HashMap::new();
        for (i, row) in rows.into_iter().enumerate() {
            let line = i as u64 + 2;
            let class = row.cpa_code.map(|c| {
                *class_index.entry(c.clone()).or_insert_with(|| {
                    universe.push(c);
                    universe.len() - 1
                })
            });
            match row.sic_prefix {
                Some(prefix) => {
                    if !is_sic_code(&prefix) {
                        return Err(ConcordanceError::BadPrefix { line, prefix });
                    }
                    if entries.insert(prefix.clone(), class).is_some() {
                        return Err(ConcordanceError::DuplicatePrefix { line, prefix });
                    }
                }
                None if class.is_none() => return Err(ConcordanceError::EmptyRow { line }),
                None => {}
            }
        }
        Ok(ConcordanceTable { entries, universe })
    }

    /// The bundled 104-class table (C254 already merged into C25OTHER).
    pub fn default_table() -> Self {
        read_concordance(DEFAULT_CONCORDANCE.as_bytes()).expect("bundled concordance is valid")
    }

    /// Target classes in table order.
    pub fn universe(&self) -> &[String] {
        &self.universe
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Universe position of the class `sic` maps to.
    pub fn class_index(&self, sic: &str) -> Option<usize> {
        (1..=sic.len())
            .rev()
            .find_map(|k| self.entries.get(&sic[..k]))
            .copied()
            .flatten()
    }

    /// CPA class of the longest table prefix of `sic`; `None` means unmatched.
    pub fn map_sic(&self, sic: &str) -> Option<&str> {
        self.class_index(sic).map(|i| self.universe[i].as_str())
    }

    /// Folds class `from` into class `into`, dropping `from` from the universe.
    pub fn merge_class(&mut self, from: &str, into: &str) -> Result<(), ConcordanceError> {
        let src = self.position(from)?;
        let dst = self.position(into)?;
        if src == dst {
            return Ok(());
        }
        for target in self.entries.values_mut().flatten() {
            if *target == src {
                *target = dst;
            }
            if *target > src {
                *target -= 1;
            }
        }
        self.universe.remove(src);
        Ok(())
    }

    fn position(&self, class: &str) -> Result<usize, ConcordanceError> {
        self.universe
            .iter()
            .position(|c| c == class)
            .ok_or_else(|| ConcordanceError::UnknownClass(class.to_string()))
    }
}

fn is_sic_code(s: &str) -> bool {
    (1..=5).contains(&s.len()) && s.bytes().all(|b| b.is_ascii_digit())
}

pub fn read_concordance<R: Read>(reader: R) -> Result<ConcordanceTable, ConcordanceError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let header = rdr.headers()?.clone();
    if header.len() != 2 || &header[0] != "sic_prefix" || &header[1] != "cpa_code" {
        return Err(ConcordanceError::BadHeader { line: 1 });
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 2 {
            return Err(ConcordanceError::EmptyRow { line });
        }
        let field = |i: usize| Some(rec[i].trim().to_string()).filter(|s| !s.is_empty());
        rows.push(ConcordanceRow { sic_prefix: field(0), cpa_code: field(1) });
    }
    ConcordanceTable::from_rows(rows)
}

pub fn parse_concordance(path: impl AsRef<Path>) -> Result<ConcordanceTable, ConcordanceError> {
    read_concordance(std::fs::File::open(path)?)
}

/// A ledger record whose two ends both map to a CPA class.
#[derive(Debug, Clone, PartialEq)]
pub struct CleanRecord {
    pub record: TransactionRecord,
    pub payer_cpa: String,
    pub payee_cpa: String,
}

/// Splits records into those mappable at both ends and the residual.
pub fn split_raw_clean(
    records: &[TransactionRecord],
    table: &ConcordanceTable,
) -> (Vec<CleanRecord>, Vec<TransactionRecord>) {
    let mut clean = Vec::new();
    let mut residual = Vec::new();
    for r in records {
        match (table.map_sic(r.payer.as_str()), table.map_sic(r.payee.as_str())) {
            (Some(payer), Some(payee)) => clean.push(CleanRecord {
                record: r.clone(),
                payer_cpa: payer.to_string(),
                payee_cpa: payee.to_string(),
            }),
            _ => residual.push(r.clone()),
        }
    }
    (clean, residual)
}

/// One excluded token of a sector filter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Exclusion {
    /// Codes starting with this prefix, e.g. `K64` or `G4`.
    Prefix(String),
    /// Codes whose two-digit division lies in the inclusive range, e.g. `G45-Q88`.
    Range { start: String, end: String },
}

/// Named set of excluded sector prefixes and division ranges.
///
/// Tokens are written with CPA section letters (`K64`, `G45-Q88`). They
/// apply to CPA labels by string prefix and to numeric SIC labels through
/// the section that owns the label's division.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SectorFilter {
    pub name: String,
    pub excluded: Vec<Exclusion>,
}

impl SectorFilter {
    pub fn new<S: AsRef<str>>(name: &str, tokens: &[S]) -> Result<Self, FilterError> {
        if tokens.is_empty() {
            return Err(FilterError::NoPrefixes(name.to_string()));
        }
        let bad = |t: &str| FilterError::BadToken { name: name.to_string(), token: t.to_string() };
        let excluded = tokens
            .iter()
            .map(|t| {
                let t = t.as_ref().trim();
                match t.split_once('-') {
                    Some((a, b)) => {
                        if division(a).is_none() || division(b).is_none() {
                            return Err(bad(t));
                        }
                        Ok(Exclusion::Range { start: a.to_string(), end: b.to_string() })
                    }
                    None if !t.is_empty() && t.bytes().all(|b| b.is_ascii_alphanumeric()) => {
                        Ok(Exclusion::Prefix(t.to_string()))
                    }
                    None => Err(bad(t)),
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SectorFilter { name: name.to_string(), excluded })
    }

    /// Wholesale/retail, finance and public administration.
    pub fn intermediaries() -> Self {
        Self::new("intermediaries", &["G45", "G46", "K64", "K65", "K66", "O84"]).unwrap()
    }

    /// Variant listing `G4` alongside `G45` and `G46`.
    pub fn intermediaries_with_g4() -> Self {
        Self::new("intermediaries_g4", &["G45", "G46", "G4", "K64", "K65", "K66", "O84"]).unwrap()
    }

    /// Service sections G45–Q88 and S94–U99.
    pub fn services() -> Self {
        Self::new("services", &["G45-Q88", "S94-U99"]).unwrap()
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "intermediaries" => Some(Self::intermediaries()),
            "intermediaries_g4" => Some(Self::intermediaries_with_g4()),
            "services" => Some(Self::services()),
            _ => None,
        }
    }

    pub fn matches(&self, label: &str) -> bool {
        self.excluded.iter().any(|e| exclusion_matches(e, label))
    }
}

fn strip_cpa(label: &str) -> &str {
    label.strip_prefix("CPA_").unwrap_or(label)
}

fn split_code(code: &str) -> (&str, &str) {
    let code = strip_cpa(code);
    let letters = code.bytes().take_while(|b| b.is_ascii_alphabetic()).count();
    let rest = &code[letters..];
    let digits = rest.bytes().take_while(|b| b.is_ascii_digit()).count();
    (&code[..letters], &rest[..digits])
}

/// Two-digit division of a SIC or CPA code.
fn division(code: &str) -> Option<u8> {
    let (_, digits) = split_code(code);
    if digits.len() < 2 {
        return None;
    }
    digits[..2].parse().ok()
}

/// NACE/SIC section letter owning a two-digit division.
fn section_of(division: u8) -> Option<char> {
    let s = match division {
        1..=3 => 'A',
        5..=9 => 'B',
        10..=33 => 'C',
        35 => 'D',
        36..=39 => 'E',
        41..=43 => 'F',
        45..=47 => 'G',
        49..=53 => 'H',
        55..=56 => 'I',
        58..=63 => 'J',
        64..=66 => 'K',
        68 => 'L',
        69..=75 => 'M',
        77..=82 => 'N',
        84 => 'O',
        85 => 'P',
        86..=88 => 'Q',
        90..=93 => 'R',
        94..=96 => 'S',
        97..=98 => 'T',
        99 => 'U',
        _ => return None,
    };
    Some(s)
}

fn exclusion_matches(e: &Exclusion, label: &str) -> bool {
    let numeric = !label.is_empty() && label.bytes().all(|b| b.is_ascii_digit());
    match e {
        Exclusion::Prefix(p) => {
            if !numeric {
                return strip_cpa(label).starts_with(strip_cpa(p));
            }
            let (letters, digits) = split_code(p);
            if !label.starts_with(digits) {
                return false;
            }
            match letters.chars().next() {
                None => true,
                Some(sec) => {
                    let div = label.get(..2).and_then(|d| d.parse().ok()).and_then(section_of);
                    div == Some(sec.to_ascii_uppercase())
                }
            }
        }
        Exclusion::Range { start, end } => {
            let label_div = if numeric {
                label.get(..2).and_then(|d| d.parse().ok())
            } else {
                division(label)
            };
            match (label_div, division(start), division(end)) {
                (Some(d), Some(lo), Some(hi)) => lo <= d && d <= hi,
                _ => false,
            }
        }
    }
}

/// Reads filters in `name,token1;token2;...` rows (optional `name,prefixes` header).
pub fn read_filters<R: Read>(reader: R) -> Result<Vec<SectorFilter>, ConcordanceError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(reader);
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if line == 1 && rec.get(0) == Some("name") {
            continue;
        }
        if rec.len() != 2 {
            return Err(ConcordanceError::EmptyRow { line });
        }
        let tokens: Vec<&str> = rec[1].split(';').filter(|t| !t.trim().is_empty()).collect();
        let filter = SectorFilter::new(rec[0].trim(), &tokens)
            .map_err(|_| ConcordanceError::BadPrefix { line, prefix: rec[1].to_string() })?;
        out.push(filter);
    }
    Ok(out)
}

/// Deletes every row and column whose label the filter matches.
pub fn apply_filter(matrix: &FlowMatrix, filter: &SectorFilter) -> Result<FlowMatrix, FilterError> {
    let keep: Vec<usize> =
        (0..matrix.n()).filter(|&i| !filter.matches(&matrix.labels()[i])).collect();
    if keep.is_empty() {
        return Err(FilterError::EmptyResult(filter.name.clone()));
    }
    Ok(matrix.select(&keep))
}

/// Distinct CPA classes reached by a set of SIC codes, in universe order.
pub fn classes_for<'a, I>(table: &ConcordanceTable, codes: I) -> Vec<String>
where
    I: IntoIterator<Item = &'a SectorCode>,
{
    let hit: HashSet<usize> = codes.into_iter().filter_map(|c| table.class_index(c.as_str())).collect();
    table
        .universe()
        .iter()
        .enumerate()
        .filter(|(i, _)| hit.contains(i))
        .map(|(_, c)| c.clone())
        .collect()
}
