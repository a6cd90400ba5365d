//! Strict CSV ingestion of payment ledgers, macro series and IOT matrices.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::iot::{FlowMatrix, MatrixError, WeightKind};
use crate::money::{MoneyParseError, Pence};
use crate::period::{Frequency, Period};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("header mismatch: expected `{expected}`, found `{found}`")]
    HeaderMismatch { expected: String, found: String },
    #[error("line {line}: malformed row: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("line {line}: negative value `{field}`")]
    NegativeValue { line: u64, field: String },
    #[error("line {line}: value is zero but count is {count}")]
    ValueZeroCountPositive { line: u64, count: u64 },
    #[error("line {line}: bad period `{period}`")]
    BadPeriod { line: u64, period: String },
    #[error("line {line}: bad number `{field}`")]
    BadNumber { line: u64, field: String },
    #[error("series `{series}` has duplicate period {period}")]
    DuplicatePeriod { series: String, period: Period },
    #[error("matrix is not square: {rows} rows, {cols} columns")]
    NotSquare { rows: usize, cols: usize },
    #[error("row and column labels differ")]
    LabelMismatch,
    #[error("negative entry at ({row}, {col})")]
    NegativeEntry { row: String, col: String },
    #[error("matrix error: {0}")]
    Matrix(#[from] MatrixError),
}

/// A 1–5 digit SIC code; `"0"` marks an unclassified payer or payee.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SectorCode(String);

impl SectorCode {
    pub fn unclassified() -> Self {
        SectorCode("0".to_string())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_unclassified(&self) -> bool {
        self.0 == "0"
    }
}

impl FromStr for SectorCode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if (1..=5).contains(&s.len()) && s.bytes().all(|b| b.is_ascii_digit()) {
            Ok(SectorCode(s.to_string()))
        } else {
            Err(format!("invalid sector code `{s}`"))
        }
    }
}

impl fmt::Display for SectorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One monthly payer → payee flow. The payee supplies the payer.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TransactionRecord {
    pub period: Period,
    pub payer: SectorCode,
    pub payee: SectorCode,
    pub value: Pence,
    /// Zero may mean a suppressed small count; the value is still real.
    pub count: u64,
}

/// Expected ledger column names, in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LedgerSchema {
    pub columns: [String; 5],
}

impl Default for LedgerSchema {
    fn default() -> Self {
        LedgerSchema {
            columns: ["period", "payer_sic", "payee_sic", "value_gbp", "count"].map(String::from),
        }
    }
}

fn check_header(found: &csv::StringRecord, expected: &[String]) -> Result<(), IngestError> {
    if found.len() != expected.len() || found.iter().zip(expected).any(|(a, b)| a != b) {
        return Err(IngestError::HeaderMismatch {
            expected: expected.join(","),
            found: found.iter().collect::<Vec<_>>().join(","),
        });
    }
    Ok(())
}

fn parse_row(line: u64, row: &csv::StringRecord) -> Result<TransactionRecord, IngestError> {
    if row.len() != 5 {
        return Err(IngestError::MalformedRow {
            line,
            reason: format!("expected 5 fields, found {}", row.len()),
        });
    }
    let period: Period = row[0]
        .parse()
        .map_err(|_| IngestError::BadPeriod { line, period: row[0].to_string() })?;
    if period.frequency() != Frequency::Monthly {
        return Err(IngestError::BadPeriod { line, period: row[0].to_string() });
    }
    let code = |i: usize| {
        row[i].parse::<SectorCode>().map_err(|reason| IngestError::MalformedRow { line, reason })
    };
    let payer = code(1)?;
    let payee = code(2)?;
    let value: Pence = row[3].parse().map_err(|e| match e {
        MoneyParseError::Negative(field) => IngestError::NegativeValue { line, field },
        MoneyParseError::Malformed(field) => IngestError::MalformedRow {
            line,
            reason: format!("bad value `{field}`"),
        },
    })?;
    let count: u64 = match row[4].parse() {
        Ok(c) => c,
        Err(_) if row[4].starts_with('-') && row[4][1..].parse::<u64>().is_ok() => {
            return Err(IngestError::NegativeValue { line, field: row[4].to_string() })
        }
        Err(_) => {
            return Err(IngestError::MalformedRow { line, reason: format!("bad count `{}`", &row[4]) })
        }
    };
    if value.is_zero() && count > 0 {
        return Err(IngestError::ValueZeroCountPositive { line, count });
    }
    Ok(TransactionRecord { period, payer, payee, value, count })
}

/// Validates every data row, returning one result per row in file order.
///
/// The outer error covers I/O and header problems; row problems are
/// located in the inner results.
pub fn validate_ledger<R: Read>(
    reader: R,
    schema: &LedgerSchema,
) -> Result<Vec<Result<TransactionRecord, IngestError>>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    check_header(rdr.headers()?, &schema.columns)?;
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        out.push(parse_row(line, &row));
    }
    Ok(out)
}

/// Reads a ledger, failing on the first invalid row.
pub fn read_ledger<R: Read>(
    reader: R,
    schema: &LedgerSchema,
) -> Result<Vec<TransactionRecord>, IngestError> {
    validate_ledger(reader, schema)?.into_iter().collect()
}

pub fn parse_ledger(
    path: impl AsRef<Path>,
    schema: &LedgerSchema,
) -> Result<Vec<TransactionRecord>, IngestError> {
    read_ledger(std::fs::File::open(path)?, schema)
}

pub fn write_ledger<W: Write>(writer: W, records: &[TransactionRecord]) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(LedgerSchema::default().columns.iter())?;
    for r in records {
        w.write_record([
            r.period.to_string(),
            r.payer.to_string(),
            r.payee.to_string(),
            r.value.to_string(),
            r.count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// A named benchmark series with strictly increasing periods.
#[derive(Debug, Clone, PartialEq)]
pub struct MacroSeries {
    pub name: String,
    pub observations: Vec<(Period, f64)>,
}

/// Reads long-format `series,period,value` rows.
///
/// Series are returned in order of first appearance, each sorted by period.
pub fn read_macro_series<R: Read>(reader: R) -> Result<Vec<MacroSeries>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let expected = ["series", "period", "value"].map(String::from);
    check_header(rdr.headers()?, &expected)?;
    let mut series: Vec<MacroSeries> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != 3 {
            return Err(IngestError::MalformedRow {
                line,
                reason: format!("expected 3 fields, found {}", row.len()),
            });
        }
        let period: Period = row[1]
            .parse()
            .map_err(|_| IngestError::BadPeriod { line, period: row[1].to_string() })?;
        let value: f64 = row[2]
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| IngestError::BadNumber { line, field: row[2].to_string() })?;
        let i = *index.entry(row[0].to_string()).or_insert_with(|| {
            series.push(MacroSeries { name: row[0].to_string(), observations: Vec::new() });
            series.len() - 1
        });
        series[i].observations.push((period, value));
    }
    for s in &mut series {
        s.observations.sort_by_key(|o| o.0);
        if let Some(w) = s.observations.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(IngestError::DuplicatePeriod { series: s.name.clone(), period: w[0].0 });
        }
    }
    Ok(series)
}

pub fn parse_macro_series(path: impl AsRef<Path>) -> Result<Vec<MacroSeries>, IngestError> {
    read_macro_series(std::fs::File::open(path)?)
}

/// Official IOT variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IotKind {
    /// Supply-and-use intermediate consumption.
    Sut,
    /// Product-by-product.
    PxP,
    /// Industry-by-industry.
    IxI,
}

impl FromStr for IotKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sut" => Ok(IotKind::Sut),
            "pxp" => Ok(IotKind::PxP),
            "ixi" => Ok(IotKind::IxI),
            _ => Err(format!("unknown IOT kind `{s}`")),
        }
    }
}

/// Official input-output table in £ million.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalIot {
    pub kind: IotKind,
    pub year: i32,
    pub matrix: FlowMatrix,
}

impl ExternalIot {
    pub fn labels(&self) -> &[String] {
        self.matrix.labels()
    }
}

/// Raw labelled table read from a matrix CSV.
struct LabelledTable {
    row_labels: Vec<String>,
    col_labels: Vec<String>,
    rows: Vec<Vec<f64>>,
    meta: HashMap<String, String>,
}

fn read_table<R: Read>(reader: R) -> Result<LabelledTable, IngestError> {
    let mut text = String::new();
    let mut reader = reader;
    reader.read_to_string(&mut text)?;
    let mut meta = HashMap::new();
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        for kv in line.trim_start_matches('#').split(';') {
            if let Some((k, v)) = kv.split_once('=') {
                meta.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut records = rdr.records();
    let header = records
        .next()
        .ok_or(IngestError::MalformedRow { line: 1, reason: "empty matrix file".into() })??;
    let col_labels: Vec<String> = header.iter().skip(1).map(|s| s.trim().to_string()).collect();
    let mut row_labels = Vec::new();
    let mut rows = Vec::new();
    for rec in records {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != col_labels.len() + 1 {
            return Err(IngestError::NotSquare { rows: rec.len() - 1, cols: col_labels.len() });
        }
        row_labels.push(rec[0].trim().to_string());
        let values = rec
            .iter()
            .skip(1)
            .map(|f| {
                let f = f.trim();
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| IngestError::BadNumber { line, field: f.to_string() })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(values);
    }
    Ok(LabelledTable { row_labels, col_labels, rows, meta })
}

/// Reads a labelled square matrix, reordering columns to the row-label order.
pub fn read_matrix<R: Read>(reader: R) -> Result<FlowMatrix, IngestError> {
    let t = read_table(reader)?;
    let n = t.row_labels.len();
    if t.col_labels.len() != n {
        return Err(IngestError::NotSquare { rows: n, cols: t.col_labels.len() });
    }
    let col_pos: HashMap<&str, usize> =
        t.col_labels.iter().enumerate().map(|(j, l)| (l.as_str(), j)).collect();
    let row_set: HashSet<&str> = t.row_labels.iter().map(String::as_str).collect();
    if col_pos.len() != n || row_set.len() != n || row_set.iter().any(|l| !col_pos.contains_key(l)) {
        return Err(IngestError::LabelMismatch);
    }
    let mut cells = Vec::with_capacity(n * n);
    for (i, row) in t.rows.iter().enumerate() {
        for label in &t.row_labels {
            let v = row[col_pos[label.as_str()]];
            if v < 0.0 {
                return Err(IngestError::NegativeEntry {
                    row: t.row_labels[i].clone(),
                    col: label.clone(),
                });
            }
            cells.push(v);
        }
    }
    let kind = t
        .meta
        .get("kind")
        .and_then(|k| k.parse::<WeightKind>().ok())
        .unwrap_or(WeightKind::Value);
    let period = t.meta.get("period").and_then(|p| p.parse::<Period>().ok());
    Ok(FlowMatrix::new(t.row_labels, cells, kind, period)?)
}

pub fn parse_matrix(path: impl AsRef<Path>) -> Result<FlowMatrix, IngestError> {
    read_matrix(std::fs::File::open(path)?)
}

pub fn parse_external_iot(
    path: impl AsRef<Path>,
    kind: IotKind,
    year: i32,
) -> Result<ExternalIot, IngestError> {
    let mut matrix = parse_matrix(path)?;
    matrix.set_period(Some(Period::Year(year)));
    Ok(ExternalIot { kind, year, matrix })
}

/// Writes a matrix with a `#kind=...;period=...` line, then the labelled grid.
pub fn write_matrix<W: Write>(writer: W, m: &FlowMatrix) -> Result<(), IngestError> {
    let mut writer = writer;
    let period = m.period().map_or_else(|| "NA".to_string(), |p| p.to_string());
    writeln!(writer, "#kind={};period={}", m.kind(), period)?;
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec![String::new()];
    header.extend(m.labels().iter().cloned());
    w.write_record(&header)?;
    for i in 0..m.n() {
        let mut row = vec![m.labels()[i].clone()];
        row.extend(m.row(i).iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "period,payer_sic,payee_sic,value_gbp,count\n";

    fn ledger(rows: &str) -> Result<Vec<TransactionRecord>, IngestError> {
        read_ledger(format!("{HEADER}{rows}").as_bytes(), &LedgerSchema::default())
    }

    #[test]
    fn direct_field_mapping() {
        let r = ledger("2022-03,49410,10910,1500.00,3\n").unwrap();
        assert_eq!(
            r,
            vec![TransactionRecord {
                period: Period::month(2022, 3),
                payer: "49410".parse().unwrap(),
                payee: "10910".parse().unwrap(),
                value: Pence(150_000),
                count: 3,
            }]
        );
    }

    #[test]
    fn suppressed_count_accepted() {
        let r = ledger("2022-03,49410,10910,1500.00,0\n").unwrap();
        assert_eq!(r[0].count, 0);
        assert_eq!(r[0].value, Pence(150_000));
    }

    #[test]
    fn zero_value_with_count_rejected() {
        let e = ledger("2022-03,49410,10910,0.00,5\n").unwrap_err();
        assert!(matches!(e, IngestError::ValueZeroCountPositive { line: 2, count: 5 }));
    }

    #[test]
    fn located_errors() {
        let rows = "2022-03,49410,10910,1.00,1\n2022-13,1,2,1.00,1\n2022-03,1,2,-4.00,1\n\
                    2022-03,1,2,4.00,-1\n2022-03,1,2\n2022-03,ABC,2,1.00,1\n";
        let results =
            validate_ledger(format!("{HEADER}{rows}").as_bytes(), &LedgerSchema::default()).unwrap();
        assert_eq!(results.len(), 6);
        assert!(results[0].is_ok());
        assert!(matches!(results[1], Err(IngestError::BadPeriod { line: 3, .. })));
        assert!(matches!(results[2], Err(IngestError::NegativeValue { line: 4, .. })));
        assert!(matches!(results[3], Err(IngestError::NegativeValue { line: 5, .. })));
        assert!(matches!(results[4], Err(IngestError::MalformedRow { line: 6, .. })));
        assert!(matches!(results[5], Err(IngestError::MalformedRow { line: 7, .. })));
    }

    #[test]
    fn annual_period_rejected_in_ledger() {
        assert!(matches!(ledger("2022,1,2,1.00,1\n"), Err(IngestError::BadPeriod { .. })));
    }

    #[test]
    fn header_must_match() {
        let e = read_ledger("a,b,c,d,e\n".as_bytes(), &LedgerSchema::default()).unwrap_err();
        assert!(matches!(e, IngestError::HeaderMismatch { .. }));
    }

    #[test]
    fn unknown_codes_pass_parse() {
        let r = ledger("2022-03,0,99999,1.00,0\n").unwrap();
        assert!(r[0].payer.is_unclassified());
    }

    #[test]
    fn ledger_round_trip() {
        let text = format!("{HEADER}2022-03,49410,10910,1500.00,3\n2022-04,0,1,0.50,0\n");
        let records = ledger(&text[HEADER.len()..]).unwrap();
        let mut out = Vec::new();
        write_ledger(&mut out, &records).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text);
    }

    #[test]
    fn macro_series_grouped_and_sorted() {
        let text = "series,period,value\nM1,2017-02,2.0\nM1,2017-01,1.0\nCPI,2017-01,100\n";
        let s = read_macro_series(text.as_bytes()).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].name, "M1");
        assert_eq!(
            s[0].observations,
            vec![(Period::month(2017, 1), 1.0), (Period::month(2017, 2), 2.0)]
        );
    }

    #[test]
    fn macro_duplicate_period() {
        let text = "series,period,value\nM1,2017-01,1\nM1,2017-01,2\n";
        assert!(matches!(
            read_macro_series(text.as_bytes()),
            Err(IngestError::DuplicatePeriod { .. })
        ));
    }

    #[test]
    fn macro_bad_number() {
        let text = "series,period,value\nM1,2017-01,abc\n";
        assert!(matches!(read_macro_series(text.as_bytes()), Err(IngestError::BadNumber { .. })));
    }

    #[test]
    fn matrix_with_matching_labels() {
        let text = ",A,B,C\nA,1,2,3\nB,4,5,6\nC,7,8,9\n";
        let m = read_matrix(text.as_bytes()).unwrap();
        assert_eq!(m.n(), 3);
        assert_eq!(m.get(1, 2), 6.0);
    }

    #[test]
    fn matrix_label_mismatch() {
        let text = ",A,C\nA,1,2\nB,3,4\n";
        assert!(matches!(read_matrix(text.as_bytes()), Err(IngestError::LabelMismatch)));
    }

    #[test]
    fn matrix_not_square() {
        let text = ",A,B,C\nA,1,2,3\nB,4,5,6\n";
        assert!(matches!(read_matrix(text.as_bytes()), Err(IngestError::NotSquare { .. })));
    }

    #[test]
    fn matrix_negative_entry() {
        let text = ",A,B\nA,1,-2\nB,3,4\n";
        assert!(matches!(read_matrix(text.as_bytes()), Err(IngestError::NegativeEntry { .. })));
    }

    #[test]
    fn permuted_columns_reordered() {
        let direct = read_matrix(",A,B,C\nA,1,2,3\nB,4,5,6\nC,7,8,9\n".as_bytes()).unwrap();
        let permuted = read_matrix(",C,A,B\nA,3,1,2\nB,6,4,5\nC,9,7,8\n".as_bytes()).unwrap();
        assert_eq!(direct, permuted);
    }

    #[test]
    fn matrix_write_read_keeps_metadata() {
        let m = FlowMatrix::new(
            vec!["A".into(), "B".into()],
            vec![0.25, 0.0, 0.75, 1.0],
            WeightKind::InputShare,
            Some(Period::Year(2022)),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_matrix(&mut buf, &m).unwrap();
        assert_eq!(read_matrix(buf.as_slice()).unwrap(), m);
    }
}
