//! Seeded synthetic ledgers and matrices.
//!
//! Every random draw comes from a counter-based stream keyed by the seed
//! and the index of the item being generated, so any subset of the output
//! can be reproduced on its own.

pub mod oracle;

use rand::Rng;
use thiserror::Error;

use crate::ingest::{SectorCode, TransactionRecord};
use crate::iot::{FlowMatrix, WeightKind};
use crate::money::Pence;
use crate::period::Period;
use crate::plfit::sample_power_law;
use crate::rng::stream;

/// Counts below this are published as zero when suppression is on.
pub const SDC_COUNT_FLOOR: u64 = 50;

// Stream index ranges, kept disjoint from record streams.
const SIZE_STREAMS: u64 = 1 << 62;
const LINK_STREAMS: u64 = 1 << 61;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("need at least 2 sectors, got {0}")]
    TooFewSectors(usize),
    #[error("need at least one month")]
    NoMonths,
    #[error("{name} = {value} outside [0, 1]")]
    OutOfUnitRange { name: &'static str, value: f64 },
    #[error("at most 99998 sectors fit in five-digit codes, got {0}")]
    TooManySectors(usize),
    #[error("Pareto exponent must exceed 1, got {0}")]
    BadExponent(f64),
    #[error("nothing to calibrate")]
    EmptyLedger,
    #[error("calibration left record {0} with zero value and positive count")]
    Infeasible(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SizeDistribution {
    /// Continuous power law on `[1, ∞)` with density exponent `gamma`.
    Pareto { gamma: f64 },
    /// Uniform on `[1, 2)`.
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sdc {
    Off,
    /// Counts below [`SDC_COUNT_FLOOR`] become zero; values are kept.
    SuppressSmallCounts,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EconomyConfig {
    pub seed: u64,
    pub n_sectors: usize,
    pub months: usize,
    pub start: Period,
    pub sizes: SizeDistribution,
    /// Probability that an ordered sector pair (self pairs included) trades.
    pub link_density: f64,
    /// Fraction of each payment's value booked against sector `0`.
    pub unclassified_share: f64,
    pub sdc: Sdc,
}

impl EconomyConfig {
    pub fn new(seed: u64, n_sectors: usize, months: usize) -> Self {
        EconomyConfig {
            seed,
            n_sectors,
            months,
            start: Period::month(2017, 1),
            sizes: SizeDistribution::Pareto { gamma: 2.0 },
            link_density: 0.3,
            unclassified_share: 0.0,
            sdc: Sdc::Off,
        }
    }

    fn validate(&self) -> Result<(), SynthError> {
        if self.n_sectors < 2 {
            return Err(SynthError::TooFewSectors(self.n_sectors));
        }
        if self.n_sectors > 99_998 {
            return Err(SynthError::TooManySectors(self.n_sectors));
        }
        if self.months == 0 {
            return Err(SynthError::NoMonths);
        }
        for (name, value) in [("link_density", self.link_density), ("unclassified_share", self.unclassified_share)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(SynthError::OutOfUnitRange { name, value });
            }
        }
        if let SizeDistribution::Pareto { gamma } = self.sizes {
            if !(gamma > 1.0) {
                return Err(SynthError::BadExponent(gamma));
            }
        }
        Ok(())
    }
}

/// Five-digit code of sector `k` out of `n`, spread over `01000..=99999`.
pub fn sector_code(k: usize, n: usize) -> String {
    let step = (99_000 / n).max(1);
    format!("{:05}", 1000 + k * step)
}

pub fn sector_sizes(seed: u64, n: usize, dist: SizeDistribution) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let mut r = stream(seed, SIZE_STREAMS | i as u64);
            match dist {
                SizeDistribution::Pareto { gamma } => sample_power_law(&mut r, gamma, 1.0),
                SizeDistribution::Uniform => 1.0 + r.random::<f64>(),
            }
        })
        .collect()
}

/// Gravity-style ledger: the link from supplier `i` to buyer `j` carries
/// value proportional to `size_i · size_j`, with monthly noise.
pub fn gen_economy(cfg: &EconomyConfig) -> Result<Vec<TransactionRecord>, SynthError> {
    cfg.validate()?;
    let n = cfg.n_sectors;
    let sizes = sector_sizes(cfg.seed, n, cfg.sizes);
    let mean_size = sizes.iter().sum::<f64>() / n as f64;
    let codes: Vec<SectorCode> = (0..n).map(|k| sector_code(k, n).parse().expect("valid code")).collect();
    let months: Vec<Period> = {
        let mut p = cfg.start;
        (0..cfg.months)
            .map(|_| {
                let q = p;
                p = p.succ();
                q
            })
            .collect()
    };
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let link = (i * n + j) as u64;
            let mut lr = stream(cfg.seed, LINK_STREAMS | link);
            if lr.random::<f64>() >= cfg.link_density {
                continue;
            }
            let weight = sizes[i] * sizes[j] / (mean_size * mean_size);
            // typical transaction between £10 and £10,000
            let avg_txn = 10f64.powf(lr.random_range(3.0..6.0));
            for (t, &period) in months.iter().enumerate() {
                let mut r = stream(cfg.seed, link * cfg.months as u64 + t as u64);
                let pence = (weight * 1e7 * (0.5 + r.random::<f64>())).round().max(1.0) as u64;
                let count = ((pence as f64 / avg_txn).round() as u64).max(1);
                emit(&mut out, cfg, &mut r, period, &codes[j], &codes[i], pence, count);
            }
        }
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn emit<R: Rng>(
    out: &mut Vec<TransactionRecord>,
    cfg: &EconomyConfig,
    r: &mut R,
    period: Period,
    payer: &SectorCode,
    payee: &SectorCode,
    pence: u64,
    count: u64,
) {
    let u_pence = (pence as f64 * cfg.unclassified_share).round() as u64;
    let u_count = ((count as f64 * cfg.unclassified_share).round() as u64).min(if u_pence == 0 { 0 } else { count });
    let c_pence = pence - u_pence;
    let c_count = if c_pence == 0 { 0 } else { count - u_count };
    let sdc = |c: u64| if cfg.sdc == Sdc::SuppressSmallCounts && c < SDC_COUNT_FLOOR { 0 } else { c };
    if c_pence > 0 {
        out.push(TransactionRecord {
            period,
            payer: payer.clone(),
            payee: payee.clone(),
            value: Pence(c_pence),
            count: sdc(c_count),
        });
    }
    if u_pence > 0 {
        let unknown_payer = r.random::<bool>();
        let (a, b) = if unknown_payer {
            (SectorCode::unclassified(), payee.clone())
        } else {
            (payer.clone(), SectorCode::unclassified())
        };
        out.push(TransactionRecord { period, payer: a, payee: b, value: Pence(u_pence), count: sdc(u_count) });
    }
}

/// Splits `total` proportionally to `weights` in whole units; leftover
/// units go to the largest remainders, earliest index first on ties.
pub fn apportion(weights: &[u64], total: u64) -> Vec<u64> {
    let sum: u128 = weights.iter().map(|&w| w as u128).sum();
    if sum == 0 {
        return vec![0; weights.len()];
    }
    let mut out = Vec::with_capacity(weights.len());
    let mut rems = Vec::with_capacity(weights.len());
    let mut given: u128 = 0;
    for (k, &w) in weights.iter().enumerate() {
        let num = total as u128 * w as u128;
        out.push((num / sum) as u64);
        given += num / sum;
        rems.push((num % sum, k));
    }
    rems.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, k) in rems.iter().take((total as u128 - given) as usize) {
        out[k] += 1;
    }
    out
}

/// Rescales values and counts so they sum exactly to the targets while
/// keeping their relative sizes.
pub fn calibrate(
    records: &[TransactionRecord],
    total_value: Pence,
    total_count: u64,
) -> Result<Vec<TransactionRecord>, SynthError> {
    if records.is_empty() {
        return Err(SynthError::EmptyLedger);
    }
    let values = apportion(&records.iter().map(|r| r.value.0).collect::<Vec<_>>(), total_value.0);
    let counts = apportion(&records.iter().map(|r| r.count).collect::<Vec<_>>(), total_count);
    records
        .iter()
        .zip(values.into_iter().zip(counts))
        .enumerate()
        .map(|(k, (r, (v, c)))| {
            if v == 0 && c > 0 {
                return Err(SynthError::Infeasible(k));
            }
            Ok(TransactionRecord { value: Pence(v), count: c, ..r.clone() })
        })
        .collect()
}

/// Random nonnegative matrix with about `density · n²` positive cells.
pub fn random_flow_matrix(seed: u64, n: usize, density: f64, loops: bool) -> FlowMatrix {
    let mut r = stream(seed, 0);
    let cells = (0..n * n)
        .map(|k| {
            let keep = r.random::<f64>() < density && (loops || k / n != k % n);
            let w = 10f64.powf(r.random_range(-2.0..3.0));
            if keep { w } else { 0.0 }
        })
        .collect();
    let labels = (0..n).map(|i| format!("s{i:03}")).collect();
    FlowMatrix::new(labels, cells, WeightKind::Value, None).expect("valid matrix")
}

/// Random input-share matrix whose column sums lie in `(0, 1]` (or are 0
/// for columns without inputs).
pub fn random_share_matrix(seed: u64, n: usize, density: f64) -> FlowMatrix {
    let m = random_flow_matrix(seed, n, density, true);
    let mut r = stream(seed, 1);
    let cols = m.column_sums();
    let scale: Vec<f64> = (0..n).map(|_| r.random_range(0.05..=1.0)).collect();
    let mut cells = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if cols[j] > 0.0 {
                cells[i * n + j] = m.get(i, j) / cols[j] * scale[j];
            }
        }
    }
    FlowMatrix::new(m.labels().to_vec(), cells, WeightKind::InputShare, None).expect("valid matrix")
}

/// Three sectors `A → B → C` whose monthly input totals have prescribed
/// growth correlations.
#[derive(Debug, Clone)]
pub struct ChainFixture {
    pub monthly: Vec<FlowMatrix>,
    pub annual: FlowMatrix,
}

/// Builds a 24-month fixture for `A → B → C` where the year-on-year growth
/// of input totals correlates at `rho_ab`, `rho_bc` and `rho_ac`.
///
/// One chain cannot carry arbitrary pairwise correlations on shared
/// periods, so each pair is given its own four months. In the second year
/// months 1–4 hold only A and B, 5–8 only B and C, and 9–12 only A and C.
/// Absent sectors sit at zero in both years, so their growth is undefined
/// there. Within a block the two growth vectors are
/// `u = e1` and `v = ρ e1 + √(1 − ρ²) e2` for orthonormal centred `e1, e2`,
/// whose Pearson correlation is exactly `ρ`.
pub fn chain_fixture(rho_ab: f64, rho_bc: f64, rho_ac: f64) -> ChainFixture {
    let labels: Vec<String> = ["A", "B", "C"].iter().map(|s| s.to_string()).collect();
    let e1 = [0.5, -0.5, 0.5, -0.5];
    let e2 = [0.5, 0.5, -0.5, -0.5];
    let blocks = [(0usize, 1usize, rho_ab), (1, 2, rho_bc), (0, 2, rho_ac)];
    let mut second = [[0.0f64; 12]; 3];
    let mut present = [[false; 12]; 3];
    for (b, &(i, j, rho)) in blocks.iter().enumerate() {
        let orth = (1.0 - rho * rho).sqrt();
        for t in 0..4 {
            let m = 4 * b + t;
            present[i][m] = true;
            present[j][m] = true;
            second[i][m] = 100.0 + 10.0 * e1[t];
            second[j][m] = 100.0 + 10.0 * (rho * e1[t] + orth * e2[t]);
        }
    }
    let mut monthly = Vec::with_capacity(24);
    for year in 0..2 {
        for m in 0..12 {
            let mut cells = vec![0.0; 9];
            for s in 0..3 {
                let level = match (present[s][m], year) {
                    (false, _) => 0.0,
                    (true, 0) => 100.0,
                    (true, _) => second[s][m],
                };
                cells[s * 3 + s] = level;
            }
            let period = Period::month(2021 + year, m as u8 + 1);
            monthly.push(FlowMatrix::new(labels.clone(), cells, WeightKind::Value, Some(period)).expect("valid"));
        }
    }
    let annual = FlowMatrix::new(
        labels,
        vec![0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
        WeightKind::Value,
        Some(Period::Year(2022)),
    )
    .expect("valid");
    ChainFixture { monthly, annual }
}
