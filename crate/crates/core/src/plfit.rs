//! Continuous power-law fits with a KS-optimal lower cutoff.
//!
//! For a cutoff `xmin` with `m` samples at or above it, the exponent is the
//! closed-form MLE `γ = 1 + m / Σ ln(x/xmin)` and goodness of fit is the KS
//! distance against `F(x) = 1 − (x/xmin)^(1−γ)`. The p-value comes from a
//! semi-parametric bootstrap: body values are resampled, tail values drawn
//! from the fitted law, and each replicate is refitted from scratch.

use std::fmt::Write as _;

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::rng;

/// Smallest tail considered when scanning cutoffs.
pub const MIN_TAIL: usize = 10;
pub const MIN_BOOTSTRAP_REPS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlfitError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("tail is degenerate: every sample equals xmin")]
    DegenerateTail,
    #[error("sample {0} is not a positive finite number")]
    NonPositiveSample(f64),
    #[error("bootstrap needs at least {MIN_BOOTSTRAP_REPS} replicates, got {0}")]
    TooFewReplicates(usize),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerLawFit {
    pub gamma: f64,
    pub xmin: f64,
    pub loglik: f64,
    pub ks_stat: f64,
    pub p_value: Option<f64>,
    pub n_tail: usize,
    pub bootstrap_reps: usize,
    pub seed: u64,
}

/// How the cutoff scan visits candidates.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FitOptions {
    /// `None` tries every distinct sample value. `Some(g)` evaluates `g`
    /// evenly spaced candidates, then repeats on the neighbourhood of the
    /// best one until the neighbourhood holds at most `g` candidates.
    pub grid_points: Option<usize>,
}

impl FitOptions {
    pub const EXHAUSTIVE: FitOptions = FitOptions { grid_points: None };

    pub fn grid(points: usize) -> Self {
        FitOptions { grid_points: Some(points.max(4)) }
    }
}

fn check_samples(x: &[f64]) -> Result<(), PlfitError> {
    match x.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        Some(&bad) => Err(PlfitError::NonPositiveSample(bad)),
        None => Ok(()),
    }
}

fn loglik(m: usize, gamma: f64, xmin: f64, log_ratio_sum: f64) -> f64 {
    let m = m as f64;
    m * (gamma - 1.0).ln() - m * xmin.ln() - gamma * log_ratio_sum
}

/// Closed-form exponent and log-likelihood over samples `≥ xmin`.
pub fn mle_gamma(x: &[f64], xmin: f64) -> Result<(f64, f64), PlfitError> {
    check_samples(x)?;
    if !(xmin.is_finite() && xmin > 0.0) {
        return Err(PlfitError::NonPositiveSample(xmin));
    }
    let tail: Vec<f64> = x.iter().copied().filter(|&v| v >= xmin).collect();
    if tail.len() < 2 {
        return Err(PlfitError::TooFewSamples { needed: 2, got: tail.len() });
    }
    let s: f64 = tail.iter().map(|v| (v / xmin).ln()).sum();
    if s <= 0.0 {
        return Err(PlfitError::DegenerateTail);
    }
    let gamma = 1.0 + tail.len() as f64 / s;
    Ok((gamma, loglik(tail.len(), gamma, xmin, s)))
}

/// KS distance over an ascending tail given `ln(t_i / xmin)`.
fn ks_from_log_ratios(log_ratios: &[f64], gamma: f64) -> f64 {
    let m = log_ratios.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &lr) in log_ratios.iter().enumerate() {
        let f = 1.0 - ((1.0 - gamma) * lr).exp();
        let below = i as f64 / m;
        let upto = (i + 1) as f64 / m;
        d = d.max((f - below).abs()).max((upto - f).abs());
    }
    d.min(1.0)
}

/// Sup distance between the empirical CDF of the tail `x ≥ xmin` and the
/// fitted law, checking both one-sided limits at every sample.
pub fn ks_distance(x: &[f64], gamma: f64, xmin: f64) -> f64 {
    let mut tail: Vec<f64> = x.iter().copied().filter(|&v| v >= xmin).collect();
    assert!(!tail.is_empty(), "ks_distance on an empty tail");
    tail.sort_by(f64::total_cmp);
    let lr: Vec<f64> = tail.iter().map(|v| (v / xmin).ln()).collect();
    ks_from_log_ratios(&lr, gamma)
}

struct Candidate {
    ks: f64,
    gamma: f64,
    log_ratio_sum: f64,
}

struct Scan {
    sorted: Vec<f64>,
    logs: Vec<f64>,
    /// First index of every distinct value with a large enough tail.
    starts: Vec<usize>,
    buf: Vec<f64>,
}

impl Scan {
    fn new(x: &[f64]) -> Self {
        let mut sorted = x.to_vec();
        sorted.sort_by(f64::total_cmp);
        let logs = sorted.iter().map(|v| v.ln()).collect();
        let n = sorted.len();
        let starts = (0..n.saturating_sub(MIN_TAIL - 1))
            .filter(|&k| k == 0 || sorted[k] != sorted[k - 1])
            .collect();
        Scan { sorted, logs, starts, buf: Vec::with_capacity(n) }
    }

    fn evaluate(&mut self, k: usize) -> Option<Candidate> {
        let lx = self.logs[k];
        self.buf.clear();
        self.buf.extend(self.logs[k..].iter().map(|l| l - lx));
        let s: f64 = self.buf.iter().sum();
        if s <= 0.0 {
            return None;
        }
        let gamma = 1.0 + self.buf.len() as f64 / s;
        Some(Candidate { ks: ks_from_log_ratios(&self.buf, gamma), gamma, log_ratio_sum: s })
    }
}

fn better(a: &Candidate, b: &Candidate) -> bool {
    a.ks < b.ks
}

/// Picks the cutoff that minimises the KS distance; ties go to the smaller
/// cutoff. `p_value` is left unset.
pub fn fit_xmin(x: &[f64], opts: FitOptions) -> Result<PowerLawFit, PlfitError> {
    check_samples(x)?;
    if x.len() < MIN_TAIL {
        return Err(PlfitError::TooFewSamples { needed: MIN_TAIL, got: x.len() });
    }
    let mut scan = Scan::new(x);
    let nc = scan.starts.len();
    let mut seen: Vec<Option<Option<Candidate>>> = (0..nc).map(|_| None).collect();
    let visit = |pos: usize, scan: &mut Scan, seen: &mut Vec<Option<Option<Candidate>>>| {
        if seen[pos].is_none() {
            let k = scan.starts[pos];
            seen[pos] = Some(scan.evaluate(k));
        }
    };

    match opts.grid_points {
        None => (0..nc).for_each(|p| visit(p, &mut scan, &mut seen)),
        Some(g) => {
            let g = g.max(4);
            let (mut lo, mut hi) = (0usize, nc - 1);
            loop {
                if hi - lo < g {
                    (lo..=hi).for_each(|p| visit(p, &mut scan, &mut seen));
                    break;
                }
                let span = hi - lo;
                let mut best: Option<usize> = None;
                for t in 0..g {
                    let p = lo + (t * span + (g - 1) / 2) / (g - 1);
                    visit(p, &mut scan, &mut seen);
                    if let Some(Some(c)) = &seen[p] {
                        let improves = match best {
                            Some(b) => better(c, seen[b].as_ref().unwrap().as_ref().unwrap()),
                            None => true,
                        };
                        if improves {
                            best = Some(p);
                        }
                    }
                }
                let Some(b) = best else { break };
                let step = span.div_ceil(g - 1);
                lo = b.saturating_sub(step).max(lo);
                hi = (b + step).min(hi);
            }
        }
    }

    let mut chosen: Option<(usize, &Candidate)> = None;
    for (pos, c) in seen.iter().enumerate() {
        if let Some(Some(c)) = c {
            if chosen.is_none_or(|(_, b)| better(c, b)) {
                chosen = Some((pos, c));
            }
        }
    }
    let (pos, c) = chosen.ok_or(PlfitError::DegenerateTail)?;
    let k = scan.starts[pos];
    let xmin = scan.sorted[k];
    let n_tail = scan.sorted.len() - k;
    Ok(PowerLawFit {
        gamma: c.gamma,
        xmin,
        loglik: loglik(n_tail, c.gamma, xmin, c.log_ratio_sum),
        ks_stat: c.ks,
        p_value: None,
        n_tail,
        bootstrap_reps: 0,
        seed: 0,
    })
}

/// Inverse-CDF draw from the continuous power law on `[xmin, ∞)`.
pub fn sample_power_law<R: Rng + ?Sized>(rng: &mut R, gamma: f64, xmin: f64) -> f64 {
    let u: f64 = rng.random();
    xmin * (1.0 - u).powf(-1.0 / (gamma - 1.0))
}

fn replicate(x_body: &[f64], n: usize, fit: &PowerLawFit, seed: u64, index: u64) -> Vec<f64> {
    let mut rng = rng::stream(seed, index);
    let p_tail = fit.n_tail as f64 / n as f64;
    (0..n)
        .map(|_| {
            if x_body.is_empty() || rng.random::<f64>() < p_tail {
                sample_power_law(&mut rng, fit.gamma, fit.xmin)
            } else {
                x_body[rng.random_range(0..x_body.len())]
            }
        })
        .collect()
}

/// Fraction of replicates whose refitted KS distance is at least the
/// observed one. Replicate `r` draws from stream `(seed, r)`, so the result
/// does not depend on `jobs`. A replicate that cannot be fitted counts as
/// a worse fit than the observed data.
pub fn bootstrap_pvalue(
    x: &[f64],
    fit: &PowerLawFit,
    reps: usize,
    seed: u64,
    jobs: usize,
    opts: FitOptions,
) -> Result<f64, PlfitError> {
    if reps < MIN_BOOTSTRAP_REPS {
        return Err(PlfitError::TooFewReplicates(reps));
    }
    check_samples(x)?;
    let body: Vec<f64> = x.iter().copied().filter(|&v| v < fit.xmin).collect();
    let n = x.len();
    let run = |r: usize| -> bool {
        let sample = replicate(&body, n, fit, seed, r as u64);
        fit_xmin(&sample, opts).map_or(true, |f| f.ks_stat >= fit.ks_stat)
    };
    let exceed = if jobs <= 1 {
        (0..reps).filter(|&r| run(r)).count()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| PlfitError::ThreadPool(e.to_string()))?;
        pool.install(|| (0..reps).into_par_iter().filter(|&r| run(r)).count())
    };
    Ok(exceed as f64 / reps as f64)
}

/// `fit_xmin` followed by the bootstrap.
pub fn fit_power_law(
    x: &[f64],
    reps: usize,
    seed: u64,
    jobs: usize,
    opts: FitOptions,
) -> Result<PowerLawFit, PlfitError> {
    let mut fit = fit_xmin(x, opts)?;
    fit.p_value = Some(bootstrap_pvalue(x, &fit, reps, seed, jobs, opts)?);
    fit.bootstrap_reps = reps;
    fit.seed = seed;
    Ok(fit)
}

/// One row of the fit report.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReportRow {
    pub year: String,
    pub weight_kind: String,
    pub filter: String,
    pub fit: PowerLawFit,
}

impl FitReportRow {
    pub const CSV_HEADER: &'static str = "year,weight_kind,filter,gamma,xmin,loglik,ks,p,n_tail,reps,seed";

    pub fn csv_fields(&self) -> String {
        let f = &self.fit;
        let mut s = String::new();
        write!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.year,
            self.weight_kind,
            self.filter,
            f.gamma,
            f.xmin,
            f.loglik,
            f.ks_stat,
            crate::netstats::fmt_opt(f.p_value),
            f.n_tail,
            f.bootstrap_reps,
            f.seed
        )
        .unwrap();
        s
    }
}
