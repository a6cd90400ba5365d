use std::error::Error;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ionet::centrality::{ccdf, influence_from_flows, influence_vector, read_descriptions, top_k};
use ionet::concordance::{parse_concordance, read_filters, split_raw_clean, ConcordanceTable, SectorFilter};
use ionet::diffs::{histogram_csv, quantiles, log10_histogram, proportional_diff, quantile_csv, scaled_pct_diff, ZeroPolicy};
use ionet::distcorr::{growth_corr_by_distance, shortest_paths, to_csv as distcorr_csv, Aggregation};
use ionet::ingest::{parse_ledger, parse_macro_series, parse_matrix, read_ledger, read_macro_series, write_ledger, write_matrix, LedgerSchema, TransactionRecord};
use ionet::iot::{build_matrices, truncate, truncate_by_quantile, BuildOptions, Direction, FlowMatrix, Granularity, Weight, WeightKind};
use ionet::money::Pence;
use ionet::netstats::{density_sweep, network_stats, threshold_grid, NetworkStatsReport};
use ionet::period::{Frequency, Period, PeriodRange};
use ionet::plfit::{fit_power_law, FitOptions, FitReportRow};
use ionet::series::{
    benchmark_table, edge_correlation, node_correlation, payment_series, BenchmarkSpec, EdgeTransform, NodeTransform,
    SeriesError, TimeSeries, Window,
};
use ionet::stats::Method;
use ionet::synth::{calibrate, gen_economy, EconomyConfig, Sdc, SizeDistribution};

type Result<T> = std::result::Result<T, Box<dyn Error>>;

#[derive(Parser)]
#[command(name = "ionet", version, about = "Input-output networks from inter-industry payment ledgers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Aggregate a ledger into one flow matrix per period.
    Build(BuildArgs),
    /// Summary statistics of one matrix.
    Netstats(NetstatsArgs),
    /// Density after truncating at each threshold of a grid.
    DensitySweep(SweepArgs),
    /// Influence vector ranking or its CCDF.
    Centrality(CentralityArgs),
    /// Power-law fit with a bootstrap p-value.
    Plfit(PlfitArgs),
    /// Correlation between two matrices.
    #[command(subcommand)]
    Corr(CorrCommand),
    /// Correlations of payment series against benchmark series.
    Benchmark(BenchmarkArgs),
    /// Growth correlation of sector pairs by network distance.
    Distcorr(DistcorrArgs),
    /// Edge-level differences between two matrices.
    Diff(DiffArgs),
    /// Generate a synthetic ledger.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Side {
    Input,
    Output,
}

impl From<Side> for Direction {
    fn from(s: Side) -> Self {
        match s {
            Side::Input => Direction::Input,
            Side::Output => Direction::Output,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Pearson,
    Spearman,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Pearson => Method::Pearson,
            MethodArg::Spearman => Method::Spearman,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum WeightArg {
    Value,
    Count,
}

impl From<WeightArg> for Weight {
    fn from(w: WeightArg) -> Self {
        match w {
            WeightArg::Value => Weight::Value,
            WeightArg::Count => Weight::Count,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum GranularityArg {
    Cpa,
    Sic5,
}

#[derive(Clone, Copy, ValueEnum)]
enum PeriodArg {
    Monthly,
    Annual,
}

#[derive(Args)]
struct OutArg {
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    ledger: PathBuf,
    /// SIC-to-CPA table; the built-in table when omitted.
    #[arg(long)]
    concordance: Option<PathBuf>,
    /// Keep only records whose two ends map to a CPA class (default).
    #[arg(long, conflicts_with = "raw")]
    clean: bool,
    /// Keep every record.
    #[arg(long)]
    raw: bool,
    #[arg(long, value_enum, default_value = "cpa")]
    granularity: GranularityArg,
    #[arg(long, value_enum, default_value = "annual")]
    period: PeriodArg,
    #[arg(long, value_enum, default_value = "value")]
    weight: WeightArg,
    /// Output directory, one `<period>.csv` per period.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct NetstatsArgs {
    #[arg(long)]
    matrix: PathBuf,
    /// Remove links whose share is below this threshold.
    #[arg(long)]
    truncate: Option<f64>,
    #[arg(long, value_enum, default_value = "input")]
    direction: Side,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    matrix: PathBuf,
    /// Grid as `start:end:step`.
    #[arg(long, default_value = "0:0.05:0.0025")]
    thresholds: String,
    #[arg(long, value_enum, default_value = "input")]
    direction: Side,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct FilterArgs {
    /// Built-in filter (intermediaries, intermediaries_g4, services) or a
    /// name defined in --filters.
    #[arg(long)]
    exclude: Option<String>,
    /// CSV of `name,token;token;...` filter definitions.
    #[arg(long)]
    filters: Option<PathBuf>,
}

#[derive(Args)]
struct CentralityArgs {
    #[arg(long)]
    matrix: PathBuf,
    /// Labour share.
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[command(flatten)]
    filter: FilterArgs,
    /// Keep only the K most influential sectors.
    #[arg(long)]
    top: Option<usize>,
    /// Emit `x,ccdf` points instead of the ranking.
    #[arg(long)]
    ccdf: bool,
    /// CSV of `code,description`.
    #[arg(long)]
    descriptions: Option<PathBuf>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct PlfitArgs {
    /// CSV holding a `value` column (or a single column of values).
    #[arg(long, required_unless_present = "matrix", conflicts_with = "matrix")]
    values: Option<PathBuf>,
    /// Fit the influence vector of this matrix instead.
    #[arg(long)]
    matrix: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5, requires = "matrix")]
    alpha: f64,
    #[command(flatten)]
    filter: FilterArgs,
    /// Drop values (or, with --matrix, positive cells) below this quantile first.
    #[arg(long)]
    quantile_truncate: Option<f64>,
    #[arg(long, default_value_t = 500)]
    reps: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Multi-level grid over cutoffs instead of trying every one.
    #[arg(long)]
    grid_points: Option<usize>,
    /// Labels copied into the report row.
    #[arg(long, default_value = "NA")]
    year: String,
    #[arg(long, default_value = "NA")]
    weight_kind: String,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Subcommand)]
enum CorrCommand {
    /// Cell-by-cell correlation.
    Edges(EdgeArgs),
    /// Correlation of sector input or output totals.
    Nodes(NodeArgs),
}

#[derive(Args)]
struct EdgeArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long, default_value = "raw")]
    transform: EdgeTransform,
    #[arg(long, value_enum, default_value = "pearson")]
    method: MethodArg,
    /// Leave self-supply cells out.
    #[arg(long)]
    no_diagonal: bool,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct NodeArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long, value_enum, default_value = "input")]
    side: Side,
    /// Correlate growth against the prior matrices instead of levels.
    #[arg(long, requires_all = ["prior_a", "prior_b"])]
    growth: bool,
    #[arg(long)]
    prior_a: Option<PathBuf>,
    #[arg(long)]
    prior_b: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "pearson")]
    method: MethodArg,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Ledger, or long-format `series,period,value` payment series.
    #[arg(long)]
    payments: PathBuf,
    /// Long-format benchmark series.
    #[arg(long = "macro")]
    macro_series: PathBuf,
    /// Ranges to drop, e.g. `2020-03:2022-12`; repeatable.
    #[arg(long)]
    exclude_window: Vec<PeriodRange>,
    /// Ranges to keep; every period when omitted.
    #[arg(long)]
    include_window: Vec<PeriodRange>,
    #[arg(long)]
    growth: bool,
    #[arg(long, value_enum, default_value = "pearson")]
    method: MethodArg,
    /// Add payment-to-benchmark ratio rows for this year.
    #[arg(long)]
    share_year: Option<i32>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct DistcorrArgs {
    /// Directory of monthly matrix CSVs with period metadata.
    #[arg(long)]
    monthly_dir: PathBuf,
    /// Annual matrix used for distances.
    #[arg(long)]
    annual: PathBuf,
    #[arg(long)]
    threshold: f64,
    #[arg(long, value_enum, default_value = "input")]
    side: Side,
    #[arg(long, value_enum, default_value = "spearman")]
    method: MethodArg,
    /// Follow links in their supply direction only.
    #[arg(long)]
    directed: bool,
    /// One coefficient over all pairs at a distance instead of the mean.
    #[arg(long)]
    pooled: bool,
    #[arg(long)]
    exclude_window: Vec<PeriodRange>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    Proportional,
    Scaledpct,
}

#[derive(Args)]
struct DiffArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long, value_enum)]
    metric: Metric,
    /// Keep cells that are zero in one matrix.
    #[arg(long)]
    include_zero: bool,
    /// Denominator floor used with --include-zero.
    #[arg(long, requires = "include_zero")]
    scale_floor: Option<f64>,
    /// Emit 25/50/75/100% quantiles.
    #[arg(long, conflicts_with = "hist")]
    quantiles: bool,
    /// Emit a log10 histogram with this many bins.
    #[arg(long)]
    hist: Option<usize>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    sectors: usize,
    #[arg(long, default_value_t = 24)]
    months: usize,
    #[arg(long, default_value = "2017-01")]
    start: Period,
    /// Power-law exponent of sector sizes.
    #[arg(long, conflicts_with = "uniform", default_value_t = 2.0)]
    pareto: f64,
    /// Uniform sector sizes.
    #[arg(long)]
    uniform: bool,
    #[arg(long, default_value_t = 0.3)]
    density: f64,
    #[arg(long, default_value_t = 0.0)]
    unclassified: f64,
    /// Publish counts below 50 as zero.
    #[arg(long)]
    sdc: bool,
    /// Rescale values to this total (pounds).
    #[arg(long, requires = "calibrate_count")]
    calibrate_value: Option<Pence>,
    /// Rescale counts to this total.
    #[arg(long, requires = "calibrate_value")]
    calibrate_count: Option<u64>,
    #[command(flatten)]
    out: OutArg,
}

/// Writes to a temporary file beside `path`, then renames it into place.
fn write_atomic(path: &Path, content: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(content)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn emit(out: &OutArg, content: &str) -> Result<()> {
    match &out.out {
        Some(p) => write_atomic(p, content.as_bytes()),
        None => {
            std::io::stdout().write_all(content.as_bytes())?;
            Ok(())
        }
    }
}

fn load_matrix(path: &Path) -> Result<FlowMatrix> {
    parse_matrix(path).map_err(|e| format!("{}: {e}", path.display()).into())
}

fn resolve_filter(args: &FilterArgs) -> Result<Option<SectorFilter>> {
    let Some(name) = &args.exclude else { return Ok(None) };
    if let Some(path) = &args.filters {
        let defined = read_filters(fs::File::open(path)?)?;
        if let Some(f) = defined.into_iter().find(|f| &f.name == name) {
            return Ok(Some(f));
        }
    }
    SectorFilter::builtin(name).map(Some).ok_or_else(|| format!("unknown filter `{name}`").into())
}

fn influence_of(matrix: &FlowMatrix, alpha: f64, filter: Option<&SectorFilter>) -> Result<ionet::centrality::InfluenceVector> {
    if matrix.kind() == WeightKind::InputShare && filter.is_none() {
        Ok(influence_vector(matrix, alpha)?)
    } else {
        Ok(influence_from_flows(matrix, alpha, filter)?)
    }
}

fn run_build(a: &BuildArgs) -> Result<()> {
    let table = match &a.concordance {
        Some(p) => parse_concordance(p)?,
        None => ConcordanceTable::default_table(),
    };
    let records = parse_ledger(&a.ledger, &LedgerSchema::default())?;
    let records: Vec<TransactionRecord> = if a.raw {
        records
    } else {
        split_raw_clean(&records, &table).0.into_iter().map(|c| c.record).collect()
    };
    let opts = BuildOptions {
        granularity: match a.granularity {
            GranularityArg::Cpa => Granularity::Cpa(&table),
            GranularityArg::Sic5 => Granularity::Sic5,
        },
        period_agg: match a.period {
            PeriodArg::Monthly => Frequency::Monthly,
            PeriodArg::Annual => Frequency::Annual,
        },
        weight: a.weight.into(),
        universe: None,
    };
    let matrices = build_matrices(&records, &opts);
    fs::create_dir_all(&a.out)?;
    // stage every file before renaming any of them
    let mut staged = Vec::with_capacity(matrices.len());
    for m in &matrices {
        let mut buf = Vec::new();
        write_matrix(&mut buf, m)?;
        let mut tmp = tempfile::NamedTempFile::new_in(&a.out)?;
        tmp.write_all(&buf)?;
        let name = format!("{}.csv", m.period().expect("built matrices carry a period"));
        staged.push((tmp, a.out.join(name)));
    }
    for (tmp, path) in staged {
        tmp.persist(path).map_err(|e| e.error)?;
    }
    Ok(())
}

fn run_netstats(a: &NetstatsArgs) -> Result<()> {
    let mut m = load_matrix(&a.matrix)?;
    if let Some(t) = a.truncate {
        m = truncate(&m, t, a.direction.into())?;
    }
    let s = network_stats(&m);
    emit(&a.out, &format!("{}\n{}\n", NetworkStatsReport::CSV_HEADER, s.csv_fields()))
}

fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = spec.split(':').map(str::parse).collect::<std::result::Result<_, _>>()
        .map_err(|_| format!("bad threshold grid `{spec}`"))?;
    match parts[..] {
        [start, end, step] if step > 0.0 && end >= start => Ok(threshold_grid(start, end, step)),
        _ => Err(format!("bad threshold grid `{spec}`").into()),
    }
}

fn run_sweep(a: &SweepArgs) -> Result<()> {
    let m = load_matrix(&a.matrix)?;
    let grid = parse_grid(&a.thresholds)?;
    let mut s = String::from("threshold,density,n_edges\n");
    for p in density_sweep(&m, &grid, a.direction.into())? {
        writeln!(s, "{},{},{}", p.threshold, p.density, p.n_edges)?;
    }
    emit(&a.out, &s)
}

fn run_centrality(a: &CentralityArgs) -> Result<()> {
    let m = load_matrix(&a.matrix)?;
    let filter = resolve_filter(&a.filter)?;
    let v = influence_of(&m, a.alpha, filter.as_ref())?;
    let mut s = String::new();
    if a.ccdf {
        s.push_str("x,ccdf\n");
        for (x, p) in ccdf(&v.values) {
            writeln!(s, "{x},{p}")?;
        }
    } else {
        let descriptions = match &a.descriptions {
            Some(p) => Some(read_descriptions(fs::File::open(p)?)?),
            None => None,
        };
        let k = a.top.unwrap_or(v.values.len()).max(1);
        s.push_str("rank,code,value,description\n");
        for (r, row) in top_k(&v, k, descriptions.as_ref()).iter().enumerate() {
            let d = row.description.as_deref().unwrap_or("");
            let d = if d.contains([',', '"']) { format!("\"{}\"", d.replace('"', "\"\"")) } else { d.to_string() };
            writeln!(s, "{},{},{},{}", r + 1, row.code, row.value, d)?;
        }
    }
    emit(&a.out, &s)
}

fn read_values(path: &Path) -> Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let col = headers.iter().position(|h| h == "value").unwrap_or(headers.len().saturating_sub(1));
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let field = rec.get(col).unwrap_or("");
        out.push(field.trim().parse::<f64>().map_err(|_| format!("bad value `{field}`"))?);
    }
    Ok(out)
}

fn drop_below_quantile(values: Vec<f64>, q: f64) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&q) {
        return Err(format!("quantile {q} outside [0, 1)").into());
    }
    let cut = match quantiles(&values, &[q]) {
        Ok(c) => c[0],
        Err(_) => return Ok(values),
    };
    Ok(values.into_iter().filter(|&v| v >= cut).collect())
}

fn run_plfit(a: &PlfitArgs) -> Result<()> {
    let filter = resolve_filter(&a.filter)?;
    let (values, filter_name) = match (&a.values, &a.matrix) {
        (Some(p), _) => {
            let mut values = read_values(p)?;
            if let Some(q) = a.quantile_truncate {
                values = drop_below_quantile(values, q)?;
            }
            (values, "NA".to_string())
        }
        (None, Some(p)) => {
            let mut m = load_matrix(p)?;
            if let Some(q) = a.quantile_truncate {
                m = truncate_by_quantile(&m, q)?;
            }
            let v = influence_of(&m, a.alpha, filter.as_ref())?;
            (v.values, filter.as_ref().map_or("none".to_string(), |f| f.name.clone()))
        }
        (None, None) => unreachable!("clap requires one input"),
    };
    let opts = FitOptions { grid_points: a.grid_points };
    let fit = fit_power_law(&values, a.reps, a.seed, a.jobs.max(1), opts)?;
    let row = FitReportRow { year: a.year.clone(), weight_kind: a.weight_kind.clone(), filter: filter_name, fit };
    emit(&a.out, &format!("{}\n{}\n", FitReportRow::CSV_HEADER, row.csv_fields()))
}

fn coefficient_csv(kind: &str, transform: &str, method: Method, r: std::result::Result<f64, SeriesError>) -> Result<String> {
    let value = match r {
        Ok(v) => v.to_string(),
        Err(SeriesError::Undefined) => "NA".to_string(),
        Err(e) => return Err(e.into()),
    };
    Ok(format!("kind,transform,method,coefficient\n{kind},{transform},{method},{value}\n"))
}

fn run_corr(c: &CorrCommand) -> Result<()> {
    match c {
        CorrCommand::Edges(a) => {
            let (ma, mb) = (load_matrix(&a.a)?, load_matrix(&a.b)?);
            let method = a.method.into();
            let r = edge_correlation(&ma, &mb, a.transform, !a.no_diagonal, method);
            let name = match a.transform {
                EdgeTransform::Raw => "raw",
                EdgeTransform::Log10Positive => "log10",
                EdgeTransform::InputShare => "input-share",
                EdgeTransform::OutputShare => "output-share",
            };
            emit(&a.out, &coefficient_csv("edges", name, method, r)?)
        }
        CorrCommand::Nodes(a) => {
            let (ma, mb) = (load_matrix(&a.a)?, load_matrix(&a.b)?);
            let method = a.method.into();
            let priors = match (&a.prior_a, &a.prior_b, a.growth) {
                (Some(pa), Some(pb), true) => Some((load_matrix(pa)?, load_matrix(pb)?)),
                _ => None,
            };
            let transform = match &priors {
                Some((pa, pb)) => NodeTransform::Growth { prior_a: pa, prior_b: pb },
                None => NodeTransform::Levels,
            };
            let r = node_correlation(&ma, &mb, a.side.into(), transform, method);
            let name = if priors.is_some() { "growth" } else { "levels" };
            emit(&a.out, &coefficient_csv("nodes", name, method, r)?)
        }
    }
}

fn named_series(path: &Path) -> Result<Vec<(String, TimeSeries)>> {
    let text = fs::read_to_string(path)?;
    let header = text.lines().next().unwrap_or("");
    if header == LedgerSchema::default().columns.join(",") {
        let records = read_ledger(text.as_bytes(), &LedgerSchema::default())?;
        return Ok(payment_series(&records, "PAYMENTS"));
    }
    read_macro_series(text.as_bytes())?
        .iter()
        .map(|m| Ok((m.name.clone(), TimeSeries::from_macro(m)?)))
        .collect()
}

fn run_benchmark(a: &BenchmarkArgs) -> Result<()> {
    let payments = named_series(&a.payments)?;
    let benchmarks: Vec<(String, TimeSeries)> = parse_macro_series(&a.macro_series)?
        .iter()
        .map(|m| Ok::<_, Box<dyn Error>>((m.name.clone(), TimeSeries::from_macro(m)?)))
        .collect::<Result<_>>()?;
    let spec = BenchmarkSpec {
        method: a.method.into(),
        window: Window { include: a.include_window.clone(), exclude: a.exclude_window.clone() },
        growth: a.growth,
        share_year: a.share_year,
    };
    emit(&a.out, &benchmark_table(&payments, &benchmarks, &spec).to_csv())
}

fn run_distcorr(a: &DistcorrArgs) -> Result<()> {
    let mut files: Vec<PathBuf> = fs::read_dir(&a.monthly_dir)?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::result::Result<_, _>>()?;
    files.retain(|p| p.extension().is_some_and(|e| e == "csv"));
    files.sort();
    let monthly = files.iter().map(|p| load_matrix(p)).collect::<Result<Vec<_>>>()?;
    let annual = load_matrix(&a.annual)?;
    let d = shortest_paths(&annual, a.threshold, !a.directed)?;
    let window = Window { include: Vec::new(), exclude: a.exclude_window.clone() };
    let method = a.method.into();
    let aggregation = if a.pooled { Aggregation::Pooled } else { Aggregation::Mean };
    let bins = growth_corr_by_distance(&monthly, &d, a.side.into(), method, &window, aggregation)?;
    let weight = monthly.first().map_or(annual.kind(), FlowMatrix::kind);
    emit(&a.out, &distcorr_csv(&bins, a.threshold, a.side.into(), weight, method))
}

fn run_diff(a: &DiffArgs) -> Result<()> {
    let (ma, mb) = (load_matrix(&a.a)?, load_matrix(&a.b)?);
    let policy = if a.include_zero {
        ZeroPolicy::Include { scale_floor: a.scale_floor }
    } else {
        ZeroPolicy::DropOneSided
    };
    let (name, xs) = match a.metric {
        Metric::Proportional => ("proportional", proportional_diff(&ma, &mb, policy)?),
        Metric::Scaledpct => ("scaledpct", scaled_pct_diff(&ma, &mb, policy)?),
    };
    let s = if a.quantiles {
        quantile_csv(&[(name.to_string(), xs)])?
    } else if let Some(bins) = a.hist {
        histogram_csv(&log10_histogram(&xs, bins)?)
    } else {
        let mut s = String::from("value\n");
        for x in xs {
            writeln!(s, "{x}")?;
        }
        s
    };
    emit(&a.out, &s)
}

fn run_synth(a: &SynthArgs) -> Result<()> {
    let cfg = EconomyConfig {
        seed: a.seed,
        n_sectors: a.sectors,
        months: a.months,
        start: a.start,
        sizes: if a.uniform { SizeDistribution::Uniform } else { SizeDistribution::Pareto { gamma: a.pareto } },
        link_density: a.density,
        unclassified_share: a.unclassified,
        sdc: if a.sdc { Sdc::SuppressSmallCounts } else { Sdc::Off },
    };
    let mut records = gen_economy(&cfg)?;
    if let (Some(v), Some(c)) = (a.calibrate_value, a.calibrate_count) {
        records = calibrate(&records, v, c)?;
    }
    let mut buf = Vec::new();
    write_ledger(&mut buf, &records)?;
    emit(&a.out, std::str::from_utf8(&buf)?)
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Build(a) => run_build(a),
        Command::Netstats(a) => run_netstats(a),
        Command::DensitySweep(a) => run_sweep(a),
        Command::Centrality(a) => run_centrality(a),
        Command::Plfit(a) => run_plfit(a),
        Command::Corr(c) => run_corr(c),
        Command::Benchmark(a) => run_benchmark(a),
        Command::Distcorr(a) => run_distcorr(a),
        Command::Diff(a) => run_diff(a),
        Command::Synth(a) => run_synth(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
