use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgAction, Args, Parser, Subcommand};
use nrmips::harness::{
    parse_config_text, run_bench, synth_dataset, synth_queries, write_summary_csv, BenchConfig, DataFormat,
    HarnessError, NormProfile,
};
use nrmips::index::IndexError;
use nrmips::query::{write_recall_csv, QueryError};
use nrmips::rho::{emit_rho_curves, linear_grid, write_rho_csv, CurveParams};
use nrmips::vecdata::{self, norm_histogram, DataError};
use nrmips::{
    answer_query, brute_force_topk, fmt_float, Dataset, GroundTruth, IndexConfig, MetaAlgorithm, NormRangeIndex,
    QuerySet,
};

const SEED_ENV: &str = "NRMIPS_SEED";

#[derive(Parser)]
#[command(name = "nrmips", version, about = "LSH-based maximum inner product search with norm-range partitioning")]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset (and optionally queries).
    Synth(SynthArgs),
    /// Exact top-k by brute force.
    Groundtruth(GroundTruthArgs),
    /// Build and save a norm-range index.
    Build(BuildArgs),
    /// Answer queries with a saved index.
    Query(QueryArgs),
    /// Recall-vs-probed-items curves for meta and norm-range variants.
    Bench(BenchArgs),
    /// Tabulate theoretical hash quality.
    Rho(RhoArgs),
    /// Histogram of item norms.
    Normhist(NormHistArgs),
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// auto, fvecs or csv.
    #[arg(long, default_value = "auto")]
    format: String,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    dim: usize,
    /// constant[:c], uniform[:lo:hi], lognormal[:sigma] or power-law[:alpha].
    #[arg(long, default_value = "lognormal")]
    profile: String,
    #[arg(long)]
    seed: Option<u64>,
    /// `.fvecs` writes binary, anything else CSV.
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    queries_output: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    num_queries: usize,
}

#[derive(Args)]
struct GroundTruthArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BuildArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    algorithm: String,
    #[arg(long, default_value_t = 1)]
    partitions: usize,
    #[arg(long, default_value_t = 32)]
    code_length: usize,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    shared_hashes: bool,
    #[arg(long)]
    u: Option<f64>,
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    cross_dim: Option<usize>,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    index: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    queries: PathBuf,
    /// Items probed per query, `T`.
    #[arg(long)]
    budget: usize,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// `key = value` file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    queries: Option<String>,
    #[arg(long)]
    groundtruth: Option<String>,
    #[arg(long)]
    num_queries: Option<String>,
    /// Comma-separated list.
    #[arg(long)]
    algorithms: Option<String>,
    /// meta, norm-range or both.
    #[arg(long)]
    variants: Option<String>,
    /// Paired defaults for meta code length 16, 32 or 64.
    #[arg(long)]
    paired: Option<String>,
    #[arg(long)]
    code_length: Option<String>,
    #[arg(long)]
    range_code_length: Option<String>,
    #[arg(long)]
    partitions: Option<String>,
    #[arg(long)]
    k: Option<String>,
    /// Comma-separated probe budgets.
    #[arg(long)]
    t_grid: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    shared_hashes: Option<String>,
    #[arg(long)]
    cross_dim: Option<String>,
    #[arg(long)]
    output: Option<String>,
    #[arg(long)]
    summary: Option<String>,
}

#[derive(Args)]
struct RhoArgs {
    #[arg(long, default_value = "l2-alsh,sign-alsh,simple-lsh,cross-lsh")]
    algorithms: String,
    /// lo:hi:count
    #[arg(long, default_value = "0.05:0.95:50")]
    s_grid: String,
    #[arg(long, default_value = "0.05:0.95:50")]
    c_grid: String,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct NormHistArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 50)]
    bins: usize,
    #[arg(long)]
    scale_to_unit: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

enum CliError {
    Usage(String),
    Data(String),
    Internal(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Internal(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Internal(m) => m,
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<IndexError> for CliError {
    fn from(e: IndexError) -> Self {
        match e {
            IndexError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            IndexError::Transform(_) | IndexError::Hash(_) => CliError::Internal(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<QueryError> for CliError {
    fn from(e: QueryError) -> Self {
        match e {
            QueryError::Index(e) => e.into(),
            QueryError::Data(e) => e.into(),
            QueryError::InvalidArgument(m) => CliError::Usage(m),
            QueryError::GroundTruthMismatch(_) => CliError::Data(e.to_string()),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config(_) => CliError::Usage(e.to_string()),
            HarnessError::Data(e) => e.into(),
            HarnessError::Index(e) => e.into(),
            HarnessError::Query(e) => e.into(),
            HarnessError::Io(e) => e.into(),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| usage(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

fn resolve_seed(flag: Option<u64>) -> Result<u64> {
    Ok(match flag {
        Some(s) => s,
        None => env_seed()?.unwrap_or(0),
    })
}

fn parse_format(s: &str) -> Result<DataFormat> {
    s.parse().map_err(usage)
}

fn load(data: &DataArgs) -> Result<Dataset> {
    Ok(parse_format(&data.format)?.load(&data.dataset)?)
}

fn load_queries(path: &Path) -> Result<QuerySet> {
    Ok(QuerySet::from_dataset(&vecdata::load_auto(path)?)?)
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            CliError::Data(format!("cannot create {}: {e}", p.display()))
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_dataset(ds: &Dataset, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::Data(format!("cannot create {}: {e}", path.display())))?;
    let fvecs = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("fvecs"));
    if fvecs {
        vecdata::write_fvecs(ds, file)?;
    } else {
        vecdata::write_csv(ds, file)?;
    }
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> Result<()> {
    let profile: NormProfile = a.profile.parse().map_err(usage)?;
    let seed = resolve_seed(a.seed)?;
    let ds = synth_dataset(a.n, a.dim, profile, seed)?;
    write_dataset(&ds, &a.output)?;
    if let Some(path) = a.queries_output {
        if a.num_queries == 0 {
            return Err(usage("--num-queries must be at least 1"));
        }
        let qs = synth_queries(a.num_queries, a.dim, seed)?;
        let flat: Vec<f64> = qs.iter().flatten().copied().collect();
        write_dataset(&Dataset::new(a.dim, flat)?, &path)?;
    }
    Ok(())
}

fn cmd_groundtruth(a: GroundTruthArgs) -> Result<()> {
    let ds = load(&a.data)?;
    let qs = load_queries(&a.queries)?;
    let gt = brute_force_topk(&ds, &qs, a.k)?;
    let mut out = open_output(a.output.as_deref())?;
    gt.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

fn cmd_build(a: BuildArgs) -> Result<()> {
    let algorithm: MetaAlgorithm = a.algorithm.parse().map_err(usage)?;
    let ds = load(&a.data)?;
    let mut cfg = IndexConfig::new(algorithm, a.partitions, a.code_length, resolve_seed(a.seed)?);
    cfg.shared_hashes = a.shared_hashes;
    cfg.u = a.u.unwrap_or(cfg.u);
    cfg.m = a.m.unwrap_or(cfg.m);
    cfg.r = a.r.unwrap_or(cfg.r);
    cfg.cross_dim = a.cross_dim.unwrap_or(cfg.cross_dim);
    let index = NormRangeIndex::build(&ds, cfg)?;
    index.save(&a.output)?;
    eprintln!(
        "built {} index: {} parts, {} buckets",
        algorithm,
        index.parts().len(),
        index.bucket_count()
    );
    Ok(())
}

fn cmd_query(a: QueryArgs) -> Result<()> {
    let index = NormRangeIndex::load(&a.index)?;
    let ds = load(&a.data)?;
    let qs = load_queries(&a.queries)?;
    let answers = (0..qs.len())
        .map(|i| answer_query(&index, &ds, qs.get(i), a.budget, a.k))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let mut out = open_output(a.output.as_deref())?;
    writeln!(out, "query_id,rank,item_id,inner_product")?;
    for (q, ans) in answers.iter().enumerate() {
        if ans.empty {
            eprintln!("query {q}: no candidates");
        }
        for (rank, nb) in ans.top_k.iter().enumerate() {
            writeln!(out, "{q},{rank},{},{}", nb.id, fmt_float(nb.inner_product))?;
        }
    }
    out.flush()?;
    Ok(())
}

fn bench_config(a: &BenchArgs) -> Result<BenchConfig> {
    let mut cfg = BenchConfig::default();
    let mut seed_set = false;
    if let Some(path) = &a.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
        seed_set = text
            .lines()
            .filter_map(|l| l.split('#').next()?.split_once('='))
            .any(|(k, _)| k.trim() == "seed");
        parse_config_text(&text, &mut cfg)?;
    }
    if !seed_set && a.seed.is_none() {
        if let Some(s) = env_seed()? {
            cfg.seed = s;
        }
    }
    let flags = [
        ("dataset", &a.dataset),
        ("format", &a.format),
        ("queries", &a.queries),
        ("groundtruth", &a.groundtruth),
        ("num_queries", &a.num_queries),
        ("algorithms", &a.algorithms),
        ("variants", &a.variants),
        ("paired", &a.paired),
        ("code_length", &a.code_length),
        ("range_code_length", &a.range_code_length),
        ("partitions", &a.partitions),
        ("k", &a.k),
        ("t_grid", &a.t_grid),
        ("seed", &a.seed),
        ("shared_hashes", &a.shared_hashes),
        ("cross_dim", &a.cross_dim),
        ("output", &a.output),
        ("summary", &a.summary),
    ];
    let errors: Vec<String> = flags
        .iter()
        .filter_map(|(key, v)| v.as_ref().and_then(|v| cfg.set(key, v).err()))
        .map(|e| format!("--{e}"))
        .collect();
    if !errors.is_empty() {
        return Err(usage(format!("invalid configuration: {}", errors.join("; "))));
    }
    Ok(cfg)
}

fn cmd_bench(a: BenchArgs) -> Result<()> {
    let cfg = bench_config(&a)?;
    let mut problems = cfg.problems(None);
    if cfg.dataset.is_none() {
        problems.push("dataset is required".into());
    }
    if !problems.is_empty() {
        return Err(usage(format!("invalid configuration: {}", problems.join("; "))));
    }
    let ds = cfg.format.load(cfg.dataset.as_deref().expect("checked above"))?;
    cfg.validate(Some(ds.len()))?;
    let qs = match &cfg.queries {
        Some(p) => load_queries(p)?,
        None => synth_queries(cfg.num_queries, ds.dim(), cfg.seed)?,
    };
    if qs.dim() != ds.dim() {
        return Err(CliError::Data(format!(
            "queries have dimension {} but the dataset has {}",
            qs.dim(),
            ds.dim()
        )));
    }
    let gt = match &cfg.groundtruth {
        Some(p) => {
            let file = File::open(p).map_err(|e| CliError::Data(format!("cannot open {}: {e}", p.display())))?;
            GroundTruth::read_csv(io::BufReader::new(file))?
        }
        None => brute_force_topk(&ds, &qs, cfg.k)?,
    };
    if gt.num_queries() != qs.len() {
        return Err(CliError::Data(format!(
            "ground truth covers {} queries, {} given",
            gt.num_queries(),
            qs.len()
        )));
    }
    let report = run_bench(&ds, &qs, &gt, &cfg)?;
    let mut out = open_output(cfg.output.as_deref())?;
    write_recall_csv(&report.recall, &mut out)?;
    out.flush()?;
    if let Some(path) = &cfg.summary {
        let mut s = open_output(Some(path))?;
        write_summary_csv(&report.summary, &mut s)?;
        s.flush()?;
    }
    for t in &report.timings {
        eprintln!(
            "{} {}: build {:.3}s, queries {:.3}s",
            t.algorithm, t.variant, t.build_secs, t.query_secs
        );
    }
    Ok(())
}

fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || usage(format!("grid {s:?} must be lo:hi:count"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if count == 0 || !(lo <= hi) {
        return Err(bad());
    }
    Ok(linear_grid(lo, hi, count))
}

fn cmd_rho(a: RhoArgs) -> Result<()> {
    let algorithms = a
        .algorithms
        .split(',')
        .map(|s| s.parse::<MetaAlgorithm>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(usage)?;
    let rows = emit_rho_curves(
        &algorithms,
        &parse_grid(&a.c_grid)?,
        &parse_grid(&a.s_grid)?,
        &CurveParams::default(),
    );
    let mut out = open_output(a.output.as_deref())?;
    write_rho_csv(&rows, &mut out)?;
    out.flush()?;
    Ok(())
}

fn cmd_normhist(a: NormHistArgs) -> Result<()> {
    let ds = load(&a.data)?;
    let bins = norm_histogram(&ds, a.bins, a.scale_to_unit)?;
    let mut out = open_output(a.output.as_deref())?;
    writeln!(out, "bin_center,count")?;
    for b in bins {
        writeln!(out, "{},{}", fmt_float(b.center), b.count)?;
    }
    out.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    match cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Groundtruth(a) => cmd_groundtruth(a),
        Command::Build(a) => cmd_build(a),
        Command::Query(a) => cmd_query(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Rho(a) => cmd_rho(a),
        Command::Normhist(a) => cmd_normhist(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match std::panic::catch_unwind(|| run(cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(e)) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
        Err(_) => ExitCode::from(3),
    }
}
