use std::fmt;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use super::{HarnessError, Result};
use crate::algorithm::MetaAlgorithm;
use crate::index::{IndexConfig, NormRangeIndex, DEFAULT_CROSS_DIM};
use crate::query::{evaluate_recall_curve, RecallRow};
use crate::vecdata::{self, Dataset, GroundTruth, QuerySet};

/// `(meta L, partitions w, norm-range L)` triples that give both variants a
/// similar number of buckets.
pub const PAIRED_DEFAULTS: [(usize, usize, usize); 3] = [(16, 32, 11), (32, 64, 26), (64, 128, 57)];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// One index over the whole dataset.
    Meta,
    NormRange,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Meta => "meta",
            Variant::NormRange => "norm-range",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "meta" => Ok(Variant::Meta),
            "norm-range" | "normrange" | "range" => Ok(Variant::NormRange),
            _ => Err(format!("unknown variant {s:?} (expected meta or norm-range)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DataFormat {
    /// Chosen from the file extension.
    #[default]
    Auto,
    Fvecs,
    Csv,
}

impl FromStr for DataFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "auto" => Ok(DataFormat::Auto),
            "fvecs" => Ok(DataFormat::Fvecs),
            "csv" => Ok(DataFormat::Csv),
            _ => Err(format!("unknown format {s:?} (expected auto, fvecs or csv)")),
        }
    }
}

impl DataFormat {
    pub fn load(self, path: &Path) -> Result<Dataset> {
        Ok(match self {
            DataFormat::Auto => vecdata::load_auto(path)?,
            DataFormat::Fvecs => vecdata::load_fvecs(path)?,
            DataFormat::Csv => vecdata::load_csv(path)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub dataset: Option<PathBuf>,
    pub format: DataFormat,
    pub queries: Option<PathBuf>,
    pub groundtruth: Option<PathBuf>,
    /// Random queries drawn when no query file is given.
    pub num_queries: usize,
    pub algorithms: Vec<MetaAlgorithm>,
    pub variants: Vec<Variant>,
    /// `L` of the meta variant.
    pub code_length: usize,
    /// `L` of the norm-range variant.
    pub range_code_length: usize,
    pub partitions: usize,
    pub k: usize,
    /// `None` means [`default_t_grid`].
    pub t_grid: Option<Vec<usize>>,
    pub seed: u64,
    pub shared_hashes: bool,
    pub cross_dim: usize,
    pub output: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self::paired(32).expect("32 is a paired default")
    }
}

impl BenchConfig {
    /// Configuration paired on the meta code length (16, 32 or 64).
    pub fn paired(code_length: usize) -> Option<Self> {
        let &(l, w, lr) = PAIRED_DEFAULTS.iter().find(|p| p.0 == code_length)?;
        Some(Self {
            dataset: None,
            format: DataFormat::Auto,
            queries: None,
            groundtruth: None,
            num_queries: 100,
            algorithms: MetaAlgorithm::ALL.to_vec(),
            variants: vec![Variant::Meta, Variant::NormRange],
            code_length: l,
            range_code_length: lr,
            partitions: w,
            k: 10,
            t_grid: None,
            seed: 0,
            shared_hashes: true,
            cross_dim: DEFAULT_CROSS_DIM,
            output: None,
            summary: None,
        })
    }

    /// Sets one option by its config-file key.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
            v.parse().map_err(|_| format!("{key}: cannot parse {v:?}"))
        }
        fn list<T: FromStr<Err = String>>(v: &str) -> std::result::Result<Vec<T>, String> {
            v.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect()
        }
        let v = value.trim();
        match key.trim().replace('-', "_").as_str() {
            "dataset" => self.dataset = Some(v.into()),
            "format" => self.format = v.parse()?,
            "queries" => self.queries = Some(v.into()),
            "groundtruth" => self.groundtruth = Some(v.into()),
            "num_queries" => self.num_queries = num(key, v)?,
            "algorithms" | "algorithm" => self.algorithms = list(v)?,
            "variants" | "variant" => {
                self.variants = if v == "both" {
                    vec![Variant::Meta, Variant::NormRange]
                } else {
                    list(v)?
                }
            }
            "code_length" => self.code_length = num(key, v)?,
            "range_code_length" => self.range_code_length = num(key, v)?,
            "partitions" => self.partitions = num(key, v)?,
            "paired" => {
                let l: usize = num(key, v)?;
                let p = Self::paired(l).ok_or_else(|| format!("paired: no default for code length {l}"))?;
                self.code_length = p.code_length;
                self.range_code_length = p.range_code_length;
                self.partitions = p.partitions;
            }
            "k" => self.k = num(key, v)?,
            "t_grid" => {
                self.t_grid = Some(
                    v.split(',')
                        .filter(|s| !s.trim().is_empty())
                        .map(|s| num(key, s.trim()))
                        .collect::<std::result::Result<_, _>>()?,
                )
            }
            "seed" => self.seed = num(key, v)?,
            "shared_hashes" => self.shared_hashes = num(key, v)?,
            "cross_dim" => self.cross_dim = num(key, v)?,
            "output" => self.output = Some(v.into()),
            "summary" => self.summary = Some(v.into()),
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }

    /// All problems with the configuration, checked against a dataset of `n`
    /// items when known.
    pub fn problems(&self, n: Option<usize>) -> Vec<String> {
        let mut p = Vec::new();
        if self.algorithms.is_empty() {
            p.push("no algorithms selected".to_string());
        }
        if self.variants.is_empty() {
            p.push("no variants selected".to_string());
        }
        if self.code_length == 0 {
            p.push("code_length must be at least 1".to_string());
        }
        if self.range_code_length == 0 {
            p.push("range_code_length must be at least 1".to_string());
        }
        if self.partitions == 0 {
            p.push("partitions must be at least 1".to_string());
        }
        if self.k == 0 {
            p.push("k must be at least 1".to_string());
        }
        if self.queries.is_none() && self.num_queries == 0 {
            p.push("num_queries must be at least 1".to_string());
        }
        if self.algorithms.contains(&MetaAlgorithm::CrossLsh) && self.cross_dim == 0 {
            p.push("cross_dim must be at least 1".to_string());
        }
        if let Some(grid) = &self.t_grid {
            if grid.is_empty() {
                p.push("t_grid is empty".to_string());
            }
            if grid.contains(&0) {
                p.push("t_grid values must be positive".to_string());
            }
        }
        if let Some(n) = n {
            if self.partitions > n && self.variants.contains(&Variant::NormRange) {
                p.push(format!("partitions ({}) exceeds dataset size ({n})", self.partitions));
            }
            if self.k > n {
                p.push(format!("k ({}) exceeds dataset size ({n})", self.k));
            }
        }
        p
    }

    pub fn validate(&self, n: Option<usize>) -> Result<()> {
        let p = self.problems(n);
        if p.is_empty() {
            Ok(())
        } else {
            Err(HarnessError::Config(p))
        }
    }

    pub fn index_config(&self, algorithm: MetaAlgorithm, variant: Variant) -> IndexConfig {
        let (w, l) = match variant {
            Variant::Meta => (1, self.code_length),
            Variant::NormRange => (self.partitions, self.range_code_length),
        };
        IndexConfig {
            shared_hashes: self.shared_hashes,
            cross_dim: self.cross_dim,
            ..IndexConfig::new(algorithm, w, l, self.seed)
        }
    }
}

/// Parses `key = value` lines. `#` starts a comment; blank lines are skipped.
/// Every malformed line is reported.
pub fn parse_config_text(text: &str, into: &mut BenchConfig) -> Result<()> {
    let mut errors = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or_default().trim();
        if line.is_empty() {
            continue;
        }
        match line.split_once('=') {
            Some((k, v)) => {
                if let Err(e) = into.set(k, v) {
                    errors.push(format!("line {}: {e}", i + 1));
                }
            }
            None => errors.push(format!("line {}: expected key = value", i + 1)),
        }
    }
    if errors.is_empty() {
        Ok(())
    } else {
        Err(HarnessError::Config(errors))
    }
}

/// `points` budgets spaced logarithmically from `k` to `n`, rounded and
/// deduplicated.
pub fn default_t_grid(k: usize, n: usize, points: usize) -> Vec<usize> {
    let k = k.max(1).min(n);
    if points <= 1 || k == n {
        return vec![n];
    }
    let ratio = n as f64 / k as f64;
    let mut grid: Vec<usize> = (0..points)
        .map(|i| (k as f64 * ratio.powf(i as f64 / (points - 1) as f64)).round() as usize)
        .map(|t| t.clamp(k, n))
        .collect();
    grid.dedup();
    grid
}

/// Deterministic statistics of one built index.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub algorithm: MetaAlgorithm,
    pub variant: Variant,
    pub code_length: usize,
    pub partitions: usize,
    pub buckets: usize,
    pub items: usize,
    /// Parts whose `M_j` equals the global maximum norm.
    pub parts_at_global_max: usize,
    pub hash_evaluations: usize,
}

pub const SUMMARY_HEADER: &str =
    "algorithm,variant,code_length,partitions,buckets,mean_bucket_size,parts_at_global_max,hash_evaluations";

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{SUMMARY_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.algorithm,
            r.variant,
            r.code_length,
            r.partitions,
            r.buckets,
            crate::fmt_float(r.items as f64 / r.buckets as f64),
            r.parts_at_global_max,
            r.hash_evaluations
        )?;
    }
    Ok(())
}

/// Wall-clock cost of one run. Kept out of the CSVs so they stay
/// reproducible.
#[derive(Debug, Clone, PartialEq)]
pub struct Timing {
    pub algorithm: MetaAlgorithm,
    pub variant: Variant,
    pub build_secs: f64,
    pub query_secs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub recall: Vec<RecallRow>,
    pub summary: Vec<SummaryRow>,
    pub timings: Vec<Timing>,
}

/// Builds every (algorithm, variant) index and measures its recall curve.
pub fn run_bench(ds: &Dataset, qs: &QuerySet, gt: &GroundTruth, cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.validate(Some(ds.len()))?;
    if gt.k() != cfg.k {
        return Err(HarnessError::Config(vec![format!(
            "ground truth has k = {} but k = {} was requested",
            gt.k(),
            cfg.k
        )]));
    }
    let grid = cfg
        .t_grid
        .clone()
        .unwrap_or_else(|| default_t_grid(cfg.k, ds.len(), 20));
    let global_max = ds.max_norm();
    let mut report = BenchReport {
        recall: Vec::new(),
        summary: Vec::new(),
        timings: Vec::new(),
    };
    for &algorithm in &cfg.algorithms {
        for &variant in &cfg.variants {
            let icfg = cfg.index_config(algorithm, variant);
            let start = Instant::now();
            let index = NormRangeIndex::build(ds, icfg)?;
            let build_secs = start.elapsed().as_secs_f64();
            let start = Instant::now();
            let curve = evaluate_recall_curve(&index, qs, gt, &grid)?;
            let query_secs = start.elapsed().as_secs_f64();
            for (t, recall) in curve.points() {
                report.recall.push(RecallRow {
                    algorithm,
                    variant: variant.name().to_string(),
                    code_length: icfg.code_length,
                    partitions: icfg.partitions,
                    k: cfg.k,
                    t,
                    recall,
                });
            }
            report.summary.push(SummaryRow {
                algorithm,
                variant,
                code_length: icfg.code_length,
                partitions: icfg.partitions,
                buckets: index.bucket_count(),
                items: index.num_items(),
                parts_at_global_max: index.parts().iter().filter(|p| p.max_norm() == global_max).count(),
                hash_evaluations: index.query_hash_evaluations(),
            });
            report.timings.push(Timing {
                algorithm,
                variant,
                build_secs,
                query_secs,
            });
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{synth_dataset, synth_queries, NormProfile};
    use crate::vecdata::brute_force_topk;

    #[test]
    fn paired_defaults() {
        let c = BenchConfig::paired(16).unwrap();
        assert_eq!((c.code_length, c.partitions, c.range_code_length), (16, 32, 11));
        let c = BenchConfig::paired(64).unwrap();
        assert_eq!((c.code_length, c.partitions, c.range_code_length), (64, 128, 57));
        assert!(BenchConfig::paired(20).is_none());
        assert_eq!(BenchConfig::default().range_code_length, 26);
    }

    #[test]
    fn config_text() {
        let mut c = BenchConfig::default();
        parse_config_text(
            "# sweep\nalgorithms = simple-lsh, l2-alsh\nk=5\n\nt_grid = 5,10,20\nseed = 9 # trailing\npaired = 16\n",
            &mut c,
        )
        .unwrap();
        assert_eq!(c.algorithms, vec![MetaAlgorithm::SimpleLsh, MetaAlgorithm::L2Alsh]);
        assert_eq!(c.k, 5);
        assert_eq!(c.t_grid, Some(vec![5, 10, 20]));
        assert_eq!(c.seed, 9);
        assert_eq!(c.partitions, 32);
        let err = parse_config_text("k = x\nbogus = 1\nno equals\n", &mut c).unwrap_err();
        match err {
            HarnessError::Config(list) => assert_eq!(list.len(), 3),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn validation_lists_everything() {
        let mut c = BenchConfig::default();
        c.algorithms.clear();
        c.k = 0;
        c.code_length = 0;
        c.t_grid = Some(vec![0]);
        c.range_code_length = 0;
        assert_eq!(c.problems(Some(10)).len(), 6);
    }

    #[test]
    fn t_grid() {
        let g = default_t_grid(10, 10_000, 20);
        assert_eq!(g.first(), Some(&10));
        assert_eq!(g.last(), Some(&10_000));
        assert_eq!(g.len(), 20);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(default_t_grid(5, 5, 20), vec![5]);
        assert!(default_t_grid(1, 10, 20).windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn tiny_dataset_curves_reach_one() {
        let ds = synth_dataset(10, 3, NormProfile::Uniform { low: 0.1, high: 1.0 }, 1).unwrap();
        let qs = synth_queries(4, 3, 1).unwrap();
        let gt = brute_force_topk(&ds, &qs, 1).unwrap();
        let cfg = BenchConfig {
            k: 1,
            partitions: 3,
            code_length: 4,
            range_code_length: 3,
            t_grid: Some((1..=10).collect()),
            ..BenchConfig::default()
        };
        let report = run_bench(&ds, &qs, &gt, &cfg).unwrap();
        assert_eq!(report.summary.len(), 8);
        for r in report.recall.iter().filter(|r| r.t == 10) {
            assert_eq!(r.recall, 1.0);
        }
        let mut a = Vec::new();
        write_summary_csv(&report.summary, &mut a).unwrap();
        let again = run_bench(&ds, &qs, &gt, &cfg).unwrap();
        let mut b = Vec::new();
        write_summary_csv(&again.summary, &mut b).unwrap();
        assert_eq!(a, b);
        assert_eq!(report.recall, again.recall);
    }
}
