//! Query processing: probe buckets in score order, verify candidates with
//! exact inner products, and measure recall against ground truth.

use std::io::{self, Write};

use rayon::prelude::*;
use thiserror::Error;

use crate::algorithm::MetaAlgorithm;
use crate::hash::HashFamily;
use crate::index::{cross_bucket_score, derive_seed, IndexConfig, IndexError, NormRangeIndex};
use crate::vecdata::{inner_product, rank_order, select_top_k, DataError, Dataset, GroundTruth, ItemId, Neighbor, QuerySet};

#[derive(Debug, Error)]
pub enum QueryError {
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("ground truth does not match queries: {0}")]
    GroundTruthMismatch(String),
}

pub type Result<T> = std::result::Result<T, QueryError>;

/// Item ids in probe order, at most `budget` of them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateStream {
    pub ids: Vec<ItemId>,
    pub budget: usize,
}

impl CandidateStream {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Walks buckets from the highest to the lowest score and collects their
/// items until `budget` items are found. The last bucket may be cut short.
pub fn generate_candidates(index: &NormRangeIndex, q: &[f64], budget: usize) -> Result<CandidateStream> {
    if budget == 0 {
        return Err(QueryError::InvalidArgument("probe budget must be at least 1".into()));
    }
    let order = match index.algorithm() {
        MetaAlgorithm::CrossLsh => residual_order(index, q)?,
        _ => match_count_order(index, q)?,
    };
    let cap = budget.min(index.num_items());
    let mut ids = Vec::with_capacity(cap);
    'outer: for (part, bucket) in order {
        for &id in index.parts()[part].bucket_items(bucket) {
            if ids.len() == cap {
                break 'outer;
            }
            ids.push(id);
        }
        if ids.len() == cap {
            break;
        }
    }
    Ok(CandidateStream { ids, budget })
}

/// `(part, bucket)` pairs following the precomputed `(j, l)` schedule. Inside
/// one class buckets are visited in ascending code order.
fn match_count_order(index: &NormRangeIndex, q: &[f64]) -> Result<Vec<(usize, usize)>> {
    let codes = index.hash_query(q)?;
    let len = index.config().code_length;
    let classes: Vec<Vec<Vec<usize>>> = index
        .parts()
        .iter()
        .enumerate()
        .map(|(j, part)| {
            let qc = &codes[if codes.len() == 1 { 0 } else { j }].0;
            let mut by_l = vec![Vec::new(); len + 1];
            for b in 0..part.bucket_count() {
                let l = part.bucket_code(b).iter().zip(qc).filter(|(a, b)| a == b).count();
                by_l[l].push(b);
            }
            by_l
        })
        .collect();
    let mut order = Vec::new();
    for s in index.schedule() {
        order.extend(classes[s.part][s.matches].iter().map(|&b| (s.part, b)));
    }
    Ok(order)
}

/// Cross-LSH: every occupied bucket scored by `M_j / sqrt(Y + 1)` where `Y`
/// sums the query's per-function residuals of the bucket's symbols.
fn residual_order(index: &NormRangeIndex, q: &[f64]) -> Result<Vec<(usize, usize)>> {
    let t = index.config().transform_query(q)?;
    let tables = index
        .families()
        .iter()
        .map(|f| match f {
            HashFamily::CrossPolytope(cp) => Ok((cp, cp.residual_table(&t)?)),
            _ => Err(QueryError::InvalidArgument("residual ranking needs a cross-polytope family".into())),
        })
        .collect::<Result<Vec<_>>>()?;
    let mut scored: Vec<(f64, f64, f64, usize, usize)> = Vec::with_capacity(index.bucket_count());
    for (j, part) in index.parts().iter().enumerate() {
        let (fam, table) = &tables[if tables.len() == 1 { 0 } else { j }];
        for b in 0..part.bucket_count() {
            let mut y = 0.0;
            for (f, &sym) in part.bucket_code(b).iter().enumerate() {
                y += table[f][fam.slot(sym)?];
            }
            scored.push((cross_bucket_score(part.max_norm(), y), part.max_norm(), y, j, b));
        }
    }
    scored.sort_by(|a, b| {
        b.0.total_cmp(&a.0)
            .then(b.1.total_cmp(&a.1))
            .then(a.2.total_cmp(&b.2))
            .then(a.3.cmp(&b.3))
            .then(a.4.cmp(&b.4))
    });
    Ok(scored.into_iter().map(|s| (s.3, s.4)).collect())
}

impl From<crate::hash::HashError> for QueryError {
    fn from(e: crate::hash::HashError) -> Self {
        QueryError::Index(IndexError::Hash(e))
    }
}

/// Result of one query.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryAnswer {
    /// Best `k` verified candidates, by inner product then id.
    pub top_k: Vec<Neighbor>,
    /// Best verified candidate of each part, if any of its items was probed.
    pub local: Vec<Option<Neighbor>>,
    pub candidates: usize,
    /// No candidate was produced.
    pub empty: bool,
}

impl QueryAnswer {
    pub fn best(&self) -> Option<&Neighbor> {
        self.top_k.first()
    }
}

/// Probes `budget` items, computes their exact inner products and returns
/// the top `k`.
pub fn answer_query(index: &NormRangeIndex, ds: &Dataset, q: &[f64], budget: usize, k: usize) -> Result<QueryAnswer> {
    index.check_dataset(ds)?;
    if k == 0 || k > budget {
        return Err(QueryError::InvalidArgument(format!(
            "k must be in 1..={budget}, got {k}"
        )));
    }
    let stream = generate_candidates(index, q, budget)?;
    let mut part_of = vec![0usize; index.num_items()];
    for (j, p) in index.parts().iter().enumerate() {
        for &id in p.members() {
            if let Some(pos) = ds.position_of(id) {
                part_of[pos] = j;
            }
        }
    }
    let mut local: Vec<Option<Neighbor>> = vec![None; index.parts().len()];
    let mut scored = Vec::with_capacity(stream.len());
    for &id in &stream.ids {
        let pos = ds.position_of(id).ok_or_else(|| {
            QueryError::Index(IndexError::Corrupt(format!("index references unknown item {id}")))
        })?;
        let nb = Neighbor {
            id,
            inner_product: inner_product(ds.row(pos), q),
        };
        let slot = &mut local[part_of[pos]];
        if slot.as_ref().is_none_or(|cur| rank_order(&nb, cur).is_lt()) {
            *slot = Some(nb);
        }
        scored.push(nb);
    }
    Ok(QueryAnswer {
        empty: scored.is_empty(),
        candidates: scored.len(),
        top_k: select_top_k(scored, k),
        local,
    })
}

/// Fraction of `truth` found among the first `t` candidates.
pub fn recall_at(candidates: &[ItemId], truth: &[ItemId], t: usize) -> f64 {
    if truth.is_empty() {
        return 1.0;
    }
    let prefix = &candidates[..t.min(candidates.len())];
    let hits = truth.iter().filter(|id| prefix.contains(id)).count();
    hits as f64 / truth.len() as f64
}

/// Mean recall over queries at each probe budget.
#[derive(Debug, Clone, PartialEq)]
pub struct RecallCurve {
    pub k: usize,
    pub t_grid: Vec<usize>,
    pub recall: Vec<f64>,
}

impl RecallCurve {
    pub fn points(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.t_grid.iter().copied().zip(self.recall.iter().copied())
    }
}

/// Per-query recall at every `t` in `t_grid`, each query's stream generated
/// once at the largest budget.
pub fn per_query_recall(
    index: &NormRangeIndex,
    qs: &QuerySet,
    gt: &GroundTruth,
    t_grid: &[usize],
) -> Result<Vec<Vec<f64>>> {
    if gt.num_queries() != qs.len() {
        return Err(QueryError::GroundTruthMismatch(format!(
            "{} queries but ground truth for {}",
            qs.len(),
            gt.num_queries()
        )));
    }
    if qs.dim() != index.dim() {
        return Err(QueryError::GroundTruthMismatch(format!(
            "queries have dimension {} but index has {}",
            qs.dim(),
            index.dim()
        )));
    }
    let t_max = *t_grid
        .iter()
        .max()
        .ok_or_else(|| QueryError::InvalidArgument("empty probe grid".into()))?;
    if t_grid.contains(&0) {
        return Err(QueryError::InvalidArgument("probe budgets must be positive".into()));
    }
    (0..qs.len())
        .into_par_iter()
        .map(|i| {
            let stream = generate_candidates(index, qs.get(i), t_max)?;
            let truth: Vec<ItemId> = gt.neighbors(i).iter().map(|n| n.id).collect();
            let mut rank = vec![usize::MAX; truth.len()];
            for (r, id) in stream.ids.iter().enumerate() {
                if let Some(p) = truth.iter().position(|t| t == id) {
                    rank[p] = r;
                }
            }
            Ok(t_grid
                .iter()
                .map(|&t| rank.iter().filter(|&&r| r < t).count() as f64 / truth.len().max(1) as f64)
                .collect())
        })
        .collect()
}

pub fn evaluate_recall_curve(
    index: &NormRangeIndex,
    qs: &QuerySet,
    gt: &GroundTruth,
    t_grid: &[usize],
) -> Result<RecallCurve> {
    let rows = per_query_recall(index, qs, gt, t_grid)?;
    let mut recall = vec![0.0; t_grid.len()];
    for row in &rows {
        for (acc, r) in recall.iter_mut().zip(row) {
            *acc += r;
        }
    }
    let nq = rows.len().max(1) as f64;
    recall.iter_mut().for_each(|r| *r /= nq);
    Ok(RecallCurve {
        k: gt.k(),
        t_grid: t_grid.to_vec(),
        recall,
    })
}

/// One line of a recall CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct RecallRow {
    pub algorithm: MetaAlgorithm,
    pub variant: String,
    pub code_length: usize,
    pub partitions: usize,
    pub k: usize,
    pub t: usize,
    pub recall: f64,
}

pub const RECALL_HEADER: &str = "algorithm,variant,code_length,partitions,k,T,recall";

pub fn write_recall_csv<W: Write>(rows: &[RecallRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{RECALL_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.algorithm,
            r.variant,
            r.code_length,
            r.partitions,
            r.k,
            r.t,
            crate::fmt_float(r.recall)
        )?;
    }
    Ok(())
}

/// Tables needed so that an item colliding with probability `p1` per hash
/// function is found in some table with probability at least `1 - delta`
/// when each table concatenates `k` functions.
pub fn tables_for_delta(p1: f64, k: usize, delta: f64) -> usize {
    let p = p1.clamp(0.0, 1.0).powi(k as i32);
    if p >= 1.0 {
        return 1;
    }
    if p <= 0.0 {
        return usize::MAX;
    }
    (delta.ln() / (1.0 - p).ln()).ceil().max(1.0) as usize
}

/// Classic multi-table lookup: `tables` independent single-part indexes with
/// `config.code_length` functions each; a table returns the items sharing the
/// query's full code. Succeeds if any returned item has inner product at
/// least `c * s`.
pub fn multi_table_cnn(
    config: &IndexConfig,
    tables: usize,
    ds: &Dataset,
    q: &[f64],
    s: f64,
    c: f64,
) -> Result<bool> {
    let threshold = c * s;
    for t in 0..tables {
        let cfg = IndexConfig {
            partitions: 1,
            seed: derive_seed(config.seed, t as u64),
            ..*config
        };
        let index = NormRangeIndex::build(ds, cfg)?;
        let code = &index.hash_query(q)?[0];
        if let Some(items) = index.parts()[0].lookup(&code.0) {
            for &id in items {
                let pos = ds.position_of(id).expect("index built from this dataset");
                if inner_product(ds.row(pos), q) >= threshold {
                    return Ok(true);
                }
            }
        }
    }
    Ok(false)
}
