//! Dense vector collections, query sets and exact ground truth.
//!
//! Items are stored row-major in double precision regardless of the on-disk
//! encoding. Two encodings are supported:
//!
//! - `fvecs`: per record a little-endian `i32` dimension followed by that many
//!   little-endian `f32` values. Every record must share the same dimension.
//! - CSV: one vector per line, comma-separated decimal values.

use std::cmp::Ordering;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

/// Stable identifier of a dataset item.
pub type ItemId = u32;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("malformed fvecs record at byte offset {offset}: {reason}")]
    Fvecs { offset: u64, reason: String },
    #[error("csv line {line}: {reason}")]
    Csv { line: usize, reason: String },
    #[error("dataset is empty")]
    Empty,
    #[error("dimension must be at least 1")]
    ZeroDimension,
    #[error("item {index} contains a non-finite value")]
    NonFinite { index: usize },
    #[error("buffer length {len} is not a multiple of dimension {dim}")]
    Ragged { len: usize, dim: usize },
    #[error("query {index} has zero norm")]
    ZeroQuery { index: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("k = {k} must be in 1..={n}")]
    InvalidK { k: usize, n: usize },
    #[error("bins must be at least 1")]
    ZeroBins,
    #[error("{0} ids supplied for {1} items")]
    IdCount(usize, usize),
    #[error("ground truth: {0}")]
    GroundTruth(String),
}

pub type Result<T> = std::result::Result<T, DataError>;

/// Dot product in double precision.
#[inline]
pub fn inner_product(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // Four accumulators let the compiler vectorise the loop.
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = c * 4;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in chunks * 4..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
pub fn norm(v: &[f64]) -> f64 {
    inner_product(v, v).sqrt()
}

/// An immutable collection of `n` items of dimension `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    items: Vec<f64>,
    norms: Vec<f64>,
    ids: Vec<ItemId>,
}

impl Dataset {
    /// Builds a dataset from a row-major buffer; ids are `0..n`.
    pub fn new(dim: usize, items: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(DataError::ZeroDimension);
        }
        if items.len() % dim != 0 {
            return Err(DataError::Ragged {
                len: items.len(),
                dim,
            });
        }
        let n = items.len() / dim;
        Self::with_ids(dim, items, (0..n as ItemId).collect())
    }

    pub fn with_ids(dim: usize, items: Vec<f64>, ids: Vec<ItemId>) -> Result<Self> {
        if dim == 0 {
            return Err(DataError::ZeroDimension);
        }
        if items.len() % dim != 0 {
            return Err(DataError::Ragged {
                len: items.len(),
                dim,
            });
        }
        let n = items.len() / dim;
        if n == 0 {
            return Err(DataError::Empty);
        }
        if ids.len() != n {
            return Err(DataError::IdCount(ids.len(), n));
        }
        let mut norms = Vec::with_capacity(n);
        for (i, row) in items.chunks_exact(dim).enumerate() {
            if row.iter().any(|x| !x.is_finite()) {
                return Err(DataError::NonFinite { index: i });
            }
            norms.push(norm(row));
        }
        Ok(Self {
            dim,
            items,
            norms,
            ids,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let first = rows.first().ok_or(DataError::Empty)?;
        let dim = first.as_ref().len();
        let mut items = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(DataError::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            items.extend_from_slice(row);
        }
        Self::new(dim, items)
    }

    pub fn len(&self) -> usize {
        self.norms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.norms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Vector stored at position `index`.
    pub fn row(&self, index: usize) -> &[f64] {
        &self.items[index * self.dim..(index + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.items.chunks_exact(self.dim)
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn ids(&self) -> &[ItemId] {
        &self.ids
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.items
    }

    pub fn max_norm(&self) -> f64 {
        self.norms.iter().copied().fold(0.0, f64::max)
    }

    /// Position of the item carrying `id`. Ids are usually `0..n`, in which
    /// case this is the identity.
    pub fn position_of(&self, id: ItemId) -> Option<usize> {
        let idx = id as usize;
        if self.ids.get(idx) == Some(&id) {
            return Some(idx);
        }
        self.ids.iter().position(|&x| x == id)
    }
}

/// Unit-norm query vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct QuerySet {
    dim: usize,
    queries: Vec<f64>,
}

impl QuerySet {
    /// Normalises every row to unit length. Zero rows are rejected.
    pub fn new(dim: usize, mut queries: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(DataError::ZeroDimension);
        }
        if queries.len() % dim != 0 {
            return Err(DataError::Ragged {
                len: queries.len(),
                dim,
            });
        }
        if queries.is_empty() {
            return Err(DataError::Empty);
        }
        for (i, row) in queries.chunks_exact_mut(dim).enumerate() {
            if row.iter().any(|x| !x.is_finite()) {
                return Err(DataError::NonFinite { index: i });
            }
            let len = norm(row);
            if len == 0.0 {
                return Err(DataError::ZeroQuery { index: i });
            }
            row.iter_mut().for_each(|x| *x /= len);
        }
        Ok(Self { dim, queries })
    }

    pub fn from_dataset(ds: &Dataset) -> Result<Self> {
        Self::new(ds.dim(), ds.as_flat().to_vec())
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::from_dataset(&Dataset::from_rows(rows)?)
    }

    pub fn len(&self) -> usize {
        self.queries.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, index: usize) -> &[f64] {
        &self.queries[index * self.dim..(index + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.queries.chunks_exact(self.dim)
    }
}

/// One scored item.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub id: ItemId,
    pub inner_product: f64,
}

/// Descending inner product, then ascending id.
pub fn rank_order(a: &Neighbor, b: &Neighbor) -> Ordering {
    b.inner_product
        .total_cmp(&a.inner_product)
        .then(a.id.cmp(&b.id))
}

/// Keeps the best `k` of `scored` under [`rank_order`], sorted.
pub fn select_top_k(mut scored: Vec<Neighbor>, k: usize) -> Vec<Neighbor> {
    if k == 0 {
        return Vec::new();
    }
    if scored.len() > k {
        scored.select_nth_unstable_by(k - 1, rank_order);
        scored.truncate(k);
    }
    scored.sort_by(rank_order);
    scored
}

/// Exact top-k per query.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    k: usize,
    lists: Vec<Vec<Neighbor>>,
}

impl GroundTruth {
    pub fn new(k: usize, lists: Vec<Vec<Neighbor>>) -> Result<Self> {
        if k == 0 {
            return Err(DataError::InvalidK { k, n: 0 });
        }
        for (q, list) in lists.iter().enumerate() {
            if list.len() != k {
                return Err(DataError::GroundTruth(format!(
                    "query {q} has {} entries, expected {k}",
                    list.len()
                )));
            }
            for w in list.windows(2) {
                if w[1].inner_product > w[0].inner_product {
                    return Err(DataError::GroundTruth(format!(
                        "query {q} is not sorted by inner product"
                    )));
                }
            }
            let mut ids: Vec<_> = list.iter().map(|n| n.id).collect();
            ids.sort_unstable();
            ids.dedup();
            if ids.len() != k {
                return Err(DataError::GroundTruth(format!(
                    "query {q} lists duplicate ids"
                )));
            }
        }
        Ok(Self { k, lists })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_queries(&self) -> usize {
        self.lists.len()
    }

    pub fn neighbors(&self, query: usize) -> &[Neighbor] {
        &self.lists[query]
    }

    /// Writes `query_id,rank,item_id,inner_product` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "query_id,rank,item_id,inner_product")?;
        for (q, list) in self.lists.iter().enumerate() {
            for (rank, nb) in list.iter().enumerate() {
                writeln!(
                    out,
                    "{q},{rank},{},{}",
                    nb.id,
                    crate::fmt_float(nb.inner_product)
                )?;
            }
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lists: Vec<Vec<Neighbor>> = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            if i == 0 || line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = |reason: &str| DataError::Csv {
                line: lineno,
                reason: reason.to_string(),
            };
            if fields.len() != 4 {
                return Err(bad("expected query_id,rank,item_id,inner_product"));
            }
            let q: usize = fields[0].parse().map_err(|_| bad("bad query_id"))?;
            let rank: usize = fields[1].parse().map_err(|_| bad("bad rank"))?;
            let id: ItemId = fields[2].parse().map_err(|_| bad("bad item_id"))?;
            let ip: f64 = fields[3].parse().map_err(|_| bad("bad inner_product"))?;
            if q != lists.len() && q + 1 != lists.len() {
                return Err(bad("query ids must be contiguous"));
            }
            if q == lists.len() {
                lists.push(Vec::new());
            }
            if rank != lists[q].len() {
                return Err(bad("ranks must be contiguous"));
            }
            lists[q].push(Neighbor {
                id,
                inner_product: ip,
            });
        }
        let k = lists.first().map_or(0, Vec::len);
        Self::new(k, lists)
    }
}

/// Exact top-k inner-product search by linear scan. Ties go to the smaller id.
pub fn brute_force_topk(ds: &Dataset, qs: &QuerySet, k: usize) -> Result<GroundTruth> {
    if k == 0 || k > ds.len() {
        return Err(DataError::InvalidK { k, n: ds.len() });
    }
    if qs.dim() != ds.dim() {
        return Err(DataError::DimensionMismatch {
            expected: ds.dim(),
            got: qs.dim(),
        });
    }
    let lists = qs.iter().map(|q| exact_topk(ds, q, k)).collect();
    GroundTruth::new(k, lists)
}

pub(crate) fn exact_topk(ds: &Dataset, q: &[f64], k: usize) -> Vec<Neighbor> {
    let scored = ds
        .rows()
        .zip(ds.ids())
        .map(|(row, &id)| Neighbor {
            id,
            inner_product: inner_product(row, q),
        })
        .collect();
    select_top_k(scored, k)
}

/// One histogram bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramBin {
    pub center: f64,
    pub count: usize,
}

/// Histogram of item norms over `[0, max norm]` with `bins` equal-width bins.
/// With `scale_to_unit` the norms are divided by the maximum first, so the
/// range becomes `[0, 1]`.
pub fn norm_histogram(ds: &Dataset, bins: usize, scale_to_unit: bool) -> Result<Vec<HistogramBin>> {
    if bins == 0 {
        return Err(DataError::ZeroBins);
    }
    let max = ds.max_norm();
    let (upper, scale) = match (scale_to_unit, max > 0.0) {
        (true, true) => (1.0, 1.0 / max),
        (false, _) => (max, 1.0),
        (true, false) => (0.0, 1.0),
    };
    let width = upper / bins as f64;
    let mut counts = vec![0usize; bins];
    for &n in ds.norms() {
        let v = n * scale;
        let bin = if width > 0.0 {
            ((v / width) as usize).min(bins - 1)
        } else {
            0
        };
        counts[bin] += 1;
    }
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistogramBin {
            center: (i as f64 + 0.5) * width,
            count,
        })
        .collect())
}

pub fn load_fvecs<P: AsRef<Path>>(path: P) -> Result<Dataset> {
    read_fvecs(BufReader::new(File::open(path)?))
}

pub fn read_fvecs<R: Read>(mut input: R) -> Result<Dataset> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    let mut offset = 0usize;
    let mut dim: Option<usize> = None;
    let mut items = Vec::new();
    let bad = |offset: usize, reason: String| DataError::Fvecs {
        offset: offset as u64,
        reason,
    };
    while offset < bytes.len() {
        let header = bytes
            .get(offset..offset + 4)
            .ok_or_else(|| bad(offset, "truncated dimension header".into()))?;
        let d = i32::from_le_bytes(header.try_into().unwrap());
        if d <= 0 {
            return Err(bad(offset, format!("non-positive dimension {d}")));
        }
        let d = d as usize;
        match dim {
            None => dim = Some(d),
            Some(expected) if expected != d => {
                return Err(bad(
                    offset,
                    format!("dimension {d} differs from first record's {expected}"),
                ))
            }
            _ => {}
        }
        let body_start = offset + 4;
        let body = bytes
            .get(body_start..body_start + 4 * d)
            .ok_or_else(|| bad(offset, format!("record shorter than {d} floats")))?;
        for (i, chunk) in body.chunks_exact(4).enumerate() {
            let v = f32::from_le_bytes(chunk.try_into().unwrap());
            if !v.is_finite() {
                return Err(bad(body_start + 4 * i, "non-finite value".into()));
            }
            items.push(v as f64);
        }
        offset = body_start + 4 * d;
    }
    let dim = dim.ok_or(DataError::Empty)?;
    Dataset::new(dim, items)
}

/// Writes items as `fvecs`, narrowing to `f32`.
pub fn write_fvecs<W: Write>(ds: &Dataset, out: W) -> io::Result<()> {
    let mut out = BufWriter::new(out);
    let d = ds.dim() as i32;
    for row in ds.rows() {
        out.write_all(&d.to_le_bytes())?;
        for &v in row {
            out.write_all(&(v as f32).to_le_bytes())?;
        }
    }
    out.flush()
}

pub fn load_csv<P: AsRef<Path>>(path: P) -> Result<Dataset> {
    read_csv(BufReader::new(File::open(path)?))
}

pub fn read_csv<R: BufRead>(input: R) -> Result<Dataset> {
    let mut dim: Option<usize> = None;
    let mut items = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut count = 0;
        for tok in line.split(',') {
            let v: f64 = tok.trim().parse().map_err(|_| DataError::Csv {
                line: lineno,
                reason: format!("cannot parse {:?} as a number", tok.trim()),
            })?;
            if !v.is_finite() {
                return Err(DataError::Csv {
                    line: lineno,
                    reason: "non-finite value".into(),
                });
            }
            items.push(v);
            count += 1;
        }
        match dim {
            None => dim = Some(count),
            Some(d) if d != count => {
                return Err(DataError::Csv {
                    line: lineno,
                    reason: format!("{count} columns, expected {d}"),
                })
            }
            _ => {}
        }
    }
    let dim = dim.ok_or(DataError::Empty)?;
    Dataset::new(dim, items)
}

pub fn write_csv<W: Write>(ds: &Dataset, out: W) -> io::Result<()> {
    let mut out = BufWriter::new(out);
    for row in ds.rows() {
        let line: Vec<String> = row.iter().map(|v| crate::fmt_float(*v)).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    out.flush()
}

/// Loads `path` choosing the decoder from the extension (`.fvecs` or CSV).
pub fn load_auto<P: AsRef<Path>>(path: P) -> Result<Dataset> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("fvecs") => load_fvecs(path),
        _ => load_csv(path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fvecs_bytes(rows: &[&[f32]]) -> Vec<u8> {
        let mut out = Vec::new();
        for r in rows {
            out.extend_from_slice(&(r.len() as i32).to_le_bytes());
            for v in *r {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    fn random_dataset(n: usize, d: usize, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let items = (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect();
        Dataset::new(d, items).unwrap()
    }

    #[test]
    fn fvecs_unit_vectors() {
        let ds = read_fvecs(&fvecs_bytes(&[&[1.0, 0.0], &[0.0, 1.0]])[..]).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.norms(), &[1.0, 1.0]);
        assert_eq!(ds.ids(), &[0, 1]);
    }

    #[test]
    fn fvecs_three_four_five() {
        let ds = read_fvecs(&fvecs_bytes(&[&[3.0, 4.0]])[..]).unwrap();
        assert_eq!(ds.norms(), &[5.0]);
    }

    #[test]
    fn fvecs_round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let values: Vec<f32> = (0..1000 * 8).map(|_| rng.random_range(-10.0..10.0)).collect();
        let ds = Dataset::new(8, values.iter().map(|&v| v as f64).collect()).unwrap();
        let mut buf = Vec::new();
        write_fvecs(&ds, &mut buf).unwrap();
        let back = read_fvecs(&buf[..]).unwrap();
        assert_eq!(back.len(), 1000);
        for (a, b) in back.as_flat().iter().zip(&values) {
            assert_eq!((*a as f32).to_bits(), b.to_bits());
        }
    }

    #[test]
    fn fvecs_errors_name_offsets() {
        let mut bytes = fvecs_bytes(&[&[1.0, 2.0], &[1.0, 2.0, 3.0]]);
        match read_fvecs(&bytes[..]) {
            Err(DataError::Fvecs { offset, .. }) => assert_eq!(offset, 12),
            other => panic!("unexpected {other:?}"),
        }
        bytes.truncate(12 + 4 + 4);
        assert!(matches!(
            read_fvecs(&bytes[..]),
            Err(DataError::Fvecs { offset: 12, .. })
        ));
        let nan = fvecs_bytes(&[&[1.0, f32::NAN]]);
        assert!(matches!(
            read_fvecs(&nan[..]),
            Err(DataError::Fvecs { offset: 8, .. })
        ));
    }

    #[test]
    fn csv_basic_and_errors() {
        let ds = read_csv("1,0\n0,1".as_bytes()).unwrap();
        assert_eq!((ds.len(), ds.dim()), (2, 2));
        assert_eq!(read_csv("3,4".as_bytes()).unwrap().norms(), &[5.0]);
        assert!(matches!(
            read_csv("1,2\n3".as_bytes()),
            Err(DataError::Csv { line: 2, .. })
        ));
        assert!(matches!(
            read_csv("1,2\n3,x".as_bytes()),
            Err(DataError::Csv { line: 2, .. })
        ));
    }

    #[test]
    fn csv_and_fvecs_agree() {
        let ds = random_dataset(50, 5, 3);
        let mut csv = Vec::new();
        write_csv(&ds, &mut csv).unwrap();
        let mut fv = Vec::new();
        write_fvecs(&ds, &mut fv).unwrap();
        let a = read_csv(&csv[..]).unwrap();
        let b = read_fvecs(&fv[..]).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.as_flat().iter().zip(b.as_flat()) {
            assert!((x - y).abs() <= 1e-6);
        }
    }

    #[test]
    fn queries_are_normalised_and_zero_rejected() {
        let qs = QuerySet::from_rows(&[[3.0, 4.0]]).unwrap();
        assert!((norm(qs.get(0)) - 1.0).abs() < 1e-12);
        assert!(matches!(
            QuerySet::from_rows(&[[1.0, 0.0], [0.0, 0.0]]),
            Err(DataError::ZeroQuery { index: 1 })
        ));
    }

    #[test]
    fn zero_norm_items_are_accepted() {
        let ds = Dataset::from_rows(&[[0.0, 0.0], [1.0, 0.0]]).unwrap();
        assert_eq!(ds.norms()[0], 0.0);
    }

    #[test]
    fn histogram_examples() {
        let ds = Dataset::from_rows(&[[1.0], [1.0], [1.0]]).unwrap();
        let h = norm_histogram(&ds, 1, false).unwrap();
        assert_eq!(h.len(), 1);
        assert_eq!(h[0].count, 3);

        let ds = Dataset::from_rows(&[[0.1], [0.9]]).unwrap();
        let h = norm_histogram(&ds, 2, false).unwrap();
        assert_eq!(h.iter().map(|b| b.count).collect::<Vec<_>>(), vec![1, 1]);
        assert!(norm_histogram(&ds, 0, true).is_err());
    }

    #[test]
    fn histogram_matches_recount() {
        let ds = random_dataset(500, 3, 11);
        let bins = 17;
        let h = norm_histogram(&ds, bins, true).unwrap();
        assert_eq!(h.iter().map(|b| b.count).sum::<usize>(), ds.len());
        let max = ds.max_norm();
        let mut recount = vec![0usize; bins];
        for &n in ds.norms() {
            // Independent recount: find the bin whose half-open interval holds n.
            let x = n / max;
            let b = (0..bins)
                .find(|&b| x < (b + 1) as f64 / bins as f64)
                .unwrap_or(bins - 1);
            recount[b] += 1;
        }
        assert_eq!(h.iter().map(|b| b.count).collect::<Vec<_>>(), recount);
    }

    #[test]
    fn brute_force_examples() {
        let ds = Dataset::from_rows(&[[1.0, 0.0], [0.0, 1.0]]).unwrap();
        let qs = QuerySet::from_rows(&[[1.0, 0.0]]).unwrap();
        let gt = brute_force_topk(&ds, &qs, 1).unwrap();
        assert_eq!(gt.neighbors(0)[0].id, 0);

        let ds = Dataset::from_rows(&[[2.0, 0.0], [1.0, 0.0]]).unwrap();
        let gt = brute_force_topk(&ds, &qs, 2).unwrap();
        let ids: Vec<_> = gt.neighbors(0).iter().map(|n| n.id).collect();
        assert_eq!(ids, vec![0, 1]);
        assert!(brute_force_topk(&ds, &qs, 3).is_err());
    }

    #[test]
    fn brute_force_matches_full_sort() {
        let ds = random_dataset(200, 16, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let raw: Vec<f64> = (0..10 * 16).map(|_| rng.random_range(-1.0..1.0)).collect();
        let qs = QuerySet::new(16, raw).unwrap();
        let gt = brute_force_topk(&ds, &qs, 10).unwrap();
        for (qi, q) in qs.iter().enumerate() {
            let mut all: Vec<(f64, u32)> = (0..ds.len())
                .map(|i| {
                    let s: f64 = ds.row(i).iter().zip(q).map(|(a, b)| a * b).sum();
                    (s, i as u32)
                })
                .collect();
            all.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
            let want: Vec<u32> = all[..10].iter().map(|x| x.1).collect();
            let got: Vec<u32> = gt.neighbors(qi).iter().map(|n| n.id).collect();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn ties_go_to_smaller_id() {
        let ds = Dataset::from_rows(&[[1.0, 0.0], [1.0, 0.0], [1.0, 0.0]]).unwrap();
        let qs = QuerySet::from_rows(&[[1.0, 0.0]]).unwrap();
        let gt = brute_force_topk(&ds, &qs, 2).unwrap();
        let ids: Vec<_> = gt.neighbors(0).iter().map(|n| n.id).collect();
        assert_eq!(ids, vec![0, 1]);
    }

    #[test]
    fn ground_truth_csv_round_trip() {
        let ds = random_dataset(40, 4, 9);
        let qs = QuerySet::from_dataset(&random_dataset(3, 4, 10)).unwrap();
        let gt = brute_force_topk(&ds, &qs, 5).unwrap();
        let mut buf = Vec::new();
        gt.write_csv(&mut buf).unwrap();
        let back = GroundTruth::read_csv(&buf[..]).unwrap();
        assert_eq!(back.k(), 5);
        for q in 0..3 {
            let a: Vec<_> = gt.neighbors(q).iter().map(|n| n.id).collect();
            let b: Vec<_> = back.neighbors(q).iter().map(|n| n.id).collect();
            assert_eq!(a, b);
        }
    }

    proptest::proptest! {
        #[test]
        fn kernel_matches_scalar_loop(v in proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..70)) {
            let a: Vec<f64> = v.iter().map(|p| p.0).collect();
            let b: Vec<f64> = v.iter().map(|p| p.1).collect();
            let mut naive = 0.0;
            for i in 0..a.len() {
                naive += a[i] * b[i];
            }
            let scale: f64 = a.iter().zip(&b).map(|(x, y)| (x * y).abs()).sum::<f64>().max(1e-300);
            proptest::prop_assert!((inner_product(&a, &b) - naive).abs() <= 1e-6 * scale);
        }

        #[test]
        fn brute_force_is_permutation_invariant(seed in 0u64..1000) {
            let ds = random_dataset(60, 4, seed);
            let qs = QuerySet::from_dataset(&random_dataset(2, 4, seed + 1)).unwrap();
            let mut order: Vec<usize> = (0..ds.len()).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
            use rand::seq::SliceRandom;
            order.shuffle(&mut rng);
            let mut items = Vec::new();
            let mut ids = Vec::new();
            for &i in &order {
                items.extend_from_slice(ds.row(i));
                ids.push(i as ItemId);
            }
            let shuffled = Dataset::with_ids(4, items, ids).unwrap();
            let a = brute_force_topk(&ds, &qs, 7).unwrap();
            let b = brute_force_topk(&shuffled, &qs, 7).unwrap();
            proptest::prop_assert_eq!(a, b);
        }
    }
}
