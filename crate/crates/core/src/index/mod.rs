//! Norm-range partitioned hash index.
//!
//! Items are split into `w` parts by norm rank; each part is transformed with
//! its own maximum norm `M_j` and hashed into a single table. By default the
//! hash functions are shared by all parts, so a query is hashed only `L`
//! times.

mod format;
mod partition;
mod score;

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

pub use format::{FORMAT_VERSION, MAGIC};
pub use partition::{partition_by_norm, NormRange};
pub use score::{
    bucket_score, build_probe_schedule, cross_bucket_score, cross_distance_sq, probe_order,
    BucketScore, ScoreParams,
};

use crate::algorithm::MetaAlgorithm;
use crate::hash::{CrossPolytopeFamily, HashCode, HashError, HashFamily, L2HashFamily, SrpFamily};
use crate::transform::{self, AlshParams, TransformError};
use crate::vecdata::{Dataset, ItemId};

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("invalid index configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Hash(#[from] HashError),
    #[error("not an index file (bad magic)")]
    BadMagic,
    #[error("unsupported index format version {0} (expected {FORMAT_VERSION})")]
    UnsupportedVersion(u16),
    #[error("index file is truncated")]
    Truncated,
    #[error("index checksum mismatch: stored {stored:08x}, computed {computed:08x}")]
    Checksum { stored: u32, computed: u32 },
    #[error("corrupt index: {0}")]
    Corrupt(String),
    #[error("index was built for {expected_n} items of dimension {expected_dim}, dataset has {n} of dimension {dim}")]
    DatasetMismatch {
        expected_n: usize,
        expected_dim: usize,
        n: usize,
        dim: usize,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, IndexError>;

/// Everything needed to rebuild an index from a dataset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexConfig {
    pub algorithm: MetaAlgorithm,
    /// Number of norm ranges `w`; 1 gives the plain meta algorithm.
    pub partitions: usize,
    /// Hash functions per code, `L`.
    pub code_length: usize,
    pub seed: u64,
    pub u: f64,
    pub m: u32,
    pub r: f64,
    /// Projection dimension `D'` of the cross-polytope family.
    pub cross_dim: usize,
    /// One hash family for all parts, or an independent family per part.
    pub shared_hashes: bool,
}

pub const DEFAULT_CROSS_DIM: usize = 16;

impl IndexConfig {
    /// Defaults: `U = 0.83, m = 3, r = 2.5` for L2-ALSH, `U = 0.75, m = 2` for
    /// Sign-ALSH, shared hashes.
    pub fn new(algorithm: MetaAlgorithm, partitions: usize, code_length: usize, seed: u64) -> Self {
        let p = match algorithm {
            MetaAlgorithm::SignAlsh => AlshParams::sign_default(1.0),
            _ => AlshParams::l2_default(1.0),
        };
        Self {
            algorithm,
            partitions,
            code_length,
            seed,
            u: p.u,
            m: p.m,
            r: p.r,
            cross_dim: DEFAULT_CROSS_DIM,
            shared_hashes: true,
        }
    }

    pub fn alsh_params(&self, norm_factor: f64) -> AlshParams {
        AlshParams {
            u: self.u,
            m: self.m,
            r: self.r,
            norm_factor,
        }
    }

    pub fn score_params(&self) -> ScoreParams {
        ScoreParams {
            u: self.u,
            m: self.m,
            r: self.r,
        }
    }

    /// Dimension of transformed vectors for `d`-dimensional input.
    pub fn hashed_dim(&self, d: usize) -> usize {
        self.algorithm.transformed_dim(d, self.m)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let mut problems = Vec::new();
        if self.partitions == 0 || self.partitions > n {
            problems.push(format!("partitions must be in 1..={n}, got {}", self.partitions));
        }
        if self.code_length == 0 {
            problems.push("code length must be at least 1".to_string());
        }
        if self.algorithm == MetaAlgorithm::CrossLsh && self.cross_dim == 0 {
            problems.push("cross-polytope dimension must be at least 1".to_string());
        }
        if matches!(self.algorithm, MetaAlgorithm::L2Alsh | MetaAlgorithm::SignAlsh) {
            if let Err(e) = self.alsh_params(1.0).validate() {
                problems.push(e.to_string());
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(IndexError::InvalidConfig(problems.join("; ")))
        }
    }

    /// Seed of the family with the given index. The shared family uses 0.
    pub fn family_seed(&self, family: usize) -> u64 {
        derive_seed(self.seed, family as u64)
    }

    fn make_family(&self, family: usize, d: usize) -> Result<HashFamily> {
        let seed = self.family_seed(family);
        let dim = self.hashed_dim(d);
        let len = self.code_length;
        Ok(match self.algorithm {
            MetaAlgorithm::L2Alsh => HashFamily::L2(L2HashFamily::from_seed(seed, len, dim, self.r)?),
            MetaAlgorithm::SignAlsh | MetaAlgorithm::SimpleLsh => {
                HashFamily::Srp(SrpFamily::from_seed(seed, len, dim)?)
            }
            MetaAlgorithm::CrossLsh => HashFamily::CrossPolytope(CrossPolytopeFamily::from_seed(
                seed,
                len,
                dim,
                self.cross_dim,
            )?),
        })
    }

    /// Transforms an item of a part whose maximum norm is `max_norm`.
    pub fn transform_item(&self, x: &[f64], max_norm: f64) -> Result<Vec<f64>> {
        let factor = if max_norm > 0.0 { max_norm } else { 1.0 };
        Ok(match self.algorithm {
            MetaAlgorithm::L2Alsh => transform::l2alsh_item(x, &self.alsh_params(factor))?,
            MetaAlgorithm::SignAlsh => transform::signalsh_item(x, &self.alsh_params(factor))?,
            MetaAlgorithm::SimpleLsh | MetaAlgorithm::CrossLsh => {
                transform::simple_transform(x, factor)?
            }
        })
    }

    /// Transforms a unit query.
    pub fn transform_query(&self, q: &[f64]) -> Result<Vec<f64>> {
        Ok(match self.algorithm {
            MetaAlgorithm::L2Alsh => transform::l2alsh_query(q, &self.alsh_params(1.0))?,
            MetaAlgorithm::SignAlsh => transform::signalsh_query(q, &self.alsh_params(1.0))?,
            MetaAlgorithm::SimpleLsh | MetaAlgorithm::CrossLsh => transform::simple_query(q)?,
        })
    }
}

/// SplitMix64 over `seed + stream * golden`, so nearby seeds and streams give
/// unrelated generators.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed.wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// The hash table of one norm range. Buckets are stored in ascending code
/// order as flat arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct SubIndex {
    max_norm: f64,
    members: Vec<ItemId>,
    code_length: usize,
    codes: Vec<i32>,
    starts: Vec<u32>,
    items: Vec<ItemId>,
}

impl SubIndex {
    fn from_buckets(
        max_norm: f64,
        members: Vec<ItemId>,
        code_length: usize,
        buckets: BTreeMap<HashCode, Vec<ItemId>>,
    ) -> Self {
        let mut codes = Vec::with_capacity(buckets.len() * code_length);
        let mut starts = Vec::with_capacity(buckets.len() + 1);
        let mut items = Vec::with_capacity(members.len());
        starts.push(0);
        for (code, ids) in buckets {
            codes.extend_from_slice(&code.0);
            items.extend_from_slice(&ids);
            starts.push(items.len() as u32);
        }
        Self {
            max_norm,
            members,
            code_length,
            codes,
            starts,
            items,
        }
    }

    /// `M_j`.
    pub fn max_norm(&self) -> f64 {
        self.max_norm
    }

    /// Member ids in ascending norm order.
    pub fn members(&self) -> &[ItemId] {
        &self.members
    }

    pub fn bucket_count(&self) -> usize {
        self.starts.len() - 1
    }

    pub fn bucket_code(&self, bucket: usize) -> &[i32] {
        &self.codes[bucket * self.code_length..(bucket + 1) * self.code_length]
    }

    pub fn bucket_items(&self, bucket: usize) -> &[ItemId] {
        &self.items[self.starts[bucket] as usize..self.starts[bucket + 1] as usize]
    }

    /// Items stored under exactly `code`, if that bucket is occupied.
    pub fn lookup(&self, code: &[i32]) -> Option<&[ItemId]> {
        let mut lo = 0;
        let mut hi = self.bucket_count();
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.bucket_code(mid).cmp(code) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return Some(self.bucket_items(mid)),
            }
        }
        None
    }
}

/// An immutable norm-range index.
#[derive(Debug, Clone, PartialEq)]
pub struct NormRangeIndex {
    config: IndexConfig,
    num_items: usize,
    dim: usize,
    parts: Vec<SubIndex>,
    families: Vec<HashFamily>,
    schedule: Vec<BucketScore>,
}

impl NormRangeIndex {
    pub fn build(ds: &Dataset, config: IndexConfig) -> Result<Self> {
        config.validate(ds.len())?;
        let ranges = partition_by_norm(ds, config.partitions, config.seed)?;
        let family_count = if config.shared_hashes { 1 } else { config.partitions };
        let families = (0..family_count)
            .map(|f| config.make_family(f, ds.dim()))
            .collect::<Result<Vec<_>>>()?;

        let parts = ranges
            .into_par_iter()
            .enumerate()
            .map(|(j, range)| {
                let family = &families[if config.shared_hashes { 0 } else { j }];
                let mut buckets: BTreeMap<HashCode, Vec<ItemId>> = BTreeMap::new();
                for &id in &range.members {
                    let pos = ds.position_of(id).expect("partition ids come from the dataset");
                    let v = config.transform_item(ds.row(pos), range.max_norm)?;
                    buckets.entry(family.hash(&v)?).or_default().push(id);
                }
                Ok(SubIndex::from_buckets(
                    range.max_norm,
                    range.members,
                    config.code_length,
                    buckets,
                ))
            })
            .collect::<Result<Vec<_>>>()?;

        let schedule = Self::schedule_for(&config, &parts);
        Ok(Self {
            config,
            num_items: ds.len(),
            dim: ds.dim(),
            parts,
            families,
            schedule,
        })
    }

    fn schedule_for(config: &IndexConfig, parts: &[SubIndex]) -> Vec<BucketScore> {
        let norms: Vec<f64> = parts.iter().map(|p| p.max_norm).collect();
        build_probe_schedule(config.algorithm, &norms, config.code_length, &config.score_params())
    }

    pub fn config(&self) -> &IndexConfig {
        &self.config
    }

    pub fn algorithm(&self) -> MetaAlgorithm {
        self.config.algorithm
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn parts(&self) -> &[SubIndex] {
        &self.parts
    }

    pub fn max_norms(&self) -> Vec<f64> {
        self.parts.iter().map(|p| p.max_norm).collect()
    }

    /// Probe order over `(part, match count)` classes. Empty for Cross-LSH,
    /// whose order depends on the query.
    pub fn schedule(&self) -> &[BucketScore] {
        &self.schedule
    }

    pub fn families(&self) -> &[HashFamily] {
        &self.families
    }

    /// The family used by part `j`.
    pub fn family_for(&self, part: usize) -> &HashFamily {
        if self.families.len() == 1 {
            &self.families[0]
        } else {
            &self.families[part]
        }
    }

    pub fn bucket_count(&self) -> usize {
        self.parts.iter().map(SubIndex::bucket_count).sum()
    }

    /// Hash functions evaluated per query.
    pub fn query_hash_evaluations(&self) -> usize {
        self.families.len() * self.config.code_length
    }

    /// The query's code under each family.
    pub fn hash_query(&self, q: &[f64]) -> Result<Vec<HashCode>> {
        let t = self.config.transform_query(q)?;
        self.families
            .iter()
            .map(|f| f.hash(&t).map_err(IndexError::from))
            .collect()
    }

    pub fn check_dataset(&self, ds: &Dataset) -> Result<()> {
        if ds.len() != self.num_items || ds.dim() != self.dim {
            return Err(IndexError::DatasetMismatch {
                expected_n: self.num_items,
                expected_dim: self.dim,
                n: ds.len(),
                dim: ds.dim(),
            });
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        format::encode(self)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        format::decode(bytes)
    }

    pub fn save<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}
