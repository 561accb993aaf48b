//! The three underlying LSH families and their collision probabilities.
//!
//! Every family is sampled from a ChaCha8 stream seeded with a `u64`, so a
//! family is fully described by its seed and shape parameters. Index files
//! store only those and regenerate the matrices on load.

mod cross_polytope;
mod l2;
mod normal;
mod srp;

pub use cross_polytope::{crosspolytope_residual, CrossPolytopeFamily};
pub use l2::{collision_prob_l2, invert_collision_l2, L2HashFamily, L2Inversion, SATURATION_EPS};
pub use normal::standard_normal_cdf;
pub use srp::{collision_prob_srp, SrpFamily};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HashError {
    #[error("dimension mismatch: family expects {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("input is not unit norm (norm = {0})")]
    NotUnit(f64),
    #[error("degenerate projection: A v = 0")]
    DegenerateProjection,
    #[error("function index {index} out of range for code length {len}")]
    FunctionIndex { index: usize, len: usize },
    #[error("symbol {0} is not a valid cross-polytope vertex")]
    InvalidSymbol(i32),
}

pub type Result<T> = std::result::Result<T, HashError>;

/// A hash signature: one symbol per hash function.
///
/// Symbols are integers for the Euclidean family, `+1`/`-1` for sign random
/// projection and `±(i + 1)` for cross-polytope vertex `±e_i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HashCode(pub Vec<i32>);

impl HashCode {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of positions where the two codes agree.
    pub fn matches(&self, other: &HashCode) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a == b).count()
    }
}

/// The deterministic generator used for every random draw in the crate.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub(crate) fn gaussian_vec<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    crate::vecdata::inner_product(a, b)
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        Err(HashError::DimensionMismatch { expected, got })
    } else {
        Ok(())
    }
}

/// Any of the three families behind one interface.
#[derive(Debug, Clone, PartialEq)]
pub enum HashFamily {
    L2(L2HashFamily),
    Srp(SrpFamily),
    CrossPolytope(CrossPolytopeFamily),
}

impl HashFamily {
    pub fn hash(&self, v: &[f64]) -> Result<HashCode> {
        match self {
            HashFamily::L2(f) => f.hash(v),
            HashFamily::Srp(f) => f.hash(v),
            HashFamily::CrossPolytope(f) => f.hash(v),
        }
    }

    pub fn code_length(&self) -> usize {
        match self {
            HashFamily::L2(f) => f.code_length(),
            HashFamily::Srp(f) => f.code_length(),
            HashFamily::CrossPolytope(f) => f.code_length(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            HashFamily::L2(f) => f.dim(),
            HashFamily::Srp(f) => f.dim(),
            HashFamily::CrossPolytope(f) => f.dim(),
        }
    }
}
