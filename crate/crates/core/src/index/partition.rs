use rand::seq::SliceRandom;

use super::{IndexError, Result};
use crate::hash::seeded_rng;
use crate::vecdata::{Dataset, ItemId};

/// Stream offset so the tie-breaking shuffle never shares a stream with a
/// hash family drawn from the same seed.
const SHUFFLE_STREAM: u64 = 0x6e6f_726d_7261_6e67;

/// One contiguous norm-rank range.
#[derive(Debug, Clone, PartialEq)]
pub struct NormRange {
    /// Item ids in ascending norm order.
    pub members: Vec<ItemId>,
    /// Largest norm among the members.
    pub max_norm: f64,
}

/// Splits the items into `w` parts of consecutive norm ranks, ascending, so
/// the last part holds the largest norms. Equal norms are ordered by a
/// seeded shuffle. Sizes differ by at most one; the first `n mod w` parts
/// get the extra item.
pub fn partition_by_norm(ds: &Dataset, w: usize, seed: u64) -> Result<Vec<NormRange>> {
    let n = ds.len();
    if w == 0 || w > n {
        return Err(IndexError::InvalidConfig(format!(
            "partition count {w} must be in 1..={n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded_rng(seed ^ SHUFFLE_STREAM));
    let norms = ds.norms();
    order.sort_by(|&a, &b| norms[a].total_cmp(&norms[b]));

    let (base, extra) = (n / w, n % w);
    let mut parts = Vec::with_capacity(w);
    let mut start = 0;
    for j in 0..w {
        let size = base + usize::from(j < extra);
        let slice = &order[start..start + size];
        parts.push(NormRange {
            members: slice.iter().map(|&i| ds.ids()[i]).collect(),
            max_norm: norms[*slice.last().expect("parts are non-empty")],
        });
        start += size;
    }
    Ok(parts)
}
