//! Bucket scores: inner-product estimates that make buckets from different
//! partitions comparable.
//!
//! A bucket that agrees with the query in `l` of `L` positions has empirical
//! collision rate `l/L`; inverting the scheme's collision probability gives
//! an inner-product estimate `ŝ`, scaled by the partition's normalization
//! factor `M_j`.

use std::cmp::Ordering;
use std::f64::consts::PI;

use crate::algorithm::MetaAlgorithm;
use crate::hash::invert_collision_l2;

/// Transformation parameters that enter the score formulas.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreParams {
    pub u: f64,
    pub m: u32,
    pub r: f64,
}

/// The estimate for one `(partition, match count)` class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BucketScore {
    pub score: f64,
    pub part: usize,
    pub matches: usize,
    /// L2-ALSH only: `l/L` was 0 or 1 and had to be clamped before inversion.
    pub saturated: bool,
}

/// `ŝ` for a match-count scheme.
///
/// - Simple-LSH: `M_j cos(π(1 - l/L))`
/// - Sign-ALSH: `M_j √m / (2U) · cos(π(1 - l/L))`
/// - L2-ALSH: `M_j / (2U) · (1 + m/4 - g(l/L)²)` with `g = F_r⁻¹`
///
/// Cross-LSH buckets are scored from residuals, see [`cross_bucket_score`];
/// passing it here yields `None`.
pub fn bucket_score(
    algorithm: MetaAlgorithm,
    part: usize,
    max_norm: f64,
    matches: usize,
    code_length: usize,
    p: &ScoreParams,
) -> Option<BucketScore> {
    debug_assert!(matches <= code_length);
    let frac = matches as f64 / code_length as f64;
    let (score, saturated) = match algorithm {
        MetaAlgorithm::SimpleLsh => (max_norm * (PI * (1.0 - frac)).cos(), false),
        MetaAlgorithm::SignAlsh => (
            max_norm * (p.m as f64).sqrt() / (2.0 * p.u) * (PI * (1.0 - frac)).cos(),
            false,
        ),
        MetaAlgorithm::L2Alsh => {
            let inv = invert_collision_l2(p.r, frac).ok()?;
            let d = inv.distance;
            (
                max_norm / (2.0 * p.u) * (1.0 + p.m as f64 / 4.0 - d * d),
                inv.saturated,
            )
        }
        MetaAlgorithm::CrossLsh => return None,
    };
    Some(BucketScore {
        score,
        part,
        matches,
        saturated,
    })
}

/// Squared distance `d² ∈ [0, 2]` solving `4/(4d² - d⁴) - 1 = 1/Y` for a
/// residual `Y ≥ 0`.
///
/// With `u = d²` this is `u² - 4u + 4Y/(Y+1) = 0`; the root in `[0, 2]` is the
/// smaller one, taken as `c/q` to avoid cancellation when `Y` is small.
pub fn cross_distance_sq(residual: f64) -> f64 {
    if !(residual > 0.0) {
        return 0.0;
    }
    if residual.is_infinite() {
        return 2.0;
    }
    let c = 4.0 * residual / (residual + 1.0);
    let disc = (16.0 - 4.0 * c).max(0.0).sqrt();
    let q = (4.0 + disc) / 2.0;
    (c / q).min(2.0)
}

/// `ŝ = M_j (1 - d²/2)` for a bucket with total residual `Y`.
pub fn cross_bucket_score(max_norm: f64, residual: f64) -> f64 {
    max_norm * (1.0 - cross_distance_sq(residual) / 2.0)
}

/// Probe order: higher score first, then larger `M_j`, larger `l`, smaller
/// partition index.
pub fn probe_order(a: &BucketScore, b: &BucketScore, max_norms: &[f64]) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(max_norms[b.part].total_cmp(&max_norms[a.part]))
        .then(b.matches.cmp(&a.matches))
        .then(a.part.cmp(&b.part))
}

/// All `(partition, l)` classes with `l ∈ 0..=L`, sorted by [`probe_order`].
pub fn build_probe_schedule(
    algorithm: MetaAlgorithm,
    max_norms: &[f64],
    code_length: usize,
    p: &ScoreParams,
) -> Vec<BucketScore> {
    let mut all = Vec::with_capacity(max_norms.len() * (code_length + 1));
    for (part, &m) in max_norms.iter().enumerate() {
        for l in 0..=code_length {
            if let Some(s) = bucket_score(algorithm, part, m, l, code_length, p) {
                all.push(s);
            }
        }
    }
    all.sort_by(|a, b| probe_order(a, b, max_norms));
    all
}
