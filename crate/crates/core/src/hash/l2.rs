use rand::Rng;

use super::{check_dim, dot, gaussian_vec, seeded_rng, HashCode, HashError, Result};
use super::normal::standard_normal_cdf;

/// Probabilities are clamped to `[SATURATION_EPS, 1 - SATURATION_EPS]` before
/// inversion.
pub const SATURATION_EPS: f64 = 1e-9;

/// Euclidean LSH: `h(x) = floor((a·x + b) / r)` with Gaussian `a` and `b`
/// uniform on `[0, r]`.
#[derive(Debug, Clone, PartialEq)]
pub struct L2HashFamily {
    dim: usize,
    width: f64,
    projections: Vec<f64>,
    offsets: Vec<f64>,
}

impl L2HashFamily {
    pub fn from_seed(seed: u64, code_length: usize, dim: usize, width: f64) -> Result<Self> {
        if code_length == 0 || dim == 0 {
            return Err(HashError::InvalidArgument(
                "code length and dimension must be positive".into(),
            ));
        }
        if !(width > 0.0 && width.is_finite()) {
            return Err(HashError::InvalidArgument(format!(
                "bucket width must be positive, got {width}"
            )));
        }
        let mut rng = seeded_rng(seed);
        let projections = gaussian_vec(&mut rng, code_length * dim);
        let offsets = (0..code_length)
            .map(|_| rng.random::<f64>() * width)
            .collect();
        Ok(Self {
            dim,
            width,
            projections,
            offsets,
        })
    }

    /// Builds a family from explicit projections (row-major, `L × D`).
    pub fn from_parts(dim: usize, projections: Vec<f64>, offsets: Vec<f64>, width: f64) -> Result<Self> {
        if dim == 0 || projections.len() != offsets.len() * dim || offsets.is_empty() {
            return Err(HashError::InvalidArgument(
                "projection matrix does not match offsets".into(),
            ));
        }
        if !(width > 0.0) {
            return Err(HashError::InvalidArgument("bucket width must be positive".into()));
        }
        Ok(Self {
            dim,
            width,
            projections,
            offsets,
        })
    }

    pub fn hash(&self, v: &[f64]) -> Result<HashCode> {
        check_dim(self.dim, v.len())?;
        Ok(HashCode(
            self.projections
                .chunks_exact(self.dim)
                .zip(&self.offsets)
                .map(|(a, b)| ((dot(a, v) + b) / self.width).floor() as i32)
                .collect(),
        ))
    }

    pub fn code_length(&self) -> usize {
        self.offsets.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn width(&self) -> f64 {
        self.width
    }
}

/// Collision probability `F_r(d)` of the Euclidean family for two points at
/// distance `d`.
pub fn collision_prob_l2(width: f64, distance: f64) -> Result<f64> {
    if !(width > 0.0) || !(distance > 0.0) {
        return Err(HashError::InvalidArgument(format!(
            "F_r(d) needs r > 0 and d > 0, got r = {width}, d = {distance}"
        )));
    }
    Ok(f_r(width, distance))
}

fn f_r(r: f64, d: f64) -> f64 {
    let t = r / d;
    let tail = 2.0 * d / ((2.0 * std::f64::consts::PI).sqrt() * r) * (1.0 - (-t * t / 2.0).exp());
    1.0 - 2.0 * standard_normal_cdf(-t) - tail
}

/// Result of inverting `F_r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct L2Inversion {
    pub distance: f64,
    /// Set when the input probability was clamped away from 0 or 1.
    pub saturated: bool,
}

/// Distance `d` with `F_r(d) = p`, found by bisection.
pub fn invert_collision_l2(width: f64, p: f64) -> Result<L2Inversion> {
    if !(width > 0.0) || p.is_nan() {
        return Err(HashError::InvalidArgument(format!(
            "cannot invert F_r with r = {width}, p = {p}"
        )));
    }
    let clamped = p.clamp(SATURATION_EPS, 1.0 - SATURATION_EPS);
    let saturated = clamped != p;

    // F_r decreases from 1 (d -> 0) to 0 (d -> inf).
    let mut hi = width;
    while f_r(width, hi) >= clamped {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f_r(width, mid) > clamped {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(L2Inversion {
        distance: 0.5 * (lo + hi),
        saturated,
    })
}
