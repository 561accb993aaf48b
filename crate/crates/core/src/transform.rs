//! Transformations that reduce inner-product search to Euclidean or angular
//! similarity search.
//!
//! Items are scaled by a normalization factor `M` (the maximum norm of the
//! collection they belong to). Queries are assumed to be unit norm and are
//! never scaled.

use thiserror::Error;

use crate::vecdata::inner_product;

const UNIT_TOLERANCE: f64 = 1e-9;
const NORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransformError {
    #[error("item norm {norm} exceeds normalization factor {factor}")]
    ExceedsNormalization { norm: f64, factor: f64 },
    #[error("query norm {0} is not 1")]
    NotUnitQuery(f64),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

pub type Result<T> = std::result::Result<T, TransformError>;

/// Parameters of the asymmetric transformations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlshParams {
    /// Shrink factor `U`, in `(0, 1)`.
    pub u: f64,
    /// Number of appended tail coordinates `m`.
    pub m: u32,
    /// Bucket width `r` of the Euclidean hash (L2-ALSH only).
    pub r: f64,
    /// Normalization factor `M`.
    pub norm_factor: f64,
}

impl AlshParams {
    /// `m = 3, U = 0.83, r = 2.5`.
    pub fn l2_default(norm_factor: f64) -> Self {
        Self {
            u: 0.83,
            m: 3,
            r: 2.5,
            norm_factor,
        }
    }

    /// `m = 2, U = 0.75`.
    pub fn sign_default(norm_factor: f64) -> Self {
        Self {
            u: 0.75,
            m: 2,
            r: 2.5,
            norm_factor,
        }
    }

    pub fn with_norm_factor(self, norm_factor: f64) -> Self {
        Self {
            norm_factor,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.u > 0.0 && self.u < 1.0) {
            return Err(TransformError::InvalidParams(format!(
                "U must be in (0, 1), got {}",
                self.u
            )));
        }
        if self.m < 1 {
            return Err(TransformError::InvalidParams("m must be at least 1".into()));
        }
        if !(self.norm_factor > 0.0 && self.norm_factor.is_finite()) {
            return Err(TransformError::InvalidParams(format!(
                "normalization factor must be positive, got {}",
                self.norm_factor
            )));
        }
        if !(self.r > 0.0 && self.r.is_finite()) {
            return Err(TransformError::InvalidParams(format!(
                "bucket width must be positive, got {}",
                self.r
            )));
        }
        Ok(())
    }
}

fn check_item(x: &[f64], factor: f64) -> Result<f64> {
    let n = inner_product(x, x).sqrt();
    if n > factor * (1.0 + NORM_TOLERANCE) {
        return Err(TransformError::ExceedsNormalization { norm: n, factor });
    }
    Ok(n)
}

fn check_query(q: &[f64]) -> Result<()> {
    let n = inner_product(q, q).sqrt();
    if (n - 1.0).abs() > UNIT_TOLERANCE {
        return Err(TransformError::NotUnitQuery(n));
    }
    Ok(())
}

/// Scales `x` by `U / M` and returns the scaled vector with its squared norm.
fn shrink(x: &[f64], p: &AlshParams) -> Result<(Vec<f64>, f64)> {
    p.validate()?;
    check_item(x, p.norm_factor)?;
    let s = p.u / p.norm_factor;
    let scaled: Vec<f64> = x.iter().map(|v| v * s).collect();
    let sq = inner_product(&scaled, &scaled);
    Ok((scaled, sq))
}

/// `‖Ux/M‖^{2^i}` for `i = 1..=m`, by repeated squaring.
fn tower(sq_norm: f64, m: u32) -> impl Iterator<Item = f64> {
    std::iter::successors(Some(sq_norm), |v| Some(v * v)).take(m as usize)
}

/// `P(x) = [Ux/M; ‖Ux/M‖^2; ‖Ux/M‖^4; ...; ‖Ux/M‖^{2^m}]`.
pub fn l2alsh_item(x: &[f64], p: &AlshParams) -> Result<Vec<f64>> {
    let (mut out, sq) = shrink(x, p)?;
    out.extend(tower(sq, p.m));
    Ok(out)
}

/// `Q(q) = [q; 1/2; ...; 1/2]`.
pub fn l2alsh_query(q: &[f64], p: &AlshParams) -> Result<Vec<f64>> {
    p.validate()?;
    check_query(q)?;
    let mut out = q.to_vec();
    out.extend(std::iter::repeat_n(0.5, p.m as usize));
    Ok(out)
}

/// `P(x) = [Ux/M; 1/2 - ‖Ux/M‖^2; ...; 1/2 - ‖Ux/M‖^{2^m}]`.
pub fn signalsh_item(x: &[f64], p: &AlshParams) -> Result<Vec<f64>> {
    let (mut out, sq) = shrink(x, p)?;
    out.extend(tower(sq, p.m).map(|t| 0.5 - t));
    Ok(out)
}

/// `Q(q) = [q; 0; ...; 0]`.
pub fn signalsh_query(q: &[f64], p: &AlshParams) -> Result<Vec<f64>> {
    p.validate()?;
    check_query(q)?;
    let mut out = q.to_vec();
    out.extend(std::iter::repeat_n(0.0, p.m as usize));
    Ok(out)
}

/// `[v/M; sqrt(1 - ‖v/M‖^2)]`, a unit vector. The radicand is clamped at 0.
pub fn simple_transform(v: &[f64], norm_factor: f64) -> Result<Vec<f64>> {
    if !(norm_factor > 0.0 && norm_factor.is_finite()) {
        return Err(TransformError::InvalidParams(format!(
            "normalization factor must be positive, got {norm_factor}"
        )));
    }
    check_item(v, norm_factor)?;
    let mut out: Vec<f64> = v.iter().map(|x| x / norm_factor).collect();
    let sq = inner_product(&out, &out);
    out.push((1.0 - sq).max(0.0).sqrt());
    Ok(out)
}

/// Query side of the symmetric transformation: `[q; 0]`.
pub fn simple_query(q: &[f64]) -> Result<Vec<f64>> {
    check_query(q)?;
    let mut out = q.to_vec();
    out.push(0.0);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vecdata::norm;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_unit(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
        let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = norm(&v);
        v.into_iter().map(|x| x / n).collect()
    }

    fn random_within(rng: &mut ChaCha8Rng, d: usize, max: f64) -> Vec<f64> {
        let u = random_unit(rng, d);
        let r = rng.random_range(0.0..=max);
        u.into_iter().map(|x| x * r).collect()
    }

    #[test]
    fn l2alsh_zero_item() {
        let p = AlshParams::l2_default(1.0);
        assert_eq!(l2alsh_item(&[0.0, 0.0], &p).unwrap(), vec![0.0; 5]);
    }

    #[test]
    fn l2alsh_tail_values() {
        let p = AlshParams {
            u: 0.83,
            m: 3,
            r: 2.5,
            norm_factor: 1.0,
        };
        let out = l2alsh_item(&[0.6, 0.8], &p).unwrap();
        let want = [0.6889, 0.47458321, 0.2252292232];
        for (got, want) in out[2..].iter().zip(want) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
    }

    #[test]
    fn l2alsh_query_layout() {
        let p = AlshParams {
            m: 2,
            ..AlshParams::l2_default(1.0)
        };
        let q = l2alsh_query(&[1.0, 0.0], &p).unwrap();
        assert_eq!(q, vec![1.0, 0.0, 0.5, 0.5]);
        assert!((inner_product(&q, &q) - (1.0 + 2.0 / 4.0)).abs() < 1e-15);
        assert!(l2alsh_query(&[2.0, 0.0], &p).is_err());
    }

    #[test]
    fn l2alsh_distance_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let m_factor = rng.random_range(0.5..3.0);
            let p = AlshParams::l2_default(m_factor);
            let x = random_within(&mut rng, 6, m_factor);
            let q = random_unit(&mut rng, 6);
            let px = l2alsh_item(&x, &p).unwrap();
            let qq = l2alsh_query(&q, &p).unwrap();
            let dist2: f64 = px.iter().zip(&qq).map(|(a, b)| (a - b).powi(2)).sum();
            let sx = p.u / m_factor * norm(&x);
            let want = 1.0 + p.m as f64 / 4.0 - 2.0 * p.u / m_factor * inner_product(&x, &q)
                + sx.powi(1 << (p.m + 1));
            assert!((dist2 - want).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_items_above_normalization() {
        let p = AlshParams::l2_default(1.0);
        assert!(matches!(
            l2alsh_item(&[1.0, 1.0], &p),
            Err(TransformError::ExceedsNormalization { .. })
        ));
        assert!(simple_transform(&[1.0, 1.0], 1.0).is_err());
        assert!(l2alsh_item(&[0.1], &AlshParams { u: 1.0, ..p }).is_err());
    }

    #[test]
    fn signalsh_layouts() {
        let p = AlshParams {
            m: 3,
            ..AlshParams::sign_default(1.0)
        };
        assert_eq!(signalsh_item(&[0.0, 0.0], &p).unwrap()[2..], [0.5; 3]);
        let q = signalsh_query(&[0.0, 1.0], &p).unwrap();
        assert_eq!(q, vec![0.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(norm(&q), 1.0);
    }

    #[test]
    fn signalsh_cosine_identity_and_norm_two_ways() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..500 {
            let mf = rng.random_range(0.5..3.0);
            let p = AlshParams::sign_default(mf);
            let x = random_within(&mut rng, 5, mf);
            let q = random_unit(&mut rng, 5);
            let px = signalsh_item(&x, &p).unwrap();
            let qq = signalsh_query(&q, &p).unwrap();
            let cos = inner_product(&px, &qq) / (norm(&px) * norm(&qq));
            let s = (p.u / mf * norm(&x)).powi(2);
            let want = p.u / mf * inner_product(&q, &x)
                / (p.m as f64 / 4.0 + s.powi(1 << p.m)).sqrt();
            assert!((cos - want).abs() < 1e-9);

            let direct = inner_product(&px, &px);
            let mut by_parts = s;
            for i in 1..=p.m {
                by_parts += (0.5 - s.powi(1 << (i - 1))).powi(2);
            }
            assert!((direct - by_parts).abs() < 1e-12);
        }
    }

    #[test]
    fn simple_transform_cases() {
        assert_eq!(simple_transform(&[3.0, 4.0], 5.0).unwrap(), vec![0.6, 0.8, 0.0]);
        assert_eq!(simple_transform(&[0.0, 0.0], 2.0).unwrap(), vec![0.0, 0.0, 1.0]);
        assert_eq!(simple_query(&[0.6, 0.8]).unwrap(), vec![0.6, 0.8, 0.0]);
    }

    #[test]
    fn simple_inner_product_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let mf = rng.random_range(0.5..3.0);
            let x = random_within(&mut rng, 7, mf);
            let q = random_unit(&mut rng, 7);
            let px = simple_transform(&x, mf).unwrap();
            let pq = simple_query(&q).unwrap();
            assert!((inner_product(&px, &pq) - inner_product(&q, &x) / mf).abs() < 1e-12);
        }
    }

    #[test]
    fn monotone_reduction() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let l2 = AlshParams {
            m: 6,
            ..AlshParams::l2_default(1.0)
        };
        let sg = AlshParams {
            m: 6,
            ..AlshParams::sign_default(1.0)
        };
        for _ in 0..300 {
            let q = random_unit(&mut rng, 4);
            let a = random_within(&mut rng, 4, 1.0);
            let b = random_within(&mut rng, 4, 1.0);
            let (hi, lo) = if inner_product(&q, &a) > inner_product(&q, &b) {
                (a, b)
            } else {
                (b, a)
            };
            if inner_product(&q, &hi) - inner_product(&q, &lo) < 1e-4 {
                continue;
            }
            let cos = |x: &[f64], y: &[f64]| inner_product(x, y) / (norm(x) * norm(y));
            let dist = |x: &[f64], y: &[f64]| -> f64 {
                x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
            };
            let sq = simple_query(&q).unwrap();
            assert!(
                cos(&simple_transform(&hi, 1.0).unwrap(), &sq)
                    > cos(&simple_transform(&lo, 1.0).unwrap(), &sq)
            );
            assert!(
                dist(&simple_transform(&hi, 1.0).unwrap(), &sq)
                    < dist(&simple_transform(&lo, 1.0).unwrap(), &sq)
            );
            let lq = l2alsh_query(&q, &l2).unwrap();
            assert!(dist(&l2alsh_item(&hi, &l2).unwrap(), &lq) < dist(&l2alsh_item(&lo, &l2).unwrap(), &lq));
            // m = 6 puts the tail term below 1e-16 for both items.
            let gq = signalsh_query(&q, &sg).unwrap();
            let ph = signalsh_item(&hi, &sg).unwrap();
            let pl = signalsh_item(&lo, &sg).unwrap();
            assert!(cos(&ph, &gq) > cos(&pl, &gq));
        }
    }

    #[test]
    fn tower_term_vanishes_in_m() {
        let u: f64 = 0.83;
        let mut last = f64::INFINITY;
        for m in 1..8 {
            let t = u.powi(1 << (m + 1));
            assert!(t < last);
            last = t;
        }
    }

    proptest::proptest! {
        #[test]
        fn simple_output_is_unit(x in proptest::collection::vec(-1.0f64..1.0, 1..20), f in 0.1f64..5.0) {
            let n = norm(&x);
            let factor = n.max(1e-12) * f.max(1.0);
            let p = simple_transform(&x, factor).unwrap();
            proptest::prop_assert!((norm(&p) - 1.0).abs() < 1e-12);
        }
    }
}
