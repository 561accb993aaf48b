use super::{check_dim, dot, gaussian_vec, seeded_rng, HashCode, HashError, Result};

/// Sign random projection: `h(x) = sign(a·x)` with `sign(0) = +1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SrpFamily {
    dim: usize,
    projections: Vec<f64>,
}

impl SrpFamily {
    pub fn from_seed(seed: u64, code_length: usize, dim: usize) -> Result<Self> {
        if code_length == 0 || dim == 0 {
            return Err(HashError::InvalidArgument(
                "code length and dimension must be positive".into(),
            ));
        }
        Ok(Self {
            dim,
            projections: gaussian_vec(&mut seeded_rng(seed), code_length * dim),
        })
    }

    pub fn hash(&self, v: &[f64]) -> Result<HashCode> {
        check_dim(self.dim, v.len())?;
        Ok(HashCode(
            self.projections
                .chunks_exact(self.dim)
                .map(|a| if dot(a, v) >= 0.0 { 1 } else { -1 })
                .collect(),
        ))
    }

    pub fn code_length(&self) -> usize {
        self.projections.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// `1 - arccos(cosine) / π`; the cosine is clamped into `[-1, 1]`.
pub fn collision_prob_srp(cosine: f64) -> f64 {
    1.0 - cosine.clamp(-1.0, 1.0).acos() / std::f64::consts::PI
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vecdata::norm;

    #[test]
    fn closed_form_points() {
        assert_eq!(collision_prob_srp(1.0), 1.0);
        assert!((collision_prob_srp(0.0) - 0.5).abs() < 1e-15);
        assert_eq!(collision_prob_srp(-1.0), 0.0);
        assert_eq!(collision_prob_srp(1.0 + 1e-13), 1.0);
    }

    #[test]
    fn scale_invariance_and_antisymmetry() {
        let f = SrpFamily::from_seed(4, 64, 5).unwrap();
        let v = [0.2, -0.7, 0.1, 0.9, -0.3];
        let v2: Vec<f64> = v.iter().map(|x| 2.0 * x).collect();
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        let h = f.hash(&v).unwrap();
        assert_eq!(h, f.hash(&v2).unwrap());
        let hn = f.hash(&neg).unwrap();
        assert!(h.0.iter().zip(&hn.0).all(|(a, b)| *a == -*b));
    }

    #[test]
    fn sign_of_zero_is_positive() {
        let f = SrpFamily::from_seed(4, 8, 3).unwrap();
        assert!(f.hash(&[0.0; 3]).unwrap().0.iter().all(|&s| s == 1));
    }

    #[test]
    fn match_fraction_tracks_angle() {
        let trials = 100_000;
        let f = SrpFamily::from_seed(12, trials, 3).unwrap();
        let x = [1.0, 0.2, -0.4];
        let y = [0.3, 0.9, 0.1];
        let cos = dot(&x, &y) / (norm(&x) * norm(&y));
        let frac = f.hash(&x).unwrap().matches(&f.hash(&y).unwrap()) as f64 / trials as f64;
        assert!((frac - collision_prob_srp(cos)).abs() < 0.01);
    }
}
