//! Cross-polytope LSH with dense Gaussian matrices.
//!
//! A function maps a unit vector `v` to the vertex `±e_i` of the
//! `D'`-dimensional cross-polytope closest to `Av / ‖Av‖`, which is the
//! coordinate of largest magnitude together with its sign. Vertex `+e_i` is
//! encoded as symbol `i + 1` and `-e_i` as `-(i + 1)`.
//!
//! # Probe residual
//!
//! For multi-probing, each candidate vertex `s·e_i` gets the residual
//!
//! ```text
//! Y(s, i) = (max_k |y_k| - s·y_i)^2,    y = A v
//! ```
//!
//! the squared amount by which the projection would have to move along
//! coordinate `i` for `s·e_i` to become the nearest vertex. `y` is the raw
//! Gaussian projection (coordinates are standard normal for unit `v`), which
//! is the scale on which the residual's exponential tail is calibrated. The
//! hashed vertex has residual 0; the residual grows with the angle between `y`
//! and `s·e_i`. A bucket's residual is the sum over its `L` functions.

use super::{check_dim, dot, gaussian_vec, seeded_rng, HashCode, HashError, Result};

const UNIT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct CrossPolytopeFamily {
    dim: usize,
    out_dim: usize,
    code_length: usize,
    /// `L` row-major `D' × D` matrices, concatenated.
    matrices: Vec<f64>,
}

impl CrossPolytopeFamily {
    pub fn from_seed(seed: u64, code_length: usize, dim: usize, out_dim: usize) -> Result<Self> {
        if code_length == 0 || dim == 0 || out_dim == 0 {
            return Err(HashError::InvalidArgument(
                "code length and dimensions must be positive".into(),
            ));
        }
        if out_dim > i32::MAX as usize - 1 {
            return Err(HashError::InvalidArgument("output dimension too large".into()));
        }
        Ok(Self {
            dim,
            out_dim,
            code_length,
            matrices: gaussian_vec(&mut seeded_rng(seed), code_length * out_dim * dim),
        })
    }

    pub fn from_matrices(dim: usize, out_dim: usize, matrices: Vec<f64>) -> Result<Self> {
        let per = dim * out_dim;
        if per == 0 || matrices.is_empty() || matrices.len() % per != 0 {
            return Err(HashError::InvalidArgument("matrix buffer has wrong size".into()));
        }
        Ok(Self {
            dim,
            out_dim,
            code_length: matrices.len() / per,
            matrices,
        })
    }

    pub fn code_length(&self) -> usize {
        self.code_length
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    fn matrix(&self, index: usize) -> &[f64] {
        let per = self.dim * self.out_dim;
        &self.matrices[index * per..(index + 1) * per]
    }

    fn check_input(&self, v: &[f64]) -> Result<()> {
        check_dim(self.dim, v.len())?;
        let n = dot(v, v).sqrt();
        if (n - 1.0).abs() > UNIT_TOLERANCE {
            return Err(HashError::NotUnit(n));
        }
        Ok(())
    }

    fn project(&self, index: usize, v: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(self.matrix(index).chunks_exact(self.dim).map(|row| dot(row, v)));
    }

    pub fn hash(&self, v: &[f64]) -> Result<HashCode> {
        self.check_input(v)?;
        let mut y = Vec::with_capacity(self.out_dim);
        let mut code = Vec::with_capacity(self.code_length);
        for f in 0..self.code_length {
            self.project(f, v, &mut y);
            code.push(closest_vertex(&y)?);
        }
        Ok(HashCode(code))
    }

    /// Residuals of all `2D'` vertices for every function: entry `[f][slot]`
    /// where `slot = i` for `+e_i` and `D' + i` for `-e_i`.
    pub fn residual_table(&self, v: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_input(v)?;
        let mut y = Vec::with_capacity(self.out_dim);
        let mut table = Vec::with_capacity(self.code_length);
        for f in 0..self.code_length {
            self.project(f, v, &mut y);
            let top = y.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if top == 0.0 {
                return Err(HashError::DegenerateProjection);
            }
            let mut row = vec![0.0; 2 * self.out_dim];
            for (i, &yi) in y.iter().enumerate() {
                row[i] = (top - yi).powi(2);
                row[self.out_dim + i] = (top + yi).powi(2);
            }
            table.push(row);
        }
        Ok(table)
    }

    /// Table slot of a symbol.
    pub fn slot(&self, symbol: i32) -> Result<usize> {
        let i = symbol.unsigned_abs() as usize;
        if symbol == 0 || i > self.out_dim {
            return Err(HashError::InvalidSymbol(symbol));
        }
        Ok(if symbol > 0 { i - 1 } else { self.out_dim + i - 1 })
    }
}

/// Vertex of largest-magnitude coordinate; ties go to the smallest index and
/// then to the positive sign.
fn closest_vertex(y: &[f64]) -> Result<i32> {
    let mut best = 0usize;
    let mut best_abs = -1.0f64;
    for (i, v) in y.iter().enumerate() {
        if v.abs() > best_abs {
            best_abs = v.abs();
            best = i;
        }
    }
    if !(best_abs > 0.0) {
        return Err(HashError::DegenerateProjection);
    }
    let idx = best as i32 + 1;
    Ok(if y[best] >= 0.0 { idx } else { -idx })
}

/// Residual of `symbol` under function `function` for input `v`.
pub fn crosspolytope_residual(
    fam: &CrossPolytopeFamily,
    v: &[f64],
    symbol: i32,
    function: usize,
) -> Result<f64> {
    if function >= fam.code_length {
        return Err(HashError::FunctionIndex {
            index: function,
            len: fam.code_length,
        });
    }
    let slot = fam.slot(symbol)?;
    fam.check_input(v)?;
    let mut y = Vec::new();
    fam.project(function, v, &mut y);
    let top = y.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if top == 0.0 {
        return Err(HashError::DegenerateProjection);
    }
    let (sign, i) = if slot < fam.out_dim {
        (1.0, slot)
    } else {
        (-1.0, slot - fam.out_dim)
    };
    Ok((top - sign * y[i]).powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn identity(d: usize) -> CrossPolytopeFamily {
        let mut m = vec![0.0; d * d];
        for i in 0..d {
            m[i * d + i] = 1.0;
        }
        CrossPolytopeFamily::from_matrices(d, d, m).unwrap()
    }

    fn unit(v: Vec<f64>) -> Vec<f64> {
        let n = dot(&v, &v).sqrt();
        v.into_iter().map(|x| x / n).collect()
    }

    #[test]
    fn identity_cases() {
        let f = identity(3);
        assert_eq!(f.hash(&[1.0, 0.0, 0.0]).unwrap().0, vec![1]);
        assert_eq!(f.hash(&[0.0, -1.0, 0.0]).unwrap().0, vec![-2]);
    }

    #[test]
    fn ties_prefer_small_index() {
        let f = identity(2);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(f.hash(&[-s, s]).unwrap().0, vec![-1]);
    }

    #[test]
    fn rejects_non_unit_and_degenerate() {
        let f = identity(2);
        assert!(matches!(f.hash(&[2.0, 0.0]), Err(HashError::NotUnit(_))));
        let zero = CrossPolytopeFamily::from_matrices(2, 1, vec![0.0, 0.0]).unwrap();
        assert_eq!(zero.hash(&[1.0, 0.0]), Err(HashError::DegenerateProjection));
    }

    #[test]
    fn self_residual_is_minimal() {
        let f = identity(3);
        let v = [1.0, 0.0, 0.0];
        let own = crosspolytope_residual(&f, &v, 1, 0).unwrap();
        assert_eq!(own, 0.0);
        assert!(own <= crosspolytope_residual(&f, &v, -1, 0).unwrap());

        let fam = CrossPolytopeFamily::from_seed(8, 16, 6, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let v = unit((0..6).map(|_| rng.random_range(-1.0..1.0)).collect());
            let code = fam.hash(&v).unwrap();
            let table = fam.residual_table(&v).unwrap();
            for (f, &sym) in code.0.iter().enumerate() {
                let own = crosspolytope_residual(&fam, &v, sym, f).unwrap();
                assert_eq!(own, table[f][fam.slot(sym).unwrap()]);
                assert!(table[f].iter().all(|&r| r >= own));
            }
        }
    }

    #[test]
    fn residual_grows_with_angle() {
        // Vertices sorted by angle to y must be sorted by residual.
        let fam = CrossPolytopeFamily::from_seed(21, 4, 5, 5).unwrap();
        let v = unit(vec![0.3, -0.5, 0.2, 0.7, 0.1]);
        let table = fam.residual_table(&v).unwrap();
        for f in 0..4 {
            let mut y = Vec::new();
            fam.project(f, &v, &mut y);
            let mut cos: Vec<(f64, f64)> = Vec::new();
            for i in 0..5 {
                cos.push((y[i], table[f][i]));
                cos.push((-y[i], table[f][5 + i]));
            }
            cos.sort_by(|a, b| b.0.total_cmp(&a.0));
            for w in cos.windows(2) {
                assert!(w[0].1 <= w[1].1);
            }
        }
    }

    #[test]
    fn invalid_symbols() {
        let f = identity(3);
        assert!(crosspolytope_residual(&f, &[1.0, 0.0, 0.0], 0, 0).is_err());
        assert!(crosspolytope_residual(&f, &[1.0, 0.0, 0.0], 4, 0).is_err());
        assert!(crosspolytope_residual(&f, &[1.0, 0.0, 0.0], 1, 1).is_err());
    }

    #[test]
    fn collision_rate_decreases_with_distance() {
        let (dim, trials) = (8, 4000);
        let fam = CrossPolytopeFamily::from_seed(99, trials, dim, dim).unwrap();
        let x = unit(vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let hx = fam.hash(&x).unwrap();
        let mut last = 1.01;
        for &d in &[0.2, 0.5, 0.8, 1.1, 1.4] {
            // y = cos(t) e1 + sin(t) e2 has |x - y| = d when cos(t) = 1 - d^2/2.
            let c: f64 = 1.0 - d * d / 2.0;
            let mut y = vec![0.0; dim];
            y[0] = c;
            y[1] = (1.0 - c * c).sqrt();
            let rate = hx.matches(&fam.hash(&y).unwrap()) as f64 / trials as f64;
            assert!(rate < last, "rate {rate} at d = {d}");
            last = rate;
        }
    }

    #[test]
    fn residual_order_matches_monte_carlo_likelihood() {
        // One fixed function; neighbours of q at distance 0.6 land in the
        // three probed vertices with frequencies ordered like the residuals.
        let dim = 4;
        let fam = CrossPolytopeFamily::from_seed(5, 1, dim, dim).unwrap();
        let q = unit(vec![0.6, -0.3, 0.5, 0.2]);
        let table = fam.residual_table(&q).unwrap();
        let mut slots: Vec<usize> = (0..2 * dim).collect();
        slots.sort_by(|a, b| table[0][*a].total_cmp(&table[0][*b]));
        let chosen = [slots[0], slots[1], slots[2 * dim - 1]];

        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let d: f64 = 0.6;
        let c = 1.0 - d * d / 2.0;
        let mut counts = [0usize; 3];
        for _ in 0..20_000 {
            // Random direction orthogonal to q.
            let mut z: Vec<f64> = (0..dim).map(|_| rng.sample(rand_distr::StandardNormal)).collect();
            let proj = dot(&z, &q);
            z.iter_mut().zip(&q).for_each(|(zi, qi)| *zi -= proj * qi);
            let z = unit(z);
            let x: Vec<f64> = q.iter().zip(&z).map(|(a, b)| c * a + (1.0 - c * c).sqrt() * b).collect();
            let slot = fam.slot(fam.hash(&x).unwrap().0[0]).unwrap();
            if let Some(k) = chosen.iter().position(|&s| s == slot) {
                counts[k] += 1;
            }
        }
        assert!(counts[0] > counts[1] && counts[1] > counts[2], "{counts:?}");
    }
}
