use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, LogNormal, Pareto, StandardNormal};

use super::{HarnessError, Result};
use crate::hash::seeded_rng;
use crate::index::derive_seed;
use crate::vecdata::{DataError, Dataset, QuerySet};

/// Distribution of item norms; directions are always uniform on the sphere.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormProfile {
    Constant(f64),
    Uniform { low: f64, high: f64 },
    /// `exp(N(0, sigma²))`.
    LogNormal { sigma: f64 },
    /// Pareto with scale 1 and tail index `alpha`.
    PowerLaw { alpha: f64 },
}

impl NormProfile {
    pub fn name(&self) -> &'static str {
        match self {
            NormProfile::Constant(_) => "constant",
            NormProfile::Uniform { .. } => "uniform",
            NormProfile::LogNormal { .. } => "lognormal",
            NormProfile::PowerLaw { .. } => "power-law",
        }
    }

    fn validate(&self) -> std::result::Result<(), String> {
        let ok = match *self {
            NormProfile::Constant(c) => c > 0.0 && c.is_finite(),
            NormProfile::Uniform { low, high } => low >= 0.0 && high > low && high.is_finite(),
            NormProfile::LogNormal { sigma } => sigma > 0.0 && sigma.is_finite(),
            NormProfile::PowerLaw { alpha } => alpha > 0.0 && alpha.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(format!("invalid parameters for norm profile {self}"))
        }
    }
}

impl fmt::Display for NormProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            NormProfile::Constant(c) => write!(f, "constant:{c}"),
            NormProfile::Uniform { low, high } => write!(f, "uniform:{low}:{high}"),
            NormProfile::LogNormal { sigma } => write!(f, "lognormal:{sigma}"),
            NormProfile::PowerLaw { alpha } => write!(f, "power-law:{alpha}"),
        }
    }
}

/// `constant[:c]`, `uniform[:low:high]`, `lognormal[:sigma]` or
/// `power-law[:alpha]`. Defaults: `c = 1`, `[0, 1]`, `sigma = 0.5`,
/// `alpha = 2.5`.
impl FromStr for NormProfile {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let mut it = s.trim().split(':');
        let name = it.next().unwrap_or_default().to_ascii_lowercase();
        let args = it
            .map(|a| a.trim().parse::<f64>().map_err(|_| format!("bad profile parameter {a:?}")))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let arity = |n: usize| {
            if args.len() == n || args.is_empty() {
                Ok(())
            } else {
                Err(format!("profile {name} takes {n} parameter(s), got {}", args.len()))
            }
        };
        let p = match name.as_str() {
            "constant" => {
                arity(1)?;
                NormProfile::Constant(args.first().copied().unwrap_or(1.0))
            }
            "uniform" => {
                arity(2)?;
                let (low, high) = if args.is_empty() { (0.0, 1.0) } else { (args[0], args[1]) };
                NormProfile::Uniform { low, high }
            }
            "lognormal" => {
                arity(1)?;
                NormProfile::LogNormal {
                    sigma: args.first().copied().unwrap_or(0.5),
                }
            }
            "power-law" | "powerlaw" | "pareto" => {
                arity(1)?;
                NormProfile::PowerLaw {
                    alpha: args.first().copied().unwrap_or(2.5),
                }
            }
            _ => {
                return Err(format!(
                    "unknown norm profile {s:?} (expected constant, uniform, lognormal or power-law)"
                ))
            }
        };
        p.validate()?;
        Ok(p)
    }
}

fn unit_direction<R: Rng>(rng: &mut R, d: usize, out: &mut Vec<f64>) {
    loop {
        let start = out.len();
        out.extend((0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let n = crate::vecdata::norm(&out[start..]);
        if n > 0.0 {
            out[start..].iter_mut().for_each(|x| *x /= n);
            return;
        }
        out.truncate(start);
    }
}

/// `n` items of dimension `d`: uniform directions scaled by norms drawn from
/// `profile`. Directions and norms come from separate streams of `seed`.
pub fn synth_dataset(n: usize, d: usize, profile: NormProfile, seed: u64) -> Result<Dataset> {
    if d == 0 {
        return Err(DataError::ZeroDimension.into());
    }
    if n == 0 {
        return Err(DataError::Empty.into());
    }
    profile.validate().map_err(|e| HarnessError::Config(vec![e]))?;
    let mut dir_rng = seeded_rng(derive_seed(seed, 0));
    let mut norm_rng = seeded_rng(derive_seed(seed, 1));
    let mut items = Vec::with_capacity(n * d);
    for i in 0..n {
        unit_direction(&mut dir_rng, d, &mut items);
        let r = match profile {
            NormProfile::Constant(c) => c,
            NormProfile::Uniform { low, high } => norm_rng.random_range(low..high),
            NormProfile::LogNormal { sigma } => LogNormal::new(0.0, sigma).expect("valid sigma").sample(&mut norm_rng),
            NormProfile::PowerLaw { alpha } => Pareto::new(1.0, alpha).expect("valid alpha").sample(&mut norm_rng),
        };
        items[i * d..].iter_mut().for_each(|x| *x *= r);
    }
    Ok(Dataset::new(d, items)?)
}

/// `nq` uniformly random unit queries.
pub fn synth_queries(nq: usize, d: usize, seed: u64) -> Result<QuerySet> {
    if d == 0 {
        return Err(DataError::ZeroDimension.into());
    }
    let mut rng = seeded_rng(derive_seed(seed, 2));
    let mut q = Vec::with_capacity(nq * d);
    for _ in 0..nq {
        unit_direction(&mut rng, d, &mut q);
    }
    Ok(QuerySet::new(d, q)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_profile() {
        let ds = synth_dataset(500, 8, NormProfile::Constant(1.0), 1).unwrap();
        assert!(ds.norms().iter().all(|n| (n - 1.0).abs() < 1e-9));
    }

    #[test]
    fn lognormal_is_right_skewed() {
        let ds = synth_dataset(1000, 8, NormProfile::LogNormal { sigma: 0.5 }, 2).unwrap();
        let mut norms = ds.norms().to_vec();
        norms.sort_by(f64::total_cmp);
        let median = (norms[499] + norms[500]) / 2.0;
        let mean = norms.iter().sum::<f64>() / 1000.0;
        assert!(median < mean);
    }

    #[test]
    fn profiles_and_determinism() {
        for p in ["constant", "uniform:0.5:2", "lognormal:0.7", "power-law"] {
            let prof: NormProfile = p.parse().unwrap();
            let a = synth_dataset(50, 3, prof, 9).unwrap();
            let b = synth_dataset(50, 3, prof, 9).unwrap();
            assert_eq!(a, b);
            assert_ne!(a, synth_dataset(50, 3, prof, 10).unwrap());
            assert_eq!(prof.to_string().parse::<NormProfile>().unwrap(), prof);
        }
        for bad in ["gamma", "uniform:2:1", "lognormal:-1", "constant:1:2", "lognormal:x"] {
            assert!(bad.parse::<NormProfile>().is_err(), "{bad}");
        }
        let q = synth_queries(20, 5, 1).unwrap();
        assert_eq!(q.len(), 20);
    }
}
