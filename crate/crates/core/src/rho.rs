//! Closed-form hash quality `ρ = ln p1 / ln p2` for the four schemes, the
//! mapping from an `(S, c)` inner-product problem to a Euclidean one on the
//! unit sphere, and the norm-range complexity ratio bound.
//!
//! All logarithms are natural. The cross-polytope quality is itself an
//! approximation; it is evaluated here as if exact.

use std::f64::consts::PI;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::algorithm::MetaAlgorithm;
use crate::hash::collision_prob_l2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RhoError {
    #[error("invalid condition: {0}")]
    InvalidCondition(String),
    #[error("S = M makes the Euclidean approximation ratio infinite")]
    Degenerate,
    #[error("argument {0} lies outside the arccos domain")]
    Domain(f64),
    #[error("precondition violations: {}", .0.join("; "))]
    Preconditions(Vec<String>),
}

pub type Result<T> = std::result::Result<T, RhoError>;

/// A computed hash quality with its inputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoResult {
    pub rho: f64,
    pub algorithm: MetaAlgorithm,
    pub s: f64,
    pub c: f64,
    pub norm_factor: f64,
    /// The `‖Ux/M‖^{2^{m+1}}` tail term was dropped.
    pub tail_ignored: bool,
}

fn check_condition(s: f64, c: f64, m: f64) -> Result<()> {
    if !(s > 0.0) || !(m > 0.0) || !s.is_finite() || !m.is_finite() {
        return Err(RhoError::InvalidCondition(format!(
            "need S > 0 and M > 0, got S = {s}, M = {m}"
        )));
    }
    if !(c > 0.0 && c < 1.0) {
        return Err(RhoError::InvalidCondition(format!("c = {c} not in (0, 1)")));
    }
    if s > m {
        return Err(RhoError::InvalidCondition(format!("S = {s} exceeds M = {m}")));
    }
    Ok(())
}

fn srp_log_prob(cosine: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&cosine) {
        return Err(RhoError::Domain(cosine));
    }
    Ok((1.0 - cosine.acos() / PI).ln())
}

/// Simple-LSH: `ln(1 - acos(S/M)/π) / ln(1 - acos(cS/M)/π)`.
pub fn rho_simple(s: f64, c: f64, m: f64) -> Result<RhoResult> {
    check_condition(s, c, m)?;
    let rho = srp_log_prob(s / m)? / srp_log_prob(c * s / m)?;
    Ok(RhoResult {
        rho,
        algorithm: MetaAlgorithm::SimpleLsh,
        s,
        c,
        norm_factor: m,
        tail_ignored: false,
    })
}

/// Cross-LSH: `(M + cS)(M - S) / ((M + S)(M - cS))`.
pub fn rho_cross(s: f64, c: f64, m: f64) -> Result<RhoResult> {
    check_condition(s, c, m)?;
    let rho = (m + c * s) * (m - s) / ((m + s) * (m - c * s));
    Ok(RhoResult {
        rho,
        algorithm: MetaAlgorithm::CrossLsh,
        s,
        c,
        norm_factor: m,
        tail_ignored: false,
    })
}

/// Sign-ALSH with the tail term dropped; equals [`rho_simple`] at
/// `S' = 2US/√m`.
pub fn rho_signalsh(s: f64, c: f64, m: f64, u: f64, tail_len: u32) -> Result<RhoResult> {
    check_condition(s, c, m)?;
    if !(u > 0.0 && u < 1.0) || tail_len == 0 {
        return Err(RhoError::InvalidCondition(format!(
            "need 0 < U < 1 and m >= 1, got U = {u}, m = {tail_len}"
        )));
    }
    let k = 2.0 * u / (m * (tail_len as f64).sqrt());
    let rho = srp_log_prob(k * s)? / srp_log_prob(k * c * s)?;
    Ok(RhoResult {
        rho,
        algorithm: MetaAlgorithm::SignAlsh,
        s,
        c,
        norm_factor: m,
        tail_ignored: true,
    })
}

fn l2alsh_rho(s: f64, c: f64, m: f64, u: f64, tail_len: u32, r: f64, with_tail: bool) -> Result<RhoResult> {
    check_condition(s, c, m)?;
    if !(u > 0.0 && u < 1.0) || tail_len == 0 || !(r > 0.0) {
        return Err(RhoError::InvalidCondition(format!(
            "need 0 < U < 1, m >= 1, r > 0; got U = {u}, m = {tail_len}, r = {r}"
        )));
    }
    let us = u * s / m;
    let base = 1.0 + tail_len as f64 / 4.0;
    let tail = if with_tail {
        us.powi(1 << (tail_len + 1).min(30))
    } else {
        0.0
    };
    let near = base - 2.0 * us + tail;
    let far = base - 2.0 * c * us;
    if !(near > 0.0 && far > 0.0) {
        return Err(RhoError::InvalidCondition("negative distance radicand".into()));
    }
    let p1 = collision_prob_l2(r, near.sqrt()).map_err(|e| RhoError::InvalidCondition(e.to_string()))?;
    let p2 = collision_prob_l2(r, far.sqrt()).map_err(|e| RhoError::InvalidCondition(e.to_string()))?;
    Ok(RhoResult {
        rho: p1.ln() / p2.ln(),
        algorithm: MetaAlgorithm::L2Alsh,
        s,
        c,
        norm_factor: m,
        tail_ignored: !with_tail,
    })
}

/// L2-ALSH quality including the `(US/M)^{2^{m+1}}` tail term.
pub fn rho_l2alsh(s: f64, c: f64, m: f64, u: f64, tail_len: u32, r: f64) -> Result<RhoResult> {
    l2alsh_rho(s, c, m, u, tail_len, r, true)
}

/// L2-ALSH quality with the tail term dropped.
pub fn rho_l2alsh_tail_ignored(s: f64, c: f64, m: f64, u: f64, tail_len: u32, r: f64) -> Result<RhoResult> {
    l2alsh_rho(s, c, m, u, tail_len, r, false)
}

/// Cross-polytope quality for Euclidean `(d, c)` search on the unit sphere:
/// `(1/c²)(4 - c²d²)/(4 - d²)`.
pub fn cross_rho_generic(d: f64, c: f64) -> Result<f64> {
    if !(d > 0.0 && d < 2.0) || !(c >= 1.0) || !(c * d < 2.0) {
        return Err(RhoError::InvalidCondition(format!(
            "need 0 < d < 2, c >= 1 and cd < 2; got d = {d}, c = {c}"
        )));
    }
    Ok((4.0 - c * c * d * d) / (c * c * (4.0 - d * d)))
}

/// Maps `(S, c)` inner-product search under normalization `M` to
/// `(d, c')` Euclidean search on the sphere: `d = sqrt(2 - 2S/M)`,
/// `c' = sqrt((M - cS)/(M - S))`.
pub fn mips_to_euclidean_params(s: f64, c: f64, m: f64) -> Result<(f64, f64)> {
    check_condition(s, c, m)?;
    if s >= m {
        return Err(RhoError::Degenerate);
    }
    Ok(((2.0 - 2.0 * s / m).sqrt(), ((m - c * s) / (m - s)).sqrt()))
}

/// `n^{α-ρ}/ln n + n^{α+(1-α)ρ*-ρ} + n^{β-αρ}`, the upper bound on the ratio
/// of norm-range to single-index query cost with `n^α` partitions of which at
/// most `n^β` keep the global quality `ρ`.
pub fn complexity_ratio(n: f64, alpha: f64, beta: f64, rho: f64, rho_star: f64) -> Result<f64> {
    let mut violations = Vec::new();
    if !(n >= 2.0) {
        violations.push(format!("n = {n} < 2"));
    }
    if !(rho_star < rho) {
        violations.push(format!("rho* = {rho_star} is not below rho = {rho}"));
    }
    let alpha_cap = rho.min((rho - rho_star) / (1.0 - rho_star));
    if !(alpha > 0.0 && alpha < alpha_cap) {
        violations.push(format!("alpha = {alpha} not in (0, {alpha_cap})"));
    }
    if !(beta > 0.0 && beta < alpha * rho) {
        violations.push(format!("beta = {beta} not in (0, {})", alpha * rho));
    }
    if !violations.is_empty() {
        return Err(RhoError::Preconditions(violations));
    }
    Ok(n.powf(alpha - rho) / n.ln()
        + n.powf(alpha + (1.0 - alpha) * rho_star - rho)
        + n.powf(beta - alpha * rho))
}

/// ALSH parameters used for curve emission.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveParams {
    pub l2_u: f64,
    pub l2_m: u32,
    pub l2_r: f64,
    pub sign_u: f64,
    pub sign_m: u32,
}

impl Default for CurveParams {
    fn default() -> Self {
        Self {
            l2_u: 0.83,
            l2_m: 3,
            l2_r: 2.5,
            sign_u: 0.75,
            sign_m: 2,
        }
    }
}

/// ρ of `algorithm` at `(S, c)` with normalization `M`; the ALSH variants
/// use the tail-free form.
pub fn rho_of(algorithm: MetaAlgorithm, s: f64, c: f64, m: f64, p: &CurveParams) -> Result<f64> {
    Ok(match algorithm {
        MetaAlgorithm::L2Alsh => rho_l2alsh_tail_ignored(s, c, m, p.l2_u, p.l2_m, p.l2_r)?.rho,
        MetaAlgorithm::SignAlsh => rho_signalsh(s, c, m, p.sign_u, p.sign_m)?.rho,
        MetaAlgorithm::SimpleLsh => rho_simple(s, c, m)?.rho,
        MetaAlgorithm::CrossLsh => rho_cross(s, c, m)?.rho,
    })
}

/// `count` evenly spaced points on `[lo, hi]`.
pub fn linear_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// 50 points on `[0.05, 0.95]`.
pub fn default_grid() -> Vec<f64> {
    linear_grid(0.05, 0.95, 50)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoRow {
    pub algorithm: MetaAlgorithm,
    pub s_over_m: f64,
    pub c: f64,
    /// `None` where the point is outside the calculator's domain.
    pub rho: Option<f64>,
}

/// Tabulates ρ over `s_grid × c_grid` (with `M = 1`) for every algorithm.
pub fn emit_rho_curves(
    algorithms: &[MetaAlgorithm],
    c_grid: &[f64],
    s_grid: &[f64],
    params: &CurveParams,
) -> Vec<RhoRow> {
    let mut rows = Vec::with_capacity(algorithms.len() * c_grid.len() * s_grid.len());
    for &algorithm in algorithms {
        for &s_over_m in s_grid {
            for &c in c_grid {
                rows.push(RhoRow {
                    algorithm,
                    s_over_m,
                    c,
                    rho: rho_of(algorithm, s_over_m, c, 1.0, params).ok(),
                });
            }
        }
    }
    rows
}

/// Writes `algorithm,S_over_M,c,rho`; out-of-domain points are written as `nan`.
pub fn write_rho_csv<W: Write>(rows: &[RhoRow], mut out: W) -> io::Result<()> {
    writeln!(out, "algorithm,S_over_M,c,rho")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{}",
            r.algorithm,
            crate::fmt_float(r.s_over_m),
            crate::fmt_float(r.c),
            r.rho.map_or_else(|| "nan".to_string(), crate::fmt_float)
        )?;
    }
    Ok(())
}

pub fn read_rho_csv<R: BufRead>(input: R) -> io::Result<Vec<RhoRow>> {
    let bad = |line: usize, what: &str| {
        io::Error::new(io::ErrorKind::InvalidData, format!("line {line}: {what}"))
    };
    let mut rows = Vec::new();
    for (i, line) in input.lines().enumerate().skip(1) {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(bad(i + 1, "expected 4 fields"));
        }
        let algorithm = f[0].parse().map_err(|e: String| bad(i + 1, &e))?;
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad(i + 1, "bad number"));
        let rho = num(f[3])?;
        rows.push(RhoRow {
            algorithm,
            s_over_m: num(f[1])?,
            c: num(f[2])?,
            rho: (!rho.is_nan()).then_some(rho),
        });
    }
    Ok(rows)
}
