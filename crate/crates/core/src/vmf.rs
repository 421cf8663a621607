//! von Mises–Fisher statistics on the unit hypersphere.
//!
//! Word vectors of one type are modelled as draws from a vMF distribution
//! with density proportional to `exp(kappa * mu^T x)`. Everything here works
//! from the mean vector `x̄` of unit vectors and its norm `l`:
//!
//! * `kappa ≈ l (d - l²) / (1 - l²)` is the closed-form approximation of
//!   the maximum-likelihood concentration, and `mu = x̄ / l`.
//! * The coverage score `l_T (1 - l_S²) / (l_S (1 - l_T²))` approximates
//!   `kappa_T / kappa_S` when `d` is large.
//! * The representativeness of an instance `x` is
//!   `(x̄_S / (1 - l_S²) - x̄_T / (1 - l_T²))^T x`, the `x`-dependent part of
//!   the log-likelihood ratio between the source and target fits with the
//!   common `d - l²` factors dropped.
//!
//! The normalizing constant of the density is never evaluated; every score
//! depends on `x` only through the exponent.
//!
//! Mean norms are clamped to `[NORM_FLOOR, NORM_CEILING]` before scoring.
//! Both scores are singular at `l = 1` (all instances identical) and
//! coverage is singular at `l = 0`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, StandardNormal};
use serde::Serialize;

use crate::aggregate::TypeStats;
use crate::error::{Error, Result};

pub const NORM_FLOOR: f64 = 1e-9;
pub const NORM_CEILING: f64 = 1.0 - 1e-6;

/// Accumulated rounding may push a mean norm of unit vectors slightly
/// above one.
const NORM_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClampedNorm {
    pub value: f64,
    /// The raw norm reached the upper clamp: effectively identical contexts.
    pub degenerate: bool,
}

pub fn clamp_norm(l: f64) -> Result<ClampedNorm> {
    check_norm(l)?;
    Ok(ClampedNorm {
        value: l.clamp(NORM_FLOOR, NORM_CEILING),
        degenerate: l >= NORM_CEILING,
    })
}

fn check_norm(l: f64) -> Result<()> {
    if !l.is_finite() {
        return Err(Error::NonFinite);
    }
    if !(0.0..=1.0 + NORM_SLACK).contains(&l) {
        return Err(Error::invalid(format!("mean norm {l} outside [0, 1]")));
    }
    Ok(())
}

/// `1 - l²`, factored to keep precision near `l = 1`.
fn one_minus_sq(l: f64) -> f64 {
    (1.0 - l) * (1.0 + l)
}

/// Base of the reported log-coverage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum LogBase {
    #[default]
    #[serde(rename = "e")]
    E,
    #[serde(rename = "10")]
    Ten,
}

impl LogBase {
    /// Convert a natural logarithm to this base.
    pub fn from_ln(self, ln: f64) -> f64 {
        match self {
            LogBase::E => ln,
            LogBase::Ten => ln / std::f64::consts::LN_10,
        }
    }
}

impl FromStr for LogBase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "e" => Ok(LogBase::E),
            "10" => Ok(LogBase::Ten),
            other => Err(Error::invalid(format!(
                "unknown log base {other:?} (expected e or 10)"
            ))),
        }
    }
}

impl fmt::Display for LogBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LogBase::E => "e",
            LogBase::Ten => "10",
        })
    }
}

/// Fitted mean direction and concentration.
#[derive(Debug, Clone, PartialEq)]
pub struct VmfParams {
    mu: Vec<f64>,
    kappa: f64,
}

impl VmfParams {
    pub fn new(mu: Vec<f64>, kappa: f64) -> Result<Self> {
        if mu.len() < 2 {
            return Err(Error::invalid("vMF needs dimension >= 2"));
        }
        if mu.iter().any(|v| !v.is_finite()) || !kappa.is_finite() {
            return Err(Error::NonFinite);
        }
        let norm = mu.iter().map(|v| v * v).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::invalid(format!("mean direction has norm {norm}, expected 1")));
        }
        if kappa < 0.0 {
            return Err(Error::invalid(format!("negative concentration {kappa}")));
        }
        Ok(VmfParams { mu, kappa })
    }

    /// Maximum-likelihood fit from aggregated statistics.
    pub fn fit(stats: &TypeStats) -> Result<Self> {
        let mu = estimate_mu(stats)?;
        let kappa = estimate_kappa(stats.mean_norm(), stats.dim())?;
        VmfParams::new(mu, kappa)
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }
}

/// Approximate ML concentration `l (d - l²) / (1 - l²)`.
///
/// Only the upper clamp applies here, so `l = 0` yields exactly zero.
pub fn estimate_kappa(l: f64, d: usize) -> Result<f64> {
    if d < 2 {
        return Err(Error::invalid(format!("dimension {d} < 2")));
    }
    check_norm(l)?;
    let l = l.min(NORM_CEILING);
    Ok(l * (d as f64 - l * l) / one_minus_sq(l))
}

/// ML mean direction `x̄ / l`.
pub fn estimate_mu(stats: &TypeStats) -> Result<Vec<f64>> {
    let l = stats.mean_norm();
    if l.is_nan() || l <= 0.0 {
        return Err(Error::UndefinedDirection);
    }
    Ok(stats.mean().iter().map(|m| m / l).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoveragePair {
    /// Clamped source norm.
    pub l_source: f64,
    /// Clamped target norm.
    pub l_target: f64,
    pub coverage: f64,
    /// Natural logarithm of `coverage`.
    pub log_coverage: f64,
    pub degenerate: bool,
}

/// Coverage score: large when the word covers wider meanings in the source
/// than in the target.
pub fn coverage(l_source: f64, l_target: f64) -> Result<CoveragePair> {
    let s = clamp_norm(l_source)?;
    let t = clamp_norm(l_target)?;
    let coverage = (t.value * one_minus_sq(s.value)) / (s.value * one_minus_sq(t.value));
    Ok(CoveragePair {
        l_source: s.value,
        l_target: t.value,
        coverage,
        log_coverage: coverage.ln(),
        degenerate: s.degenerate || t.degenerate,
    })
}

/// `kappa_T / kappa_S` with both concentrations from [`estimate_kappa`],
/// before the large-`d` simplification that gives [`coverage`].
pub fn kappa_ratio_exact(l_source: f64, l_target: f64, d: usize) -> Result<f64> {
    let s = clamp_norm(l_source)?.value;
    let t = clamp_norm(l_target)?.value;
    let kappa_s = estimate_kappa(s, d)?;
    let kappa_t = estimate_kappa(t, d)?;
    if kappa_s == 0.0 {
        return Err(Error::invalid("source concentration is zero"));
    }
    Ok(kappa_t / kappa_s)
}

fn check_pair(source: &TypeStats, target: &TypeStats) -> Result<(f64, f64)> {
    if source.dim() != target.dim() {
        return Err(Error::DimensionMismatch {
            expected: source.dim(),
            found: target.dim(),
        });
    }
    let s = clamp_norm(source.mean_norm())?.value;
    let t = clamp_norm(target.mean_norm())?.value;
    Ok((s, t))
}

fn weighted_difference(source: &TypeStats, ws: f64, target: &TypeStats, wt: f64) -> Result<Vec<f64>> {
    let weights: Vec<f64> = source
        .mean()
        .iter()
        .zip(target.mean())
        .map(|(a, b)| ws * a - wt * b)
        .collect();
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(weights)
}

/// Weight vector `x̄_S / (1 - l_S²) - x̄_T / (1 - l_T²)`; representativeness
/// of `x` is its dot product with `x`.
pub fn representativeness_weights(source: &TypeStats, target: &TypeStats) -> Result<Vec<f64>> {
    let (s, t) = check_pair(source, target)?;
    weighted_difference(source, 1.0 / one_minus_sq(s), target, 1.0 / one_minus_sq(t))
}

/// Exact `x`-dependent LLR weights `kappa_S mu_S - kappa_T mu_T`, which
/// expand to `(d - l_S²)/(1 - l_S²) x̄_S - (d - l_T²)/(1 - l_T²) x̄_T`.
pub fn llr_weights_exact(source: &TypeStats, target: &TypeStats) -> Result<Vec<f64>> {
    let (s, t) = check_pair(source, target)?;
    let d = source.dim() as f64;
    weighted_difference(
        source,
        (d - s * s) / one_minus_sq(s),
        target,
        (d - t * t) / one_minus_sq(t),
    )
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Score `x` against precomputed weights.
pub fn score(weights: &[f64], x: &[f64]) -> Result<f64> {
    if weights.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: weights.len(),
            found: x.len(),
        });
    }
    let r = dot(weights, x);
    if !r.is_finite() {
        return Err(Error::NonFinite);
    }
    Ok(r)
}

pub fn representativeness(x: &[f64], source: &TypeStats, target: &TypeStats) -> Result<f64> {
    score(&representativeness_weights(source, target)?, x)
}

/// Uniformly random unit vector.
pub fn random_unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = dot(&v, &v).sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Draw `count` samples from vMF(`mu`, `kappa`), deterministic in `seed`.
pub fn sample_vmf(mu: &[f64], kappa: f64, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_vmf_with(mu, kappa, count, &mut rng)
}

/// Wood's sampler: the component `w` along `mu` is drawn by rejection from
/// a transformed Beta proposal, and the remainder points in a uniformly
/// random direction orthogonal to `mu`.
pub fn sample_vmf_with<R: Rng + ?Sized>(
    mu: &[f64],
    kappa: f64,
    count: usize,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    let params = VmfParams::new(mu.to_vec(), kappa)?;
    if count < 1 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    let d = params.dim();
    let m = (d - 1) as f64;
    let b = m / (2.0 * kappa + (4.0 * kappa * kappa + m * m).sqrt());
    let x0 = (1.0 - b) / (1.0 + b);
    let c = kappa * x0 + m * one_minus_sq(x0).ln();
    let beta = Beta::new(m / 2.0, m / 2.0).map_err(|e| Error::invalid(e.to_string()))?;

    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let w = loop {
            let z: f64 = beta.sample(rng);
            let w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
            let u: f64 = rng.random();
            if kappa * w + m * (1.0 - x0 * w).ln() - c >= u.ln() {
                break w.clamp(-1.0, 1.0);
            }
        };
        let tangent = loop {
            let mut v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let along = dot(&v, params.mu());
            for (vi, mi) in v.iter_mut().zip(params.mu()) {
                *vi -= along * mi;
            }
            let norm = dot(&v, &v).sqrt();
            if norm > 1e-12 {
                break v.into_iter().map(|x| x / norm).collect::<Vec<_>>();
            }
        };
        let radial = one_minus_sq(w).max(0.0).sqrt();
        let x: Vec<f64> = params
            .mu()
            .iter()
            .zip(&tangent)
            .map(|(mi, ti)| w * mi + radial * ti)
            .collect();
        let norm = dot(&x, &x).sqrt();
        out.push(x.into_iter().map(|v| v / norm).collect());
    }
    Ok(out)
}
