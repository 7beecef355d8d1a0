//! Generalized KL divergence and inherent corpus noise.
//!
//! Ordinary KL divergence is infinite as soon as the data has a point the
//! model gives zero mass (lengths below the smallest valency). The
//! generalized form restricts the sum to the shared support and adds
//! `-λ ln λ`, where `λ` is the data mass on that shared support:
//!
//! ```text
//! gKL(P, Q) = -λ ln λ + Σ_{x ∈ supp P ∩ supp Q} P(x) ln(P(x) / Q(x))
//! ```
//!
//! It equals the KL divergence from the data to the best *augmented* model
//! (the model rescaled by `λ` plus a free distribution over the uncovered
//! points), so it is non-negative and reduces to KL when supports agree.
//! Everything is in nats.

use thiserror::Error;

use crate::histogram::{split_halves, split_halves_random, EmpiricalDistribution, HistogramError};
use crate::math::{ln, xlnx};
use crate::walk::Pmf;

const NORM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DivergenceError {
    #[error("{which} is not a probability distribution: {reason}")]
    NotADistribution {
        which: &'static str,
        reason: &'static str,
    },
    #[error("negative tolerance {0}")]
    NegativeTolerance(f64),
    #[error(transparent)]
    Histogram(#[from] HistogramError),
}

/// Sparse view of a distribution over positive lengths.
pub trait DiscreteDistribution {
    /// Probability of `x` (zero off the support).
    fn mass(&self, x: u32) -> f64;
    /// Points with positive probability, ascending.
    fn support(&self) -> impl Iterator<Item = (u32, f64)> + '_;
}

impl DiscreteDistribution for EmpiricalDistribution {
    fn mass(&self, x: u32) -> f64 {
        self.prob(x)
    }
    fn support(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.iter().filter(|&(_, p)| p > 0.0)
    }
}

impl DiscreteDistribution for Pmf {
    fn mass(&self, x: u32) -> f64 {
        self.get(x)
    }
    fn support(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.iter().filter(|&(_, p)| p > 0.0)
    }
}

/// Noise threshold `δ` in nats.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Tolerance(f64);

impl Tolerance {
    pub const ZERO: Tolerance = Tolerance(0.0);
    pub const INFINITE: Tolerance = Tolerance(f64::INFINITY);

    pub fn new(delta: f64) -> Result<Self, DivergenceError> {
        if delta.is_nan() || delta < 0.0 {
            return Err(DivergenceError::NegativeTolerance(delta));
        }
        Ok(Self(delta))
    }

    pub fn delta(self) -> f64 {
        self.0
    }

    /// `max(0, d - δ)`.
    pub fn clip(self, divergence: f64) -> f64 {
        if divergence <= self.0 {
            0.0
        } else {
            divergence - self.0
        }
    }

    pub fn admits(self, divergence: f64) -> bool {
        self.clip(divergence) == 0.0
    }
}

/// `gKL` together with the overlap mass it was computed from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Divergence {
    pub value: f64,
    /// Mass of `P` on `supp P ∩ supp Q`.
    pub lambda: f64,
    /// Set when the supports are disjoint (`λ = 0`): the value is then 0 by
    /// convention and says nothing about fit quality.
    pub zero_overlap: bool,
}

fn check(
    which: &'static str,
    d: &impl DiscreteDistribution,
    exact: bool,
) -> Result<(), DivergenceError> {
    let bad = |reason| DivergenceError::NotADistribution { which, reason };
    let mut sum = 0.0;
    for (_, p) in d.support() {
        if !p.is_finite() {
            return Err(bad("non-finite probability"));
        }
        sum += p;
    }
    if exact && (sum - 1.0).abs() > NORM_TOL {
        return Err(bad("does not sum to 1"));
    }
    if !exact && sum > 1.0 + NORM_TOL {
        return Err(bad("sums to more than 1"));
    }
    Ok(())
}

/// Generalized KL divergence with its overlap details.
///
/// `p` must sum to 1. `q` may be a truncated table (sum `<= 1`): only its
/// values on `supp p` enter the result.
pub fn gkl_detailed(
    p: &impl DiscreteDistribution,
    q: &impl DiscreteDistribution,
) -> Result<Divergence, DivergenceError> {
    check("p", p, true)?;
    check("q", q, false)?;
    let mut lambda = 0.0;
    let mut sum = 0.0;
    for (x, px) in p.support() {
        let qx = q.mass(x);
        if qx > 0.0 {
            lambda += px;
            sum += px * ln(px / qx);
        }
    }
    Ok(Divergence {
        value: sum - xlnx(lambda),
        lambda,
        zero_overlap: lambda == 0.0,
    })
}

/// Generalized KL divergence in nats.
pub fn gkl(
    p: &impl DiscreteDistribution,
    q: &impl DiscreteDistribution,
) -> Result<f64, DivergenceError> {
    gkl_detailed(p, q).map(|d| d.value)
}

/// `max(0, gKL(p, q) - δ)`; zero means `q` is tolerable for `p`.
pub fn gkl_delta(
    p: &impl DiscreteDistribution,
    q: &impl DiscreteDistribution,
    tol: Tolerance,
) -> Result<f64, DivergenceError> {
    gkl(p, q).map(|d| tol.clip(d))
}

pub fn tolerable(
    p: &impl DiscreteDistribution,
    q: &impl DiscreteDistribution,
    tol: Tolerance,
) -> Result<bool, DivergenceError> {
    gkl_delta(p, q, tol).map(|d| d == 0.0)
}

/// How a corpus is cut in two for the noise estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitKind {
    /// First `ceil(N/2)` records against the rest.
    FirstSecond,
    /// Seeded shuffle, then first/second.
    Random(u64),
}

/// Inherent noise `δ_D` of a corpus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseEstimate {
    pub delta: f64,
    pub split_kind: SplitKind,
    /// Both directions had disjoint supports.
    pub zero_overlap: bool,
}

impl NoiseEstimate {
    pub fn tolerance(&self) -> Tolerance {
        Tolerance(self.delta)
    }
}

/// `½ (gKL(D1, D2) + gKL(D2, D1))` between the empirical distributions of
/// the two halves of an ordered length stream.
pub fn inherent_noise(lengths: &[u32], split: SplitKind) -> Result<NoiseEstimate, DivergenceError> {
    let cutoff = lengths.iter().copied().max().unwrap_or(1).max(1);
    let (a, b) = match split {
        SplitKind::FirstSecond => split_halves(lengths, cutoff)?,
        SplitKind::Random(seed) => split_halves_random(lengths, cutoff, seed)?,
    };
    let (a, b) = (a.empirical()?, b.empirical()?);
    let ab = gkl_detailed(&a, &b)?;
    let ba = gkl_detailed(&b, &a)?;
    Ok(NoiseEstimate {
        delta: 0.5 * (ab.value + ba.value),
        split_kind: split,
        zero_overlap: ab.zero_overlap && ba.zero_overlap,
    })
}

/// Plain KL divergence over `p`'s support, `+∞` when `q` misses any of it.
pub fn kl(p: &impl DiscreteDistribution, q: &impl DiscreteDistribution) -> f64 {
    p.support()
        .map(|(x, px)| match q.mass(x) {
            qx if qx > 0.0 => px * ln(px / qx),
            _ => f64::INFINITY,
        })
        .sum()
}
