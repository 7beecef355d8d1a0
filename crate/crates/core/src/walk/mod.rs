//! The valency random walk and its return-time distribution.
//!
//! A walk starts at height `k` and moves by `s ∈ {-1, 0, .., r}` with
//! probability `p_s` each step. Its return time `τ_k` (first hit of zero) is
//! the modelled sentence length. With the step polynomial
//! `F(u) = Σ_s p_s u^(s+1)`, Lagrange inversion gives
//!
//! ```text
//! P(τ_k = i) = (k / i) · [u^(i-k)] F(u)^i
//! ```
//!
//! which [`return_time_pmf`] evaluates by repeated truncated multiplication.
//! [`oracle::series_inversion_oracle`] computes the same numbers through the
//! functional equation `f = x·F(f)` as an independent check.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

pub mod oracle;
pub(crate) mod pmf;
pub mod poly;
mod sample;

pub use pmf::{mixture_pmf, pmf_gradient, pmf_gradient_full, return_time_pmf, Jacobian, Pmf};
pub use sample::{sample, sample_lengths, SampleOutcome, MAX_WALK_STEPS};

/// Lower bound for every step probability and mixture weight of a fitted
/// model. Keeps logarithms and Hessians finite.
pub const EPS_FLOOR: f64 = 1e-6;

/// Largest upward step supported.
pub const MAX_ORDER: u8 = 3;

/// Largest total valency a mixture component may have.
pub const MAX_VALENCY: u32 = 5;

const SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WalkError {
    #[error("order must be 1, 2 or 3 (got {0})")]
    BadOrder(usize),
    #[error("step probabilities must be finite and non-negative")]
    NegativeProbability,
    #[error("probabilities sum to {0}, expected 1")]
    NotNormalized(f64),
    #[error("total valency must be in 1..=5 (got {0})")]
    BadValency(u32),
    #[error("mixture needs at least one component")]
    EmptyMixture,
    #[error("component valencies must be strictly increasing")]
    UnorderedValencies,
    #[error("all components must share one order")]
    MixedOrders,
    #[error("mixture weights must be positive")]
    NonPositiveWeight,
    #[error("weight count {weights} does not match component count {components}")]
    WeightCount { weights: usize, components: usize },
    #[error("truncation length {len} is below the minimal valency {k}")]
    TooShort { len: u32, k: u32 },
    #[error("parameter vector has length {got}, expected {expected}")]
    ParamLength { got: usize, expected: usize },
    #[error("cannot parse model id {0:?}")]
    BadId(String),
}

/// Step distribution `(p_-1, p_0, .., p_r)`.
///
/// The constructor accepts zero entries so that degenerate walks can be
/// evaluated exactly; fitted models are always kept at or above
/// [`EPS_FLOOR`].
#[derive(Debug, Clone, PartialEq)]
pub struct StepLaw {
    probs: Vec<f64>,
}

impl StepLaw {
    pub fn new(probs: Vec<f64>) -> Result<Self, WalkError> {
        if !(3..=MAX_ORDER as usize + 2).contains(&probs.len()) {
            return Err(WalkError::BadOrder(probs.len().saturating_sub(2)));
        }
        check_simplex(&probs)?;
        Ok(Self { probs })
    }

    pub fn uniform(order: u8) -> Self {
        let d = order as usize + 2;
        Self {
            probs: alloc::vec![1.0 / d as f64; d],
        }
    }

    /// Maximum upward step `r`.
    pub fn order(&self) -> u8 {
        (self.probs.len() - 2) as u8
    }

    /// `probs()[s + 1]` is the probability of step `s`.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn p(&self, step: i32) -> f64 {
        self.probs[(step + 1) as usize]
    }

    /// Expected step `Σ s·p_s`. The walk returns almost surely iff this is
    /// `<= 0`, and has finite mean return time `k / -drift` iff it is `< 0`.
    pub fn drift(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, p)| (i as f64 - 1.0) * p)
            .sum()
    }

    pub fn is_interior(&self, floor: f64) -> bool {
        self.probs.iter().all(|&p| p >= floor)
    }
}

pub(crate) fn check_simplex(probs: &[f64]) -> Result<(), WalkError> {
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(WalkError::NegativeProbability);
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > SUM_TOL {
        return Err(WalkError::NotNormalized(sum));
    }
    Ok(())
}

/// One walk: start height `k` and step law.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkComponent {
    pub k: u32,
    pub steps: StepLaw,
}

impl WalkComponent {
    pub fn new(k: u32, steps: StepLaw) -> Result<Self, WalkError> {
        if !(1..=MAX_VALENCY).contains(&k) {
            return Err(WalkError::BadValency(k));
        }
        Ok(Self { k, steps })
    }

    /// Mean return time `k / -drift`, or `None` when it is infinite.
    pub fn mean_return_time(&self) -> Option<f64> {
        let d = self.steps.drift();
        (d < 0.0).then(|| self.k as f64 / -d)
    }
}

/// Discrete shape of a model: the order and the set of total valencies.
///
/// Identified as `<order>.k<set>`, where runs of three or more consecutive
/// valencies are written as ranges: `1.k3`, `1.k2.3`, `3.k1-5`, `3.k1.3-5`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ModelStructure {
    order: u8,
    ks: Vec<u32>,
}

impl ModelStructure {
    pub fn new(order: u8, mut ks: Vec<u32>) -> Result<Self, WalkError> {
        if !(1..=MAX_ORDER).contains(&order) {
            return Err(WalkError::BadOrder(order as usize));
        }
        if ks.is_empty() {
            return Err(WalkError::EmptyMixture);
        }
        if let Some(&k) = ks.iter().find(|&&k| !(1..=MAX_VALENCY).contains(&k)) {
            return Err(WalkError::BadValency(k));
        }
        ks.sort_unstable();
        if ks.windows(2).any(|w| w[0] == w[1]) {
            return Err(WalkError::UnorderedValencies);
        }
        Ok(Self { order, ks })
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    pub fn valencies(&self) -> &[u32] {
        &self.ks
    }

    pub fn components(&self) -> usize {
        self.ks.len()
    }

    pub fn min_valency(&self) -> u32 {
        self.ks[0]
    }

    /// Number of step probabilities per component, `r + 2`.
    pub fn step_len(&self) -> usize {
        self.order as usize + 2
    }

    /// Free continuous parameters: `m(r+1)` step coordinates plus `m-1`
    /// weights.
    pub fn dims(&self) -> usize {
        let m = self.components();
        m * (self.order as usize + 1) + (m - 1)
    }

    /// Bitmap of the valency set, bit `k-1` for valency `k`.
    pub fn valency_mask(&self) -> u8 {
        self.ks.iter().fold(0, |acc, &k| acc | 1 << (k - 1))
    }

    pub fn id(&self) -> String {
        format!("{self}")
    }

    /// All `3 × 31` structures: every order with every nonempty subset of
    /// `{1, .., 5}`, in canonical order.
    pub fn all() -> Vec<ModelStructure> {
        let mut out: Vec<ModelStructure> = (1..=MAX_ORDER)
            .flat_map(|order| {
                (1u8..32).map(move |mask| {
                    let ks = (1..=MAX_VALENCY)
                        .filter(|k| mask & (1 << (k - 1)) != 0)
                        .collect();
                    ModelStructure { order, ks }
                })
            })
            .collect();
        out.sort();
        out
    }
}

impl Ord for ModelStructure {
    fn cmp(&self, other: &Self) -> Ordering {
        self.order
            .cmp(&other.order)
            .then_with(|| self.ks.cmp(&other.ks))
    }
}

impl PartialOrd for ModelStructure {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for ModelStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.k", self.order)?;
        let ks = &self.ks;
        let mut i = 0;
        let mut first = true;
        while i < ks.len() {
            let mut j = i;
            while j + 1 < ks.len() && ks[j + 1] == ks[j] + 1 {
                j += 1;
            }
            if !first {
                f.write_str(".")?;
            }
            first = false;
            if j - i >= 2 {
                write!(f, "{}-{}", ks[i], ks[j])?;
                i = j + 1;
            } else {
                write!(f, "{}", ks[i])?;
                i += 1;
            }
        }
        Ok(())
    }
}

impl FromStr for ModelStructure {
    type Err = WalkError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || WalkError::BadId(String::from(s));
        let (order, rest) = s.split_once(".k").ok_or_else(bad)?;
        let order: u8 = order.parse().map_err(|_| bad())?;
        let mut ks = Vec::new();
        for part in rest.split('.') {
            match part.split_once('-') {
                Some((a, b)) => {
                    let a: u32 = a.parse().map_err(|_| bad())?;
                    let b: u32 = b.parse().map_err(|_| bad())?;
                    if a >= b {
                        return Err(bad());
                    }
                    ks.extend(a..=b);
                }
                None => ks.push(part.parse().map_err(|_| bad())?),
            }
        }
        let sorted = ks.windows(2).all(|w| w[0] < w[1]);
        if !sorted {
            return Err(bad());
        }
        ModelStructure::new(order, ks)
    }
}

/// Mixture of walks sharing one order, with distinct, increasing valencies.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureModel {
    weights: Vec<f64>,
    components: Vec<WalkComponent>,
}

impl MixtureModel {
    pub fn new(weights: Vec<f64>, components: Vec<WalkComponent>) -> Result<Self, WalkError> {
        if components.is_empty() {
            return Err(WalkError::EmptyMixture);
        }
        if weights.len() != components.len() {
            return Err(WalkError::WeightCount {
                weights: weights.len(),
                components: components.len(),
            });
        }
        if components.windows(2).any(|w| w[0].k >= w[1].k) {
            return Err(WalkError::UnorderedValencies);
        }
        let order = components[0].steps.order();
        if components.iter().any(|c| c.steps.order() != order) {
            return Err(WalkError::MixedOrders);
        }
        if weights.iter().any(|&w| w.is_nan() || w <= 0.0) {
            return Err(WalkError::NonPositiveWeight);
        }
        check_simplex(&weights)?;
        Ok(Self {
            weights,
            components,
        })
    }

    pub fn single(component: WalkComponent) -> Self {
        Self {
            weights: alloc::vec![1.0],
            components: alloc::vec![component],
        }
    }

    /// Uniform step laws and uniform weights: the fitting start point.
    pub fn uniform(structure: &ModelStructure) -> Self {
        let m = structure.components();
        Self {
            weights: alloc::vec![1.0 / m as f64; m],
            components: structure
                .valencies()
                .iter()
                .map(|&k| WalkComponent {
                    k,
                    steps: StepLaw::uniform(structure.order()),
                })
                .collect(),
        }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[WalkComponent] {
        &self.components
    }

    pub fn order(&self) -> u8 {
        self.components[0].steps.order()
    }

    pub fn min_valency(&self) -> u32 {
        self.components[0].k
    }

    pub fn structure(&self) -> ModelStructure {
        ModelStructure {
            order: self.order(),
            ks: self.components.iter().map(|c| c.k).collect(),
        }
    }

    pub fn id(&self) -> String {
        self.structure().id()
    }

    /// True when every step probability and weight is at least `floor`.
    pub fn is_interior(&self, floor: f64) -> bool {
        self.weights.iter().all(|&w| w >= floor)
            && self.components.iter().all(|c| c.steps.is_interior(floor))
    }

    /// All parameters as a flat vector: each component's step law in turn,
    /// followed by the weights.
    pub fn full_params(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .components
            .iter()
            .flat_map(|c| c.steps.probs().iter().copied())
            .collect();
        out.extend_from_slice(&self.weights);
        out
    }

    /// Reduced simplex coordinates: the full vector with the last entry of
    /// every block dropped. Length [`ModelStructure::dims`].
    pub fn reduced_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.structure().dims());
        for c in &self.components {
            let p = c.steps.probs();
            out.extend_from_slice(&p[..p.len() - 1]);
        }
        out.extend_from_slice(&self.weights[..self.weights.len() - 1]);
        out
    }

    /// Rebuilds a model from reduced coordinates; each block's last entry is
    /// `1 - Σ(others)`. Fails if that leaves the simplex.
    pub fn from_reduced(structure: &ModelStructure, params: &[f64]) -> Result<Self, WalkError> {
        let d = structure.step_len();
        let m = structure.components();
        if params.len() != structure.dims() {
            return Err(WalkError::ParamLength {
                got: params.len(),
                expected: structure.dims(),
            });
        }
        let complete = |free: &[f64]| {
            let mut v = free.to_vec();
            v.push(1.0 - free.iter().sum::<f64>());
            v
        };
        let components = structure
            .valencies()
            .iter()
            .enumerate()
            .map(|(j, &k)| {
                let steps = StepLaw::new(complete(&params[j * (d - 1)..(j + 1) * (d - 1)]))?;
                Ok(WalkComponent { k, steps })
            })
            .collect::<Result<Vec<_>, WalkError>>()?;
        let weights = complete(&params[m * (d - 1)..]);
        Self::new(weights, components)
    }

    /// Model from full-coordinate blocks without re-validating
    /// normalization beyond the constructor's tolerance.
    pub fn from_full(structure: &ModelStructure, params: &[f64]) -> Result<Self, WalkError> {
        let d = structure.step_len();
        let m = structure.components();
        if params.len() != m * d + m {
            return Err(WalkError::ParamLength {
                got: params.len(),
                expected: m * d + m,
            });
        }
        let components = structure
            .valencies()
            .iter()
            .enumerate()
            .map(|(j, &k)| {
                Ok(WalkComponent {
                    k,
                    steps: StepLaw::new(params[j * d..(j + 1) * d].to_vec())?,
                })
            })
            .collect::<Result<Vec<_>, WalkError>>()?;
        Self::new(params[m * d..].to_vec(), components)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    #[test]
    fn ids_follow_the_range_convention() {
        let cases = [
            (1, vec![3], "1.k3"),
            (1, vec![2, 3], "1.k2.3"),
            (3, vec![1, 2, 3, 4, 5], "3.k1-5"),
            (3, vec![1, 3, 4, 5], "3.k1.3-5"),
            (3, vec![1, 2, 4, 5], "3.k1.2.4.5"),
            (3, vec![2, 3, 5], "3.k2.3.5"),
            (1, vec![1, 2, 3, 4], "1.k1-4"),
            (2, vec![4], "2.k4"),
        ];
        for (order, ks, id) in cases {
            let s = ModelStructure::new(order, ks).unwrap();
            assert_eq!(s.to_string(), id);
            assert_eq!(id.parse::<ModelStructure>().unwrap(), s);
        }
        assert!("1.k".parse::<ModelStructure>().is_err());
        assert!("4.k1".parse::<ModelStructure>().is_err());
        assert!("1.k6".parse::<ModelStructure>().is_err());
        assert!("1.k3.2".parse::<ModelStructure>().is_err());
    }

    #[test]
    fn ninety_three_structures() {
        let all = ModelStructure::all();
        assert_eq!(all.len(), 93);
        let mut ids: Vec<String> = all.iter().map(|s| s.id()).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 93);
        assert!(all.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn dims_match_hand_counts() {
        let cases = [
            ("1.k3", 2),
            ("2.k4", 3),
            ("1.k2.3", 5),
            ("3.k1-5", 24),
            ("2.k2.5", 7),
        ];
        for (id, d) in cases {
            assert_eq!(id.parse::<ModelStructure>().unwrap().dims(), d, "{id}");
        }
    }

    #[test]
    fn reduced_roundtrip() {
        let s: ModelStructure = "2.k1.4".parse().unwrap();
        let m = MixtureModel::uniform(&s);
        let r = m.reduced_params();
        assert_eq!(r.len(), s.dims());
        let back = MixtureModel::from_reduced(&s, &r).unwrap();
        for (a, b) in back.full_params().iter().zip(m.full_params()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn validation_errors() {
        assert!(StepLaw::new(vec![0.5, 0.5]).is_err());
        assert!(StepLaw::new(vec![0.5, 0.6, -0.1]).is_err());
        assert!(StepLaw::new(vec![0.5, 0.25, 0.2]).is_err());
        let c = |k| WalkComponent::new(k, StepLaw::uniform(1)).unwrap();
        assert_eq!(
            MixtureModel::new(vec![0.5, 0.5], vec![c(3), c(2)]),
            Err(WalkError::UnorderedValencies)
        );
        assert_eq!(
            MixtureModel::new(vec![1.0, 0.0], vec![c(1), c(2)]),
            Err(WalkError::NonPositiveWeight)
        );
        let mixed = WalkComponent::new(4, StepLaw::uniform(2)).unwrap();
        assert_eq!(
            MixtureModel::new(vec![0.5, 0.5], vec![c(1), mixed]),
            Err(WalkError::MixedOrders)
        );
        assert!(WalkComponent::new(6, StepLaw::uniform(1)).is_err());
    }

    #[test]
    fn drift_and_mean() {
        let s = StepLaw::new(vec![0.5, 0.25, 0.25]).unwrap();
        assert!((s.drift() + 0.25).abs() < 1e-15);
        let c = WalkComponent::new(3, s).unwrap();
        assert!((c.mean_return_time().unwrap() - 12.0).abs() < 1e-12);
    }
}
