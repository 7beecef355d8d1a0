//! Tolerance-aware Bayesian model comparison.
//!
//! Each fitted model is extended to an *augmented* model that puts the data
//! mass it cannot explain (lengths below its smallest valency) on a free
//! auxiliary distribution. The Laplace approximation of the evidence, per
//! datum and with the data entropy subtracted, is then
//!
//! ```text
//! total(n) = gKL_δ + (ln Vol_model + ln Vol_aux) / n
//!          + (ln det H_model + ln det H_aux) / 2n + d' ln(n / 2π) / 2n
//! ```
//!
//! where `H` is the Hessian of the per-datum cross entropy in reduced simplex
//! coordinates and `d'` counts model and auxiliary dimensions. Smaller is
//! better. At `n = ∞` the score is replaced by an explicit lexicographic
//! order: tolerable before non-tolerable, then fewer dimensions, then volume
//! and curvature.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::f64::consts::TAU;
use core::fmt;

use thiserror::Error;

use crate::divergence::{gkl_detailed, Tolerance};
use crate::fit::FitResult;
use crate::histogram::EmpiricalDistribution;
use crate::linalg::SquareMatrix;
use crate::math::ln;
use crate::objective::{Objective, ObjectiveError};
use crate::simplex::ln_volume;
use crate::walk::pmf::block_sizes;
use crate::walk::{mixture_pmf, MixtureModel, ModelStructure};

/// Largest central-difference step for the model Hessian.
pub const HESSIAN_STEP: f64 = 1e-4;
/// Added to the Hessian diagonal before factorization.
pub const HESSIAN_JITTER: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvidenceError {
    #[error("sample size must be positive")]
    InvalidSampleSize,
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
}

/// Number of data points the score is evaluated at.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SampleSize {
    Finite(f64),
    Infinite,
}

impl SampleSize {
    pub fn finite(n: f64) -> Result<Self, EvidenceError> {
        if n > 0.0 && n.is_finite() {
            Ok(Self::Finite(n))
        } else {
            Err(EvidenceError::InvalidSampleSize)
        }
    }

    /// `1e3, 1e4, 1e5, 1e6, 1e9, ∞`
    pub fn default_grid() -> Vec<SampleSize> {
        let mut v: Vec<_> = [1e3, 1e4, 1e5, 1e6, 1e9]
            .into_iter()
            .map(Self::Finite)
            .collect();
        v.push(Self::Infinite);
        v
    }
}

impl fmt::Display for SampleSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::Infinite => f.write_str("inf"),
            Self::Finite(n) => {
                let units = [(1e9, "G"), (1e6, "M"), (1e3, "k")];
                for (scale, suffix) in units {
                    if n >= scale && n % scale == 0.0 {
                        return write!(f, "{}{suffix}", n / scale);
                    }
                }
                write!(f, "{n}")
            }
        }
    }
}

/// A fitted model together with the auxiliary distribution over the data
/// points it gives no mass.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedModel {
    pub base: MixtureModel,
    /// Data mass on the model's support.
    pub lambda: f64,
    /// Uncovered data lengths with their optimal auxiliary probabilities
    /// `p_x / (1 - λ)`, ascending.
    pub aux: Vec<(u32, f64)>,
    /// Data mass of each uncovered length, in the order of `aux`.
    pub aux_data: Vec<f64>,
    /// `gKL(data, base)`.
    pub gkl: f64,
    /// The model and the data share no support.
    pub zero_overlap: bool,
}

impl AugmentedModel {
    /// Number of uncovered data points.
    pub fn uncovered(&self) -> usize {
        self.aux.len()
    }

    /// Free auxiliary dimensions: `u - 1` for `u >= 2`, else 0.
    pub fn aux_dims(&self) -> usize {
        self.aux.len().saturating_sub(1)
    }

    /// `ln Vol` of the auxiliary simplex.
    pub fn aux_ln_volume(&self) -> f64 {
        ln_volume(self.aux.len())
    }

    /// `ln det` of the auxiliary cross-entropy Hessian at the optimum, in
    /// reduced coordinates: `(2u - 1) ln(1 - λ) - Σ ln p_x`.
    pub fn aux_ln_det(&self) -> f64 {
        let u = self.aux.len();
        if u <= 1 {
            return 0.0;
        }
        let rest: f64 = self.aux_data.iter().sum();
        (2 * u - 1) as f64 * ln(rest) - self.aux_data.iter().map(|&p| ln(p)).sum::<f64>()
    }

    /// `d'` of the augmented model.
    pub fn d_prime(&self) -> usize {
        self.base.structure().dims() + self.aux_dims()
    }
}

/// Builds the augmented model of `model` for `data`.
pub fn augment(data: &EmpiricalDistribution, model: &MixtureModel) -> AugmentedModel {
    let len = data.max_length().unwrap_or(0).max(model.min_valency());
    let pmf = mixture_pmf(model, len).expect("length covers min valency");
    let div = gkl_detailed(data, &pmf).expect("empirical data and model pmf are distributions");
    let (aux, aux_data) = if div.lambda < 1.0 {
        let uncovered: Vec<(u32, f64)> = data
            .iter()
            .filter(|&(x, p)| p > 0.0 && pmf.get(x) <= 0.0)
            .collect();
        let rest: f64 = uncovered.iter().map(|&(_, p)| p).sum();
        (
            uncovered.iter().map(|&(x, p)| (x, p / rest)).collect(),
            uncovered.iter().map(|&(_, p)| p).collect(),
        )
    } else {
        (Vec::new(), Vec::new())
    };
    AugmentedModel {
        base: model.clone(),
        lambda: div.lambda,
        aux,
        aux_data,
        gkl: div.value,
        zero_overlap: div.zero_overlap,
    }
}

/// `ln Vol` of a structure's parameter region in reduced coordinates.
pub fn model_volume(s: &ModelStructure) -> f64 {
    let m = s.components();
    m as f64 * ln_volume(s.step_len()) + ln_volume(m)
}

/// `ln det` of the cross-entropy Hessian at `model`, by central differences
/// of the analytic gradient in reduced coordinates.
///
/// The step along each coordinate is `HESSIAN_STEP`, shrunk to half the
/// distance to the simplex boundary for parameters close to it. Returns
/// `None` when the symmetrized, jittered Hessian is not positive definite.
pub fn hessian_logdet(obj: &Objective, model: &MixtureModel) -> Option<f64> {
    let s = obj.structure();
    let x = model.reduced_params();
    let full = model.full_params();
    let n = x.len();
    let mut steps = Vec::with_capacity(n);
    let mut fi = 0;
    for b in block_sizes(model) {
        let last = full[fi + b - 1];
        for t in 0..b - 1 {
            steps.push(HESSIAN_STEP.min(0.5 * full[fi + t]).min(0.5 * last));
        }
        fi += b;
    }
    let mut h = SquareMatrix::zeros(n);
    let mut probe = x.clone();
    for (i, &step) in steps.iter().enumerate() {
        probe[i] = x[i] + step;
        let (_, gp) = obj.value_and_grad(&MixtureModel::from_reduced(s, &probe).ok()?);
        probe[i] = x[i] - step;
        let (_, gm) = obj.value_and_grad(&MixtureModel::from_reduced(s, &probe).ok()?);
        probe[i] = x[i];
        for j in 0..n {
            h.set(j, i, (gp[j] - gm[j]) / (2.0 * step));
        }
    }
    h.symmetrize();
    h.add_diagonal(HESSIAN_JITTER);
    h.ln_det_spd()
}

/// Evidence ingredients of one fitted model.
#[derive(Debug, Clone, PartialEq)]
pub struct EvidenceScore {
    pub structure: ModelStructure,
    /// `gKL(data, model)` before clipping.
    pub gkl: f64,
    /// `gKL_δ`.
    pub fit_term: f64,
    pub tolerable: bool,
    pub d_prime: usize,
    pub ln_vol_model: f64,
    pub ln_vol_aux: f64,
    /// `None` when the Hessian was not positive definite.
    pub ln_det_model: Option<f64>,
    pub ln_det_aux: f64,
    pub lambda: f64,
    pub zero_overlap: bool,
}

impl EvidenceScore {
    pub fn id(&self) -> String {
        self.structure.id()
    }

    /// A score without a usable model Hessian ranks below every reliable one.
    pub fn reliable(&self) -> bool {
        self.ln_det_model.is_some()
    }

    pub fn ln_vol(&self) -> f64 {
        self.ln_vol_model + self.ln_vol_aux
    }

    /// `ln det` of the block-diagonal augmented Hessian (model term taken as
    /// 0 when unreliable).
    pub fn ln_det(&self) -> f64 {
        self.ln_det_model.unwrap_or(0.0) + self.ln_det_aux
    }

    /// Same score re-clipped at another tolerance.
    pub fn with_tolerance(&self, tol: Tolerance) -> Self {
        Self {
            fit_term: tol.clip(self.gkl),
            tolerable: tol.admits(self.gkl),
            ..self.clone()
        }
    }

    /// `total(n)` for finite `n`; `None` at `n = ∞`.
    pub fn total(&self, n: SampleSize) -> Option<f64> {
        let SampleSize::Finite(n) = n else {
            return None;
        };
        Some(
            self.fit_term
                + self.ln_vol() / n
                + self.ln_det() / (2.0 * n)
                + self.d_prime as f64 * ln(n / TAU) / (2.0 * n),
        )
    }

    /// Ranking at sample size `n`: `Less` means `self` is preferred.
    pub fn cmp_at(&self, other: &Self, n: SampleSize) -> Ordering {
        let by_reliability = other.reliable().cmp(&self.reliable());
        let rest = match n {
            SampleSize::Finite(_) => self
                .total(n)
                .unwrap_or(f64::INFINITY)
                .total_cmp(&other.total(n).unwrap_or(f64::INFINITY)),
            SampleSize::Infinite => self.cmp_limit(other),
        };
        by_reliability
            .then(rest)
            .then_with(|| self.structure.cmp(&other.structure))
    }

    /// The `n → ∞` order, without reliability and id tie-breaks.
    pub fn cmp_limit(&self, other: &Self) -> Ordering {
        match (self.tolerable, other.tolerable) {
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            (false, false) => self.gkl.total_cmp(&other.gkl),
            (true, true) => self.d_prime.cmp(&other.d_prime).then_with(|| {
                let a = self.ln_vol() + 0.5 * self.ln_det();
                let b = other.ln_vol() + 0.5 * other.ln_det();
                a.total_cmp(&b)
            }),
        }
    }
}

/// Scores one fitted model.
pub fn score(
    data: &EmpiricalDistribution,
    model: &MixtureModel,
    tol: Tolerance,
) -> Result<EvidenceScore, EvidenceError> {
    let s = model.structure();
    let obj = Objective::new(data, &s)?;
    let aug = augment(data, model);
    Ok(EvidenceScore {
        gkl: aug.gkl,
        fit_term: tol.clip(aug.gkl),
        tolerable: tol.admits(aug.gkl),
        d_prime: aug.d_prime(),
        ln_vol_model: model_volume(&s),
        ln_vol_aux: aug.aux_ln_volume(),
        ln_det_model: hessian_logdet(&obj, model),
        ln_det_aux: aug.aux_ln_det(),
        lambda: aug.lambda,
        zero_overlap: aug.zero_overlap,
        structure: s,
    })
}

/// Winner at one sample size.
#[derive(Debug, Clone, PartialEq)]
pub struct Winner {
    pub n: SampleSize,
    pub structure: ModelStructure,
    pub tolerable: bool,
}

/// Scores of all models plus the winners per sample size, with the measured
/// tolerance and with none.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub tolerance: Tolerance,
    pub n_grid: Vec<SampleSize>,
    /// Scored at `tolerance`, ordered by model id.
    pub scores: Vec<EvidenceScore>,
    pub winners: Vec<Winner>,
    pub winners_without_tolerance: Vec<Winner>,
}

impl ComparisonReport {
    pub fn winner_at(&self, n: SampleSize) -> Option<&Winner> {
        self.winners.iter().find(|w| w.n == n)
    }

    /// Scores sorted best first at `n`.
    pub fn ranked(&self, n: SampleSize) -> Vec<&EvidenceScore> {
        let mut v: Vec<_> = self.scores.iter().collect();
        v.sort_by(|a, b| a.cmp_at(b, n));
        v
    }
}

/// Best score at `n`.
pub fn winner(scores: &[EvidenceScore], n: SampleSize) -> Option<&EvidenceScore> {
    scores.iter().min_by(|a, b| a.cmp_at(b, n))
}

fn winners(scores: &[EvidenceScore], grid: &[SampleSize]) -> Vec<Winner> {
    grid.iter()
        .filter_map(|&n| {
            winner(scores, n).map(|w| Winner {
                n,
                structure: w.structure.clone(),
                tolerable: w.tolerable,
            })
        })
        .collect()
}

/// Scores every fit and picks winners over `n_grid` at `tol` and at zero
/// tolerance.
pub fn compare(
    data: &EmpiricalDistribution,
    fits: &[FitResult],
    tol: Tolerance,
    n_grid: &[SampleSize],
) -> Result<ComparisonReport, EvidenceError> {
    let scores = fits
        .iter()
        .map(|f| score(data, &f.model, tol))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(compare_scores(scores, tol, n_grid))
}

/// As [`compare`], for scores computed elsewhere (e.g. in parallel).
pub fn compare_scores(
    mut scores: Vec<EvidenceScore>,
    tol: Tolerance,
    n_grid: &[SampleSize],
) -> ComparisonReport {
    scores.sort_by(|a, b| a.structure.cmp(&b.structure));
    let scores: Vec<_> = scores.iter().map(|s| s.with_tolerance(tol)).collect();
    let untolerant: Vec<_> = scores
        .iter()
        .map(|s| s.with_tolerance(Tolerance::ZERO))
        .collect();
    ComparisonReport {
        tolerance: tol,
        n_grid: n_grid.to_vec(),
        winners: winners(&scores, n_grid),
        winners_without_tolerance: winners(&untolerant, n_grid),
        scores,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::{StepLaw, WalkComponent};
    use alloc::vec;

    fn dist(pairs: &[(u32, f64)]) -> EmpiricalDistribution {
        EmpiricalDistribution::from_probs(pairs.iter().copied())
    }

    fn single(k: u32, p: &[f64]) -> MixtureModel {
        MixtureModel::single(WalkComponent::new(k, StepLaw::new(p.to_vec()).unwrap()).unwrap())
    }

    fn structure(id: &str) -> ModelStructure {
        id.parse().unwrap()
    }

    #[test]
    fn full_cover_has_no_aux() {
        let m = single(1, &[0.5, 0.2, 0.3]);
        let a = augment(&dist(&[(1, 0.3), (3, 0.7)]), &m);
        assert_eq!(a.lambda, 1.0);
        assert!(a.aux.is_empty());
        assert_eq!(a.d_prime(), 2);
    }

    #[test]
    fn one_uncovered_point() {
        let m = single(2, &[0.5, 0.2, 0.3]);
        let a = augment(&dist(&[(1, 0.1), (5, 0.9)]), &m);
        assert!((a.lambda - 0.9).abs() < 1e-15);
        assert_eq!(a.aux, vec![(1, 1.0)]);
        assert_eq!(a.aux_dims(), 0);
        assert_eq!(a.aux_ln_det(), 0.0);
        assert_eq!(a.d_prime(), 2);
    }

    #[test]
    fn two_uncovered_points() {
        let m = single(3, &[0.5, 0.2, 0.3]);
        let a = augment(&dist(&[(1, 0.1), (2, 0.1), (3, 0.8)]), &m);
        assert_eq!(a.aux, vec![(1, 0.5), (2, 0.5)]);
        assert_eq!(a.aux_dims(), 1);
        assert!((a.aux_ln_det() - ln(0.8)).abs() < 1e-12);
    }

    #[test]
    fn aux_hessian_matches_finite_differences() {
        // per-datum cross entropy of the auxiliary part, one free coordinate
        let p = [0.1, 0.1];
        let f = |q: f64| -(p[0] * ln(q) + p[1] * ln(1.0 - q));
        let (q, h) = (0.5, 1e-4);
        let fd = (f(q + h) - 2.0 * f(q) + f(q - h)) / (h * h);
        let m = single(3, &[0.5, 0.2, 0.3]);
        let a = augment(&dist(&[(1, 0.1), (2, 0.1), (3, 0.8)]), &m);
        assert!((ln(fd) - a.aux_ln_det()).abs() < 1e-6 * a.aux_ln_det().abs());
    }

    #[test]
    fn volumes() {
        assert!((model_volume(&structure("1.k1")) + ln(2.0)).abs() < 1e-15);
        assert!((model_volume(&structure("2.k1")) + ln(6.0)).abs() < 1e-15);
        assert!((model_volume(&structure("1.k1.2")) + ln(4.0)).abs() < 1e-15);
    }

    #[test]
    fn d_prime_hand_counts() {
        for (id, d) in [
            ("1.k3", 2),
            ("2.k4", 3),
            ("1.k2.3", 5),
            ("3.k1-5", 24),
            ("2.k1.5", 7),
        ] {
            assert_eq!(structure(id).dims(), d, "{id}");
        }
    }

    #[test]
    fn sample_size_labels() {
        let labels: Vec<String> = SampleSize::default_grid()
            .iter()
            .map(|n| alloc::format!("{n}"))
            .collect();
        assert_eq!(labels, ["1k", "10k", "100k", "1M", "1G", "inf"]);
        assert!(SampleSize::finite(0.0).is_err());
    }

    fn fake(id: &str, gkl: f64, d_prime: usize, ln_vol: f64) -> EvidenceScore {
        EvidenceScore {
            structure: structure(id),
            gkl,
            fit_term: gkl,
            tolerable: gkl == 0.0,
            d_prime,
            ln_vol_model: ln_vol,
            ln_vol_aux: 0.0,
            ln_det_model: Some(0.0),
            ln_det_aux: 0.0,
            lambda: 1.0,
            zero_overlap: false,
        }
    }

    #[test]
    fn limit_rules() {
        let tol = Tolerance::new(1e-3).unwrap();
        let small = fake("1.k3", 5e-4, 5, 0.0).with_tolerance(tol);
        let big = fake("3.k1-5", 1e-5, 9, 0.0).with_tolerance(tol);
        let bad = fake("1.k1", 2e-3, 2, -50.0).with_tolerance(tol);
        let all = [bad.clone(), big.clone(), small.clone()];
        assert_eq!(winner(&all, SampleSize::Infinite).unwrap().id(), "1.k3");
        assert_eq!(small.cmp_at(&bad, SampleSize::Infinite), Ordering::Less);
        assert_eq!(big.cmp_at(&bad, SampleSize::Infinite), Ordering::Less);
        // zero tolerance and a huge sample: the closest fit wins
        let untol: Vec<_> = all
            .iter()
            .map(|s| s.with_tolerance(Tolerance::ZERO))
            .collect();
        assert_eq!(
            winner(&untol, SampleSize::Finite(1e12)).unwrap().id(),
            "3.k1-5"
        );
        assert_eq!(winner(&untol, SampleSize::Infinite).unwrap().id(), "3.k1-5");
    }

    #[test]
    fn unreliable_is_demoted() {
        let good = fake("3.k1-5", 0.0, 24, 0.0);
        let mut shaky = fake("1.k3", 0.0, 2, 0.0);
        shaky.ln_det_model = None;
        for n in SampleSize::default_grid() {
            assert_eq!(
                winner(&[shaky.clone(), good.clone()], n).unwrap().id(),
                "3.k1-5"
            );
        }
    }

    #[test]
    fn total_decreases_to_fit_term() {
        let s = fake("1.k3", 0.01, 2, -1.0);
        let mut prev = f64::INFINITY;
        for n in [1e3, 1e4, 1e6, 1e9, 1e12] {
            let t = s.total(SampleSize::Finite(n)).unwrap();
            assert!(t < prev);
            prev = t;
        }
        assert!((prev - 0.01).abs() < 1e-9);
    }

    #[test]
    fn interior_hessian_is_positive_definite() {
        let truth = single(3, &[0.5, 0.25, 0.25]);
        let pmf = mixture_pmf(&truth, 300).unwrap();
        let total = pmf.total();
        let data = EmpiricalDistribution::from_probs(pmf.iter().map(|(x, p)| (x, p / total)));
        let obj = Objective::new(&data, &truth.structure()).unwrap();
        assert!(hessian_logdet(&obj, &truth).is_some());
        let sc = score(&data, &truth, Tolerance::ZERO).unwrap();
        assert!(sc.reliable());
        // only the truncated tail separates data and model
        assert!((sc.gkl + ln(total)).abs() < 1e-12, "{}", sc.gkl);
    }
}
