//! End-to-end check on synthetic data with a known generating model.
//!
//! Samples walks from 1.k3 with step law `(0.5, 0.25, 0.25)`, measures the
//! inherent noise between the two halves of the sample, fits every template
//! on the whole sample and compares them with the evidence score and with
//! description length, once with all templates and once with the true one
//! left out.

use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::divergence::{inherent_noise, DivergenceError, NoiseEstimate, SplitKind, Tolerance};
use crate::evidence::{self, ComparisonReport, EvidenceError, SampleSize};
use crate::fit::{FitConfig, FitError, FitResult};
use crate::histogram::{EmpiricalDistribution, HistogramError, LengthHistogram};
use crate::mdl::{self, MdlReport};
use crate::walk::{
    sample_lengths, MixtureModel, ModelStructure, StepLaw, WalkComponent, MAX_WALK_STEPS,
};

/// Per-template fit outcomes, in template order.
pub type FitTable = Vec<(ModelStructure, Result<FitResult, FitError>)>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("sample must hold at least two walks")]
    TooFewSamples,
    #[error(transparent)]
    Histogram(#[from] HistogramError),
    #[error(transparent)]
    Divergence(#[from] DivergenceError),
    #[error(transparent)]
    Evidence(#[from] EvidenceError),
}

/// The generating model: order 1, `k = 3`, `p = (0.5, 0.25, 0.25)`.
pub fn true_model() -> MixtureModel {
    MixtureModel::single(
        WalkComponent::new(3, StepLaw::new(vec![0.5, 0.25, 0.25]).expect("valid law"))
            .expect("valid k"),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationConfig {
    /// Total walks; the noise estimate splits them in two halves.
    pub count: usize,
    pub seed: u64,
    pub fit: FitConfig,
    pub n_grid: Vec<SampleSize>,
    pub split: SplitKind,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            count: 2_000_000,
            seed: 0,
            fit: FitConfig::default(),
            n_grid: SampleSize::default_grid(),
            split: SplitKind::FirstSecond,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub truth: MixtureModel,
    pub histogram: LengthHistogram,
    /// Walks redrawn for exceeding the step cap.
    pub rejected: u64,
    pub noise: NoiseEstimate,
    pub fits: FitTable,
    pub bayes: ComparisonReport,
    pub bayes_without_true: ComparisonReport,
    pub mdl: MdlReport,
    pub mdl_without_true: MdlReport,
}

impl ValidationReport {
    pub fn tolerance(&self) -> Tolerance {
        self.noise.tolerance()
    }

    /// Successful fits, in template order.
    pub fn fitted(&self) -> impl Iterator<Item = &FitResult> {
        self.fits.iter().filter_map(|(_, r)| r.as_ref().ok())
    }
}

/// Draws `count` walk lengths from `m`, in order.
pub fn sample_walks(m: &MixtureModel, count: usize, seed: u64) -> (Vec<u32>, u64) {
    let out = sample_lengths(m, count, &mut ChaCha8Rng::seed_from_u64(seed));
    (out.lengths, out.rejected)
}

/// Runs the whole pipeline. `fitter` fits a list of templates to the data
/// and returns one entry per template in the same order (see
/// [`crate::fit::fit_templates`]); it is a parameter so callers can fit in
/// parallel.
pub fn run<F>(cfg: &ValidationConfig, fitter: F) -> Result<ValidationReport, ValidationError>
where
    F: FnOnce(&EmpiricalDistribution, &[ModelStructure], &FitConfig) -> FitTable,
{
    if cfg.count < 2 {
        return Err(ValidationError::TooFewSamples);
    }
    let truth = true_model();
    let (lengths, rejected) = sample_walks(&truth, cfg.count, cfg.seed);
    let noise = inherent_noise(&lengths, cfg.split)?;
    let histogram = LengthHistogram::from_lengths(&lengths, MAX_WALK_STEPS as u32)?;
    drop(lengths);
    let data = histogram.empirical()?;
    let fits = fitter(&data, &ModelStructure::all(), &cfg.fit);
    let tol = noise.tolerance();

    let fitted: Vec<FitResult> = fits.iter().filter_map(|(_, r)| r.clone().ok()).collect();
    let scores = fitted
        .iter()
        .map(|f| evidence::score(&data, &f.model, tol))
        .collect::<Result<Vec<_>, _>>()?;
    let true_id = truth.structure();
    let without: Vec<_> = scores
        .iter()
        .filter(|s| s.structure != true_id)
        .cloned()
        .collect();
    let bayes = evidence::compare_scores(scores, tol, &cfg.n_grid);
    let bayes_without_true = evidence::compare_scores(without, tol, &cfg.n_grid);

    let mdl = mdl::compare(&data, fitted.iter().map(|f| &f.model), tol);
    let mdl_without_true = mdl::assemble(
        mdl.rows
            .iter()
            .filter(|r| r.structure != true_id)
            .cloned()
            .collect(),
        mdl.naive,
        tol,
    );

    Ok(ValidationReport {
        truth,
        histogram,
        rejected,
        noise,
        fits,
        bayes,
        bayes_without_true,
        mdl,
        mdl_without_true,
    })
}
