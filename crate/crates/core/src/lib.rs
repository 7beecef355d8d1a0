//! Sentence length as the return time of a bounded-step random walk.
//!
//! A sentence starts with `k` open valencies (the *total valency*). Every word
//! moves the open count by a step in `{-1, 0, 1, .., r}`; the sentence ends when
//! the count first reaches zero. The length distribution is therefore the
//! first-passage time of the walk started at `k`, and mixtures over several
//! `k` cover the short end of real corpora.
//!
//! This crate is `no_std` (it needs `alloc`) and contains the numerical core:
//!
//! | module | contents |
//! |--------|----------|
//! | [`histogram`] | length histograms, summary statistics, deciles, half splits |
//! | [`walk`] | step laws, exact return-time pmfs, gradients, sampler |
//! | [`divergence`] | generalized KL divergence, tolerance clipping, inherent noise |
//! | [`fit`] | Adagrad fitting of mixtures on the probability simplex |
//! | [`evidence`] | Laplace-approximated evidence with an auxiliary model |
//! | [`mdl`] | log-scale parameter quantization and description length |
//! | [`validation`] | the synthetic end-to-end replication run |
//!
//! IO, file formats and the command line live in the `sentlen` crate.

#![no_std]

extern crate alloc;

pub mod divergence;
pub mod evidence;
pub mod fit;
pub mod histogram;
pub mod linalg;
mod math;
pub mod mdl;
pub mod objective;
pub mod simplex;
pub mod validation;
pub mod walk;

pub use divergence::{gkl, gkl_delta, inherent_noise, NoiseEstimate, SplitKind, Tolerance};
pub use evidence::{compare, ComparisonReport, EvidenceScore, SampleSize};

pub use fit::{fit, fit_all, fit_templates, FitConfig, FitError, FitResult};
pub use histogram::{EmpiricalDistribution, LengthHistogram, SummaryStats};
pub use walk::{MixtureModel, ModelStructure, Pmf, StepLaw, WalkComponent};
