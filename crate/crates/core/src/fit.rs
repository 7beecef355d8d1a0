//! Fitting mixture models to observed length distributions.
//!
//! Minimizes `gKL(data, model)` (equivalently the cross entropy on the
//! covered lengths) with Adagrad step sizes. Each simplex block of `D`
//! probabilities is driven by `D` logits through the floored softmax
//! `p = ε + (1 - Dε) softmax(θ)`, so every iterate stays in the
//! `EPS_FLOOR`-interior and all-zero logits give the uniform starting point.
//! The logits move along the block-centered probability gradient
//! (exponentiated-gradient form), scaled per coordinate by Adagrad.
//!
//! Stationarity is measured in reduced simplex coordinates with the gradient
//! mapping `(x - Π(x - t∇f)) / t`, which equals the gradient at interior
//! points and vanishes at optima pinned against the floor.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::divergence::gkl;
use crate::histogram::EmpiricalDistribution;
use crate::math::{exp, sqrt};
use crate::objective::{Objective, ObjectiveError};
use crate::simplex::project_reduced;
use crate::walk::pmf::{block_sizes, reduce_into};
use crate::walk::{mixture_pmf, MixtureModel, ModelStructure, EPS_FLOOR};

/// Consecutive objective increases that count as divergence.
pub const OSCILLATION_WINDOW: usize = 50;

const ADAGRAD_EPS: f64 = 1e-12;

/// Step of the gradient mapping used as the stationarity measure. A
/// coordinate pinned against the floor counts as converged once it is within
/// `MAPPING_STEP * grad_tol` of it.
pub const MAPPING_STEP: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
    #[error("objective became non-finite for {id} at iteration {iter}")]
    NonFinite { id: String, iter: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitConfig {
    pub learning_rate: f64,
    pub fallback_rate: f64,
    pub grad_tol: f64,
    pub max_iters: usize,
    /// Iteration budget of the restart with `fallback_rate`.
    pub fallback_iters: usize,
    /// Recorded for run manifests; fitting itself is deterministic.
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.9,
            fallback_rate: 0.1,
            grad_tol: 1e-3,
            max_iters: 10_000,
            fallback_iters: 10_000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: MixtureModel,
    /// `gKL(data, model)` in nats.
    pub objective: f64,
    /// Iterations of the run that produced `model`.
    pub iters: usize,
    pub converged: bool,
    pub used_fallback: bool,
    /// Max-norm of the gradient mapping at `model`.
    pub grad_norm: f64,
}

impl FitResult {
    pub fn id(&self) -> String {
        self.model.id()
    }
}

enum RunEnd {
    Converged,
    Exhausted,
    Diverged,
}

struct Run {
    model: MixtureModel,
    objective: f64,
    grad_norm: f64,
    iters: usize,
    end: RunEnd,
}

/// Max-norm of the gradient mapping `(x - Π(x - t g)) / t` in reduced
/// coordinates, with `t = MAPPING_STEP`.
pub fn projected_grad_norm(x: &[f64], g: &[f64], blocks: &[usize]) -> f64 {
    let t = MAPPING_STEP;
    let mut y: Vec<f64> = x.iter().zip(g).map(|(a, b)| a - t * b).collect();
    project_reduced(&mut y, blocks, EPS_FLOOR);
    x.iter()
        .zip(&y)
        .map(|(a, b)| (a - b).abs() / t)
        .fold(0.0, f64::max)
}

/// Floored softmax of every block of logits.
fn probabilities(theta: &[f64], blocks: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(theta.len());
    let mut at = 0;
    for &b in blocks {
        let t = &theta[at..at + b];
        let top = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = t.iter().map(|&v| exp(v - top)).collect();
        let z: f64 = e.iter().sum();
        let scale = 1.0 - b as f64 * EPS_FLOOR;
        out.extend(e.iter().map(|&v| EPS_FLOOR + scale * v / z));
        at += b;
    }
    out
}

/// Probability gradient centered within each block under the softmax
/// weights. Stepping logits along it is entropic mirror descent: pinned
/// coordinates decay geometrically instead of stalling as `softmax -> 0`.
fn centered_grad(p: &[f64], g: &[f64], blocks: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(p.len());
    let mut at = 0;
    for &b in blocks {
        let scale = 1.0 - b as f64 * EPS_FLOOR;
        let gb = &g[at..at + b];
        let mean: f64 = p[at..at + b]
            .iter()
            .zip(gb)
            .map(|(&v, &gi)| (v - EPS_FLOOR) / scale * gi)
            .sum();
        out.extend(gb.iter().map(|&gi| gi - mean));
        at += b;
    }
    out
}

fn adagrad(
    obj: &Objective,
    blocks: &[usize],
    rate: f64,
    max_iters: usize,
    grad_tol: f64,
) -> Result<Run, FitError> {
    let s = obj.structure();
    let n_full: usize = blocks.iter().sum();
    let mut theta = vec![0.0; n_full];
    let mut acc = vec![0.0; n_full];
    let mut reduced = vec![0.0; s.dims()];
    let mut best: Option<(f64, MixtureModel, f64)> = None;
    let mut prev = f64::INFINITY;
    let mut rising = 0;

    for iter in 0..max_iters {
        let p = probabilities(&theta, blocks);
        let model = MixtureModel::from_full(s, &p).expect("softmax blocks are on the simplex");
        let (f, g) = obj.value_and_full_grad(&model);
        if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
            return Err(FitError::NonFinite { id: s.id(), iter });
        }
        reduce_into(&g, blocks, &mut reduced);
        let pg = projected_grad_norm(&model.reduced_params(), &reduced, blocks);
        if pg <= grad_tol {
            return Ok(Run {
                model,
                objective: f,
                grad_norm: pg,
                iters: iter,
                end: RunEnd::Converged,
            });
        }
        rising = if f > prev { rising + 1 } else { 0 };
        prev = f;
        if best.as_ref().is_none_or(|b| f < b.0) {
            best = Some((f, model, pg));
        }
        if rising >= OSCILLATION_WINDOW {
            let (objective, model, grad_norm) = best.expect("set above");
            return Ok(Run {
                model,
                objective,
                grad_norm,
                iters: iter,
                end: RunEnd::Diverged,
            });
        }
        let gt = centered_grad(&p, &g, blocks);
        for ((t, gi), a) in theta.iter_mut().zip(&gt).zip(acc.iter_mut()) {
            *a += gi * gi;
            *t -= rate * gi / sqrt(*a + ADAGRAD_EPS);
        }
    }
    let (objective, model, grad_norm) = best.expect("at least one iteration");
    Ok(Run {
        model,
        objective,
        grad_norm,
        iters: max_iters,
        end: RunEnd::Exhausted,
    })
}

/// Fits `template` to `data`.
///
/// If the first run diverges (the objective rises for
/// [`OSCILLATION_WINDOW`] consecutive iterations) the fit restarts once from
/// the uniform point with `fallback_rate` and `fallback_iters`. Unconverged
/// runs report their best iterate.
pub fn fit(
    data: &EmpiricalDistribution,
    template: &ModelStructure,
    cfg: &FitConfig,
) -> Result<FitResult, FitError> {
    let obj = Objective::new(data, template)?;
    let blocks = block_sizes(&MixtureModel::uniform(template));
    let mut run = adagrad(
        &obj,
        &blocks,
        cfg.learning_rate,
        cfg.max_iters,
        cfg.grad_tol,
    )?;
    let mut used_fallback = false;
    if matches!(run.end, RunEnd::Diverged) {
        used_fallback = true;
        let retry = adagrad(
            &obj,
            &blocks,
            cfg.fallback_rate,
            cfg.fallback_iters,
            cfg.grad_tol,
        )?;
        if retry.objective <= run.objective || matches!(retry.end, RunEnd::Converged) {
            run = retry;
        }
    }
    let model = run.model;
    let pmf = mixture_pmf(&model, obj.truncation()).expect("truncation covers min valency");
    let objective = gkl(data, &pmf).map_err(|_| FitError::NonFinite {
        id: template.id(),
        iter: run.iters,
    })?;
    if !objective.is_finite() {
        return Err(FitError::NonFinite {
            id: template.id(),
            iter: run.iters,
        });
    }
    Ok(FitResult {
        model,
        objective,
        iters: run.iters,
        converged: matches!(run.end, RunEnd::Converged),
        used_fallback,
        grad_norm: run.grad_norm,
    })
}

/// Fits every structure in `templates`, in the given order. A failed
/// template is reported in place and does not stop the others.
pub fn fit_templates(
    data: &EmpiricalDistribution,
    templates: &[ModelStructure],
    cfg: &FitConfig,
) -> Vec<(ModelStructure, Result<FitResult, FitError>)> {
    templates
        .iter()
        .map(|t| (t.clone(), fit(data, t, cfg)))
        .collect()
}

/// Fits all 93 structures (orders 1-3, every nonempty valency subset of
/// `{1..5}`), ordered by model id.
pub fn fit_all(
    data: &EmpiricalDistribution,
    cfg: &FitConfig,
) -> Vec<(ModelStructure, Result<FitResult, FitError>)> {
    fit_templates(data, &ModelStructure::all(), cfg)
}
