//! Cross entropy of a mixture model against observed data, with its gradient
//! in reduced simplex coordinates.
//!
//! For a fixed structure the model support is `{i >= min k}` for every
//! parameter value, so the covered data mass `λ` is constant and
//! `gKL = -λ ln λ + Σ_cov p ln p + CE`, where
//! `CE(w) = -Σ_{x covered} p_x ln Q_w(x)`. Minimizing `CE` minimizes `gKL`.

use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::histogram::EmpiricalDistribution;
use crate::math::{ln, xlnx};
use crate::walk::pmf::{block_sizes, component_table, reduce_into};
use crate::walk::{MixtureModel, ModelStructure};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ObjectiveError {
    #[error("model {id} needs lengths >= {min_k}, but the data stops at {max_len}")]
    Unfittable {
        id: alloc::string::String,
        min_k: u32,
        max_len: u32,
    },
    #[error("empty data")]
    EmptyData,
}

/// Cross-entropy objective for one structure on one dataset.
#[derive(Debug, Clone)]
pub struct Objective {
    structure: ModelStructure,
    len: u32,
    xs: Vec<u32>,
    ps: Vec<f64>,
    lambda: f64,
    covered_neg_entropy: f64,
}

impl Objective {
    pub fn new(
        data: &EmpiricalDistribution,
        structure: &ModelStructure,
    ) -> Result<Self, ObjectiveError> {
        let max_len = data.max_length().ok_or(ObjectiveError::EmptyData)?;
        let min_k = structure.min_valency();
        if min_k > max_len {
            return Err(ObjectiveError::Unfittable {
                id: structure.id(),
                min_k,
                max_len,
            });
        }
        let (xs, ps): (Vec<u32>, Vec<f64>) = data.iter().filter(|&(x, _)| x >= min_k).unzip();
        let lambda = ps.iter().sum();
        let covered_neg_entropy = ps.iter().map(|&p| xlnx(p)).sum();
        Ok(Self {
            structure: structure.clone(),
            len: max_len,
            xs,
            ps,
            lambda,
            covered_neg_entropy,
        })
    }

    pub fn structure(&self) -> &ModelStructure {
        &self.structure
    }

    /// Data mass on the model's support.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Longest data length: the pmf truncation used for evaluation.
    pub fn truncation(&self) -> u32 {
        self.len
    }

    /// `gKL` corresponding to a cross-entropy value.
    pub fn gkl_from_cross_entropy(&self, ce: f64) -> f64 {
        ce + self.covered_neg_entropy - xlnx(self.lambda)
    }

    /// Model probabilities at the covered data points. Values that underflow
    /// are returned as they are (possibly zero).
    pub fn model_probs(&self, m: &MixtureModel) -> Vec<f64> {
        self.eval(m, false).0
    }

    pub fn cross_entropy(&self, m: &MixtureModel) -> f64 {
        let q = self.model_probs(m);
        self.ce_of(&q)
    }

    fn ce_of(&self, q: &[f64]) -> f64 {
        -self
            .ps
            .iter()
            .zip(q)
            .map(|(&p, &q)| p * ln(q.max(f64::MIN_POSITIVE)))
            .sum::<f64>()
    }

    /// Cross entropy and its gradient in reduced coordinates.
    pub fn value_and_grad(&self, m: &MixtureModel) -> (f64, Vec<f64>) {
        let (f, full) = self.value_and_full_grad(m);
        let mut red = vec![0.0; self.structure.dims()];
        reduce_into(&full, &block_sizes(m), &mut red);
        (f, red)
    }

    /// Cross entropy and its gradient with respect to every entry of
    /// [`MixtureModel::full_params`], each block treated as unconstrained.
    pub fn value_and_full_grad(&self, m: &MixtureModel) -> (f64, Vec<f64>) {
        let (q, full) = self.eval(m, true);
        (self.ce_of(&q), full)
    }

    /// Model probabilities at covered data points and, when asked, the full
    /// coordinate gradient of the cross entropy.
    fn eval(&self, m: &MixtureModel, with_grad: bool) -> (Vec<f64>, Vec<f64>) {
        debug_assert_eq!(m.structure(), self.structure);
        let d = m.order() as usize + 2;
        let n_comp = m.components().len();
        let tables: Vec<_> = m
            .components()
            .iter()
            .map(|c| component_table(&c.steps, c.k, self.len, with_grad))
            .collect();
        let q: Vec<f64> = self
            .xs
            .iter()
            .map(|&x| {
                m.weights()
                    .iter()
                    .zip(&tables)
                    .filter(|(_, t)| x >= t.k)
                    .map(|(&w, t)| w * t.pmf[(x - t.k) as usize])
                    .sum()
            })
            .collect();
        if !with_grad {
            return (q, Vec::new());
        }
        let mut grad = vec![0.0; n_comp * d + n_comp];
        for ((&x, &p), &qx) in self.xs.iter().zip(&self.ps).zip(&q) {
            let w = -p / qx.max(f64::MIN_POSITIVE);
            for (j, (t, &alpha)) in tables.iter().zip(m.weights()).enumerate() {
                if x < t.k {
                    continue;
                }
                let r = (x - t.k) as usize;
                let g = &mut grad[j * d..(j + 1) * d];
                for (gs, &dp) in g.iter_mut().zip(&t.grad[r * d..(r + 1) * d]) {
                    *gs += w * alpha * dp;
                }
                grad[n_comp * d + j] += w * t.pmf[r];
            }
        }
        (q, grad)
    }
}
