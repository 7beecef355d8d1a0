//! Description-length comparison with log-scale parameter quantization.
//!
//! Every probability of a model (step laws, mixture weights and the
//! auxiliary distribution over uncovered lengths) is rounded to the nearest
//! point of a `2^b`-point grid that is uniform in `ln p` over
//! `[ln 2^-16, 0]`, and each block is renormalized afterwards. A model costs
//! `b` bits per stored probability; the cheapest model that stays within
//! the noise tolerance wins. The naive baseline stores the empirical
//! distribution itself the same way, on a grid extended down to its
//! smallest frequency.

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::f64::consts::LN_2;

use crate::divergence::{gkl, Tolerance};
use crate::evidence::{augment, AugmentedModel};
use crate::histogram::EmpiricalDistribution;
use crate::math::{exp, ln, round};
use crate::walk::{mixture_pmf, MixtureModel, ModelStructure, StepLaw, WalkComponent};

pub const MIN_BITS: u32 = 1;
pub const MAX_BITS: u32 = 16;
/// `ln 2^-16`, the bottom of the grid.
pub const GRID_MIN_LN: f64 = -16.0 * LN_2;

fn levels(bits: u32) -> u32 {
    debug_assert!((MIN_BITS..=MAX_BITS).contains(&bits));
    (1u32 << bits) - 1
}

/// Grid index of `p` at `bits` bits; 0 is `2^-16`, the top index is 1.
pub fn encode(p: f64, bits: u32) -> u32 {
    encode_on(p, bits, GRID_MIN_LN)
}

/// Grid value of a code.
pub fn decode(code: u32, bits: u32) -> f64 {
    decode_on(code, bits, GRID_MIN_LN)
}

/// Quantizes one probability block and renormalizes it.
pub fn quantize_block(block: &[f64], bits: u32) -> (Vec<u32>, Vec<f64>) {
    quantize_block_on(block, bits, GRID_MIN_LN)
}

fn encode_on(p: f64, bits: u32, min_ln: f64) -> u32 {
    let top = levels(bits);
    if p <= 0.0 {
        return 0;
    }
    let t = (ln(p) - min_ln) / -min_ln;
    round(t * top as f64).clamp(0.0, top as f64) as u32
}

fn decode_on(code: u32, bits: u32, min_ln: f64) -> f64 {
    let top = levels(bits);
    exp(min_ln * (1.0 - code as f64 / top as f64))
}

fn quantize_block_on(block: &[f64], bits: u32, min_ln: f64) -> (Vec<u32>, Vec<f64>) {
    let codes: Vec<u32> = block.iter().map(|&p| encode_on(p, bits, min_ln)).collect();
    let mut q: Vec<f64> = codes.iter().map(|&c| decode_on(c, bits, min_ln)).collect();
    let sum: f64 = q.iter().sum();
    q.iter_mut().for_each(|v| *v /= sum);
    (codes, q)
}

/// Number of stored probabilities: every entry of every block with at
/// least two entries (single-component weights and a single uncovered
/// point are implied).
pub fn stored_params(s: &ModelStructure, uncovered: usize) -> usize {
    let m = s.components();
    let weights = if m >= 2 { m } else { 0 };
    let aux = if uncovered >= 2 { uncovered } else { 0 };
    m * s.step_len() + weights + aux
}

/// A model with all its probabilities quantized at one bit depth.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedModel {
    pub structure: ModelStructure,
    pub bits: u32,
    /// Codes of the stored probabilities: step laws, weights, auxiliary.
    pub codes: Vec<u32>,
    /// Dequantized, renormalized model.
    pub model: MixtureModel,
    /// Dequantized auxiliary distribution over uncovered lengths.
    pub aux: Vec<(u32, f64)>,
    /// `gKL` from the data to the quantized augmented model.
    pub divergence: f64,
}

impl QuantizedModel {
    pub fn total_bits(&self) -> u64 {
        self.bits as u64 * self.codes.len() as u64
    }
}

/// Quantizes a fitted model and its auxiliary distribution at `bits`.
pub fn quantize(data: &EmpiricalDistribution, aug: &AugmentedModel, bits: u32) -> QuantizedModel {
    let base = &aug.base;
    let s = base.structure();
    let mut codes = Vec::new();
    let components: Vec<WalkComponent> = base
        .components()
        .iter()
        .map(|c| {
            let (cs, q) = quantize_block(c.steps.probs(), bits);
            codes.extend(cs);
            WalkComponent {
                k: c.k,
                steps: StepLaw::new(q).expect("renormalized block"),
            }
        })
        .collect();
    let weights = if base.weights().len() >= 2 {
        let (cs, q) = quantize_block(base.weights(), bits);
        codes.extend(cs);
        q
    } else {
        base.weights().to_vec()
    };
    let model = MixtureModel::new(weights, components).expect("renormalized blocks");

    let star: Vec<f64> = aug.aux.iter().map(|&(_, q)| q).collect();
    let aux_q = if star.len() >= 2 {
        let (cs, q) = quantize_block(&star, bits);
        codes.extend(cs);
        q
    } else {
        star.clone()
    };
    let aux: Vec<(u32, f64)> = aug
        .aux
        .iter()
        .zip(&aux_q)
        .map(|(&(x, _), &q)| (x, q))
        .collect();

    let len = data.max_length().unwrap_or(0).max(model.min_valency());
    let pmf = mixture_pmf(&model, len).expect("length covers min valency");
    let aux_loss: f64 = aug
        .aux_data
        .iter()
        .zip(star.iter().zip(&aux_q))
        .map(|(&p, (&a, &b))| p * ln(a / b))
        .sum();
    let divergence = gkl(data, &pmf).expect("distributions") + aux_loss;
    QuantizedModel {
        structure: s,
        bits,
        codes,
        model,
        aux,
        divergence,
    }
}

/// Smallest bit depth at which the quantized model stays within `tol` of
/// the data, or `None` if 16 bits are not enough.
pub fn min_bits(
    data: &EmpiricalDistribution,
    model: &MixtureModel,
    tol: Tolerance,
) -> Option<QuantizedModel> {
    let aug = augment(data, model);
    (MIN_BITS..=MAX_BITS)
        .map(|b| quantize(data, &aug, b))
        .find(|q| tol.admits(q.divergence))
}

/// Cost of storing the empirical distribution itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NaiveBits {
    pub bits: u32,
    /// Stored probabilities (support size; 0 for a point mass).
    pub params: usize,
}

impl NaiveBits {
    pub fn total_bits(&self) -> u64 {
        self.bits as u64 * self.params as u64
    }
}

/// Smallest bit depth at which the log-quantized empirical distribution
/// stays within `tol` of itself. `None` if 16 bits are not enough.
///
/// Empirical frequencies of a large sample go below `2^-16`, and a grid that
/// cannot hold them cannot describe the data at any depth. The naive grid
/// therefore reaches down to the smallest frequency when that is lower.
pub fn naive_bits(data: &EmpiricalDistribution, tol: Tolerance) -> Option<NaiveBits> {
    let support: Vec<(u32, f64)> = data.iter().filter(|&(_, p)| p > 0.0).collect();
    if support.len() <= 1 {
        return Some(NaiveBits { bits: 0, params: 0 });
    }
    let probs: Vec<f64> = support.iter().map(|&(_, p)| p).collect();
    let min_ln = probs.iter().map(|&p| ln(p)).fold(GRID_MIN_LN, f64::min);
    (MIN_BITS..=MAX_BITS).find_map(|b| {
        let (_, q) = quantize_block_on(&probs, b, min_ln);
        let quantized =
            EmpiricalDistribution::from_probs(support.iter().zip(&q).map(|(&(x, _), &q)| (x, q)));
        let d = gkl(data, &quantized).expect("distributions");
        tol.admits(d).then_some(NaiveBits {
            bits: b,
            params: support.len(),
        })
    })
}

/// One line of the MDL table.
#[derive(Debug, Clone, PartialEq)]
pub struct MdlRow {
    pub structure: ModelStructure,
    /// `None` when no bit depth up to 16 keeps the model tolerable.
    pub quantized: Option<QuantizedModel>,
}

impl MdlRow {
    pub fn id(&self) -> String {
        self.structure.id()
    }

    pub fn bits(&self) -> Option<u32> {
        self.quantized.as_ref().map(|q| q.bits)
    }

    pub fn total_bits(&self) -> Option<u64> {
        self.quantized.as_ref().map(|q| q.total_bits())
    }

    /// Model size as a percentage of the naive description.
    pub fn pct_size(&self, naive: &NaiveBits) -> Option<f64> {
        let tb = self.total_bits()?;
        let nb = naive.total_bits();
        (nb > 0).then(|| 100.0 * tb as f64 / nb as f64)
    }

    fn cmp_cost(&self, other: &Self) -> Ordering {
        let key = |r: &Self| r.quantized.as_ref().map(|q| (q.total_bits(), q.divergence));
        match (key(self), key(other)) {
            (Some(a), Some(b)) => a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => Ordering::Equal,
        }
        .then_with(|| self.structure.cmp(&other.structure))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MdlReport {
    pub tolerance: Tolerance,
    pub naive: Option<NaiveBits>,
    /// Ordered by model id.
    pub rows: Vec<MdlRow>,
}

impl MdlReport {
    /// Fewest total bits; ties go to the smaller quantized divergence, then
    /// to the model id.
    pub fn winner(&self) -> Option<&MdlRow> {
        self.rows
            .iter()
            .filter(|r| r.quantized.is_some())
            .min_by(|a, b| a.cmp_cost(b))
    }

    pub fn ranked(&self) -> Vec<&MdlRow> {
        let mut v: Vec<_> = self.rows.iter().collect();
        v.sort_by(|a, b| a.cmp_cost(b));
        v
    }
}

/// Runs [`min_bits`] on every model and [`naive_bits`] on the data.
pub fn compare<'a>(
    data: &EmpiricalDistribution,
    models: impl IntoIterator<Item = &'a MixtureModel>,
    tol: Tolerance,
) -> MdlReport {
    let rows = models
        .into_iter()
        .map(|m| MdlRow {
            structure: m.structure(),
            quantized: min_bits(data, m, tol),
        })
        .collect();
    assemble(rows, naive_bits(data, tol), tol)
}

/// Builds a report from rows computed elsewhere (e.g. in parallel).
pub fn assemble(mut rows: Vec<MdlRow>, naive: Option<NaiveBits>, tol: Tolerance) -> MdlReport {
    rows.sort_by(|a, b| a.structure.cmp(&b.structure));
    MdlReport {
        tolerance: tol,
        naive,
        rows,
    }
}
