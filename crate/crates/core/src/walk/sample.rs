use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::MixtureModel;
use crate::histogram::LengthHistogram;

/// Walks still above zero after this many steps are discarded and redrawn.
pub const MAX_WALK_STEPS: u64 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleOutcome {
    /// Return times in draw order.
    pub lengths: Vec<u32>,
    /// Walks that hit [`MAX_WALK_STEPS`] and were redrawn.
    pub rejected: u64,
}

fn cumulative(p: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    p.iter()
        .map(|&x| {
            acc += x;
            acc
        })
        .collect()
}

fn draw(cum: &[f64], u: f64) -> usize {
    cum.iter().position(|&c| u < c).unwrap_or(cum.len() - 1)
}

/// Simulates `count` sentences: a component is chosen by weight, then the
/// walk is run from its valency until it first reaches zero.
pub fn sample_lengths<R: Rng + ?Sized>(
    m: &MixtureModel,
    count: usize,
    rng: &mut R,
) -> SampleOutcome {
    let weights = cumulative(m.weights());
    let steps: Vec<Vec<f64>> = m
        .components()
        .iter()
        .map(|c| cumulative(c.steps.probs()))
        .collect();
    let mut lengths = Vec::with_capacity(count);
    let mut rejected = 0;
    while lengths.len() < count {
        let j = draw(&weights, rng.random());
        let cum = &steps[j];
        let mut height = m.components()[j].k as i64;
        let mut t = 0u64;
        while height > 0 && t < MAX_WALK_STEPS {
            height += draw(cum, rng.random()) as i64 - 1;
            t += 1;
        }
        if height > 0 {
            rejected += 1;
        } else {
            lengths.push(t as u32);
        }
    }
    SampleOutcome { lengths, rejected }
}

/// Seeded sample as a histogram, plus the rejection tally.
pub fn sample(m: &MixtureModel, count: usize, seed: u64) -> (LengthHistogram, u64) {
    let out = sample_lengths(m, count, &mut ChaCha8Rng::seed_from_u64(seed));
    let h = LengthHistogram::from_lengths(&out.lengths, MAX_WALK_STEPS as u32)
        .expect("cutoff is positive");
    (h, out.rejected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::{StepLaw, WalkComponent};
    use alloc::vec;

    #[test]
    fn seeded_sampling_is_reproducible() {
        let m = MixtureModel::single(
            WalkComponent::new(3, StepLaw::new(vec![0.5, 0.25, 0.25]).unwrap()).unwrap(),
        );
        let a = sample(&m, 5000, 11);
        let b = sample(&m, 5000, 11);
        assert_eq!(a, b);
        assert_eq!(a.0.size(), 5000);
        assert!(a.0.min_length().unwrap() >= 3);
        assert_ne!(a.0, sample(&m, 5000, 12).0);
    }

    #[test]
    fn deterministic_walk() {
        let m = MixtureModel::single(
            WalkComponent::new(2, StepLaw::new(vec![1.0, 0.0, 0.0]).unwrap()).unwrap(),
        );
        let (h, rej) = sample(&m, 100, 1);
        assert_eq!(h.count(2), 100);
        assert_eq!(rej, 0);
    }
}
