//! Return-time pmf through the functional equation of the generating
//! function, independent of the Lagrange inversion route.
//!
//! `f(x) = E[x^τ_1]` satisfies `f = x·F(f)`. Because `f` has no constant term,
//! coefficient `n` of `f` only depends on coefficients below `n`, so the fixed
//! point can be built one coefficient at a time. `τ_k` has generating function
//! `f^k`.

use alloc::vec;
use alloc::vec::Vec;

use super::poly::{mul_truncated, pow_truncated};
use super::{Pmf, WalkComponent, WalkError};

/// Coefficients `0..=len` of `f(x)`, the generating function of `τ_1`.
pub fn first_passage_series(probs: &[f64], len: usize) -> Vec<f64> {
    let r1 = probs.len() - 1; // largest power of f in F(f)
    let mut f = vec![0.0; len + 1];
    // powers[j] holds coefficients of f^(j+1) known so far
    let mut powers: Vec<Vec<f64>> = vec![vec![0.0; len + 1]; r1];
    for n in 1..=len {
        // coefficient n-1 of f^j for j >= 2 from lower-order coefficients
        let m = n - 1;
        for j in 1..r1 {
            let (lower, upper) = powers.split_at_mut(j);
            let prev = &lower[j - 1];
            let mut acc = 0.0;
            for a in 1..m {
                acc += f[a] * prev[m - a];
            }
            upper[0][m] = acc;
        }
        // [x^n] f = Σ_s p_s [x^(n-1)] f^(s+1)
        let mut c = if n == 1 { probs[0] } else { 0.0 };
        for (j, pw) in powers.iter().enumerate() {
            c += probs[j + 1] * pw[m];
        }
        f[n] = c;
        powers[0][n] = c;
    }
    f
}

/// `P(τ_k = i)` for `i = k ..= len`, read from `f(x)^k`.
pub fn series_inversion_oracle(c: &WalkComponent, len: u32) -> Result<Pmf, WalkError> {
    if len < c.k {
        return Err(WalkError::TooShort { len, k: c.k });
    }
    let f = first_passage_series(c.steps.probs(), len as usize);
    let fk = pow_truncated(&f, c.k, len as usize);
    let mut probs = vec![0.0; (len - c.k + 1) as usize];
    for (i, slot) in probs.iter_mut().enumerate() {
        *slot = fk.get(c.k as usize + i).copied().unwrap_or(0.0);
    }
    Ok(Pmf::new(c.k, probs))
}

/// `a * b` over the whole support of both tables (used for convolution
/// checks of `τ_k = τ_1 + .. + τ_1`).
pub fn convolve(a: &Pmf, b: &Pmf, len: u32) -> Pmf {
    let shift = (a.support_min() + b.support_min()) as usize;
    let max_deg = (len as usize).saturating_sub(shift);
    Pmf::new(shift as u32, mul_truncated(a.values(), b.values(), max_deg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::StepLaw;

    #[test]
    fn small_coefficients() {
        let c = WalkComponent::new(1, StepLaw::new(vec![0.5, 0.25, 0.25]).unwrap()).unwrap();
        let pmf = series_inversion_oracle(&c, 6).unwrap();
        assert_eq!(pmf.get(1), 0.5);
        assert!((pmf.get(2) - 0.125).abs() < 1e-15);
        assert!((pmf.get(3) - 0.09375).abs() < 1e-15);
    }

    #[test]
    fn degenerate_law() {
        let c = WalkComponent::new(3, StepLaw::new(vec![1.0, 0.0, 0.0, 0.0]).unwrap()).unwrap();
        let pmf = series_inversion_oracle(&c, 20).unwrap();
        assert_eq!(pmf.get(3), 1.0);
        assert_eq!(pmf.total(), 1.0);
    }
}
