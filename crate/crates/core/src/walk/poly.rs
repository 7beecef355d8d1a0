//! Dense polynomials with `f64` coefficients, lowest degree first.

use alloc::vec;
use alloc::vec::Vec;

use super::StepLaw;

/// The step polynomial `F(u) = Σ_s p_s u^(s+1)`: coefficient `j` is the
/// probability of the step `j - 1`.
pub fn step_poly(steps: &StepLaw) -> Vec<f64> {
    steps.probs().to_vec()
}

/// `a · b` with every coefficient above `max_deg` discarded.
pub fn mul_truncated(a: &[f64], b: &[f64], max_deg: usize) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let deg = (a.len() + b.len() - 2).min(max_deg);
    let mut out = vec![0.0; deg + 1];
    for (i, &x) in a.iter().enumerate().take(deg + 1) {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate().take(deg + 1 - i) {
            out[i + j] += x * y;
        }
    }
    out
}

/// `a^n` truncated at `max_deg`, by repeated multiplication.
pub fn pow_truncated(a: &[f64], n: u32, max_deg: usize) -> Vec<f64> {
    let mut out = vec![1.0];
    for _ in 0..n {
        out = mul_truncated(&out, a, max_deg);
    }
    out
}

/// Evaluates the polynomial at `u` (Horner).
pub fn eval(a: &[f64], u: f64) -> f64 {
    a.iter().rev().fold(0.0, |acc, &c| acc * u + c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_poly_examples() {
        let s = StepLaw::new(vec![0.5, 0.25, 0.25]).unwrap();
        assert_eq!(step_poly(&s), vec![0.5, 0.25, 0.25]);
        let s = StepLaw::new(vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(eval(&step_poly(&s), 0.7), 1.0);
        let s = StepLaw::new(vec![0.2; 5]).unwrap();
        assert_eq!(step_poly(&s).len() - 1, 4);
    }

    #[test]
    fn truncated_products() {
        // (1 + u)^3 = 1 + 3u + 3u^2 + u^3
        assert_eq!(pow_truncated(&[1.0, 1.0], 3, 10), vec![1.0, 3.0, 3.0, 1.0]);
        assert_eq!(pow_truncated(&[1.0, 1.0], 3, 1), vec![1.0, 3.0]);
        assert_eq!(mul_truncated(&[2.0], &[0.5, 1.0], 0), vec![1.0]);
    }
}
