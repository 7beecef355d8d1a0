//! Probability simplex helpers for the reduced-coordinate parameterization.
//!
//! A block `(x_1, .., x_D)` on the simplex is stored by its first `D - 1`
//! entries; the last is implied as `1 - Σ`. Optimizer steps are taken in
//! these reduced coordinates and then pulled back into the floored simplex
//! `{x : x_i >= floor, Σ x_i = 1}` by Euclidean projection of the full block.

use alloc::vec::Vec;

/// Euclidean projection of `v` onto `{x : x_i >= floor, Σ x_i = 1}`.
pub fn project(v: &mut [f64], floor: f64) {
    let n = v.len();
    debug_assert!(floor * n as f64 <= 1.0);
    if n == 1 {
        v[0] = 1.0;
        return;
    }
    let budget = 1.0 - floor * n as f64;
    let mut sorted: Vec<f64> = v.iter().map(|&x| x - floor).collect();
    sorted.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &u) in sorted.iter().enumerate() {
        cum += u;
        let t = (cum - budget) / (j + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - floor - theta).max(0.0) + floor;
    }
}

/// Projects reduced coordinates block by block. `blocks` lists the full
/// block sizes in parameter order.
pub fn project_reduced(params: &mut [f64], blocks: &[usize], floor: f64) {
    let mut at = 0;
    let mut full = Vec::new();
    for &b in blocks {
        full.clear();
        full.extend_from_slice(&params[at..at + b - 1]);
        full.push(1.0 - full.iter().sum::<f64>());
        project(&mut full, floor);
        params[at..at + b - 1].copy_from_slice(&full[..b - 1]);
        at += b - 1;
    }
}

/// Volume of `{x ∈ R^(D-1) : x_i >= 0, Σ x_i <= 1}`, i.e. `1 / (D-1)!`, as a
/// natural log. Blocks with `D <= 1` have no free coordinates and contribute
/// zero.
pub fn ln_volume(block_size: usize) -> f64 {
    if block_size <= 1 {
        0.0
    } else {
        -crate::math::ln_factorial(block_size - 1)
    }
}
