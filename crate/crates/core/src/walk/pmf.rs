use alloc::vec;
use alloc::vec::Vec;

use super::{MixtureModel, StepLaw, WalkComponent, WalkError};

/// Truncated probability mass function `P(τ = i)` for
/// `i = support_min ..= max_len`.
///
/// Mass beyond `max_len` is not renormalized into the table; see
/// [`Pmf::residual`].
#[derive(Debug, Clone, PartialEq)]
pub struct Pmf {
    start: u32,
    probs: Vec<f64>,
}

impl Pmf {
    pub fn new(start: u32, probs: Vec<f64>) -> Self {
        Self { start, probs }
    }

    pub fn support_min(&self) -> u32 {
        self.start
    }

    pub fn max_len(&self) -> u32 {
        self.start + self.probs.len() as u32 - 1
    }

    /// `P(τ = i)`; zero outside the table.
    pub fn get(&self, i: u32) -> f64 {
        if i < self.start {
            return 0.0;
        }
        self.probs
            .get((i - self.start) as usize)
            .copied()
            .unwrap_or(0.0)
    }

    pub fn values(&self) -> &[f64] {
        &self.probs
    }

    /// `(i, P(τ = i))` over the table.
    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.probs
            .iter()
            .enumerate()
            .map(move |(j, &p)| (self.start + j as u32, p))
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Probability of lengths beyond the table (or of never returning).
    pub fn residual(&self) -> f64 {
        1.0 - self.total()
    }
}

/// Exact pmf and full-coordinate derivatives of one component for
/// `i = k ..= len`.
pub(crate) struct ComponentTable {
    pub k: u32,
    /// `pmf[i - k] = P(τ_k = i)`
    pub pmf: Vec<f64>,
    /// `grad[(i - k) * d + t] = ∂P(τ_k = i) / ∂p_(t-1)` when requested.
    pub grad: Vec<f64>,
}

/// Runs the power recursion `F^i = F^(i-1) · F`, truncated at degree
/// `len - k`, reading `P(τ_k = i) = (k/i) [u^(i-k)] F^i` and
/// `∂P/∂p_s = k [u^(i-k-s-1)] F^(i-1)` along the way.
pub(crate) fn component_table(
    steps: &StepLaw,
    k: u32,
    len: u32,
    with_grad: bool,
) -> ComponentTable {
    debug_assert!(len >= k);
    let f = steps.probs();
    let d = f.len();
    let deg_f = d - 1;
    let k_us = k as usize;
    let kf = k as f64;
    let trunc = (len - k) as usize;
    let rows = trunc + 1;

    let mut pmf = vec![0.0; rows];
    let mut grad = if with_grad {
        vec![0.0; rows * d]
    } else {
        Vec::new()
    };
    let mut pow = vec![0.0; trunc + 1];
    pow[0] = 1.0;
    let mut deg = 0usize;

    for i in 1..=len as usize {
        if with_grad && i >= k_us {
            let base = i - k_us;
            let row = &mut grad[base * d..(base + 1) * d];
            for (t, g) in row.iter_mut().enumerate().take(base.min(deg_f) + 1) {
                *g = kf * pow[base - t];
            }
        }
        let new_deg = (deg + deg_f).min(trunc);
        for dd in (0..=new_deg).rev() {
            let lo = dd.saturating_sub(deg);
            let hi = dd.min(deg_f);
            let mut acc = 0.0;
            for t in lo..=hi {
                acc += f[t] * pow[dd - t];
            }
            pow[dd] = acc;
        }
        deg = new_deg;
        if i >= k_us {
            pmf[i - k_us] = kf / i as f64 * pow[i - k_us];
        }
    }
    ComponentTable { k, pmf, grad }
}

/// `P(τ_k = i)` for `i = k ..= len`.
pub fn return_time_pmf(c: &WalkComponent, len: u32) -> Result<Pmf, WalkError> {
    if len < c.k {
        return Err(WalkError::TooShort { len, k: c.k });
    }
    let t = component_table(&c.steps, c.k, len, false);
    Ok(Pmf::new(c.k, t.pmf))
}

/// `Σ_j α_j P(τ_(k_j) = i)` for `i = min_j k_j ..= len`.
pub fn mixture_pmf(m: &MixtureModel, len: u32) -> Result<Pmf, WalkError> {
    let start = m.min_valency();
    if len < start {
        return Err(WalkError::TooShort { len, k: start });
    }
    let mut out = vec![0.0; (len - start + 1) as usize];
    for (&w, c) in m.weights().iter().zip(m.components()) {
        if c.k > len {
            continue;
        }
        let t = component_table(&c.steps, c.k, len, false);
        let off = (c.k - start) as usize;
        for (o, p) in out[off..].iter_mut().zip(&t.pmf) {
            *o += w * p;
        }
    }
    Ok(Pmf::new(start, out))
}

/// Derivatives of every pmf entry with respect to the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Jacobian {
    pub pmf: Pmf,
    dim: usize,
    rows: Vec<f64>,
}

impl Jacobian {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Gradient of `P(τ = i)`.
    pub fn row(&self, i: u32) -> &[f64] {
        let j = (i - self.pmf.support_min()) as usize;
        &self.rows[j * self.dim..(j + 1) * self.dim]
    }
}

/// Gradients in full coordinates, laid out as
/// [`MixtureModel::full_params`].
pub fn pmf_gradient_full(m: &MixtureModel, len: u32) -> Result<Jacobian, WalkError> {
    let start = m.min_valency();
    if len < start {
        return Err(WalkError::TooShort { len, k: start });
    }
    let d = m.order() as usize + 2;
    let n_comp = m.components().len();
    let dim = n_comp * d + n_comp;
    let n_rows = (len - start + 1) as usize;
    let mut pmf = vec![0.0; n_rows];
    let mut rows = vec![0.0; n_rows * dim];
    for (j, (&w, c)) in m.weights().iter().zip(m.components()).enumerate() {
        if c.k > len {
            continue;
        }
        let t = component_table(&c.steps, c.k, len, true);
        let off = (c.k - start) as usize;
        for (r, &p) in t.pmf.iter().enumerate() {
            let row = off + r;
            pmf[row] += w * p;
            let dst = &mut rows[row * dim..(row + 1) * dim];
            for s in 0..d {
                dst[j * d + s] = w * t.grad[r * d + s];
            }
            dst[n_comp * d + j] = p;
        }
    }
    Ok(Jacobian {
        pmf: Pmf::new(start, pmf),
        dim,
        rows,
    })
}

/// Gradients in reduced simplex coordinates (see
/// [`MixtureModel::reduced_params`]): the derivative along free coordinate
/// `t` of a block is `∂/∂x_t - ∂/∂x_last`.
pub fn pmf_gradient(m: &MixtureModel, len: u32) -> Result<Jacobian, WalkError> {
    let full = pmf_gradient_full(m, len)?;
    let structure = m.structure();
    let red_dim = structure.dims();
    let n_rows = full.pmf.values().len();
    let mut rows = vec![0.0; n_rows * red_dim];
    let blocks = block_sizes(m);
    for r in 0..n_rows {
        reduce_into(
            &full.rows[r * full.dim..(r + 1) * full.dim],
            &blocks,
            &mut rows[r * red_dim..(r + 1) * red_dim],
        );
    }
    Ok(Jacobian {
        pmf: full.pmf,
        dim: red_dim,
        rows,
    })
}

/// Sizes of the simplex blocks in full-coordinate order.
pub(crate) fn block_sizes(m: &MixtureModel) -> Vec<usize> {
    let d = m.order() as usize + 2;
    let mut v = vec![d; m.components().len()];
    v.push(m.components().len());
    v
}

/// Chain rule from full to reduced coordinates.
pub(crate) fn reduce_into(full: &[f64], blocks: &[usize], out: &mut [f64]) {
    let mut fi = 0;
    let mut ri = 0;
    for &b in blocks {
        let last = full[fi + b - 1];
        for t in 0..b - 1 {
            out[ri + t] = full[fi + t] - last;
        }
        fi += b;
        ri += b - 1;
    }
}
