//! Partial indices from kernel dimensions of truncated Toeplitz systems.
//!
//! For `B = B⁺ diag(ζ^κ) B⁻`, the anti-holomorphic `ψ` (modes `0, −1, …`) with
//! `Bψ` free of modes below `m` form a space of dimension
//! `Σ max(0, κ_j − m + 1)`. Counting this for a few `m` recovers `κ`. The
//! route uses nothing but Fourier coefficients of samples, so it is
//! independent of the algebraic factorization.

use crate::boundary;
use crate::error::{Result, StatDiscError};
use crate::linalg::{self, CMat, C64};

use super::factor::PartialIndices;

/// Truncation order and singular-value threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToeplitzConfig {
    pub order: usize,
    pub threshold: f64,
    /// Fourier coefficients below this fraction of the largest are dropped.
    pub tail: f64,
}

impl Default for ToeplitzConfig {
    fn default() -> Self {
        Self { order: 64, threshold: 1e-6, tail: 1e-14 }
    }
}

/// Fourier coefficient blocks of a matrix symbol, modes `lo..=hi`.
struct Blocks {
    lo: i64,
    hi: i64,
    coeffs: Vec<CMat>,
}

impl Blocks {
    fn new(samples: &[CMat], tail: f64) -> Result<Self> {
        let g = samples.len();
        boundary::check_grid(g)?;
        let n = samples[0].nrows();
        let mut full = vec![CMat::zeros(n, n); g];
        for i in 0..n {
            for j in 0..n {
                let v: Vec<C64> = samples.iter().map(|s| s[(i, j)]).collect();
                for (k, c) in boundary::forward(&v).into_iter().enumerate() {
                    full[k][(i, j)] = c;
                }
            }
        }
        let size: Vec<f64> = full.iter().map(|b| b.camax()).collect();
        let max = size.iter().fold(0.0f64, |m, &x| m.max(x));
        let keep = |m: i64| size[boundary::slot(m, g)] > tail * max;
        let half = g as i64 / 2;
        let hi = (0..half).rev().find(|&m| keep(m)).unwrap_or(0);
        let lo = (-half + 1..=0).find(|&m| keep(m)).unwrap_or(0);
        if hi >= half - 8 || lo <= -half + 8 {
            return Err(StatDiscError::Approximation(format!(
                "symbol needs Fourier modes [{lo}, {hi}] on a grid of {g}"
            )));
        }
        let coeffs = (lo..=hi).map(|m| full[boundary::slot(m, g)].clone()).collect();
        Ok(Self { lo, hi, coeffs })
    }

    fn get(&self, m: i64) -> Option<&CMat> {
        (self.lo..=self.hi).contains(&m).then(|| &self.coeffs[(m - self.lo) as usize])
    }
}

/// `dim { ψ : modes(ψ) ⊂ [−L, 0], modes(Bψ) ⊂ [m, ∞) }`.
fn kernel_dimension(b: &Blocks, m: i64, cfg: &ToeplitzConfig) -> usize {
    let n = b.coeffs[0].nrows();
    let l = cfg.order as i64;
    let first = -l + b.lo;
    let nrows = (m - first).max(0) as usize;
    let ncols = (l as usize + 1) * n;
    if nrows == 0 {
        return ncols;
    }
    let mut t = CMat::zeros(nrows * n, ncols);
    for (ri, r) in (first..m).enumerate() {
        for j in 0..=l {
            if let Some(blk) = b.get(r + j) {
                t.view_mut((ri * n, j as usize * n), (n, n)).copy_from(blk);
            }
        }
    }
    let s = linalg::singular_values_c(&t);
    let smax = s.first().copied().unwrap_or(0.0);
    let rank = s.iter().filter(|&&x| x > cfg.threshold * smax).count();
    ncols - rank
}

/// Partial indices of the symbol sampled on a uniform grid, given its total
/// index (winding of the determinant).
pub fn toeplitz_indices(samples: &[CMat], total: i64, cfg: &ToeplitzConfig) -> Result<PartialIndices> {
    let n = samples[0].nrows() as i64;
    let b = Blocks::new(samples, cfg.tail)?;
    let full = |m: i64| total - n * (m - 1);
    let mut dims = std::collections::BTreeMap::new();
    // Scan down until the count is saturated, which forces every κ_j ≥ m − 1.
    let mut m = total.div_euclid(n);
    loop {
        let d = kernel_dimension(&b, m, cfg) as i64;
        dims.insert(m, d);
        if d == full(m) {
            break;
        }
        m -= 1;
        if m < total.div_euclid(n) - cfg.order as i64 / 2 {
            return Err(StatDiscError::Approximation("Toeplitz scan did not saturate".into()));
        }
    }
    let low = m;
    let mut m = total.div_euclid(n) + 1;
    loop {
        let d = kernel_dimension(&b, m, cfg) as i64;
        dims.insert(m, d);
        if d == 0 {
            break;
        }
        m += 1;
        if m > total.div_euclid(n) + cfg.order as i64 / 2 {
            return Err(StatDiscError::Approximation("Toeplitz scan did not terminate".into()));
        }
    }
    let high = m;
    for k in low..high {
        dims.entry(k).or_insert_with(|| kernel_dimension(&b, k, cfg) as i64);
    }
    // #{κ_j ≥ k} = dim(k) − dim(k+1); saturation at `low` gives κ_j ≥ low − 1.
    let at_least = |k: i64| match k {
        k if k < low => n,
        k if k >= high => 0,
        k => dims[&k] - dims[&(k + 1)],
    };
    let mut kappa = Vec::new();
    for k in low - 1..high {
        let exact = at_least(k) - at_least(k + 1);
        if exact < 0 {
            return Err(StatDiscError::Approximation(format!("non-monotone kernel counts at m = {k}")));
        }
        kappa.extend(std::iter::repeat_n(k, exact as usize));
    }
    if kappa.len() as i64 != n {
        return Err(StatDiscError::Approximation(format!("kernel counts {dims:?} are inconsistent")));
    }
    let out = PartialIndices::from_unsorted(kappa);
    if out.total != total {
        return Err(StatDiscError::Approximation(format!("indices sum to {}, expected {total}", out.total)));
    }
    Ok(out)
}
