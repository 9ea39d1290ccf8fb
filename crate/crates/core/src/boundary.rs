//! Functions sampled on the unit circle and the spectral operations on them.
//!
//! Grid nodes are `ζ_k = exp(2πik/N)`. Fourier coefficients follow
//! `ĉ_m = (1/N) Σ_k v_k ζ_k^{−m}` for `m ∈ [−N/2, N/2)`, so that
//! `v_k = Σ_m ĉ_m ζ_k^m` and Parseval holds with the `1/N` weight.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use rustfft::{Fft, FftPlanner};

use crate::error::{Result, StatDiscError};
use crate::linalg::C64;
use crate::quadric::DefiningFunction;

pub const DEFAULT_GRID: usize = 256;
pub const MAX_GRID: usize = 4096;

thread_local! {
    static PLANS: RefCell<(FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANS.with(|p| {
        let mut p = p.borrow_mut();
        let (planner, cache) = &mut *p;
        cache
            .entry((n, inverse))
            .or_insert_with(|| if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) })
            .clone()
    })
}

/// Coefficients in FFT storage order (index `m mod N`).
pub fn forward(values: &[C64]) -> Vec<C64> {
    let n = values.len();
    let mut buf = values.to_vec();
    plan(n, false).process(&mut buf);
    let s = 1.0 / n as f64;
    buf.iter_mut().for_each(|z| *z *= s);
    buf
}

/// Values from coefficients in FFT storage order.
pub fn inverse(coeffs: &[C64]) -> Vec<C64> {
    let mut buf = coeffs.to_vec();
    plan(coeffs.len(), true).process(&mut buf);
    buf
}

/// Storage slot of mode `m` in a length-`n` coefficient vector.
pub fn slot(m: i64, n: usize) -> usize {
    m.rem_euclid(n as i64) as usize
}

/// Signed mode of storage slot `k`, in `[−N/2, N/2)`.
pub fn mode(k: usize, n: usize) -> i64 {
    if k >= n / 2 {
        k as i64 - n as i64
    } else {
        k as i64
    }
}

pub fn grid(n: usize) -> Vec<C64> {
    (0..n).map(|k| C64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64)).collect()
}

pub fn check_grid(n: usize) -> Result<()> {
    if n < 4 || !n.is_power_of_two() {
        return Err(StatDiscError::InvalidInput(format!("grid size {n} must be a power of two ≥ 4")));
    }
    Ok(())
}

/// Vector-valued function sampled on the circle grid.
#[derive(Debug, Clone)]
pub struct BoundaryFunction {
    n: usize,
    components: Vec<Vec<C64>>,
    coeffs: OnceLock<Vec<Vec<C64>>>,
}

impl PartialEq for BoundaryFunction {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.components == other.components
    }
}

impl BoundaryFunction {
    pub fn new(components: Vec<Vec<C64>>) -> Result<Self> {
        let n = components.first().map_or(0, |c| c.len());
        check_grid(n)?;
        if let Some(bad) = components.iter().find(|c| c.len() != n) {
            return Err(StatDiscError::SizeMismatch { expected: n, got: bad.len() });
        }
        Ok(Self { n, components, coeffs: OnceLock::new() })
    }

    pub fn scalar(values: Vec<C64>) -> Result<Self> {
        Self::new(vec![values])
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::scalar(values.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// Samples `f` at the `n` grid nodes; `f` returns all components at once.
    pub fn sample<F: Fn(C64) -> Vec<C64>>(n: usize, f: F) -> Result<Self> {
        check_grid(n)?;
        let rows: Vec<Vec<C64>> = grid(n).into_iter().map(f).collect();
        let dim = rows.first().map_or(0, |r| r.len());
        let components = (0..dim).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
        Self::new(components)
    }

    /// Inverse transform of per-component coefficients in storage order.
    pub fn synth(coeffs: Vec<Vec<C64>>) -> Result<Self> {
        Self::new(coeffs.iter().map(|c| inverse(c)).collect())
    }

    pub fn grid_size(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, j: usize) -> &[C64] {
        &self.components[j]
    }

    pub fn components(&self) -> &[Vec<C64>] {
        &self.components
    }

    /// All components at node `k`.
    pub fn at(&self, k: usize) -> Vec<C64> {
        self.components.iter().map(|c| c[k]).collect()
    }

    pub fn nodes(&self) -> Vec<C64> {
        grid(self.n)
    }

    /// Per-component coefficients in storage order, computed once.
    pub fn coefficients(&self) -> &[Vec<C64>] {
        self.coeffs.get_or_init(|| self.components.iter().map(|c| forward(c)).collect())
    }

    /// `ĉ_m` of component `j`.
    pub fn coeff(&self, j: usize, m: i64) -> C64 {
        self.coefficients()[j][slot(m, self.n)]
    }

    pub fn map<F: Fn(&[C64]) -> Vec<C64>>(&self, f: F) -> Result<Self> {
        let rows: Vec<Vec<C64>> = (0..self.n).map(|k| f(&self.at(k))).collect();
        let dim = rows.first().map_or(0, |r| r.len());
        Self::new((0..dim).map(|j| rows.iter().map(|r| r[j]).collect()).collect())
    }

    fn real_component(&self) -> Result<Vec<f64>> {
        if self.dim() != 1 {
            return Err(StatDiscError::SizeMismatch { expected: 1, got: self.dim() });
        }
        let v = &self.components[0];
        let scale = v.iter().fold(1.0f64, |m, z| m.max(z.norm()));
        if v.iter().any(|z| z.im.abs() > 1e-14 * scale) {
            return Err(StatDiscError::InvalidInput("expected a real-valued function".into()));
        }
        Ok(v.iter().map(|z| z.re).collect())
    }
}

/// Harmonic conjugate operator: multiplier `−i·sign(m)`, mode 0 and the
/// Nyquist mode removed. `T(cos mθ) = sin mθ`, `T(sin mθ) = −cos mθ`.
pub fn hilbert(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut c = forward(&values.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>());
    for (k, ck) in c.iter_mut().enumerate() {
        let m = mode(k, n);
        *ck = if m == 0 || m == -(n as i64 / 2) {
            C64::new(0.0, 0.0)
        } else {
            *ck * C64::new(0.0, -(m.signum() as f64))
        };
    }
    inverse(&c).into_iter().map(|z| z.re).collect()
}

pub fn hilbert_transform(g: &BoundaryFunction) -> Result<BoundaryFunction> {
    BoundaryFunction::from_real(&hilbert(&g.real_component()?))
}

/// Relative ℓ² mass of the negative modes (Nyquist included), jointly over components.
pub fn holomorphic_defect(bf: &BoundaryFunction) -> f64 {
    let n = bf.grid_size();
    let (mut neg, mut total) = (0.0, 0.0);
    for c in bf.coefficients() {
        for (k, ck) in c.iter().enumerate() {
            let w = ck.norm_sqr();
            total += w;
            if mode(k, n) < 0 {
                neg += w;
            }
        }
    }
    if total == 0.0 {
        0.0
    } else {
        (neg / total).sqrt()
    }
}

pub fn holomorphic_defect_values(values: &[C64]) -> f64 {
    BoundaryFunction::scalar(values.to_vec()).map(|b| holomorphic_defect(&b)).unwrap_or(f64::INFINITY)
}

/// Winding number about 0 of a nonvanishing scalar boundary function.
pub fn winding_number(values: &[C64]) -> Result<i64> {
    let min_modulus = values.iter().fold(f64::INFINITY, |m, z| m.min(z.norm()));
    if !(min_modulus > 1e-8) {
        return Err(StatDiscError::WindingUndefined { min_modulus });
    }
    let n = values.len();
    let mut total = 0.0;
    for k in 0..n {
        let step = (values[(k + 1) % n] / values[k]).arg();
        if step.abs() >= 0.9 * PI {
            return Err(StatDiscError::Resolution { step });
        }
        total += step;
    }
    Ok((total / (2.0 * PI)).round() as i64)
}

/// Positive boundary factor `λ` and regular lift `h* = λ·∂ρ(h)`.
#[derive(Debug, Clone)]
pub struct RegularLift {
    pub lambda: Vec<f64>,
    pub h_star: BoundaryFunction,
    /// Coordinate `j ≥ 1` whose `ζ·∂ρ/∂z_j` was used for the logarithm.
    pub pivot: usize,
    /// Amount by which the largest angular gap of `φ` exceeds `π`.
    pub half_plane_margin: f64,
}

/// Angular margin of the half-plane condition and relative minimum modulus.
pub fn half_plane_margin(values: &[C64]) -> (f64, f64) {
    let max_mod = values.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let min_mod = values.iter().fold(f64::INFINITY, |m, z| m.min(z.norm()));
    if max_mod == 0.0 {
        return (-PI, 0.0);
    }
    let mut angles: Vec<f64> = values.iter().map(|z| z.arg()).collect();
    angles.sort_by(f64::total_cmp);
    let mut gap = angles[0] + 2.0 * PI - angles[angles.len() - 1];
    for w in angles.windows(2) {
        gap = gap.max(w[1] - w[0]);
    }
    (gap - PI, min_mod / max_mod)
}

const MARGIN_TOL: f64 = 1e-9;
const MODULUS_TOL: f64 = 1e-10;

/// Builds the regular lift of the boundary `h` of a (near-)stationary disc.
///
/// With `φ = ζ·∂ρ/∂z_j∘h` and `ψ = log φ`, the factor `λ = exp(U − Re ψ)` with
/// `U = −T(Im ψ)` makes `ζλ∂ρ/∂z_j∘h = exp(U + i Im ψ)` holomorphic. The default
/// coordinate is `j = n`; another `j` is used when `φ_n` violates the
/// half-plane condition and `φ_j` does not.
pub fn construct_regular_lift(m: &dyn DefiningFunction, h: &BoundaryFunction) -> Result<RegularLift> {
    let n = m.n();
    if h.dim() != n + 1 {
        return Err(StatDiscError::SizeMismatch { expected: n + 1, got: h.dim() });
    }
    let nodes = h.nodes();
    let grads: Vec<Vec<C64>> = (0..h.grid_size()).map(|k| m.gradient(&h.at(k))).collect();
    let phi_of = |j: usize| -> Vec<C64> { nodes.iter().zip(&grads).map(|(z, g)| z * g[j]).collect() };
    let mut best: Option<(usize, f64)> = None;
    for j in (1..=n).rev() {
        let (margin, rel_min) = half_plane_margin(&phi_of(j));
        if margin > MARGIN_TOL && rel_min > MODULUS_TOL {
            if j == n {
                best = Some((j, margin));
                break;
            }
            if best.is_none_or(|(_, b)| margin > b) {
                best = Some((j, margin));
            }
        }
    }
    let (pivot, margin) = best.ok_or_else(|| {
        let (margin, rel_min) = half_plane_margin(&phi_of(n));
        StatDiscError::LiftConstruction(format!(
            "ζ·∂ρ/∂z_j∘h leaves every half-plane (margin {margin:.3e}, relative min modulus {rel_min:.3e})"
        ))
    })?;
    let phi = phi_of(pivot);
    let mut arg = Vec::with_capacity(phi.len());
    let mut prev = phi[0].arg();
    arg.push(prev);
    for k in 1..phi.len() {
        prev += (phi[k] / phi[k - 1]).arg();
        arg.push(prev);
    }
    let u: Vec<f64> = hilbert(&arg).into_iter().map(|t| -t).collect();
    let lambda: Vec<f64> = phi.iter().zip(&u).map(|(p, uk)| (uk - p.norm().ln()).exp()).collect();
    let comps = (0..=n).map(|j| grads.iter().zip(&lambda).map(|(g, l)| g[j] * *l).collect()).collect();
    Ok(RegularLift { lambda, h_star: BoundaryFunction::new(comps)?, pivot, half_plane_margin: margin })
}

/// `ζ·h*` componentwise.
pub fn times_zeta(h_star: &BoundaryFunction) -> BoundaryFunction {
    let nodes = h_star.nodes();
    let comps = h_star
        .components()
        .iter()
        .map(|c| c.iter().zip(&nodes).map(|(v, z)| v * z).collect())
        .collect();
    BoundaryFunction::new(comps).expect("same grid")
}

/// Largest holomorphic defect of `ζ·h*_j` over the components.
pub fn lift_defect(h_star: &BoundaryFunction) -> f64 {
    times_zeta(h_star)
        .components()
        .iter()
        .map(|c| holomorphic_defect_values(c))
        .fold(0.0, f64::max)
}

/// Samples `h` on successively doubled grids (from `start` up to [`MAX_GRID`])
/// until the constructed lift has defect below `tol`. Returns the last attempt.
pub fn refined_lift<F: Fn(C64) -> Vec<C64>>(
    m: &dyn DefiningFunction,
    h: F,
    start: usize,
    tol: f64,
) -> Result<(BoundaryFunction, RegularLift, f64)> {
    let mut n = start;
    loop {
        let bf = BoundaryFunction::sample(n, &h)?;
        let lift = construct_regular_lift(m, &bf)?;
        let defect = lift_defect(&lift.h_star);
        if defect < tol || n >= MAX_GRID {
            return Ok((bf, lift, defect));
        }
        n *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;
    use crate::quadric::Hyperquadric;

    #[test]
    fn fourier_examples() {
        let b = BoundaryFunction::sample(64, |z| vec![z]).unwrap();
        for m in -32..32 {
            let want = if m == 1 { 1.0 } else { 0.0 };
            assert!((b.coeff(0, m) - c(want, 0.0)).norm() < 1e-14);
        }
        let g = BoundaryFunction::sample(256, |z| vec![C64::new(1.0, 0.0) / (C64::new(1.0, 0.0) - 0.5 * z)]).unwrap();
        for m in 0..40 {
            assert!((g.coeff(0, m) - c(0.5f64.powi(m as i32), 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn hilbert_examples() {
        let n = 64;
        let th: Vec<f64> = (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect();
        let t = hilbert(&th.iter().map(|t| t.cos()).collect::<Vec<_>>());
        assert!(th.iter().zip(&t).all(|(a, b)| (a.sin() - b).abs() < 1e-14));
        assert!(hilbert(&vec![3.0; n]).iter().all(|x| x.abs() < 1e-14));
        let g: Vec<f64> = th.iter().map(|t| t.sin()).collect();
        let t = hilbert(&g);
        assert!(th.iter().zip(&t).all(|(a, b)| (a.cos() + b).abs() < 1e-14));
        let holo: Vec<C64> = t.iter().zip(&g).map(|(tt, gg)| c(-tt, *gg)).collect();
        assert!(holomorphic_defect_values(&holo) < 1e-14);
    }

    #[test]
    fn defect_examples() {
        assert!(holomorphic_defect(&BoundaryFunction::sample(64, |z| vec![z * z]).unwrap()) < 1e-14);
        let d = holomorphic_defect(&BoundaryFunction::sample(64, |z| vec![z.conj()]).unwrap());
        assert!((d - 1.0).abs() < 1e-14);
    }

    #[test]
    fn winding_examples() {
        let five = BoundaryFunction::sample(64, |_| vec![c(5.0, 0.0)]).unwrap();
        assert_eq!(winding_number(five.component(0)).unwrap(), 0);
        let cube = BoundaryFunction::sample(64, |z| vec![z * z * z]).unwrap();
        assert_eq!(winding_number(cube.component(0)).unwrap(), 3);
        let zero = vec![C64::new(0.0, 0.0); 8];
        assert!(matches!(winding_number(&zero), Err(StatDiscError::WindingUndefined { .. })));
        let fast = BoundaryFunction::sample(8, |z| vec![z.powi(4)]).unwrap();
        assert!(matches!(winding_number(fast.component(0)), Err(StatDiscError::Resolution { .. })));
    }

    #[test]
    fn lift_of_linear_disc() {
        let q = Hyperquadric::identity(1);
        let h = BoundaryFunction::sample(64, |z| vec![c(1.0, 0.0), z]).unwrap();
        let lift = construct_regular_lift(&q, &h).unwrap();
        assert!(lift.lambda.iter().all(|l| (l - 1.0).abs() < 1e-13));
        for (k, z) in h.nodes().iter().enumerate() {
            assert!((lift.h_star.component(0)[k] - c(0.5, 0.0)).norm() < 1e-13);
            assert!((lift.h_star.component(1)[k] + z.conj()).norm() < 1e-13);
        }
        assert!(lift_defect(&lift.h_star) < 1e-14);
    }

    #[test]
    fn lift_rejects_constant_disc() {
        let q = Hyperquadric::identity(1);
        let h = BoundaryFunction::sample(64, |_| vec![c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert!(matches!(construct_regular_lift(&q, &h), Err(StatDiscError::LiftConstruction(_))));
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(BoundaryFunction::new(vec![vec![C64::new(0.0, 0.0); 12]]).is_err());
        assert!(BoundaryFunction::new(vec![vec![C64::new(0.0, 0.0); 8], vec![C64::new(0.0, 0.0); 16]]).is_err());
        let complex = BoundaryFunction::sample(8, |z| vec![z]).unwrap();
        assert!(hilbert_transform(&complex).is_err());
    }
}
