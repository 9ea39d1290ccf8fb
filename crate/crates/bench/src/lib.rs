//! Fixed workloads shared by the benchmarks.

use statdisc_core::{DiscParams, Hyperquadric, Monomial, PerturbedHypersurface, RealPolynomial, C64};

/// `A = diag(1, …, 1, -1)` for `n ≥ 2`, the sphere model for `n = 1`.
pub fn quadric(n: usize) -> Hyperquadric {
    let mut d = vec![1.0; n];
    if n > 1 {
        d[n - 1] = -1.0;
    }
    Hyperquadric::diagonal(&d).expect("diagonal signs are non-degenerate")
}

/// A disc with every parameter generic.
pub fn params(n: usize) -> DiscParams {
    let v = (0..n).map(|j| C64::new(0.1 * j as f64, -0.05)).collect();
    let w = (0..n).map(|j| C64::new(1.0 / (j + 1) as f64, 0.2)).collect();
    DiscParams::new(0.3, v, w, C64::new(0.25, -0.15)).expect("fixed parameters are valid")
}

/// `Q + ε (Re z₁)⁴`.
pub fn quartic_bump(n: usize, epsilon: f64) -> PerturbedHypersurface {
    let mut e = vec![0u32; 2 * n + 2];
    e[2] = 4;
    let s = RealPolynomial::new(2 * n + 2, vec![Monomial { exponents: e, coeff: 1.0 }]).expect("one monomial");
    PerturbedHypersurface::new(quadric(n), s, epsilon).expect("finite scale")
}

/// Center `(1, 0, …, 0)`.
pub fn unit_center(n: usize) -> Vec<C64> {
    let mut p = vec![C64::new(0.0, 0.0); n + 1];
    p[0] = C64::new(1.0, 0.0);
    p
}
