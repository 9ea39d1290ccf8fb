//! Hyperquadrics `Re z₀ = ᵗz̄_α A z_α`, their polynomial perturbations, and the
//! existence test for centered stationary discs.
//!
//! Convention: `∂/∂z = (∂/∂x − i ∂/∂y)/2` and `∂/∂z̄ = (∂/∂x + i ∂/∂y)/2`.
//! Real coordinates of `z ∈ ℂⁿ⁺¹` are laid out in blocks
//! `(Re z₀, Im z₀, Re z₁, …, Re z_n, Im z₁, …, Im z_n)`.

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::error::{Result, StatDiscError};
use crate::linalg::{c, is_finite_c, CMat, C64};

const HERMITIAN_TOL: f64 = 1e-14;
const IMAG_PART_TOL: f64 = 1e-12;
pub const DEFAULT_CONDITION_BOUND: f64 = 1e12;

/// A real defining function on `ℂⁿ⁺¹` together with its Wirtinger derivatives.
pub trait DefiningFunction: Sync {
    /// Complex tangent dimension `n`.
    fn n(&self) -> usize;
    fn value(&self, z: &[C64]) -> f64;
    /// `(∂f/∂z_0, …, ∂f/∂z_n)`.
    fn gradient(&self, z: &[C64]) -> Vec<C64>;
    /// `(hol[j][k], mixed[j][k]) = (∂_k ∂_j f, ∂̄_k ∂_j f)`, flattened row-major in `(j, k)`.
    fn second(&self, z: &[C64]) -> (Vec<C64>, Vec<C64>);
}

/// Non-degenerate hyperquadric `{r = 0}` with `r(z) = Re z₀ − ᵗz̄_α A z_α`.
///
/// Serialized as `{"n": n, "A": [[re, im], …]}` with `A` row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QuadricWire", into = "QuadricWire")]
pub struct Hyperquadric {
    n: usize,
    a: CMat,
}

impl Hyperquadric {
    pub fn new(a: CMat) -> Result<Self> {
        Self::with_condition_bound(a, DEFAULT_CONDITION_BOUND)
    }

    pub fn with_condition_bound(a: CMat, max_condition: f64) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return Err(StatDiscError::InvalidInput("A must be a non-empty square matrix".into()));
        }
        if a.iter().any(|z| !is_finite_c(*z)) {
            return Err(StatDiscError::InvalidInput("A has non-finite entries".into()));
        }
        for i in 0..n {
            for j in 0..n {
                if (a[(i, j)] - a[(j, i)].conj()).norm() > HERMITIAN_TOL {
                    return Err(StatDiscError::InvalidInput(format!(
                        "A is not Hermitian at ({i}, {j})"
                    )));
                }
            }
        }
        let eig = SymmetricEigen::new(a.clone()).eigenvalues;
        let smallest = eig.iter().fold(f64::INFINITY, |m, &x| m.min(x.abs()));
        let largest = eig.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
        if smallest == 0.0 || largest / smallest > max_condition {
            return Err(StatDiscError::InvalidInput(format!(
                "A is degenerate or ill-conditioned (condition {:e})",
                largest / smallest
            )));
        }
        Ok(Self { n, a })
    }

    /// The sphere model `A = I_n`.
    pub fn identity(n: usize) -> Self {
        Self { n, a: CMat::identity(n, n) }
    }

    /// Real diagonal `A`.
    pub fn diagonal(entries: &[f64]) -> Result<Self> {
        let n = entries.len();
        let mut a = CMat::zeros(n, n);
        for (i, &d) in entries.iter().enumerate() {
            a[(i, i)] = c(d, 0.0);
        }
        Self::new(a)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &CMat {
        &self.a
    }

    /// Hermitian form `ᵗū A v`.
    pub fn form(&self, u: &[C64], v: &[C64]) -> C64 {
        let mut s = C64::new(0.0, 0.0);
        for i in 0..self.n {
            let mut row = C64::new(0.0, 0.0);
            for j in 0..self.n {
                row += self.a[(i, j)] * v[j];
            }
            s += u[i].conj() * row;
        }
        s
    }

    /// Row covector `ᵗū A`.
    pub fn covector(&self, u: &[C64]) -> Vec<C64> {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| u[i].conj() * self.a[(i, j)]).sum())
            .collect()
    }

    fn check_point(&self, z: &[C64]) -> Result<()> {
        if z.len() != self.n + 1 {
            return Err(StatDiscError::SizeMismatch { expected: self.n + 1, got: z.len() });
        }
        if z.iter().any(|w| !is_finite_c(*w)) {
            return Err(StatDiscError::InvalidInput("non-finite point".into()));
        }
        Ok(())
    }

    /// `r(z) = Re z₀ − ᵗz̄_α A z_α`.
    pub fn eval_r(&self, z: &[C64]) -> Result<f64> {
        self.check_point(z)?;
        let q = self.form(&z[1..], &z[1..]);
        let scale = 1.0 + q.norm();
        if q.im.abs() > IMAG_PART_TOL * scale {
            return Err(StatDiscError::InvalidInput(format!(
                "quadratic form has imaginary part {:e}",
                q.im
            )));
        }
        Ok(z[0].re - q.re)
    }

    /// `∂r/∂z = (1/2, −ᵗz̄_α A)`.
    pub fn grad_r(&self, z: &[C64]) -> Result<Vec<C64>> {
        self.check_point(z)?;
        Ok(self.gradient_unchecked(z))
    }

    fn gradient_unchecked(&self, z: &[C64]) -> Vec<C64> {
        let mut g = Vec::with_capacity(self.n + 1);
        g.push(c(0.5, 0.0));
        g.extend(self.covector(&z[1..]).into_iter().map(|x| -x));
        g
    }

    /// Decides whether a non-constant stationary disc centered at `p` exists.
    ///
    /// Such discs are characterized by `ᵗw̄Aw = x₀` with `x₀ = Re p₀ − ᵗp̄_α A p_α`.
    /// The sign requirement follows from that identity: for positive definite `A`
    /// it needs `x₀ > 0`, which is also what Condition ∗ states.
    pub fn exists_disc_centered(&self, p: &[C64]) -> Result<CenteredExistence> {
        let x0 = self.eval_r(p)?;
        let eig = SymmetricEigen::new(self.a.clone());
        let mut order: Vec<usize> = (0..self.n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let lo = order[0];
        let hi = order[self.n - 1];
        let (lam_lo, lam_hi) = (eig.eigenvalues[lo], eig.eigenvalues[hi]);
        let vec_of = |k: usize| normalize_phase(eig.eigenvectors.column(k).iter().copied().collect());
        let case = if lam_lo > 0.0 {
            ExistenceCase::PositiveDefinite
        } else if lam_hi < 0.0 {
            ExistenceCase::NegativeDefinite
        } else {
            ExistenceCase::Indefinite
        };
        let zero_tol = 1e-14 * (1.0 + p.iter().map(|z| z.norm_sqr()).sum::<f64>());
        let scaled = |k: usize, lam: f64| -> Vec<C64> {
            let s = (x0 / lam).sqrt();
            vec_of(k).into_iter().map(|z| z * s).collect()
        };
        let witness = match case {
            ExistenceCase::PositiveDefinite if x0 > zero_tol => Some(scaled(hi, lam_hi)),
            ExistenceCase::NegativeDefinite if x0 < -zero_tol => Some(scaled(lo, lam_lo)),
            ExistenceCase::Indefinite => Some(if x0 > zero_tol {
                scaled(hi, lam_hi)
            } else if x0 < -zero_tol {
                scaled(lo, lam_lo)
            } else {
                let t = (lam_hi / -lam_lo).sqrt();
                vec_of(hi).iter().zip(vec_of(lo)).map(|(a, b)| a + b * t).collect()
            }),
            _ => None,
        };
        let on_axis = p[1..].iter().all(|z| *z == C64::new(0.0, 0.0));
        let condition_star = on_axis.then(|| {
            let re = p[0].re;
            re != 0.0
                && match case {
                    ExistenceCase::PositiveDefinite => re > 0.0,
                    ExistenceCase::NegativeDefinite => re < 0.0,
                    ExistenceCase::Indefinite => true,
                }
        });
        Ok(CenteredExistence { exists: witness.is_some(), witness, case, x0, condition_star })
    }
}

/// Rotate a vector so that its largest-modulus entry is real and positive.
fn normalize_phase(v: Vec<C64>) -> Vec<C64> {
    let big = v.iter().copied().fold(C64::new(0.0, 0.0), |m, z| if z.norm() > m.norm() { z } else { m });
    if big.norm() == 0.0 {
        return v;
    }
    let rot = big.conj() / big.norm();
    v.into_iter().map(|z| z * rot).collect()
}

impl DefiningFunction for Hyperquadric {
    fn n(&self) -> usize {
        self.n
    }

    fn value(&self, z: &[C64]) -> f64 {
        z[0].re - self.form(&z[1..], &z[1..]).re
    }

    fn gradient(&self, z: &[C64]) -> Vec<C64> {
        self.gradient_unchecked(z)
    }

    fn second(&self, _z: &[C64]) -> (Vec<C64>, Vec<C64>) {
        let d = self.n + 1;
        let hol = vec![C64::new(0.0, 0.0); d * d];
        let mut mixed = vec![C64::new(0.0, 0.0); d * d];
        // ∂̄_k ∂_j r = −a_{kj}
        for j in 1..d {
            for k in 1..d {
                mixed[j * d + k] = -self.a[(k - 1, j - 1)];
            }
        }
        (hol, mixed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExistenceCase {
    PositiveDefinite,
    NegativeDefinite,
    Indefinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CenteredExistence {
    pub exists: bool,
    /// `w ≠ 0` with `ᵗw̄Aw = x₀`.
    pub witness: Option<Vec<C64>>,
    pub case: ExistenceCase,
    /// `r(p)`.
    pub x0: f64,
    /// Condition ∗, evaluated only for centers of the form `(p₀, 0, …, 0)`.
    pub condition_star: Option<bool>,
}

/// One monomial `coeff · Π x_i^{e_i}` in the real coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Monomial {
    pub exponents: Vec<u32>,
    pub coeff: f64,
}

/// Real polynomial in `2n+2` real variables, differentiated exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct RealPolynomial {
    vars: usize,
    terms: Vec<Monomial>,
}

impl RealPolynomial {
    pub fn new(vars: usize, terms: Vec<Monomial>) -> Result<Self> {
        let mut merged: Vec<Monomial> = Vec::new();
        for t in terms {
            if t.exponents.len() != vars {
                return Err(StatDiscError::SizeMismatch { expected: vars, got: t.exponents.len() });
            }
            if !t.coeff.is_finite() {
                return Err(StatDiscError::InvalidInput("non-finite coefficient".into()));
            }
            match merged.iter_mut().find(|m| m.exponents == t.exponents) {
                Some(m) => m.coeff += t.coeff,
                None => merged.push(t),
            }
        }
        merged.retain(|m| m.coeff != 0.0);
        Ok(Self { vars, terms: merged })
    }

    pub fn zero(vars: usize) -> Self {
        Self { vars, terms: Vec::new() }
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|t| t.exponents.iter().sum()).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coeff * t.exponents.iter().zip(x).map(|(&e, &xi)| xi.powi(e as i32)).product::<f64>())
            .sum()
    }

    /// Exact partial derivative in variable `var`.
    pub fn derivative(&self, var: usize) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|t| t.exponents[var] > 0)
            .map(|t| {
                let mut e = t.exponents.clone();
                let k = e[var];
                e[var] -= 1;
                Monomial { exponents: e, coeff: t.coeff * k as f64 }
            })
            .collect();
        Self { vars: self.vars, terms }
    }
}

/// Index of `Re z_j` (or `Im z_j`) in the block real layout.
pub fn real_index(n: usize, j: usize, imaginary: bool) -> usize {
    match (j, imaginary) {
        (0, false) => 0,
        (0, true) => 1,
        (j, false) => 1 + j,
        (j, true) => 1 + n + j,
    }
}

pub fn real_coordinates(z: &[C64]) -> Vec<f64> {
    let n = z.len() - 1;
    let mut x = vec![0.0; 2 * n + 2];
    for (j, w) in z.iter().enumerate() {
        x[real_index(n, j, false)] = w.re;
        x[real_index(n, j, true)] = w.im;
    }
    x
}

/// `ρ = r + ε·s` for a polynomial `s` in the real coordinates.
///
/// Serialized as the quadric plus `"epsilon"` and
/// `"terms": [{"multi_index": [e₁, …, e_{2n+2}], "coeff": c}, …]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "SurfaceWire", into = "SurfaceWire")]
pub struct PerturbedHypersurface {
    base: Hyperquadric,
    poly: RealPolynomial,
    epsilon: f64,
    grad: Vec<RealPolynomial>,
    hess: Vec<RealPolynomial>,
}

impl PerturbedHypersurface {
    pub fn new(base: Hyperquadric, poly: RealPolynomial, epsilon: f64) -> Result<Self> {
        let d = 2 * base.n() + 2;
        if poly.vars() != d {
            return Err(StatDiscError::SizeMismatch { expected: d, got: poly.vars() });
        }
        if !epsilon.is_finite() {
            return Err(StatDiscError::InvalidInput("non-finite epsilon".into()));
        }
        let grad: Vec<_> = (0..d).map(|i| poly.derivative(i)).collect();
        let hess = (0..d * d).map(|ij| grad[ij / d].derivative(ij % d)).collect();
        Ok(Self { base, poly, epsilon, grad, hess })
    }

    pub fn unperturbed(base: Hyperquadric) -> Self {
        let d = 2 * base.n() + 2;
        Self::new(base, RealPolynomial::zero(d), 0.0).expect("zero perturbation is valid")
    }

    pub fn base(&self) -> &Hyperquadric {
        &self.base
    }

    pub fn polynomial(&self) -> &RealPolynomial {
        &self.poly
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Same perturbation with a different scale.
    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        Self { epsilon, ..self.clone() }
    }

    fn is_exact_quadric(&self) -> bool {
        self.epsilon == 0.0 || self.poly.terms.is_empty()
    }

    pub fn eval_rho(&self, z: &[C64]) -> Result<f64> {
        let r = self.base.eval_r(z)?;
        if self.is_exact_quadric() {
            return Ok(r);
        }
        Ok(r + self.epsilon * self.poly.eval(&real_coordinates(z)))
    }

    pub fn grad_rho(&self, z: &[C64]) -> Result<Vec<C64>> {
        self.base.check_point(z)?;
        Ok(self.gradient(z))
    }

    /// Largest `|ε ∂^β s|` over `|β| ≤ 3`, sampled at `samples` deterministic
    /// points of the closed ball of the given radius around `center`.
    pub fn c3_size(&self, center: &[C64], radius: f64, samples: usize) -> f64 {
        if self.is_exact_quadric() {
            return 0.0;
        }
        let d = 2 * self.base.n() + 2;
        let mut derivs = vec![self.poly.clone()];
        let mut frontier = vec![(self.poly.clone(), 0usize)];
        for _ in 0..3 {
            let mut next = Vec::new();
            for (p, start) in &frontier {
                for v in *start..d {
                    let q = p.derivative(v);
                    if !q.terms.is_empty() {
                        derivs.push(q.clone());
                        next.push((q, v));
                    }
                }
            }
            frontier = next;
        }
        let x0 = real_coordinates(center);
        let mut best = 0.0f64;
        for k in 0..samples.max(1) {
            let x: Vec<f64> = ball_point(k, d).iter().zip(&x0).map(|(u, c)| c + radius * u).collect();
            for p in &derivs {
                best = best.max((self.epsilon * p.eval(&x)).abs());
            }
        }
        best
    }
}

/// Deterministic point of the unit ball in `ℝ^d` (Halton directions, radial
/// coordinate spread uniformly in volume); index 0 is the center.
fn ball_point(k: usize, d: usize) -> Vec<f64> {
    if k == 0 {
        return vec![0.0; d];
    }
    const PRIMES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];
    let halton = |mut i: u64, b: u64| {
        let (mut f, mut r) = (1.0, 0.0);
        while i > 0 {
            f /= b as f64;
            r += f * (i % b) as f64;
            i /= b;
        }
        r
    };
    let u: Vec<f64> = (0..=d).map(|j| halton(k as u64, PRIMES[j % PRIMES.len()])).collect();
    let dir: Vec<f64> = u[..d].iter().map(|x| 2.0 * x - 1.0).collect();
    let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
    let radial = u[d].powf(1.0 / d as f64);
    dir.iter().map(|x| x / norm * radial).collect()
}

impl DefiningFunction for PerturbedHypersurface {
    fn n(&self) -> usize {
        self.base.n()
    }

    fn value(&self, z: &[C64]) -> f64 {
        let r = self.base.value(z);
        if self.is_exact_quadric() {
            return r;
        }
        r + self.epsilon * self.poly.eval(&real_coordinates(z))
    }

    fn gradient(&self, z: &[C64]) -> Vec<C64> {
        let mut g = self.base.gradient_unchecked(z);
        if self.is_exact_quadric() {
            return g;
        }
        let n = self.base.n();
        let x = real_coordinates(z);
        for (j, gj) in g.iter_mut().enumerate() {
            let dx = self.grad[real_index(n, j, false)].eval(&x);
            let dy = self.grad[real_index(n, j, true)].eval(&x);
            *gj += c(0.5 * self.epsilon * dx, -0.5 * self.epsilon * dy);
        }
        g
    }

    fn second(&self, z: &[C64]) -> (Vec<C64>, Vec<C64>) {
        let (mut hol, mut mixed) = self.base.second(z);
        if self.is_exact_quadric() {
            return (hol, mixed);
        }
        let n = self.base.n();
        let d = n + 1;
        let dr = 2 * n + 2;
        let x = real_coordinates(z);
        let h = |a: usize, b: usize| self.hess[a * dr + b].eval(&x);
        let e = 0.25 * self.epsilon;
        for j in 0..d {
            let (xj, yj) = (real_index(n, j, false), real_index(n, j, true));
            for k in 0..d {
                let (xk, yk) = (real_index(n, k, false), real_index(n, k, true));
                let (xx, xy, yx, yy) = (h(xk, xj), h(xk, yj), h(yk, xj), h(yk, yj));
                hol[j * d + k] += c(e * (xx - yy), -e * (xy + yx));
                mixed[j * d + k] += c(e * (xx + yy), e * (yx - xy));
            }
        }
        (hol, mixed)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuadricWire {
    n: usize,
    #[serde(rename = "A")]
    a: Vec<C64>,
}

impl QuadricWire {
    fn matrix(&self) -> Result<CMat> {
        if self.a.len() != self.n * self.n {
            return Err(StatDiscError::SizeMismatch { expected: self.n * self.n, got: self.a.len() });
        }
        Ok(CMat::from_row_slice(self.n, self.n, &self.a))
    }
}

impl From<Hyperquadric> for QuadricWire {
    fn from(q: Hyperquadric) -> Self {
        let n = q.n;
        Self { n, a: (0..n * n).map(|k| q.a[(k / n, k % n)]).collect() }
    }
}

impl TryFrom<QuadricWire> for Hyperquadric {
    type Error = StatDiscError;

    fn try_from(w: QuadricWire) -> Result<Self> {
        Hyperquadric::new(w.matrix()?)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermWire {
    multi_index: Vec<u32>,
    coeff: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SurfaceWire {
    n: usize,
    #[serde(rename = "A")]
    a: Vec<C64>,
    #[serde(default)]
    epsilon: f64,
    #[serde(default)]
    terms: Vec<TermWire>,
}

impl From<PerturbedHypersurface> for SurfaceWire {
    fn from(m: PerturbedHypersurface) -> Self {
        let QuadricWire { n, a } = m.base.into();
        let terms = m.poly.terms.into_iter().map(|t| TermWire { multi_index: t.exponents, coeff: t.coeff }).collect();
        Self { n, a, epsilon: m.epsilon, terms }
    }
}

impl TryFrom<SurfaceWire> for PerturbedHypersurface {
    type Error = StatDiscError;

    fn try_from(w: SurfaceWire) -> Result<Self> {
        let base = Hyperquadric::new(QuadricWire { n: w.n, a: w.a }.matrix()?)?;
        let terms = w.terms.into_iter().map(|t| Monomial { exponents: t.multi_index, coeff: t.coeff }).collect();
        let poly = RealPolynomial::new(2 * w.n + 2, terms)?;
        PerturbedHypersurface::new(base, poly, w.epsilon)
    }
}
