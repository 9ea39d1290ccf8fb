//! Scalar and matrix Laurent polynomials in `ζ`.

use crate::boundary;
use crate::error::{Result, StatDiscError};
use crate::linalg::{CMat, C64};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };

/// `Σ_k coeffs[k] ζ^{lo+k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaurentPoly {
    lo: i64,
    coeffs: Vec<C64>,
}

impl LaurentPoly {
    pub fn new(lo: i64, coeffs: Vec<C64>) -> Self {
        let mut p = Self { lo, coeffs };
        p.trim_exact();
        p
    }

    pub fn zero() -> Self {
        Self { lo: 0, coeffs: Vec::new() }
    }

    pub fn constant(c: C64) -> Self {
        Self::new(0, vec![c])
    }

    pub fn monomial(c: C64, k: i64) -> Self {
        Self::new(k, vec![c])
    }

    /// `(1 − βζ)^power`.
    pub fn one_minus(beta: C64, power: u32) -> Self {
        let f = Self::new(0, vec![C64::new(1.0, 0.0), -beta]);
        (0..power).fold(Self::constant(C64::new(1.0, 0.0)), |acc, _| acc.mul(&f))
    }

    /// `(1 − βζ⁻¹)^power`.
    pub fn one_minus_inv(beta: C64, power: u32) -> Self {
        let f = Self::new(-1, vec![-beta, C64::new(1.0, 0.0)]);
        (0..power).fold(Self::constant(C64::new(1.0, 0.0)), |acc, _| acc.mul(&f))
    }

    fn trim_exact(&mut self) {
        while self.coeffs.last() == Some(&ZERO) {
            self.coeffs.pop();
        }
        let lead = self.coeffs.iter().take_while(|c| **c == ZERO).count();
        if lead > 0 {
            self.coeffs.drain(..lead);
            self.lo += lead as i64;
        }
        if self.coeffs.is_empty() {
            self.lo = 0;
        }
    }

    /// Zero out coefficients with modulus `≤ tol` at both ends.
    pub fn trimmed(&self, tol: f64) -> Self {
        let mut c = self.coeffs.clone();
        while c.last().is_some_and(|z| z.norm() <= tol) {
            c.pop();
        }
        let lead = c.iter().take_while(|z| z.norm() <= tol).count();
        Self::new(self.lo + lead as i64, c.split_off(lead))
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Lowest power present (0 for the zero polynomial).
    pub fn lo(&self) -> i64 {
        self.lo
    }

    /// Highest power present; `None` for the zero polynomial.
    pub fn hi(&self) -> Option<i64> {
        (!self.coeffs.is_empty()).then(|| self.lo + self.coeffs.len() as i64 - 1)
    }

    pub fn coeff(&self, k: i64) -> C64 {
        let i = k - self.lo;
        if i < 0 || i >= self.coeffs.len() as i64 {
            ZERO
        } else {
            self.coeffs[i as usize]
        }
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn eval(&self, z: C64) -> C64 {
        let p = self.coeffs.iter().rev().fold(ZERO, |acc, c| acc * z + c);
        p * z.powi(self.lo as i32)
    }

    pub fn add(&self, other: &Self) -> Self {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let lo = self.lo.min(other.lo);
        let hi = self.hi().unwrap().max(other.hi().unwrap());
        Self::new(lo, (lo..=hi).map(|k| self.coeff(k) + other.coeff(k)).collect())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::new(self.lo, self.coeffs.iter().map(|c| c * s).collect())
    }

    /// Multiply by `ζ^k`.
    pub fn shift(&self, k: i64) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        Self { lo: self.lo + k, coeffs: self.coeffs.clone() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::zero();
        }
        let mut c = vec![ZERO; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        Self::new(self.lo + other.lo, c)
    }

    /// `ζ ↦ conj(p(1/ζ̄))`, which equals `conj(p(ζ))` on the circle.
    pub fn reflect_conj(&self) -> Self {
        match self.hi() {
            None => Self::zero(),
            Some(hi) => Self::new(-hi, self.coeffs.iter().rev().map(|c| c.conj()).collect()),
        }
    }

    /// Quotient by `(ζ − root)` and the modulus of the discarded remainder. The recursion runs from the stable end: upward for
    /// `|root| > 1`, downward otherwise.
    pub fn divide_linear(&self, root: C64) -> (Self, f64) {
        let d = self.coeffs.len();
        if d <= 1 {
            return (Self::zero(), self.coeffs.first().map_or(0.0, |c| c.norm()));
        }
        let p = &self.coeffs;
        let mut q = vec![ZERO; d - 1];
        let rem = if root.norm() > 1.0 {
            q[0] = -p[0] / root;
            for k in 1..d - 1 {
                q[k] = (q[k - 1] - p[k]) / root;
            }
            p[d - 1] - q[d - 2]
        } else {
            q[d - 2] = p[d - 1];
            for k in (1..d - 1).rev() {
                q[k - 1] = p[k] + root * q[k];
            }
            p[0] + root * q[0]
        };
        (Self::new(self.lo, q), rem.norm())
    }

    /// Recovers a Laurent polynomial supported in `[lo, hi]` from samples on a
    /// grid; fails when the samples carry mass outside that band.
    pub fn from_samples(values: &[C64], lo: i64, hi: i64, tol: f64) -> Result<Self> {
        let n = values.len();
        if (hi - lo + 1) as usize > n {
            return Err(StatDiscError::Approximation(format!("band [{lo}, {hi}] exceeds grid {n}")));
        }
        let c = boundary::forward(values);
        let scale = c.iter().fold(0.0f64, |m, z| m.max(z.norm())).max(f64::MIN_POSITIVE);
        let inside = |k: usize| {
            let m = (k as i64 - lo).rem_euclid(n as i64) + lo;
            (lo..=hi).contains(&m)
        };
        let outside = (0..n).filter(|&k| !inside(k)).fold(0.0f64, |m, k| m.max(c[k].norm()));
        if outside > tol * scale {
            return Err(StatDiscError::Approximation(format!(
                "out-of-band Fourier mass {:e} relative to {:e}",
                outside, scale
            )));
        }
        Ok(Self::new(lo, (lo..=hi).map(|m| c[boundary::slot(m, n)]).collect()))
    }
}

/// Matrix whose entries are Laurent polynomials.
#[derive(Debug, Clone, PartialEq)]
pub struct LaurentMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<LaurentPoly>,
}

impl LaurentMatrix {
    pub fn from_fn<F: FnMut(usize, usize) -> LaurentPoly>(rows: usize, cols: usize, mut f: F) -> Self {
        let entries = (0..rows * cols).map(|k| f(k / cols, k % cols)).collect();
        Self { rows, cols, entries }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| LaurentPoly::zero())
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { LaurentPoly::constant(C64::new(1.0, 0.0)) } else { LaurentPoly::zero() })
    }

    /// Diagonal matrix with the given entries.
    pub fn diagonal(d: &[LaurentPoly]) -> Self {
        Self::from_fn(d.len(), d.len(), |i, j| if i == j { d[i].clone() } else { LaurentPoly::zero() })
    }

    /// Constant matrix.
    pub fn constant(m: &CMat) -> Self {
        Self::from_fn(m.nrows(), m.ncols(), |i, j| LaurentPoly::constant(m[(i, j)]))
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &LaurentPoly {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, p: LaurentPoly) {
        self.entries[i * self.cols + j] = p;
    }

    pub fn eval(&self, z: C64) -> CMat {
        CMat::from_fn(self.rows, self.cols, |i, j| self.get(i, j).eval(z))
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions");
        Self::from_fn(self.rows, other.cols, |i, j| {
            (0..self.cols).fold(LaurentPoly::zero(), |acc, k| acc.add(&self.get(i, k).mul(other.get(k, j))))
        })
    }

    pub fn scale(&self, s: &LaurentPoly) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self.get(i, j).mul(s))
    }

    /// `ζ ↦ conj(M(1/ζ̄))` entrywise (no transpose).
    pub fn reflect_conj(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self.get(i, j).reflect_conj())
    }

    /// Smallest and largest powers over all entries.
    pub fn band(&self) -> Option<(i64, i64)> {
        self.entries.iter().filter(|p| !p.is_zero()).fold(None, |acc, p| {
            let (lo, hi) = (p.lo(), p.hi().unwrap());
            Some(acc.map_or((lo, hi), |(a, b): (i64, i64)| (a.min(lo), b.max(hi))))
        })
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, p| m.max(p.max_abs()))
    }

    /// Entrywise [`LaurentPoly::from_samples`].
    pub fn from_samples(samples: &[CMat], lo: i64, hi: i64, tol: f64) -> Result<Self> {
        let (rows, cols) = samples[0].shape();
        let scale = samples.iter().fold(0.0f64, |m, s| m.max(s.camax())).max(f64::MIN_POSITIVE);
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                let v: Vec<C64> = samples.iter().map(|s| s[(i, j)]).collect();
                let vmax = v.iter().fold(0.0f64, |m, z| m.max(z.norm()));
                let p = if vmax <= 1e-15 * scale {
                    LaurentPoly::zero()
                } else {
                    LaurentPoly::from_samples(&v, lo, hi, tol * scale / vmax)?
                };
                entries.push(p.trimmed(1e-15 * scale));
            }
        }
        Ok(Self { rows, cols, entries })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c;

    #[test]
    fn arithmetic_and_eval() {
        let p = LaurentPoly::new(-1, vec![c(1.0, 0.0), c(0.0, 2.0), c(3.0, 0.0)]);
        let z = C64::from_polar(1.0, 0.4);
        let direct = 1.0 / z + c(0.0, 2.0) + 3.0 * z;
        assert!((p.eval(z) - direct).norm() < 1e-14);
        let q = p.mul(&p.reflect_conj());
        assert!((q.eval(z) - direct * direct.conj()).norm() < 1e-13);
        assert_eq!(p.sub(&p), LaurentPoly::zero());
        assert_eq!(LaurentPoly::one_minus(c(0.5, 0.0), 2).coeffs(), &[c(1.0, 0.0), c(-1.0, 0.0), c(0.25, 0.0)]);
    }

    #[test]
    fn linear_division_both_directions() {
        for root in [c(2.5, -1.0), c(0.3, 0.2)] {
            let q = LaurentPoly::new(-2, vec![c(1.0, 1.0), c(-2.0, 0.0), c(0.5, 0.0), c(0.0, 3.0)]);
            let p = q.mul(&LaurentPoly::new(0, vec![-root, c(1.0, 0.0)]));
            let (back, rem) = p.divide_linear(root);
            assert!(rem < 1e-14);
            assert!(back.sub(&q).max_abs() < 1e-13);
        }
    }

    #[test]
    fn band_check_from_samples() {
        let grid = boundary::grid(32);
        let v: Vec<C64> = grid.iter().map(|z| 1.0 / z + 2.0 * z * z).collect();
        let p = LaurentPoly::from_samples(&v, -1, 2, 1e-12).unwrap();
        assert!((p.coeff(-1) - 1.0).norm() < 1e-14 && (p.coeff(2) - 2.0).norm() < 1e-14);
        assert!(LaurentPoly::from_samples(&v, 0, 2, 1e-12).is_err());
    }
}
