//! The discretized stationarity system.
//!
//! Unknowns: holomorphic Taylor coefficients `H_{j,m}` (`m = 0..=M`) of `h` and
//! coefficients `μ_m` (`m = 1..=M`) of `log λ = 2 Re Σ μ_m ζ^m`. Equations:
//! `ρ∘h = 0` on the grid, the negative Fourier modes of `ζλ ∂ρ/∂z_j∘h`, and
//! optional linear constraints on `h(1)` and `h'(0)`. A pinned center removes
//! the `m = 0` unknowns.

use crate::boundary;
use crate::linalg::{RMat, RVec, C64};
use crate::quadric::DefiningFunction;

/// Spectral state of a disc and its lift factor.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients {
    /// `h[j][m]`, `m = 0..=M`.
    pub h: Vec<Vec<C64>>,
    /// `mu[m − 1]` for `m = 1..=M`.
    pub mu: Vec<C64>,
}

impl Coefficients {
    pub fn modes(&self) -> usize {
        self.mu.len()
    }

    pub fn values(&self, grid: usize) -> Vec<Vec<C64>> {
        self.h.iter().map(|hj| synth(hj, grid)).collect()
    }

    /// `log λ` on the grid.
    pub fn log_lambda(&self, grid: usize) -> Vec<f64> {
        let mut buf = vec![C64::new(0.0, 0.0); grid];
        for (k, mu) in self.mu.iter().enumerate() {
            buf[k + 1] += mu;
            buf[grid - k - 1] += mu.conj();
        }
        boundary::inverse(&buf).into_iter().map(|z| z.re).collect()
    }

    /// `h(ζ)` for `|ζ| ≤ 1` by Horner's rule.
    pub fn eval(&self, zeta: C64) -> Vec<C64> {
        self.h.iter().map(|hj| hj.iter().rev().fold(C64::new(0.0, 0.0), |acc, c| acc * zeta + c)).collect()
    }

    pub fn velocity(&self) -> Vec<C64> {
        self.h.iter().map(|hj| hj[1]).collect()
    }

    pub fn center(&self) -> Vec<C64> {
        self.h.iter().map(|hj| hj[0]).collect()
    }
}

fn synth(coeffs: &[C64], grid: usize) -> Vec<C64> {
    let mut buf = vec![C64::new(0.0, 0.0); grid];
    buf[..coeffs.len()].copy_from_slice(coeffs);
    boundary::inverse(&buf)
}

/// Linear side conditions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Constraints {
    /// `h(0) = p`, imposed by elimination.
    pub center: Option<Vec<C64>>,
    /// `Im h₀(1) = Im z₀` and `h_α(1) = z_α`.
    pub endpoint: Option<Vec<C64>>,
    /// `h'(0) = v`.
    pub velocity: Option<Vec<C64>>,
}

impl Constraints {
    pub fn pinned(center: Vec<C64>) -> Self {
        Self { center: Some(center), ..Self::default() }
    }

    /// Only the center pin, which defines the family.
    pub(crate) fn family(&self) -> Self {
        Self { center: self.center.clone(), ..Self::default() }
    }
}

/// Residual norms at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    /// `max_k |ρ(h(ζ_k))|`.
    pub boundary: f64,
    /// Largest negative Fourier mode of `ζλ ∂ρ/∂z_j∘h`.
    pub stationarity: f64,
    pub constraints: f64,
}

impl Norms {
    pub fn max(&self) -> f64 {
        self.boundary.max(self.stationarity).max(self.constraints)
    }
}

pub(crate) struct System<'a> {
    m: &'a dyn DefiningFunction,
    n: usize,
    grid: usize,
    modes: usize,
    cons: Constraints,
    nodes: Vec<C64>,
}

pub(crate) struct Evaluation {
    pub residual: RVec,
    pub norms: Norms,
    pub jacobian: Option<RMat>,
}

impl<'a> System<'a> {
    pub fn new(m: &'a dyn DefiningFunction, grid: usize, modes: usize, cons: Constraints) -> Self {
        Self { n: m.n(), m, grid, modes, cons, nodes: boundary::grid(grid) }
    }

    fn first_mode(&self) -> usize {
        usize::from(self.cons.center.is_some())
    }

    fn negative_modes(&self) -> usize {
        self.grid / 2 - 1
    }

    pub fn unknowns(&self) -> usize {
        2 * (self.n + 1) * (self.modes + 1 - self.first_mode()) + 2 * self.modes
    }

    /// Real index of `Re H_{j,m}` (`Im` follows).
    fn h_col(&self, j: usize, m: usize) -> usize {
        let per = self.modes + 1 - self.first_mode();
        2 * (j * per + m - self.first_mode())
    }

    fn mu_col(&self, m: usize) -> usize {
        2 * (self.n + 1) * (self.modes + 1 - self.first_mode()) + 2 * (m - 1)
    }

    pub fn pack(&self, c: &Coefficients) -> RVec {
        let mut x = RVec::zeros(self.unknowns());
        for j in 0..=self.n {
            for m in self.first_mode()..=self.modes {
                let i = self.h_col(j, m);
                x[i] = c.h[j][m].re;
                x[i + 1] = c.h[j][m].im;
            }
        }
        for m in 1..=self.modes {
            let i = self.mu_col(m);
            x[i] = c.mu[m - 1].re;
            x[i + 1] = c.mu[m - 1].im;
        }
        x
    }

    pub fn unpack(&self, x: &RVec, template: &Coefficients) -> Coefficients {
        let mut h = template.h.clone();
        if let Some(p) = &self.cons.center {
            for j in 0..=self.n {
                h[j][0] = p[j];
            }
        }
        for j in 0..=self.n {
            for m in self.first_mode()..=self.modes {
                let i = self.h_col(j, m);
                h[j][m] = C64::new(x[i], x[i + 1]);
            }
        }
        let mu = (1..=self.modes).map(|m| C64::new(x[self.mu_col(m)], x[self.mu_col(m) + 1])).collect();
        Coefficients { h, mu }
    }

    fn constraint_rows(&self) -> usize {
        self.cons.endpoint.as_ref().map_or(0, |_| 2 * self.n + 1) + self.cons.velocity.as_ref().map_or(0, |_| 2 * self.n + 2)
    }

    pub fn rows(&self) -> usize {
        self.grid + 2 * (self.n + 1) * self.negative_modes() + self.constraint_rows()
    }

    pub fn evaluate(&self, c: &Coefficients, jacobian: bool) -> Evaluation {
        let (n, g, kneg) = (self.n, self.grid, self.negative_modes());
        let d = n + 1;
        let sqrt_g = (g as f64).sqrt();
        let h = c.values(g);
        let lambda: Vec<f64> = c.log_lambda(g).into_iter().map(f64::exp).collect();
        let points: Vec<Vec<C64>> = (0..g).map(|k| (0..d).map(|j| h[j][k]).collect()).collect();
        let grads: Vec<Vec<C64>> = points.iter().map(|z| self.m.gradient(z)).collect();

        let mut r = RVec::zeros(self.rows());
        let mut norms = Norms { boundary: 0.0, stationarity: 0.0, constraints: 0.0 };
        for (k, z) in points.iter().enumerate() {
            let v = self.m.value(z);
            norms.boundary = norms.boundary.max(v.abs());
            r[k] = v / sqrt_g;
        }
        // Fourier coefficients of ζλ ∂ρ/∂z_j∘h.
        let lifted: Vec<Vec<C64>> = (0..d)
            .map(|j| {
                let vals: Vec<C64> = (0..g).map(|k| self.nodes[k] * lambda[k] * grads[k][j]).collect();
                boundary::forward(&vals)
            })
            .collect();
        let neg_row = |j: usize, l: usize| g + 2 * (j * kneg + l - 1);
        for j in 0..d {
            for l in 1..=kneg {
                let cf = lifted[j][boundary::slot(-(l as i64), g)];
                norms.stationarity = norms.stationarity.max(cf.norm());
                let row = neg_row(j, l);
                r[row] = cf.re;
                r[row + 1] = cf.im;
            }
        }
        let mut row = g + 2 * d * kneg;
        let cons_start = row;
        if let Some(z) = &self.cons.endpoint {
            let end = c.eval(C64::new(1.0, 0.0));
            r[row] = end[0].im - z[0].im;
            row += 1;
            for j in 1..d {
                let e = end[j] - z[j];
                r[row] = e.re;
                r[row + 1] = e.im;
                row += 2;
            }
        }
        if let Some(v) = &self.cons.velocity {
            for j in 0..d {
                let e = c.h[j][1] - v[j];
                r[row] = e.re;
                r[row + 1] = e.im;
                row += 2;
            }
        }
        norms.constraints = (cons_start..row).fold(0.0, |acc, i| acc.max(r[i].abs()));

        let jacobian = jacobian.then(|| {
            let mut jm = RMat::zeros(self.rows(), self.unknowns());
            // FFTs of ζλ·(∂_k∂_j ρ) and ζλ·(∂̄_k∂_j ρ).
            let seconds: Vec<(Vec<C64>, Vec<C64>)> = points.iter().map(|z| self.m.second(z)).collect();
            let spectra = |pick: &dyn Fn(&(Vec<C64>, Vec<C64>)) -> &Vec<C64>, j: usize, k: usize| {
                let vals: Vec<C64> =
                    (0..g).map(|i| self.nodes[i] * lambda[i] * pick(&seconds[i])[j * d + k]).collect();
                boundary::forward(&vals)
            };
            let zero = C64::new(0.0, 0.0);
            for kc in 0..d {
                let hol: Vec<Vec<C64>> = (0..d).map(|j| spectra(&|s| &s.0, j, kc)).collect();
                let mixed: Vec<Vec<C64>> = (0..d).map(|j| spectra(&|s| &s.1, j, kc)).collect();
                let hol_zero: Vec<bool> = hol.iter().map(|v| v.iter().all(|x| *x == zero)).collect();
                for m in self.first_mode()..=self.modes {
                    let col = self.h_col(kc, m);
                    for (part, u) in [C64::new(1.0, 0.0), C64::new(0.0, 1.0)].into_iter().enumerate() {
                        let cidx = col + part;
                        for i in 0..g {
                            let dh = u * self.nodes[(i * m) % g];
                            jm[(i, cidx)] = 2.0 * (grads[i][kc] * dh).re / sqrt_g;
                        }
                        for j in 0..d {
                            for l in 1..=kneg {
                                let a = if hol_zero[j] {
                                    zero
                                } else {
                                    u * hol[j][boundary::slot(-(l as i64) - m as i64, g)]
                                };
                                let b = u.conj() * mixed[j][boundary::slot(m as i64 - l as i64, g)];
                                let e = a + b;
                                let rr = neg_row(j, l);
                                jm[(rr, cidx)] = e.re;
                                jm[(rr + 1, cidx)] = e.im;
                            }
                        }
                    }
                }
            }
            for m in 1..=self.modes {
                let col = self.mu_col(m);
                for (part, u) in [C64::new(1.0, 0.0), C64::new(0.0, 1.0)].into_iter().enumerate() {
                    for j in 0..d {
                        for l in 1..=kneg {
                            let e = u * lifted[j][boundary::slot(-(l as i64) - m as i64, g)]
                                + u.conj() * lifted[j][boundary::slot(m as i64 - l as i64, g)];
                            let rr = neg_row(j, l);
                            jm[(rr, col + part)] = e.re;
                            jm[(rr + 1, col + part)] = e.im;
                        }
                    }
                }
            }
            let mut row = cons_start;
            if self.cons.endpoint.is_some() {
                for m in self.first_mode()..=self.modes {
                    jm[(row, self.h_col(0, m) + 1)] = 1.0;
                }
                row += 1;
                for j in 1..d {
                    for m in self.first_mode()..=self.modes {
                        let col = self.h_col(j, m);
                        jm[(row, col)] = 1.0;
                        jm[(row + 1, col + 1)] = 1.0;
                    }
                    row += 2;
                }
            }
            if self.cons.velocity.is_some() {
                for j in 0..d {
                    let col = self.h_col(j, 1);
                    jm[(row, col)] = 1.0;
                    jm[(row + 1, col + 1)] = 1.0;
                    row += 2;
                }
            }
            jm
        });
        Evaluation { residual: r, norms, jacobian }
    }

    /// Real linear maps `x ↦ (Im h₀(1), h_α(1))` and `x ↦ h'(0)` on the unknowns.
    pub fn endpoint_map(&self) -> RMat {
        let d = self.n + 1;
        let mut e = RMat::zeros(2 * self.n + 1, self.unknowns());
        for m in self.first_mode()..=self.modes {
            e[(0, self.h_col(0, m) + 1)] = 1.0;
            for j in 1..d {
                let col = self.h_col(j, m);
                e[(2 * j - 1, col)] = 1.0;
                e[(2 * j, col + 1)] = 1.0;
            }
        }
        e
    }

    pub fn velocity_map(&self) -> RMat {
        let d = self.n + 1;
        let mut v = RMat::zeros(2 * d, self.unknowns());
        for j in 0..d {
            let col = self.h_col(j, 1);
            v[(2 * j, col)] = 1.0;
            v[(2 * j + 1, col + 1)] = 1.0;
        }
        v
    }
}
