//! Stationary discs glued to a hyperquadric: closed form, inversion from
//! boundary values, regular lifts, projectivized lifts and discs through a
//! prescribed boundary point.

use crate::boundary::{self, BoundaryFunction};
use crate::error::{Result, StatDiscError};
use crate::linalg::{is_finite_c, C64};
use crate::quadric::{DefiningFunction, Hyperquadric};

const POLE_TOL: f64 = 1e-12;
const A_MAX: f64 = 1.0 - 1e-10;

/// Parameters `(y₀, v, w, a)` of a stationary disc: `Im h₀(0)`, `h_α(0)`,
/// `h'_α(0)` and the pole parameter.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DiscParams {
    pub y0: f64,
    pub v: Vec<C64>,
    pub w: Vec<C64>,
    pub a: C64,
}

impl DiscParams {
    pub fn new(y0: f64, v: Vec<C64>, w: Vec<C64>, a: C64) -> Result<Self> {
        let p = Self { y0, v, w, a };
        p.validate()?;
        Ok(p)
    }

    /// The disc `ζ ↦ (vAv + ᵗw̄Aw + i y₀ …, v + wζ)` with `a = 0`.
    pub fn centered(w: Vec<C64>) -> Self {
        let n = w.len();
        Self { y0: 0.0, v: vec![C64::new(0.0, 0.0); n], w, a: C64::new(0.0, 0.0) }
    }

    pub fn n(&self) -> usize {
        self.w.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.v.len() != self.w.len() || self.w.is_empty() {
            return Err(StatDiscError::InvalidParams("v and w must have the same positive length".into()));
        }
        let finite = self.y0.is_finite()
            && is_finite_c(self.a)
            && self.v.iter().chain(&self.w).all(|z| is_finite_c(*z));
        if !finite {
            return Err(StatDiscError::InvalidParams("non-finite parameter".into()));
        }
        if self.a.norm() > A_MAX {
            return Err(StatDiscError::InvalidParams(format!("|a| = {} is not < 1", self.a.norm())));
        }
        if norm(&self.w) == 0.0 {
            return Err(StatDiscError::InvalidParams("w must be nonzero".into()));
        }
        Ok(())
    }

    /// `‖(y₀, v, w, a)‖²`.
    pub fn norm_sqr(&self) -> f64 {
        self.y0 * self.y0 + norm_sqr(&self.v) + norm_sqr(&self.w) + self.a.norm_sqr()
    }
}

pub(crate) fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

pub(crate) fn norm(v: &[C64]) -> f64 {
    norm_sqr(v).sqrt()
}

/// A stationary disc of a hyperquadric, evaluated in closed form.
#[derive(Debug, Clone)]
pub struct Disc {
    params: DiscParams,
    quadric: Hyperquadric,
    waw: f64,
    vav: f64,
    vaw: C64,
}

impl Disc {
    pub fn new(quadric: &Hyperquadric, params: DiscParams) -> Result<Self> {
        params.validate()?;
        if params.n() != quadric.n() {
            return Err(StatDiscError::SizeMismatch { expected: quadric.n(), got: params.n() });
        }
        let waw = quadric.form(&params.w, &params.w).re;
        let vav = quadric.form(&params.v, &params.v).re;
        let vaw = quadric.form(&params.v, &params.w);
        Ok(Self { params, quadric: quadric.clone(), waw, vav, vaw })
    }

    pub fn params(&self) -> &DiscParams {
        &self.params
    }

    pub fn quadric(&self) -> &Hyperquadric {
        &self.quadric
    }

    /// `ᵗw̄Aw`.
    pub fn w_form(&self) -> f64 {
        self.waw
    }

    /// `h(ζ)`; a hard error within `1e-12` of the pole `1/a`.
    pub fn eval(&self, zeta: C64) -> Result<Vec<C64>> {
        let p = &self.params;
        let den = C64::new(1.0, 0.0) - p.a * zeta;
        if den.norm() < POLE_TOL {
            return Err(StatDiscError::Pole);
        }
        let xi = zeta / den;
        let k = self.waw / (1.0 - p.a.norm_sqr());
        let h0 = self.vav + 2.0 * self.vaw * xi + k * (C64::new(1.0, 0.0) + p.a * zeta) / den + C64::new(0.0, p.y0);
        let mut h = Vec::with_capacity(p.n() + 1);
        h.push(h0);
        h.extend(p.v.iter().zip(&p.w).map(|(v, w)| v + w * xi));
        Ok(h)
    }

    /// `h(0)`.
    pub fn center(&self) -> Vec<C64> {
        let p = &self.params;
        let k = self.waw / (1.0 - p.a.norm_sqr());
        let mut h = vec![C64::new(self.vav + k, p.y0)];
        h.extend(p.v.iter().copied());
        h
    }

    /// `h'(0) = (2ᵗv̄Aw + 2a·ᵗw̄Aw/(1−|a|²), w)`.
    pub fn velocity(&self) -> Vec<C64> {
        let p = &self.params;
        let mut d = vec![2.0 * self.vaw + 2.0 * p.a * self.waw / (1.0 - p.a.norm_sqr())];
        d.extend(p.w.iter().copied());
        d
    }

    /// `h(1)`.
    pub fn endpoint(&self) -> Result<Vec<C64>> {
        self.eval(C64::new(1.0, 0.0))
    }

    /// Taylor coefficients `H_{j,m}`, `m = 0..=order`, per component.
    pub fn taylor(&self, order: usize) -> Vec<Vec<C64>> {
        let p = &self.params;
        let k = self.waw / (1.0 - p.a.norm_sqr());
        let n = p.n();
        let mut out = vec![vec![C64::new(0.0, 0.0); order + 1]; n + 1];
        out[0][0] = C64::new(self.vav + k, p.y0);
        let mut apow = C64::new(1.0, 0.0); // a^{m-1}
        for m in 1..=order {
            out[0][m] = 2.0 * self.vaw * apow + 2.0 * k * apow * p.a;
            for j in 0..n {
                out[j + 1][m] = p.w[j] * apow;
            }
            apow *= p.a;
        }
        for j in 0..n {
            out[j + 1][0] = p.v[j];
        }
        out
    }

    pub fn boundary(&self, grid: usize) -> Result<BoundaryFunction> {
        boundary::check_grid(grid)?;
        let rows: Result<Vec<Vec<C64>>> = boundary::grid(grid).into_iter().map(|z| self.eval(z)).collect();
        let rows = rows?;
        BoundaryFunction::new((0..=self.params.n()).map(|j| rows.iter().map(|r| r[j]).collect()).collect())
    }

    /// `max_k |r(h(ζ_k))|`.
    pub fn gluing_residual(&self, grid: usize) -> Result<f64> {
        let b = self.boundary(grid)?;
        Ok((0..grid).map(|k| self.quadric.value(&b.at(k)).abs()).fold(0.0, f64::max))
    }
}

pub fn make_disc(q: &Hyperquadric, p: DiscParams) -> Result<Disc> {
    Disc::new(q, p)
}

/// Recovers `(y₀, v, w, a)` from boundary samples of a stationary disc.
///
/// `h(0)` and `h'(0)` are the Fourier coefficients of order 0 and 1, and
/// `a = θ(1) − iθ(i)` with `θ(ζ) = ‖w‖²/4 (‖h_α(−ζ)−v‖⁻² − ‖h_α(ζ)−v‖⁻²)`,
/// which equals `Re(aζ)` on a stationary disc.
pub fn invert_disc(q: &Hyperquadric, h: &BoundaryFunction) -> Result<DiscParams> {
    let n = q.n();
    if h.dim() != n + 1 {
        return Err(StatDiscError::SizeMismatch { expected: n + 1, got: h.dim() });
    }
    let grid = h.grid_size();
    if !grid.is_multiple_of(4) {
        return Err(StatDiscError::InvalidInput("grid size must be a multiple of 4".into()));
    }
    let y0 = h.coeff(0, 0).im;
    let v: Vec<C64> = (1..=n).map(|j| h.coeff(j, 0)).collect();
    let w: Vec<C64> = (1..=n).map(|j| h.coeff(j, 1)).collect();
    let w2 = norm_sqr(&w);
    if w2.sqrt() < 1e-8 {
        return Err(StatDiscError::DegenerateDisc(format!("‖w‖ = {:e}", w2.sqrt())));
    }
    let dist2 = |k: usize| -> Result<f64> {
        let d: f64 = (1..=n).map(|j| (h.component(j)[k] - v[j - 1]).norm_sqr()).sum();
        if d.sqrt() < 1e-12 {
            return Err(StatDiscError::DegenerateDisc(format!("h_α(ζ_{k}) = h_α(0)")));
        }
        Ok(d)
    };
    let theta = |k: usize, opposite: usize| -> Result<f64> { Ok(w2 / 4.0 * (1.0 / dist2(opposite)? - 1.0 / dist2(k)?)) };
    let (one, minus_one, i, minus_i) = (0, grid / 2, grid / 4, 3 * grid / 4);
    let a = C64::new(theta(one, minus_one)?, -theta(i, minus_i)?);
    DiscParams::new(y0, v, w, a)
}

/// Parameters of the regular lift: a disc and the real scale `b ≠ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftParams {
    pub disc: DiscParams,
    pub b: f64,
}

impl LiftParams {
    pub fn new(disc: DiscParams, b: f64) -> Result<Self> {
        disc.validate()?;
        if b == 0.0 || !b.is_finite() {
            return Err(StatDiscError::InvalidParams("lift scale b must be a nonzero real".into()));
        }
        Ok(Self { disc, b })
    }
}

/// Closed-form regular lift
/// `h*(ζ) = (b/ζ)(−ā/(1+|a|²) + ζ − aζ²/(1+|a|²))·(1/2, −ᵗh̄_α(ζ)A)`.
///
/// The quadratic factor equals `(ζ−ā)(1−aζ)/(1+|a|²)`, and on the circle
/// `h̄_α(ζ) = v̄ + w̄/(ζ−ā)`, so `ζh*` is a polynomial of degree 2.
#[derive(Debug, Clone)]
pub struct ClosedFormLift {
    disc: Disc,
    b: f64,
    vbar_a: Vec<C64>,
    wbar_a: Vec<C64>,
}

impl ClosedFormLift {
    pub fn new(q: &Hyperquadric, l: &LiftParams) -> Result<Self> {
        let disc = Disc::new(q, l.disc.clone())?;
        if l.b == 0.0 || !l.b.is_finite() {
            return Err(StatDiscError::InvalidParams("lift scale b must be a nonzero real".into()));
        }
        let vbar_a = q.covector(&l.disc.v);
        let wbar_a = q.covector(&l.disc.w);
        Ok(Self { disc, b: l.b, vbar_a, wbar_a })
    }

    pub fn disc(&self) -> &Disc {
        &self.disc
    }

    /// `ζ·h*(ζ)`, holomorphic on the closed disc.
    pub fn zeta_times(&self, zeta: C64) -> Vec<C64> {
        let a = self.disc.params.a;
        let s = self.b * (C64::new(1.0, 0.0) - a * zeta) / (1.0 + a.norm_sqr());
        let d = zeta - a.conj();
        let mut out = vec![s * d * 0.5];
        out.extend(self.vbar_a.iter().zip(&self.wbar_a).map(|(va, wa)| -s * (d * va + wa)));
        out
    }

    /// `h*(ζ)` for `ζ ≠ 0`.
    pub fn eval(&self, zeta: C64) -> Result<Vec<C64>> {
        if zeta.norm() == 0.0 {
            return Err(StatDiscError::Pole);
        }
        Ok(self.zeta_times(zeta).into_iter().map(|x| x / zeta).collect())
    }

    /// `c(ζ) = b|1−aζ|²/(1+|a|²)`, the real factor with `h* = c·∂r(h)` on the circle.
    pub fn boundary_factor(&self, zeta: C64) -> f64 {
        let a = self.disc.params.a;
        self.b * (C64::new(1.0, 0.0) - a * zeta).norm_sqr() / (1.0 + a.norm_sqr())
    }

    pub fn boundary(&self, grid: usize) -> Result<BoundaryFunction> {
        boundary::check_grid(grid)?;
        let nodes = boundary::grid(grid);
        let rows: Result<Vec<Vec<C64>>> = nodes.iter().map(|&z| self.eval(z)).collect();
        let rows = rows?;
        BoundaryFunction::new((0..=self.disc.params.n()).map(|j| rows.iter().map(|r| r[j]).collect()).collect())
    }
}

pub fn closed_form_lift(q: &Hyperquadric, l: &LiftParams) -> Result<ClosedFormLift> {
    ClosedFormLift::new(q, l)
}

/// Boundary values of `f = (h, ĥ*)` with `ĥ*_j = h*_j / h*_n`.
#[derive(Debug, Clone)]
pub struct ProjectivizedLift {
    /// `2n+1` components `(h₀, …, h_n, ĥ*₀, …, ĥ*_{n−1})`, in permuted coordinates.
    pub f: BoundaryFunction,
    /// `perm[i]` is the original index of coordinate `i` of the α-block.
    pub permutation: Vec<usize>,
    /// The quadric in permuted coordinates.
    pub quadric: Hyperquadric,
    /// The disc in permuted coordinates.
    pub disc: DiscParams,
}

/// Coordinate order for projectivization: identity when `(ᵗw̄A)_n ≠ 0`,
/// otherwise swap the largest-modulus entry of `ᵗw̄A` into slot `n`.
pub fn normalization_permutation(q: &Hyperquadric, w: &[C64]) -> Result<Vec<usize>> {
    let n = q.n();
    let wa = q.covector(w);
    let scale = norm(&wa);
    let mut perm: Vec<usize> = (0..n).collect();
    if scale == 0.0 {
        return Err(StatDiscError::Normalization("ᵗw̄A vanishes".into()));
    }
    if wa[n - 1].norm() <= 1e-14 * scale {
        let best = (0..n).max_by(|&i, &j| wa[i].norm().total_cmp(&wa[j].norm())).unwrap();
        perm.swap(best, n - 1);
    }
    Ok(perm)
}

impl Hyperquadric {
    /// The same quadric after relabelling α-coordinates by `perm`.
    pub fn permuted(&self, perm: &[usize]) -> Hyperquadric {
        let n = self.n();
        let a = self.matrix();
        let pa = crate::linalg::CMat::from_fn(n, n, |i, j| a[(perm[i], perm[j])]);
        Hyperquadric::new(pa).expect("permutation preserves validity")
    }
}

fn permute(v: &[C64], perm: &[usize]) -> Vec<C64> {
    perm.iter().map(|&i| v[i]).collect()
}

pub fn projectivize_lift(q: &Hyperquadric, l: &LiftParams, grid: usize) -> Result<ProjectivizedLift> {
    let perm = normalization_permutation(q, &l.disc.w)?;
    let pq = q.permuted(&perm);
    let pd = DiscParams { v: permute(&l.disc.v, &perm), w: permute(&l.disc.w, &perm), ..l.disc.clone() };
    let lift = ClosedFormLift::new(&pq, &LiftParams { disc: pd.clone(), b: l.b })?;
    let n = q.n();
    let h = lift.disc.boundary(grid)?;
    let hs = lift.boundary(grid)?;
    let last = hs.component(n);
    let max = last.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    let min = last.iter().fold(f64::INFINITY, |m, z| m.min(z.norm()));
    if !(min > 1e-12 * max) {
        return Err(StatDiscError::Normalization("h*_n vanishes on the circle".into()));
    }
    let mut comps: Vec<Vec<C64>> = h.components().to_vec();
    for j in 0..n {
        comps.push(hs.component(j).iter().zip(last).map(|(x, y)| x / y).collect());
    }
    Ok(ProjectivizedLift { f: BoundaryFunction::new(comps)?, permutation: perm, quadric: pq, disc: pd })
}

/// The disc centered at `p = (p₀, 0)` whose boundary passes through `z ∈ Q` at `ζ = 1`:
/// `a = (z₀−p₀)/(z₀+p̄₀)`, `w = (1−a)z_α`, `v = 0`, `y₀ = Im p₀`.
pub fn disc_through(q: &Hyperquadric, p: &[C64], z: &[C64]) -> Result<DiscParams> {
    let n = q.n();
    if p.len() != n + 1 || z.len() != n + 1 {
        return Err(StatDiscError::SizeMismatch { expected: n + 1, got: p.len().min(z.len()) });
    }
    if p[1..].iter().any(|x| x.norm() != 0.0) {
        return Err(StatDiscError::InvalidInput("center must be of the form (p₀, 0, …, 0)".into()));
    }
    let (p0, z0) = (p[0], z[0]);
    if z0.re * p0.re <= 0.0 {
        return Err(StatDiscError::NotReachable(format!("Re z₀ · Re p₀ = {:e} ≤ 0", z0.re * p0.re)));
    }
    let rz = q.eval_r(z)?;
    if rz.abs() >= 1e-10 {
        return Err(StatDiscError::InvalidInput(format!("z is not on the quadric (r(z) = {rz:e})")));
    }
    let den = z0 + p0.conj();
    if den.norm() < POLE_TOL {
        return Err(StatDiscError::Pole);
    }
    let a = (z0 - p0) / den;
    let w: Vec<C64> = z[1..].iter().map(|x| (C64::new(1.0, 0.0) - a) * x).collect();
    if norm(&w) == 0.0 {
        return Err(StatDiscError::NotReachable("z_α = 0 gives a constant disc".into()));
    }
    DiscParams::new(p0.im, vec![C64::new(0.0, 0.0); n], w, a)
}

/// Result of [`verify_gluing`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct GluingReport {
    pub max_residual: f64,
    pub lift_defect: f64,
}

/// Boundary residual `max |ρ(h(ζ_k))|` and the defect of the constructed lift.
pub fn verify_gluing(m: &dyn DefiningFunction, h: &BoundaryFunction) -> Result<GluingReport> {
    if h.dim() != m.n() + 1 {
        return Err(StatDiscError::SizeMismatch { expected: m.n() + 1, got: h.dim() });
    }
    let max_residual = (0..h.grid_size()).map(|k| m.value(&h.at(k)).abs()).fold(0.0, f64::max);
    let lift = boundary::construct_regular_lift(m, h)?;
    Ok(GluingReport { max_residual, lift_defect: boundary::lift_defect(&lift.h_star) })
}

/// Comparison of the closed-form lift with the one built by
/// [`boundary::construct_regular_lift`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LiftCheck {
    /// `max |Im(h*_j/∂r/∂z_j)| / |h*_j/∂r/∂z_j|` over nodes and components.
    pub realness: f64,
    /// Holomorphic defect of `ζh*` for the closed form.
    pub closed_form_defect: f64,
    pub constructed_defect: f64,
    /// Mean of the ratio closed-form / constructed.
    pub ratio: f64,
    /// `max |ratio_k − mean| / |mean|` over nodes and components.
    pub ratio_spread: f64,
    pub pivot: usize,
}

/// Checks that the closed-form lift is real against `∂r/∂z`, has holomorphic
/// `ζh*`, and agrees with the constructed lift up to a positive factor.
pub fn check_lift(q: &Hyperquadric, l: &LiftParams, grid: usize) -> Result<LiftCheck> {
    let lift = closed_form_lift(q, l)?;
    let closed = lift.boundary(grid)?;
    let h = lift.disc().boundary(grid)?;
    let built = boundary::construct_regular_lift(q, &h)?;
    let mut realness = 0.0f64;
    let mut ratios = Vec::new();
    for k in 0..grid {
        let g = q.gradient(&h.at(k));
        let (c, b) = (closed.at(k), built.h_star.at(k));
        let scale = c.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        for j in 0..=q.n() {
            if g[j].norm() > 1e-12 {
                let t = c[j] / g[j];
                if t.norm() > 0.0 {
                    realness = realness.max(t.im.abs() / t.norm());
                }
            }
            if c[j].norm() > 1e-8 * scale && b[j].norm() > 0.0 {
                ratios.push(c[j] / b[j]);
            }
        }
    }
    if ratios.is_empty() {
        return Err(StatDiscError::LiftConstruction("lift vanishes on the grid".into()));
    }
    let mean = ratios.iter().sum::<C64>() / ratios.len() as f64;
    let ratio_spread = ratios.iter().map(|r| (r - mean).norm()).fold(0.0, f64::max) / mean.norm();
    Ok(LiftCheck {
        realness,
        closed_form_defect: boundary::lift_defect(&closed),
        constructed_defect: boundary::lift_defect(&built.h_star),
        ratio: if mean.re > 0.0 { mean.norm() } else { -mean.norm() },
        ratio_spread,
        pivot: built.pivot,
    })
}
