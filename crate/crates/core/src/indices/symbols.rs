//! Matrix symbols of the projectivized conormal bundle along a stationary disc.

use crate::boundary::{self, BoundaryFunction, DEFAULT_GRID};
use crate::disc::{self, DiscParams, LiftParams, ProjectivizedLift};
use crate::error::{Result, StatDiscError};
use crate::linalg::{self, CMat, C64, I};
use crate::quadric::Hyperquadric;

use super::factor::{self, PartialIndices, RationalSymbol};
use super::laurent::{LaurentMatrix, LaurentPoly};

const SINGULAR_TOL: f64 = 1e-10;
const EXACT_TOL: f64 = 1e-10;
const BAND_TOL: f64 = 1e-9;
const TRUNCATION_DEFECT: f64 = 1e-10;

fn one() -> C64 {
    C64::new(1.0, 0.0)
}

/// A matrix function on the unit circle, sampled on a uniform grid, with an
/// optional exact rational form.
#[derive(Debug, Clone)]
pub struct MatrixSymbol {
    samples: Vec<CMat>,
    exact: Option<RationalSymbol>,
}

impl MatrixSymbol {
    pub fn from_samples(samples: Vec<CMat>) -> Result<Self> {
        boundary::check_grid(samples.len())?;
        let n = samples[0].nrows();
        if samples.iter().any(|s| s.nrows() != n || s.ncols() != n) {
            return Err(StatDiscError::InvalidInput("symbol samples must be square of equal size".into()));
        }
        for (k, s) in samples.iter().enumerate() {
            let sv = linalg::singular_values_c(s);
            if !(sv[n - 1] > SINGULAR_TOL * sv[0]) {
                return Err(StatDiscError::SymbolSingular { node: k });
            }
        }
        Ok(Self { samples, exact: None })
    }

    /// Samples `f` on a grid of `grid` nodes.
    pub fn sample<F: Fn(C64) -> CMat>(grid: usize, f: F) -> Result<Self> {
        boundary::check_grid(grid)?;
        Self::from_samples(boundary::grid(grid).into_iter().map(f).collect())
    }

    pub fn from_exact(exact: RationalSymbol, grid: usize) -> Result<Self> {
        boundary::check_grid(grid)?;
        let samples = exact.samples(grid);
        Ok(Self { exact: Some(exact), ..Self::from_samples(samples)? })
    }

    /// Attaches an exact form after checking it reproduces the samples.
    pub fn with_exact(self, exact: RationalSymbol) -> Result<Self> {
        let nodes = boundary::grid(self.grid_size());
        let scale = self.samples.iter().fold(0.0f64, |m, s| m.max(s.camax()));
        let err = nodes.iter().zip(&self.samples).fold(0.0f64, |m, (z, s)| m.max((exact.eval(*z) - s).camax()));
        if err > EXACT_TOL * scale {
            return Err(StatDiscError::Approximation(format!("exact form misses the samples by {err:e}")));
        }
        Ok(Self { exact: Some(exact), ..self })
    }

    pub fn size(&self) -> usize {
        self.samples[0].nrows()
    }

    pub fn grid_size(&self) -> usize {
        self.samples.len()
    }

    pub fn samples(&self) -> &[CMat] {
        &self.samples
    }

    pub fn exact(&self) -> Option<&RationalSymbol> {
        self.exact.as_ref()
    }

    pub fn determinants(&self) -> Vec<C64> {
        self.samples.iter().map(linalg::det_c).collect()
    }
}

/// Winding number of `det B` about 0.
pub fn maslov_index(b: &MatrixSymbol) -> Result<i64> {
    let d = b.determinants();
    let scale = d.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    boundary::winding_number(&d.iter().map(|z| z / scale).collect::<Vec<_>>())
}

/// Partial indices from the exact form, or from a Laurent truncation of the
/// samples when no exact form is attached.
pub fn partial_indices(b: &MatrixSymbol) -> Result<PartialIndices> {
    let out = match b.exact() {
        Some(r) => factor::factorize(r)?,
        None => factor::factorize(&RationalSymbol::polynomial(truncate(b)?)?)?,
    };
    let total = maslov_index(b)?;
    if out.total != total {
        return Err(StatDiscError::Factorization(format!(
            "partial indices sum to {}, determinant winds {total} times",
            out.total
        )));
    }
    Ok(out)
}

/// Smallest Laurent band reproducing the samples to [`TRUNCATION_DEFECT`].
fn truncate(b: &MatrixSymbol) -> Result<LaurentMatrix> {
    let g = b.grid_size();
    let n = b.size();
    let mut size = vec![0.0f64; g];
    for i in 0..n {
        for j in 0..n {
            let v: Vec<C64> = b.samples.iter().map(|s| s[(i, j)]).collect();
            for (k, c) in boundary::forward(&v).iter().enumerate() {
                size[k] = size[k].max(c.norm());
            }
        }
    }
    let max = size.iter().fold(0.0f64, |m, &x| m.max(x));
    let half = g as i64 / 2;
    let keep = |m: i64| size[boundary::slot(m, g)] > TRUNCATION_DEFECT * 1e-3 * max;
    let hi = (0..half).rev().find(|&m| keep(m)).unwrap_or(0);
    let lo = (-half + 1..=0).find(|&m| keep(m)).unwrap_or(0);
    if hi - lo + 1 > g as i64 / 4 {
        return Err(StatDiscError::Approximation(format!("no Laurent truncation: modes [{lo}, {hi}] on grid {g}")));
    }
    let lm = LaurentMatrix::from_samples(&b.samples, lo, hi, 1.0)?;
    let scale = b.samples.iter().fold(0.0f64, |m, s| m.max(s.camax()));
    let defect = boundary::grid(g)
        .iter()
        .zip(&b.samples)
        .fold(0.0f64, |m, (z, s)| m.max((lm.eval(*z) - s).camax()));
    if defect > TRUNCATION_DEFECT * scale {
        return Err(StatDiscError::Approximation(format!("truncation defect {defect:e}")));
    }
    Ok(lm)
}

/// `G(ζ) = (∂r_i/∂z̄_j)` at a point `(z, t)` of the projectivized conormal bundle.
///
/// Rows: `r`, then `Re` of the `j = 1..n−1` equations, `Re` of `j = 0`, then
/// the imaginary parts in the same order. Columns: `z̄₀, …, z̄_n, t̄₀, …, t̄_{n−1}`.
pub fn g_matrix(q: &Hyperquadric, z: &[C64], t: &[C64]) -> CMat {
    let n = q.n();
    let a = q.matrix();
    let dim = 2 * n + 1;
    let az: Vec<C64> = (0..n).map(|k| (0..n).map(|j| a[(k, j)] * z[1 + j]).sum()).collect();
    let lnz = az[n - 1];
    let mut g = CMat::zeros(dim, dim);
    g[(0, 0)] = C64::new(0.5, 0.0);
    for k in 0..n {
        g[(0, 1 + k)] = -az[k];
    }
    let order: Vec<usize> = (1..n).chain([0]).collect();
    for (r, &j) in order.iter().enumerate() {
        let (re_row, im_row) = (1 + r, 1 + n + r);
        for k in 0..n {
            let mut e = -a[(n - 1, k)].conj() * t[j];
            if j >= 1 {
                e += a[(j - 1, k)].conj();
            }
            g[(re_row, 1 + k)] = e;
            g[(im_row, 1 + k)] = I * e;
        }
        let col = n + 1 + j;
        g[(re_row, col)] = -lnz;
        g[(im_row, col)] = I * lnz;
    }
    g
}

/// `G` sampled along a projectivized lift `f = (z₀, …, z_n, t₀, …, t_{n−1})`.
pub fn build_g(q: &Hyperquadric, f: &BoundaryFunction) -> Result<MatrixSymbol> {
    let n = q.n();
    if f.dim() != 2 * n + 1 {
        return Err(StatDiscError::SizeMismatch { expected: 2 * n + 1, got: f.dim() });
    }
    let samples = (0..f.grid_size())
        .map(|k| {
            let v = f.at(k);
            g_matrix(q, &v[..=n], &v[n + 1..])
        })
        .collect();
    MatrixSymbol::from_samples(samples)
}

/// Which form of the boundary symbol to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SymbolSource {
    /// The reduced matrix obtained after the appendix column operations.
    ClosedForm,
    /// `−Ḡ⁻¹G` along the projectivized lift.
    GBased,
}

pub fn build_b(q: &Hyperquadric, params: &DiscParams, source: SymbolSource, grid: usize) -> Result<MatrixSymbol> {
    match source {
        SymbolSource::ClosedForm => closed_form_b(q, params, grid),
        SymbolSource::GBased => g_based_b(q, params, grid),
    }
}

fn normalized_params(q: &Hyperquadric, params: &DiscParams) -> Result<DiscParams> {
    params.validate()?;
    if params.n() != q.n() {
        return Err(StatDiscError::SizeMismatch { expected: q.n(), got: params.n() });
    }
    let perm = disc::normalization_permutation(q, &params.w)?;
    let pick = |v: &[C64]| perm.iter().map(|&i| v[i]).collect::<Vec<_>>();
    Ok(DiscParams { v: pick(&params.v), w: pick(&params.w), ..params.clone() })
}

/// Exact rational form of the reduced symbol.
pub fn closed_form_rational(q: &Hyperquadric, params: &DiscParams) -> Result<RationalSymbol> {
    let p = normalized_params(q, params)?;
    let n = q.n();
    let dim = 2 * n + 1;
    let a = p.a;
    let qw = C64::new(2.0 * q.permuted(&disc::normalization_permutation(q, &params.w)?).form(&p.w, &p.w).re, 0.0);
    let hol = LaurentPoly::one_minus(a, 1);
    let anti = LaurentPoly::one_minus_inv(a.conj(), 1);
    let zeta = LaurentPoly::monomial(one(), 1);
    let mut core = LaurentMatrix::zeros(dim, dim);
    core.set(0, 0, LaurentPoly::one_minus(a, 2));
    core.set(0, 1, zeta.mul(&hol).scale(qw));
    core.set(0, 2, zeta.scale(-qw));
    core.set(1, 2, anti.shift(2));
    core.set(2, 1, LaurentPoly::one_minus_inv(a.conj(), 2).shift(2));
    for j in 1..n {
        core.set(0, 2 * j + 1, zeta.mul(&hol).scale(p.w[j - 1]));
        core.set(0, 2 * j + 2, hol.scale(-p.w[j - 1].conj()));
        core.set(2 * j + 1, 2 * j + 2, anti.shift(1));
        core.set(2 * j + 2, 2 * j + 1, anti.shift(1));
    }
    let unit = LaurentPoly::constant(one());
    let mut left = vec![unit.clone(); dim];
    left[0] = LaurentPoly::one_minus(a, 2);
    let mut right = vec![anti.clone(); dim];
    right[0] = unit.clone();
    right[1] = LaurentPoly::one_minus_inv(a.conj(), 2);
    let zeros = if a.norm() == 0.0 { Vec::new() } else { vec![(1.0 / a, 2), (a.conj(), dim)] };
    Ok(RationalSymbol { core, left, right, num: unit.clone(), den: unit, zeros })
}

fn closed_form_b(q: &Hyperquadric, params: &DiscParams, grid: usize) -> Result<MatrixSymbol> {
    MatrixSymbol::from_exact(closed_form_rational(q, params)?, grid)
}

fn lift_of(q: &Hyperquadric, params: &DiscParams, grid: usize) -> Result<ProjectivizedLift> {
    disc::projectivize_lift(q, &LiftParams::new(params.clone(), 1.0)?, grid)
}

/// `−conj(X)⁻¹X` pointwise.
fn reflect_quotient(x: &[CMat], sign: f64) -> Result<Vec<CMat>> {
    x.iter()
        .enumerate()
        .map(|(k, m)| {
            m.conjugate()
                .lu()
                .solve(m)
                .map(|s| s * C64::new(sign, 0.0))
                .ok_or(StatDiscError::SymbolSingular { node: k })
        })
        .collect()
}

/// The affine automorphism `(z₀, z_α) ↦ (z₀ − 2ᵗv̄Az_α + ᵗv̄Av − iy₀, z_α − v)`
/// of the quadric moves the disc to `v = 0`, `y₀ = 0` without changing the
/// bundle up to isomorphism, and keeps the chart `t = h*/h*_n` pole-free.
fn translated(q: &Hyperquadric, params: &DiscParams) -> Result<DiscParams> {
    Ok(DiscParams { y0: 0.0, v: vec![C64::new(0.0, 0.0); q.n()], ..normalized_params(q, params)? })
}

fn g_based_b(q: &Hyperquadric, params: &DiscParams, grid: usize) -> Result<MatrixSymbol> {
    let lift = lift_of(q, &translated(q, params)?, grid)?;
    let g = build_g(&lift.quadric, &lift.f)?;
    let exact = g_based_rational(&lift)?;
    let b = MatrixSymbol::from_samples(reflect_quotient(g.samples(), -1.0)?)?;
    b.with_exact(exact)
}

/// Exact form of `−Ḡ⁻¹G`: with `s·G = G_c` polynomial and `Ĝ_c = conj(G_c(1/ζ̄))`,
/// `−Ḡ⁻¹G = −adj(Ĝ_c)·G_c · ŝ / (s·det Ĝ_c)`.
fn g_based_rational(lift: &ProjectivizedLift) -> Result<RationalSymbol> {
    let q = &lift.quadric;
    let p = &lift.disc;
    let n = q.n();
    let dim = 2 * n + 1;
    let wa = q.covector(&p.w)[n - 1];
    let va = q.covector(&p.v)[n - 1];
    // h*_n is proportional to (1 − aζ)·((ζ − ā)(ᵗv̄A)_n + (ᵗw̄A)_n) / ζ; the
    // chart t = h*/h*_n is holomorphic only if the second factor has no zero
    // in the closed disc.
    if va.norm() > 0.0 && (p.a.conj() - wa / va).norm() <= 1.0 + 1e-6 {
        return Err(StatDiscError::Normalization(format!(
            "h*_n vanishes at ζ = {} in the closed disc",
            p.a.conj() - wa / va
        )));
    }
    let d = LaurentPoly::new(0, vec![wa - p.a.conj() * va, va]);
    let s = LaurentPoly::one_minus(p.a, 1).mul(&d);
    let deg = s.hi().unwrap_or(0) + 1;
    let g = build_g(q, &lift.f)?;
    let nodes = boundary::grid(g.grid_size());
    let scaled: Vec<CMat> = g.samples().iter().zip(&nodes).map(|(m, z)| m * s.eval(*z)).collect();
    let gc = LaurentMatrix::from_samples(&scaled, 0, deg, BAND_TOL)?;
    let gh = gc.reflect_conj();

    let adj_lo = -deg * (dim as i64 - 1);
    let ag = (8 * (deg as usize * dim + 1)).next_power_of_two().max(64);
    let adj_nodes = boundary::grid(ag);
    let mut dets = Vec::with_capacity(ag);
    let mut adjs = Vec::with_capacity(ag);
    for z in &adj_nodes {
        let m = gh.eval(*z);
        let det = linalg::det_c(&m);
        let inv = m.try_inverse().ok_or(StatDiscError::SymbolSingular { node: 0 })?;
        adjs.push(inv * det);
        dets.push(det);
    }
    let adj = LaurentMatrix::from_samples(&adjs, adj_lo, 0, BAND_TOL)?;
    let det_gh = LaurentPoly::from_samples(&dets, -deg * dim as i64, 0, BAND_TOL)?;
    let det_gc = det_gh.reflect_conj();
    let core = adj.mul(&gc).scale(&LaurentPoly::constant(C64::new(-1.0, 0.0)));

    let det_gc = det_gc.trimmed(1e-12 * det_gc.max_abs());
    let roots = factor::clustered_roots(det_gc.coeffs())?;
    let mut zeros = Vec::new();
    for (r, m) in roots {
        zeros.push((r, m));
        zeros.push((1.0 / r.conj(), (dim - 1) * m));
    }
    let unit = LaurentPoly::constant(one());
    Ok(RationalSymbol {
        core,
        left: vec![unit.clone(); dim],
        right: vec![unit; dim],
        num: s.reflect_conj(),
        den: s.mul(&det_gh),
        zeros,
    })
}

/// Determinant winding of one step of the reduction chain.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ReductionStep {
    pub name: String,
    /// Winding of `det(conj(X)⁻¹X)` for the step's matrix `X`.
    pub winding: i64,
    /// Change relative to the previous step.
    pub delta: i64,
    /// Winding contributed by the factor introduced at this step.
    pub expected_delta: i64,
    /// Pointwise distance to the displayed closed form, when there is one.
    pub display_residual: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ReductionReport {
    pub steps: Vec<ReductionStep>,
    pub start: PartialIndices,
    pub end: PartialIndices,
}

fn symbol_winding(x: &[CMat], sign: f64) -> Result<i64> {
    maslov_index(&MatrixSymbol::from_samples(reflect_quotient(x, sign)?)?)
}

fn rel_distance(x: &[CMat], y: &[CMat]) -> f64 {
    let scale = y.iter().fold(0.0f64, |m, s| m.max(s.camax()));
    x.iter().zip(y).fold(0.0f64, |m, (a, b)| m.max((a - b).camax())) / scale
}

/// Replays the column operations taking `G` to `G'Q` and the closed-form
/// symbol, checking windings and displayed intermediate matrices.
///
/// The chain is written for the disc translated to `v = 0`, `y₀ = 0`.
pub fn verify_reduction_chain(q: &Hyperquadric, params: &DiscParams, grid: usize) -> Result<ReductionReport> {
    let grid = if grid == 0 { DEFAULT_GRID } else { grid };
    let n = q.n();
    let dim = 2 * n + 1;
    let base = translated(q, params)?;
    let lift = lift_of(q, &base, grid)?;
    let pq = &lift.quadric;
    let w = &lift.disc.w;
    let a = lift.disc.a;
    let x0: Vec<CMat> = build_g(pq, &lift.f)?.samples().to_vec();
    let nodes = boundary::grid(grid);
    let mismatch = |step: &str, detail: String| StatDiscError::ReductionMismatch { step: step.into(), detail };

    let mut r1 = CMat::identity(dim, dim);
    let abar_inv = pq
        .matrix()
        .conjugate()
        .try_inverse()
        .ok_or_else(|| mismatch("constant", "Ā is singular".into()))?;
    r1.view_mut((1, 1), (n, n)).copy_from(&abar_inv);
    let x1: Vec<CMat> = x0.iter().map(|m| m * &r1).collect();

    let wabar: C64 = (0..n).map(|j| w[j] * pq.matrix()[(j, n - 1)].conj()).sum();
    let mut scale = CMat::identity(dim, dim);
    scale[(0, 0)] = C64::new(2.0, 0.0);
    for j in n + 1..dim {
        scale[(j, j)] = 1.0 / wabar;
    }
    let mut perm_rows = vec![0, n, 2 * n];
    for j in 1..n {
        perm_rows.extend([j, n + j]);
    }
    let perm = CMat::from_fn(dim, dim, |i, j| if perm_rows[i] == j { one() } else { C64::new(0.0, 0.0) });
    let x2: Vec<CMat> = x1.iter().map(|m| &perm * m * &scale).collect();

    let wa = pq.covector(w);
    let mut ops = CMat::zeros(dim, dim);
    ops[(0, 0)] = one();
    ops[(n, 1)] = one();
    for j in 1..n {
        ops[(j, 1)] = wa[j - 1] / wa[n - 1];
        ops[(j, 2 * j + 1)] = one();
        ops[(n + 1 + j, 2 * j + 2)] = one();
    }
    ops[(n + 1, 2)] = one();
    let x3: Vec<CMat> = x2.iter().map(|m| m * &ops).collect();

    let gamma = -1.0 / (2.0 * wa[n - 1]);
    let x4: Vec<CMat> = x3
        .iter()
        .zip(&nodes)
        .map(|(m, z)| {
            let mut m = m.clone();
            let f = 1.0 / (gamma * (1.0 - a.conj() / z));
            m.column_mut(1).iter_mut().for_each(|x| *x *= f);
            m
        })
        .collect();
    let qw = 2.0 * pq.form(w, w).re;
    let displayed: Vec<CMat> = nodes
        .iter()
        .map(|&z| {
            let xi = z / (1.0 - a * z);
            let mut m = CMat::zeros(dim, dim);
            m[(0, 0)] = one();
            m[(0, 1)] = z * qw / (1.0 - a * z).norm_sqr();
            m[(1, 1)] = -z;
            m[(1, 2)] = -xi;
            m[(2, 1)] = -I * z;
            m[(2, 2)] = I * xi;
            for j in 1..n {
                m[(0, 2 * j + 1)] = -xi * w[j - 1];
                m[(2 * j + 1, 2 * j + 1)] = one();
                m[(2 * j + 1, 2 * j + 2)] = -xi;
                m[(2 * j + 2, 2 * j + 1)] = I;
                m[(2 * j + 2, 2 * j + 2)] = I * xi;
            }
            m
        })
        .collect();
    let res4 = rel_distance(&x4, &displayed);

    let x5: Vec<CMat> = x4
        .iter()
        .zip(&nodes)
        .map(|(m, z)| {
            let mut m = m.clone();
            let f = 1.0 / (1.0 - a.conj() / z);
            for j in 0..n {
                let c = 2 * j + 1;
                let g = if j == 0 { f } else { -f };
                m.column_mut(c).iter_mut().for_each(|x| *x *= g);
            }
            m
        })
        .collect();
    let b_chain = reflect_quotient(&x5, 1.0)?;
    let closed = closed_form_b(q, &base, grid)?;
    let res5 = rel_distance(&b_chain, closed.samples());

    let names = [
        ("G", &x0, -1.0, None),
        ("right multiplication by diag(1, Ā⁻¹, I)", &x1, 1.0, None),
        ("column scaling and row permutation", &x2, 1.0, None),
        ("column operations", &x3, 1.0, None),
        ("right multiplication by diag(1, 1/(γ(1−āζ̄)), I)", &x4, 1.0, Some(res4)),
        ("right multiplication by Q", &x5, 1.0, Some(res5)),
    ];
    let mut steps = Vec::new();
    let mut prev = None;
    for (name, x, sign, residual) in names {
        let winding = symbol_winding(x, sign)?;
        let delta = prev.map_or(0, |p| winding - p);
        if delta != 0 {
            return Err(mismatch(name, format!("determinant winding changed by {delta}")));
        }
        if let Some(r) = residual {
            if r > 1e-9 {
                return Err(mismatch(name, format!("differs from the displayed matrix by {r:e}")));
            }
        }
        steps.push(ReductionStep { name: name.into(), winding, delta, expected_delta: 0, display_residual: residual });
        prev = Some(winding);
    }

    let start = partial_indices(&build_b(q, params, SymbolSource::GBased, grid)?)?;
    let end = partial_indices(&closed)?;
    if start != end {
        return Err(mismatch("end-to-end", format!("indices {:?} vs {:?}", start.kappa, end.kappa)));
    }
    Ok(ReductionReport { steps, start, end })
}
