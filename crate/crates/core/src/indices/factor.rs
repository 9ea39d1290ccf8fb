//! Exact Birkhoff factorization of rational matrix symbols.
//!
//! A symbol is carried as `diag(left)⁻¹ · core · diag(right)⁻¹ · num / den`
//! with a Laurent-polynomial `core`. Left factors are polynomials in `ζ`
//! without zeros in the closed disc, right factors are polynomials in `ζ⁻¹`
//! without zeros outside the open disc, so they do not affect the indices.
//! The known nonzero zeros of `det core` are removed one at a time by
//! unimodular row (outside zeros) or column (inside zeros) operations; what
//! remains has determinant `c·ζ^K` and its row degrees after row reduction
//! are the partial indices.

use crate::boundary;
use crate::error::{Result, StatDiscError};
use crate::linalg::{self, CMat, C64};

use super::laurent::{LaurentMatrix, LaurentPoly};

const UNIT_GAP: f64 = 1e-9;
const NULL_RATIO: f64 = 1e-4;
const NULL_ABS: f64 = 1e-9;
const DIVISION_TOL: f64 = 1e-6;
const DEGREE_TOL: f64 = 1e-9;
const LEADING_SINGULAR: f64 = 1e-9;
const MONOMIAL_TOL: f64 = 1e-6;
const MAX_REDUCTIONS: usize = 10_000;
/// Relative radius within which computed roots are treated as one multiple root.
pub(crate) const ROOT_CLUSTER: f64 = 5e-2;

/// Rational matrix symbol with explicitly known determinant zeros.
#[derive(Debug, Clone)]
pub struct RationalSymbol {
    pub core: LaurentMatrix,
    pub left: Vec<LaurentPoly>,
    pub right: Vec<LaurentPoly>,
    pub num: LaurentPoly,
    pub den: LaurentPoly,
    /// Nonzero zeros of `det core` with multiplicities.
    pub zeros: Vec<(C64, usize)>,
}

impl RationalSymbol {
    /// Polynomial symbol; the zeros of `det core` are located numerically.
    pub fn polynomial(core: LaurentMatrix) -> Result<Self> {
        let zeros = det_zeros(&core)?;
        let n = core.nrows();
        let one = LaurentPoly::constant(C64::new(1.0, 0.0));
        Ok(Self { core, left: vec![one.clone(); n], right: vec![one.clone(); n], num: one.clone(), den: one, zeros })
    }

    pub fn size(&self) -> usize {
        self.core.nrows()
    }

    pub fn eval(&self, z: C64) -> CMat {
        let n = self.size();
        let s = self.num.eval(z) / self.den.eval(z);
        CMat::from_fn(n, n, |i, j| {
            self.core.get(i, j).eval(z) * s / (self.left[i].eval(z) * self.right[j].eval(z))
        })
    }

    pub fn samples(&self, grid: usize) -> Vec<CMat> {
        boundary::grid(grid).into_iter().map(|z| self.eval(z)).collect()
    }
}

/// Partial indices (descending) and their sum.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct PartialIndices {
    pub kappa: Vec<i64>,
    pub total: i64,
}

impl PartialIndices {
    pub fn from_unsorted(mut kappa: Vec<i64>) -> Self {
        kappa.sort_unstable_by(|a, b| b.cmp(a));
        let total = kappa.iter().sum();
        Self { kappa, total }
    }
}

fn grid_for(span: i64) -> usize {
    (4 * (span.max(1) as usize + 1)).next_power_of_two().max(256)
}

fn poly_winding(p: &LaurentPoly) -> Result<i64> {
    if p.is_zero() {
        return Err(StatDiscError::SymbolSingular { node: 0 });
    }
    let g = grid_for(p.hi().unwrap() - p.lo());
    let scale = p.max_abs();
    let v: Vec<C64> = boundary::grid(g).iter().map(|z| p.eval(*z) / scale).collect();
    boundary::winding_number(&v)
}

/// Nonzero zeros of `det core`, clustered by multiplicity.
pub fn det_zeros(core: &LaurentMatrix) -> Result<Vec<(C64, usize)>> {
    let n = core.nrows();
    let (lo, hi) = core.band().ok_or(StatDiscError::SymbolSingular { node: 0 })?;
    let (dlo, dhi) = (lo * n as i64, hi * n as i64);
    let g = grid_for(dhi - dlo);
    let dets: Vec<C64> = boundary::grid(g).iter().map(|z| linalg::det_c(&core.eval(*z))).collect();
    let det = LaurentPoly::from_samples(&dets, dlo, dhi, 1e-8)?;
    let det = det.trimmed(1e-12 * det.max_abs());
    if det.is_zero() {
        return Err(StatDiscError::SymbolSingular { node: 0 });
    }
    clustered_roots(det.coeffs())
}

/// Distinct nonzero roots with multiplicities, each polished as a multiple root.
pub(crate) fn clustered_roots(coeffs: &[C64]) -> Result<Vec<(C64, usize)>> {
    let roots = linalg::poly_roots(coeffs)?;
    Ok(linalg::cluster_roots(&roots, ROOT_CLUSTER)
        .into_iter()
        .map(|(z, m)| (linalg::polish_multiple_root(coeffs, z, m), m))
        .collect())
}

/// Partial indices of a rational symbol.
pub fn factorize(sym: &RationalSymbol) -> Result<PartialIndices> {
    let n = sym.size();
    for (k, l) in sym.left.iter().enumerate() {
        if l.lo() < 0 || l.coeff(0) == C64::new(0.0, 0.0) || poly_winding(l)? != 0 {
            return Err(StatDiscError::Factorization(format!("left factor {k} is not invertible in the disc")));
        }
    }
    for (k, r) in sym.right.iter().enumerate() {
        if r.hi().unwrap_or(1) > 0 || r.coeff(0) == C64::new(0.0, 0.0) || poly_winding(r)? != 0 {
            return Err(StatDiscError::Factorization(format!("right factor {k} is not invertible outside the disc")));
        }
    }
    let shift = poly_winding(&sym.num)? - poly_winding(&sym.den)?;

    let mut rows: Vec<Vec<LaurentPoly>> =
        (0..n).map(|i| (0..n).map(|j| sym.core.get(i, j).clone()).collect()).collect();
    for &(zero, mult) in &sym.zeros {
        for _ in 0..mult {
            if zero.norm() > 1.0 + UNIT_GAP {
                extract_left(&mut rows, zero)?;
            } else if zero.norm() < 1.0 - UNIT_GAP {
                extract_right(&mut rows, zero)?;
            } else {
                return Err(StatDiscError::SymbolSingular { node: 0 });
            }
        }
    }
    let k = monomial_degree(&rows)?;
    let degrees = row_reduce(&mut rows)?;
    let sum: i64 = degrees.iter().sum();
    if sum != k {
        return Err(StatDiscError::Factorization(format!("row degrees sum to {sum}, determinant degree is {k}")));
    }
    Ok(PartialIndices::from_unsorted(degrees.into_iter().map(|d| d + shift).collect()))
}

fn eval_rows(rows: &[Vec<LaurentPoly>], z: C64) -> CMat {
    let n = rows.len();
    CMat::from_fn(n, n, |i, j| rows[i][j].eval(z))
}

/// `m` with rows (or columns) divided by the coefficient size of the
/// corresponding polynomial rows (columns), so null vectors are balanced.
fn normalized(rows: &[Vec<LaurentPoly>], m: &CMat, by_rows: bool) -> (CMat, Vec<f64>) {
    let n = m.nrows();
    let scales: Vec<f64> = (0..n)
        .map(|k| {
            let s = (0..n).fold(0.0f64, |acc, l| {
                let p = if by_rows { &rows[k][l] } else { &rows[l][k] };
                acc.max(p.max_abs())
            });
            if s > 0.0 { s } else { 1.0 }
        })
        .collect();
    let out = CMat::from_fn(n, n, |i, j| m[(i, j)] / if by_rows { scales[i] } else { scales[j] });
    (out, scales)
}

/// The normalized matrix is singular to working precision in absolute terms,
/// as happens when every entry carries a high power of the same linear factor.
fn vanishes(m: &CMat) -> bool {
    linalg::singular_values_c(m).last().is_some_and(|&s| s <= NULL_ABS)
}

/// Coefficient size of `Σ_k (w_k / w_p) · line_k`, ignoring cancellation.
fn combination_scale<'a>(lines: impl Iterator<Item = &'a [LaurentPoly]>, weights: &[C64], pivot: usize) -> f64 {
    lines
        .zip(weights)
        .map(|(line, w)| (w / weights[pivot]).norm() * line.iter().fold(0.0f64, |m, p| m.max(p.max_abs())))
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE)
}

/// Replace one row by a combination vanishing at `alpha` (`|alpha| > 1`) and
/// divide it by `1 − ζ/α`.
fn extract_left(rows: &mut [Vec<LaurentPoly>], alpha: C64) -> Result<()> {
    let (m, scales) = normalized(rows, &eval_rows(rows, alpha), true);
    let (c, ratio) = linalg::left_null_row(&m);
    if ratio > NULL_RATIO && !vanishes(&m) {
        return Err(StatDiscError::Factorization(format!("no left null vector at ζ = {alpha} (ratio {ratio:e})")));
    }
    let weights: Vec<C64> = c.iter().zip(&scales).map(|(ci, s)| ci / s).collect();
    let pivot = (0..c.len()).max_by(|&i, &j| c[i].norm().total_cmp(&c[j].norm())).unwrap();
    let n = rows.len();
    let scale = combination_scale(rows.iter().map(|r| r.as_slice()), &weights, pivot);
    let mut new_row = Vec::with_capacity(n);
    for col in 0..n {
        let mut acc = LaurentPoly::zero();
        for (k, row) in rows.iter().enumerate() {
            acc = acc.add(&row[col].scale(weights[k] / weights[pivot]));
        }
        let (q, rem) = acc.divide_linear(alpha);
        if rem > DIVISION_TOL * scale {
            return Err(StatDiscError::Factorization(format!("row remainder {:e} at ζ = {alpha}", rem / scale)));
        }
        new_row.push(q.scale(-alpha));
    }
    rows[pivot] = new_row;
    Ok(())
}

/// Column analogue of [`extract_left`] for `|beta| < 1`, dividing by `1 − β/ζ`.
fn extract_right(rows: &mut [Vec<LaurentPoly>], beta: C64) -> Result<()> {
    let (m, scales) = normalized(rows, &eval_rows(rows, beta), false);
    let (v, ratio) = linalg::right_null_vector(&m);
    if ratio > NULL_RATIO && !vanishes(&m) {
        return Err(StatDiscError::Factorization(format!("no right null vector at ζ = {beta} (ratio {ratio:e})")));
    }
    let weights: Vec<C64> = v.iter().zip(&scales).map(|(vi, s)| vi / s).collect();
    let pivot = (0..v.len()).max_by(|&i, &j| v[i].norm().total_cmp(&v[j].norm())).unwrap();
    let n = rows.len();
    let columns: Vec<Vec<LaurentPoly>> = (0..n).map(|j| rows.iter().map(|r| r[j].clone()).collect()).collect();
    let scale = combination_scale(columns.iter().map(|c| c.as_slice()), &weights, pivot);
    for row in rows.iter_mut() {
        let mut acc = LaurentPoly::zero();
        for (k, entry) in row.iter().enumerate() {
            acc = acc.add(&entry.scale(weights[k] / weights[pivot]));
        }
        let (q, rem) = acc.divide_linear(beta);
        if rem > DIVISION_TOL * scale {
            return Err(StatDiscError::Factorization(format!("column remainder {:e} at ζ = {beta}", rem / scale)));
        }
        row[pivot] = q.shift(1);
    }
    Ok(())
}

/// Checks that `det` of the reduced core is `c·ζ^K` and returns `K`.
fn monomial_degree(rows: &[Vec<LaurentPoly>]) -> Result<i64> {
    let n = rows.len() as i64;
    let (lo, hi) = rows
        .iter()
        .flatten()
        .filter(|p| !p.is_zero())
        .fold((i64::MAX, i64::MIN), |(a, b), p| (a.min(p.lo()), b.max(p.hi().unwrap())));
    if lo > hi {
        return Err(StatDiscError::SymbolSingular { node: 0 });
    }
    let g = grid_for(n * (hi - lo));
    let nodes = boundary::grid(g);
    let dets: Vec<C64> = nodes.iter().map(|z| linalg::det_c(&eval_rows(rows, *z))).collect();
    let scale = dets.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if scale == 0.0 {
        return Err(StatDiscError::SymbolSingular { node: 0 });
    }
    let normalized: Vec<C64> = dets.iter().map(|d| d / scale).collect();
    let k = boundary::winding_number(&normalized)?;
    let flat: Vec<C64> = normalized.iter().zip(&nodes).map(|(d, z)| d / z.powi(k as i32)).collect();
    let mean = flat.iter().sum::<C64>() / g as f64;
    let spread = flat.iter().fold(0.0f64, |m, d| m.max((d - mean).norm()));
    if spread > MONOMIAL_TOL * mean.norm() {
        return Err(StatDiscError::Factorization(format!(
            "reduced determinant is not a monomial (relative spread {:e})",
            spread / mean.norm()
        )));
    }
    Ok(k)
}

fn normalize_row(row: &mut [LaurentPoly]) -> Result<i64> {
    let s = row.iter().fold(0.0f64, |m, p| m.max(p.max_abs()));
    if s == 0.0 {
        return Err(StatDiscError::SymbolSingular { node: 0 });
    }
    for p in row.iter_mut() {
        *p = p.scale(C64::new(1.0 / s, 0.0)).trimmed(DEGREE_TOL);
    }
    Ok(row.iter().filter_map(|p| p.hi()).max().expect("nonzero row"))
}

/// Row reduction by highest degree; returns the final row degrees.
pub(crate) fn row_reduce(rows: &mut [Vec<LaurentPoly>]) -> Result<Vec<i64>> {
    let n = rows.len();
    let mut deg: Vec<i64> = rows.iter_mut().map(|r| normalize_row(r)).collect::<Result<_>>()?;
    for _ in 0..MAX_REDUCTIONS {
        let lead = CMat::from_fn(n, n, |i, j| rows[i][j].coeff(deg[i]));
        let (c, ratio) = linalg::left_null_row(&lead);
        if ratio > LEADING_SINGULAR {
            return Ok(deg);
        }
        let cmax = c.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        let active = |i: usize| c[i].norm() > 1e-8 * cmax;
        let p = (0..n)
            .filter(|&i| active(i))
            .max_by(|&i, &j| deg[i].cmp(&deg[j]).then(c[i].norm().total_cmp(&c[j].norm())))
            .unwrap();
        for col in 0..n {
            let mut acc = LaurentPoly::zero();
            for i in (0..n).filter(|&i| active(i)) {
                acc = acc.add(&rows[i][col].shift(deg[p] - deg[i]).scale(c[i] / c[p]));
            }
            let top = acc.coeff(deg[p]);
            acc = acc.sub(&LaurentPoly::monomial(top, deg[p]));
            rows[p][col] = acc;
        }
        deg[p] = normalize_row(&mut rows[p])?;
    }
    Err(StatDiscError::Factorization("row reduction did not terminate".into()))
}
