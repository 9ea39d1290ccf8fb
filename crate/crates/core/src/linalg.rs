//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{ComplexField, DMatrix, DVector, Dyn, Schur, SVD};
use num_complex::Complex64;

use crate::error::{Result, StatDiscError};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;
pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn is_finite_c(z: C64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

const SVD_CHECK: f64 = 1e-11;

/// `I − 2vv*/v*v` for a fixed real `v` depending on `seed`.
fn householder<T: ComplexField<RealField = f64>>(n: usize, seed: usize) -> DMatrix<T> {
    let v: Vec<f64> = (0..n).map(|k| ((k + 1) as f64 * (0.7 + 0.31 * seed as f64)).sin() + 0.1).collect();
    let vv: f64 = v.iter().map(|x| x * x).sum();
    DMatrix::from_fn(n, n, |i, j| {
        let d = if i == j { 1.0 } else { 0.0 };
        T::from_real(d - 2.0 * v[i] * v[j] / vv)
    })
}

/// Full SVD, sorted descending, with a reconstruction check.
///
/// nalgebra 0.35 occasionally returns inconsistent singular vectors for
/// rank-deficient blocks; on a failed check the matrix is conjugated by
/// fixed reflections and decomposed again.
pub fn svd<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> SVD<T, Dyn, Dyn> {
    let scale = m.norm().max(f64::MIN_POSITIVE);
    let consistent = |svd: &SVD<T, Dyn, Dyn>| {
        svd.clone().recompose().map(|r| (r - m).norm() <= SVD_CHECK * scale).unwrap_or(false)
    };
    let first = m.clone().svd(true, true);
    if consistent(&first) {
        return first;
    }
    for seed in 0..4 {
        let hl = householder::<T>(m.nrows(), seed);
        let hr = householder::<T>(m.ncols(), seed + 7);
        let mut out = (&hl * m * &hr).svd(true, true);
        out.u = out.u.map(|u| &hl * u);
        out.v_t = out.v_t.map(|vt| vt * &hr);
        if consistent(&out) {
            return out;
        }
    }
    first
}

fn descending(mut s: Vec<f64>) -> Vec<f64> {
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Singular values in descending order, without singular vectors.
pub fn singular_values_c(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    descending(m.singular_values_unordered().iter().copied().collect())
}

pub fn singular_values_r(m: &RMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    descending(m.singular_values_unordered().iter().copied().collect())
}

/// For square `m`: unit row `c` minimizing `|c·m|`, together with `σ_min / σ_max`.
pub fn left_null_row(m: &CMat) -> (Vec<C64>, f64) {
    let svd = svd(m);
    let u = svd.u.expect("u requested");
    let s = &svd.singular_values;
    let k = s.len() - 1;
    let ratio = if s[0] > 0.0 { s[k] / s[0] } else { 0.0 };
    (u.column(k).iter().map(|z| z.conj()).collect(), ratio)
}

/// Unit vector `v` minimizing `|m v|` for square `m`, plus `σ_min / σ_max`.
pub fn right_null_vector(m: &CMat) -> (Vec<C64>, f64) {
    let svd = svd(m);
    let vt = svd.v_t.expect("v requested");
    let s = &svd.singular_values;
    let k = s.len() - 1;
    let ratio = if s[0] > 0.0 { s[k] / s[0] } else { 0.0 };
    (vt.row(k).iter().map(|z| z.conj()).collect(), ratio)
}

/// Minimum-norm least-squares solution of `a x ≈ b`, truncating singular
/// values below `rtol · σ_max`. Also returns the retained rank.
pub fn min_norm_lstsq(a: &RMat, b: &RVec, rtol: f64) -> (RVec, usize) {
    let svd = svd(a);
    let u = svd.u.as_ref().expect("u requested");
    let vt = svd.v_t.as_ref().expect("v requested");
    let s = &svd.singular_values;
    let smax = s.iter().fold(0.0f64, |m, &x| m.max(x));
    let mut x = RVec::zeros(a.ncols());
    let mut rank = 0;
    for k in 0..s.len() {
        if s[k] <= rtol * smax || s[k] == 0.0 {
            continue;
        }
        rank += 1;
        let coef = u.column(k).dot(b) / s[k];
        x.axpy(coef, &vt.row(k).transpose(), 1.0);
    }
    (x, rank)
}

/// Roots of `Σ coeffs[k] ζ^k` via the complex Schur form of the companion matrix.
pub fn poly_roots(coeffs: &[C64]) -> Result<Vec<C64>> {
    let mut hi = coeffs.len();
    while hi > 0 && coeffs[hi - 1] == C64::new(0.0, 0.0) {
        hi -= 1;
    }
    if hi == 0 {
        return Err(StatDiscError::InvalidInput("zero polynomial has no roots".into()));
    }
    let deg = hi - 1;
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[deg];
    let mut comp = CMat::zeros(deg, deg);
    for j in 0..deg {
        comp[(0, j)] = -coeffs[deg - 1 - j] / lead;
    }
    for i in 1..deg {
        comp[(i, i - 1)] = C64::new(1.0, 0.0);
    }
    let schur = Schur::try_new(comp, 1e-15, 10_000)
        .ok_or_else(|| StatDiscError::Factorization("companion Schur did not converge".into()))?;
    let (_, t) = schur.unpack();
    Ok((0..deg).map(|i| t[(i, i)]).collect())
}

/// Group nearby roots (single linkage, distance `≤ rel_tol·max(1, |z|)`); each
/// cluster is represented by its mean, which is far better conditioned than
/// the individual members of a multiple root.
pub fn cluster_roots(roots: &[C64], rel_tol: f64) -> Vec<(C64, usize)> {
    let n = roots.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn find(label: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while label[r] != r {
            r = label[r];
        }
        label[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            let scale = roots[i].norm().max(roots[j].norm()).max(1.0);
            if (roots[i] - roots[j]).norm() <= rel_tol * scale {
                let (a, b) = (find(&mut label, i), find(&mut label, j));
                label[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: Vec<(usize, C64, usize)> = Vec::new();
    for i in 0..n {
        let r = find(&mut label, i);
        match groups.iter_mut().find(|g| g.0 == r) {
            Some(g) => {
                g.1 += roots[i];
                g.2 += 1;
            }
            None => groups.push((r, roots[i], 1)),
        }
    }
    groups.into_iter().map(|(_, sum, k)| (sum / k as f64, k)).collect()
}

/// Newton polish of an `m`-fold root of `Σ coeffs[k] ζ^k`, run on the
/// `(m−1)`-th derivative where the root is simple.
pub fn polish_multiple_root(coeffs: &[C64], z: C64, m: usize) -> C64 {
    let mut d: Vec<C64> = coeffs.to_vec();
    for _ in 1..m {
        d = d.iter().enumerate().skip(1).map(|(k, c)| c * k as f64).collect();
    }
    let dd: Vec<C64> = d.iter().enumerate().skip(1).map(|(k, c)| c * k as f64).collect();
    let horner = |p: &[C64], x: C64| p.iter().rev().fold(C64::new(0.0, 0.0), |acc, c| acc * x + c);
    let mut x = z;
    for _ in 0..8 {
        let den = horner(&dd, x);
        if den.norm() == 0.0 {
            break;
        }
        let step = horner(&d, x) / den;
        if !(step.norm() < 1e-3 * x.norm().max(1.0)) {
            break;
        }
        x -= step;
        if step.norm() <= 1e-16 * x.norm().max(1.0) {
            break;
        }
    }
    x
}

pub fn det_c(m: &CMat) -> C64 {
    m.clone().lu().determinant()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_null_row() {
        // Plain nalgebra SVD reconstructs this matrix with error ~3.5.
        let m = CMat::from_column_slice(
            2,
            2,
            &[
                c(7.624314137657314, -5.154745263419196),
                c(4.869014419933088, 3.15153450487856),
                c(10.288668089154514, -18.996745667059226),
                c(13.554079310325813, 1.2850323131388188),
            ],
        );
        let (r, ratio) = left_null_row(&m);
        assert!(ratio < 1e-14);
        assert!((CMat::from_row_slice(1, 2, &r) * &m).norm() < 1e-12);
        let (v, _) = right_null_vector(&m);
        assert!((&m * CMat::from_column_slice(2, 1, &v)).norm() < 1e-12);
    }

    #[test]
    fn values_only_match_checked_svd() {
        let mut rng = crate::sampling::rng(3);
        for (rows, cols, rank) in [(2, 2, 1), (12, 5, 3), (7, 9, 7), (30, 10, 4)] {
            let l = CMat::from_fn(rows, rank, |_, _| crate::sampling::complex(&mut rng, 1.0));
            let r = CMat::from_fn(rank, cols, |_, _| crate::sampling::complex(&mut rng, 1.0));
            let m = l * r;
            let full = svd(&m).singular_values;
            let fast = singular_values_c(&m);
            assert!(fast.windows(2).all(|w| w[0] >= w[1]));
            for (a, b) in fast.iter().zip(full.iter()) {
                assert!((a - b).abs() < 1e-12 * fast[0], "{fast:?} vs {full:?}");
            }
            assert_eq!(fast.iter().filter(|&&x| x > 1e-10 * fast[0]).count(), rank);
        }
    }

    #[test]
    fn roots_of_product() {
        // (ζ-2)(ζ+i)(ζ-0.5) expanded
        let r = [c(2.0, 0.0), c(0.0, -1.0), c(0.5, 0.0)];
        let mut p = vec![c(1.0, 0.0)];
        for &z in &r {
            let mut q = vec![C64::new(0.0, 0.0); p.len() + 1];
            for (k, &pk) in p.iter().enumerate() {
                q[k + 1] += pk;
                q[k] -= pk * z;
            }
            p = q;
        }
        let found = poly_roots(&p).unwrap();
        for z in r {
            assert!(found.iter().any(|f| (f - z).norm() < 1e-12));
        }
    }

    #[test]
    fn triple_root_cluster_mean() {
        // (ζ - 1.5)^3 (ζ + 0.25)
        let z0 = c(1.5, 0.0);
        let mut p = vec![c(1.0, 0.0)];
        for z in [z0, z0, z0, c(-0.25, 0.0)] {
            let mut q = vec![C64::new(0.0, 0.0); p.len() + 1];
            for (k, &pk) in p.iter().enumerate() {
                q[k + 1] += pk;
                q[k] -= pk * z;
            }
            p = q;
        }
        let cl = cluster_roots(&poly_roots(&p).unwrap(), 1e-3);
        assert_eq!(cl.len(), 2);
        let (m, k) = cl.iter().find(|(_, k)| *k == 3).copied().unwrap();
        assert_eq!(k, 3);
        assert!((m - z0).norm() < 1e-10);
    }

    #[test]
    fn lstsq_min_norm() {
        let a = RMat::from_row_slice(2, 3, &[1.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        let b = RVec::from_vec(vec![2.0, 0.0]);
        let (x, rank) = min_norm_lstsq(&a, &b, 1e-12);
        assert_eq!(rank, 1);
        assert!((x[0] - 1.0).abs() < 1e-14 && (x[1] - 1.0).abs() < 1e-14 && x[2].abs() < 1e-14);
    }

    #[test]
    fn null_vectors() {
        let m = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)]);
        let (row, r1) = left_null_row(&m);
        let (v, r2) = right_null_vector(&m);
        assert!(r1 < 1e-14 && r2 < 1e-14);
        let lv = row[0] * m[(0, 0)] + row[1] * m[(1, 0)];
        assert!(lv.norm() < 1e-14);
        let mv = m[(0, 0)] * v[0] + m[(0, 1)] * v[1];
        assert!(mv.norm() < 1e-14);
    }
}
