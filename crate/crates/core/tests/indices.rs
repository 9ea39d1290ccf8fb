use proptest::prelude::*;
use statdisc_core::disc::{projectivize_lift, LiftParams};
use statdisc_core::indices::*;
use statdisc_core::linalg::{c, det_c, CMat, C64};
use statdisc_core::{boundary, sampling, Hyperquadric};

fn toeplitz(b: &MatrixSymbol) -> PartialIndices {
    let total = maslov_index(b).unwrap();
    toeplitz_indices(b.samples(), total, &ToeplitzConfig::default()).unwrap()
}

#[test]
fn closed_form_g_based_and_toeplitz_agree() {
    let mut rng = sampling::rng(11);
    for k in 0..8 {
        let n = 1 + k % 2;
        let q = sampling::hermitian(&mut rng, n);
        let p = sampling::disc_params(&mut rng, n, 0.6, k % 3 == 0);
        let closed = build_b(&q, &p, SymbolSource::ClosedForm, 256).unwrap();
        let g_based = build_b(&q, &p, SymbolSource::GBased, 256).unwrap();
        let kc = partial_indices(&closed).unwrap();
        assert!(kc.kappa.iter().all(|&x| x >= 0), "{kc:?}");
        assert_eq!(kc.total, 2 * n as i64 + 2);
        assert_eq!(partial_indices(&g_based).unwrap(), kc, "instance {k}");
        assert_eq!(maslov_index(&g_based).unwrap(), kc.total);
        assert_eq!(toeplitz(&closed), kc, "instance {k}");
    }
}

#[test]
fn small_pole_parameter_n3() {
    // det of the G-based core has a fourfold zero at 1/a far outside the circle.
    let q = Hyperquadric::diagonal(&[1.0, -0.7, 1.6]).unwrap();
    let p = statdisc_core::DiscParams::new(0.0, vec![c(0.0, 0.0); 3], vec![c(0.9, 0.1), c(0.3, -0.4), c(-0.2, 0.5)], c(0.0133, 0.0035))
        .unwrap();
    let closed = partial_indices(&build_b(&q, &p, SymbolSource::ClosedForm, 256).unwrap()).unwrap();
    let g_based = partial_indices(&build_b(&q, &p, SymbolSource::GBased, 256).unwrap()).unwrap();
    assert_eq!(closed.kappa, vec![2, 1, 1, 1, 1, 1, 1]);
    assert_eq!(g_based, closed);
}

/// The `2n+1` real equations cutting out the projectivized conormal bundle,
/// in the row order of `g_matrix`. Imaginary rows carry the sign `i(E − Ē)`.
fn equations(q: &Hyperquadric, x: &[C64]) -> Vec<f64> {
    let n = q.n();
    let (z, t) = (&x[..=n], &x[n + 1..]);
    let za = &z[1..];
    let cov = q.covector(za);
    let r = z[0].re - q.form(za, za).re;
    let e = |j: usize| {
        let dz = if j == 0 { c(0.5, 0.0) } else { -cov[j - 1] };
        -cov[n - 1] * t[j] - dz
    };
    let order: Vec<usize> = (1..n).chain([0]).collect();
    let mut out = vec![r];
    out.extend(order.iter().map(|&j| 2.0 * e(j).re));
    out.extend(order.iter().map(|&j| -2.0 * e(j).im));
    out
}

#[test]
fn g_rows_are_antiholomorphic_gradients() {
    let mut rng = sampling::rng(3);
    for n in 1..=3 {
        let q = sampling::hermitian(&mut rng, n);
        let p = sampling::disc_params(&mut rng, n, 0.5, true);
        let pl = projectivize_lift(&q, &LiftParams::new(p, 1.0).unwrap(), 64).unwrap();
        let g = build_g(&pl.quadric, &pl.f).unwrap();
        let dets: Vec<f64> = g.determinants().iter().map(|d| d.norm()).collect();
        assert!(dets.iter().all(|&d| d > 1e-10));
        for k in (0..64).step_by(9) {
            let x = pl.f.at(k);
            let gm = &g.samples()[k];
            let h = 1e-6;
            for col in 0..x.len() {
                let shifted = |dz: C64| {
                    let mut y = x.clone();
                    y[col] += dz;
                    equations(&pl.quadric, &y)
                };
                let (xp, xm) = (shifted(c(h, 0.0)), shifted(c(-h, 0.0)));
                let (yp, ym) = (shifted(c(0.0, h)), shifted(c(0.0, -h)));
                for row in 0..x.len() {
                    let fd = c((xp[row] - xm[row]) / (4.0 * h), (yp[row] - ym[row]) / (4.0 * h));
                    assert!((fd - gm[(row, col)]).norm() < 1e-6, "n={n} node {k} ({row},{col})");
                }
            }
        }
    }
}

#[test]
fn linear_disc_g_corner() {
    let q = Hyperquadric::identity(1);
    let pl = projectivize_lift(&q, &LiftParams::new(statdisc_core::DiscParams::centered(vec![c(1.0, 0.0)]), 1.0).unwrap(), 32)
        .unwrap();
    let g = build_g(&q, &pl.f).unwrap();
    for s in g.samples() {
        assert!((s[(0, 0)] - c(0.5, 0.0)).norm() < 1e-15);
    }
}

#[test]
fn maslov_index_is_2n_plus_2() {
    let mut rng = sampling::rng(5);
    for n in 1..=3 {
        for _ in 0..4 {
            let q = sampling::hermitian(&mut rng, n);
            let p = sampling::disc_params(&mut rng, n, 0.8, true);
            let b = build_b(&q, &p, SymbolSource::ClosedForm, 256).unwrap();
            assert_eq!(maslov_index(&b).unwrap(), 2 * n as i64 + 2);
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            for (z, s) in boundary::grid(256).iter().zip(b.samples()) {
                assert!((det_c(s) - sign * z.powi(2 * n as i32 + 2)).norm() < 1e-12);
            }
        }
    }
}

fn unitary(seed: &[f64], k: usize) -> CMat {
    CMat::from_fn(k, k, |i, j| c(seed[2 * (i * k + j)], seed[2 * (i * k + j) + 1])).qr().q()
}

/// `U (I + ζC)` with `‖C‖ < 1`, invertible on the closed disc.
fn holomorphic_factor(u: CMat, c1: CMat) -> impl Fn(C64) -> CMat {
    move |z| &u * (CMat::identity(u.nrows(), u.nrows()) + &c1 * z)
}

fn small(seed: &[f64], k: usize) -> CMat {
    let m = CMat::from_fn(k, k, |i, j| c(seed[2 * (i * k + j)], seed[2 * (i * k + j) + 1]));
    let s = m.norm();
    if s > 0.0 { m * c(0.6 / s, 0.0) } else { m }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    /// `P(ζ) Λ(ζ) P̃(1/ζ̄)*` has the exponents of `Λ` as partial indices.
    #[test]
    fn indices_invariant_under_holomorphic_multipliers(
        kappa in prop::collection::vec(-2i64..=3, 2..=3),
        s in prop::collection::vec(-1.0f64..1.0, 4 * 18),
    ) {
        let k = kappa.len();
        let m = 2 * k * k;
        let (u, v) = (unitary(&s[..m], k), unitary(&s[m..2 * m], k));
        let (c1, d1) = (small(&s[2 * m..3 * m], k), small(&s[3 * m..4 * m], k));
        let p = holomorphic_factor(u, c1);
        let pt = holomorphic_factor(v, d1);
        let kk = kappa.clone();
        let b = MatrixSymbol::sample(128, move |z| {
            let lambda = CMat::from_fn(k, k, |i, j| if i == j { z.powi(kk[i] as i32) } else { c(0.0, 0.0) });
            p(z) * lambda * pt(1.0 / z.conj()).adjoint()
        }).unwrap();
        let expected = PartialIndices::from_unsorted(kappa);
        prop_assert_eq!(maslov_index(&b).unwrap(), expected.total);
        prop_assert_eq!(&partial_indices(&b).unwrap(), &expected);
        prop_assert_eq!(&toeplitz(&b), &expected);
    }

    /// Closed-form symbols: nonnegative indices summing to the determinant winding.
    #[test]
    fn closed_form_indices_nonnegative(seed in 0u64..10_000, n in 1usize..=3) {
        let mut rng = sampling::rng(seed);
        let q = sampling::hermitian(&mut rng, n);
        let p = sampling::disc_params(&mut rng, n, 0.9, seed % 2 == 0);
        let b = build_b(&q, &p, SymbolSource::ClosedForm, 256).unwrap();
        let kappa = partial_indices(&b).unwrap();
        prop_assert!(kappa.kappa.iter().all(|&x| x >= 0));
        prop_assert_eq!(kappa.total, maslov_index(&b).unwrap());
        prop_assert_eq!(kappa.kappa.iter().sum::<i64>(), kappa.total);
    }
}

#[test]
fn generic_symbol_through_truncation() {
    // [[ζ, 0], [1, ζ⁻¹]] factors with indices (0, 0).
    let b = MatrixSymbol::sample(64, |z| CMat::from_row_slice(2, 2, &[z, c(0.0, 0.0), c(1.0, 0.0), 1.0 / z])).unwrap();
    assert_eq!(partial_indices(&b).unwrap().kappa, vec![0, 0]);
    assert_eq!(toeplitz(&b).kappa, vec![0, 0]);
}

#[test]
fn replay_reports_zero_deltas() {
    let mut rng = sampling::rng(21);
    for n in 1..=2 {
        let q = sampling::hermitian(&mut rng, n);
        let p = sampling::disc_params(&mut rng, n, 0.6, true);
        let report = verify_reduction_chain(&q, &p, 256).unwrap();
        assert_eq!(report.start, report.end);
        assert!(report.steps.iter().all(|s| s.delta == s.expected_delta));
    }
}
