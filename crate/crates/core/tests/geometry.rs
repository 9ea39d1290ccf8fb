use proptest::prelude::*;
use statdisc_core::boundary::{self, BoundaryFunction};
use statdisc_core::disc::{self, closed_form_lift, Disc, LiftParams};
use statdisc_core::linalg::{c, C64};
use statdisc_core::quadric::{real_coordinates, real_index};
use statdisc_core::{sampling, DefiningFunction, DiscParams, Hyperquadric, Monomial, PerturbedHypersurface, RealPolynomial};

fn quadric_and_point(seed: u64, n: usize) -> (Hyperquadric, Vec<C64>) {
    let mut rng = sampling::rng(seed);
    (sampling::hermitian(&mut rng, n), sampling::complex_vec(&mut rng, n + 1, 2.0))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn hermitian_form_is_real(seed in any::<u64>(), n in 1usize..=3) {
        let (q, z) = quadric_and_point(seed, n);
        let f = q.form(&z[1..], &z[1..]);
        prop_assert!(f.im.abs() <= 1e-12 * (1.0 + f.norm()));
        prop_assert_eq!(q.eval_r(&z).unwrap(), z[0].re - f.re);
    }

    #[test]
    fn gradient_matches_finite_differences(seed in any::<u64>(), n in 1usize..=3) {
        let (q, z) = quadric_and_point(seed, n);
        let g = q.grad_r(&z).unwrap();
        let h = 1e-6;
        for j in 0..=n {
            let shifted = |d: C64| {
                let mut w = z.clone();
                w[j] += d;
                q.eval_r(&w).unwrap()
            };
            let dx = (shifted(c(h, 0.0)) - shifted(c(-h, 0.0))) / (2.0 * h);
            let dy = (shifted(c(0.0, h)) - shifted(c(0.0, -h))) / (2.0 * h);
            let fd = C64::new(dx, -dy) * 0.5;
            prop_assert!((fd - g[j]).norm() <= 1e-6 * (1.0 + g[j].norm()), "j={} {} vs {}", j, fd, g[j]);
        }
    }

    #[test]
    fn perturbation_is_affine_in_epsilon(seed in any::<u64>(), alpha in -1.0f64..1.0, beta in -1.0f64..1.0) {
        let (q, z) = quadric_and_point(seed, 2);
        let mut e = vec![0u32; 6];
        e[real_index(2, 1, false)] = 2;
        e[real_index(2, 2, true)] = 1;
        e[1] = 1;
        let s = RealPolynomial::new(6, vec![Monomial { exponents: e, coeff: 0.7 }]).unwrap();
        let m = PerturbedHypersurface::new(q.clone(), s.clone(), 1.0).unwrap();
        let r = q.eval_r(&z).unwrap();
        let rho = |eps: f64| m.with_epsilon(eps).eval_rho(&z).unwrap();
        let lhs = (rho(alpha) - r) + (rho(beta) - r);
        let rhs = rho(alpha + beta) - r;
        prop_assert!((lhs - rhs).abs() <= 1e-14 * (1.0 + r.abs() + s.eval(&real_coordinates(&z)).abs()));
    }
}

#[test]
fn existence_matches_brute_force_search() {
    let mut rng = sampling::rng(71);
    for k in 0..60 {
        let n = 1 + k % 3;
        let q = if k % 5 == 0 {
            let signs: Vec<f64> = (0..n).map(|i| if (k / 5 + i) % 2 == 0 { 1.5 } else { -0.7 }).collect();
            Hyperquadric::diagonal(&signs).unwrap()
        } else {
            sampling::hermitian(&mut rng, n)
        };
        let p = sampling::complex_vec(&mut rng, n + 1, 1.0);
        let e = q.exists_disc_centered(&p).unwrap();
        // A disc exists iff some w ≠ 0 has ᵗw̄Aw = x₀; by scaling, iff some unit
        // u has ᵗūAu of the sign of x₀.
        let x0 = e.x0;
        let found = (0..10_000).any(|_| {
            let u = sampling::complex_vec(&mut rng, n, 1.0);
            q.form(&u, &u).re * x0.signum() > 0.0
        });
        assert_eq!(e.exists, found, "instance {k}: x0={x0} case {:?}", e.case);
        if let Some(w) = e.witness {
            assert!((q.form(&w, &w).re - x0).abs() < 1e-12 * (1.0 + x0.abs()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gluing_residual_is_small(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = sampling::rng(seed);
        let q = sampling::hermitian(&mut rng, n);
        let p = sampling::disc_params(&mut rng, n, 0.9, true);
        let bound = 1e-10 * (1.0 + p.norm_sqr());
        let d = Disc::new(&q, p).unwrap();
        prop_assert!(d.gluing_residual(256).unwrap() < bound);
    }

    #[test]
    fn inversion_recovers_parameters(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = sampling::rng(seed);
        let q = sampling::hermitian(&mut rng, n);
        let p = sampling::disc_params(&mut rng, n, 0.9, true);
        let r = disc::invert_disc(&q, &Disc::new(&q, p.clone()).unwrap().boundary(256).unwrap()).unwrap();
        prop_assert!((p.y0 - r.y0).abs() < 1e-8 && (p.a - r.a).norm() < 1e-8);
        for (x, y) in p.v.iter().chain(&p.w).zip(r.v.iter().chain(&r.w)) {
            prop_assert!((x - y).norm() < 1e-8);
        }
    }

    #[test]
    fn lift_scales_linearly(seed in any::<u64>(), n in 1usize..=3, beta in prop_oneof![-3.0f64..-0.1, 0.1f64..3.0]) {
        let mut rng = sampling::rng(seed);
        let q = sampling::hermitian(&mut rng, n);
        let p = sampling::disc_params(&mut rng, n, 0.6, true);
        let one = closed_form_lift(&q, &LiftParams::new(p.clone(), 1.0).unwrap()).unwrap().boundary(64).unwrap();
        let scaled = closed_form_lift(&q, &LiftParams::new(p, beta).unwrap()).unwrap().boundary(64).unwrap();
        for (a, b) in one.components().iter().flatten().zip(scaled.components().iter().flatten()) {
            prop_assert!((b / beta - a).norm() <= 1e-15 * (1.0 + a.norm()));
        }
    }

    #[test]
    fn disc_through_hits_the_point(seed in any::<u64>(), n in 1usize..=3, p0 in 0.05f64..4.0, y in -2.0f64..2.0) {
        let mut rng = sampling::rng(seed);
        let q = Hyperquadric::identity(n);
        let mut z = sampling::complex_vec(&mut rng, n + 1, 1.5);
        z[0] = c(q.form(&z[1..], &z[1..]).re, z[0].im);
        prop_assume!(z[1..].iter().any(|x| x.norm() > 1e-3));
        let mut p = vec![c(0.0, 0.0); n + 1];
        p[0] = c(p0, y);
        let params = disc::disc_through(&q, &p, &z).unwrap();
        let d = Disc::new(&q, params).unwrap();
        let end = d.endpoint().unwrap();
        prop_assert!(end.iter().zip(&z).all(|(a, b)| (a - b).norm() < 1e-10));
        prop_assert!(d.center().iter().zip(&p).all(|(a, b)| (a - b).norm() < 1e-12));
        p[0] = -p[0].conj();
        prop_assert_eq!(disc::disc_through(&q, &p, &z).unwrap_err().kind(), "not-reachable");
    }
}

#[test]
fn center_on_quadric_iff_null_w() {
    let q = Hyperquadric::diagonal(&[1.0, -2.0]).unwrap();
    let null = vec![c(2f64.sqrt(), 0.0), c(0.0, 1.0)];
    let generic = vec![c(1.0, 0.3), c(0.2, -0.5)];
    for (w, on_q) in [(null, true), (generic, false)] {
        for a in [c(0.0, 0.0), c(0.3, -0.4)] {
            let p = DiscParams::new(0.4, vec![c(0.1, 0.2), c(-0.3, 0.0)], w.clone(), a).unwrap();
            let d = Disc::new(&q, p).unwrap();
            let r0 = q.eval_r(&d.center()).unwrap().abs();
            assert_eq!(d.w_form().abs() < 1e-12, on_q);
            assert_eq!(r0 < 1e-12, on_q, "r(h(0)) = {r0}");
        }
    }
}

fn trig(seed: u64, modes: usize, grid: usize) -> Vec<f64> {
    let mut rng = sampling::rng(seed);
    let coeffs = sampling::complex_vec(&mut rng, modes + 1, 1.0);
    boundary::grid(grid)
        .iter()
        .map(|z| coeffs.iter().enumerate().map(|(m, a)| (a * z.powi(m as i32)).re).sum())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hilbert_squares_to_minus_identity(seed in any::<u64>(), modes in 1usize..40) {
        let g = trig(seed, modes, 128);
        let mean = g.iter().sum::<f64>() / g.len() as f64;
        let tt = boundary::hilbert(&boundary::hilbert(&g));
        for (x, y) in tt.iter().zip(&g) {
            prop_assert!((x + (y - mean)).abs() < 1e-10);
        }
    }

    #[test]
    fn winding_is_additive(seed in any::<u64>(), k1 in -4i32..=4, k2 in -4i32..=4) {
        let mut rng = sampling::rng(seed);
        let (b1, b2) = (sampling::in_disc(&mut rng, 0.5), sampling::in_disc(&mut rng, 0.5));
        let nodes = boundary::grid(128);
        let f: Vec<C64> = nodes.iter().map(|z| z.powi(k1) * (C64::new(1.0, 0.0) + b1 * z)).collect();
        let g: Vec<C64> = nodes.iter().map(|z| z.powi(k2) * (C64::new(2.0, 0.0) - b2 / z)).collect();
        let fg: Vec<C64> = f.iter().zip(&g).map(|(a, b)| a * b).collect();
        let (wf, wg) = (boundary::winding_number(&f).unwrap(), boundary::winding_number(&g).unwrap());
        prop_assert_eq!(wf, k1 as i64);
        prop_assert_eq!(wg, k2 as i64);
        prop_assert_eq!(boundary::winding_number(&fg).unwrap(), wf + wg);
    }

    #[test]
    fn nonnegative_modes_have_no_defect(seed in any::<u64>(), modes in 1usize..64) {
        let mut rng = sampling::rng(seed);
        let grid = 128;
        let mut coeffs = vec![C64::new(0.0, 0.0); grid];
        for m in 0..modes {
            coeffs[boundary::slot(m as i64, grid)] = sampling::complex(&mut rng, 1.0);
        }
        let f = BoundaryFunction::synth(vec![coeffs]).unwrap();
        prop_assert!(boundary::holomorphic_defect(&f) < 1e-14);
    }

    #[test]
    fn constructed_lift_matches_closed_form(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = sampling::rng(seed);
        let q = sampling::hermitian(&mut rng, n);
        let p = sampling::disc_params(&mut rng, n, 0.6, false);
        let chk = disc::check_lift(&q, &LiftParams::new(p, 1.0).unwrap(), 256).unwrap();
        prop_assert!(chk.ratio > 0.0 && chk.ratio_spread < 1e-9, "{:?}", chk);
        prop_assert!(chk.constructed_defect < 1e-9);
    }
}

#[test]
fn lift_reflects_defining_function_scale() {
    // Multiplying ρ by 2 leaves the normalized lift unchanged.
    let q = Hyperquadric::diagonal(&[1.0, 0.5]).unwrap();
    let d = Disc::new(&q, DiscParams::new(0.0, vec![c(0.0, 0.0); 2], vec![c(0.8, 0.1), c(0.3, 0.0)], c(0.2, 0.1)).unwrap()).unwrap();
    let h = d.boundary(128).unwrap();
    struct Doubled<'a>(&'a Hyperquadric);
    impl DefiningFunction for Doubled<'_> {
        fn n(&self) -> usize {
            self.0.n()
        }
        fn value(&self, z: &[C64]) -> f64 {
            2.0 * self.0.value(z)
        }
        fn gradient(&self, z: &[C64]) -> Vec<C64> {
            self.0.gradient(z).into_iter().map(|g| g * 2.0).collect()
        }
        fn second(&self, z: &[C64]) -> (Vec<C64>, Vec<C64>) {
            let (a, b) = self.0.second(z);
            (a.into_iter().map(|x| x * 2.0).collect(), b.into_iter().map(|x| x * 2.0).collect())
        }
    }
    let l1 = boundary::construct_regular_lift(&q, &h).unwrap().h_star;
    let l2 = boundary::construct_regular_lift(&Doubled(&q), &h).unwrap().h_star;
    for k in 0..128 {
        let (a, b) = (l1.at(k), l2.at(k));
        let (na, nb) = (a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt(), b.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt());
        for (x, y) in a.iter().zip(&b) {
            assert!((x / na - y / nb).norm() < 1e-12);
        }
    }
}
