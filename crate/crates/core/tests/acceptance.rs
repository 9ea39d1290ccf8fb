//! Acceptance gate: ten criteria, each checked at its stated tolerance and
//! runtime budget. One `PASS`/`FAIL` line per criterion goes to stderr
//! uncaptured, so it shows in plain `cargo test` output.

use std::io::Write;
use std::time::{Duration, Instant};

use statdisc_core::boundary::{self, DEFAULT_GRID};
use statdisc_core::disc::{self, Disc, LiftParams};
use statdisc_core::indices::{self, SymbolSource, ToeplitzConfig};
use statdisc_core::linalg::{c, CMat, C64};
use statdisc_core::solver::*;
use statdisc_core::{sampling, DefiningFunction, DiscParams, Hyperquadric, Monomial, PerturbedHypersurface, RealPolynomial};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>, what: &str) -> Result<T, String> {
    r.map_err(|e| format!("{what}: {e}"))
}

fn dist(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn bump(q: Hyperquadric, eps: f64) -> PerturbedHypersurface {
    let n = q.n();
    let mut e = vec![0u32; 2 * n + 2];
    e[2] = 4;
    let s = RealPolynomial::new(2 * n + 2, vec![Monomial { exponents: e, coeff: 1.0 }]).unwrap();
    PerturbedHypersurface::new(q, s, eps).unwrap()
}

fn solver_cfg() -> SolveConfig {
    SolveConfig { modes: 40, ..SolveConfig::default() }
}

fn gluing_identity() -> Outcome {
    let mut rng = sampling::rng(101);
    let mut worst = 0.0f64;
    for k in 0..200 {
        let n = 1 + k % 3;
        let q = sampling::hermitian(&mut rng, n);
        let p = sampling::disc_params(&mut rng, n, 0.9, true);
        let bound = 1e-10 * (1.0 + p.norm_sqr());
        let h = ok(Disc::new(&q, p).and_then(|d| d.boundary(DEFAULT_GRID)), "disc")?;
        let res = (0..DEFAULT_GRID).map(|i| q.eval_r(&h.at(i)).unwrap().abs()).fold(0.0, f64::max);
        ensure!(res < bound, "instance {k}: residual {res:e} ≥ {bound:e}");
        worst = worst.max(res / bound);
    }
    Ok(format!("200 discs, worst residual/bound {worst:.2e}"))
}

fn parametrization_roundtrip() -> Outcome {
    let mut rng = sampling::rng(102);
    let mut worst = 0.0f64;
    for k in 0..200 {
        let n = 1 + k % 3;
        let q = sampling::hermitian(&mut rng, n);
        let p = sampling::disc_params(&mut rng, n, 0.9, true);
        let h = ok(Disc::new(&q, p.clone()).and_then(|d| d.boundary(DEFAULT_GRID)), "disc")?;
        let r = ok(disc::invert_disc(&q, &h), "invert")?;
        let err = [(p.y0 - r.y0).abs(), (p.a - r.a).norm(), dist(&p.v, &r.v), dist(&p.w, &r.w)]
            .into_iter()
            .fold(0.0, f64::max);
        ensure!(err < 1e-8, "instance {k}: parameter error {err:e}");
        worst = worst.max(err);
    }
    Ok(format!("200 inversions, worst parameter error {worst:.2e}"))
}

fn lift_validity() -> Outcome {
    let mut rng = sampling::rng(103);
    let (mut real, mut defect, mut spread) = (0.0f64, 0.0f64, 0.0f64);
    // Closed-form lifts of arbitrary discs, including v ≠ 0.
    for k in 0..50 {
        let n = 1 + k % 3;
        let q = sampling::hermitian(&mut rng, n);
        let l = ok(LiftParams::new(sampling::disc_params(&mut rng, n, 0.6, true), 1.0 + k as f64 / 10.0), "lift params")?;
        let lift = ok(disc::closed_form_lift(&q, &l), "lift")?;
        let (h, hs) = (lift.disc().boundary(DEFAULT_GRID).unwrap(), lift.boundary(DEFAULT_GRID).unwrap());
        for i in 0..DEFAULT_GRID {
            let g = q.gradient(&h.at(i));
            for (x, y) in hs.at(i).iter().zip(&g) {
                let t = x / y;
                real = real.max(t.im.abs() / t.norm());
            }
        }
        defect = defect.max(boundary::lift_defect(&hs));
        ensure!(real < 1e-10 && defect < 1e-10, "instance {k}: realness {real:e}, defect {defect:e}");
    }
    // The constructive lift starts from φ = ζ ∂r/∂z_n∘h in a half-plane,
    // which holds on the translated discs (v = 0).
    for k in 0..50 {
        let n = 1 + k % 3;
        let q = sampling::hermitian(&mut rng, n);
        let p = sampling::disc_params(&mut rng, n, 0.6, false);
        let p = DiscParams { y0: sampling::complex(&mut rng, 1.0).re, ..p };
        let b = if k % 2 == 0 { 1.0 } else { -0.5 - k as f64 / 50.0 };
        let l = ok(LiftParams::new(p, b), "lift params")?;
        let chk = ok(disc::check_lift(&q, &l, DEFAULT_GRID), "lift")?;
        ensure!(chk.realness < 1e-10, "instance {k}: realness {:e}", chk.realness);
        ensure!(chk.closed_form_defect < 1e-10, "instance {k}: defect {:e}", chk.closed_form_defect);
        ensure!(chk.ratio_spread < 1e-9, "instance {k}: ratio spread {:e}", chk.ratio_spread);
        ensure!(chk.ratio * b > 0.0, "instance {k}: ratio {} has the wrong sign for b = {b}", chk.ratio);
        real = real.max(chk.realness);
        defect = defect.max(chk.closed_form_defect);
        spread = spread.max(chk.ratio_spread);
    }
    Ok(format!("50 + 50 lifts, realness {real:.1e}, defect {defect:.1e}, constructed/closed ratio spread {spread:.1e}"))
}

fn maslov_index() -> Outcome {
    let mut rng = sampling::rng(104);
    let mut worst = 0.0f64;
    for n in 1..=3 {
        for k in 0..30 {
            let q = sampling::hermitian(&mut rng, n);
            let p = sampling::disc_params(&mut rng, n, 0.8, true);
            let b = ok(indices::build_b(&q, &p, SymbolSource::ClosedForm, DEFAULT_GRID), "symbol")?;
            let total = ok(indices::maslov_index(&b), "index")?;
            ensure!(total == 2 * n as i64 + 2, "n={n} instance {k}: index {total}");
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            for (z, d) in boundary::grid(DEFAULT_GRID).iter().zip(b.determinants()) {
                let err = (d - sign * z.powi(2 * n as i32 + 2)).norm();
                ensure!(err < 1e-12, "n={n} instance {k}: det B off by {err:e}");
                worst = worst.max(err);
            }
        }
    }
    Ok(format!("90 symbols, index 2n+2, worst det error {worst:.1e}"))
}

fn partial_indices() -> Outcome {
    let mut rng = sampling::rng(105);
    for k in 0..50 {
        let n = 1 + k % 2;
        let q = sampling::hermitian(&mut rng, n);
        // The kernel oracle resolves symbols whose modes decay like |a|^m
        // within its truncation order.
        let p = sampling::disc_params(&mut rng, n, 0.6, k % 2 == 0);
        let b = ok(indices::build_b(&q, &p, SymbolSource::ClosedForm, DEFAULT_GRID), "symbol")?;
        let kappa = ok(indices::partial_indices(&b), "factorization")?;
        ensure!(kappa.kappa.iter().all(|&x| x >= 0), "instance {k}: {:?}", kappa.kappa);
        ensure!(kappa.total == 2 * n as i64 + 2, "instance {k}: total {}", kappa.total);
        let oracle = ok(indices::toeplitz_indices(b.samples(), kappa.total, &ToeplitzConfig::default()), "oracle")?;
        ensure!(oracle == kappa, "instance {k}: factorization {:?} vs Toeplitz {:?}", kappa.kappa, oracle.kappa);
    }
    Ok("50 factorizations agree with the Toeplitz kernels".into())
}

fn reduction_replay() -> Outcome {
    let mut rng = sampling::rng(106);
    for k in 0..20 {
        let n = 1 + k % 2;
        let q = sampling::hermitian(&mut rng, n);
        let p = sampling::disc_params(&mut rng, n, 0.6, k % 2 == 1);
        let report = ok(indices::verify_reduction_chain(&q, &p, DEFAULT_GRID), "replay")?;
        ensure!(report.start == report.end, "instance {k}: {:?} vs {:?}", report.start, report.end);
        for s in &report.steps {
            ensure!(s.delta == s.expected_delta, "instance {k}: step {} winding {} expected {}", s.name, s.delta, s.expected_delta);
        }
        let closed = ok(indices::build_b(&q, &p, SymbolSource::ClosedForm, DEFAULT_GRID).and_then(|b| indices::partial_indices(&b)), "closed form")?;
        ensure!(closed == report.end, "instance {k}: closed form {:?} vs replay {:?}", closed.kappa, report.end.kappa);
    }
    Ok("20 reduction chains agree".into())
}

fn family_dimension_check() -> Outcome {
    let cases = [
        (Hyperquadric::identity(1), DiscParams::new(0.0, vec![c(0.0, 0.0)], vec![c(1.0, 0.0)], c(0.3, 0.1)).unwrap()),
        (
            Hyperquadric::diagonal(&[1.0, -2.0]).unwrap(),
            DiscParams::new(0.2, vec![c(0.1, 0.0), c(0.0, -0.1)], vec![c(0.6, 0.0), c(0.2, 0.3)], c(0.2, -0.1)).unwrap(),
        ),
    ];
    let cfg = solver_cfg();
    let mut min_gap = f64::INFINITY;
    for (q, p) in cases {
        let n = q.n();
        let center = Disc::new(&q, p.clone()).unwrap().center();
        for eps in [0.0, 1e-4, 1e-3] {
            let m = bump(q.clone(), eps);
            for pinned in [false, true] {
                let cons = if pinned { Constraints::pinned(center.clone()) } else { Constraints::default() };
                let sol = ok(solve_glued_disc(&m, &p, &cfg, &cons), "solve")?;
                let fd = ok(family_dimension(&m, &sol, &cfg), "dimension")?;
                let want = if pinned { 2 * n + 1 } else { 4 * n + 3 };
                ensure!(fd.dim == want, "n={n} ε={eps} pinned={pinned}: dim {} ≠ {want}", fd.dim);
                ensure!(fd.gap >= 1e3, "n={n} ε={eps} pinned={pinned}: gap {:e}", fd.gap);
                min_gap = min_gap.min(fd.gap);
            }
        }
    }
    Ok(format!("dims 7/3 and 11/5 at ε ∈ {{0, 1e-4, 1e-3}}, smallest gap {min_gap:.1e}"))
}

fn fixed_center_diffeomorphisms() -> Outcome {
    let cfg = solver_cfg();
    let mut lines = Vec::new();
    for eps in [0.0, 1e-3] {
        let m = bump(Hyperquadric::identity(1), eps);
        let mut last = (f64::INFINITY, f64::INFINITY);
        for rp in [1.0, 0.5, 0.25] {
            let j = ok(center_map_jacobians(&m, &[c(rp, 0.0), c(0.0, 0.0)], &cfg), "jacobians")?;
            let (se, sv) = (j.endpoint_sigma_min(), j.velocity_sigma_min());
            let (re, rv) = (se / j.endpoint_singular_values[0], sv / j.velocity_singular_values[0]);
            ensure!(re > 1e-8 && rv > 1e-8, "ε={eps} r(p)={rp}: relative σ_min {re:e}, {rv:e}");
            ensure!(se < last.0, "ε={eps} r(p)={rp}: endpoint σ_min {se:e} not below {:e}", last.0);
            ensure!(sv <= last.1 * (1.0 + 1e-9), "ε={eps} r(p)={rp}: velocity σ_min {sv:e} above {:e}", last.1);
            last = (se, sv);
            lines.push(format!("{se:.3}/{sv:.3}"));
        }
    }
    Ok(format!("σ_min endpoint/velocity at r(p)=1,0.5,0.25 for ε=0 then 1e-3: {}", lines.join(" ")))
}

fn reachability() -> Outcome {
    let q = Hyperquadric::identity(1);
    let mut rng = sampling::rng(109);
    let (mut reached, mut worst) = (0, 0.0f64);
    for k in 0..100 {
        let z1 = sampling::complex(&mut rng, 1.5);
        let z = vec![c(z1.norm_sqr(), rng_im(&mut rng)), z1];
        let p0 = c(if k % 3 == 0 { -1.0 } else { 1.0 } * (0.2 + (k as f64) / 50.0), 0.3 * ((k % 7) as f64 - 3.0));
        let p = [p0, c(0.0, 0.0)];
        let expect = z[0].re * p0.re > 0.0;
        match disc::disc_through(&q, &p, &z) {
            Ok(params) => {
                ensure!(expect, "point {k}: solved although Re z₀ Re p₀ ≤ 0");
                let end = ok(Disc::new(&q, params).and_then(|d| d.endpoint()), "endpoint")?;
                let err = dist(&end, &z);
                ensure!(err < 1e-10, "point {k}: h(1) off by {err:e}");
                worst = worst.max(err);
                reached += 1;
            }
            Err(e) => ensure!(!expect && e.kind() == "not-reachable", "point {k}: {e}"),
        }
    }
    Ok(format!("{reached}/100 reachable, worst |h(1) − z| {worst:.1e}"))
}

fn rng_im(rng: &mut sampling::SeededRng) -> f64 {
    sampling::complex(rng, 2.0).im
}

fn jet_transport() -> Outcome {
    let cfg = solver_cfg();
    let q = Hyperquadric::identity(1);
    let m0 = PerturbedHypersurface::unperturbed(q.clone());
    let p = [c(1.0, 0.0), c(0.0, 0.0)];
    let mut rng = sampling::rng(110);
    let on_q = |rng: &mut sampling::SeededRng| {
        let z1 = sampling::complex(rng, 1.0);
        vec![c(z1.norm_sqr(), rng_im(rng)), z1]
    };
    let id = CMat::identity(2, 2);
    let mut worst_id = 0.0f64;
    for k in 0..20 {
        let z = on_q(&mut rng);
        let t = ok(transport_jet(&m0, &m0, &p, &id, &z, None, &cfg), "identity transport")?;
        let err = dist(&t.image, &z);
        ensure!(err < 1e-9, "identity point {k}: {err:e}");
        worst_id = worst_id.max(err);
    }
    let rot = C64::from_polar(1.0, 0.7);
    let df = block_differential(&CMat::from_element(1, 1, rot));
    let mut worst_rot = 0.0f64;
    for k in 0..10 {
        let z = on_q(&mut rng);
        let t = ok(transport_jet(&m0, &m0, &p, &df, &z, None, &cfg), "rotation transport")?;
        let err = dist(&t.image, &[z[0], rot * z[1]]);
        ensure!(err < 1e-9, "rotation point {k}: {err:e}");
        worst_rot = worst_rot.max(err);
    }
    let eps = 1e-3;
    let m = bump(q.clone(), eps);
    let mut worst_eps = 0.0f64;
    for k in 0..5 {
        // Boundary points of discs with |a| < 0.4 keep |a|^M below the solver tolerance.
        let seed = IndicatrixSeed { direction: vec![C64::from_polar(1.0, 1.3 * k as f64)], a: C64::from_polar(0.08 * k as f64, 2.1 * k as f64) };
        let z = ok(indicatrix_params(&q, &p, &seed).and_then(|pp| Disc::new(&q, pp)?.endpoint()), "test point")?;
        let t = ok(transport_jet(&m, &m, &p, &id, &z, None, &cfg), "perturbed transport")?;
        let err = dist(&t.image, &z);
        ensure!(err < 10.0 * eps, "perturbed point {k}: {err:e}");
        worst_eps = worst_eps.max(err);
    }
    Ok(format!("identity {worst_id:.1e}, rotation {worst_rot:.1e}, ε=1e-3 perturbed {worst_eps:.1e}"))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome, u64); 10] = [
        ("gluing identity", gluing_identity, 5),
        ("parametrization roundtrip", parametrization_roundtrip, 5),
        ("lift validity", lift_validity, 10),
        ("Maslov index", maslov_index, 10),
        ("partial indices", partial_indices, 60),
        ("reduction replay", reduction_replay, 60),
        ("family dimension", family_dimension_check, 120),
        ("fixed-center diffeomorphisms", fixed_center_diffeomorphisms, 60),
        ("reachability", reachability, 5),
        ("jet transport", jet_transport, 120),
    ];
    let mut failed = Vec::new();
    let mut stderr = std::io::stderr().lock();
    writeln!(stderr).unwrap();
    for (i, (name, check, budget)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let outcome = outcome.and_then(|msg| {
            if elapsed > Duration::from_secs(budget) {
                Err(format!("{msg}; runtime {:.1} s over the {budget} s budget", elapsed.as_secs_f64()))
            } else {
                Ok(msg)
            }
        });
        let (tag, msg) = match &outcome {
            Ok(m) => ("PASS", m),
            Err(m) => ("FAIL", m),
        };
        writeln!(stderr, "{tag} {:>2} {name} ({:.2} s): {msg}", i + 1, elapsed.as_secs_f64()).unwrap();
        if outcome.is_err() {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
