use statdisc_bench::{params, quadric, quartic_bump, unit_center};
use statdisc_core::disc::Disc;
use statdisc_core::solver::{solve_glued_disc, Constraints, SolveConfig};
use statdisc_core::DiscParams;

#[test]
fn fixture_discs_glue() {
    for n in 1..=3 {
        let q = quadric(n);
        let d = Disc::new(&q, params(n)).unwrap();
        assert!(d.gluing_residual(256).unwrap() < 1e-12);
        assert!(q.eval_r(&unit_center(n)).unwrap() > 0.0);
    }
}

#[test]
fn benchmarked_solve_converges() {
    let cfg = SolveConfig { modes: 32, ..SolveConfig::default() };
    for n in 1..=2 {
        let m = quartic_bump(n, 1e-3);
        let start = DiscParams::new(0.0, vec![0.0.into(); n], params(n).w, 0.0.into()).unwrap();
        let sol = solve_glued_disc(&m, &start, &cfg, &Constraints::default()).unwrap();
        assert!(sol.diagnostics.boundary_residual < cfg.tolerance);
    }
}
