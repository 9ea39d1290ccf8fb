//! Seeded random instances for tests, benchmarks and randomized CLI runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::disc::DiscParams;
use crate::linalg::{CMat, C64};
use crate::quadric::Hyperquadric;

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex(rng: &mut SeededRng, scale: f64) -> C64 {
    C64::new(rng.gen_range(-scale..scale), rng.gen_range(-scale..scale))
}

pub fn complex_vec(rng: &mut SeededRng, n: usize, scale: f64) -> Vec<C64> {
    (0..n).map(|_| complex(rng, scale)).collect()
}

/// Point of the open disc with modulus below `max_modulus`.
pub fn in_disc(rng: &mut SeededRng, max_modulus: f64) -> C64 {
    C64::from_polar(max_modulus * rng.gen::<f64>().sqrt(), rng.gen_range(0.0..std::f64::consts::TAU))
}

/// Hermitian matrix `U diag(λ) U*` with eigenvalue moduli in `[0.5, 2]` and
/// random signs, so the condition number stays below 4.
pub fn hermitian(rng: &mut SeededRng, n: usize) -> Hyperquadric {
    let m = CMat::from_fn(n, n, |_, _| complex(rng, 1.0));
    let u = m.qr().q();
    let lambda: Vec<f64> = (0..n)
        .map(|_| {
            let mag = rng.gen_range(0.5..2.0);
            if rng.gen_bool(0.5) { mag } else { -mag }
        })
        .collect();
    let d = CMat::from_fn(n, n, |i, j| if i == j { C64::new(lambda[i], 0.0) } else { C64::new(0.0, 0.0) });
    let a = &u * d * u.adjoint();
    let a = (&a + a.adjoint()) * C64::new(0.5, 0.0);
    Hyperquadric::new(a).expect("well-conditioned by construction")
}

/// Disc parameters with `|a| < max_a`, `w` of size about 1 and optional `v`.
pub fn disc_params(rng: &mut SeededRng, n: usize, max_a: f64, with_v: bool) -> DiscParams {
    let y0 = if with_v { rng.gen_range(-1.0..1.0) } else { 0.0 };
    let v = if with_v { complex_vec(rng, n, 0.5) } else { vec![C64::new(0.0, 0.0); n] };
    let mut w = complex_vec(rng, n, 1.0);
    w[0] += C64::new(0.5, 0.0);
    let a = in_disc(rng, max_a);
    DiscParams::new(y0, v, w, a).expect("valid by construction")
}
