use serde::{Deserialize, Serialize};

use super::system::Constraints;
use super::{solve_glued_disc, SolveConfig};
use crate::disc::{disc_through, Disc, DiscParams};
use crate::error::{Result, StatDiscError};
use crate::linalg::{is_finite_c, CMat, C64};
use crate::quadric::{DefiningFunction, Hyperquadric, PerturbedHypersurface};

const GOLDEN: f64 = 0.618_033_988_749_894_9;
const SQRT2_FRAC: f64 = 0.414_213_562_373_095_1;
/// Keeps `|a|^M` far below the Newton tolerance at the default truncation.
const INDICATRIX_MAX_A: f64 = 0.45;
const ON_INDICATRIX: f64 = 1e-9;

/// A point of the pinned-family parameter grid: a direction of `w` and `a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatrixSeed {
    pub direction: Vec<C64>,
    pub a: C64,
}

/// One sample of the indicatrix, or the error that prevented it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatrixPoint {
    pub seed: IndicatrixSeed,
    pub params: Option<DiscParams>,
    /// `h'(0)` of the closed-form disc of the base quadric.
    pub closed_form: Option<Vec<C64>>,
    /// `h'(0)` of the solved disc.
    pub velocity: Option<Vec<C64>>,
    pub residual: Option<f64>,
    pub iterations: usize,
    /// `(kind, message)` of a failed sample.
    pub error: Option<(String, String)>,
}

fn frac(x: f64) -> f64 {
    x - x.floor()
}

/// `k` deterministic seeds: equidistributed directions, `|a| < 0.45`.
pub fn indicatrix_grid(n: usize, k: usize) -> Vec<IndicatrixSeed> {
    (0..k)
        .map(|i| {
            let t = i as f64;
            let direction: Vec<C64> = if n == 1 {
                vec![C64::from_polar(1.0, std::f64::consts::TAU * t / k as f64)]
            } else {
                let raw: Vec<C64> = (0..n)
                    .map(|j| {
                        let u = frac((t + 0.5) * GOLDEN * (j + 1) as f64 + 0.137 * j as f64);
                        let v = frac((t + 0.5) * SQRT2_FRAC * (j + 2) as f64 + 0.291 * j as f64);
                        C64::new(2.0 * u - 1.0, 2.0 * v - 1.0)
                    })
                    .collect();
                let norm = raw.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1e-12);
                raw.into_iter().map(|z| z / norm).collect()
            };
            let a = if i == 0 {
                C64::new(0.0, 0.0)
            } else {
                C64::from_polar(INDICATRIX_MAX_A * frac(t * GOLDEN), std::f64::consts::TAU * frac(t * SQRT2_FRAC))
            };
            IndicatrixSeed { direction, a }
        })
        .collect()
}

/// The disc of the quadric centered at `p` with `w ∥ direction` and the given `a`.
pub fn indicatrix_params(q: &Hyperquadric, p: &[C64], seed: &IndicatrixSeed) -> Result<DiscParams> {
    let n = q.n();
    if p.len() != n + 1 || seed.direction.len() != n {
        return Err(StatDiscError::SizeMismatch { expected: n + 1, got: p.len() });
    }
    let x0 = q.eval_r(p)?;
    let uau = q.form(&seed.direction, &seed.direction).re;
    let s = x0 * (1.0 - seed.a.norm_sqr()) / uau;
    if !(s > 0.0 && s.is_finite()) {
        return Err(StatDiscError::NotReachable(format!("r(p)/ᵗūAu = {:e} is not positive", x0 / uau)));
    }
    let w = seed.direction.iter().map(|u| u * s.sqrt()).collect();
    DiscParams::new(p[0].im, p[1..].to_vec(), w, seed.a)
}

/// Velocities `h'(0)` of stationary discs of `m` centered at `p`, one per
/// seed of [`indicatrix_grid`]. Failures are recorded per point.
pub fn indicatrix_sample(m: &PerturbedHypersurface, p: &[C64], k: usize, cfg: &SolveConfig) -> Result<Vec<IndicatrixPoint>> {
    cfg.validate()?;
    if p.len() != m.n() + 1 {
        return Err(StatDiscError::SizeMismatch { expected: m.n() + 1, got: p.len() });
    }
    Ok(indicatrix_grid(m.n(), k).into_iter().map(|seed| indicatrix_point(m, p, seed, cfg)).collect())
}

/// One indicatrix sample; failures are recorded in the point.
pub fn indicatrix_point(m: &PerturbedHypersurface, p: &[C64], seed: IndicatrixSeed, cfg: &SolveConfig) -> IndicatrixPoint {
    let mut point = IndicatrixPoint {
        seed,
        params: None,
        closed_form: None,
        velocity: None,
        residual: None,
        iterations: 0,
        error: None,
    };
    let run = |point: &mut IndicatrixPoint| -> Result<()> {
        let params = indicatrix_params(m.base(), p, &point.seed)?;
        point.closed_form = Some(Disc::new(m.base(), params.clone())?.velocity());
        point.params = Some(params.clone());
        let sol = solve_glued_disc(m, &params, cfg, &Constraints::pinned(p.to_vec()))?;
        point.velocity = Some(sol.velocity());
        point.residual = Some(sol.diagnostics.boundary_residual.max(sol.diagnostics.stationarity_residual));
        point.iterations = sol.diagnostics.iterations;
        Ok(())
    };
    if let Err(e) = run(&mut point) {
        point.error = Some((e.kind().to_string(), e.to_string()));
    }
    point
}

/// Result of [`transport_jet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transport {
    /// `h̃(1)`.
    pub image: Vec<C64>,
    pub source_params: DiscParams,
    /// `h'(0)` of the source disc through `z`.
    pub source_velocity: Vec<C64>,
    /// `dF_p · h'(0)`.
    pub target_velocity: Vec<C64>,
    pub target_params: DiscParams,
    pub source_iterations: usize,
    pub target_iterations: usize,
}

fn apply(df: &CMat, v: &[C64]) -> Vec<C64> {
    (0..df.nrows()).map(|i| (0..df.ncols()).map(|j| df[(i, j)] * v[j]).sum()).collect()
}

/// The source disc centered at `p` through `z`, and its velocity.
fn source_disc(source: &PerturbedHypersurface, p: &[C64], z: &[C64], cfg: &SolveConfig) -> Result<(DiscParams, Vec<C64>, usize)> {
    let q = source.base();
    if z[0].re * p[0].re <= 0.0 {
        return Err(StatDiscError::NotReachable(format!("Re z₀ · Re p₀ = {:e} ≤ 0", z[0].re * p[0].re)));
    }
    if source.epsilon() == 0.0 {
        let params = disc_through(q, p, z)?;
        let v = Disc::new(q, params.clone())?.velocity();
        return Ok((params, v, 0));
    }
    let mut on_q = z.to_vec();
    on_q[0] = C64::new(q.form(&z[1..], &z[1..]).re, z[0].im);
    let params = disc_through(q, p, &on_q)?;
    let cons = Constraints { center: Some(p.to_vec()), endpoint: Some(z.to_vec()), velocity: None };
    let sol = solve_glued_disc(source, &params, cfg, &cons)?;
    Ok((params, sol.velocity(), sol.diagnostics.iterations))
}

/// Seed on the target family: `w̃ = v_α` and `a` from `v₀ = 2ᵗp̄_αAw̃ + 2a·r(p)`.
fn target_seed(q: &Hyperquadric, center: &[C64], v: &[C64]) -> Result<DiscParams> {
    let k = q.eval_r(center)?;
    if k == 0.0 {
        return Err(StatDiscError::TargetInversion("target center lies on the quadric".into()));
    }
    let w: Vec<C64> = v[1..].to_vec();
    let a = (v[0] - 2.0 * q.form(&center[1..], &w)) / (2.0 * k);
    DiscParams::new(center[0].im, center[1..].to_vec(), w, a)
        .map_err(|e| StatDiscError::TargetInversion(format!("no target disc with the mapped velocity: {e}")))
}

/// Maps a boundary point `z` near the source through the disc centered at
/// `p`: `h'(0)` is pushed forward by `dF`, the target disc centered at
/// `target_center` (default `p`) with that velocity is found, and its value at
/// `ζ = 1` is returned.
pub fn transport_jet(
    source: &PerturbedHypersurface,
    target: &PerturbedHypersurface,
    p: &[C64],
    df: &CMat,
    z: &[C64],
    target_center: Option<&[C64]>,
    cfg: &SolveConfig,
) -> Result<Transport> {
    cfg.validate()?;
    let n = source.n();
    let d = n + 1;
    if target.n() != n {
        return Err(StatDiscError::SizeMismatch { expected: n, got: target.n() });
    }
    let center = target_center.unwrap_or(p);
    for v in [p, z, center] {
        if v.len() != d {
            return Err(StatDiscError::SizeMismatch { expected: d, got: v.len() });
        }
    }
    if df.nrows() != d || df.ncols() != d {
        return Err(StatDiscError::SizeMismatch { expected: d, got: df.nrows().max(df.ncols()) });
    }
    if !df.iter().chain(p).chain(z).all(|x| is_finite_c(*x)) {
        return Err(StatDiscError::InvalidInput("non-finite transport data".into()));
    }
    let (source_params, source_velocity, source_iterations) = source_disc(source, p, z, cfg)?;
    let target_velocity = apply(df, &source_velocity);
    let tq = target.base();
    let seed = target_seed(tq, center, &target_velocity)?;
    let (image, target_iterations) = if target.epsilon() == 0.0 {
        let k = tq.eval_r(center)?;
        let defect = tq.form(&seed.w, &seed.w).re - k * (1.0 - seed.a.norm_sqr());
        if defect.abs() > ON_INDICATRIX * (1.0 + k.abs()) {
            return Err(StatDiscError::TargetInversion(format!(
                "mapped velocity is off the target indicatrix by {defect:e}"
            )));
        }
        (Disc::new(tq, seed.clone())?.endpoint()?, 0)
    } else {
        let cons = Constraints { center: Some(center.to_vec()), endpoint: None, velocity: Some(target_velocity.clone()) };
        let sol = solve_glued_disc(target, &seed, cfg, &cons)
            .map_err(|e| StatDiscError::TargetInversion(format!("{} ({})", e, e.kind())))?;
        (sol.endpoint(), sol.diagnostics.iterations)
    };
    Ok(Transport {
        image,
        source_params,
        source_velocity,
        target_velocity,
        target_params: seed,
        source_iterations,
        target_iterations,
    })
}

/// Differential of `(z₀, z_α) ↦ (z₀, U z_α)`, an automorphism of the quadric
/// whenever `U` preserves `A`.
pub fn block_differential(u: &CMat) -> CMat {
    let d = u.nrows() + 1;
    CMat::from_fn(d, d, |i, j| match (i, j) {
        (0, 0) => C64::new(1.0, 0.0),
        (0, _) | (_, 0) => C64::new(0.0, 0.0),
        _ => u[(i - 1, j - 1)],
    })
}
