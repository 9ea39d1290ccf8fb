//! Newton continuation of stationary discs onto `{ρ = 0}`.
//!
//! A disc is represented by truncated Taylor coefficients of `h` and of
//! `log λ`, where `λ > 0` is the boundary factor making `ζλ ∂ρ/∂z∘h`
//! holomorphic. The discretized system is rank deficient by the dimension
//! of the family of stationary discs, so Newton steps use minimum-norm least
//! squares. See [`system`] for the equations.

mod family;
mod jets;
pub mod system;

use serde::{Deserialize, Serialize};

use crate::boundary::{self, BoundaryFunction, DEFAULT_GRID};
use crate::disc::{Disc, DiscParams};
use crate::error::{Result, StatDiscError};
use crate::linalg::{self, RVec, C64};
use crate::quadric::{DefiningFunction, PerturbedHypersurface};

pub use family::{
    center_map_jacobians, displace_params, family_dimension, pinned_family_basis, CenterJacobians, FamilyDimension,
};
pub use jets::{
    block_differential, indicatrix_grid, indicatrix_params, indicatrix_point, indicatrix_sample, transport_jet, IndicatrixPoint,
    IndicatrixSeed, Transport,
};
pub use system::{Coefficients, Constraints, Norms};

/// Discretization and Newton controls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveConfig {
    pub grid: usize,
    /// Highest Taylor mode kept for `h` and `log λ`.
    pub modes: usize,
    /// Sup-norm tolerance on every residual block.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Smallest line-search step before Newton is declared stagnant.
    pub min_step: f64,
    /// Relative singular-value cutoff of the least-squares step.
    pub rank_rtol: f64,
    /// Largest number of equal `ε` increments tried after a direct solve fails.
    pub homotopy_steps: usize,
    /// Advisory bound on the sampled `ε‖s‖_{C³}`.
    pub c3_acceptance: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            grid: DEFAULT_GRID,
            modes: 48,
            tolerance: 1e-11,
            max_iterations: 30,
            min_step: 1e-4,
            rank_rtol: 1e-10,
            homotopy_steps: 4,
            c3_acceptance: 1e-2,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        boundary::check_grid(self.grid)?;
        if self.modes == 0 || self.modes >= self.grid / 2 {
            return Err(StatDiscError::InvalidInput(format!(
                "modes must lie in 1..{} for a grid of {}",
                self.grid / 2,
                self.grid
            )));
        }
        if !(self.tolerance > 0.0 && self.min_step > 0.0 && self.rank_rtol > 0.0 && self.c3_acceptance > 0.0) {
            return Err(StatDiscError::InvalidInput("tolerances must be positive".into()));
        }
        if self.max_iterations == 0 || self.homotopy_steps == 0 || self.homotopy_steps > 4 {
            return Err(StatDiscError::InvalidInput("need max_iterations ≥ 1 and 1 ≤ homotopy_steps ≤ 4".into()));
        }
        Ok(())
    }
}

/// Convergence record of a solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Newton iterations summed over homotopy steps.
    pub iterations: usize,
    /// `ε` values at which Newton was run, in order.
    pub homotopy: Vec<f64>,
    /// Sup-norm residual before each iteration of the final step, and after the last.
    pub residual_history: Vec<f64>,
    pub boundary_residual: f64,
    pub stationarity_residual: f64,
    pub constraint_residual: f64,
    /// Singular values of the system Jacobian at the solution, descending.
    pub singular_values: Vec<f64>,
    /// `ε‖s‖_{C³}` sampled on a ball around the disc.
    pub c3_size: f64,
    pub c3_within_acceptance: bool,
}

/// A stationary disc glued to `{ρ = 0}`, in spectral form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GluedDisc {
    /// Taylor coefficients `h[j][m]`, `m = 0..=M`.
    pub h_coeffs: Vec<Vec<C64>>,
    /// Coefficients `μ_m`, `m = 1..=M`, of `log λ = 2 Re Σ μ_m ζ^m`.
    pub mu_coeffs: Vec<C64>,
    /// `λ` on the grid.
    pub lambda: Vec<f64>,
    pub epsilon: f64,
    /// Center the disc was pinned to, if any.
    pub pinned_center: Option<Vec<C64>>,
    pub diagnostics: Diagnostics,
}

impl GluedDisc {
    pub fn n(&self) -> usize {
        self.h_coeffs.len() - 1
    }

    pub fn grid(&self) -> usize {
        self.lambda.len()
    }

    pub fn coefficients(&self) -> Coefficients {
        Coefficients { h: self.h_coeffs.clone(), mu: self.mu_coeffs.clone() }
    }

    pub fn eval(&self, zeta: C64) -> Vec<C64> {
        self.coefficients().eval(zeta)
    }

    pub fn center(&self) -> Vec<C64> {
        self.coefficients().center()
    }

    pub fn velocity(&self) -> Vec<C64> {
        self.coefficients().velocity()
    }

    pub fn endpoint(&self) -> Vec<C64> {
        self.eval(C64::new(1.0, 0.0))
    }

    pub fn boundary(&self) -> Result<BoundaryFunction> {
        BoundaryFunction::new(self.coefficients().values(self.grid()))
    }

    /// `h* = λ ∂ρ/∂z∘h` on the grid.
    pub fn lift(&self, m: &dyn DefiningFunction) -> Result<BoundaryFunction> {
        let b = self.boundary()?;
        let g = self.grid();
        let rows: Vec<Vec<C64>> = (0..g).map(|k| m.gradient(&b.at(k))).collect();
        BoundaryFunction::new(
            (0..=self.n()).map(|j| (0..g).map(|k| rows[k][j] * self.lambda[k]).collect()).collect(),
        )
    }
}

/// Spectral coefficients of a closed-form disc and of `log |1 − aζ|²`.
pub fn closed_form_coefficients(disc: &Disc, modes: usize) -> Coefficients {
    let a = disc.params().a;
    let mut mu = Vec::with_capacity(modes);
    let mut apow = a;
    for m in 1..=modes {
        mu.push(-apow / m as f64);
        apow *= a;
    }
    Coefficients { h: disc.taylor(modes), mu }
}

/// Bound on the discarded Taylor tail of the closed-form start, `Σ_{m>M}`.
fn truncation_tail(c: &Coefficients, a: f64) -> f64 {
    let last = c.h.iter().map(|hj| hj[hj.len() - 1].norm()).fold(0.0, f64::max);
    if a == 0.0 {
        0.0
    } else {
        last * a / (1.0 - a)
    }
}

/// Outcome of one Newton run.
struct NewtonRun {
    coeffs: Coefficients,
    iterations: usize,
    history: Vec<f64>,
    norms: Norms,
    singular_values: Vec<f64>,
}

fn newton(m: &dyn DefiningFunction, start: &Coefficients, cons: &Constraints, cfg: &SolveConfig) -> Result<NewtonRun> {
    let sys = system::System::new(m, cfg.grid, cfg.modes, cons.clone());
    let mut x = sys.pack(start);
    let template = start;
    let mut history = Vec::new();
    for it in 0..=cfg.max_iterations {
        let c = sys.unpack(&x, template);
        let ev = sys.evaluate(&c, true);
        let size = ev.norms.max();
        history.push(size);
        let jac = ev.jacobian.expect("requested");
        if size < cfg.tolerance {
            let singular_values = linalg::singular_values_r(&jac);
            return Ok(NewtonRun { coeffs: c, iterations: it, history, norms: ev.norms, singular_values });
        }
        let fail = |history: Vec<f64>| StatDiscError::NoConvergence { iterations: it, last: size, history };
        if !size.is_finite() || it == cfg.max_iterations {
            return Err(fail(history));
        }
        // Stagnation: no halving of the residual over the last five iterations.
        if it >= 5 && history[it] > 0.5 * history[it - 5] {
            return Err(fail(history));
        }
        let (step, _) = linalg::min_norm_lstsq(&jac, &ev.residual, cfg.rank_rtol);
        let base = ev.residual.norm();
        let mut t = 1.0;
        loop {
            let trial: RVec = &x - &step * t;
            let r = sys.evaluate(&sys.unpack(&trial, template), false);
            let rn = r.residual.norm();
            if rn.is_finite() && (rn < (1.0 - 1e-4 * t) * base || r.norms.max() < cfg.tolerance) {
                x = trial;
                break;
            }
            t *= 0.5;
            if t < cfg.min_step {
                return Err(fail(history));
            }
        }
    }
    unreachable!("loop returns on its last iteration")
}

/// Solves for a stationary disc of `m` near the closed-form disc `start` of
/// the base quadric.
///
/// A direct solve at the target `ε` is tried first; on failure the solve is
/// repeated along 2 and then 4 equal `ε` increments (capped by
/// `cfg.homotopy_steps`). Intermediate increments carry only the center pin.
/// At `ε = 0` a start satisfying the tolerances is returned after zero
/// iterations.
pub fn solve_glued_disc(
    m: &PerturbedHypersurface,
    start: &DiscParams,
    cfg: &SolveConfig,
    constraints: &Constraints,
) -> Result<GluedDisc> {
    cfg.validate()?;
    let n = m.n();
    let disc = Disc::new(m.base(), start.clone())?;
    for (name, v) in [("center", &constraints.center), ("endpoint", &constraints.endpoint), ("velocity", &constraints.velocity)]
    {
        if let Some(v) = v {
            if v.len() != n + 1 {
                return Err(StatDiscError::SizeMismatch { expected: n + 1, got: v.len() });
            }
            if !v.iter().all(|z| linalg::is_finite_c(*z)) {
                return Err(StatDiscError::InvalidInput(format!("non-finite {name} constraint")));
            }
        }
    }
    let seed = closed_form_coefficients(&disc, cfg.modes);
    let tail = truncation_tail(&seed, start.a.norm());
    if tail > cfg.tolerance {
        return Err(StatDiscError::InvalidInput(format!(
            "{} modes truncate the start at |a| = {:.3} with tail {tail:e}; raise modes",
            cfg.modes,
            start.a.norm()
        )));
    }
    let eps = m.epsilon();
    let mut schedules = vec![1usize];
    let mut k = 2;
    while k <= cfg.homotopy_steps {
        schedules.push(k);
        k *= 2;
    }
    let mut last_err = None;
    for steps in schedules {
        let mut coeffs = seed.clone();
        let mut iterations = 0;
        let mut homotopy = Vec::new();
        let mut outcome = None;
        for s in 1..=steps {
            let e = eps * s as f64 / steps as f64;
            let ms = m.with_epsilon(e);
            let cons = if s == steps { constraints.clone() } else { constraints.family() };
            homotopy.push(e);
            match newton(&ms, &coeffs, &cons, cfg) {
                Ok(run) => {
                    iterations += run.iterations;
                    coeffs = run.coeffs.clone();
                    if s == steps {
                        outcome = Some(run);
                    }
                }
                Err(err) => {
                    last_err = Some(err);
                    break;
                }
            }
        }
        if let Some(run) = outcome {
            return Ok(finish(m, run, iterations, homotopy, constraints, cfg));
        }
        if eps == 0.0 {
            break;
        }
    }
    Err(last_err.expect("at least one schedule ran"))
}

fn finish(
    m: &PerturbedHypersurface,
    run: NewtonRun,
    iterations: usize,
    homotopy: Vec<f64>,
    cons: &Constraints,
    cfg: &SolveConfig,
) -> GluedDisc {
    let lambda: Vec<f64> = run.coeffs.log_lambda(cfg.grid).into_iter().map(f64::exp).collect();
    let values = run.coeffs.values(cfg.grid);
    let center = run.coeffs.center();
    let radius = (0..cfg.grid)
        .map(|k| values.iter().zip(&center).map(|(v, c)| (v[k] - c).norm_sqr()).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let c3_size = m.c3_size(&center, radius, 256);
    GluedDisc {
        h_coeffs: run.coeffs.h,
        mu_coeffs: run.coeffs.mu,
        lambda,
        epsilon: m.epsilon(),
        pinned_center: cons.center.clone(),
        diagnostics: Diagnostics {
            iterations,
            homotopy,
            residual_history: run.history,
            boundary_residual: run.norms.boundary,
            stationarity_residual: run.norms.stationarity,
            constraint_residual: run.norms.constraints,
            singular_values: run.singular_values,
            c3_size,
            c3_within_acceptance: c3_size <= cfg.c3_acceptance,
        },
    }
}
