use serde::{Deserialize, Serialize};

use super::system::{Constraints, System};
use super::{closed_form_coefficients, solve_glued_disc, GluedDisc, SolveConfig};
use crate::disc::{Disc, DiscParams};
use crate::error::{Result, StatDiscError};
use crate::linalg::{self, RMat, C64};
use crate::quadric::{DefiningFunction, Hyperquadric, PerturbedHypersurface};

const NULL_RTOL: f64 = 1e-6;
const REQUIRED_GAP: f64 = 1e3;
const FD_STEP: f64 = 1e-6;

/// Numerical dimension of the family of stationary discs through a solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyDimension {
    pub dim: usize,
    pub pinned: bool,
    /// All singular values of the linearization, descending.
    pub singular_values: Vec<f64>,
    /// Smallest retained singular value over the largest discarded one.
    pub gap: f64,
}

/// Null-space dimension of the linearized system at `sol`, with the center
/// pinned exactly when `sol` was solved with a pinned center.
pub fn family_dimension(m: &dyn DefiningFunction, sol: &GluedDisc, _cfg: &SolveConfig) -> Result<FamilyDimension> {
    let cons = Constraints { center: sol.pinned_center.clone(), ..Constraints::default() };
    let sys = System::new(m, sol.grid(), sol.mu_coeffs.len(), cons);
    let jac = sys.evaluate(&sol.coefficients(), true).jacobian.expect("requested");
    let s = linalg::singular_values_r(&jac);
    let (dim, gap) = null_count(&s);
    if gap < REQUIRED_GAP {
        return Err(StatDiscError::DimensionAmbiguous { singular_values: s });
    }
    Ok(FamilyDimension { dim, pinned: sol.pinned_center.is_some(), singular_values: s, gap })
}

fn null_count(s: &[f64]) -> (usize, f64) {
    let smax = s.first().copied().unwrap_or(0.0);
    let cut = NULL_RTOL * smax;
    let dim = s.iter().filter(|&&x| x < cut).count();
    let above = s[..s.len() - dim].last().copied().unwrap_or(0.0);
    let below = s[s.len() - dim..].first().copied().unwrap_or(cut);
    let gap = if below > 0.0 { above / below } else { f64::INFINITY };
    (dim, gap)
}

/// Jacobians of `h ↦ (Im h₀(1), h_α(1))` and `h ↦ h'(0)` on the family of
/// stationary discs centered at `p`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenterJacobians {
    /// Base disc of the family.
    pub params: DiscParams,
    /// Orthonormal tangent basis of the pinned family in the real
    /// coordinates `(Re w, Im w, Re a, Im a)`, one vector per column.
    pub basis: Vec<Vec<f64>>,
    /// `(2n+1) × (2n+1)`, rows `(Im h₀(1), Re h₁(1), Im h₁(1), …)`.
    pub endpoint: Vec<Vec<f64>>,
    /// `(2n+2) × (2n+1)`, rows `(Re h₀'(0), Im h₀'(0), …)`.
    pub velocity: Vec<Vec<f64>>,
    pub endpoint_singular_values: Vec<f64>,
    pub velocity_singular_values: Vec<f64>,
    pub endpoint_condition: f64,
    pub velocity_condition: f64,
    /// Smallest singular value of the family chart at the base disc.
    pub chart_sigma_min: f64,
}

impl CenterJacobians {
    pub fn endpoint_sigma_min(&self) -> f64 {
        self.endpoint_singular_values.last().copied().unwrap_or(0.0)
    }

    pub fn velocity_sigma_min(&self) -> f64 {
        self.velocity_singular_values.last().copied().unwrap_or(0.0)
    }
}

/// Moves `params` along a real direction in `(Re w, Im w, Re a, Im a)`.
pub fn displace_params(params: &DiscParams, direction: &[f64], t: f64) -> Result<DiscParams> {
    let n = params.n();
    if direction.len() != 2 * n + 2 {
        return Err(StatDiscError::SizeMismatch { expected: 2 * n + 2, got: direction.len() });
    }
    let mut p = params.clone();
    for j in 0..n {
        p.w[j] += C64::new(direction[j], direction[n + j]) * t;
    }
    p.a += C64::new(direction[2 * n], direction[2 * n + 1]) * t;
    p.validate()?;
    Ok(p)
}

/// Orthonormal basis of the directions keeping `ᵗw̄Aw/(1−|a|²)` fixed to first order.
pub fn pinned_family_basis(q: &Hyperquadric, params: &DiscParams) -> Vec<Vec<f64>> {
    let n = params.n();
    let qf = q.form(&params.w, &params.w).re;
    let s = 1.0 - params.a.norm_sqr();
    // ᵗw̄Aw with A Hermitian: d/d Re w_j = 2 Re (Aw)_j, d/d Im w_j = 2 Im (Aw)_j.
    let aw_col: Vec<C64> = (0..n).map(|j| (0..n).map(|k| q.matrix()[(j, k)] * params.w[k]).sum()).collect();
    let mut normal = vec![0.0; 2 * n + 2];
    for j in 0..n {
        normal[j] = 2.0 * aw_col[j].re / s;
        normal[n + j] = 2.0 * aw_col[j].im / s;
    }
    normal[2 * n] = 2.0 * qf * params.a.re / (s * s);
    normal[2 * n + 1] = 2.0 * qf * params.a.im / (s * s);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let nn = normal.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut frame: Vec<Vec<f64>> = if nn > 0.0 { vec![normal.iter().map(|x| x / nn).collect()] } else { Vec::new() };
    for k in 0..2 * n + 2 {
        let mut e = vec![0.0; 2 * n + 2];
        e[k] = 1.0;
        for _ in 0..2 {
            for f in &frame {
                let d: f64 = e.iter().zip(f).map(|(x, y)| x * y).sum();
                e.iter_mut().zip(f).for_each(|(x, y)| *x -= d * y);
            }
        }
        let len = e.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len > 1e-8 {
            let unit: Vec<f64> = e.iter().map(|x| x / len).collect();
            frame.push(unit.clone());
            basis.push(unit);
        }
        if basis.len() == 2 * n + 1 {
            break;
        }
    }
    basis
}

/// The disc of the quadric centered at `p` with `a = 0`, if one exists.
pub(crate) fn centered_disc(q: &Hyperquadric, p: &[C64]) -> Result<DiscParams> {
    let ex = q.exists_disc_centered(p)?;
    let w = ex
        .witness
        .ok_or_else(|| StatDiscError::NotReachable(format!("no stationary disc of the quadric is centered at p (r(p) = {:e})", ex.x0)))?;
    DiscParams::new(p[0].im, p[1..].to_vec(), w, C64::new(0.0, 0.0))
}

fn to_rows(m: &RMat) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

/// Tangent-space Jacobians of the two center maps at the disc of the family
/// centered at `p` that starts from `a = 0` on the base quadric.
///
/// Tangent vectors are the null space of the pinned linearization, expressed in
/// the closed-form parameters of the base quadric through the least-squares
/// projection onto the derivative of the closed-form coefficient map.
pub fn center_map_jacobians(m: &PerturbedHypersurface, p: &[C64], cfg: &SolveConfig) -> Result<CenterJacobians> {
    cfg.validate()?;
    let n = m.n();
    if p.len() != n + 1 {
        return Err(StatDiscError::SizeMismatch { expected: n + 1, got: p.len() });
    }
    let q = m.base();
    let params = centered_disc(q, p)?;
    let cons = Constraints::pinned(p.to_vec());
    let sol = solve_glued_disc(m, &params, cfg, &cons)?;
    let sys = System::new(m, cfg.grid, cfg.modes, cons);
    let jac = sys.evaluate(&sol.coefficients(), true).jacobian.expect("requested");

    let svd = linalg::svd(&jac);
    let s = &svd.singular_values;
    let vt = svd.v_t.as_ref().expect("v requested");
    let cut = NULL_RTOL * s[0];
    let null: Vec<usize> = (0..s.len()).filter(|&k| s[k] < cut).collect();
    let dim = 2 * n + 1;
    if null.len() != dim {
        return Err(StatDiscError::InvalidBasis(format!("pinned null space has dimension {} instead of {dim}", null.len())));
    }
    let nmat = RMat::from_fn(sys.unknowns(), dim, |i, k| vt[(null[k], i)]);

    let basis = pinned_family_basis(q, &params);
    if basis.len() != dim {
        return Err(StatDiscError::InvalidBasis(format!("parameter basis has rank {} instead of {dim}", basis.len())));
    }
    let packed = |pp: &DiscParams| -> Result<_> {
        let disc = Disc::new(q, pp.clone())?;
        Ok(sys.pack(&closed_form_coefficients(&disc, cfg.modes)))
    };
    let mut t0 = RMat::zeros(sys.unknowns(), dim);
    for (k, b) in basis.iter().enumerate() {
        let plus = packed(&displace_params(&params, b, FD_STEP)?)?;
        let minus = packed(&displace_params(&params, b, -FD_STEP)?)?;
        t0.set_column(k, &((plus - minus) / (2.0 * FD_STEP)));
    }
    let chart = linalg::singular_values_r(&t0);
    let chart_sigma_min = chart.last().copied().unwrap_or(0.0);
    if chart_sigma_min <= 1e-8 * chart[0] {
        return Err(StatDiscError::InvalidBasis("closed-form chart is singular".into()));
    }
    // Coordinates of the null vectors in the chart: C = T0⁺ N, then T = N C⁻¹.
    let coords = t0.clone().svd(true, true).solve(&nmat, 0.0).map_err(|e| StatDiscError::InvalidBasis(e.into()))?;
    let cs = linalg::singular_values_r(&coords);
    if cs.last().copied().unwrap_or(0.0) <= 1e-8 * cs[0] {
        return Err(StatDiscError::InvalidBasis("null space is transverse to the closed-form chart".into()));
    }
    let inv = coords.try_inverse().ok_or_else(|| StatDiscError::InvalidBasis("singular chart coordinates".into()))?;
    let tangent = &nmat * inv;
    let je = sys.endpoint_map() * &tangent;
    let jv = sys.velocity_map() * &tangent;
    let es = linalg::singular_values_r(&je);
    let vs = linalg::singular_values_r(&jv);
    let cond = |s: &[f64]| s[0] / s.last().copied().unwrap_or(0.0);
    Ok(CenterJacobians {
        params,
        basis,
        endpoint: to_rows(&je),
        velocity: to_rows(&jv),
        endpoint_condition: cond(&es),
        velocity_condition: cond(&vs),
        endpoint_singular_values: es,
        velocity_singular_values: vs,
        chart_sigma_min,
    })
}
