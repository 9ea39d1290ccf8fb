//! Stationary holomorphic discs attached to non-degenerate hyperquadrics and
//! their small perturbations.
//!
//! * [`quadric`]: defining functions, gradients, existence of centered discs.
//! * [`disc`]: closed-form discs, inversion, regular and projectivized lifts.
//! * [`boundary`]: Fourier tools on the circle, Hilbert transform, winding,
//!   constructive regular lift.
//! * [`indices`]: matrix symbols along a lift, Maslov index, partial indices.
//! * [`solver`]: Newton continuation onto perturbed hypersurfaces and the
//!   diagnostics built on it.

pub mod boundary;
pub mod disc;
pub mod error;
pub mod indices;
pub mod linalg;
pub mod quadric;
pub mod sampling;
pub mod solver;

pub use boundary::{BoundaryFunction, RegularLift};
pub use disc::{Disc, DiscParams, LiftParams};
pub use error::{Result, StatDiscError};
pub use linalg::C64;
pub use quadric::{DefiningFunction, Hyperquadric, Monomial, PerturbedHypersurface, RealPolynomial};
