//! Boundary symbols, Maslov index and partial indices.

mod factor;
mod laurent;
mod symbols;
mod toeplitz;

pub use factor::{det_zeros, factorize, PartialIndices, RationalSymbol};
pub use laurent::{LaurentMatrix, LaurentPoly};
pub use symbols::{
    build_b, build_g, closed_form_rational, g_matrix, maslov_index, partial_indices, verify_reduction_chain,
    MatrixSymbol, ReductionReport, ReductionStep, SymbolSource,
};
pub use toeplitz::{toeplitz_indices, ToeplitzConfig};
