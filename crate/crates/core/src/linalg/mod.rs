//! Dense matrices, spectral norms and column-statistic bounds.

mod bounds;
mod columns;
pub mod io;
mod lu;
mod matrix;
mod norm;

pub use bounds::{gram_deviation_bound, gram_stats, inner, norm_bound_entries, norm_bound_gram, GramStats};
pub use columns::{apply_right, ColumnSource};
pub use lu::inverse;
pub use matrix::{axpy, dot, norm2, Matrix};
pub use norm::{
    gram, norm_screen, operator_norm, operator_norm_estimate, outer_gram, sym_max_eigenvalue, NormEstimate,
    DEFAULT_MAX_ITER, DEFAULT_REL_TOL, EXACT_DIM_LIMIT,
};
