//! Factorizations of the identity through matrices with large columns.
//!
//! Given `A` with `‖A‖ ≤ 1` and every column norm at least `θ > 0`, the
//! static driver [`factor_identity`] finds `L`, `R` with `L·A·R = Iₙ` and
//! `‖L‖‖R‖ ≤ 2/θ`. The continuous driver [`factor_path`] does the same
//! along a piecewise-linear matrix path, with `L(t)`, `R(t)` continuous.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the `*F64`
//! aliases below are what the command line tool uses.

// `!(x < y)` is deliberate throughout: NaN must fail the check.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::type_complexity)]

pub mod continuous;
pub mod ensemble;
pub mod error;
pub mod kv;
pub mod linalg;
pub mod path;
pub mod scalar;
pub mod select;
pub mod static_factor;

pub use continuous::{factor_path, factor_path_with, verify_path, CoverPlan, FactorPath, PathCertificate, PathOptions};
pub use error::{Error, Hypothesis, Result};
pub use linalg::Matrix;
pub use path::MatrixPath;
pub use scalar::{fmt_real, Scalar};
pub use select::{IndexSet, SelectionParams};
pub use static_factor::{factor_identity, verify_static, FactorPair, RankRequest, StaticCertificate};

pub type MatrixF64 = Matrix<f64>;
pub type MatrixF32 = Matrix<f32>;
pub type MatrixPathF64 = MatrixPath<f64>;
pub type MatrixPathF32 = MatrixPath<f32>;
pub type FactorPairF64 = FactorPair<f64>;
pub type FactorPairF32 = FactorPair<f32>;
pub type CoverPlanF64 = CoverPlan<f64>;
pub type PathCertificateF64 = PathCertificate<f64>;
pub type StaticCertificateF64 = StaticCertificate<f64>;
