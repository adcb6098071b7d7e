//! Column statistics and the a-priori norm bounds built from them.

use super::matrix::{dot, Matrix};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::select::IndexSet;

/// Scalars describing a family of columns.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GramStats<T> {
    /// Largest column norm `Λ`.
    pub capital_lambda: T,
    /// Largest off-diagonal `|⟨a_i, a_j⟩|`, written `λ`.
    pub small_lambda: T,
    /// Largest absolute entry `d`.
    pub max_entry: T,
    /// `Δ = max |‖a_i‖² − 1|`.
    pub delta_dev: T,
    /// Smallest column norm `θ`.
    pub theta: T,
}

/// Checked inner product.
pub fn inner<T: Scalar>(x: &[T], y: &[T]) -> Result<T> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            op: "inner",
            left: (x.len(), 1),
            right: (y.len(), 1),
        });
    }
    Ok(dot(x, y))
}

/// Statistics over the designated columns (all columns when `cols` is `None`).
///
/// The off-diagonal maximum is a double loop, quadratic in the number of columns.
pub fn gram_stats<T: Scalar>(a: &Matrix<T>, cols: Option<&IndexSet>) -> Result<GramStats<T>> {
    let idx: Vec<usize> = match cols {
        Some(f) => {
            f.check_width(a.ncols())?;
            f.as_slice().to_vec()
        }
        None => (0..a.ncols()).collect(),
    };
    if idx.is_empty() {
        return Err(Error::EmptyIndexSet);
    }
    let mut s = GramStats {
        capital_lambda: T::zero(),
        small_lambda: T::zero(),
        max_entry: T::zero(),
        delta_dev: T::zero(),
        theta: T::infinity(),
    };
    for (p, &i) in idx.iter().enumerate() {
        let ci = a.col(i);
        let nsq = dot(ci, ci);
        let nrm = nsq.sqrt();
        s.capital_lambda = s.capital_lambda.max(nrm);
        s.theta = s.theta.min(nrm);
        s.delta_dev = s.delta_dev.max((nsq - T::one()).abs());
        s.max_entry = ci.iter().fold(s.max_entry, |m, v| m.max(v.abs()));
        for &j in &idx[..p] {
            s.small_lambda = s.small_lambda.max(dot(ci, a.col(j)).abs());
        }
    }
    Ok(s)
}

/// `(Λ² + (n−1)λ)^{1/2}` over all `n` columns.
pub fn norm_bound_gram<T: Scalar>(a: &Matrix<T>) -> Result<T> {
    let s = gram_stats(a, None)?;
    let n1 = T::of_usize(a.ncols() - 1);
    Ok((s.capital_lambda * s.capital_lambda + n1 * s.small_lambda).sqrt())
}

/// `d·(m·n)^{1/2}`.
pub fn norm_bound_entries<T: Scalar>(a: &Matrix<T>) -> T {
    let (m, n) = a.shape();
    a.max_abs() * (T::of_usize(m) * T::of_usize(n)).sqrt()
}

/// `n·max{λ, Δ}`, an upper bound for `‖AᵀA − Iₙ‖`.
pub fn gram_deviation_bound<T: Scalar>(a: &Matrix<T>) -> Result<T> {
    let s = gram_stats(a, None)?;
    Ok(T::of_usize(a.ncols()) * s.small_lambda.max(s.delta_dev))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inner_examples() {
        assert_eq!(inner(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(inner(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 11.0);
        assert!(inner(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn identity_stats() {
        let s = gram_stats(&Matrix::<f64>::identity(4), None).unwrap();
        assert_eq!(
            s,
            GramStats {
                capital_lambda: 1.0,
                small_lambda: 0.0,
                max_entry: 1.0,
                delta_dev: 0.0,
                theta: 1.0
            }
        );
        assert_eq!(norm_bound_gram(&Matrix::<f64>::identity(3)).unwrap(), 1.0);
        assert_eq!(norm_bound_entries(&Matrix::<f64>::identity(2)), 2.0);
        assert_eq!(norm_bound_entries(&Matrix::<f64>::zeros(3, 2)), 0.0);
    }

    #[test]
    fn duplicated_column() {
        let a = Matrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let s = gram_stats(&a, None).unwrap();
        assert_eq!(s.small_lambda, 1.0);
        assert_eq!(gram_deviation_bound(&a).unwrap(), 2.0);
    }

    #[test]
    fn all_ones_bound_is_tight() {
        let a = Matrix::from_fn(2, 2, |_, _| 1.0f64);
        assert!((norm_bound_gram(&a).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn subset_and_empty() {
        let a = Matrix::diag(&[1.0, 0.5, 2.0]);
        let f = IndexSet::new(vec![0, 1]).unwrap();
        let s = gram_stats(&a, Some(&f)).unwrap();
        assert_eq!((s.capital_lambda, s.theta), (1.0, 0.5));
        assert!(matches!(
            gram_stats(&a, Some(&IndexSet::empty())),
            Err(Error::EmptyIndexSet)
        ));
    }
}
