use std::borrow::Cow;

use super::matrix::{dot, Matrix};
use crate::scalar::Scalar;

/// Anything that can hand out its columns one at a time.
///
/// Selection and factor construction only ever look at individual columns,
/// so they are written against this trait. A point on a matrix path
/// implements it without materializing the whole matrix.
pub trait ColumnSource<T: Scalar> {
    fn nrows(&self) -> usize;
    fn ncols(&self) -> usize;
    fn column(&self, j: usize) -> Cow<'_, [T]>;

    fn col_norm_sq(&self, j: usize) -> T {
        let c = self.column(j);
        dot(&c, &c)
    }

    fn col_inner(&self, i: usize, j: usize) -> T {
        if i == j {
            return self.col_norm_sq(i);
        }
        dot(&self.column(i), &self.column(j))
    }

    /// Smallest column norm, the `θ` of the factorization results.
    fn min_col_norm(&self) -> T {
        (0..self.ncols())
            .map(|j| self.col_norm_sq(j))
            .fold(T::infinity(), T::min)
            .sqrt()
    }

    fn max_col_norm(&self) -> T {
        (0..self.ncols())
            .map(|j| self.col_norm_sq(j))
            .fold(T::zero(), T::max)
            .sqrt()
    }
}

impl<T: Scalar> ColumnSource<T> for Matrix<T> {
    fn nrows(&self) -> usize {
        Matrix::nrows(self)
    }
    fn ncols(&self) -> usize {
        Matrix::ncols(self)
    }
    fn column(&self, j: usize) -> Cow<'_, [T]> {
        Cow::Borrowed(self.col(j))
    }
}

impl<T: Scalar, S: ColumnSource<T> + ?Sized> ColumnSource<T> for &S {
    fn nrows(&self) -> usize {
        (**self).nrows()
    }
    fn ncols(&self) -> usize {
        (**self).ncols()
    }
    fn column(&self, j: usize) -> Cow<'_, [T]> {
        (**self).column(j)
    }
    fn col_norm_sq(&self, j: usize) -> T {
        (**self).col_norm_sq(j)
    }
}

/// `A · R` using only column access to `A`; zero entries of `R` are skipped.
pub fn apply_right<T: Scalar, S: ColumnSource<T> + ?Sized>(a: &S, r: &Matrix<T>) -> Matrix<T> {
    let m = a.nrows();
    let mut out = Matrix::zeros(m, r.ncols());
    for k in 0..r.ncols() {
        for (j, &w) in r.col(k).iter().enumerate() {
            if w != T::zero() {
                super::matrix::axpy(w, &a.column(j), out.col_mut(k));
            }
        }
    }
    out
}
