use super::matrix::Matrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Inverse by Gauss-Jordan elimination with partial pivoting.
pub fn inverse<T: Scalar>(s: &Matrix<T>) -> Result<Matrix<T>> {
    let n = s.nrows();
    if n != s.ncols() {
        return Err(Error::DimensionMismatch {
            op: "inverse",
            left: s.shape(),
            right: (n, n),
        });
    }
    let mut a = s.clone();
    let mut inv = Matrix::identity(n);
    let scale = a.max_abs();
    for k in 0..n {
        let (p, piv) = (k..n)
            .map(|i| (i, a[(i, k)].abs()))
            .fold((k, T::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
        if piv == T::zero() || piv <= scale * T::eps() * T::of_usize(n) {
            return Err(Error::Singular);
        }
        if p != k {
            for j in 0..n {
                let t = a[(k, j)];
                a[(k, j)] = a[(p, j)];
                a[(p, j)] = t;
                let t = inv[(k, j)];
                inv[(k, j)] = inv[(p, j)];
                inv[(p, j)] = t;
            }
        }
        let d = a[(k, k)];
        for j in 0..n {
            a[(k, j)] /= d;
            inv[(k, j)] /= d;
        }
        for i in 0..n {
            if i == k {
                continue;
            }
            let f = a[(i, k)];
            if f == T::zero() {
                continue;
            }
            for j in 0..n {
                let akj = a[(k, j)];
                a[(i, j)] -= f * akj;
                let ikj = inv[(k, j)];
                inv[(i, j)] -= f * ikj;
            }
        }
    }
    Ok(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_inverse() {
        let s = Matrix::<f64>::diag(&[0.9, 1.1]);
        let inv = inverse(&s).unwrap();
        assert!((inv[(0, 0)] - 1.0 / 0.9).abs() < 1e-15);
        assert!((inv[(1, 1)] - 1.0 / 1.1).abs() < 1e-15);
        assert_eq!(inv[(0, 1)], 0.0);
    }

    #[test]
    fn needs_pivoting() {
        let s = Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert_eq!(inverse(&s).unwrap(), s);
    }

    #[test]
    fn singular_detected() {
        let s = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]).unwrap();
        assert!(matches!(inverse(&s), Err(Error::Singular)));
    }
}
