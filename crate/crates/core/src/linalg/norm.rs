//! Spectral norm.
//!
//! Small problems are solved exactly: the Gram matrix of the thinner side is
//! reduced to tridiagonal form and its top eigenvalue located by Sturm
//! bisection. Wide-and-tall matrices fall back to power iteration on the
//! implicit Gram matrix.

use super::matrix::{axpy, dot, norm2, Matrix};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Relative tolerance used when callers have no specific requirement.
pub const DEFAULT_REL_TOL: f64 = 1e-10;
/// Iteration budget for power iteration.
pub const DEFAULT_MAX_ITER: usize = 10_000;
/// Largest Gram dimension handled by the exact eigenvalue route.
pub const EXACT_DIM_LIMIT: usize = 512;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormEstimate<T> {
    pub value: T,
    pub iterations: usize,
    /// Converged to the requested tolerance (always true on the exact route).
    pub converged: bool,
    /// Computed by the exact eigenvalue route rather than power iteration.
    pub exact: bool,
}

/// Largest singular value of `a`.
///
/// Errors with [`Error::NonConvergence`] if power iteration does not settle
/// within [`DEFAULT_MAX_ITER`] iterations.
pub fn operator_norm<T: Scalar>(a: &Matrix<T>, rel_tol: T) -> Result<T> {
    let est = operator_norm_estimate(a, rel_tol, DEFAULT_MAX_ITER)?;
    if !est.converged {
        return Err(Error::NonConvergence {
            iterations: est.iterations,
            estimate: est.value.to_f64_lossy(),
        });
    }
    Ok(est.value)
}

/// Like [`operator_norm`] but reports non-convergence instead of failing.
/// The value is always at least the largest column norm.
pub fn operator_norm_estimate<T: Scalar>(
    a: &Matrix<T>,
    rel_tol: T,
    max_iter: usize,
) -> Result<NormEstimate<T>> {
    if !(rel_tol > T::zero()) {
        return Err(Error::InvalidArgument(format!("rel_tol must be positive, got {rel_tol}")));
    }
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Ok(NormEstimate {
            value: T::zero(),
            iterations: 0,
            converged: true,
            exact: true,
        });
    }
    if m < n && m <= SHORT_ROWS {
        let (g, colmax) = short_outer_gram(a);
        let lam = sym_max_eigenvalue(&g).max(T::zero());
        return Ok(NormEstimate {
            value: lam.sqrt().max(colmax),
            iterations: 0,
            converged: true,
            exact: true,
        });
    }
    let colmax = a
        .as_slice()
        .chunks_exact(m)
        .map(|c| c.iter().fold(T::zero(), |s, &x| s + x * x))
        .fold(T::zero(), T::max)
        .sqrt();
    if m.min(n) <= EXACT_DIM_LIMIT {
        let g = if n <= m { gram(a) } else { outer_gram(a) };
        let lam = sym_max_eigenvalue(&g).max(T::zero());
        return Ok(NormEstimate {
            value: lam.sqrt().max(colmax),
            iterations: 0,
            converged: true,
            exact: true,
        });
    }
    let mut est = power_iteration(a, rel_tol, max_iter);
    est.value = est.value.max(colmax);
    Ok(est)
}

/// Cheap necessary check of `‖A‖`: exact when small, otherwise power
/// iteration limited to roughly `flop_budget` floating point operations.
///
/// The result is a lower bound on the norm (up to rounding), so an estimate
/// above a threshold proves the threshold is exceeded.
pub fn norm_screen<T: Scalar>(a: &Matrix<T>, flop_budget: f64) -> NormEstimate<T> {
    let (m, n) = a.shape();
    let per_iter = 4.0 * m as f64 * n as f64;
    let iters = ((flop_budget / per_iter.max(1.0)) as usize).clamp(1, DEFAULT_MAX_ITER);
    operator_norm_estimate(a, T::of(DEFAULT_REL_TOL), iters).expect("positive tolerance")
}

fn start_vector<T: Scalar>(len: usize) -> Vec<T> {
    let mut x: Vec<T> = (0..len)
        .map(|j| T::one() + T::of(0.25 * ((j as f64) * 0.7390851 + 0.3).sin()))
        .collect();
    let nx = norm2(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    x
}

fn power_iteration<T: Scalar>(a: &Matrix<T>, rel_tol: T, max_iter: usize) -> NormEstimate<T> {
    let (m, n) = a.shape();
    let tall = n <= m;
    let mut x = start_vector::<T>(if tall { n } else { m });
    let mut prev = T::zero();
    let mut inner = vec![T::zero(); if tall { m } else { n }];
    for it in 1..=max_iter {
        // y = G x with G = AᵀA (tall) or AAᵀ (wide), never formed.
        let y: Vec<T> = if tall {
            inner.iter_mut().for_each(|v| *v = T::zero());
            for (j, &xj) in x.iter().enumerate() {
                axpy(xj, a.col(j), &mut inner);
            }
            (0..n).map(|j| dot(a.col(j), &inner)).collect()
        } else {
            for (j, v) in inner.iter_mut().enumerate() {
                *v = dot(a.col(j), &x);
            }
            let mut y = vec![T::zero(); m];
            for (j, &v) in inner.iter().enumerate() {
                axpy(v, a.col(j), &mut y);
            }
            y
        };
        let rq = dot(&x, &y);
        let ny = norm2(&y);
        if ny == T::zero() {
            return NormEstimate {
                value: T::zero(),
                iterations: it,
                converged: true,
                exact: false,
            };
        }
        let converged = it > 1 && (rq - prev).abs() <= rel_tol * rq.abs();
        prev = rq;
        if converged {
            return NormEstimate {
                value: rq.max(T::zero()).sqrt(),
                iterations: it,
                converged: true,
                exact: false,
            };
        }
        x = y.into_iter().map(|v| v / ny).collect();
    }
    NormEstimate {
        value: prev.max(T::zero()).sqrt(),
        iterations: max_iter,
        converged: false,
        exact: false,
    }
}

/// `AᵀA`.
pub fn gram<T: Scalar>(a: &Matrix<T>) -> Matrix<T> {
    let n = a.ncols();
    let mut g = Matrix::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            let v = dot(a.col(i), a.col(j));
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}

/// `AAᵀ`.
pub fn outer_gram<T: Scalar>(a: &Matrix<T>) -> Matrix<T> {
    let m = a.nrows();
    let mut g = Matrix::zeros(m, m);
    if m == 0 {
        return g;
    }
    let gd = g.as_mut_slice();
    for c in a.as_slice().chunks_exact(m) {
        for (j, &cj) in c.iter().enumerate() {
            if cj == T::zero() {
                continue;
            }
            for (d, &x) in gd[j * m..(j + 1) * m].iter_mut().zip(c) {
                *d += cj * x;
            }
        }
    }
    g
}

const SHORT_ROWS: usize = 8;

/// `AAᵀ` and the largest column norm for a matrix with few rows, in one pass
/// with two interleaved accumulators.
fn short_outer_gram<T: Scalar>(a: &Matrix<T>) -> (Matrix<T>, T) {
    let m = a.nrows();
    let mut acc = [[T::zero(); SHORT_ROWS * SHORT_ROWS]; 2];
    let mut cmax = [T::zero(); 2];
    for (k, c) in a.as_slice().chunks_exact(m).enumerate() {
        let lane = k & 1;
        let g = &mut acc[lane];
        let mut sq = T::zero();
        for i in 0..m {
            let ci = c[i];
            sq += ci * ci;
            for j in 0..=i {
                g[i * SHORT_ROWS + j] += ci * c[j];
            }
        }
        cmax[lane] = cmax[lane].max(sq);
    }
    let mut out = Matrix::zeros(m, m);
    for i in 0..m {
        for j in 0..=i {
            let v = acc[0][i * SHORT_ROWS + j] + acc[1][i * SHORT_ROWS + j];
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    (out, cmax[0].max(cmax[1]).sqrt())
}

/// Largest eigenvalue of a symmetric matrix.
///
/// Householder reduction to tridiagonal form followed by bisection on the
/// Sturm count, so the answer does not depend on any eigenvalue gap.
pub fn sym_max_eigenvalue<T: Scalar>(g: &Matrix<T>) -> T {
    let n = g.nrows();
    assert_eq!(n, g.ncols(), "symmetric matrix must be square");
    if n == 0 {
        return T::zero();
    }
    let (d, e) = tridiagonalize(g);
    tridiag_max_eigenvalue(&d, &e)
}

/// Returns diagonal and off-diagonal of an orthogonally similar tridiagonal matrix.
fn tridiagonalize<T: Scalar>(g: &Matrix<T>) -> (Vec<T>, Vec<T>) {
    let n = g.nrows();
    let mut a = g.clone();
    let mut e = vec![T::zero(); n.saturating_sub(1)];
    let two = T::of(2.0);
    let mut v = vec![T::zero(); n];
    let mut p = vec![T::zero(); n];
    for k in 0..n.saturating_sub(2) {
        let lo = k + 1;
        let x = &a.col(k)[lo..];
        let alpha_abs = norm2(x);
        if alpha_abs == T::zero() {
            e[k] = T::zero();
            continue;
        }
        let alpha = if x[0] > T::zero() { -alpha_abs } else { alpha_abs };
        for (vi, &xi) in v[lo..].iter_mut().zip(x) {
            *vi = xi;
        }
        v[lo] -= alpha;
        let nv = norm2(&v[lo..]);
        e[k] = alpha;
        if nv == T::zero() {
            continue;
        }
        v[lo..].iter_mut().for_each(|t| *t /= nv);
        // p = A_sub v, K = vᵀp, w = p - K v, A_sub -= 2(v wᵀ + w vᵀ)
        for j in lo..n {
            p[j] = T::zero();
        }
        for j in lo..n {
            let vj = v[j];
            if vj != T::zero() {
                axpy(vj, &a.col(j)[lo..], &mut p[lo..]);
            }
        }
        let kk = dot(&v[lo..], &p[lo..]);
        for j in lo..n {
            p[j] -= kk * v[j];
        }
        for j in lo..n {
            let (vj, wj) = (v[j], p[j]);
            let col = &mut a.col_mut(j)[lo..];
            for (i, c) in col.iter_mut().enumerate() {
                *c -= two * (v[lo + i] * wj + p[lo + i] * vj);
            }
        }
    }
    if n >= 2 {
        e[n - 2] = a[(n - 1, n - 2)];
    }
    let d = (0..n).map(|i| a[(i, i)]).collect();
    (d, e)
}

/// Number of eigenvalues of the tridiagonal matrix strictly below `x`.
fn sturm_count<T: Scalar>(d: &[T], e: &[T], x: T) -> usize {
    let tiny = T::min_positive_value();
    let mut count = 0;
    let mut q = d[0] - x;
    if q < T::zero() {
        count += 1;
    }
    for i in 1..d.len() {
        let qq = if q.abs() < tiny { tiny } else { q };
        q = d[i] - x - e[i - 1] * e[i - 1] / qq;
        if q < T::zero() {
            count += 1;
        }
    }
    count
}

fn tridiag_max_eigenvalue<T: Scalar>(d: &[T], e: &[T]) -> T {
    let n = d.len();
    let mut lo = T::infinity();
    let mut hi = T::neg_infinity();
    for i in 0..n {
        let r = if i > 0 { e[i - 1].abs() } else { T::zero() } + if i + 1 < n { e[i].abs() } else { T::zero() };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    if lo == hi {
        return hi;
    }
    let scale = lo.abs().max(hi.abs());
    lo -= scale * T::eps();
    hi += scale * T::eps();
    // Invariant: fewer than n eigenvalues below lo, all n below hi.
    for _ in 0..200 {
        let mid = lo + (hi - lo) / T::of(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(d, e, mid) == n {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_diagonal() {
        let i5 = Matrix::<f64>::identity(5);
        assert!((operator_norm(&i5, 1e-10).unwrap() - 1.0).abs() < 1e-12);
        let d = Matrix::<f64>::diag(&[1.0, 0.5, 0.5]);
        assert!((operator_norm(&d, 1e-10).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rank_one_all_ones() {
        let a = Matrix::from_fn(2, 2, |_, _| 1.0f64);
        assert!((operator_norm(&a, 1e-10).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn tridiagonal_eigenvalue_known() {
        // eigenvalues of the path-graph Laplacian-like matrix 2, -1 band: 2 - 2cos(k pi/(n+1))
        let n = 7;
        let g = Matrix::from_fn(n, n, |i, j| {
            if i == j {
                2.0
            } else if i.abs_diff(j) == 1 {
                -1.0
            } else {
                0.0
            }
        });
        let expect = 2.0 - 2.0 * (7.0 * std::f64::consts::PI / 8.0).cos();
        assert!((sym_max_eigenvalue(&g) - expect).abs() < 1e-13);
    }

    #[test]
    fn zero_matrix_has_zero_norm() {
        let z = Matrix::<f64>::zeros(600, 600);
        assert_eq!(operator_norm(&z, 1e-10).unwrap(), 0.0);
    }

    #[test]
    fn power_route_on_large_diagonal() {
        let n = 600;
        let d: Vec<f64> = (0..n).map(|i| if i == 17 { 0.9 } else { 0.3 }).collect();
        let a = Matrix::diag(&d);
        let v = operator_norm(&a, 1e-12).unwrap();
        assert!((v - 0.9).abs() < 1e-9, "{v}");
    }

    #[test]
    fn wide_matrix_uses_smaller_gram() {
        let a = Matrix::<f64>::from_rows(&[vec![3.0, 0.0, 0.0, 4.0]]).unwrap();
        assert!((operator_norm(&a, 1e-10).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_nonpositive_tolerance() {
        assert!(operator_norm(&Matrix::<f64>::identity(2), 0.0).is_err());
    }
}
