#![allow(dead_code)]

use idfactor::linalg::ColumnSource;
use idfactor::Matrix;
use nalgebra::DMatrix;

pub fn to_na(a: &Matrix<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(a.nrows(), a.ncols(), a.as_slice())
}

/// Largest singular value by nalgebra's SVD.
pub fn svd_norm(a: &Matrix<f64>) -> f64 {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0.0;
    }
    to_na(a).singular_values().max()
}

/// `#{ j : |⟨a_i, a_j⟩| ≥ ε }` by plain loops.
pub fn brute_big_count(a: &Matrix<f64>, i: usize, eps: f64) -> usize {
    let ai = a.col(i);
    (0..a.ncols())
        .filter(|&j| {
            let s: f64 = ai.iter().zip(a.col(j)).map(|(x, y)| x * y).sum();
            s.abs() >= eps
        })
        .count()
}

/// `max_{i<j∈F} |⟨a_i, a_j⟩|` by plain loops.
pub fn brute_max_pair<S: ColumnSource<f64>>(a: &S, f: &[usize]) -> f64 {
    let mut m: f64 = 0.0;
    for p in 0..f.len() {
        for q in 0..p {
            let x = a.column(f[p]);
            let y = a.column(f[q]);
            let s: f64 = x.iter().zip(y.iter()).map(|(u, v)| u * v).sum();
            m = m.max(s.abs());
        }
    }
    m
}

/// `‖X − Iₙ‖` through the SVD oracle.
pub fn svd_dev(x: &Matrix<f64>) -> f64 {
    svd_norm(&x.sub_identity().unwrap())
}
