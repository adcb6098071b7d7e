//! Seeded random instances and test paths.
//!
//! Everything here is deterministic given the seed (ChaCha8 streams).

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm2, operator_norm, Matrix, DEFAULT_REL_TOL, EXACT_DIM_LIMIT};
use crate::path::{uniform, MatrixPath};
use crate::scalar::Scalar;

pub type EnsembleRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> EnsembleRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent seed for item `k` of a sweep started from `base`.
pub fn derive_seed(base: u64, k: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = base ^ k.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn normal<T: Scalar>(rng: &mut EnsembleRng) -> T {
    T::of(rng.sample::<f64, _>(StandardNormal))
}

pub fn gaussian_matrix<T: Scalar>(rows: usize, cols: usize, rng: &mut EnsembleRng) -> Matrix<T> {
    let data = (0..rows * cols).map(|_| normal(rng)).collect();
    Matrix::from_col_major(rows, cols, data).expect("shape")
}

/// Gaussian matrix divided by its operator norm.
pub fn normalized_gaussian<T: Scalar>(rows: usize, cols: usize, rng: &mut EnsembleRng) -> Result<Matrix<T>> {
    let g = gaussian_matrix::<T>(rows, cols, rng);
    let s = operator_norm(&g, T::of(DEFAULT_REL_TOL))?;
    Ok(g.scaled(s.recip()))
}

/// Random orthogonal `n×n` matrix.
///
/// Up to [`EXACT_DIM_LIMIT`] this orthonormalizes a Gaussian matrix (Haar
/// distributed). Beyond it, a random signed permutation is followed by three
/// Householder reflections with Gaussian normals, which costs `O(n²)`.
pub fn random_orthogonal<T: Scalar>(n: usize, rng: &mut EnsembleRng) -> Matrix<T> {
    if n <= EXACT_DIM_LIMIT {
        haar_orthogonal(n, rng)
    } else {
        structured_orthogonal(n, rng)
    }
}

fn haar_orthogonal<T: Scalar>(n: usize, rng: &mut EnsembleRng) -> Matrix<T> {
    let mut q = gaussian_matrix::<T>(n, n, rng);
    for j in 0..n {
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for k in 0..j {
                let (done, rest) = q.as_mut_slice().split_at_mut(j * n);
                let qk = &done[k * n..(k + 1) * n];
                let v = &mut rest[..n];
                let c = dot(qk, v);
                axpy(-c, qk, v);
            }
        }
        let v = q.col_mut(j);
        let s = norm2(v);
        v.iter_mut().for_each(|x| *x /= s);
    }
    q
}

/// Random data of a signed permutation followed by three Householder reflections.
struct Structured<T> {
    perm: Vec<usize>,
    signs: Vec<T>,
    normals: [Vec<T>; 3],
}

impl<T: Scalar> Structured<T> {
    fn draw(n: usize, rng: &mut EnsembleRng) -> Self {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(rng);
        let signs = (0..n)
            .map(|_| if rng.random::<bool>() { T::one() } else { -T::one() })
            .collect();
        let mut unit = || {
            let mut u: Vec<T> = (0..n).map(|_| normal(rng)).collect();
            let s = norm2(&u);
            u.iter_mut().for_each(|x| *x /= s);
            u
        };
        let normals = [unit(), unit(), unit()];
        Structured { perm, signs, normals }
    }

    /// The orthogonal matrix with column `j` multiplied by `scales[j]`.
    fn fill(&self, scales: Option<&[T]>) -> Matrix<T> {
        let n = self.perm.len();
        let [u1, u2, u3] = &self.normals;
        let (c12, c13, c23) = (dot(u1, u2), dot(u1, u3), dot(u2, u3));
        let two = T::of(2.0);
        let mut q = Matrix::zeros(n, n);
        for j in 0..n {
            // H3·H2·H1·(s e_p) = s e_p + a1 u1 + a2 u2 + a3 u3
            let (p, s) = (self.perm[j], self.signs[j]);
            let a1 = -two * s * u1[p];
            let a2 = -two * (s * u2[p] + a1 * c12);
            let a3 = -two * (s * u3[p] + a1 * c13 + a2 * c23);
            let d = scales.map_or(T::one(), |d| d[j]);
            let (a1, a2, a3) = (a1 * d, a2 * d, a3 * d);
            let v = q.col_mut(j);
            for ((x, &x1), (&x2, &x3)) in v.iter_mut().zip(u1).zip(u2.iter().zip(u3)) {
                *x = a1 * x1 + a2 * x2 + a3 * x3;
            }
            v[p] += s * d;
        }
        q
    }
}

fn structured_orthogonal<T: Scalar>(n: usize, rng: &mut EnsembleRng) -> Matrix<T> {
    Structured::draw(n, rng).fill(None)
}

/// Column scales in `[θ, 1]`, one of them exactly `θ`.
pub fn column_scales<T: Scalar>(n: usize, theta: T, rng: &mut EnsembleRng) -> Vec<T> {
    let mut d: Vec<T> = (0..n)
        .map(|_| theta + (T::one() - theta) * T::of(rng.random::<f64>()))
        .collect();
    if n > 0 {
        let k = rng.random_range(0..n);
        d[k] = theta;
    }
    d
}

/// Benchmark instance `Q·D`: `‖A‖ = max d ≤ 1`, column norms `d_j ≥ θ`.
pub fn bench_instance<T: Scalar>(n: usize, theta: T, rng: &mut EnsembleRng) -> Result<Matrix<T>> {
    if !(theta > T::zero() && theta <= T::one()) {
        return Err(Error::InvalidArgument(format!("theta = {theta} outside (0, 1]")));
    }
    if n > EXACT_DIM_LIMIT {
        let g = Structured::draw(n, rng);
        let d = column_scales(n, theta, rng);
        return Ok(g.fill(Some(&d)));
    }
    let mut q = haar_orthogonal::<T>(n, rng);
    let d = column_scales(n, theta, rng);
    for (j, &dj) in d.iter().enumerate() {
        q.col_mut(j).iter_mut().for_each(|x| *x *= dj);
    }
    Ok(q)
}

/// `segments` copies of one shared frame on `[0, 1]`.
pub fn constant_path<T: Scalar>(frame: Matrix<T>, segments: usize) -> Result<MatrixPath<T>> {
    MatrixPath::constant(frame, T::zero(), T::one(), segments)
}

fn rotate_columns<T: Scalar>(m: &mut Matrix<T>, p: usize, q: usize, phi: T) {
    let (c, s) = (phi.cos(), phi.sin());
    let n = m.nrows();
    let (lo, hi) = (p.min(q), p.max(q));
    let (a, b) = m.as_mut_slice().split_at_mut(hi * n);
    let (x, y) = (&mut a[lo * n..(lo + 1) * n], &mut b[..n]);
    let (x, y, s) = if lo == p { (x, y, s) } else { (y, x, s) };
    for (xi, yi) in x.iter_mut().zip(y.iter_mut()) {
        let (u, v) = (*xi, *yi);
        *xi = c * u + s * v;
        *yi = -s * u + c * v;
    }
}

/// Identity with columns 1 and 2 rotated by `angle·k/K` at frame `k`.
pub fn rotation_path<T: Scalar>(n: usize, segments: usize, angle: T) -> Result<MatrixPath<T>> {
    if n < 2 {
        return Err(Error::InvalidArgument("rotation path needs n >= 2".into()));
    }
    let frames = (0..=segments)
        .map(|k| {
            let mut m = Matrix::identity(n);
            rotate_columns(&mut m, 0, 1, angle * T::of_usize(k) / T::of_usize(segments.max(1)));
            m
        })
        .collect();
    MatrixPath::from_frames(uniform(T::zero(), T::one(), segments + 1), frames)
}

/// Random path with `‖A(t)‖ ≤ 1` and column norms `≥ θ` everywhere.
///
/// Frame `k` is `Q_k·D` with `D` from [`column_scales`] at `θ^{1/2}` and
/// `Q_k` obtained from `Q_{k−1}` by `rotations` Givens rotations on disjoint
/// column pairs, each of angle at most `min(2·acos θ^{1/2}, π/2)`, so each chord keeps column norms
/// `≥ θ^{1/2}·cos(φ/2) ≥ θ`. At `θ = 1` every frame is the same shared matrix.
pub fn random_normalized_path<T: Scalar>(
    n: usize,
    segments: usize,
    theta: T,
    rotations: usize,
    rng: &mut EnsembleRng,
) -> Result<MatrixPath<T>> {
    if n < 2 || segments == 0 {
        return Err(Error::InvalidArgument("need n >= 2 and at least one segment".into()));
    }
    let root = theta.sqrt();
    let phi_max = (T::of(2.0) * root.min(T::one()).acos()).min(T::of(std::f64::consts::FRAC_PI_2));
    let mut frame = bench_instance(n, root, rng)?;
    if !(phi_max > T::zero()) {
        return MatrixPath::constant(frame, T::zero(), T::one(), segments);
    }
    let mut frames = vec![Arc::new(frame.clone())];
    let mut order: Vec<usize> = (0..n).collect();
    for _ in 0..segments {
        // disjoint pairs, so no column turns by more than phi_max per segment
        order.shuffle(rng);
        for pair in order.chunks_exact(2).take(rotations) {
            let (p, q) = (pair[0], pair[1]);
            let phi = phi_max * T::of(rng.random::<f64>() * 2.0 - 1.0);
            // scales are per column, so rotate the unit directions
            let (dp, dq) = (frame.col_norm(p), frame.col_norm(q));
            frame.col_mut(p).iter_mut().for_each(|x| *x /= dp);
            frame.col_mut(q).iter_mut().for_each(|x| *x /= dq);
            rotate_columns(&mut frame, p, q, phi);
            frame.col_mut(p).iter_mut().for_each(|x| *x *= dp);
            frame.col_mut(q).iter_mut().for_each(|x| *x *= dq);
        }
        frames.push(Arc::new(frame.clone()));
    }
    MatrixPath::new(uniform(T::zero(), T::one(), segments + 1), frames)
}

/// Path on which column `k+1` tilts toward column `0` and back during stage `k`,
/// for `k < stages`.
///
/// Each stage spans `per_stage` segments; the tilt angle follows a tent
/// peaking at `phi_max`. Frames are scaled by `(1 + sin phi_max)^{-1/2}` so
/// `‖A(t)‖ ≤ 1`. The pairs `(1, k+2)` (1-based) cross any threshold below
/// `sin(phi_max)/(1 + sin(phi_max))`, forcing new cover intervals.
pub fn coupled_path<T: Scalar>(n: usize, stages: usize, per_stage: usize, phi_max: T) -> Result<MatrixPath<T>> {
    if stages + 1 >= n || per_stage < 2 || stages == 0 {
        return Err(Error::InvalidArgument(format!(
            "coupled path needs stages + 1 < n and per_stage >= 2 (n = {n}, stages = {stages}, per_stage = {per_stage})"
        )));
    }
    let scale = (T::one() + phi_max.sin()).sqrt().recip();
    let half = T::of_usize(per_stage) / T::of(2.0);
    let mut frames = Vec::new();
    for k in 0..stages {
        for step in 0..per_stage {
            let x = T::of_usize(step);
            let phi = phi_max * (T::one() - ((x - half) / half).abs());
            let mut m = Matrix::identity(n);
            let col = m.col_mut(k + 1);
            col[k + 1] = phi.cos();
            col[0] = phi.sin();
            frames.push(m.scaled(scale));
        }
    }
    frames.push(Matrix::identity(n).scaled(scale));
    let count = frames.len();
    MatrixPath::from_frames(uniform(T::zero(), T::one(), count), frames)
}
