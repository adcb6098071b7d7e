//! Piecewise-linear matrix paths and exact per-segment extrema.
//!
//! On a segment `[t_k, t_{k+1}]`, with local coordinate
//! `s = (t − t_k)/(t_{k+1} − t_k)`, every inner product of two columns is a
//! quadratic in `s`. Its extrema over any sub-interval are found exactly by
//! looking at the endpoints and the vertex.

use std::borrow::Cow;
use std::collections::HashMap;
use std::io::Write;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::io::{parse_block, parse_count, parse_real, write_block, Lines};
use crate::linalg::{dot, norm_screen, operator_norm, ColumnSource, Matrix, NormEstimate};
use crate::scalar::{fmt_real, Scalar};

/// Exact range of a function over a closed interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentExtrema<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Scalar> SegmentExtrema<T> {
    pub fn max_abs(&self) -> T {
        self.lo.abs().max(self.hi.abs())
    }
}

/// `c0 + c1·s + c2·s²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quad<T> {
    pub c0: T,
    pub c1: T,
    pub c2: T,
}

impl<T: Scalar> Quad<T> {
    pub fn constant(c: T) -> Self {
        Quad {
            c0: c,
            c1: T::zero(),
            c2: T::zero(),
        }
    }

    /// From the four endpoint products `⟨x_a, y_b⟩`, `a, b ∈ {0, 1}`.
    pub fn from_products(p00: T, p01: T, p10: T, p11: T) -> Self {
        Quad {
            c0: p00,
            c1: p01 + p10 - T::of(2.0) * p00,
            c2: p00 + p11 - p01 - p10,
        }
    }

    #[inline]
    pub fn eval(&self, s: T) -> T {
        self.c0 + s * (self.c1 + s * self.c2)
    }

    /// Range over `[s0, s1]`.
    pub fn extrema(&self, s0: T, s1: T) -> SegmentExtrema<T> {
        let (a, b) = (self.eval(s0), self.eval(s1));
        let (mut lo, mut hi) = (a.min(b), a.max(b));
        if self.c2 != T::zero() {
            let v = -self.c1 / (T::of(2.0) * self.c2);
            if v > s0 && v < s1 {
                let fv = self.eval(v);
                lo = lo.min(fv);
                hi = hi.max(fv);
            }
        }
        SegmentExtrema { lo, hi }
    }
}

/// Continuous matrix function, affine between consecutive frames.
///
/// Frames are reference counted so that long paths through few distinct
/// matrices stay cheap; segments whose two frames coincide are flagged as
/// constant and evaluate without arithmetic.
#[derive(Clone, Debug)]
pub struct MatrixPath<T> {
    breakpoints: Vec<T>,
    frames: Vec<Arc<Matrix<T>>>,
    constant: Vec<bool>,
    colnorm_sq: Vec<Arc<Vec<T>>>,
}

impl<T: Scalar> MatrixPath<T> {
    pub fn new(breakpoints: Vec<T>, frames: Vec<Arc<Matrix<T>>>) -> Result<Self> {
        if breakpoints.len() < 2 {
            return Err(Error::InvalidArgument("a path needs at least two breakpoints".into()));
        }
        if frames.len() != breakpoints.len() {
            return Err(Error::InvalidArgument(format!(
                "{} frames for {} breakpoints",
                frames.len(),
                breakpoints.len()
            )));
        }
        if breakpoints.iter().any(|t| !t.is_finite()) || breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument("breakpoints must be finite and strictly increasing".into()));
        }
        let shape = frames[0].shape();
        if shape.0 == 0 || shape.1 == 0 {
            return Err(Error::InvalidArgument("frames must be nonempty".into()));
        }
        for (k, f) in frames.iter().enumerate() {
            if f.shape() != shape {
                return Err(Error::DimensionMismatch {
                    op: "path frames",
                    left: shape,
                    right: f.shape(),
                });
            }
            if k == 0 || !Arc::ptr_eq(f, &frames[k - 1]) {
                f.check_finite()?;
            }
        }
        let constant = frames
            .windows(2)
            .map(|w| Arc::ptr_eq(&w[0], &w[1]) || w[0] == w[1])
            .collect();
        let mut cache: HashMap<*const Matrix<T>, Arc<Vec<T>>> = HashMap::new();
        let colnorm_sq = frames
            .iter()
            .map(|f| {
                cache
                    .entry(Arc::as_ptr(f))
                    .or_insert_with(|| Arc::new((0..f.ncols()).map(|j| dot(f.col(j), f.col(j))).collect()))
                    .clone()
            })
            .collect();
        Ok(MatrixPath {
            breakpoints,
            frames,
            constant,
            colnorm_sq,
        })
    }

    pub fn from_frames(breakpoints: Vec<T>, frames: Vec<Matrix<T>>) -> Result<Self> {
        Self::new(breakpoints, frames.into_iter().map(Arc::new).collect())
    }

    /// `frame` on `[t0, t1]`, split into `segments` equal segments sharing one frame.
    pub fn constant(frame: Matrix<T>, t0: T, t1: T, segments: usize) -> Result<Self> {
        let segments = segments.max(1);
        let f = Arc::new(frame);
        let bps = uniform(t0, t1, segments + 1);
        Self::new(bps, vec![f; segments + 1])
    }

    pub fn nrows(&self) -> usize {
        self.frames[0].nrows()
    }

    pub fn ncols(&self) -> usize {
        self.frames[0].ncols()
    }

    pub fn segments(&self) -> usize {
        self.breakpoints.len() - 1
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    pub fn frame(&self, k: usize) -> &Matrix<T> {
        &self.frames[k]
    }

    pub fn frame_arc(&self, k: usize) -> &Arc<Matrix<T>> {
        &self.frames[k]
    }

    pub fn domain(&self) -> (T, T) {
        (self.breakpoints[0], *self.breakpoints.last().expect("nonempty"))
    }

    pub fn is_constant_segment(&self, k: usize) -> bool {
        self.constant[k]
    }

    /// Distinct frames by storage.
    pub fn unique_frames(&self) -> Vec<&Matrix<T>> {
        let mut seen = std::collections::HashSet::new();
        self.frames
            .iter()
            .filter(|f| seen.insert(Arc::as_ptr(f)))
            .map(|f| f.as_ref())
            .collect()
    }

    fn check_seg(&self, seg: usize) -> Result<()> {
        if seg >= self.segments() {
            return Err(Error::IndexOutOfRange {
                index: seg,
                width: self.segments(),
            });
        }
        Ok(())
    }

    fn check_col(&self, j: usize) -> Result<()> {
        if j >= self.ncols() {
            return Err(Error::IndexOutOfRange {
                index: j,
                width: self.ncols(),
            });
        }
        Ok(())
    }

    /// Local coordinate of `t` on segment `seg` (not clamped).
    pub fn local(&self, seg: usize, t: T) -> T {
        let (a, b) = (self.breakpoints[seg], self.breakpoints[seg + 1]);
        (t - a) / (b - a)
    }

    /// Segment containing `t`; the right end belongs to the last segment.
    pub fn segment_of(&self, t: T) -> Result<usize> {
        let (lo, hi) = self.domain();
        if !(t >= lo && t <= hi) {
            return Err(Error::OutOfDomain {
                t: t.to_f64_lossy(),
                lo: lo.to_f64_lossy(),
                hi: hi.to_f64_lossy(),
            });
        }
        let k = self.breakpoints.partition_point(|&b| b <= t);
        Ok(k.saturating_sub(1).min(self.segments() - 1))
    }

    /// The matrix at `t`, as a column source that avoids forming it.
    pub fn at(&self, t: T) -> Result<PathPoint<'_, T>> {
        let seg = self.segment_of(t)?;
        let (a, b) = (self.breakpoints[seg], self.breakpoints[seg + 1]);
        let pos = if t == a || self.constant[seg] {
            Pos::Frame(seg)
        } else if t == b {
            Pos::Frame(seg + 1)
        } else {
            let h = b - a;
            Pos::Mix {
                alpha: (b - t) / h,
                beta: (t - a) / h,
            }
        };
        Ok(PathPoint { path: self, seg, pos })
    }

    /// `((t_{k+1} − t)·A_k + (t − t_k)·A_{k+1}) / (t_{k+1} − t_k)`, exact at breakpoints.
    pub fn eval(&self, t: T) -> Result<Matrix<T>> {
        let p = self.at(t)?;
        Ok(match p.pos {
            Pos::Frame(k) => self.frames[k].as_ref().clone(),
            Pos::Mix { .. } => {
                Matrix::from_columns(&(0..self.ncols()).map(|j| p.column(j).into_owned()).collect::<Vec<_>>())?
            }
        })
    }

    /// `s ↦ ⟨a_i(s), a_j(s)⟩` on segment `seg`.
    pub fn inner_quad(&self, seg: usize, i: usize, j: usize) -> Result<Quad<T>> {
        self.check_seg(seg)?;
        self.check_col(i)?;
        self.check_col(j)?;
        let (x, y) = (&self.frames[seg], &self.frames[seg + 1]);
        if self.constant[seg] {
            let v = if i == j { self.colnorm_sq[seg][i] } else { dot(x.col(i), x.col(j)) };
            return Ok(Quad::constant(v));
        }
        let (p00, p11) = if i == j {
            (self.colnorm_sq[seg][i], self.colnorm_sq[seg + 1][i])
        } else {
            (dot(x.col(i), x.col(j)), dot(y.col(i), y.col(j)))
        };
        let p01 = dot(x.col(i), y.col(j));
        let p10 = if i == j { p01 } else { dot(y.col(i), x.col(j)) };
        Ok(Quad::from_products(p00, p01, p10, p11))
    }

    /// Exact min and max of `⟨a_i(t), a_j(t)⟩` over segment `seg`.
    pub fn segment_inner_extrema(&self, seg: usize, i: usize, j: usize) -> Result<SegmentExtrema<T>> {
        Ok(self.inner_quad(seg, i, j)?.extrema(T::zero(), T::one()))
    }

    /// Exact min of `‖a_i(t)‖` over segment `seg`.
    pub fn segment_min_colnorm(&self, seg: usize, i: usize) -> Result<T> {
        Ok(self.inner_quad(seg, i, i)?.extrema(T::zero(), T::one()).lo.max(T::zero()).sqrt())
    }

    /// `inf_t min_i ‖a_i(t)‖`.
    pub fn path_theta(&self) -> T {
        let mut m = T::infinity();
        for seg in 0..self.segments() {
            for i in 0..self.ncols() {
                let v = self.segment_min_colnorm(seg, i).expect("indices in range");
                m = m.min(v);
            }
        }
        m
    }

    /// Largest frame norm; bounds `‖A(t)‖` everywhere by convexity.
    pub fn path_norm_bound(&self, rel_tol: T) -> Result<T> {
        let mut m = T::zero();
        for f in self.unique_frames() {
            m = m.max(operator_norm(f, rel_tol)?);
        }
        Ok(m)
    }

    /// [`norm_screen`] over the distinct frames, with the budget split between them.
    pub fn norm_screen(&self, flop_budget: f64) -> NormEstimate<T> {
        let frames = self.unique_frames();
        let share = flop_budget / frames.len() as f64;
        let mut out = NormEstimate {
            value: T::zero(),
            iterations: 0,
            converged: true,
            exact: true,
        };
        for f in frames {
            let e = norm_screen(f, share);
            out.value = out.value.max(e.value);
            out.iterations = out.iterations.max(e.iterations);
            out.converged &= e.converged;
            out.exact &= e.exact;
        }
        out
    }

    /// Every frame multiplied by `c`; shared frames stay shared.
    pub fn scaled(&self, c: T) -> Result<Self> {
        let mut cache: HashMap<*const Matrix<T>, Arc<Matrix<T>>> = HashMap::new();
        let frames = self
            .frames
            .iter()
            .map(|f| {
                cache
                    .entry(Arc::as_ptr(f))
                    .or_insert_with(|| Arc::new(f.scaled(c)))
                    .clone()
            })
            .collect();
        Self::new(self.breakpoints.clone(), frames)
    }
}

/// `n` equally spaced points from `a` to `b`, endpoints exact.
pub fn uniform<T: Scalar>(a: T, b: T, n: usize) -> Vec<T> {
    if n == 1 {
        return vec![a];
    }
    let d = T::of_usize(n - 1);
    (0..n)
        .map(|k| {
            if k == n - 1 {
                b
            } else {
                let w = T::of_usize(k) / d;
                a + (b - a) * w
            }
        })
        .collect()
}

#[derive(Clone, Copy, Debug)]
enum Pos<T> {
    Frame(usize),
    Mix { alpha: T, beta: T },
}

/// `A(t)` for one `t`, read column by column.
#[derive(Clone, Copy, Debug)]
pub struct PathPoint<'a, T> {
    path: &'a MatrixPath<T>,
    seg: usize,
    pos: Pos<T>,
}

impl<T: Scalar> PathPoint<'_, T> {
    pub fn segment(&self) -> usize {
        self.seg
    }

    pub fn to_matrix(&self) -> Matrix<T> {
        match self.pos {
            Pos::Frame(k) => self.path.frames[k].as_ref().clone(),
            Pos::Mix { .. } => Matrix::from_columns(
                &(0..self.path.ncols()).map(|j| self.column(j).into_owned()).collect::<Vec<_>>(),
            )
            .expect("consistent shape"),
        }
    }
}

impl<T: Scalar> ColumnSource<T> for PathPoint<'_, T> {
    fn nrows(&self) -> usize {
        self.path.nrows()
    }

    fn ncols(&self) -> usize {
        self.path.ncols()
    }

    fn column(&self, j: usize) -> Cow<'_, [T]> {
        match self.pos {
            Pos::Frame(k) => Cow::Borrowed(self.path.frames[k].col(j)),
            Pos::Mix { alpha, beta } => {
                let x = self.path.frames[self.seg].col(j);
                let y = self.path.frames[self.seg + 1].col(j);
                Cow::Owned(x.iter().zip(y).map(|(&u, &v)| alpha * u + beta * v).collect())
            }
        }
    }

    fn col_norm_sq(&self, j: usize) -> T {
        match self.pos {
            Pos::Frame(k) => self.path.colnorm_sq[k][j],
            Pos::Mix { .. } => {
                let c = self.column(j);
                dot(&c, &c)
            }
        }
    }
}

/// Parses the path format: `N K`, the `K+1` breakpoints, then `K+1` blocks
/// of `N` rows of `N` reals (blank lines between blocks are optional).
pub fn parse_path<T: Scalar>(text: &str) -> Result<MatrixPath<T>> {
    let mut lines = Lines::new(text);
    let (ln, header) = lines.next_nonblank().ok_or_else(|| Error::parse(1, "empty input"))?;
    let toks: Vec<&str> = header.split_whitespace().collect();
    if toks.len() != 2 {
        return Err(Error::parse(ln, "header must be `N K`"));
    }
    let n = parse_count(toks[0], ln, "dimension")?;
    let k = parse_count(toks[1], ln, "segment count")?;
    if n == 0 || k == 0 {
        return Err(Error::parse(ln, "N and K must be positive"));
    }
    let (bln, bline) = lines
        .next_nonblank()
        .ok_or_else(|| Error::parse(ln + 1, "missing breakpoints"))?;
    let bps = bline
        .split_whitespace()
        .map(|t| parse_real::<T>(t, bln))
        .collect::<Result<Vec<_>>>()?;
    if bps.len() != k + 1 {
        return Err(Error::parse(bln, format!("expected {} breakpoints, found {}", k + 1, bps.len())));
    }
    if let Some(p) = bps.windows(2).position(|w| !(w[0] < w[1])) {
        return Err(Error::parse(
            bln,
            format!("breakpoints not strictly increasing at positions {} and {}", p + 1, p + 2),
        ));
    }
    let mut frames = Vec::with_capacity(k + 1);
    for _ in 0..=k {
        frames.push(Arc::new(parse_block::<T>(&mut lines, n, n)?));
    }
    if let Some((l, _)) = lines.next_nonblank() {
        return Err(Error::parse(l, "trailing content after last frame"));
    }
    MatrixPath::new(bps, frames)
}

/// Writes the format read by [`parse_path`], which only has room for square frames.
pub fn write_path<T: Scalar>(mut w: impl Write, path: &MatrixPath<T>) -> Result<()> {
    if path.nrows() != path.ncols() {
        return Err(Error::InvalidArgument(format!(
            "path files hold square frames, got {}x{}",
            path.nrows(),
            path.ncols()
        )));
    }
    writeln!(w, "{} {}", path.ncols(), path.segments())?;
    let bps: Vec<String> = path.breakpoints.iter().map(|&t| fmt_real(t)).collect();
    writeln!(w, "{}", bps.join(" "))?;
    for f in &path.frames {
        writeln!(w)?;
        write_block(&mut w, f)?;
    }
    Ok(())
}

pub fn path_to_string<T: Scalar>(path: &MatrixPath<T>) -> Result<String> {
    let mut buf = Vec::new();
    write_path(&mut buf, path)?;
    Ok(String::from_utf8(buf).expect("ascii output"))
}
