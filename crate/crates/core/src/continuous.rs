//! Factoring the identity continuously along a matrix path.
//!
//! The domain is covered by intervals `[t_{m-1}, t_m]`, each with a family
//! `F_m` that stays almost orthogonal on the whole interval. Around every
//! interior node a bridge family `G_m`, disjoint from and almost orthogonal
//! to both neighbours, lets the factors pass from `F_m` to `F_{m+1}` by
//! blending through `G_m` on a window `(s_m, u_m)`. Every strict inequality
//! the construction relies on is certified exactly with segment quadratics.

use std::fmt;
use std::io::Write;

use crate::error::{Error, Hypothesis, Result};
use crate::kv::{KvMap, KvWriter};
use crate::linalg::io::{parse_block, parse_count, parse_real, write_block, Lines};
use crate::linalg::{apply_right, operator_norm, ColumnSource, Matrix, DEFAULT_REL_TOL};
use crate::path::{uniform, MatrixPath, Quad};
use crate::scalar::{fmt_real, Scalar};
use crate::select::{max_pair_inner, select_almost_orthogonal, select_disjoint_extension, IndexSet, SelectionParams};
use crate::static_factor::{
    build_r, continuous_max_rank, invert_near_identity, normalized_columns, resolve_rank, CorrectionBudget,
    FactorEstimates, RankRequest, CERT_TOL, NORM_SLACK, SCREEN_FLOPS,
};

/// Default number of uniform grid points for path certificates.
pub const DEFAULT_GRID: usize = 4001;

/// Tunables of the cover construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoverConfig<T> {
    /// Families are selected at threshold `margin·ε` and certified at `ε`.
    pub selection_margin: T,
    /// Smallest interval or window extent accepted; `None` means `1e-6` of the domain length.
    pub node_resolution: Option<T>,
    /// Windows may reach at most this fraction into each neighbouring interval.
    pub window_clip: T,
}

impl<T: Scalar> Default for CoverConfig<T> {
    fn default() -> Self {
        CoverConfig {
            selection_margin: T::of(0.5),
            node_resolution: None,
            window_clip: T::of(0.45),
        }
    }
}

impl<T: Scalar> CoverConfig<T> {
    fn resolution(&self, path: &MatrixPath<T>) -> T {
        let (a, b) = path.domain();
        self.node_resolution.unwrap_or((b - a) * T::of(1e-6))
    }
}

/// Record of the cover: nodes, per-interval families, bridges and windows.
///
/// `families[m]` lives on `[nodes[m], nodes[m+1]]`; `bridges[b]` and
/// `windows[b]` belong to the interior node `nodes[b+1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CoverPlan<T> {
    pub n: usize,
    pub epsilon: T,
    pub selection_epsilon: T,
    pub nodes: Vec<T>,
    pub families: Vec<IndexSet>,
    pub bridges: Vec<IndexSet>,
    pub windows: Vec<(T, T)>,
}

fn pairs_within(f: &IndexSet) -> Vec<(usize, usize)> {
    let v = f.as_slice();
    let mut out = Vec::new();
    for p in 0..v.len() {
        for q in 0..p {
            out.push((v[q], v[p]));
        }
    }
    out
}

/// Pairs `(i, j)` with `i ∈ G`, `j ∈ G ∪ F₁ ∪ F₂`, `i ≠ j`, each unordered pair once.
fn bridge_pairs(g: &IndexSet, f1: &IndexSet, f2: &IndexSet) -> Vec<(usize, usize)> {
    let mut out = pairs_within(g);
    let others = f1.union(f2);
    for i in g.iter() {
        for j in others.iter() {
            if i != j {
                out.push((i, j));
            }
        }
    }
    out
}

fn quads<T: Scalar>(path: &MatrixPath<T>, seg: usize, pairs: &[(usize, usize)]) -> Result<Vec<Quad<T>>> {
    pairs.iter().map(|&(i, j)| path.inner_quad(seg, i, j)).collect()
}

/// Local coordinates of `[ta, tb]` on `seg`, exact at the breakpoints.
fn local_range<T: Scalar>(path: &MatrixPath<T>, seg: usize, ta: T, tb: T) -> (T, T) {
    let bp = path.breakpoints();
    let sa = if ta <= bp[seg] { T::zero() } else { path.local(seg, ta) };
    let sb = if tb >= bp[seg + 1] { T::one() } else { path.local(seg, tb) };
    (sa, sb)
}

/// First pair whose `|⟨a_i, a_j⟩|` reaches `eps` somewhere on `[ta, tb] ∩ seg`.
fn violation<T: Scalar>(
    path: &MatrixPath<T>,
    seg: usize,
    qs: &[Quad<T>],
    pairs: &[(usize, usize)],
    ta: T,
    tb: T,
    eps: T,
) -> Option<(usize, usize)> {
    let (sa, sb) = local_range(path, seg, ta, tb);
    qs.iter()
        .zip(pairs)
        .find(|(q, _)| !(q.extrema(sa, sb).max_abs() < eps))
        .map(|(_, &p)| p)
}

/// Segments meeting `[ta, tb]`.
fn segments_meeting<T: Scalar>(path: &MatrixPath<T>, ta: T, tb: T) -> std::ops::Range<usize> {
    let bp = path.breakpoints();
    let first = path.segment_of(ta).unwrap_or(0);
    let last = bp.partition_point(|&b| b < tb).saturating_sub(1).min(path.segments() - 1);
    first..(last.max(first) + 1)
}

/// Exact check that every pair stays below `eps` on `[ta, tb]`.
pub fn certify_range<T: Scalar>(
    path: &MatrixPath<T>,
    pairs: &[(usize, usize)],
    ta: T,
    tb: T,
    eps: T,
) -> Result<Option<(usize, usize)>> {
    for seg in segments_meeting(path, ta, tb) {
        let qs = quads(path, seg, pairs)?;
        if let Some(p) = violation(path, seg, &qs, pairs, ta, tb, eps) {
            return Ok(Some(p));
        }
    }
    Ok(None)
}

/// Largest `t_end ≤ limit` with all pairs certified on `[start, t_end]`,
/// located to within `res`, plus the pair that stopped the extension.
fn extend_right<T: Scalar>(
    path: &MatrixPath<T>,
    pairs: &[(usize, usize)],
    start: T,
    limit: T,
    eps: T,
    res: T,
) -> Result<(T, Option<(usize, usize)>)> {
    if pairs.is_empty() {
        return Ok((limit, None));
    }
    let bp = path.breakpoints();
    let mut seg = path.segment_of(start)?;
    loop {
        let seg_start = if bp[seg] > start { bp[seg] } else { start };
        let seg_end = if bp[seg + 1] < limit { bp[seg + 1] } else { limit };
        let qs = quads(path, seg, pairs)?;
        let Some(bad) = violation(path, seg, &qs, pairs, start, seg_end, eps) else {
            if seg_end >= limit {
                return Ok((limit, None));
            }
            seg += 1;
            continue;
        };
        let (mut lo, mut hi) = (seg_start, seg_end);
        while hi - lo > res / T::of(4.0) {
            let mid = lo + (hi - lo) / T::of(2.0);
            if mid <= lo || mid >= hi {
                break;
            }
            if violation(path, seg, &qs, pairs, start, mid, eps).is_none() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return Ok((lo, Some(bad)));
    }
}

/// Mirror image of [`extend_right`]: smallest certified `t_begin ≥ limit`.
fn extend_left<T: Scalar>(
    path: &MatrixPath<T>,
    pairs: &[(usize, usize)],
    start: T,
    limit: T,
    eps: T,
    res: T,
) -> Result<(T, Option<(usize, usize)>)> {
    if pairs.is_empty() {
        return Ok((limit, None));
    }
    let bp = path.breakpoints();
    let mut seg = path.segment_of(start)?;
    if seg > 0 && bp[seg] == start {
        seg -= 1;
    }
    loop {
        let seg_end = if bp[seg + 1] < start { bp[seg + 1] } else { start };
        let seg_start = if bp[seg] > limit { bp[seg] } else { limit };
        let qs = quads(path, seg, pairs)?;
        let Some(bad) = violation(path, seg, &qs, pairs, seg_start, start, eps) else {
            if seg_start <= limit {
                return Ok((limit, None));
            }
            seg -= 1;
            continue;
        };
        let (mut lo, mut hi) = (seg_start, seg_end);
        while hi - lo > res / T::of(4.0) {
            let mid = lo + (hi - lo) / T::of(2.0);
            if mid <= lo || mid >= hi {
                break;
            }
            if violation(path, seg, &qs, pairs, mid, start, eps).is_none() {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        return Ok((hi, Some(bad)));
    }
}

fn check_counting<T: Scalar>(big_n: usize, n: usize, eps: T) -> Result<()> {
    let e = eps.to_f64_lossy();
    if !(e > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {e}")));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    if n >= 2 {
        let need = 5.0 * n as f64 / (e * e);
        if (big_n as f64) < need * (1.0 - crate::select::BORDERLINE_SLACK) {
            return Err(Error::Infeasible(format!(
                "N = {big_n} is below 5n/eps^2 = {need} (n = {n}, eps = {e})"
            )));
        }
    }
    Ok(())
}

fn pair_text(p: Option<(usize, usize)>) -> String {
    match p {
        Some((i, j)) => format!("pair ({}, {})", i + 1, j + 1),
        None => "no violating pair".into(),
    }
}

/// Nodes and interval families.
///
/// At each left endpoint `τ` a family is selected at threshold `margin·ε`
/// and the interval is extended to the right as far as every pair stays
/// certified below `ε`.
pub fn build_cover<T: Scalar>(
    path: &MatrixPath<T>,
    n: usize,
    epsilon: T,
    cfg: &CoverConfig<T>,
) -> Result<(Vec<T>, Vec<IndexSet>)> {
    check_counting(path.ncols(), n, epsilon)?;
    let (t0, t_end) = path.domain();
    let res = cfg.resolution(path);
    let sel = SelectionParams::new(n, epsilon * cfg.selection_margin);
    let mut nodes = vec![t0];
    let mut families = Vec::new();
    let mut tau = t0;
    loop {
        let f = select_almost_orthogonal(&path.at(tau)?, sel)?;
        let pairs = pairs_within(&f);
        let (end, bad) = extend_right(path, &pairs, tau, t_end, epsilon, res)?;
        if end < t_end && end - tau < res {
            return Err(Error::Stall {
                at: tau.to_f64_lossy(),
                detail: format!("family {{{f}}} certified only up to {}; {}", end, pair_text(bad)),
            });
        }
        nodes.push(end);
        families.push(f);
        if end >= t_end {
            return Ok((nodes, families));
        }
        tau = end;
    }
}

/// Bridge families and windows around every interior node.
pub fn build_bridges<T: Scalar>(
    path: &MatrixPath<T>,
    nodes: &[T],
    families: &[IndexSet],
    epsilon: T,
    cfg: &CoverConfig<T>,
) -> Result<(Vec<IndexSet>, Vec<(T, T)>)> {
    if families.len() + 1 != nodes.len() {
        return Err(Error::InvalidArgument(format!(
            "{} families for {} nodes",
            families.len(),
            nodes.len()
        )));
    }
    let n = families.first().map_or(0, IndexSet::len);
    check_counting(path.ncols(), n, epsilon)?;
    let res = cfg.resolution(path);
    let mut bridges = Vec::new();
    let mut windows = Vec::new();
    for m in 1..nodes.len() - 1 {
        let (left, tm, right) = (nodes[m - 1], nodes[m], nodes[m + 1]);
        let (fa, fb) = (&families[m - 1], &families[m]);
        let g = select_disjoint_extension(&path.at(tm)?, SelectionParams::new(n, epsilon), fa, fb)?;
        let pairs = bridge_pairs(&g, fa, fb);
        let (s_ext, bad_l) = extend_left(path, &pairs, tm, left, epsilon, res)?;
        let (u_ext, bad_r) = extend_right(path, &pairs, tm, right, epsilon, res)?;
        if tm - s_ext < res || u_ext - tm < res {
            return Err(Error::Stall {
                at: tm.to_f64_lossy(),
                detail: format!(
                    "bridge {{{g}}} window [{s_ext}, {u_ext}] below resolution; left {}, right {}",
                    pair_text(bad_l),
                    pair_text(bad_r)
                ),
            });
        }
        let s = s_ext.max(tm - cfg.window_clip * (tm - left));
        let u = u_ext.min(tm + cfg.window_clip * (right - tm));
        if !(left < s && s < tm && tm < u && u < right) {
            return Err(Error::Stall {
                at: tm.to_f64_lossy(),
                detail: format!("window ({s}, {u}) does not fit strictly between {left} and {right}"),
            });
        }
        bridges.push(g);
        windows.push((s, u));
    }
    Ok((bridges, windows))
}

/// Cover and bridges for a custom `ε`.
pub fn plan_cover<T: Scalar>(path: &MatrixPath<T>, n: usize, epsilon: T, cfg: &CoverConfig<T>) -> Result<CoverPlan<T>> {
    let (nodes, families) = build_cover(path, n, epsilon, cfg)?;
    let (bridges, windows) = build_bridges(path, &nodes, &families, epsilon, cfg)?;
    Ok(CoverPlan {
        n,
        epsilon,
        selection_epsilon: epsilon * cfg.selection_margin,
        nodes,
        families,
        bridges,
        windows,
    })
}

fn check_blend_args<T: Scalar>(f1: &IndexSet, f2: &IndexSet, lambda: T) -> Result<()> {
    if f1.len() != f2.len() {
        return Err(Error::InvalidArgument(format!(
            "blended families differ in size: {} vs {}",
            f1.len(),
            f2.len()
        )));
    }
    if !f1.is_disjoint(f2) {
        return Err(Error::InvalidArgument(format!("blended families overlap: {{{f1}}} and {{{f2}}}")));
    }
    if !(lambda >= T::zero() && lambda <= T::one()) {
        return Err(Error::InvalidArgument(format!("lambda = {lambda} outside [0, 1]")));
    }
    Ok(())
}

fn mix<T: Scalar>(x: &Matrix<T>, y: &Matrix<T>, lambda: T) -> Matrix<T> {
    let (a, b) = (lambda.sqrt(), (T::one() - lambda).sqrt());
    let data = x.as_slice().iter().zip(y.as_slice()).map(|(&u, &v)| a * u + b * v).collect();
    Matrix::from_col_major(x.nrows(), x.ncols(), data).expect("same shape")
}

/// `λ^{1/2}·R_{F₁} + (1−λ)^{1/2}·R_{F₂}`.
pub fn blend_r<T: Scalar, S: ColumnSource<T> + ?Sized>(a: &S, f1: &IndexSet, f2: &IndexSet, lambda: T) -> Result<Matrix<T>> {
    check_blend_args(f1, f2, lambda)?;
    Ok(mix(&build_r(a, f1)?, &build_r(a, f2)?, lambda))
}

/// `A·blend_r(...)`, the blended normalized columns.
pub fn blend_ar<T: Scalar, S: ColumnSource<T> + ?Sized>(a: &S, f1: &IndexSet, f2: &IndexSet, lambda: T) -> Result<Matrix<T>> {
    check_blend_args(f1, f2, lambda)?;
    Ok(mix(&normalized_columns(a, f1)?, &normalized_columns(a, f2)?, lambda))
}

/// `λ^{1/2}·L_{F₁} + (1−λ)^{1/2}·L_{F₂}`.
pub fn blend_l<T: Scalar, S: ColumnSource<T> + ?Sized>(a: &S, f1: &IndexSet, f2: &IndexSet, lambda: T) -> Result<Matrix<T>> {
    Ok(blend_ar(a, f1, f2, lambda)?.transpose())
}

/// `(1/θ, 1 + (2n)^{1/2}ε^{1/2}/θ, 2nε/θ²)`.
pub fn blend_estimates_from<T: Scalar>(n: usize, theta: T, epsilon: T) -> FactorEstimates<T> {
    let two_n = T::of_usize(2 * n);
    FactorEstimates {
        norm_r: theta.recip(),
        norm_l: T::one() + two_n.sqrt() * epsilon.sqrt() / theta,
        dev: two_n * epsilon / (theta * theta),
    }
}

/// Uniform-in-`λ` bounds with `θ`, `ε` taken over `F₁ ∪ F₂`.
pub fn blend_estimates<T: Scalar, S: ColumnSource<T> + ?Sized>(
    a: &S,
    f1: &IndexSet,
    f2: &IndexSet,
) -> Result<FactorEstimates<T>> {
    check_blend_args(f1, f2, T::zero())?;
    let u = f1.union(f2);
    let theta = u
        .iter()
        .map(|i| a.col_norm_sq(i).sqrt())
        .fold(T::infinity(), T::min);
    Ok(blend_estimates_from(f1.len(), theta, max_pair_inner(a, &u)))
}

/// `ε = θ²/(18n)`, the continuous driver's threshold.
pub fn continuous_epsilon<T: Scalar>(n: usize, theta: T) -> T {
    theta * theta / (T::of(18.0) * T::of_usize(n))
}

/// Which formula defines the raw factors at a given `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Case<T> {
    /// Case (A): `R_{F}` for the family of interval `family`.
    Single { family: usize },
    /// Case (B), on `[s, t_m]`: blend of the left family and the bridge.
    Enter { bridge: usize, lambda: T },
    /// Case (C), on `[t_m, u]`: blend of the right family and the bridge.
    Leave { bridge: usize, lambda: T },
}

impl<T: Scalar> fmt::Display for Case<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Case::Single { family } => write!(f, "A(interval {})", family + 1),
            Case::Enter { bridge, lambda } => write!(f, "B(node {}, lambda {lambda})", bridge + 1),
            Case::Leave { bridge, lambda } => write!(f, "C(node {}, lambda {lambda})", bridge + 1),
        }
    }
}

impl<T: Scalar> CoverPlan<T> {
    /// Interval count.
    pub fn intervals(&self) -> usize {
        self.families.len()
    }

    /// Case in force at `t`. Window boundaries are assigned to the blend
    /// cases, whose values there coincide with the neighbouring formula.
    pub fn case_at(&self, t: T) -> Result<Case<T>> {
        let (lo, hi) = (self.nodes[0], *self.nodes.last().expect("nonempty"));
        if !(t >= lo && t <= hi) {
            return Err(Error::OutOfDomain {
                t: t.to_f64_lossy(),
                lo: lo.to_f64_lossy(),
                hi: hi.to_f64_lossy(),
            });
        }
        let b = self.windows.partition_point(|w| w.0 <= t);
        if b > 0 {
            let b = b - 1;
            let (s, u) = self.windows[b];
            let tm = self.nodes[b + 1];
            if t <= tm {
                return Ok(Case::Enter {
                    bridge: b,
                    lambda: ((tm - t) / (tm - s)).min(T::one()).max(T::zero()),
                });
            }
            if t <= u {
                return Ok(Case::Leave {
                    bridge: b,
                    lambda: ((t - tm) / (u - tm)).min(T::one()).max(T::zero()),
                });
            }
        }
        let m = self.nodes.partition_point(|&x| x <= t).saturating_sub(1).min(self.intervals() - 1);
        Ok(Case::Single { family: m })
    }
}

/// Uncorrected factors at one point: `R(t)` and `L(t) = (A(t)R(t))ᵀ`.
#[derive(Clone, Debug)]
pub struct RawFactor<T> {
    pub case: Case<T>,
    pub l: Matrix<T>,
    pub r: Matrix<T>,
    /// `A(t)·R(t)`.
    pub ar: Matrix<T>,
}

/// Raw factors for an explicitly chosen case (used to compare the formulas
/// of adjacent cases at shared boundaries).
pub fn raw_factor_case<T: Scalar>(plan: &CoverPlan<T>, path: &MatrixPath<T>, t: T, case: Case<T>) -> Result<RawFactor<T>> {
    let pt = path.at(t)?;
    let (r, ar) = match case {
        Case::Single { family } => {
            let f = plan
                .families
                .get(family)
                .ok_or(Error::IndexOutOfRange { index: family, width: plan.intervals() })?;
            (build_r(&pt, f)?, normalized_columns(&pt, f)?)
        }
        Case::Enter { bridge, lambda } | Case::Leave { bridge, lambda } => {
            let g = plan
                .bridges
                .get(bridge)
                .ok_or(Error::IndexOutOfRange { index: bridge, width: plan.bridges.len() })?;
            let f = match case {
                Case::Enter { .. } => &plan.families[bridge],
                _ => &plan.families[bridge + 1],
            };
            (blend_r(&pt, f, g, lambda)?, blend_ar(&pt, f, g, lambda)?)
        }
    };
    Ok(RawFactor {
        case,
        l: ar.transpose(),
        r,
        ar,
    })
}

pub fn raw_factor_at<T: Scalar>(plan: &CoverPlan<T>, path: &MatrixPath<T>, t: T) -> Result<RawFactor<T>> {
    raw_factor_case(plan, path, t, plan.case_at(t)?)
}

/// Corrected factors at one point.
#[derive(Clone, Debug)]
pub struct FactorSample<T> {
    pub t: T,
    pub case: Case<T>,
    /// `L̃(t) = (L(t)A(t)R(t))^{-1} L(t)`.
    pub l: Matrix<T>,
    pub r: Matrix<T>,
    pub raw_l: Matrix<T>,
    /// `‖L(t)A(t)R(t) − Iₙ‖` before correction.
    pub raw_dev: T,
}

/// `L̃(t)` and `R(t)`; the inversion must see a raw deviation within `budget.c_dev`.
pub fn corrected_factor_at<T: Scalar>(
    plan: &CoverPlan<T>,
    path: &MatrixPath<T>,
    budget: &CorrectionBudget<T>,
    t: T,
) -> Result<FactorSample<T>> {
    let raw = raw_factor_at(plan, path, t)?;
    let s = raw.l.matmul(&raw.ar)?;
    let raw_dev = operator_norm(&s.sub_identity()?, T::of(DEFAULT_REL_TOL))?;
    let l = if plan.n == 1 && raw_dev == T::zero() {
        raw.l.clone()
    } else {
        invert_near_identity(&s, budget.c_dev)?.matmul(&raw.l)?
    };
    Ok(FactorSample {
        t,
        case: raw.case,
        l,
        r: raw.r,
        raw_l: raw.l,
        raw_dev,
    })
}

/// Continuous factorization: the plan, evaluated lazily at any `t`.
#[derive(Clone, Debug)]
pub struct FactorPath<'a, T> {
    pub path: &'a MatrixPath<T>,
    pub plan: CoverPlan<T>,
    pub budget: CorrectionBudget<T>,
    pub theta: T,
}

impl<'a, T: Scalar> FactorPath<'a, T> {
    /// Wraps a plan, checking the correction constant `2nε/θ² < 1`.
    pub fn from_plan(path: &'a MatrixPath<T>, plan: CoverPlan<T>) -> Result<Self> {
        let theta = path.path_theta();
        let est = blend_estimates_from(plan.n, theta, plan.epsilon);
        let budget = CorrectionBudget::new(est.dev, est.norm_r * est.norm_l)?;
        Ok(FactorPath {
            path,
            plan,
            budget,
            theta,
        })
    }

    pub fn n(&self) -> usize {
        self.plan.n
    }

    pub fn eval(&self, t: T) -> Result<FactorSample<T>> {
        corrected_factor_at(&self.plan, self.path, &self.budget, t)
    }

    pub fn raw(&self, t: T) -> Result<RawFactor<T>> {
        raw_factor_at(&self.plan, self.path, t)
    }
}

/// Options of [`factor_path_with`].
#[derive(Clone, Copy, Debug)]
pub struct PathOptions<T> {
    pub grid: usize,
    pub tol: T,
    pub cover: CoverConfig<T>,
}

impl<T: Scalar> Default for PathOptions<T> {
    fn default() -> Self {
        PathOptions {
            grid: DEFAULT_GRID,
            tol: T::of(CERT_TOL),
            cover: CoverConfig::default(),
        }
    }
}

/// Checks `‖A(t)‖ ≤ 1 + NORM_SLACK` (through the frames) and `θ > 0`, returning `θ`.
pub fn check_path_hypotheses<T: Scalar>(path: &MatrixPath<T>) -> Result<T> {
    let colmax = path
        .unique_frames()
        .iter()
        .map(|f| f.max_col_norm())
        .fold(T::zero(), T::max);
    let est = path.norm_screen(SCREEN_FLOPS);
    let norm = colmax.max(est.value);
    if norm > T::one() + T::of(NORM_SLACK) {
        return Err(Hypothesis::NormAboveOne {
            norm: norm.to_f64_lossy(),
            slack: NORM_SLACK,
        }
        .into());
    }
    let theta = path.path_theta();
    if !(theta > T::zero()) {
        return Err(Hypothesis::VanishingColumn {
            theta: theta.to_f64_lossy(),
        }
        .into());
    }
    Ok(theta)
}

/// Continuous factorization with default options.
pub fn factor_path<T: Scalar>(path: &MatrixPath<T>, rank: RankRequest) -> Result<(FactorPath<'_, T>, PathCertificate<T>)> {
    factor_path_with(path, rank, &PathOptions::default())
}

/// Continuous factorization: `L̃(t)A(t)R(t) = Iₙ` with `‖L̃(t)‖‖R(t)‖ ≤ 2/θ`.
///
/// Uses `ε = θ²/(18n)`, so the raw factors stay within `C = 1/4` of the
/// identity and `‖L(t)‖‖R(t)‖ ≤ 4/(3θ)` before correction.
pub fn factor_path_with<'a, T: Scalar>(
    path: &'a MatrixPath<T>,
    rank: RankRequest,
    opts: &PathOptions<T>,
) -> Result<(FactorPath<'a, T>, PathCertificate<T>)> {
    let theta = check_path_hypotheses(path)?;
    let allowed = continuous_max_rank(path.ncols(), theta.to_f64_lossy().min(1.0))?;
    let n = resolve_rank(rank, allowed, "floor(theta^(4/3) N^(1/3) / 12)")?;
    let epsilon = continuous_epsilon(n, theta);
    let plan = if n == 1 {
        let (t0, t1) = path.domain();
        CoverPlan {
            n,
            epsilon,
            selection_epsilon: epsilon * opts.cover.selection_margin,
            nodes: vec![t0, t1],
            families: vec![IndexSet::new(vec![0])?],
            bridges: Vec::new(),
            windows: Vec::new(),
        }
    } else {
        plan_cover(path, n, epsilon, &opts.cover)?
    };
    let budget = CorrectionBudget::new(T::of(0.25), T::of(4.0) / (T::of(3.0) * theta))?;
    let fp = FactorPath {
        path,
        plan,
        budget,
        theta,
    };
    let cert = verify_path(path, &fp, opts.grid, opts.tol)?;
    Ok((fp, cert))
}

/// Structural and exact re-certification of a plan against its path,
/// including a re-run of the canonical selections. Returns the problems found.
pub fn audit_plan<T: Scalar>(path: &MatrixPath<T>, plan: &CoverPlan<T>) -> Vec<String> {
    let mut issues = Vec::new();
    let (t0, t1) = path.domain();
    let m = plan.families.len();
    if m == 0 || plan.nodes.len() != m + 1 {
        issues.push(format!("{} nodes for {} families", plan.nodes.len(), m));
        return issues;
    }
    if plan.bridges.len() + 1 != m || plan.windows.len() + 1 != m {
        issues.push(format!(
            "{} bridges and {} windows for {} intervals",
            plan.bridges.len(),
            plan.windows.len(),
            m
        ));
        return issues;
    }
    if plan.nodes[0] != t0 || plan.nodes[m] != t1 {
        issues.push("nodes do not span the path domain".into());
    }
    if plan.nodes.windows(2).any(|w| !(w[0] < w[1])) {
        issues.push("nodes not strictly increasing".into());
        return issues;
    }
    if !(plan.epsilon > T::zero()) {
        issues.push("epsilon not positive".into());
        return issues;
    }
    for (k, f) in plan.families.iter().chain(&plan.bridges).enumerate() {
        if f.len() != plan.n {
            issues.push(format!("set {} has {} indices, expected {}", k + 1, f.len(), plan.n));
        }
        if f.check_width(path.ncols()).is_err() {
            issues.push(format!("set {} has an index beyond {}", k + 1, path.ncols()));
        }
    }
    if !issues.is_empty() {
        return issues;
    }
    for b in 0..plan.bridges.len() {
        let (s, u) = plan.windows[b];
        let (l, tm, r) = (plan.nodes[b], plan.nodes[b + 1], plan.nodes[b + 2]);
        let next_s = plan.windows.get(b + 1).map_or(r, |w| w.0);
        if !(l < s && s < tm && tm < u && u < next_s && u < r) {
            issues.push(format!("window {} ({s}, {u}) breaks interleaving around {tm}", b + 1));
        }
        let g = &plan.bridges[b];
        if !g.is_disjoint(&plan.families[b]) || !g.is_disjoint(&plan.families[b + 1]) {
            issues.push(format!("bridge {} meets a neighbouring family", b + 1));
        }
    }
    if !issues.is_empty() {
        return issues;
    }
    for (k, f) in plan.families.iter().enumerate() {
        match certify_range(path, &pairs_within(f), plan.nodes[k], plan.nodes[k + 1], plan.epsilon) {
            Ok(None) => {}
            Ok(Some(p)) => issues.push(format!(
                "family {} {{{f}}} reaches epsilon on [{}, {}] at {}",
                k + 1,
                plan.nodes[k],
                plan.nodes[k + 1],
                pair_text(Some(p))
            )),
            Err(e) => issues.push(format!("family {}: {e}", k + 1)),
        }
    }
    for (b, g) in plan.bridges.iter().enumerate() {
        let pairs = bridge_pairs(g, &plan.families[b], &plan.families[b + 1]);
        let (s, u) = plan.windows[b];
        match certify_range(path, &pairs, s, u, plan.epsilon) {
            Ok(None) => {}
            Ok(Some(p)) => issues.push(format!(
                "bridge {} {{{g}}} reaches epsilon on its window at {}",
                b + 1,
                pair_text(Some(p))
            )),
            Err(e) => issues.push(format!("bridge {}: {e}", b + 1)),
        }
    }
    for (k, f) in plan.families.iter().enumerate() {
        let canon = path
            .at(plan.nodes[k])
            .and_then(|pt| select_almost_orthogonal(&pt, SelectionParams::new(plan.n, plan.selection_epsilon)));
        match canon {
            Ok(c) if &c == f => {}
            Ok(c) => issues.push(format!("family {} is {{{f}}}, canonical selection gives {{{c}}}", k + 1)),
            Err(e) => issues.push(format!("family {}: canonical selection failed: {e}", k + 1)),
        }
    }
    for (b, g) in plan.bridges.iter().enumerate() {
        let canon = path.at(plan.nodes[b + 1]).and_then(|pt| {
            select_disjoint_extension(
                &pt,
                SelectionParams::new(plan.n, plan.epsilon),
                &plan.families[b],
                &plan.families[b + 1],
            )
        });
        match canon {
            Ok(c) if &c == g => {}
            Ok(c) => issues.push(format!("bridge {} is {{{g}}}, canonical selection gives {{{c}}}", b + 1)),
            Err(e) => issues.push(format!("bridge {}: canonical selection failed: {e}", b + 1)),
        }
    }
    issues
}

/// Largest entrywise disagreement between adjacent case formulas at every
/// `s_m`, `t_m`, `u_m`.
pub fn stitch_gap<T: Scalar>(plan: &CoverPlan<T>, path: &MatrixPath<T>) -> Result<T> {
    let mut gap = T::zero();
    let mut cmp = |t: T, x: Case<T>, y: Case<T>| -> Result<()> {
        let a = raw_factor_case(plan, path, t, x)?;
        let b = raw_factor_case(plan, path, t, y)?;
        gap = gap.max(a.r.max_abs_diff(&b.r)?).max(a.l.max_abs_diff(&b.l)?);
        Ok(())
    };
    for b in 0..plan.bridges.len() {
        let (s, u) = plan.windows[b];
        let tm = plan.nodes[b + 1];
        let one = T::one();
        let zero = T::zero();
        cmp(s, Case::Single { family: b }, Case::Enter { bridge: b, lambda: one })?;
        cmp(tm, Case::Enter { bridge: b, lambda: zero }, Case::Leave { bridge: b, lambda: zero })?;
        cmp(u, Case::Leave { bridge: b, lambda: one }, Case::Single { family: b + 1 })?;
    }
    Ok(gap)
}

/// Result of checking a factor path on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PathCertificate<T> {
    pub grid: usize,
    pub max_dev: T,
    pub max_product: T,
    pub max_raw_dev: T,
    pub max_raw_product: T,
    /// Largest operator-norm change of `L̃` or `R` between adjacent grid points.
    pub max_jump: T,
    pub theta: T,
    pub budget: T,
    pub tol: T,
    /// Where the largest deviation (or the first failure) occurred.
    pub worst_t: T,
    pub plan_ok: bool,
    pub issues: Vec<String>,
    pub nodes: Vec<T>,
    pub windows: Vec<(T, T)>,
    pub pass: bool,
}

/// Grid of `count` uniform points plus all nodes, window endpoints and breakpoints.
pub fn certificate_grid<T: Scalar>(path: &MatrixPath<T>, plan: &CoverPlan<T>, count: usize) -> Vec<T> {
    let (a, b) = path.domain();
    let mut g = uniform(a, b, count.max(2));
    g.extend_from_slice(&plan.nodes);
    for &(s, u) in &plan.windows {
        g.push(s);
        g.push(u);
    }
    g.extend_from_slice(path.breakpoints());
    g.retain(|t| *t >= a && *t <= b);
    g.sort_by(|x, y| x.partial_cmp(y).expect("finite grid"));
    g.dedup();
    g
}

/// Recomputes deviation, norm product and jumps of `fp` on the grid, and audits the plan.
pub fn verify_path<T: Scalar>(
    path: &MatrixPath<T>,
    fp: &FactorPath<'_, T>,
    grid_count: usize,
    tol: T,
) -> Result<PathCertificate<T>> {
    if grid_count < 2 {
        return Err(Error::InvalidArgument("grid needs at least 2 points".into()));
    }
    let theta = path.path_theta();
    let mut cert = PathCertificate {
        grid: grid_count,
        max_dev: T::zero(),
        max_product: T::zero(),
        max_raw_dev: T::zero(),
        max_raw_product: T::zero(),
        max_jump: T::zero(),
        theta,
        budget: (T::of(2.0) / theta).max(fp.budget.corrected_bound()),
        tol,
        worst_t: path.domain().0,
        plan_ok: true,
        issues: audit_plan(path, &fp.plan),
        nodes: fp.plan.nodes.clone(),
        windows: fp.plan.windows.clone(),
        pass: false,
    };
    cert.plan_ok = cert.issues.is_empty();
    let rel = T::of(DEFAULT_REL_TOL);
    let mut prev: Option<(Matrix<T>, Matrix<T>)> = None;
    let mut failed = false;
    for t in certificate_grid(path, &fp.plan, grid_count) {
        let sample = match fp.eval(t) {
            Ok(s) => s,
            Err(e) => {
                cert.issues.push(format!("evaluation failed at t = {}: {e}", fmt_real(t)));
                cert.worst_t = t;
                failed = true;
                break;
            }
        };
        let ar = apply_right(&path.at(t)?, &sample.r);
        let dev = operator_norm(&sample.l.matmul(&ar)?.sub_identity()?, rel)?;
        let raw_dev = operator_norm(&sample.raw_l.matmul(&ar)?.sub_identity()?, rel)?;
        let norm_r = operator_norm(&sample.r, rel)?;
        let product = operator_norm(&sample.l, rel)? * norm_r;
        let raw_product = operator_norm(&sample.raw_l, rel)? * norm_r;
        if !(dev <= cert.max_dev) {
            cert.max_dev = dev;
            cert.worst_t = t;
        }
        cert.max_product = cert.max_product.max(product);
        cert.max_raw_dev = cert.max_raw_dev.max(raw_dev);
        cert.max_raw_product = cert.max_raw_product.max(raw_product);
        if let Some((pl, pr)) = &prev {
            let jl = operator_norm(&sample.l.sub(pl)?, rel)?;
            let jr = operator_norm(&sample.r.sub(pr)?, rel)?;
            cert.max_jump = cert.max_jump.max(jl).max(jr);
        }
        prev = Some((sample.l, sample.r));
    }
    cert.pass = !failed && cert.plan_ok && cert.max_dev <= tol && cert.max_product <= cert.budget + tol;
    Ok(cert)
}

fn fmt_windows<T: Scalar>(w: &[(T, T)]) -> String {
    w.iter()
        .map(|(s, u)| format!("{}:{}", fmt_real(*s), fmt_real(*u)))
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_windows<T: Scalar>(v: &str) -> Result<Vec<(T, T)>> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',')
        .map(|w| {
            let (s, u) = w
                .split_once(':')
                .ok_or_else(|| Error::parse(0, format!("window {w:?} is not s:u")))?;
            Ok((parse_real(s.trim(), 0)?, parse_real(u.trim(), 0)?))
        })
        .collect()
}

fn fmt_sets(sets: &[IndexSet]) -> String {
    sets.iter().map(ToString::to_string).collect::<Vec<_>>().join(";")
}

fn parse_sets(v: &str) -> Result<Vec<IndexSet>> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(';').map(IndexSet::parse).collect()
}

impl<T: Scalar> CoverPlan<T> {
    pub fn to_text(&self) -> String {
        KvWriter::new()
            .str("n", self.n)
            .real("epsilon", self.epsilon)
            .real("selection_epsilon", self.selection_epsilon)
            .reals("nodes", &self.nodes)
            .str("families", fmt_sets(&self.families))
            .str("bridges", fmt_sets(&self.bridges))
            .str("windows", fmt_windows(&self.windows))
            .finish()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let m = KvMap::parse(text)?;
        Ok(CoverPlan {
            n: m.count("n")?,
            epsilon: m.real("epsilon")?,
            selection_epsilon: m.real("selection_epsilon")?,
            nodes: m.reals("nodes")?,
            families: m.with_line("families", parse_sets)?,
            bridges: m.with_line("bridges", parse_sets)?,
            windows: m.with_line("windows", parse_windows)?,
        })
    }
}

impl<T: Scalar> PathCertificate<T> {
    pub fn to_text(&self) -> String {
        let mut w = KvWriter::new();
        w.real("max_dev", self.max_dev)
            .real("max_product", self.max_product)
            .real("max_raw_dev", self.max_raw_dev)
            .real("max_raw_product", self.max_raw_product)
            .real("theta", self.theta)
            .real("budget", self.budget)
            .real("max_jump", self.max_jump)
            .str("grid", self.grid)
            .real("tol", self.tol)
            .real("worst_t", self.worst_t)
            .flag("plan_ok", self.plan_ok)
            .reals("nodes", &self.nodes)
            .str("windows", fmt_windows(&self.windows))
            .flag("pass", self.pass);
        for (k, issue) in self.issues.iter().enumerate() {
            w.str(&format!("issue{}", k + 1), issue.replace('\n', " "));
        }
        w.finish()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let m = KvMap::parse(text)?;
        let mut issues = Vec::new();
        while let Some(v) = m.get(&format!("issue{}", issues.len() + 1)) {
            issues.push(v.to_string());
        }
        Ok(PathCertificate {
            grid: m.count("grid")?,
            max_dev: m.real("max_dev")?,
            max_product: m.real("max_product")?,
            max_raw_dev: m.real("max_raw_dev")?,
            max_raw_product: m.real("max_raw_product")?,
            max_jump: m.real("max_jump")?,
            theta: m.real("theta")?,
            budget: m.real("budget")?,
            tol: m.real("tol")?,
            worst_t: m.real("worst_t")?,
            plan_ok: m.flag("plan_ok")?,
            issues,
            nodes: m.reals("nodes")?,
            windows: m.with_line("windows", parse_windows)?,
            pass: m.flag("pass")?,
        })
    }
}

/// Stored values of `L̃(t)` and `R(t)` at chosen points.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorSampleRecord<T> {
    pub t: T,
    pub l: Matrix<T>,
    pub r: Matrix<T>,
}

/// Blocks of `t=<real>`, `L <rows> <cols>` with its rows, `R <rows> <cols>` with its rows.
pub fn write_samples<T: Scalar>(mut w: impl Write, samples: &[FactorSampleRecord<T>]) -> Result<()> {
    for s in samples {
        writeln!(w, "t={}", fmt_real(s.t))?;
        writeln!(w, "L {} {}", s.l.nrows(), s.l.ncols())?;
        write_block(&mut w, &s.l)?;
        writeln!(w, "R {} {}", s.r.nrows(), s.r.ncols())?;
        write_block(&mut w, &s.r)?;
        writeln!(w)?;
    }
    Ok(())
}

pub fn parse_samples<T: Scalar>(text: &str) -> Result<Vec<FactorSampleRecord<T>>> {
    let mut lines = Lines::new(text);
    let mut out = Vec::new();
    let header = |lines: &mut Lines<'_>, tag: &str| -> Result<(usize, usize)> {
        let (ln, l) = lines
            .next_nonblank()
            .ok_or_else(|| Error::parse(lines.last + 1, format!("missing {tag} header")))?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 3 || toks[0] != tag {
            return Err(Error::parse(ln, format!("expected `{tag} rows cols`")));
        }
        Ok((parse_count(toks[1], ln, "rows")?, parse_count(toks[2], ln, "cols")?))
    };
    while let Some((ln, l)) = lines.next_nonblank() {
        let v = l
            .trim()
            .strip_prefix("t=")
            .ok_or_else(|| Error::parse(ln, "expected t=<real>"))?;
        let t = parse_real(v.trim(), ln)?;
        let (lr, lc) = header(&mut lines, "L")?;
        let l = parse_block(&mut lines, lr, lc)?;
        let (rr, rc) = header(&mut lines, "R")?;
        let r = parse_block(&mut lines, rr, rc)?;
        out.push(FactorSampleRecord { t, l, r });
    }
    Ok(out)
}

/// Largest entrywise distance between stored samples and a fresh evaluation of the plan.
pub fn sample_conformity<T: Scalar>(fp: &FactorPath<'_, T>, samples: &[FactorSampleRecord<T>]) -> Result<T> {
    let mut m = T::zero();
    for s in samples {
        let e = fp.eval(s.t)?;
        m = m.max(e.l.max_abs_diff(&s.l)?).max(e.r.max_abs_diff(&s.r)?);
    }
    Ok(m)
}

/// `‖L A(t) R − Iₙ‖` for stored matrices, independent of any plan.
pub fn sample_deviation<T: Scalar>(path: &MatrixPath<T>, s: &FactorSampleRecord<T>) -> Result<T> {
    let pt = path.at(s.t)?;
    if s.r.nrows() != pt.ncols() || s.l.ncols() != pt.nrows() || s.l.nrows() != s.r.ncols() {
        return Err(Error::DimensionMismatch {
            op: "sample",
            left: s.l.shape(),
            right: s.r.shape(),
        });
    }
    let ar = apply_right(&pt, &s.r);
    operator_norm(&s.l.matmul(&ar)?.sub_identity()?, T::of(DEFAULT_REL_TOL))
}

/// [`verify_path`] for a stored plan, plus stored samples: each sample must
/// match a fresh evaluation within `tol` and factor the identity within `tol`.
pub fn verify_path_artifacts<T: Scalar>(
    path: &MatrixPath<T>,
    plan: CoverPlan<T>,
    samples: &[FactorSampleRecord<T>],
    grid_count: usize,
    tol: T,
) -> Result<PathCertificate<T>> {
    let fp = FactorPath::from_plan(path, plan)?;
    let mut cert = verify_path(path, &fp, grid_count, tol)?;
    for (k, s) in samples.iter().enumerate() {
        let dev = sample_deviation(path, s);
        let conf = sample_conformity(&fp, std::slice::from_ref(s));
        match (dev, conf) {
            (Ok(d), Ok(c)) if d <= tol && c <= tol => {}
            (Ok(d), Ok(c)) => cert.issues.push(format!(
                "sample {} at t = {}: deviation {}, distance to plan {}",
                k + 1,
                fmt_real(s.t),
                fmt_real(d),
                fmt_real(c)
            )),
            (Err(e), _) | (_, Err(e)) => cert.issues.push(format!("sample {}: {e}", k + 1)),
        }
    }
    if !cert.issues.is_empty() {
        cert.pass = false;
    }
    Ok(cert)
}
