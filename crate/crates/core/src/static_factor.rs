//! Factoring the identity through a single matrix.

use crate::error::{Error, Hypothesis, Result};
use crate::kv::{KvMap, KvWriter};
use crate::linalg::{apply_right, gram, inverse, norm_screen, operator_norm, ColumnSource, Matrix, DEFAULT_REL_TOL};
use crate::scalar::Scalar;
use crate::select::{greedy_almost_orthogonal, select_almost_orthogonal, IndexSet, SelectionParams};

/// Default tolerance on certificate comparisons.
pub const CERT_TOL: f64 = 1e-9;
/// Accepted excess of `‖A‖` over one.
pub const NORM_SLACK: f64 = 1e-9;
/// Work allowed for the `‖A‖ ≤ 1` check when the exact route is too expensive.
pub const SCREEN_FLOPS: f64 = 5e8;

/// Relative slack when flooring the rank formulas, so that values like
/// `3.9999999999999996` computed for an exact 4 still round to 4.
const RANK_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct FactorPair<T> {
    /// `n × N`.
    pub l: Matrix<T>,
    /// `N × n`.
    pub r: Matrix<T>,
    pub family: IndexSet,
    /// Whether `L` went through the near-identity inversion.
    pub corrected: bool,
}

impl<T: Scalar> FactorPair<T> {
    pub fn n(&self) -> usize {
        self.r.ncols()
    }
}

/// Recomputed quality of a factorization.
#[derive(Clone, Debug, PartialEq)]
pub struct StaticCertificate<T> {
    /// `‖LAR − Iₙ‖`.
    pub dev: T,
    pub norm_l: T,
    pub norm_r: T,
    pub product: T,
    pub theta: T,
    pub budget: T,
    pub tol: T,
    pub pass: bool,
    pub family: Option<IndexSet>,
    /// Largest entrywise distance to the canonical factors for `family`.
    pub conformity: Option<T>,
    /// Normalization applied to `A` before factoring, if any.
    pub scale: Option<T>,
}

impl<T: Scalar> StaticCertificate<T> {
    /// Records the conformity distance; the certificate passes only if it is within `tol`.
    pub fn with_conformity(mut self, c: T) -> Self {
        self.conformity = Some(c);
        self.pass = self.pass && c <= self.tol;
        self
    }

    pub fn to_text(&self) -> String {
        let mut w = KvWriter::new();
        w.real("dev", self.dev)
            .real("norm_L", self.norm_l)
            .real("norm_R", self.norm_r)
            .real("product", self.product)
            .real("theta", self.theta)
            .real("budget", self.budget)
            .real("tol", self.tol)
            .flag("pass", self.pass);
        if let Some(f) = &self.family {
            w.str("F", f);
        }
        if let Some(c) = self.conformity {
            w.real("conformity", c);
        }
        if let Some(s) = self.scale {
            w.real("scale", s);
        }
        w.finish()
    }

    pub fn parse(text: &str) -> Result<Self> {
        let m = KvMap::parse(text)?;
        let family = match m.get("F") {
            None => None,
            Some(_) => Some(m.with_line("F", IndexSet::parse)?),
        };
        Ok(StaticCertificate {
            dev: m.real("dev")?,
            norm_l: m.real("norm_L")?,
            norm_r: m.real("norm_R")?,
            product: m.real("product")?,
            theta: m.real("theta")?,
            budget: m.real("budget")?,
            tol: m.opt_real("tol")?.unwrap_or(T::of(CERT_TOL)),
            pass: m.flag("pass")?,
            family,
            conformity: m.opt_real("conformity")?,
            scale: m.opt_real("scale")?,
        })
    }
}

/// Constants of the correction step: the raw deviation `C < 1` and the raw
/// norm-product bound `Δ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrectionBudget<T> {
    pub c_dev: T,
    pub norm_budget: T,
}

impl<T: Scalar> CorrectionBudget<T> {
    pub fn new(c_dev: T, norm_budget: T) -> Result<Self> {
        if !(c_dev >= T::zero() && c_dev < T::one()) {
            return Err(Error::InvalidArgument(format!("correction constant C = {c_dev} not in [0, 1)")));
        }
        if !(norm_budget >= T::zero()) {
            return Err(Error::InvalidArgument(format!("norm budget {norm_budget} is negative")));
        }
        Ok(CorrectionBudget { c_dev, norm_budget })
    }

    /// `Δ/(1−C)`, the bound on `‖L̃‖‖R‖` after correction.
    pub fn corrected_bound(&self) -> T {
        self.norm_budget / (T::one() - self.c_dev)
    }
}

/// A-priori bounds on `‖R‖`, `‖L‖` and `‖LAR − Iₙ‖`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FactorEstimates<T> {
    pub norm_r: T,
    pub norm_l: T,
    pub dev: T,
}

/// `(1/θ, 1 + (n−1)^{1/2}ε^{1/2}/θ, nε/θ²)`.
pub fn static_estimates<T: Scalar>(n: usize, theta: T, epsilon: T) -> FactorEstimates<T> {
    FactorEstimates {
        norm_r: theta.recip(),
        norm_l: T::one() + T::of_usize(n.saturating_sub(1)).sqrt() * epsilon.sqrt() / theta,
        dev: T::of_usize(n) * epsilon / (theta * theta),
    }
}

fn check_family<T: Scalar, S: ColumnSource<T> + ?Sized>(a: &S, f: &IndexSet) -> Result<()> {
    if f.is_empty() {
        return Err(Error::EmptyIndexSet);
    }
    f.check_width(a.ncols())
}

fn family_norms<T: Scalar, S: ColumnSource<T> + ?Sized>(a: &S, f: &IndexSet) -> Result<Vec<T>> {
    check_family(a, f)?;
    f.iter()
        .map(|i| {
            let nrm = a.col_norm_sq(i).sqrt();
            if nrm > T::zero() {
                Ok(nrm)
            } else {
                Err(Error::ZeroColumn { index: i })
            }
        })
        .collect()
}

/// `N × n` with column `k` equal to `e_{i_k}/‖a_{i_k}‖`.
pub fn build_r<T: Scalar, S: ColumnSource<T> + ?Sized>(a: &S, f: &IndexSet) -> Result<Matrix<T>> {
    let norms = family_norms(a, f)?;
    let mut r = Matrix::zeros(a.ncols(), f.len());
    for (k, (i, nrm)) in f.iter().zip(norms).enumerate() {
        r[(i, k)] = nrm.recip();
    }
    Ok(r)
}

/// `A·R` for the selector `R` of [`build_r`]: the normalized columns of `F`.
pub fn normalized_columns<T: Scalar, S: ColumnSource<T> + ?Sized>(a: &S, f: &IndexSet) -> Result<Matrix<T>> {
    let norms = family_norms(a, f)?;
    let mut out = Matrix::zeros(a.nrows(), f.len());
    for (k, (i, nrm)) in f.iter().zip(norms).enumerate() {
        let w = nrm.recip();
        for (o, &v) in out.col_mut(k).iter_mut().zip(a.column(i).iter()) {
            *o = w * v;
        }
    }
    Ok(out)
}

/// `(A·R)ᵀ`: row `k` is `a_{i_k}ᵀ/‖a_{i_k}‖`.
pub fn build_l<T: Scalar, S: ColumnSource<T> + ?Sized>(a: &S, f: &IndexSet) -> Result<Matrix<T>> {
    Ok(normalized_columns(a, f)?.transpose())
}

/// Bounds for the pair built from `f`, with `θ` and `ε` taken over `f` only.
pub fn factor_estimates<T: Scalar, S: ColumnSource<T> + ?Sized>(a: &S, f: &IndexSet) -> Result<FactorEstimates<T>> {
    let norms = family_norms(a, f)?;
    let theta = norms.iter().copied().fold(T::infinity(), T::min);
    let eps = crate::select::max_pair_inner(a, f);
    Ok(static_estimates(f.len(), theta, eps))
}

/// Inverse of a matrix close to the identity.
///
/// Fails with [`Error::Divergence`] if `‖S − I‖ ≥ 1` and with
/// [`Error::DeviationAboveHint`] if it exceeds `c_hint`.
pub fn invert_near_identity<T: Scalar>(s: &Matrix<T>, c_hint: T) -> Result<Matrix<T>> {
    let dev = operator_norm(&s.sub_identity()?, T::of(DEFAULT_REL_TOL))?;
    if !(dev < T::one()) {
        return Err(Error::Divergence {
            deviation: dev.to_f64_lossy(),
        });
    }
    if dev > c_hint + T::of(CERT_TOL) {
        return Err(Error::DeviationAboveHint {
            deviation: dev.to_f64_lossy(),
            hint: c_hint.to_f64_lossy(),
        });
    }
    inverse(s)
}

fn checked_theta(theta: f64) -> Result<f64> {
    if !(theta > 0.0) || theta > 1.0 + NORM_SLACK {
        return Err(Error::InvalidArgument(format!("theta = {theta} outside (0, 1]")));
    }
    Ok(theta.min(1.0))
}

fn floor_slack(x: f64) -> usize {
    (x * (1.0 + RANK_SLACK)).floor() as usize
}

/// `floor(θ^{4/3} N^{1/3} / 5)`, the guaranteed static rank; 0 when below one.
pub fn max_rank(big_n: usize, theta: f64) -> Result<usize> {
    let t = checked_theta(theta)?;
    Ok(floor_slack(0.2 * t.powf(4.0 / 3.0) * (big_n as f64).cbrt()))
}

/// `floor(θ^{4/3} N^{1/3} / 12)`, the guaranteed rank along a path.
pub fn continuous_max_rank(big_n: usize, theta: f64) -> Result<usize> {
    let t = checked_theta(theta)?;
    Ok(floor_slack(t.powf(4.0 / 3.0) * (big_n as f64).cbrt() / 12.0))
}

/// `ε = θ²/(9(n−1))`, the static driver's threshold (for `n ≥ 2`).
pub fn static_epsilon<T: Scalar>(n: usize, theta: T) -> T {
    theta * theta / (T::of(9.0) * T::of_usize(n - 1))
}

/// How many columns to factor through.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RankRequest {
    /// The guaranteed rank, or 1 if the formula gives 0.
    Auto,
    /// A rank no larger than `Auto` would pick.
    Exactly(usize),
    /// Any rank; only the construction's own preconditions are enforced.
    Forced(usize),
}

pub(crate) fn resolve_rank(req: RankRequest, allowed: usize, formula: &'static str) -> Result<usize> {
    let cap = allowed.max(1);
    match req {
        RankRequest::Auto => Ok(cap),
        RankRequest::Exactly(0) | RankRequest::Forced(0) => {
            Err(Error::InvalidArgument("rank n must be at least 1".into()))
        }
        RankRequest::Exactly(n) if n > cap => Err(Hypothesis::RankTooLarge {
            requested: n,
            allowed,
            formula,
        }
        .into()),
        RankRequest::Exactly(n) | RankRequest::Forced(n) => Ok(n),
    }
}

/// Checks `‖A‖ ≤ 1 + NORM_SLACK` and `θ > 0`, returning `θ`.
///
/// Above [`crate::linalg::EXACT_DIM_LIMIT`] the norm check is a bounded
/// power iteration: it can only prove a violation, never certify compliance.
pub fn check_hypotheses<T: Scalar>(a: &Matrix<T>) -> Result<T> {
    let (theta, colmax) = (0..a.ncols())
        .map(|j| a.col_norm(j))
        .fold((T::infinity(), T::zero()), |(lo, hi), x| (lo.min(x), hi.max(x)));
    if colmax > T::one() + T::of(NORM_SLACK) {
        return Err(Hypothesis::NormAboveOne {
            norm: colmax.to_f64_lossy(),
            slack: NORM_SLACK,
        }
        .into());
    }
    let est = norm_screen(a, SCREEN_FLOPS);
    if est.value > T::one() + T::of(NORM_SLACK) {
        return Err(Hypothesis::NormAboveOne {
            norm: est.value.to_f64_lossy(),
            slack: NORM_SLACK,
        }
        .into());
    }
    if !(theta > T::zero()) {
        return Err(Hypothesis::VanishingColumn {
            theta: theta.to_f64_lossy(),
        }
        .into());
    }
    Ok(theta)
}

/// The factors for a given family: `R = R_F`, and `L = (L₀AR)^{-1}L₀` for
/// `|F| ≥ 2` (`L = L₀` for a single column).
pub fn canonical_pair<T: Scalar, S: ColumnSource<T> + ?Sized>(a: &S, f: &IndexSet, c_hint: T) -> Result<FactorPair<T>> {
    let r = build_r(a, f)?;
    let ar = normalized_columns(a, f)?;
    let l0 = ar.transpose();
    if f.len() == 1 {
        return Ok(FactorPair {
            l: l0,
            r,
            family: f.clone(),
            corrected: false,
        });
    }
    let s = gram(&ar);
    let sinv = invert_near_identity(&s, c_hint)?;
    Ok(FactorPair {
        l: sinv.matmul(&l0)?,
        r,
        family: f.clone(),
        corrected: true,
    })
}

/// Factors `Iₙ` through `A`: `L·A·R = Iₙ` with `‖L‖‖R‖ ≤ 2/θ`.
///
/// For `n ≥ 2` the family is selected with `ε = θ²/(9(n−1))` and `L` is
/// corrected by the near-identity inversion. The returned certificate is
/// recomputed from the factors by [`verify_static`].
pub fn factor_identity<T: Scalar>(a: &Matrix<T>, rank: RankRequest) -> Result<(FactorPair<T>, StaticCertificate<T>)> {
    let theta = check_hypotheses(a)?;
    let allowed = max_rank(a.ncols(), theta.to_f64_lossy().min(1.0))?;
    let n = resolve_rank(rank, allowed, "floor(theta^(4/3) N^(1/3) / 5)")?;
    let pair = if n == 1 {
        canonical_pair(a, &IndexSet::new(vec![0])?, T::one())?
    } else {
        let eps = static_epsilon(n, theta);
        let f = match rank {
            RankRequest::Forced(_) => greedy_almost_orthogonal(a, n, eps)?,
            _ => select_almost_orthogonal(a, SelectionParams::new(n, eps))?,
        };
        let hint = match rank {
            RankRequest::Forced(_) => T::one(),
            _ => static_estimates(n, theta, eps).dev,
        };
        canonical_pair(a, &f, hint)?
    };
    let cert = verify_static(a, &pair, theta, T::of(CERT_TOL))?;
    Ok((pair, cert))
}

/// Factors through `A/‖A‖` and rescales `L` by `1/‖A‖`; the budget becomes `2‖A‖/θ`.
pub fn scaled_factor<T: Scalar>(a: &Matrix<T>, rank: RankRequest) -> Result<(FactorPair<T>, StaticCertificate<T>)> {
    let s = operator_norm(a, T::of(DEFAULT_REL_TOL))?;
    if s == T::zero() {
        return Err(Error::InvalidArgument("cannot rescale the zero matrix".into()));
    }
    let b = a.scaled(s.recip());
    let (mut pair, _) = factor_identity(&b, rank)?;
    pair.l = pair.l.scaled(s.recip());
    let theta = a.min_col_norm();
    let mut cert = verify_static_budget(a, &pair, theta, T::of(2.0) * s / theta, T::of(CERT_TOL))?;
    cert.scale = Some(s);
    Ok((pair, cert))
}

/// `diag(1, θ, …, θ)`, on which every factorization of rank at least 2 has
/// `‖L‖‖R‖ ≥ 1/θ`.
pub fn witness_lower_bound<T: Scalar>(big_n: usize, theta: T) -> Result<Matrix<T>> {
    if big_n < 2 {
        return Err(Error::InvalidArgument(format!("witness needs N >= 2, got {big_n}")));
    }
    checked_theta(theta.to_f64_lossy())?;
    let mut d = vec![theta; big_n];
    d[0] = T::one();
    Ok(Matrix::diag(&d))
}

/// Recomputes deviation and norms from the factors alone.
pub fn verify_static<T: Scalar>(
    a: &Matrix<T>,
    pair: &FactorPair<T>,
    theta: T,
    tol: T,
) -> Result<StaticCertificate<T>> {
    verify_static_budget(a, pair, theta, T::of(2.0) / theta, tol)
}

/// [`verify_static`] against an explicit norm-product budget.
pub fn verify_static_budget<T: Scalar>(
    a: &Matrix<T>,
    pair: &FactorPair<T>,
    theta: T,
    budget: T,
    tol: T,
) -> Result<StaticCertificate<T>> {
    let (m, big_n) = a.shape();
    let n = pair.r.ncols();
    if pair.r.nrows() != big_n || pair.l.shape() != (n, m) {
        return Err(Error::DimensionMismatch {
            op: "verify_static",
            left: pair.l.shape(),
            right: pair.r.shape(),
        });
    }
    let rel = T::of(DEFAULT_REL_TOL);
    let ar = apply_right(a, &pair.r);
    let lar = pair.l.matmul(&ar)?;
    let dev = operator_norm(&lar.sub_identity()?, rel)?;
    let norm_l = operator_norm(&pair.l, rel)?;
    let norm_r = operator_norm(&pair.r, rel)?;
    let product = norm_l * norm_r;
    Ok(StaticCertificate {
        dev,
        norm_l,
        norm_r,
        product,
        theta,
        budget,
        tol,
        pass: dev <= tol && product <= budget + tol,
        family: Some(pair.family.clone()),
        conformity: None,
        scale: None,
    })
}

/// Largest entrywise distance between `pair` and the canonical factors for
/// its family, optionally for `A` normalized by `scale`.
pub fn conformity<T: Scalar>(a: &Matrix<T>, pair: &FactorPair<T>, scale: Option<T>) -> Result<T> {
    let canon = match scale {
        None => canonical_pair(a, &pair.family, T::one())?,
        Some(s) => {
            let mut c = canonical_pair(&a.scaled(s.recip()), &pair.family, T::one())?;
            c.l = c.l.scaled(s.recip());
            c
        }
    };
    Ok(canon.l.max_abs_diff(&pair.l)?.max(canon.r.max_abs_diff(&pair.r)?))
}

/// Rows carrying the single nonzero entry of each column of `R`, if `R`
/// has the shape of some `R_F`.
pub fn family_from_support<T: Scalar>(r: &Matrix<T>) -> Result<IndexSet> {
    let mut idx = Vec::with_capacity(r.ncols());
    for k in 0..r.ncols() {
        let mut nz = r.col(k).iter().enumerate().filter(|(_, &x)| x != T::zero());
        match (nz.next(), nz.next()) {
            (Some((i, _)), None) => idx.push(i),
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "column {} of R is not a multiple of a coordinate vector",
                    k + 1
                )))
            }
        }
    }
    IndexSet::new(idx)
}

/// Certificate recomputed from `A`, `L`, `R` alone. The family is taken from
/// `family` or read off the support of `R`; without one the conformity is infinite.
pub fn verify_artifacts<T: Scalar>(
    a: &Matrix<T>,
    l: Matrix<T>,
    r: Matrix<T>,
    family: Option<IndexSet>,
    scale: Option<T>,
    tol: T,
) -> Result<StaticCertificate<T>> {
    let theta = a.min_col_norm();
    let budget = T::of(2.0) * scale.unwrap_or(T::one()) / theta;
    let family = match family {
        Some(f) => Some(f),
        None => family_from_support(&r).ok(),
    };
    let pair = FactorPair {
        l,
        r,
        family: family.clone().unwrap_or_else(IndexSet::empty),
        corrected: true,
    };
    let mut cert = verify_static_budget(a, &pair, theta, budget, tol)?;
    cert.scale = scale;
    cert.family = family.clone();
    let c = match family {
        Some(f) if f.len() == pair.n() && f.check_width(a.ncols()).is_ok() => {
            conformity(a, &pair, scale).unwrap_or(T::infinity())
        }
        _ => T::infinity(),
    };
    Ok(cert.with_conformity(c))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn r_and_l_examples() {
        let a = Matrix::<f64>::identity(4);
        let f = IndexSet::from_one_based(&[2, 4]).unwrap();
        let r = build_r(&a, &f).unwrap();
        assert_eq!(r.col(0), &[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(r.col(1), &[0.0, 0.0, 0.0, 1.0]);
        assert_eq!(build_l(&a, &f).unwrap(), r.transpose());

        let b = Matrix::<f64>::identity(2).scaled(2.0);
        let r = build_r(&b, &IndexSet::new(vec![0]).unwrap()).unwrap();
        assert_eq!(r.col(0), &[0.5, 0.0]);

        let c = Matrix::diag(&[1.0, 0.5]);
        let l = build_l(&c, &IndexSet::new(vec![1]).unwrap()).unwrap();
        assert_eq!(l.row(0), vec![0.0, 1.0]);
    }

    #[test]
    fn zero_column_rejected() {
        let a = Matrix::diag(&[1.0, 0.0]);
        assert!(matches!(
            build_r(&a, &IndexSet::new(vec![1]).unwrap()),
            Err(Error::ZeroColumn { index: 1 })
        ));
    }

    #[test]
    fn estimate_examples() {
        let e = factor_estimates(&Matrix::<f64>::identity(4), &IndexSet::new(vec![0, 1]).unwrap()).unwrap();
        assert_eq!((e.norm_r, e.norm_l, e.dev), (1.0, 1.0, 0.0));
        let e = static_estimates(2, 0.5f64, 0.01);
        assert!((e.norm_r - 2.0).abs() < 1e-15);
        assert!((e.norm_l - 1.2).abs() < 1e-15);
        assert!((e.dev - 0.08).abs() < 1e-15);
    }

    #[test]
    fn near_identity_inverse() {
        assert_eq!(
            invert_near_identity(&Matrix::<f64>::identity(3), 0.0).unwrap(),
            Matrix::identity(3)
        );
        let inv = invert_near_identity(&Matrix::<f64>::diag(&[0.9, 1.1]), 0.1).unwrap();
        assert!((inv[(0, 0)] - 1.0 / 0.9).abs() < 1e-15);
        assert!((inv[(1, 1)] - 1.0 / 1.1).abs() < 1e-15);
        assert!(matches!(
            invert_near_identity(&Matrix::diag(&[2.0, 1.0]), 1.0),
            Err(Error::Divergence { .. })
        ));
        assert!(matches!(
            invert_near_identity(&Matrix::diag(&[1.5, 1.0]), 0.2),
            Err(Error::DeviationAboveHint { .. })
        ));
    }

    #[test]
    fn rank_formulas() {
        assert_eq!(max_rank(8000, 1.0).unwrap(), 4);
        assert_eq!(max_rank(125, 1.0).unwrap(), 1);
        assert_eq!(max_rank(125, 0.1).unwrap(), 0);
        assert_eq!(max_rank(1000, 1.0).unwrap(), 2);
        assert_eq!(max_rank(8000, 0.5).unwrap(), 1);
        assert_eq!(max_rank(8000, 1.0 - 1e-16).unwrap(), 4);
        assert!(max_rank(10, 0.0).is_err());
        assert!(max_rank(10, 1.5).is_err());
        assert_eq!(continuous_max_rank(1728, 1.0).unwrap(), 1);
        assert_eq!(continuous_max_rank(8000, 1.0).unwrap(), 1);
        assert_eq!(continuous_max_rank(13824, 1.0).unwrap(), 2);
    }

    #[test]
    fn identity_factorizations() {
        let (pair, cert) = factor_identity(&Matrix::<f64>::identity(125), RankRequest::Auto).unwrap();
        assert_eq!(pair.n(), 1);
        assert!(cert.pass);
        assert_eq!(cert.product, 1.0);
        assert_eq!(cert.dev, 0.0);
    }

    #[test]
    fn hypothesis_failures_are_specific() {
        let a = Matrix::diag(&[1.0, 0.0, 1.0]);
        assert!(matches!(
            factor_identity(&a, RankRequest::Auto),
            Err(Error::Hypothesis(Hypothesis::VanishingColumn { .. }))
        ));
        let b = Matrix::<f64>::identity(3).scaled(1.1);
        assert!(matches!(
            factor_identity(&b, RankRequest::Auto),
            Err(Error::Hypothesis(Hypothesis::NormAboveOne { .. }))
        ));
        let c = Matrix::from_fn(3, 3, |_, _| 0.5f64);
        assert!(matches!(
            factor_identity(&c, RankRequest::Auto),
            Err(Error::Hypothesis(Hypothesis::NormAboveOne { .. }))
        ));
        assert!(matches!(
            factor_identity(&Matrix::<f64>::identity(125), RankRequest::Exactly(2)),
            Err(Error::Hypothesis(Hypothesis::RankTooLarge { .. }))
        ));
    }

    #[test]
    fn scaled_identity() {
        let a = Matrix::<f64>::identity(27).scaled(3.0);
        let (pair, cert) = scaled_factor(&a, RankRequest::Auto).unwrap();
        assert_eq!(pair.n(), 1);
        assert!(cert.pass, "{cert:?}");
        assert!((cert.budget - 2.0).abs() < 1e-12);
        assert!((cert.product - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn artifacts_detect_small_mutations() {
        let a = Matrix::from_fn(40, 40, |i, j| if i == j { 0.9 } else { 0.0005 * ((i * 7 + j * 3) % 5) as f64 });
        let (pair, _) = factor_identity(&a, RankRequest::Forced(2)).unwrap();
        let fresh = verify_artifacts(&a, pair.l.clone(), pair.r.clone(), None, None, 1e-9).unwrap();
        assert!(fresh.pass, "{fresh:?}");
        assert_eq!(fresh.family, Some(pair.family.clone()));
        let mut l = pair.l.clone();
        l[(1, 17)] += 1e-8;
        assert!(!verify_artifacts(&a, l, pair.r.clone(), None, None, 1e-9).unwrap().pass);
        let mut r = pair.r.clone();
        r[(30, 0)] = 1e-8;
        assert!(!verify_artifacts(&a, pair.l.clone(), r, None, None, 1e-9).unwrap().pass);
    }

    #[test]
    fn witness_shape() {
        assert_eq!(witness_lower_bound(3, 0.5f64).unwrap(), Matrix::diag(&[1.0, 0.5, 0.5]));
        assert_eq!(witness_lower_bound(2, 1.0f64).unwrap(), Matrix::identity(2));
        assert!(witness_lower_bound(1, 0.5f64).is_err());
    }

    #[test]
    fn zeroed_l_fails_with_unit_deviation() {
        let a = Matrix::<f64>::identity(125);
        let (mut pair, _) = factor_identity(&a, RankRequest::Auto).unwrap();
        pair.l = Matrix::zeros(1, 125);
        let cert = verify_static(&a, &pair, 1.0, 1e-9).unwrap();
        assert!(!cert.pass);
        assert_eq!(cert.dev, 1.0);
    }

    #[test]
    fn certificate_text_round_trip() {
        let a = Matrix::<f64>::identity(10);
        let (pair, cert) = factor_identity(&a, RankRequest::Forced(2)).unwrap();
        let cert = cert.with_conformity(conformity(&a, &pair, None).unwrap());
        let back = StaticCertificate::<f64>::parse(&cert.to_text()).unwrap();
        assert_eq!(back, cert);
    }
}
