//! Counting sets and greedy selection of almost-orthogonal column families.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{dot, ColumnSource};
use crate::scalar::Scalar;

/// Relative slack allowed on the counting preconditions.
pub const BORDERLINE_SLACK: f64 = 1e-12;

/// Sorted set of distinct column indices.
///
/// Stored 0-based. Text forms (`Display`, [`IndexSet::parse`]) are 1-based,
/// matching the usual mathematical numbering of columns.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct IndexSet {
    idx: Vec<usize>,
}

impl IndexSet {
    pub fn empty() -> Self {
        IndexSet { idx: Vec::new() }
    }

    /// 0-based indices; must be strictly increasing.
    pub fn new(idx: Vec<usize>) -> Result<Self> {
        if idx.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(format!(
                "index set must be strictly increasing: {idx:?}"
            )));
        }
        Ok(IndexSet { idx })
    }

    pub fn from_one_based(idx: &[usize]) -> Result<Self> {
        if idx.contains(&0) {
            return Err(Error::InvalidArgument("1-based index 0".into()));
        }
        Self::new(idx.iter().map(|i| i - 1).collect())
    }

    pub fn to_one_based(&self) -> Vec<usize> {
        self.idx.iter().map(|i| i + 1).collect()
    }

    /// Parses a comma-separated 1-based list such as `1,3,7`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Self::empty());
        }
        let v = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidArgument(format!("bad index {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_one_based(&v)
    }

    pub fn len(&self) -> usize {
        self.idx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.idx.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.idx
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.idx.iter().copied()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.idx.binary_search(&i).is_ok()
    }

    pub fn is_disjoint(&self, other: &IndexSet) -> bool {
        !self.idx.iter().any(|&i| other.contains(i))
    }

    pub fn union(&self, other: &IndexSet) -> IndexSet {
        let mut v: Vec<usize> = self.idx.iter().chain(&other.idx).copied().collect();
        v.sort_unstable();
        v.dedup();
        IndexSet { idx: v }
    }

    /// Fails if any index is `>= width`.
    pub fn check_width(&self, width: usize) -> Result<()> {
        match self.idx.last() {
            Some(&i) if i >= width => Err(Error::IndexOutOfRange { index: i, width }),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, i) in self.idx.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", i + 1)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SelectionParams<T> {
    pub n: usize,
    pub epsilon: T,
}

impl<T: Scalar> SelectionParams<T> {
    pub fn new(n: usize, epsilon: T) -> Self {
        SelectionParams { n, epsilon }
    }

    /// Checks `ε > 0`, `n ≥ 1`, `ε < (n−1)^{-1/2}` and `width ≥ factor·n/ε²`.
    fn check(&self, width: usize, factor: f64) -> Result<()> {
        let eps = self.epsilon.to_f64_lossy();
        if self.n == 0 {
            return Err(Error::InvalidArgument("family size n must be at least 1".into()));
        }
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::InvalidArgument(format!("epsilon must be positive, got {eps}")));
        }
        if self.n >= 2 {
            let limit = 1.0 / ((self.n - 1) as f64).sqrt();
            if eps >= limit {
                return Err(Error::Infeasible(format!(
                    "epsilon {eps} is not below 1/sqrt(n-1) = {limit} for n = {}",
                    self.n
                )));
            }
        }
        let need = factor * self.n as f64 / (eps * eps);
        if (width as f64) < need * (1.0 - BORDERLINE_SLACK) {
            return Err(Error::Infeasible(format!(
                "N = {width} is below {factor}n/eps^2 = {need} (n = {}, eps = {eps})",
                self.n
            )));
        }
        Ok(())
    }
}

/// `B_i^ε = { j : |⟨a_i, a_j⟩| ≥ ε }` by exact scan; may contain `i` itself.
pub fn big_inner_set<T: Scalar, S: ColumnSource<T> + ?Sized>(a: &S, i: usize, epsilon: T) -> Result<IndexSet> {
    let width = a.ncols();
    if i >= width {
        return Err(Error::IndexOutOfRange { index: i, width });
    }
    let ci = a.column(i);
    let idx = (0..width)
        .filter(|&j| {
            let v = if j == i { a.col_norm_sq(i) } else { dot(&ci, &a.column(j)) };
            v.abs() >= epsilon
        })
        .collect();
    Ok(IndexSet { idx })
}

/// Lowest-index greedy pick of `n` columns outside `blockers`, skipping every
/// column in `B^ε` of a blocker or of an earlier pick. No preconditions are
/// checked.
///
/// Membership in the `B^ε` sets is decided only for the columns the scan
/// reaches, which selects the same family as excluding the full sets first.
pub fn greedy_family<T: Scalar, S: ColumnSource<T> + ?Sized>(
    a: &S,
    n: usize,
    epsilon: T,
    blockers: &[usize],
) -> Result<IndexSet> {
    let mut pivots: Vec<_> = blockers.iter().map(|&i| a.column(i)).collect();
    let mut chosen = Vec::with_capacity(n);
    for j in 0..a.ncols() {
        if chosen.len() == n {
            break;
        }
        if blockers.contains(&j) {
            continue;
        }
        let cj = a.column(j);
        if pivots.iter().all(|p| !(dot(p, &cj).abs() >= epsilon)) {
            chosen.push(j);
            pivots.push(cj);
        }
    }
    if chosen.len() < n {
        return Err(Error::Exhausted {
            chosen: chosen.len(),
            needed: n,
        });
    }
    Ok(IndexSet { idx: chosen })
}

/// Greedy almost-orthogonal family: the first column, then repeatedly the
/// lowest index outside the chosen columns and their `B^ε` sets.
///
/// Expects `‖A‖ ≤ 1`, which is not rechecked here.
pub fn select_almost_orthogonal<T: Scalar, S: ColumnSource<T> + ?Sized>(
    a: &S,
    params: SelectionParams<T>,
) -> Result<IndexSet> {
    let width = a.ncols();
    if width == 0 {
        return Err(Error::EmptyIndexSet);
    }
    if params.n == 1 {
        return Ok(IndexSet { idx: vec![0] });
    }
    params.check(width, 1.0)?;
    greedy_almost_orthogonal(a, params.n, params.epsilon)
}

/// The greedy rule of [`select_almost_orthogonal`] without the counting
/// preconditions. May fail with [`Error::Exhausted`].
pub fn greedy_almost_orthogonal<T: Scalar, S: ColumnSource<T> + ?Sized>(
    a: &S,
    n: usize,
    epsilon: T,
) -> Result<IndexSet> {
    greedy_family(a, n, epsilon, &[])
}

/// A family disjoint from `f1 ∪ f2` and almost orthogonal to it.
///
/// The ground set drops `f1 ∪ f2` and every `B_i^ε` with `i` in the union;
/// selection inside it is the same greedy rule.
pub fn select_disjoint_extension<T: Scalar, S: ColumnSource<T> + ?Sized>(
    a: &S,
    params: SelectionParams<T>,
    f1: &IndexSet,
    f2: &IndexSet,
) -> Result<IndexSet> {
    let width = a.ncols();
    if f1.len() != params.n || f2.len() != params.n {
        return Err(Error::InvalidArgument(format!(
            "given families have sizes {} and {}, expected {}",
            f1.len(),
            f2.len(),
            params.n
        )));
    }
    f1.check_width(width)?;
    f2.check_width(width)?;
    params.check(width, 5.0)?;
    greedy_disjoint_extension(a, params.n, params.epsilon, f1, f2)
}

/// The greedy rule of [`select_disjoint_extension`] without the counting
/// preconditions.
pub fn greedy_disjoint_extension<T: Scalar, S: ColumnSource<T> + ?Sized>(
    a: &S,
    n: usize,
    epsilon: T,
    f1: &IndexSet,
    f2: &IndexSet,
) -> Result<IndexSet> {
    let width = a.ncols();
    f1.check_width(width)?;
    f2.check_width(width)?;
    greedy_family(a, n, epsilon, f1.union(f2).as_slice())
}

/// Largest `|⟨a_i, a_j⟩|` over distinct pairs of `f`.
pub fn max_pair_inner<T: Scalar, S: ColumnSource<T> + ?Sized>(a: &S, f: &IndexSet) -> T {
    let cols: Vec<_> = f.iter().map(|i| a.column(i)).collect();
    let mut m = T::zero();
    for p in 0..cols.len() {
        for q in 0..p {
            m = m.max(dot(&cols[p], &cols[q]).abs());
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    fn e(n: usize, k: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[k] = 1.0;
        v
    }

    #[test]
    fn display_and_parse_are_one_based() {
        let s = IndexSet::new(vec![0, 2, 6]).unwrap();
        assert_eq!(s.to_string(), "1,3,7");
        assert_eq!(IndexSet::parse("1, 3,7").unwrap(), s);
        assert!(IndexSet::parse("0").is_err());
        assert!(IndexSet::parse("3,1").is_err());
        assert!(IndexSet::new(vec![1, 1]).is_err());
    }

    #[test]
    fn big_set_examples() {
        let a = Matrix::<f64>::identity(4);
        assert_eq!(big_inner_set(&a, 0, 0.5).unwrap().as_slice(), &[0]);
        let b = Matrix::from_columns(&[e(3, 0), e(3, 0), e(3, 1)]).unwrap();
        assert_eq!(big_inner_set(&b, 0, 0.5).unwrap().as_slice(), &[0, 1]);
        assert!(matches!(big_inner_set(&b, 3, 0.5), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn select_examples() {
        let a = Matrix::<f64>::identity(50);
        let f = select_almost_orthogonal(&a, SelectionParams::new(3, 0.3)).unwrap();
        assert_eq!(f.as_slice(), &[0, 1, 2]);
        // N = 4 is below n/eps^2 = 8: the checked entry point refuses, the
        // bare greedy rule still gives the expected pair.
        let b = Matrix::from_columns(&[e(4, 0), e(4, 0), e(4, 1), e(4, 2)]).unwrap();
        assert!(matches!(
            select_almost_orthogonal(&b, SelectionParams::new(2, 0.5)),
            Err(Error::Infeasible(_))
        ));
        let f = greedy_almost_orthogonal(&b, 2, 0.5).unwrap();
        assert_eq!(f.to_one_based(), vec![1, 3]);
        assert_eq!(
            select_almost_orthogonal(&b, SelectionParams::new(1, 0.5)).unwrap().as_slice(),
            &[0]
        );
    }

    #[test]
    fn select_preconditions() {
        let a = Matrix::<f64>::identity(10);
        // N < n/eps^2
        assert!(matches!(
            select_almost_orthogonal(&a, SelectionParams::new(2, 0.1)),
            Err(Error::Infeasible(_))
        ));
        // eps >= 1/sqrt(n-1)
        assert!(matches!(
            select_almost_orthogonal(&a, SelectionParams::new(2, 1.0)),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn extension_examples() {
        let a = Matrix::<f64>::identity(20);
        let f1 = IndexSet::from_one_based(&[1, 2]).unwrap();
        let f2 = IndexSet::from_one_based(&[3, 4]).unwrap();
        // 20 < 5n/eps^2 here, so only the bare greedy rule applies.
        assert!(select_disjoint_extension(&a, SelectionParams::new(2, 0.3), &f1, &f2).is_err());
        let g = greedy_disjoint_extension(&a, 2, 0.3, &f1, &f2).unwrap();
        assert_eq!(g.to_one_based(), vec![5, 6]);
        let mut b = a.clone();
        b.col_mut(4).copy_from_slice(&e(20, 0));
        let g = greedy_disjoint_extension(&b, 2, 0.3, &f1, &f2).unwrap();
        assert_eq!(g.to_one_based(), vec![6, 7]);
        let big = Matrix::<f64>::identity(120);
        let g = select_disjoint_extension(&big, SelectionParams::new(2, 0.3), &f1, &f2).unwrap();
        assert_eq!(g.to_one_based(), vec![5, 6]);
    }

    #[test]
    fn extension_needs_five_n_over_eps_sq() {
        let a = Matrix::<f64>::identity(20);
        let f1 = IndexSet::from_one_based(&[1, 2]).unwrap();
        let f2 = IndexSet::from_one_based(&[3, 4]).unwrap();
        assert!(select_disjoint_extension(&a, SelectionParams::new(2, 0.71), &f1, &f2).is_ok());
        assert!(matches!(
            select_disjoint_extension(&a, SelectionParams::new(2, 0.69), &f1, &f2),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn borderline_precondition_accepted() {
        // N = n/eps^2 exactly (up to rounding)
        let a = Matrix::<f64>::identity(200);
        let eps = 0.1;
        assert!(select_almost_orthogonal(&a, SelectionParams::new(2, eps)).is_ok());
    }
}
