//! Dense symmetric positive-definite matrix operations.
//!
//! Everything that needs an inverse goes through a Cholesky factor and
//! triangular solves. The positive-definiteness test is relative: a pivot must
//! exceed `PD_TOLERANCE` times the largest diagonal entry.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative pivot tolerance for positive definiteness.
pub const PD_TOLERANCE: f64 = 1e-12;

/// Absolute tolerance used when validating symmetry of parsed matrices.
pub const SYMMETRY_TOLERANCE: f64 = 1e-9;

/// A real symmetric matrix. Storage is kept exactly symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    inner: DMatrix<f64>,
}

impl SymMatrix {
    /// Symmetrizes `m` by averaging it with its transpose.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidIndexSet("matrix order must be at least 1".into()));
        }
        let n = m.nrows();
        let inner = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                m[(i, i)]
            } else {
                0.5 * (m[(i, j)] + m[(j, i)])
            }
        });
        Ok(Self { inner })
    }

    /// Builds a matrix from the lower triangle produced by `f(i, j)` with `i >= j`.
    pub fn from_lower_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(n >= 1, "matrix order must be at least 1");
        let mut inner = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = f(i, j);
                inner[(i, j)] = v;
                inner[(j, i)] = v;
            }
        }
        Self { inner }
    }

    /// Row-major construction. Rows must be symmetric within `SYMMETRY_TOLERANCE`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidIndexSet("matrix order must be at least 1".into()));
        }
        for r in rows {
            if r.len() != n {
                return Err(Error::DimensionMismatch { expected: n, found: r.len() });
            }
        }
        let m = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        check_symmetric(&m)?;
        Self::from_matrix(m)
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, c: f64) -> Self {
        assert!(n >= 1, "matrix order must be at least 1");
        Self { inner: DMatrix::identity(n, n) * c }
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "matrix order must be at least 1");
        Self { inner: DMatrix::zeros(n, n) }
    }

    /// `x xᵀ`
    pub fn outer(x: &DVector<f64>) -> Self {
        Self::from_lower_fn(x.len(), |i, j| x[i] * x[j])
    }

    pub fn order(&self) -> usize {
        self.inner.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.inner[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.inner
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.inner
    }

    pub fn max_diagonal(&self) -> f64 {
        self.inner.diagonal().iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Principal submatrix on `idx`.
    pub fn submatrix(&self, idx: &IndexSet) -> SymMatrix {
        let m = idx.members();
        Self::from_lower_fn(m.len(), |i, j| self.inner[(m[i], m[j])])
    }

    /// Rectangular block with rows `rows` and columns `cols`.
    pub fn block(&self, rows: &IndexSet, cols: &IndexSet) -> DMatrix<f64> {
        let (r, c) = (rows.members(), cols.members());
        DMatrix::from_fn(r.len(), c.len(), |i, j| self.inner[(r[i], c[j])])
    }

    pub fn add(&self, other: &SymMatrix) -> SymMatrix {
        SymMatrix { inner: &self.inner + &other.inner }
    }

    pub fn scale(&self, c: f64) -> SymMatrix {
        SymMatrix { inner: &self.inner * c }
    }

    /// Parses the headerless CSV matrix format: n rows of n decimal columns.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut row = Vec::new();
            for (col, cell) in line.split(',').enumerate() {
                let v: f64 = cell.trim().parse().map_err(|_| Error::Parse {
                    line: lineno + 1,
                    column: col + 1,
                    message: format!("not a number: {:?}", cell.trim()),
                })?;
                if !v.is_finite() {
                    return Err(Error::NonFinite { row: lineno + 1, column: col + 1 });
                }
                row.push(v);
            }
            rows.push(row);
        }
        Self::from_rows(&rows)
    }

    /// Max absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &SymMatrix) -> f64 {
        assert_eq!(self.order(), other.order());
        (&self.inner - &other.inner).iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..i {
            if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOLERANCE {
                return Err(Error::Parse {
                    line: i + 1,
                    column: j + 1,
                    message: format!(
                        "matrix is not symmetric: {} vs {}",
                        m[(i, j)],
                        m[(j, i)]
                    ),
                });
            }
        }
    }
    Ok(())
}

/// Ascending list of distinct coordinate indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct IndexSet(Vec<usize>);

impl IndexSet {
    /// Sorts and validates `members` against the coordinate count `n`.
    pub fn new(mut members: Vec<usize>, n: usize) -> Result<Self> {
        members.sort_unstable();
        if members.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidIndexSet(format!("duplicate index in {members:?}")));
        }
        if let Some(&last) = members.last() {
            if last >= n {
                return Err(Error::InvalidIndexSet(format!("index {last} out of range 0..{n}")));
            }
        }
        Ok(Self(members))
    }

    /// Caller guarantees the input is strictly increasing.
    pub(crate) fn from_sorted_unchecked(members: Vec<usize>) -> Self {
        debug_assert!(members.windows(2).all(|w| w[0] < w[1]));
        Self(members)
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn all(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub fn members(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0.binary_search(&i).is_ok()
    }

    pub fn complement(&self, n: usize) -> IndexSet {
        IndexSet((0..n).filter(|i| !self.contains(*i)).collect())
    }

    /// Position of coordinate `i` within the set.
    pub fn position(&self, i: usize) -> Option<usize> {
        self.0.binary_search(&i).ok()
    }

    pub fn with(&self, i: usize) -> IndexSet {
        let mut v = self.0.clone();
        if let Err(pos) = v.binary_search(&i) {
            v.insert(pos, i);
        }
        IndexSet(v)
    }

    pub fn without(&self, i: usize) -> IndexSet {
        IndexSet(self.0.iter().copied().filter(|&j| j != i).collect())
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }
}

/// Lower Cholesky factor `L` with `L Lᵀ = M`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    lower: DMatrix<f64>,
}

impl Cholesky {
    pub fn new(m: &SymMatrix) -> Result<Self> {
        let n = m.order();
        let a = m.as_matrix();
        let tol = PD_TOLERANCE * m.max_diagonal().max(0.0);
        let mut l = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > tol) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { index: j, pivot: d });
            }
            let djj = d.sqrt();
            l[(j, j)] = djj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(Self { lower: l })
    }

    pub fn lower(&self) -> &DMatrix<f64> {
        &self.lower
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self.lower.diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }

    /// `L⁻¹ B`
    pub fn solve_lower(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.lower
            .solve_lower_triangular(b)
            .expect("Cholesky factor has a positive diagonal")
    }

    /// `M⁻¹ B`
    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let y = self.solve_lower(b);
        self.lower
            .tr_solve_lower_triangular(&y)
            .expect("Cholesky factor has a positive diagonal")
    }

    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        let m = DMatrix::from_column_slice(b.len(), 1, b.as_slice());
        DVector::from_column_slice(self.solve(&m).as_slice())
    }

    pub fn inverse(&self) -> SymMatrix {
        let n = self.lower.nrows();
        let linv = self.solve_lower(&DMatrix::identity(n, n));
        SymMatrix::from_matrix(linv.tr_mul(&linv)).expect("square")
    }

    /// Squared Mahalanobis norm `xᵀ M⁻¹ x`.
    pub fn inv_quad_form(&self, x: &DVector<f64>) -> f64 {
        let m = DMatrix::from_column_slice(x.len(), 1, x.as_slice());
        self.solve_lower(&m).iter().map(|v| v * v).sum()
    }
}

/// Cholesky factor and `log |M|`.
pub fn cholesky_logdet(m: &SymMatrix) -> Result<(DMatrix<f64>, f64)> {
    let c = Cholesky::new(m)?;
    let ld = c.log_det();
    Ok((c.lower, ld))
}

pub fn log_det(m: &SymMatrix) -> Result<f64> {
    Ok(Cholesky::new(m)?.log_det())
}

pub fn is_positive_definite(m: &SymMatrix) -> bool {
    Cholesky::new(m).is_ok()
}

pub fn inverse(m: &SymMatrix) -> Result<SymMatrix> {
    Ok(Cholesky::new(m)?.inverse())
}

fn proper_block(block1: &IndexSet, n: usize) -> Result<IndexSet> {
    if block1.is_empty() {
        return Err(Error::EmptySubset);
    }
    if block1.members().last().is_some_and(|&i| i >= n) {
        return Err(Error::InvalidIndexSet("block index out of range".into()));
    }
    let block2 = block1.complement(n);
    if block2.is_empty() {
        return Err(Error::InvalidIndexSet("block 1 must be a proper subset".into()));
    }
    Ok(block2)
}

/// `M₁₁ − M₁₂ M₂₂⁻¹ M₁₂ᵀ` where block 2 is the sorted complement of `block1`.
pub fn schur_complement(m: &SymMatrix, block1: &IndexSet) -> Result<SymMatrix> {
    let block2 = proper_block(block1, m.order())?;
    let m22 = Cholesky::new(&m.submatrix(&block2))?;
    let m21 = m.block(&block2, block1);
    let x = m22.solve_lower(&m21);
    let m11 = m.submatrix(block1).into_matrix();
    SymMatrix::from_matrix(m11 - x.tr_mul(&x))
}

/// `((M⁻¹)_YY)⁻¹`, computed through the full inverse.
pub fn submatrix_inverse_marginal(m: &SymMatrix, y: &IndexSet) -> Result<SymMatrix> {
    if y.is_empty() {
        return Err(Error::EmptySubset);
    }
    let chol = Cholesky::new(m)?;
    if y.len() == m.order() {
        return Ok(m.clone());
    }
    let minv = chol.inverse();
    inverse(&minv.submatrix(y))
}
