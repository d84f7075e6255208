//! Complex CSR matrices, sparse LU (through `faer`), and small vector helpers.

use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::linalg::LuError;
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Mat, MatMut};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type C64 = Complex64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("matrix is singular to working precision (pivot {pivot})")]
    Singular { pivot: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("matrix must be square ({rows} x {cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("sparse factorization failed: {0}")]
    Backend(String),
}

/// Compressed sparse row matrix with sorted, unique column indices per row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<C64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, C64)>,
    ) -> Self {
        let mut t: Vec<(usize, usize, C64)> = triplets.into_iter().collect();
        t.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; n_rows + 1];
        let mut col_idx = Vec::with_capacity(t.len());
        let mut values: Vec<C64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in t {
            assert!(i < n_rows && j < n_cols, "triplet ({i}, {j}) out of range");
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n_rows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Validates raw CSR arrays.
    pub fn from_raw(
        n_rows: usize,
        n_cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<C64>,
    ) -> Option<Self> {
        let ok = row_ptr.len() == n_rows + 1
            && row_ptr[0] == 0
            && row_ptr.windows(2).all(|w| w[0] <= w[1])
            && *row_ptr.last().unwrap() == col_idx.len()
            && col_idx.len() == values.len()
            && (0..n_rows).all(|i| {
                let r = &col_idx[row_ptr[i]..row_ptr[i + 1]];
                r.windows(2).all(|w| w[0] < w[1]) && r.iter().all(|&j| j < n_cols)
            });
        ok.then_some(Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, n, (0..n).map(|i| (i, i, C64::new(1.0, 0.0))))
    }

    pub fn zeros(n: usize) -> Self {
        Self::from_triplets(n, n, std::iter::empty())
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    /// Storage position of entry `(i, j)`, if present in the pattern.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let start = self.row_ptr[i];
        self.col_idx[start..self.row_ptr[i + 1]]
            .binary_search(&j)
            .ok()
            .map(|p| start + p)
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.position(i, j).map_or(C64::new(0.0, 0.0), |p| self.values[p])
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.n_cols);
        (0..self.n_rows)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_triplets(
            self.n_cols,
            self.n_rows,
            (0..self.n_rows).flat_map(|i| self.row(i).map(move |(j, v)| (j, i, v))),
        )
    }

    /// Plain (non-Hermitian) symmetry, compared exactly.
    pub fn is_symmetric(&self) -> bool {
        self.n_rows == self.n_cols
            && (0..self.n_rows).all(|i| self.row(i).all(|(j, v)| self.get(j, i) == v))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn to_dense(&self) -> Vec<Vec<C64>> {
        let mut d = vec![vec![C64::new(0.0, 0.0); self.n_cols]; self.n_rows];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }

    fn check_square(&self) -> Result<(), LinalgError> {
        if self.n_rows != self.n_cols {
            return Err(LinalgError::NotSquare {
                rows: self.n_rows,
                cols: self.n_cols,
            });
        }
        Ok(())
    }

    /// This matrix read as column-compressed storage, i.e. its transpose.
    fn as_transpose_csc(&self) -> Result<SparseColMatRef<'_, usize, C64>, LinalgError> {
        let sym = SymbolicSparseColMatRef::new_checked(
            self.n_cols,
            self.n_rows,
            &self.row_ptr,
            None,
            &self.col_idx,
        );
        Ok(SparseColMatRef::new(sym, &self.values))
    }
}

/// `y = A x`.
pub fn spmv(a: &CsrMatrix, x: &[C64]) -> Vec<C64> {
    a.mul_vec(x)
}

/// Fill-reducing ordering and symbolic LU for one sparsity pattern.
#[derive(Debug, Clone)]
pub struct SymbolicFactorization {
    inner: SymbolicLu<usize>,
    n: usize,
    nnz: usize,
}

/// Numeric LU of one matrix; reusable for any number of solves.
#[derive(Debug)]
pub struct Factorization {
    lu: Lu<usize, C64>,
    n: usize,
}

fn backend(e: impl std::fmt::Debug) -> LinalgError {
    LinalgError::Backend(format!("{e:?}"))
}

fn sequential_backend() {
    static ONCE: std::sync::Once = std::sync::Once::new();
    ONCE.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
}

pub fn analyze(a: &CsrMatrix) -> Result<SymbolicFactorization, LinalgError> {
    sequential_backend();
    a.check_square()?;
    let csc = a.as_transpose_csc()?;
    let inner = SymbolicLu::try_new(csc.symbolic()).map_err(backend)?;
    Ok(SymbolicFactorization {
        inner,
        n: a.n_rows,
        nnz: a.nnz(),
    })
}

pub fn factorize(a: &CsrMatrix) -> Result<Factorization, LinalgError> {
    factorize_with(&analyze(a)?, a)
}

/// Numeric factorization reusing `symbolic`, which must come from a matrix
/// with the same pattern.
pub fn factorize_with(
    symbolic: &SymbolicFactorization,
    a: &CsrMatrix,
) -> Result<Factorization, LinalgError> {
    sequential_backend();
    a.check_square()?;
    if a.n_rows != symbolic.n || a.nnz() != symbolic.nnz {
        return Err(LinalgError::Dimension {
            expected: symbolic.n,
            got: a.n_rows,
        });
    }
    if a.values.iter().any(|v| !v.is_finite()) {
        return Err(LinalgError::Singular { pivot: 0 });
    }
    let csc = a.as_transpose_csc()?;
    let lu = Lu::try_new_with_symbolic(symbolic.inner.clone(), csc).map_err(|e| match e {
        LuError::SymbolicSingular { index } => LinalgError::Singular { pivot: index },
        other => backend(other),
    })?;
    let fac = Factorization { lu, n: a.n_rows };
    // zero pivots surface as non-finite output
    let probe = random_vector(fac.n, 0x5eed);
    fac.solve(&probe)?;
    Ok(fac)
}

impl Factorization {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[C64]) -> Result<Vec<C64>, LinalgError> {
        if b.len() != self.n {
            return Err(LinalgError::Dimension {
                expected: self.n,
                got: b.len(),
            });
        }
        let mut m = Mat::<C64>::from_fn(self.n, 1, |i, _| b[i]);
        self.solve_mat(m.as_mut())?;
        Ok((0..self.n).map(|i| m[(i, 0)]).collect())
    }

    /// Solves for several right-hand sides at once (one per entry).
    pub fn solve_many(&self, rhs: &[Vec<C64>]) -> Result<Vec<Vec<C64>>, LinalgError> {
        if let Some(b) = rhs.iter().find(|b| b.len() != self.n) {
            return Err(LinalgError::Dimension {
                expected: self.n,
                got: b.len(),
            });
        }
        let mut m = Mat::<C64>::from_fn(self.n, rhs.len(), |i, j| rhs[j][i]);
        self.solve_mat(m.as_mut())?;
        Ok((0..rhs.len())
            .map(|j| (0..self.n).map(|i| m[(i, j)]).collect())
            .collect())
    }

    fn solve_mat(&self, mut m: MatMut<'_, C64>) -> Result<(), LinalgError> {
        use faer::linalg::solvers::Solve;
        // The factor is of Aᵀ (CSR read as CSC), so solve with its transpose.
        self.lu.solve_transpose_in_place(m.as_mut());
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                if !m[(i, j)].is_finite() {
                    return Err(LinalgError::Singular { pivot: i });
                }
            }
        }
        Ok(())
    }
}

/// Deterministic vector with independent real and imaginary parts in `[-1, 1]`.
pub fn random_vector(n: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| C64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)))
        .collect()
}

pub fn norm2(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Unconjugated bilinear product `xᵀy`.
pub fn dot(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Hermitian product `xᴴy`.
pub fn dotc(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

/// `y += a x`.
pub fn axpy(a: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

pub fn scale(x: &mut [C64], a: C64) {
    for v in x.iter_mut() {
        *v *= a;
    }
}

/// Scales `x` to unit 2-norm and returns the old norm.
pub fn normalize(x: &mut [C64]) -> f64 {
    let n = norm2(x);
    if n > 0.0 {
        scale(x, C64::new(1.0 / n, 0.0));
    }
    n
}

/// LU with partial pivoting of a small dense matrix.
#[derive(Debug)]
pub struct DenseLu {
    lu: faer::linalg::solvers::PartialPivLu<C64>,
    n: usize,
}

impl DenseLu {
    /// `a` is row-major `n × n`.
    pub fn new(n: usize, a: &[C64]) -> Result<Self, LinalgError> {
        if a.len() != n * n {
            return Err(LinalgError::Dimension {
                expected: n * n,
                got: a.len(),
            });
        }
        sequential_backend();
        let m = Mat::<C64>::from_fn(n, n, |i, j| a[i * n + j]);
        let lu = m.partial_piv_lu();
        let d = Self { lu, n };
        d.solve(&random_vector(n, 0x5eed))?;
        Ok(d)
    }

    pub fn solve(&self, b: &[C64]) -> Result<Vec<C64>, LinalgError> {
        use faer::linalg::solvers::Solve;
        if b.len() != self.n {
            return Err(LinalgError::Dimension {
                expected: self.n,
                got: b.len(),
            });
        }
        let mut m = Mat::<C64>::from_fn(self.n, 1, |i, _| b[i]);
        self.lu.solve_in_place(m.as_mut());
        let x: Vec<C64> = (0..self.n).map(|i| m[(i, 0)]).collect();
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(LinalgError::Singular { pivot: i });
        }
        Ok(x)
    }
}
