//! Compressed sparse matrices and a direct solver with symbolic reuse.

use faer::prelude::*;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{Argsort, Pair, SparseColMat, SymbolicSparseColMat};

use crate::error::{Error, Result};

/// Coordinate-format accumulator; duplicate entries are summed on compression.
#[derive(Clone, Debug, Default)]
pub struct Triplets {
    pub n: usize,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl Triplets {
    pub fn new(n: usize) -> Self {
        Triplets {
            n,
            ..Default::default()
        }
    }

    pub fn with_capacity(n: usize, cap: usize) -> Self {
        Triplets {
            n,
            rows: Vec::with_capacity(cap),
            cols: Vec::with_capacity(cap),
            vals: Vec::with_capacity(cap),
        }
    }

    #[inline]
    pub fn push(&mut self, row: usize, col: usize, val: f64) {
        self.rows.push(row);
        self.cols.push(col);
        self.vals.push(val);
    }

    fn pattern(&self) -> Vec<Pair<usize, usize>> {
        self.rows
            .iter()
            .zip(&self.cols)
            .map(|(&row, &col)| Pair { row, col })
            .collect()
    }

    pub fn to_matrix(&self) -> SparseMatrix {
        let (symbolic, argsort) =
            SymbolicSparseColMat::try_new_from_indices(self.n, self.n, &self.pattern())
                .expect("triplet indices are in range");
        SparseMatrix {
            inner: SparseColMat::new_from_argsort(symbolic, &argsort, &self.vals)
                .expect("allocation"),
        }
    }
}

/// Square sparse matrix in compressed-column layout.
#[derive(Clone, Debug)]
pub struct SparseMatrix {
    inner: SparseColMat<usize, f64>,
}

impl SparseMatrix {
    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn nnz(&self) -> usize {
        self.inner.val().len()
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        let sym = self.inner.symbolic();
        let range = sym.col_ptr()[col]..sym.col_ptr()[col + 1];
        sym.row_idx()[range.clone()]
            .iter()
            .zip(&self.inner.val()[range])
            .filter(|(&r, _)| r == row)
            .map(|(_, &v)| v)
            .sum()
    }

    /// Calls `f(row, col, value)` for every stored entry.
    pub fn for_each(&self, mut f: impl FnMut(usize, usize, f64)) {
        let sym = self.inner.symbolic();
        let (ptr, idx, val) = (sym.col_ptr(), sym.row_idx(), self.inner.val());
        for col in 0..self.dim() {
            for k in ptr[col]..ptr[col + 1] {
                f(idx[k], col, val[k]);
            }
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.for_each(|r, c, v| y[r] += v * x[c]);
        y
    }

    /// `xᵀ A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut s = 0.0;
        self.for_each(|r, c, v| s += x[r] * v * y[c]);
        s
    }

    pub fn max_abs(&self) -> f64 {
        self.inner.val().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |A - Aᵀ|` over stored entries.
    pub fn max_asymmetry(&self) -> f64 {
        let mut m: f64 = 0.0;
        self.for_each(|r, c, v| m = m.max((v - self.get(c, r)).abs()));
        m
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut d = vec![vec![0.0; n]; n];
        self.for_each(|r, c, v| d[r][c] += v);
        d
    }

    pub fn as_faer(&self) -> &SparseColMat<usize, f64> {
        &self.inner
    }
}

struct CachedPattern {
    rows: Vec<usize>,
    cols: Vec<usize>,
    symbolic: SymbolicSparseColMat<usize>,
    argsort: Argsort<usize>,
    lu: SymbolicLu<usize>,
}

/// Sparse LU solver that keeps the symbolic analysis while the sparsity
/// pattern of successive systems stays the same.
#[derive(Default)]
pub struct DirectSolver {
    cache: Option<CachedPattern>,
}

impl DirectSolver {
    pub fn new() -> Self {
        Self::default()
    }

    /// Solves `A x = b` with one step of iterative refinement. Fails when the
    /// factorization breaks down or the relative residual exceeds `1e-8`.
    pub fn solve(&mut self, a: &Triplets, b: &[f64]) -> Result<Vec<f64>> {
        let reuse = matches!(&self.cache, Some(c) if c.rows == a.rows && c.cols == a.cols);
        if !reuse {
            let (symbolic, argsort) =
                SymbolicSparseColMat::try_new_from_indices(a.n, a.n, &a.pattern()).map_err(
                    |e| Error::Solver {
                        message: format!("pattern construction failed: {e:?}"),
                        residual: f64::NAN,
                    },
                )?;
            let lu = SymbolicLu::try_new(symbolic.as_ref()).map_err(|e| Error::Solver {
                message: format!("symbolic factorization failed: {e:?}"),
                residual: f64::NAN,
            })?;
            self.cache = Some(CachedPattern {
                rows: a.rows.clone(),
                cols: a.cols.clone(),
                symbolic,
                argsort,
                lu,
            });
        }
        let cache = self.cache.as_ref().expect("cache populated above");
        let matrix = SparseMatrix {
            inner: SparseColMat::new_from_argsort(cache.symbolic.clone(), &cache.argsort, &a.vals)
                .map_err(|e| Error::Solver {
                    message: format!("allocation failed: {e:?}"),
                    residual: f64::NAN,
                })?,
        };
        solve_with(&matrix, cache.lu.clone(), b)
    }
}

/// One-shot sparse LU solve.
pub fn solve(matrix: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let lu = SymbolicLu::try_new(matrix.as_faer().symbolic()).map_err(|e| Error::Solver {
        message: format!("symbolic factorization failed: {e:?}"),
        residual: f64::NAN,
    })?;
    solve_with(matrix, lu, b)
}

fn solve_with(matrix: &SparseMatrix, symbolic: SymbolicLu<usize>, b: &[f64]) -> Result<Vec<f64>> {
    let lu = Lu::try_new_with_symbolic(symbolic, matrix.as_faer().as_ref()).map_err(|e| {
        Error::Solver {
            message: format!("numeric factorization failed: {e:?}"),
            residual: f64::NAN,
        }
    })?;
    let rhs = ColRef::from_slice(b);
    let mut x: Vec<f64> = lu.solve(rhs).iter().copied().collect();

    let residual = |x: &[f64]| -> Vec<f64> {
        let ax = matrix.matvec(x);
        ax.iter().zip(b).map(|(a, b)| b - a).collect()
    };
    let r = residual(&x);
    let dx = lu.solve(ColRef::from_slice(&r));
    for (xi, d) in x.iter_mut().zip(dx.iter()) {
        *xi += d;
    }

    let r = residual(&x);
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let bn = norm(b);
    let rel = if bn > 0.0 { norm(&r) / bn } else { norm(&r) };
    if !rel.is_finite() || rel > 1e-8 {
        return Err(Error::Solver {
            message: "direct solve did not reach the residual target".into(),
            residual: rel,
        });
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let mut t = Triplets::new(2);
        t.push(0, 0, 1.0);
        t.push(0, 0, 2.0);
        t.push(1, 0, -1.0);
        t.push(1, 1, 4.0);
        let m = t.to_matrix();
        assert_eq!(m.get(0, 0), 3.0);
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(m.matvec(&[1.0, 1.0]), vec![3.0, 3.0]);
    }

    #[test]
    fn saddle_point_with_zero_diagonal_solves() {
        // [2 0 1; 0 2 1; 1 1 0] x = [1, 3, 1]
        let mut t = Triplets::new(3);
        for (r, c, v) in [(0, 0, 2.0), (1, 1, 2.0), (0, 2, 1.0), (1, 2, 1.0), (2, 0, 1.0), (2, 1, 1.0)] {
            t.push(r, c, v);
        }
        let mut solver = DirectSolver::new();
        let x = solver.solve(&t, &[1.0, 3.0, 1.0]).unwrap();
        let expect = [0.0, 1.0, 1.0];
        for (a, b) in x.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
        // Same pattern, new values: symbolic analysis is reused.
        t.vals[0] = 4.0;
        let x = solver.solve(&t, &[1.0, 3.0, 1.0]).unwrap();
        let r = t.to_matrix().matvec(&x);
        for (a, b) in r.iter().zip([1.0, 3.0, 1.0]) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let mut t = Triplets::new(2);
        t.push(0, 0, 1.0);
        t.push(0, 1, 1.0);
        t.push(1, 0, 1.0);
        t.push(1, 1, 1.0);
        let err = DirectSolver::new().solve(&t, &[1.0, 2.0]).unwrap_err();
        assert!(matches!(err, Error::Solver { .. }));
    }
}
