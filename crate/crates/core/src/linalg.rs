//! Compressed-row sparse matrices and a direct LU solver.
//!
//! Factorization is delegated to faer's supernodal sparse LU (COLAMD column
//! ordering, partial row pivoting). A CSR matrix is handed to faer as the
//! compressed-column storage of its transpose, and solves go through the
//! transposed factorization.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::lu::partial_pivoting::factor::PartialPivLuParams;
use faer::sparse::linalg::lu::{factorize_symbolic_lu, LuRef, NumericLu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Conj, MatMut, Par, Spec};

use crate::error::{Error, Result};

/// Relative pivot threshold below which a matrix is declared singular.
pub const SINGULAR_PIVOT: f64 = 1e-14;

/// Square or rectangular sparse matrix in compressed row storage.
///
/// Column indices are sorted within each row and contain no duplicates.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Build from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(r, c, _) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) outside {nrows}x{ncols}");
            counts[r + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(r, c, v) in triplets {
            cols[next[r]] = c;
            vals[next[r]] = v;
            next[r] += 1;
        }

        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for r in 0..nrows {
            scratch.clear();
            scratch.extend((counts[r]..counts[r + 1]).map(|k| (cols[k], vals[k])));
            scratch.sort_by_key(|e| e.0);
            for &(c, v) in &scratch {
                if col_idx.len() > row_ptr[r] && *col_idx.last().unwrap() == c {
                    *values.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Build from raw CSR arrays, validating the storage invariants.
    pub fn from_csr(
        nrows: usize,
        ncols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_ptr.len() != nrows + 1 || row_ptr[0] != 0 {
            return Err(Error::Dimension {
                expected: nrows + 1,
                got: row_ptr.len(),
            });
        }
        if *row_ptr.last().unwrap() != col_idx.len() || col_idx.len() != values.len() {
            return Err(Error::Dimension {
                expected: col_idx.len(),
                got: values.len(),
            });
        }
        for r in 0..nrows {
            let row = &col_idx[row_ptr[r]..row_ptr[r + 1]];
            if row.windows(2).any(|w| w[0] >= w[1]) || row.iter().any(|&c| c >= ncols) {
                return Err(Error::Config(format!(
                    "row {r} has unsorted, duplicate or out-of-range columns"
                )));
            }
        }
        Ok(Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
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

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Entries of row `r` as `(column, value)`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    /// Position of `(r, c)` in the value array, if stored.
    pub fn position(&self, r: usize, c: usize) -> Option<usize> {
        let lo = self.row_ptr[r];
        let row = &self.col_idx[lo..self.row_ptr[r + 1]];
        row.binary_search(&c).ok().map(|k| lo + k)
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.position(r, c).map_or(0.0, |k| self.values[k])
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    /// `Aᵀ·y`.
    pub fn matvec_transpose(&self, y: &[f64]) -> Vec<f64> {
        assert_eq!(y.len(), self.nrows);
        let mut out = vec![0.0; self.ncols];
        for (r, &yr) in y.iter().enumerate() {
            for (c, v) in self.row(r) {
                out[c] += v * yr;
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut triplets = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            triplets.extend(self.row(r).map(|(c, v)| (c, r, v)));
        }
        Self::from_triplets(self.ncols, self.nrows, &triplets)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for (r, row) in d.iter_mut().enumerate() {
            for (c, v) in self.row(r) {
                row[c] = v;
            }
        }
        d
    }

    fn same_pattern(&self, other: &Self) -> bool {
        self.nrows == other.nrows && self.row_ptr == other.row_ptr && self.col_idx == other.col_idx
    }
}

/// LU factorization of a square sparse matrix.
pub struct LuFactor {
    symbolic: SymbolicLu<usize>,
    numeric: NumericLu<usize, f64>,
    n: usize,
}

impl std::fmt::Debug for LuFactor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LuFactor").field("n", &self.n).finish()
    }
}

/// Factorize `a`. Fails with [`Error::Singular`] when the matrix is
/// structurally or numerically singular.
pub fn factorize(a: &SparseMatrix) -> Result<LuFactor> {
    let symbolic = analyze(a, "factorize")?;
    numeric_factor(symbolic, a, "factorize")
}

pub fn solve(lu: &LuFactor, b: &[f64]) -> Result<Vec<f64>> {
    lu.solve(b)
}

fn analyze(a: &SparseMatrix, step: &str) -> Result<SymbolicLu<usize>> {
    if a.nrows != a.ncols {
        return Err(Error::Dimension {
            expected: a.nrows,
            got: a.ncols,
        });
    }
    let n = a.nrows;
    // CSR of A is CSC of Aᵀ.
    let sym = SymbolicSparseColMatRef::new_checked(n, n, &a.row_ptr, None, &a.col_idx);
    factorize_symbolic_lu(sym, Default::default()).map_err(|e| Error::Singular {
        step: format!("{step}: symbolic analysis failed ({e:?})"),
    })
}

fn numeric_factor(symbolic: SymbolicLu<usize>, a: &SparseMatrix, step: &str) -> Result<LuFactor> {
    let n = a.nrows;
    let sym = SymbolicSparseColMatRef::new_checked(n, n, &a.row_ptr, None, &a.col_idx);
    let mat = SparseColMatRef::new(sym, &a.values);
    let mut numeric = NumericLu::new();
    let params: Spec<PartialPivLuParams, f64> = Default::default();
    let mut mem = MemBuffer::new(symbolic.factorize_numeric_lu_scratch::<f64>(Par::Seq, params));
    symbolic
        .factorize_numeric_lu(&mut numeric, mat, Par::Seq, MemStack::new(&mut mem), params)
        .map_err(|e| Error::Singular {
            step: format!("{step}: {e:?}"),
        })?;
    let lu = LuFactor { symbolic, numeric, n };
    lu.check_pivots(a, step)?;
    Ok(lu)
}

impl LuFactor {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: b.len(),
            });
        }
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        Ok(x)
    }

    fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.n;
        let lu = LuRef::new_unchecked(&self.symbolic, &self.numeric);
        let mut mem = MemBuffer::new(self.symbolic.solve_in_place_scratch::<f64>(1, Par::Seq));
        let rhs = MatMut::from_column_major_slice_mut(x, n, 1);
        // The stored factorization is of Aᵀ.
        lu.solve_transpose_in_place_with_conj(Conj::No, rhs, Par::Seq, MemStack::new(&mut mem));
    }

    /// Reject factorizations whose effective pivots are negligible.
    ///
    /// The supernodal factors are not exposed pivot-by-pivot, so the check
    /// probes the factorization with a right-hand side of known solution:
    /// a vanishing pivot shows up as a non-finite or inaccurate probe.
    fn check_pivots(&self, a: &SparseMatrix, step: &str) -> Result<()> {
        if self.n == 0 {
            return Ok(());
        }
        let scale = a.max_abs();
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::Singular {
                step: format!("{step}: matrix is zero or non-finite"),
            });
        }
        let probe: Vec<f64> = (0..self.n).map(|i| 1.0 + ((i * 7919) % 13) as f64 / 13.0).collect();
        let mut x = a.matvec(&probe);
        self.solve_in_place(&mut x);
        let err = x.iter().zip(&probe).fold(0.0f64, |m, (a, b)| {
            let d = (a - b).abs();
            if d.is_nan() {
                f64::INFINITY
            } else {
                m.max(d)
            }
        });
        if !err.is_finite() || err > (SINGULAR_PIVOT * 1e8).sqrt() {
            return Err(Error::Singular {
                step: format!("{step}: pivot below {SINGULAR_PIVOT:e}·|A| (probe error {err:.2e})"),
            });
        }
        Ok(())
    }
}

/// Reusable factorizer that keeps the symbolic analysis while the sparsity
/// pattern is unchanged.
#[derive(Default)]
pub struct Factorizer {
    cached: Option<(SparseMatrix, SymbolicLu<usize>)>,
}

impl Factorizer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn factorize(&mut self, a: &SparseMatrix, step: &str) -> Result<LuFactor> {
        let symbolic = match &self.cached {
            Some((pattern, sym)) if pattern.same_pattern(a) => sym.clone(),
            _ => {
                let sym = analyze(a, step)?;
                let mut pattern = a.clone();
                pattern.values.clear();
                self.cached = Some((pattern, sym.clone()));
                sym
            }
        };
        numeric_factor(symbolic, a, step)
    }
}
