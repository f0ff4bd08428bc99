//! Compressed sparse column matrices sized for block transition operators.

use crate::error::{Error, Result};

/// Square sparse matrix in compressed-column form.
///
/// Column `j` holds the distribution of the next state given current state
/// `j`, so stochastic matrices have unit column sums.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    dim: usize,
    col_ptr: Vec<usize>,
    rows: Vec<usize>,
    vals: Vec<f64>,
}

/// Column-stochastic matrix (`next = M * current`).
pub type TransitionMatrix = SparseMatrix;

impl SparseMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            col_ptr: vec![0; dim + 1],
            rows: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            col_ptr: (0..=dim).collect(),
            rows: (0..dim).collect(),
            vals: vec![1.0; dim],
        }
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut cols = vec![Vec::new(); diag.len()];
        for (j, &d) in diag.iter().enumerate() {
            cols[j].push((j, d));
        }
        Self::from_columns(diag.len(), cols)
    }

    /// Builds a matrix from per-column `(row, value)` lists. Duplicate rows
    /// within a column are summed and exact zeros dropped.
    pub fn from_columns(dim: usize, mut cols: Vec<Vec<(usize, f64)>>) -> Self {
        assert_eq!(cols.len(), dim, "column count must equal dimension");
        let mut col_ptr = Vec::with_capacity(dim + 1);
        let mut rows = Vec::new();
        let mut vals = Vec::new();
        col_ptr.push(0);
        for col in cols.iter_mut() {
            col.sort_by_key(|&(r, _)| r);
            let mut last: Option<usize> = None;
            for &(r, v) in col.iter() {
                assert!(r < dim, "row index {r} out of range for dim {dim}");
                if last == Some(r) {
                    *vals.last_mut().unwrap() += v;
                } else {
                    rows.push(r);
                    vals.push(v);
                    last = Some(r);
                }
            }
            col_ptr.push(rows.len());
        }
        let mut m = Self {
            dim,
            col_ptr,
            rows,
            vals,
        };
        m.prune_zeros();
        m
    }

    pub fn from_dense(dense: &[Vec<f64>]) -> Self {
        let dim = dense.len();
        let mut cols = vec![Vec::new(); dim];
        for (i, row) in dense.iter().enumerate() {
            assert_eq!(row.len(), dim);
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    cols[j].push((i, v));
                }
            }
        }
        Self::from_columns(dim, cols)
    }

    fn prune_zeros(&mut self) {
        if self.vals.iter().all(|&v| v != 0.0) {
            return;
        }
        let mut col_ptr = Vec::with_capacity(self.dim + 1);
        let mut rows = Vec::with_capacity(self.rows.len());
        let mut vals = Vec::with_capacity(self.vals.len());
        col_ptr.push(0);
        for j in 0..self.dim {
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                if self.vals[k] != 0.0 {
                    rows.push(self.rows[k]);
                    vals.push(self.vals[k]);
                }
            }
            col_ptr.push(rows.len());
        }
        self.col_ptr = col_ptr;
        self.rows = rows;
        self.vals = vals;
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Iterator over the `(row, value)` entries of column `j`.
    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.col_ptr[j]..self.col_ptr[j + 1];
        self.rows[range.clone()]
            .iter()
            .copied()
            .zip(self.vals[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.column(j)
            .find(|&(r, _)| r == i)
            .map(|(_, v)| v)
            .unwrap_or(0.0)
    }

    /// `y = self * x`.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        y.iter_mut().for_each(|v| *v = 0.0);
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                y[self.rows[k]] += self.vals[k] * xj;
            }
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// Matrix product `self * rhs`.
    pub fn mul(&self, rhs: &SparseMatrix) -> SparseMatrix {
        assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        let mut acc = vec![0.0; n];
        let mut touched: Vec<usize> = Vec::new();
        let mut mark = vec![false; n];
        let mut cols = Vec::with_capacity(n);
        for j in 0..n {
            for (k, bkj) in rhs.column(j) {
                for (i, aik) in self.column(k) {
                    if !mark[i] {
                        mark[i] = true;
                        touched.push(i);
                    }
                    acc[i] += aik * bkj;
                }
            }
            let mut col = Vec::with_capacity(touched.len());
            for &i in &touched {
                col.push((i, acc[i]));
                acc[i] = 0.0;
                mark[i] = false;
            }
            touched.clear();
            cols.push(col);
        }
        SparseMatrix::from_columns(n, cols)
    }

    pub fn pow(&self, exp: usize) -> SparseMatrix {
        let mut out = SparseMatrix::identity(self.dim);
        for _ in 0..exp {
            out = self.mul(&out);
        }
        out
    }

    pub fn scaled(&self, s: f64) -> SparseMatrix {
        let mut m = self.clone();
        m.vals.iter_mut().for_each(|v| *v *= s);
        m.prune_zeros();
        m
    }

    pub fn add(&self, rhs: &SparseMatrix) -> SparseMatrix {
        assert_eq!(self.dim, rhs.dim);
        let cols = (0..self.dim)
            .map(|j| self.column(j).chain(rhs.column(j)).collect())
            .collect();
        SparseMatrix::from_columns(self.dim, cols)
    }

    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.dim)
            .map(|j| self.column(j).map(|(_, v)| v).sum())
            .collect()
    }

    /// Largest deviation of a column sum from one, or of an entry below zero.
    pub fn stochasticity_error(&self) -> f64 {
        let col_err = self
            .column_sums()
            .iter()
            .map(|s| (s - 1.0).abs())
            .fold(0.0, f64::max);
        let neg = self.vals.iter().map(|&v| (-v).max(0.0)).fold(0.0, f64::max);
        col_err.max(neg)
    }

    pub fn is_column_stochastic(&self, tol: f64) -> bool {
        self.stochasticity_error() <= tol
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.dim]; self.dim];
        for j in 0..self.dim {
            for (i, v) in self.column(j) {
                d[i][j] += v;
            }
        }
        d
    }

    /// Restricts to the index window `[lo, hi)`; entries leaving the window
    /// are dropped (callers renormalise as needed).
    pub fn window(&self, lo: usize, hi: usize) -> SparseMatrix {
        let n = hi - lo;
        let cols = (lo..hi)
            .map(|j| {
                self.column(j)
                    .filter(|&(i, _)| i >= lo && i < hi)
                    .map(|(i, v)| (i - lo, v))
                    .collect()
            })
            .collect();
        SparseMatrix::from_columns(n, cols)
    }
}

/// Assembles a block matrix out of equally sized square blocks.
#[derive(Debug)]
pub struct BlockBuilder {
    block: usize,
    n_blocks: usize,
    cols: Vec<Vec<(usize, f64)>>,
}

impl BlockBuilder {
    pub fn new(block: usize, n_blocks: usize) -> Self {
        Self {
            block,
            n_blocks,
            cols: vec![Vec::new(); block * n_blocks],
        }
    }

    /// Adds `scale * m` into block position `(row_block, col_block)`.
    pub fn add(&mut self, row_block: usize, col_block: usize, m: &SparseMatrix, scale: f64) {
        assert_eq!(m.dim(), self.block);
        assert!(row_block < self.n_blocks && col_block < self.n_blocks);
        if scale == 0.0 {
            return;
        }
        let r0 = row_block * self.block;
        let c0 = col_block * self.block;
        for j in 0..self.block {
            for (i, v) in m.column(j) {
                self.cols[c0 + j].push((r0 + i, v * scale));
            }
        }
    }

    pub fn build(self) -> SparseMatrix {
        SparseMatrix::from_columns(self.block * self.n_blocks, self.cols)
    }
}

/// Solves the dense system `a x = b` (column-major `a`) by LU decomposition.
pub fn dense_solve(dim: usize, a_col_major: Vec<f64>, b: Vec<f64>) -> Result<Vec<f64>> {
    let a = nalgebra::DMatrix::from_vec(dim, dim, a_col_major);
    let b = nalgebra::DVector::from_vec(b);
    let lu = a.lu();
    lu.solve(&b)
        .map(|x| x.as_slice().to_vec())
        .ok_or_else(|| Error::Singular("LU factorisation found a zero pivot".into()))
}

pub fn norm_inf(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}
