use std::sync::Arc;

use crate::graph::SparseAdjacency;
use crate::scalar::Scalar;

/// Sparsity structure of a CSR matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsrPattern {
    pub rows: usize,
    pub cols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
}

impl CsrPattern {
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        self.indptr[i]..self.indptr[i + 1]
    }

    /// Row index of every stored entry.
    pub fn row_of_entries(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nnz());
        for i in 0..self.rows {
            out.extend(std::iter::repeat(i).take(self.indptr[i + 1] - self.indptr[i]));
        }
        out
    }

    pub fn from_adjacency(adj: &SparseAdjacency) -> Self {
        Self {
            rows: adj.num_nodes(),
            cols: adj.num_nodes(),
            indptr: adj.indptr().to_vec(),
            indices: adj.indices().to_vec(),
        }
    }
}

/// CSR matrix with real per-entry coefficients.
#[derive(Debug, Clone)]
pub struct SparseOperator<T> {
    pub pattern: Arc<CsrPattern>,
    pub values: Vec<T>,
}

impl<T: Scalar> SparseOperator<T> {
    pub fn new(pattern: Arc<CsrPattern>, values: Vec<T>) -> Self {
        assert_eq!(pattern.nnz(), values.len());
        Self { pattern, values }
    }

    /// Non-zero entries of a dense row-major matrix.
    pub fn from_dense(rows: usize, cols: usize, data: &[T]) -> Self {
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for i in 0..rows {
            for (j, &v) in data[i * cols..(i + 1) * cols].iter().enumerate() {
                if v != T::zero() {
                    indices.push(j);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Self {
            pattern: Arc::new(CsrPattern {
                rows,
                cols,
                indptr,
                indices,
            }),
            values,
        }
    }

    /// Dense row-major copy.
    pub fn to_dense(&self) -> Vec<T> {
        let p = &self.pattern;
        let mut out = vec![T::zero(); p.rows * p.cols];
        for i in 0..p.rows {
            for e in p.row_range(i) {
                out[i * p.cols + p.indices[e]] += self.values[e];
            }
        }
        out
    }
}
