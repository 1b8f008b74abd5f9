//! Unweighted sparse adjacency in compressed sparse row layout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unweighted CSR adjacency. Rows hold strictly increasing column indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparseAdjacency {
    num_nodes: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
}

impl SparseAdjacency {
    /// Validates and wraps raw CSR arrays.
    pub fn from_csr(num_nodes: usize, indptr: Vec<usize>, indices: Vec<usize>) -> Result<Self> {
        if indptr.len() != num_nodes + 1 {
            return Err(Error::LengthMismatch(format!(
                "indptr has {} entries, expected num_nodes + 1 = {}",
                indptr.len(),
                num_nodes + 1
            )));
        }
        if indptr[0] != 0 {
            return Err(Error::NonCanonicalCsr(format!("indptr[0] = {}", indptr[0])));
        }
        let last = indptr[num_nodes];
        if last != indices.len() {
            return Err(Error::CsrLengthMismatch {
                indptr_last: last,
                indices_len: indices.len(),
            });
        }
        for (row, w) in indptr.windows(2).enumerate() {
            if w[0] > w[1] {
                return Err(Error::NonCanonicalCsr(format!("indptr decreases at row {row}")));
            }
            let cols = &indices[w[0]..w[1]];
            for (k, &c) in cols.iter().enumerate() {
                if c >= num_nodes {
                    return Err(Error::NonCanonicalCsr(format!("column {c} out of range in row {row}")));
                }
                if k > 0 && cols[k - 1] >= c {
                    return Err(Error::NonCanonicalCsr(format!(
                        "row {row} indices not strictly increasing"
                    )));
                }
            }
        }
        Ok(Self {
            num_nodes,
            indptr,
            indices,
        })
    }

    /// Builds a canonical adjacency from arbitrary `(row, col)` pairs.
    /// Duplicates are merged.
    pub fn from_edges(num_nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); num_nodes];
        for &(i, j) in edges {
            if i >= num_nodes || j >= num_nodes {
                return Err(Error::InvalidArgument(format!(
                    "edge ({i}, {j}) out of range for {num_nodes} nodes"
                )));
            }
            rows[i].push(j);
        }
        Ok(Self::from_rows(rows))
    }

    pub(crate) fn from_rows(mut rows: Vec<Vec<usize>>) -> Self {
        let num_nodes = rows.len();
        let mut indptr = Vec::with_capacity(num_nodes + 1);
        let mut indices = Vec::new();
        indptr.push(0);
        for row in rows.iter_mut() {
            row.sort_unstable();
            row.dedup();
            indices.extend_from_slice(row);
            indptr.push(indices.len());
        }
        Self {
            num_nodes,
            indptr,
            indices,
        }
    }

    pub fn empty(num_nodes: usize) -> Self {
        Self {
            num_nodes,
            indptr: vec![0; num_nodes + 1],
            indices: Vec::new(),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Number of stored entries.
    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.indices[self.indptr[i]..self.indptr[i + 1]]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.indptr[i + 1] - self.indptr[i]
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.row(i).binary_search(&j).is_ok()
    }

    /// Iterates stored `(row, col)` pairs in CSR order.
    pub fn iter_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_nodes).flat_map(move |i| self.row(i).iter().map(move |&j| (i, j)))
    }

    pub fn num_self_loops(&self) -> usize {
        (0..self.num_nodes).filter(|&i| self.contains(i, i)).count()
    }

    /// Undirected edge count: pairs `i < j` with `(i, j)` stored, self-loops
    /// excluded. Meaningful on symmetric adjacencies.
    pub fn num_undirected_edges(&self) -> usize {
        self.iter_edges().filter(|&(i, j)| i < j).count()
    }

    pub fn is_symmetric(&self) -> bool {
        self.iter_edges().all(|(i, j)| self.contains(j, i))
    }

    pub fn transpose(&self) -> Self {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); self.num_nodes];
        for (i, j) in self.iter_edges() {
            rows[j].push(i);
        }
        Self::from_rows(rows)
    }

    /// Union of the adjacency with its transpose.
    pub fn symmetrize(&self) -> Self {
        let mut rows: Vec<Vec<usize>> = (0..self.num_nodes).map(|i| self.row(i).to_vec()).collect();
        for (i, j) in self.iter_edges() {
            rows[j].push(i);
        }
        Self::from_rows(rows)
    }

    /// Adds the missing diagonal entries.
    pub fn add_self_loops(&self) -> Self {
        let rows = (0..self.num_nodes)
            .map(|i| {
                let mut r = self.row(i).to_vec();
                if r.binary_search(&i).is_err() {
                    r.push(i);
                }
                r
            })
            .collect();
        Self::from_rows(rows)
    }

    /// Subgraph induced by `keep` (sorted, unique old indices). Node `keep[k]`
    /// becomes node `k`.
    pub fn induced(&self, keep: &[usize]) -> Self {
        let mut new_index = vec![usize::MAX; self.num_nodes];
        for (k, &old) in keep.iter().enumerate() {
            new_index[old] = k;
        }
        let rows = keep
            .iter()
            .map(|&old| {
                self.row(old)
                    .iter()
                    .filter_map(|&j| (new_index[j] != usize::MAX).then_some(new_index[j]))
                    .collect()
            })
            .collect();
        Self::from_rows(rows)
    }

    /// Relabels nodes: old node `i` becomes `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> Self {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); self.num_nodes];
        for (i, j) in self.iter_edges() {
            rows[perm[i]].push(perm[j]);
        }
        Self::from_rows(rows)
    }

    /// Connected components of the undirected view, as sorted node lists in
    /// order of their smallest member.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let mut comp = vec![usize::MAX; self.num_nodes];
        let mut out = Vec::new();
        let mut stack = Vec::new();
        for start in 0..self.num_nodes {
            if comp[start] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut members = vec![start];
            comp[start] = id;
            stack.push(start);
            while let Some(u) = stack.pop() {
                for &v in self.row(u) {
                    if comp[v] == usize::MAX {
                        comp[v] = id;
                        members.push(v);
                        stack.push(v);
                    }
                }
            }
            members.sort_unstable();
            out.push(members);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_csr() {
        assert!(matches!(
            SparseAdjacency::from_csr(2, vec![0, 1, 3], vec![1, 0]),
            Err(Error::CsrLengthMismatch { .. })
        ));
        assert!(matches!(
            SparseAdjacency::from_csr(2, vec![0, 2, 2], vec![1, 1]),
            Err(Error::NonCanonicalCsr(_))
        ));
        assert!(matches!(
            SparseAdjacency::from_csr(2, vec![0, 1, 1], vec![5]),
            Err(Error::NonCanonicalCsr(_))
        ));
        assert!(matches!(
            SparseAdjacency::from_csr(2, vec![0, 1], vec![1]),
            Err(Error::LengthMismatch(_))
        ));
    }

    #[test]
    fn symmetrize_directed_edge() {
        let a = SparseAdjacency::from_edges(2, &[(0, 1)]).unwrap();
        let s = a.symmetrize();
        assert!(s.contains(0, 1) && s.contains(1, 0));
        assert_eq!(s.symmetrize(), s);
    }

    #[test]
    fn self_loops_on_empty_and_partial() {
        let a = SparseAdjacency::empty(2).add_self_loops();
        assert_eq!(a.nnz(), 2);
        let b = SparseAdjacency::from_edges(3, &[(0, 0), (0, 1)]).unwrap();
        let c = b.add_self_loops();
        assert_eq!(c.nnz(), b.nnz() + 2);
        assert_eq!(c.add_self_loops(), c);
    }

    #[test]
    fn components_ordered_by_min_member() {
        let a = SparseAdjacency::from_edges(5, &[(3, 4), (4, 3), (0, 1), (1, 0)]).unwrap();
        let cc = a.connected_components();
        assert_eq!(cc, vec![vec![0, 1], vec![2], vec![3, 4]]);
    }

    #[test]
    fn undirected_edges_exclude_loops() {
        let a = SparseAdjacency::from_edges(3, &[(0, 1), (1, 0), (1, 2), (2, 1)])
            .unwrap()
            .add_self_loops();
        assert_eq!(a.num_undirected_edges(), 2);
        assert_eq!(a.num_self_loops(), 3);
    }
}
