//! Sparse Cholesky factorization with a minimum-degree ordering.
//!
//! The sparsity pattern is analyzed once; the numeric factorization is then
//! repeated on every Newton step with fresh values.

use std::collections::BTreeSet;

use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub(crate) struct SparseCholesky<T> {
    n: usize,
    /// Elimination position of each original index.
    iperm: Vec<usize>,
    perm: Vec<usize>,
    /// Column `k` occupies `col_ptr[k]..col_ptr[k+1]`; the first slot is the
    /// diagonal, the rest hold strictly larger row indices in increasing order.
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> SparseCholesky<T> {
    /// `pattern` lists off-diagonal couplings `(i, j)` in original indices.
    pub fn analyze(n: usize, pattern: &[(usize, usize)]) -> Self {
        let mut adj = vec![BTreeSet::new(); n];
        for &(i, j) in pattern {
            if i != j {
                adj[i].insert(j);
                adj[j].insert(i);
            }
        }
        let mut eliminated = vec![false; n];
        let mut perm = Vec::with_capacity(n);
        let mut columns: Vec<Vec<usize>> = Vec::with_capacity(n);
        for _ in 0..n {
            let v = (0..n)
                .filter(|&v| !eliminated[v])
                .min_by_key(|&v| (adj[v].len(), v))
                .unwrap();
            eliminated[v] = true;
            perm.push(v);
            let nbrs: Vec<usize> = std::mem::take(&mut adj[v]).into_iter().collect();
            for (a, &p) in nbrs.iter().enumerate() {
                adj[p].remove(&v);
                for &q in &nbrs[a + 1..] {
                    adj[p].insert(q);
                    adj[q].insert(p);
                }
            }
            columns.push(nbrs);
        }
        let mut iperm = vec![0; n];
        for (k, &v) in perm.iter().enumerate() {
            iperm[v] = k;
        }
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        col_ptr.push(0);
        for (k, nbrs) in columns.iter().enumerate() {
            row_idx.push(k);
            let mut rows: Vec<usize> = nbrs.iter().map(|&p| iperm[p]).collect();
            rows.sort_unstable();
            debug_assert!(rows.iter().all(|&r| r > k));
            row_idx.extend(rows);
            col_ptr.push(row_idx.len());
        }
        let values = vec![T::zero(); row_idx.len()];
        SparseCholesky { n, iperm, perm, col_ptr, row_idx, values }
    }

    /// Storage slot of entry `(i, j)` in original indices.
    pub fn position(&self, i: usize, j: usize) -> usize {
        let (a, b) = (self.iperm[i], self.iperm[j]);
        let (row, col) = if a >= b { (a, b) } else { (b, a) };
        let start = self.col_ptr[col];
        let end = self.col_ptr[col + 1];
        if row == col {
            return start;
        }
        match self.row_idx[start + 1..end].binary_search(&row) {
            Ok(p) => start + 1 + p,
            Err(_) => panic!("entry ({i}, {j}) outside analyzed pattern"),
        }
    }

    pub fn clear(&mut self) {
        self.values.iter_mut().for_each(|v| *v = T::zero());
    }

    #[inline]
    pub fn add(&mut self, pos: usize, v: T) {
        self.values[pos] += v;
    }

    #[cfg(test)]
    pub fn fill_nonzeros(&self) -> usize {
        self.values.len()
    }

    /// In-place factorization; `false` on a non-positive pivot.
    pub fn factor(&mut self) -> bool {
        for k in 0..self.n {
            let start = self.col_ptr[k];
            let end = self.col_ptr[k + 1];
            let d = self.values[start];
            if !(d > T::zero()) || !d.is_finite() {
                return false;
            }
            let d = d.sqrt();
            self.values[start] = d;
            for p in start + 1..end {
                self.values[p] /= d;
            }
            // rank-one update of the trailing columns touched by column k
            for a in start + 1..end {
                let j = self.row_idx[a];
                let ljk = self.values[a];
                if ljk == T::zero() {
                    continue;
                }
                let jstart = self.col_ptr[j];
                let jend = self.col_ptr[j + 1];
                let mut q = jstart;
                for b in a..end {
                    let i = self.row_idx[b];
                    while self.row_idx[q] != i {
                        q += 1;
                        debug_assert!(q < jend);
                    }
                    let lik = self.values[b];
                    self.values[q] -= lik * ljk;
                }
            }
        }
        true
    }

    /// Solves `A x = b` in place (original indexing) after [`Self::factor`].
    pub fn solve(&self, b: &mut [T]) {
        let mut y: Vec<T> = self.perm.iter().map(|&v| b[v]).collect();
        for k in 0..self.n {
            let start = self.col_ptr[k];
            y[k] /= self.values[start];
            let yk = y[k];
            for p in start + 1..self.col_ptr[k + 1] {
                y[self.row_idx[p]] -= self.values[p] * yk;
            }
        }
        for k in (0..self.n).rev() {
            let start = self.col_ptr[k];
            let mut s = y[k];
            for p in start + 1..self.col_ptr[k + 1] {
                s -= self.values[p] * y[self.row_idx[p]];
            }
            y[k] = s / self.values[start];
        }
        for (k, &v) in self.perm.iter().enumerate() {
            b[v] = y[k];
        }
    }
}
