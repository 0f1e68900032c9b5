//! Sparse symmetric assembly, bandwidth-reducing ordering and a Cholesky
//! preconditioner for the p = 2 stiffness matrix.

use std::collections::VecDeque;

use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::{CooMatrix, CscMatrix};

use crate::error::{Error, Result};

/// Reverse Cuthill-McKee ordering of a symmetric adjacency structure.
/// Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    while let Some(start) = (0..n).filter(|&i| !visited[i]).min_by_key(|&i| (degree[i], i)) {
        let start = pseudo_peripheral(adj, start);
        visited[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            for w in next {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(adj: &[Vec<usize>], start: usize) -> Vec<usize> {
    let mut level = vec![usize::MAX; adj.len()];
    level[start] = 0;
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if level[w] == usize::MAX {
                level[w] = level[v] + 1;
                queue.push_back(w);
            }
        }
    }
    level
}

// George-Liu heuristic
fn pseudo_peripheral(adj: &[Vec<usize>], mut start: usize) -> usize {
    let mut ecc = 0;
    for _ in 0..8 {
        let level = bfs_levels(adj, start);
        let far = level.iter().filter(|&&l| l != usize::MAX).max().copied().unwrap_or(0);
        if far <= ecc && ecc > 0 {
            break;
        }
        ecc = far;
        let cand = (0..adj.len())
            .filter(|&i| level[i] == far)
            .min_by_key(|&i| (adj[i].len(), i))
            .unwrap_or(start);
        if cand == start {
            break;
        }
        start = cand;
    }
    start
}

/// Sparse Cholesky factor of a symmetric positive definite matrix, stored
/// in a fill-reducing permuted order.
pub struct SparseCholesky {
    n: usize,
    perm: Vec<usize>,
    col_offsets: Vec<usize>,
    row_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseCholesky {
    /// Factors the matrix given as symmetric triplets (both triangles).
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        for &(i, j, _) in triplets {
            if i != j {
                adj[i].push(j);
            }
        }
        for a in &mut adj {
            a.sort_unstable();
            a.dedup();
        }
        let perm = reverse_cuthill_mckee(&adj);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut coo = CooMatrix::new(n, n);
        for &(i, j, v) in triplets {
            coo.push(inv[i], inv[j], v);
        }
        let csc = CscMatrix::from(&coo);
        let chol = CscCholesky::factor(&csc)
            .map_err(|e| Error::LinearAlgebra(format!("Cholesky factorization failed: {e:?}")))?;
        let (col_offsets, row_indices, values) = chol.take_l().disassemble();
        Ok(Self {
            n,
            perm,
            col_offsets,
            row_indices,
            values,
        })
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64], x: &mut [f64]) {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        // L y = b, columns are sorted with the diagonal first
        for j in 0..n {
            let (s, e) = (self.col_offsets[j], self.col_offsets[j + 1]);
            y[j] /= self.values[s];
            let yj = y[j];
            for k in s + 1..e {
                y[self.row_indices[k]] -= self.values[k] * yj;
            }
        }
        // L^T x = y
        for j in (0..n).rev() {
            let (s, e) = (self.col_offsets[j], self.col_offsets[j + 1]);
            let mut acc = y[j];
            for k in s + 1..e {
                acc -= self.values[k] * y[self.row_indices[k]];
            }
            y[j] = acc / self.values[s];
        }
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
    }
}

/// Symmetric tridiagonal matrix with a Thomas-algorithm solve.
#[derive(Clone, Debug)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    /// `off[i]` couples `i` and `i + 1`.
    pub off: Vec<f64>,
}

impl Tridiagonal {
    pub fn solve(&self, b: &[f64], x: &mut [f64]) {
        let n = self.diag.len();
        if n == 0 {
            return;
        }
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut denom = self.diag[0];
        c[0] = if n > 1 { self.off[0] / denom } else { 0.0 };
        d[0] = b[0] / denom;
        for i in 1..n {
            denom = self.diag[i] - self.off[i - 1] * c[i - 1];
            c[i] = if i + 1 < n { self.off[i] / denom } else { 0.0 };
            d[i] = (b[i] - self.off[i - 1] * d[i - 1]) / denom;
        }
        x[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            x[i] = d[i] - c[i] * x[i + 1];
        }
    }
}
