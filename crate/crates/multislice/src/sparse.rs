//! Compressed sparse row matrices.
//!
//! Adjacency matrices are block-diagonal and have a handful of entries per
//! row, so a small CSR type with deterministic iteration order is all the
//! pipeline needs. Products accumulate in row-major index order, which keeps
//! repeated runs bitwise identical.

use ndarray::Array2;

/// Sparse matrix in CSR layout. Column indices within each row are kept in
/// ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

impl CsrMatrix {
    /// Build from (row, col, value) triplets. Duplicate coordinates are
    /// summed. Entries with value 0.0 are kept out.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Self {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nrows];
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet out of bounds");
            if v != 0.0 {
                rows[r].push((c, v));
            }
        }
        let mut indptr = Vec::with_capacity(nrows + 1);
        let mut indices = Vec::new();
        let mut data = Vec::new();
        indptr.push(0);
        for row in &mut rows {
            row.sort_by_key(|&(c, _)| c);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for &(c, v) in row.iter() {
                match merged.last_mut() {
                    Some((lc, lv)) if *lc == c => *lv += v,
                    _ => merged.push((c, v)),
                }
            }
            for (c, v) in merged {
                indices.push(c);
                data.push(v);
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            nrows,
            ncols,
            indptr,
            indices,
            data,
        }
    }

    /// Identity matrix of size n.
    pub fn identity(n: usize) -> Self {
        CsrMatrix::from_triplets(n, n, (0..n).map(|i| (i, i, 1.0)))
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    /// Entries of row r as (col, value) pairs, columns ascending.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.indptr[r];
        let hi = self.indptr[r + 1];
        self.indices[lo..hi]
            .iter()
            .copied()
            .zip(self.data[lo..hi].iter().copied())
    }

    /// All entries as (row, col, value), row-major.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r)
            .find(|&(col, _)| col == c)
            .map_or(0.0, |(_, v)| v)
    }

    /// Per-row sums.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.nrows).map(|r| self.row(r).map(|(_, v)| v).sum()).collect()
    }

    /// Dense product self * rhs.
    pub fn matmul_dense(&self, rhs: &Array2<f64>) -> Array2<f64> {
        assert_eq!(self.ncols, rhs.nrows(), "sparse-dense shape mismatch");
        let mut out = Array2::zeros((self.nrows, rhs.ncols()));
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                for k in 0..rhs.ncols() {
                    out[[r, k]] += v * rhs[[c, k]];
                }
            }
        }
        out
    }

    /// Dense product self^T * rhs, computed without materializing the
    /// transpose.
    pub fn transpose_matmul_dense(&self, rhs: &Array2<f64>) -> Array2<f64> {
        assert_eq!(self.nrows, rhs.nrows(), "sparse^T-dense shape mismatch");
        let mut out = Array2::zeros((self.ncols, rhs.ncols()));
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                for k in 0..rhs.ncols() {
                    out[[c, k]] += v * rhs[[r, k]];
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.nrows, self.ncols));
        for (r, c, v) in self.iter() {
            out[[r, c]] = v;
        }
        out
    }

    /// Maximum absolute asymmetry |A - A^T|, 0.0 for symmetric matrices.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (r, c, v) in self.iter() {
            worst = worst.max((v - self.get(c, r)).abs());
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn triplets_merge_and_sort() {
        let m = CsrMatrix::from_triplets(2, 3, vec![(0, 2, 1.0), (0, 0, 2.0), (0, 2, 3.0)]);
        assert_eq!(m.row(0).collect::<Vec<_>>(), vec![(0, 2.0), (2, 4.0)]);
        assert_eq!(m.row(1).count(), 0);
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn matmul_matches_dense() {
        let m = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (0, 1, 2.0), (1, 0, 3.0)]);
        let x = array![[1.0, 0.0], [0.0, 1.0]];
        assert_eq!(m.matmul_dense(&x), m.to_dense());
        let y = array![[1.0, 2.0], [3.0, 4.0]];
        let expect = m.to_dense().dot(&y);
        assert_eq!(m.matmul_dense(&y), expect);
        let expect_t = m.to_dense().t().dot(&y);
        assert_eq!(m.transpose_matmul_dense(&y), expect_t);
    }

    #[test]
    fn identity_roundtrip() {
        let i = CsrMatrix::identity(3);
        let x = array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]];
        assert_eq!(i.matmul_dense(&x), x);
    }
}
