//! Minimal compressed-row sparse matrices used to assemble coboundaries and
//! Laplacians. Factorizations are delegated to `faer` in [`crate::eigen`].

/// Signed incidence matrix with entries in {-1, +1}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Incidence {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    sign: Vec<i8>,
}

impl Incidence {
    /// Builds from one row per (p+1)-simplex listing `(face, sign)` pairs.
    pub fn from_rows(ncols: usize, rows: &[Vec<(usize, i8)>]) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        let mut sign = Vec::new();
        row_ptr.push(0);
        for row in rows {
            let mut row = row.clone();
            row.sort_unstable_by_key(|&(c, _)| c);
            for (c, s) in row {
                debug_assert!(c < ncols);
                col_idx.push(c);
                sign.push(s);
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            nrows: rows.len(),
            ncols,
            row_ptr,
            col_idx,
            sign,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, i8)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.sign[r].iter().copied())
    }

    /// Integer product `next * self`, exact.
    pub fn compose(&self, next: &Incidence) -> Vec<Vec<(usize, i64)>> {
        assert_eq!(next.ncols, self.nrows, "incompatible incidence shapes");
        (0..next.nrows)
            .map(|i| {
                let mut acc: Vec<(usize, i64)> = Vec::new();
                for (mid, s1) in next.row(i) {
                    for (j, s2) in self.row(mid) {
                        acc.push((j, s1 as i64 * s2 as i64));
                    }
                }
                acc.sort_unstable_by_key(|&(j, _)| j);
                let mut merged: Vec<(usize, i64)> = Vec::new();
                for (j, v) in acc {
                    match merged.last_mut() {
                        Some((lj, lv)) if *lj == j => *lv += v,
                        _ => merged.push((j, v)),
                    }
                }
                merged.retain(|&(_, v)| v != 0);
                merged
            })
            .collect()
    }

    /// Real matrix with entry `(τ, σ) = sign · weight(τ, σ)`.
    pub fn to_weighted(&self, weight: impl Fn(usize, usize) -> f64) -> CsrMatrix {
        let mut values = Vec::with_capacity(self.nnz());
        for i in 0..self.nrows {
            for (j, s) in self.row(i) {
                values.push(s as f64 * weight(i, j));
            }
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values,
        }
    }

    pub fn to_csr(&self) -> CsrMatrix {
        self.to_weighted(|_, _| 1.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Duplicate entries are summed; explicit zeros are kept so the pattern
    /// does not depend on cancellation.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        mut entries: Vec<(usize, usize, f64)>,
    ) -> Self {
        entries.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in entries {
            assert!(i < nrows && j < ncols, "triplet ({i}, {j}) out of bounds");
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(j);
                values.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self {
            nrows: n,
            ncols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: diag.to_vec(),
        }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
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

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[r.clone()].binary_search(&j) {
            Ok(pos) => self.values[r.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *yi = acc;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec(x, &mut y);
        y
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.ncols + 1];
        for &j in &self.col_idx {
            counts[j + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                let dst = next[j];
                next[j] += 1;
                col_idx[dst] = i;
                values[dst] = self.values[k];
            }
        }
        Self {
            nrows: self.ncols,
            ncols: self.nrows,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Sparse product `self * rhs` (row-by-row accumulation).
    pub fn matmul(&self, rhs: &CsrMatrix) -> Self {
        assert_eq!(self.ncols, rhs.nrows, "incompatible shapes");
        let mut row_ptr = Vec::with_capacity(self.nrows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut acc = vec![0.0; rhs.ncols];
        let mut mark = vec![usize::MAX; rhs.ncols];
        let mut touched: Vec<usize> = Vec::new();
        row_ptr.push(0);
        for i in 0..self.nrows {
            touched.clear();
            for (k, a) in self.row(i) {
                for (j, b) in rhs.row(k) {
                    if mark[j] != i {
                        mark[j] = i;
                        acc[j] = 0.0;
                        touched.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            touched.sort_unstable();
            for &j in &touched {
                col_idx.push(j);
                values.push(acc[j]);
            }
            row_ptr.push(col_idx.len());
        }
        Self {
            nrows: self.nrows,
            ncols: rhs.ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// `self + rhs`, union of patterns.
    pub fn add(&self, rhs: &CsrMatrix) -> Self {
        assert_eq!((self.nrows, self.ncols), (rhs.nrows, rhs.ncols));
        let mut entries = Vec::with_capacity(self.nnz() + rhs.nnz());
        for m in [self, rhs] {
            for i in 0..m.nrows {
                entries.extend(m.row(i).map(|(j, v)| (i, j, v)));
            }
        }
        Self::from_triplets(self.nrows, self.ncols, entries)
    }

    /// `diag(left) * self * diag(right)`.
    pub fn scale(&self, left: &[f64], right: &[f64]) -> Self {
        assert_eq!(left.len(), self.nrows);
        assert_eq!(right.len(), self.ncols);
        let mut out = self.clone();
        for i in 0..self.nrows {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                out.values[k] *= left[i] * right[self.col_idx[k]];
            }
        }
        out
    }

    /// Maximum absolute row sum, an upper bound on the spectral norm of a
    /// symmetric matrix.
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows)
            .map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn norm_max(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.nrows == self.ncols
            && (0..self.nrows).all(|i| self.row(i).all(|(j, v)| (v - self.get(j, i)).abs() <= tol))
    }

    /// Column-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.nrows * self.ncols];
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                out[i + j * self.nrows] += v;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates() {
        let m = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 0, 2.0), (0, 0, 3.0)]);
        assert_eq!(m.get(0, 0), 4.0);
        assert_eq!(m.get(1, 0), 2.0);
        assert_eq!(m.get(1, 1), 0.0);
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn product_and_transpose_agree_with_dense() {
        let a = CsrMatrix::from_triplets(
            3,
            2,
            vec![(0, 0, 1.0), (1, 1, -2.0), (2, 0, 3.0), (2, 1, 1.0)],
        );
        let ata = a.transpose().matmul(&a);
        // columns of a: (1,0,3), (0,-2,1)
        assert_eq!(ata.get(0, 0), 10.0);
        assert_eq!(ata.get(0, 1), 3.0);
        assert_eq!(ata.get(1, 0), 3.0);
        assert_eq!(ata.get(1, 1), 5.0);
        assert!(ata.is_symmetric(0.0));
        let y = a.apply(&[1.0, 1.0]);
        assert_eq!(y, vec![1.0, -2.0, 4.0]);
    }

    #[test]
    fn incidence_composition_is_exact() {
        // boundary of a triangle composed with boundary of its edges
        let d0 = Incidence::from_rows(
            3,
            &[
                vec![(0, -1), (1, 1)],
                vec![(0, -1), (2, 1)],
                vec![(1, -1), (2, 1)],
            ],
        );
        let d1 = Incidence::from_rows(3, &[vec![(0, 1), (1, -1), (2, 1)]]);
        assert!(d0.compose(&d1).iter().all(|row| row.is_empty()));
    }
}
