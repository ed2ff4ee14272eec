use super::{DenseMatrix, OpLedger};
use crate::error::{Error, Result};

/// Compressed-row sparse matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    n_cols: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds a matrix from raw CSR arrays, validating the structure.
    pub fn from_csr(
        n_rows: usize,
        n_cols: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_offsets.len() != n_rows + 1 {
            return Err(Error::InvalidArgument(format!(
                "row_offsets has length {}, expected {}",
                row_offsets.len(),
                n_rows + 1
            )));
        }
        if col_indices.len() != values.len() || row_offsets[n_rows] != values.len() {
            return Err(Error::InvalidArgument(
                "row_offsets, col_indices and values disagree on nnz".into(),
            ));
        }
        if row_offsets[0] != 0 || row_offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidArgument("row_offsets must be nondecreasing from 0".into()));
        }
        for row in 0..n_rows {
            let cols = &col_indices[row_offsets[row]..row_offsets[row + 1]];
            if cols.iter().any(|&c| c >= n_cols) {
                return Err(Error::InvalidArgument(format!("column index out of range in row {row}")));
            }
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidArgument(format!(
                    "column indices not strictly increasing in row {row}"
                )));
            }
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Assembles from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n_rows: usize, n_cols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        if let Some(&(r, c, _)) = triplets.iter().find(|&&(r, c, _)| r >= n_rows || c >= n_cols) {
            return Err(Error::InvalidArgument(format!(
                "triplet ({r}, {c}) outside {n_rows}x{n_cols}"
            )));
        }
        triplets.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_offsets = vec![0usize; n_rows + 1];
        let mut col_indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            row_offsets[r + 1] += 1;
            col_indices.push(c);
            values.push(v);
            last = Some((r, c));
        }
        for i in 0..n_rows {
            row_offsets[i + 1] += row_offsets[i];
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_offsets,
            col_indices,
            values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn from_dense(m: &DenseMatrix) -> Self {
        let mut triplets = Vec::new();
        for i in 0..m.n_rows() {
            for j in 0..m.n_cols() {
                let v = m.get(i, j);
                if v != 0.0 {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(m.n_rows(), m.n_cols(), triplets).expect("indices in range")
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

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    /// Iterates `(col, value)` over the stored entries of one row.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_offsets[i]..self.row_offsets[i + 1];
        self.col_indices[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    pub fn row_nnz(&self, i: usize) -> usize {
        self.row_offsets[i + 1] - self.row_offsets[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let span = self.row_offsets[i]..self.row_offsets[i + 1];
        match self.col_indices[span.clone()].binary_search(&j) {
            Ok(k) => self.values[span.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n_rows.min(self.n_cols)).map(|i| self.get(i, i)).collect()
    }

    /// `y = A x`, charging exactly `nnz` MACs.
    pub fn spmv(&self, x: &[f64], ledger: &mut OpLedger) -> Result<Vec<f64>> {
        let mut y = vec![0.0; self.n_rows];
        self.spmv_into(x, &mut y, ledger)?;
        Ok(y)
    }

    pub fn spmv_into(&self, x: &[f64], y: &mut [f64], ledger: &mut OpLedger) -> Result<()> {
        if x.len() != self.n_cols || y.len() != self.n_rows {
            return Err(Error::DimensionMismatch(format!(
                "spmv with {}x{} matrix, x of length {}, y of length {}",
                self.n_rows,
                self.n_cols,
                x.len(),
                y.len()
            )));
        }
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, a)| a * x[j]).sum();
        }
        ledger.charge(self.nnz() as u64);
        Ok(())
    }

    /// `r = f - A x`, charging `nnz` MACs.
    pub fn residual(&self, x: &[f64], f: &[f64], ledger: &mut OpLedger) -> Result<Vec<f64>> {
        if f.len() != self.n_rows {
            return Err(Error::DimensionMismatch(format!(
                "residual with {} rows and rhs of length {}",
                self.n_rows,
                f.len()
            )));
        }
        let mut r = self.spmv(x, ledger)?;
        for (ri, fi) in r.iter_mut().zip(f) {
            *ri = fi - *ri;
        }
        Ok(r)
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &c in &self.col_indices {
            counts[c + 1] += 1;
        }
        for j in 0..self.n_cols {
            counts[j + 1] += counts[j];
        }
        let row_offsets = counts.clone();
        let mut next = counts;
        let mut col_indices = vec![0usize; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.n_rows {
            for (j, v) in self.row(i) {
                let slot = next[j];
                col_indices[slot] = i;
                values[slot] = v;
                next[j] += 1;
            }
        }
        Self {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_offsets,
            col_indices,
            values,
        }
    }

    /// Sparse product `self * other` (row-wise Gustavson accumulation).
    /// Returns the product and the number of MACs it performed.
    pub fn matmul(&self, other: &SparseMatrix) -> Result<(SparseMatrix, u64)> {
        if self.n_cols != other.n_rows {
            return Err(Error::DimensionMismatch(format!(
                "matmul {}x{} by {}x{}",
                self.n_rows, self.n_cols, other.n_rows, other.n_cols
            )));
        }
        let mut acc = vec![0.0; other.n_cols];
        let mut marker = vec![usize::MAX; other.n_cols];
        let mut row_offsets = vec![0usize; self.n_rows + 1];
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        let mut macs = 0u64;
        for i in 0..self.n_rows {
            let mut cols = Vec::new();
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    if marker[j] != i {
                        marker[j] = i;
                        acc[j] = 0.0;
                        cols.push(j);
                    }
                    acc[j] += a * b;
                    macs += 1;
                }
            }
            cols.sort_unstable();
            for j in cols {
                col_indices.push(j);
                values.push(acc[j]);
            }
            row_offsets[i + 1] = col_indices.len();
        }
        Ok((
            Self {
                n_rows: self.n_rows,
                n_cols: other.n_cols,
                row_offsets,
                col_indices,
                values,
            },
            macs,
        ))
    }

    pub fn scaled(mut self, alpha: f64) -> Self {
        for v in &mut self.values {
            *v *= alpha;
        }
        self
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.n_rows, self.n_cols);
        for i in 0..self.n_rows {
            for (j, v) in self.row(i) {
                m.set(i, j, v);
            }
        }
        m
    }

    /// Largest `|i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.n_rows)
            .flat_map(|i| self.row(i).map(move |(j, _)| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }

    /// Largest `|a_ij - a_ji|` over the matrix.
    pub fn asymmetry(&self) -> f64 {
        let t = self.transpose();
        let mut worst: f64 = 0.0;
        for i in 0..self.n_rows {
            for (j, v) in self.row(i) {
                worst = worst.max((v - t.get(i, j)).abs());
            }
            for (j, v) in t.row(i) {
                worst = worst.max((v - self.get(i, j)).abs());
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poisson_1d(n: usize) -> SparseMatrix {
        let h = 1.0 / (n as f64 + 1.0);
        let s = 1.0 / (h * h);
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0 * s));
            if i > 0 {
                t.push((i, i - 1, -s));
            }
            if i + 1 < n {
                t.push((i, i + 1, -s));
            }
        }
        SparseMatrix::from_triplets(n, n, t).unwrap()
    }

    #[test]
    fn spmv_identity() {
        let mut ledger = OpLedger::new();
        let y = SparseMatrix::identity(2).spmv(&[3.0, 4.0], &mut ledger).unwrap();
        assert_eq!(y, vec![3.0, 4.0]);
        assert_eq!(ledger.macs(), 2);
    }

    #[test]
    fn spmv_row_sums() {
        let a = SparseMatrix::from_triplets(2, 2, vec![(0, 0, 2.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 2.0)]).unwrap();
        let mut ledger = OpLedger::new();
        assert_eq!(a.spmv(&[1.0, 1.0], &mut ledger).unwrap(), vec![1.0, 1.0]);
        assert_eq!(ledger.macs(), 4);
    }

    #[test]
    fn spmv_poisson_ones() {
        // tridiag(-1,2,-1)/h^2 with h = 1/5: only boundary rows keep a 1/h^2 = 25.
        let a = poisson_1d(4);
        let mut ledger = OpLedger::new();
        let y = a.spmv(&[1.0; 4], &mut ledger).unwrap();
        for (got, want) in y.iter().zip([25.0, 0.0, 0.0, 25.0]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
        assert_eq!(ledger.macs(), 10);
    }

    #[test]
    fn spmv_dimension_mismatch() {
        let mut ledger = OpLedger::new();
        let err = SparseMatrix::identity(3).spmv(&[1.0, 2.0], &mut ledger).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
        assert_eq!(ledger.macs(), 0);
    }

    #[test]
    fn triplets_sum_duplicates() {
        let a = SparseMatrix::from_triplets(2, 3, vec![(1, 2, 1.0), (0, 1, 2.0), (1, 2, 0.5)]).unwrap();
        assert_eq!(a.nnz(), 2);
        assert_eq!(a.get(1, 2), 1.5);
        assert_eq!(a.row_offsets(), &[0, 1, 2]);
    }

    #[test]
    fn from_csr_rejects_unsorted_columns() {
        let err = SparseMatrix::from_csr(1, 3, vec![0, 2], vec![2, 1], vec![1.0, 1.0]).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn matmul_matches_dense() {
        let a = poisson_1d(5);
        let b = SparseMatrix::from_triplets(5, 2, vec![(0, 0, 1.0), (2, 1, 3.0), (4, 0, -1.0)]).unwrap();
        let (c, _) = a.matmul(&b).unwrap();
        let dense = a.to_dense().matmul(&b.to_dense()).unwrap();
        for i in 0..5 {
            for j in 0..2 {
                assert!((c.get(i, j) - dense.get(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn transpose_twice_is_identity() {
        let a = SparseMatrix::from_triplets(3, 4, vec![(0, 3, 1.0), (2, 0, 2.0), (1, 1, 5.0)]).unwrap();
        assert_eq!(a.transpose().transpose(), a);
        assert_eq!(a.transpose().get(3, 0), 1.0);
    }
}
