use super::OpLedger;
use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n_rows: usize,
    n_cols: usize,
    values: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            values: vec![0.0; n_rows * n_cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_row_major(n_rows: usize, n_cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_rows * n_cols {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {n_rows}x{n_cols} matrix",
                values.len()
            )));
        }
        Ok(Self { n_rows, n_cols, values })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::DimensionMismatch("ragged rows".into()));
        }
        Ok(Self {
            n_rows: rows.len(),
            n_cols,
            values: rows.concat(),
        })
    }

    /// Builds an `n x m` matrix from `m` columns of length `n`.
    pub fn from_columns(columns: &[Vec<f64>]) -> Result<Self> {
        let n_rows = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n_rows) {
            return Err(Error::DimensionMismatch("columns of unequal length".into()));
        }
        let mut m = Self::zeros(n_rows, columns.len());
        for (j, col) in columns.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                m.set(i, j, v);
            }
        }
        Ok(m)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.n_cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n_cols, self.n_rows);
        for i in 0..self.n_rows {
            for j in 0..self.n_cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.n_cols != other.n_rows {
            return Err(Error::DimensionMismatch(format!(
                "matmul {}x{} by {}x{}",
                self.n_rows, self.n_cols, other.n_rows, other.n_cols
            )));
        }
        let mut out = Self::zeros(self.n_rows, other.n_cols);
        for i in 0..self.n_rows {
            for k in 0..self.n_cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.n_cols {
                    out.values[i * other.n_cols + j] += a * other.get(k, j);
                }
            }
        }
        Ok(out)
    }

    /// `y = M x`, charging `n_rows * n_cols` MACs.
    pub fn matvec(&self, x: &[f64], ledger: &mut OpLedger) -> Result<Vec<f64>> {
        if x.len() != self.n_cols {
            return Err(Error::DimensionMismatch(format!(
                "matvec with {} columns and vector of length {}",
                self.n_cols,
                x.len()
            )));
        }
        ledger.charge((self.n_rows * self.n_cols) as u64);
        Ok((0..self.n_rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// `y = Mᵀ x`, charging `n_rows * n_cols` MACs.
    pub fn matvec_transpose(&self, x: &[f64], ledger: &mut OpLedger) -> Result<Vec<f64>> {
        if x.len() != self.n_rows {
            return Err(Error::DimensionMismatch(format!(
                "transposed matvec with {} rows and vector of length {}",
                self.n_rows,
                x.len()
            )));
        }
        ledger.charge((self.n_rows * self.n_cols) as u64);
        let mut y = vec![0.0; self.n_cols];
        for (i, &xi) in x.iter().enumerate() {
            for (yj, a) in y.iter_mut().zip(self.row(i)) {
                *yj += a * xi;
            }
        }
        Ok(y)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest entrywise difference; matrices must share a shape.
    pub fn max_abs_diff(&self, other: &DenseMatrix) -> f64 {
        assert_eq!((self.n_rows, self.n_cols), (other.n_rows, other.n_cols));
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// Thin Householder QR of a tall matrix.
///
/// Returns `Q` (`n x m`, orthonormal columns) and `R` (`m x m`, upper
/// triangular with a positive diagonal) such that `Q R = M`.
pub fn dense_qr(m: &DenseMatrix) -> Result<(DenseMatrix, DenseMatrix)> {
    let (n, k) = (m.n_rows(), m.n_cols());
    if n < k {
        return Err(Error::DimensionMismatch(format!("QR needs rows >= cols, got {n}x{k}")));
    }
    let tol = 1e-12 * m.frobenius();
    // Column-major working copy; reflector j lives in work[j][j..].
    let mut work: Vec<Vec<f64>> = (0..k).map(|j| m.column(j)).collect();
    let mut betas = vec![0.0; k];
    let mut reflectors: Vec<Vec<f64>> = Vec::with_capacity(k);

    for j in 0..k {
        let x = &work[j][j..];
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm <= tol {
            return Err(Error::RankDeficient { column: j, diag: norm, tol });
        }
        let alpha = if x[0] >= 0.0 { -norm } else { norm };
        let mut v = x.to_vec();
        v[0] -= alpha;
        let vtv: f64 = v.iter().map(|a| a * a).sum();
        betas[j] = if vtv > 0.0 { 2.0 / vtv } else { 0.0 };
        for col in work.iter_mut().skip(j) {
            let tail = &mut col[j..];
            let s: f64 = v.iter().zip(tail.iter()).map(|(a, b)| a * b).sum::<f64>() * betas[j];
            for (t, vi) in tail.iter_mut().zip(&v) {
                *t -= s * vi;
            }
        }
        reflectors.push(v);
    }

    let mut r = DenseMatrix::zeros(k, k);
    for j in 0..k {
        for i in 0..=j {
            r.set(i, j, work[j][i]);
        }
    }
    // Q = H_0 H_1 ... H_{k-1} applied to the first k columns of I.
    let mut q_cols: Vec<Vec<f64>> = (0..k)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();
    for j in (0..k).rev() {
        let v = &reflectors[j];
        for col in q_cols.iter_mut() {
            let tail = &mut col[j..];
            let s: f64 = v.iter().zip(tail.iter()).map(|(a, b)| a * b).sum::<f64>() * betas[j];
            for (t, vi) in tail.iter_mut().zip(v) {
                *t -= s * vi;
            }
        }
    }
    // Flip signs so that diag(R) > 0.
    for j in 0..k {
        if r.get(j, j) < 0.0 {
            for c in j..k {
                r.set(j, c, -r.get(j, c));
            }
            for v in q_cols[j].iter_mut() {
                *v = -*v;
            }
        }
    }
    Ok((DenseMatrix::from_columns(&q_cols)?, r))
}

/// LU factorization with partial pivoting, stored in place.
#[derive(Debug, Clone)]
pub struct LuFactors {
    n: usize,
    lu: DenseMatrix,
    perm: Vec<usize>,
    factor_macs: u64,
}

pub const PIVOT_TOL: f64 = 1e-14;

impl LuFactors {
    /// Factorizes `m`. A pivot below `1e-14 * max|m|` is treated as singular.
    pub fn new(m: &DenseMatrix) -> Result<Self> {
        if m.n_rows() != m.n_cols() {
            return Err(Error::DimensionMismatch(format!(
                "LU of non-square {}x{} matrix",
                m.n_rows(),
                m.n_cols()
            )));
        }
        let n = m.n_rows();
        let mut lu = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let tol = PIVOT_TOL * m.max_abs().max(f64::MIN_POSITIVE);
        let mut macs = 0u64;
        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|i| (i, lu.get(i, k).abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot <= tol {
                return Err(Error::Singular { row: k, pivot });
            }
            if p != k {
                for j in 0..n {
                    let tmp = lu.get(k, j);
                    lu.set(k, j, lu.get(p, j));
                    lu.set(p, j, tmp);
                }
                perm.swap(k, p);
            }
            let akk = lu.get(k, k);
            for i in k + 1..n {
                let l = lu.get(i, k) / akk;
                lu.set(i, k, l);
                macs += 1;
                for j in k + 1..n {
                    let v = lu.get(i, j) - l * lu.get(k, j);
                    lu.set(i, j, v);
                }
                macs += (n - k - 1) as u64;
            }
        }
        Ok(Self {
            n,
            lu,
            perm,
            factor_macs: macs,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// MACs spent in the factorization.
    pub fn factor_macs(&self) -> u64 {
        self.factor_macs
    }

    /// Solves `M y = b`, charging `n²` MACs.
    pub fn solve(&self, b: &[f64], ledger: &mut OpLedger) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "LU solve of size {} with rhs of length {}",
                self.n,
                b.len()
            )));
        }
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: f64 = (0..i).map(|j| self.lu.get(i, j) * y[j]).sum();
            y[i] -= s;
        }
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| self.lu.get(i, j) * y[j]).sum();
            y[i] = (y[i] - s) / self.lu.get(i, i);
        }
        ledger.charge((n * n) as u64);
        Ok(y)
    }
}

/// Solves a dense square system by LU with partial pivoting.
pub fn solve_dense(m: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let mut ledger = OpLedger::new();
    LuFactors::new(m)?.solve(b, &mut ledger)
}

/// Dense Cholesky factor `L` with `M = L Lᵀ`; fails on a nonpositive pivot.
pub fn cholesky(m: &DenseMatrix) -> Result<DenseMatrix> {
    if m.n_rows() != m.n_cols() {
        return Err(Error::DimensionMismatch("Cholesky of non-square matrix".into()));
    }
    let n = m.n_rows();
    let mut l = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let d = m.get(j, j) - (0..j).map(|k| l.get(j, k) * l.get(j, k)).sum::<f64>();
        if d <= 0.0 || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { row: j, pivot: d });
        }
        let ljj = d.sqrt();
        l.set(j, j, ljj);
        for i in j + 1..n {
            let s = m.get(i, j) - (0..j).map(|k| l.get(i, k) * l.get(j, k)).sum::<f64>();
            l.set(i, j, s / ljj);
        }
    }
    Ok(l)
}
