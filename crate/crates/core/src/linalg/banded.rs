use super::{OpLedger, SparseMatrix};
use crate::error::{Error, Result};

/// Cholesky factor of a symmetric positive definite banded matrix.
///
/// Row `i` of the lower factor is stored for columns `i - bw ..= i`.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    band: Vec<f64>,
    factor_macs: u64,
}

impl BandedCholesky {
    pub fn new(a: &SparseMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch("banded Cholesky of non-square matrix".into()));
        }
        let n = a.n_rows();
        let bw = a.bandwidth();
        let width = bw + 1;
        let mut band = vec![0.0; n * width];
        // slot (i, j) with i - bw <= j <= i lives at i * width + (j + bw - i)
        for i in 0..n {
            for (j, v) in a.row(i) {
                if j <= i {
                    band[i * width + j + bw - i] = v;
                }
            }
        }
        let mut macs = 0u64;
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let kstart = lo.max(j.saturating_sub(bw));
                let mut s = band[i * width + j + bw - i];
                for k in kstart..j {
                    s -= band[i * width + k + bw - i] * band[j * width + k + bw - j];
                }
                macs += (j - kstart) as u64;
                if j == i {
                    if s <= 0.0 || !s.is_finite() {
                        return Err(Error::NotPositiveDefinite { row: i, pivot: s });
                    }
                    band[i * width + bw] = s.sqrt();
                } else {
                    band[i * width + j + bw - i] = s / band[j * width + bw];
                    macs += 1;
                }
            }
        }
        Ok(Self {
            n,
            bw,
            band,
            factor_macs: macs,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn factor_macs(&self) -> u64 {
        self.factor_macs
    }

    /// Number of stored reals.
    pub fn storage(&self) -> usize {
        self.band.len()
    }

    pub fn solve(&self, b: &[f64], ledger: &mut OpLedger) -> Result<Vec<f64>> {
        if b.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "banded solve of size {} with rhs of length {}",
                self.n,
                b.len()
            )));
        }
        let (n, bw, width) = (self.n, self.bw, self.bw + 1);
        let mut y = b.to_vec();
        let mut macs = 0u64;
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let mut s = y[i];
            for k in lo..i {
                s -= self.band[i * width + k + bw - i] * y[k];
            }
            y[i] = s / self.band[i * width + bw];
            macs += (i - lo + 1) as u64;
        }
        for i in (0..n).rev() {
            let hi = (i + bw).min(n - 1);
            let mut s = y[i];
            for k in i + 1..=hi {
                s -= self.band[k * width + i + bw - k] * y[k];
            }
            y[i] = s / self.band[i * width + bw];
            macs += (hi - i + 1) as u64;
        }
        ledger.charge(macs);
        Ok(y)
    }
}
