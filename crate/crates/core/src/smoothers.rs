//! Stationary relaxation: Jacobi, Gauss-Seidel, SOR and SSOR.
//!
//! One directional sweep charges `nnz + n` MACs (every stored entry of a
//! row plus the relaxation update); SSOR charges two sweeps.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{vector::norm2_plain, OpLedger, SparseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SmootherKind {
    Jacobi,
    GaussSeidel,
    Sor,
    Ssor,
}

impl SmootherKind {
    pub const ALL: [SmootherKind; 4] = [
        SmootherKind::Jacobi,
        SmootherKind::GaussSeidel,
        SmootherKind::Sor,
        SmootherKind::Ssor,
    ];

    pub fn label(self) -> &'static str {
        match self {
            SmootherKind::Jacobi => "Jacobi",
            SmootherKind::GaussSeidel => "GS",
            SmootherKind::Sor => "SOR",
            SmootherKind::Ssor => "SSOR",
        }
    }

    /// Whether one sweep is self-adjoint in the A-inner product.
    pub fn is_symmetric(self) -> bool {
        matches!(self, SmootherKind::Jacobi | SmootherKind::Ssor)
    }
}

impl fmt::Display for SmootherKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SmootherKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jacobi" => Ok(SmootherKind::Jacobi),
            "gs" | "gauss-seidel" | "gaussseidel" => Ok(SmootherKind::GaussSeidel),
            "sor" => Ok(SmootherKind::Sor),
            "ssor" => Ok(SmootherKind::Ssor),
            other => Err(Error::InvalidArgument(format!("unknown smoother `{other}`"))),
        }
    }
}

/// Relaxation choice. `omega` is the damping weight for Jacobi and the
/// over-relaxation factor for SOR/SSOR; Gauss-Seidel ignores it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmootherConfig {
    pub kind: SmootherKind,
    pub omega: f64,
}

pub const DEFAULT_OMEGA: f64 = 1.5;
pub const MULTIGRID_JACOBI_DAMPING: f64 = 2.0 / 3.0;

impl SmootherConfig {
    pub fn new(kind: SmootherKind, omega: f64) -> Result<Self> {
        if !(omega > 0.0 && omega < 2.0) {
            return Err(Error::InvalidArgument(format!("relaxation factor {omega} outside (0, 2)")));
        }
        Ok(Self { kind, omega })
    }

    pub fn jacobi() -> Self {
        Self { kind: SmootherKind::Jacobi, omega: 1.0 }
    }

    pub fn damped_jacobi(omega: f64) -> Self {
        Self { kind: SmootherKind::Jacobi, omega }
    }

    pub fn gauss_seidel() -> Self {
        Self { kind: SmootherKind::GaussSeidel, omega: 1.0 }
    }

    pub fn sor(omega: f64) -> Self {
        Self { kind: SmootherKind::Sor, omega }
    }

    pub fn ssor(omega: f64) -> Self {
        Self { kind: SmootherKind::Ssor, omega }
    }

    /// The standard configuration for a kind: plain Jacobi, or SOR/SSOR at `omega`.
    pub fn standard(kind: SmootherKind, omega: f64) -> Self {
        match kind {
            SmootherKind::Jacobi => Self::jacobi(),
            SmootherKind::GaussSeidel => Self::gauss_seidel(),
            SmootherKind::Sor => Self::sor(omega),
            SmootherKind::Ssor => Self::ssor(omega),
        }
    }

    /// Configuration used when relaxing inside multigrid or a preconditioner:
    /// Jacobi is damped by 2/3.
    pub fn for_smoothing(kind: SmootherKind, omega: f64) -> Self {
        match kind {
            SmootherKind::Jacobi => Self::damped_jacobi(MULTIGRID_JACOBI_DAMPING),
            _ => Self::standard(kind, omega),
        }
    }

    fn relaxation(&self) -> f64 {
        match self.kind {
            SmootherKind::GaussSeidel => 1.0,
            _ => self.omega,
        }
    }

    /// MACs charged by one sweep on `a`.
    pub fn sweep_macs(&self, a: &SparseMatrix) -> u64 {
        let one = (a.nnz() + a.n_rows()) as u64;
        match self.kind {
            SmootherKind::Ssor => 2 * one,
            _ => one,
        }
    }
}

/// A smoother bound to a matrix, with its diagonal checked once.
#[derive(Debug, Clone)]
pub struct Smoother {
    cfg: SmootherConfig,
    inv_diag: Vec<f64>,
}

impl Smoother {
    pub fn new(cfg: SmootherConfig, a: &SparseMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch("smoother needs a square matrix".into()));
        }
        let inv_diag = a
            .diagonal()
            .into_iter()
            .enumerate()
            .map(|(row, d)| if d == 0.0 { Err(Error::ZeroDiagonal { row }) } else { Ok(1.0 / d) })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { cfg, inv_diag })
    }

    pub fn config(&self) -> SmootherConfig {
        self.cfg
    }

    /// One sweep in place on `A u = f`.
    pub fn apply(&self, a: &SparseMatrix, u: &mut [f64], f: &[f64], ledger: &mut OpLedger) -> Result<()> {
        let n = self.inv_diag.len();
        if a.n_rows() != n || u.len() != n || f.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "sweep on {n} unknowns with u of length {} and f of length {}",
                u.len(),
                f.len()
            )));
        }
        let w = self.cfg.relaxation();
        match self.cfg.kind {
            SmootherKind::Jacobi => {
                ledger.alloc(n as u64);
                let old = u.to_vec();
                for i in 0..n {
                    let s: f64 = a.row(i).map(|(j, v)| v * old[j]).sum();
                    u[i] = old[i] + w * (f[i] - s) * self.inv_diag[i];
                }
                ledger.free(n as u64);
            }
            SmootherKind::GaussSeidel | SmootherKind::Sor => self.directional(a, u, f, w, false),
            SmootherKind::Ssor => {
                self.directional(a, u, f, w, false);
                self.directional(a, u, f, w, true);
            }
        }
        ledger.charge(self.cfg.sweep_macs(a));
        Ok(())
    }

    fn directional(&self, a: &SparseMatrix, u: &mut [f64], f: &[f64], w: f64, backward: bool) {
        let n = u.len();
        let mut relax = |i: usize| {
            let s: f64 = a.row(i).map(|(j, v)| v * u[j]).sum();
            u[i] += w * (f[i] - s) * self.inv_diag[i];
        };
        if backward {
            (0..n).rev().for_each(&mut relax);
        } else {
            (0..n).for_each(&mut relax);
        }
    }
}

/// Returns one sweep of `cfg` applied to `(a, u, f)`.
pub fn sweep(cfg: SmootherConfig, a: &SparseMatrix, u: &[f64], f: &[f64], ledger: &mut OpLedger) -> Result<Vec<f64>> {
    let smoother = Smoother::new(cfg, a)?;
    let mut out = u.to_vec();
    smoother.apply(a, &mut out, f, ledger)?;
    Ok(out)
}

/// Power-iteration estimate of the spectral radius of the error propagation
/// operator `e -> sweep(e; f = 0)`.
///
/// Uses the two-step ratio `sqrt(|E² e| / |e|)` so that eigenvalue pairs
/// `±rho` do not stall the iteration.
pub fn spectral_radius_estimate(cfg: SmootherConfig, a: &SparseMatrix) -> Result<f64> {
    const MAX_ITERS: usize = 10_000;
    const STOP: f64 = 1e-10;
    let smoother = Smoother::new(cfg, a)?;
    let n = a.n_rows();
    let zero = vec![0.0; n];
    let mut ledger = OpLedger::new();
    // Fixed irrational-stride start vector: deterministic, generic.
    let mut e: Vec<f64> = (0..n).map(|i| 0.5 + ((i as f64 + 1.0) * 0.618_033_988_75).fract()).collect();
    let norm = norm2_plain(&e);
    e.iter_mut().for_each(|v| *v /= norm);
    let mut prev = f64::NAN;
    for _ in 0..MAX_ITERS {
        let mut y = e.clone();
        smoother.apply(a, &mut y, &zero, &mut ledger)?;
        smoother.apply(a, &mut y, &zero, &mut ledger)?;
        let ny = norm2_plain(&y);
        if ny == 0.0 {
            return Ok(0.0);
        }
        let est = ny.sqrt();
        if (est - prev).abs() <= STOP * est {
            return Ok(est);
        }
        prev = est;
        e = y.into_iter().map(|v| v / ny).collect();
    }
    Err(Error::EstimateFailed { iterations: MAX_ITERS })
}
