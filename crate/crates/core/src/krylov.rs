//! Flexible Krylov methods: right-preconditioned FGMRES, flexible CG with
//! single-direction re-orthogonalization, and flexible BiCGStab.
//!
//! All three start from `u = 0` and accept a preconditioner that may change
//! between applications. Convergence is declared on the true relative
//! residual `|f - A u| / |f|`.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm2, OpLedger, SparseMatrix};

/// Scalars below this magnitude signal breakdown.
pub const BREAKDOWN_TOL: f64 = 1e-30;

/// A (possibly nonstationary) preconditioner application `z = M r`.
pub trait Preconditioner {
    fn apply(&self, r: &[f64], ledger: &mut OpLedger) -> Result<Vec<f64>>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityPreconditioner;

impl Preconditioner for IdentityPreconditioner {
    fn apply(&self, r: &[f64], _ledger: &mut OpLedger) -> Result<Vec<f64>> {
        Ok(r.to_vec())
    }
}

impl<F> Preconditioner for F
where
    F: Fn(&[f64], &mut OpLedger) -> Result<Vec<f64>>,
{
    fn apply(&self, r: &[f64], ledger: &mut OpLedger) -> Result<Vec<f64>> {
        self(r, ledger)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum KrylovKind {
    Fgmres,
    Fcg,
    Fbicgstab,
}

impl KrylovKind {
    pub const ALL: [KrylovKind; 3] = [KrylovKind::Fgmres, KrylovKind::Fcg, KrylovKind::Fbicgstab];

    pub fn label(self) -> &'static str {
        match self {
            KrylovKind::Fgmres => "FGMRES",
            KrylovKind::Fcg => "FCG",
            KrylovKind::Fbicgstab => "FBiCGStab",
        }
    }
}

impl fmt::Display for KrylovKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for KrylovKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fgmres" => Ok(KrylovKind::Fgmres),
            "fcg" => Ok(KrylovKind::Fcg),
            "fbicgstab" => Ok(KrylovKind::Fbicgstab),
            other => Err(Error::InvalidArgument(format!("unknown Krylov method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KrylovConfig {
    pub kind: KrylovKind,
    /// Restart length, used by FGMRES only.
    pub restart: usize,
    pub tol_rel: f64,
    pub max_iters: usize,
}

impl KrylovConfig {
    pub fn new(kind: KrylovKind, restart: usize, tol_rel: f64, max_iters: usize) -> Result<Self> {
        if !(tol_rel > 0.0) {
            return Err(Error::InvalidArgument(format!("tol_rel must be positive, got {tol_rel}")));
        }
        if restart == 0 || max_iters == 0 {
            return Err(Error::InvalidArgument("restart and max_iters must be at least 1".into()));
        }
        Ok(Self { kind, restart, tol_rel, max_iters })
    }

    pub fn with_kind(kind: KrylovKind) -> Self {
        Self { kind, ..Self::default() }
    }
}

impl Default for KrylovConfig {
    fn default() -> Self {
        Self {
            kind: KrylovKind::Fgmres,
            restart: 50,
            tol_rel: 1e-12,
            max_iters: 1000,
        }
    }
}

/// Iteration record of a solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace {
    pub iterations: usize,
    /// Relative residual 2-norms; entry 0 is the initial residual (= 1).
    pub residual_history: Vec<f64>,
    pub converged: bool,
}

impl SolveTrace {
    pub fn new() -> Self {
        Self {
            iterations: 0,
            residual_history: vec![1.0],
            converged: false,
        }
    }

    pub fn push(&mut self, rel_residual: f64) {
        self.iterations += 1;
        self.residual_history.push(rel_residual);
    }

    pub fn last_residual(&self) -> f64 {
        *self.residual_history.last().expect("history starts non-empty")
    }

    /// Marks convergence, recording the verified true residual if the last
    /// recorded value was a looser estimate.
    pub fn finish_converged(&mut self, true_rel: f64) {
        self.converged = true;
        if self.residual_history.len() > 1 {
            *self.residual_history.last_mut().unwrap() = true_rel;
        }
    }
}

impl Default for SolveTrace {
    fn default() -> Self {
        Self::new()
    }
}

fn check_system(a: &SparseMatrix, f: &[f64]) -> Result<()> {
    if !a.is_square() || f.len() != a.n_rows() {
        return Err(Error::DimensionMismatch(format!(
            "Krylov solve with {}x{} matrix and rhs of length {}",
            a.n_rows(),
            a.n_cols(),
            f.len()
        )));
    }
    Ok(())
}

/// Solves `A u = f` from a zero initial guess.
///
/// A zero right-hand side returns `u = 0` with zero iterations.
pub fn krylov_solve(
    cfg: &KrylovConfig,
    a: &SparseMatrix,
    f: &[f64],
    precond: &dyn Preconditioner,
    ledger: &mut OpLedger,
) -> Result<(Vec<f64>, SolveTrace)> {
    check_system(a, f)?;
    let n = f.len();
    let bnorm = norm2(f, ledger);
    if bnorm == 0.0 {
        let mut trace = SolveTrace::new();
        trace.residual_history.push(0.0);
        trace.converged = true;
        return Ok((vec![0.0; n], trace));
    }
    match cfg.kind {
        KrylovKind::Fgmres => fgmres(cfg, a, f, bnorm, precond, ledger),
        KrylovKind::Fcg => fcg(cfg, a, f, bnorm, precond, ledger),
        KrylovKind::Fbicgstab => fbicgstab(cfg, a, f, bnorm, precond, ledger),
    }
}

fn givens(a: f64, b: f64) -> (f64, f64) {
    if b == 0.0 {
        (1.0, 0.0)
    } else {
        let r = a.hypot(b);
        (a / r, b / r)
    }
}

fn fgmres(
    cfg: &KrylovConfig,
    a: &SparseMatrix,
    f: &[f64],
    bnorm: f64,
    precond: &dyn Preconditioner,
    ledger: &mut OpLedger,
) -> Result<(Vec<f64>, SolveTrace)> {
    let n = f.len() as u64;
    let m = cfg.restart;
    let mut trace = SolveTrace::new();
    let mut u = vec![0.0; f.len()];
    ledger.alloc(2 * n); // u, r
    let hess_reals = ((m + 1) * m + 3 * (m + 1)) as u64;
    loop {
        let r = a.residual(&u, f, ledger)?;
        let beta = norm2(&r, ledger);
        if beta / bnorm <= cfg.tol_rel {
            trace.finish_converged(beta / bnorm);
            break;
        }
        if trace.iterations >= cfg.max_iters {
            break;
        }
        ledger.alloc(hess_reals);
        let mut basis: Vec<Vec<f64>> = vec![r.into_iter().map(|v| v / beta).collect()];
        let mut dirs: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        ledger.alloc(n);
        let mut used = 0;
        for j in 0..m {
            if trace.iterations >= cfg.max_iters {
                break;
            }
            let z = precond.apply(&basis[j], ledger)?;
            ledger.alloc(n);
            let mut w = a.spmv(&z, ledger)?;
            dirs.push(z);
            for (i, v) in basis.iter().enumerate() {
                h[i][j] = dot(&w, v, ledger);
                axpy(-h[i][j], v, &mut w, ledger);
            }
            h[j + 1][j] = norm2(&w, ledger);
            for i in 0..j {
                let t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            let (c, s) = givens(h[j][j], h[j + 1][j]);
            cs[j] = c;
            sn[j] = s;
            let sub = h[j + 1][j];
            h[j][j] = c * h[j][j] + s * sub;
            h[j + 1][j] = 0.0;
            g[j + 1] = -s * g[j];
            g[j] *= c;
            used = j + 1;
            let est = g[j + 1].abs() / bnorm;
            trace.push(est);
            if est <= cfg.tol_rel || sub <= BREAKDOWN_TOL * bnorm.max(1.0) {
                break;
            }
            ledger.alloc(n);
            basis.push(w.into_iter().map(|v| v / sub).collect());
        }
        // Back substitution for the least-squares coefficients.
        let mut y = vec![0.0; used];
        for i in (0..used).rev() {
            let s: f64 = (i + 1..used).map(|k| h[i][k] * y[k]).sum();
            if h[i][i].abs() <= BREAKDOWN_TOL {
                return Err(Error::Breakdown { method: "FGMRES", scalar: "H[i,i]", value: h[i][i] });
            }
            y[i] = (g[i] - s) / h[i][i];
        }
        ledger.charge((used * (used + 1) / 2) as u64);
        for (yi, z) in y.iter().zip(&dirs) {
            axpy(*yi, z, &mut u, ledger);
        }
        ledger.free(hess_reals + (basis.len() + dirs.len()) as u64 * n);
        if used == 0 {
            break;
        }
    }
    ledger.free(2 * n);
    Ok((u, trace))
}

fn true_residual(a: &SparseMatrix, u: &[f64], f: &[f64], bnorm: f64, ledger: &mut OpLedger) -> Result<(Vec<f64>, f64)> {
    let r = a.residual(u, f, ledger)?;
    let rel = norm2(&r, ledger) / bnorm;
    Ok((r, rel))
}

fn fcg(
    cfg: &KrylovConfig,
    a: &SparseMatrix,
    f: &[f64],
    bnorm: f64,
    precond: &dyn Preconditioner,
    ledger: &mut OpLedger,
) -> Result<(Vec<f64>, SolveTrace)> {
    let n = f.len();
    ledger.alloc(7 * n as u64); // u, r, z, p, q, previous p and q
    let mut trace = SolveTrace::new();
    let mut u = vec![0.0; n];
    let mut r = f.to_vec();
    let mut prev: Option<(Vec<f64>, Vec<f64>, f64)> = None;
    while trace.iterations < cfg.max_iters {
        let z = precond.apply(&r, ledger)?;
        let mut p = z.clone();
        if let Some((pp, qp, pq_prev)) = &prev {
            let beta = -dot(&z, qp, ledger) / pq_prev;
            axpy(beta, pp, &mut p, ledger);
        }
        let q = a.spmv(&p, ledger)?;
        let pq = dot(&p, &q, ledger);
        if pq <= BREAKDOWN_TOL {
            ledger.free(7 * n as u64);
            return Err(Error::Breakdown { method: "FCG", scalar: "p^T A p", value: pq });
        }
        let alpha = dot(&p, &r, ledger) / pq;
        axpy(alpha, &p, &mut u, ledger);
        axpy(-alpha, &q, &mut r, ledger);
        let rel = norm2(&r, ledger) / bnorm;
        trace.push(rel);
        prev = Some((p, q, pq));
        if rel <= cfg.tol_rel {
            let (r_true, rel_true) = true_residual(a, &u, f, bnorm, ledger)?;
            if rel_true <= cfg.tol_rel {
                trace.finish_converged(rel_true);
                break;
            }
            r = r_true;
            prev = None;
        }
    }
    ledger.free(7 * n as u64);
    Ok((u, trace))
}

fn fbicgstab(
    cfg: &KrylovConfig,
    a: &SparseMatrix,
    f: &[f64],
    bnorm: f64,
    precond: &dyn Preconditioner,
    ledger: &mut OpLedger,
) -> Result<(Vec<f64>, SolveTrace)> {
    let n = f.len();
    ledger.alloc(9 * n as u64); // u, r, r_hat, p, v, p_hat, s, s_hat, t
    let mut trace = SolveTrace::new();
    let mut u = vec![0.0; n];
    let mut r = f.to_vec();
    let mut r_hat = r.clone();
    let (mut rho_prev, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    let breakdown = |ledger: &mut OpLedger, scalar, value| {
        ledger.free(9 * n as u64);
        Err(Error::Breakdown { method: "FBiCGStab", scalar, value })
    };
    while trace.iterations < cfg.max_iters {
        let rho = dot(&r_hat, &r, ledger);
        if rho.abs() < BREAKDOWN_TOL {
            return breakdown(ledger, "rho", rho);
        }
        let beta = (rho / rho_prev) * (alpha / omega);
        // p = r + beta (p - omega v)
        axpy(-omega, &v, &mut p, ledger);
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
        ledger.charge(n as u64);
        let p_hat = precond.apply(&p, ledger)?;
        v = a.spmv(&p_hat, ledger)?;
        let rv = dot(&r_hat, &v, ledger);
        if rv.abs() < BREAKDOWN_TOL {
            return breakdown(ledger, "r_hat^T v", rv);
        }
        alpha = rho / rv;
        let mut s = r.clone();
        axpy(-alpha, &v, &mut s, ledger);
        let s_rel = norm2(&s, ledger) / bnorm;
        if s_rel <= cfg.tol_rel {
            axpy(alpha, &p_hat, &mut u, ledger);
            trace.push(s_rel);
            let (r_true, rel_true) = true_residual(a, &u, f, bnorm, ledger)?;
            if rel_true <= cfg.tol_rel {
                trace.finish_converged(rel_true);
                break;
            }
            r = r_true;
            r_hat = r.clone();
            rho_prev = 1.0;
            alpha = 1.0;
            omega = 1.0;
            v.iter_mut().for_each(|x| *x = 0.0);
            p.iter_mut().for_each(|x| *x = 0.0);
            continue;
        }
        let s_hat = precond.apply(&s, ledger)?;
        let t = a.spmv(&s_hat, ledger)?;
        let tt = dot(&t, &t, ledger);
        if tt < BREAKDOWN_TOL {
            return breakdown(ledger, "t^T t", tt);
        }
        omega = dot(&t, &s, ledger) / tt;
        if omega.abs() < BREAKDOWN_TOL {
            return breakdown(ledger, "omega", omega);
        }
        axpy(alpha, &p_hat, &mut u, ledger);
        axpy(omega, &s_hat, &mut u, ledger);
        r = s;
        axpy(-omega, &t, &mut r, ledger);
        rho_prev = rho;
        let rel = norm2(&r, ledger) / bnorm;
        trace.push(rel);
        if rel <= cfg.tol_rel {
            let (r_true, rel_true) = true_residual(a, &u, f, bnorm, ledger)?;
            if rel_true <= cfg.tol_rel {
                trace.finish_converged(rel_true);
                break;
            }
            r = r_true;
            r_hat = r.clone();
            rho_prev = 1.0;
            alpha = 1.0;
            omega = 1.0;
            v.iter_mut().for_each(|x| *x = 0.0);
            p.iter_mut().for_each(|x| *x = 0.0);
        }
    }
    ledger.free(9 * n as u64);
    Ok((u, trace))
}
