//! Geometric V-cycle over a [`Hierarchy`] with a banded direct solve on the
//! coarsest grid. The fine-level smoother is supplied by the caller so that
//! hybrid relaxation/coarse-correction kernels can be embedded.

use crate::error::{Error, Result};
use crate::linalg::{axpy, BandedCholesky, OpLedger};
use crate::problems::Hierarchy;
use crate::smoothers::{Smoother, SmootherConfig};

/// Fine-level smoothing step acting in place on `(u, f)`.
pub type FineSmoother<'a> = dyn FnMut(&mut [f64], &[f64], &mut OpLedger) -> Result<()> + 'a;

#[derive(Debug, Clone)]
pub struct Multigrid {
    hierarchy: Hierarchy,
    /// Smoothers for levels `1..depth-1`; index 0 is unused.
    smoothers: Vec<Option<Smoother>>,
    coarse_solver: BandedCholesky,
}

impl Multigrid {
    /// `hierarchy` must contain at least two grids.
    pub fn new(hierarchy: Hierarchy, smoother: SmootherConfig) -> Result<Self> {
        if hierarchy.depth() < 2 {
            return Err(Error::InvalidArgument("multigrid needs at least two levels".into()));
        }
        let depth = hierarchy.depth();
        let smoothers = hierarchy
            .levels
            .iter()
            .enumerate()
            .map(|(l, level)| {
                if l == 0 || l + 1 == depth {
                    Ok(None)
                } else {
                    Smoother::new(smoother, &level.a).map(Some)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let coarse_solver = BandedCholesky::new(&hierarchy.coarsest().a)?;
        Ok(Self {
            hierarchy,
            smoothers,
            coarse_solver,
        })
    }

    pub fn depth(&self) -> usize {
        self.hierarchy.depth()
    }

    pub fn hierarchy(&self) -> &Hierarchy {
        &self.hierarchy
    }

    /// Charges the setup cost (Galerkin products, coarse factorization) and
    /// the reals the hierarchy keeps live.
    pub fn account_setup(&self, ledger: &mut OpLedger) {
        ledger.alloc((self.hierarchy.storage() + self.coarse_solver.storage()) as u64);
        ledger.charge(self.hierarchy.galerkin_macs + self.coarse_solver.factor_macs());
    }

    /// One V-cycle on `A_0 u = f`, updating `u` in place.
    pub fn v_cycle(&self, u: &mut [f64], f: &[f64], fine: &mut FineSmoother<'_>, ledger: &mut OpLedger) -> Result<()> {
        self.cycle(0, u, f, fine, ledger)
    }

    fn cycle(&self, level: usize, u: &mut [f64], f: &[f64], fine: &mut FineSmoother<'_>, ledger: &mut OpLedger) -> Result<()> {
        let grid = &self.hierarchy.levels[level];
        if level + 1 == self.depth() {
            let r = grid.a.residual(u, f, ledger)?;
            let e = self.coarse_solver.solve(&r, ledger)?;
            axpy(1.0, &e, u, ledger);
            return Ok(());
        }
        self.smooth(level, u, f, fine, ledger)?;

        let n = u.len() as u64;
        let restrict = grid.restrict.as_ref().expect("non-coarsest level has transfers");
        let interp = grid.interp.as_ref().expect("non-coarsest level has transfers");
        let nc = restrict.n_rows() as u64;
        ledger.alloc(2 * n + 2 * nc);
        let r = grid.a.residual(u, f, ledger)?;
        let rc = restrict.spmv(&r, ledger)?;
        let mut ec = vec![0.0; rc.len()];
        self.cycle(level + 1, &mut ec, &rc, fine, ledger)?;
        let correction = interp.spmv(&ec, ledger)?;
        axpy(1.0, &correction, u, ledger);
        ledger.free(2 * n + 2 * nc);

        self.smooth(level, u, f, fine, ledger)
    }

    fn smooth(&self, level: usize, u: &mut [f64], f: &[f64], fine: &mut FineSmoother<'_>, ledger: &mut OpLedger) -> Result<()> {
        match &self.smoothers[level] {
            None => fine(u, f, ledger),
            Some(s) => s.apply(&self.hierarchy.levels[level].a, u, f, ledger),
        }
    }
}
