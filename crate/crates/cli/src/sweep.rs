//! Runs every configuration of a solver space and measures it.

use rayon::prelude::*;
use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

use metasolve::coarse::{build_coarse_operator, CoarseOperator};
use metasolve::krylov::KrylovKind;
use metasolve::linalg::OpLedger;
use metasolve::meta::{
    build_multigrid, enumerate_space, run_meta, setup_smoother, symmetry_defect, MetaConfig, NOneNPreconditioner,
    RunOptions, SolverSetup,
};
use metasolve::metrics::{measure, PerformanceRecord, RunOutput};
use metasolve::multigrid::Multigrid;
use metasolve::problems::ProblemInstance;
use metasolve::smoothers::SmootherKind;

use crate::config::RunConfig;
use crate::CliError;

/// Probes per symmetry check of an FCG preconditioner.
const SYMMETRY_PROBES: usize = 3;
const SYMMETRY_TOL: f64 = 1e-10;
pub const NONSYMMETRIC_FLAG: &str = "fcg-nonsymmetric-preconditioner";

/// Setup objects shared between runs: one coarse operator per provider and
/// one hierarchy per (levels, smoother).
pub struct SetupCache {
    problem: ProblemInstance,
    coarse: HashMap<String, Arc<CoarseOperator>>,
    multigrid: HashMap<(usize, SmootherKind), Arc<Multigrid>>,
}

impl SetupCache {
    pub fn build(cfg: &RunConfig, problem: ProblemInstance, configs: &[MetaConfig]) -> Result<Self, CliError> {
        let opts = cfg.run_options();
        let mut coarse = HashMap::new();
        let mut multigrid = HashMap::new();
        for c in configs {
            if !coarse.contains_key(c.provider()) {
                let basis = cfg.preset(c.provider())?.build_basis(&problem)?;
                let op = build_coarse_operator(basis, &problem.a, &mut OpLedger::new())?;
                coarse.insert(c.provider().to_string(), Arc::new(op));
            }
            let key = (c.mg_levels(), c.smoother());
            if c.mg_levels() > 0 && !multigrid.contains_key(&key) {
                let mg = build_multigrid(&problem, c.mg_levels(), setup_smoother(c, &opts))?.expect("levels > 0");
                multigrid.insert(key, Arc::new(mg));
            }
        }
        Ok(Self {
            problem,
            coarse,
            multigrid,
        })
    }

    pub fn problem(&self) -> &ProblemInstance {
        &self.problem
    }

    pub fn setup_for(&self, c: &MetaConfig) -> SolverSetup {
        SolverSetup {
            coarse: Arc::clone(&self.coarse[c.provider()]),
            multigrid: (c.mg_levels() > 0).then(|| Arc::clone(&self.multigrid[&(c.mg_levels(), c.smoother())])),
        }
    }
}

/// Runs one configuration. Failed runs become records with
/// `converged = false`, the error in `flags`, `f2 = 1` (the error of the
/// zero initial guess) and the resources used up to the failure.
pub fn run_one(cfg: &RunConfig, cache: &SetupCache, c: &MetaConfig) -> Result<PerformanceRecord, CliError> {
    let opts: RunOptions = cfg.run_options();
    let p = cache.problem();
    let setup = cache.setup_for(c);
    let mut ledger = OpLedger::new();
    let start = Instant::now();
    let outcome = run_meta(c, p, &setup, &opts, &mut ledger);
    let elapsed = start.elapsed();
    let basis = setup.coarse.basis();
    let mut record = match outcome {
        Ok(run) => {
            let out = RunOutput {
                u: run.u,
                trace: run.trace,
                ledger,
                elapsed,
            };
            let mut r = measure(c, &out, basis, &p.u_ref, true)?;
            if !r.converged {
                r.flags.push(format!("nonconverged: max_iters = {} reached", opts.max_iters));
            }
            r
        }
        Err(e) => {
            let iterations = match &e {
                metasolve::Error::Divergence { iteration, .. } => *iteration as u64,
                _ => 1,
            };
            PerformanceRecord {
                solver_id: c.id(),
                family: c.family(),
                config: c.clone(),
                converged: false,
                flags: vec![format!("failed: {e}")],
                f1_time_s: elapsed.as_secs_f64(),
                f2_rel_error: 1.0,
                f3_iterations: iterations.max(1),
                f4_conv_rate: 0.0,
                f5_memory_bytes: ledger.peak_bytes() as f64,
                f6_macs: ledger.macs(),
                f7_training_time_s: basis.training_time_s,
            }
        }
    };
    if let MetaConfig::Krylov(k) = c {
        if k.krylov == KrylovKind::Fcg {
            let pc = NOneNPreconditioner::new(&p.a, k.smoother, opts.omega, k.strategy, &setup)?;
            let defect = symmetry_defect(&pc, p.n_unknowns(), SYMMETRY_PROBES, cfg.seed)?;
            if defect > SYMMETRY_TOL || k.symmetry_flag().is_some() {
                record.flags.push(NONSYMMETRIC_FLAG.to_string());
            }
        }
    }
    Ok(record)
}

/// Enumerates the configured space and runs it, in enumeration order.
pub fn run_sweep(cfg: &RunConfig) -> Result<Vec<PerformanceRecord>, CliError> {
    let configs = enumerate_space(cfg.family, &cfg.filters);
    if configs.is_empty() {
        return Err(CliError::Usage("the filters select no configurations".into()));
    }
    let cache = SetupCache::build(cfg, cfg.problem.assemble()?, &configs)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    pool.install(|| configs.par_iter().map(|c| run_one(cfg, &cache, c)).collect())
}

/// Runs a single configuration given by id.
pub fn run_single(cfg: &RunConfig, id: &str) -> Result<PerformanceRecord, CliError> {
    let c = MetaConfig::parse_id(id)?;
    if c.family() != cfg.family {
        return Err(CliError::Usage(format!("`{id}` is not a {} configuration", cfg.family)));
    }
    let cache = SetupCache::build(cfg, cfg.problem.assemble()?, std::slice::from_ref(&c))?;
    run_one(cfg, &cache, &c)
}
