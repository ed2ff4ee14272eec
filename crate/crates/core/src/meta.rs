//! Composed meta-solvers: hybrid relaxation/coarse-correction iterations and
//! flexible Krylov methods preconditioned by the N-1-N kernel, optionally
//! wrapped in a geometric V-cycle.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use crate::coarse::{apply_m2, build_basis, build_coarse_operator, BasisProvider, CoarseBasis, CoarseOperator, ProviderKind};
use crate::error::{Error, Result};
use crate::krylov::{krylov_solve, KrylovConfig, KrylovKind, SolveTrace};
use crate::linalg::{axpy, norm2, OpLedger, SparseMatrix};
use crate::multigrid::Multigrid;
use crate::problems::{coarsen, ProblemInstance};
use crate::smoothers::{Smoother, SmootherConfig, SmootherKind, DEFAULT_OMEGA};

/// Provider labels of the relaxation family.
pub const RELAX_PROVIDERS: [&str; 7] = ["DeepONet", "U-Net", "FNO", "Transformer", "KAN", "JacobiKAN", "ChebyKAN"];
/// Provider labels of the Krylov family.
pub const KRYLOV_PROVIDERS: [&str; 5] = ["DeepONet", "U-Net", "KAN", "JacobiKAN", "ChebyKAN"];
/// `k` in `x3 = 2^-k`.
pub const PROPORTION_EXPONENTS: [u32; 7] = [1, 2, 3, 4, 5, 6, 7];
/// `N` of the N-1-N smoothing pattern.
pub const STRATEGIES: [usize; 5] = [1, 3, 5, 7, 9];
/// Extra multigrid levels: 0 is no multigrid, 1 two grids, 2 three grids.
pub const MG_LEVELS: [usize; 3] = [0, 1, 2];

/// A residual this many times the initial one aborts a hybrid run.
pub const DIVERGENCE_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Relax,
    Krylov,
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Relax => "relax",
            Family::Krylov => "krylov",
        })
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relax" => Ok(Family::Relax),
            "krylov" => Ok(Family::Krylov),
            other => Err(Error::InvalidArgument(format!("unknown family `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RelaxMetaConfig {
    pub provider: String,
    pub smoother: SmootherKind,
    /// `k` with proportion `x3 = 2^-k`.
    pub proportion_exp: u32,
    pub mg_levels: usize,
}

impl RelaxMetaConfig {
    pub fn new(provider: impl Into<String>, smoother: SmootherKind, proportion_exp: u32, mg_levels: usize) -> Result<Self> {
        if !PROPORTION_EXPONENTS.contains(&proportion_exp) {
            return Err(Error::InvalidArgument(format!("proportion exponent must be in 1..=7, got {proportion_exp}")));
        }
        check_levels(mg_levels)?;
        Ok(Self {
            provider: provider.into(),
            smoother,
            proportion_exp,
            mg_levels,
        })
    }

    pub fn proportion(&self) -> f64 {
        0.5f64.powi(self.proportion_exp as i32)
    }

    /// Fine steps per coarse correction, `1 / x3`.
    pub fn cycle_length(&self) -> usize {
        1 << self.proportion_exp
    }

    pub fn id(&self) -> String {
        format!(
            "relax:{}:{}:1/{}:L{}",
            self.provider,
            self.smoother.label(),
            self.cycle_length(),
            self.mg_levels
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KrylovMetaConfig {
    pub provider: String,
    pub krylov: KrylovKind,
    pub smoother: SmootherKind,
    pub strategy: usize,
    pub mg_levels: usize,
}

impl KrylovMetaConfig {
    pub fn new(
        provider: impl Into<String>,
        krylov: KrylovKind,
        smoother: SmootherKind,
        strategy: usize,
        mg_levels: usize,
    ) -> Result<Self> {
        if !STRATEGIES.contains(&strategy) {
            return Err(Error::InvalidArgument(format!("strategy N must be odd in 1..=9, got {strategy}")));
        }
        check_levels(mg_levels)?;
        Ok(Self {
            provider: provider.into(),
            krylov,
            smoother,
            strategy,
            mg_levels,
        })
    }

    pub fn id(&self) -> String {
        let n = self.strategy;
        format!(
            "krylov:{}:{}:{}:{n}-1-{n}:L{}",
            self.provider,
            self.krylov.label(),
            self.smoother.label(),
            self.mg_levels
        )
    }

    /// FCG assumes a symmetric preconditioner; GS and SOR kernels are not.
    pub fn symmetry_flag(&self) -> Option<&'static str> {
        (self.krylov == KrylovKind::Fcg && !self.smoother.is_symmetric()).then_some("fcg-nonsymmetric-preconditioner")
    }
}

fn check_levels(levels: usize) -> Result<()> {
    if MG_LEVELS.contains(&levels) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("multigrid levels must be 0, 1 or 2, got {levels}")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum MetaConfig {
    Relax(RelaxMetaConfig),
    Krylov(KrylovMetaConfig),
}

impl MetaConfig {
    pub fn id(&self) -> String {
        match self {
            MetaConfig::Relax(c) => c.id(),
            MetaConfig::Krylov(c) => c.id(),
        }
    }

    pub fn family(&self) -> Family {
        match self {
            MetaConfig::Relax(_) => Family::Relax,
            MetaConfig::Krylov(_) => Family::Krylov,
        }
    }

    pub fn provider(&self) -> &str {
        match self {
            MetaConfig::Relax(c) => &c.provider,
            MetaConfig::Krylov(c) => &c.provider,
        }
    }

    pub fn mg_levels(&self) -> usize {
        match self {
            MetaConfig::Relax(c) => c.mg_levels,
            MetaConfig::Krylov(c) => c.mg_levels,
        }
    }

    pub fn smoother(&self) -> SmootherKind {
        match self {
            MetaConfig::Relax(c) => c.smoother,
            MetaConfig::Krylov(c) => c.smoother,
        }
    }

    /// Parses an id produced by [`MetaConfig::id`].
    pub fn parse_id(id: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("malformed solver id `{id}`"));
        let parts: Vec<&str> = id.split(':').collect();
        let levels = |s: &str| s.strip_prefix('L').and_then(|l| l.parse::<usize>().ok()).ok_or_else(bad);
        match parts.as_slice() {
            ["relax", provider, smoother, prop, lv] => {
                let len: usize = prop.strip_prefix("1/").and_then(|d| d.parse().ok()).ok_or_else(bad)?;
                if !len.is_power_of_two() {
                    return Err(bad());
                }
                let cfg = RelaxMetaConfig::new(*provider, smoother.parse()?, len.trailing_zeros(), levels(lv)?)?;
                Ok(MetaConfig::Relax(cfg))
            }
            ["krylov", provider, krylov, smoother, strategy, lv] => {
                let n: usize = strategy.split('-').next().and_then(|s| s.parse().ok()).ok_or_else(bad)?;
                if *strategy != format!("{n}-1-{n}") {
                    return Err(bad());
                }
                let cfg = KrylovMetaConfig::new(*provider, krylov.parse()?, smoother.parse()?, n, levels(lv)?)?;
                Ok(MetaConfig::Krylov(cfg))
            }
            _ => Err(bad()),
        }
    }
}

/// Coordinate filters for [`enumerate_space`]; `None` keeps every value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceFilter {
    #[serde(default)]
    pub providers: Option<Vec<String>>,
    #[serde(default)]
    pub smoothers: Option<Vec<SmootherKind>>,
    #[serde(default)]
    pub proportion_exps: Option<Vec<u32>>,
    #[serde(default)]
    pub krylov: Option<Vec<KrylovKind>>,
    #[serde(default)]
    pub strategies: Option<Vec<usize>>,
    #[serde(default)]
    pub mg_levels: Option<Vec<usize>>,
}

fn keep<T: PartialEq>(filter: &Option<Vec<T>>, v: &T) -> bool {
    filter.as_ref().map_or(true, |f| f.contains(v))
}

/// Lists the configurations of a family in a fixed order.
pub fn enumerate_space(family: Family, filter: &SpaceFilter) -> Vec<MetaConfig> {
    let mut out = Vec::new();
    let providers: &[&str] = match family {
        Family::Relax => &RELAX_PROVIDERS,
        Family::Krylov => &KRYLOV_PROVIDERS,
    };
    for provider in providers.iter().filter(|p| keep(&filter.providers, &p.to_string())) {
        match family {
            Family::Relax => {
                for smoother in SmootherKind::ALL.iter().filter(|s| keep(&filter.smoothers, s)) {
                    for k in PROPORTION_EXPONENTS.iter().filter(|k| keep(&filter.proportion_exps, k)) {
                        for lv in MG_LEVELS.iter().filter(|l| keep(&filter.mg_levels, l)) {
                            out.push(MetaConfig::Relax(RelaxMetaConfig {
                                provider: provider.to_string(),
                                smoother: *smoother,
                                proportion_exp: *k,
                                mg_levels: *lv,
                            }));
                        }
                    }
                }
            }
            Family::Krylov => {
                for krylov in KrylovKind::ALL.iter().filter(|k| keep(&filter.krylov, k)) {
                    for smoother in SmootherKind::ALL.iter().filter(|s| keep(&filter.smoothers, s)) {
                        for n in STRATEGIES.iter().filter(|n| keep(&filter.strategies, n)) {
                            for lv in MG_LEVELS.iter().filter(|l| keep(&filter.mg_levels, l)) {
                                out.push(MetaConfig::Krylov(KrylovMetaConfig {
                                    provider: provider.to_string(),
                                    krylov: *krylov,
                                    smoother: *smoother,
                                    strategy: *n,
                                    mg_levels: *lv,
                                }));
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Attributes of the network a provider label stands for.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderPreset {
    pub label: String,
    pub kind: ProviderKind,
    /// Coarse dimension for 1-, 2- and 3-d problems.
    pub m: [usize; 3],
    pub training_time_s: f64,
    pub inference_mac_surcharge: u64,
    /// Basis file, required when `kind = "file"`.
    #[serde(default)]
    pub path: Option<PathBuf>,
}

impl ProviderPreset {
    fn new(label: &str, kind: ProviderKind, m: [usize; 3], training_time_s: f64, surcharge: u64) -> Self {
        Self {
            label: label.to_string(),
            kind,
            m,
            training_time_s,
            inference_mac_surcharge: surcharge,
            path: None,
        }
    }

    /// Coarse dimension for `p`, capped at the number of unknowns.
    pub fn m_for(&self, p: &ProblemInstance) -> usize {
        self.m[(p.dim - 1).min(2)].min(p.n_unknowns())
    }

    pub fn provider(&self) -> Result<BasisProvider> {
        match self.kind {
            ProviderKind::Spectral => Ok(BasisProvider::Spectral),
            ProviderKind::Polynomial => Ok(BasisProvider::Polynomial),
            ProviderKind::File => self
                .path
                .clone()
                .map(BasisProvider::File)
                .ok_or_else(|| Error::InvalidArgument(format!("provider `{}` has kind file but no path", self.label))),
        }
    }

    /// Builds the basis for `p`. File bases keep the attributes of their
    /// sidecar; synthesized ones take the preset's.
    pub fn build_basis(&self, p: &ProblemInstance) -> Result<CoarseBasis> {
        let provider = self.provider()?;
        let basis = build_basis(&provider, self.m_for(p), p)?.with_label(self.label.clone());
        Ok(match self.kind {
            ProviderKind::File => basis,
            _ => basis.with_attributes(self.training_time_s, self.inference_mac_surcharge),
        })
    }
}

/// Built-in presets for every provider label.
pub fn default_presets() -> Vec<ProviderPreset> {
    use ProviderKind::{Polynomial, Spectral};
    vec![
        ProviderPreset::new("DeepONet", Spectral, [16, 64, 125], 120.0, 200_000),
        ProviderPreset::new("U-Net", Spectral, [12, 48, 100], 300.0, 500_000),
        ProviderPreset::new("FNO", Polynomial, [16, 64, 125], 450.0, 800_000),
        ProviderPreset::new("Transformer", Polynomial, [12, 49, 100], 900.0, 1_500_000),
        ProviderPreset::new("KAN", Spectral, [8, 36, 64], 200.0, 300_000),
        ProviderPreset::new("JacobiKAN", Polynomial, [8, 36, 64], 150.0, 200_000),
        ProviderPreset::new("ChebyKAN", Spectral, [10, 49, 80], 180.0, 250_000),
    ]
}

/// Tolerances and parameters shared by every run of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunOptions {
    pub tol_rel: f64,
    pub max_iters: usize,
    pub omega: f64,
    pub restart: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            tol_rel: 1e-12,
            max_iters: 1000,
            omega: DEFAULT_OMEGA,
            restart: 50,
        }
    }
}

/// Precomputed pieces a run needs: the coarse operator and, when the
/// configuration asks for it, the geometric hierarchy. Runs charge the
/// setup cost to their own ledger via [`SolverSetup::account`].
#[derive(Debug, Clone)]
pub struct SolverSetup {
    pub coarse: Arc<CoarseOperator>,
    pub multigrid: Option<Arc<Multigrid>>,
}

impl SolverSetup {
    pub fn build(p: &ProblemInstance, basis: CoarseBasis, mg_levels: usize, smoother: SmootherConfig) -> Result<Self> {
        let coarse = Arc::new(build_coarse_operator(basis, &p.a, &mut OpLedger::new())?);
        let multigrid = build_multigrid(p, mg_levels, smoother)?.map(Arc::new);
        Ok(Self { coarse, multigrid })
    }

    pub fn account(&self, ledger: &mut OpLedger) {
        self.coarse.account_setup(ledger);
        if let Some(mg) = &self.multigrid {
            mg.account_setup(ledger);
        }
    }
}

/// Hierarchy for `mg_levels` extra grids, `None` for 0.
pub fn build_multigrid(p: &ProblemInstance, mg_levels: usize, smoother: SmootherConfig) -> Result<Option<Multigrid>> {
    check_levels(mg_levels)?;
    if mg_levels == 0 {
        return Ok(None);
    }
    Multigrid::new(coarsen(p, mg_levels)?, smoother).map(Some)
}

/// Smoother used inside a V-cycle or a preconditioner: Jacobi is damped.
pub fn kernel_smoother(kind: SmootherKind, omega: f64) -> SmootherConfig {
    SmootherConfig::for_smoothing(kind, omega)
}

/// `u += M2 (f - A u)`.
pub fn coarse_correction(op: &CoarseOperator, a: &SparseMatrix, u: &mut [f64], f: &[f64], ledger: &mut OpLedger) -> Result<()> {
    let n = u.len() as u64;
    ledger.alloc(2 * n);
    let r = a.residual(u, f, ledger)?;
    let z = apply_m2(op, &r, ledger)?;
    axpy(1.0, &z, u, ledger);
    ledger.free(2 * n);
    Ok(())
}

/// MACs of one [`coarse_correction`].
pub fn coarse_correction_macs(op: &CoarseOperator, a: &SparseMatrix) -> u64 {
    a.nnz() as u64 + op.apply_macs() + a.n_rows() as u64
}

fn check_setup(p: &ProblemInstance, setup: &SolverSetup, mg_levels: usize) -> Result<()> {
    if setup.coarse.basis().n() != p.n_unknowns() {
        return Err(Error::DimensionMismatch(format!(
            "coarse basis has {} rows, problem has {} unknowns",
            setup.coarse.basis().n(),
            p.n_unknowns()
        )));
    }
    let depth = setup.multigrid.as_ref().map_or(1, |mg| mg.depth());
    if depth != mg_levels + 1 {
        return Err(Error::InvalidArgument(format!(
            "configuration wants {} grids but the setup has {depth}",
            mg_levels + 1
        )));
    }
    Ok(())
}

/// Hybrid relaxation step on the cyclic schedule: every `len`-th call is a
/// coarse correction, the rest are smoother sweeps.
struct HybridSchedule<'a> {
    smoother: Smoother,
    coarse: &'a CoarseOperator,
    len: usize,
    step: usize,
    corrections: usize,
}

impl HybridSchedule<'_> {
    fn step(&mut self, a: &SparseMatrix, u: &mut [f64], f: &[f64], ledger: &mut OpLedger) -> Result<()> {
        self.step += 1;
        if self.step % self.len == 0 {
            self.corrections += 1;
            coarse_correction(self.coarse, a, u, f, ledger)
        } else {
            self.smoother.apply(a, u, f, ledger)
        }
    }
}

/// Result of a composed run.
#[derive(Debug, Clone)]
pub struct MetaRun {
    pub u: Vec<f64>,
    pub trace: SolveTrace,
    /// Coarse corrections applied on the finest grid.
    pub coarse_corrections: usize,
}

/// Relaxation meta-solver from `u = 0`. Without multigrid one iteration is
/// one hybrid step; with multigrid one iteration is one V-cycle whose fine
/// smoother is the hybrid step.
pub fn run_relax_meta(
    cfg: &RelaxMetaConfig,
    p: &ProblemInstance,
    setup: &SolverSetup,
    opts: &RunOptions,
    ledger: &mut OpLedger,
) -> Result<MetaRun> {
    check_setup(p, setup, cfg.mg_levels)?;
    setup.account(ledger);
    let n = p.n_unknowns();
    let a = &p.a;
    let smoother_cfg = match &setup.multigrid {
        None => SmootherConfig::standard(cfg.smoother, opts.omega),
        Some(_) => kernel_smoother(cfg.smoother, opts.omega),
    };
    let mut schedule = HybridSchedule {
        smoother: Smoother::new(smoother_cfg, a)?,
        coarse: &setup.coarse,
        len: cfg.cycle_length(),
        step: 0,
        corrections: 0,
    };

    ledger.alloc(2 * n as u64);
    let mut u = vec![0.0; n];
    let mut trace = SolveTrace::new();
    let bnorm = norm2(&p.f, ledger);
    if bnorm == 0.0 {
        trace.residual_history.push(0.0);
        trace.converged = true;
        ledger.free(2 * n as u64);
        return Ok(MetaRun { u, trace, coarse_corrections: 0 });
    }
    while trace.iterations < opts.max_iters {
        match &setup.multigrid {
            None => schedule.step(a, &mut u, &p.f, ledger)?,
            Some(mg) => {
                let mut fine = |u: &mut [f64], f: &[f64], l: &mut OpLedger| schedule.step(a, u, f, l);
                mg.v_cycle(&mut u, &p.f, &mut fine, ledger)?;
            }
        }
        let r = a.residual(&u, &p.f, ledger)?;
        let rel = norm2(&r, ledger) / bnorm;
        trace.push(rel);
        if !rel.is_finite() || rel > DIVERGENCE_FACTOR {
            ledger.free(2 * n as u64);
            return Err(Error::Divergence {
                config: cfg.id(),
                iteration: trace.iterations,
                ratio: rel,
            });
        }
        if rel <= opts.tol_rel {
            trace.converged = true;
            break;
        }
    }
    ledger.free(2 * n as u64);
    Ok(MetaRun {
        u,
        trace,
        coarse_corrections: schedule.corrections,
    })
}

/// The N-1-N kernel on `A z = r` from `z = 0`, or a V-cycle using it as the
/// fine smoother.
pub struct NOneNPreconditioner<'a> {
    a: &'a SparseMatrix,
    smoother: Smoother,
    sweeps: usize,
    setup: &'a SolverSetup,
}

impl<'a> NOneNPreconditioner<'a> {
    pub fn new(a: &'a SparseMatrix, kind: SmootherKind, omega: f64, sweeps: usize, setup: &'a SolverSetup) -> Result<Self> {
        Ok(Self {
            a,
            smoother: Smoother::new(kernel_smoother(kind, omega), a)?,
            sweeps,
            setup,
        })
    }

    fn kernel(&self, z: &mut [f64], r: &[f64], ledger: &mut OpLedger) -> Result<()> {
        for _ in 0..self.sweeps {
            self.smoother.apply(self.a, z, r, ledger)?;
        }
        coarse_correction(&self.setup.coarse, self.a, z, r, ledger)?;
        for _ in 0..self.sweeps {
            self.smoother.apply(self.a, z, r, ledger)?;
        }
        Ok(())
    }

    /// MACs of one kernel application without multigrid.
    pub fn kernel_macs(&self) -> u64 {
        2 * self.sweeps as u64 * self.smoother.config().sweep_macs(self.a) + coarse_correction_macs(&self.setup.coarse, self.a)
    }
}

impl crate::krylov::Preconditioner for NOneNPreconditioner<'_> {
    fn apply(&self, r: &[f64], ledger: &mut OpLedger) -> Result<Vec<f64>> {
        let mut z = vec![0.0; r.len()];
        match &self.setup.multigrid {
            None => self.kernel(&mut z, r, ledger)?,
            Some(mg) => {
                let mut fine = |z: &mut [f64], r: &[f64], l: &mut OpLedger| self.kernel(z, r, l);
                mg.v_cycle(&mut z, r, &mut fine, ledger)?;
            }
        }
        Ok(z)
    }
}

/// Krylov meta-solver from `u = 0`.
pub fn run_krylov_meta(
    cfg: &KrylovMetaConfig,
    p: &ProblemInstance,
    setup: &SolverSetup,
    opts: &RunOptions,
    ledger: &mut OpLedger,
) -> Result<MetaRun> {
    check_setup(p, setup, cfg.mg_levels)?;
    setup.account(ledger);
    let kcfg = KrylovConfig::new(cfg.krylov, opts.restart, opts.tol_rel, opts.max_iters)?;
    let precond = NOneNPreconditioner::new(&p.a, cfg.smoother, opts.omega, cfg.strategy, setup)?;
    let (u, trace) = krylov_solve(&kcfg, &p.a, &p.f, &precond, ledger)?;
    let coarse_corrections = trace.iterations;
    Ok(MetaRun { u, trace, coarse_corrections })
}

/// Dispatches on the family.
pub fn run_meta(cfg: &MetaConfig, p: &ProblemInstance, setup: &SolverSetup, opts: &RunOptions, ledger: &mut OpLedger) -> Result<MetaRun> {
    match cfg {
        MetaConfig::Relax(c) => run_relax_meta(c, p, setup, opts, ledger),
        MetaConfig::Krylov(c) => run_krylov_meta(c, p, setup, opts, ledger),
    }
}

/// Smoother configuration a run uses inside the hierarchy.
pub fn setup_smoother(cfg: &MetaConfig, opts: &RunOptions) -> SmootherConfig {
    kernel_smoother(cfg.smoother(), opts.omega)
}

/// Largest `|<Mu,v> - <u,Mv>| / (|Mu||v|)` over `probes` seeded random pairs.
pub fn symmetry_defect(precond: &dyn crate::krylov::Preconditioner, n: usize, probes: usize, seed: u64) -> Result<f64> {
    let mut state = seed;
    let mut next = move || {
        // splitmix64
        state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
        (z >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
    };
    let mut worst = 0.0f64;
    let mut scratch = OpLedger::new();
    for _ in 0..probes {
        let u: Vec<f64> = (0..n).map(|_| next()).collect();
        let v: Vec<f64> = (0..n).map(|_| next()).collect();
        let mu = precond.apply(&u, &mut scratch)?;
        let mv = precond.apply(&v, &mut scratch)?;
        let lhs: f64 = mu.iter().zip(&v).map(|(a, b)| a * b).sum();
        let rhs: f64 = u.iter().zip(&mv).map(|(a, b)| a * b).sum();
        let scale = crate::linalg::vector::norm2_plain(&mu) * crate::linalg::vector::norm2_plain(&v);
        worst = worst.max((lhs - rhs).abs() / scale.max(f64::MIN_POSITIVE));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::krylov::Preconditioner;
    use crate::problems::{assemble_poisson, Kappa};

    fn preset(label: &str) -> ProviderPreset {
        default_presets().into_iter().find(|p| p.label == label).unwrap()
    }

    fn spectral(m: usize, p: &ProblemInstance) -> CoarseBasis {
        build_basis(&BasisProvider::Spectral, m, p).unwrap()
    }

    fn pure_smoother_iterations(p: &ProblemInstance, cfg: SmootherConfig, tol: f64, cap: usize) -> usize {
        let s = Smoother::new(cfg, &p.a).unwrap();
        let mut u = vec![0.0; p.n_unknowns()];
        let mut l = OpLedger::new();
        let b = crate::linalg::vector::norm2_plain(&p.f);
        for it in 1..=cap {
            s.apply(&p.a, &mut u, &p.f, &mut l).unwrap();
            let r = p.a.residual(&u, &p.f, &mut l).unwrap();
            if crate::linalg::vector::norm2_plain(&r) / b <= tol {
                return it;
            }
        }
        usize::MAX
    }

    #[test]
    fn cardinalities() {
        assert_eq!(enumerate_space(Family::Relax, &SpaceFilter::default()).len(), 588);
        assert_eq!(enumerate_space(Family::Krylov, &SpaceFilter::default()).len(), 900);
        let ssor = SpaceFilter {
            smoothers: Some(vec![SmootherKind::Ssor]),
            ..Default::default()
        };
        assert_eq!(enumerate_space(Family::Relax, &ssor).len(), 147);
        assert_eq!(enumerate_space(Family::Krylov, &ssor).len(), 225);
    }

    #[test]
    fn ids_are_unique_and_round_trip() {
        for family in [Family::Relax, Family::Krylov] {
            let all = enumerate_space(family, &SpaceFilter::default());
            let ids: std::collections::HashSet<_> = all.iter().map(MetaConfig::id).collect();
            assert_eq!(ids.len(), all.len());
            for cfg in &all {
                assert_eq!(&MetaConfig::parse_id(&cfg.id()).unwrap(), cfg);
            }
        }
        assert_eq!(
            MetaConfig::parse_id("relax:DeepONet:SSOR:1/8:L0").unwrap().id(),
            "relax:DeepONet:SSOR:1/8:L0"
        );
        assert!(MetaConfig::parse_id("relax:DeepONet:SSOR:1/6:L0").is_err());
        assert!(MetaConfig::parse_id("krylov:DeepONet:FCG:SSOR:2-1-2:L0").is_err());
        assert!(MetaConfig::parse_id("krylov:DeepONet:FCG:SSOR:3-1-3:L3").is_err());
    }

    #[test]
    fn proportions() {
        let c = RelaxMetaConfig::new("DeepONet", SmootherKind::Ssor, 3, 0).unwrap();
        assert_eq!(c.proportion(), 0.125);
        assert_eq!(c.cycle_length(), 8);
        assert!(RelaxMetaConfig::new("DeepONet", SmootherKind::Ssor, 0, 0).is_err());
        assert!(RelaxMetaConfig::new("DeepONet", SmootherKind::Ssor, 8, 0).is_err());
    }

    #[test]
    fn full_basis_converges_within_two_cycles() {
        let p = assemble_poisson(1, 15, Kappa::Constant).unwrap();
        for kind in SmootherKind::ALL {
            let cfg = RelaxMetaConfig::new("full", kind, 1, 0).unwrap();
            let setup = SolverSetup::build(&p, spectral(15, &p), 0, kernel_smoother(kind, 1.5)).unwrap();
            let run = run_relax_meta(&cfg, &p, &setup, &RunOptions::default(), &mut OpLedger::new()).unwrap();
            assert!(run.trace.converged, "{kind:?}");
            assert!(run.trace.iterations <= 4, "{kind:?}: {}", run.trace.iterations);
        }
    }

    #[test]
    fn schedule_arithmetic() {
        let p = assemble_poisson(1, 31, Kappa::Constant).unwrap();
        let cfg = RelaxMetaConfig::new("DeepONet", SmootherKind::GaussSeidel, 2, 0).unwrap();
        let setup = SolverSetup::build(&p, spectral(4, &p), 0, SmootherConfig::gauss_seidel()).unwrap();
        let opts = RunOptions {
            tol_rel: 1e-300,
            max_iters: 12,
            ..Default::default()
        };
        let run = run_relax_meta(&cfg, &p, &setup, &opts, &mut OpLedger::new()).unwrap();
        assert_eq!(run.trace.iterations, 12);
        assert_eq!(run.coarse_corrections, 3);
        assert!(!run.trace.converged);
    }

    #[test]
    fn hybrid_beats_ssor_alone() {
        let p = assemble_poisson(1, 127, Kappa::Constant).unwrap();
        let cfg = RelaxMetaConfig::new("DeepONet", SmootherKind::Ssor, 3, 0).unwrap();
        let setup = SolverSetup::build(&p, spectral(16, &p), 0, SmootherConfig::ssor(1.5)).unwrap();
        let opts = RunOptions {
            max_iters: 100_000,
            ..Default::default()
        };
        let run = run_relax_meta(&cfg, &p, &setup, &opts, &mut OpLedger::new()).unwrap();
        assert!(run.trace.converged);
        let alone = pure_smoother_iterations(&p, SmootherConfig::ssor(1.5), 1e-12, 200_000);
        assert!(run.trace.iterations < alone, "{} vs {alone}", run.trace.iterations);
    }

    #[test]
    fn coarse_space_helps_every_smoother_and_proportion() {
        let p = assemble_poisson(1, 31, Kappa::Constant).unwrap();
        let setup = SolverSetup::build(&p, spectral(8, &p), 0, SmootherConfig::gauss_seidel()).unwrap();
        let opts = RunOptions {
            tol_rel: 1e-8,
            max_iters: 50_000,
            ..Default::default()
        };
        for kind in SmootherKind::ALL {
            let alone = pure_smoother_iterations(&p, SmootherConfig::standard(kind, 1.5), 1e-8, 100_000);
            for k in PROPORTION_EXPONENTS {
                let cfg = RelaxMetaConfig::new("DeepONet", kind, k, 0).unwrap();
                let run = run_relax_meta(&cfg, &p, &setup, &opts, &mut OpLedger::new()).unwrap();
                assert!(run.trace.converged);
                assert!(run.trace.iterations <= alone, "{kind:?} k={k}: {} > {alone}", run.trace.iterations);
            }
        }
    }

    #[test]
    fn relax_with_multigrid_converges() {
        let p = assemble_poisson(2, 15, Kappa::Bump).unwrap();
        for lv in [1, 2] {
            let cfg = RelaxMetaConfig::new("DeepONet", SmootherKind::Jacobi, 2, lv).unwrap();
            let setup = SolverSetup::build(&p, spectral(16, &p), lv, kernel_smoother(SmootherKind::Jacobi, 1.5)).unwrap();
            let mut ledger = OpLedger::new();
            let run = run_relax_meta(&cfg, &p, &setup, &RunOptions::default(), &mut ledger).unwrap();
            assert!(run.trace.converged, "levels {lv}");
        }
    }

    #[test]
    fn mismatched_setup_is_rejected() {
        let p = assemble_poisson(1, 15, Kappa::Constant).unwrap();
        let setup = SolverSetup::build(&p, spectral(4, &p), 0, SmootherConfig::gauss_seidel()).unwrap();
        let cfg = RelaxMetaConfig::new("DeepONet", SmootherKind::GaussSeidel, 1, 1).unwrap();
        assert!(run_relax_meta(&cfg, &p, &setup, &RunOptions::default(), &mut OpLedger::new()).is_err());
    }

    #[test]
    fn kernel_mac_count() {
        let p = assemble_poisson(1, 31, Kappa::Ramp).unwrap();
        let setup = SolverSetup::build(&p, spectral(6, &p), 0, SmootherConfig::ssor(1.5)).unwrap();
        let pc = NOneNPreconditioner::new(&p.a, SmootherKind::Ssor, 1.5, 1, &setup).unwrap();
        let mut ledger = OpLedger::new();
        pc.apply(&p.f, &mut ledger).unwrap();
        let sweep = SmootherConfig::ssor(1.5).sweep_macs(&p.a);
        let corr = p.a.nnz() as u64 + setup.coarse.apply_macs() + 31;
        assert_eq!(ledger.macs(), 2 * sweep + corr);
        assert_eq!(pc.kernel_macs(), ledger.macs());
        assert_eq!(ledger.current_reals(), 0);
    }

    #[test]
    fn fcg_ssor_kernel_converges_quickly() {
        let p = assemble_poisson(1, 127, Kappa::Constant).unwrap();
        let cfg = KrylovMetaConfig::new("DeepONet", KrylovKind::Fcg, SmootherKind::Ssor, 1, 0).unwrap();
        let setup = SolverSetup::build(&p, spectral(16, &p), 0, SmootherConfig::ssor(1.5)).unwrap();
        let run = run_krylov_meta(&cfg, &p, &setup, &RunOptions::default(), &mut OpLedger::new()).unwrap();
        assert!(run.trace.converged);
        assert!(run.trace.iterations <= 15, "{}", run.trace.iterations);
    }

    #[test]
    fn full_basis_krylov_is_one_iteration() {
        let p = assemble_poisson(1, 15, Kappa::Constant).unwrap();
        let setup = SolverSetup::build(&p, spectral(15, &p), 0, SmootherConfig::ssor(1.5)).unwrap();
        for kind in KrylovKind::ALL {
            let cfg = KrylovMetaConfig::new("full", kind, SmootherKind::Ssor, 1, 0).unwrap();
            let run = run_krylov_meta(&cfg, &p, &setup, &RunOptions::default(), &mut OpLedger::new()).unwrap();
            assert!(run.trace.converged);
            assert_eq!(run.trace.iterations, 1, "{kind:?}");
        }
    }

    #[test]
    fn every_krylov_kind_with_multigrid() {
        let p = assemble_poisson(2, 15, Kappa::Ramp).unwrap();
        for kind in KrylovKind::ALL {
            for lv in MG_LEVELS {
                let cfg = KrylovMetaConfig::new("DeepONet", kind, SmootherKind::Ssor, 3, lv).unwrap();
                let setup = SolverSetup::build(&p, spectral(16, &p), lv, SmootherConfig::ssor(1.5)).unwrap();
                let run = run_krylov_meta(&cfg, &p, &setup, &RunOptions::default(), &mut OpLedger::new()).unwrap();
                assert!(run.trace.converged, "{kind:?} L{lv}");
            }
        }
    }

    #[test]
    fn symmetric_kernels_pass_the_probe() {
        let p = assemble_poisson(1, 63, Kappa::Bump).unwrap();
        for (kind, symmetric) in [
            (SmootherKind::Ssor, true),
            (SmootherKind::Jacobi, true),
            (SmootherKind::GaussSeidel, false),
            (SmootherKind::Sor, false),
        ] {
            let setup = SolverSetup::build(&p, spectral(8, &p), 0, kernel_smoother(kind, 1.5)).unwrap();
            let pc = NOneNPreconditioner::new(&p.a, kind, 1.5, 3, &setup).unwrap();
            let d = symmetry_defect(&pc, 63, 5, 7).unwrap();
            assert_eq!(d < 1e-10, symmetric, "{kind:?}: {d}");
        }
        let cfg = KrylovMetaConfig::new("KAN", KrylovKind::Fcg, SmootherKind::Sor, 1, 0).unwrap();
        assert!(cfg.symmetry_flag().is_some());
        let cfg = KrylovMetaConfig::new("KAN", KrylovKind::Fgmres, SmootherKind::Sor, 1, 0).unwrap();
        assert!(cfg.symmetry_flag().is_none());
    }

    #[test]
    fn deterministic_replay() {
        let p = assemble_poisson(2, 15, Kappa::Bump).unwrap();
        let pr = preset("FNO");
        let cfg = MetaConfig::parse_id("krylov:KAN:FBiCGStab:GS:3-1-3:L1").unwrap();
        let once = || {
            let setup = SolverSetup::build(&p, pr.build_basis(&p).unwrap(), 1, setup_smoother(&cfg, &RunOptions::default())).unwrap();
            let mut l = OpLedger::new();
            let run = run_meta(&cfg, &p, &setup, &RunOptions::default(), &mut l).unwrap();
            (run.u, run.trace, l)
        };
        let (u1, t1, l1) = once();
        let (u2, t2, l2) = once();
        assert_eq!(u1, u2);
        assert_eq!(t1, t2);
        assert_eq!(l1, l2);
    }

    #[test]
    fn presets_build_for_every_dimension() {
        for (dim, n) in [(1, 31), (2, 15), (3, 15)] {
            let p = assemble_poisson(dim, n, Kappa::Constant).unwrap();
            for pr in default_presets() {
                let b = pr.build_basis(&p).unwrap();
                assert_eq!(b.m(), pr.m_for(&p));
                assert_eq!(b.training_time_s, pr.training_time_s);
            }
        }
    }
}
