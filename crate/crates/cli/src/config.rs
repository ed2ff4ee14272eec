//! TOML run configuration.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use metasolve::meta::{default_presets, Family, ProviderPreset, RunOptions, SpaceFilter, KRYLOV_PROVIDERS, RELAX_PROVIDERS};
use metasolve::problems::{assemble_poisson, Kappa, ProblemInstance};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub dim: usize,
    pub n_per_axis: usize,
    #[serde(default = "default_kappa")]
    pub kappa: Kappa,
}

fn default_kappa() -> Kappa {
    Kappa::Constant
}

impl ProblemSpec {
    pub fn assemble(&self) -> Result<ProblemInstance, CliError> {
        Ok(assemble_poisson(self.dim, self.n_per_axis, self.kappa)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default = "default_tol")]
    pub tol_rel: f64,
    /// Defaults to 100000 for the relaxation family and 1000 for Krylov.
    #[serde(default)]
    pub max_iters: Option<usize>,
    #[serde(default = "default_omega")]
    pub omega: f64,
    #[serde(default = "default_restart")]
    pub restart: usize,
}

fn default_tol() -> f64 {
    1e-12
}

fn default_omega() -> f64 {
    metasolve::smoothers::DEFAULT_OMEGA
}

fn default_restart() -> usize {
    50
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            tol_rel: default_tol(),
            max_iters: None,
            omega: default_omega(),
            restart: default_restart(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub results: Option<PathBuf>,
    #[serde(default)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub family: Family,
    pub problem: ProblemSpec,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub filters: SpaceFilter,
    /// Presets replacing the built-in ones with the same label.
    #[serde(default)]
    pub providers: Vec<ProviderPreset>,
    #[serde(default)]
    pub output: OutputSpec,
    /// Worker threads; 0 or absent uses every core.
    #[serde(default)]
    pub jobs: Option<usize>,
}

/// The fields that determine record values, hashed into results headers.
#[derive(Serialize)]
struct HashedView<'a> {
    seed: u64,
    family: Family,
    problem: &'a ProblemSpec,
    solver: &'a SolverSpec,
    filters: &'a SpaceFilter,
    providers: Vec<ProviderPreset>,
}

impl RunConfig {
    pub fn from_toml(text: &str, origin: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config {
            path: origin.to_string(),
            message: e.to_string(),
        })?;
        cfg.validate().map_err(|message| CliError::Config {
            path: origin.to_string(),
            message,
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text, &path.display().to_string())
    }

    /// Minimal config for a family and problem with all defaults.
    pub fn new(family: Family, problem: ProblemSpec) -> Self {
        Self {
            seed: 0,
            family,
            problem,
            solver: SolverSpec::default(),
            filters: SpaceFilter::default(),
            providers: Vec::new(),
            output: OutputSpec::default(),
            jobs: None,
        }
    }

    fn validate(&self) -> Result<(), String> {
        if !(1..=3).contains(&self.problem.dim) {
            return Err(format!("problem.dim must be 1, 2 or 3, got {}", self.problem.dim));
        }
        if self.problem.n_per_axis < 3 {
            return Err(format!("problem.n_per_axis must be at least 3, got {}", self.problem.n_per_axis));
        }
        if !(self.solver.tol_rel > 0.0) {
            return Err(format!("solver.tol_rel must be positive, got {}", self.solver.tol_rel));
        }
        if !(self.solver.omega > 0.0 && self.solver.omega < 2.0) {
            return Err(format!("solver.omega must lie in (0, 2), got {}", self.solver.omega));
        }
        if self.solver.restart == 0 || self.solver.max_iters == Some(0) {
            return Err("solver.restart and solver.max_iters must be at least 1".into());
        }
        let mut seen = BTreeSet::new();
        for p in &self.providers {
            if !seen.insert(p.label.as_str()) {
                return Err(format!("provider `{}` is defined twice", p.label));
            }
            if p.m.contains(&0) {
                return Err(format!("provider `{}` has a zero coarse dimension", p.label));
            }
            if !(p.training_time_s >= 0.0 && p.training_time_s.is_finite()) {
                return Err(format!("provider `{}` has an invalid training time", p.label));
            }
            if p.kind == metasolve::coarse::ProviderKind::File && p.path.is_none() {
                return Err(format!("provider `{}` has kind file but no path", p.label));
            }
        }
        let known: &[&str] = match self.family {
            Family::Relax => &RELAX_PROVIDERS,
            Family::Krylov => &KRYLOV_PROVIDERS,
        };
        if let Some(filter) = &self.filters.providers {
            if let Some(bad) = filter.iter().find(|p| !known.contains(&p.as_str())) {
                return Err(format!("filters.providers: `{bad}` is not a {} provider label", self.family));
            }
        }
        if let Some(levels) = &self.filters.mg_levels {
            let factor = 1usize << levels.iter().copied().max().unwrap_or(0).min(2);
            if (self.problem.n_per_axis + 1) % factor != 0 {
                return Err(format!(
                    "problem.n_per_axis + 1 must be divisible by {factor} for the requested multigrid levels"
                ));
            }
        } else if (self.problem.n_per_axis + 1) % 4 != 0 {
            return Err("problem.n_per_axis + 1 must be divisible by 4 unless filters.mg_levels excludes 1 and 2".into());
        }
        Ok(())
    }

    /// Built-in presets with the config's overrides applied.
    pub fn presets(&self) -> Vec<ProviderPreset> {
        let mut out = default_presets();
        for p in &self.providers {
            match out.iter_mut().find(|q| q.label == p.label) {
                Some(q) => *q = p.clone(),
                None => out.push(p.clone()),
            }
        }
        out
    }

    pub fn preset(&self, label: &str) -> Result<ProviderPreset, CliError> {
        self.presets()
            .into_iter()
            .find(|p| p.label == label)
            .ok_or_else(|| CliError::Usage(format!("no provider preset `{label}`")))
    }

    pub fn max_iters(&self) -> usize {
        self.solver.max_iters.unwrap_or(match self.family {
            Family::Relax => 100_000,
            Family::Krylov => 1000,
        })
    }

    pub fn run_options(&self) -> RunOptions {
        RunOptions {
            tol_rel: self.solver.tol_rel,
            max_iters: self.max_iters(),
            omega: self.solver.omega,
            restart: self.solver.restart,
        }
    }

    /// SHA-256 of the canonical JSON of every field that affects records.
    pub fn hash(&self) -> String {
        let view = HashedView {
            seed: self.seed,
            family: self.family,
            problem: &self.problem,
            solver: &self.solver,
            filters: &self.filters,
            providers: self.presets(),
        };
        let json = serde_json::to_string(&view).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}
