use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use metasolve::linalg::vector::norm2_plain;
use metasolve::meta::{enumerate_space, Family};
use metasolve::pareto::PreferenceWeights;
use metasolve_cli::config::RunConfig;
use metasolve_cli::report::{
    discover_report, format_ranking, format_rediscovery, pareto_report, rediscover_report, write_pareto_outputs,
};
use metasolve_cli::results::{read_results, write_csv, write_results, ResultsFile, ResultsHeader};
use metasolve_cli::sweep::{run_single, run_sweep};
use metasolve_cli::CliError;

#[derive(Parser)]
#[command(name = "metasolve", version, about = "Sweep hybrid meta-solvers and select them by Pareto analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Analysis {
    /// Results file written by `sweep`.
    results: PathBuf,
    /// Reject the results unless they were produced by this config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Keep nonconverged runs in the Pareto input.
    #[arg(long)]
    include_nonconverged: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble the configured problem and print its size.
    Problem {
        #[arg(long)]
        config: PathBuf,
        /// Write a JSON summary here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every configuration of the solver space.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Results file; defaults to `output.results` from the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the family of the config.
        #[arg(long)]
        family: Option<Family>,
    },
    /// Strong and weak Pareto sets with composition counts.
    Pareto {
        #[command(flatten)]
        analysis: Analysis,
        /// Directory for the CSV outputs.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rank the Pareto front by a weighted-sum preference.
    Discover {
        #[command(flatten)]
        analysis: Analysis,
        /// Seven comma-separated weights summing to 1.
        #[arg(long, conflicts_with = "preset")]
        weights: Option<String>,
        #[arg(long, value_parser = ["p1", "p2"])]
        preset: Option<String>,
        #[arg(long, default_value_t = 3)]
        top: usize,
    },
    /// Weights for which a Pareto-optimal solver is the weighted-sum optimum.
    Rediscover {
        #[command(flatten)]
        analysis: Analysis,
        #[arg(long)]
        solver_id: String,
    },
    /// Run a single configuration.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        solver_id: String,
        /// Results file holding the single record.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_results(a: &Analysis) -> Result<ResultsFile, CliError> {
    let results = read_results(&a.results)?;
    if let Some(path) = &a.config {
        results.check_config(&RunConfig::load(path)?)?;
    }
    Ok(results)
}

fn write_csv_beside(results_path: &Path, cfg: &RunConfig, records: &[metasolve::metrics::PerformanceRecord]) -> Result<PathBuf, CliError> {
    let csv = cfg.output.csv.clone().unwrap_or_else(|| results_path.with_extension("csv"));
    write_csv(&csv, records)?;
    Ok(csv)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Problem { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let p = cfg.problem.assemble()?;
            let summary = serde_json::json!({
                "dim": p.dim,
                "n_per_axis": p.n_per_axis,
                "kappa": p.kappa_id,
                "h": p.h,
                "unknowns": p.n_unknowns(),
                "nnz": p.a.nnz(),
                "rhs_norm": norm2_plain(&p.f),
                "configs": enumerate_space(cfg.family, &cfg.filters).len(),
            });
            println!("{}", serde_json::to_string_pretty(&summary).expect("json"));
            if let Some(out) = out {
                std::fs::write(&out, summary.to_string()).map_err(|source| CliError::Io { path: out, source })?;
            }
        }
        Command::Sweep { config, out, family } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(f) = family {
                cfg.family = f;
            }
            let out = out
                .or_else(|| cfg.output.results.clone())
                .ok_or_else(|| CliError::Usage("no output path: pass --out or set output.results".into()))?;
            let header = ResultsHeader::for_config(&cfg);
            let records = run_sweep(&cfg)?;
            write_results(&out, &header, &records)?;
            let csv = write_csv_beside(&out, &cfg, &records)?;
            let converged = records.iter().filter(|r| r.converged).count();
            println!(
                "{} records ({converged} converged) written to {} and {}",
                records.len(),
                out.display(),
                csv.display()
            );
        }
        Command::Pareto { analysis, out } => {
            let results = load_results(&analysis)?;
            let report = pareto_report(&results, analysis.include_nonconverged)?;
            print!("{}", report.summary());
            for (id, _) in &report.result.strong {
                println!("  {id}");
            }
            if let Some(dir) = out {
                write_pareto_outputs(&dir, &results, analysis.include_nonconverged, &report)?;
                println!("CSV written to {}", dir.display());
            }
        }
        Command::Discover {
            analysis,
            weights,
            preset,
            top,
        } => {
            let results = load_results(&analysis)?;
            let weights = match (weights, preset) {
                (Some(w), _) => PreferenceWeights::parse(&w)?,
                (None, Some(p)) => PreferenceWeights::preset(&p)?,
                (None, None) => PreferenceWeights::p1(),
            };
            let ranked = discover_report(&results, &weights, top, analysis.include_nonconverged)?;
            if !weights.is_strictly_positive() {
                println!("note: some weights are zero; the top solver is Pareto optimal but ties were broken lexicographically");
            }
            print!("{}", format_ranking(&ranked));
        }
        Command::Rediscover { analysis, solver_id } => {
            let results = load_results(&analysis)?;
            let r = rediscover_report(&results, &solver_id, analysis.include_nonconverged)?;
            print!("{}", format_rediscovery(&solver_id, &r));
        }
        Command::Solve { config, solver_id, out } => {
            let cfg = RunConfig::load(&config)?;
            let record = run_single(&cfg, &solver_id)?;
            println!("{}", serde_json::to_string_pretty(&record).expect("json"));
            if let Some(out) = out {
                write_results(&out, &ResultsHeader::for_config(&cfg), std::slice::from_ref(&record))?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CliError::Usage(_) | CliError::Solver(metasolve::Error::InvalidWeights(_)) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
