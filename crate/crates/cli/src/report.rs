//! Front, ranking and rediscovery reports over a results file.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use metasolve::lp::{rediscover, RediscoveryResult};
use metasolve::meta::MetaConfig;
use metasolve::metrics::{PerformanceRecord, CRITERIA, N_CRITERIA};
use metasolve::pareto::{composition_counts, discover, pareto_set, rescale, ObjectiveTable, ParetoResult, PreferenceWeights};

use crate::results::ResultsFile;
use crate::CliError;

/// Objective table of the selected records, keyed by solver id.
pub fn objective_table(records: &[&PerformanceRecord]) -> Result<ObjectiveTable, CliError> {
    let mut t = ObjectiveTable::new(N_CRITERIA);
    for r in records {
        t.push(r.solver_id.clone(), r.objectives().to_vec())?;
    }
    Ok(t)
}

fn table_for(results: &ResultsFile, include_nonconverged: bool) -> Result<ObjectiveTable, CliError> {
    let selected = results.selected(include_nonconverged);
    if selected.is_empty() {
        return Err(CliError::Usage("no records to analyse (all runs nonconverged?)".into()));
    }
    objective_table(&selected)
}

/// Labelled coordinates of a configuration, used for composition counts.
pub fn coordinates(c: &MetaConfig) -> Vec<(&'static str, String)> {
    match c {
        MetaConfig::Relax(r) => vec![
            ("provider", r.provider.clone()),
            ("smoother", r.smoother.label().to_string()),
            ("proportion", format!("1/{}", r.cycle_length())),
            ("levels", format!("{}-level", r.mg_levels + 1)),
        ],
        MetaConfig::Krylov(k) => vec![
            ("provider", k.provider.clone()),
            ("krylov", k.krylov.label().to_string()),
            ("smoother", k.smoother.label().to_string()),
            ("strategy", format!("{0}-1-{0}", k.strategy)),
            ("levels", format!("{}-level", k.mg_levels + 1)),
        ],
    }
}

pub struct ParetoReport {
    pub result: ParetoResult,
    pub n_points: usize,
    /// `(dimension, value, count)` over the strong set.
    pub composition: Vec<(String, String, usize)>,
}

impl ParetoReport {
    pub fn summary(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{} Pareto optimal solvers out of {}", self.result.strong.len(), self.n_points).unwrap();
        writeln!(s, "weak Pareto set: {}", self.result.weak.len()).unwrap();
        let mut current = "";
        for (dim, value, count) in &self.composition {
            if dim != current {
                writeln!(s, "{dim}:").unwrap();
                current = dim;
            }
            writeln!(s, "  {value:<14} {count}").unwrap();
        }
        for w in &self.result.warnings {
            writeln!(s, "warning: {w}").unwrap();
        }
        s
    }
}

pub fn pareto_report(results: &ResultsFile, include_nonconverged: bool) -> Result<ParetoReport, CliError> {
    let table = table_for(results, include_nonconverged)?;
    let result = pareto_set(&table)?;
    let by_id: std::collections::HashMap<&str, &PerformanceRecord> =
        results.records.iter().map(|r| (r.solver_id.as_str(), r)).collect();
    let coords: Vec<Vec<(&'static str, String)>> = result
        .strong
        .iter()
        .map(|(id, _)| coordinates(&by_id[id.as_str()].config))
        .collect();
    let mut composition = Vec::new();
    if let Some(first) = coords.first() {
        for (k, (dim, _)) in first.iter().enumerate() {
            for (value, count) in composition_counts(coords.iter().map(|c| c[k].1.as_str())) {
                composition.push((dim.to_string(), value, count));
            }
        }
    }
    Ok(ParetoReport {
        result,
        n_points: table.len(),
        composition,
    })
}

fn raw(v: &[f64]) -> Vec<f64> {
    // Objective vectors carry the negated rate.
    let mut out = v.to_vec();
    out[3] = -out[3];
    out
}

/// Writes `front.csv`, `composition.csv`, `projection_2d.csv` and
/// `projection_3d.csv` into `dir`. Projection rows flag points that are
/// Pareto optimal within that projection.
pub fn write_pareto_outputs(dir: &Path, results: &ResultsFile, include_nonconverged: bool, report: &ParetoReport) -> Result<(), CliError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| CliError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let table = table_for(results, include_nonconverged)?;
    let strong: std::collections::HashSet<&str> = report.result.strong.iter().map(|(id, _)| id.as_str()).collect();
    let weak: std::collections::HashSet<&str> = report.result.weak.iter().map(|(id, _)| id.as_str()).collect();

    let mut front = format!("solver_id,strong,weak,{}\n", CRITERIA.join(","));
    for (id, p) in table.rows() {
        let values: Vec<String> = raw(p).iter().map(|v| v.to_string()).collect();
        writeln!(front, "{id},{},{},{}", strong.contains(id), weak.contains(id), values.join(",")).unwrap();
    }
    let path = dir.join("front.csv");
    fs::write(&path, front).map_err(io(&path))?;

    let mut comp = String::from("dimension,value,count\n");
    for (d, v, c) in &report.composition {
        writeln!(comp, "{d},{v},{c}").unwrap();
    }
    let path = dir.join("composition.csv");
    fs::write(&path, comp).map_err(io(&path))?;

    for k in [2usize, 3] {
        let mut text = format!(
            "{},solver_id,{},on_projected_front\n",
            (0..k).map(|i| format!("c{i}")).collect::<Vec<_>>().join(","),
            (0..k).map(|i| format!("v{i}")).collect::<Vec<_>>().join(",")
        );
        for subset in combinations(N_CRITERIA, k) {
            let projected = ObjectiveTable::from_rows(
                table.rows().map(|(id, p)| (id.to_string(), subset.iter().map(|&i| p[i]).collect::<Vec<f64>>())),
            )?;
            let on_front = pareto_set(&projected)?;
            let names: Vec<&str> = subset.iter().map(|&i| CRITERIA[i]).collect();
            for (id, p) in table.rows() {
                let values: Vec<String> = subset.iter().map(|&i| raw(p)[i].to_string()).collect();
                writeln!(text, "{},{id},{},{}", names.join(","), values.join(","), on_front.is_strong(id)).unwrap();
            }
        }
        let path = dir.join(format!("projection_{k}d.csv"));
        fs::write(&path, text).map_err(io(&path))?;
    }
    Ok(())
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    (k - 1..n)
        .flat_map(|last| {
            combinations(last, k - 1).into_iter().map(move |mut c| {
                c.push(last);
                c
            })
        })
        .collect()
}

pub struct RankedRecord {
    pub score: f64,
    pub record: PerformanceRecord,
}

/// Rescales over the strong front and ranks it by the weighted sum.
pub fn discover_report(
    results: &ResultsFile,
    weights: &PreferenceWeights,
    top: usize,
    include_nonconverged: bool,
) -> Result<Vec<RankedRecord>, CliError> {
    let table = table_for(results, include_nonconverged)?;
    let front = pareto_set(&table)?.front_table();
    let rescaled = rescale(&front)?;
    let ranked = discover(&rescaled.table, weights)?;
    Ok(ranked
        .into_iter()
        .take(top)
        .map(|r| RankedRecord {
            score: r.score,
            record: results
                .records
                .iter()
                .find(|rec| rec.solver_id == r.id)
                .expect("front ids come from the records")
                .clone(),
        })
        .collect())
}

pub fn format_ranking(ranked: &[RankedRecord]) -> String {
    let mut s = String::new();
    writeln!(
        s,
        "{:<4} {:<42} {:>9} {:>11} {:>11} {:>6} {:>9} {:>12} {:>12} {:>10}",
        "rank", "solver", "score", "time_s", "rel_error", "iters", "rate", "memory_B", "MACs", "train_s"
    )
    .unwrap();
    for (i, r) in ranked.iter().enumerate() {
        let rec = &r.record;
        writeln!(
            s,
            "{:<4} {:<42} {:>9.4} {:>11.4e} {:>11.4e} {:>6} {:>9.4} {:>12.0} {:>12} {:>10.1}",
            i + 1,
            rec.solver_id,
            r.score,
            rec.f1_time_s,
            rec.f2_rel_error,
            rec.f3_iterations,
            rec.f4_conv_rate,
            rec.f5_memory_bytes,
            rec.f6_macs,
            rec.f7_training_time_s
        )
        .unwrap();
    }
    s
}

/// Weights for which `solver_id` is the weighted-sum optimum of the
/// rescaled strong front.
pub fn rediscover_report(results: &ResultsFile, solver_id: &str, include_nonconverged: bool) -> Result<RediscoveryResult, CliError> {
    let table = table_for(results, include_nonconverged)?;
    if table.index_of(solver_id).is_none() {
        return Err(metasolve::Error::UnknownId(solver_id.to_string()).into());
    }
    let front = pareto_set(&table)?;
    if !front.is_strong(solver_id) {
        return Err(metasolve::Error::NotOnFront(solver_id.to_string()).into());
    }
    let rescaled = rescale(&front.front_table())?;
    Ok(rediscover(&rescaled.table, solver_id)?)
}

pub fn format_rediscovery(solver_id: &str, r: &RediscoveryResult) -> String {
    let mut s = String::new();
    match &r.lambda {
        Some(lambda) if r.found => {
            writeln!(s, "weights making `{solver_id}` the weighted-sum optimum:").unwrap();
            for (name, w) in CRITERIA.iter().zip(lambda.as_slice()) {
                writeln!(s, "  {name:<16} {w:.6}").unwrap();
            }
            writeln!(s, "certificate: {:e}", r.certificate).unwrap();
            if r.ties > 0 {
                writeln!(s, "note: {} other front points attain the same weighted sum", r.ties).unwrap();
            }
        }
        _ => {
            writeln!(s, "`{solver_id}` is not rediscoverable by a weighted sum").unwrap();
            if let Some(d) = &r.diagnosis {
                writeln!(s, "{d}").unwrap();
            }
            if let Some(m) = &r.most_violated {
                writeln!(s, "most violated: {m}").unwrap();
            }
        }
    }
    s
}
