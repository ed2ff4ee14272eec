//! Results files: a JSON header line followed by one JSON record per line.

use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use metasolve::meta::Family;
use metasolve::metrics::{PerformanceRecord, CRITERIA};

use crate::config::{ProblemSpec, RunConfig};
use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsHeader {
    pub schema_version: u32,
    pub config_hash: String,
    pub timestamp: String,
    pub family: Family,
    pub problem: ProblemSpec,
    pub seed: u64,
}

impl ResultsHeader {
    pub fn for_config(cfg: &RunConfig) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            config_hash: cfg.hash(),
            timestamp: chrono::Utc::now().to_rfc3339(),
            family: cfg.family,
            problem: cfg.problem.clone(),
            seed: cfg.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultsFile {
    pub header: ResultsHeader,
    pub records: Vec<PerformanceRecord>,
}

impl ResultsFile {
    /// Fails when the file was produced by a different configuration.
    pub fn check_config(&self, cfg: &RunConfig) -> Result<(), CliError> {
        let expected = cfg.hash();
        if self.header.config_hash != expected {
            return Err(CliError::HashMismatch {
                file: self.header.config_hash.clone(),
                config: expected,
            });
        }
        Ok(())
    }

    /// Records eligible for Pareto analysis.
    pub fn selected(&self, include_nonconverged: bool) -> Vec<&PerformanceRecord> {
        self.records.iter().filter(|r| include_nonconverged || r.converged).collect()
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Streams records to disk one line at a time.
pub struct ResultsWriter {
    path: PathBuf,
    out: BufWriter<File>,
}

impl ResultsWriter {
    pub fn create(path: &Path, header: &ResultsHeader) -> Result<Self, CliError> {
        let file = File::create(path).map_err(io_err(path))?;
        let mut w = Self {
            path: path.to_path_buf(),
            out: BufWriter::new(file),
        };
        w.line(header)?;
        Ok(w)
    }

    fn line<T: Serialize>(&mut self, value: &T) -> Result<(), CliError> {
        let text = serde_json::to_string(value).expect("records serialize");
        writeln!(self.out, "{text}").map_err(io_err(&self.path))
    }

    pub fn write(&mut self, record: &PerformanceRecord) -> Result<(), CliError> {
        self.line(record)
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.out.flush().map_err(io_err(&self.path))
    }
}

pub fn write_results(path: &Path, header: &ResultsHeader, records: &[PerformanceRecord]) -> Result<(), CliError> {
    let mut w = ResultsWriter::create(path, header)?;
    for r in records {
        w.write(r)?;
    }
    w.finish()
}

pub fn read_results(path: &Path) -> Result<ResultsFile, CliError> {
    let file = File::open(path).map_err(io_err(path))?;
    let corrupt = |line: usize, message: String| CliError::Results {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = BufReader::new(file).lines().enumerate();
    let header: ResultsHeader = match lines.next() {
        None => return Err(corrupt(1, "file is empty".into())),
        Some((_, line)) => {
            let line = line.map_err(io_err(path))?;
            serde_json::from_str(&line).map_err(|e| corrupt(1, format!("bad header: {e}")))?
        }
    };
    if header.schema_version != SCHEMA_VERSION {
        return Err(corrupt(
            1,
            format!("schema version {} (reader expects {SCHEMA_VERSION})", header.schema_version),
        ));
    }
    let mut records = Vec::new();
    for (i, line) in lines {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line).map_err(|e| corrupt(i + 1, e.to_string()))?);
    }
    Ok(ResultsFile { header, records })
}

/// Flat CSV export, one row per record.
pub fn write_csv(path: &Path, records: &[PerformanceRecord]) -> Result<(), CliError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    let mut text = format!("solver_id,family,converged,flags,{}\n", CRITERIA.join(","));
    for r in records {
        let values: Vec<String> = r.raw_values().iter().map(|v| v.to_string()).collect();
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            r.solver_id,
            r.family,
            r.converged,
            r.flags.join(";").replace(',', " "),
            values.join(",")
        ));
    }
    out.write_all(text.as_bytes()).map_err(io_err(path))?;
    out.flush().map_err(io_err(path))
}
