//! The seven-criterion performance vector of a run.

use serde::{Deserialize, Serialize};
use std::time::Duration;

use crate::coarse::CoarseBasis;
use crate::error::{Error, Result};
use crate::krylov::SolveTrace;
use crate::linalg::{vector::norm2_plain, OpLedger};
use crate::meta::{Family, MetaConfig};

/// Number of criteria.
pub const N_CRITERIA: usize = 7;

/// Criterion names in objective order.
pub const CRITERIA: [&str; N_CRITERIA] = [
    "time_s",
    "rel_error",
    "iterations",
    "conv_rate",
    "memory_bytes",
    "macs",
    "training_time_s",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceRecord {
    pub solver_id: String,
    pub family: Family,
    pub config: MetaConfig,
    pub converged: bool,
    #[serde(default)]
    pub flags: Vec<String>,
    pub f1_time_s: f64,
    pub f2_rel_error: f64,
    pub f3_iterations: u64,
    pub f4_conv_rate: f64,
    pub f5_memory_bytes: f64,
    pub f6_macs: u64,
    pub f7_training_time_s: f64,
}

impl PerformanceRecord {
    /// Criteria as a minimization vector. The rate is negated since a
    /// larger rate is better.
    pub fn objectives(&self) -> [f64; N_CRITERIA] {
        [
            self.f1_time_s,
            self.f2_rel_error,
            self.f3_iterations as f64,
            -self.f4_conv_rate,
            self.f5_memory_bytes,
            self.f6_macs as f64,
            self.f7_training_time_s,
        ]
    }

    /// Criteria as stored, with the rate un-negated.
    pub fn raw_values(&self) -> [f64; N_CRITERIA] {
        let mut v = self.objectives();
        v[3] = self.f4_conv_rate;
        v
    }
}

/// Mean natural-log residual reduction per iteration.
pub fn convergence_rate(history: &[f64], iterations: usize) -> Result<f64> {
    if iterations == 0 || history.len() < 2 {
        return Err(Error::Measurement("convergence rate needs at least one iteration".into()));
    }
    let first = history[0];
    // An exactly zero residual is clamped so the rate stays finite.
    let last = history[history.len() - 1].max(f64::MIN_POSITIVE);
    if !(first > 0.0) || !last.is_finite() {
        return Err(Error::Measurement(format!("residual history endpoints {first}, {last} are unusable")));
    }
    Ok((first / last).ln() / iterations as f64)
}

/// Output of one timed solve.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub u: Vec<f64>,
    pub trace: SolveTrace,
    pub ledger: OpLedger,
    pub elapsed: Duration,
}

/// Builds the record of a run. `u_ref` is the discrete manufactured solution.
pub fn measure(
    config: &MetaConfig,
    out: &RunOutput,
    basis: &CoarseBasis,
    u_ref: &[f64],
    allow_nonconverged: bool,
) -> Result<PerformanceRecord> {
    if !out.trace.converged && !allow_nonconverged {
        return Err(Error::Measurement(format!("run `{}` did not converge", config.id())));
    }
    if out.u.len() != u_ref.len() {
        return Err(Error::DimensionMismatch(format!(
            "solution has {} entries, reference {}",
            out.u.len(),
            u_ref.len()
        )));
    }
    let ref_norm = norm2_plain(u_ref);
    if ref_norm == 0.0 {
        return Err(Error::Measurement("reference solution has zero norm".into()));
    }
    let diff: Vec<f64> = out.u.iter().zip(u_ref).map(|(a, b)| a - b).collect();
    let f2 = norm2_plain(&diff) / ref_norm;
    let f4 = convergence_rate(&out.trace.residual_history, out.trace.iterations)?;
    let record = PerformanceRecord {
        solver_id: config.id(),
        family: config.family(),
        config: config.clone(),
        converged: out.trace.converged,
        flags: Vec::new(),
        f1_time_s: out.elapsed.as_secs_f64(),
        f2_rel_error: f2,
        f3_iterations: out.trace.iterations as u64,
        f4_conv_rate: f4,
        f5_memory_bytes: out.ledger.peak_bytes() as f64,
        f6_macs: out.ledger.macs(),
        f7_training_time_s: basis.training_time_s,
    };
    if record.raw_values().iter().any(|v| !v.is_finite()) {
        return Err(Error::Measurement(format!("non-finite criterion in `{}`", record.solver_id)));
    }
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coarse::{build_basis, BasisProvider};
    use crate::meta::RelaxMetaConfig;
    use crate::problems::{assemble_poisson, Kappa};
    use crate::smoothers::SmootherKind;
    use proptest::prelude::*;

    fn trace(history: Vec<f64>) -> SolveTrace {
        SolveTrace {
            iterations: history.len() - 1,
            residual_history: history,
            converged: true,
        }
    }

    fn fixture(u: Vec<f64>, t: SolveTrace) -> (MetaConfig, RunOutput, CoarseBasis, Vec<f64>) {
        let p = assemble_poisson(1, 7, Kappa::Constant).unwrap();
        let basis = build_basis(&BasisProvider::Spectral, 2, &p).unwrap().with_attributes(42.0, 0);
        let cfg = MetaConfig::Relax(RelaxMetaConfig::new("DeepONet", SmootherKind::Ssor, 1, 0).unwrap());
        let mut ledger = OpLedger::new();
        ledger.alloc(10);
        ledger.free(4);
        ledger.alloc(3);
        ledger.charge(123);
        let out = RunOutput {
            u,
            trace: t,
            ledger,
            elapsed: Duration::from_millis(5),
        };
        (cfg, out, basis, p.u_ref)
    }

    #[test]
    fn single_step_rate() {
        let r = convergence_rate(&[1.0, 1e-4], 1).unwrap();
        assert!((r - 1e4f64.ln()).abs() < 1e-12);
        assert!((r - 9.2103).abs() < 1e-4);
    }

    #[test]
    fn two_step_magnitude() {
        let r = convergence_rate(&[1.0, 1e-8, 10f64.powf(-15.5)], 2).unwrap();
        assert!((r - 17.798).abs() < 0.5, "{r}");
    }

    #[test]
    fn zero_iterations_is_an_error() {
        assert!(convergence_rate(&[1.0], 0).is_err());
    }

    #[test]
    fn exact_solution_has_zero_error() {
        let p = assemble_poisson(1, 7, Kappa::Constant).unwrap();
        let (cfg, out, basis, u_ref) = fixture(p.u_ref.clone(), trace(vec![1.0, 1e-13]));
        let rec = measure(&cfg, &out, &basis, &u_ref, false).unwrap();
        assert_eq!(rec.f2_rel_error, 0.0);
        assert_eq!(rec.f3_iterations, 1);
        assert_eq!(rec.f5_memory_bytes, 80.0);
        assert_eq!(rec.f6_macs, 123);
        assert_eq!(rec.f7_training_time_s, 42.0);
        assert_eq!(rec.solver_id, "relax:DeepONet:SSOR:1/2:L0");
        assert_eq!(rec.objectives()[3], -rec.f4_conv_rate);
    }

    #[test]
    fn zero_reference_is_an_error() {
        let (cfg, out, basis, _) = fixture(vec![0.0; 7], trace(vec![1.0, 0.5]));
        assert!(matches!(
            measure(&cfg, &out, &basis, &[0.0; 7], false),
            Err(Error::Measurement(_))
        ));
    }

    #[test]
    fn nonconverged_needs_permission() {
        let mut t = trace(vec![1.0, 0.5]);
        t.converged = false;
        let (cfg, out, basis, u_ref) = fixture(vec![0.0; 7], t);
        assert!(measure(&cfg, &out, &basis, &u_ref, false).is_err());
        let rec = measure(&cfg, &out, &basis, &u_ref, true).unwrap();
        assert!(!rec.converged);
        assert!((rec.f2_rel_error - 1.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn geometric_history_rate(rho in 1e-3f64..0.999, k in 1usize..60) {
            let history: Vec<f64> = (0..=k).map(|i| rho.powi(i as i32)).collect();
            let r = convergence_rate(&history, k).unwrap();
            prop_assert!((r + rho.ln()).abs() < 1e-12 * (1.0 + rho.ln().abs()));
        }
    }
}
