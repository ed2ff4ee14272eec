//! Weights under which a chosen Pareto point minimizes the weighted sum.

use serde::{Deserialize, Serialize};

use super::simplex::{solve_lp, Constraint, LpOutcome, LpProblem, Relation};
use crate::error::{Error, Result};
use crate::pareto::{pareto_set, ObjectiveTable, PreferenceWeights};

/// Largest certificate accepted as a successful rediscovery.
pub const CERTIFICATE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RediscoveryResult {
    pub found: bool,
    pub lambda: Option<PreferenceWeights>,
    /// `max_x λᵀ(f(target) - f(x))` over the other front points, for the
    /// returned weights or, when none are found, for the least-violating ones.
    pub certificate: f64,
    /// Front point with the largest violation when not found.
    pub most_violated: Option<String>,
    /// Other points whose weighted sum equals the target's within the
    /// tolerance; nonzero means the weights do not single the target out.
    #[serde(default)]
    pub ties: usize,
    pub diagnosis: Option<String>,
}

fn check_target(table: &ObjectiveTable, target_id: &str) -> Result<usize> {
    let idx = table
        .index_of(target_id)
        .ok_or_else(|| Error::UnknownId(target_id.to_string()))?;
    let front = pareto_set(table)?;
    if !front.is_strong(target_id) {
        return Err(Error::NotOnFront(target_id.to_string()));
    }
    Ok(idx)
}

fn difference_rows(table: &ObjectiveTable, target: usize) -> Vec<(String, Vec<f64>)> {
    let t = &table.points()[target];
    table
        .rows()
        .enumerate()
        .filter(|(i, _)| *i != target)
        .map(|(_, (id, p))| (id.to_string(), t.iter().zip(p).map(|(a, b)| a - b).collect()))
        .collect()
}

/// `min λᵀ f(target)` subject to `λᵀ(f(target) - f(x)) ≤ 0` for every other
/// point, `Σλ = 1`, `0 ≤ λ ≤ 1`.
pub fn build_rediscovery_lp(table: &ObjectiveTable, target_id: &str) -> Result<LpProblem> {
    let target = check_target(table, target_id)?;
    let n = table.n_criteria();
    let mut constraints: Vec<Constraint> = difference_rows(table, target)
        .into_iter()
        .map(|(_, coeffs)| Constraint {
            coeffs,
            relation: Relation::Le,
            rhs: 0.0,
        })
        .collect();
    constraints.push(Constraint {
        coeffs: vec![1.0; n],
        relation: Relation::Eq,
        rhs: 1.0,
    });
    Ok(LpProblem {
        objective: table.points()[target].clone(),
        constraints,
        bounds: vec![(0.0, 1.0); n],
    })
}

/// Projects an LP solution onto the simplex to remove round-off.
fn simplex_weights(x: &[f64]) -> Result<PreferenceWeights> {
    let clipped: Vec<f64> = x.iter().map(|v| v.clamp(0.0, 1.0)).collect();
    let sum: f64 = clipped.iter().sum();
    if !(sum > 0.0) {
        return Err(Error::InvalidWeights("LP returned all-zero weights".into()));
    }
    let mut lambda: Vec<f64> = clipped.iter().map(|v| v / sum).collect();
    // Put the residual of the sum on the largest weight.
    let k = (0..lambda.len()).max_by(|&a, &b| lambda[a].total_cmp(&lambda[b])).unwrap_or(0);
    let rest: f64 = lambda.iter().enumerate().filter(|(i, _)| *i != k).map(|(_, v)| v).sum();
    lambda[k] = (1.0 - rest).clamp(0.0, 1.0);
    PreferenceWeights::new(lambda)
}

/// `(max violation, arg)` of `λᵀ(f(target) - f(x))`.
fn certificate(lambda: &[f64], rows: &[(String, Vec<f64>)]) -> (f64, Option<String>) {
    rows.iter()
        .map(|(id, d)| (lambda.iter().zip(d).map(|(l, v)| l * v).sum::<f64>(), id))
        .fold((f64::NEG_INFINITY, None), |(best, arg), (v, id)| {
            if v > best {
                (v, Some(id.clone()))
            } else {
                (best, arg)
            }
        })
}

/// Weights minimizing `max_x λᵀ(f(target) - f(x))` over the simplex.
/// A negative optimum is a strict separation margin.
fn minimax_weights(rows: &[(String, Vec<f64>)], n: usize) -> Result<Vec<f64>> {
    let mut constraints: Vec<Constraint> = rows
        .iter()
        .map(|(_, d)| {
            let mut coeffs = d.clone();
            coeffs.push(-1.0);
            Constraint {
                coeffs,
                relation: Relation::Le,
                rhs: 0.0,
            }
        })
        .collect();
    let mut ones = vec![1.0; n];
    ones.push(0.0);
    constraints.push(Constraint {
        coeffs: ones,
        relation: Relation::Eq,
        rhs: 1.0,
    });
    let mut objective = vec![0.0; n];
    objective.push(1.0);
    let mut bounds = vec![(0.0, 1.0); n];
    bounds.push((f64::NEG_INFINITY, f64::INFINITY));
    let aux = LpProblem {
        objective,
        constraints,
        bounds,
    };
    match solve_lp(&aux)? {
        LpOutcome::Optimal { x, .. } => Ok(x[..n].to_vec()),
        other => Err(Error::InvalidArgument(format!("minimax LP ended as {other:?}"))),
    }
}

fn count_ties(lambda: &[f64], rows: &[(String, Vec<f64>)]) -> usize {
    rows.iter()
        .filter(|(_, d)| lambda.iter().zip(d).map(|(l, v)| l * v).sum::<f64>() >= -CERTIFICATE_TOL)
        .count()
}

/// Solves the rediscovery LP and re-verifies the weights against every
/// other point.
///
/// The LP objective is constant on the feasible set's facets, so its
/// vertex solution usually ties the target with a neighbour. When the LP is
/// feasible the returned weights are instead those maximizing the margin
/// `min_x λᵀ(f(x) - f(target))`, falling back to the LP vertex if that
/// is not better. A point without a supporting hyperplane returns
/// `found = false` with the least-violating weights' worst point.
pub fn rediscover(table: &ObjectiveTable, target_id: &str) -> Result<RediscoveryResult> {
    let lp = build_rediscovery_lp(table, target_id)?;
    let target = table.index_of(target_id).expect("checked by build");
    let rows = difference_rows(table, target);
    let n = table.n_criteria();
    if rows.is_empty() {
        return Ok(RediscoveryResult {
            found: true,
            lambda: Some(PreferenceWeights::uniform(n)),
            certificate: 0.0,
            most_violated: None,
            diagnosis: None,
            ties: 0,
        });
    }

    if let LpOutcome::Optimal { x, .. } = solve_lp(&lp)? {
        let mut lambda = simplex_weights(&x)?;
        let (mut cert, worst) = certificate(lambda.as_slice(), &rows);
        if cert <= CERTIFICATE_TOL {
            let centred = simplex_weights(&minimax_weights(&rows, n)?)?;
            let (c, _) = certificate(centred.as_slice(), &rows);
            if c < cert {
                lambda = centred;
                cert = c;
            }
            return Ok(RediscoveryResult {
                found: true,
                ties: count_ties(lambda.as_slice(), &rows),
                lambda: Some(lambda),
                certificate: cert,
                most_violated: None,
                diagnosis: None,
            });
        }
        return Ok(RediscoveryResult {
            found: false,
            lambda: None,
            certificate: cert,
            most_violated: worst,
            diagnosis: Some(format!("LP weights violate the certificate by {cert:e}")),
            ties: 0,
        });
    }

    let lambda = simplex_weights(&minimax_weights(&rows, n)?)?;
    let (cert, worst) = certificate(lambda.as_slice(), &rows);
    Ok(RediscoveryResult {
        found: false,
        lambda: None,
        certificate: cert,
        diagnosis: Some(format!(
            "no supporting hyperplane: the best weights still favour `{}` by {cert:e}",
            worst.as_deref().unwrap_or("?")
        )),
        most_violated: worst,
        ties: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(points: &[&[f64]]) -> ObjectiveTable {
        ObjectiveTable::from_rows(points.iter().enumerate().map(|(i, p)| (format!("x{i}"), p.to_vec()))).unwrap()
    }

    #[test]
    fn single_point_front() {
        let t = table(&[&[0.3, 0.7]]);
        let lp = build_rediscovery_lp(&t, "x0").unwrap();
        assert_eq!(lp.constraints.len(), 1);
        let r = rediscover(&t, "x0").unwrap();
        assert!(r.found);
        assert_eq!(r.certificate, 0.0);
        assert_eq!(r.ties, 0);
    }

    #[test]
    fn corner_point() {
        let t = table(&[&[0.0, 1.0], &[1.0, 0.0]]);
        let r = rediscover(&t, "x0").unwrap();
        assert!(r.found);
        let l = r.lambda.unwrap();
        assert!(l.as_slice()[0] >= l.as_slice()[1]);
    }

    #[test]
    fn convex_middle_point() {
        let t = table(&[&[0.0, 1.0], &[1.0, 0.0], &[0.4, 0.4]]);
        // Hand check: λ = (1/2, 1/2) gives 0.4 ≤ 0.5 for both others.
        let lp = build_rediscovery_lp(&t, "x2").unwrap();
        for c in &lp.constraints[..2] {
            let lhs: f64 = c.coeffs.iter().map(|a| 0.5 * a).sum();
            assert!(lhs <= 0.0);
        }
        let r = rediscover(&t, "x2").unwrap();
        assert!(r.found);
        // The maximum-margin weights are (1/2, 1/2) with margin 0.1.
        assert!((r.certificate + 0.1).abs() < 1e-9, "{}", r.certificate);
        assert_eq!(r.ties, 0);
    }

    #[test]
    fn concave_middle_point_is_not_rediscoverable() {
        let t = table(&[&[0.0, 1.0], &[0.6, 0.6], &[1.0, 0.0]]);
        let r = rediscover(&t, "x1").unwrap();
        assert!(!r.found);
        assert!(r.lambda.is_none());
        // The least-violating weights are (1/2, 1/2), worst excess 0.1.
        assert!((r.certificate - 0.1).abs() < 1e-9, "{}", r.certificate);
        assert!(r.most_violated.is_some());
        assert!(r.diagnosis.is_some());
    }

    #[test]
    fn dominated_or_unknown_targets() {
        let t = table(&[&[0.0, 1.0], &[1.0, 0.0], &[1.0, 1.0]]);
        assert!(matches!(rediscover(&t, "x2"), Err(Error::NotOnFront(_))));
        assert!(matches!(rediscover(&t, "nope"), Err(Error::UnknownId(_))));
    }

    #[test]
    fn componentwise_minimum() {
        let t = table(&[&[0.0, 0.0, 0.5], &[0.2, 0.3, 0.1]]);
        let r = rediscover(&t, "x0").unwrap();
        assert!(r.found);
    }

    #[test]
    fn collinear_middle_point_ties_with_both_ends() {
        // Only λ = (1/2, 1/2) supports the middle point, and it supports the
        // whole segment.
        let t = table(&[&[0.0, 1.0], &[0.5, 0.5], &[1.0, 0.0]]);
        let r = rediscover(&t, "x1").unwrap();
        assert!(r.found);
        assert!(r.certificate.abs() <= CERTIFICATE_TOL);
        assert_eq!(r.ties, 2);
    }

    #[test]
    fn strict_separation_is_preferred_over_a_tying_vertex() {
        let t = table(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[1.0, 0.5, 0.5]]);
        let r = rediscover(&t, "x0").unwrap();
        assert!(r.found);
        assert!(r.certificate < 0.0);
        assert_eq!(r.ties, 0);
    }

    #[test]
    fn weights_lie_on_the_simplex() {
        let t = table(&[&[0.0, 1.0, 0.5], &[1.0, 0.0, 0.5], &[0.3, 0.3, 0.2], &[0.5, 0.5, 0.0]]);
        for id in ["x0", "x1", "x2", "x3"] {
            let r = rediscover(&t, id).unwrap();
            if let Some(l) = r.lambda {
                let s: f64 = l.as_slice().iter().sum();
                assert!((s - 1.0).abs() <= 1e-12);
                assert!(l.as_slice().iter().all(|v| (0.0..=1.0).contains(v)));
            }
        }
    }
}
