//! Dense two-phase simplex with Bland's rule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Feasibility and optimality tolerance.
pub const LP_TOL: f64 = 1e-9;
const PIVOT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `min cᵀx` subject to the constraint rows and `lo ≤ x ≤ hi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

impl LpProblem {
    fn validate(&self) -> Result<()> {
        let n = self.objective.len();
        if self.bounds.len() != n {
            return Err(Error::DimensionMismatch(format!("{} bounds for {n} variables", self.bounds.len())));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "constraint {i} has {} coefficients, expected {n}",
                    c.coeffs.len()
                )));
            }
            if !c.rhs.is_finite() || c.coeffs.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidArgument(format!("constraint {i} has non-finite data")));
            }
        }
        if self.objective.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("objective has non-finite data".into()));
        }
        for (j, &(lo, hi)) in self.bounds.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() || lo > hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(Error::InvalidArgument(format!("variable {j} has bounds [{lo}, {hi}]")));
            }
        }
        Ok(())
    }
}

/// Original variable `x_j = offset + Σ sign·y_col` over nonnegative `y`.
struct VarMap {
    offset: f64,
    cols: Vec<(usize, f64)>,
}

struct Tableau {
    /// `rows × (cols + 1)`, last column is the right-hand side.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        self.t[r].iter_mut().for_each(|v| *v /= p);
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let factor = row[c];
            if factor != 0.0 {
                row.iter_mut().zip(&pivot_row).for_each(|(v, pv)| *v -= factor * pv);
            }
        }
        self.basis[r] = c;
    }

    /// Minimizes `cost` over columns where `allowed` holds.
    /// Returns false when unbounded.
    fn optimize(&mut self, cost: &[f64], allowed: &[bool]) -> bool {
        let rhs = self.cols;
        loop {
            // Reduced costs d_j = c_j - c_Bᵀ column_j.
            let entering = (0..self.cols).filter(|&j| allowed[j] && !self.basis.contains(&j)).find(|&j| {
                let d = cost[j] - self.basis.iter().zip(&self.t).map(|(&b, row)| cost[b] * row[j]).sum::<f64>();
                d < -LP_TOL
            });
            let Some(c) = entering else { return true };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.t.iter().enumerate() {
                if row[c] > PIVOT_EPS {
                    let ratio = row[rhs] / row[c];
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((k, best)) => {
                            if ratio < best - PIVOT_EPS || (ratio <= best + PIVOT_EPS && self.basis[i] < self.basis[k]) {
                                Some((i, ratio))
                            } else {
                                Some((k, best))
                            }
                        }
                    };
                }
            }
            match leave {
                None => return false,
                Some((r, _)) => self.pivot(r, c),
            }
        }
    }
}

/// Solves the LP. Infeasibility and unboundedness are outcomes, malformed
/// input is an error.
pub fn solve_lp(lp: &LpProblem) -> Result<LpOutcome> {
    lp.validate()?;
    let n = lp.objective.len();

    // Substitute bounded variables by nonnegative ones.
    let mut maps = Vec::with_capacity(n);
    let mut ny = 0;
    let mut rows: Vec<(Vec<(usize, f64)>, Relation, f64)> = Vec::new();
    for &(lo, hi) in &lp.bounds {
        if lo.is_finite() {
            maps.push(VarMap {
                offset: lo,
                cols: vec![(ny, 1.0)],
            });
            if hi.is_finite() {
                rows.push((vec![(ny, 1.0)], Relation::Le, hi - lo));
            }
            ny += 1;
        } else if hi.is_finite() {
            maps.push(VarMap {
                offset: hi,
                cols: vec![(ny, -1.0)],
            });
            ny += 1;
        } else {
            maps.push(VarMap {
                offset: 0.0,
                cols: vec![(ny, 1.0), (ny + 1, -1.0)],
            });
            ny += 2;
        }
    }
    for c in &lp.constraints {
        let mut coeffs = Vec::new();
        let mut rhs = c.rhs;
        for (j, &a) in c.coeffs.iter().enumerate() {
            if a != 0.0 {
                rhs -= a * maps[j].offset;
                coeffs.extend(maps[j].cols.iter().map(|&(col, s)| (col, s * a)));
            }
        }
        rows.push((coeffs, c.relation, rhs));
    }
    let mut cost_y = vec![0.0; ny];
    let mut const_term = 0.0;
    for (j, &cj) in lp.objective.iter().enumerate() {
        const_term += cj * maps[j].offset;
        for &(col, s) in &maps[j].cols {
            cost_y[col] += s * cj;
        }
    }

    // Normalize to nonnegative right-hand sides.
    for (coeffs, rel, rhs) in rows.iter_mut() {
        if *rhs < 0.0 {
            *rhs = -*rhs;
            coeffs.iter_mut().for_each(|(_, a)| *a = -*a);
            *rel = match rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
    }

    // Columns: y, then one slack/surplus per inequality, then artificials.
    let m = rows.len();
    let n_slack = rows.iter().filter(|(_, r, _)| *r != Relation::Eq).count();
    let n_art = rows.iter().filter(|(_, r, _)| *r != Relation::Le).count();
    let cols = ny + n_slack + n_art;
    let mut t = vec![vec![0.0; cols + 1]; m];
    let mut basis = vec![0; m];
    let (mut s, mut a) = (ny, ny + n_slack);
    for (i, (coeffs, rel, rhs)) in rows.iter().enumerate() {
        for &(col, v) in coeffs {
            t[i][col] += v;
        }
        t[i][cols] = *rhs;
        match rel {
            Relation::Le => {
                t[i][s] = 1.0;
                basis[i] = s;
                s += 1;
            }
            Relation::Ge => {
                t[i][s] = -1.0;
                s += 1;
                t[i][a] = 1.0;
                basis[i] = a;
                a += 1;
            }
            Relation::Eq => {
                t[i][a] = 1.0;
                basis[i] = a;
                a += 1;
            }
        }
    }
    let mut tab = Tableau { t, basis, cols };
    let is_art = |j: usize| j >= ny + n_slack && j < cols;

    // Phase 1.
    if n_art > 0 {
        let cost1: Vec<f64> = (0..cols).map(|j| if is_art(j) { 1.0 } else { 0.0 }).collect();
        tab.optimize(&cost1, &vec![true; cols]);
        let infeas: f64 = tab.basis.iter().zip(&tab.t).filter(|(b, _)| is_art(**b)).map(|(_, row)| row[cols]).sum();
        let scale = 1.0 + rows.iter().map(|(_, _, r)| r.abs()).fold(0.0, f64::max);
        if infeas > LP_TOL * scale {
            return Ok(LpOutcome::Infeasible);
        }
        // Drive remaining artificials out of the basis, dropping redundant rows.
        let mut i = 0;
        while i < tab.t.len() {
            if is_art(tab.basis[i]) {
                match (0..ny + n_slack).find(|&j| tab.t[i][j].abs() > PIVOT_EPS) {
                    Some(j) => {
                        tab.pivot(i, j);
                        i += 1;
                    }
                    None => {
                        tab.t.remove(i);
                        tab.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
    }

    // Phase 2.
    let mut cost2 = vec![0.0; cols];
    cost2[..ny].copy_from_slice(&cost_y);
    let allowed: Vec<bool> = (0..cols).map(|j| !is_art(j)).collect();
    if !tab.optimize(&cost2, &allowed) {
        return Ok(LpOutcome::Unbounded);
    }
    let mut y = vec![0.0; cols];
    for (row, &b) in tab.t.iter().zip(&tab.basis) {
        y[b] = row[cols];
    }
    let x: Vec<f64> = maps
        .iter()
        .map(|vm| vm.offset + vm.cols.iter().map(|&(col, s)| s * y[col]).sum::<f64>())
        .collect();
    let value = const_term + cost_y.iter().zip(&y).map(|(c, v)| c * v).sum::<f64>();
    Ok(LpOutcome::Optimal { x, value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(coeffs: &[f64], relation: Relation, rhs: f64) -> Constraint {
        Constraint {
            coeffs: coeffs.to_vec(),
            relation,
            rhs,
        }
    }

    fn optimal(o: LpOutcome) -> (Vec<f64>, f64) {
        match o {
            LpOutcome::Optimal { x, value } => (x, value),
            other => panic!("expected optimum, got {other:?}"),
        }
    }

    #[test]
    fn bounded_single_variable() {
        let lp = LpProblem {
            objective: vec![1.0],
            constraints: vec![row(&[1.0], Relation::Ge, 1.0)],
            bounds: vec![(0.0, 2.0)],
        };
        let (x, v) = optimal(solve_lp(&lp).unwrap());
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let lp = LpProblem {
            objective: vec![1.0],
            constraints: vec![row(&[1.0], Relation::Le, -1.0), row(&[1.0], Relation::Ge, 0.0)],
            bounds: vec![(f64::NEG_INFINITY, f64::INFINITY)],
        };
        assert_eq!(solve_lp(&lp).unwrap(), LpOutcome::Infeasible);
        let lp = LpProblem {
            objective: vec![1.0],
            constraints: vec![row(&[1.0], Relation::Le, -1.0)],
            bounds: vec![(0.0, f64::INFINITY)],
        };
        assert_eq!(solve_lp(&lp).unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn unbounded() {
        let lp = LpProblem {
            objective: vec![-1.0, 0.0],
            constraints: vec![row(&[1.0, -1.0], Relation::Le, 1.0)],
            bounds: vec![(0.0, f64::INFINITY); 2],
        };
        assert_eq!(solve_lp(&lp).unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2, 6), 36.
        let lp = LpProblem {
            objective: vec![-3.0, -5.0],
            constraints: vec![
                row(&[1.0, 0.0], Relation::Le, 4.0),
                row(&[0.0, 2.0], Relation::Le, 12.0),
                row(&[3.0, 2.0], Relation::Le, 18.0),
            ],
            bounds: vec![(0.0, f64::INFINITY); 2],
        };
        let (x, v) = optimal(solve_lp(&lp).unwrap());
        assert!((x[0] - 2.0).abs() < 1e-12 && (x[1] - 6.0).abs() < 1e-12);
        assert!((v + 36.0).abs() < 1e-12);
    }

    #[test]
    fn equality_and_free_variables() {
        // min x - y with x + y = 2, x free, -1 ≤ y ≤ 5 → y = 5, x = -3.
        let lp = LpProblem {
            objective: vec![1.0, -1.0],
            constraints: vec![row(&[1.0, 1.0], Relation::Eq, 2.0)],
            bounds: vec![(f64::NEG_INFINITY, f64::INFINITY), (-1.0, 5.0)],
        };
        let (x, v) = optimal(solve_lp(&lp).unwrap());
        assert!((x[0] + 3.0).abs() < 1e-12 && (x[1] - 5.0).abs() < 1e-12);
        assert!((v + 8.0).abs() < 1e-12);
    }

    #[test]
    fn redundant_equalities() {
        let lp = LpProblem {
            objective: vec![1.0, 2.0],
            constraints: vec![row(&[1.0, 1.0], Relation::Eq, 1.0), row(&[2.0, 2.0], Relation::Eq, 2.0)],
            bounds: vec![(0.0, 1.0); 2],
        };
        let (x, v) = optimal(solve_lp(&lp).unwrap());
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's example cycles under the largest-coefficient rule.
        let lp = LpProblem {
            objective: vec![-0.75, 150.0, -0.02, 6.0],
            constraints: vec![
                row(&[0.25, -60.0, -0.04, 9.0], Relation::Le, 0.0),
                row(&[0.5, -90.0, -0.02, 3.0], Relation::Le, 0.0),
                row(&[0.0, 0.0, 1.0, 0.0], Relation::Le, 1.0),
            ],
            bounds: vec![(0.0, f64::INFINITY); 4],
        };
        let (_, v) = optimal(solve_lp(&lp).unwrap());
        assert!((v + 0.05).abs() < 1e-12);
    }

    #[test]
    fn malformed_input() {
        let lp = LpProblem {
            objective: vec![1.0],
            constraints: vec![row(&[1.0, 1.0], Relation::Le, 1.0)],
            bounds: vec![(0.0, 1.0)],
        };
        assert!(solve_lp(&lp).is_err());
        let lp = LpProblem {
            objective: vec![1.0],
            constraints: vec![],
            bounds: vec![(2.0, 1.0)],
        };
        assert!(solve_lp(&lp).is_err());
    }

    proptest! {
        // Box-constrained LPs: the optimum sits at the bound picked by the cost sign.
        #[test]
        fn box_optimum(c in prop::collection::vec(-5.0f64..5.0, 1..6), lo in -3.0f64..0.0, width in 0.5f64..4.0) {
            let n = c.len();
            let lp = LpProblem { objective: c.clone(), constraints: vec![], bounds: vec![(lo, lo + width); n] };
            let (x, v) = optimal(solve_lp(&lp).unwrap());
            let expected: f64 = c.iter().map(|cj| if *cj < 0.0 { cj * (lo + width) } else { cj * lo }).sum();
            prop_assert!((v - expected).abs() < 1e-9);
            prop_assert!(x.iter().all(|xi| *xi >= lo - 1e-12 && *xi <= lo + width + 1e-12));
        }

        // Feasible random systems: the solution satisfies every row and beats a known feasible point.
        #[test]
        fn solution_is_feasible(seed_a in prop::collection::vec(-2.0f64..2.0, 12), x0 in prop::collection::vec(0.0f64..1.0, 3), c in prop::collection::vec(-1.0f64..1.0, 3)) {
            let constraints: Vec<Constraint> = seed_a.chunks(3).map(|a| {
                let lhs: f64 = a.iter().zip(&x0).map(|(p, q)| p * q).sum();
                row(a, Relation::Le, lhs + 0.1)
            }).collect();
            let lp = LpProblem { objective: c.clone(), constraints: constraints.clone(), bounds: vec![(0.0, 1.0); 3] };
            let (x, v) = optimal(solve_lp(&lp).unwrap());
            for r in &constraints {
                let lhs: f64 = r.coeffs.iter().zip(&x).map(|(p, q)| p * q).sum();
                prop_assert!(lhs <= r.rhs + 1e-9);
            }
            let v0: f64 = c.iter().zip(&x0).map(|(p, q)| p * q).sum();
            prop_assert!(v <= v0 + 1e-9);
        }
    }
}
