//! Finite-difference assembly of `-div(kappa grad u) = f` on the unit cube
//! with homogeneous Dirichlet boundaries, plus geometric grid hierarchies.
//!
//! Unknowns are interior grid points `x = (i + 1) h`, `h = 1 / (n + 1)`,
//! numbered lexicographically with the first axis fastest.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{OpLedger, SparseMatrix};

/// Coefficient presets, selectable by id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kappa {
    /// `kappa = 1`
    Constant,
    /// `kappa = 1 + x_1`
    Ramp,
    /// `kappa = 1 + 0.5 sin(2 pi x_1)`
    Bump,
}

impl Kappa {
    pub fn eval(self, x: &[f64]) -> f64 {
        match self {
            Kappa::Constant => 1.0,
            Kappa::Ramp => 1.0 + x[0],
            Kappa::Bump => 1.0 + 0.5 * (2.0 * PI * x[0]).sin(),
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            Kappa::Constant => "constant",
            Kappa::Ramp => "ramp",
            Kappa::Bump => "bump",
        }
    }
}

impl fmt::Display for Kappa {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Kappa {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" => Ok(Kappa::Constant),
            "ramp" => Ok(Kappa::Ramp),
            "bump" => Ok(Kappa::Bump),
            other => Err(Error::InvalidArgument(format!(
                "unknown kappa id `{other}` (expected constant, ramp or bump)"
            ))),
        }
    }
}

/// An assembled Poisson system with a known discrete solution.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub dim: usize,
    pub n_per_axis: usize,
    pub h: f64,
    pub a: SparseMatrix,
    pub f: Vec<f64>,
    pub u_ref: Vec<f64>,
    pub kappa_id: String,
}

impl ProblemInstance {
    pub fn n_unknowns(&self) -> usize {
        self.a.n_rows()
    }

    /// Coordinates of unknown `idx`.
    pub fn point(&self, idx: usize) -> Vec<f64> {
        grid_point(self.dim, self.n_per_axis, idx)
    }
}

pub fn grid_point(dim: usize, n: usize, mut idx: usize) -> Vec<f64> {
    let h = 1.0 / (n as f64 + 1.0);
    (0..dim)
        .map(|_| {
            let i = idx % n;
            idx /= n;
            (i as f64 + 1.0) * h
        })
        .collect()
}

/// Assembles a preset coefficient problem.
pub fn assemble_poisson(dim: usize, n_per_axis: usize, kappa: Kappa) -> Result<ProblemInstance> {
    let mut p = assemble_with(dim, n_per_axis, |x| kappa.eval(x))?;
    p.kappa_id = kappa.id().to_string();
    Ok(p)
}

/// Assembles the 2d+1 point stencil with kappa sampled at face midpoints.
///
/// The right-hand side is `f = A u_ref` for `u_ref = prod_d sin(pi x_d)`.
pub fn assemble_with(dim: usize, n_per_axis: usize, kappa: impl Fn(&[f64]) -> f64) -> Result<ProblemInstance> {
    if !(1..=3).contains(&dim) {
        return Err(Error::InvalidArgument(format!("dimension must be 1, 2 or 3, got {dim}")));
    }
    if n_per_axis < 3 {
        return Err(Error::GridSize(format!("need at least 3 interior points per axis, got {n_per_axis}")));
    }
    let n = n_per_axis;
    let total = n.pow(dim as u32);
    let h = 1.0 / (n as f64 + 1.0);
    let inv_h2 = 1.0 / (h * h);
    let strides: Vec<usize> = (0..dim).map(|d| n.pow(d as u32)).collect();

    let mut triplets = Vec::with_capacity(total * (2 * dim + 1));
    for idx in 0..total {
        let x = grid_point(dim, n, idx);
        let mut diag = 0.0;
        for d in 0..dim {
            let i_d = (idx / strides[d]) % n;
            for dir in [-1.0f64, 1.0] {
                let mut face = x.clone();
                // Computed from the index so both sides of a face agree bitwise.
                face[d] = ((2 * i_d + 2) as f64 + dir) * 0.5 * h;
                let k = kappa(&face);
                if !(k > 0.0) || !k.is_finite() {
                    return Err(Error::InvalidCoefficient { value: k, point: face });
                }
                let c = k * inv_h2;
                diag += c;
                let neighbour = if dir < 0.0 {
                    (i_d > 0).then(|| idx - strides[d])
                } else {
                    (i_d + 1 < n).then(|| idx + strides[d])
                };
                if let Some(j) = neighbour {
                    triplets.push((idx, j, -c));
                }
            }
        }
        triplets.push((idx, idx, diag));
    }
    let a = SparseMatrix::from_triplets(total, total, triplets)?;
    let u_ref: Vec<f64> = (0..total)
        .map(|idx| grid_point(dim, n, idx).iter().map(|&xd| (PI * xd).sin()).product())
        .collect();
    let f = a.spmv(&u_ref, &mut OpLedger::new())?;
    Ok(ProblemInstance {
        dim,
        n_per_axis,
        h,
        a,
        f,
        u_ref,
        kappa_id: "custom".to_string(),
    })
}

/// One grid of a geometric hierarchy.
#[derive(Debug, Clone)]
pub struct GridLevel {
    pub n_per_axis: usize,
    pub a: SparseMatrix,
    /// Linear interpolation from the next coarser level to this one.
    pub interp: Option<SparseMatrix>,
    /// Full-weighting restriction from this level to the next coarser one.
    pub restrict: Option<SparseMatrix>,
}

/// Geometric hierarchy; level 0 is the finest grid.
#[derive(Debug, Clone)]
pub struct Hierarchy {
    pub levels: Vec<GridLevel>,
    /// MACs spent forming the Galerkin products.
    pub galerkin_macs: u64,
}

impl Hierarchy {
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn coarsest(&self) -> &GridLevel {
        self.levels.last().expect("hierarchy is never empty")
    }

    /// Stored reals across coarse operators and transfer matrices.
    pub fn storage(&self) -> usize {
        self.levels
            .iter()
            .skip(1)
            .map(|l| l.a.nnz())
            .chain(self.levels.iter().filter_map(|l| l.interp.as_ref().map(SparseMatrix::nnz)))
            .chain(self.levels.iter().filter_map(|l| l.restrict.as_ref().map(SparseMatrix::nnz)))
            .sum()
    }
}

/// 1-d linear interpolation from `nc` coarse points to `2 nc + 1` fine points.
fn interp_1d(nc: usize) -> Vec<Vec<(usize, f64)>> {
    let nf = 2 * nc + 1;
    let mut rows = vec![Vec::new(); nf];
    for j in 0..nc {
        rows[2 * j].push((j, 0.5));
        rows[2 * j + 1].push((j, 1.0));
        rows[2 * j + 2].push((j, 0.5));
    }
    rows
}

/// Tensor-product interpolation matrix (fine x coarse).
pub fn interpolation(dim: usize, n_coarse: usize) -> Result<SparseMatrix> {
    let nf = 2 * n_coarse + 1;
    let rows1 = interp_1d(n_coarse);
    let total_f = nf.pow(dim as u32);
    let total_c = n_coarse.pow(dim as u32);
    let mut triplets = Vec::new();
    for fi in 0..total_f {
        let mut combos: Vec<(usize, f64)> = vec![(0, 1.0)];
        let mut rem = fi;
        let mut stride = 1;
        for _ in 0..dim {
            let i = rem % nf;
            rem /= nf;
            combos = combos
                .iter()
                .flat_map(|&(c, w)| rows1[i].iter().map(move |&(j, wj)| (c + j * stride, w * wj)))
                .collect();
            stride *= n_coarse;
        }
        triplets.extend(combos.into_iter().map(|(c, w)| (fi, c, w)));
    }
    SparseMatrix::from_triplets(total_f, total_c, triplets)
}

/// Builds a hierarchy of `levels` coarsenings below the fine grid.
///
/// Restriction is full weighting `Pᵀ / 2^d` and coarse operators are the
/// Galerkin products `R A P`.
pub fn coarsen(p: &ProblemInstance, levels: usize) -> Result<Hierarchy> {
    let factor = 1usize << levels;
    if (p.n_per_axis + 1) % factor != 0 {
        return Err(Error::GridSize(format!(
            "n_per_axis + 1 = {} is not divisible by 2^{levels}",
            p.n_per_axis + 1
        )));
    }
    if levels > 0 && (p.n_per_axis + 1) / factor < 2 {
        return Err(Error::GridSize(format!(
            "{levels} coarsenings leave no interior points on a grid of {}",
            p.n_per_axis
        )));
    }
    let mut out = vec![GridLevel {
        n_per_axis: p.n_per_axis,
        a: p.a.clone(),
        interp: None,
        restrict: None,
    }];
    let weight = 1.0 / (1u64 << p.dim) as f64;
    let mut macs = 0u64;
    for _ in 0..levels {
        let fine = out.last_mut().unwrap();
        let nc = (fine.n_per_axis + 1) / 2 - 1;
        let interp = interpolation(p.dim, nc)?;
        let restrict = interp.transpose().scaled(weight);
        let (ap, m1) = fine.a.matmul(&interp)?;
        let (rap, m2) = restrict.matmul(&ap)?;
        macs += m1 + m2;
        fine.interp = Some(interp);
        fine.restrict = Some(restrict);
        out.push(GridLevel {
            n_per_axis: nc,
            a: symmetrize(rap),
            interp: None,
            restrict: None,
        });
    }
    Ok(Hierarchy {
        levels: out,
        galerkin_macs: macs,
    })
}

/// Averages `A` with its transpose to remove rounding asymmetry.
fn symmetrize(a: SparseMatrix) -> SparseMatrix {
    let t = a.transpose();
    let mut triplets = Vec::with_capacity(a.nnz());
    for i in 0..a.n_rows() {
        for (j, v) in a.row(i) {
            triplets.push((i, j, 0.5 * (v + t.get(i, j))));
        }
    }
    SparseMatrix::from_triplets(a.n_rows(), a.n_cols(), triplets).expect("same pattern")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::cholesky;

    #[test]
    fn one_d_constant_stencil() {
        let p = assemble_poisson(1, 3, Kappa::Constant).unwrap();
        let expected = [[32.0, -16.0, 0.0], [-16.0, 32.0, -16.0], [0.0, -16.0, 32.0]];
        for (i, row) in expected.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                assert!((p.a.get(i, j) - v).abs() < 1e-12);
            }
        }
        assert_eq!(p.h, 0.25);
    }

    #[test]
    fn two_d_five_point_stencil() {
        // Brute-force oracle: write out the 5-point Laplacian on a 3x3 grid directly.
        let p = assemble_poisson(2, 3, Kappa::Constant).unwrap();
        let s = 16.0;
        for i in 0..9usize {
            let (ix, iy) = (i % 3, i / 3);
            for j in 0..9usize {
                let (jx, jy) = (j % 3, j / 3);
                let manhattan = ix.abs_diff(jx) + iy.abs_diff(jy);
                let want = match manhattan {
                    0 => 4.0 * s,
                    1 => -s,
                    _ => 0.0,
                };
                assert!((p.a.get(i, j) - want).abs() < 1e-12, "({i},{j})");
            }
        }
        // Edge-midpoint rows have three neighbours: row sum = s.
        let sums: Vec<f64> = (0..9).map(|i| p.a.row(i).map(|(_, v)| v).sum()).collect();
        assert!((sums[1] - s).abs() < 1e-12);
        assert!((sums[4]).abs() < 1e-12);
        assert!((sums[0] - 2.0 * s).abs() < 1e-12);
    }

    #[test]
    fn ramp_uses_face_values() {
        let p = assemble_poisson(1, 3, Kappa::Ramp).unwrap();
        // faces at 0.125, 0.375, 0.625, 0.875
        let k = |x: f64| 1.0 + x;
        assert!((p.a.get(0, 1) + 16.0 * k(0.375)).abs() < 1e-12);
        assert!((p.a.get(1, 2) + 16.0 * k(0.625)).abs() < 1e-12);
        assert!((p.a.get(1, 1) - 16.0 * (k(0.375) + k(0.625))).abs() < 1e-12);
        assert!((p.a.get(0, 0) - 16.0 * (k(0.125) + k(0.375))).abs() < 1e-12);
        assert_eq!(p.a.asymmetry(), 0.0);
    }

    #[test]
    fn nonpositive_kappa_rejected() {
        let err = assemble_with(1, 5, |x| x[0] - 0.5).unwrap_err();
        assert!(matches!(err, Error::InvalidCoefficient { .. }));
    }

    #[test]
    fn too_small_grid_rejected() {
        assert!(matches!(assemble_poisson(1, 2, Kappa::Constant), Err(Error::GridSize(_))));
    }

    #[test]
    fn sine_modes_are_eigenvectors() {
        let p = assemble_poisson(1, 31, Kappa::Constant).unwrap();
        let mut ledger = OpLedger::new();
        for k in [1usize, 5, 17] {
            let v: Vec<f64> = (0..31).map(|i| (k as f64 * PI * p.point(i)[0]).sin()).collect();
            let av = p.a.spmv(&v, &mut ledger).unwrap();
            let lambda = (2.0 - 2.0 * (k as f64 * PI * p.h).cos()) / (p.h * p.h);
            for (x, y) in av.iter().zip(&v) {
                assert!((x - lambda * y).abs() <= 1e-10 * lambda);
            }
        }
    }

    #[test]
    fn small_instances_are_spd() {
        for (dim, n) in [(1, 7), (2, 5), (3, 3)] {
            for kappa in [Kappa::Constant, Kappa::Ramp, Kappa::Bump] {
                let p = assemble_poisson(dim, n, kappa).unwrap();
                assert_eq!(p.a.asymmetry(), 0.0);
                cholesky(&p.a.to_dense()).unwrap();
                assert_eq!(p.f.len(), n.pow(dim as u32));
                assert_eq!(p.u_ref.len(), p.f.len());
            }
        }
    }

    #[test]
    fn coarsen_zero_levels() {
        let p = assemble_poisson(1, 7, Kappa::Constant).unwrap();
        assert_eq!(coarsen(&p, 0).unwrap().depth(), 1);
    }

    #[test]
    fn coarsen_sizes() {
        let p = assemble_poisson(1, 15, Kappa::Constant).unwrap();
        let h = coarsen(&p, 2).unwrap();
        let sizes: Vec<usize> = h.levels.iter().map(|l| l.a.n_rows()).collect();
        assert_eq!(sizes, vec![15, 7, 3]);
    }

    #[test]
    fn coarsen_indivisible() {
        let p = assemble_poisson(1, 8, Kappa::Constant).unwrap();
        assert!(matches!(coarsen(&p, 1), Err(Error::GridSize(_))));
    }

    #[test]
    fn galerkin_1d_is_coarse_poisson() {
        // Explicit dense triple product (3x7)(7x7)(7x3) as oracle.
        let p = assemble_poisson(1, 7, Kappa::Constant).unwrap();
        let h = coarsen(&p, 1).unwrap();
        let interp = h.levels[0].interp.as_ref().unwrap().to_dense();
        let restrict = interp.transpose();
        let dense = restrict
            .matmul(&p.a.to_dense())
            .unwrap()
            .matmul(&interp)
            .unwrap();
        let coarse = &h.levels[1].a;
        assert_eq!(coarse.n_rows(), 3);
        for i in 0..3 {
            for j in 0..3 {
                assert!((coarse.get(i, j) - 0.5 * dense.get(i, j)).abs() < 1e-10);
            }
        }
        // Full weighting reproduces the rediscretized operator with H = 2h.
        let hc = 0.25;
        for i in 0..3 {
            assert!((coarse.get(i, i) - 2.0 / (hc * hc)).abs() < 1e-10);
            if i + 1 < 3 {
                assert!((coarse.get(i, i + 1) + 1.0 / (hc * hc)).abs() < 1e-10);
            }
        }
        assert_eq!(coarse.bandwidth(), 1);
    }

    #[test]
    fn galerkin_operators_stay_spd() {
        for (dim, n) in [(1, 15), (2, 7), (3, 7)] {
            let p = assemble_poisson(dim, n, Kappa::Bump).unwrap();
            let h = coarsen(&p, 1).unwrap();
            let coarse = &h.levels[1].a;
            assert!(coarse.asymmetry() < 1e-12 * coarse.values().iter().fold(0.0f64, |m, v| m.max(v.abs())));
            cholesky(&coarse.to_dense()).unwrap();
        }
    }
}
