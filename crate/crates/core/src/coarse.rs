//! Trunk-basis coarse space: a prolongation `P` whose columns are basis
//! functions sampled on the grid, `R = Pᵀ`, `A_c = R A P`, and the coarse
//! correction `M2 = P A_c⁻¹ R`.
//!
//! Trained networks are represented by basis providers. The spectral and
//! polynomial providers synthesize bases; the file provider imports a basis
//! evaluated elsewhere.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{dense_qr, DenseMatrix, LuFactors, OpLedger, SparseMatrix};
use crate::problems::{grid_point, ProblemInstance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Spectral,
    Polynomial,
    File,
}

impl fmt::Display for ProviderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProviderKind::Spectral => "spectral",
            ProviderKind::Polynomial => "polynomial",
            ProviderKind::File => "file",
        })
    }
}

impl FromStr for ProviderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spectral" => Ok(ProviderKind::Spectral),
            "polynomial" => Ok(ProviderKind::Polynomial),
            "file" => Ok(ProviderKind::File),
            other => Err(Error::InvalidArgument(format!("unknown basis provider `{other}`"))),
        }
    }
}

/// Where basis columns come from.
#[derive(Debug, Clone, PartialEq)]
pub enum BasisProvider {
    /// Tensor-product sine modes of the lowest discrete frequencies.
    Spectral,
    /// Bubble-weighted shifted Legendre products, ordered by total degree.
    Polynomial,
    /// A basis file plus its `.meta` sidecar.
    File(PathBuf),
}

impl BasisProvider {
    pub fn kind(&self) -> ProviderKind {
        match self {
            BasisProvider::Spectral => ProviderKind::Spectral,
            BasisProvider::Polynomial => ProviderKind::Polynomial,
            BasisProvider::File(_) => ProviderKind::File,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub kind: ProviderKind,
    pub label: String,
}

/// Orthonormal prolongation with the attributes of the network it stands for.
#[derive(Debug, Clone)]
pub struct CoarseBasis {
    pub p: DenseMatrix,
    pub provenance: Provenance,
    pub training_time_s: f64,
    pub inference_mac_surcharge: u64,
}

impl CoarseBasis {
    /// Orthonormalizes `columns` by QR and wraps them.
    pub fn from_samples(samples: &DenseMatrix, provenance: Provenance) -> Result<Self> {
        let (n, m) = (samples.n_rows(), samples.n_cols());
        if m == 0 || m > n {
            return Err(Error::InvalidArgument(format!(
                "coarse dimension must satisfy 1 <= m <= n, got m = {m}, n = {n}"
            )));
        }
        let (q, _) = dense_qr(samples)?;
        Ok(Self {
            p: q,
            provenance,
            training_time_s: 0.0,
            inference_mac_surcharge: 0,
        })
    }

    pub fn with_attributes(mut self, training_time_s: f64, inference_mac_surcharge: u64) -> Self {
        self.training_time_s = training_time_s;
        self.inference_mac_surcharge = inference_mac_surcharge;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.provenance.label = label.into();
        self
    }

    pub fn n(&self) -> usize {
        self.p.n_rows()
    }

    pub fn m(&self) -> usize {
        self.p.n_cols()
    }
}

/// Samples the provider on the problem grid and orthonormalizes.
pub fn build_basis(provider: &BasisProvider, m: usize, p: &ProblemInstance) -> Result<CoarseBasis> {
    let n = p.n_unknowns();
    let provenance = Provenance {
        kind: provider.kind(),
        label: provider.kind().to_string(),
    };
    match provider {
        BasisProvider::Spectral => {
            let samples = spectral_samples(p.dim, p.n_per_axis, m)?;
            CoarseBasis::from_samples(&samples, provenance)
        }
        BasisProvider::Polynomial => {
            let samples = polynomial_samples(p.dim, p.n_per_axis, m)?;
            CoarseBasis::from_samples(&samples, provenance)
        }
        BasisProvider::File(path) => {
            let (samples, meta) = read_basis_file(path)?;
            if samples.n_rows() != n {
                return Err(Error::BasisLoad(format!(
                    "{} has {} rows, problem has {n} unknowns",
                    path.display(),
                    samples.n_rows()
                )));
            }
            if m != 0 && samples.n_cols() != m {
                return Err(Error::BasisLoad(format!(
                    "{} has {} columns, expected {m}",
                    path.display(),
                    samples.n_cols()
                )));
            }
            Ok(CoarseBasis::from_samples(&samples, provenance)?
                .with_attributes(meta.training_time_s, meta.inference_mac_surcharge))
        }
    }
}

fn check_m(m: usize, total: usize) -> Result<()> {
    if m == 0 || m > total {
        return Err(Error::InvalidArgument(format!(
            "coarse dimension must satisfy 1 <= m <= n, got m = {m}, n = {total}"
        )));
    }
    Ok(())
}

/// All multi-indices in `[lo, hi]^dim`, first axis fastest.
fn multi_indices(dim: usize, lo: usize, hi: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (lo..=hi).map(move |k| {
                    let mut v = prefix.clone();
                    v.push(k);
                    v
                })
            })
            .collect();
    }
    out
}

/// Sine modes `prod_d sin(k_d pi x_d)` for the `m` smallest discrete
/// Laplacian eigenvalues; ties broken lexicographically.
pub fn spectral_samples(dim: usize, n: usize, m: usize) -> Result<DenseMatrix> {
    let total = n.pow(dim as u32);
    check_m(m, total)?;
    let h = 1.0 / (n as f64 + 1.0);
    let mut modes: Vec<(f64, Vec<usize>)> = multi_indices(dim, 1, n)
        .into_iter()
        .map(|k| {
            let lambda: f64 = k.iter().map(|&kd| (kd as f64 * PI * h / 2.0).sin().powi(2)).sum();
            (lambda, k)
        })
        .collect();
    modes.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
    let columns: Vec<Vec<f64>> = modes
        .iter()
        .take(m)
        .map(|(_, k)| {
            (0..total)
                .map(|idx| {
                    grid_point(dim, n, idx)
                        .iter()
                        .zip(k)
                        .map(|(&x, &kd)| (kd as f64 * PI * x).sin())
                        .product()
                })
                .collect()
        })
        .collect();
    DenseMatrix::from_columns(&columns)
}

fn shifted_legendre(k: usize, x: f64) -> f64 {
    let t = 2.0 * x - 1.0;
    let (mut p0, mut p1) = (1.0, t);
    if k == 0 {
        return p0;
    }
    for j in 1..k {
        let p2 = ((2 * j + 1) as f64 * t * p1 - j as f64 * p0) / (j + 1) as f64;
        p0 = p1;
        p1 = p2;
    }
    p1
}

/// `prod_d x_d (1 - x_d) L_{k_d}(2 x_d - 1)` ordered by total degree.
pub fn polynomial_samples(dim: usize, n: usize, m: usize) -> Result<DenseMatrix> {
    let total = n.pow(dim as u32);
    check_m(m, total)?;
    // Smallest total degree whose index count reaches m.
    let count = |deg: usize| multi_indices(dim, 0, deg).iter().filter(|k| k.iter().sum::<usize>() <= deg).count();
    let max_degree = (0..m).find(|&deg| count(deg) >= m).unwrap_or(m);
    let mut degrees: Vec<Vec<usize>> = multi_indices(dim, 0, max_degree)
        .into_iter()
        .filter(|k| k.iter().sum::<usize>() <= max_degree)
        .collect();
    degrees.sort_by(|a, b| {
        let (sa, sb) = (a.iter().sum::<usize>(), b.iter().sum::<usize>());
        sa.cmp(&sb).then_with(|| a.cmp(b))
    });
    let columns: Vec<Vec<f64>> = degrees
        .iter()
        .take(m)
        .map(|k| {
            (0..total)
                .map(|idx| {
                    grid_point(dim, n, idx)
                        .iter()
                        .zip(k)
                        .map(|(&x, &kd)| x * (1.0 - x) * shifted_legendre(kd, x))
                        .product()
                })
                .collect()
        })
        .collect();
    DenseMatrix::from_columns(&columns)
}

/// Sidecar attributes of an imported basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisMeta {
    pub training_time_s: f64,
    pub inference_mac_surcharge: u64,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

/// Parses the basis text format: a header `n m`, then `n` rows of `m` reals.
pub fn parse_basis(text: &str) -> Result<DenseMatrix> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::BasisLoad("empty basis file".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::BasisLoad(format!("line 1: bad header `{header}`: {e}")))?;
    let [n, m] = dims[..] else {
        return Err(Error::BasisLoad(format!("line 1: header must be `n m`, got `{header}`")));
    };
    let mut values = Vec::with_capacity(n * m);
    let mut rows = 0;
    for (lineno, line) in lines {
        let row: Vec<f64> = line
            .split_whitespace()
            .map(str::parse::<f64>)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::BasisLoad(format!("line {}: {e}", lineno + 1)))?;
        if row.len() != m {
            return Err(Error::BasisLoad(format!(
                "line {}: expected {m} values, found {}",
                lineno + 1,
                row.len()
            )));
        }
        if let Some(bad) = row.iter().find(|v| !v.is_finite()) {
            return Err(Error::BasisLoad(format!("line {}: non-finite value {bad}", lineno + 1)));
        }
        values.extend(row);
        rows += 1;
    }
    if rows != n {
        return Err(Error::BasisLoad(format!("header declares {n} rows, found {rows}")));
    }
    DenseMatrix::from_row_major(n, m, values)
}

pub fn read_basis_file(path: &Path) -> Result<(DenseMatrix, BasisMeta)> {
    let text = fs::read_to_string(path).map_err(|e| Error::BasisLoad(format!("{}: {e}", path.display())))?;
    let samples = parse_basis(&text)?;
    let meta_path = sidecar_path(path);
    let meta_text =
        fs::read_to_string(&meta_path).map_err(|e| Error::BasisLoad(format!("{}: {e}", meta_path.display())))?;
    let meta: BasisMeta =
        toml::from_str(&meta_text).map_err(|e| Error::BasisLoad(format!("{}: {e}", meta_path.display())))?;
    Ok((samples, meta))
}

pub fn write_basis_file(path: &Path, samples: &DenseMatrix, meta: BasisMeta) -> std::io::Result<()> {
    let mut out = format!("{} {}\n", samples.n_rows(), samples.n_cols());
    for i in 0..samples.n_rows() {
        let row: Vec<String> = samples.row(i).iter().map(|v| format!("{v:e}")).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    fs::write(path, out)?;
    let meta_text = toml::to_string(&meta).expect("plain struct serializes");
    fs::write(sidecar_path(path), meta_text)
}

/// Galerkin coarse operator with its factorization.
#[derive(Debug, Clone)]
pub struct CoarseOperator {
    basis: CoarseBasis,
    a_c: DenseMatrix,
    factor: LuFactors,
    build_macs: u64,
}

impl CoarseOperator {
    pub fn basis(&self) -> &CoarseBasis {
        &self.basis
    }

    pub fn a_c(&self) -> &DenseMatrix {
        &self.a_c
    }

    pub fn build_macs(&self) -> u64 {
        self.build_macs
    }

    /// Reals held while the operator is live: `P` and the factor.
    pub fn persistent_reals(&self) -> u64 {
        let (n, m) = (self.basis.n() as u64, self.basis.m() as u64);
        n * m + m * m
    }

    /// Charges the build cost to a run ledger: the MACs of the triple
    /// product and factorization, and the transient `A P` block.
    pub fn account_setup(&self, ledger: &mut OpLedger) {
        let nm = (self.basis.n() * self.basis.m()) as u64;
        ledger.alloc(self.persistent_reals());
        ledger.alloc(nm);
        ledger.free(nm);
        ledger.charge(self.build_macs);
    }

    /// MACs of one `M2` application.
    pub fn apply_macs(&self) -> u64 {
        let (n, m) = (self.basis.n() as u64, self.basis.m() as u64);
        2 * n * m + m * m + self.basis.inference_mac_surcharge
    }
}

/// Forms and factorizes `A_c = Pᵀ A P`.
pub fn build_coarse_operator(basis: CoarseBasis, a: &SparseMatrix, ledger: &mut OpLedger) -> Result<CoarseOperator> {
    let (n, m) = (basis.n(), basis.m());
    if a.n_rows() != n || a.n_cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "basis has {n} rows but A is {}x{}",
            a.n_rows(),
            a.n_cols()
        )));
    }
    let mut scratch = OpLedger::new();
    let ap: Vec<Vec<f64>> = (0..m)
        .map(|j| a.spmv(&basis.p.column(j), &mut scratch))
        .collect::<Result<_>>()?;
    let mut a_c = DenseMatrix::zeros(m, m);
    for i in 0..m {
        for (j, apj) in ap.iter().enumerate() {
            let v: f64 = (0..n).map(|k| basis.p.get(k, i) * apj[k]).sum();
            a_c.set(i, j, v);
        }
    }
    let triple_macs = scratch.macs() + (n * m * m) as u64;
    for i in 0..m {
        for j in 0..i {
            let s = 0.5 * (a_c.get(i, j) + a_c.get(j, i));
            a_c.set(i, j, s);
            a_c.set(j, i, s);
        }
    }
    let factor = LuFactors::new(&a_c).map_err(|e| Error::CoarseSingular(e.to_string()))?;
    let op = CoarseOperator {
        build_macs: triple_macs + factor.factor_macs(),
        basis,
        a_c,
        factor,
    };
    op.account_setup(ledger);
    Ok(op)
}

/// `M2 r = P A_c⁻¹ Pᵀ r`, plus the basis' per-application surcharge.
pub fn apply_m2(op: &CoarseOperator, r: &[f64], ledger: &mut OpLedger) -> Result<Vec<f64>> {
    let m = op.basis.m() as u64;
    ledger.alloc(2 * m);
    let rc = op.basis.p.matvec_transpose(r, ledger)?;
    let y = op.factor.solve(&rc, ledger)?;
    let z = op.basis.p.matvec(&y, ledger)?;
    ledger.free(2 * m);
    ledger.charge(op.basis.inference_mac_surcharge);
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{cholesky, vector::dot_plain};
    use crate::problems::{assemble_poisson, Kappa};

    #[test]
    fn single_spectral_mode() {
        let p = assemble_poisson(1, 3, Kappa::Constant).unwrap();
        let b = build_basis(&BasisProvider::Spectral, 1, &p).unwrap();
        let raw = [(PI / 4.0).sin(), (PI / 2.0).sin(), (3.0 * PI / 4.0).sin()];
        let norm = raw.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (i, r) in raw.iter().enumerate() {
            assert!((b.p.get(i, 0) - r / norm).abs() < 1e-14);
        }
    }

    #[test]
    fn spectral_columns_are_a_orthogonal() {
        for (dim, n, m) in [(1, 31, 8), (2, 15, 20)] {
            let p = assemble_poisson(dim, n, Kappa::Constant).unwrap();
            let b = build_basis(&BasisProvider::Spectral, m, &p).unwrap();
            let op = build_coarse_operator(b, &p.a, &mut OpLedger::new()).unwrap();
            let ac = op.a_c();
            let scale = ac.max_abs();
            for i in 0..m {
                for j in 0..m {
                    if i != j {
                        assert!(ac.get(i, j).abs() <= 1e-10 * scale);
                    }
                }
            }
        }
    }

    #[test]
    fn polynomial_basis_is_orthonormal() {
        for (dim, n) in [(1, 9), (2, 7), (3, 5)] {
            let p = assemble_poisson(dim, n, Kappa::Constant).unwrap();
            let b = build_basis(&BasisProvider::Polynomial, 3, &p).unwrap();
            let ptp = b.p.transpose().matmul(&b.p).unwrap();
            assert!(ptp.max_abs_diff(&DenseMatrix::identity(3)) <= 1e-12);
        }
    }

    #[test]
    fn coarse_dimension_bounds() {
        let p = assemble_poisson(1, 5, Kappa::Constant).unwrap();
        assert!(build_basis(&BasisProvider::Spectral, 0, &p).is_err());
        assert!(build_basis(&BasisProvider::Polynomial, 6, &p).is_err());
    }

    #[test]
    fn identity_operator_gives_identity_coarse_matrix() {
        let p = assemble_poisson(1, 12, Kappa::Constant).unwrap();
        let b = build_basis(&BasisProvider::Polynomial, 4, &p).unwrap();
        let op = build_coarse_operator(b, &SparseMatrix::identity(12), &mut OpLedger::new()).unwrap();
        assert!(op.a_c().max_abs_diff(&DenseMatrix::identity(4)) < 1e-12);
    }

    #[test]
    fn lowest_mode_gives_lowest_eigenvalue() {
        let p = assemble_poisson(1, 31, Kappa::Constant).unwrap();
        let b = build_basis(&BasisProvider::Spectral, 1, &p).unwrap();
        let op = build_coarse_operator(b, &p.a, &mut OpLedger::new()).unwrap();
        let lambda1 = (2.0 - 2.0 * (PI * p.h).cos()) / (p.h * p.h);
        assert!((op.a_c().get(0, 0) - lambda1).abs() <= 1e-10 * lambda1);
    }

    #[test]
    fn random_orthonormal_basis_gives_spd_coarse_matrix() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let p = assemble_poisson(1, 20, Kappa::Bump).unwrap();
        let cols: Vec<Vec<f64>> = (0..4).map(|_| (0..20).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let samples = DenseMatrix::from_columns(&cols).unwrap();
        let prov = Provenance { kind: ProviderKind::File, label: "random".into() };
        let b = CoarseBasis::from_samples(&samples, prov).unwrap();
        let op = build_coarse_operator(b, &p.a, &mut OpLedger::new()).unwrap();
        cholesky(op.a_c()).unwrap();
    }

    #[test]
    fn singular_coarse_matrix_reported() {
        // A vanishes on range(P).
        let a = SparseMatrix::from_triplets(3, 3, vec![(1, 1, 1.0), (2, 2, 1.0)]).unwrap();
        let samples = DenseMatrix::from_columns(&[vec![1.0, 0.0, 0.0]]).unwrap();
        let prov = Provenance { kind: ProviderKind::File, label: "e1".into() };
        let b = CoarseBasis::from_samples(&samples, prov).unwrap();
        assert!(matches!(
            build_coarse_operator(b, &a, &mut OpLedger::new()),
            Err(Error::CoarseSingular(_))
        ));
    }

    fn spectral_op(n: usize, m: usize) -> (ProblemInstance, CoarseOperator) {
        let p = assemble_poisson(1, n, Kappa::Ramp).unwrap();
        let b = build_basis(&BasisProvider::Spectral, m, &p).unwrap();
        let op = build_coarse_operator(b, &p.a, &mut OpLedger::new()).unwrap();
        (p, op)
    }

    #[test]
    fn m2_kills_orthogonal_complement() {
        let (_, op) = spectral_op(15, 3);
        // Mode 9 is orthogonal to modes 1..3 on the grid.
        let r: Vec<f64> = (0..15).map(|i| (9.0 * PI * (i as f64 + 1.0) / 16.0).sin()).collect();
        let z = apply_m2(&op, &r, &mut OpLedger::new()).unwrap();
        assert!(z.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn m2_galerkin_identity() {
        let (p, op) = spectral_op(31, 5);
        let y = [0.3, -1.0, 2.0, 0.5, -0.25];
        let mut ledger = OpLedger::new();
        let py = op.basis().p.matvec(&y, &mut ledger).unwrap();
        let r = p.a.spmv(&py, &mut ledger).unwrap();
        let z = apply_m2(&op, &r, &mut ledger).unwrap();
        let scale = py.iter().map(|v| v * v).sum::<f64>().sqrt();
        let err = z.iter().zip(&py).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(err <= 1e-10 * scale);
    }

    #[test]
    fn m2_is_projector_for_identity_operator() {
        let p = assemble_poisson(1, 10, Kappa::Constant).unwrap();
        let b = build_basis(&BasisProvider::Polynomial, 3, &p).unwrap();
        let op = build_coarse_operator(b, &SparseMatrix::identity(10), &mut OpLedger::new()).unwrap();
        let r: Vec<f64> = (0..10).map(|i| (i as f64).cos()).collect();
        let mut ledger = OpLedger::new();
        let once = apply_m2(&op, &r, &mut ledger).unwrap();
        let twice = apply_m2(&op, &once, &mut ledger).unwrap();
        for (a, b) in once.iter().zip(&twice) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn m2_is_symmetric() {
        let (_, op) = spectral_op(31, 6);
        let u: Vec<f64> = (0..31).map(|i| (i as f64 * 0.7).sin()).collect();
        let v: Vec<f64> = (0..31).map(|i| (i as f64 * 1.3).cos()).collect();
        let mut ledger = OpLedger::new();
        let mu = apply_m2(&op, &u, &mut ledger).unwrap();
        let mv = apply_m2(&op, &v, &mut ledger).unwrap();
        let lhs = dot_plain(&mu, &v);
        let rhs = dot_plain(&u, &mv);
        assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1e-3));
    }

    #[test]
    fn m2_charges_linear_algebra_plus_surcharge() {
        let (_, op) = spectral_op(15, 3);
        let op = CoarseOperator {
            basis: op.basis.clone().with_attributes(1.0, 1000),
            ..op
        };
        let mut ledger = OpLedger::new();
        apply_m2(&op, &[1.0; 15], &mut ledger).unwrap();
        assert_eq!(ledger.macs(), 2 * 15 * 3 + 9 + 1000);
        assert_eq!(ledger.macs(), op.apply_macs());
        assert_eq!(ledger.peak_reals(), 6);
    }

    #[test]
    fn basis_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trunk.txt");
        let p = assemble_poisson(1, 7, Kappa::Constant).unwrap();
        let samples = spectral_samples(1, 7, 2).unwrap();
        let meta = BasisMeta { training_time_s: 12.5, inference_mac_surcharge: 4096 };
        write_basis_file(&path, &samples, meta).unwrap();
        let b = build_basis(&BasisProvider::File(path.clone()), 2, &p).unwrap();
        assert_eq!(b.training_time_s, 12.5);
        assert_eq!(b.inference_mac_surcharge, 4096);
        assert_eq!(b.provenance.kind, ProviderKind::File);
        let reference = build_basis(&BasisProvider::Spectral, 2, &p).unwrap();
        assert!(b.p.max_abs_diff(&reference.p) < 1e-14);
    }

    #[test]
    fn basis_file_errors() {
        assert!(matches!(parse_basis(""), Err(Error::BasisLoad(_))));
        assert!(matches!(parse_basis("2 2\n1 2\n3\n"), Err(Error::BasisLoad(_))));
        assert!(matches!(parse_basis("3 1\n1\n2\n"), Err(Error::BasisLoad(_))));
        assert!(matches!(parse_basis("2 1\n1\nx\n"), Err(Error::BasisLoad(_))));

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trunk.txt");
        let p = assemble_poisson(1, 7, Kappa::Constant).unwrap();
        let samples = spectral_samples(1, 5, 2).unwrap();
        write_basis_file(&path, &samples, BasisMeta { training_time_s: 1.0, inference_mac_surcharge: 0 }).unwrap();
        let err = build_basis(&BasisProvider::File(path), 2, &p).unwrap_err();
        assert!(matches!(err, Error::BasisLoad(_)));
    }
}
