//! Dense complex matrix kernels.
//!
//! Everything downstream works with [`CMatrix`] and [`Vector`], which are plain
//! `nalgebra` dynamic matrices over `Complex64`. Tolerances are collected once in
//! [`Tolerances`] and are always relative to the Frobenius norm of the input.

use nalgebra::linalg::SymmetricEigen;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type Vector = DVector<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Numerical tolerances threaded through every module.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Hermiticity, relative to the Frobenius norm.
    pub hermitian: f64,
    /// Eigen-residuals and degeneracy clustering.
    pub eig: f64,
    /// PSD classification: `min_eig >= -psd * norm` counts as positive.
    pub psd: f64,
    /// Singular-value cutoff for ranks and spans.
    pub rank: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { hermitian: 1e-10, eig: 1e-9, psd: 1e-9, rank: 1e-9 }
    }
}

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn adjoint(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

pub fn matmul(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if a.ncols() != b.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "cannot multiply {}x{} by {}x{}",
            a.nrows(),
            a.ncols(),
            b.nrows(),
            b.ncols()
        )));
    }
    Ok(a * b)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn trace(m: &CMatrix) -> C64 {
    m.trace()
}

/// `Tr(a† b)`.
pub fn hilbert_schmidt_inner(a: &CMatrix, b: &CMatrix) -> C64 {
    a.dotc(b)
}

pub fn frobenius_norm(m: &CMatrix) -> f64 {
    m.norm()
}

/// Largest singular value.
pub fn operator_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    svd(m).singular_values.first().copied().unwrap_or(0.0)
}

/// `|i><j|` in dimension `d`.
pub fn matrix_unit(d: usize, i: usize, j: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    m[(i, j)] = ONE;
    m
}

pub fn basis_vector(d: usize, i: usize) -> Vector {
    let mut v = Vector::zeros(d);
    v[i] = ONE;
    v
}

pub fn outer(u: &Vector, v: &Vector) -> CMatrix {
    u * v.adjoint()
}

pub fn direct_sum(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    let mut m = CMatrix::zeros(ra + rb, ca + cb);
    m.view_mut((0, 0), (ra, ca)).copy_from(a);
    m.view_mut((ra, ca), (rb, cb)).copy_from(b);
    m
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// `Tr(rho X)` without forming the product.
pub fn expectation(rho: &CMatrix, x: &CMatrix) -> C64 {
    // Tr(rho X) = sum_ij rho_ij X_ji
    let n = rho.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for j in 0..n {
            acc += rho[(i, j)] * x[(j, i)];
        }
    }
    acc
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// `max_ij |M_ij - conj(M_ji)|`.
pub fn hermitian_asymmetry(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn is_hermitian(m: &CMatrix, tol: &Tolerances) -> bool {
    m.is_square() && hermitian_asymmetry(m) <= tol.hermitian * m.norm().max(f64::MIN_POSITIVE)
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5, 0.0)
}

/// Eigen-decomposition of a hermitian matrix.
#[derive(Clone, Debug)]
pub struct Eigh {
    /// Ascending.
    pub values: Vec<f64>,
    /// Orthonormal columns matching `values`.
    pub vectors: CMatrix,
}

impl Eigh {
    pub fn vector(&self, k: usize) -> Vector {
        self.vectors.column(k).into_owned()
    }

    /// Rebuilds `f(M)` from the spectrum.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.vectors.nrows();
        let mut out = CMatrix::zeros(n, n);
        for (k, &lam) in self.values.iter().enumerate() {
            let fk = f(lam);
            if fk == 0.0 {
                continue;
            }
            let v = self.vectors.column(k);
            out += (&v * v.adjoint()) * c(fk, 0.0);
        }
        out
    }
}

fn check_square_finite(m: &CMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!("expected a square matrix, got {}x{}", m.nrows(), m.ncols())));
    }
    if !is_finite(m) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

/// Hermitian eigen-decomposition with a deterministic basis.
///
/// The input must be hermitian within `tol.hermitian`; it is symmetrized before
/// decomposition. Eigenvalues whose gaps are below `tol.eig * ||M||` form a
/// cluster; each cluster gets a canonical basis (greedy orthogonalization of the
/// cluster projector's columns in index order) and every vector is rotated so
/// that its first non-negligible component is real and positive.
pub fn hermitian_eig(m: &CMatrix, tol: &Tolerances) -> Result<Eigh> {
    check_square_finite(m)?;
    let n = m.nrows();
    if n == 0 {
        return Ok(Eigh { values: vec![], vectors: CMatrix::zeros(0, 0) });
    }
    let scale = m.norm();
    let asym = hermitian_asymmetry(m);
    let bound = tol.hermitian * scale;
    if asym > bound && asym > f64::MIN_POSITIVE {
        return Err(Error::NotHermitian { asymmetry: asym, bound });
    }
    let sym = hermitian_part(m);
    let eig = SymmetricEigen::try_new(sym.clone(), f64::EPSILON, 0).ok_or(Error::NoConvergence("hermitian eigensolver"))?;
    let lambda = CMatrix::from_diagonal(&eig.eigenvalues.map(|x| c(x, 0.0)));
    let residual = (&sym * &eig.eigenvectors - &eig.eigenvectors * lambda).norm();
    if residual > EIG_RESIDUAL_FACTOR * f64::EPSILON * (n as f64) * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NoConvergence("hermitian eigensolver"));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }

    let gap = tol.eig * scale;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[end] - values[end - 1] <= gap {
            end += 1;
        }
        canonicalize_cluster(&mut vectors, start, end);
        start = end;
    }
    Ok(Eigh { values, vectors })
}

const PHASE_THRESHOLD: f64 = 1e-8;

/// Backward-error allowance for the eigensolver, in units of `n * eps * ||M||`.
const EIG_RESIDUAL_FACTOR: f64 = 1e4;

fn first_significant(v: &Vector) -> usize {
    v.iter().position(|z| z.norm() > PHASE_THRESHOLD).unwrap_or(0)
}

/// Rotates `v` so that its first non-negligible component is real positive.
pub fn canonical_phase(v: &mut Vector) {
    if let Some(z) = v.iter().find(|z| z.norm() > PHASE_THRESHOLD).copied() {
        let phase = z.conj() / z.norm();
        *v *= phase;
    }
}

fn canonicalize_cluster(vectors: &mut CMatrix, start: usize, end: usize) {
    let n = vectors.nrows();
    let k = end - start;
    if k == 1 {
        let mut v = vectors.column(start).into_owned();
        canonical_phase(&mut v);
        vectors.set_column(start, &v);
        return;
    }
    let block = vectors.columns(start, k).into_owned();
    let proj = &block * block.adjoint();
    let mut accepted: Vec<Vector> = Vec::with_capacity(k);
    for j in 0..n {
        if accepted.len() == k {
            break;
        }
        let mut r = proj.column(j).into_owned();
        for _ in 0..2 {
            for q in &accepted {
                let coeff = q.dotc(&r);
                r -= q * coeff;
            }
        }
        let norm = r.norm();
        if norm > 1e-6 {
            accepted.push(r / c(norm, 0.0));
        }
    }
    if accepted.len() != k {
        return;
    }
    for v in accepted.iter_mut() {
        canonical_phase(v);
    }
    accepted.sort_by_key(first_significant);
    for (offset, v) in accepted.iter().enumerate() {
        vectors.set_column(start + offset, v);
    }
}

pub fn min_eigenvalue(m: &CMatrix, tol: &Tolerances) -> Result<f64> {
    let e = hermitian_eig(m, tol)?;
    Ok(e.values.first().copied().unwrap_or(0.0))
}

/// Result of classifying a hermitian matrix as positive semi-definite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsdCheck {
    pub min_eig: f64,
    /// Frobenius norm of the input; the tolerance band is `psd * scale`.
    pub scale: f64,
    pub positive: bool,
}

impl PsdCheck {
    /// True when the verdict sits inside the tolerance band around zero.
    pub fn is_marginal(&self, tol: &Tolerances) -> bool {
        self.min_eig.abs() <= tol.psd * self.scale
    }
}

pub fn psd_check(m: &CMatrix, tol: &Tolerances) -> Result<PsdCheck> {
    let min_eig = min_eigenvalue(m, tol)?;
    let scale = m.norm();
    Ok(PsdCheck { min_eig, scale, positive: min_eig >= -tol.psd * scale })
}

/// Number of singular values above `tol.rank * ||M||_F`.
pub fn svd_rank(m: &CMatrix, tol: &Tolerances) -> usize {
    if m.is_empty() {
        return 0;
    }
    let cutoff = tol.rank * m.norm();
    svd(m).singular_values.iter().filter(|&&s| s > cutoff).count()
}

/// Thin singular value decomposition `A = U diag(s) V†`, singular values descending.
///
/// Columns of `u` belonging to zero singular values are zero.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: CMatrix,
    pub singular_values: Vec<f64>,
    pub v: CMatrix,
}

const JACOBI_MAX_SWEEPS: usize = 80;

/// One-sided (Hestenes) Jacobi SVD.
///
/// Slower than bidiagonalization but accurate for the rank-deficient batches
/// that span computations produce; zero singular values come out at the
/// rounding level of the input.
pub fn svd(a: &CMatrix) -> Svd {
    if a.nrows() < a.ncols() {
        let t = svd(&a.adjoint());
        return Svd { u: t.v, singular_values: t.singular_values, v: t.u };
    }
    let (m, n) = a.shape();
    let mut w = a.clone();
    let mut v = CMatrix::identity(n, n);
    let eps = f64::EPSILON;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dotc(&w.column(q));
                let g = gamma.norm();
                if g <= eps * (alpha * beta).sqrt() || g == 0.0 {
                    continue;
                }
                rotated = true;
                // rotate column q so the inner product becomes real and positive
                let phase = gamma.conj() / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for i in 0..m {
                    let x = w[(i, p)];
                    let y = w[(i, q)] * phase;
                    w[(i, p)] = x * cs - y * sn;
                    w[(i, q)] = x * sn + y * cs;
                }
                for i in 0..n {
                    let x = v[(i, p)];
                    let y = v[(i, q)] * phase;
                    v[(i, p)] = x * cs - y * sn;
                    v[(i, q)] = x * sn + y * cs;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let norms: Vec<f64> = (0..n).map(|k| w.column(k).norm()).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let mut u = CMatrix::zeros(m, n);
    let mut vs = CMatrix::zeros(n, n);
    let mut singular_values = Vec::with_capacity(n);
    for (dst, &src) in order.iter().enumerate() {
        let s = norms[src];
        if s > 0.0 {
            u.set_column(dst, &(w.column(src) / c(s, 0.0)));
        }
        vs.set_column(dst, &v.column(src));
        singular_values.push(s);
    }
    Svd { u, singular_values, v: vs }
}

/// Minimum-norm least-squares solution.
#[derive(Clone, Debug)]
pub struct LeastSquares {
    pub coefficients: Vector,
    pub residual: f64,
}

pub fn least_squares(columns: &[Vector], target: &Vector, tol: &Tolerances) -> Result<LeastSquares> {
    let d = target.len();
    if let Some((k, col)) = columns.iter().enumerate().find(|(_, col)| col.len() != d) {
        return Err(Error::DimensionMismatch(format!("column {k} has length {}, target has {d}", col.len())));
    }
    if columns.is_empty() {
        return Ok(LeastSquares { coefficients: Vector::zeros(0), residual: target.norm() });
    }
    let a = CMatrix::from_columns(columns);
    solve_least_squares(&a, target, tol)
}

/// Pseudo-inverse solve of `a x ~ b`, cutting singular values below `tol.rank * ||a||_F`.
pub fn solve_least_squares(a: &CMatrix, b: &Vector, tol: &Tolerances) -> Result<LeastSquares> {
    if a.nrows() != b.len() {
        return Err(Error::DimensionMismatch(format!("system has {} rows, target has {}", a.nrows(), b.len())));
    }
    let n = a.ncols();
    if n == 0 || a.nrows() == 0 {
        return Ok(LeastSquares { coefficients: Vector::zeros(n), residual: b.norm() });
    }
    let dec = svd(a);
    let cutoff = tol.rank * a.norm();
    let utb = dec.u.adjoint() * b;
    let mut scaled = Vector::zeros(dec.singular_values.len());
    for (k, &s) in dec.singular_values.iter().enumerate() {
        if s > cutoff {
            scaled[k] = utb[k] / s;
        }
    }
    let x = &dec.v * scaled;
    let residual = (a * &x - b).norm();
    Ok(LeastSquares { coefficients: x, residual })
}

/// Orthonormal basis of the column span, filtered by singular values.
pub fn orthonormal_columns(a: &CMatrix, cutoff: f64) -> Result<CMatrix> {
    if a.ncols() == 0 || a.nrows() == 0 {
        return Ok(CMatrix::zeros(a.nrows(), 0));
    }
    let dec = svd(a);
    let cols: Vec<Vector> = (0..dec.singular_values.len())
        .filter(|&k| dec.singular_values[k] > cutoff)
        .map(|k| dec.u.column(k).into_owned())
        .collect();
    if cols.is_empty() {
        return Ok(CMatrix::zeros(a.nrows(), 0));
    }
    Ok(CMatrix::from_columns(&cols))
}

/// Spectral sign with `sign(0) = +1`; eigenvalues within `tol.eig * ||M||` of zero count as zero.
pub fn sign_hermitian(m: &CMatrix, tol: &Tolerances) -> Result<CMatrix> {
    let e = hermitian_eig(m, tol)?;
    let zero_band = tol.eig * m.norm();
    Ok(e.apply(|x| if x < -zero_band { -1.0 } else { 1.0 }))
}

/// Square root of a PSD matrix; negative eigenvalues within tolerance are clipped.
pub fn psd_sqrt(m: &CMatrix, tol: &Tolerances) -> Result<CMatrix> {
    let e = hermitian_eig(m, tol)?;
    Ok(e.apply(|x| x.max(0.0).sqrt()))
}

/// Inverse square root on the support; eigenvalues below `tol.rank * ||M||` are dropped.
pub fn psd_inv_sqrt(m: &CMatrix, tol: &Tolerances) -> Result<CMatrix> {
    let e = hermitian_eig(m, tol)?;
    let cutoff = tol.rank * m.norm();
    Ok(e.apply(|x| if x > cutoff { 1.0 / x.sqrt() } else { 0.0 }))
}

/// Column-major vectorization.
pub fn vectorize(m: &CMatrix) -> Vector {
    Vector::from_column_slice(m.as_slice())
}

pub fn unvectorize(v: &[C64], rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_column_slice(rows, cols, v)
}

/// Independent seeded generator for restart or trial `stream`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im)
    })
}

/// Haar-random unit vector.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vector {
    let g = gaussian_matrix(rng, d, 1);
    let v = g.column(0).into_owned();
    let n = v.norm();
    v / c(n, 0.0)
}

/// Random hermitian matrix with i.i.d. gaussian entries.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, d: usize) -> CMatrix {
    hermitian_part(&gaussian_matrix(rng, d, d))
}

/// Random density matrix `G G† / Tr(G G†)` with `G` of shape `d x rank`.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, d: usize, rank: usize) -> CMatrix {
    let g = gaussian_matrix(rng, d, rank.max(1));
    let rho = &g * g.adjoint();
    let t = rho.trace().re;
    hermitian_part(&(rho / c(t, 0.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn pauli_x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }

    #[test]
    fn eig_identity_and_diagonal() {
        let e = hermitian_eig(&identity(2), &tol()).unwrap();
        assert_eq!(e.values.len(), 2);
        for v in &e.values {
            assert!((v - 1.0).abs() < 1e-12);
        }
        let d = CMatrix::from_diagonal(&Vector::from_vec(vec![c(3.0, 0.0), c(-1.0, 0.0)]));
        let e = hermitian_eig(&d, &tol()).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-12 && (e.values[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn eig_pauli_x() {
        let e = hermitian_eig(&pauli_x(), &tol()).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-12);
        assert!((e.values[1] - 1.0).abs() < 1e-12);
        // phase convention: first component real positive
        let v = e.vector(0);
        assert!(v[0].im.abs() < 1e-12 && v[0].re > 0.0);
    }

    #[test]
    fn identity_cluster_is_canonical() {
        let e = hermitian_eig(&identity(3), &tol()).unwrap();
        assert!((&e.vectors - identity(3)).norm() < 1e-12);
    }

    #[test]
    fn rejects_non_hermitian_and_non_finite() {
        let mut m = identity(2);
        m[(0, 1)] = c(1.0, 0.0);
        assert!(matches!(hermitian_eig(&m, &tol()), Err(Error::NotHermitian { .. })));
        m[(0, 1)] = c(f64::NAN, 0.0);
        assert!(matches!(hermitian_eig(&m, &tol()), Err(Error::NonFinite)));
    }

    #[test]
    fn min_eigenvalue_examples() {
        assert_eq!(min_eigenvalue(&CMatrix::zeros(3, 3), &tol()).unwrap(), 0.0);
        let p = matrix_unit(2, 0, 0);
        assert!(min_eigenvalue(&p, &tol()).unwrap().abs() < 1e-14);
    }

    #[test]
    fn least_squares_examples() {
        let e0 = basis_vector(2, 0);
        let e1 = basis_vector(2, 1);
        let target = Vector::from_vec(vec![c(3.0, 0.0), c(0.0, 4.0)]);
        let ls = least_squares(&[e0.clone(), e1.clone()], &target, &tol()).unwrap();
        assert!((ls.coefficients[0] - c(3.0, 0.0)).norm() < 1e-12);
        assert!((ls.coefficients[1] - c(0.0, 4.0)).norm() < 1e-12);
        assert!(ls.residual < 1e-12);

        let ls = least_squares(&[e0.clone()], &e1, &tol()).unwrap();
        assert!(ls.coefficients[0].norm() < 1e-12);
        assert!((ls.residual - 1.0).abs() < 1e-12);

        let two = Vector::from_vec(vec![c(2.0, 0.0), ZERO]);
        let ls = least_squares(&[e0.clone(), e0.clone()], &two, &tol()).unwrap();
        assert!((ls.coefficients[0] - ONE).norm() < 1e-12);
        assert!((ls.coefficients[1] - ONE).norm() < 1e-12);
        assert!(ls.residual < 1e-12);

        assert!(matches!(
            least_squares(&[Vector::zeros(3)], &e0, &tol()),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn sign_zero_is_plus_one() {
        let s = sign_hermitian(&CMatrix::zeros(2, 2), &tol()).unwrap();
        assert!((s - identity(2)).norm() < 1e-12);
    }

    #[test]
    fn reconstruction_and_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in [2usize, 5, 9] {
            let m = random_hermitian(&mut rng, d);
            let e = hermitian_eig(&m, &tol()).unwrap();
            let rec = e.apply(|x| x);
            assert!((rec - &m).norm() <= 10.0 * tol().eig * m.norm());
            for k in 0..d {
                let v = e.vector(k);
                let r = (&m * &v - &v * c(e.values[k], 0.0)).norm();
                assert!(r <= tol().eig * m.norm());
            }
            let n = random_hermitian(&mut rng, 3);
            let both = min_eigenvalue(&direct_sum(&m, &n), &tol()).unwrap();
            let sep = min_eigenvalue(&m, &tol()).unwrap().min(min_eigenvalue(&n, &tol()).unwrap());
            assert!((both - sep).abs() < 1e-10);
        }
    }

    #[test]
    fn rank_counts_independent_columns() {
        let a = CMatrix::from_row_slice(2, 3, &[ONE, ONE, ZERO, ZERO, ZERO, ONE]);
        assert_eq!(svd_rank(&a, &tol()), 2);
        assert_eq!(svd_rank(&CMatrix::zeros(2, 2), &tol()), 0);
    }

    #[test]
    fn jacobi_svd_on_rank_deficient_batch() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let v = gaussian_matrix(&mut rng, 256, 1);
        let phases = CMatrix::from_row_slice(1, 4, &[c(1.0, 0.0), c(0.0, 1.0), c(-0.5, 0.0), c(0.3, -0.2)]);
        let a = &v * phases;
        let dec = svd(&a);
        let s = CMatrix::from_diagonal(&Vector::from_iterator(4, dec.singular_values.iter().map(|&x| c(x, 0.0))));
        assert!((&dec.u * s * dec.v.adjoint() - &a).norm() < 1e-12 * a.norm());
        assert!(dec.singular_values[1] < 1e-14 * a.norm());
        assert_eq!(svd_rank(&a, &tol()), 1);
        assert_eq!(orthonormal_columns(&a, 1e-9 * a.norm()).unwrap().ncols(), 1);
    }

    #[test]
    fn jacobi_svd_random_and_wide() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for (m, n) in [(5, 3), (3, 7), (6, 6)] {
            let a = gaussian_matrix(&mut rng, m, n);
            let dec = svd(&a);
            let k = m.min(n);
            let s = CMatrix::from_diagonal(&Vector::from_iterator(k, dec.singular_values[..k].iter().map(|&x| c(x, 0.0))));
            let recon = dec.u.columns(0, k) * s * dec.v.columns(0, k).adjoint();
            assert!((recon - &a).norm() < 1e-12 * a.norm());
            assert!(dec.singular_values.windows(2).all(|w| w[0] >= w[1]));
        }
        let x = CMatrix::from_row_slice(2, 2, &[ZERO, c(3.0, 0.0), c(-1.0, 0.0), ZERO]);
        assert!((operator_norm(&x) - 3.0).abs() < 1e-14);
    }
}
