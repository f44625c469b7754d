//! Bipartite systems: two commuting *-subalgebras of the full `d x d` matrix
//! algebra, and states on them given by density matrices.
//!
//! Separability is never decided numerically. Constructors that know a state
//! is a convex combination of product states attach a [`SeparableCertificate`];
//! everything else is "separability unknown".

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{self, c, identity, outer, CMatrix, Tolerances, Vector, C64};
use crate::star_algebra::StarAlgebra;

/// Default cap on the ambient dimension of composed or generated systems.
pub const DEFAULT_SIZE_LIMIT: usize = 4096;

#[derive(Clone, Debug)]
pub struct BipartiteSystem {
    dim: usize,
    alice: StarAlgebra,
    bob: StarAlgebra,
    /// `Some((dA, dB))` when the system is `M_dA ⊗ 1` and `1 ⊗ M_dB`, Alice's leg first.
    tensor: Option<(usize, usize)>,
}

impl BipartiteSystem {
    /// Validates dimensions and elementwise commutation of the two bases.
    pub fn new(dim: usize, alice: StarAlgebra, bob: StarAlgebra, tol: &Tolerances) -> Result<Self> {
        for (name, alg) in [("alice", &alice), ("bob", &bob)] {
            if alg.ambient_dim() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "{name} algebra lives in dimension {}, system in {dim}",
                    alg.ambient_dim()
                )));
            }
        }
        for (i, e) in alice.basis().iter().enumerate() {
            let ne = e.norm();
            for (u, f) in bob.basis().iter().enumerate() {
                let norm = matrix::commutator(e, f).norm();
                if norm > tol.hermitian * ne * f.norm() {
                    return Err(Error::NonCommuting { alice: i, bob: u, norm });
                }
            }
        }
        Ok(BipartiteSystem { dim, alice, bob, tensor: None })
    }

    /// `M_dA ⊗ 1` and `1 ⊗ M_dB` on `C^dA ⊗ C^dB`.
    pub fn tensor(d_a: usize, d_b: usize) -> Self {
        BipartiteSystem {
            dim: d_a * d_b,
            alice: StarAlgebra::tensor_factor(d_a, d_b, true),
            bob: StarAlgebra::tensor_factor(d_a, d_b, false),
            tensor: Some((d_a, d_b)),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alice(&self) -> &StarAlgebra {
        &self.alice
    }

    pub fn bob(&self) -> &StarAlgebra {
        &self.bob
    }

    pub fn tensor_dims(&self) -> Option<(usize, usize)> {
        self.tensor
    }

    /// Marks an already validated system as the standard tensor system, after checking it is one.
    pub fn with_tensor_dims(mut self, d_a: usize, d_b: usize, tol: &Tolerances) -> Result<Self> {
        if d_a * d_b != self.dim {
            return Err(Error::DimensionMismatch(format!("{d_a}x{d_b} does not factor dimension {}", self.dim)));
        }
        let reference = BipartiteSystem::tensor(d_a, d_b);
        let close = |x: &StarAlgebra, y: &StarAlgebra| x.span_distance(y) <= tol.rank.max(1e-8) * (self.dim as f64);
        if !close(&self.alice, &reference.alice) || !close(&self.bob, &reference.bob) {
            return Err(Error::NotTensorSystem);
        }
        self.tensor = Some((d_a, d_b));
        Ok(self)
    }

    /// The same system with the roles of Alice and Bob exchanged.
    pub fn swapped(&self) -> Self {
        BipartiteSystem { dim: self.dim, alice: self.bob.clone(), bob: self.alice.clone(), tensor: None }
    }
}

/// One term `weight * rho_A ⊗ rho_B` of a separable decomposition.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProductTerm {
    pub weight: f64,
    #[serde(with = "crate::serial::matrix")]
    pub alice: CMatrix,
    #[serde(with = "crate::serial::matrix")]
    pub bob: CMatrix,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeparableCertificate {
    pub terms: Vec<ProductTerm>,
}

impl SeparableCertificate {
    /// `sum_x w_x rho_A ⊗ rho_B`.
    pub fn reconstruct(&self) -> CMatrix {
        let mut total: Option<CMatrix> = None;
        for t in &self.terms {
            let term = t.alice.kronecker(&t.bob) * c(t.weight, 0.0);
            total = Some(match total {
                Some(acc) => acc + term,
                None => term,
            });
        }
        total.unwrap_or_else(|| CMatrix::zeros(0, 0))
    }

    /// Checks that the decomposition is convex, made of states, and sums to `rho`.
    pub fn verify(&self, rho: &CMatrix, tol: &Tolerances) -> Result<()> {
        if self.terms.is_empty() {
            return Err(Error::InvalidDensity("separability certificate has no terms".into()));
        }
        let total: f64 = self.terms.iter().map(|t| t.weight).sum();
        if self.terms.iter().any(|t| t.weight < 0.0) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDensity("certificate weights are not a probability vector".into()));
        }
        for (k, t) in self.terms.iter().enumerate() {
            validate_density(&t.alice, tol).map_err(|e| Error::InvalidDensity(format!("certificate term {k}: {e}")))?;
            validate_density(&t.bob, tol).map_err(|e| Error::InvalidDensity(format!("certificate term {k}: {e}")))?;
        }
        let sum = self.reconstruct();
        if sum.shape() != rho.shape() {
            return Err(Error::DimensionMismatch("certificate factors do not match the state dimension".into()));
        }
        let gap = (sum - rho).norm();
        if gap > 1e-9 {
            return Err(Error::InvalidDensity(format!("certificate does not reproduce the density (gap {gap:.3e})")));
        }
        Ok(())
    }
}

/// Density-matrix invariants: square, finite, hermitian, unit trace, PSD.
pub fn validate_density(rho: &CMatrix, tol: &Tolerances) -> Result<()> {
    if rho.nrows() != rho.ncols() || rho.nrows() == 0 {
        return Err(Error::InvalidDensity(format!("density is {}x{}, not square", rho.nrows(), rho.ncols())));
    }
    if !matrix::is_finite(rho) {
        return Err(Error::NonFinite);
    }
    let asym = matrix::hermitian_asymmetry(rho);
    let bound = tol.hermitian * rho.norm().max(1.0);
    if asym > bound {
        return Err(Error::InvalidDensity(format!("not hermitian (asymmetry {asym:.3e} > {bound:.3e})")));
    }
    let tr = rho.trace();
    if (tr - matrix::ONE).norm() > tol.hermitian.max(1e-10) {
        return Err(Error::InvalidDensity(format!("trace is {:.12} instead of 1", tr.re)));
    }
    let min = matrix::min_eigenvalue(&matrix::hermitian_part(rho), tol)?;
    if min < -tol.psd {
        return Err(Error::InvalidDensity(format!("not positive semidefinite (minimum eigenvalue {min:.3e})")));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct State {
    density: CMatrix,
    certificate: Option<SeparableCertificate>,
}

impl State {
    pub fn new(density: CMatrix, tol: &Tolerances) -> Result<Self> {
        validate_density(&density, tol)?;
        Ok(State { density: matrix::hermitian_part(&density), certificate: None })
    }

    /// Attaches a certificate after verifying it against the density.
    pub fn with_certificate(mut self, cert: SeparableCertificate, tol: &Tolerances) -> Result<Self> {
        cert.verify(&self.density, tol)?;
        self.certificate = Some(cert);
        Ok(self)
    }

    /// Vector state `psi psi†` of a unit vector.
    pub fn pure(psi: &Vector, tol: &Tolerances) -> Result<Self> {
        let n = psi.norm();
        if (n - 1.0).abs() > tol.hermitian.max(1e-10) {
            return Err(Error::InvalidDensity(format!("vector has norm {n}, expected 1")));
        }
        State::new(outer(psi, psi), tol)
    }

    pub fn maximally_mixed(d: usize) -> Self {
        State { density: identity(d) / c(d as f64, 0.0), certificate: None }
    }

    pub fn density(&self) -> &CMatrix {
        &self.density
    }

    pub fn dim(&self) -> usize {
        self.density.nrows()
    }

    pub fn certificate(&self) -> Option<&SeparableCertificate> {
        self.certificate.as_ref()
    }

    pub fn is_certified_separable(&self) -> bool {
        self.certificate.is_some()
    }

    /// `omega(X) = Tr(rho X)`.
    pub fn expect(&self, x: &CMatrix) -> C64 {
        matrix::expectation(&self.density, x)
    }

    pub(crate) fn from_parts(density: CMatrix, certificate: Option<SeparableCertificate>) -> Self {
        State { density, certificate }
    }
}

fn require_tensor(sys: &BipartiteSystem) -> Result<(usize, usize)> {
    sys.tensor_dims().ok_or(Error::NotTensorSystem)
}

/// `rho_A ⊗ rho_B` on a tensor system, certified separable.
pub fn product_state(sys: &BipartiteSystem, rho_a: &CMatrix, rho_b: &CMatrix, tol: &Tolerances) -> Result<State> {
    let (d_a, d_b) = require_tensor(sys)?;
    if rho_a.nrows() != d_a || rho_b.nrows() != d_b {
        return Err(Error::DimensionMismatch(format!(
            "factors are {}x{} and {}x{}, system is {d_a}⊗{d_b}",
            rho_a.nrows(),
            rho_a.ncols(),
            rho_b.nrows(),
            rho_b.ncols()
        )));
    }
    validate_density(rho_a, tol)?;
    validate_density(rho_b, tol)?;
    let cert = SeparableCertificate {
        terms: vec![ProductTerm { weight: 1.0, alice: rho_a.clone(), bob: rho_b.clone() }],
    };
    let density = matrix::hermitian_part(&rho_a.kronecker(rho_b));
    Ok(State::from_parts(density, Some(cert)))
}

/// Convex combination of `n_terms` Haar-random pure product states with flat Dirichlet weights.
pub fn random_separable(sys: &BipartiteSystem, n_terms: usize, seed: u64) -> Result<State> {
    let (d_a, d_b) = require_tensor(sys)?;
    if n_terms == 0 {
        return Err(Error::InvalidDensity("a separable mixture needs at least one term".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..n_terms).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let total: f64 = raw.iter().sum();
    let mut terms = Vec::with_capacity(n_terms);
    let mut density = CMatrix::zeros(d_a * d_b, d_a * d_b);
    for w in raw {
        let weight = w / total;
        let a = matrix::random_unit_vector(&mut rng, d_a);
        let b = matrix::random_unit_vector(&mut rng, d_b);
        let alice = outer(&a, &a);
        let bob = outer(&b, &b);
        density += alice.kronecker(&bob) * c(weight, 0.0);
        terms.push(ProductTerm { weight, alice, bob });
    }
    Ok(State::from_parts(matrix::hermitian_part(&density), Some(SeparableCertificate { terms })))
}

/// Permutation matrix `P` with `P |i_0 ... i_{n-1}> = |i_{order[0]} ... i_{order[n-1]}>`
/// on `⊗_k C^{dims[k]}` (leg 0 most significant).
pub fn leg_permutation(dims: &[usize], order: &[usize]) -> CMatrix {
    let total: usize = dims.iter().product();
    let new_dims: Vec<usize> = order.iter().map(|&k| dims[k]).collect();
    let mut p = CMatrix::zeros(total, total);
    let mut digits = vec![0usize; dims.len()];
    for src in 0..total {
        let mut rem = src;
        for k in (0..dims.len()).rev() {
            digits[k] = rem % dims[k];
            rem /= dims[k];
        }
        let mut dst = 0;
        for (pos, &k) in order.iter().enumerate() {
            dst = dst * new_dims[pos] + digits[k];
        }
        p[(dst, src)] = matrix::ONE;
    }
    p
}

/// Offsets into the full index of every multi-index over `legs` (first leg most significant).
fn leg_offsets(dims: &[usize], legs: &[usize]) -> Vec<usize> {
    let mut stride = vec![1usize; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        stride[k] = stride[k + 1] * dims[k + 1];
    }
    let mut offsets = vec![0usize];
    for &leg in legs {
        let step = stride[leg];
        offsets = offsets.iter().flat_map(|&o| (0..dims[leg]).map(move |x| o + x * step)).collect();
    }
    offsets
}

/// Splits the legs into `keep` (validated, in the given order) and the rest.
fn split_legs(dims: &[usize], keep: &[usize]) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut seen = vec![false; dims.len()];
    for &k in keep {
        if k >= dims.len() || seen[k] {
            return Err(Error::DimensionMismatch(format!("invalid leg list {keep:?}")));
        }
        seen[k] = true;
    }
    let rest = (0..dims.len()).filter(|k| !seen[*k]).collect::<Vec<_>>();
    Ok((leg_offsets(dims, keep), leg_offsets(dims, &rest)))
}

/// Partial trace of `rho` on `⊗_k C^{dims[k]}`, keeping the legs in `keep` in that order.
pub fn partial_trace(rho: &CMatrix, dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    let total: usize = dims.iter().product();
    if rho.shape() != (total, total) {
        return Err(Error::DimensionMismatch(format!("matrix is {}x{}, legs multiply to {total}", rho.nrows(), rho.ncols())));
    }
    let (kept, rest) = split_legs(dims, keep)?;
    let n = kept.len();
    Ok(CMatrix::from_fn(n, n, |i, j| rest.iter().map(|&t| rho[(kept[i] + t, kept[j] + t)]).sum()))
}

/// Reduced density matrix of the pure state `psi` on the legs in `keep`.
pub fn reduce_pure(psi: &Vector, dims: &[usize], keep: &[usize]) -> Result<CMatrix> {
    let total: usize = dims.iter().product();
    if psi.len() != total {
        return Err(Error::DimensionMismatch(format!("vector has length {}, legs multiply to {total}", psi.len())));
    }
    let (kept, rest) = split_legs(dims, keep)?;
    let m = CMatrix::from_fn(kept.len(), rest.len(), |i, t| psi[kept[i] + rest[t]]);
    Ok(matrix::hermitian_part(&(&m * m.adjoint())))
}

/// Result of composing several bipartite systems.
#[derive(Clone, Debug)]
pub struct Composite {
    pub system: BipartiteSystem,
    pub state: State,
    /// Maps the natural leg order `(A1 B1)(A2 B2)...` to the composite order;
    /// identity when any input is not a tensor system.
    pub permutation: CMatrix,
}

/// Joint system generated by all Alice (Bob) algebras, with the product state.
///
/// When every input is a tensor system the legs are reordered to
/// `(A1 A2 ... | B1 B2 ...)`, so the result is again a tensor system with
/// `dA = prod dA_k`. Otherwise the factors stay in input order and the two
/// algebras are generated from the embedded bases.
pub fn compose(parts: &[(BipartiteSystem, State)], tol: &Tolerances, size_limit: usize) -> Result<Composite> {
    if parts.is_empty() {
        return Err(Error::DimensionMismatch("nothing to compose".into()));
    }
    for (k, (sys, st)) in parts.iter().enumerate() {
        if sys.dim() != st.dim() {
            return Err(Error::DimensionMismatch(format!("part {k}: state dimension {} vs system {}", st.dim(), sys.dim())));
        }
    }
    let dim = parts.iter().try_fold(1usize, |acc, (s, _)| acc.checked_mul(s.dim())).unwrap_or(usize::MAX);
    if dim > size_limit {
        return Err(Error::SizeLimit { dim, limit: size_limit });
    }
    let mut rho = parts[0].1.density().clone();
    for (_, st) in &parts[1..] {
        rho = rho.kronecker(st.density());
    }

    let tensor_dims: Option<Vec<(usize, usize)>> = parts.iter().map(|(s, _)| s.tensor_dims()).collect();
    if let Some(tdims) = tensor_dims {
        let legs: Vec<usize> = tdims.iter().flat_map(|&(a, b)| [a, b]).collect();
        let n = tdims.len();
        let order: Vec<usize> = (0..n).map(|k| 2 * k).chain((0..n).map(|k| 2 * k + 1)).collect();
        let p = leg_permutation(&legs, &order);
        let d_a: usize = tdims.iter().map(|t| t.0).product();
        let d_b: usize = tdims.iter().map(|t| t.1).product();
        let density = matrix::hermitian_part(&(&p * &rho * p.transpose()));
        let certificate = compose_certificates(parts);
        return Ok(Composite {
            system: BipartiteSystem::tensor(d_a, d_b),
            state: State::from_parts(density, certificate),
            permutation: p,
        });
    }

    let dims: Vec<usize> = parts.iter().map(|(s, _)| s.dim()).collect();
    let embed = |k: usize, x: &CMatrix| -> CMatrix {
        let before: usize = dims[..k].iter().product();
        let after: usize = dims[k + 1..].iter().product();
        identity(before).kronecker(x).kronecker(&identity(after))
    };
    let mut gen_a = Vec::new();
    let mut gen_b = Vec::new();
    for (k, (sys, _)) in parts.iter().enumerate() {
        gen_a.extend(sys.alice().basis().iter().map(|e| embed(k, e)));
        gen_b.extend(sys.bob().basis().iter().map(|f| embed(k, f)));
    }
    let alice = StarAlgebra::generate(dim, &gen_a, tol)?;
    let bob = StarAlgebra::generate(dim, &gen_b, tol)?;
    let system = BipartiteSystem::new(dim, alice, bob, tol)?;
    Ok(Composite {
        system,
        state: State::from_parts(matrix::hermitian_part(&rho), None),
        permutation: identity(dim),
    })
}

/// Product of the input certificates, in `(A1 A2 ... | B1 B2 ...)` order.
fn compose_certificates(parts: &[(BipartiteSystem, State)]) -> Option<SeparableCertificate> {
    let mut acc: Vec<ProductTerm> = vec![ProductTerm {
        weight: 1.0,
        alice: CMatrix::identity(1, 1),
        bob: CMatrix::identity(1, 1),
    }];
    for (_, st) in parts {
        let cert = st.certificate()?;
        let mut next = Vec::with_capacity(acc.len() * cert.terms.len());
        for a in &acc {
            for t in &cert.terms {
                next.push(ProductTerm {
                    weight: a.weight * t.weight,
                    alice: a.alice.kronecker(&t.alice),
                    bob: a.bob.kronecker(&t.bob),
                });
            }
        }
        acc = next;
    }
    Some(SeparableCertificate { terms: acc })
}

/// `(|01> - |10>) / sqrt 2`, the two-qubit singlet.
pub fn singlet() -> Vector {
    let s = 1.0 / 2f64.sqrt();
    Vector::from_vec(vec![matrix::ZERO, c(s, 0.0), c(-s, 0.0), matrix::ZERO])
}

/// `p |Ω><Ω| + (1 - p) 1/4` on two qubits.
pub fn werner(p: f64) -> CMatrix {
    let w = singlet();
    outer(&w, &w) * c(p, 0.0) + identity(4) * c((1.0 - p) / 4.0, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{basis_vector, matrix_unit, ZERO, ONE};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn new_system_examples() {
        let sys = BipartiteSystem::tensor(2, 2);
        assert!(BipartiteSystem::new(4, sys.alice().clone(), sys.bob().clone(), &tol()).is_ok());

        let full = StarAlgebra::full(2);
        assert!(matches!(
            BipartiteSystem::new(2, full.clone(), full, &tol()),
            Err(Error::NonCommuting { .. })
        ));

        let z = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]);
        let bob = StarAlgebra::generate(4, &[identity(2).kronecker(&z)], &tol()).unwrap();
        let sys = BipartiteSystem::new(4, StarAlgebra::tensor_factor(2, 2, true), bob, &tol()).unwrap();
        assert_eq!(sys.bob().len(), 2);
    }

    #[test]
    fn new_system_rejects_dimension_mismatch() {
        let r = BipartiteSystem::new(4, StarAlgebra::full(2), StarAlgebra::scalars(4), &tol());
        assert!(matches!(r, Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn tensor_system_dims() {
        for (a, b) in [(2, 2), (2, 3), (3, 3)] {
            let sys = BipartiteSystem::tensor(a, b);
            assert_eq!(sys.dim(), a * b);
            assert_eq!(sys.alice().len(), a * a);
            assert_eq!(sys.bob().len(), b * b);
            sys.alice().validate(&tol()).unwrap();
            BipartiteSystem::new(sys.dim(), sys.alice().clone(), sys.bob().clone(), &tol()).unwrap();
        }
    }

    #[test]
    fn product_state_examples() {
        let sys = BipartiteSystem::tensor(2, 2);
        let half = identity(2) / c(2.0, 0.0);
        let st = product_state(&sys, &half, &half, &tol()).unwrap();
        assert!((st.density() - identity(4) / c(4.0, 0.0)).norm() < 1e-15);

        let st = product_state(&sys, &matrix_unit(2, 0, 0), &matrix_unit(2, 1, 1), &tol()).unwrap();
        assert!((st.density() - matrix_unit(4, 1, 1)).norm() < 1e-15);
    }

    #[test]
    fn product_state_factorizes_on_bases() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let sys = BipartiteSystem::tensor(2, 3);
        let ra = matrix::random_density(&mut rng, 2, 2);
        let rb = matrix::random_density(&mut rng, 3, 3);
        let st = product_state(&sys, &ra, &rb, &tol()).unwrap();
        for e in sys.alice().basis() {
            for f in sys.bob().basis() {
                let joint = st.expect(&(e * f));
                assert!((joint - st.expect(e) * st.expect(f)).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn product_state_rejects_bad_factor() {
        let sys = BipartiteSystem::tensor(2, 2);
        let bad = identity(2);
        assert!(matches!(product_state(&sys, &bad, &bad, &tol()), Err(Error::InvalidDensity(_))));
    }

    #[test]
    fn random_separable_is_valid_and_certified() {
        let sys = BipartiteSystem::tensor(3, 2);
        for seed in 0..10 {
            let st = random_separable(&sys, 1 + seed as usize % 4, seed).unwrap();
            State::new(st.density().clone(), &tol()).unwrap();
            st.certificate().unwrap().verify(st.density(), &tol()).unwrap();
        }
        let one = random_separable(&sys, 1, 3).unwrap();
        let rho = one.density();
        assert!((rho * rho - rho).norm() < 1e-12);
    }

    #[test]
    fn density_validation() {
        assert!(State::new(identity(2) * c(0.45, 0.0), &tol()).is_err());
        let mut m = matrix_unit(2, 0, 0);
        m[(0, 1)] = c(0.1, 0.0);
        assert!(State::new(m, &tol()).is_err());
        assert!(State::new(matrix_unit(2, 0, 0) * c(2.0, 0.0) - matrix_unit(2, 1, 1), &tol()).is_err());
        assert!(State::pure(&basis_vector(3, 2), &tol()).is_ok());
    }

    #[test]
    fn forged_certificate_is_rejected() {
        let st = State::pure(&singlet(), &tol()).unwrap();
        let cert = SeparableCertificate {
            terms: vec![ProductTerm { weight: 1.0, alice: matrix_unit(2, 0, 0), bob: matrix_unit(2, 1, 1) }],
        };
        assert!(st.with_certificate(cert, &tol()).is_err());
    }

    #[test]
    fn partial_trace_two_orders_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rho = matrix::random_density(&mut rng, 12, 12);
        let dims = [2, 3, 2];
        let direct = partial_trace(&rho, &dims, &[0, 2]).unwrap();
        let step = partial_trace(&rho, &dims, &[0, 1]).unwrap();
        let step = partial_trace(&step, &[2, 3], &[0]).unwrap();
        let other = partial_trace(&rho, &dims, &[0]).unwrap();
        assert!((partial_trace(&direct, &[2, 2], &[0]).unwrap() - &other).norm() < 1e-12);
        assert!((step - other).norm() < 1e-12);
    }

    #[test]
    fn compose_single_system_is_identity() {
        let sys = BipartiteSystem::tensor(2, 2);
        let st = State::pure(&singlet(), &tol()).unwrap();
        let comp = compose(&[(sys, st.clone())], &tol(), DEFAULT_SIZE_LIMIT).unwrap();
        assert_eq!(comp.system.tensor_dims(), Some((2, 2)));
        assert!((comp.state.density() - st.density()).norm() < 1e-15);
    }

    #[test]
    fn compose_two_singlets_reorders_legs() {
        let sys = BipartiteSystem::tensor(2, 2);
        let st = State::pure(&singlet(), &tol()).unwrap();
        let comp = compose(&[(sys.clone(), st.clone()), (sys, st)], &tol(), DEFAULT_SIZE_LIMIT).unwrap();
        assert_eq!(comp.system.tensor_dims(), Some((4, 4)));
        // the composite vector: amplitude of |a1 a2 b1 b2> is Ω[a1 b1] Ω[a2 b2]
        let w = singlet();
        let v = Vector::from_fn(16, |idx, _| {
            let (a1, a2, b1, b2) = (idx >> 3 & 1, idx >> 2 & 1, idx >> 1 & 1, idx & 1);
            w[2 * a1 + b1] * w[2 * a2 + b2]
        });
        assert!((comp.state.density() - outer(&v, &v)).norm() < 1e-12);
        assert!((&comp.permutation * comp.permutation.transpose() - identity(16)).norm() < 1e-15);
    }

    #[test]
    fn compose_tensor_matches_generated_algebra() {
        let sys = BipartiteSystem::tensor(2, 2);
        let p = leg_permutation(&[2, 2, 2, 2], &[0, 2, 1, 3]);
        let embed = |x: &CMatrix, k: usize| {
            let m = if k == 0 { x.kronecker(&identity(4)) } else { identity(4).kronecker(x) };
            &p * m * p.transpose()
        };
        let mut gens = Vec::new();
        for k in 0..2 {
            gens.extend(sys.alice().basis().iter().map(|e| embed(e, k)));
        }
        let generated = StarAlgebra::generate(16, &gens, &tol()).unwrap();
        let st = State::maximally_mixed(4);
        let comp = compose(&[(sys.clone(), st.clone()), (sys, st)], &tol(), DEFAULT_SIZE_LIMIT).unwrap();
        assert_eq!(generated.len(), 16);
        assert!(generated.span_distance(comp.system.alice()) < 1e-9);
    }

    #[test]
    fn compose_non_tensor_generates() {
        let z = CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]);
        let bob = StarAlgebra::generate(4, &[identity(2).kronecker(&z)], &tol()).unwrap();
        let sys = BipartiteSystem::new(4, StarAlgebra::tensor_factor(2, 2, true), bob, &tol()).unwrap();
        let st = State::maximally_mixed(4);
        let comp = compose(&[(sys.clone(), st.clone()), (sys, st)], &tol(), DEFAULT_SIZE_LIMIT).unwrap();
        assert_eq!(comp.system.alice().len(), 16);
        assert_eq!(comp.system.bob().len(), 4);
    }

    #[test]
    fn compose_respects_size_limit() {
        let sys = BipartiteSystem::tensor(2, 2);
        let st = State::maximally_mixed(4);
        let parts = vec![(sys, st); 3];
        assert!(matches!(compose(&parts, &tol(), 32), Err(Error::SizeLimit { dim: 64, limit: 32 })));
    }

    #[test]
    fn composed_certificate_verifies() {
        let sys = BipartiteSystem::tensor(2, 2);
        let a = random_separable(&sys, 2, 1).unwrap();
        let b = random_separable(&sys, 3, 2).unwrap();
        let comp = compose(&[(sys.clone(), a), (sys, b)], &tol(), DEFAULT_SIZE_LIMIT).unwrap();
        let cert = comp.state.certificate().unwrap();
        assert_eq!(cert.terms.len(), 6);
        cert.verify(comp.state.density(), &tol()).unwrap();
    }

    #[test]
    fn werner_endpoints() {
        assert!((werner(0.0) - identity(4) / c(4.0, 0.0)).norm() < 1e-15);
        let w = singlet();
        assert!((werner(1.0) - outer(&w, &w)).norm() < 1e-15);
    }

    #[test]
    fn reduce_pure_matches_partial_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let psi = matrix::random_unit_vector(&mut rng, 24);
        let dims = [2, 3, 2, 2];
        let rho = outer(&psi, &psi);
        for keep in [vec![0], vec![1, 3], vec![3, 0], vec![2, 1, 0]] {
            let a = reduce_pure(&psi, &dims, &keep).unwrap();
            let b = partial_trace(&rho, &dims, &keep).unwrap();
            assert!((a - b).norm() < 1e-12);
        }
    }
}
