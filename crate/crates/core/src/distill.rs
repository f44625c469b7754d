//! Completely positive maps, separable superoperators and 1-distillability.
//!
//! A CP map `T: M_k -> M_d` is stored by its Choi matrix
//! `sum_{a,b} T(|a><b|) ⊗ |a><b|`, so entry `(x * k + a, y * k + b)` is
//! `T(|a><b|)[x, y]`. Maps act in the Heisenberg picture: `T` sends
//! observables of the small output system into one of the local algebras.

use serde::{Deserialize, Serialize};

use crate::bipartite::{singlet, BipartiteSystem, State};
use crate::error::{Error, Result};
use crate::matrix::{self, c, hermitian_eig, identity, matrix_unit, psd_check, CMatrix, Tolerances, Vector, C64};
use crate::ppt::{npt_witness_search_k2, npt_witness_search_k2_from, partial_transpose, PptReport, SearchBudget, SearchOutcome, Witness};
use crate::star_algebra::{is_cyclic, qubit_embedding, rs_select, AlgebraDoc, QubitEmbedding, StarAlgebra};

/// A completely positive map `M_k -> M_d` given by its Choi matrix.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CPMap {
    k: usize,
    dim: usize,
    #[serde(with = "crate::serial::matrix")]
    choi: CMatrix,
}

impl CPMap {
    /// Validates shape, hermiticity and positivity of a Choi matrix.
    pub fn from_choi(choi: CMatrix, k: usize, tol: &Tolerances) -> Result<Self> {
        if k == 0 || choi.nrows() != choi.ncols() || choi.nrows() % k != 0 {
            return Err(Error::DimensionMismatch(format!(
                "Choi matrix is {}x{}, not a multiple of k = {k}",
                choi.nrows(),
                choi.ncols()
            )));
        }
        if !matrix::is_finite(&choi) {
            return Err(Error::NonFinite);
        }
        if !matrix::is_hermitian(&choi, tol) {
            return Err(Error::NotHermitian { asymmetry: matrix::hermitian_asymmetry(&choi), bound: tol.hermitian });
        }
        let choi = matrix::hermitian_part(&choi);
        let check = psd_check(&choi, tol)?;
        if !check.positive {
            return Err(Error::NotCompletelyPositive { min_eig: check.min_eig });
        }
        let dim = choi.nrows() / k;
        Ok(CPMap { k, dim, choi })
    }

    /// `blocks[a][b] = T(|a><b|)`.
    pub fn from_blocks(blocks: &[Vec<CMatrix>], tol: &Tolerances) -> Result<Self> {
        let k = blocks.len();
        if k == 0 || blocks.iter().any(|row| row.len() != k) {
            return Err(Error::DimensionMismatch("block grid must be square and non-empty".into()));
        }
        let d = blocks[0][0].nrows();
        let mut choi = CMatrix::zeros(d * k, d * k);
        for (a, row) in blocks.iter().enumerate() {
            for (b, block) in row.iter().enumerate() {
                if block.shape() != (d, d) {
                    return Err(Error::DimensionMismatch(format!("block ({a},{b}) has the wrong shape")));
                }
                choi += block.kronecker(&matrix_unit(k, a, b));
            }
        }
        Self::from_choi(choi, k, tol)
    }

    /// `T(X) = sum_m K_m X K_m†` with each `K_m` of shape `d x k`.
    pub fn from_kraus(ops: &[CMatrix]) -> Result<Self> {
        let (d, k) = ops.first().map(|m| m.shape()).ok_or_else(|| Error::DimensionMismatch("no Kraus operators".into()))?;
        if ops.iter().any(|m| m.shape() != (d, k)) {
            return Err(Error::DimensionMismatch("Kraus operators differ in shape".into()));
        }
        let mut choi = CMatrix::zeros(d * k, d * k);
        for op in ops {
            // w[(x, a)] = K[x, a]
            let w = Vector::from_fn(d * k, |r, _| op[(r / k, r % k)]);
            choi += &w * w.adjoint();
        }
        Ok(CPMap { k, dim: d, choi })
    }

    pub fn identity(k: usize) -> Self {
        let blocks: Vec<Vec<CMatrix>> = (0..k).map(|a| (0..k).map(|b| matrix_unit(k, a, b)).collect()).collect();
        Self::from_blocks(&blocks, &Tolerances::default()).expect("identity map is CP")
    }

    /// The map `X -> tau(X)` of a qubit embedding.
    pub fn from_embedding(emb: &QubitEmbedding, tol: &Tolerances) -> Result<Self> {
        Self::from_blocks(&emb.images, tol)
    }

    pub fn input_dim(&self) -> usize {
        self.k
    }

    pub fn output_dim(&self) -> usize {
        self.dim
    }

    pub fn choi(&self) -> &CMatrix {
        &self.choi
    }

    /// `T(|a><b|)`.
    pub fn block(&self, a: usize, b: usize) -> CMatrix {
        let k = self.k;
        CMatrix::from_fn(self.dim, self.dim, |x, y| self.choi[(x * k + a, y * k + b)])
    }

    pub fn apply(&self, x: &CMatrix) -> Result<CMatrix> {
        if x.shape() != (self.k, self.k) {
            return Err(Error::DimensionMismatch(format!("input is {}x{}, map expects {}x{}", x.nrows(), x.ncols(), self.k, self.k)));
        }
        let mut out = CMatrix::zeros(self.dim, self.dim);
        for a in 0..self.k {
            for b in 0..self.k {
                if x[(a, b)] != matrix::ZERO {
                    out += self.block(a, b) * x[(a, b)];
                }
            }
        }
        Ok(out)
    }

    /// `T(1)`.
    pub fn unit_image(&self) -> CMatrix {
        (0..self.k).fold(CMatrix::zeros(self.dim, self.dim), |acc, a| acc + self.block(a, a))
    }

    /// Kraus operators from the spectral decomposition of the Choi matrix.
    pub fn kraus(&self, tol: &Tolerances) -> Result<Vec<CMatrix>> {
        let e = hermitian_eig(&self.choi, tol)?;
        let cutoff = tol.rank * self.choi.norm();
        let k = self.k;
        Ok(e.values
            .iter()
            .enumerate()
            .rev()
            .filter(|(_, &lam)| lam > cutoff)
            .map(|(m, &lam)| {
                let w = e.vector(m);
                CMatrix::from_fn(self.dim, k, |x, a| w[x * k + a] * c(lam.sqrt(), 0.0))
            })
            .collect())
    }

    /// Largest conditional-expectation residual of the blocks onto `alg`.
    pub fn algebra_residual(&self, alg: &StarAlgebra) -> Result<f64> {
        let mut worst = 0.0f64;
        for a in 0..self.k {
            for b in 0..self.k {
                worst = worst.max(alg.membership_residual(&self.block(a, b))?);
            }
        }
        Ok(worst)
    }

    fn check_into(&self, alg: &StarAlgebra, side: &'static str, tol: &Tolerances) -> Result<()> {
        if self.dim != alg.ambient_dim() {
            return Err(Error::WrongAlgebra(side));
        }
        let scale = self.choi.norm().max(1.0);
        if self.algebra_residual(alg)? > tol.rank * scale {
            return Err(Error::WrongAlgebra(side));
        }
        Ok(())
    }
}

/// `T(X)` for the map's Choi matrix.
pub fn cp_apply(t: &CPMap, x: &CMatrix) -> Result<CMatrix> {
    t.apply(x)
}

/// `M(X ⊗ Y) = sum_x T_x(X) S_x(Y)` with `T_x` into Alice's and `S_x` into Bob's algebra.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeparableSuperoperator {
    pub terms: Vec<(CPMap, CPMap)>,
}

impl SeparableSuperoperator {
    /// Operator-norm distance of `sum_x T_x(1) S_x(1)` from the identity.
    pub fn normalization_error(&self) -> f64 {
        let Some((t0, _)) = self.terms.first() else {
            return f64::INFINITY;
        };
        let d = t0.output_dim();
        let total = self.terms.iter().fold(CMatrix::zeros(d, d), |acc, (t, s)| acc + t.unit_image() * s.unit_image());
        matrix::operator_norm(&(total - identity(d)))
    }

    pub fn output_dims(&self) -> (usize, usize) {
        self.terms.first().map(|(t, s)| (t.input_dim(), s.input_dim())).unwrap_or((0, 0))
    }

    /// A seeded random LOCC-type operation on a tensor system `dA ⊗ dB`.
    ///
    /// Alice applies a random instrument with `outcomes` branches, each a
    /// single Kraus operator `C^{k_a} -> C^{dA}`, normalized by `G^{-1/2}`
    /// with `G = sum_x K_x K_x†`. For every branch Bob applies his own random
    /// unital CP map with two Kraus operators, so the total is trace preserving.
    pub fn random(sys: &BipartiteSystem, k_a: usize, k_b: usize, outcomes: usize, seed: u64, tol: &Tolerances) -> Result<Self> {
        let (d_a, d_b) = sys.tensor_dims().ok_or(Error::NotTensorSystem)?;
        let mut rng = matrix::stream_rng(seed, 0);
        let outcomes = outcomes.max(1);
        let normalize = |ops: Vec<CMatrix>| -> Result<Vec<CMatrix>> {
            let d = ops[0].nrows();
            let g = ops.iter().fold(CMatrix::zeros(d, d), |acc, k| acc + k * k.adjoint());
            let w = matrix::psd_inv_sqrt(&g, tol)?;
            Ok(ops.iter().map(|k| &w * k).collect())
        };
        let alice_ops = normalize((0..outcomes).map(|_| matrix::gaussian_matrix(&mut rng, d_a, k_a)).collect())?;
        let mut terms = Vec::with_capacity(outcomes);
        for ka in &alice_ops {
            let bob_ops = normalize((0..2).map(|_| matrix::gaussian_matrix(&mut rng, d_b, k_b)).collect())?;
            let t_blocks: Vec<Vec<CMatrix>> = (0..k_a)
                .map(|a| (0..k_a).map(|b| (ka * matrix_unit(k_a, a, b) * ka.adjoint()).kronecker(&identity(d_b))).collect())
                .collect();
            let s_blocks: Vec<Vec<CMatrix>> = (0..k_b)
                .map(|a| {
                    (0..k_b)
                        .map(|b| {
                            let local = bob_ops
                                .iter()
                                .fold(CMatrix::zeros(d_b, d_b), |acc, l| acc + l * matrix_unit(k_b, a, b) * l.adjoint());
                            identity(d_a).kronecker(&local)
                        })
                        .collect()
                })
                .collect();
            terms.push((CPMap::from_blocks(&t_blocks, tol)?, CPMap::from_blocks(&s_blocks, tol)?));
        }
        Ok(SeparableSuperoperator { terms })
    }
}

/// `omega(T(X) S(Y))` as a matrix on `C^{kA} ⊗ C^{kB}`: entry `((a,b),(c,d))` is
/// `omega(T(|c><a|) S(|d><b|))`. Not normalized; the trace is `omega(T(1) S(1))`.
pub fn two_qubit_reduction(sys: &BipartiteSystem, state: &State, t: &CPMap, s: &CPMap, tol: &Tolerances) -> Result<CMatrix> {
    t.check_into(sys.alice(), "alice", tol)?;
    s.check_into(sys.bob(), "bob", tol)?;
    Ok(product_functional(state, t, s))
}

fn product_functional(state: &State, t: &CPMap, s: &CPMap) -> CMatrix {
    let (ka, kb) = (t.input_dim(), s.input_dim());
    let n = ka * kb;
    let t_blocks: Vec<Vec<CMatrix>> = (0..ka).map(|x| (0..ka).map(|y| t.block(x, y)).collect()).collect();
    let s_blocks: Vec<Vec<CMatrix>> = (0..kb).map(|x| (0..kb).map(|y| s.block(x, y)).collect()).collect();
    let mut out = CMatrix::zeros(n, n);
    for a in 0..ka {
        for b in 0..kb {
            for cc in 0..ka {
                for d in 0..kb {
                    out[(a * kb + b, cc * kb + d)] = state.expect(&(&t_blocks[cc][a] * &s_blocks[d][b]));
                }
            }
        }
    }
    matrix::hermitian_part(&out)
}

/// `Tr(D · swap)` for a matrix on `C^k ⊗ C^k`.
pub fn swap_expectation(d: &CMatrix, k: usize) -> C64 {
    let mut total = matrix::ZERO;
    for a in 0..k {
        for b in 0..k {
            total += d[(a * k + b, b * k + a)];
        }
    }
    total
}

/// The output state of a separable superoperator, on the tensor system `kA ⊗ kB`.
pub fn apply_superoperator(
    m: &SeparableSuperoperator,
    sys: &BipartiteSystem,
    state: &State,
    tol: &Tolerances,
) -> Result<(BipartiteSystem, State)> {
    let deviation = m.normalization_error();
    if deviation > tol.eig.max(1e-9) {
        return Err(Error::NotNormalized { deviation });
    }
    let (ka, kb) = m.output_dims();
    let mut rho = CMatrix::zeros(ka * kb, ka * kb);
    for (t, s) in &m.terms {
        if t.input_dim() != ka || s.input_dim() != kb {
            return Err(Error::DimensionMismatch("superoperator terms disagree on the output system".into()));
        }
        rho += two_qubit_reduction(sys, state, t, s, tol)?;
    }
    let out = State::new(matrix::hermitian_part(&rho), tol)?;
    Ok((BipartiteSystem::tensor(ka, kb), out))
}

/// A state conditioned on a successful selection.
#[derive(Clone, Debug)]
pub struct Selected {
    /// Density on `C^k` with `rho[a, c] = omega(T(|c><a|)) / p`.
    pub state: State,
    pub probability: f64,
}

/// `A -> omega(T(A)) / omega(T(1))` for a map into Alice's algebra with `T(1) <= 1`.
pub fn renormalize_selected(sys: &BipartiteSystem, state: &State, t: &CPMap, tol: &Tolerances) -> Result<Selected> {
    t.check_into(sys.alice(), "alice", tol)?;
    let unit = t.unit_image();
    let top = hermitian_eig(&matrix::hermitian_part(&unit), tol)?.values.last().copied().unwrap_or(0.0);
    if top > 1.0 + tol.eig {
        return Err(Error::NormExceeded { what: "T(1)".into(), norm: top });
    }
    let probability = state.expect(&unit).re;
    if probability <= tol.psd {
        return Err(Error::NullSelection { probability });
    }
    let k = t.input_dim();
    let rho = CMatrix::from_fn(k, k, |a, cc| state.expect(&t.block(cc, a)) / c(probability, 0.0));
    Ok(Selected { state: State::new(matrix::hermitian_part(&rho), tol)?, probability })
}

/// The maps `T(M) = sum A_b <b|M|a> A_a†` and `S(N) = sum B_a† <a|N|b> B_b` built from paired families.
pub fn witness_to_choi(sys: &BipartiteSystem, alice: &[CMatrix], bob: &[CMatrix], tol: &Tolerances) -> Result<(CPMap, CPMap)> {
    if alice.len() != bob.len() || alice.is_empty() {
        return Err(Error::DimensionMismatch("paired families must be non-empty and of equal length".into()));
    }
    for a in alice {
        if a.shape() != (sys.dim(), sys.dim()) || !sys.alice().contains(a, tol)? {
            return Err(Error::WrongAlgebra("alice"));
        }
    }
    for b in bob {
        if b.shape() != (sys.dim(), sys.dim()) || !sys.bob().contains(b, tol)? {
            return Err(Error::WrongAlgebra("bob"));
        }
    }
    let k = alice.len();
    let t_blocks: Vec<Vec<CMatrix>> = (0..k).map(|a| (0..k).map(|b| &alice[a] * alice[b].adjoint()).collect()).collect();
    let s_blocks: Vec<Vec<CMatrix>> = (0..k).map(|a| (0..k).map(|b| bob[a].adjoint() * &bob[b]).collect()).collect();
    Ok((CPMap::from_blocks(&t_blocks, tol)?, CPMap::from_blocks(&s_blocks, tol)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistillVerdict {
    /// An explicit qubit protocol yields a two-qubit functional with negative partial transpose.
    Certified,
    /// No witness found; this proves nothing either way.
    Inconclusive,
}

/// A certified qubit protocol.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Protocol {
    pub witness: Witness,
    pub alice_map: CPMap,
    pub bob_map: CPMap,
    #[serde(with = "crate::serial::matrix")]
    pub omega2: CMatrix,
    pub pt_min_eig: f64,
    /// `omega2` on the swap operator; equals the witness value.
    pub swap_expectation: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DistillReport {
    pub verdict: DistillVerdict,
    pub protocol: Option<Protocol>,
    /// Lowest normalized kernel value reached by the witness search.
    pub search_value: f64,
}

/// Searches for a two-term witness and turns it into a certified qubit protocol.
pub fn is_one_distillable(sys: &BipartiteSystem, state: &State, budget: &SearchBudget, tol: &Tolerances) -> Result<DistillReport> {
    let search = npt_witness_search_k2(sys, state, budget, tol)?;
    protocol_from_search(sys, state, search, tol)
}

/// [`is_one_distillable`] reusing the kernel of an earlier ppt check.
pub fn is_one_distillable_from(
    sys: &BipartiteSystem,
    state: &State,
    ppt: &PptReport,
    budget: &SearchBudget,
    tol: &Tolerances,
) -> Result<DistillReport> {
    let search = npt_witness_search_k2_from(sys, state, ppt, budget, tol)?;
    protocol_from_search(sys, state, search, tol)
}

fn protocol_from_search(sys: &BipartiteSystem, state: &State, search: SearchOutcome, tol: &Tolerances) -> Result<DistillReport> {
    let mut report = DistillReport { verdict: DistillVerdict::Inconclusive, protocol: None, search_value: search.best_value };
    let Some(witness) = search.witness else {
        return Ok(report);
    };
    let (t, s) = witness_to_choi(sys, &witness.alice, &witness.bob, tol)?;
    let omega2 = two_qubit_reduction(sys, state, &t, &s, tol)?;
    let pt_min_eig = matrix::min_eigenvalue(&partial_transpose(&omega2, 2, 2)?, tol)?;
    let swap = swap_expectation(&omega2, 2).re;
    if (swap - witness.value).abs() > 1e-9 * (1.0 + witness.value.abs()) {
        return Err(Error::InvariantViolation(format!(
            "swap expectation {swap} differs from the witness value {}",
            witness.value
        )));
    }
    if pt_min_eig < -tol.psd * omega2.norm() {
        report.verdict = DistillVerdict::Certified;
        report.protocol = Some(Protocol { witness, alice_map: t, bob_map: s, omega2, pt_min_eig, swap_expectation: swap });
    }
    Ok(report)
}

/// Everything needed to rerun and re-verify the cyclic-vector distillation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DistillationPlan {
    pub dim: usize,
    pub alice: AlgebraDoc,
    pub bob: AlgebraDoc,
    #[serde(with = "crate::serial::vector")]
    pub psi: Vector,
    /// `sigma: M_2 -> B`.
    pub sigma: QubitEmbedding,
    /// `tau: M_2 -> pA`, the corner of Alice's algebra cut down by `p`.
    pub tau: QubitEmbedding,
    /// The *-homomorphic lift of `tau` into Alice's algebra, `tau_lift(X) p = tau(X)`.
    pub tau_lift: QubitEmbedding,
    /// `p = sigma(1)`.
    #[serde(with = "crate::serial::matrix")]
    pub p: CMatrix,
    /// `Q = tau ⊗ sigma` applied to the singlet projector.
    #[serde(with = "crate::serial::matrix")]
    pub q: CMatrix,
    #[serde(with = "crate::serial::vector")]
    pub chi: Vector,
    /// `A` in Alice's algebra with `A psi ≈ chi`.
    #[serde(with = "crate::serial::matrix")]
    pub selector: CMatrix,
    pub residual: f64,
    /// `T(X) = A† tau_lift(X) A`.
    pub alice_map: CPMap,
    /// `S = sigma`.
    pub bob_map: CPMap,
    #[serde(with = "crate::serial::matrix")]
    pub omega2: CMatrix,
    pub pt_min_eig: f64,
    pub singlet_fidelity: f64,
    pub success_probability: f64,
}

fn singlet_projector() -> CMatrix {
    let w = singlet();
    &w * w.adjoint()
}

/// `tau ⊗ sigma` applied to a `4 x 4` matrix in the basis `(a, b) -> 2a + b`.
fn pi(tau: &QubitEmbedding, sigma: &QubitEmbedding, x: &CMatrix) -> CMatrix {
    let d = tau.support.nrows();
    let mut out = CMatrix::zeros(d, d);
    for a in 0..2 {
        for b in 0..2 {
            for cc in 0..2 {
                for e in 0..2 {
                    let coef = x[(a * 2 + b, cc * 2 + e)];
                    if coef != matrix::ZERO {
                        out += &tau.images[a][cc] * &sigma.images[b][e] * coef;
                    }
                }
            }
        }
    }
    out
}

fn normalized_fidelity(omega2: &CMatrix) -> f64 {
    let tr = omega2.trace().re;
    let w = singlet();
    (w.adjoint() * omega2 * &w)[(0, 0)].re / tr
}

fn remap_abelian(e: Error, side: &'static str) -> Error {
    match e {
        Error::AbelianAlgebra(_) => Error::AbelianAlgebra(side),
        other => other,
    }
}

/// Distills a singlet from a vector that is cyclic for Alice's algebra.
///
/// Embeds `M_2` into Bob's algebra with unit `p`, embeds `M_2` into the
/// corner `pA`, projects onto the singlet inside the image of both
/// embeddings, and selects with an element of Alice's algebra that moves
/// `psi` onto that projection's range.
pub fn distill_from_cyclic(sys: &BipartiteSystem, psi: &Vector, seed: u64, tol: &Tolerances) -> Result<DistillationPlan> {
    let d = sys.dim();
    if psi.len() != d {
        return Err(Error::DimensionMismatch(format!("vector has length {}, system dimension {d}", psi.len())));
    }
    let deviation = (psi.norm() - 1.0).abs();
    if deviation > 1e-9 {
        return Err(Error::NotNormalized { deviation });
    }
    if sys.alice().is_abelian(tol) {
        return Err(Error::AbelianAlgebra("alice"));
    }
    if sys.bob().is_abelian(tol) {
        return Err(Error::AbelianAlgebra("bob"));
    }
    let cyc = is_cyclic(sys.alice(), psi, tol)?;
    if !cyc.cyclic {
        return Err(Error::NotCyclic { rank: cyc.rank, dim: d });
    }

    let sigma = qubit_embedding(sys.bob(), seed, tol).map_err(|e| remap_abelian(e, "bob"))?;
    let p = sigma.support.clone();
    let cut: Vec<CMatrix> = sys.alice().basis().iter().map(|e| e * &p).collect();
    let corner = StarAlgebra::generate(d, &cut, tol)?;
    if corner.is_abelian(tol) {
        return Err(Error::AbelianCorner { dim: corner.len() });
    }
    let tau = qubit_embedding(&corner, seed, tol).map_err(|_| Error::AbelianCorner { dim: corner.len() })?;

    // min-norm preimages under a -> a p; they form a *-homomorphism into Alice's algebra
    let columns: Vec<Vector> = cut.iter().map(matrix::vectorize).collect();
    let mut lifted = vec![vec![CMatrix::zeros(d, d), CMatrix::zeros(d, d)], vec![CMatrix::zeros(d, d), CMatrix::zeros(d, d)]];
    for (a, row) in lifted.iter_mut().enumerate() {
        for (b, slot) in row.iter_mut().enumerate() {
            let ls = matrix::least_squares(&columns, &matrix::vectorize(&tau.images[a][b]), tol)?;
            if ls.residual > 1e-8 {
                return Err(Error::InvariantViolation(format!("corner unit ({a},{b}) has no preimage (residual {:.3e})", ls.residual)));
            }
            *slot = sys.alice().from_coefficients(&ls.coefficients);
        }
    }
    let tau_lift = QubitEmbedding::from_images(lifted);

    let q = pi(&tau, &sigma, &singlet_projector());
    let qe = hermitian_eig(&matrix::hermitian_part(&q), tol)?;
    let top = qe.values.len() - 1;
    if (qe.values[top] - 1.0).abs() > 1e-8 {
        return Err(Error::InvariantViolation(format!("Q has top eigenvalue {} instead of 1", qe.values[top])));
    }
    // first eigenvector with eigenvalue 1 in ascending order
    let first = qe.values.iter().position(|&v| (v - 1.0).abs() <= 1e-8).unwrap_or(top);
    let chi = qe.vector(first);

    let sel = rs_select(sys.alice(), psi, &chi, tol)?;
    let a = sel.operator;
    let weight = (&a * psi).norm_squared();
    if weight <= tol.psd {
        return Err(Error::NullSelection { probability: weight });
    }
    let t_blocks: Vec<Vec<CMatrix>> =
        (0..2).map(|x| (0..2).map(|y| a.adjoint() * &tau_lift.images[x][y] * &a).collect()).collect();
    let alice_map = CPMap::from_blocks(&t_blocks, tol)?;
    let bob_map = CPMap::from_embedding(&sigma, tol)?;
    let state = State::pure(psi, tol)?;
    let omega2 = two_qubit_reduction(sys, &state, &alice_map, &bob_map, tol)?;
    let pt_min_eig = matrix::min_eigenvalue(&partial_transpose(&omega2, 2, 2)?, tol)?;
    let singlet_fidelity = normalized_fidelity(&omega2);
    let success_probability = omega2.trace().re;
    if pt_min_eig >= 0.0 {
        return Err(Error::InvariantViolation(format!("distilled functional has PT minimum eigenvalue {pt_min_eig}")));
    }
    if singlet_fidelity < 1.0 - 10.0 * sel.residual - 1e-8 {
        return Err(Error::InvariantViolation(format!(
            "singlet fidelity {singlet_fidelity} below bound for selection residual {:.3e}",
            sel.residual
        )));
    }
    Ok(DistillationPlan {
        dim: d,
        alice: sys.alice().to_doc(),
        bob: sys.bob().to_doc(),
        psi: psi.clone(),
        sigma,
        tau,
        tau_lift,
        p,
        q,
        chi,
        selector: a,
        residual: sel.residual,
        alice_map,
        bob_map,
        omega2,
        pt_min_eig,
        singlet_fidelity,
        success_probability,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReplayCheck {
    pub name: String,
    pub passed: bool,
    /// The measured error or value behind the verdict.
    pub value: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReplayReport {
    pub checks: Vec<ReplayCheck>,
}

impl ReplayReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Re-verifies a serialized plan from its own contents.
pub fn replay(plan: &DistillationPlan, tol: &Tolerances) -> Result<ReplayReport> {
    let d = plan.dim;
    let alice = plan.alice.load(d, tol)?;
    let bob = plan.bob.load(d, tol)?;
    let sys = BipartiteSystem::new(d, alice, bob, tol)?;
    let state = State::pure(&plan.psi, tol)?;
    let mut checks = Vec::new();
    let mut check = |name: &str, value: f64, passed: bool| checks.push(ReplayCheck { name: name.into(), passed, value });
    let eps = 1e-8;

    let cyc = is_cyclic(sys.alice(), &plan.psi, tol)?;
    check("psi is cyclic for alice", cyc.rank as f64, cyc.cyclic);
    check("sigma is a *-homomorphism", plan.sigma.relation_error(), plan.sigma.relation_error() <= eps);
    let sigma_res = max_residual(sys.bob(), &plan.sigma)?;
    check("sigma lands in bob", sigma_res, sigma_res <= eps);
    let p_err = (&plan.p - &plan.sigma.support).norm();
    check("p equals sigma(1)", p_err, p_err <= eps);
    check("tau is a *-homomorphism", plan.tau.relation_error(), plan.tau.relation_error() <= eps);
    check("tau lift is a *-homomorphism", plan.tau_lift.relation_error(), plan.tau_lift.relation_error() <= eps);
    let lift_res = max_residual(sys.alice(), &plan.tau_lift)?;
    check("tau lift lands in alice", lift_res, lift_res <= eps);
    let mut cut_err = 0.0f64;
    for a in 0..2 {
        for b in 0..2 {
            cut_err = cut_err.max((&plan.tau_lift.images[a][b] * &plan.p - &plan.tau.images[a][b]).norm());
        }
    }
    check("tau lift cut by p equals tau", cut_err, cut_err <= eps);
    let q = pi(&plan.tau, &plan.sigma, &singlet_projector());
    let q_err = (&q - &plan.q).norm();
    check("Q is the image of the singlet projector", q_err, q_err <= eps);
    let chi_err = (&plan.q * &plan.chi - &plan.chi).norm() + (plan.chi.norm() - 1.0).abs();
    check("chi is a unit vector in the range of Q", chi_err, chi_err <= eps);
    let sel_res = sys.alice().membership_residual(&plan.selector)?;
    check("selector lies in alice", sel_res, sel_res <= eps * plan.selector.norm().max(1.0));
    let residual = (&plan.selector * &plan.psi - &plan.chi).norm();
    check("selection residual", residual, (residual - plan.residual).abs() <= eps);
    let mut map_err = 0.0f64;
    for x in 0..2 {
        for y in 0..2 {
            let expect = plan.selector.adjoint() * &plan.tau_lift.images[x][y] * &plan.selector;
            map_err = map_err.max((plan.alice_map.block(x, y) - expect).norm());
            map_err = map_err.max((plan.bob_map.block(x, y) - &plan.sigma.images[x][y]).norm());
        }
    }
    check("maps match selector and embeddings", map_err, map_err <= eps);
    let omega2 = two_qubit_reduction(&sys, &state, &plan.alice_map, &plan.bob_map, tol)?;
    let o_err = (&omega2 - &plan.omega2).norm();
    check("omega2 re-evaluates", o_err, o_err <= 1e-9);
    let pt = matrix::min_eigenvalue(&partial_transpose(&omega2, 2, 2)?, tol)?;
    check("omega2 has negative partial transpose", pt, pt < 0.0 && (pt - plan.pt_min_eig).abs() <= 1e-9);
    let fid = normalized_fidelity(&omega2);
    check("singlet fidelity bound", fid, fid >= 1.0 - 10.0 * residual - 1e-8 && (fid - plan.singlet_fidelity).abs() <= 1e-9);
    let prob = omega2.trace().re;
    check("success probability", prob, (prob - plan.success_probability).abs() <= 1e-9);
    Ok(ReplayReport { checks })
}

fn max_residual(alg: &StarAlgebra, emb: &QubitEmbedding) -> Result<f64> {
    let mut worst = 0.0f64;
    for row in &emb.images {
        for m in row {
            worst = worst.max(alg.membership_residual(m)?);
        }
    }
    Ok(worst)
}

/// Which side supplies the single operator in the commutator condition.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Orientation {
    /// `omega(A B1 [B2, B3] B4)`.
    AliceBob,
    /// `omega(B A1 [A2, A3] A4)`.
    BobAlice,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CommutatorWitness {
    pub orientation: Orientation,
    /// Basis indices `(single, first, commutator left, commutator right, last)`.
    pub indices: [usize; 5],
    pub modulus: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CyclicCriterion {
    pub cond1: bool,
    pub cond1_witness: Option<CommutatorWitness>,
    /// `max_B min_A omega((A - B)†(A - B))` over Bob's basis.
    pub cond2_residual: f64,
    pub cond2: bool,
}

fn commutator_search(state: &State, single: &StarAlgebra, other: &StarAlgebra, threshold: f64) -> Option<([usize; 5], f64)> {
    let rho = state.density();
    // Tr(rho X M) = sum_{ij} (rho X)[i,j] M[j,i]
    let weighted: Vec<CMatrix> = single.basis().iter().map(|x| (rho * x).transpose()).collect();
    let basis = other.basis();
    for (j2, b2) in basis.iter().enumerate() {
        for (j3, b3) in basis.iter().enumerate().skip(j2 + 1) {
            let comm = matrix::commutator(b2, b3);
            if comm.norm() <= 1e-12 {
                continue;
            }
            for (j1, b1) in basis.iter().enumerate() {
                let left = b1 * &comm;
                for (j4, b4) in basis.iter().enumerate() {
                    let m = &left * b4;
                    for (i, w) in weighted.iter().enumerate() {
                        let value = w.dot(&m);
                        if value.norm() > threshold {
                            return Some(([i, j1, j2, j3, j4], value.norm()));
                        }
                    }
                }
            }
        }
    }
    None
}

/// The two entanglement conditions for cyclic states.
///
/// Condition 1 looks for a basis tuple with `omega(A B1 [B2, B3] B4) != 0`
/// (or the same with the algebras exchanged). Condition 2 measures how well
/// every element of Bob's basis is imitated by Alice's algebra in the state's
/// GNS seminorm: `min_A omega((A - B)†(A - B)) = min_A ||(A - B) rho^{1/2}||_F^2`.
pub fn cyclic_criterion_check(sys: &BipartiteSystem, state: &State, eps: f64, tol: &Tolerances) -> Result<CyclicCriterion> {
    let threshold = tol.psd.max(1e-12);
    let mut cond1_witness = commutator_search(state, sys.alice(), sys.bob(), threshold)
        .map(|(indices, modulus)| CommutatorWitness { orientation: Orientation::AliceBob, indices, modulus });
    if cond1_witness.is_none() {
        cond1_witness = commutator_search(state, sys.bob(), sys.alice(), threshold)
            .map(|(indices, modulus)| CommutatorWitness { orientation: Orientation::BobAlice, indices, modulus });
    }
    let root = matrix::psd_sqrt(state.density(), tol)?;
    let columns: Vec<Vector> = sys.alice().basis().iter().map(|e| matrix::vectorize(&(e * &root))).collect();
    let mut cond2_residual = 0.0f64;
    for b in sys.bob().basis() {
        let ls = matrix::least_squares(&columns, &matrix::vectorize(&(b * &root)), tol)?;
        cond2_residual = cond2_residual.max(ls.residual * ls.residual);
    }
    Ok(CyclicCriterion { cond1: cond1_witness.is_some(), cond1_witness, cond2_residual, cond2: cond2_residual <= eps })
}
