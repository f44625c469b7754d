//! The positivity condition on paired families and its tensor-product form.
//!
//! For paired families `A_1..A_k` in Alice's algebra and `B_1..B_k` in Bob's,
//! a state is ppt when
//!
//! ```text
//! sum_{a,b} omega(A_b A_a† B_a† B_b) >= 0
//! ```
//!
//! for every `k`. Writing `A_a = sum_i c_ai E_i`, `B_a = sum_u d_au F_u` over
//! orthonormal bases, the sum equals `z† K z` with `z_iu = sum_a c_ai d_au` and
//!
//! ```text
//! K[(i,u),(j,v)] = omega(E_j E_i† F_u† F_v).
//! ```
//!
//! Vectors of that paired form exhaust the whole coefficient space once `k` is
//! unrestricted, so "all families" is exactly "K is positive semidefinite".

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bipartite::{BipartiteSystem, State};
use crate::error::{Error, Result};
use crate::matrix::{self, c, hermitian_eig, psd_check, vectorize, CMatrix, Eigh, PsdCheck, Tolerances, Vector, C64};
use crate::star_algebra::StarAlgebra;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Ppt,
    Npt,
}

impl Verdict {
    pub fn from_check(check: &PsdCheck) -> Self {
        if check.positive {
            Verdict::Ppt
        } else {
            Verdict::Npt
        }
    }

    pub fn is_ppt(self) -> bool {
        self == Verdict::Ppt
    }
}

/// Paired families with a negative sum.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Witness {
    #[serde(with = "crate::serial::matrix_list")]
    pub alice: Vec<CMatrix>,
    #[serde(with = "crate::serial::matrix_list")]
    pub bob: Vec<CMatrix>,
    /// The sum re-evaluated from the matrices.
    pub value: f64,
}

impl Witness {
    pub fn k(&self) -> usize {
        self.alice.len()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PptReport {
    pub verdict: Verdict,
    pub min_eig: f64,
    /// Frobenius norm of the kernel; the tolerance band is `psd * scale`.
    pub scale: f64,
    /// True when `|min_eig|` is inside the tolerance band.
    pub marginal: bool,
    pub witness: Option<Witness>,
    #[serde(skip)]
    pub kernel: CMatrix,
    #[serde(skip)]
    pub spectrum: Option<Eigh>,
}

/// `sum_{a,b} omega(A_b A_a† B_a† B_b)` for paired families.
pub fn family_sum(state: &State, alice: &[CMatrix], bob: &[CMatrix]) -> Result<C64> {
    if alice.len() != bob.len() {
        return Err(Error::DimensionMismatch(format!(
            "paired families have lengths {} and {}",
            alice.len(),
            bob.len()
        )));
    }
    let mut total = matrix::ZERO;
    for (aa, ba) in alice.iter().zip(bob) {
        let left = aa.adjoint();
        let right = ba.adjoint();
        for (ab, bb) in alice.iter().zip(bob) {
            total += state.expect(&(ab * &left * &right * bb));
        }
    }
    Ok(total)
}

fn check_family(alg: &StarAlgebra, fam: &[CMatrix], side: &'static str, tol: &Tolerances) -> Result<()> {
    for (index, m) in fam.iter().enumerate() {
        if m.shape() != (alg.ambient_dim(), alg.ambient_dim()) {
            return Err(Error::DimensionMismatch(format!("{side} family element {index} has the wrong shape")));
        }
        let residual = alg.membership_residual(m)?;
        if residual > tol.rank.max(1e-9) * m.norm().max(1.0) {
            return Err(Error::FamilyNotInAlgebra { side, index, residual });
        }
    }
    Ok(())
}

/// The kernel `K[(i,u),(j,v)] = omega(E_j E_i† F_u† F_v)`, index `(i,u) -> i * nB + u`.
pub fn ppt_kernel(sys: &BipartiteSystem, state: &State) -> Result<CMatrix> {
    let d = sys.dim();
    if state.dim() != d {
        return Err(Error::DimensionMismatch(format!("state has dimension {}, system {d}", state.dim())));
    }
    let ea = sys.alice().basis();
    let fb = sys.bob().basis();
    let (na, nb) = (ea.len(), fb.len());
    let rho = state.density();

    // rows (i, j): (rho E_j E_i†)^T flattened; columns (u, v): F_u† F_v flattened
    let mut left = CMatrix::zeros(na * na, d * d);
    for i in 0..na {
        let ei = ea[i].adjoint();
        for j in 0..na {
            let x = (rho * &ea[j] * &ei).transpose();
            left.set_row(i * na + j, &vectorize(&x).transpose());
        }
    }
    let mut right = CMatrix::zeros(d * d, nb * nb);
    for u in 0..nb {
        let fu = fb[u].adjoint();
        for v in 0..nb {
            right.set_column(u * nb + v, &vectorize(&(&fu * &fb[v])));
        }
    }
    let prod = left * right;
    let n = na * nb;
    let k = CMatrix::from_fn(n, n, |r, s| {
        let (i, u) = (r / nb, r % nb);
        let (j, v) = (s / nb, s % nb);
        prod[(i * na + j, u * nb + v)]
    });
    let asym = (&k - k.adjoint()).norm();
    if asym > 1e-9 * k.norm().max(f64::MIN_POSITIVE) {
        return Err(Error::InvariantViolation(format!(
            "kernel is not hermitian (asymmetry {asym:.3e}); the algebras may not commute"
        )));
    }
    Ok(matrix::hermitian_part(&k))
}

/// Paired families from a kernel coefficient vector via its Schmidt decomposition.
pub fn families_from_coefficients(sys: &BipartiteSystem, z: &Vector, max_terms: Option<usize>) -> (Vec<CMatrix>, Vec<CMatrix>) {
    let ea = sys.alice().basis();
    let fb = sys.bob().basis();
    let (na, nb) = (ea.len(), fb.len());
    let zm = CMatrix::from_fn(na, nb, |i, u| z[i * nb + u]);
    let dec = matrix::svd(&zm);
    let cutoff = 1e-12 * zm.norm();
    let mut alice = Vec::new();
    let mut bob = Vec::new();
    for (a, &s) in dec.singular_values.iter().enumerate() {
        if s <= cutoff || max_terms.is_some_and(|m| alice.len() >= m) {
            break;
        }
        let mut am = CMatrix::zeros(sys.dim(), sys.dim());
        for i in 0..na {
            am += &ea[i] * (dec.u[(i, a)] * c(s, 0.0));
        }
        let mut bm = CMatrix::zeros(sys.dim(), sys.dim());
        for u in 0..nb {
            bm += &fb[u] * dec.v[(u, a)].conj();
        }
        alice.push(am);
        bob.push(bm);
    }
    (alice, bob)
}

/// Kernel verdict; an npt verdict comes with a witness from the most negative eigenvector.
pub fn is_ppt(sys: &BipartiteSystem, state: &State, tol: &Tolerances) -> Result<PptReport> {
    let kernel = ppt_kernel(sys, state)?;
    let eig = hermitian_eig(&kernel, tol)?;
    let min_eig = eig.values.first().copied().unwrap_or(0.0);
    let scale = kernel.norm();
    let check = PsdCheck { min_eig, scale, positive: min_eig >= -tol.psd * scale };
    let verdict = Verdict::from_check(&check);
    let witness = if verdict == Verdict::Npt {
        let (alice, bob) = families_from_coefficients(sys, &eig.vector(0), None);
        let value = family_sum(state, &alice, &bob)?.re;
        Some(Witness { alice, bob, value })
    } else {
        None
    };
    Ok(PptReport { verdict, min_eig, scale, marginal: check.is_marginal(tol), witness, kernel, spectrum: Some(eig) })
}

/// `<k l| rho^T1 |m n> = <m l| rho |k n>`: transpose of the first tensor factor.
pub fn partial_transpose(rho: &CMatrix, d_a: usize, d_b: usize) -> Result<CMatrix> {
    let d = d_a * d_b;
    if rho.shape() != (d, d) {
        return Err(Error::DimensionMismatch(format!("matrix is {}x{}, expected {d}x{d}", rho.nrows(), rho.ncols())));
    }
    Ok(CMatrix::from_fn(d, d, |r, s| {
        let (k, l) = (r / d_b, r % d_b);
        let (m, n) = (s / d_b, s % d_b);
        rho[(m * d_b + l, k * d_b + n)]
    }))
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct KernelComparison {
    pub agrees: bool,
    pub kernel: PsdCheck,
    pub partial_transpose: PsdCheck,
}

impl KernelComparison {
    /// Either verdict sits inside its tolerance band.
    pub fn marginal(&self, tol: &Tolerances) -> bool {
        self.kernel.is_marginal(tol) || self.partial_transpose.is_marginal(tol)
    }
}

/// Compares the kernel verdict with the partial-transpose verdict on a tensor system.
pub fn compare_kernel_with_pt(sys: &BipartiteSystem, state: &State, tol: &Tolerances) -> Result<KernelComparison> {
    let (d_a, d_b) = sys.tensor_dims().ok_or(Error::NotTensorSystem)?;
    let kernel = ppt_kernel(sys, state)?;
    let kc = psd_check(&kernel, tol)?;
    let pt = partial_transpose(state.density(), d_a, d_b)?;
    let pc = psd_check(&pt, tol)?;
    Ok(KernelComparison { agrees: kc.positive == pc.positive, kernel: kc, partial_transpose: pc })
}

/// `X[(i,a),(j,b)] = omega(A_i B_a B_b† A_j†)`, index `(i,a) -> i * m + a`.
pub fn polarized_matrix(
    sys: &BipartiteSystem,
    state: &State,
    alice: &[CMatrix],
    bob: &[CMatrix],
    tol: &Tolerances,
) -> Result<CMatrix> {
    check_family(sys.alice(), alice, "alice", tol)?;
    check_family(sys.bob(), bob, "bob", tol)?;
    let (n, m) = (alice.len(), bob.len());
    let mut x = CMatrix::zeros(n * m, n * m);
    for i in 0..n {
        for a in 0..m {
            let left = &alice[i] * &bob[a];
            for j in 0..n {
                for b in 0..m {
                    let right = bob[b].adjoint() * alice[j].adjoint();
                    x[(i * m + a, j * m + b)] = state.expect(&(&left * right));
                }
            }
        }
    }
    Ok(matrix::hermitian_part(&x))
}

/// `X^T2[(i,a),(j,b)] = X[(i,b),(j,a)]`.
pub fn polarized_transpose(x: &CMatrix, n: usize, m: usize) -> CMatrix {
    CMatrix::from_fn(n * m, n * m, |r, s| {
        let (i, a) = (r / m, r % m);
        let (j, b) = (s / m, s % m);
        x[(i * m + b, j * m + a)]
    })
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct PptInequality {
    /// `|omega(T)|^2` with `T = sum_a A_a B_a`.
    pub lhs: f64,
    /// `Re sum_{a,b} omega(A_b A_a† B_a† B_b)`.
    pub rhs: f64,
    /// `(sum_a ||A_a|| ||B_a||)^2`, the scale of the tolerance.
    pub scale: f64,
    pub holds: bool,
    /// Whether the state passed the kernel test; the bound is only promised for ppt states.
    pub state_ppt: bool,
}

/// Checks `|omega(sum A_a B_a)|^2 <= sum omega(A_b A_a† B_a† B_b)`.
pub fn ppt_inequality_check(
    sys: &BipartiteSystem,
    state: &State,
    alice: &[CMatrix],
    bob: &[CMatrix],
    tol: &Tolerances,
) -> Result<PptInequality> {
    check_family(sys.alice(), alice, "alice", tol)?;
    check_family(sys.bob(), bob, "bob", tol)?;
    let mut t = CMatrix::zeros(sys.dim(), sys.dim());
    let mut weight = 0.0;
    for (a, b) in alice.iter().zip(bob) {
        t += a * b;
        weight += matrix::operator_norm(a) * matrix::operator_norm(b);
    }
    let lhs = state.expect(&t).norm_sqr();
    let rhs = family_sum(state, alice, bob)?.re;
    let scale = weight * weight;
    let state_ppt = is_ppt(sys, state, tol)?.verdict.is_ppt();
    Ok(PptInequality { lhs, rhs, scale, holds: lhs <= rhs + tol.psd * scale, state_ppt })
}

/// Restarts, iteration cap and seed for the two-term witness search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchBudget {
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget { restarts: 8, max_iter: 200, seed: 0 }
    }
}

/// Outcome of the alternating search for a two-term witness.
#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub witness: Option<Witness>,
    /// Most negative normalized kernel value seen (`z† K z` with unit coefficient blocks);
    /// the kernel's smallest eigenvalue when that is already above the threshold and no search ran.
    pub best_value: f64,
    pub best_restart: usize,
}

struct Run {
    value: f64,
    c: CMatrix,
    d: CMatrix,
}

/// `Q[(a,i),(b,j)] = sum_{u,v} conj(d_au) d_bv K[(i,u),(j,v)]`: the kernel as a form in Alice's coefficients.
fn alice_form(kernel: &CMatrix, d: &CMatrix, na: usize, nb: usize) -> CMatrix {
    let k = d.nrows();
    // L[(i,u),(a,i')] = delta_{ii'} d_au
    let mut l = CMatrix::zeros(na * nb, k * na);
    for a in 0..k {
        for i in 0..na {
            for u in 0..nb {
                l[(i * nb + u, a * na + i)] = d[(a, u)];
            }
        }
    }
    l.adjoint() * kernel * l
}

fn bob_form(kernel: &CMatrix, cm: &CMatrix, na: usize, nb: usize) -> CMatrix {
    let k = cm.nrows();
    let mut l = CMatrix::zeros(na * nb, k * nb);
    for a in 0..k {
        for i in 0..na {
            for u in 0..nb {
                l[(i * nb + u, a * nb + u)] = cm[(a, i)];
            }
        }
    }
    l.adjoint() * kernel * l
}

fn lowest(form: &CMatrix, rows: usize, cols: usize, tol: &Tolerances) -> Result<(f64, CMatrix)> {
    let e = hermitian_eig(&matrix::hermitian_part(form), tol)?;
    let v = e.vector(0);
    Ok((e.values[0], CMatrix::from_fn(rows, cols, |a, i| v[a * cols + i])))
}

fn alternate(kernel: &CMatrix, na: usize, nb: usize, start: CMatrix, max_iter: usize, tol: &Tolerances) -> Result<Run> {
    let k = start.nrows();
    let mut d = start;
    let n = d.norm();
    d /= c(n, 0.0);
    let mut cm = CMatrix::zeros(k, na);
    let mut value = f64::INFINITY;
    for _ in 0..max_iter.max(1) {
        let (_, new_c) = lowest(&alice_form(kernel, &d, na, nb), k, na, tol)?;
        cm = new_c;
        let (v, new_d) = lowest(&bob_form(kernel, &cm, na, nb), k, nb, tol)?;
        d = new_d;
        let done = (value - v).abs() < 1e-12;
        value = v;
        if done {
            break;
        }
    }
    Ok(Run { value, c: cm, d })
}

/// Alternating minimization of the kernel form over two-term families.
///
/// Restart 0 starts from the two leading Schmidt components of the kernel's
/// most negative eigenvector; restarts `1..` start from seeded gaussian Bob
/// coefficients. Restarts run in parallel and the lowest value wins, ties to
/// the lowest restart index. Finding nothing does not prove anything.
pub fn npt_witness_search_k2(
    sys: &BipartiteSystem,
    state: &State,
    budget: &SearchBudget,
    tol: &Tolerances,
) -> Result<SearchOutcome> {
    let kernel = ppt_kernel(sys, state)?;
    let eig = hermitian_eig(&kernel, tol)?;
    search_on_kernel(sys, state, &kernel, &eig, budget, tol)
}

/// The witness search reusing the kernel and spectrum of an earlier [`is_ppt`] call.
pub fn npt_witness_search_k2_from(
    sys: &BipartiteSystem,
    state: &State,
    report: &PptReport,
    budget: &SearchBudget,
    tol: &Tolerances,
) -> Result<SearchOutcome> {
    match &report.spectrum {
        Some(eig) if report.kernel.nrows() == sys.alice().len() * sys.bob().len() => {
            search_on_kernel(sys, state, &report.kernel, eig, budget, tol)
        }
        _ => npt_witness_search_k2(sys, state, budget, tol),
    }
}

fn search_on_kernel(
    sys: &BipartiteSystem,
    state: &State,
    kernel: &CMatrix,
    eig: &Eigh,
    budget: &SearchBudget,
    tol: &Tolerances,
) -> Result<SearchOutcome> {
    let SearchBudget { restarts, max_iter, seed } = *budget;
    let na = sys.alice().len();
    let nb = sys.bob().len();
    let threshold = -tol.psd * kernel.norm();
    // every two-term family value is z† K z for a unit z, so it is bounded below by the smallest eigenvalue
    if eig.values[0] >= threshold {
        return Ok(SearchOutcome { witness: None, best_value: eig.values[0], best_restart: 0 });
    }
    let z = eig.vector(0);
    let zm = CMatrix::from_fn(na, nb, |i, u| z[i * nb + u]);
    let dec = matrix::svd(&zm);
    let warm = CMatrix::from_fn(2, nb, |a, u| {
        if a < dec.singular_values.len() {
            dec.v[(u, a)].conj() * c(dec.singular_values[a].max(1e-3), 0.0)
        } else {
            matrix::ZERO
        }
    });

    let runs: Vec<Result<Run>> = (0..restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let start = if r == 0 {
                warm.clone()
            } else {
                let mut rng = matrix::stream_rng(seed, r as u64);
                matrix::gaussian_matrix(&mut rng, 2, nb)
            };
            alternate(kernel, na, nb, start, max_iter, tol)
        })
        .collect();
    let mut best: Option<(usize, Run)> = None;
    for (r, run) in runs.into_iter().enumerate() {
        let run = run?;
        if best.as_ref().is_none_or(|(_, b)| run.value < b.value) {
            best = Some((r, run));
        }
    }
    let (best_restart, run) = best.expect("at least one restart");
    let witness = if run.value < threshold {
        let ea = sys.alice().basis();
        let fb = sys.bob().basis();
        let mut alice = Vec::with_capacity(2);
        let mut bob = Vec::with_capacity(2);
        for a in 0..2 {
            let mut am = CMatrix::zeros(sys.dim(), sys.dim());
            for (i, e) in ea.iter().enumerate() {
                am += e * run.c[(a, i)];
            }
            let mut bm = CMatrix::zeros(sys.dim(), sys.dim());
            for (u, f) in fb.iter().enumerate() {
                bm += f * run.d[(a, u)];
            }
            alice.push(am);
            bob.push(bm);
        }
        let value = family_sum(state, &alice, &bob)?.re;
        Some(Witness { alice, bob, value })
    } else {
        None
    };
    Ok(SearchOutcome { witness, best_value: run.value, best_restart })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use crate::bipartite::{product_state, random_separable, singlet, werner};
    use crate::matrix::{identity, matrix_unit, outer};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn singlet_state() -> State {
        State::pure(&singlet(), &tol()).unwrap()
    }

    #[test]
    fn kernel_examples() {
        let sys = BipartiteSystem::tensor(2, 2);
        let k = ppt_kernel(&sys, &State::maximally_mixed(4)).unwrap();
        assert!(matrix::min_eigenvalue(&k, &tol()).unwrap() >= -1e-12);

        let st = product_state(&sys, &matrix_unit(2, 0, 0), &(identity(2) / c(2.0, 0.0)), &tol()).unwrap();
        let k = ppt_kernel(&sys, &st).unwrap();
        assert!(matrix::min_eigenvalue(&k, &tol()).unwrap() >= -1e-12);

        let k = ppt_kernel(&sys, &singlet_state()).unwrap();
        assert!(matrix::min_eigenvalue(&k, &tol()).unwrap() < -0.01);
    }

    #[test]
    fn kernel_spectrum_matches_partial_transpose() {
        // on M_2 ⊗ 1, 1 ⊗ M_2 the kernel is unitarily rho^T1 ⊗ 1_4 / 4
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sys = BipartiteSystem::tensor(2, 2);
        let st = State::new(matrix::random_density(&mut rng, 4, 2), &tol()).unwrap();
        let k = ppt_kernel(&sys, &st).unwrap();
        let pt = partial_transpose(st.density(), 2, 2).unwrap();
        let ke = hermitian_eig(&k, &tol()).unwrap().values;
        let pe = hermitian_eig(&pt, &tol()).unwrap().values;
        for (idx, lam) in ke.iter().enumerate() {
            assert!((lam - pe[idx / 4] / 4.0).abs() < 1e-12, "{ke:?} vs {pe:?}");
        }
    }

    #[test]
    fn family_sum_is_kernel_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sys = BipartiteSystem::tensor(2, 3);
        let st = State::new(matrix::random_density(&mut rng, 6, 3), &tol()).unwrap();
        let k = ppt_kernel(&sys, &st).unwrap();
        let (na, nb) = (4, 9);
        for kk in 1..4 {
            let cm = matrix::gaussian_matrix(&mut rng, kk, na);
            let dm = matrix::gaussian_matrix(&mut rng, kk, nb);
            let alice: Vec<CMatrix> = (0..kk)
                .map(|a| (0..na).fold(CMatrix::zeros(6, 6), |acc, i| acc + &sys.alice().basis()[i] * cm[(a, i)]))
                .collect();
            let bob: Vec<CMatrix> = (0..kk)
                .map(|a| (0..nb).fold(CMatrix::zeros(6, 6), |acc, u| acc + &sys.bob().basis()[u] * dm[(a, u)]))
                .collect();
            let z = Vector::from_fn(na * nb, |r, _| {
                let (i, u) = (r / nb, r % nb);
                (0..kk).map(|a| cm[(a, i)] * dm[(a, u)]).sum()
            });
            let form = (z.adjoint() * &k * &z)[(0, 0)];
            let direct = family_sum(&st, &alice, &bob).unwrap();
            assert!((form - direct).norm() < 1e-10 * (1.0 + direct.norm()));
        }
    }

    #[test]
    fn partial_transpose_examples() {
        assert_eq!(partial_transpose(&identity(6), 2, 3).unwrap(), identity(6));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = matrix::gaussian_matrix(&mut rng, 3, 3);
        let pt = partial_transpose(&matrix_unit(2, 0, 1).kronecker(&m), 2, 3).unwrap();
        assert!((pt - matrix_unit(2, 1, 0).kronecker(&m)).norm() < 1e-15);
        let w = singlet();
        let pt = partial_transpose(&outer(&w, &w), 2, 2).unwrap();
        assert!((matrix::min_eigenvalue(&pt, &tol()).unwrap() + 0.5).abs() < 1e-12);
        assert!(partial_transpose(&identity(5), 2, 2).is_err());
    }

    #[test]
    fn werner_examples() {
        let sys = BipartiteSystem::tensor(2, 2);
        let npt = is_ppt(&sys, &State::new(werner(0.9), &tol()).unwrap(), &tol()).unwrap();
        assert_eq!(npt.verdict, Verdict::Npt);
        let w = npt.witness.unwrap();
        assert!(w.value < 0.0);
        assert!((w.value - npt.min_eig).abs() < 1e-10);
        let ppt = is_ppt(&sys, &State::new(werner(0.2), &tol()).unwrap(), &tol()).unwrap();
        assert_eq!(ppt.verdict, Verdict::Ppt);
        assert!(ppt.witness.is_none());
    }

    #[test]
    fn separable_states_are_ppt() {
        for (a, b) in [(2, 2), (2, 3), (3, 3)] {
            let sys = BipartiteSystem::tensor(a, b);
            for seed in 0..5 {
                let st = random_separable(&sys, 4, seed).unwrap();
                assert!(is_ppt(&sys, &st, &tol()).unwrap().verdict.is_ppt());
            }
        }
    }

    #[test]
    fn kernel_comparison_examples() {
        let sys = BipartiteSystem::tensor(2, 2);
        let r = compare_kernel_with_pt(&sys, &singlet_state(), &tol()).unwrap();
        assert!(r.agrees && !r.kernel.positive);
        let r = compare_kernel_with_pt(&sys, &State::maximally_mixed(4), &tol()).unwrap();
        assert!(r.agrees && r.kernel.positive);
        let non_tensor = sys.swapped();
        assert!(matches!(compare_kernel_with_pt(&non_tensor, &singlet_state(), &tol()), Err(Error::NotTensorSystem)));
    }

    #[test]
    fn swapping_algebras_keeps_verdict() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let sys = BipartiteSystem::tensor(2, 3);
        for _ in 0..5 {
            let st = State::new(matrix::random_density(&mut rng, 6, 2), &tol()).unwrap();
            let a = is_ppt(&sys, &st, &tol()).unwrap();
            let b = is_ppt(&sys.swapped(), &st, &tol()).unwrap();
            assert_eq!(a.verdict, b.verdict);
            assert!((a.min_eig / a.scale - b.min_eig / b.scale).abs() < 1e-8);
        }
    }

    #[test]
    fn polarized_examples() {
        let sys = BipartiteSystem::tensor(2, 2);
        let units_a: Vec<CMatrix> = sys.alice().generators().to_vec();
        let units_b: Vec<CMatrix> = sys.bob().generators().to_vec();
        let x = polarized_matrix(&sys, &singlet_state(), &units_a, &units_b, &tol()).unwrap();
        assert!(matrix::min_eigenvalue(&x, &tol()).unwrap() >= -1e-12);
        let xt = polarized_transpose(&x, 4, 4);
        assert!(matrix::min_eigenvalue(&xt, &tol()).unwrap() < -1e-3);

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let st = random_separable(&sys, 3, 9).unwrap();
        let fam_a: Vec<CMatrix> = (0..3).map(|_| matrix::gaussian_matrix(&mut rng, 2, 2).kronecker(&identity(2))).collect();
        let fam_b: Vec<CMatrix> = (0..2).map(|_| identity(2).kronecker(&matrix::gaussian_matrix(&mut rng, 2, 2))).collect();
        let x = polarized_matrix(&sys, &st, &fam_a, &fam_b, &tol()).unwrap();
        assert!(matrix::min_eigenvalue(&x, &tol()).unwrap() >= -1e-9 * x.norm());
        let xt = polarized_transpose(&x, 3, 2);
        assert!(matrix::min_eigenvalue(&xt, &tol()).unwrap() >= -1e-9 * xt.norm());
    }

    #[test]
    fn polarized_rejects_foreign_family() {
        let sys = BipartiteSystem::tensor(2, 2);
        let wrong = vec![identity(2).kronecker(&matrix_unit(2, 0, 1))];
        let r = polarized_matrix(&sys, &singlet_state(), &wrong, &[identity(4)], &tol());
        assert!(matches!(r, Err(Error::FamilyNotInAlgebra { side: "alice", .. })));
    }

    #[test]
    fn ppt_inequality_examples() {
        let sys = BipartiteSystem::tensor(2, 2);
        let r = ppt_inequality_check(&sys, &singlet_state(), &[identity(4)], &[identity(4)], &tol()).unwrap();
        assert!((r.lhs - 1.0).abs() < 1e-12 && (r.rhs - 1.0).abs() < 1e-12 && r.holds);

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let fam_a: Vec<CMatrix> = (0..3).map(|_| matrix::gaussian_matrix(&mut rng, 2, 2).kronecker(&identity(2))).collect();
        let fam_b: Vec<CMatrix> = (0..3).map(|_| identity(2).kronecker(&matrix::gaussian_matrix(&mut rng, 2, 2))).collect();
        let r = ppt_inequality_check(&sys, &State::maximally_mixed(4), &fam_a, &fam_b, &tol()).unwrap();
        assert!(r.holds && r.state_ppt);
    }

    #[test]
    fn witness_search_examples() {
        let sys = BipartiteSystem::tensor(2, 2);
        let out = npt_witness_search_k2(&sys, &singlet_state(), &SearchBudget { restarts: 4, max_iter: 100, seed: 0 }, &tol()).unwrap();
        let w = out.witness.unwrap();
        assert_eq!(w.k(), 2);
        assert!(w.value < 0.0);
        let recheck = family_sum(&singlet_state(), &w.alice, &w.bob).unwrap().re;
        assert!((recheck - w.value).abs() < 1e-9);

        let out = npt_witness_search_k2(&sys, &State::maximally_mixed(4), &SearchBudget { restarts: 4, max_iter: 100, seed: 0 }, &tol()).unwrap();
        assert!(out.witness.is_none());

        let st = State::new(werner(0.9), &tol()).unwrap();
        assert!(npt_witness_search_k2(&sys, &st, &SearchBudget { restarts: 4, max_iter: 100, seed: 0 }, &tol()).unwrap().witness.is_some());
    }
}
