//! Finite-dimensional *-algebras of `d x d` matrices.
//!
//! An algebra is stored as a Hilbert-Schmidt orthonormal basis of matrices
//! together with the generators it was built from. In finite dimension every
//! *-algebra containing the identity is already weakly closed, so the
//! bicommutant of an algebra is the algebra itself and the usual density
//! statements (a vector is cyclic when `A psi` is dense) become exact rank
//! conditions. Genuine Reeh-Schlieder behaviour of local algebras in field
//! theory is an infinite-dimensional effect that this module only mirrors.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{
    self, c, hermitian_eig, identity, orthonormal_columns, random_hermitian, unvectorize, vectorize, CMatrix,
    Tolerances, Vector,
};

/// Products of more basis pairs than this are spot-checked in `validate`.
const FULL_CLOSURE_CHECK: usize = 400;

#[derive(Clone, Debug)]
pub struct StarAlgebra {
    dim: usize,
    basis: Vec<CMatrix>,
    generators: Vec<CMatrix>,
    /// `d^2 x n`, column k is `vec(basis[k])`.
    stacked: CMatrix,
}

impl PartialEq for StarAlgebra {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.basis == other.basis
    }
}

impl StarAlgebra {
    /// Smallest unital *-algebra containing `generators`.
    ///
    /// Starts from `{1} ∪ G ∪ G†` and keeps multiplying the newest span
    /// directions by the generating set until no new direction survives the
    /// singular-value filter at `tol.rank`.
    pub fn generate(dim: usize, generators: &[CMatrix], tol: &Tolerances) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionMismatch("ambient dimension must be positive".into()));
        }
        for (k, g) in generators.iter().enumerate() {
            if g.shape() != (dim, dim) {
                return Err(Error::DimensionMismatch(format!(
                    "generator {k} is {}x{}, expected {dim}x{dim}",
                    g.nrows(),
                    g.ncols()
                )));
            }
            if !matrix::is_finite(g) {
                return Err(Error::NonFinite);
            }
        }
        let mut words: Vec<CMatrix> = Vec::with_capacity(2 * generators.len());
        for g in generators {
            let n = g.norm();
            if n == 0.0 {
                continue;
            }
            let g = g / c(n, 0.0);
            let ga = g.adjoint();
            let self_adjoint = (&ga - &g).norm() <= tol.rank;
            words.push(g);
            if !self_adjoint {
                words.push(ga);
            }
        }

        let mut span = CMatrix::zeros(dim * dim, 0);
        let mut seed: Vec<Vector> = vec![vectorize(&identity(dim))];
        seed.extend(words.iter().map(vectorize));
        let mut frontier = extend_span(&mut span, &seed, tol)?;
        while !frontier.is_empty() && span.ncols() < dim * dim {
            let mut candidates = Vec::with_capacity(words.len() * frontier.len());
            for f in &frontier {
                let fm = unvectorize(f.as_slice(), dim, dim);
                for w in &words {
                    candidates.push(vectorize(&(w * &fm)));
                }
            }
            frontier = extend_span(&mut span, &candidates, tol)?;
        }
        let basis = (0..span.ncols()).map(|k| unvectorize(span.column(k).as_slice(), dim, dim)).collect();
        Ok(StarAlgebra { dim, basis, generators: generators.to_vec(), stacked: span })
    }

    /// Wraps an already orthonormal basis of a *-algebra. Callers guarantee the invariants.
    pub(crate) fn from_orthonormal_basis(dim: usize, basis: Vec<CMatrix>, generators: Vec<CMatrix>) -> Self {
        let cols: Vec<Vector> = basis.iter().map(vectorize).collect();
        let stacked = if cols.is_empty() { CMatrix::zeros(dim * dim, 0) } else { CMatrix::from_columns(&cols) };
        StarAlgebra { dim, basis, generators, stacked }
    }

    /// All `d x d` matrices, with the matrix units as basis.
    pub fn full(dim: usize) -> Self {
        let mut units = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                units.push(matrix::matrix_unit(dim, i, j));
            }
        }
        Self::from_orthonormal_basis(dim, units.clone(), units)
    }

    /// Multiples of the identity.
    pub fn scalars(dim: usize) -> Self {
        let e = identity(dim) / c((dim as f64).sqrt(), 0.0);
        Self::from_orthonormal_basis(dim, vec![e], vec![])
    }

    /// `M_{left} ⊗ 1_{right}` (`on_left = true`) or `1_{left} ⊗ M_{right}`.
    pub fn tensor_factor(left: usize, right: usize, on_left: bool) -> Self {
        let dim = left * right;
        let (n, other) = if on_left { (left, right) } else { (right, left) };
        let norm = c((other as f64).sqrt(), 0.0);
        let mut basis = Vec::with_capacity(n * n);
        let mut gens = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let u = matrix::matrix_unit(n, i, j);
                let e = if on_left { u.kronecker(&identity(other)) } else { identity(other).kronecker(&u) };
                gens.push(e.clone());
                basis.push(e / norm);
            }
        }
        Self::from_orthonormal_basis(dim, basis, gens)
    }

    pub fn ambient_dim(&self) -> usize {
        self.dim
    }

    /// Linear dimension.
    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn basis(&self) -> &[CMatrix] {
        &self.basis
    }

    pub fn generators(&self) -> &[CMatrix] {
        &self.generators
    }

    fn check_dim(&self, m: &CMatrix) -> Result<()> {
        if m.shape() != (self.dim, self.dim) {
            return Err(Error::DimensionMismatch(format!(
                "matrix is {}x{}, algebra lives in dimension {}",
                m.nrows(),
                m.ncols(),
                self.dim
            )));
        }
        Ok(())
    }

    /// Coefficients `<E_k, M>_HS` of `M` in the basis.
    pub fn coefficients(&self, m: &CMatrix) -> Result<Vector> {
        self.check_dim(m)?;
        Ok(self.stacked.ad_mul(&vectorize(m)))
    }

    pub fn from_coefficients(&self, coeffs: &Vector) -> CMatrix {
        let v = &self.stacked * coeffs;
        unvectorize(v.as_slice(), self.dim, self.dim)
    }

    /// Hilbert-Schmidt orthogonal projection onto the algebra.
    ///
    /// For `A` in the algebra, `Tr(W A) = Tr(E(W†)† A)`.
    pub fn conditional_expectation(&self, m: &CMatrix) -> Result<CMatrix> {
        let coeffs = self.coefficients(m)?;
        Ok(self.from_coefficients(&coeffs))
    }

    /// `||M - E(M)||_F`.
    pub fn membership_residual(&self, m: &CMatrix) -> Result<f64> {
        Ok((m - self.conditional_expectation(m)?).norm())
    }

    /// Membership at `tol.rank`, relative to `||M||_F`.
    pub fn contains(&self, m: &CMatrix, tol: &Tolerances) -> Result<bool> {
        Ok(self.membership_residual(m)? <= tol.rank * m.norm().max(1.0))
    }

    /// Normalized generators and their adjoints, or the basis when that is shorter.
    fn generating_set(&self) -> Vec<CMatrix> {
        if 2 * self.generators.len() >= self.basis.len() || self.generators.is_empty() {
            return self.basis.clone();
        }
        let mut out = Vec::with_capacity(2 * self.generators.len());
        for g in &self.generators {
            let n = g.norm();
            if n > 0.0 {
                let g = g / c(n, 0.0);
                out.push(g.adjoint());
                out.push(g);
            }
        }
        out
    }

    pub fn is_abelian(&self, tol: &Tolerances) -> bool {
        let set = self.generating_set();
        for (a, x) in set.iter().enumerate() {
            for y in &set[a + 1..] {
                if matrix::commutator(x, y).norm() > tol.hermitian.max(tol.rank) * x.norm() * y.norm() {
                    return false;
                }
            }
        }
        true
    }

    /// `{R : [R, E] = 0 for all E}` as a new algebra.
    pub fn commutant(&self, tol: &Tolerances) -> Result<StarAlgebra> {
        let d = self.dim;
        let id = identity(d);
        let mut gram = CMatrix::zeros(d * d, d * d);
        for e in self.generating_set() {
            let et = e.transpose();
            let ec = e.map(|z| z.conj());
            gram += id.kronecker(&(e.adjoint() * &e));
            gram += (&ec * &et).kronecker(&id);
            gram -= et.kronecker(&e.adjoint());
            gram -= ec.kronecker(&e);
        }
        let null = null_space(&gram, tol)?;
        let basis: Vec<CMatrix> = null.iter().map(|v| unvectorize(v.as_slice(), d, d)).collect();
        Ok(StarAlgebra::from_orthonormal_basis(d, basis.clone(), basis))
    }

    /// The center `alg ∩ alg'`.
    pub fn center(&self, tol: &Tolerances) -> Result<StarAlgebra> {
        let n = self.len();
        let mut gram = CMatrix::zeros(n, n);
        for g in self.generating_set() {
            let cols: Vec<Vector> = self.basis.iter().map(|e| vectorize(&matrix::commutator(e, &g))).collect();
            let m = CMatrix::from_columns(&cols);
            gram += m.ad_mul(&m);
        }
        let null = null_space(&gram, tol)?;
        let basis: Vec<CMatrix> = null.iter().map(|coeffs| self.from_coefficients(coeffs)).collect();
        Ok(StarAlgebra::from_orthonormal_basis(self.dim, basis.clone(), basis))
    }

    /// Checks unit, *-closure and product closure.
    pub fn validate(&self, tol: &Tolerances) -> Result<()> {
        let id = identity(self.dim);
        let r = self.membership_residual(&id)?;
        if r > tol.rank * id.norm() {
            return Err(Error::InvariantViolation(format!("identity not in algebra (residual {r:.3e})")));
        }
        for (k, e) in self.basis.iter().enumerate() {
            let r = self.membership_residual(&e.adjoint())?;
            if r > tol.rank.max(1e-8) {
                return Err(Error::InvariantViolation(format!("adjoint of basis element {k} not in algebra ({r:.3e})")));
            }
        }
        let n = self.len();
        let pairs: Vec<(usize, usize)> = if n * n <= FULL_CLOSURE_CHECK {
            (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect()
        } else {
            (0..n).map(|i| (i, (i * 7 + 3) % n)).collect()
        };
        for (i, j) in pairs {
            let p = &self.basis[i] * &self.basis[j];
            let r = self.membership_residual(&p)?;
            if r > tol.rank.max(1e-8) * p.norm().max(1.0) {
                return Err(Error::InvariantViolation(format!("product of basis elements {i},{j} leaves algebra ({r:.3e})")));
            }
        }
        Ok(())
    }

    /// Largest principal angle residual between the two spans; zero when equal.
    pub fn span_distance(&self, other: &StarAlgebra) -> f64 {
        let a = self.basis.iter().map(|e| other.membership_residual(e).unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
        let b = other.basis.iter().map(|e| self.membership_residual(e).unwrap_or(f64::INFINITY)).fold(0.0, f64::max);
        if self.len() != other.len() {
            return f64::INFINITY;
        }
        a.max(b)
    }

    pub fn to_doc(&self) -> AlgebraDoc {
        AlgebraDoc { generators: self.generators.clone() }
    }
}

/// Serialized form: the generators only. Loading re-runs `generate`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AlgebraDoc {
    #[serde(with = "crate::serial::matrix_list")]
    pub generators: Vec<CMatrix>,
}

impl AlgebraDoc {
    pub fn load(&self, dim: usize, tol: &Tolerances) -> Result<StarAlgebra> {
        let alg = StarAlgebra::generate(dim, &self.generators, tol)?;
        alg.validate(tol)?;
        Ok(alg)
    }
}

/// Appends the new orthonormal directions of `candidates` to `span`; returns them.
fn extend_span(span: &mut CMatrix, candidates: &[Vector], tol: &Tolerances) -> Result<Vec<Vector>> {
    if candidates.is_empty() {
        return Ok(vec![]);
    }
    let scale = candidates.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(vec![]);
    }
    let cutoff = tol.rank * scale;
    let mut residuals = Vec::new();
    for x in candidates {
        let mut r = x.clone();
        for _ in 0..2 {
            if span.ncols() > 0 {
                r -= &*span * span.ad_mul(&r);
            }
        }
        if r.norm() > cutoff {
            residuals.push(r);
        }
    }
    if residuals.is_empty() {
        return Ok(vec![]);
    }
    let batch = CMatrix::from_columns(&residuals);
    let fresh = orthonormal_columns(&batch, cutoff * (residuals.len() as f64).sqrt().max(1.0))?;
    let mut out = Vec::with_capacity(fresh.ncols());
    for k in 0..fresh.ncols() {
        let mut v = fresh.column(k).into_owned();
        if span.ncols() > 0 {
            v -= &*span * span.ad_mul(&v);
        }
        let n = v.norm();
        if n < 0.5 {
            continue;
        }
        let v = v / c(n, 0.0);
        let mut grown = CMatrix::zeros(span.nrows(), span.ncols() + 1);
        grown.columns_mut(0, span.ncols()).copy_from(span);
        grown.set_column(span.ncols(), &v);
        *span = grown;
        out.push(v);
    }
    Ok(out)
}

/// Orthonormal null vectors of a PSD Gram matrix.
fn null_space(gram: &CMatrix, tol: &Tolerances) -> Result<Vec<Vector>> {
    let g = matrix::hermitian_part(gram);
    let e = hermitian_eig(&g, tol)?;
    let top = e.values.last().copied().unwrap_or(0.0).max(1.0);
    let cutoff = tol.rank * top;
    Ok(e.values.iter().enumerate().filter(|(_, &v)| v <= cutoff).map(|(k, _)| e.vector(k)).collect())
}

/// One simple summand `M_n ⊗ 1_m` of the algebra.
#[derive(Clone, Debug)]
pub struct Block {
    pub multiplicity: usize,
    pub size: usize,
    /// `units[i][j]` is the matrix unit `e_ij` of this block.
    pub units: Vec<Vec<CMatrix>>,
}

impl Block {
    pub fn support(&self) -> CMatrix {
        let mut p = self.units[0][0].clone();
        for i in 1..self.size {
            p += &self.units[i][i];
        }
        p
    }
}

#[derive(Clone, Debug)]
pub struct BlockDecomposition {
    pub blocks: Vec<Block>,
}

impl BlockDecomposition {
    /// `sum_k n_k^2`.
    pub fn linear_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.size * b.size).sum()
    }

    /// Largest deviation from the matrix-unit relations and the partition of unity.
    pub fn unit_relation_error(&self) -> f64 {
        let mut worst = 0.0f64;
        let mut total: Option<CMatrix> = None;
        for b in &self.blocks {
            for i in 0..b.size {
                for j in 0..b.size {
                    worst = worst.max((b.units[i][j].adjoint() - &b.units[j][i]).norm());
                    for k in 0..b.size {
                        for l in 0..b.size {
                            let prod = &b.units[i][j] * &b.units[k][l];
                            let expect =
                                if j == k { b.units[i][l].clone() } else { CMatrix::zeros(prod.nrows(), prod.ncols()) };
                            worst = worst.max((prod - expect).norm());
                        }
                    }
                }
            }
            let s = b.support();
            total = Some(match total {
                Some(t) => t + s,
                None => s,
            });
        }
        if let Some(t) = total {
            let d = t.nrows();
            worst = worst.max((t - identity(d)).norm());
        }
        worst
    }
}

/// Relative gap below which a spectral probe is rejected.
const PROBE_GAP: f64 = 1e-6;
const MAX_RETRIES: usize = 10;

/// Eigen-clusters of `h` restricted to the columns of `range`.
fn probe_clusters(h: &CMatrix, range: &CMatrix, tol: &Tolerances) -> Result<Option<Vec<CMatrix>>> {
    let hr = range.adjoint() * h * range;
    let e = hermitian_eig(&matrix::hermitian_part(&hr), tol)?;
    let spread = e.values.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let glue = 1e-9 * spread;
    let mut clusters = Vec::new();
    let mut start = 0;
    let n = e.values.len();
    while start < n {
        let mut end = start + 1;
        while end < n && e.values[end] - e.values[end - 1] <= glue {
            end += 1;
        }
        if end < n && e.values[end] - e.values[end - 1] < PROBE_GAP * spread {
            return Ok(None);
        }
        let w = e.vectors.columns(start, end - start).into_owned();
        let v = range * w;
        clusters.push(&v * v.adjoint());
        start = end;
    }
    Ok(Some(clusters))
}

fn first_diagonal_index(p: &CMatrix) -> usize {
    (0..p.nrows()).find(|&i| p[(i, i)].re > 1e-6).unwrap_or(p.nrows())
}

fn range_basis(p: &CMatrix, tol: &Tolerances) -> Result<CMatrix> {
    let e = hermitian_eig(&matrix::hermitian_part(p), tol)?;
    let cols: Vec<Vector> = e.values.iter().enumerate().filter(|(_, &v)| v > 0.5).map(|(k, _)| e.vector(k)).collect();
    if cols.is_empty() {
        return Ok(CMatrix::zeros(p.nrows(), 0));
    }
    Ok(CMatrix::from_columns(&cols))
}

/// A deterministic hermitian probe `diag(0, 1, ..., d-1)`.
fn diagonal_probe(d: usize) -> CMatrix {
    CMatrix::from_diagonal(&Vector::from_iterator(d, (0..d).map(|i| c(i as f64 + 1.0, 0.0))))
}

/// Splits `range` by a hermitian probe drawn from `project`, accepting the split
/// only if it has `expected` clusters. Attempt zero is the diagonal probe, the
/// remaining `MAX_RETRIES` are seeded random hermitian draws.
fn split_with_probes(
    d: usize,
    range: &CMatrix,
    expected: usize,
    project: impl Fn(&CMatrix) -> Result<CMatrix>,
    rng: &mut ChaCha8Rng,
    tol: &Tolerances,
) -> Result<Vec<CMatrix>> {
    for attempt in 0..=MAX_RETRIES {
        let raw = if attempt == 0 { diagonal_probe(d) } else { random_hermitian(rng, d) };
        let h = matrix::hermitian_part(&project(&raw)?);
        if let Some(clusters) = probe_clusters(&h, range, tol)? {
            if clusters.len() == expected {
                return Ok(clusters);
            }
        }
    }
    Err(Error::DegenerateRandomization { attempts: MAX_RETRIES + 1 })
}

/// Artin-Wedderburn block structure with explicit matrix units.
///
/// Minimal central projections come from the spectrum of a hermitian central
/// element; inside each central block, minimal projections come from the
/// spectrum of a hermitian block element, and the off-diagonal units are
/// normalized compressions `f_i B f_0`. Blocks and minimal projections are
/// ordered by the first basis index in their support.
pub fn wedderburn_blocks(alg: &StarAlgebra, seed: u64, tol: &Tolerances) -> Result<BlockDecomposition> {
    let d = alg.ambient_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let center = alg.center(tol)?;
    let full_range = identity(d);
    let mut centrals =
        split_with_probes(d, &full_range, center.len(), |m| center.conditional_expectation(m), &mut rng, tol)?;
    centrals.sort_by_key(first_diagonal_index);

    let mut blocks = Vec::with_capacity(centrals.len());
    for p in centrals {
        let rank = p.trace().re.round() as usize;
        let cols: Vec<Vector> = alg.basis().iter().map(|e| vectorize(&(&p * e))).collect();
        let stacked = CMatrix::from_columns(&cols);
        let block_basis = orthonormal_columns(&stacked, tol.rank.max(1e-8) * stacked.norm())?;
        let dim = block_basis.ncols();
        let size = (dim as f64).sqrt().round() as usize;
        if size * size != dim || size == 0 || rank % size != 0 {
            return Err(Error::InvariantViolation(format!(
                "central block of rank {rank} has linear dimension {dim}, not a full matrix algebra"
            )));
        }
        let multiplicity = rank / size;
        let block_elems: Vec<CMatrix> =
            (0..dim).map(|k| unvectorize(block_basis.column(k).as_slice(), d, d)).collect();
        if size == 1 {
            blocks.push(Block { multiplicity, size, units: vec![vec![p]] });
            continue;
        }
        let range = range_basis(&p, tol)?;
        let block_alg = StarAlgebra::from_orthonormal_basis(d, block_elems.clone(), vec![]);
        let mut minimal =
            split_with_probes(d, &range, size, |m| block_alg.conditional_expectation(m), &mut rng, tol)?;
        minimal.sort_by_key(first_diagonal_index);

        let f0 = minimal[0].clone();
        let mut col0 = vec![f0.clone()];
        for fi in &minimal[1..] {
            let mut best: Option<CMatrix> = None;
            let mut best_norm = 0.0;
            for b in &block_elems {
                let cand = fi * b * &f0;
                let n = cand.norm();
                if n > best_norm * (1.0 + 1e-12) {
                    best_norm = n;
                    best = Some(cand);
                }
            }
            let cand = best.ok_or_else(|| Error::InvariantViolation("empty block basis".into()))?;
            let lambda = best_norm * best_norm / multiplicity as f64;
            let mut e = cand / c(lambda.sqrt(), 0.0);
            if let Some(z) = e.as_slice().iter().copied().find(|z| z.norm() > 1e-8) {
                e *= z.conj() / z.norm();
            }
            col0.push(e);
        }
        let mut units = vec![vec![CMatrix::zeros(d, d); size]; size];
        for i in 0..size {
            for j in 0..size {
                units[i][j] = if i == j {
                    minimal[i].clone()
                } else {
                    &col0[i] * col0[j].adjoint()
                };
            }
        }
        for i in 1..size {
            units[i][0] = col0[i].clone();
            units[0][i] = col0[i].adjoint();
        }
        blocks.push(Block { multiplicity, size, units });
    }
    let decomposition = BlockDecomposition { blocks };
    if decomposition.linear_dim() != alg.len() {
        return Err(Error::InvariantViolation(format!(
            "block sizes account for dimension {}, algebra has {}",
            decomposition.linear_dim(),
            alg.len()
        )));
    }
    Ok(decomposition)
}

/// A *-homomorphism `tau: M_2 -> alg`, possibly non-unital.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QubitEmbedding {
    /// `images[i][j] = tau(|i><j|)`.
    #[serde(with = "crate::serial::matrix_grid")]
    pub images: Vec<Vec<CMatrix>>,
    /// `tau(1)`.
    #[serde(with = "crate::serial::matrix")]
    pub support: CMatrix,
}

impl QubitEmbedding {
    pub fn from_images(images: Vec<Vec<CMatrix>>) -> Self {
        let support = &images[0][0] + &images[1][1];
        QubitEmbedding { images, support }
    }

    /// `tau(X)` for a `2 x 2` matrix `X`.
    pub fn apply(&self, x: &CMatrix) -> CMatrix {
        let d = self.support.nrows();
        let mut out = CMatrix::zeros(d, d);
        for i in 0..2 {
            for j in 0..2 {
                if x[(i, j)] != matrix::ZERO {
                    out += &self.images[i][j] * x[(i, j)];
                }
            }
        }
        out
    }

    /// Largest deviation from the `2 x 2` matrix-unit relations.
    pub fn relation_error(&self) -> f64 {
        let d = self.support.nrows();
        let mut worst = 0.0f64;
        for i in 0..2 {
            for j in 0..2 {
                worst = worst.max((self.images[i][j].adjoint() - &self.images[j][i]).norm());
                for k in 0..2 {
                    for l in 0..2 {
                        let prod = &self.images[i][j] * &self.images[k][l];
                        let expect = if j == k { self.images[i][l].clone() } else { CMatrix::zeros(d, d) };
                        worst = worst.max((prod - expect).norm());
                    }
                }
            }
        }
        worst
    }
}

/// Embeds `M_2` into the largest simple block (ties: lowest block index).
pub fn qubit_embedding(alg: &StarAlgebra, seed: u64, tol: &Tolerances) -> Result<QubitEmbedding> {
    let dec = wedderburn_blocks(alg, seed, tol)?;
    let mut chosen: Option<&Block> = None;
    for b in &dec.blocks {
        if b.size >= 2 && chosen.is_none_or(|c| b.size > c.size) {
            chosen = Some(b);
        }
    }
    let b = chosen.ok_or(Error::AbelianAlgebra("given"))?;
    let images = vec![
        vec![b.units[0][0].clone(), b.units[0][1].clone()],
        vec![b.units[1][0].clone(), b.units[1][1].clone()],
    ];
    Ok(QubitEmbedding::from_images(images))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cyclicity {
    pub cyclic: bool,
    pub rank: usize,
}

/// Whether `alg psi` spans the whole space.
pub fn is_cyclic(alg: &StarAlgebra, psi: &Vector, tol: &Tolerances) -> Result<Cyclicity> {
    let d = alg.ambient_dim();
    if psi.len() != d {
        return Err(Error::DimensionMismatch(format!("vector has length {}, algebra dimension {d}", psi.len())));
    }
    let cols: Vec<Vector> = alg.basis().iter().map(|e| e * psi).collect();
    let m = CMatrix::from_columns(&cols);
    let rank = matrix::svd_rank(&m, tol);
    Ok(Cyclicity { cyclic: rank == d, rank })
}

#[derive(Clone, Debug)]
pub struct Selection {
    /// `A` in the algebra with `A psi` closest to `chi`.
    pub operator: CMatrix,
    pub residual: f64,
}

/// Least-squares choice of `A` in `alg` with `A psi ≈ chi`.
pub fn rs_select(alg: &StarAlgebra, psi: &Vector, chi: &Vector, tol: &Tolerances) -> Result<Selection> {
    let d = alg.ambient_dim();
    if psi.len() != d || chi.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "vectors have lengths {} and {}, algebra dimension {d}",
            psi.len(),
            chi.len()
        )));
    }
    let cols: Vec<Vector> = alg.basis().iter().map(|e| e * psi).collect();
    let ls = matrix::least_squares(&cols, chi, tol)?;
    let operator = alg.from_coefficients(&ls.coefficients);
    let residual = (&operator * psi - chi).norm();
    Ok(Selection { operator, residual })
}
