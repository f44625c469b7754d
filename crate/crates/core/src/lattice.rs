//! Small spin chains: exact ground and Gibbs states, reduced to two regions.
//!
//! The reduced state on `sitesA ∪ sitesB` is classified as a tensor system
//! `C^{2^|A|} ⊗ C^{2^|B|}`. The cyclic-vector distillation route does not
//! apply here: a region algebra has dimension `4^|A|`, so it cannot act
//! cyclically on the full `2^N`-dimensional chain space once the regions miss
//! some sites. Lattice states are classified through the witness search instead.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::mpsc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bipartite::{reduce_pure, BipartiteSystem, State, DEFAULT_SIZE_LIMIT};
use crate::error::{Error, Result};
use crate::matrix::{self, c, hermitian_eig, identity, CMatrix, Eigh, Tolerances, Vector};
use crate::report::{classify_state, AnalysisConfig, ClassificationReport};
use crate::star_algebra::StarAlgebra;

pub const MIN_SITES: usize = 2;
pub const MAX_SITES: usize = 12;

/// Largest chain space on which explicit region algebras are built.
pub const REGION_SYSTEM_LIMIT: usize = 1024;

/// A Hamiltonian on `N` qubits, site 0 the most significant tensor leg.
pub trait LocalModel: Send + Sync {
    fn sites(&self) -> usize;

    fn validate(&self) -> Result<()>;

    /// Dense Hamiltonian on `(C^2)^{⊗N}`.
    fn hamiltonian(&self) -> CMatrix;

    fn label(&self) -> String;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    Periodic,
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "open" => Ok(Boundary::Open),
            "periodic" => Ok(Boundary::Periodic),
            other => Err(Error::Parse(format!("unknown boundary `{other}` (expected open or periodic)"))),
        }
    }
}

/// Transverse-field Ising chain `H = -J sum Z_i Z_{i+1} - g sum X_i`.
///
/// The periodic bond `Z_{N-1} Z_0` is added only for `N >= 3`; at `N = 2` it
/// would duplicate the single open bond.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpinChainSpec {
    pub n: usize,
    pub j: f64,
    pub g: f64,
    pub boundary: Boundary,
}

impl SpinChainSpec {
    pub fn tfim(n: usize, j: f64, g: f64, boundary: Boundary) -> Result<Self> {
        let spec = SpinChainSpec { n, j, g, boundary };
        spec.validate()?;
        Ok(spec)
    }

    fn bonds(&self) -> Vec<(usize, usize)> {
        let mut bonds: Vec<(usize, usize)> = (0..self.n - 1).map(|i| (i, i + 1)).collect();
        if self.boundary == Boundary::Periodic && self.n >= 3 {
            bonds.push((self.n - 1, 0));
        }
        bonds
    }
}

impl LocalModel for SpinChainSpec {
    fn sites(&self) -> usize {
        self.n
    }

    fn validate(&self) -> Result<()> {
        if !(MIN_SITES..=MAX_SITES).contains(&self.n) {
            return Err(Error::Parse(format!("chain length {} outside {MIN_SITES}..={MAX_SITES}", self.n)));
        }
        if !self.j.is_finite() || !self.g.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(())
    }

    fn hamiltonian(&self) -> CMatrix {
        let n = self.n;
        let dim = 1usize << n;
        let bit = |s: usize, site: usize| (s >> (n - 1 - site)) & 1;
        let bonds = self.bonds();
        let mut h = CMatrix::zeros(dim, dim);
        for s in 0..dim {
            let zz: f64 = bonds
                .iter()
                .map(|&(a, b)| if bit(s, a) == bit(s, b) { 1.0 } else { -1.0 })
                .sum();
            h[(s, s)] = c(-self.j * zz, 0.0);
            for site in 0..n {
                let t = s ^ (1 << (n - 1 - site));
                h[(t, s)] += c(-self.g, 0.0);
            }
        }
        h
    }

    fn label(&self) -> String {
        format!("tfim(n={}, J={}, g={}, {:?})", self.n, self.j, self.g, self.boundary).to_lowercase()
    }
}

/// `1 ⊗ ... ⊗ op ⊗ ... ⊗ 1` with `op` on `site`.
pub fn site_operator(n: usize, site: usize, op: &CMatrix) -> CMatrix {
    identity(1 << site).kronecker(op).kronecker(&identity(1 << (n - 1 - site)))
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[matrix::ZERO, matrix::ONE, matrix::ONE, matrix::ZERO])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[matrix::ONE, matrix::ZERO, matrix::ZERO, -matrix::ONE])
}

pub fn check_size(model: &dyn LocalModel, limit: usize) -> Result<()> {
    let dim = 1usize << model.sites();
    if dim > limit {
        return Err(Error::SizeLimit { dim, limit });
    }
    Ok(())
}

/// The full spectrum of a model, shared by its ground and Gibbs states.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub sites: usize,
    pub eig: Eigh,
}

pub fn diagonalize(model: &dyn LocalModel, tol: &Tolerances) -> Result<Spectrum> {
    model.validate()?;
    check_size(model, DEFAULT_SIZE_LIMIT)?;
    Ok(Spectrum { sites: model.sites(), eig: hermitian_eig(&model.hamiltonian(), tol)? })
}

#[derive(Clone, Debug)]
pub struct GroundState {
    pub energy: f64,
    /// Lowest-index vector of the ground space, first significant amplitude real positive.
    pub psi: Vector,
    pub degenerate: bool,
    /// `E_1 - E_0`.
    pub gap: f64,
}

impl Spectrum {
    fn degeneracy_band(&self) -> f64 {
        1e-8 * self.eig.values[0].abs().max(1.0)
    }

    pub fn ground_state(&self) -> GroundState {
        let values = &self.eig.values;
        let gap = values.get(1).map_or(f64::INFINITY, |e1| e1 - values[0]);
        GroundState { energy: values[0], psi: self.eig.vector(0), degenerate: gap <= self.degeneracy_band(), gap }
    }

    /// Boltzmann weights `exp(-beta (E_k - E_0)) / Z`.
    pub fn gibbs_weights(&self, beta: f64) -> Result<Vec<f64>> {
        if !beta.is_finite() || beta < 0.0 {
            return Err(Error::Parse(format!("inverse temperature {beta} must be finite and non-negative")));
        }
        let e0 = self.eig.values[0];
        let raw: Vec<f64> = self.eig.values.iter().map(|e| (-beta * (e - e0)).exp()).collect();
        let z: f64 = raw.iter().sum();
        Ok(raw.into_iter().map(|w| w / z).collect())
    }

    pub fn gibbs_state(&self, beta: f64, tol: &Tolerances) -> Result<State> {
        let w = self.gibbs_weights(beta)?;
        let rho = self.eig.apply(|_| 0.0);
        let mut rho = rho;
        for (k, wk) in w.iter().enumerate() {
            if *wk == 0.0 {
                continue;
            }
            let v = self.eig.vectors.column(k);
            rho += (&v * v.adjoint()) * c(*wk, 0.0);
        }
        State::new(matrix::hermitian_part(&rho), tol)
    }

    /// Reduced density matrix on `keep` (in that order) without forming the full state.
    pub fn reduced(&self, choice: StateChoice, keep: &[usize]) -> Result<CMatrix> {
        let dims = vec![2; self.sites];
        match choice {
            StateChoice::Ground => reduce_pure(&self.ground_state().psi, &dims, keep),
            StateChoice::Gibbs(beta) => {
                let w = self.gibbs_weights(beta)?;
                let d = 1usize << keep.len();
                let mut rho = CMatrix::zeros(d, d);
                for (k, wk) in w.iter().enumerate() {
                    if *wk < 1e-18 {
                        continue;
                    }
                    rho += reduce_pure(&self.eig.vector(k), &dims, keep)? * c(*wk, 0.0);
                }
                Ok(matrix::hermitian_part(&rho))
            }
        }
    }
}

/// Lowest eigenpair of the dense Hamiltonian.
pub fn ground_state(model: &dyn LocalModel, tol: &Tolerances) -> Result<GroundState> {
    Ok(diagonalize(model, tol)?.ground_state())
}

/// `exp(-beta H) / Tr exp(-beta H)`.
pub fn gibbs_state(model: &dyn LocalModel, beta: f64, tol: &Tolerances) -> Result<State> {
    diagonalize(model, tol)?.gibbs_state(beta, tol)
}

/// Ground state or Gibbs state at inverse temperature `beta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChoiceRepr", into = "ChoiceRepr")]
pub enum StateChoice {
    Ground,
    Gibbs(f64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ChoiceRepr {
    Named(String),
    Beta(f64),
}

impl TryFrom<ChoiceRepr> for StateChoice {
    type Error = Error;

    fn try_from(r: ChoiceRepr) -> Result<Self> {
        match r {
            ChoiceRepr::Named(s) => s.parse(),
            ChoiceRepr::Beta(b) => StateChoice::gibbs(b),
        }
    }
}

impl From<StateChoice> for ChoiceRepr {
    fn from(s: StateChoice) -> Self {
        match s {
            StateChoice::Ground => ChoiceRepr::Named("ground".into()),
            StateChoice::Gibbs(b) => ChoiceRepr::Beta(b),
        }
    }
}

impl StateChoice {
    pub fn gibbs(beta: f64) -> Result<Self> {
        if !beta.is_finite() || beta < 0.0 {
            return Err(Error::Parse(format!("inverse temperature {beta} must be finite and non-negative")));
        }
        Ok(StateChoice::Gibbs(beta))
    }
}

impl FromStr for StateChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "ground" {
            return Ok(StateChoice::Ground);
        }
        let beta: f64 = s.parse().map_err(|_| Error::Parse(format!("state `{s}` is neither `ground` nor an inverse temperature")))?;
        StateChoice::gibbs(beta)
    }
}

impl fmt::Display for StateChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateChoice::Ground => write!(f, "ground"),
            StateChoice::Gibbs(b) => write!(f, "beta={b}"),
        }
    }
}

/// Two disjoint, non-empty site sets, written `a,b/c,d`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct RegionPair {
    sites_a: Vec<usize>,
    sites_b: Vec<usize>,
}

impl RegionPair {
    pub fn new(sites_a: Vec<usize>, sites_b: Vec<usize>) -> Result<Self> {
        for (name, sites) in [("A", &sites_a), ("B", &sites_b)] {
            if sites.is_empty() {
                return Err(Error::InvalidRegions(format!("region {name} is empty")));
            }
            let mut sorted = sites.clone();
            sorted.sort_unstable();
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidRegions(format!("region {name} repeats a site")));
            }
        }
        if let Some(s) = sites_a.iter().find(|s| sites_b.contains(s)) {
            return Err(Error::InvalidRegions(format!("regions overlap at site {s}")));
        }
        Ok(RegionPair { sites_a, sites_b })
    }

    pub fn sites_a(&self) -> &[usize] {
        &self.sites_a
    }

    pub fn sites_b(&self) -> &[usize] {
        &self.sites_b
    }

    /// Checks that every site exists on an `n`-site chain.
    pub fn check_within(&self, n: usize) -> Result<()> {
        match self.sites_a.iter().chain(&self.sites_b).find(|&&s| s >= n) {
            Some(s) => Err(Error::InvalidRegions(format!("site {s} does not exist on a {n}-site chain"))),
            None => Ok(()),
        }
    }

    /// Smallest distance between a site of A and a site of B; at least 1 for disjoint regions.
    pub fn gap(&self, n: usize, boundary: Boundary) -> usize {
        let mut best = usize::MAX;
        for &a in &self.sites_a {
            for &b in &self.sites_b {
                let d = a.abs_diff(b);
                let d = if boundary == Boundary::Periodic { d.min(n - d) } else { d };
                best = best.min(d);
            }
        }
        best
    }

    /// Legs of the reduced state: A's sites then B's.
    pub fn legs(&self) -> Vec<usize> {
        self.sites_a.iter().chain(&self.sites_b).copied().collect()
    }
}

impl FromStr for RegionPair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once('/')
            .ok_or_else(|| Error::InvalidRegions(format!("`{s}` is not of the form `A/B`, e.g. `0,1/4,5`")))?;
        let parse = |part: &str| -> Result<Vec<usize>> {
            part.split(',')
                .map(|x| x.trim().parse::<usize>().map_err(|_| Error::InvalidRegions(format!("`{x}` is not a site index in `{s}`"))))
                .collect()
        };
        RegionPair::new(parse(a)?, parse(b)?)
    }
}

impl TryFrom<String> for RegionPair {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<RegionPair> for String {
    fn from(r: RegionPair) -> String {
        r.to_string()
    }
}

impl fmt::Display for RegionPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        write!(f, "{}/{}", join(&self.sites_a), join(&self.sites_b))
    }
}

/// The full-chain system: all operators on A's sites versus all operators on B's sites.
pub fn region_system(model: &dyn LocalModel, regions: &RegionPair, tol: &Tolerances) -> Result<BipartiteSystem> {
    let n = model.sites();
    regions.check_within(n)?;
    check_size(model, REGION_SYSTEM_LIMIT)?;
    let dim = 1usize << n;
    let gens = |sites: &[usize]| -> Vec<CMatrix> {
        sites
            .iter()
            .flat_map(|&s| [site_operator(n, s, &pauli_x()), site_operator(n, s, &pauli_z())])
            .collect()
    };
    let alice = StarAlgebra::generate(dim, &gens(regions.sites_a()), tol)?;
    let bob = StarAlgebra::generate(dim, &gens(regions.sites_b()), tol)?;
    BipartiteSystem::new(dim, alice, bob, tol)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LatticeReport {
    pub model: String,
    pub regions: RegionPair,
    pub state: StateChoice,
    pub gap: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ground_energy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degenerate: Option<bool>,
    pub report: ClassificationReport,
}

/// The reduced two-region state as a tensor system.
pub fn reduced_system(spectrum: &Spectrum, regions: &RegionPair, choice: StateChoice, tol: &Tolerances) -> Result<(BipartiteSystem, State)> {
    regions.check_within(spectrum.sites)?;
    let rho = spectrum.reduced(choice, &regions.legs())?;
    let sys = BipartiteSystem::tensor(1 << regions.sites_a().len(), 1 << regions.sites_b().len());
    Ok((sys, State::new(rho, tol)?))
}

fn classify_with(
    model: &dyn LocalModel,
    spectrum: &Spectrum,
    regions: &RegionPair,
    choice: StateChoice,
    boundary: Boundary,
    cfg: &AnalysisConfig,
) -> Result<LatticeReport> {
    let (sys, state) = reduced_system(spectrum, regions, choice, &cfg.tol)?;
    let report = classify_state(&sys, &state, cfg, None)?;
    let ground = (choice == StateChoice::Ground).then(|| spectrum.ground_state());
    Ok(LatticeReport {
        model: model.label(),
        regions: regions.clone(),
        state: choice,
        gap: regions.gap(model.sites(), boundary),
        ground_energy: ground.as_ref().map(|g| g.energy),
        degenerate: ground.as_ref().map(|g| g.degenerate),
        report,
    })
}

/// Classifies the reduced state of a spin chain on two regions.
pub fn classify(spec: &SpinChainSpec, regions: &RegionPair, choice: StateChoice, cfg: &AnalysisConfig) -> Result<LatticeReport> {
    let spectrum = diagonalize(spec, &cfg.tol)?;
    classify_with(spec, &spectrum, regions, choice, spec.boundary, cfg)
}

/// A grid of chains, regions and states; cells run in index order `sites × fields × regions × states`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainConfig {
    pub sites: Vec<usize>,
    #[serde(default = "default_coupling")]
    pub coupling: f64,
    pub fields: Vec<f64>,
    #[serde(default = "default_boundary")]
    pub boundary: Boundary,
    pub regions: Vec<RegionPair>,
    pub states: Vec<StateChoice>,
    #[serde(default = "default_chain_limit")]
    pub size_limit: usize,
}

fn default_coupling() -> f64 {
    1.0
}

fn default_boundary() -> Boundary {
    Boundary::Open
}

fn default_chain_limit() -> usize {
    DEFAULT_SIZE_LIMIT
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CellError {
    pub kind: String,
    pub message: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChainRow {
    pub index: usize,
    pub sites: usize,
    pub coupling: f64,
    pub field: f64,
    pub boundary: Boundary,
    pub regions: RegionPair,
    pub state: StateChoice,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub result: Option<LatticeReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<CellError>,
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::SizeLimit { .. } => "size-limit",
        Error::InvalidRegions(_) => "invalid-regions",
        Error::InvariantViolation(_) => "invariant-violation",
        _ => "error",
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.sites.is_empty() || self.fields.is_empty() || self.regions.is_empty() || self.states.is_empty() {
            return Err(Error::Parse("chain sweep needs at least one chain length, field, region pair and state".into()));
        }
        if !self.coupling.is_finite() || self.fields.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite);
        }
        for &n in &self.sites {
            if !(MIN_SITES..=MAX_SITES).contains(&n) {
                return Err(Error::Parse(format!("chain length {n} outside {MIN_SITES}..={MAX_SITES}")));
            }
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.sites.len() * self.fields.len() * self.regions.len() * self.states.len()
    }

    fn cell(&self, index: usize) -> (usize, usize, usize, usize) {
        let ns = self.states.len();
        let nr = self.regions.len();
        let nf = self.fields.len();
        (index / (nf * nr * ns), (index / (nr * ns)) % nf, (index / ns) % nr, index % ns)
    }
}

/// Runs the sweep in parallel and hands rows to `emit` in cell order as they become available.
///
/// Cell failures (size limit, out-of-range regions) become error rows; the
/// first invariant violation is returned after all rows are emitted.
pub fn run_chain(config: &ChainConfig, cfg: &AnalysisConfig, mut emit: impl FnMut(&ChainRow)) -> Result<usize> {
    config.validate()?;
    let models: Vec<Vec<SpinChainSpec>> = config
        .sites
        .iter()
        .map(|&n| config.fields.iter().map(|&g| SpinChainSpec { n, j: config.coupling, g, boundary: config.boundary }).collect())
        .collect();
    let spectra: Vec<Vec<Option<std::result::Result<Spectrum, String>>>> = models
        .iter()
        .map(|row| {
            row.par_iter()
                .map(|m| match check_size(m, config.size_limit) {
                    Ok(()) => Some(diagonalize(m, &cfg.tol).map_err(|e| e.to_string())),
                    Err(_) => None,
                })
                .collect()
        })
        .collect();

    let (tx, rx) = mpsc::channel::<(usize, ChainRow, bool)>();
    let total = config.cell_count();
    let mut violation: Option<Error> = None;
    std::thread::scope(|scope| {
        scope.spawn(|| {
            (0..total).into_par_iter().for_each_with(tx, |tx, index| {
                let (si, fi, ri, st) = config.cell(index);
                let model = &models[si][fi];
                let regions = &config.regions[ri];
                let choice = config.states[st];
                let outcome = match &spectra[si][fi] {
                    None => Err(Error::SizeLimit { dim: 1 << model.n, limit: config.size_limit }),
                    Some(Err(msg)) => Err(Error::InvariantViolation(format!("diagonalization failed: {msg}"))),
                    Some(Ok(spectrum)) => classify_with(model, spectrum, regions, choice, model.boundary, cfg),
                };
                let fatal = matches!(outcome, Err(Error::InvariantViolation(_)));
                let (result, error) = match outcome {
                    Ok(r) => (Some(r), None),
                    Err(e) => (None, Some(CellError { kind: error_kind(&e).into(), message: e.to_string() })),
                };
                let row = ChainRow {
                    index,
                    sites: model.n,
                    coupling: model.j,
                    field: model.g,
                    boundary: model.boundary,
                    regions: regions.clone(),
                    state: choice,
                    result,
                    error,
                };
                let _ = tx.send((index, row, fatal));
            });
        });
        let mut pending = BTreeMap::new();
        let mut next = 0;
        for (index, row, fatal) in rx.iter() {
            pending.insert(index, (row, fatal));
            while let Some((row, fatal)) = pending.remove(&next) {
                if fatal && violation.is_none() {
                    violation = Some(Error::InvariantViolation(format!(
                        "cell {}: {}",
                        row.index,
                        row.error.as_ref().map_or("", |e| e.message.as_str())
                    )));
                }
                emit(&row);
                next += 1;
            }
        }
    });
    match violation {
        Some(e) => Err(e),
        None => Ok(total),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bipartite::partial_trace;
    use crate::distill::DistillVerdict;
    use crate::ppt::Verdict;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn ground_state_examples() {
        let free = SpinChainSpec::tfim(2, 0.0, 1.0, Boundary::Open).unwrap();
        let gs = ground_state(&free, &tol()).unwrap();
        assert!((gs.energy + 2.0).abs() < 1e-12);
        let plus = Vector::from_element(4, c(0.5, 0.0));
        assert!((gs.psi - plus).norm() < 1e-10);
        assert!(!gs.degenerate);

        let ising = SpinChainSpec::tfim(2, 1.0, 0.0, Boundary::Open).unwrap();
        let gs = ground_state(&ising, &tol()).unwrap();
        assert!(gs.degenerate);
        assert!((gs.energy + 1.0).abs() < 1e-12);
        assert!(gs.psi[1].norm() < 1e-12 && gs.psi[2].norm() < 1e-12);
    }

    #[test]
    fn hamiltonian_matches_site_operators() {
        for boundary in [Boundary::Open, Boundary::Periodic] {
            let spec = SpinChainSpec::tfim(4, 0.7, 1.3, boundary).unwrap();
            let n = 4;
            let mut h = CMatrix::zeros(16, 16);
            let z = |i| site_operator(n, i, &pauli_z());
            for i in 0..n - 1 {
                h -= z(i) * z(i + 1) * c(0.7, 0.0);
            }
            if boundary == Boundary::Periodic {
                h -= z(n - 1) * z(0) * c(0.7, 0.0);
            }
            for i in 0..n {
                h -= site_operator(n, i, &pauli_x()) * c(1.3, 0.0);
            }
            assert!((spec.hamiltonian() - h).norm() < 1e-12);
        }
    }

    #[test]
    fn six_site_energy_oracle() {
        let spec = SpinChainSpec::tfim(6, 1.0, 1.0, Boundary::Open).unwrap();
        let gs = ground_state(&spec, &tol()).unwrap();
        // independent route: real symmetric eigensolver on the same matrix
        let h = spec.hamiltonian().map(|z| z.re);
        let eig = nalgebra::SymmetricEigen::new(h);
        let e0 = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        assert!((gs.energy - e0).abs() < 1e-9);
    }

    #[test]
    fn gibbs_examples() {
        let spec = SpinChainSpec::tfim(3, 1.0, 0.5, Boundary::Periodic).unwrap();
        let st = gibbs_state(&spec, 0.0, &tol()).unwrap();
        assert!((st.density() - identity(8) / c(8.0, 0.0)).norm() < 1e-12);

        let free = SpinChainSpec::tfim(2, 0.0, 1.0, Boundary::Open).unwrap();
        let st = gibbs_state(&free, 1e3, &tol()).unwrap();
        let gs = ground_state(&free, &tol()).unwrap();
        let fid = (gs.psi.adjoint() * st.density() * &gs.psi)[(0, 0)].re;
        assert!(fid >= 1.0 - 1e-6);
        assert!(gibbs_state(&free, -1.0, &tol()).is_err());
    }

    #[test]
    fn reduced_gibbs_two_ways() {
        let spec = SpinChainSpec::tfim(4, 1.0, 0.8, Boundary::Open).unwrap();
        let spectrum = diagonalize(&spec, &tol()).unwrap();
        let st = spectrum.gibbs_state(0.7, &tol()).unwrap();
        let dims = [2, 2, 2, 2];
        let direct = partial_trace(st.density(), &dims, &[0, 2]).unwrap();
        let stepwise = partial_trace(&partial_trace(st.density(), &dims, &[0, 2, 3]).unwrap(), &[2, 2, 2], &[0, 1]).unwrap();
        let swapped = partial_trace(&partial_trace(st.density(), &dims, &[0, 1, 2]).unwrap(), &[2, 2, 2], &[0, 2]).unwrap();
        let fast = spectrum.reduced(StateChoice::Gibbs(0.7), &[0, 2]).unwrap();
        assert!((&direct - &stepwise).norm() < 1e-10);
        assert!((&direct - &swapped).norm() < 1e-10);
        assert!((&direct - fast).norm() < 1e-10);
    }

    #[test]
    fn regions() {
        let r: RegionPair = "0,1/4,5".parse().unwrap();
        assert_eq!(r.sites_a(), &[0, 1]);
        assert_eq!(r.to_string(), "0,1/4,5");
        assert_eq!(r.gap(6, Boundary::Open), 3);
        assert_eq!(r.gap(6, Boundary::Periodic), 1);
        assert!(matches!("1/1".parse::<RegionPair>(), Err(Error::InvalidRegions(_))));
        assert!(matches!("1,2".parse::<RegionPair>(), Err(Error::InvalidRegions(_))));
        assert!(matches!("0/x".parse::<RegionPair>(), Err(Error::InvalidRegions(_))));
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(serde_json::from_str::<RegionPair>(&json).unwrap(), r);
    }

    #[test]
    fn region_system_examples() {
        let two = SpinChainSpec::tfim(2, 1.0, 1.0, Boundary::Open).unwrap();
        let sys = region_system(&two, &"0/1".parse().unwrap(), &tol()).unwrap();
        let standard = BipartiteSystem::tensor(2, 2);
        assert!(sys.alice().span_distance(standard.alice()) < 1e-10);
        assert!(sys.bob().span_distance(standard.bob()) < 1e-10);

        let four = SpinChainSpec::tfim(4, 1.0, 1.0, Boundary::Open).unwrap();
        assert!(region_system(&four, &"0/3".parse().unwrap(), &tol()).is_ok());

        let six = SpinChainSpec::tfim(6, 1.0, 1.0, Boundary::Open).unwrap();
        let sys = region_system(&six, &"0,1/4,5".parse().unwrap(), &tol()).unwrap();
        assert_eq!((sys.dim(), sys.alice().len(), sys.bob().len()), (64, 16, 16));
        assert!(region_system(&six, &"0/6".parse().unwrap(), &tol()).is_err());
    }

    #[test]
    fn classify_examples() {
        let spec = SpinChainSpec::tfim(6, 1.0, 1.0, Boundary::Open).unwrap();
        let cfg = AnalysisConfig::default();
        let r = classify(&spec, &"2/3".parse().unwrap(), StateChoice::Ground, &cfg).unwrap();
        assert_eq!(r.report.ppt.as_ref().unwrap().verdict, Verdict::Npt);
        assert_eq!(r.report.one_distillable.as_ref().unwrap().verdict, DistillVerdict::Certified);
        assert!(r.report.chain_consistent);

        let r = classify(&spec, &"0/1".parse().unwrap(), StateChoice::Ground, &cfg).unwrap();
        assert!(r.report.ppt.as_ref().unwrap().margin < 0.0);

        let r = classify(&spec, &"1/4".parse().unwrap(), StateChoice::Gibbs(0.0), &cfg).unwrap();
        assert_eq!(r.report.ppt.as_ref().unwrap().verdict, Verdict::Ppt);
        assert_eq!(r.report.one_distillable.as_ref().unwrap().verdict, DistillVerdict::Inconclusive);
        assert!(r.report.chsh.as_ref().unwrap().beta_lower_bound <= 2.0 + 1e-7);

        let uncoupled = SpinChainSpec::tfim(4, 0.0, 1.0, Boundary::Open).unwrap();
        let r = classify(&uncoupled, &"1/2".parse().unwrap(), StateChoice::Ground, &cfg).unwrap();
        assert_eq!(r.report.ppt.as_ref().unwrap().verdict, Verdict::Ppt);
        assert!(r.report.chsh.as_ref().unwrap().beta_lower_bound <= 2.0 + 1e-7);
    }

    #[test]
    fn chain_sweep_orders_rows_and_reports_cells() {
        let config = ChainConfig {
            sites: vec![4, 6],
            coupling: 1.0,
            fields: vec![1.0],
            boundary: Boundary::Open,
            regions: vec!["0/1".parse().unwrap(), "1/5".parse().unwrap()],
            states: vec![StateChoice::Ground, StateChoice::Gibbs(0.0)],
            size_limit: 32,
        };
        let mut rows = Vec::new();
        let cfg = AnalysisConfig { criteria: vec![crate::report::Criterion::Ppt], ..Default::default() };
        let total = run_chain(&config, &cfg, |r| rows.push(r.clone())).unwrap();
        assert_eq!(total, 8);
        assert_eq!(rows.iter().map(|r| r.index).collect::<Vec<_>>(), (0..8).collect::<Vec<_>>());
        // N = 4: site 5 is out of range
        assert_eq!(rows[2].error.as_ref().unwrap().kind, "invalid-regions");
        // N = 6 exceeds the 32-dimensional limit
        assert!(rows[4..].iter().all(|r| r.error.as_ref().unwrap().kind == "size-limit"));
        let beta0 = &rows[1].result.as_ref().unwrap().report;
        assert_eq!(beta0.ppt.as_ref().unwrap().verdict, Verdict::Ppt);
    }
}
