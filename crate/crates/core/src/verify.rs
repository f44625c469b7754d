//! Seeded randomized property suites.
//!
//! Trial `i` of a run with root seed `s` uses trial seed `s + i`, so a failing
//! trial is reproduced by `--seed <trial seed> --trials 1`. Trials run in
//! parallel and are collected in index order; summaries are deterministic.

use std::fmt::Write as _;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::bipartite::{compose, random_separable, BipartiteSystem, State, DEFAULT_SIZE_LIMIT};
use crate::chsh::{beta_seesaw, SeesawConfig};
use crate::distill::{apply_superoperator, distill_from_cyclic, two_qubit_reduction, swap_expectation, witness_to_choi, SeparableSuperoperator};
use crate::error::{Error, Result};
use crate::matrix::{self, c, psd_check, stream_rng, CMatrix, Tolerances, Vector};
use crate::ppt::{compare_kernel_with_pt, is_ppt, ppt_inequality_check, npt_witness_search_k2, partial_transpose, polarized_matrix, polarized_transpose, SearchBudget};
use crate::report::{classify_state, AnalysisConfig, CHSH_SLACK};

/// Random density matrix on `C^{dA} ⊗ C^{dB}` of random rank, mixed with white noise by a random amount.
pub fn random_state(rng: &mut ChaCha8Rng, d_a: usize, d_b: usize) -> CMatrix {
    let d = d_a * d_b;
    let rank = rng.random_range(1..=d);
    let rho = matrix::random_density(rng, d, rank);
    let noise: f64 = rng.random_range(0.0..1.0);
    let noise = noise * noise;
    rho * c(1.0 - noise, 0.0) + matrix::identity(d) * c(noise / d as f64, 0.0)
}

/// A random state with positive partial transpose, kept away from the boundary.
pub fn random_ppt_state(rng: &mut ChaCha8Rng, d_a: usize, d_b: usize, tol: &Tolerances) -> Result<CMatrix> {
    let d = (d_a * d_b) as f64;
    let rho = random_state(rng, d_a, d_b);
    let lambda = matrix::min_eigenvalue(&partial_transpose(&rho, d_a, d_b)?, tol)?;
    if lambda >= 0.05 / d {
        return Ok(rho);
    }
    // the partial transpose of p rho + (1 - p) 1/d has minimum eigenvalue p lambda + (1 - p)/d
    let p = 0.9 * (1.0 / d - 0.05 / d) / (1.0 / d - lambda);
    Ok(matrix::hermitian_part(&(rho * c(p, 0.0) + matrix::identity(d_a * d_b) * c((1.0 - p) / d, 0.0))))
}

/// A random state whose partial transpose has an eigenvalue below `-1e-3`.
pub fn random_npt_state(rng: &mut ChaCha8Rng, d_a: usize, d_b: usize, tol: &Tolerances) -> Result<CMatrix> {
    let d = d_a * d_b;
    loop {
        let rank = rng.random_range(1..=2);
        let rho = matrix::random_density(rng, d, rank);
        let noise: f64 = rng.random_range(0.0..0.3);
        let rho = rho * c(1.0 - noise, 0.0) + matrix::identity(d) * c(noise / d as f64, 0.0);
        if matrix::min_eigenvalue(&partial_transpose(&rho, d_a, d_b)?, tol)? < -1e-3 {
            return Ok(matrix::hermitian_part(&rho));
        }
    }
}

/// A random pure state on `C^d ⊗ C^d` with exactly `rank` Schmidt coefficients, all at least `0.05 / sqrt(d)`.
pub fn random_schmidt_state(rng: &mut ChaCha8Rng, d: usize, rank: usize) -> Vector {
    loop {
        let g = matrix::gaussian_matrix(rng, d, rank) * matrix::gaussian_matrix(rng, rank, d);
        let s = matrix::svd(&g);
        let norm = g.norm();
        let smallest = s.singular_values.get(rank - 1).copied().unwrap_or(0.0) / norm;
        if smallest >= 0.05 / (d as f64).sqrt() {
            // row-major reshape: psi[i * d + j] = G[i, j]
            return Vector::from_fn(d * d, |k, _| g[(k / d, k % d)] / c(norm, 0.0));
        }
    }
}

/// One recorded check inside a trial.
#[derive(Clone, Debug)]
struct Check {
    property: &'static str,
    passed: bool,
    excluded: bool,
    margin: f64,
}

/// What one trial saw: checks plus the states it touched, for the chain audit.
#[derive(Default)]
pub struct Recorder {
    checks: Vec<Check>,
    touched: Vec<(BipartiteSystem, State)>,
}

impl Recorder {
    fn check(&mut self, property: &'static str, passed: bool, margin: f64) {
        self.checks.push(Check { property, passed, excluded: false, margin });
    }

    fn exclude(&mut self, property: &'static str, margin: f64) {
        self.checks.push(Check { property, passed: true, excluded: true, margin });
    }

    fn touch(&mut self, sys: &BipartiteSystem, state: &State) {
        self.touched.push((sys.clone(), state.clone()));
    }
}

type TrialFn = fn(u64, &mut Recorder, &Tolerances) -> Result<()>;

pub struct SuiteDef {
    pub name: &'static str,
    pub summary: &'static str,
    pub default_trials: usize,
    pub properties: &'static [&'static str],
    run: TrialFn,
}

const COMPLETES: &str = "trial completes";
const CHAIN: &str = "implication chain";

pub static SUITES: &[SuiteDef] = &[
    SuiteDef {
        name: "kernel-oracle",
        summary: "kernel verdict equals partial-transpose verdict at 2x2, 2x3, 3x3",
        default_trials: 200,
        properties: &["verdicts agree 2x2", "verdicts agree 2x3", "verdicts agree 3x3"],
        run: trial_kernel_oracle,
    },
    SuiteDef {
        name: "separable-ppt",
        summary: "certified separable states are ppt",
        default_trials: 100,
        properties: &["separable state is ppt"],
        run: trial_separable_ppt,
    },
    SuiteDef {
        name: "ppt-inequality",
        summary: "|omega(sum A B)|^2 is bounded by the family sum on ppt states",
        default_trials: 100,
        properties: &["inequality holds"],
        run: trial_ppt_inequality,
    },
    SuiteDef {
        name: "polarized-psd",
        summary: "polarized matrices are positive, and so are their transposes on ppt states",
        default_trials: 100,
        properties: &["polarized matrix psd", "transpose psd on ppt state"],
        run: trial_polarized,
    },
    SuiteDef {
        name: "tensor-closure",
        summary: "the composite of two ppt 2x2 states is ppt",
        default_trials: 50,
        properties: &["composite is ppt", "composite certificate kept"],
        run: trial_tensor_closure,
    },
    SuiteDef {
        name: "separable-chsh",
        summary: "certified separable states satisfy the CHSH bound",
        default_trials: 100,
        properties: &["see-saw beta <= 2"],
        run: trial_separable_chsh,
    },
    SuiteDef {
        name: "superoperator-ppt",
        summary: "random separable superoperators map ppt states to ppt states",
        default_trials: 50,
        properties: &["output is ppt"],
        run: trial_superoperator,
    },
    SuiteDef {
        name: "witness-protocol",
        summary: "a two-term witness on an npt 2x2 state yields a qubit functional with negative partial transpose",
        default_trials: 100,
        properties: &["witness found", "protocol output npt", "swap cross-check"],
        run: trial_witness_protocol,
    },
    SuiteDef {
        name: "cyclic-distillation",
        summary: "full-Schmidt-rank pure states distill a singlet; deficient ones are rejected as not cyclic",
        default_trials: 50,
        properties: &["selection residual 2x2", "singlet projector 2x2", "selection residual 3x3", "singlet projector 3x3", "deficient state rejected"],
        run: trial_cyclic,
    },
];

pub fn find_suite(name: &str) -> Result<&'static SuiteDef> {
    SUITES.iter().find(|s| s.name == name).ok_or_else(|| Error::UnknownSuite(name.to_string()))
}

/// The suites selected by `name`; `all` selects every suite.
pub fn select_suites(name: &str) -> Result<Vec<&'static SuiteDef>> {
    if name == "all" {
        Ok(SUITES.iter().collect())
    } else {
        Ok(vec![find_suite(name)?])
    }
}

fn tensor_ppt(sys: &BipartiteSystem, st: &State, rec: &mut Recorder, property: &'static str, tol: &Tolerances) -> Result<()> {
    let r = is_ppt(sys, st, tol)?;
    let margin = r.min_eig / r.scale.max(f64::MIN_POSITIVE);
    rec.check(property, r.verdict.is_ppt(), margin);
    Ok(())
}

fn trial_kernel_oracle(seed: u64, rec: &mut Recorder, tol: &Tolerances) -> Result<()> {
    for (k, (d_a, d_b)) in [(2, 2), (2, 3), (3, 3)].into_iter().enumerate() {
        let mut rng = stream_rng(seed, k as u64);
        let sys = BipartiteSystem::tensor(d_a, d_b);
        let st = State::new(random_state(&mut rng, d_a, d_b), tol)?;
        let r = compare_kernel_with_pt(&sys, &st, tol)?;
        let property = ["verdicts agree 2x2", "verdicts agree 2x3", "verdicts agree 3x3"][k];
        let margin = (r.kernel.min_eig / r.kernel.scale).abs().min((r.partial_transpose.min_eig / r.partial_transpose.scale).abs());
        if r.marginal(tol) {
            rec.exclude(property, margin);
        } else {
            rec.check(property, r.agrees, margin);
        }
        rec.touch(&sys, &st);
    }
    Ok(())
}

fn dims_for(seed: u64) -> (usize, usize) {
    [(2, 2), (2, 3), (3, 2), (3, 3)][(seed % 4) as usize]
}

fn trial_separable_ppt(seed: u64, rec: &mut Recorder, tol: &Tolerances) -> Result<()> {
    let (d_a, d_b) = dims_for(seed);
    let sys = BipartiteSystem::tensor(d_a, d_b);
    let st = random_separable(&sys, 1 + (seed / 4 % 6) as usize, seed)?;
    tensor_ppt(&sys, &st, rec, "separable state is ppt", tol)?;
    rec.touch(&sys, &st);
    Ok(())
}

fn trial_separable_chsh(seed: u64, rec: &mut Recorder, tol: &Tolerances) -> Result<()> {
    let (d_a, d_b) = dims_for(seed);
    let sys = BipartiteSystem::tensor(d_a, d_b);
    let st = random_separable(&sys, 1 + (seed / 4 % 6) as usize, seed)?;
    let r = beta_seesaw(&sys, &st, &SeesawConfig { seed, ..Default::default() }, tol)?;
    let margin = 2.0 + CHSH_SLACK - r.beta;
    rec.check("see-saw beta <= 2", margin >= 0.0, margin);
    rec.touch(&sys, &st);
    Ok(())
}

fn random_family(rng: &mut ChaCha8Rng, sys: &BipartiteSystem, alice: bool, n: usize) -> Vec<CMatrix> {
    let alg = if alice { sys.alice() } else { sys.bob() };
    (0..n)
        .map(|_| {
            let v = matrix::gaussian_matrix(rng, alg.len(), 1).column(0).into_owned();
            let m = alg.from_coefficients(&v);
            let norm = matrix::operator_norm(&m);
            m / c(norm, 0.0)
        })
        .collect()
}

fn trial_ppt_inequality(seed: u64, rec: &mut Recorder, tol: &Tolerances) -> Result<()> {
    let mut rng = stream_rng(seed, 0);
    let (d_a, d_b) = dims_for(seed);
    let sys = BipartiteSystem::tensor(d_a, d_b);
    let st = State::new(random_ppt_state(&mut rng, d_a, d_b, tol)?, tol)?;
    let n = rng.random_range(1..=4);
    let alice = random_family(&mut rng, &sys, true, n);
    let bob = random_family(&mut rng, &sys, false, n);
    let r = ppt_inequality_check(&sys, &st, &alice, &bob, tol)?;
    rec.check("inequality holds", r.holds, (r.rhs - r.lhs) / r.scale);
    rec.touch(&sys, &st);
    Ok(())
}

fn trial_polarized(seed: u64, rec: &mut Recorder, tol: &Tolerances) -> Result<()> {
    let mut rng = stream_rng(seed, 0);
    let (d_a, d_b) = dims_for(seed);
    let sys = BipartiteSystem::tensor(d_a, d_b);
    let ppt_state = seed % 2 == 0;
    let rho = if ppt_state { random_ppt_state(&mut rng, d_a, d_b, tol)? } else { random_state(&mut rng, d_a, d_b) };
    let st = State::new(rho, tol)?;
    let n = rng.random_range(1..=3);
    let m = rng.random_range(1..=3);
    let alice = random_family(&mut rng, &sys, true, n);
    let bob = random_family(&mut rng, &sys, false, m);
    let x = polarized_matrix(&sys, &st, &alice, &bob, tol)?;
    let pc = psd_check(&x, tol)?;
    rec.check("polarized matrix psd", pc.positive, pc.min_eig / pc.scale.max(f64::MIN_POSITIVE));
    if ppt_state {
        let tc = psd_check(&polarized_transpose(&x, n, m), tol)?;
        rec.check("transpose psd on ppt state", tc.positive, tc.min_eig / tc.scale.max(f64::MIN_POSITIVE));
    }
    rec.touch(&sys, &st);
    Ok(())
}

fn trial_tensor_closure(seed: u64, rec: &mut Recorder, tol: &Tolerances) -> Result<()> {
    let mut rng = stream_rng(seed, 0);
    let sys = BipartiteSystem::tensor(2, 2);
    let mut parts = Vec::new();
    for k in 0..2 {
        // every third trial composes with a certified separable factor
        let st = if seed % 3 == 0 && k == 1 {
            random_separable(&sys, 3, seed)?
        } else {
            State::new(random_ppt_state(&mut rng, 2, 2, tol)?, tol)?
        };
        rec.touch(&sys, &st);
        parts.push((sys.clone(), st));
    }
    let joint = compose(&parts, tol, DEFAULT_SIZE_LIMIT)?;
    tensor_ppt(&joint.system, &joint.state, rec, "composite is ppt", tol)?;
    let certified = parts.iter().all(|(_, s)| s.is_certified_separable());
    rec.check("composite certificate kept", joint.state.is_certified_separable() == certified, 0.0);
    rec.touch(&joint.system, &joint.state);
    Ok(())
}

fn trial_superoperator(seed: u64, rec: &mut Recorder, tol: &Tolerances) -> Result<()> {
    let mut rng = stream_rng(seed, 0);
    let sys = BipartiteSystem::tensor(2, 2);
    let st = State::new(random_ppt_state(&mut rng, 2, 2, tol)?, tol)?;
    let outcomes = 1 + (seed % 3) as usize;
    let op = SeparableSuperoperator::random(&sys, 2, 2, outcomes, seed, tol)?;
    let (out_sys, out) = apply_superoperator(&op, &sys, &st, tol)?;
    tensor_ppt(&out_sys, &out, rec, "output is ppt", tol)?;
    rec.touch(&sys, &st);
    rec.touch(&out_sys, &out);
    Ok(())
}

fn trial_witness_protocol(seed: u64, rec: &mut Recorder, tol: &Tolerances) -> Result<()> {
    let mut rng = stream_rng(seed, 0);
    let sys = BipartiteSystem::tensor(2, 2);
    let st = State::new(random_npt_state(&mut rng, 2, 2, tol)?, tol)?;
    rec.touch(&sys, &st);
    let search = npt_witness_search_k2(&sys, &st, &SearchBudget { seed, ..Default::default() }, tol)?;
    let Some(w) = search.witness else {
        rec.check("witness found", false, search.best_value);
        return Ok(());
    };
    rec.check("witness found", w.value < -1e-8, -w.value);
    let (t, s) = witness_to_choi(&sys, &w.alice, &w.bob, tol)?;
    let omega2 = two_qubit_reduction(&sys, &st, &t, &s, tol)?;
    let pt = matrix::min_eigenvalue(&partial_transpose(&omega2, 2, 2)?, tol)?;
    rec.check("protocol output npt", pt < 0.0, -pt);
    let gap = (swap_expectation(&omega2, 2).re - w.value).abs();
    rec.check("swap cross-check", gap <= 1e-9, 1e-9 - gap);
    let trace = omega2.trace().re;
    if trace > tol.psd {
        let normalized = State::new(matrix::hermitian_part(&(omega2 / c(trace, 0.0))), tol)?;
        rec.touch(&BipartiteSystem::tensor(2, 2), &normalized);
    }
    Ok(())
}

fn trial_cyclic(seed: u64, rec: &mut Recorder, tol: &Tolerances) -> Result<()> {
    let singlet = crate::bipartite::singlet();
    let projector = &singlet * singlet.adjoint();
    for (k, d) in [2usize, 3].into_iter().enumerate() {
        let mut rng = stream_rng(seed, k as u64);
        let psi = random_schmidt_state(&mut rng, d, d);
        let sys = BipartiteSystem::tensor(d, d);
        let plan = distill_from_cyclic(&sys, &psi, seed, tol)?;
        let (residual_name, projector_name) = if d == 2 {
            ("selection residual 2x2", "singlet projector 2x2")
        } else {
            ("selection residual 3x3", "singlet projector 3x3")
        };
        rec.check(residual_name, plan.residual <= 1e-9, 1e-9 - plan.residual);
        let trace = plan.omega2.trace().re;
        let distance = (&plan.omega2 / c(trace, 0.0) - &projector).norm();
        rec.check(projector_name, distance <= 1e-8, 1e-8 - distance);
        rec.touch(&sys, &State::pure(&psi, tol)?);
        rec.touch(&BipartiteSystem::tensor(2, 2), &State::new(matrix::hermitian_part(&(&plan.omega2 / c(trace, 0.0))), tol)?);
    }
    let mut rng = stream_rng(seed, 2);
    let d = 2 + (seed % 2) as usize;
    let rank = rng.random_range(1..d);
    let psi = random_schmidt_state(&mut rng, d, rank);
    let sys = BipartiteSystem::tensor(d, d);
    let rejected = matches!(distill_from_cyclic(&sys, &psi, seed, tol), Err(Error::NotCyclic { .. }));
    rec.check("deficient state rejected", rejected, 0.0);
    rec.touch(&sys, &State::pure(&psi, tol)?);
    Ok(())
}

/// Chain violations among the verdicts of a full classification.
pub fn audit_state(sys: &BipartiteSystem, state: &State, cfg: &AnalysisConfig) -> Result<Vec<String>> {
    Ok(classify_state(sys, state, cfg, None)?.chain_violations)
}

#[derive(Clone, Debug, Serialize)]
pub struct PropertyOutcome {
    pub property: String,
    pub checked: usize,
    pub passed: usize,
    /// Cases inside the tolerance band, not counted either way.
    pub excluded: usize,
    /// Smallest margin seen; negative margins mean the property failed.
    pub worst_margin: Option<f64>,
    pub failing_seeds: Vec<u64>,
}

impl PropertyOutcome {
    pub fn ok(&self) -> bool {
        self.passed == self.checked
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteOutcome {
    pub suite: String,
    pub trials: usize,
    pub properties: Vec<PropertyOutcome>,
    /// `(trial seed, message)` for trials that returned an error.
    pub errors: Vec<(u64, String)>,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.errors.is_empty() && self.properties.iter().all(PropertyOutcome::ok)
    }

    pub fn property(&self, name: &str) -> Option<&PropertyOutcome> {
        self.properties.iter().find(|p| p.property == name)
    }
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Overrides every suite's default trial count.
    pub trials: Option<usize>,
    pub tol: Tolerances,
    /// Classify every touched state with all criteria and count implication-chain violations.
    pub audit: Option<AnalysisConfig>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { seed: 0, trials: None, tol: Tolerances::default(), audit: None }
    }
}

struct TrialResult {
    seed: u64,
    checks: Vec<Check>,
    chain: Option<std::result::Result<Vec<String>, String>>,
    error: Option<String>,
}

pub fn run_suite(def: &SuiteDef, opts: &VerifyOptions) -> SuiteOutcome {
    let trials = opts.trials.unwrap_or(def.default_trials);
    let results: Vec<TrialResult> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let seed = opts.seed.wrapping_add(i as u64);
            let mut rec = Recorder::default();
            let error = (def.run)(seed, &mut rec, &opts.tol).err().map(|e| e.to_string());
            let chain = opts.audit.as_ref().map(|cfg| {
                let mut all = Vec::new();
                for (sys, st) in &rec.touched {
                    all.extend(audit_state(sys, st, &cfg.clone().with_seed(seed)).map_err(|e| e.to_string())?);
                }
                Ok(all)
            });
            TrialResult { seed, checks: rec.checks, chain, error }
        })
        .collect();

    let mut names: Vec<&str> = def.properties.to_vec();
    names.push(COMPLETES);
    if opts.audit.is_some() {
        names.push(CHAIN);
    }
    let mut properties: Vec<PropertyOutcome> = names
        .iter()
        .map(|p| PropertyOutcome { property: p.to_string(), checked: 0, passed: 0, excluded: 0, worst_margin: None, failing_seeds: Vec::new() })
        .collect();
    let index = |name: &str| names.iter().position(|n| *n == name).expect("declared property");
    let mut errors = Vec::new();
    for t in &results {
        for ch in &t.checks {
            let p = &mut properties[index(ch.property)];
            if ch.excluded {
                p.excluded += 1;
                continue;
            }
            p.checked += 1;
            p.worst_margin = Some(p.worst_margin.map_or(ch.margin, |w| w.min(ch.margin)));
            if ch.passed {
                p.passed += 1;
            } else if p.failing_seeds.last() != Some(&t.seed) {
                p.failing_seeds.push(t.seed);
            }
        }
        let done = &mut properties[index(COMPLETES)];
        done.checked += 1;
        match &t.error {
            None => done.passed += 1,
            Some(msg) => {
                done.failing_seeds.push(t.seed);
                errors.push((t.seed, msg.clone()));
            }
        }
        if let Some(chain) = &t.chain {
            let p = &mut properties[index(CHAIN)];
            p.checked += 1;
            match chain {
                Ok(v) if v.is_empty() => p.passed += 1,
                Ok(v) => {
                    p.failing_seeds.push(t.seed);
                    errors.push((t.seed, v.join("; ")));
                }
                Err(msg) => {
                    p.failing_seeds.push(t.seed);
                    errors.push((t.seed, format!("chain audit: {msg}")));
                }
            }
        }
    }
    SuiteOutcome { suite: def.name.to_string(), trials, properties, errors }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifySummary {
    pub seed: u64,
    pub suites: Vec<SuiteOutcome>,
}

impl VerifySummary {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(SuiteOutcome::passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "seed {}", self.seed);
        for s in &self.suites {
            let _ = writeln!(out, "{} ({} trials): {}", s.suite, s.trials, if s.passed() { "pass" } else { "FAIL" });
            for p in &s.properties {
                let _ = write!(out, "  {:<32} {:>4}/{:<4}", p.property, p.passed, p.checked);
                if p.excluded > 0 {
                    let _ = write!(out, " excluded {}", p.excluded);
                }
                if let Some(w) = p.worst_margin {
                    let _ = write!(out, " worst margin {w:.3e}");
                }
                if !p.failing_seeds.is_empty() {
                    let seeds: Vec<String> = p.failing_seeds.iter().map(u64::to_string).collect();
                    let _ = write!(out, " failing seeds {}", seeds.join(","));
                }
                let trimmed = out.trim_end().len();
                out.truncate(trimmed);
                out.push('\n');
            }
            for (seed, msg) in &s.errors {
                let _ = writeln!(out, "  seed {seed}: {msg}");
            }
        }
        out
    }
}

/// Runs the named suite (or `all`).
pub fn verify(name: &str, opts: &VerifyOptions) -> Result<VerifySummary> {
    let suites = select_suites(name)?;
    Ok(VerifySummary { seed: opts.seed, suites: suites.into_iter().map(|d| run_suite(d, opts)).collect() })
}
