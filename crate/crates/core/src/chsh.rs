//! Bell-CHSH values and a see-saw lower bound on their maximum.
//!
//! The CHSH expression is `omega(A(B' + B) + A'(B' - B))` for hermitian
//! observables of norm at most one, `A, A'` from Alice's algebra and `B, B'`
//! from Bob's. Its supremum is at most `2 sqrt 2` for every state and at most
//! 2 for ppt states.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bipartite::{BipartiteSystem, State};
use crate::error::{Error, Result};
use crate::matrix::{self, commutator, identity, operator_norm, CMatrix, Tolerances};
use crate::star_algebra::StarAlgebra;

pub const TSIRELSON: f64 = 2.0 * std::f64::consts::SQRT_2;

/// The four observables `(A, A', B, B')`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Observables {
    #[serde(with = "crate::serial::matrix")]
    pub a: CMatrix,
    #[serde(with = "crate::serial::matrix")]
    pub a_prime: CMatrix,
    #[serde(with = "crate::serial::matrix")]
    pub b: CMatrix,
    #[serde(with = "crate::serial::matrix")]
    pub b_prime: CMatrix,
}

impl Observables {
    pub fn identities(d: usize) -> Self {
        let one = identity(d);
        Observables { a: one.clone(), a_prime: one.clone(), b: one.clone(), b_prime: one }
    }

    /// `A(B' + B) + A'(B' - B)`.
    pub fn operator(&self) -> CMatrix {
        &self.a * (&self.b_prime + &self.b) + &self.a_prime * (&self.b_prime - &self.b)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChshResult {
    /// Best CHSH value found: a lower bound on the supremum.
    pub beta: f64,
    pub observables: Observables,
    /// Conditional-expectation residuals of `A, A', B, B'` onto their algebras.
    pub residuals: [f64; 4],
    /// See-saw sweeps performed by the winning restart.
    pub iterations: usize,
    pub restarts_used: usize,
    pub best_restart: usize,
    /// Smallest objective change over any single update of any restart; never below `-1e-10`.
    pub min_step: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeesawConfig {
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for SeesawConfig {
    fn default() -> Self {
        SeesawConfig { restarts: 20, max_iter: 500, seed: 0 }
    }
}

fn check_observable(alg: &StarAlgebra, m: &CMatrix, what: &str, tol: &Tolerances) -> Result<f64> {
    if m.shape() != (alg.ambient_dim(), alg.ambient_dim()) {
        return Err(Error::DimensionMismatch(format!("observable {what} has the wrong shape")));
    }
    if !matrix::is_hermitian(m, tol) {
        return Err(Error::NotHermitian {
            asymmetry: matrix::hermitian_asymmetry(m),
            bound: tol.hermitian,
        });
    }
    let norm = operator_norm(m);
    if norm > 1.0 + tol.eig {
        return Err(Error::NormExceeded { what: what.to_string(), norm });
    }
    let residual = alg.membership_residual(m)?;
    if residual > tol.rank * m.norm().max(1.0) {
        return Err(Error::NotInAlgebra { what: what.to_string(), residual });
    }
    Ok(residual)
}

fn validate(sys: &BipartiteSystem, obs: &Observables, tol: &Tolerances) -> Result<[f64; 4]> {
    Ok([
        check_observable(sys.alice(), &obs.a, "A", tol)?,
        check_observable(sys.alice(), &obs.a_prime, "A'", tol)?,
        check_observable(sys.bob(), &obs.b, "B", tol)?,
        check_observable(sys.bob(), &obs.b_prime, "B'", tol)?,
    ])
}

/// The signed CHSH value; the observables are validated first.
pub fn chsh_value(sys: &BipartiteSystem, state: &State, obs: &Observables, tol: &Tolerances) -> Result<f64> {
    validate(sys, obs, tol)?;
    Ok(raw_value(state, obs))
}

fn raw_value(state: &State, obs: &Observables) -> f64 {
    state.expect(&obs.operator()).re
}

/// The hermitian element of `alg` with norm at most one maximizing `Re Tr(W A)`.
///
/// `A = sign(H)` with `H` the hermitian part of `E(W†)†`, where `E` projects
/// onto the algebra; the final projection removes the `+1` that `sign(0)`
/// would otherwise put outside the support of a non-unital algebra.
pub fn optimal_dichotomic(alg: &StarAlgebra, w: &CMatrix, tol: &Tolerances) -> Result<CMatrix> {
    let v = alg.conditional_expectation(&w.adjoint())?.adjoint();
    let h = matrix::hermitian_part(&v);
    let s = matrix::sign_hermitian(&h, tol)?;
    Ok(matrix::hermitian_part(&alg.conditional_expectation(&s)?))
}

fn random_dichotomic(alg: &StarAlgebra, rng: &mut rand_chacha::ChaCha8Rng, tol: &Tolerances) -> Result<CMatrix> {
    let h = alg.conditional_expectation(&matrix::random_hermitian(rng, alg.ambient_dim()))?;
    let s = matrix::sign_hermitian(&matrix::hermitian_part(&h), tol)?;
    Ok(matrix::hermitian_part(&alg.conditional_expectation(&s)?))
}

struct Run {
    value: f64,
    obs: Observables,
    iterations: usize,
    min_step: f64,
}

fn seesaw_run(sys: &BipartiteSystem, state: &State, start: Observables, max_iter: usize, tol: &Tolerances) -> Result<Run> {
    let rho = state.density();
    let mut obs = start;
    let mut value = raw_value(state, &obs);
    let mut min_step = f64::INFINITY;
    let mut iterations = 0;
    let step = |obs: &Observables, value: &mut f64, min_step: &mut f64| -> Result<()> {
        let next = raw_value(state, obs);
        let delta = next - *value;
        if delta < -1e-10 * (1.0 + value.abs()) {
            return Err(Error::InvariantViolation(format!("see-saw objective decreased by {:.3e}", -delta)));
        }
        *min_step = min_step.min(delta);
        *value = next;
        Ok(())
    };
    for _ in 0..max_iter.max(1) {
        iterations += 1;
        let before = value;
        obs.a = optimal_dichotomic(sys.alice(), &((&obs.b_prime + &obs.b) * rho), tol)?;
        step(&obs, &mut value, &mut min_step)?;
        obs.a_prime = optimal_dichotomic(sys.alice(), &((&obs.b_prime - &obs.b) * rho), tol)?;
        step(&obs, &mut value, &mut min_step)?;
        obs.b = optimal_dichotomic(sys.bob(), &(rho * (&obs.a - &obs.a_prime)), tol)?;
        step(&obs, &mut value, &mut min_step)?;
        obs.b_prime = optimal_dichotomic(sys.bob(), &(rho * (&obs.a + &obs.a_prime)), tol)?;
        step(&obs, &mut value, &mut min_step)?;
        if (value - before).abs() < 1e-11 * value.abs().max(1.0) {
            break;
        }
    }
    Ok(Run { value, obs, iterations, min_step })
}

/// See-saw maximization of the CHSH value over dichotomic observables.
///
/// Restart 0 starts from four identities; the others from seeded random
/// dichotomic observables inside the algebras. The result is a lower bound.
pub fn beta_seesaw(sys: &BipartiteSystem, state: &State, cfg: &SeesawConfig, tol: &Tolerances) -> Result<ChshResult> {
    if state.dim() != sys.dim() {
        return Err(Error::DimensionMismatch(format!("state has dimension {}, system {}", state.dim(), sys.dim())));
    }
    let restarts = cfg.restarts.max(1);
    let runs: Vec<Result<Run>> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let start = if r == 0 {
                Observables::identities(sys.dim())
            } else {
                let mut rng = matrix::stream_rng(cfg.seed, r as u64);
                Observables {
                    a: random_dichotomic(sys.alice(), &mut rng, tol)?,
                    a_prime: random_dichotomic(sys.alice(), &mut rng, tol)?,
                    b: random_dichotomic(sys.bob(), &mut rng, tol)?,
                    b_prime: random_dichotomic(sys.bob(), &mut rng, tol)?,
                }
            };
            seesaw_run(sys, state, start, cfg.max_iter, tol)
        })
        .collect();
    let mut best: Option<(usize, Run)> = None;
    let mut min_step = f64::INFINITY;
    for (r, run) in runs.into_iter().enumerate() {
        let run = run?;
        min_step = min_step.min(run.min_step);
        if best.as_ref().is_none_or(|(_, b)| run.value > b.value) {
            best = Some((r, run));
        }
    }
    let (best_restart, run) = best.expect("at least one restart");
    let residuals = validate(sys, &run.obs, tol)?;
    let beta = raw_value(state, &run.obs);
    if beta > TSIRELSON + 1e-8 {
        return Err(Error::InvariantViolation(format!("CHSH value {beta} exceeds 2 sqrt 2")));
    }
    Ok(ChshResult {
        beta,
        observables: run.obs,
        residuals,
        iterations: run.iterations,
        restarts_used: restarts,
        best_restart,
        min_step,
    })
}

/// Both sides of `omega(C^2) = 4 + omega([A,A'][B,B'])` for dichotomic observables.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SquareIdentity {
    pub value: f64,
    pub square: f64,
    pub commutator_form: f64,
}

impl SquareIdentity {
    pub fn holds(&self, eps: f64) -> bool {
        (self.square - self.commutator_form).abs() <= eps && self.value * self.value <= self.square + eps
    }
}

pub fn square_identity(state: &State, obs: &Observables) -> SquareIdentity {
    let cop = obs.operator();
    let square = state.expect(&(&cop * &cop)).re;
    let comm = commutator(&obs.a, &obs.a_prime) * commutator(&obs.b, &obs.b_prime);
    SquareIdentity { value: raw_value(state, obs), square, commutator_form: 4.0 + state.expect(&comm).re }
}
