//! Lower-bound the CHSH value by see-saw optimization.

use entangle::bipartite::{singlet, werner, BipartiteSystem, State};
use entangle::chsh::{beta_seesaw, square_identity, SeesawConfig};
use entangle::matrix::Tolerances;

fn main() -> entangle::Result<()> {
    let tol = Tolerances::default();
    let sys = BipartiteSystem::tensor(2, 2);
    let cfg = SeesawConfig { seed: 1, ..Default::default() };

    let st = State::pure(&singlet(), &tol)?;
    let r = beta_seesaw(&sys, &st, &cfg, &tol)?;
    println!("singlet: beta {:.9} (best restart {}, {} iterations)", r.beta, r.best_restart, r.iterations);
    let sq = square_identity(&st, &r.observables);
    println!("C^2 = 4 - [A,A'][B,B'] holds to {:.2e}", (sq.square - sq.commutator_form).abs());

    // violation starts at p = 1/sqrt(2) for Werner states
    for p in [0.5, 0.7, 0.72, 0.9] {
        let r = beta_seesaw(&sys, &State::new(werner(p), &tol)?, &cfg, &tol)?;
        println!("werner p = {p:.2}: beta {:.6}", r.beta);
    }
    Ok(())
}
