//! Turn an npt witness into local qubit maps and a certified two-qubit output.

use entangle::bipartite::{BipartiteSystem, State};
use entangle::distill::{is_one_distillable, DistillVerdict};
use entangle::matrix::{basis_vector, c, identity, Tolerances, Vector};
use entangle::ppt::SearchBudget;

fn main() -> entangle::Result<()> {
    let tol = Tolerances::default();
    let sys = BipartiteSystem::tensor(3, 3);
    // (|00> + |11> + |22>)/sqrt 3 mixed with noise
    let mut psi = Vector::zeros(9);
    for k in 0..3 {
        psi += basis_vector(9, 4 * k);
    }
    let psi = psi / c(3f64.sqrt(), 0.0);
    let rho = &psi * psi.adjoint() * c(0.6, 0.0) + identity(9) * c(0.4 / 9.0, 0.0);
    let st = State::new(rho, &tol)?;

    let report = is_one_distillable(&sys, &st, &SearchBudget::default(), &tol)?;
    println!("search value {:.6e}", report.search_value);
    match (report.verdict, report.protocol) {
        (DistillVerdict::Certified, Some(p)) => {
            println!("certified: witness value {:.6}, swap expectation {:.6}", p.witness.value, p.swap_expectation);
            println!("two-qubit output partial transpose min eig {:.6e}", p.pt_min_eig);
            println!("alice map Choi rank {}", entangle::matrix::svd_rank(p.alice_map.choi(), &tol));
        }
        _ => println!("no witness found"),
    }
    Ok(())
}
