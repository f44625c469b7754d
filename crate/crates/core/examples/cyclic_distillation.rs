//! Distill a singlet from a cyclic vector, serialize the plan and replay it.

use entangle::bipartite::BipartiteSystem;
use entangle::distill::{distill_from_cyclic, replay, DistillationPlan};
use entangle::matrix::{stream_rng, Tolerances};
use entangle::verify::random_schmidt_state;

fn main() -> entangle::Result<()> {
    let tol = Tolerances::default();
    let sys = BipartiteSystem::tensor(3, 3);
    let psi = random_schmidt_state(&mut stream_rng(42, 0), 3, 3);
    let plan = distill_from_cyclic(&sys, &psi, 42, &tol)?;
    println!("selection residual   {:.2e}", plan.residual);
    println!("success probability  {:.6}", plan.success_probability);
    println!("singlet fidelity     {:.12}", plan.singlet_fidelity);
    println!("output PT min eig    {:.6e}", plan.pt_min_eig);

    let json = serde_json::to_string(&plan).expect("plan serializes");
    let back: DistillationPlan = serde_json::from_str(&json).expect("plan parses");
    let report = replay(&back, &tol)?;
    println!("replay: {} checks, all passed: {}", report.checks.len(), report.passed());

    // a rank-two Schmidt vector is not cyclic for Alice's algebra
    let deficient = random_schmidt_state(&mut stream_rng(42, 1), 3, 2);
    match distill_from_cyclic(&sys, &deficient, 42, &tol) {
        Err(e) => println!("deficient state: {e}"),
        Ok(_) => println!("deficient state unexpectedly distilled"),
    }
    Ok(())
}
