//! Compose bipartite systems and push states through separable operations.

use entangle::bipartite::{compose, random_separable, werner, BipartiteSystem, State, DEFAULT_SIZE_LIMIT};
use entangle::distill::{apply_superoperator, SeparableSuperoperator};
use entangle::matrix::Tolerances;
use entangle::ppt::is_ppt;

fn main() -> entangle::Result<()> {
    let tol = Tolerances::default();
    let sys = BipartiteSystem::tensor(2, 2);
    let bound = State::new(werner(0.3), &tol)?;
    let sep = random_separable(&sys, 3, 9)?;

    let joint = compose(&[(sys.clone(), bound.clone()), (sys.clone(), sep)], &tol, DEFAULT_SIZE_LIMIT)?;
    let (d_a, d_b) = joint.system.tensor_dims().expect("tensor inputs give a tensor composite");
    let r = is_ppt(&joint.system, &joint.state, &tol)?;
    println!("composite {d_a}x{d_b}: {:?}, kernel min eig {:.3e}", r.verdict, r.min_eig);

    let pair = compose(&[(sys.clone(), bound.clone()), (sys.clone(), bound.clone())], &tol, DEFAULT_SIZE_LIMIT)?;
    println!("two copies of werner(0.3): {:?}", is_ppt(&pair.system, &pair.state, &tol)?.verdict);

    for seed in 0..3 {
        let op = SeparableSuperoperator::random(&sys, 2, 2, 2, seed, &tol)?;
        let (out_sys, out) = apply_superoperator(&op, &sys, &bound, &tol)?;
        let r = is_ppt(&out_sys, &out, &tol)?;
        println!("operation {seed}: normalization {:.1e}, output {:?}", op.normalization_error(), r.verdict);
    }
    Ok(())
}
