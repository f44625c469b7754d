//! Scan the Werner family with the kernel test and compare with the partial transpose.

use entangle::bipartite::{werner, BipartiteSystem, State};
use entangle::matrix::Tolerances;
use entangle::ppt::{compare_kernel_with_pt, is_ppt};

fn main() -> entangle::Result<()> {
    let tol = Tolerances::default();
    let sys = BipartiteSystem::tensor(2, 2);
    println!("{:>5} {:>8} {:>14} {:>14}", "p", "verdict", "kernel min", "PT min");
    for k in 0..=10 {
        let p = k as f64 / 10.0;
        let st = State::new(werner(p), &tol)?;
        let r = compare_kernel_with_pt(&sys, &st, &tol)?;
        let verdict = if r.kernel.positive { "ppt" } else { "npt" };
        println!("{p:>5.2} {verdict:>8} {:>14.6e} {:>14.6e}", r.kernel.min_eig, r.partial_transpose.min_eig);
    }

    let report = is_ppt(&sys, &State::new(werner(0.8), &tol)?, &tol)?;
    if let Some(w) = report.witness {
        println!("p = 0.8: witness with {} terms, family sum {:.6}", w.k(), w.value);
    }
    Ok(())
}
