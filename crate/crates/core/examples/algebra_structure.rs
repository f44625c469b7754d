//! Build a *-algebra from generators and inspect its block structure.
//!
//! The algebra `M_2 ⊗ 1_2 ⊕ C` sits inside `M_5`; its commutant is
//! `1_2 ⊗ M_2 ⊕ C` and both share the two-dimensional center.

use entangle::matrix::{direct_sum, identity, kron, matrix_unit, Tolerances};
use entangle::star_algebra::{qubit_embedding, wedderburn_blocks, StarAlgebra};

fn main() -> entangle::Result<()> {
    let tol = Tolerances::default();
    let lift = |m| direct_sum(&kron(&m, &identity(2)), &entangle::CMatrix::zeros(1, 1));
    let generators = vec![lift(matrix_unit(2, 0, 1)), lift(matrix_unit(2, 0, 0))];
    let alg = StarAlgebra::generate(5, &generators, &tol)?;
    println!("algebra dimension      {}", alg.len());

    let commutant = alg.commutant(&tol)?;
    let center = alg.center(&tol)?;
    println!("commutant dimension    {}", commutant.len());
    println!("center dimension       {}", center.len());
    let bicommutant = commutant.commutant(&tol)?;
    println!("bicommutant distance   {:.2e}", alg.span_distance(&bicommutant));

    let blocks = wedderburn_blocks(&alg, 7, &tol)?;
    for (k, b) in blocks.blocks.iter().enumerate() {
        println!("block {k}: M_{} with multiplicity {}", b.size, b.multiplicity);
    }
    println!("matrix-unit relations  {:.2e}", blocks.unit_relation_error());

    let emb = qubit_embedding(&alg, 7, &tol)?;
    println!("qubit embedding error  {:.2e}", emb.relation_error());
    Ok(())
}
