//! Entanglement between two sites of a transverse-field Ising chain as their distance grows.

use entangle::lattice::{run_chain, Boundary, ChainConfig, StateChoice};
use entangle::report::AnalysisConfig;

fn main() -> entangle::Result<()> {
    let sweep = ChainConfig {
        sites: vec![8],
        coupling: 1.0,
        fields: vec![0.5, 1.0, 2.0],
        boundary: Boundary::Open,
        regions: ["3/4", "3/5", "2/5", "1/6"].iter().map(|r| r.parse()).collect::<Result<_, _>>()?,
        states: vec![StateChoice::Ground, StateChoice::Gibbs(1.0)],
        size_limit: 4096,
    };
    let cfg = AnalysisConfig::default();
    println!("{:>4} {:>7} {:>8} {:>4} {:>11} {:>10}", "g", "regions", "state", "gap", "margin", "distill");
    run_chain(&sweep, &cfg, |row| match &row.result {
        Some(r) => {
            let ppt = r.report.ppt.as_ref().expect("ppt ran");
            let distill = r.report.one_distillable.as_ref().expect("distill ran");
            println!(
                "{:>4} {:>7} {:>8} {:>4} {:>11.3e} {:>10}",
                row.field,
                row.regions.to_string(),
                row.state.to_string(),
                r.gap,
                ppt.margin,
                format!("{:?}", distill.verdict).to_lowercase()
            );
        }
        None => println!("{:>4} {:>7} error {:?}", row.field, row.regions.to_string(), row.error),
    })?;
    Ok(())
}
