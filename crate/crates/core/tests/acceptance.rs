//! Release gate: every criterion runs at its stated tolerance and prints one line.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use entangle::bipartite::{partial_trace, singlet, werner, BipartiteSystem, State};
use entangle::chsh::{beta_seesaw, SeesawConfig, TSIRELSON};
use entangle::distill::DistillVerdict;
use entangle::lattice::{classify, Boundary, LocalModel, SpinChainSpec, StateChoice};
use entangle::matrix::{c, CMatrix, Tolerances, Vector};
use entangle::ppt::{is_ppt, partial_transpose, Verdict};
use entangle::report::{AnalysisConfig, CHSH_SLACK};
use entangle::verify::{audit_state, find_suite, run_suite, SuiteOutcome, VerifyOptions};

const ROOT_SEED: u64 = 20_240_601;

struct Gate {
    failures: usize,
}

impl Gate {
    fn record(&mut self, n: usize, passed: bool, what: &str, detail: String) {
        if !passed {
            self.failures += 1;
        }
        println!("[{}] {n} {what}: {detail}", if passed { "PASS" } else { "FAIL" });
    }
}

fn within(elapsed: Duration, limit_s: f64) -> (bool, String) {
    let s = elapsed.as_secs_f64();
    (s < limit_s, format!("{s:.2} s (limit {limit_s} s)"))
}

fn suite(name: &str, trials: usize, seed: u64) -> (SuiteOutcome, Duration) {
    let t = Instant::now();
    let out = run_suite(find_suite(name).expect("suite exists"), &VerifyOptions { seed, trials: Some(trials), ..Default::default() });
    (out, t.elapsed())
}

fn property_line(out: &SuiteOutcome) -> String {
    let mut parts = Vec::new();
    for p in &out.properties {
        let mut s = format!("{} {}/{}", p.property, p.passed, p.checked);
        if p.excluded > 0 {
            s += &format!(" ({} marginal excluded)", p.excluded);
        }
        if !p.failing_seeds.is_empty() {
            s += &format!(" failing seeds {:?}", p.failing_seeds);
        }
        parts.push(s);
    }
    for (seed, msg) in &out.errors {
        parts.push(format!("seed {seed}: {msg}"));
    }
    parts.join("; ")
}

/// CHSH value of the singlet for in-plane observables, from the closed-form correlator.
fn grid_oracle(n: usize) -> f64 {
    // <cos a Z + sin a X  ⊗  cos b Z + sin b X> on the singlet is -cos(a - b)
    let angles: Vec<f64> = (0..n).map(|k| std::f64::consts::PI * k as f64 / n as f64 * 2.0).collect();
    let e = |a: f64, b: f64| -(a - b).cos();
    let mut best = 0.0f64;
    for &a in &angles {
        for &a2 in &angles {
            for &b in &angles {
                for &b2 in &angles {
                    let v = e(a, b) + e(a, b2) + e(a2, b) - e(a2, b2);
                    best = best.max(v.abs());
                }
            }
        }
    }
    best
}

fn criterion_1(gate: &mut Gate) {
    let tol = Tolerances::default();
    let sys = BipartiteSystem::tensor(2, 2);
    let st = State::pure(&singlet(), &tol).unwrap();
    let t = Instant::now();
    let r = beta_seesaw(&sys, &st, &SeesawConfig { seed: ROOT_SEED, ..Default::default() }, &tol).unwrap();
    let (fast, time) = within(t.elapsed(), 1.0);
    let oracle = grid_oracle(8);
    let ok = (r.beta - 2.0 * 2f64.sqrt()).abs() <= 1e-6 && (oracle - r.beta).abs() <= 1e-6 && r.beta <= TSIRELSON + 1e-8;
    gate.record(1, ok && fast, "singlet see-saw reaches 2*sqrt(2)", format!("beta {:.9}, angle-grid oracle {oracle:.9}, {time}", r.beta));
}

fn criterion_2(gate: &mut Gate) {
    let (out, elapsed) = suite("kernel-oracle", 200, ROOT_SEED);
    let (fast, time) = within(elapsed, 60.0);
    gate.record(2, out.passed() && fast, "kernel verdict equals partial-transpose verdict (200 states each at 2x2, 2x3, 3x3)", format!("{}; {time}", property_line(&out)));
}

fn werner_bisection() -> (f64, Vec<f64>) {
    let tol = Tolerances::default();
    let sys = BipartiteSystem::tensor(2, 2);
    let ppt = |p: f64| is_ppt(&sys, &State::new(werner(p), &tol).unwrap(), &tol).unwrap().verdict.is_ppt();
    let (mut lo, mut hi) = (0.0, 1.0);
    assert!(ppt(lo) && !ppt(hi));
    let mut visited = Vec::new();
    while hi - lo > 1e-8 {
        let mid = 0.5 * (lo + hi);
        visited.push(mid);
        if ppt(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi), visited)
}

fn criterion_3(gate: &mut Gate) -> Vec<f64> {
    let t = Instant::now();
    let (p, visited) = werner_bisection();
    let (fast, time) = within(t.elapsed(), 5.0);
    // closed form: the smallest eigenvalue of the partial transpose is (1 - 3p)/4
    let closed = partial_transpose(&werner(1.0 / 3.0), 2, 2).unwrap().symmetric_eigenvalues().min();
    let ok = (p - 1.0 / 3.0).abs() <= 1e-6 && closed.abs() < 1e-12;
    gate.record(3, ok && fast, "Werner ppt/npt boundary at p = 1/3", format!("bisection {p:.9}, |p - 1/3| = {:.2e}, {time}", (p - 1.0 / 3.0).abs()));
    visited
}

fn criterion_4(gate: &mut Gate) {
    let t = Instant::now();
    let (ppt, _) = suite("separable-ppt", 100, ROOT_SEED);
    let (chsh, _) = suite("separable-chsh", 100, ROOT_SEED);
    let (fast, time) = within(t.elapsed(), 60.0);
    let worst = chsh.property("see-saw beta <= 2").and_then(|p| p.worst_margin).unwrap_or(f64::NAN);
    gate.record(
        4,
        ppt.passed() && chsh.passed() && fast,
        "100 certified separable states are ppt with see-saw beta <= 2 + 1e-7",
        format!("{}; {}; worst 2 + 1e-7 - beta {worst:.2e}; {time}", property_line(&ppt), property_line(&chsh)),
    );
}

fn criterion_5(gate: &mut Gate) {
    let (out, _) = suite("ppt-inequality", 100, ROOT_SEED);
    gate.record(5, out.passed(), "family inequality on 100 (ppt state, family) pairs", property_line(&out));
}

fn criterion_6(gate: &mut Gate) {
    let (out, elapsed) = suite("tensor-closure", 50, ROOT_SEED);
    let (fast, time) = within(elapsed, 120.0);
    gate.record(6, out.passed() && fast, "50 composites of ppt 2x2 pairs are ppt at 4x4", format!("{}; {time}", property_line(&out)));
}

fn criterion_7(gate: &mut Gate) {
    let (out, _) = suite("superoperator-ppt", 50, ROOT_SEED);
    gate.record(7, out.passed(), "50 separable superoperators keep 50 ppt states ppt", property_line(&out));
}

fn criterion_8(gate: &mut Gate) {
    let (out, _) = suite("witness-protocol", 100, ROOT_SEED);
    gate.record(8, out.passed(), "two-term witnesses on 100 npt 2x2 states give npt qubit outputs", property_line(&out));
}

fn criterion_9(gate: &mut Gate) {
    let (out, elapsed) = suite("cyclic-distillation", 50, ROOT_SEED);
    let (fast, time) = within(elapsed, 120.0);
    let deficient = out.property("deficient state rejected").map_or(0, |p| p.checked);
    gate.record(
        9,
        out.passed() && deficient >= 20 && fast,
        "cyclic distillation on 50 full-rank states at 2x2 and 3x3, Schmidt-deficient states rejected",
        format!("{}; {time}", property_line(&out)),
    );
}

/// Independent route: Kronecker-built Hamiltonian, real symmetric solver, explicit partial trace.
fn lattice_oracle_pt_min(n: usize, keep: &[usize]) -> f64 {
    let x = CMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
    let z = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]);
    let one = CMatrix::identity(2, 2);
    let on = |site: usize, op: &CMatrix| {
        let mut m = CMatrix::identity(1, 1);
        for s in 0..n {
            m = m.kronecker(if s == site { op } else { &one });
        }
        m
    };
    let mut h = CMatrix::zeros(1 << n, 1 << n);
    for i in 0..n - 1 {
        h -= on(i, &z) * on(i + 1, &z);
    }
    for i in 0..n {
        h -= on(i, &x);
    }
    let real = h.map(|v| v.re);
    let eig = nalgebra::SymmetricEigen::new(real);
    let k = eig.eigenvalues.imin();
    let psi: Vector = eig.eigenvectors.column(k).map(|v| c(v, 0.0));
    let rho = partial_trace(&(&psi * psi.adjoint()), &vec![2; n], keep).unwrap();
    partial_transpose(&rho, 2, 2).unwrap().symmetric_eigenvalues().min()
}

fn criterion_10(gate: &mut Gate) -> Vec<(BipartiteSystem, State)> {
    let t = Instant::now();
    let spec = SpinChainSpec::tfim(6, 1.0, 1.0, Boundary::Open).unwrap();
    let cfg = AnalysisConfig::default().with_seed(ROOT_SEED);
    let regions = "2/3".parse().unwrap();
    let ground = classify(&spec, &regions, StateChoice::Ground, &cfg).unwrap();
    let hot = classify(&spec, &regions, StateChoice::Gibbs(0.0), &cfg).unwrap();
    let (fast, time) = within(t.elapsed(), 60.0);
    let oracle = lattice_oracle_pt_min(spec.sites(), &[2, 3]);
    let g_ppt = ground.report.ppt.as_ref().unwrap();
    let g_dist = ground.report.one_distillable.as_ref().unwrap().verdict;
    let h_ppt = hot.report.ppt.as_ref().unwrap().verdict;
    let h_beta = hot.report.chsh.as_ref().unwrap().beta_lower_bound;
    let ok = g_ppt.verdict == Verdict::Npt
        && g_dist == DistillVerdict::Certified
        && oracle < 0.0
        && h_ppt == Verdict::Ppt
        && h_beta <= 2.0 + CHSH_SLACK;
    gate.record(
        10,
        ok && fast,
        "N=6 TFIM regions {2},{3}: ground npt and certified, beta=0 ppt with beta <= 2",
        format!(
            "ground {:?}/{:?} (oracle PT min eig {oracle:.3e}), beta=0 {:?} with CHSH {h_beta:.9}; {time}",
            g_ppt.verdict, g_dist, h_ppt
        ),
    );
    let spectrum = entangle::lattice::diagonalize(&spec, &cfg.tol).unwrap();
    [StateChoice::Ground, StateChoice::Gibbs(0.0)]
        .into_iter()
        .map(|ch| entangle::lattice::reduced_system(&spectrum, &regions, ch, &cfg.tol).unwrap())
        .collect()
}

fn criterion_11(gate: &mut Gate, werner_points: &[f64], lattice: &[(BipartiteSystem, State)]) {
    let t = Instant::now();
    let cfg = AnalysisConfig::default().with_seed(ROOT_SEED);
    let audit = VerifyOptions { seed: ROOT_SEED, audit: Some(cfg.clone()), ..Default::default() };
    let mut states = 0usize;
    let mut problems = Vec::new();
    for (name, trials) in [
        ("kernel-oracle", 200),
        ("separable-ppt", 100),
        ("separable-chsh", 100),
        ("ppt-inequality", 100),
        ("tensor-closure", 50),
        ("superoperator-ppt", 50),
        ("witness-protocol", 100),
        ("cyclic-distillation", 50),
    ] {
        let out = run_suite(find_suite(name).unwrap(), &VerifyOptions { trials: Some(trials), ..audit.clone() });
        let chain = out.property("implication chain").expect("audit enabled");
        states += chain.checked;
        if !chain.ok() {
            problems.push(format!("{name}: seeds {:?} {:?}", chain.failing_seeds, out.errors));
        }
    }
    let tol = Tolerances::default();
    let sys = BipartiteSystem::tensor(2, 2);
    for &p in werner_points {
        let st = State::new(werner(p), &tol).unwrap();
        let v = audit_state(&sys, &st, &cfg).unwrap();
        states += 1;
        if !v.is_empty() {
            problems.push(format!("werner {p}: {}", v.join("; ")));
        }
    }
    for (sys, st) in lattice {
        let v = audit_state(sys, st, &cfg).unwrap();
        states += 1;
        if !v.is_empty() {
            problems.push(format!("lattice: {}", v.join("; ")));
        }
    }
    gate.record(
        11,
        problems.is_empty(),
        "no implication-chain violation across the states of criteria 2-10",
        format!("{states} trials and states audited, {} violations, {:.1} s {}", problems.len(), t.elapsed().as_secs_f64(), problems.join(" | ")),
    );
}

fn main() -> ExitCode {
    let mut gate = Gate { failures: 0 };
    criterion_1(&mut gate);
    criterion_2(&mut gate);
    let werner_points = criterion_3(&mut gate);
    criterion_4(&mut gate);
    criterion_5(&mut gate);
    criterion_6(&mut gate);
    criterion_7(&mut gate);
    criterion_8(&mut gate);
    criterion_9(&mut gate);
    let lattice = criterion_10(&mut gate);
    criterion_11(&mut gate, &werner_points, &lattice);
    println!("acceptance: {} of 11 criteria passed", 11 - gate.failures);
    if gate.failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
