//! The `entangle` command line.
//!
//! Exit codes: 0 on completion (whatever the verdicts), 1 when a verification
//! suite or a plan replay fails, 2 on invalid input, 3 on an internal
//! invariant violation, including an inconsistent implication chain.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::bipartite::State;
use crate::distill::{distill_from_cyclic, replay, DistillationPlan};
use crate::document::Document;
use crate::error::{Error, Result};
use crate::lattice::{run_chain, Boundary, ChainConfig, ChainRow, RegionPair, StateChoice};
use crate::matrix::{hermitian_eig, Tolerances};
use crate::report::{parse_criteria, AnalysisConfig};
use crate::verify::{verify, VerifyOptions, SUITES};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "entangle", version, about = "Entanglement criteria for bipartite systems of commuting matrix algebras")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Classify the state in a bipartite document.
    Analyze {
        input: PathBuf,
        #[command(flatten)]
        analysis: AnalysisArgs,
        /// Include the kernel matrix in the report.
        #[arg(long)]
        full: bool,
    },
    /// Sweep spin chains over lengths, fields, region pairs and states.
    Chain(ChainArgs),
    /// Run a randomized property suite (or `all`).
    Verify {
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Trials per suite; defaults to each suite's own count.
        #[arg(long)]
        trials: Option<usize>,
        /// Also classify every touched state and check the implication chain.
        #[arg(long)]
        audit: bool,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Build a singlet-distillation plan for a pure state cyclic for Alice.
    Distill {
        input: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Where to write the plan; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        tol: TolArgs,
    },
    /// Re-verify a serialized distillation plan.
    Replay {
        plan: PathBuf,
        #[command(flatten)]
        tol: TolArgs,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// List the verification suites.
    Suites,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Args, Debug, Clone)]
pub struct TolArgs {
    #[arg(long)]
    pub tol_hermitian: Option<f64>,
    #[arg(long)]
    pub tol_eig: Option<f64>,
    #[arg(long)]
    pub tol_psd: Option<f64>,
    #[arg(long)]
    pub tol_rank: Option<f64>,
}

impl TolArgs {
    pub fn tolerances(&self) -> Result<Tolerances> {
        let mut t = Tolerances::default();
        for (slot, value, name) in [
            (&mut t.hermitian, self.tol_hermitian, "tol-hermitian"),
            (&mut t.eig, self.tol_eig, "tol-eig"),
            (&mut t.psd, self.tol_psd, "tol-psd"),
            (&mut t.rank, self.tol_rank, "tol-rank"),
        ] {
            if let Some(v) = value {
                if !v.is_finite() || v <= 0.0 {
                    return Err(Error::Parse(format!("--{name} must be a positive number, got {v}")));
                }
                *slot = v;
            }
        }
        Ok(t)
    }
}

#[derive(Args, Debug, Clone)]
pub struct AnalysisArgs {
    /// Comma-separated subset of ppt,chsh,distill.
    #[arg(long, default_value = "ppt,chsh,distill")]
    pub criteria: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// See-saw restarts.
    #[arg(long)]
    pub restarts: Option<usize>,
    /// See-saw iteration cap per restart.
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Witness-search restarts.
    #[arg(long)]
    pub search_restarts: Option<usize>,
    /// Witness-search iteration cap per restart.
    #[arg(long)]
    pub search_iter: Option<usize>,
    #[command(flatten)]
    pub tol: TolArgs,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Record wall-clock time per stage (makes reports non-reproducible).
    #[arg(long)]
    pub timings: bool,
}

impl AnalysisArgs {
    pub fn config(&self) -> Result<AnalysisConfig> {
        let mut cfg = AnalysisConfig { criteria: parse_criteria(&self.criteria)?, ..Default::default() }.with_seed(self.seed);
        cfg.tol = self.tol.tolerances()?;
        cfg.timings = self.timings;
        if let Some(r) = self.restarts {
            cfg.seesaw.restarts = r.max(1);
        }
        if let Some(m) = self.max_iter {
            cfg.seesaw.max_iter = m.max(1);
        }
        if let Some(r) = self.search_restarts {
            cfg.search.restarts = r.max(1);
        }
        if let Some(m) = self.search_iter {
            cfg.search.max_iter = m.max(1);
        }
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
pub struct ChainArgs {
    /// JSON sweep configuration; replaces the grid flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Chain lengths.
    #[arg(long, value_delimiter = ',', default_value = "6")]
    pub sites: Vec<usize>,
    /// Ising coupling J.
    #[arg(long, default_value_t = 1.0)]
    pub coupling: f64,
    /// Transverse fields g.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub fields: Vec<f64>,
    #[arg(long, default_value = "open")]
    pub boundary: String,
    /// Region pairs such as `2/3` or `0,1/4,5`; repeat the flag for several.
    #[arg(long = "regions", default_value = "2/3")]
    pub regions: Vec<String>,
    /// `ground` and/or inverse temperatures, comma-separated.
    #[arg(long, value_delimiter = ',', default_value = "ground")]
    pub states: Vec<String>,
    #[arg(long, default_value_t = crate::bipartite::DEFAULT_SIZE_LIMIT)]
    pub size_limit: usize,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
}

impl ChainArgs {
    pub fn sweep(&self) -> Result<ChainConfig> {
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)?;
            return serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())));
        }
        Ok(ChainConfig {
            sites: self.sites.clone(),
            coupling: self.coupling,
            fields: self.fields.clone(),
            boundary: self.boundary.parse::<Boundary>()?,
            regions: self.regions.iter().map(|r| r.parse::<RegionPair>()).collect::<Result<_>>()?,
            states: self.states.iter().map(|s| s.parse::<StateChoice>()).collect::<Result<_>>()?,
            size_limit: self.size_limit,
        })
    }
}

/// What a subcommand produced: text for stdout plus the exit code.
pub struct Outcome {
    pub stdout: String,
    pub code: i32,
}

fn exit_code(e: &Error) -> i32 {
    if e.is_input_error() {
        EXIT_INPUT
    } else {
        EXIT_INVARIANT
    }
}

fn analyze(input: &Path, analysis: &AnalysisArgs, full: bool) -> Result<Outcome> {
    let mut cfg = analysis.config()?;
    cfg.full = full;
    let (doc, digest) = Document::read(input)?;
    let (sys, state) = doc.load(&cfg.tol)?;
    let report = crate::report::classify_state(&sys, &state, &cfg, Some(digest))?;
    let stdout = match analysis.format {
        Format::Json => report.to_json() + "\n",
        Format::Text => report.to_text(),
    };
    Ok(Outcome { stdout, code: if report.chain_consistent { EXIT_OK } else { EXIT_INVARIANT } })
}

fn chain_header() -> String {
    format!(
        "{:>5} {:>3} {:>6} {:>6} {:<10} {:<10} {:>3} {:>4} {:>11} {:>9} {:<12} {}",
        "cell", "N", "J", "g", "regions", "state", "gap", "ppt", "margin", "beta", "distill", "note"
    )
}

fn chain_line(row: &ChainRow) -> String {
    let mut cols = format!(
        "{:>5} {:>3} {:>6} {:>6} {:<10} {:<10}",
        row.index,
        row.sites,
        row.coupling,
        row.field,
        row.regions.to_string(),
        row.state.to_string()
    );
    match (&row.result, &row.error) {
        (Some(r), _) => {
            let rep = &r.report;
            let (ppt, margin) = rep
                .ppt
                .as_ref()
                .map(|p| (if p.verdict.is_ppt() { "ppt" } else { "npt" }, format!("{:.3e}", p.margin)))
                .unwrap_or(("-", "-".into()));
            let beta = rep.chsh.as_ref().map(|c| format!("{:.6}", c.beta_lower_bound)).unwrap_or("-".into());
            let distill = rep
                .one_distillable
                .as_ref()
                .map(|d| format!("{:?}", d.verdict).to_lowercase())
                .unwrap_or("-".into());
            let note = if rep.chain_consistent { String::new() } else { format!("CHAIN VIOLATED: {}", rep.chain_violations.join("; ")) };
            cols += &format!(" {:>3} {:>4} {:>11} {:>9} {:<12} {}", r.gap, ppt, margin, beta, distill, note);
        }
        (None, Some(e)) => cols += &format!(" {:>3} {:>4} {:>11} {:>9} {:<12} {}: {}", "-", "-", "-", "-", "-", e.kind, e.message),
        (None, None) => {}
    }
    cols.trim_end().to_string()
}

/// Streams rows to `out` as they complete, in cell order.
pub fn chain(args: &ChainArgs, out: &mut dyn Write) -> Result<i32> {
    let cfg = args.analysis.config()?;
    let sweep = args.sweep()?;
    sweep.validate()?;
    // overlapping or malformed regions are rejected before any work; out-of-range
    // sites only matter for the chain lengths they exceed and become error rows
    let format = args.analysis.format;
    if format == Format::Text {
        writeln!(out, "{}", chain_header())?;
    }
    let mut violated = false;
    let mut io_error = None;
    run_chain(&sweep, &cfg, |row| {
        if row.result.as_ref().is_some_and(|r| !r.report.chain_consistent) {
            violated = true;
        }
        let line = match format {
            Format::Json => serde_json::to_string(row).expect("row serializes"),
            Format::Text => chain_line(row),
        };
        if let Err(e) = writeln!(out, "{line}").and_then(|_| out.flush()) {
            io_error.get_or_insert(e);
        }
    })?;
    if let Some(e) = io_error {
        return Err(e.into());
    }
    Ok(if violated { EXIT_INVARIANT } else { EXIT_OK })
}

fn run_verify(suite: &str, seed: u64, trials: Option<usize>, audit: bool, format: Format) -> Result<Outcome> {
    let opts = VerifyOptions { seed, trials, audit: audit.then(AnalysisConfig::default), ..Default::default() };
    let summary = verify(suite, &opts)?;
    let stdout = match format {
        Format::Json => summary.to_json() + "\n",
        Format::Text => summary.to_text(),
    };
    Ok(Outcome { stdout, code: if summary.passed() { EXIT_OK } else { EXIT_FAILED } })
}

/// The pure state behind a rank-one density matrix.
fn pure_vector(state: &State, tol: &Tolerances) -> Result<crate::matrix::Vector> {
    let eig = hermitian_eig(state.density(), tol)?;
    let top = *eig.values.last().expect("non-empty spectrum");
    if (top - 1.0).abs() > tol.psd.max(1e-9) * 10.0 {
        return Err(Error::InvalidDensity(format!("distillation needs a pure state; largest eigenvalue is {top}")));
    }
    Ok(eig.vector(eig.values.len() - 1))
}

fn distill(input: &Path, seed: u64, out: Option<&Path>, tol: &TolArgs) -> Result<Outcome> {
    let tol = tol.tolerances()?;
    let (doc, _) = Document::read(input)?;
    let (sys, state) = doc.load(&tol)?;
    let psi = pure_vector(&state, &tol)?;
    let plan = distill_from_cyclic(&sys, &psi, seed, &tol)?;
    let json = serde_json::to_string_pretty(&plan).expect("plan serializes") + "\n";
    match out {
        Some(path) => {
            std::fs::write(path, json)?;
            Ok(Outcome {
                stdout: format!(
                    "plan written to {}: singlet fidelity {:.12}, success probability {:.6}, selection residual {:.3e}\n",
                    path.display(),
                    plan.singlet_fidelity,
                    plan.success_probability,
                    plan.residual
                ),
                code: EXIT_OK,
            })
        }
        None => Ok(Outcome { stdout: json, code: EXIT_OK }),
    }
}

fn run_replay(path: &Path, tol: &TolArgs, format: Format) -> Result<Outcome> {
    let tol = tol.tolerances()?;
    let text = std::fs::read_to_string(path)?;
    let plan: DistillationPlan = serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    let report = replay(&plan, &tol)?;
    let stdout = match format {
        Format::Json => serde_json::to_string_pretty(&report).expect("replay serializes") + "\n",
        Format::Text => {
            let mut s = String::new();
            for c in &report.checks {
                s += &format!("{} {:<36} {:.3e}\n", if c.passed { "ok  " } else { "FAIL" }, c.name, c.value);
            }
            s
        }
    };
    Ok(Outcome { stdout, code: if report.passed() { EXIT_OK } else { EXIT_FAILED } })
}

fn list_suites() -> Outcome {
    let mut s = String::new();
    for d in SUITES {
        s += &format!("{:<20} {:>4} trials  {}\n", d.name, d.default_trials, d.summary);
    }
    s += "all                  every suite above\n";
    Outcome { stdout: s, code: EXIT_OK }
}

/// Caps the global thread pool at `ENTANGLE_THREADS` when set.
pub fn configure_threads() -> Result<()> {
    if let Ok(value) = std::env::var("ENTANGLE_THREADS") {
        let n: usize = value
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| Error::Parse(format!("ENTANGLE_THREADS must be a positive integer, got `{value}`")))?;
        // a pool that already exists (in tests) keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Runs one command, writing results to `out` and diagnostics to `err`.
pub fn run(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match &cli.command {
        Command::Analyze { input, analysis, full } => analyze(input, analysis, *full),
        Command::Chain(args) => chain(args, out).map(|code| Outcome { stdout: String::new(), code }),
        Command::Verify { suite, seed, trials, audit, format } => run_verify(suite, *seed, *trials, *audit, *format),
        Command::Distill { input, seed, out: path, tol } => distill(input, *seed, path.as_deref(), tol),
        Command::Replay { plan, tol, format } => run_replay(plan, tol, *format),
        Command::Suites => Ok(list_suites()),
    };
    match result {
        Ok(o) => {
            if out.write_all(o.stdout.as_bytes()).is_err() {
                return EXIT_INVARIANT;
            }
            if o.code == EXIT_INVARIANT {
                let _ = writeln!(err, "error: implication chain violated; see the report");
            }
            o.code
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Entry point for the binary: parses `args`, runs, returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return EXIT_INPUT;
    }
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run(&cli, &mut stdout.lock(), &mut stderr.lock())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::report::Criterion;

    #[test]
    fn criteria_and_tolerance_flags() {
        let cli = Cli::try_parse_from(["entangle", "analyze", "x.json", "--criteria", "chsh,ppt", "--tol-psd", "1e-8", "--seed", "4"]).unwrap();
        let Command::Analyze { analysis, .. } = cli.command else { panic!() };
        let cfg = analysis.config().unwrap();
        assert_eq!(cfg.criteria, vec![Criterion::Ppt, Criterion::Chsh]);
        assert_eq!(cfg.tol.psd, 1e-8);
        assert_eq!(cfg.seesaw.seed, 4);
        let bad = TolArgs { tol_hermitian: None, tol_eig: Some(-1.0), tol_psd: None, tol_rank: None };
        assert!(bad.tolerances().is_err());
    }

    #[test]
    fn chain_flags_build_a_sweep() {
        let cli = Cli::try_parse_from([
            "entangle", "chain", "--sites", "4,6", "--fields", "0.5,1", "--regions", "0/1", "--regions", "0,1/3", "--states", "ground,0.5",
        ])
        .unwrap();
        let Command::Chain(args) = cli.command else { panic!() };
        let sweep = args.sweep().unwrap();
        assert_eq!(sweep.cell_count(), 16);
        assert_eq!(sweep.states[1], StateChoice::Gibbs(0.5));
    }

    #[test]
    fn overlapping_regions_are_input_errors() {
        let cli = Cli::try_parse_from(["entangle", "chain", "--regions", "1,2/2"]).unwrap();
        let mut out = Vec::new();
        let mut err = Vec::new();
        assert_eq!(run(&cli, &mut out, &mut err), EXIT_INPUT);
        assert!(String::from_utf8(err).unwrap().contains("overlap"));
    }
}
