//! Running the criteria on one state and collecting a stable report.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bipartite::{BipartiteSystem, State};
use crate::chsh::{beta_seesaw, Observables, SeesawConfig};
use crate::distill::{is_one_distillable, is_one_distillable_from, DistillReport, DistillVerdict};
use crate::document::digest;
use crate::error::{Error, Result};
use crate::matrix::{CMatrix, Tolerances};
use crate::ppt::{is_ppt, SearchBudget, Verdict, Witness};

/// Slack above 2 before a see-saw value on a ppt state counts as a violation.
pub const CHSH_SLACK: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Ppt,
    Chsh,
    Distill,
}

impl std::str::FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "ppt" => Ok(Criterion::Ppt),
            "chsh" => Ok(Criterion::Chsh),
            "distill" => Ok(Criterion::Distill),
            other => Err(Error::Parse(format!("unknown criterion `{other}` (expected ppt, chsh or distill)"))),
        }
    }
}

/// Parses a comma-separated criterion list, sorted and deduplicated.
pub fn parse_criteria(list: &str) -> Result<Vec<Criterion>> {
    let mut out = list.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect::<Result<Vec<_>>>()?;
    out.sort();
    out.dedup();
    if out.is_empty() {
        return Err(Error::Parse("no criteria selected".into()));
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct AnalysisConfig {
    pub criteria: Vec<Criterion>,
    pub seesaw: SeesawConfig,
    pub search: SearchBudget,
    pub tol: Tolerances,
    /// Include the kernel matrix in the ppt section.
    pub full: bool,
    /// Record wall-clock time per stage; off by default so reports are reproducible byte for byte.
    pub timings: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            criteria: vec![Criterion::Ppt, Criterion::Chsh, Criterion::Distill],
            seesaw: SeesawConfig::default(),
            search: SearchBudget::default(),
            tol: Tolerances::default(),
            full: false,
            timings: false,
        }
    }
}

impl AnalysisConfig {
    /// One root seed for every randomized stage.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seesaw.seed = seed;
        self.search.seed = seed;
        self
    }

    pub fn runs(&self, c: Criterion) -> bool {
        self.criteria.contains(&c)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SystemSummary {
    pub ambient_dim: usize,
    pub alice_dim: usize,
    pub bob_dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tensor: Option<[usize; 2]>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PptSection {
    pub verdict: Verdict,
    pub min_eig: f64,
    /// `min_eig / ||K||_F`; negative means npt.
    pub margin: f64,
    pub marginal: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "crate::serial::option_matrix")]
    pub kernel: Option<CMatrix>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChshSection {
    pub beta_lower_bound: f64,
    pub observables: Observables,
    pub residuals: [f64; 4],
    pub restarts: usize,
    pub best_restart: usize,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Timings {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ppt_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chsh_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distill_ms: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub input_digest: String,
    pub system: SystemSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ppt: Option<PptSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chsh: Option<ChshSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub one_distillable: Option<DistillReport>,
    pub separable_certificate: bool,
    pub chain_consistent: bool,
    pub chain_violations: Vec<String>,
    pub tolerances: Tolerances,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

/// Violations of the implication chain separable ⇒ ppt ⇒ (CHSH ≤ 2, not 1-distillable).
pub fn chain_violations(
    certified_separable: bool,
    ppt: Option<Verdict>,
    beta: Option<f64>,
    distill: Option<DistillVerdict>,
) -> Vec<String> {
    let mut out = Vec::new();
    if certified_separable && ppt == Some(Verdict::Npt) {
        out.push("certified separable state has npt verdict".to_string());
    }
    if certified_separable && beta.is_some_and(|b| b > 2.0 + CHSH_SLACK) {
        out.push(format!("certified separable state violates CHSH (beta {})", beta.unwrap_or_default()));
    }
    if certified_separable && distill == Some(DistillVerdict::Certified) {
        out.push("certified separable state is certified 1-distillable".to_string());
    }
    if ppt == Some(Verdict::Ppt) {
        if let Some(b) = beta.filter(|b| *b > 2.0 + CHSH_SLACK) {
            out.push(format!("ppt state violates CHSH (beta {b})"));
        }
        if distill == Some(DistillVerdict::Certified) {
            out.push("ppt state is certified 1-distillable".to_string());
        }
    }
    out
}

/// Digest of a state's density entries, for callers without an input file.
pub fn state_digest(state: &State) -> String {
    let mut bytes = Vec::with_capacity(16 * state.density().len());
    for z in state.density().iter() {
        bytes.extend_from_slice(&z.re.to_le_bytes());
        bytes.extend_from_slice(&z.im.to_le_bytes());
    }
    digest(&bytes)
}

fn elapsed_ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Runs the selected criteria on one state.
pub fn classify_state(sys: &BipartiteSystem, state: &State, cfg: &AnalysisConfig, input_digest: Option<String>) -> Result<ClassificationReport> {
    let tol = &cfg.tol;
    let mut timings = Timings::default();

    let mut ppt_raw = None;
    let ppt = if cfg.runs(Criterion::Ppt) {
        let t0 = Instant::now();
        let r = is_ppt(sys, state, tol)?;
        timings.ppt_ms = Some(elapsed_ms(t0));
        let section = PptSection {
            verdict: r.verdict,
            min_eig: r.min_eig,
            margin: if r.scale > 0.0 { r.min_eig / r.scale } else { 0.0 },
            marginal: r.marginal,
            witness: r.witness.clone(),
            kernel: cfg.full.then(|| r.kernel.clone()),
        };
        ppt_raw = Some(r);
        Some(section)
    } else {
        None
    };

    let chsh = if cfg.runs(Criterion::Chsh) {
        let t0 = Instant::now();
        let r = beta_seesaw(sys, state, &cfg.seesaw, tol)?;
        timings.chsh_ms = Some(elapsed_ms(t0));
        Some(ChshSection {
            beta_lower_bound: r.beta,
            observables: r.observables,
            residuals: r.residuals,
            restarts: r.restarts_used,
            best_restart: r.best_restart,
        })
    } else {
        None
    };

    let one_distillable = if cfg.runs(Criterion::Distill) {
        let t0 = Instant::now();
        let r = match &ppt_raw {
            Some(p) => is_one_distillable_from(sys, state, p, &cfg.search, tol)?,
            None => is_one_distillable(sys, state, &cfg.search, tol)?,
        };
        timings.distill_ms = Some(elapsed_ms(t0));
        Some(r)
    } else {
        None
    };

    let separable_certificate = state.is_certified_separable();
    let chain = chain_violations(
        separable_certificate,
        ppt.as_ref().map(|p| p.verdict),
        chsh.as_ref().map(|c| c.beta_lower_bound),
        one_distillable.as_ref().map(|d| d.verdict),
    );
    Ok(ClassificationReport {
        input_digest: input_digest.unwrap_or_else(|| state_digest(state)),
        system: SystemSummary {
            ambient_dim: sys.dim(),
            alice_dim: sys.alice().len(),
            bob_dim: sys.bob().len(),
            tensor: sys.tensor_dims().map(|(a, b)| [a, b]),
        },
        ppt,
        chsh,
        one_distillable,
        separable_certificate,
        chain_consistent: chain.is_empty(),
        chain_violations: chain,
        tolerances: *tol,
        seed: cfg.seesaw.seed,
        timings: cfg.timings.then_some(timings),
    })
}

impl ClassificationReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// One line per field, for humans.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "input      {}", self.input_digest);
        let tensor = self.system.tensor.map(|[a, b]| format!(", tensor {a}x{b}")).unwrap_or_default();
        let _ = writeln!(
            s,
            "system     ambient {}, alice dim {}, bob dim {}{tensor}",
            self.system.ambient_dim, self.system.alice_dim, self.system.bob_dim
        );
        if let Some(p) = &self.ppt {
            let verdict = match p.verdict {
                Verdict::Ppt => "ppt",
                Verdict::Npt => "npt",
            };
            let marginal = if p.marginal { " (marginal)" } else { "" };
            let _ = writeln!(s, "ppt        {verdict}{marginal}, kernel min eig {:.6e}, margin {:.3e}", p.min_eig, p.margin);
        }
        if let Some(c) = &self.chsh {
            let _ = writeln!(s, "chsh       beta >= {:.6}", c.beta_lower_bound);
        }
        if let Some(d) = &self.one_distillable {
            match (&d.verdict, &d.protocol) {
                (DistillVerdict::Certified, Some(p)) => {
                    let _ = writeln!(s, "distill    1-distillable (certified), two-qubit PT min eig {:.6e}", p.pt_min_eig);
                }
                _ => {
                    let _ = writeln!(s, "distill    no witness found (inconclusive)");
                }
            }
        }
        let cert = if self.separable_certificate { "present" } else { "absent" };
        let _ = writeln!(s, "separable  certificate {cert}");
        if self.chain_consistent {
            let _ = writeln!(s, "chain      consistent");
        } else {
            let _ = writeln!(s, "chain      VIOLATED: {}", self.chain_violations.join("; "));
        }
        if let Some(t) = &self.timings {
            let fmt = |x: Option<f64>| x.map(|v| format!("{v:.1} ms")).unwrap_or_else(|| "-".into());
            let _ = writeln!(s, "timings    ppt {}, chsh {}, distill {}", fmt(t.ppt_ms), fmt(t.chsh_ms), fmt(t.distill_ms));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bipartite::{random_separable, singlet};

    #[test]
    fn singlet_report() {
        let sys = BipartiteSystem::tensor(2, 2);
        let st = State::pure(&singlet(), &Tolerances::default()).unwrap();
        let r = classify_state(&sys, &st, &AnalysisConfig::default(), None).unwrap();
        assert_eq!(r.ppt.as_ref().unwrap().verdict, Verdict::Npt);
        assert!((r.chsh.as_ref().unwrap().beta_lower_bound - 2.0 * 2f64.sqrt()).abs() < 1e-6);
        assert_eq!(r.one_distillable.as_ref().unwrap().verdict, DistillVerdict::Certified);
        assert!(r.chain_consistent);
        assert!(r.timings.is_none());
        assert!(r.to_text().contains("npt"));
    }

    #[test]
    fn criteria_selection_and_reproducibility() {
        let sys = BipartiteSystem::tensor(2, 2);
        let st = random_separable(&sys, 3, 4).unwrap();
        let cfg = AnalysisConfig { criteria: parse_criteria("ppt,chsh").unwrap(), ..Default::default() }.with_seed(5);
        let a = classify_state(&sys, &st, &cfg, None).unwrap();
        let b = classify_state(&sys, &st, &cfg, None).unwrap();
        assert!(a.one_distillable.is_none());
        assert!(a.separable_certificate && a.chain_consistent);
        assert_eq!(a.to_json(), b.to_json());
        assert!(parse_criteria("ppt,bogus").is_err());
    }

    #[test]
    fn chain_rules() {
        assert!(chain_violations(true, Some(Verdict::Ppt), Some(2.0), Some(DistillVerdict::Inconclusive)).is_empty());
        assert_eq!(chain_violations(true, Some(Verdict::Npt), None, None).len(), 1);
        assert_eq!(chain_violations(false, Some(Verdict::Ppt), Some(2.1), Some(DistillVerdict::Certified)).len(), 2);
        assert!(chain_violations(false, Some(Verdict::Npt), Some(2.8), Some(DistillVerdict::Certified)).is_empty());
    }
}
