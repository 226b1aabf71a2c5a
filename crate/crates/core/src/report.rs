//! Run configuration, suite execution and report rendering.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use serde::Serialize;

use crate::bundle_file::read_bundle;
use crate::catalog::{self, DEFAULT_SAMPLES, DEFAULT_SEED};
use crate::chart::DerivativeStrategy;
use crate::check::{summarize, Bound, CheckOutcome, Tolerances};
use crate::classify::{Analysis, ClassId, ClassVerdict, TheoremReport, TheoremStatus};
use crate::error::{Error, Result};
use crate::identities::TENSORS;
use crate::structure::{StructureBundle, AXIOMS};

/// Bumped whenever a catalog construction changes numerically.
pub const CATALOG_VERSION: u32 = 1;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Axioms,
    Tensors,
    Classify,
    Theorems,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Axioms, Suite::Tensors, Suite::Classify, Suite::Theorems];

    pub fn as_str(&self) -> &'static str {
        match self {
            Suite::Axioms => "axioms",
            Suite::Tensors => "tensors",
            Suite::Classify => "classify",
            Suite::Theorems => "theorems",
        }
    }
}

/// Parse a comma-separated suite list; `all` selects every suite.
pub fn parse_checks(s: &str) -> Result<Vec<Suite>> {
    let mut out = Vec::new();
    for tok in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        if tok == "all" {
            out.extend(Suite::ALL);
            continue;
        }
        match Suite::ALL.iter().find(|x| x.as_str() == tok) {
            Some(x) => out.push(*x),
            None => {
                let names = Suite::ALL.iter().map(|x| x.as_str()).chain(["all"]);
                let hint = catalog::nearest(tok, names).map(|h| format!(", did you mean '{h}'?")).unwrap_or_default();
                return Err(Error::Config(format!("unknown suite '{tok}'{hint}")));
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Config("no suites selected".into()));
    }
    out.sort();
    out.dedup();
    Ok(out)
}

pub fn parse_strategy(s: &str) -> Result<DerivativeStrategy> {
    match s {
        "exact" => Ok(DerivativeStrategy::Exact),
        "dual" => Ok(DerivativeStrategy::DualForward),
        "fd" => Ok(DerivativeStrategy::fd()),
        _ => Err(Error::Config(format!("unknown derivative strategy '{s}' (exact | dual | fd)"))),
    }
}

/// `key=value` with a real value.
pub fn parse_assignment(s: &str) -> Result<(String, f64)> {
    let (k, v) = s.split_once('=').ok_or_else(|| Error::Config(format!("expected key=value, got '{s}'")))?;
    let v: f64 = v.trim().parse().map_err(|_| Error::Config(format!("'{v}' is not a number in '{s}'")))?;
    Ok((k.trim().to_string(), v))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Markdown,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Catalog { key: String, params: BTreeMap<String, f64> },
    Bundle { path: PathBuf },
    /// A bundle built in memory, e.g. through the C interface.
    Inline { dim: usize, p: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub structure: Source,
    pub samples: usize,
    pub seed: u64,
    pub tol: BTreeMap<String, f64>,
    pub checks: Vec<Suite>,
    pub format: Format,
    /// `None` keeps the bundle's own strategy (exact for catalog entries).
    #[serde(serialize_with = "ser_strategy")]
    pub derivatives: Option<DerivativeStrategy>,
}

fn ser_strategy<S: serde::Serializer>(s: &Option<DerivativeStrategy>, ser: S) -> std::result::Result<S::Ok, S::Error> {
    match s {
        Some(d) => ser.serialize_str(d.label()),
        None => ser.serialize_none(),
    }
}

impl RunConfig {
    pub fn catalog(key: &str) -> Self {
        Self {
            structure: Source::Catalog { key: key.to_string(), params: BTreeMap::new() },
            samples: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
            tol: BTreeMap::new(),
            checks: Suite::ALL.to_vec(),
            format: Format::Json,
            derivatives: None,
        }
    }

    pub fn selects(&self, s: Suite) -> bool {
        self.checks.contains(&s)
    }

    /// Resolve and resample the bundle.
    pub fn bundle(&self) -> Result<StructureBundle> {
        let b = match &self.structure {
            Source::Catalog { key, params } => catalog::resolve(key, params)?,
            Source::Bundle { path } => read_bundle(path)?,
            Source::Inline { .. } => return Err(Error::Config("inline bundles are passed to run_bundle".into())),
        };
        self.prepare(b)
    }

    /// Apply the strategy override and sampling to a bundle.
    pub fn prepare(&self, b: StructureBundle) -> Result<StructureBundle> {
        let b = match self.derivatives {
            Some(s) => b.with_strategy(s),
            None => b,
        };
        b.with_sampling(self.samples, self.seed)
    }

    pub fn tolerances(&self, strategy: DerivativeStrategy) -> Result<Tolerances> {
        let mut t = Tolerances::for_strategy(strategy);
        for (k, v) in &self.tol {
            t.set(k, *v)?;
        }
        Ok(t)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SuiteSummary {
    pub pass: usize,
    pub fail: usize,
    pub vacuous: usize,
    /// Largest residual among upper-bounded checks.
    pub worst_residual: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Results {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axioms: Option<Vec<CheckOutcome>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tensors: Option<Vec<CheckOutcome>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theorems: Option<Vec<TheoremReport>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub config: RunConfig,
    pub results: Results,
    pub classification: Option<ClassVerdict>,
    pub summary: BTreeMap<String, SuiteSummary>,
    pub version: String,
}

pub fn version() -> String {
    format!("paraf {} catalog {CATALOG_VERSION}", env!("CARGO_PKG_VERSION"))
}

fn outcome_summary(outcomes: &[CheckOutcome]) -> SuiteSummary {
    let pass = outcomes.iter().filter(|o| o.pass).count();
    let worst = outcomes
        .iter()
        .filter(|o| matches!(o.bound, Bound::AtMost(_)))
        .map(|o| o.residual)
        .fold(None, |m: Option<f64>, r| Some(if r.is_nan() { f64::NAN } else { m.map_or(r, |m| m.max(r)) }));
    SuiteSummary { pass, fail: outcomes.len() - pass, vacuous: 0, worst_residual: worst, notes: vec![] }
}

fn sort_outcomes(v: &mut [CheckOutcome]) {
    v.sort_by(|a, b| (&a.suite, &a.check_id, a.sample).cmp(&(&b.suite, &b.check_id, b.sample)));
}

impl Report {
    /// 0 when every non-vacuous selected check passes, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.summary.values().all(|s| s.fail == 0) {
            EXIT_PASS
        } else {
            EXIT_FAIL
        }
    }

    pub fn to_json(&self) -> String {
        // Round-trip through Value: its map is ordered, so keys come out sorted.
        let v = serde_json::to_value(self).expect("report serializes");
        let mut s = serde_json::to_string_pretty(&v).expect("value serializes");
        s.push('\n');
        s
    }

    pub fn render(&self) -> String {
        match self.config.format {
            Format::Json => self.to_json(),
            Format::Markdown => self.to_markdown(),
        }
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# Structure report\n");
        let _ = writeln!(s, "- structure: `{}`", serde_json::to_string(&self.config.structure).unwrap_or_default());
        let _ = writeln!(s, "- samples: {}, seed: {}", self.config.samples, self.config.seed);
        let _ = writeln!(s, "- engine: {}\n", self.version);
        if let Some(c) = &self.classification {
            let _ = writeln!(s, "## Classification: `{}`\n", c.class_id);
            if !c.failed_axioms.is_empty() {
                let _ = writeln!(s, "Failed axioms: {}\n", c.failed_axioms.join(", "));
            }
            if !c.residuals.is_empty() {
                let _ = writeln!(s, "| predicate | residual |\n|---|---|");
                for (k, v) in &c.residuals {
                    let _ = writeln!(s, "| {k} | {v:.3e} |");
                }
                let _ = writeln!(s);
            }
            for a in &c.assumptions {
                let _ = writeln!(s, "Assumption: {a}");
            }
            let _ = writeln!(s);
        }
        for (title, outcomes) in [("Axioms", &self.results.axioms), ("Tensor identities", &self.results.tensors)] {
            let Some(outcomes) = outcomes else { continue };
            let _ = writeln!(s, "## {title}\n");
            // One row per identity, worst sample first.
            let _ = writeln!(s, "| identity | status | worst residual | bound | worst sample | samples |\n|---|---|---|---|---|---|");
            for c in summarize(outcomes) {
                let status = if c.pass { "PASS" } else { "FAIL" };
                let bound = match c.bound {
                    Bound::AtMost(t) => format!("<= {t:.0e}"),
                    Bound::AtLeast(t) => format!(">= {t:.0e}"),
                };
                let _ = writeln!(
                    s,
                    "| {} | {status} | {:.3e} | {bound} | {} | {} |",
                    c.check_id, c.worst_residual, c.worst_sample, c.samples
                );
            }
            let _ = writeln!(s);
        }
        if let Some(ts) = &self.results.theorems {
            let _ = writeln!(s, "## Theorems\n");
            for t in ts {
                let status = match t.status {
                    TheoremStatus::Pass => "PASS",
                    TheoremStatus::Fail => "FAIL",
                    TheoremStatus::Vacuous => "vacuous",
                };
                let _ = writeln!(s, "### {} ({status})\n", t.theorem_id);
                let _ = writeln!(s, "| role | condition | status | residual | worst sample |\n|---|---|---|---|---|");
                for (role, cs) in [("hypothesis", &t.hypotheses), ("conclusion", &t.conclusions), ("observation", &t.observations)] {
                    for c in cs {
                        let ok = if c.pass { "PASS" } else { "FAIL" };
                        let _ = writeln!(s, "| {role} | {} | {ok} | {:.3e} | {} |", c.id, c.residual, c.worst_sample);
                    }
                }
                for n in &t.notes {
                    let _ = writeln!(s, "\n_{n}_");
                }
                let _ = writeln!(s);
            }
        }
        let _ = writeln!(s, "## Summary\n\n| suite | pass | fail | vacuous | worst residual |\n|---|---|---|---|---|");
        for (k, v) in &self.summary {
            let w = v.worst_residual.map(|w| format!("{w:.3e}")).unwrap_or_else(|| "-".into());
            let _ = writeln!(s, "| {k} | {} | {} | {} | {w} |", v.pass, v.fail, v.vacuous);
        }
        s
    }
}

/// Execute the selected suites. Errors are configuration or construction
/// failures (exit 2); check failures are part of the report.
pub fn run(config: &RunConfig) -> Result<Report> {
    run_bundle(config, config.bundle()?)
}

/// Like [`run`] with an already built bundle; sampling and strategy from
/// `config` still apply.
pub fn run_bundle(config: &RunConfig, bundle: StructureBundle) -> Result<Report> {
    let bundle = config.prepare(bundle)?;
    let tol = config.tolerances(bundle.strategy())?;
    let analysis = Analysis::new(&bundle, tol)?;
    let mut results = Results::default();
    let mut summary = BTreeMap::new();

    if config.selects(Suite::Axioms) {
        let mut a = analysis.axioms.clone();
        sort_outcomes(&mut a);
        summary.insert(AXIOMS.to_string(), outcome_summary(&a));
        results.axioms = Some(a);
    }

    // A degenerate metric leaves nothing to differentiate; that is a check
    // failure already recorded by the metric axioms.
    let skip = match analysis.local(0) {
        Err(e) if !analysis.failed_axioms().is_empty() => Some(e.to_string()),
        Err(e) => return Err(e),
        Ok(_) => None,
    };
    let skipped = |s: &str| SuiteSummary { fail: 1, notes: vec![format!("skipped: {s}")], ..Default::default() };

    if config.selects(Suite::Tensors) {
        match &skip {
            Some(e) => {
                summary.insert(TENSORS.to_string(), skipped(e));
            }
            None => {
                let mut t = analysis.tensor_checks()?;
                sort_outcomes(&mut t);
                summary.insert(TENSORS.to_string(), outcome_summary(&t));
                results.tensors = Some(t);
            }
        }
    }

    let mut classification = None;
    if config.selects(Suite::Classify) || config.selects(Suite::Theorems) {
        // With the metric unusable the axioms have failed, so no predicate is needed.
        let verdict = analysis.verdict()?;
        if config.selects(Suite::Theorems) {
            let ts = match &skip {
                Some(_) => vec![],
                None => analysis.theorems(&verdict)?,
            };
            let count = |st| ts.iter().filter(|t| t.status == st).count();
            let mut notes = vec![];
            if !verdict.axioms_pass() {
                notes.push("axioms failed: every theorem is vacuous".to_string());
            }
            let worst = ts
                .iter()
                .flat_map(|t| t.conclusions.iter())
                .filter(|c| matches!(c.bound, Bound::AtMost(_)))
                .map(|c| c.residual)
                .fold(None, |m: Option<f64>, r| Some(m.map_or(r, |m| m.max(r))));
            summary.insert(
                "theorems".to_string(),
                SuiteSummary {
                    pass: count(TheoremStatus::Pass),
                    fail: count(TheoremStatus::Fail),
                    vacuous: count(TheoremStatus::Vacuous),
                    worst_residual: worst,
                    notes,
                },
            );
            results.theorems = Some(ts);
        }
        if config.selects(Suite::Classify) {
            let refused = verdict.class_id == ClassId::Unclassified;
            let mut s = SuiteSummary { pass: usize::from(!refused), fail: usize::from(refused), ..Default::default() };
            if refused {
                s.notes.push(format!("classification refused: axioms failed ({})", verdict.failed_axioms.join(", ")));
            }
            summary.insert("classify".to_string(), s);
            classification = Some(verdict);
        }
    }

    Ok(Report { config: config.clone(), results, classification, summary, version: version() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suites_parse() {
        assert_eq!(parse_checks("all").unwrap(), Suite::ALL.to_vec());
        assert_eq!(parse_checks("theorems,axioms").unwrap(), vec![Suite::Axioms, Suite::Theorems]);
        let e = parse_checks("axiom").unwrap_err().to_string();
        assert!(e.contains("did you mean 'axioms'"), "{e}");
    }

    #[test]
    fn assignments_parse() {
        assert_eq!(parse_assignment("a=2").unwrap(), ("a".to_string(), 2.0));
        assert!(parse_assignment("a").is_err());
        assert!(parse_assignment("a=x").is_err());
    }
}
