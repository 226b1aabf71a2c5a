//! Command-line front end.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use clap::Parser;

use crate::error::{Error, Result};
use crate::report::{
    parse_assignment, parse_checks, parse_strategy, run, Format, RunConfig, Source, EXIT_ERROR,
};

#[derive(Debug, Parser)]
#[command(name = "paraf", version, about = "Check weak para-f-structures on a coordinate chart")]
pub struct Cli {
    /// Catalog entry name.
    #[arg(long, conflicts_with = "bundle", required_unless_present = "bundle")]
    pub structure: Option<String>,
    /// Catalog parameter, `name=value` (repeatable).
    #[arg(long = "param", value_name = "K=V")]
    pub params: Vec<String>,
    /// Bundle description file.
    #[arg(long, value_name = "PATH")]
    pub bundle: Option<PathBuf>,
    #[arg(long, default_value_t = crate::catalog::DEFAULT_SAMPLES)]
    pub samples: usize,
    #[arg(long, default_value_t = crate::catalog::DEFAULT_SEED)]
    pub seed: u64,
    /// Tolerance override, `check-id=value` or `group=value` (repeatable).
    #[arg(long = "tol", value_name = "ID=V")]
    pub tol: Vec<String>,
    /// Comma-separated suites: axioms, tensors, classify, theorems, all.
    #[arg(long, default_value = "all")]
    pub checks: String,
    #[arg(long, value_parser = ["json", "markdown"], default_value = "json")]
    pub format: String,
    /// Write the report here instead of standard output.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// exact | dual | fd
    #[arg(long)]
    pub derivatives: Option<String>,
}

fn assignments(items: &[String]) -> Result<BTreeMap<String, f64>> {
    let mut m = BTreeMap::new();
    for s in items {
        let (k, v) = parse_assignment(s)?;
        if m.insert(k.clone(), v).is_some() {
            return Err(Error::Config(format!("'{k}' given twice")));
        }
    }
    Ok(m)
}

impl Cli {
    pub fn config(&self) -> Result<RunConfig> {
        let structure = match (&self.structure, &self.bundle) {
            (Some(key), None) => Source::Catalog { key: key.clone(), params: assignments(&self.params)? },
            (None, Some(path)) if self.params.is_empty() => Source::Bundle { path: path.clone() },
            (None, Some(_)) => return Err(Error::Config("--param applies to catalog entries only".into())),
            _ => return Err(Error::Config("give exactly one of --structure or --bundle".into())),
        };
        if self.samples == 0 {
            return Err(Error::Config("--samples must be positive".into()));
        }
        let tol = assignments(&self.tol)?;
        if let Some((k, v)) = tol.iter().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::Config(format!("tolerance for '{k}' must be positive, got {v}")));
        }
        Ok(RunConfig {
            structure,
            samples: self.samples,
            seed: self.seed,
            tol,
            checks: parse_checks(&self.checks)?,
            format: if self.format == "markdown" { Format::Markdown } else { Format::Json },
            derivatives: self.derivatives.as_deref().map(parse_strategy).transpose()?,
        })
    }
}

/// Run from parsed arguments; returns the process exit code.
pub fn execute(cli: &Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let outcome = cli.config().and_then(|c| run(&c));
    let report = match outcome {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return EXIT_ERROR;
        }
    };
    let text = report.render();
    let written = match &cli.out {
        Some(path) => std::fs::write(path, &text).map_err(|e| format!("{}: {e}", path.display())),
        None => stdout.write_all(text.as_bytes()).map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        let _ = writeln!(stderr, "error: {e}");
        return EXIT_ERROR;
    }
    report.exit_code()
}

/// Entry point for the binary.
pub fn main_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { 0 };
        }
    };
    execute(&cli, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
