//! `histq`: batch front end over `histq-core`.
//!
//! Scenario files (JSON) go in; JSON reports and CSV series come out. Every
//! report row carries the tag of the representation that produced it:
//! `decf1` for the class-operator trace, `decf` for the basis-sum form,
//! `ILS2` for the operator on the doubled space, `propa` for the Wright
//! operator on propositions and `ent` for entropies.
//!
//! Exit codes: 0 on success, 2 on invalid input or an unsupported size,
//! 3 when any property check fails.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use histq_core::Tolerances;

mod commands;
pub mod report;
pub mod scenario;
mod suite;

pub use scenario::{Scenario, ScenarioError, Setup};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_PROPERTY_FAILURE: i32 = 3;

/// Environment variable holding tolerance overrides such as
/// `consistency=1e-8,positivity=1e-14`.
pub const TOLERANCE_ENV: &str = "HISTQ_TOL";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Decoherence values in every representation, with agreement residuals.
    Decohere,
    /// Consistent-window search and consistency reports.
    Windows,
    /// Window entropies, minimum and refinement suprema.
    Entropy,
    /// Truncation series of the two singular histories, with growth fits.
    Diverge,
    /// Full property suite.
    Verify,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Decohere => "decohere",
            Command::Windows => "windows",
            Command::Entropy => "entropy",
            Command::Diverge => "diverge",
            Command::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Series {
    B1,
    B2,
}

#[derive(Debug, Clone, Parser)]
#[command(
    name = "histq",
    version,
    about = "Decoherence functionals, consistent windows and entropies for finite quantum systems"
)]
pub struct Cli {
    pub command: Command,
    /// Scenario file; optional for `diverge` only.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Directory for report files; reports go to stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Largest truncation for the divergence series.
    #[arg(long, default_value_t = 16384)]
    pub max_n: usize,
    /// Restricts `diverge` to one series.
    #[arg(long, value_enum)]
    pub series: Option<Series>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Invalid(String),
    Io(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid(m) => write!(f, "invalid input: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        CliError::Invalid(e.to_string())
    }
}

impl From<histq_core::Error> for CliError {
    fn from(e: histq_core::Error) -> Self {
        CliError::Invalid(e.to_string())
    }
}

/// One output file.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub file_name: String,
    pub contents: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// The JSON report comes first.
    pub artifacts: Vec<Artifact>,
    pub passed: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            EXIT_OK
        } else {
            EXIT_PROPERTY_FAILURE
        }
    }
}

fn tolerances(overrides: Option<&str>) -> Result<Tolerances, CliError> {
    match overrides {
        Some(text) => Tolerances::default()
            .with_overrides(text)
            .map_err(|e| CliError::Invalid(format!("{TOLERANCE_ENV}: {e}"))),
        None => Ok(Tolerances::default()),
    }
}

pub fn load_setup(path: &Path, tol: Tolerances) -> Result<Setup, CliError> {
    let scenario = scenario::load(path)?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".into());
    Ok(scenario.validate(&stem, tol)?)
}

/// Runs a command without touching the filesystem beyond reading the
/// scenario.
pub fn execute(cli: &Cli, tol_overrides: Option<&str>) -> Result<Outcome, CliError> {
    let tol = tolerances(tol_overrides)?;
    let setup = match &cli.scenario {
        Some(path) => Some(load_setup(path, tol)?),
        None if cli.command == Command::Diverge => None,
        None => return Err(CliError::Invalid(format!("{} needs --scenario", cli.command.name()))),
    };
    let setup = setup.map(|mut s| {
        if let Some(seed) = cli.seed {
            s.seed = seed;
        }
        s
    });
    if cli.max_n < 2 {
        return Err(CliError::Invalid("--max-n must be at least 2".into()));
    }
    match (cli.command, setup) {
        (Command::Diverge, setup) => commands::diverge(setup.as_ref(), cli.series, cli.max_n),
        (Command::Decohere, Some(s)) => commands::decohere(&s),
        (Command::Windows, Some(s)) => commands::windows(&s),
        (Command::Entropy, Some(s)) => commands::entropy(&s),
        (Command::Verify, Some(s)) => suite::verify(&s, cli.max_n),
        (_, None) => unreachable!("scenario presence checked above"),
    }
}

/// Writes the artifacts into `dir`, creating it if needed.
pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    for a in artifacts {
        let path = dir.join(&a.file_name);
        std::fs::write(&path, &a.contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(())
}

/// Full command-line behaviour; returns the process exit code.
pub fn run(cli: &Cli, tol_overrides: Option<&str>) -> i32 {
    let outcome = match execute(cli, tol_overrides) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("histq: {e}");
            return EXIT_INVALID;
        }
    };
    match &cli.out {
        Some(dir) => {
            if let Err(e) = write_artifacts(dir, &outcome.artifacts) {
                eprintln!("histq: {e}");
                return EXIT_INVALID;
            }
        }
        None => print!("{}", outcome.artifacts[0].contents),
    }
    if !outcome.passed {
        eprintln!("histq: {} reported failing checks", cli.command.name());
    }
    outcome.exit_code()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_documented_flags() {
        let cli = Cli::try_parse_from([
            "histq", "diverge", "--series", "b2", "--max-n", "4096", "--seed", "7", "--out", "x",
        ])
        .unwrap();
        assert_eq!(cli.command, Command::Diverge);
        assert_eq!(cli.series, Some(Series::B2));
        assert_eq!((cli.max_n, cli.seed), (4096, Some(7)));
        assert!(Cli::try_parse_from(["histq", "collapse"]).is_err());
    }

    #[test]
    fn scenario_is_required_except_for_diverge() {
        let cli = Cli::try_parse_from(["histq", "windows"]).unwrap();
        assert!(matches!(execute(&cli, None), Err(CliError::Invalid(_))));
        let cli = Cli::try_parse_from(["histq", "diverge", "--max-n", "4096"]).unwrap();
        assert!(execute(&cli, None).unwrap().passed);
    }

    #[test]
    fn bad_tolerance_overrides_are_rejected() {
        let cli = Cli::try_parse_from(["histq", "diverge", "--max-n", "512"]).unwrap();
        let err = execute(&cli, Some("consistency=abc")).unwrap_err();
        assert!(err.to_string().contains(TOLERANCE_ENV));
    }
}
