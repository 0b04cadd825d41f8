use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ee_scenario::{artifact_dir, check_bounds, check_summary, format_table, prepare, CliError, Overrides};

#[derive(Parser)]
#[command(name = "ee-scenario", version, about = "Run energy-efficiency learning scenarios and check regret bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario TOML file.
    scenario: PathBuf,
    /// Comma-separated seeds replacing the scenario's list.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Number of frames replacing `horizon_frames`.
    #[arg(long)]
    horizon: Option<u64>,
    /// Artifact directory. Defaults to `$EE_SCENARIO_OUT/<name>` or `runs/<name>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seeds run concurrently.
    #[arg(long, default_value_t = 1)]
    parallel: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Play every seed, write CSV/JSON artifacts and print the summary table.
    Run(RunArgs),
    /// Verify each user's regret against the bound of its step policy.
    CheckBounds {
        /// Artifact directory written by `run`.
        artifact: PathBuf,
    },
    /// Record the uniform half-power baseline only.
    Baseline(RunArgs),
    /// Parse and validate a scenario without running it.
    Validate {
        scenario: PathBuf,
    },
}

fn overrides(a: &RunArgs) -> Overrides {
    Overrides {
        seeds: a.seeds.clone(),
        horizon: a.horizon,
    }
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run(a) => {
            let scenario = prepare(&a.scenario, &overrides(&a))?;
            let dir = artifact_dir(&scenario, a.out.as_deref());
            let summary = ee_scenario::run(&scenario, &dir, a.parallel)?;
            let bounds = match check_summary(&summary) {
                Ok(b) => Some(b),
                Err(CliError::MissingInputs(why)) => {
                    eprintln!("bounds not evaluated: {why}");
                    None
                }
                Err(e) => return Err(e),
            };
            print!("{}", format_table(&summary, bounds.as_ref()));
            println!("artifacts: {}", dir.display());
            Ok(())
        }
        Command::CheckBounds { artifact } => {
            let report = check_bounds(&artifact)?;
            print!("{report}");
            if report.passed() {
                println!("all {} checks passed", report.checks.len());
                Ok(())
            } else {
                Err(CliError::BoundViolation(report))
            }
        }
        Command::Baseline(a) => {
            let scenario = prepare(&a.scenario, &overrides(&a))?;
            let dir = artifact_dir(&scenario, a.out.as_deref());
            for (seed, means) in ee_scenario::baseline(&scenario, &dir)? {
                for (u, ee) in means.iter().enumerate() {
                    println!("seed {seed} user {u:>2}: mean EE {ee:.6e} bit/J");
                }
            }
            println!("artifacts: {}", dir.display());
            Ok(())
        }
        Command::Validate { scenario } => {
            let s = prepare(&scenario, &Overrides::default())?;
            if let Some(w) = s.network.model_range_warning() {
                eprintln!("warning: {w}");
            }
            println!("{}: ok ({} seeds, T = {})", scenario.display(), s.seeds.len(), s.horizon_frames);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if let CliError::BoundViolation(report) = &e {
                for c in report.failures() {
                    eprintln!("violation: user {} seed {:?}: {:?}", c.user, c.seed, c.note);
                }
            }
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
