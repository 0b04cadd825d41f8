//! Scenario files in, CSV/JSON artifacts and regret-bound verdicts out.
//!
//! A scenario is a TOML file whose fields carry their units (`p_max_dbm`,
//! `cell_radius_km`, ...). [`run`] plays every seed of it with one
//! online-gradient learner per focal user, replays the same network under
//! the uniform half-power baseline, and writes the artifacts described in
//! [`artifact`]. [`bounds::check_bounds`] re-reads an artifact and verifies
//! the regret guarantees of the step policy that was used.

pub mod artifact;
pub mod bounds;
pub mod runner;
pub mod scenario;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

pub use artifact::{Manifest, Summary};
pub use bounds::{check_bounds, check_summary, BoundsReport};
pub use scenario::Scenario;

/// Environment variable naming the default output root.
pub const OUTPUT_ROOT_ENV: &str = "EE_SCENARIO_OUT";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid scenario:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
    #[error("missing bound inputs: {0}")]
    MissingInputs(String),
    #[error("regret bound violated")]
    BoundViolation(BoundsReport),
    #[error("run failed: {0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) | CliError::MissingInputs(_) => 1,
            CliError::BoundViolation(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<ee_core::Error> for CliError {
    fn from(e: ee_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<ee_netsim::NetsimError> for CliError {
    fn from(e: ee_netsim::NetsimError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Command-line replacements for scenario fields.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seeds: Option<Vec<u64>>,
    pub horizon: Option<u64>,
}

/// Loads, overrides and validates a scenario file.
pub fn prepare(path: &Path, overrides: &Overrides) -> Result<Scenario> {
    let mut scenario = Scenario::load(path)?;
    if let Some(seeds) = &overrides.seeds {
        scenario.seeds = seeds.clone();
    }
    if let Some(t) = overrides.horizon {
        scenario.horizon_frames = t;
    }
    scenario.validate()?;
    Ok(scenario)
}

/// `--out`, else the scenario's `outputs`, else `<root>/<name>` with the root from
/// the environment or `runs`.
pub fn artifact_dir(scenario: &Scenario, out: Option<&Path>) -> PathBuf {
    if let Some(dir) = out {
        return dir.to_path_buf();
    }
    if let Some(dir) = &scenario.outputs {
        return dir.clone();
    }
    let root = std::env::var_os(OUTPUT_ROOT_ENV).map_or_else(|| PathBuf::from("runs"), PathBuf::from);
    root.join(&scenario.name)
}

fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
    for stale in [artifact::FAILED_MARKER, "summary.json"] {
        let p = dir.join(stale);
        if p.exists() {
            fs::remove_file(&p).map_err(|e| CliError::Runtime(format!("{}: {e}", p.display())))?;
        }
    }
    Ok(())
}

fn mark_failed(dir: &Path, errors: &[(u64, CliError)]) -> CliError {
    let mut text = String::new();
    for (seed, e) in errors {
        let _ = writeln!(text, "seed {seed}: {e}");
    }
    let _ = fs::write(dir.join(artifact::FAILED_MARKER), &text);
    CliError::Runtime(text.trim_end().to_string())
}

/// Runs every seed, `parallel` at a time, and writes the artifact into `dir`.
pub fn run(scenario: &Scenario, dir: &Path, parallel: usize) -> Result<Summary> {
    scenario.validate()?;
    if let Some(w) = scenario.network.model_range_warning() {
        log::warn!("{w}");
    }
    prepare_dir(dir)?;
    artifact::write_json(&dir.join("manifest.json"), &Manifest::new(scenario))?;
    fs::write(dir.join("summary.schema.json"), artifact::SUMMARY_SCHEMA)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallel.max(1))
        .build()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let results: Vec<(u64, Result<(f64, artifact::SeedSummary)>)> = pool.install(|| {
        scenario
            .seeds
            .par_iter()
            .map(|&seed| {
                let res = runner::run_seed(scenario, seed).and_then(|run| {
                    artifact::write_seed(dir, &run)?;
                    log::info!("{}: seed {seed} done", scenario.name);
                    Ok((run.ee_scale, artifact::SeedSummary::from_run(&run)))
                });
                (seed, res)
            })
            .collect()
    });

    let mut seeds = Vec::new();
    let mut errors = Vec::new();
    let mut scale = f64::NAN;
    for (seed, res) in results {
        match res {
            Ok((s, summary)) => {
                scale = s;
                seeds.push(summary);
            }
            Err(e) => errors.push((seed, e)),
        }
    }
    if !errors.is_empty() {
        return Err(mark_failed(dir, &errors));
    }
    let summary = Summary::new(scenario, scale, seeds);
    artifact::write_json(&dir.join("summary.json"), &summary)?;
    Ok(summary)
}

/// Uniform-baseline traces for every seed; returns per seed the mean EE per user in bits/J.
pub fn baseline(scenario: &Scenario, dir: &Path) -> Result<Vec<(u64, Vec<f64>)>> {
    scenario.validate()?;
    prepare_dir(dir)?;
    let mut out = Vec::new();
    for &seed in &scenario.seeds {
        let (net, records) = runner::run_baseline(scenario, seed)?;
        let sd = artifact::seed_dir(dir, seed);
        fs::create_dir_all(&sd).map_err(|e| CliError::Runtime(format!("{}: {e}", sd.display())))?;
        let scale = ee_core::units::nats_to_bits(net.config().subcarrier_spacing_hz());
        let mut means = Vec::new();
        for (u, recs) in records.iter().enumerate() {
            artifact::write_baseline_csv(&artifact::baseline_csv(dir, seed, u), recs, scale)?;
            means.push(recs.iter().map(|r| r.ee_achieved).sum::<f64>() / recs.len() as f64 * scale);
        }
        out.push((seed, means));
    }
    Ok(out)
}

/// Per-user table: median and worst EE gain over the baseline, median final average regret
/// and bound compliance across seeds (`n/a` when the bounds could not be evaluated).
pub fn format_table(summary: &Summary, bounds: Option<&BoundsReport>) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "scenario {}: {} seed(s), T = {}{}",
        summary.scenario,
        summary.seeds.len(),
        summary.horizon,
        if summary.noisy { ", noisy feedback" } else { "" }
    );
    let _ = writeln!(
        s,
        "{:>4}  {:<10} {:>12} {:>10} {:>16}  bounds",
        "user", "mobility", "median gain", "min gain", "avg regret"
    );
    for agg in &summary.users {
        let first = &summary.seeds[0].users[agg.user];
        let _ = writeln!(
            s,
            "{:>4}  {:<10} {:>11.3}x {:>9.3}x {:>16.6e}  {}",
            agg.user,
            format!("{:?}", first.mobility).to_lowercase(),
            agg.median_ee_gain,
            agg.min_ee_gain,
            agg.median_final_average_regret * summary.ee_scale_bits_per_joule,
            match bounds {
                Some(b) if b.user_passed(agg.user) => "pass",
                Some(_) => "FAIL",
                None => "n/a",
            }
        );
    }
    s
}
