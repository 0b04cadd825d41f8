//! On-disk layout of a run:
//!
//! ```text
//! <dir>/manifest.json
//! <dir>/summary.json
//! <dir>/summary.schema.json
//! <dir>/seed-<s>/user-<uu>.csv
//! <dir>/seed-<s>/baseline-user-<uu>.csv
//! <dir>/FAILED                      only after a runtime failure
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use ee_core::regret::MeanRegret;
use ee_core::units::watts_to_dbm;
use ee_core::{FrameRecord, RegretReport, StepPolicy};
use ee_netsim::MobilityClass;
use serde::{Deserialize, Serialize};

use crate::runner::SeedRun;
use crate::scenario::Scenario;
use crate::{CliError, Result};

pub const CSV_SCHEMA_VERSION: u32 = 1;
pub const SUMMARY_SCHEMA_VERSION: u32 = 1;
pub const SUMMARY_SCHEMA: &str = include_str!("../schema/summary.schema.json");
pub const CSV_COLUMNS: [&str; 6] = ["frame", "power_dbm", "rate_bps_hz", "ee", "ee_instant_opt", "regret_avg"];
pub const BASELINE_COLUMNS: [&str; 4] = ["frame", "power_dbm", "rate_bps_hz", "ee"];
pub const FAILED_MARKER: &str = "FAILED";

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub scenario: String,
    pub scenario_sha256: String,
    pub seeds: Vec<u64>,
    pub network_seed: Option<u64>,
    pub horizon: u64,
    pub code_version: String,
    pub csv_schema_version: u32,
    pub summary_schema_version: u32,
}

impl Manifest {
    pub fn new(scenario: &Scenario) -> Self {
        Self {
            scenario: scenario.name.clone(),
            scenario_sha256: scenario.hash(),
            seeds: scenario.seeds.clone(),
            network_seed: scenario.network_seed,
            horizon: scenario.horizon_frames,
            code_version: concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")).into(),
            csv_schema_version: CSV_SCHEMA_VERSION,
            summary_schema_version: SUMMARY_SCHEMA_VERSION,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UserSummary {
    pub user: usize,
    pub mobility: MobilityClass,
    pub speed_kmh: f64,
    pub distance_km: f64,
    pub policy: StepPolicy,
    pub ee_gain: f64,
    pub ee_gain_final_frame: f64,
    pub final_average_regret: f64,
    pub regret: RegretReport,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeedSummary {
    pub seed: u64,
    pub network_seed: u64,
    pub users: Vec<UserSummary>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UserAggregate {
    pub user: usize,
    pub median_ee_gain: f64,
    pub min_ee_gain: f64,
    pub median_final_average_regret: f64,
    /// Seed-averaged regret and its bound; absent for single-seed runs.
    pub mean_regret: Option<MeanRegret>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub scenario: String,
    pub horizon: u64,
    pub noisy: bool,
    /// Factor from the internal EE unit (nats per second-hertz per watt) to bits per joule.
    pub ee_scale_bits_per_joule: f64,
    pub seeds: Vec<SeedSummary>,
    pub users: Vec<UserAggregate>,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

impl SeedSummary {
    pub fn from_run(run: &SeedRun) -> Self {
        Self {
            seed: run.seed,
            network_seed: run.network_seed,
            users: run
                .users
                .iter()
                .map(|u| UserSummary {
                    user: u.user,
                    mobility: u.mobility.class,
                    speed_kmh: u.mobility.speed_kmh,
                    distance_km: u.distance_km,
                    policy: u.policy,
                    ee_gain: u.ee_gain(),
                    ee_gain_final_frame: u.ee_gain_final_frame(),
                    final_average_regret: u.report.average_regret,
                    regret: u.report.clone(),
                })
                .collect(),
        }
    }
}

impl Summary {
    pub fn new(scenario: &Scenario, ee_scale: f64, seeds: Vec<SeedSummary>) -> Self {
        let n_users = seeds.first().map_or(0, |s| s.users.len());
        let users = (0..n_users)
            .map(|u| {
                let gains: Vec<f64> = seeds.iter().map(|s| s.users[u].ee_gain).collect();
                let regrets: Vec<f64> = seeds.iter().map(|s| s.users[u].final_average_regret).collect();
                let reports: Vec<RegretReport> = seeds.iter().map(|s| s.users[u].regret.clone()).collect();
                UserAggregate {
                    user: u,
                    median_ee_gain: median(&gains),
                    min_ee_gain: gains.iter().copied().fold(f64::INFINITY, f64::min),
                    median_final_average_regret: median(&regrets),
                    mean_regret: ee_core::regret::mean_regret_over_seeds(&reports).ok(),
                }
            })
            .collect();
        Self {
            schema_version: SUMMARY_SCHEMA_VERSION,
            scenario: scenario.name.clone(),
            horizon: scenario.horizon_frames,
            noisy: scenario.noise.is_some(),
            ee_scale_bits_per_joule: ee_scale,
            seeds,
            users,
        }
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x.is_finite() && a != 0.0 && !(1e-5..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

pub fn seed_dir(dir: &Path, seed: u64) -> PathBuf {
    dir.join(format!("seed-{seed}"))
}

pub fn user_csv(dir: &Path, seed: u64, user: usize) -> PathBuf {
    seed_dir(dir, seed).join(format!("user-{user:02}.csv"))
}

pub fn baseline_csv(dir: &Path, seed: u64, user: usize) -> PathBuf {
    seed_dir(dir, seed).join(format!("baseline-user-{user:02}.csv"))
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

fn baseline_row(r: &FrameRecord, scale: f64) -> [String; 4] {
    [
        r.frame.to_string(),
        fmt_f64(watts_to_dbm(r.power_used)),
        fmt_f64(ee_core::units::nats_to_bits(r.rate)),
        fmt_f64(r.ee_achieved * scale),
    ]
}

pub fn write_baseline_csv(path: &Path, records: &[FrameRecord], scale: f64) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(BASELINE_COLUMNS).map_err(|e| io_err(path, e))?;
    for r in records {
        w.write_record(baseline_row(r, scale)).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Per-user CSVs of one seed.
pub fn write_seed(dir: &Path, run: &SeedRun) -> Result<()> {
    let sd = seed_dir(dir, run.seed);
    fs::create_dir_all(&sd).map_err(|e| io_err(&sd, e))?;
    let scale = run.ee_scale;
    for u in &run.users {
        let path = user_csv(dir, run.seed, u.user);
        let mut w = csv::Writer::from_path(&path).map_err(|e| io_err(&path, e))?;
        w.write_record(CSV_COLUMNS).map_err(|e| io_err(&path, e))?;
        for (r, cum) in u.records.iter().zip(&u.regret_curve) {
            let [frame, power, rate, ee] = baseline_row(r, scale);
            let opt = r.ee_instant_opt.map(|v| fmt_f64(v * scale)).unwrap_or_default();
            let avg = fmt_f64(cum / r.frame as f64 * scale);
            w.write_record([frame, power, rate, ee, opt, avg]).map_err(|e| io_err(&path, e))?;
        }
        w.flush().map_err(|e| io_err(&path, e))?;
        write_baseline_csv(&baseline_csv(dir, run.seed, u.user), &u.baseline, scale)?;
    }
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn read_summary(dir: &Path) -> Result<Summary> {
    let path = dir.join("summary.json");
    let text = fs::read_to_string(&path).map_err(|e| CliError::Validation(vec![format!("{}: {e}", path.display())]))?;
    serde_json::from_str(&text).map_err(|e| CliError::Validation(vec![format!("{}: {e}", path.display())]))
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join("manifest.json");
    let text = fs::read_to_string(&path).map_err(|e| CliError::Validation(vec![format!("{}: {e}", path.display())]))?;
    serde_json::from_str(&text).map_err(|e| CliError::Validation(vec![format!("{}: {e}", path.display())]))
}

/// One parsed row of a per-user CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvRow {
    pub frame: u64,
    pub power_dbm: f64,
    pub rate_bps_hz: f64,
    pub ee: f64,
    pub ee_instant_opt: Option<f64>,
    pub regret_avg: f64,
}

pub fn read_user_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let bad = |msg: String| CliError::Validation(vec![format!("{}: {msg}", path.display())]);
    let mut r = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let header = r.headers().map_err(|e| bad(e.to_string()))?;
    if header.iter().ne(CSV_COLUMNS) {
        return Err(bad(format!("unexpected header {header:?}")));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|e| bad(format!("{s:?}: {e}")));
    r.records()
        .map(|rec| {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            Ok(CsvRow {
                frame: rec[0].parse().map_err(|e| bad(format!("frame {:?}: {e}", &rec[0])))?,
                power_dbm: num(&rec[1])?,
                rate_bps_hz: num(&rec[2])?,
                ee: num(&rec[3])?,
                ee_instant_opt: if rec[4].is_empty() { None } else { Some(num(&rec[4])?) },
                regret_avg: num(&rec[5])?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for x in [0.0, -0.0, 1.0, 0.1, 1e-7, 123456.789, 3.3e17, -2.5e-12, f64::NEG_INFINITY, 30.000000000000004] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
        assert_eq!(fmt_f64(30.0), "30");
        assert_eq!(fmt_f64(1e-7), "1e-7");
    }

    #[test]
    fn median_cases() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }
}
