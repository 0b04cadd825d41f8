//! Regret-bound verification of finished artifacts.
//!
//! Before comparing regret with its bound, every user's summary entry is
//! cross-checked against its CSV: the cumulative regret must equal
//! `T·oracle − Σ ee`, the last `regret_avg` must equal the cumulative regret
//! over `T`, and the stored bounds must follow from `(γ, α, V₀, T)`. Edited
//! regret figures therefore fail the check instead of slipping through.

use std::fmt;
use std::path::Path;

use ee_core::regret::mean_regret_over_seeds;
use ee_core::{RegretReport, StepPolicy};
use serde::Serialize;

use crate::artifact::{read_summary, read_user_csv, user_csv, Summary, UserSummary, FAILED_MARKER};
use crate::{CliError, Result};

const REL_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// `(1 + γ²V₀²)/γ · √T` for `γ_n = γ/√n`.
    Sqrt,
    /// `½ γ V₀² (1 + log T)` for `γ_n = γ/n`.
    Log,
    /// `1/γ_T + ½ V₀² Σ γ_n` for other exponents.
    Anytime,
    /// Seed mean against `1/γ_T + (V̂₀²/2) Σ γ_n`.
    Mean,
    /// Summary and CSV disagree.
    Audit,
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundCheck {
    /// `None` for seed-averaged checks.
    pub seed: Option<u64>,
    pub user: usize,
    pub kind: BoundKind,
    pub regret: f64,
    pub bound: f64,
    pub pass: bool,
    pub note: Option<String>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct BoundsReport {
    pub checks: Vec<BoundCheck>,
}

impl BoundsReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &BoundCheck> {
        self.checks.iter().filter(|c| !c.pass)
    }

    /// Whether every check of `user` passed.
    pub fn user_passed(&self, user: usize) -> bool {
        self.checks.iter().filter(|c| c.user == user).all(|c| c.pass)
    }
}

impl fmt::Display for BoundsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:>6} {:>5} {:>8} {:>14} {:>14}  result", "seed", "user", "bound", "regret", "limit")?;
        for c in &self.checks {
            let seed = c.seed.map_or("mean".to_string(), |s| s.to_string());
            write!(
                f,
                "{seed:>6} {:>5} {:>8} {:>14.6e} {:>14.6e}  {}",
                c.user,
                format!("{:?}", c.kind).to_lowercase(),
                c.regret,
                c.bound,
                if c.pass { "pass" } else { "FAIL" }
            )?;
            if let Some(note) = &c.note {
                write!(f, "  ({note})")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= REL_TOL * scale.abs().max(1.0)
}

fn missing(seed: u64, user: usize, what: &str) -> CliError {
    CliError::MissingInputs(format!("seed {seed} user {user}: {what}"))
}

/// Bound for the policy the user actually ran.
fn policy_bound(u: &UserSummary, seed: u64) -> Result<(BoundKind, f64)> {
    let r = &u.regret;
    match u.policy {
        StepPolicy::Harmonic { .. } => r
            .bound_log
            .map(|b| (BoundKind::Log, b))
            .ok_or_else(|| missing(seed, u.user, "harmonic policy without bound_log")),
        StepPolicy::PowerLaw { alpha, .. } if alpha == 0.5 => Ok((BoundKind::Sqrt, r.bound_sqrt)),
        StepPolicy::PowerLaw { .. } => Ok((BoundKind::Anytime, r.bound_anytime)),
    }
}

fn check_inputs(u: &UserSummary, seed: u64, horizon: u64) -> Result<()> {
    let r = &u.regret;
    if !(r.gamma.is_finite() && r.gamma > 0.0) {
        return Err(missing(seed, u.user, "gamma"));
    }
    if !(r.alpha.is_finite() && r.alpha > 0.0 && r.alpha <= 1.0) {
        return Err(missing(seed, u.user, "alpha"));
    }
    if !r.v0_measured.is_finite() {
        return Err(missing(seed, u.user, "v0_measured"));
    }
    if r.horizon != horizon || r.grad_norm_sq.len() as u64 != horizon {
        return Err(missing(seed, u.user, "per-frame gradient norms"));
    }
    Ok(())
}

/// Why the summary entry disagrees with itself, if it does.
fn internal_mismatch(u: &UserSummary) -> Option<String> {
    let r: &RegretReport = &u.regret;
    let t = r.horizon;
    let tf = t as f64;
    if u.policy.gamma() != r.gamma || u.policy.alpha() != r.alpha {
        return Some("step policy differs from the regret report".into());
    }
    let v0 = r.grad_norm_sq.iter().copied().fold(0.0, f64::max).sqrt();
    if !close(v0, r.v0_measured, v0) {
        return Some(format!("V0 {} does not match gradient norms ({v0})", r.v0_measured));
    }
    let p = u.policy;
    let g = r.gamma;
    let sqrt = (1.0 + g * g * v0 * v0) / g * tf.sqrt();
    let anytime = 1.0 / p.step_size(t) + 0.5 * v0 * v0 * p.sum_steps(t);
    let log = p.is_harmonic().then(|| 0.5 * g * v0 * v0 * (1.0 + tf.ln()));
    if !close(sqrt, r.bound_sqrt, sqrt) || !close(anytime, r.bound_anytime, anytime) {
        return Some("stored bounds do not follow from (gamma, alpha, V0, T)".into());
    }
    match (log, r.bound_log) {
        (Some(a), Some(b)) if close(a, b, a) => {}
        (None, None) => {}
        _ => return Some("stored log bound does not follow from (gamma, V0, T)".into()),
    }
    if !close(r.average_regret * tf, r.cumulative_regret, tf * r.oracle_value) {
        return Some("average regret is not cumulative regret over T".into());
    }
    if !close(r.average_regret, u.final_average_regret, r.oracle_value) {
        return Some("final_average_regret differs from the report".into());
    }
    None
}

/// Why the CSV disagrees with the summary entry, if it does.
fn csv_mismatch(dir: &Path, seed: u64, u: &UserSummary, scale: f64) -> Result<Option<String>> {
    let rows = read_user_csv(&user_csv(dir, seed, u.user))?;
    let r = &u.regret;
    if rows.len() as u64 != r.horizon {
        return Ok(Some(format!("{} CSV rows for horizon {}", rows.len(), r.horizon)));
    }
    if rows.iter().enumerate().any(|(i, row)| row.frame != i as u64 + 1) {
        return Ok(Some("CSV frames are not 1..=T".into()));
    }
    let tf = r.horizon as f64;
    let magnitude = tf * r.oracle_value.abs() + rows.iter().map(|row| row.ee.abs()).sum::<f64>() / scale;
    let from_ee = tf * r.oracle_value - rows.iter().map(|row| row.ee).sum::<f64>() / scale;
    if !close(from_ee, r.cumulative_regret, magnitude) {
        return Ok(Some(format!(
            "cumulative regret {} differs from T*oracle - sum(ee) = {from_ee}",
            r.cumulative_regret
        )));
    }
    let last = rows.last().expect("horizon is at least one").regret_avg * tf / scale;
    if !close(last, r.cumulative_regret, magnitude) {
        return Ok(Some(format!(
            "regret_avg at T implies cumulative regret {last}, summary says {}",
            r.cumulative_regret
        )));
    }
    Ok(None)
}

/// Bound checks on a summary alone.
pub fn check_summary(summary: &Summary) -> Result<BoundsReport> {
    check(summary, None)
}

/// Bound checks on an artifact directory, including the summary/CSV audit.
pub fn check_bounds(dir: &Path) -> Result<BoundsReport> {
    if dir.join(FAILED_MARKER).exists() {
        return Err(CliError::Validation(vec![format!(
            "{} carries a failure marker; the artifact is incomplete",
            dir.display()
        )]));
    }
    let summary = read_summary(dir)?;
    check(&summary, Some(dir))
}

fn check(summary: &Summary, dir: Option<&Path>) -> Result<BoundsReport> {
    if summary.seeds.is_empty() {
        return Err(CliError::MissingInputs("summary lists no seeds".into()));
    }
    let mut report = BoundsReport::default();
    for s in &summary.seeds {
        for u in &s.users {
            check_inputs(u, s.seed, summary.horizon)?;
            let mut mismatch = internal_mismatch(u);
            if mismatch.is_none() {
                if let Some(dir) = dir {
                    mismatch = csv_mismatch(dir, s.seed, u, summary.ee_scale_bits_per_joule)?;
                }
            }
            if let Some(note) = mismatch {
                report.checks.push(BoundCheck {
                    seed: Some(s.seed),
                    user: u.user,
                    kind: BoundKind::Audit,
                    regret: u.regret.cumulative_regret,
                    bound: f64::NAN,
                    pass: false,
                    note: Some(note),
                });
                continue;
            }
            if summary.noisy {
                continue;
            }
            let (kind, bound) = policy_bound(u, s.seed)?;
            report.checks.push(BoundCheck {
                seed: Some(s.seed),
                user: u.user,
                kind,
                regret: u.regret.cumulative_regret,
                bound,
                pass: u.regret.cumulative_regret <= bound,
                note: (!u.regret.oracle_converged).then(|| "oracle hit its iteration cap".into()),
            });
        }
    }
    if summary.noisy {
        if summary.seeds.len() < 2 {
            return Err(CliError::MissingInputs(
                "the seed-averaged bound for noisy runs needs at least two seeds".into(),
            ));
        }
        let n_users = summary.seeds[0].users.len();
        for user in 0..n_users {
            let runs: Vec<RegretReport> = summary
                .seeds
                .iter()
                .map(|s| {
                    s.users
                        .get(user)
                        .map(|u| u.regret.clone())
                        .ok_or_else(|| CliError::MissingInputs(format!("seed {} lacks user {user}", s.seed)))
                })
                .collect::<Result<_>>()?;
            let mean = mean_regret_over_seeds(&runs).map_err(|e| {
                CliError::MissingInputs(format!("user {user}: {e}; noisy runs need a common network_seed"))
            })?;
            report.checks.push(BoundCheck {
                seed: None,
                user,
                kind: BoundKind::Mean,
                regret: mean.mean_cumulative_regret,
                bound: mean.bound,
                pass: mean.mean_cumulative_regret <= mean.bound,
                note: Some(format!("{} seeds", mean.runs)),
            });
        }
    }
    Ok(report)
}
