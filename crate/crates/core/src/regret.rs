//! Regret accounting against the best fixed transmit profile in hindsight.
//!
//! The comparator maximizes the time-averaged utility `(1/T) Σ_n u_n(X)` over
//! the unit-trace set. That problem is concave, so it is solved to certified
//! first-order optimality with spectral projected gradient ascent: the
//! projected-gradient residual `‖X − Π(X + ∇ū(X))‖_F` vanishes exactly at the
//! maximizer.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::hermitian::BlockDiagHermitian;
use crate::learner::StepPolicy;
use crate::objective::{utility, utility_and_gradient, EffectiveChannel, PowerBudget, TransformedProfile};
use crate::projection::project_transformed;
use crate::{Error, Result};

/// What happened in one frame for one user.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame: u64,
    pub ee_achieved: f64,
    pub ee_instant_opt: Option<f64>,
    /// Radiated power `tr Q` in watts.
    pub power_used: f64,
    /// Rate in nats per channel use, summed over subcarriers.
    pub rate: f64,
    /// `‖V̂‖_F` of the gradient the learner actually received.
    pub grad_norm: f64,
    /// Index of the frame's effective channel in the run's channel trace.
    pub channel_ref: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-7,
            max_iterations: 100_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct OracleSolution {
    pub x: TransformedProfile,
    /// Maximal time-averaged utility.
    pub value: f64,
    pub iterations: usize,
    pub residual: f64,
    /// False when the iteration cap was reached before the residual tolerance.
    pub converged: bool,
}

/// Averaged utility and gradient over a channel trace.
fn averaged(x: &TransformedProfile, channels: &[EffectiveChannel]) -> Result<(f64, BlockDiagHermitian)> {
    let mut value = 0.0;
    let mut grad = BlockDiagHermitian::zeros(&x.x().block_dims());
    for h in channels {
        let (u, v) = utility_and_gradient(x, h)?;
        value += u;
        grad = grad.add(&v)?;
    }
    let w = 1.0 / channels.len() as f64;
    Ok((value * w, grad.scale(w)))
}

/// `argmax_X (1/T) Σ_n u_n(X)` with default tolerances.
pub fn best_fixed_in_hindsight(channels: &[EffectiveChannel], budget: PowerBudget) -> Result<OracleSolution> {
    best_fixed_in_hindsight_with(channels, budget, OracleOptions::default())
}

/// Best response to a single frame, i.e. the instantaneous optimum.
pub fn instantaneous_optimum(h: &EffectiveChannel, budget: PowerBudget) -> Result<OracleSolution> {
    best_fixed_in_hindsight(std::slice::from_ref(h), budget)
}

pub fn best_fixed_in_hindsight_with(
    channels: &[EffectiveChannel],
    budget: PowerBudget,
    options: OracleOptions,
) -> Result<OracleSolution> {
    let first = channels
        .first()
        .ok_or_else(|| Error::InvalidParameter("the oracle needs at least one channel".into()))?;
    let dims = first.tx_dims();
    let total: usize = dims.iter().sum();
    let start = TransformedProfile::new(BlockDiagHermitian::scaled_identity(&dims, 0.5 / total as f64), budget)?;
    best_fixed_in_hindsight_from(channels, budget, options, start)
}

/// Same search started from a given feasible point, e.g. a learner's last iterate.
pub fn best_fixed_in_hindsight_from(
    channels: &[EffectiveChannel],
    budget: PowerBudget,
    options: OracleOptions,
    start: TransformedProfile,
) -> Result<OracleSolution> {
    const MEMORY: usize = 10;
    const SUFFICIENT_INCREASE: f64 = 1e-4;
    const STEP_MIN: f64 = 1e-30;
    const STEP_MAX: f64 = 1e30;

    let first = channels
        .first()
        .ok_or_else(|| Error::InvalidParameter("the oracle needs at least one channel".into()))?;
    if start.x().block_dims() != first.tx_dims() {
        return Err(Error::DimensionMismatch(format!(
            "start {:?} vs channel {:?}",
            start.x().block_dims(),
            first.tx_dims()
        )));
    }

    let mut x = start;
    let (mut f, mut g) = averaged(&x, channels)?;
    let mut history: VecDeque<f64> = VecDeque::from([f]);
    let mut step = 1.0 / g.frobenius().max(1e-12);
    let mut residual = f64::INFINITY;

    for iteration in 0..options.max_iterations {
        residual = project_transformed(&x.x().add(&g)?, budget)?.x().sub(x.x())?.frobenius();
        if residual <= options.tolerance {
            return Ok(OracleSolution {
                x,
                value: f,
                iterations: iteration,
                residual,
                converged: true,
            });
        }

        let target = project_transformed(&x.x().add_scaled(&g, step)?, budget)?;
        let direction = target.x().sub(x.x())?;
        let slope = g.inner(&direction)?;
        let reference = history.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        // Rounding in the objective must not stall the search next to the optimum.
        let slack = 1e-14 * reference.abs().max(1.0);

        let mut t = 1.0;
        let (x_new, f_new, g_new) = loop {
            let candidate = TransformedProfile::new(x.x().add_scaled(&direction, t)?, budget)?;
            let (fc, gc) = averaged(&candidate, channels)?;
            if fc >= reference + SUFFICIENT_INCREASE * t * slope - slack || t < 1e-12 {
                break (candidate, fc, gc);
            }
            t *= 0.5;
        };

        let s = x_new.x().sub(x.x())?;
        let y = g_new.sub(&g)?;
        let sy = s.inner(&y)?;
        step = if sy < 0.0 {
            (s.inner(&s)? / -sy).clamp(STEP_MIN, STEP_MAX)
        } else {
            STEP_MAX.min(step * 10.0)
        };

        x = x_new;
        f = f_new;
        g = g_new;
        history.push_back(f);
        if history.len() > MEMORY {
            history.pop_front();
        }
    }

    Ok(OracleSolution {
        x,
        value: f,
        iterations: options.max_iterations,
        residual,
        converged: false,
    })
}

/// Cumulative and average regret with the theoretical bounds for the run's step policy.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RegretReport {
    pub horizon: u64,
    pub cumulative_regret: f64,
    pub average_regret: f64,
    pub oracle_value: f64,
    /// `(1 + γ²V₀²)/γ · √T`.
    pub bound_sqrt: f64,
    /// `½ γ V₀² (1 + log T)`, only for harmonic step sizes.
    pub bound_log: Option<f64>,
    pub gamma: f64,
    pub alpha: f64,
    pub v0_measured: f64,
    /// `1/γ_T + ½ V₀² Σ γ_n`, valid for every nonincreasing step-size sequence.
    pub bound_anytime: f64,
    #[serde(default)]
    pub oracle_converged: bool,
    /// Squared norms of the received gradients, frame by frame.
    #[serde(default)]
    pub grad_norm_sq: Vec<f64>,
    #[serde(skip)]
    pub oracle_x: Option<TransformedProfile>,
}

/// Regret of `records` against a comparator worth `oracle_value` per frame.
pub fn regret(records: &[FrameRecord], oracle_value: f64, policy: &StepPolicy) -> Result<RegretReport> {
    if records.is_empty() {
        return Err(Error::InvalidParameter("regret needs at least one frame".into()));
    }
    let horizon = records.len() as u64;
    let t = horizon as f64;
    let achieved: f64 = records.iter().map(|r| r.ee_achieved).sum();
    let cumulative = t * oracle_value - achieved;
    let v0 = records.iter().map(|r| r.grad_norm).fold(0.0, f64::max);
    let gamma = policy.gamma();
    let bound_sqrt = (1.0 + gamma * gamma * v0 * v0) / gamma * t.sqrt();
    let bound_log = policy
        .is_harmonic()
        .then(|| 0.5 * gamma * v0 * v0 * (1.0 + t.ln()));
    let bound_anytime = 1.0 / policy.step_size(horizon) + 0.5 * v0 * v0 * policy.sum_steps(horizon);
    Ok(RegretReport {
        horizon,
        cumulative_regret: cumulative,
        average_regret: cumulative / t,
        oracle_value,
        bound_sqrt,
        bound_log,
        gamma,
        alpha: policy.alpha(),
        v0_measured: v0,
        bound_anytime,
        oracle_converged: true,
        grad_norm_sq: records.iter().map(|r| r.grad_norm * r.grad_norm).collect(),
        oracle_x: None,
    })
}

/// Solves the oracle over `channels` and reports the regret of `records`.
pub fn regret_against_oracle(
    records: &[FrameRecord],
    channels: &[EffectiveChannel],
    budget: PowerBudget,
    policy: &StepPolicy,
) -> Result<RegretReport> {
    let oracle = best_fixed_in_hindsight(channels, budget)?;
    let mut report = regret(records, oracle.value, policy)?;
    report.oracle_converged = oracle.converged;
    report.oracle_x = Some(oracle.x);
    Ok(report)
}

/// Running cumulative regret `Σ_{m ≤ n} [u_m(X) − ee_m]` against a fixed comparator `X`.
pub fn regret_curve(
    records: &[FrameRecord],
    channels: &[EffectiveChannel],
    comparator: &TransformedProfile,
) -> Result<Vec<f64>> {
    let mut acc = 0.0;
    records
        .iter()
        .map(|r| {
            let h = channels
                .get(r.channel_ref)
                .ok_or_else(|| Error::InvalidParameter(format!("missing channel {}", r.channel_ref)))?;
            acc += utility(comparator, h)? - r.ee_achieved;
            Ok(acc)
        })
        .collect()
}

/// Seed-averaged regret and its mean bound `1/γ_T + (V̂₀²/2) Σ γ_n`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeanRegret {
    pub runs: usize,
    pub mean_cumulative_regret: f64,
    /// `sup_n` of the seed-averaged `‖V̂(n)‖²`.
    pub v0_hat_sq: f64,
    pub bound: f64,
}

pub fn mean_regret_over_seeds(runs: &[RegretReport]) -> Result<MeanRegret> {
    let first = runs
        .first()
        .ok_or_else(|| Error::MixedRuns("no runs supplied".into()))?;
    if runs.len() < 2 {
        return Err(Error::MixedRuns("at least two runs are required".into()));
    }
    for r in runs {
        if r.horizon != first.horizon || r.gamma != first.gamma || r.alpha != first.alpha {
            return Err(Error::MixedRuns(format!(
                "run (T={}, γ={}, α={}) differs from (T={}, γ={}, α={})",
                r.horizon, r.gamma, r.alpha, first.horizon, first.gamma, first.alpha
            )));
        }
        if r.grad_norm_sq.len() != first.horizon as usize {
            return Err(Error::MixedRuns("gradient norms missing from a run".into()));
        }
    }
    let n_runs = runs.len() as f64;
    let mean = runs.iter().map(|r| r.cumulative_regret).sum::<f64>() / n_runs;
    let v0_hat_sq = (0..first.horizon as usize)
        .map(|n| runs.iter().map(|r| r.grad_norm_sq[n]).sum::<f64>() / n_runs)
        .fold(0.0, f64::max);
    let policy = if first.alpha == 1.0 {
        StepPolicy::Harmonic { gamma: first.gamma }
    } else {
        StepPolicy::PowerLaw {
            gamma: first.gamma,
            alpha: first.alpha,
        }
    };
    let bound = 1.0 / policy.step_size(first.horizon) + 0.5 * v0_hat_sq * policy.sum_steps(first.horizon);
    Ok(MeanRegret {
        runs: runs.len(),
        mean_cumulative_regret: mean,
        v0_hat_sq,
        bound,
    })
}
