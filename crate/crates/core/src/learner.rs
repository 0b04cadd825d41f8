//! Online gradient ascent over the unit-trace set.
//!
//! Each frame the learner transmits with `Q = Q(X)`, receives a (possibly
//! noisy) gradient `V` of the frame's utility and moves to `Π(X + γ_n V)`.

use serde::{Deserialize, Serialize};

use crate::hermitian::BlockDiagHermitian;
use crate::objective::{
    from_transformed, gradient, to_transformed, EffectiveChannel, PowerBudget, PowerProfile, TransformedProfile,
};
use crate::projection::project_transformed;
use crate::{Error, Result};

/// Step-size sequence `γ_n = γ / n^α`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepPolicy {
    PowerLaw { gamma: f64, alpha: f64 },
    /// `γ_n = γ / n`; requires `γ ≥ 1/a` for the logarithmic regret guarantee.
    Harmonic { gamma: f64 },
}

impl Default for StepPolicy {
    fn default() -> Self {
        StepPolicy::PowerLaw { gamma: 1.0, alpha: 0.5 }
    }
}

impl StepPolicy {
    pub fn power_law(gamma: f64, alpha: f64) -> Result<Self> {
        let p = StepPolicy::PowerLaw { gamma, alpha };
        p.validate()?;
        Ok(p)
    }

    pub fn harmonic(gamma: f64) -> Result<Self> {
        let p = StepPolicy::Harmonic { gamma };
        p.validate()?;
        Ok(p)
    }

    /// `γ_n = n^{-1/2} / V₀`, the tuning that minimizes the `√T` regret coefficient.
    pub fn tuned(v0: f64) -> Result<Self> {
        if !(v0 > 0.0 && v0.is_finite()) {
            return Err(Error::InvalidParameter(format!("V0 estimate must be positive, got {v0}")));
        }
        Self::power_law(1.0 / v0, 0.5)
    }

    pub fn validate(&self) -> Result<()> {
        let (gamma, alpha) = (self.gamma(), self.alpha());
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        Ok(())
    }

    pub fn gamma(&self) -> f64 {
        match *self {
            StepPolicy::PowerLaw { gamma, .. } | StepPolicy::Harmonic { gamma } => gamma,
        }
    }

    pub fn alpha(&self) -> f64 {
        match *self {
            StepPolicy::PowerLaw { alpha, .. } => alpha,
            StepPolicy::Harmonic { .. } => 1.0,
        }
    }

    pub fn is_harmonic(&self) -> bool {
        matches!(self, StepPolicy::Harmonic { .. })
    }

    pub fn with_gamma(self, gamma: f64) -> Self {
        match self {
            StepPolicy::PowerLaw { alpha, .. } => StepPolicy::PowerLaw { gamma, alpha },
            StepPolicy::Harmonic { .. } => StepPolicy::Harmonic { gamma },
        }
    }

    /// `γ_n` for the 1-based frame counter `n`.
    pub fn step_size(&self, n: u64) -> f64 {
        debug_assert!(n >= 1, "step sizes are indexed from 1");
        let n = n.max(1) as f64;
        match *self {
            StepPolicy::PowerLaw { gamma, alpha } => gamma / n.powf(alpha),
            StepPolicy::Harmonic { gamma } => gamma / n,
        }
    }

    /// `Σ_{n=1}^{T} γ_n`.
    pub fn sum_steps(&self, horizon: u64) -> f64 {
        (1..=horizon).map(|n| self.step_size(n)).sum()
    }
}

pub fn step_size(policy: &StepPolicy, n: u64) -> f64 {
    policy.step_size(n)
}

/// Starting point of the learner.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Initialization {
    /// `X = 0`: the first frame is silent and only probes the channel.
    AgnosticZero,
    /// `X = I / (KM)`: full power spread evenly over antennas and subcarriers.
    Uniform,
    /// `Q = P₀ / (KM) · I` for the given power `P₀` in watts.
    UniformPower(f64),
}

#[derive(Clone, Debug)]
pub struct LearnerState {
    x: TransformedProfile,
    frame: u64,
    running_v_max: f64,
    policy: StepPolicy,
    calibrate_gamma: bool,
}

pub fn initialize(
    kind: Initialization,
    budget: PowerBudget,
    dims: &[usize],
    policy: StepPolicy,
) -> Result<LearnerState> {
    policy.validate()?;
    let total: usize = dims.iter().sum();
    let x = match kind {
        Initialization::AgnosticZero => TransformedProfile::zeros(dims, budget),
        Initialization::Uniform => {
            TransformedProfile::new(BlockDiagHermitian::scaled_identity(dims, 1.0 / total as f64), budget)?
        }
        Initialization::UniformPower(p0) => {
            if !(0.0..=budget.p_max).contains(&p0) {
                return Err(Error::InvalidParameter(format!(
                    "initial power {p0} W outside [0, {}]",
                    budget.p_max
                )));
            }
            to_transformed(&PowerProfile::uniform(dims, p0, budget)?)
        }
    };
    Ok(LearnerState::new(x, policy))
}

impl LearnerState {
    pub fn new(x: TransformedProfile, policy: StepPolicy) -> Self {
        Self {
            x,
            frame: 0,
            running_v_max: 0.0,
            policy,
            calibrate_gamma: false,
        }
    }

    /// Replace `γ` by `1/‖V(1)‖_F` once the first gradient has been observed.
    ///
    /// The first frame then doubles as the handshake that estimates `V₀`.
    pub fn calibrate_gamma_on_first_gradient(mut self) -> Self {
        self.calibrate_gamma = true;
        self
    }

    /// Swaps the step policy, keeping the iterate and the frame counter.
    pub fn with_policy(mut self, policy: StepPolicy) -> Result<Self> {
        policy.validate()?;
        self.policy = policy;
        self.calibrate_gamma = false;
        Ok(self)
    }

    pub fn x(&self) -> &TransformedProfile {
        &self.x
    }

    pub fn frame(&self) -> u64 {
        self.frame
    }

    /// Largest `‖V‖_F` observed so far.
    pub fn running_v_max(&self) -> f64 {
        self.running_v_max
    }

    pub fn policy(&self) -> StepPolicy {
        self.policy
    }

    pub fn transmit_covariance(&self) -> PowerProfile {
        from_transformed(&self.x)
    }

    /// `X ← Π(X + γ_n V)` with `n` the 1-based index of this update.
    pub fn oga_update(&self, v: &BlockDiagHermitian) -> Result<LearnerState> {
        if !v.same_structure(self.x.x()) {
            return Err(Error::DimensionMismatch(format!(
                "gradient structure {:?} vs state {:?}",
                v.block_dims(),
                self.x.x().block_dims()
            )));
        }
        let norm = v.frobenius();
        let mut policy = self.policy;
        let mut calibrate_gamma = self.calibrate_gamma;
        if calibrate_gamma && self.frame == 0 && norm > 0.0 {
            policy = policy.with_gamma(1.0 / norm);
            calibrate_gamma = false;
        }
        let n = self.frame + 1;
        let y = self.x.x().add_scaled(v, policy.step_size(n))?;
        let x = project_transformed(&y, self.x.budget())?;
        Ok(LearnerState {
            x,
            frame: n,
            running_v_max: self.running_v_max.max(norm),
            policy,
            calibrate_gamma,
        })
    }
}

/// Candidate exponents `j` of the pilot search `γ = 2^{-j} / ‖V(X₀)‖_F`.
pub const PILOT_EXPONENTS: std::ops::RangeInclusive<i32> = -2..=24;

/// Step constant chosen on a pilot frame.
///
/// For every candidate `γ = 2^{-j}/‖V(X₀)‖_F`, OGA with `policy`'s exponent is
/// replayed for `rounds` steps on the frozen channel `h` starting from `x0`;
/// the candidate with the largest mean utility is returned (the larger `γ` on ties).
pub fn pilot_gamma(x0: &TransformedProfile, h: &EffectiveChannel, policy: StepPolicy, rounds: usize) -> Result<f64> {
    let v0 = gradient(x0, h)?.frobenius();
    if v0 == 0.0 {
        return Ok(policy.gamma());
    }
    let mut best = (f64::NEG_INFINITY, policy.gamma());
    for j in PILOT_EXPONENTS {
        let gamma = 2f64.powi(-j) / v0;
        let mut s = LearnerState::new(x0.clone(), policy.with_gamma(gamma));
        let mut total = 0.0;
        for _ in 0..rounds {
            let (u, v) = crate::objective::utility_and_gradient(s.x(), h)?;
            total += u;
            s = s.oga_update(&v)?;
        }
        if total > best.0 {
            best = (total, gamma);
        }
    }
    Ok(best.1)
}

/// Source of the gradient the learner sees after each transmission.
pub trait GradientFeedback {
    fn observe(&mut self, x: &TransformedProfile, h: &EffectiveChannel) -> Result<BlockDiagHermitian>;
}

/// Exact gradients.
#[derive(Clone, Copy, Debug, Default)]
pub struct PerfectFeedback;

impl GradientFeedback for PerfectFeedback {
    fn observe(&mut self, x: &TransformedProfile, h: &EffectiveChannel) -> Result<BlockDiagHermitian> {
        gradient(x, h)
    }
}
