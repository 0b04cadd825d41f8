//! The synchronous TDD frame loop.

use ee_core::learner::{initialize, pilot_gamma};
use ee_core::objective::{energy_efficiency, rate};
use ee_core::regret::{best_fixed_in_hindsight_from, instantaneous_optimum};
use ee_core::{
    EffectiveChannel, FrameRecord, GradientFeedback, Initialization, LearnerState, NoiseSpec, NoisyFeedback,
    OracleOptions, PerfectFeedback, PowerProfile, StepPolicy, TransformedProfile,
};
use rand::RngCore;

use crate::network::{rng_for, Network, PURPOSE_FEEDBACK};
use crate::Result;

/// OGA steps replayed per candidate when tuning `γ` on the first frame.
pub const PILOT_ROUNDS: usize = 40;

/// A transmitter in the frame loop.
pub enum Agent {
    /// Runs online gradient ascent on whatever feedback it receives.
    Learner {
        state: LearnerState,
        feedback: Box<dyn GradientFeedback>,
        /// Tune `γ` on the first frame's channel with [`pilot_gamma`].
        auto_gamma: bool,
    },
    /// Transmits the same covariance every frame.
    Fixed(PowerProfile),
}

impl Agent {
    pub fn covariance(&self) -> PowerProfile {
        match self {
            Agent::Learner { state, .. } => state.transmit_covariance(),
            Agent::Fixed(q) => q.clone(),
        }
    }

    pub fn learner_state(&self) -> Option<&LearnerState> {
        match self {
            Agent::Learner { state, .. } => Some(state),
            Agent::Fixed(_) => None,
        }
    }

    /// Step policy in effect, after any first-frame calibration.
    pub fn policy(&self) -> Option<StepPolicy> {
        self.learner_state().map(LearnerState::policy)
    }
}

/// One OGA learner per focal user. Noisy feedback streams get per-user seeds derived from `noise.seed`.
pub fn learners(
    network: &Network,
    init: Initialization,
    policy: StepPolicy,
    noise: Option<NoiseSpec>,
    auto_gamma: bool,
) -> Result<Vec<Agent>> {
    let dims = network.config().learner_dims();
    (0..network.num_users())
        .map(|u| {
            let state = initialize(init, network.budget(), &dims, policy)?;
            let feedback: Box<dyn GradientFeedback> = match noise {
                None => Box::new(PerfectFeedback),
                Some(spec) => {
                    let seed = rng_for(spec.seed, PURPOSE_FEEDBACK, u as u64).next_u64();
                    Box::new(NoisyFeedback::new(NoiseSpec { seed, ..spec })?)
                }
            };
            Ok(Agent::Learner {
                state,
                feedback,
                auto_gamma,
            })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Also solve each frame's instantaneous EE maximum.
    pub instant_opt: bool,
}

pub struct RunOutput {
    /// Frame records per user.
    pub records: Vec<Vec<FrameRecord>>,
    /// Effective channel trace per user; `FrameRecord::channel_ref` indexes into it.
    pub channels: Vec<Vec<EffectiveChannel>>,
    /// Agents after the last frame.
    pub agents: Vec<Agent>,
}

/// Runs `horizon` frames: realize channels under the current covariances,
/// transmit, observe feedback, update.
pub fn run_frames(network: &Network, mut agents: Vec<Agent>, horizon: u64, options: RunOptions) -> Result<RunOutput> {
    let users = network.num_users();
    if agents.len() != users {
        return Err(ee_core::Error::DimensionMismatch(format!("{} agents for {users} users", agents.len())).into());
    }
    let budget = network.budget();
    let mut records: Vec<Vec<FrameRecord>> = (0..users).map(|_| Vec::with_capacity(horizon as usize)).collect();
    let mut channels: Vec<Vec<EffectiveChannel>> = (0..users).map(|_| Vec::with_capacity(horizon as usize)).collect();
    // Previous frame's instantaneous optimum, used as the next search's start.
    let mut instant_x: Vec<Option<TransformedProfile>> = vec![None; users];

    for n in 1..=horizon {
        let powers: Vec<PowerProfile> = agents.iter().map(Agent::covariance).collect();
        let hs = network.effective_channels(&powers, n)?;
        for (u, (agent, h)) in agents.iter_mut().zip(hs).enumerate() {
            let q = &powers[u];
            let ee = energy_efficiency(q, &h)?;
            let grad_norm = match agent {
                Agent::Learner {
                    state,
                    feedback,
                    auto_gamma,
                } => {
                    if *auto_gamma && state.frame() == 0 {
                        let gamma = pilot_gamma(state.x(), &h, state.policy(), PILOT_ROUNDS)?;
                        *state = state.clone().with_policy(state.policy().with_gamma(gamma))?;
                    }
                    let v = feedback.observe(state.x(), &h)?;
                    *state = state.oga_update(&v)?;
                    v.frobenius()
                }
                Agent::Fixed(_) => 0.0,
            };
            let ee_instant_opt = if options.instant_opt {
                let sol = match instant_x[u].take() {
                    Some(start) => {
                        best_fixed_in_hindsight_from(std::slice::from_ref(&h), budget, OracleOptions::default(), start)?
                    }
                    None => instantaneous_optimum(&h, budget)?,
                };
                let value = sol.value;
                instant_x[u] = Some(sol.x);
                Some(value)
            } else {
                None
            };
            records[u].push(FrameRecord {
                frame: n,
                ee_achieved: ee,
                ee_instant_opt,
                power_used: q.total_power(),
                rate: rate(q, &h)?,
                grad_norm,
                channel_ref: channels[u].len(),
            });
            channels[u].push(h);
        }
    }
    Ok(RunOutput {
        records,
        channels,
        agents,
    })
}

/// Every user transmits `Q = P₀/(KM) · I` with `P₀ = P_max/2` on the same network.
pub fn uniform_baseline(network: &Network, horizon: u64) -> Result<RunOutput> {
    let budget = network.budget();
    let q = PowerProfile::uniform(&network.config().learner_dims(), budget.p_max / 2.0, budget)?;
    let agents = (0..network.num_users()).map(|_| Agent::Fixed(q.clone())).collect();
    run_frames(network, agents, horizon, RunOptions::default())
}
