//! One seed of a scenario: learners, uniform baseline and regret accounting.

use ee_core::regret::{best_fixed_in_hindsight_from, regret, regret_curve};
use ee_core::{FrameRecord, OracleOptions, RegretReport, StepPolicy};
use ee_netsim::sim::{learners, Agent};
use ee_netsim::{run_frames, uniform_baseline, MobilitySpec, Network, RunOptions};

use crate::scenario::{GammaTuning, Scenario};
use crate::Result;

pub struct UserRun {
    pub user: usize,
    pub mobility: MobilitySpec,
    /// Distance to the serving base station at frame 1.
    pub distance_km: f64,
    /// Policy after pilot tuning.
    pub policy: StepPolicy,
    pub records: Vec<FrameRecord>,
    pub baseline: Vec<FrameRecord>,
    /// Cumulative regret against the full-horizon oracle after each frame.
    pub regret_curve: Vec<f64>,
    pub report: RegretReport,
}

impl UserRun {
    /// Mean EE over the last tenth of the horizon relative to the baseline over the same frames.
    pub fn ee_gain(&self) -> f64 {
        let t = self.records.len();
        let window = (t / 10).max(1);
        let mean = |r: &[FrameRecord]| r[t - window..].iter().map(|f| f.ee_achieved).sum::<f64>();
        mean(&self.records) / mean(&self.baseline)
    }

    pub fn ee_gain_final_frame(&self) -> f64 {
        self.records.last().map(|r| r.ee_achieved).unwrap_or(0.0)
            / self.baseline.last().map(|r| r.ee_achieved).unwrap_or(f64::NAN)
    }
}

pub struct SeedRun {
    pub seed: u64,
    pub network_seed: u64,
    /// Bits per joule per internal EE unit.
    pub ee_scale: f64,
    pub users: Vec<UserRun>,
}

pub fn run_seed(scenario: &Scenario, seed: u64) -> Result<SeedRun> {
    let network_seed = scenario.network_seed_for(seed);
    let net = Network::new(scenario.network.clone(), network_seed)?;
    let noise = scenario.noise.map(|n| n.spec(seed)).transpose()?;
    let pilot = scenario.gamma_tuning == GammaTuning::Pilot;
    let mut agents = learners(&net, scenario.initialization(), scenario.step_policy, noise, pilot)?;
    for o in &scenario.user_step_policies {
        if let Agent::Learner { state, .. } = &mut agents[o.user] {
            *state = state.clone().with_policy(o.policy)?;
        }
    }

    let horizon = scenario.horizon_frames;
    let out = run_frames(
        &net,
        agents,
        horizon,
        RunOptions {
            instant_opt: scenario.instant_opt,
        },
    )?;
    let base = uniform_baseline(&net, horizon)?;
    let budget = net.budget();

    let mut users = Vec::with_capacity(net.num_users());
    let pieces = out.records.into_iter().zip(out.channels).zip(base.records);
    for (u, ((records, channels), baseline)) in pieces.enumerate() {
        let state = out.agents[u].learner_state().expect("every focal user learns");
        let policy = state.policy();
        let oracle = best_fixed_in_hindsight_from(&channels, budget, OracleOptions::default(), state.x().clone())?;
        if !oracle.converged {
            log::warn!("seed {seed} user {u}: oracle stopped at residual {:.3e}", oracle.residual);
        }
        let mut report = regret(&records, oracle.value, &policy)?;
        report.oracle_converged = oracle.converged;
        let curve = regret_curve(&records, &channels, &oracle.x)?;
        report.oracle_x = Some(oracle.x);
        let user = &net.users()[u];
        users.push(UserRun {
            user: u,
            mobility: net.config().mobility_of(u),
            distance_km: user.position.distance_km(&net.placement().base_stations[user.cell_id]),
            policy,
            records,
            baseline,
            regret_curve: curve,
            report,
        });
    }
    Ok(SeedRun {
        seed,
        network_seed,
        ee_scale: ee_core::units::nats_to_bits(net.config().subcarrier_spacing_hz()),
        users,
    })
}

/// The baseline alone, for `baseline <scenario>`.
pub fn run_baseline(scenario: &Scenario, seed: u64) -> Result<(Network, Vec<Vec<FrameRecord>>)> {
    let net = Network::new(scenario.network.clone(), scenario.network_seed_for(seed))?;
    let out = uniform_baseline(&net, scenario.horizon_frames)?;
    Ok((net, out.records))
}
