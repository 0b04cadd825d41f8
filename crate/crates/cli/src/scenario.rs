//! Declarative scenario files.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use ee_core::units::dbm_to_watts;
use ee_core::{Initialization, NoiseDistribution, NoiseSpec, StepPolicy};
use ee_netsim::{NetsimError, NetworkConfig};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{CliError, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitKind {
    /// Start silent at `Q = 0`.
    AgnosticZero,
    /// `P₀` spread evenly over antennas and subcarriers.
    #[default]
    Uniform,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GammaTuning {
    /// Use `step_policy.gamma` as written.
    Fixed,
    /// Pick `γ` from a pilot on each learner's first frame.
    #[default]
    Pilot,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserStepPolicy {
    pub user: usize,
    pub policy: StepPolicy,
}

/// Gradient observation errors with relative level `eta` (standard deviation over norm).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    #[serde(flatten)]
    pub distribution: NoiseDistribution,
    pub eta: f64,
}

impl NoiseConfig {
    pub fn spec(&self, seed: u64) -> ee_core::Result<NoiseSpec> {
        NoiseSpec::with_relative_level(self.distribution, self.eta, seed)
    }
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub horizon_frames: u64,
    pub seeds: Vec<u64>,
    /// Fixes the network draw so that seeds only change the feedback noise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<PathBuf>,
    #[serde(default)]
    pub init: InitKind,
    /// Initial power for `init = "uniform"`; defaults to `P_max/2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init_power_dbm: Option<f64>,
    #[serde(default)]
    pub step_policy: StepPolicy,
    #[serde(default)]
    pub gamma_tuning: GammaTuning,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub user_step_policies: Vec<UserStepPolicy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseConfig>,
    /// Solve every frame's instantaneous optimum for the `ee_instant_opt` column.
    #[serde(default = "yes")]
    pub instant_opt: bool,
    #[serde(default)]
    pub network: NetworkConfig,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Validation(vec![e.to_string()]))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(vec![format!("cannot read {}: {e}", path.display())]))?;
        Self::parse(&text)
    }

    /// Every offending field, or `Ok`.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
            problems.push(format!("name must be a nonempty [A-Za-z0-9._-] string, got {:?}", self.name));
        }
        if self.horizon_frames == 0 {
            problems.push("horizon_frames must be at least 1".into());
        }
        if self.seeds.is_empty() {
            problems.push("seeds must not be empty".into());
        }
        if self.seeds.iter().collect::<BTreeSet<_>>().len() != self.seeds.len() {
            problems.push("seeds must be distinct".into());
        }
        match self.network.validate() {
            Ok(()) => {}
            Err(NetsimError::Config(list)) => problems.extend(list.into_iter().map(|p| format!("network.{p}"))),
            Err(e) => problems.push(format!("network: {e}")),
        }
        if let Err(e) = self.step_policy.validate() {
            problems.push(format!("step_policy: {e}"));
        }
        let mut seen = BTreeSet::new();
        for (i, o) in self.user_step_policies.iter().enumerate() {
            if o.user >= self.network.n_focal_users {
                problems.push(format!(
                    "user_step_policies[{i}].user = {} exceeds n_focal_users = {}",
                    o.user, self.network.n_focal_users
                ));
            }
            if !seen.insert(o.user) {
                problems.push(format!("user_step_policies[{i}].user = {} is repeated", o.user));
            }
            if let Err(e) = o.policy.validate() {
                problems.push(format!("user_step_policies[{i}].policy: {e}"));
            }
        }
        if let Some(noise) = &self.noise {
            if let Err(e) = noise.spec(0) {
                problems.push(format!("noise: {e}"));
            }
        }
        if let Some(p) = self.init_power_dbm {
            if self.init != InitKind::Uniform {
                problems.push("init_power_dbm only applies to init = \"uniform\"".into());
            } else if !p.is_finite() || p > self.network.p_max_dbm {
                problems.push(format!(
                    "init_power_dbm must be finite and at most p_max_dbm = {}, got {p}",
                    self.network.p_max_dbm
                ));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(problems))
        }
    }

    pub fn initialization(&self) -> Initialization {
        match self.init {
            InitKind::AgnosticZero => Initialization::AgnosticZero,
            InitKind::Uniform => Initialization::UniformPower(
                self.init_power_dbm
                    .map(dbm_to_watts)
                    .unwrap_or_else(|| self.network.p_max_watts() / 2.0),
            ),
        }
    }

    pub fn policy_for(&self, user: usize) -> StepPolicy {
        self.user_step_policies
            .iter()
            .find(|o| o.user == user)
            .map(|o| o.policy)
            .unwrap_or(self.step_policy)
    }

    pub fn network_seed_for(&self, seed: u64) -> u64 {
        self.network_seed.unwrap_or(seed)
    }

    /// SHA-256 over the canonical JSON form, ignoring where artifacts are written.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.outputs = None;
        let bytes = serde_json::to_vec(&canonical).expect("scenario serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "tiny"
horizon_frames = 5
seeds = [1]
"#;

    #[test]
    fn minimal_file_uses_defaults() {
        let s = Scenario::parse(MINIMAL).unwrap();
        s.validate().unwrap();
        assert_eq!(s.network, NetworkConfig::default());
        assert_eq!(s.step_policy, StepPolicy::default());
        assert_eq!(s.gamma_tuning, GammaTuning::Pilot);
        assert!(s.instant_opt);
        match s.initialization() {
            Initialization::UniformPower(p) => assert!((p - s.network.p_max_watts() / 2.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn every_problem_is_listed() {
        let text = r#"
name = "bad name"
horizon_frames = 0
seeds = []
[step_policy]
kind = "power_law"
gamma = -1.0
alpha = 0.5
[network]
n_cells = 4
cell_radius_km = -1.0
"#;
        let err = Scenario::parse(text).unwrap().validate().unwrap_err();
        let CliError::Validation(list) = err else { panic!() };
        let joined = list.join("\n");
        for needle in ["name", "horizon_frames", "seeds", "step_policy", "network.n_cells", "network.cell_radius_km"] {
            assert!(joined.contains(needle), "{needle} missing from\n{joined}");
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = Scenario::parse("name = \"x\"\nhorizon_frames = 1\nseeds = [1]\np_max_watts = 2.0\n").unwrap_err();
        assert!(matches!(err, CliError::Validation(_)));
    }

    #[test]
    fn noise_and_overrides_parse() {
        let text = r#"
name = "n"
horizon_frames = 10
seeds = [1, 2]
network_seed = 7
[noise]
distribution = "student_t"
dof = 3.0
eta = 0.2
[[user_step_policies]]
user = 1
policy = { kind = "harmonic", gamma = 4.0 }
[network]
n_cells = 7
n_focal_users = 2
"#;
        let s = Scenario::parse(text).unwrap();
        s.validate().unwrap();
        assert_eq!(s.policy_for(1), StepPolicy::Harmonic { gamma: 4.0 });
        assert_eq!(s.policy_for(0), StepPolicy::default());
        assert_eq!(s.network_seed_for(2), 7);
        let spec = s.noise.unwrap().spec(5).unwrap();
        assert_eq!(spec.distribution, NoiseDistribution::StudentT { dof: 3.0 });
        assert_eq!(spec.scale, 0.2);
    }

    #[test]
    fn hash_ignores_output_path_only() {
        let a = Scenario::parse(MINIMAL).unwrap();
        let mut b = a.clone();
        b.outputs = Some("elsewhere".into());
        assert_eq!(a.hash(), b.hash());
        b.horizon_frames = 6;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
