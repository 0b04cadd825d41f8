use ee_core::units::dbm_to_watts;
use ee_core::PowerBudget;
use serde::{Deserialize, Serialize};

use crate::{NetsimError, Result};

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MobilityClass {
    #[default]
    Static,
    Pedestrian,
    Vehicular,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MobilitySpec {
    pub class: MobilityClass,
    #[serde(default)]
    pub speed_kmh: f64,
}

impl MobilitySpec {
    pub fn stationary() -> Self {
        Self::default()
    }

    pub fn new(class: MobilityClass, speed_kmh: f64) -> Self {
        Self { class, speed_kmh }
    }
}

/// Physical parameters of the simulated network. Field names carry their units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    /// 1, 7 or 19 hexagonal cells.
    pub n_cells: usize,
    pub cell_radius_km: f64,
    pub user_density_per_km2: f64,
    pub n_focal_users: usize,
    pub n_shared_subcarriers: usize,
    pub tx_antennas: usize,
    pub rx_antennas: usize,
    pub carrier_freq_ghz: f64,
    pub subcarrier_spacing_khz: f64,
    pub total_subcarriers: usize,
    pub total_bandwidth_mhz: f64,
    pub noise_density_dbm_per_hz: f64,
    pub noise_figure_db: f64,
    pub frame_duration_ms: f64,
    pub bs_height_m: f64,
    pub ms_height_m: f64,
    pub p_max_dbm: f64,
    pub p_circuit_dbm: f64,
    pub min_distance_m: f64,
    /// Upper bound on `‖H̃(n)‖_F` for every user and frame.
    pub channel_norm_cap: f64,
    /// Sinusoids per fading process.
    pub sinusoids: usize,
    /// Mobility of each focal user; users beyond the list are static.
    pub mobility: Vec<MobilitySpec>,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            n_cells: 19,
            cell_radius_km: 1.0,
            user_density_per_km2: 500.0,
            n_focal_users: 15,
            n_shared_subcarriers: 8,
            tx_antennas: 4,
            rx_antennas: 8,
            carrier_freq_ghz: 2.5,
            subcarrier_spacing_khz: 11.0,
            total_subcarriers: 1024,
            total_bandwidth_mhz: 11.2,
            noise_density_dbm_per_hz: -174.0,
            noise_figure_db: 7.0,
            frame_duration_ms: 5.0,
            bs_height_m: 32.0,
            ms_height_m: 1.5,
            p_max_dbm: 33.0,
            p_circuit_dbm: 20.0,
            min_distance_m: 10.0,
            channel_norm_cap: 1e9,
            sinusoids: 16,
            mobility: Vec::new(),
        }
    }
}

impl NetworkConfig {
    /// Every offending field, or `Ok` when the configuration is usable.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        let mut positive = |name: &str, v: f64| {
            if !(v.is_finite() && v > 0.0) {
                problems.push(format!("{name} must be positive and finite, got {v}"));
            }
        };
        positive("cell_radius_km", self.cell_radius_km);
        positive("user_density_per_km2", self.user_density_per_km2);
        positive("carrier_freq_ghz", self.carrier_freq_ghz);
        positive("subcarrier_spacing_khz", self.subcarrier_spacing_khz);
        positive("total_bandwidth_mhz", self.total_bandwidth_mhz);
        positive("frame_duration_ms", self.frame_duration_ms);
        positive("bs_height_m", self.bs_height_m);
        positive("ms_height_m", self.ms_height_m);
        positive("min_distance_m", self.min_distance_m);
        positive("channel_norm_cap", self.channel_norm_cap);
        for (name, v) in [
            ("noise_density_dbm_per_hz", self.noise_density_dbm_per_hz),
            ("noise_figure_db", self.noise_figure_db),
            ("p_max_dbm", self.p_max_dbm),
            ("p_circuit_dbm", self.p_circuit_dbm),
        ] {
            if !v.is_finite() {
                problems.push(format!("{name} must be finite, got {v}"));
            }
        }
        if ![1, 7, 19].contains(&self.n_cells) {
            problems.push(format!("n_cells must be 1, 7 or 19, got {}", self.n_cells));
        }
        if self.n_focal_users == 0 || self.n_focal_users > self.n_cells {
            problems.push(format!(
                "n_focal_users must be in 1..={} (one per cell), got {}",
                self.n_cells, self.n_focal_users
            ));
        }
        for (name, v) in [
            ("n_shared_subcarriers", self.n_shared_subcarriers),
            ("tx_antennas", self.tx_antennas),
            ("rx_antennas", self.rx_antennas),
            ("total_subcarriers", self.total_subcarriers),
            ("sinusoids", self.sinusoids),
        ] {
            if v == 0 {
                problems.push(format!("{name} must be at least 1"));
            }
        }
        if self.n_shared_subcarriers > self.total_subcarriers {
            problems.push(format!(
                "n_shared_subcarriers ({}) exceeds total_subcarriers ({})",
                self.n_shared_subcarriers, self.total_subcarriers
            ));
        }
        if self.mobility.len() > self.n_focal_users {
            problems.push(format!(
                "mobility lists {} users but n_focal_users is {}",
                self.mobility.len(),
                self.n_focal_users
            ));
        }
        for (i, m) in self.mobility.iter().enumerate() {
            match m.class {
                MobilityClass::Static if m.speed_kmh != 0.0 => {
                    problems.push(format!("mobility[{i}]: static users must have speed_kmh = 0"))
                }
                MobilityClass::Pedestrian | MobilityClass::Vehicular if !(3.0..=130.0).contains(&m.speed_kmh) => {
                    problems.push(format!(
                        "mobility[{i}]: speed_kmh must lie in [3, 130], got {}",
                        m.speed_kmh
                    ))
                }
                _ => {}
            }
        }
        match PowerBudget::new(self.p_max_watts(), self.p_circuit_watts()) {
            Ok(_) => {}
            Err(e) => problems.push(e.to_string()),
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(NetsimError::Config(problems))
        }
    }

    pub fn p_max_watts(&self) -> f64 {
        dbm_to_watts(self.p_max_dbm)
    }

    pub fn p_circuit_watts(&self) -> f64 {
        dbm_to_watts(self.p_circuit_dbm)
    }

    pub fn budget(&self) -> Result<PowerBudget> {
        Ok(PowerBudget::new(self.p_max_watts(), self.p_circuit_watts())?)
    }

    /// Thermal noise plus receiver noise figure over one subcarrier, in watts.
    pub fn noise_power_watts(&self) -> f64 {
        dbm_to_watts(self.noise_density_dbm_per_hz + self.noise_figure_db) * self.subcarrier_spacing_hz()
    }

    pub fn subcarrier_spacing_hz(&self) -> f64 {
        self.subcarrier_spacing_khz * 1e3
    }

    pub fn frame_duration_s(&self) -> f64 {
        self.frame_duration_ms * 1e-3
    }

    /// Transmit block sizes `[M; K]` of every learner.
    pub fn learner_dims(&self) -> Vec<usize> {
        vec![self.tx_antennas; self.n_shared_subcarriers]
    }

    /// Baseband offsets in Hz of the shared subcarriers, spread evenly over the band.
    pub fn shared_subcarrier_offsets_hz(&self) -> Vec<f64> {
        let stride = self.total_subcarriers / self.n_shared_subcarriers.max(1);
        (0..self.n_shared_subcarriers)
            .map(|k| (k * stride + stride / 2) as f64 * self.subcarrier_spacing_hz())
            .collect()
    }

    pub fn mobility_of(&self, user: usize) -> MobilitySpec {
        self.mobility.get(user).copied().unwrap_or_default()
    }

    /// Warning text when the carrier is outside the 1.5–2 GHz calibration range of COST-231 Hata.
    pub fn model_range_warning(&self) -> Option<String> {
        let mhz = self.carrier_freq_ghz * 1e3;
        (!(1500.0..=2000.0).contains(&mhz)).then(|| {
            format!("carrier {mhz} MHz is outside the 1500-2000 MHz range COST-231 Hata was fitted on")
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let c = NetworkConfig::default();
        c.validate().unwrap();
        assert!((c.p_max_watts() - 1.995).abs() < 1e-3);
        assert!((c.p_circuit_watts() - 0.1).abs() < 1e-12);
        assert_eq!(c.learner_dims(), vec![4; 8]);
    }

    #[test]
    fn noise_power_per_subcarrier() {
        let c = NetworkConfig::default();
        // -174 dBm/Hz + 7 dB + 10 log10(11 kHz) = -126.59 dBm.
        let dbm = 10.0 * (c.noise_power_watts() * 1e3).log10();
        assert!((dbm - (-174.0 + 7.0 + 10.0 * 11e3f64.log10())).abs() < 1e-9);
    }

    #[test]
    fn validation_lists_every_problem() {
        let c = NetworkConfig {
            cell_radius_km: -1.0,
            n_cells: 5,
            tx_antennas: 0,
            ..Default::default()
        };
        match c.validate() {
            Err(NetsimError::Config(p)) => {
                assert!(p.len() >= 3, "{p:?}");
                assert!(p.iter().any(|s| s.contains("cell_radius_km")));
                assert!(p.iter().any(|s| s.contains("n_cells")));
                assert!(p.iter().any(|s| s.contains("tx_antennas")));
            }
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn mobile_speeds_are_bounded() {
        let mut c = NetworkConfig {
            mobility: vec![MobilitySpec::new(MobilityClass::Vehicular, 200.0)],
            ..Default::default()
        };
        assert!(c.validate().is_err());
        c.mobility[0].speed_kmh = 130.0;
        c.validate().unwrap();
        c.mobility[0] = MobilitySpec::new(MobilityClass::Pedestrian, 1.0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn carrier_outside_calibration_is_flagged() {
        assert!(NetworkConfig::default().model_range_warning().is_some());
        let c = NetworkConfig {
            carrier_freq_ghz: 1.8,
            ..Default::default()
        };
        assert!(c.model_range_warning().is_none());
    }

    #[test]
    fn shared_subcarriers_are_distinct() {
        let c = NetworkConfig::default();
        let f = c.shared_subcarrier_offsets_hz();
        assert_eq!(f.len(), 8);
        assert!(f.windows(2).all(|w| w[1] > w[0]));
        assert!(*f.last().unwrap() < c.total_subcarriers as f64 * c.subcarrier_spacing_hz());
    }
}
