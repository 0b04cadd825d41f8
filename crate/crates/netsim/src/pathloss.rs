//! COST-231 Hata urban path loss.

use crate::config::NetworkConfig;

/// Metropolitan-centre correction in dB.
pub const METROPOLITAN_CORRECTION_DB: f64 = 3.0;

/// Mobile antenna correction `a(h_MS)` for small and medium cities.
pub fn mobile_antenna_correction_db(carrier_mhz: f64, ms_height_m: f64) -> f64 {
    let lf = carrier_mhz.log10();
    (1.1 * lf - 0.7) * ms_height_m - (1.56 * lf - 0.8)
}

/// `L = 46.3 + 33.9 log f − 13.82 log h_BS − a(h_MS) + (44.9 − 6.55 log h_BS) log d + C`.
pub fn cost231_hata_db(distance_km: f64, carrier_mhz: f64, bs_height_m: f64, ms_height_m: f64) -> f64 {
    46.3 + 33.9 * carrier_mhz.log10() - 13.82 * bs_height_m.log10()
        - mobile_antenna_correction_db(carrier_mhz, ms_height_m)
        + distance_slope_db_per_decade(bs_height_m) * distance_km.log10()
        + METROPOLITAN_CORRECTION_DB
}

pub fn distance_slope_db_per_decade(bs_height_m: f64) -> f64 {
    44.9 - 6.55 * bs_height_m.log10()
}

/// Path loss in dB with the link distance clamped to the configured minimum.
pub fn path_loss_db(distance_km: f64, config: &NetworkConfig) -> f64 {
    let d = distance_km.max(config.min_distance_m * 1e-3);
    cost231_hata_db(d, config.carrier_freq_ghz * 1e3, config.bs_height_m, config.ms_height_m)
}

/// Linear power gain `10^{−L/10}`.
pub fn path_gain(distance_km: f64, config: &NetworkConfig) -> f64 {
    10f64.powf(-path_loss_db(distance_km, config) / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotone_in_distance() {
        let c = NetworkConfig::default();
        assert!(path_loss_db(2.0, &c) > path_loss_db(1.0, &c));
        let mut prev = f64::NEG_INFINITY;
        for i in 1..200 {
            let l = path_loss_db(i as f64 * 0.05, &c);
            assert!(l > prev);
            prev = l;
        }
    }

    #[test]
    fn slope_per_decade() {
        let c = NetworkConfig::default();
        let expected = 44.9 - 6.55 * 32f64.log10();
        assert!((expected - 35.04).abs() < 0.01);
        for d in [0.05, 0.3, 1.0, 2.5] {
            let slope = path_loss_db(10.0 * d, &c) - path_loss_db(d, &c);
            assert!((slope - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn hand_evaluated_point() {
        // f = 2500 MHz, h_BS = 32 m, h_MS = 1.5 m, d = 1 km.
        let lf = 2500f64.log10();
        let a = (1.1 * lf - 0.7) * 1.5 - (1.56 * lf - 0.8);
        let expected = 46.3 + 33.9 * lf - 13.82 * 32f64.log10() - a + 3.0;
        let c = NetworkConfig::default();
        assert!((path_loss_db(1.0, &c) - expected).abs() < 1e-12);
        assert!((expected - 143.6).abs() < 0.1);
    }

    #[test]
    fn short_links_are_clamped() {
        let c = NetworkConfig::default();
        assert_eq!(path_loss_db(0.0, &c), path_loss_db(0.01, &c));
        assert_eq!(path_loss_db(0.001, &c), path_loss_db(0.01, &c));
        assert!(path_loss_db(0.0, &c).is_finite());
    }
}
