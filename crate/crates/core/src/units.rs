//! Unit conversions shared by the simulator and the reporting layer.
//!
//! Everything inside the library runs in watts and nats; dBm and bits only
//! appear at configuration and reporting boundaries.

use std::f64::consts::LOG2_E;

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn nats_to_bits(nats: f64) -> f64 {
    nats * LOG2_E
}
