//! Multi-cell OFDMA uplink simulator.
//!
//! A honeycomb of hexagonal cells hosts one focal user per selected cell. All
//! focal users share the same `K` subcarriers, so each one sees the others as
//! co-channel interference at its base station. Every frame the simulator
//! realizes the direct channels and interference covariances, whitens them
//! into effective channels, lets each agent transmit and learn, and records
//! what happened.

pub mod config;
pub mod fading;
pub mod geometry;
pub mod network;
pub mod pathloss;
pub mod sim;

mod error;

pub use config::{MobilityClass, MobilitySpec, NetworkConfig};
pub use error::{NetsimError, Result};
pub use fading::{DelayProfile, MimoFading};
pub use geometry::{place_users, Placement, Position, UserState};
pub use network::{ChannelRealization, Network};
pub use pathloss::path_loss_db;
pub use sim::{run_frames, uniform_baseline, Agent, RunOptions, RunOutput};
