use ee_core::hermitian::{inverse_sqrt_pd, symmetrize};
use ee_core::{ComplexMatrix, EffectiveChannel, PowerBudget, PowerProfile};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::NetworkConfig;
use crate::fading::{doppler_hz, DelayProfile, MimoFading};
use crate::geometry::{place_users, Placement, UserState};
use crate::pathloss::path_gain;
use crate::{NetsimError, Result};

/// Generator for one `(purpose, index)` pair, independent of every other pair.
pub(crate) fn rng_for(seed: u64, purpose: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((purpose << 40) | index);
    rng
}

pub(crate) const PURPOSE_FADING: u64 = 2;
pub(crate) const PURPOSE_FEEDBACK: u64 = 3;

/// What the base station of one focal user sees on the shared subcarriers.
#[derive(Clone, Debug)]
pub struct ChannelRealization {
    /// `H_k`, `N × M`, in amplitude units including path loss.
    pub direct: Vec<ComplexMatrix>,
    /// `W_k = σ² I + Σ_{u'≠u} H_k^{u'u} Q_k^{u'} (H_k^{u'u})†` in watts.
    pub interference_cov: Vec<ComplexMatrix>,
    pub noise_power: f64,
    pub frame: u64,
}

impl ChannelRealization {
    /// `H̃_k = W_k^{-1/2} H_k`, evaluated on the noise-normalized `W_k / σ²` for conditioning.
    pub fn effective(&self) -> Result<EffectiveChannel> {
        let sigma = self.noise_power.sqrt();
        let blocks = self
            .direct
            .iter()
            .zip(&self.interference_cov)
            .map(|(h, w)| {
                let w_inv_sqrt = inverse_sqrt_pd(&w.map(|z| z / self.noise_power))?;
                Ok(w_inv_sqrt * (h / Complex64::new(sigma, 0.0)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(EffectiveChannel::new(blocks, self.frame)?)
    }
}

/// The simulated network: users, link fading and the per-frame channel generator.
#[derive(Clone, Debug)]
pub struct Network {
    config: NetworkConfig,
    placement: Placement,
    budget: PowerBudget,
    noise_power: f64,
    offsets_hz: Vec<f64>,
    /// Link fading indexed `tx · U + rx`.
    links: Vec<MimoFading>,
    /// Full channel of links whose transmitter does not move.
    cache: Vec<Option<Vec<ComplexMatrix>>>,
}

impl Network {
    pub fn new(config: NetworkConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let placement = place_users(&config, seed)?;
        let budget = config.budget()?;
        let offsets_hz = config.shared_subcarrier_offsets_hz();
        let u = placement.focal.len();
        let mut links = Vec::with_capacity(u * u);
        for tx in 0..u {
            let user = &placement.focal[tx];
            let profile = DelayProfile::for_mobility(user.mobility_class);
            let fd = doppler_hz(user.velocity_kmh, config.carrier_freq_ghz);
            for rx in 0..u {
                let mut rng = rng_for(seed, PURPOSE_FADING, (tx * u + rx) as u64);
                links.push(MimoFading::new(
                    &mut rng,
                    profile,
                    fd,
                    config.rx_antennas,
                    config.tx_antennas,
                    &offsets_hz,
                    config.sinusoids,
                ));
            }
        }
        let mut network = Self {
            noise_power: config.noise_power_watts(),
            config,
            placement,
            budget,
            offsets_hz,
            links,
            cache: Vec::new(),
        };
        network.cache = (0..u * u)
            .map(|i| {
                let tx = i / u;
                (network.placement.focal[tx].velocity_kmh == 0.0 && network.links[i].is_time_invariant())
                    .then(|| network.compute_link(tx, i % u, 0.0))
            })
            .collect();
        Ok(network)
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn placement(&self) -> &Placement {
        &self.placement
    }

    pub fn users(&self) -> &[UserState] {
        &self.placement.focal
    }

    pub fn num_users(&self) -> usize {
        self.placement.focal.len()
    }

    pub fn budget(&self) -> PowerBudget {
        self.budget
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    pub fn subcarrier_offsets_hz(&self) -> &[f64] {
        &self.offsets_hz
    }

    /// Start time in seconds of 1-based frame `n`.
    pub fn frame_time(&self, frame: u64) -> f64 {
        frame.saturating_sub(1) as f64 * self.config.frame_duration_s()
    }

    fn compute_link(&self, tx: usize, rx: usize, t: f64) -> Vec<ComplexMatrix> {
        let u = self.num_users();
        let from = self.placement.focal[tx].position_at(t);
        let bs = self.placement.base_stations[self.placement.focal[rx].cell_id];
        let amplitude = path_gain(from.distance_km(&bs), &self.config).sqrt();
        self.links[tx * u + rx]
            .response(t)
            .into_iter()
            .map(|h| h * Complex64::new(amplitude, 0.0))
            .collect()
    }

    /// `H_k^{tx→rx}` at 1-based frame `n`, including path loss.
    pub fn link_channel(&self, tx: usize, rx: usize, frame: u64) -> Vec<ComplexMatrix> {
        match &self.cache[tx * self.num_users() + rx] {
            Some(h) => h.clone(),
            None => self.compute_link(tx, rx, self.frame_time(frame)),
        }
    }

    /// Direct channels and interference covariances of every focal user,
    /// given everybody's current transmit covariances.
    pub fn realize_channels(&self, powers: &[PowerProfile], frame: u64) -> Result<Vec<ChannelRealization>> {
        let u = self.num_users();
        if powers.len() != u {
            return Err(ee_core::Error::DimensionMismatch(format!("{} power profiles for {u} users", powers.len())).into());
        }
        let n = self.config.rx_antennas;
        let k_count = self.config.n_shared_subcarriers;
        (0..u)
            .map(|rx| {
                let mut w: Vec<ComplexMatrix> = (0..k_count)
                    .map(|_| ComplexMatrix::from_diagonal_element(n, n, Complex64::new(self.noise_power, 0.0)))
                    .collect();
                for (tx, p) in powers.iter().enumerate() {
                    if tx == rx || p.total_power() == 0.0 {
                        continue;
                    }
                    let g = self.link_channel(tx, rx, frame);
                    for (k, wk) in w.iter_mut().enumerate() {
                        *wk += &g[k] * p.q().block(k) * g[k].adjoint();
                    }
                }
                Ok(ChannelRealization {
                    direct: self.link_channel(rx, rx, frame),
                    interference_cov: w.iter().map(symmetrize).collect(),
                    noise_power: self.noise_power,
                    frame,
                })
            })
            .collect()
    }

    /// Effective channels of every focal user, enforcing the configured norm cap.
    pub fn effective_channels(&self, powers: &[PowerProfile], frame: u64) -> Result<Vec<EffectiveChannel>> {
        self.realize_channels(powers, frame)?
            .iter()
            .enumerate()
            .map(|(user, r)| {
                let h = r.effective()?;
                let norm = h.frobenius();
                if norm > self.config.channel_norm_cap {
                    return Err(NetsimError::ChannelCap {
                        user,
                        frame,
                        norm,
                        cap: self.config.channel_norm_cap,
                    });
                }
                Ok(h)
            })
            .collect()
    }
}
