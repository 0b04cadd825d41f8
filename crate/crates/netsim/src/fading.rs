//! Tapped-delay-line Rayleigh fading with Jakes Doppler spectra.
//!
//! Each tap of each antenna pair is a sum of `S` complex sinusoids with
//! uniformly random arrival angles and phases,
//! `g(t) = S^{-1/2} Σ_s exp(j(2π f_d cos α_s t + φ_s))`, whose ensemble
//! autocorrelation is exactly `J₀(2π f_d τ)` and whose power is one. The
//! frequency response on a subcarrier at offset `f` is
//! `Σ_l √p_l g_l(t) exp(−j2π f τ_l)`.

use ee_core::ComplexMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{MobilityClass, SPEED_OF_LIGHT};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum DelayProfile {
    /// Extended Pedestrian A.
    Epa,
    /// Extended Vehicular A.
    Eva,
    /// Extended Typical Urban.
    Etu,
}

const EPA: [(f64, f64); 7] = [
    (0.0, 0.0),
    (30.0, -1.0),
    (70.0, -2.0),
    (90.0, -3.0),
    (110.0, -8.0),
    (190.0, -17.2),
    (410.0, -20.8),
];

const EVA: [(f64, f64); 9] = [
    (0.0, 0.0),
    (30.0, -1.5),
    (150.0, -1.4),
    (310.0, -3.6),
    (370.0, -0.6),
    (710.0, -9.1),
    (1090.0, -7.0),
    (1730.0, -12.0),
    (2510.0, -16.9),
];

const ETU: [(f64, f64); 9] = [
    (0.0, -1.0),
    (50.0, -1.0),
    (120.0, -1.0),
    (200.0, 0.0),
    (230.0, 0.0),
    (500.0, 0.0),
    (1600.0, -3.0),
    (2300.0, -5.0),
    (5000.0, -7.0),
];

impl DelayProfile {
    /// `(excess delay in ns, relative power in dB)` per tap.
    pub fn taps(self) -> &'static [(f64, f64)] {
        match self {
            DelayProfile::Epa => &EPA,
            DelayProfile::Eva => &EVA,
            DelayProfile::Etu => &ETU,
        }
    }

    pub fn for_mobility(class: MobilityClass) -> Self {
        match class {
            MobilityClass::Static => DelayProfile::Etu,
            MobilityClass::Pedestrian => DelayProfile::Epa,
            MobilityClass::Vehicular => DelayProfile::Eva,
        }
    }

    /// Tap powers scaled to sum to one.
    pub fn normalized_powers(self) -> Vec<f64> {
        let lin: Vec<f64> = self.taps().iter().map(|(_, db)| 10f64.powf(db / 10.0)).collect();
        let total: f64 = lin.iter().sum();
        lin.into_iter().map(|p| p / total).collect()
    }
}

/// Maximum Doppler shift `v f_c / c` in Hz.
pub fn doppler_hz(speed_kmh: f64, carrier_ghz: f64) -> f64 {
    speed_kmh / 3.6 * carrier_ghz * 1e9 / SPEED_OF_LIGHT
}

/// One unit-power Rayleigh process.
#[derive(Clone, Debug)]
pub struct SosProcess {
    angular: Vec<f64>,
    phases: Vec<f64>,
}

impl SosProcess {
    pub fn new<R: Rng + ?Sized>(rng: &mut R, doppler_hz: f64, sinusoids: usize) -> Self {
        let tau = std::f64::consts::TAU;
        let angular = (0..sinusoids)
            .map(|_| tau * doppler_hz * (tau * rng.random::<f64>()).cos())
            .collect();
        let phases = (0..sinusoids).map(|_| tau * rng.random::<f64>()).collect();
        Self { angular, phases }
    }

    pub fn sample(&self, t: f64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (w, p) in self.angular.iter().zip(&self.phases) {
            let (s, c) = (w * t + p).sin_cos();
            acc.re += c;
            acc.im += s;
        }
        acc / (self.angular.len() as f64).sqrt()
    }
}

/// Small-scale `N × M` fading of one transmitter-receiver link on a fixed set of subcarriers.
#[derive(Clone, Debug)]
pub struct MimoFading {
    rx: usize,
    tx: usize,
    amplitudes: Vec<f64>,
    /// `exp(−j2π f_k τ_l)` indexed `[k][l]`.
    rotations: Vec<Vec<Complex64>>,
    /// Processes indexed `(r·M + m)·L + l`.
    processes: Vec<SosProcess>,
    time_invariant: bool,
}

impl MimoFading {
    #[allow(clippy::too_many_arguments)]
    pub fn new<R: Rng + ?Sized>(
        rng: &mut R,
        profile: DelayProfile,
        doppler_hz: f64,
        rx: usize,
        tx: usize,
        subcarrier_offsets_hz: &[f64],
        sinusoids: usize,
    ) -> Self {
        let amplitudes: Vec<f64> = profile.normalized_powers().into_iter().map(f64::sqrt).collect();
        let rotations = subcarrier_offsets_hz
            .iter()
            .map(|f| {
                profile
                    .taps()
                    .iter()
                    .map(|(ns, _)| Complex64::from_polar(1.0, -std::f64::consts::TAU * f * ns * 1e-9))
                    .collect()
            })
            .collect();
        let processes = (0..rx * tx * amplitudes.len())
            .map(|_| SosProcess::new(rng, doppler_hz, sinusoids))
            .collect();
        Self {
            rx,
            tx,
            amplitudes,
            rotations,
            processes,
            time_invariant: doppler_hz == 0.0,
        }
    }

    pub fn is_time_invariant(&self) -> bool {
        self.time_invariant
    }

    pub fn num_subcarriers(&self) -> usize {
        self.rotations.len()
    }

    /// Per-subcarrier channel matrices at time `t` seconds.
    pub fn response(&self, t: f64) -> Vec<ComplexMatrix> {
        let taps = self.amplitudes.len();
        let gains: Vec<Complex64> = self
            .processes
            .iter()
            .enumerate()
            .map(|(i, p)| p.sample(t) * self.amplitudes[i % taps])
            .collect();
        self.rotations
            .iter()
            .map(|rot| {
                ComplexMatrix::from_fn(self.rx, self.tx, |r, m| {
                    let base = (r * self.tx + m) * taps;
                    gains[base..base + taps].iter().zip(rot).map(|(g, z)| g * z).sum()
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// `J₀(x) = (1/π) ∫₀^π cos(x sin θ) dθ` by composite Simpson.
    fn bessel_j0(x: f64) -> f64 {
        let n = 2000;
        let h = std::f64::consts::PI / n as f64;
        let f = |th: f64| (x * th.sin()).cos();
        let mut s = f(0.0) + f(std::f64::consts::PI);
        for i in 1..n {
            s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0 / std::f64::consts::PI
    }

    #[test]
    fn bessel_oracle_known_values() {
        assert!((bessel_j0(0.0) - 1.0).abs() < 1e-12);
        assert!(bessel_j0(2.404_825_557_695_773).abs() < 1e-9);
        assert!((bessel_j0(1.0) - 0.765_197_686_557_966_6).abs() < 1e-9);
    }

    #[test]
    fn profiles_normalize_to_unit_power() {
        for p in [DelayProfile::Epa, DelayProfile::Eva, DelayProfile::Etu] {
            let s: f64 = p.normalized_powers().iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            assert!(p.taps().windows(2).all(|w| w[1].0 > w[0].0));
        }
        assert_eq!(DelayProfile::Epa.taps().len(), 7);
        assert_eq!(DelayProfile::Eva.taps().len(), 9);
        assert_eq!(DelayProfile::Etu.taps().len(), 9);
    }

    #[test]
    fn doppler_at_30_kmh() {
        let fd = doppler_hz(30.0, 2.5);
        assert!((fd - 30.0 / 3.6 * 2.5e9 / 299_792_458.0).abs() < 1e-12);
        assert!((fd - 69.5).abs() < 0.1);
    }

    #[test]
    fn static_links_do_not_change() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = MimoFading::new(&mut rng, DelayProfile::Etu, 0.0, 2, 3, &[0.0, 1e6], 16);
        assert!(f.is_time_invariant());
        let a = f.response(0.0);
        let b = f.response(123.4);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x, y);
            assert_eq!(x.shape(), (2, 3));
        }
    }

    #[test]
    fn jakes_autocorrelation() {
        let fd = doppler_hz(30.0, 2.5);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let realizations = 4000;
        let lags: Vec<f64> = (0..=20).map(|i| i as f64 * 0.001).collect();
        let mut acc = vec![Complex64::new(0.0, 0.0); lags.len()];
        for _ in 0..realizations {
            let g = SosProcess::new(&mut rng, fd, 16);
            let t0 = rng.random::<f64>() * 10.0;
            let g0 = g.sample(t0);
            for (a, tau) in acc.iter_mut().zip(&lags) {
                *a += g.sample(t0 + tau) * g0.conj();
            }
        }
        for (a, tau) in acc.iter().zip(&lags) {
            let r = a / realizations as f64;
            let expected = bessel_j0(std::f64::consts::TAU * fd * tau);
            assert!((r.re - expected).abs() <= 0.05, "lag {tau}: {} vs {expected}", r.re);
            assert!(r.im.abs() <= 0.05);
        }
    }

    #[test]
    fn long_run_second_moment_is_one() {
        let fd = doppler_hz(30.0, 2.5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = MimoFading::new(&mut rng, DelayProfile::Eva, fd, 2, 2, &[1.5e6], 16);
        let frames = 100_000;
        let mut power = 0.0;
        for n in 0..frames {
            let h = &f.response(n as f64 * 5e-3)[0];
            power += h.norm_squared() / 4.0;
        }
        let mean = power / frames as f64;
        assert!((mean - 1.0).abs() <= 0.03, "{mean}");
    }

    #[test]
    fn ensemble_second_moment_per_entry() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let draws = 20_000;
        let mut power = 0.0;
        for _ in 0..draws {
            let f = MimoFading::new(&mut rng, DelayProfile::Etu, 0.0, 1, 1, &[2.7e6], 16);
            power += f.response(0.0)[0][(0, 0)].norm_sqr();
        }
        assert!((power / draws as f64 - 1.0).abs() <= 0.03);
    }
}
