//! Synthetic gradient measurement errors.
//!
//! The observed gradient is `V̂ = V + Z` where `Z` is Hermitian with zero-mean
//! entries: the upper triangle is sampled i.i.d. (complex off the diagonal,
//! real on it) and mirrored. Every distribution is normalized so that each
//! entry has `E|Z_ij|² = σ²`, which makes `E‖Z‖_F² = σ² · Σ_k d_k²` exact.
//! Student-t entries give polynomial tails `P(|z| ≥ t) ~ t^{-ν}`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use serde::{Deserialize, Serialize};

use crate::hermitian::{BlockDiagHermitian, ComplexMatrix};
use crate::learner::GradientFeedback;
use crate::objective::{gradient, EffectiveChannel, TransformedProfile};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "distribution", rename_all = "snake_case")]
pub enum NoiseDistribution {
    Gaussian,
    Uniform,
    /// Student-t with `dof` degrees of freedom, which is also the tail index.
    StudentT { dof: f64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseMode {
    /// Entry standard deviation `σ = scale`.
    #[default]
    Additive,
    /// `σ = scale · ‖V‖_F / √(Σ d_k²)`, so the relative error level equals `scale`.
    Multiplicative,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub distribution: NoiseDistribution,
    pub scale: f64,
    pub mode: NoiseMode,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(distribution: NoiseDistribution, scale: f64, mode: NoiseMode, seed: u64) -> Result<Self> {
        let spec = Self {
            distribution,
            scale,
            mode,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Multiplicative noise whose relative error level is exactly `eta`.
    pub fn with_relative_level(distribution: NoiseDistribution, eta: f64, seed: u64) -> Result<Self> {
        Self::new(distribution, eta, NoiseMode::Multiplicative, seed)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale >= 0.0 && self.scale.is_finite()) {
            return Err(Error::InvalidParameter(format!("noise scale must be >= 0, got {}", self.scale)));
        }
        if let NoiseDistribution::StudentT { dof } = self.distribution {
            if !(dof > 2.0) {
                return Err(Error::InvalidParameter(format!("tail index must exceed 2, got {dof}")));
            }
        }
        Ok(())
    }

    /// Tail exponent `β` of `P(‖Z‖ ≥ z) ≤ B/z^β`; infinite for light tails.
    pub fn tail_index(&self) -> f64 {
        match self.distribution {
            NoiseDistribution::StudentT { dof } => dof,
            NoiseDistribution::Gaussian | NoiseDistribution::Uniform => f64::INFINITY,
        }
    }

    /// Per-entry standard deviation applied to a gradient `v`.
    pub fn entry_std(&self, v: &BlockDiagHermitian) -> f64 {
        match self.mode {
            NoiseMode::Additive => self.scale,
            NoiseMode::Multiplicative => {
                let entries = entry_count(v);
                if entries == 0 {
                    0.0
                } else {
                    self.scale * v.frobenius() / (entries as f64).sqrt()
                }
            }
        }
    }
}

fn entry_count(v: &BlockDiagHermitian) -> usize {
    v.block_dims().iter().map(|d| d * d).sum()
}

/// Zero-mean, unit-variance real sample.
fn unit_sample<R: Rng + ?Sized>(distribution: NoiseDistribution, rng: &mut R) -> f64 {
    match distribution {
        NoiseDistribution::Gaussian => StandardNormal.sample(rng),
        NoiseDistribution::Uniform => (rng.random::<f64>() * 2.0 - 1.0) * 3f64.sqrt(),
        NoiseDistribution::StudentT { dof } => {
            let t: f64 = StudentT::new(dof).expect("validated dof").sample(rng);
            t * ((dof - 2.0) / dof).sqrt()
        }
    }
}

/// `V̂ = V + Z` with `Z` Hermitian and `E|Z_ij|² = σ²` per entry.
pub fn perturb<R: Rng + ?Sized>(v: &BlockDiagHermitian, spec: &NoiseSpec, rng: &mut R) -> BlockDiagHermitian {
    let sigma = spec.entry_std(v);
    if sigma == 0.0 {
        return v.clone();
    }
    let off = sigma / 2f64.sqrt();
    let blocks: Vec<ComplexMatrix> = v
        .blocks()
        .iter()
        .map(|b| {
            let n = b.nrows();
            let mut out = b.clone();
            for i in 0..n {
                out[(i, i)].re += sigma * unit_sample(spec.distribution, rng);
                for j in i + 1..n {
                    let z = Complex64::new(
                        off * unit_sample(spec.distribution, rng),
                        off * unit_sample(spec.distribution, rng),
                    );
                    out[(i, j)] += z;
                    out[(j, i)] += z.conj();
                }
            }
            out
        })
        .collect();
    BlockDiagHermitian::from_nominally_hermitian(blocks)
}

/// Relative error level `√E‖Z‖_F² / ‖V‖_F` of the estimator at `v`.
pub fn relative_error_level(spec: &NoiseSpec, v: &BlockDiagHermitian) -> Result<f64> {
    let norm = v.frobenius();
    if norm == 0.0 {
        return Err(Error::ZeroGradient);
    }
    Ok(spec.entry_std(v) * (entry_count(v) as f64).sqrt() / norm)
}

/// Noisy gradients drawn from a private, seeded stream.
#[derive(Clone, Debug)]
pub struct NoisyFeedback {
    spec: NoiseSpec,
    rng: ChaCha8Rng,
}

impl NoisyFeedback {
    pub fn new(spec: NoiseSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(spec.seed),
            spec,
        })
    }

    pub fn spec(&self) -> &NoiseSpec {
        &self.spec
    }
}

impl GradientFeedback for NoisyFeedback {
    fn observe(&mut self, x: &TransformedProfile, h: &EffectiveChannel) -> Result<BlockDiagHermitian> {
        let v = gradient(x, h)?;
        Ok(perturb(&v, &self.spec, &mut self.rng))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::hermitian_residual;
    use crate::sampling::random_hermitian;

    const DISTRIBUTIONS: [NoiseDistribution; 3] = [
        NoiseDistribution::Gaussian,
        NoiseDistribution::Uniform,
        NoiseDistribution::StudentT { dof: 5.0 },
    ];

    fn base() -> BlockDiagHermitian {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        random_hermitian(&mut rng, &[2, 2])
    }

    #[test]
    fn validation() {
        assert!(NoiseSpec::new(NoiseDistribution::Gaussian, -1.0, NoiseMode::Additive, 0).is_err());
        assert!(NoiseSpec::new(NoiseDistribution::StudentT { dof: 2.0 }, 1.0, NoiseMode::Additive, 0).is_err());
        let s = NoiseSpec::new(NoiseDistribution::StudentT { dof: 3.0 }, 1.0, NoiseMode::Additive, 0).unwrap();
        assert_eq!(s.tail_index(), 3.0);
        let s = NoiseSpec::new(NoiseDistribution::Uniform, 1.0, NoiseMode::Additive, 0).unwrap();
        assert!(s.tail_index().is_infinite());
    }

    #[test]
    fn zero_scale_is_exact() {
        let v = base();
        let spec = NoiseSpec::new(NoiseDistribution::Gaussian, 0.0, NoiseMode::Additive, 0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert_eq!(perturb(&v, &spec, &mut rng), v);
        assert_eq!(relative_error_level(&spec, &v).unwrap(), 0.0);
    }

    #[test]
    fn unbiased_within_clt_band() {
        let v = base();
        let draws = 100_000;
        for dist in DISTRIBUTIONS {
            let sigma = 0.7;
            let spec = NoiseSpec::new(dist, sigma, NoiseMode::Additive, 3).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(4);
            let mut acc = BlockDiagHermitian::zeros(&[2, 2]);
            for _ in 0..draws {
                let z = perturb(&v, &spec, &mut rng).sub(&v).unwrap();
                acc = acc.add(&z).unwrap();
            }
            let mean = acc.scale(1.0 / draws as f64);
            let band = 5.0 * sigma / (draws as f64).sqrt();
            for b in mean.blocks() {
                for z in b.iter() {
                    assert!(z.norm() <= band, "{dist:?}: {z} beyond {band}");
                }
            }
        }
    }

    #[test]
    fn output_is_hermitian_and_reproducible() {
        let v = base();
        for dist in DISTRIBUTIONS {
            let spec = NoiseSpec::new(dist, 2.0, NoiseMode::Additive, 9).unwrap();
            let mut a = NoisyFeedback::new(spec).unwrap();
            let mut b = NoisyFeedback::new(spec).unwrap();
            for _ in 0..20 {
                let za = perturb(&v, &spec, &mut a.rng);
                let zb = perturb(&v, &spec, &mut b.rng);
                assert_eq!(za, zb);
                for blk in za.blocks() {
                    assert!(hermitian_residual(blk) <= 1e-12 * blk.norm().max(1.0));
                }
            }
        }
    }

    #[test]
    fn empirical_level_matches_closed_form() {
        let v = base();
        for dist in [NoiseDistribution::Gaussian, NoiseDistribution::Uniform] {
            for eta in [0.2, 1.0] {
                let spec = NoiseSpec::with_relative_level(dist, eta, 5).unwrap();
                assert!((relative_error_level(&spec, &v).unwrap() - eta).abs() < 1e-12);
                let mut rng = ChaCha8Rng::seed_from_u64(6);
                let draws = 20_000;
                let ms: f64 = (0..draws)
                    .map(|_| perturb(&v, &spec, &mut rng).sub(&v).unwrap().frobenius().powi(2))
                    .sum::<f64>()
                    / draws as f64;
                let empirical = ms.sqrt() / v.frobenius();
                assert!((empirical - eta).abs() <= 0.02 * eta, "{dist:?} {eta}: {empirical}");
            }
        }
    }

    #[test]
    fn additive_level_calibration() {
        let v = base();
        // σ chosen so that σ √(Σd²) / ‖V‖ = 0.2.
        let sigma = 0.2 * v.frobenius() / 8f64.sqrt();
        let spec = NoiseSpec::new(NoiseDistribution::Gaussian, sigma, NoiseMode::Additive, 0).unwrap();
        assert!((relative_error_level(&spec, &v).unwrap() - 0.2).abs() < 1e-12);
        assert!(matches!(
            relative_error_level(&spec, &BlockDiagHermitian::zeros(&[2])),
            Err(Error::ZeroGradient)
        ));
    }

    #[test]
    fn student_t_tail_is_polynomial() {
        let v = BlockDiagHermitian::zeros(&[1]);
        let spec = NoiseSpec::new(NoiseDistribution::StudentT { dof: 3.0 }, 1.0, NoiseMode::Additive, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let draws = 200_000;
        let mut norms: Vec<f64> = (0..draws).map(|_| perturb(&v, &spec, &mut rng).frobenius()).collect();
        norms.sort_by(f64::total_cmp);
        let tail = |z: f64| norms.iter().rev().take_while(|&&n| n >= z).count() as f64 / draws as f64;
        // Calibrate B on moderate thresholds, then require the far tail to respect it.
        let b_fit = [1.0, 1.5, 2.0, 3.0].iter().map(|&z| tail(z) * z.powi(3)).fold(0.0, f64::max);
        for z in [4.0, 6.0, 8.0, 12.0] {
            assert!(tail(z) <= 1.5 * b_fit / z.powi(3), "z={z}: {} vs {}", tail(z), b_fit / z.powi(3));
        }
        // Heavier than Gaussian: exceedances of 6σ remain visible.
        assert!(tail(6.0) > 1e-4);
    }
}
