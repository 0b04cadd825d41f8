//! Random instance generators for property tests and synthetic scenarios.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::hermitian::{symmetrize, BlockDiagHermitian, ComplexMatrix};
use crate::objective::{EffectiveChannel, PowerBudget, PowerProfile, TransformedProfile};

/// Circularly-symmetric complex Gaussian sample with `E|z|² = variance`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(s * re, s * im)
}

/// `rows x cols` matrix of i.i.d. `CN(0, variance)` entries.
pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, variance: f64) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng, variance))
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, dims: &[usize]) -> BlockDiagHermitian {
    let blocks = dims
        .iter()
        .map(|&d| symmetrize(&gaussian_matrix(rng, d, d, 1.0)))
        .collect();
    BlockDiagHermitian::from_nominally_hermitian(blocks)
}

/// Random PSD block-diagonal matrix with total trace exactly `trace`.
pub fn random_psd_with_trace<R: Rng + ?Sized>(rng: &mut R, dims: &[usize], trace: f64) -> BlockDiagHermitian {
    let blocks: Vec<ComplexMatrix> = dims
        .iter()
        .map(|&d| {
            // Random rank so that boundary (singular) points get exercised too.
            let rank = rng.random_range(1..=d.max(1));
            let g = gaussian_matrix(rng, d, rank, 1.0);
            &g * g.adjoint()
        })
        .collect();
    let raw = BlockDiagHermitian::from_nominally_hermitian(blocks);
    let t = raw.trace();
    if t > 0.0 {
        raw.scale(trace / t)
    } else {
        raw
    }
}

/// Random point of the unit-trace feasible set; the trace itself is uniform on `[0, 1]`.
pub fn random_transformed<R: Rng + ?Sized>(rng: &mut R, dims: &[usize], budget: PowerBudget) -> TransformedProfile {
    let t = rng.random::<f64>();
    let x = random_psd_with_trace(rng, dims, t);
    TransformedProfile::new(x, budget).expect("sampled point is feasible")
}

pub fn random_power_profile<R: Rng + ?Sized>(rng: &mut R, dims: &[usize], budget: PowerBudget) -> PowerProfile {
    let p = rng.random::<f64>() * budget.p_max;
    let q = random_psd_with_trace(rng, dims, p);
    PowerProfile::new(q, budget).expect("sampled point is feasible")
}

/// Rayleigh effective channel with `K` blocks of shape `rx x tx` and per-entry power `gain`.
pub fn rayleigh_channel<R: Rng + ?Sized>(
    rng: &mut R,
    k: usize,
    rx: usize,
    tx: usize,
    gain: f64,
    frame: u64,
) -> EffectiveChannel {
    let blocks = (0..k).map(|_| gaussian_matrix(rng, rx, tx, gain)).collect();
    EffectiveChannel::new(blocks, frame).expect("finite channel")
}
