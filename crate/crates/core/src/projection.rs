//! Euclidean projection onto `{X = diag(X_1, …, X_K) : X_k ⪰ 0, Σ_k tr X_k ≤ 1}`.
//!
//! The projection of a Hermitian `Y = U diag(y) U†` keeps the eigenvectors and
//! projects the spectrum onto the capped simplex `{p ≥ 0, Σ p ≤ 1}`. The trace
//! budget is shared by all blocks, so the eigenvalues of every block are pooled
//! before the spectral projection and then returned to their source blocks.

use crate::hermitian::{eig_hermitian, BlockDiagHermitian};
use crate::objective::{PowerBudget, TransformedProfile};
use crate::Result;

/// Result of projecting a real spectrum onto the capped simplex.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumProjection {
    pub input_eigs: Vec<f64>,
    pub output_eigs: Vec<f64>,
    /// Multiplier of the trace budget; zero unless the budget is active.
    pub lambda: f64,
}

/// Projects `y` onto `{p ≥ 0, Σ p ≤ 1}`.
///
/// Negative entries map to zero. If the positive parts already sum to at most
/// one they are returned as is; otherwise every entry is shifted down by the
/// unique `λ > 0` with `Σ [y_i − λ]₊ = 1`, located exactly by sorting and prefix sums.
pub fn project_spectrum(y: &[f64]) -> SpectrumProjection {
    let positive_sum: f64 = y.iter().map(|v| v.max(0.0)).sum();
    if positive_sum <= 1.0 {
        return SpectrumProjection {
            input_eigs: y.to_vec(),
            output_eigs: y.iter().map(|v| v.max(0.0)).collect(),
            lambda: 0.0,
        };
    }

    let mut sorted: Vec<f64> = y.iter().copied().filter(|&v| v > 0.0).collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut prefix = 0.0;
    let mut lambda = 0.0;
    for (j, &v) in sorted.iter().enumerate() {
        prefix += v;
        let candidate = (prefix - 1.0) / (j + 1) as f64;
        if v > candidate {
            lambda = candidate;
        } else {
            break;
        }
    }
    let lambda = lambda.max(0.0);
    SpectrumProjection {
        input_eigs: y.to_vec(),
        output_eigs: y.iter().map(|&v| (v - lambda).max(0.0)).collect(),
        lambda,
    }
}

/// `Π(Y) = U diag(π(y)) U†` over the pooled spectrum of all blocks.
pub fn project_matrix(y: &BlockDiagHermitian) -> Result<BlockDiagHermitian> {
    let eig = eig_hermitian(y)?;
    let pooled: Vec<f64> = eig.eigenvalues.iter().flatten().copied().collect();
    let projected = project_spectrum(&pooled).output_eigs;
    let mut offset = 0;
    let per_block: Vec<Vec<f64>> = eig
        .eigenvalues
        .iter()
        .map(|vals| {
            let out = projected[offset..offset + vals.len()].to_vec();
            offset += vals.len();
            out
        })
        .collect();
    Ok(eig.rebuild(&per_block))
}

/// Projection packaged as a feasible [`TransformedProfile`].
pub fn project_transformed(y: &BlockDiagHermitian, budget: PowerBudget) -> Result<TransformedProfile> {
    Ok(TransformedProfile::from_projection(project_matrix(y)?, budget))
}
