//! Energy-efficiency objective and its concave reparameterization.
//!
//! A transmit covariance `Q` (block-diagonal, PSD, `tr Q ≤ P_max`) achieves
//! `ee(Q) = R(Q) / (P_c + tr Q)` with `R(Q) = Σ_k log det(I + H̃_k Q_k H̃_k†)`.
//! The ratio is not concave in `Q`. The change of variables
//!
//! ```text
//! X = (P_c + P_max)/P_max · Q/(P_c + tr Q)
//! Q = P_c P_max / (P_c + P_max (1 − tr X)) · X
//! ```
//!
//! maps the power-constrained set onto `{X ⪰ 0, tr X ≤ 1}` and turns the
//! objective into the concave utility `u(X) = ee(Q(X))`.

use serde::{Deserialize, Serialize};

use crate::hermitian::{
    ipp_cholesky, is_finite, logdet_from_cholesky, logdet_ipp, real_inner, BlockDiagHermitian, ComplexMatrix,
};
use crate::{Error, Result};

/// Slack allowed on `tr Q ≤ P_max`.
pub const POWER_TOL: f64 = 1e-9;

/// Slack allowed on `tr X ≤ 1`; traces inside the slack are treated as exactly one.
pub const TRACE_TOL: f64 = 1e-12;

/// Maximum radiated power and circuit power, both in watts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerBudget {
    pub p_max: f64,
    pub p_circuit: f64,
}

impl PowerBudget {
    pub fn new(p_max: f64, p_circuit: f64) -> Result<Self> {
        if !(p_max > 0.0 && p_max.is_finite()) {
            return Err(Error::InvalidParameter(format!("p_max must be positive, got {p_max}")));
        }
        if !(p_circuit > 0.0 && p_circuit.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "p_circuit must be positive, got {p_circuit}"
            )));
        }
        Ok(Self { p_max, p_circuit })
    }

    /// `P_max / (P_c + P_max)`, the prefactor of the gradient.
    fn gradient_scale(&self) -> f64 {
        self.p_max / (self.p_circuit + self.p_max)
    }
}

/// A feasible transmit covariance `Q`.
#[derive(Clone, Debug)]
pub struct PowerProfile {
    q: BlockDiagHermitian,
    budget: PowerBudget,
}

impl PowerProfile {
    pub fn new(q: BlockDiagHermitian, budget: PowerBudget) -> Result<Self> {
        let q = q.clamp_psd()?;
        let power = q.trace();
        if power > budget.p_max + POWER_TOL {
            return Err(Error::Infeasible(format!(
                "total power {power} exceeds p_max {}",
                budget.p_max
            )));
        }
        Ok(Self { q, budget })
    }

    pub fn zeros(dims: &[usize], budget: PowerBudget) -> Self {
        Self {
            q: BlockDiagHermitian::zeros(dims),
            budget,
        }
    }

    /// Spreads `power` watts evenly over all antennas and subcarriers.
    pub fn uniform(dims: &[usize], power: f64, budget: PowerBudget) -> Result<Self> {
        let total: usize = dims.iter().sum();
        Self::new(BlockDiagHermitian::scaled_identity(dims, power / total as f64), budget)
    }

    pub fn q(&self) -> &BlockDiagHermitian {
        &self.q
    }

    pub fn budget(&self) -> PowerBudget {
        self.budget
    }

    /// `tr Q` in watts.
    pub fn total_power(&self) -> f64 {
        self.q.trace()
    }
}

/// A point `X` of the unit-trace feasible set.
#[derive(Clone, Debug)]
pub struct TransformedProfile {
    x: BlockDiagHermitian,
    budget: PowerBudget,
}

impl TransformedProfile {
    pub fn new(x: BlockDiagHermitian, budget: PowerBudget) -> Result<Self> {
        let x = x.clamp_psd()?;
        let t = x.trace();
        if t > 1.0 + TRACE_TOL {
            return Err(Error::Infeasible(format!("trace {t} exceeds 1")));
        }
        Ok(Self { x, budget })
    }

    /// Wraps the output of the projection, which is feasible by construction.
    pub(crate) fn from_projection(x: BlockDiagHermitian, budget: PowerBudget) -> Self {
        Self { x, budget }
    }

    pub fn zeros(dims: &[usize], budget: PowerBudget) -> Self {
        Self {
            x: BlockDiagHermitian::zeros(dims),
            budget,
        }
    }

    pub fn x(&self) -> &BlockDiagHermitian {
        &self.x
    }

    pub fn budget(&self) -> PowerBudget {
        self.budget
    }

    pub fn trace(&self) -> f64 {
        self.x.trace()
    }
}

/// Effective channel `H̃_k = W_k^{-1/2} H_k` for every subcarrier of one frame.
#[derive(Clone, Debug)]
pub struct EffectiveChannel {
    blocks: Vec<ComplexMatrix>,
    frame_index: u64,
}

impl EffectiveChannel {
    pub fn new(blocks: Vec<ComplexMatrix>, frame_index: u64) -> Result<Self> {
        if blocks.iter().any(|b| !is_finite(b)) {
            return Err(Error::NonFinite);
        }
        Ok(Self { blocks, frame_index })
    }

    /// Like [`EffectiveChannel::new`], additionally enforcing `‖H̃‖_F ≤ cap`.
    pub fn with_cap(blocks: Vec<ComplexMatrix>, frame_index: u64, cap: f64) -> Result<Self> {
        let h = Self::new(blocks, frame_index)?;
        let norm = h.frobenius();
        if norm > cap {
            return Err(Error::InvalidParameter(format!(
                "effective channel norm {norm:.3e} exceeds the cap {cap:.3e} at frame {frame_index}"
            )));
        }
        Ok(h)
    }

    pub fn blocks(&self) -> &[ComplexMatrix] {
        &self.blocks
    }

    pub fn frame_index(&self) -> u64 {
        self.frame_index
    }

    pub fn frobenius(&self) -> f64 {
        self.blocks.iter().map(|b| b.norm_squared()).sum::<f64>().sqrt()
    }

    /// Transmit dimension of each block, i.e. the block structure of `Q`.
    pub fn tx_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.ncols()).collect()
    }
}

/// Shannon rate `Σ_k log det(I + H̃_k Q_k H̃_k†)` in nats.
pub fn rate(q: &PowerProfile, h: &EffectiveChannel) -> Result<f64> {
    logdet_ipp(h.blocks(), q.q())
}

/// `R(Q) / (P_c + tr Q)`.
pub fn energy_efficiency(q: &PowerProfile, h: &EffectiveChannel) -> Result<f64> {
    Ok(rate(q, h)? / (q.budget.p_circuit + q.total_power()))
}

pub fn to_transformed(q: &PowerProfile) -> TransformedProfile {
    let b = q.budget;
    let c = (b.p_circuit + b.p_max) / b.p_max / (b.p_circuit + q.total_power());
    TransformedProfile {
        x: q.q.scale(c),
        budget: b,
    }
}

/// `P_c + P_max (1 − tr X)`, with traces inside the tolerance read as exactly one.
fn transformed_denominator(x: &TransformedProfile) -> f64 {
    let b = x.budget;
    let t = x.trace().min(1.0);
    b.p_circuit + b.p_max * (1.0 - t)
}

pub fn from_transformed(x: &TransformedProfile) -> PowerProfile {
    let b = x.budget;
    let c = b.p_circuit * b.p_max / transformed_denominator(x);
    PowerProfile {
        q: x.x.scale(c),
        budget: b,
    }
}

/// Concave utility `u(X)`, evaluated in closed form over the transformed variable.
pub fn utility(x: &TransformedProfile, h: &EffectiveChannel) -> Result<f64> {
    let b = x.budget;
    let s = transformed_denominator(x);
    let scaled = x.x.scale(b.p_circuit * b.p_max / s);
    let logdet = logdet_ipp(h.blocks(), &scaled)?;
    Ok(s / (b.p_circuit * (b.p_circuit + b.p_max)) * logdet)
}

/// Utility value and gradient `∇u(X)` in one pass.
///
/// With `Q = Q(X)` and `A_k = H̃_k† (I + H̃_k Q_k H̃_k†)^{-1} H̃_k`:
/// `V = P_max/(P_c + P_max) · [A + (tr(AQ) − R(Q))/P_c · I]`.
pub fn utility_and_gradient(x: &TransformedProfile, h: &EffectiveChannel) -> Result<(f64, BlockDiagHermitian)> {
    if h.blocks().len() != x.x.num_blocks() {
        return Err(Error::DimensionMismatch(format!(
            "{} channel blocks vs {} profile blocks",
            h.blocks().len(),
            x.x.num_blocks()
        )));
    }
    let b = x.budget;
    let q = from_transformed(x);
    let mut rate = 0.0;
    let mut tr_aq = 0.0;
    let mut a_blocks = Vec::with_capacity(h.blocks().len());
    for (k, (hk, qk)) in h.blocks().iter().zip(q.q.blocks()).enumerate() {
        let chol = ipp_cholesky(hk, qk, k)?;
        rate += logdet_from_cholesky(&chol);
        let a = hk.adjoint() * chol.solve(hk);
        tr_aq += real_inner(&a, qk);
        a_blocks.push(a);
    }
    let rate = rate.max(0.0);
    let shift = (tr_aq - rate) / b.p_circuit;
    let scale = b.gradient_scale();
    for a in &mut a_blocks {
        for i in 0..a.nrows() {
            a[(i, i)].re += shift;
        }
        *a *= num_complex::Complex64::new(scale, 0.0);
    }
    let value = rate / (b.p_circuit + q.total_power());
    Ok((value, BlockDiagHermitian::from_nominally_hermitian(a_blocks)))
}

pub fn gradient(x: &TransformedProfile, h: &EffectiveChannel) -> Result<BlockDiagHermitian> {
    Ok(utility_and_gradient(x, h)?.1)
}
