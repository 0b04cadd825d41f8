//! Online energy-efficiency maximization for multi-user MIMO-OFDM links.
//!
//! The crate is organized bottom-up:
//!
//! - [`hermitian`]: block-diagonal Hermitian matrices and the dense kernels
//!   (eigendecomposition, `log det(I + H Q H†)`, Cholesky solves) used everywhere else.
//! - [`objective`]: the energy-efficiency objective, its concave reparameterization
//!   over the unit-trace set and the exact gradient.
//! - [`projection`]: Euclidean projection onto PSD block-diagonal matrices with total
//!   trace at most one.
//! - [`learner`]: online gradient ascent with power-law and harmonic step sizes.
//! - [`noise`]: synthetic unbiased gradient errors with controllable tails.
//! - [`regret`]: the best fixed profile in hindsight and regret accounting.
//! - [`units`]: dBm/watt and nat/bit conversions.

pub mod hermitian;
pub mod learner;
pub mod noise;
pub mod objective;
pub mod projection;
pub mod regret;
pub mod sampling;
pub mod units;

mod error;

pub use error::{Error, Result};
pub use hermitian::{BlockDiagHermitian, ComplexMatrix, EigenDecomposition};
pub use learner::{GradientFeedback, Initialization, LearnerState, PerfectFeedback, StepPolicy};
pub use noise::{NoiseDistribution, NoiseMode, NoiseSpec, NoisyFeedback};
pub use objective::{EffectiveChannel, PowerBudget, PowerProfile, TransformedProfile};
pub use projection::{project_matrix, project_spectrum, SpectrumProjection};
pub use regret::{FrameRecord, OracleOptions, OracleSolution, RegretReport};
