//! Dense complex kernels specialized to block-diagonal Hermitian structure.
//!
//! Every block-diagonal quantity of the learning loop (covariances, their
//! transformed counterparts, gradients) is a [`BlockDiagHermitian`]: one square
//! Hermitian block per subcarrier. Constructors validate the Hermitian
//! invariant and store the symmetrized part `(B + B†)/2`, so rounding drift
//! cannot accumulate over long runs.

use nalgebra::{Cholesky, DMatrix, Dyn, SymmetricEigen};
use num_complex::Complex64;

use crate::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;

/// Relative tolerance of the Hermitian check, `‖B − B†‖_F ≤ tol · max(1, ‖B‖_F)`.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Eigenvalues in `[-PSD_CLAMP, 0)` are rounding noise and are clamped to zero.
pub const PSD_CLAMP: f64 = 1e-10;

/// Convergence threshold handed to the symmetric eigensolver.
const EIGEN_EPS: f64 = f64::EPSILON;

pub fn is_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// `(M + M†)/2`.
pub fn symmetrize(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// `‖M − M†‖_F`.
pub fn hermitian_residual(m: &ComplexMatrix) -> f64 {
    (m - m.adjoint()).norm()
}

/// Frobenius inner product `Re tr(A† B)`; equals `tr(A B)` for Hermitian `A`, `B`.
pub fn real_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

/// Block-diagonal complex Hermitian matrix `diag(B_1, …, B_K)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockDiagHermitian {
    blocks: Vec<ComplexMatrix>,
}

impl BlockDiagHermitian {
    /// Validates squareness, finiteness and the Hermitian invariant of each block.
    pub fn new(blocks: Vec<ComplexMatrix>) -> Result<Self> {
        for (k, b) in blocks.iter().enumerate() {
            if !b.is_square() {
                return Err(Error::DimensionMismatch(format!(
                    "block {k} is {}x{}, expected square",
                    b.nrows(),
                    b.ncols()
                )));
            }
            if !is_finite(b) {
                return Err(Error::NonFinite);
            }
            let residual = hermitian_residual(b);
            if residual > HERMITIAN_TOL * b.norm().max(1.0) {
                return Err(Error::NotHermitian { block: k, residual });
            }
        }
        Ok(Self::from_nominally_hermitian(blocks))
    }

    /// Symmetrizes blocks that are Hermitian up to rounding, without checking.
    pub(crate) fn from_nominally_hermitian(blocks: Vec<ComplexMatrix>) -> Self {
        Self {
            blocks: blocks.iter().map(symmetrize).collect(),
        }
    }

    pub fn zeros(dims: &[usize]) -> Self {
        Self {
            blocks: dims.iter().map(|&d| ComplexMatrix::zeros(d, d)).collect(),
        }
    }

    pub fn scaled_identity(dims: &[usize], c: f64) -> Self {
        Self {
            blocks: dims
                .iter()
                .map(|&d| ComplexMatrix::from_diagonal_element(d, d, Complex64::new(c, 0.0)))
                .collect(),
        }
    }

    pub fn identity(dims: &[usize]) -> Self {
        Self::scaled_identity(dims, 1.0)
    }

    /// Real diagonal blocks, one vector of diagonal entries per block.
    pub fn from_diagonals(diagonals: &[Vec<f64>]) -> Result<Self> {
        let blocks = diagonals
            .iter()
            .map(|d| {
                let n = d.len();
                ComplexMatrix::from_fn(n, n, |i, j| {
                    if i == j {
                        Complex64::new(d[i], 0.0)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                })
            })
            .collect();
        Self::new(blocks)
    }

    pub fn blocks(&self) -> &[ComplexMatrix] {
        &self.blocks
    }

    pub fn block(&self, k: usize) -> &ComplexMatrix {
        &self.blocks[k]
    }

    pub fn into_blocks(self) -> Vec<ComplexMatrix> {
        self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.nrows()).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.nrows()).sum()
    }

    pub fn same_structure(&self, other: &Self) -> bool {
        self.blocks.len() == other.blocks.len()
            && self
                .blocks
                .iter()
                .zip(&other.blocks)
                .all(|(a, b)| a.nrows() == b.nrows())
    }

    fn check_structure(&self, other: &Self) -> Result<()> {
        if self.same_structure(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "block structure {:?} vs {:?}",
                self.block_dims(),
                other.block_dims()
            )))
        }
    }

    /// `Σ_k tr(B_k)`, real by Hermitian symmetry.
    pub fn trace(&self) -> f64 {
        self.blocks.iter().map(|b| b.trace().re).sum()
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            blocks: self.blocks.iter().map(|b| b.scale(c)).collect(),
        }
    }

    /// `self + c · other`, symmetrized.
    pub fn add_scaled(&self, other: &Self, c: f64) -> Result<Self> {
        self.check_structure(other)?;
        let blocks = self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| a + b.scale(c))
            .collect();
        Ok(Self::from_nominally_hermitian(blocks))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.add_scaled(other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add_scaled(other, -1.0)
    }

    /// Frobenius inner product `tr(A B)` over all blocks.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_structure(other)?;
        Ok(self
            .blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| real_inner(a, b))
            .sum())
    }

    /// Block-wise product `A B` as a plain (not necessarily Hermitian) block list.
    pub fn mul_blocks(&self, other: &Self) -> Result<Vec<ComplexMatrix>> {
        self.check_structure(other)?;
        Ok(self.blocks.iter().zip(&other.blocks).map(|(a, b)| a * b).collect())
    }

    pub fn frobenius(&self) -> f64 {
        frobenius(self)
    }

    pub fn eig(&self) -> Result<EigenDecomposition> {
        eig_hermitian(self)
    }

    /// Smallest eigenvalue across all blocks (`+∞` for an empty matrix).
    pub fn min_eigenvalue(&self) -> Result<f64> {
        let eig = self.eig()?;
        Ok(eig
            .eigenvalues
            .iter()
            .filter_map(|v| v.last().copied())
            .fold(f64::INFINITY, f64::min))
    }

    /// Clamps eigenvalues in `[-PSD_CLAMP, 0)` to zero; anything more negative is an error.
    pub fn clamp_psd(&self) -> Result<Self> {
        let eig = self.eig()?;
        let mut needs_rebuild = false;
        let mut clamped = eig.eigenvalues.clone();
        for (k, vals) in clamped.iter_mut().enumerate() {
            for v in vals.iter_mut() {
                if *v < -PSD_CLAMP {
                    return Err(Error::Infeasible(format!(
                        "block {k} has eigenvalue {v:.3e} below the PSD tolerance"
                    )));
                }
                if *v < 0.0 {
                    *v = 0.0;
                    needs_rebuild = true;
                }
            }
        }
        if needs_rebuild {
            Ok(eig.rebuild(&clamped))
        } else {
            Ok(self.clone())
        }
    }
}

/// Per-block eigenvalues (descending) and unitary eigenvector matrices.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<Vec<f64>>,
    pub eigenvectors: Vec<ComplexMatrix>,
}

impl EigenDecomposition {
    pub fn reconstruct(&self) -> BlockDiagHermitian {
        self.rebuild(&self.eigenvalues)
    }

    /// `U_k diag(values_k) U_k†` for each block.
    pub fn rebuild(&self, values: &[Vec<f64>]) -> BlockDiagHermitian {
        let blocks = self
            .eigenvectors
            .iter()
            .zip(values)
            .map(|(u, vals)| rebuild_block(u, vals))
            .collect();
        BlockDiagHermitian::from_nominally_hermitian(blocks)
    }
}

pub(crate) fn rebuild_block(u: &ComplexMatrix, values: &[f64]) -> ComplexMatrix {
    let mut scaled = u.clone();
    for (j, &v) in values.iter().enumerate() {
        scaled.column_mut(j).scale_mut(v);
    }
    &scaled * u.adjoint()
}

/// Eigendecomposition of one Hermitian block; `block` only labels errors.
pub fn eig_block(m: &ComplexMatrix, block: usize) -> Result<(Vec<f64>, ComplexMatrix)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((Vec::new(), ComplexMatrix::zeros(0, 0)));
    }
    let iterations = 100 * n;
    let eig = SymmetricEigen::<Complex64, Dyn>::try_new(symmetrize(m), EIGEN_EPS, iterations)
        .ok_or(Error::EigenNoConvergence { block, iterations })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

pub fn eig_hermitian(y: &BlockDiagHermitian) -> Result<EigenDecomposition> {
    let mut eigenvalues = Vec::with_capacity(y.num_blocks());
    let mut eigenvectors = Vec::with_capacity(y.num_blocks());
    for (k, b) in y.blocks().iter().enumerate() {
        let (vals, vecs) = eig_block(b, k)?;
        eigenvalues.push(vals);
        eigenvectors.push(vecs);
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// `√(Σ |entries|²)` over all blocks.
pub fn frobenius(y: &BlockDiagHermitian) -> f64 {
    y.blocks()
        .iter()
        .map(|b| b.norm_squared())
        .sum::<f64>()
        .sqrt()
}

/// `W^{-1/2}` of a Hermitian positive-definite matrix via its eigendecomposition.
pub fn inverse_sqrt_pd(w: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (vals, vecs) = eig_block(w, 0)?;
    if vals.iter().any(|&v| v <= 0.0) {
        return Err(Error::NotPositiveDefinite { block: 0 });
    }
    let inv: Vec<f64> = vals.iter().map(|v| v.sqrt().recip()).collect();
    Ok(symmetrize(&rebuild_block(&vecs, &inv)))
}

fn check_channel_block(h: &ComplexMatrix, q: &ComplexMatrix, k: usize) -> Result<()> {
    if h.ncols() != q.nrows() || !q.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "block {k}: channel is {}x{} but covariance is {}x{}",
            h.nrows(),
            h.ncols(),
            q.nrows(),
            q.ncols()
        )));
    }
    Ok(())
}

/// `I + H Q H†`, symmetrized.
pub fn ipp(h: &ComplexMatrix, q: &ComplexMatrix) -> ComplexMatrix {
    let n = h.nrows();
    let mut m = h * q * h.adjoint();
    for i in 0..n {
        m[(i, i)] += Complex64::new(1.0, 0.0);
    }
    symmetrize(&m)
}

/// Cholesky factor of `I + H_k Q_k H_k†`.
pub fn ipp_cholesky(
    h: &ComplexMatrix,
    q: &ComplexMatrix,
    block: usize,
) -> Result<Cholesky<Complex64, Dyn>> {
    check_channel_block(h, q, block)?;
    let chol = Cholesky::new(ipp(h, q)).ok_or(Error::NotPositiveDefinite { block })?;
    // Complex square roots never fail, so a negative pivot shows up as an imaginary diagonal.
    let l = chol.l_dirty();
    let pivots_ok = (0..l.nrows()).all(|i| {
        let d = l[(i, i)];
        d.re.is_finite() && d.re > 0.0 && d.im.abs() <= 1e-12 * d.re
    });
    if pivots_ok {
        Ok(chol)
    } else {
        Err(Error::NotPositiveDefinite { block })
    }
}

/// `log det` of a Hermitian positive-definite matrix from its Cholesky factor.
pub fn logdet_from_cholesky(chol: &Cholesky<Complex64, Dyn>) -> f64 {
    let l = chol.l_dirty();
    (0..l.nrows()).map(|i| 2.0 * l[(i, i)].re.ln()).sum()
}

/// `Σ_k log det(I + H_k Q_k H_k†)` in nats.
pub fn logdet_ipp(h: &[ComplexMatrix], q: &BlockDiagHermitian) -> Result<f64> {
    if h.len() != q.num_blocks() {
        return Err(Error::DimensionMismatch(format!(
            "{} channel blocks vs {} covariance blocks",
            h.len(),
            q.num_blocks()
        )));
    }
    let mut total = 0.0;
    for (k, (hk, qk)) in h.iter().zip(q.blocks()).enumerate() {
        total += logdet_from_cholesky(&ipp_cholesky(hk, qk, k)?);
    }
    // det(I + HQH†) ≥ 1 for PSD Q; negative values are rounding.
    Ok(total.max(0.0))
}

/// `(I + H_k Q_k H_k†)^{-1} B` via Cholesky.
pub fn solve_ipp(h: &ComplexMatrix, q: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if b.nrows() != h.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "right-hand side has {} rows, expected {}",
            b.nrows(),
            h.nrows()
        )));
    }
    Ok(ipp_cholesky(h, q, 0)?.solve(b))
}
