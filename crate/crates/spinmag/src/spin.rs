//! Angular-momentum operators and density matrices for a spin-j system.
//!
//! The basis is fixed once and for all: `|m = j>` first, descending to
//! `|m = -j>`. All matrices elsewhere in the crate use this ordering, and
//! hbar = 1 throughout.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense complex matrix used for operators and states.
pub type CMatrix = DMatrix<Complex64>;
/// Dense complex vector (kets).
pub type CVector = DVector<Complex64>;

/// Max elementwise |m - m'| tolerated when checking Hermiticity.
pub const HERMITICITY_TOL: f64 = 1e-10;
/// |tr(rho) - 1| tolerated by [`validate_density`].
pub const TRACE_TOL: f64 = 1e-10;
/// Most negative eigenvalue tolerated by [`validate_density`].
pub const EIGENVALUE_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum SpinError {
    #[error("spin quantum number must be a positive half-integer, got {0}")]
    InvalidSpin(f64),
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("matrix is not Hermitian (max |m - m^H| = {0:.3e})")]
    NotHermitian(f64),
    #[error("trace is {0}, expected 1")]
    TraceNotOne(Complex64),
    #[error("eigenvalue {0:.3e} is negative beyond tolerance")]
    NegativeEigenvalue(f64),
}

/// Spin quantum number j (1/2, 1, 3/2, ...) with Hilbert-space dimension
/// d = 2j + 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpinJ {
    two_j: u32,
}

impl SpinJ {
    /// Builds a spin from j itself; rejects j <= 0 and non-half-integers.
    pub fn new(j: f64) -> Result<Self, SpinError> {
        let two_j = (2.0 * j).round();
        if !two_j.is_finite() || two_j < 1.0 || (2.0 * j - two_j).abs() > 1e-9 {
            return Err(SpinError::InvalidSpin(j));
        }
        Ok(Self { two_j: two_j as u32 })
    }

    pub fn from_two_j(two_j: u32) -> Result<Self, SpinError> {
        if two_j == 0 {
            return Err(SpinError::InvalidSpin(0.0));
        }
        Ok(Self { two_j })
    }

    pub fn j(&self) -> f64 {
        f64::from(self.two_j) / 2.0
    }

    pub fn two_j(&self) -> u32 {
        self.two_j
    }

    /// Hilbert-space dimension d = 2j + 1.
    pub fn dim(&self) -> usize {
        self.two_j as usize + 1
    }

    /// Magnetic quantum number of basis index `k` (descending: k = 0 is m = j).
    pub fn m_of(&self, k: usize) -> f64 {
        self.j() - k as f64
    }
}

/// The d x d angular-momentum operators in the fixed descending-m basis.
#[derive(Debug, Clone)]
pub struct SpinOperators {
    pub sx: CMatrix,
    pub sy: CMatrix,
    pub sz: CMatrix,
    pub s_minus: CMatrix,
}

impl SpinOperators {
    pub fn s_plus(&self) -> CMatrix {
        self.s_minus.adjoint()
    }

    pub fn dim(&self) -> usize {
        self.sz.nrows()
    }
}

/// Builds Sx, Sy, Sz and the lowering operator S- for spin `j`.
///
/// Sz is diagonal with entries j, j-1, ..., -j. S- carries
/// sqrt(j(j+1) - m(m-1)) on its first subdiagonal, and
/// Sx = (S+ + S-)/2, Sy = (S+ - S-)/(2i).
pub fn build_spin_operators(spin: SpinJ) -> SpinOperators {
    let d = spin.dim();
    let j = spin.j();

    let sz = CMatrix::from_fn(d, d, |r, c| {
        if r == c {
            Complex64::new(spin.m_of(r), 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });

    let mut s_minus = CMatrix::zeros(d, d);
    for col in 0..d - 1 {
        // S- |m> = sqrt(j(j+1) - m(m-1)) |m-1>, with |m> at index `col`.
        let m = spin.m_of(col);
        let amp = (j * (j + 1.0) - m * (m - 1.0)).sqrt();
        s_minus[(col + 1, col)] = Complex64::new(amp, 0.0);
    }

    let s_plus = s_minus.adjoint();
    let sx = (&s_plus + &s_minus) * Complex64::new(0.5, 0.0);
    let sy = (&s_plus - &s_minus) * Complex64::new(0.0, -0.5);

    SpinOperators { sx, sy, sz, s_minus }
}

/// [A, B] = AB - BA.
pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// {A, B} = AB + BA.
pub fn anticommutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b + b * a
}

/// (M + M^H) / 2.
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

/// Largest elementwise |m - m^H|.
pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    let diff = m - m.adjoint();
    diff.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Frobenius inner product Re tr(a^H b).
pub fn frobenius_inner(a: &CMatrix, b: &CMatrix) -> Result<f64, SpinError> {
    if a.nrows() != b.nrows() || a.ncols() != b.ncols() {
        return Err(SpinError::DimensionMismatch(a.nrows(), b.nrows()));
    }
    Ok(a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum())
}

/// Frobenius norm ||m||_F.
pub fn frobenius_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// exp(-i theta op) for Hermitian `op`, via its eigendecomposition.
pub fn unitary_exp(op: &CMatrix, theta: f64) -> CMatrix {
    let eigen = hermitize(op).symmetric_eigen();
    let d = op.nrows();
    let mut phases = CMatrix::zeros(d, d);
    for k in 0..d {
        phases[(k, k)] = (Complex64::new(0.0, -theta * eigen.eigenvalues[k])).exp();
    }
    &eigen.eigenvectors * phases * eigen.eigenvectors.adjoint()
}

/// Real expectation value Re tr(rho op) for Hermitian `op`.
pub fn expectation(rho: &CMatrix, op: &CMatrix) -> f64 {
    (rho * op).trace().re
}

/// Unit-trace, Hermitian, positive-semidefinite state of the spin.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: CMatrix,
}

impl DensityMatrix {
    /// Wraps a matrix the caller has already established to satisfy the
    /// density-matrix invariants (used on integrator output, which is
    /// re-Hermitized but never renormalized).
    pub fn new_unchecked(mat: CMatrix) -> Self {
        Self { mat }
    }

    /// |psi><psi| from a ket; the ket is normalized first.
    pub fn from_ket(psi: &CVector) -> Self {
        let n = psi.norm();
        let psi = psi / Complex64::new(n, 0.0);
        let mat = CMatrix::from_fn(psi.len(), psi.len(), |r, c| psi[r] * psi[c].conj());
        Self { mat }
    }

    /// The spin-polarized state |m = j><m = j|: all population in the first
    /// basis state.
    pub fn spin_polarized(spin: SpinJ) -> Self {
        let d = spin.dim();
        let mut mat = CMatrix::zeros(d, d);
        mat[(0, 0)] = Complex64::new(1.0, 0.0);
        Self { mat }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            mat: identity(dim) * Complex64::new(1.0 / dim as f64, 0.0),
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix {
        self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// tr(rho^2); 1 for pure states, 1/d for the maximally mixed state.
    pub fn purity(&self) -> f64 {
        // For Hermitian rho, tr(rho^2) = sum |rho_ij|^2.
        self.mat.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn expectation(&self, op: &CMatrix) -> f64 {
        expectation(&self.mat, op)
    }
}

/// tr(rho^2).
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.purity()
}

/// Checks the density-matrix invariants (Hermiticity, unit trace,
/// positivity) and wraps the matrix. Does not renormalize.
pub fn validate_density(mat: CMatrix) -> Result<DensityMatrix, SpinError> {
    if mat.nrows() != mat.ncols() {
        return Err(SpinError::NotSquare {
            rows: mat.nrows(),
            cols: mat.ncols(),
        });
    }
    let herm = hermiticity_residual(&mat);
    if herm > HERMITICITY_TOL {
        return Err(SpinError::NotHermitian(herm));
    }
    let tr = mat.trace();
    if (tr - Complex64::new(1.0, 0.0)).norm() > TRACE_TOL {
        return Err(SpinError::TraceNotOne(tr));
    }
    let eigen = hermitize(&mat).symmetric_eigen();
    let min_eig = eigen.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min_eig < -EIGENVALUE_TOL {
        return Err(SpinError::NegativeEigenvalue(min_eig));
    }
    Ok(DensityMatrix { mat })
}
