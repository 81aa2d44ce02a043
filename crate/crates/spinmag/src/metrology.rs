//! Symmetric logarithmic derivative, quantum Fisher information, and the
//! control-free QFI upper bound used for normalization.
//!
//! The SLD L solves `drho = (rho L + L rho) / 2`. We solve it in vectorized
//! form: with row-major vectorization, `vec(L) = 2 pinv(rho (x) I + I (x)
//! conj(rho)) vec(drho)`, where the pseudo-inverse truncates singular values
//! below `1e-10 * sigma_max`. The QFI is `Q = tr(rho L^2)`.

use nalgebra::DVector;
use num_complex::Complex64;
use thiserror::Error;

use crate::dynamics::SensitivityState;
use crate::spin::{frobenius_norm, hermitize, identity, CMatrix, CVector, DensityMatrix, SpinJ};

/// Relative singular-value cutoff for the SLD pseudo-inverse.
pub const SLD_PINV_CUTOFF: f64 = 1e-10;
/// Residual tolerance (relative to 1 + ||drho||_F) beyond which the SLD is
/// reported unattainable.
pub const SLD_RESIDUAL_TOL: f64 = 1e-7;
/// QFI values in (-QFI_CLAMP_TOL, 0) are clamped to zero; anything more
/// negative is an error.
pub const QFI_CLAMP_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum MetrologyError {
    #[error(
        "SLD unattainable: drho has weight outside the regularized support of rho \
         (residual {residual:.3e})"
    )]
    UnattainableSld { residual: f64 },
    #[error("QFI is negative beyond round-off: {0:.3e}")]
    NegativeQfi(f64),
}

/// Hermitian SLD matrix together with the rank of rho used in the inversion.
#[derive(Debug, Clone)]
pub struct SldMatrix {
    pub mat: CMatrix,
    pub support_dim: usize,
}

/// Nonnegative quantum Fisher information value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QfiValue(pub f64);

impl QfiValue {
    pub fn value(&self) -> f64 {
        self.0
    }
}

/// Kronecker product a (x) b.
fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij != Complex64::new(0.0, 0.0) {
                for k in 0..br {
                    for l in 0..bc {
                        out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                    }
                }
            }
        }
    }
    out
}

/// Row-major vectorization.
fn vec_rows(m: &CMatrix) -> DVector<Complex64> {
    let d = m.nrows();
    DVector::from_fn(d * d, |idx, _| m[(idx / d, idx % d)])
}

fn unvec_rows(v: &DVector<Complex64>, d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |r, c| v[r * d + c])
}

/// Solves the SLD equation for the given (rho, drho) pair.
///
/// Fails when drho has weight outside the regularized support of rho, which
/// makes the defining equation unsolvable.
pub fn sld(state: &SensitivityState) -> Result<SldMatrix, MetrologyError> {
    let d = state.dim();
    let rho = state.rho.matrix();
    let eye = identity(d);

    // rho (x) I + I (x) conj(rho) is Hermitian PSD with eigenvalues
    // p_k + p_l, so the pseudo-inverse comes from its eigendecomposition.
    let m = kron(rho, &eye) + kron(&eye, &rho.conjugate());
    let eigen = hermitize(&m).symmetric_eigen();
    let sigma_max = eigen.eigenvalues.iter().fold(0.0_f64, |acc, &e| acc.max(e.abs()));
    let cutoff = SLD_PINV_CUTOFF * sigma_max;

    let b = vec_rows(&state.drho) * Complex64::new(2.0, 0.0);
    let ut_b = eigen.eigenvectors.adjoint() * &b;
    let mut coeffs = DVector::<Complex64>::zeros(d * d);
    for i in 0..d * d {
        let e = eigen.eigenvalues[i];
        if e.abs() > cutoff {
            coeffs[i] = ut_b[i] / Complex64::new(e, 0.0);
        }
    }
    let l_vec = &eigen.eigenvectors * coeffs;
    let l = hermitize(&unvec_rows(&l_vec, d));

    let reconstructed = (rho * &l + &l * rho) * Complex64::new(0.5, 0.0);
    let residual = frobenius_norm(&(&reconstructed - &state.drho));
    let scale = 1.0 + frobenius_norm(&state.drho);
    if residual > SLD_RESIDUAL_TOL * scale {
        return Err(MetrologyError::UnattainableSld { residual });
    }

    let rho_eigs = hermitize(rho).symmetric_eigen().eigenvalues;
    let p_max = rho_eigs.iter().fold(0.0_f64, |acc, &p| acc.max(p.abs()));
    let support_dim = rho_eigs
        .iter()
        .filter(|&&p| p.abs() > SLD_PINV_CUTOFF * p_max)
        .count();

    Ok(SldMatrix { mat: l, support_dim })
}

/// Q = tr(rho L^2). Round-off negatives inside (-1e-9, 0) are clamped to 0.
pub fn qfi(state: &SensitivityState) -> Result<QfiValue, MetrologyError> {
    let l = sld(state)?;
    let q = (state.rho.matrix() * &l.mat * &l.mat).trace().re;
    if q < -QFI_CLAMP_TOL {
        return Err(MetrologyError::NegativeQfi(q));
    }
    Ok(QfiValue(q.max(0.0)))
}

/// Elementwise [`qfi`] over a trajectory of states.
pub fn qfi_trajectory(states: &[SensitivityState]) -> Result<Vec<QfiValue>, MetrologyError> {
    states.iter().map(qfi).collect()
}

/// The equal superposition of the extremal sublevels,
/// (|m = j> + |m = -j>) / sqrt(2), as a density matrix.
pub fn optimal_probe_state(spin: SpinJ) -> DensityMatrix {
    let d = spin.dim();
    let mut psi = CVector::zeros(d);
    psi[0] = Complex64::new(1.0, 0.0);
    psi[d - 1] = Complex64::new(1.0, 0.0);
    DensityMatrix::from_ket(&psi)
}

/// Decoherence-free maximal QFI attainable from `rho` by unitary control over
/// duration `t`.
///
/// With eigenvalues of rho sorted descending and paired head-to-tail, the
/// bound is `(2 j t)^2 * sum_k (p_k - p_{d+1-k})^2 / (p_k + p_{d+1-k})` over
/// the first floor(d/2) pairs. It reduces to `4 j^2 t^2` for pure states and
/// vanishes for the maximally mixed state.
pub fn max_qfi_bound(rho: &DensityMatrix, t: f64) -> QfiValue {
    let d = rho.dim();
    let j = (d - 1) as f64 / 2.0;
    let mut p: Vec<f64> = hermitize(rho.matrix())
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    p.sort_by(|a, b| b.partial_cmp(a).unwrap());

    let mut sum = 0.0;
    for k in 0..d / 2 {
        let (hi, lo) = (p[k], p[d - 1 - k]);
        let denom = hi + lo;
        if denom > 0.0 {
            sum += (hi - lo) * (hi - lo) / denom;
        }
    }
    QfiValue((2.0 * j * t).powi(2) * sum)
}
