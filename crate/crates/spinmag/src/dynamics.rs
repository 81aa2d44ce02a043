//! Rotating-frame control Hamiltonian and GKSL master-equation integration.
//!
//! The master equation evolves the density matrix under one control pulse
//! at a time,
//!
//! ```text
//! d rho/dt = -i [H, rho] + gamma D_z[rho] + gamma D_-[rho],
//! ```
//!
//! with a dephasing channel D_z generated by Sz and a loss channel D_-
//! generated by S-. Alongside rho we co-evolve the parameter sensitivity
//! d(rho)/d(omega), obtained by differentiating the master equation with
//! respect to the background frequency (the only omega-dependence is the
//! `omega Sz` term of the Hamiltonian):
//!
//! ```text
//! d(drho)/dt = -i [Sz, rho] - i [H, drho] + gamma D_z[drho] + gamma D_-[drho].
//! ```
//!
//! Both equations are linear, so the pair is integrated as one stacked ODE
//! with an adaptive embedded Runge-Kutta 5(4) scheme.

use nalgebra::DVector;
use num_complex::Complex64;
use thiserror::Error;

use crate::spin::{
    build_spin_operators, commutator, hermitize, CMatrix, DensityMatrix, SpinJ, SpinOperators,
};

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("pulse amplitude must be nonnegative, got {0}")]
    NegativeAmplitude(f64),
    #[error("pulse duration must be positive, got {0}")]
    NonPositiveDuration(f64),
    #[error("background frequency must be positive, got {0}")]
    NonPositiveOmega(f64),
    #[error("decay rate must be nonnegative, got {0}")]
    NegativeGamma(f64),
    #[error("state dimension {state} does not match model dimension {model}")]
    DimensionMismatch { state: usize, model: usize },
    #[error("integrator step size underflowed at t = {t_reached:.6e}")]
    StepUnderflow { t_reached: f64 },
    #[error("integrator exceeded {max_steps} steps at t = {t_reached:.6e}")]
    MaxStepsExceeded { max_steps: usize, t_reached: f64 },
    #[error("pulse sequence is empty")]
    EmptySequence,
}

/// One control pulse: Rabi amplitude, phase, drive frequency, duration.
/// The parameters are constant over the pulse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseParams {
    pub omega_rabi: f64,
    pub phi: f64,
    pub delta: f64,
    pub t_pulse: f64,
}

impl PulseParams {
    pub fn new(omega_rabi: f64, phi: f64, delta: f64, t_pulse: f64) -> Result<Self, DynamicsError> {
        if !(omega_rabi >= 0.0) {
            return Err(DynamicsError::NegativeAmplitude(omega_rabi));
        }
        if !(t_pulse > 0.0) {
            return Err(DynamicsError::NonPositiveDuration(t_pulse));
        }
        Ok(Self { omega_rabi, phi, delta, t_pulse })
    }

    /// Zero-amplitude resonant pulse: free evolution for `t_pulse`.
    pub fn free(omega: f64, t_pulse: f64) -> Result<Self, DynamicsError> {
        Self::new(0.0, 0.0, omega, t_pulse)
    }
}

/// Spin system with background Larmor frequency `omega` and one shared decay
/// rate `gamma` for the dephasing (Sz) and loss (S-) channels.
#[derive(Debug, Clone)]
pub struct LindbladModel {
    pub spin: SpinJ,
    pub ops: SpinOperators,
    pub omega: f64,
    pub gamma: f64,
    // Cached operator products for the dissipators.
    s_plus: CMatrix,
    sz_sq: CMatrix,
    sp_sm: CMatrix,
}

impl LindbladModel {
    pub fn new(spin: SpinJ, omega: f64, gamma: f64) -> Result<Self, DynamicsError> {
        if !(omega > 0.0) {
            return Err(DynamicsError::NonPositiveOmega(omega));
        }
        if !(gamma >= 0.0) {
            return Err(DynamicsError::NegativeGamma(gamma));
        }
        let ops = build_spin_operators(spin);
        let s_plus = ops.s_plus();
        let sz_sq = &ops.sz * &ops.sz;
        let sp_sm = &s_plus * &ops.s_minus;
        Ok(Self { spin, ops, omega, gamma, s_plus, sz_sq, sp_sm })
    }

    pub fn dim(&self) -> usize {
        self.spin.dim()
    }

    /// gamma * (Sz x Sz - {Sz^2, x}/2 + S- x S+ - {S+ S-, x}/2), the
    /// dissipator applied to an arbitrary matrix.
    fn dissipator(&self, x: &CMatrix) -> CMatrix {
        let half = Complex64::new(0.5, 0.0);
        let dz = &self.ops.sz * x * &self.ops.sz - (&self.sz_sq * x + x * &self.sz_sq) * half;
        let dm = &self.ops.s_minus * x * &self.s_plus - (&self.sp_sm * x + x * &self.sp_sm) * half;
        (dz + dm) * Complex64::new(self.gamma, 0.0)
    }
}

/// The pair (rho, d(rho)/d(omega)) evolved jointly through the master
/// equation. drho is Hermitian and traceless.
#[derive(Debug, Clone)]
pub struct SensitivityState {
    pub rho: DensityMatrix,
    pub drho: CMatrix,
}

impl SensitivityState {
    /// Starts from an omega-independent state: drho = 0.
    pub fn from_initial(rho: DensityMatrix) -> Self {
        let d = rho.dim();
        Self { rho, drho: CMatrix::zeros(d, d) }
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }
}

/// Ordered list of pulses; the paper-standard runs share one duration.
#[derive(Debug, Clone)]
pub struct PulseSequence {
    pub pulses: Vec<PulseParams>,
}

impl PulseSequence {
    pub fn new(pulses: Vec<PulseParams>) -> Result<Self, DynamicsError> {
        if pulses.is_empty() {
            return Err(DynamicsError::EmptySequence);
        }
        Ok(Self { pulses })
    }

    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    pub fn total_time(&self) -> f64 {
        self.pulses.iter().map(|p| p.t_pulse).sum()
    }
}

/// Rotating-frame Hamiltonian for one pulse:
/// H = Omega [sin(phi) Sx - cos(phi) Sy] + (omega - delta) Sz.
pub fn hamiltonian(pulse: &PulseParams, model: &LindbladModel) -> CMatrix {
    let drive = &model.ops.sx * Complex64::new(pulse.phi.sin(), 0.0)
        - &model.ops.sy * Complex64::new(pulse.phi.cos(), 0.0);
    drive * Complex64::new(pulse.omega_rabi, 0.0)
        + &model.ops.sz * Complex64::new(model.omega - pulse.delta, 0.0)
}

/// Time derivative of (rho, drho) under Hamiltonian `h`.
pub fn gksl_rhs(
    state: &SensitivityState,
    h: &CMatrix,
    model: &LindbladModel,
) -> (CMatrix, CMatrix) {
    let i = Complex64::new(0.0, 1.0);
    let rho = state.rho.matrix();
    let rho_dot = commutator(h, rho) * (-i) + model.dissipator(rho);
    let drho_dot = commutator(&model.ops.sz, rho) * (-i)
        + commutator(h, &state.drho) * (-i)
        + model.dissipator(&state.drho);
    (rho_dot, drho_dot)
}

/// Integrator controls for [`evolve_pulse`]. Defaults: rtol 1e-8,
/// atol 1e-10, initial step t_pulse/1000.
#[derive(Debug, Clone, Copy)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    pub initial_step_fraction: f64,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            initial_step_fraction: 1e-3,
            max_steps: 10_000_000,
        }
    }
}

/// Integrates the joint (rho, drho) ODE over one pulse and re-Hermitizes the
/// result. The trace is never renormalized; drift is a test signal.
pub fn evolve_pulse(
    state: &SensitivityState,
    pulse: &PulseParams,
    model: &LindbladModel,
) -> Result<SensitivityState, DynamicsError> {
    evolve_pulse_with(state, pulse, model, IntegratorOptions::default())
}

pub fn evolve_pulse_with(
    state: &SensitivityState,
    pulse: &PulseParams,
    model: &LindbladModel,
    opts: IntegratorOptions,
) -> Result<SensitivityState, DynamicsError> {
    let d = model.dim();
    if state.dim() != d {
        return Err(DynamicsError::DimensionMismatch { state: state.dim(), model: d });
    }
    let h = hamiltonian(pulse, model);

    let y0 = pack(state.rho.matrix(), &state.drho);
    let rhs = |y: &DVector<Complex64>| -> DVector<Complex64> {
        let (rho, drho) = unpack(y, d);
        let probe = SensitivityState { rho: DensityMatrix::new_unchecked(rho), drho };
        let (rho_dot, drho_dot) = gksl_rhs(&probe, &h, model);
        pack(&rho_dot, &drho_dot)
    };

    let y_end = dopri5(&rhs, y0, pulse.t_pulse, opts)?;
    let (rho, drho) = unpack(&y_end, d);
    Ok(SensitivityState {
        rho: DensityMatrix::new_unchecked(hermitize(&rho)),
        drho: hermitize(&drho),
    })
}

/// Chains [`evolve_pulse`] over a sequence; the returned list has length
/// N + 1 with the initial state first.
pub fn evolve_sequence(
    initial: &SensitivityState,
    seq: &PulseSequence,
    model: &LindbladModel,
) -> Result<Vec<SensitivityState>, DynamicsError> {
    let mut out = Vec::with_capacity(seq.len() + 1);
    out.push(initial.clone());
    for pulse in &seq.pulses {
        let next = evolve_pulse(out.last().unwrap(), pulse, model)?;
        out.push(next);
    }
    Ok(out)
}

fn pack(rho: &CMatrix, drho: &CMatrix) -> DVector<Complex64> {
    let d = rho.nrows();
    let mut y = DVector::zeros(2 * d * d);
    for r in 0..d {
        for c in 0..d {
            y[r * d + c] = rho[(r, c)];
            y[d * d + r * d + c] = drho[(r, c)];
        }
    }
    y
}

fn unpack(y: &DVector<Complex64>, d: usize) -> (CMatrix, CMatrix) {
    let rho = CMatrix::from_fn(d, d, |r, c| y[r * d + c]);
    let drho = CMatrix::from_fn(d, d, |r, c| y[d * d + r * d + c]);
    (rho, drho)
}

// Dormand-Prince 5(4) coefficients.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// 5th-order weights (row 7 of the tableau equals A[5]; FSAL).
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
// Embedded 4th-order weights.
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Adaptive Dormand-Prince 5(4) for the autonomous linear system
/// y' = rhs(y), integrating over [0, t_end].
fn dopri5<F>(
    rhs: &F,
    y0: DVector<Complex64>,
    t_end: f64,
    opts: IntegratorOptions,
) -> Result<DVector<Complex64>, DynamicsError>
where
    F: Fn(&DVector<Complex64>) -> DVector<Complex64>,
{
    let n = y0.len();
    let h_min = t_end * 1e-14;
    let mut t = 0.0;
    let mut y = y0;
    let mut h = t_end * opts.initial_step_fraction;
    let mut k1 = rhs(&y);
    let mut steps = 0usize;

    while t < t_end {
        if steps >= opts.max_steps {
            return Err(DynamicsError::MaxStepsExceeded { max_steps: opts.max_steps, t_reached: t });
        }
        steps += 1;
        if h > t_end - t {
            h = t_end - t;
        }

        let hc = Complex64::new(h, 0.0);
        let mut k = Vec::with_capacity(7);
        k.push(k1.clone());
        for stage in 0..6 {
            let mut yi = y.clone();
            for (j, kj) in k.iter().enumerate() {
                let a = A[stage][j];
                if a != 0.0 {
                    yi.axpy(hc * Complex64::new(a, 0.0), kj, Complex64::new(1.0, 0.0));
                }
            }
            k.push(rhs(&yi));
        }

        let mut y5 = y.clone();
        let mut err_vec = DVector::<Complex64>::zeros(n);
        for (j, kj) in k.iter().enumerate() {
            if B5[j] != 0.0 {
                y5.axpy(hc * Complex64::new(B5[j], 0.0), kj, Complex64::new(1.0, 0.0));
            }
            let diff = B5[j] - B4[j];
            if diff != 0.0 {
                err_vec.axpy(hc * Complex64::new(diff, 0.0), kj, Complex64::new(1.0, 0.0));
            }
        }

        // Weighted RMS error over complex components.
        let mut acc = 0.0;
        for i in 0..n {
            let scale = opts.atol + opts.rtol * y[i].norm().max(y5[i].norm());
            let ratio = err_vec[i].norm() / scale;
            acc += ratio * ratio;
        }
        let err = (acc / n as f64).sqrt();

        if err <= 1.0 {
            t += h;
            y = y5;
            // FSAL: the last stage of an accepted step is k1 of the next.
            k1 = k.pop().unwrap();
        }

        let factor = if err > 0.0 {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        h *= factor;
        if h < h_min && t < t_end {
            return Err(DynamicsError::StepUnderflow { t_reached: t });
        }
    }
    Ok(y)
}
