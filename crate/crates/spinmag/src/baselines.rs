//! Reference strategies the learned pulse sequences are compared against:
//! free evolution of the optimal probe state, and a single resonant
//! pi/2-pulse followed by free evolution.
//!
//! Free evolution means a zero-amplitude resonant pulse (Omega = 0,
//! delta = omega): the rotating-frame Hamiltonian vanishes while the
//! dissipators stay active, and the sensitivity keeps accumulating.

use thiserror::Error;

use crate::dynamics::{
    evolve_sequence, DynamicsError, LindbladModel, PulseParams, PulseSequence, SensitivityState,
};
use crate::metrology::{optimal_probe_state, qfi_trajectory, MetrologyError, QfiValue};
use crate::spin::DensityMatrix;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Metrology(#[from] MetrologyError),
    #[error("snapshot count must be at least 1")]
    NoSnapshots,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyTag {
    OptimalProbe,
    PiHalf,
}

/// QFI trajectory of a reference strategy; `final_q` equals the last
/// trajectory element.
#[derive(Debug, Clone)]
pub struct BaselineResult {
    pub final_q: QfiValue,
    pub trajectory: Vec<QfiValue>,
    pub strategy_tag: StrategyTag,
}

/// Evolves `rho0` freely (with dissipators) for `t_total`, sampling the QFI
/// at `n_snapshots` evenly spaced times. The sensitivity starts at zero.
pub fn free_evolution_qfi(
    model: &LindbladModel,
    rho0: DensityMatrix,
    t_total: f64,
    n_snapshots: usize,
) -> Result<Vec<QfiValue>, BaselineError> {
    if n_snapshots == 0 {
        return Err(BaselineError::NoSnapshots);
    }
    let dt = t_total / n_snapshots as f64;
    let idle = PulseParams::free(model.omega, dt)?;
    let seq = PulseSequence::new(vec![idle; n_snapshots])?;
    let states = evolve_sequence(&SensitivityState::from_initial(rho0), &seq, model)?;
    Ok(qfi_trajectory(&states)?)
}

/// QFI of the optimal probe state under free evolution for `t_total`.
pub fn optimal_probe_baseline(
    model: &LindbladModel,
    t_total: f64,
    n_snapshots: usize,
) -> Result<BaselineResult, BaselineError> {
    let trajectory = free_evolution_qfi(
        model,
        optimal_probe_state(model.spin),
        t_total,
        n_snapshots,
    )?;
    Ok(BaselineResult {
        final_q: *trajectory.last().unwrap(),
        trajectory,
        strategy_tag: StrategyTag::OptimalProbe,
    })
}

/// From the spin-polarized state, applies one resonant pulse with
/// Omega = pi / (2 t_pulse) and phi = 0, then free evolution for the
/// remaining (n_pulses - 1) segments. The sensitivity co-evolves from t = 0,
/// so the preparation pulse is counted inside the total duration.
pub fn pi_half_baseline(
    model: &LindbladModel,
    t_pulse: f64,
    n_pulses: usize,
) -> Result<BaselineResult, BaselineError> {
    if n_pulses == 0 {
        return Err(BaselineError::NoSnapshots);
    }
    let prep = PulseParams::new(
        std::f64::consts::FRAC_PI_2 / t_pulse,
        0.0,
        model.omega,
        t_pulse,
    )?;
    let idle = PulseParams::free(model.omega, t_pulse)?;
    let mut pulses = vec![prep];
    pulses.extend(std::iter::repeat_n(idle, n_pulses - 1));
    let seq = PulseSequence::new(pulses)?;

    let initial = SensitivityState::from_initial(DensityMatrix::spin_polarized(model.spin));
    let states = evolve_sequence(&initial, &seq, model)?;
    let trajectory = qfi_trajectory(&states)?;
    Ok(BaselineResult {
        final_q: *trajectory.last().unwrap(),
        trajectory,
        strategy_tag: StrategyTag::PiHalf,
    })
}

/// State reached from the spin-polarized state by the single resonant
/// pi/2-pulse (gamma included), without the trailing free evolution.
pub fn pi_half_prepared_state(
    model: &LindbladModel,
    t_pulse: f64,
) -> Result<SensitivityState, BaselineError> {
    let prep = PulseParams::new(
        std::f64::consts::FRAC_PI_2 / t_pulse,
        0.0,
        model.omega,
        t_pulse,
    )?;
    let initial = SensitivityState::from_initial(DensityMatrix::spin_polarized(model.spin));
    Ok(crate::dynamics::evolve_pulse(&initial, &prep, model)?)
}
