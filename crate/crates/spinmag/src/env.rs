//! Episodic pulse-control environment wrapping the spin simulator.
//!
//! An episode is N pulses of fixed duration. The observation is the flattened
//! density matrix (real parts, then imaginary parts, row-major) plus the
//! normalized episode time; the action is a raw (-1, 1)^3 triple scaled onto
//! the (Omega, phi, delta) bounds; the reward is the per-pulse change in QFI,
//! by default normalized by the ideal ceiling 4 j^2 T^2 so that episode
//! returns live on a O(1) scale.

use nalgebra::DVector;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dynamics::{
    evolve_pulse, DynamicsError, LindbladModel, PulseParams, SensitivityState,
};
use crate::metrology::{qfi, MetrologyError};
use crate::neural::{GaussianActor, NeuralError};
use crate::spin::{DensityMatrix, SpinJ};

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("raw action component {index} = {value} outside [-1, 1]")]
    ActionOutOfRange { index: usize, value: f64 },
    #[error("action must have 3 components, got {0}")]
    ActionDimension(usize),
    #[error("episode is already done; call reset")]
    EpisodeDone,
    #[error("bounds are not ordered: [{low}, {high}]")]
    UnorderedBounds { low: f64, high: f64 },
    #[error("n_pulses must be at least 1")]
    NoPulses,
    #[error("initial state dimension {state} does not match spin dimension {spin}")]
    InitialStateDimension { state: usize, spin: usize },
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Metrology(#[from] MetrologyError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
}

/// Raw policy action: each component in [-1, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Action(pub [f64; 3]);

/// Environment parameters. `paper_standard` wires the reference working
/// point: Omega_ref = 2 pi, omega = 1000 sqrt(2) Omega_ref, Omega in
/// [0, 5 Omega_ref], phi in [0, pi/2], delta in [0.99, 1.01] omega, N = 10
/// pulses over T = 10 * 2 pi / Omega_ref, gamma = 0.05 * 2 pi / T.
#[derive(Debug, Clone)]
pub struct EnvConfig {
    pub spin: SpinJ,
    pub omega_ref: f64,
    pub omega: f64,
    pub omega_bounds: (f64, f64),
    pub phi_bounds: (f64, f64),
    pub delta_bounds: (f64, f64),
    pub n_pulses: usize,
    pub t_pulse: f64,
    pub gamma: f64,
    pub initial_state: DensityMatrix,
    /// Include t_i / T as the last observation entry.
    pub include_time_obs: bool,
    /// Divide rewards by 4 j^2 T^2.
    pub normalize_reward: bool,
}

impl EnvConfig {
    pub fn paper_standard(spin: SpinJ) -> Self {
        let omega_ref = 2.0 * std::f64::consts::PI;
        let omega = 1000.0 * 2.0_f64.sqrt() * omega_ref;
        let n_pulses = 10;
        let total_t = 10.0 * 2.0 * std::f64::consts::PI / omega_ref;
        Self {
            spin,
            omega_ref,
            omega,
            omega_bounds: (0.0, 5.0 * omega_ref),
            phi_bounds: (0.0, std::f64::consts::FRAC_PI_2),
            delta_bounds: (0.99 * omega, 1.01 * omega),
            n_pulses,
            t_pulse: total_t / n_pulses as f64,
            gamma: 0.05 * 2.0 * std::f64::consts::PI / total_t,
            initial_state: DensityMatrix::spin_polarized(spin),
            include_time_obs: true,
            normalize_reward: true,
        }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        for (low, high) in [self.omega_bounds, self.phi_bounds, self.delta_bounds] {
            if !(low < high) {
                return Err(EnvError::UnorderedBounds { low, high });
            }
        }
        if self.n_pulses == 0 {
            return Err(EnvError::NoPulses);
        }
        if self.initial_state.dim() != self.spin.dim() {
            return Err(EnvError::InitialStateDimension {
                state: self.initial_state.dim(),
                spin: self.spin.dim(),
            });
        }
        Ok(())
    }

    /// Total episode duration T = N * T_pulse.
    pub fn total_time(&self) -> f64 {
        self.n_pulses as f64 * self.t_pulse
    }

    /// Ideal decoherence-free QFI ceiling 4 j^2 T^2 used for normalization.
    pub fn qfi_norm(&self) -> f64 {
        let j = self.spin.j();
        4.0 * j * j * self.total_time() * self.total_time()
    }

    /// Observation length: 2 d^2 (+ 1 when time is included).
    pub fn obs_dim(&self) -> usize {
        let d = self.spin.dim();
        2 * d * d + usize::from(self.include_time_obs)
    }
}

/// Affine map from a raw [-1, 1] component onto [low, high]:
/// X = (X_U - X_L)(x + 1)/2 + X_L.
fn scale_component(raw: f64, (low, high): (f64, f64)) -> f64 {
    if raw <= -1.0 {
        return low;
    }
    if raw >= 1.0 {
        return high;
    }
    (high - low) * (raw + 1.0) / 2.0 + low
}

/// Scales a raw action onto the configured (Omega, phi, delta) bounds.
pub fn scale_action(raw: &Action, cfg: &EnvConfig) -> Result<PulseParams, EnvError> {
    for (index, &value) in raw.0.iter().enumerate() {
        if !(-1.0..=1.0).contains(&value) {
            return Err(EnvError::ActionOutOfRange { index, value });
        }
    }
    Ok(PulseParams {
        omega_rabi: scale_component(raw.0[0], cfg.omega_bounds),
        phi: scale_component(raw.0[1], cfg.phi_bounds),
        delta: scale_component(raw.0[2], cfg.delta_bounds),
        t_pulse: cfg.t_pulse,
    })
}

/// Flattened observation vector.
pub type Observation = Vec<f64>;

fn encode_observation(state: &SensitivityState, t_frac: f64, include_time: bool) -> Observation {
    let rho = state.rho.matrix();
    let d = rho.nrows();
    let mut obs = Vec::with_capacity(2 * d * d + 1);
    for r in 0..d {
        for c in 0..d {
            obs.push(rho[(r, c)].re);
        }
    }
    for r in 0..d {
        for c in 0..d {
            obs.push(rho[(r, c)].im);
        }
    }
    if include_time {
        obs.push(t_frac);
    }
    obs
}

/// Interface the trainer drives; implemented by [`SpinEnv`] and by synthetic
/// test environments.
pub trait Environment {
    fn obs_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    fn reset(&mut self) -> Observation;
    fn step(&mut self, action: &[f64]) -> Result<(Observation, f64, bool), EnvError>;
}

/// The spin-control environment. Owns its episode state; independent
/// instances may run in parallel.
#[derive(Debug, Clone)]
pub struct SpinEnv {
    cfg: EnvConfig,
    model: LindbladModel,
    state: SensitivityState,
    step_idx: usize,
    last_q: f64,
}

impl SpinEnv {
    pub fn new(cfg: EnvConfig) -> Result<Self, EnvError> {
        cfg.validate()?;
        let model = LindbladModel::new(cfg.spin, cfg.omega, cfg.gamma)?;
        let state = SensitivityState::from_initial(cfg.initial_state.clone());
        Ok(Self { cfg, model, state, step_idx: 0, last_q: 0.0 })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn model(&self) -> &LindbladModel {
        &self.model
    }

    /// Current (rho, drho) pair.
    pub fn state(&self) -> &SensitivityState {
        &self.state
    }

    /// QFI of the current state.
    pub fn current_qfi(&self) -> f64 {
        self.last_q
    }

    pub fn steps_taken(&self) -> usize {
        self.step_idx
    }

    pub fn is_done(&self) -> bool {
        self.step_idx >= self.cfg.n_pulses
    }

    /// Starts a fresh episode from the configured initial state with zero
    /// sensitivity; the initial QFI of an omega-independent state is 0.
    pub fn reset(&mut self) -> Observation {
        self.state = SensitivityState::from_initial(self.cfg.initial_state.clone());
        self.step_idx = 0;
        self.last_q = 0.0;
        encode_observation(&self.state, 0.0, self.cfg.include_time_obs)
    }

    /// Applies one scaled pulse: returns the next observation, the
    /// (optionally normalized) QFI increment, and the done flag.
    pub fn step(&mut self, raw: Action) -> Result<(Observation, f64, bool), EnvError> {
        if self.is_done() {
            return Err(EnvError::EpisodeDone);
        }
        let pulse = scale_action(&raw, &self.cfg)?;
        self.state = evolve_pulse(&self.state, &pulse, &self.model)?;
        self.step_idx += 1;

        let q = qfi(&self.state)?.value();
        let mut reward = q - self.last_q;
        if self.cfg.normalize_reward {
            reward /= self.cfg.qfi_norm();
        }
        self.last_q = q;

        let t_frac = self.step_idx as f64 / self.cfg.n_pulses as f64;
        let obs = encode_observation(&self.state, t_frac, self.cfg.include_time_obs);
        Ok((obs, reward, self.is_done()))
    }
}

impl Environment for SpinEnv {
    fn obs_dim(&self) -> usize {
        self.cfg.obs_dim()
    }

    fn action_dim(&self) -> usize {
        3
    }

    fn reset(&mut self) -> Observation {
        SpinEnv::reset(self)
    }

    fn step(&mut self, action: &[f64]) -> Result<(Observation, f64, bool), EnvError> {
        if action.len() != 3 {
            return Err(EnvError::ActionDimension(action.len()));
        }
        SpinEnv::step(self, Action([action[0], action[1], action[2]]))
    }
}

/// Everything recorded over one episode.
#[derive(Debug, Clone)]
pub struct Rollout {
    pub observations: Vec<Observation>,
    pub actions: Vec<Action>,
    pub rewards: Vec<f64>,
    /// QFI after each pulse (element 0 is the initial QFI).
    pub qfis: Vec<f64>,
    pub final_q: f64,
}

/// Runs one full episode with actions from the actor (sampled, or tanh(mu)
/// when `deterministic`).
pub fn rollout(
    env: &mut SpinEnv,
    actor: &GaussianActor,
    deterministic: bool,
    rng: &mut ChaCha8Rng,
) -> Result<Rollout, EnvError> {
    let mut observations = vec![env.reset()];
    let mut actions = Vec::with_capacity(env.cfg.n_pulses);
    let mut rewards = Vec::with_capacity(env.cfg.n_pulses);
    let mut qfis = vec![env.current_qfi()];

    loop {
        let obs_vec = DVector::from_column_slice(observations.last().unwrap());
        let a = if deterministic {
            actor.mean_action(&obs_vec)?
        } else {
            actor.sample(&obs_vec, rng)?.0
        };
        let action = Action([a[0], a[1], a[2]]);
        let (obs, reward, done) = env.step(action)?;
        observations.push(obs);
        actions.push(action);
        rewards.push(reward);
        qfis.push(env.current_qfi());
        if done {
            break;
        }
    }
    Ok(Rollout {
        observations,
        actions,
        rewards,
        final_q: *qfis.last().unwrap(),
        qfis,
    })
}
