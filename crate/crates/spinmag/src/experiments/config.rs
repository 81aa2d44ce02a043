//! Flat experiment configuration: TOML in, with paper-standard defaults and
//! strict rejection of unknown keys.

use serde::{Deserialize, Serialize};

use crate::env::EnvConfig;
use crate::sac::SacHyperparams;
use crate::spin::{DensityMatrix, SpinJ};

use super::ExperimentError;

/// Everything a training run or sweep needs, as a flat key-value document.
/// `Default` is the paper-standard j = 1/2 working point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Spin quantum number (0.5, 1.0, 1.5, ...).
    pub j: f64,
    pub omega_ref: f64,
    pub omega: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    pub phi_min: f64,
    pub phi_max: f64,
    pub delta_min: f64,
    pub delta_max: f64,
    pub n_pulses: usize,
    pub t_pulse: f64,
    pub gamma: f64,
    pub include_time_obs: bool,
    pub normalize_reward: bool,

    pub alpha: f64,
    pub gamma_rl: f64,
    pub beta: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub episodes: usize,
    pub warmup_episodes: usize,
    pub buffer_capacity: usize,
    pub hidden_dims: Vec<usize>,

    pub seed: u64,
    /// Rollouts per decoherence-sweep grid point (and first-pulse samples).
    pub n_eval_trajectories: usize,
    /// Rollouts per grid point in the pulse-count and initial-state sweeps.
    pub n_eval_trajectories_small: usize,
    /// Write an intermediate checkpoint every this many episodes (0 = off).
    pub checkpoint_every: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let spin = SpinJ::new(0.5).unwrap();
        let env = EnvConfig::paper_standard(spin);
        let hyper = SacHyperparams::default();
        Self {
            j: 0.5,
            omega_ref: env.omega_ref,
            omega: env.omega,
            omega_min: env.omega_bounds.0,
            omega_max: env.omega_bounds.1,
            phi_min: env.phi_bounds.0,
            phi_max: env.phi_bounds.1,
            delta_min: env.delta_bounds.0,
            delta_max: env.delta_bounds.1,
            n_pulses: env.n_pulses,
            t_pulse: env.t_pulse,
            gamma: env.gamma,
            include_time_obs: env.include_time_obs,
            normalize_reward: env.normalize_reward,
            alpha: hyper.alpha,
            gamma_rl: hyper.gamma_rl,
            beta: hyper.beta,
            lr: hyper.lr,
            batch_size: hyper.batch_size,
            episodes: hyper.episodes,
            warmup_episodes: hyper.warmup_episodes,
            buffer_capacity: hyper.buffer_capacity,
            hidden_dims: hyper.hidden_dims,
            seed: 1,
            n_eval_trajectories: 100,
            n_eval_trajectories_small: 50,
            checkpoint_every: 250,
        }
    }
}

impl ExperimentConfig {
    /// Paper-standard configuration for a given spin quantum number.
    pub fn paper_standard(j: f64) -> Result<Self, ExperimentError> {
        let spin = SpinJ::new(j)?;
        let env = EnvConfig::paper_standard(spin);
        Ok(Self {
            j,
            omega_ref: env.omega_ref,
            omega: env.omega,
            omega_min: env.omega_bounds.0,
            omega_max: env.omega_bounds.1,
            phi_min: env.phi_bounds.0,
            phi_max: env.phi_bounds.1,
            delta_min: env.delta_bounds.0,
            delta_max: env.delta_bounds.1,
            n_pulses: env.n_pulses,
            t_pulse: env.t_pulse,
            gamma: env.gamma,
            ..Self::default()
        })
    }

    pub fn spin(&self) -> Result<SpinJ, ExperimentError> {
        Ok(SpinJ::new(self.j)?)
    }

    pub fn to_env_config(&self) -> Result<EnvConfig, ExperimentError> {
        let spin = self.spin()?;
        let cfg = EnvConfig {
            spin,
            omega_ref: self.omega_ref,
            omega: self.omega,
            omega_bounds: (self.omega_min, self.omega_max),
            phi_bounds: (self.phi_min, self.phi_max),
            delta_bounds: (self.delta_min, self.delta_max),
            n_pulses: self.n_pulses,
            t_pulse: self.t_pulse,
            gamma: self.gamma,
            initial_state: DensityMatrix::spin_polarized(spin),
            include_time_obs: self.include_time_obs,
            normalize_reward: self.normalize_reward,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_hyperparams(&self) -> SacHyperparams {
        SacHyperparams {
            alpha: self.alpha,
            gamma_rl: self.gamma_rl,
            beta: self.beta,
            lr: self.lr,
            batch_size: self.batch_size,
            episodes: self.episodes,
            warmup_episodes: self.warmup_episodes,
            buffer_capacity: self.buffer_capacity,
            hidden_dims: self.hidden_dims.clone(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> Result<String, ExperimentError> {
        Ok(toml::to_string(self)?)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_paper_standard() {
        let cfg = ExperimentConfig::default();
        assert_eq!(cfg.n_pulses, 10);
        assert!((cfg.omega / cfg.omega_ref - 1000.0 * 2.0_f64.sqrt()).abs() < 1e-9);
        assert!((cfg.t_pulse - 1.0).abs() < 1e-12);
        let total_t = cfg.n_pulses as f64 * cfg.t_pulse;
        assert!((cfg.gamma - 0.05 * 2.0 * std::f64::consts::PI / total_t).abs() < 1e-12);
        assert_eq!(cfg.hidden_dims, vec![256, 256, 256]);
        assert_eq!(cfg.alpha, 5.0);
    }

    #[test]
    fn partial_toml_fills_defaults() {
        let cfg = ExperimentConfig::from_toml("j = 1.0\nepisodes = 12\n").unwrap();
        assert_eq!(cfg.j, 1.0);
        assert_eq!(cfg.episodes, 12);
        assert_eq!(cfg.n_pulses, 10);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ExperimentConfig::from_toml("j = 1.0\nnot_a_key = 3\n");
        assert!(err.is_err());
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ExperimentConfig::paper_standard(1.5).unwrap();
        let text = cfg.to_toml().unwrap();
        let back = ExperimentConfig::from_toml(&text).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn env_config_conversion_validates() {
        let mut cfg = ExperimentConfig::default();
        cfg.j = 0.7;
        assert!(cfg.to_env_config().is_err());
        let ok = ExperimentConfig::default().to_env_config().unwrap();
        assert_eq!(ok.obs_dim(), 9);
    }
}
