//! Training runs and the frozen-agent evaluation sweeps.
//!
//! Every sweep evaluates a frozen checkpoint: per grid point it samples
//! stochastic rollouts (each on its own RNG stream, so points and rollouts
//! are order-independent and parallel), aggregates median and interquartile
//! range, and recomputes both reference strategies for that grid point.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{optimal_probe_baseline, pi_half_baseline};
use crate::checkpoint::AgentCheckpoint;
use crate::dynamics::{evolve_pulse, LindbladModel, SensitivityState};
use crate::env::{rollout, scale_action, Action, EnvConfig, SpinEnv};
use crate::metrology::max_qfi_bound;
use crate::neural::GaussianActor;
use crate::sac::{train, SacAgent};
use crate::spin::{
    frobenius_inner, hermitize, identity, unitary_exp, CMatrix, DensityMatrix, SpinJ,
};

use super::config::ExperimentConfig;
use super::stats::{median, quartiles};
use super::ExperimentError;

pub const RUN_CHECKPOINT_VERSION: u32 = 1;

/// Checkpoint file contents: the experiment configuration that produced the
/// agent plus the agent snapshot itself.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunCheckpoint {
    pub version: u32,
    pub config: ExperimentConfig,
    pub agent: AgentCheckpoint,
}

impl RunCheckpoint {
    pub fn new(config: ExperimentConfig, agent: &SacAgent) -> Self {
        Self {
            version: RUN_CHECKPOINT_VERSION,
            config,
            agent: AgentCheckpoint::from_agent(agent),
        }
    }

    pub fn save(&self, path: &std::path::Path) -> Result<(), ExperimentError> {
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn actor(&self) -> Result<GaussianActor, ExperimentError> {
        Ok(GaussianActor::new(self.agent.actor.to_net()?))
    }
}

/// One evaluated grid point. `median_q`/quartiles are `None` where the
/// normalization is undefined (zero upper bound).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPoint {
    pub grid_value: f64,
    pub median_q: Option<f64>,
    pub q25: Option<f64>,
    pub q75: Option<f64>,
    pub baseline_opt: Option<f64>,
    pub baseline_pihalf: Option<f64>,
    pub aux_metric: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    /// Sweep identifier used in file names (gamma, pulses-fixed-duration, ...).
    pub sweep: String,
    /// Name of the auxiliary column, empty when unused.
    pub aux_name: String,
    pub points: Vec<SweepPoint>,
}

/// Grid of decay rates {0.01, ..., 0.09} * 2 pi / T.
pub fn default_gamma_grid(total_t: f64) -> Vec<f64> {
    (1..=9)
        .map(|i| 0.01 * i as f64 * 2.0 * std::f64::consts::PI / total_t)
        .collect()
}

/// Pulse-count grid {2, 4, ..., 20}.
pub fn default_pulse_grid() -> Vec<usize> {
    (1..=10).map(|k| 2 * k).collect()
}

/// 17 rotation angles over [0, pi].
pub fn default_theta_grid() -> Vec<f64> {
    (0..17).map(|i| std::f64::consts::PI * i as f64 / 16.0).collect()
}

/// 11 mixing weights over [0, 1].
pub fn default_lambda_grid() -> Vec<f64> {
    (0..11).map(|i| i as f64 / 10.0).collect()
}

pub const DEFAULT_RANDOM_STATES: usize = 100;

/// Final QFIs of `n` stochastic rollouts of the frozen actor, one RNG stream
/// per rollout so the set is reproducible and order-independent.
pub fn eval_final_qs(
    actor: &GaussianActor,
    env_cfg: &EnvConfig,
    n: usize,
    seed: u64,
    stream_base: u64,
) -> Result<Vec<f64>, ExperimentError> {
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream_base + i as u64);
            let mut env = SpinEnv::new(env_cfg.clone())?;
            let roll = rollout(&mut env, actor, false, &mut rng)?;
            Ok(roll.final_q)
        })
        .collect()
}

fn stream_for_point(point_idx: usize) -> u64 {
    (point_idx as u64 + 1) << 32
}

/// Trains an agent under the configured environment. Returns the trained
/// agent and the per-episode logs; callers handle persistence.
pub fn run_training(
    cfg: &ExperimentConfig,
    mut on_chunk: impl FnMut(&SacAgent, &[crate::sac::EpisodeLog]) -> Result<(), ExperimentError>,
) -> Result<(SacAgent, Vec<crate::sac::EpisodeLog>), ExperimentError> {
    let env_cfg = cfg.to_env_config()?;
    let mut env = SpinEnv::new(env_cfg)?;
    let mut agent = SacAgent::new(
        crate::env::Environment::obs_dim(&env),
        3,
        cfg.to_hyperparams(),
        cfg.seed,
    )?;
    let mut logs = Vec::with_capacity(cfg.episodes);
    let chunk = if cfg.checkpoint_every == 0 { cfg.episodes.max(1) } else { cfg.checkpoint_every };
    let mut remaining = cfg.episodes;
    while remaining > 0 {
        let run_now = chunk.min(remaining);
        let new_logs = train(&mut agent, &mut env, run_now)?;
        logs.extend(new_logs);
        remaining -= run_now;
        on_chunk(&agent, &logs)?;
    }
    Ok((agent, logs))
}

/// Both reference strategies at the given working point, expressed in raw
/// QFI units.
fn baselines_at(
    spin: SpinJ,
    omega: f64,
    gamma: f64,
    t_pulse: f64,
    n_pulses: usize,
) -> Result<(f64, f64), ExperimentError> {
    let model = LindbladModel::new(spin, omega, gamma)?;
    let t_total = t_pulse * n_pulses as f64;
    let opt = optimal_probe_baseline(&model, t_total, n_pulses)?.final_q.value();
    let pihalf = pi_half_baseline(&model, t_pulse, n_pulses)?.final_q.value();
    Ok((opt, pihalf))
}

/// Frozen-agent evaluation across decay rates; all QFIs are normalized by
/// the ideal ceiling 4 j^2 T^2 of the training geometry.
pub fn sweep_decoherence(
    ck: &RunCheckpoint,
    gamma_grid: &[f64],
    seed: u64,
) -> Result<SweepResult, ExperimentError> {
    let actor = ck.actor()?;
    let base = ck.config.to_env_config()?;
    let norm = base.qfi_norm();
    let n = ck.config.n_eval_trajectories;

    let mut points = Vec::with_capacity(gamma_grid.len());
    for (p, &gamma) in gamma_grid.iter().enumerate() {
        let mut env_cfg = base.clone();
        env_cfg.gamma = gamma;
        let finals = eval_final_qs(&actor, &env_cfg, n, seed, stream_for_point(p))?;
        let normed: Vec<f64> = finals.iter().map(|q| q / norm).collect();
        let (q25, q75) = quartiles(&normed);
        let (opt, pihalf) =
            baselines_at(base.spin, base.omega, gamma, base.t_pulse, base.n_pulses)?;
        points.push(SweepPoint {
            grid_value: gamma,
            median_q: Some(median(&normed)),
            q25: Some(q25),
            q75: Some(q75),
            baseline_opt: Some(opt / norm),
            baseline_pihalf: Some(pihalf / norm),
            aux_metric: None,
        });
    }
    Ok(SweepResult { sweep: "gamma".into(), aux_name: String::new(), points })
}

/// Varies the episode length N while keeping the training pulse duration, so
/// the total time T = N * T_pulse grows with N. Raw QFI units.
pub fn sweep_pulses_fixed_duration(
    ck: &RunCheckpoint,
    n_grid: &[usize],
    seed: u64,
) -> Result<SweepResult, ExperimentError> {
    let actor = ck.actor()?;
    let base = ck.config.to_env_config()?;
    let n_eval = ck.config.n_eval_trajectories_small;

    let mut points = Vec::with_capacity(n_grid.len());
    for (p, &n_pulses) in n_grid.iter().enumerate() {
        let mut env_cfg = base.clone();
        env_cfg.n_pulses = n_pulses;
        let finals = eval_final_qs(&actor, &env_cfg, n_eval, seed, stream_for_point(p))?;
        let (q25, q75) = quartiles(&finals);
        let (opt, pihalf) =
            baselines_at(base.spin, base.omega, base.gamma, base.t_pulse, n_pulses)?;
        points.push(SweepPoint {
            grid_value: n_pulses as f64,
            median_q: Some(median(&finals)),
            q25: Some(q25),
            q75: Some(q75),
            baseline_opt: Some(opt),
            baseline_pihalf: Some(pihalf),
            aux_metric: None,
        });
    }
    Ok(SweepResult {
        sweep: "pulses-fixed-duration".into(),
        aux_name: String::new(),
        points,
    })
}

/// Projector onto the top eigenstate of Sy (the +1 eigenstate for j = 1).
pub fn sy_top_eigenstate(spin: SpinJ) -> DensityMatrix {
    let ops = crate::spin::build_spin_operators(spin);
    let eigen = hermitize(&ops.sy).symmetric_eigen();
    let mut top = 0;
    for k in 1..spin.dim() {
        if eigen.eigenvalues[k] > eigen.eigenvalues[top] {
            top = k;
        }
    }
    let v = eigen.eigenvectors.column(top).into_owned();
    DensityMatrix::from_ket(&v)
}

/// Varies N at fixed total duration T (so T_pulse = T / N). Also samples
/// first actions from the frozen policy, simulates the first pulse with the
/// phase forced to zero, and records the median overlap with the top Sy
/// eigenstate as the auxiliary metric. Raw QFI units.
pub fn sweep_pulses_fixed_total(
    ck: &RunCheckpoint,
    n_grid: &[usize],
    seed: u64,
) -> Result<SweepResult, ExperimentError> {
    let actor = ck.actor()?;
    let base = ck.config.to_env_config()?;
    let total_t = base.total_time();
    let n_eval = ck.config.n_eval_trajectories_small;
    let n_first = ck.config.n_eval_trajectories;
    let rho_y = sy_top_eigenstate(base.spin);
    let model = LindbladModel::new(base.spin, base.omega, base.gamma)?;

    let mut points = Vec::with_capacity(n_grid.len());
    for (p, &n_pulses) in n_grid.iter().enumerate() {
        let mut env_cfg = base.clone();
        env_cfg.n_pulses = n_pulses;
        env_cfg.t_pulse = total_t / n_pulses as f64;
        let finals = eval_final_qs(&actor, &env_cfg, n_eval, seed, stream_for_point(p))?;
        let (q25, q75) = quartiles(&finals);
        let (opt, pihalf) =
            baselines_at(base.spin, base.omega, base.gamma, env_cfg.t_pulse, n_pulses)?;

        // First-pulse overlap: sample actions on the reset observation,
        // force phi = 0, apply one pulse of this grid point's duration.
        let env_probe = SpinEnv::new(env_cfg.clone())?;
        let overlaps: Result<Vec<f64>, ExperimentError> = (0..n_first)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(stream_for_point(p) + (1 << 20) + i as u64);
                let mut env = env_probe.clone();
                let obs = env.reset();
                let obs_vec = nalgebra::DVector::from_column_slice(&obs);
                let (a, _) = actor.sample(&obs_vec, &mut rng)?;
                let mut pulse =
                    scale_action(&Action([a[0], a[1], a[2]]), env.config())?;
                pulse.phi = 0.0;
                let state =
                    SensitivityState::from_initial(env.config().initial_state.clone());
                let out = evolve_pulse(&state, &pulse, &model)?;
                Ok(frobenius_inner(out.rho.matrix(), rho_y.matrix())?)
            })
            .collect();
        let overlaps = overlaps?;

        points.push(SweepPoint {
            grid_value: n_pulses as f64,
            median_q: Some(median(&finals)),
            q25: Some(q25),
            q75: Some(q75),
            baseline_opt: Some(opt),
            baseline_pihalf: Some(pihalf),
            aux_metric: Some(median(&overlaps)),
        });
    }
    Ok(SweepResult {
        sweep: "pulses-fixed-total".into(),
        aux_name: "first_pulse_inner".into(),
        points,
    })
}

/// Families of evaluation initial states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialStateMode {
    RotationX,
    RotationY,
    Purity,
    Random,
}

impl InitialStateMode {
    pub fn tag(&self) -> &'static str {
        match self {
            Self::RotationX => "rotation-x",
            Self::RotationY => "rotation-y",
            Self::Purity => "purity",
            Self::Random => "random",
        }
    }
}

fn mix_with_identity(rho: &CMatrix, lambda: f64) -> CMatrix {
    let d = rho.nrows();
    rho * num_complex::Complex64::new(1.0 - lambda, 0.0)
        + identity(d) * num_complex::Complex64::new(lambda / d as f64, 0.0)
}

/// Frozen-agent evaluation across transformed initial states; the QFI is
/// normalized per state by the control-free upper bound Q' = max QFI
/// attainable from that state over the episode duration. Points with Q' = 0
/// (fully mixed) keep their auxiliary data but carry empty statistics.
pub fn sweep_initial_states(
    ck: &RunCheckpoint,
    mode: InitialStateMode,
    seed: u64,
) -> Result<SweepResult, ExperimentError> {
    let actor = ck.actor()?;
    let base = ck.config.to_env_config()?;
    let spin = base.spin;
    let ops = crate::spin::build_spin_operators(spin);
    let rho_in = DensityMatrix::spin_polarized(spin);
    let total_t = base.total_time();
    let n_eval = ck.config.n_eval_trajectories_small;
    let (opt_raw, pihalf_raw) =
        baselines_at(spin, base.omega, base.gamma, base.t_pulse, base.n_pulses)?;

    // (grid_value, state, aux) triples per mode.
    let mut cases: Vec<(f64, DensityMatrix, Option<f64>)> = Vec::new();
    match mode {
        InitialStateMode::RotationX | InitialStateMode::RotationY => {
            let axis = if mode == InitialStateMode::RotationX { &ops.sx } else { &ops.sy };
            for &theta in &default_theta_grid() {
                let u = unitary_exp(axis, theta);
                let rho = u.adjoint() * rho_in.matrix() * &u;
                let rho = DensityMatrix::new_unchecked(hermitize(&rho));
                let overlap = frobenius_inner(rho.matrix(), rho_in.matrix())?;
                cases.push((theta, rho, Some(overlap)));
            }
        }
        InitialStateMode::Purity => {
            for &lambda in &default_lambda_grid() {
                let rho = DensityMatrix::new_unchecked(mix_with_identity(
                    rho_in.matrix(),
                    lambda,
                ));
                let purity = rho.purity();
                cases.push((lambda, rho, Some(purity)));
            }
        }
        InitialStateMode::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(u64::MAX);
            use rand::Rng;
            for _ in 0..DEFAULT_RANDOM_STATES {
                let theta_x = rng.random_range(0.0..2.0 * std::f64::consts::PI);
                let theta_y = rng.random_range(0.0..2.0 * std::f64::consts::PI);
                let lambda = rng.random_range(0.0..1.0);
                let gen = &ops.sx * num_complex::Complex64::new(theta_x, 0.0)
                    + &ops.sy * num_complex::Complex64::new(theta_y, 0.0);
                let u = unitary_exp(&gen, 1.0);
                let rotated = u.adjoint() * rho_in.matrix() * &u;
                let rho =
                    DensityMatrix::new_unchecked(hermitize(&mix_with_identity(&rotated, lambda)));
                let overlap = frobenius_inner(rho.matrix(), rho_in.matrix())?;
                let purity = rho.purity();
                // The overlap doubles as the grid coordinate for random states.
                cases.push((overlap, rho, Some(purity)));
            }
            cases.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        }
    }

    let mut points = Vec::with_capacity(cases.len());
    for (p, (grid_value, rho, aux)) in cases.into_iter().enumerate() {
        let bound = max_qfi_bound(&rho, total_t).value();
        let mut env_cfg = base.clone();
        env_cfg.initial_state = rho;
        if bound <= 1e-12 {
            points.push(SweepPoint {
                grid_value,
                median_q: None,
                q25: None,
                q75: None,
                baseline_opt: None,
                baseline_pihalf: None,
                aux_metric: aux,
            });
            continue;
        }
        let finals = eval_final_qs(&actor, &env_cfg, n_eval, seed, stream_for_point(p))?;
        let normed: Vec<f64> = finals.iter().map(|q| q / bound).collect();
        let (q25, q75) = quartiles(&normed);
        points.push(SweepPoint {
            grid_value,
            median_q: Some(median(&normed)),
            q25: Some(q25),
            q75: Some(q75),
            baseline_opt: Some(opt_raw / bound),
            baseline_pihalf: Some(pihalf_raw / bound),
            aux_metric: aux,
        });
    }

    let aux_name = match mode {
        InitialStateMode::Purity | InitialStateMode::Random => "purity",
        _ => "inner_rho_in",
    };
    Ok(SweepResult {
        sweep: format!("initial-states-{}", mode.tag()),
        aux_name: aux_name.into(),
        points,
    })
}

/// Reference-strategy trajectories for the configured working point.
pub fn run_baselines(
    cfg: &ExperimentConfig,
) -> Result<(crate::baselines::BaselineResult, crate::baselines::BaselineResult), ExperimentError>
{
    let env_cfg = cfg.to_env_config()?;
    let model = LindbladModel::new(env_cfg.spin, env_cfg.omega, env_cfg.gamma)?;
    let opt = optimal_probe_baseline(&model, env_cfg.total_time(), env_cfg.n_pulses)?;
    let pihalf = pi_half_baseline(&model, env_cfg.t_pulse, env_cfg.n_pulses)?;
    Ok((opt, pihalf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sac::SacHyperparams;

    fn tiny_checkpoint(j: f64) -> RunCheckpoint {
        let mut cfg = ExperimentConfig::paper_standard(j).unwrap();
        cfg.hidden_dims = vec![8, 8];
        cfg.n_eval_trajectories = 4;
        cfg.n_eval_trajectories_small = 3;
        let hyper = SacHyperparams { hidden_dims: vec![8, 8], ..SacHyperparams::default() };
        let env_cfg = cfg.to_env_config().unwrap();
        let agent = SacAgent::new(env_cfg.obs_dim(), 3, hyper, cfg.seed).unwrap();
        RunCheckpoint::new(cfg, &agent)
    }

    #[test]
    fn default_grids_have_documented_shapes() {
        let g = default_gamma_grid(10.0);
        assert_eq!(g.len(), 9);
        assert!((g[0] - 0.01 * 2.0 * std::f64::consts::PI / 10.0).abs() < 1e-15);
        assert_eq!(default_pulse_grid(), vec![2, 4, 6, 8, 10, 12, 14, 16, 18, 20]);
        assert_eq!(default_theta_grid().len(), 17);
        assert_eq!(default_lambda_grid().len(), 11);
    }

    #[test]
    fn sy_reference_state_is_pure_projector() {
        for j in [0.5, 1.0] {
            let spin = SpinJ::new(j).unwrap();
            let rho_y = sy_top_eigenstate(spin);
            assert!((rho_y.purity() - 1.0).abs() < 1e-12);
            assert!(
                (frobenius_inner(rho_y.matrix(), rho_y.matrix()).unwrap() - 1.0).abs() < 1e-12
            );
            let ops = crate::spin::build_spin_operators(spin);
            assert!((rho_y.expectation(&ops.sy) - j).abs() < 1e-10);
        }
    }

    #[test]
    fn decoherence_sweep_is_deterministic_and_ordered() {
        let ck = tiny_checkpoint(0.5);
        let grid = [0.01, 0.05];
        let a = sweep_decoherence(&ck, &grid, 7).unwrap();
        let b = sweep_decoherence(&ck, &grid, 7).unwrap();
        assert_eq!(a.points.len(), 2);
        for (x, y) in a.points.iter().zip(&b.points) {
            assert_eq!(x.median_q, y.median_q);
            assert_eq!(x.q25, y.q25);
        }
        for p in &a.points {
            assert!(p.q25.unwrap() <= p.median_q.unwrap());
            assert!(p.median_q.unwrap() <= p.q75.unwrap());
        }
    }

    #[test]
    fn fixed_total_sweep_records_first_pulse_overlap() {
        let ck = tiny_checkpoint(0.5);
        let result = sweep_pulses_fixed_total(&ck, &[5, 10], 3).unwrap();
        assert_eq!(result.aux_name, "first_pulse_inner");
        for p in &result.points {
            let aux = p.aux_metric.unwrap();
            assert!((0.0..=1.0 + 1e-9).contains(&aux));
        }
    }

    #[test]
    fn initial_state_sweep_skips_fully_mixed_point() {
        let ck = tiny_checkpoint(1.0);
        let result = sweep_initial_states(&ck, InitialStateMode::Purity, 5).unwrap();
        assert_eq!(result.points.len(), 11);
        let last = result.points.last().unwrap();
        assert_eq!(last.grid_value, 1.0);
        assert!(last.median_q.is_none());
        assert!(last.aux_metric.is_some());
        // All other points carry statistics.
        assert!(result.points[..10].iter().all(|p| p.median_q.is_some()));
    }

    #[test]
    fn rotation_sweep_flips_overlap() {
        let ck = tiny_checkpoint(1.0);
        let result = sweep_initial_states(&ck, InitialStateMode::RotationY, 5).unwrap();
        // theta = 0: identity, overlap 1; theta = pi: full flip, overlap 0.
        let first = result.points.first().unwrap();
        let last = result.points.last().unwrap();
        assert!((first.aux_metric.unwrap() - 1.0).abs() < 1e-10);
        assert!(last.aux_metric.unwrap().abs() < 1e-10);
    }

    #[test]
    fn training_runs_and_checkpoints() {
        let mut cfg = ExperimentConfig::paper_standard(0.5).unwrap();
        cfg.hidden_dims = vec![6];
        cfg.episodes = 3;
        cfg.warmup_episodes = 2;
        cfg.batch_size = 8;
        cfg.buffer_capacity = 64;
        cfg.checkpoint_every = 2;
        let mut chunks = 0;
        let (agent, logs) = run_training(&cfg, |_, _| {
            chunks += 1;
            Ok(())
        })
        .unwrap();
        assert_eq!(logs.len(), 3);
        assert_eq!(agent.episodes_done, 3);
        assert_eq!(chunks, 2);
    }
}
