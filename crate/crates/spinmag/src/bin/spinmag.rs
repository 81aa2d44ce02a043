//! Command-line harness: train agents, compute reference strategies, run
//! frozen-agent sweeps, and re-emit reports.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use spinmag::experiments::report::{
    emit_report, load_results_json, manifest_path, results_path, write_baselines_csv,
    write_training_log, Manifest,
};
use spinmag::experiments::sweeps::{
    default_gamma_grid, default_pulse_grid, run_baselines, run_training, sweep_decoherence,
    sweep_initial_states, sweep_pulses_fixed_duration, sweep_pulses_fixed_total,
    InitialStateMode, RunCheckpoint,
};
use spinmag::experiments::ExperimentConfig;

#[derive(Parser)]
#[command(name = "spinmag", version, about = "Pulsed spin-magnetometer control: simulation, training, and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepKind {
    Gamma,
    PulsesFixedDuration,
    PulsesFixedTotal,
    InitialStates,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    RotationX,
    RotationY,
    Purity,
    Random,
}

impl From<Mode> for InitialStateMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::RotationX => InitialStateMode::RotationX,
            Mode::RotationY => InitialStateMode::RotationY,
            Mode::Purity => InitialStateMode::Purity,
            Mode::Random => InitialStateMode::Random,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train a fresh agent and write a checkpoint plus the training log.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute the reference strategies for a configuration.
    Baseline {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a frozen checkpoint across a parameter grid.
    Sweep {
        #[arg(long, value_enum)]
        sweep: SweepKind,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-emit CSVs and the manifest from a directory's results.json.
    Report {
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(path: &Option<PathBuf>, seed: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg = match path {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Train { config, seed, out } => {
            let cfg = load_config(&config, seed)?;
            std::fs::create_dir_all(&out)?;
            let start = std::time::Instant::now();

            let checkpoint_path = out.join("checkpoint.json");
            let log_path = out.join("training_log.csv");
            let cfg_for_chunks = cfg.clone();
            let out_for_chunks = out.clone();
            let (agent, logs) = run_training(&cfg, move |agent, logs_so_far| {
                // Flush progress after every chunk so aborted runs keep
                // partial logs and a loadable snapshot.
                let ck = RunCheckpoint::new(cfg_for_chunks.clone(), agent);
                ck.save(&out_for_chunks.join(format!(
                    "checkpoint-ep{}.json",
                    agent.episodes_done
                )))?;
                write_training_log(logs_so_far, &out_for_chunks.join("training_log.csv"))?;
                Ok(())
            })?;

            RunCheckpoint::new(cfg.clone(), &agent).save(&checkpoint_path)?;
            write_training_log(&logs, &log_path)?;
            let mut manifest = Manifest::new("train", cfg.seed, cfg);
            manifest.wall_time_s = start.elapsed().as_secs_f64();
            manifest.rows = logs.len();
            manifest.save(&manifest_path(&out))?;
            println!(
                "trained {} episodes -> {}",
                logs.len(),
                checkpoint_path.display()
            );
        }
        Command::Baseline { config, seed, out } => {
            let cfg = load_config(&config, seed)?;
            std::fs::create_dir_all(&out)?;
            let start = std::time::Instant::now();
            let (opt, pihalf) = run_baselines(&cfg)?;
            let path = out.join("baselines.csv");
            write_baselines_csv(&opt, &pihalf, cfg.t_pulse, &path)?;
            let mut manifest = Manifest::new("baseline", cfg.seed, cfg);
            manifest.wall_time_s = start.elapsed().as_secs_f64();
            manifest.rows = opt.trajectory.len();
            manifest.save(&manifest_path(&out))?;
            println!(
                "baselines: optimal-probe Q = {}, pi/2-pulse Q = {} -> {}",
                opt.final_q.value(),
                pihalf.final_q.value(),
                path.display()
            );
        }
        Command::Sweep { sweep, mode, checkpoint, config, seed, out } => {
            let ck = RunCheckpoint::load(&checkpoint)
                .with_context(|| format!("loading {}", checkpoint.display()))?;
            let mut cfg = match &config {
                Some(p) => ExperimentConfig::load(p)?,
                None => ck.config.clone(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            // Evaluation counts and seed may be overridden; the physics and
            // the agent always come from the checkpoint.
            let mut ck = ck;
            ck.config.n_eval_trajectories = cfg.n_eval_trajectories;
            ck.config.n_eval_trajectories_small = cfg.n_eval_trajectories_small;
            let eval_seed = cfg.seed;

            std::fs::create_dir_all(&out)?;
            let start = std::time::Instant::now();
            let total_t = ck.config.n_pulses as f64 * ck.config.t_pulse;
            let result = match sweep {
                SweepKind::Gamma => {
                    sweep_decoherence(&ck, &default_gamma_grid(total_t), eval_seed)?
                }
                SweepKind::PulsesFixedDuration => {
                    sweep_pulses_fixed_duration(&ck, &default_pulse_grid(), eval_seed)?
                }
                SweepKind::PulsesFixedTotal => {
                    sweep_pulses_fixed_total(&ck, &default_pulse_grid(), eval_seed)?
                }
                SweepKind::InitialStates => {
                    let Some(mode) = mode else {
                        bail!("--mode is required for the initial-states sweep");
                    };
                    sweep_initial_states(&ck, mode.into(), eval_seed)?
                }
            };
            let mut manifest = Manifest::new("sweep", eval_seed, ck.config.clone());
            manifest.wall_time_s = start.elapsed().as_secs_f64();
            let written = emit_report(std::slice::from_ref(&result), &manifest, &out)?;
            for path in written {
                println!("wrote {}", path.display());
            }
        }
        Command::Report { out } => {
            let results = load_results_json(&results_path(&out))?;
            let manifest = Manifest::load(&manifest_path(&out))?;
            let written = emit_report(&results, &manifest, &out)?;
            for path in written {
                println!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}
