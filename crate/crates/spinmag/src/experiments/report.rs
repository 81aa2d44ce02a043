//! File outputs: sweep CSVs, training logs, the run manifest, and the raw
//! results document that `report` re-emits from.
//!
//! Floats are written with the shortest representation that parses back to
//! the same bits, so re-running a deterministic sweep reproduces its CSV
//! byte for byte.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::BaselineResult;
use crate::sac::EpisodeLog;

use super::config::ExperimentConfig;
use super::sweeps::SweepResult;
use super::ExperimentError;

pub const SWEEP_CSV_HEADER: &str =
    "grid_value,median_q,q25,q75,baseline_opt,baseline_pihalf,aux_metric,aux_name";
pub const TRAINING_LOG_HEADER: &str =
    "episode,cumulative_reward,wall_time,value_loss,critic1_loss,critic2_loss,actor_loss";

/// Machine-readable record of what produced the files next to it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub crate_version: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub wall_time_s: f64,
    pub rows: usize,
}

impl Manifest {
    pub fn new(command: &str, seed: u64, config: ExperimentConfig) -> Self {
        Self {
            command: command.to_string(),
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config,
            wall_time_s: 0.0,
            rows: 0,
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), ExperimentError> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_sweep_csv(result: &SweepResult, path: &Path) -> Result<(), ExperimentError> {
    let mut out = String::with_capacity(result.points.len() * 64 + 64);
    out.push_str(SWEEP_CSV_HEADER);
    out.push('\n');
    for p in &result.points {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            p.grid_value,
            fmt_opt(p.median_q),
            fmt_opt(p.q25),
            fmt_opt(p.q75),
            fmt_opt(p.baseline_opt),
            fmt_opt(p.baseline_pihalf),
            fmt_opt(p.aux_metric),
            if p.aux_metric.is_some() { &result.aux_name } else { "" },
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn write_training_log(logs: &[EpisodeLog], path: &Path) -> Result<(), ExperimentError> {
    let mut out = String::with_capacity(logs.len() * 64 + 64);
    out.push_str(TRAINING_LOG_HEADER);
    out.push('\n');
    for l in logs {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            l.episode,
            l.cumulative_reward,
            l.wall_time,
            l.value_loss,
            l.critic1_loss,
            l.critic2_loss,
            l.actor_loss,
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Trajectories of both reference strategies, one row per segment boundary.
pub fn write_baselines_csv(
    opt: &BaselineResult,
    pihalf: &BaselineResult,
    t_pulse: f64,
    path: &Path,
) -> Result<(), ExperimentError> {
    let mut out = String::from("segment,t,q_optimal_probe,q_pi_half\n");
    for (k, (qo, qp)) in opt.trajectory.iter().zip(&pihalf.trajectory).enumerate() {
        out.push_str(&format!(
            "{},{},{},{}\n",
            k,
            k as f64 * t_pulse,
            qo.value(),
            qp.value()
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn results_path(out_dir: &Path) -> PathBuf {
    out_dir.join("results.json")
}

pub fn manifest_path(out_dir: &Path) -> PathBuf {
    out_dir.join("manifest.json")
}

pub fn write_results_json(
    results: &[SweepResult],
    path: &Path,
) -> Result<(), ExperimentError> {
    std::fs::write(path, serde_json::to_string_pretty(results)?)?;
    Ok(())
}

pub fn load_results_json(path: &Path) -> Result<Vec<SweepResult>, ExperimentError> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

/// Writes one CSV per sweep plus `results.json` and the manifest into
/// `out_dir`. Re-running on the same results overwrites the same bytes.
pub fn emit_report(
    results: &[SweepResult],
    manifest: &Manifest,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, ExperimentError> {
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for result in results {
        let path = out_dir.join(format!("sweep_{}.csv", result.sweep));
        write_sweep_csv(result, &path)?;
        written.push(path);
    }
    let rpath = results_path(out_dir);
    write_results_json(results, &rpath)?;
    written.push(rpath);
    let mpath = manifest_path(out_dir);
    let mut manifest = manifest.clone();
    manifest.rows = results.iter().map(|r| r.points.len()).sum();
    manifest.save(&mpath)?;
    written.push(mpath);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::sweeps::SweepPoint;

    fn sample_result() -> SweepResult {
        SweepResult {
            sweep: "gamma".into(),
            aux_name: String::new(),
            points: vec![
                SweepPoint {
                    grid_value: 0.01,
                    median_q: Some(0.5),
                    q25: Some(0.4),
                    q75: Some(0.6),
                    baseline_opt: Some(0.9),
                    baseline_pihalf: Some(0.7),
                    aux_metric: None,
                },
                SweepPoint {
                    grid_value: 0.02,
                    median_q: None,
                    q25: None,
                    q75: None,
                    baseline_opt: None,
                    baseline_pihalf: None,
                    aux_metric: Some(0.25),
                },
            ],
        }
    }

    #[test]
    fn csv_row_count_matches_grid() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.csv");
        write_sweep_csv(&sample_result(), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], SWEEP_CSV_HEADER);
        assert!(lines[2].starts_with("0.02,,,,,,0.25,"));
    }

    #[test]
    fn emit_is_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        let results = vec![sample_result()];
        let manifest = Manifest::new("sweep", 3, ExperimentConfig::default());
        emit_report(&results, &manifest, dir.path()).unwrap();
        let csv1 = std::fs::read(dir.path().join("sweep_gamma.csv")).unwrap();
        let res1 = std::fs::read(results_path(dir.path())).unwrap();
        emit_report(&results, &manifest, dir.path()).unwrap();
        let csv2 = std::fs::read(dir.path().join("sweep_gamma.csv")).unwrap();
        let res2 = std::fs::read(results_path(dir.path())).unwrap();
        assert_eq!(csv1, csv2);
        assert_eq!(res1, res2);
    }

    #[test]
    fn manifest_round_trips_configuration() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig::paper_standard(1.0).unwrap();
        let manifest = Manifest::new("train", cfg.seed, cfg.clone());
        let path = manifest_path(dir.path());
        manifest.save(&path).unwrap();
        let back = Manifest::load(&path).unwrap();
        assert_eq!(back.config, cfg);
        assert_eq!(back.command, "train");
    }

    #[test]
    fn results_json_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let results = vec![sample_result()];
        let path = results_path(dir.path());
        write_results_json(&results, &path).unwrap();
        let back = load_results_json(&path).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].points.len(), 2);
        assert_eq!(back[0].points[0].median_q, Some(0.5));
    }
}
