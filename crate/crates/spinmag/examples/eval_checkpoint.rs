//! Loads a checkpoint, reports the median final QFI of 100 stochastic
//! rollouts at the training conditions, and prints the deterministic pulse
//! table of the learned policy.
//!
//! Usage: cargo run --example eval_checkpoint -- <checkpoint.json>

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use spinmag::env::{rollout, scale_action, SpinEnv};
use spinmag::experiments::stats::median;
use spinmag::experiments::sweeps::{eval_final_qs, RunCheckpoint};

fn main() -> anyhow::Result<()> {
    let path = std::env::args().nth(1).expect("usage: eval_checkpoint <checkpoint.json>");
    let ck = RunCheckpoint::load(std::path::Path::new(&path))?;
    let actor = ck.actor()?;
    let env_cfg = ck.config.to_env_config()?;
    let norm = env_cfg.qfi_norm();

    let finals = eval_final_qs(&actor, &env_cfg, 100, ck.config.seed, 0)?;
    println!("median final QFI over 100 rollouts: {:.4} ({:.4} of the ideal ceiling)",
        median(&finals), median(&finals) / norm);

    let mut env = SpinEnv::new(env_cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let roll = rollout(&mut env, &actor, true, &mut rng)?;
    println!("deterministic rollout: final QFI {:.4}", roll.final_q);
    println!("{:>5} {:>10} {:>8} {:>12} {:>10}", "pulse", "amplitude", "phase", "detuning", "area/pi");
    for (k, action) in roll.actions.iter().enumerate() {
        let p = scale_action(action, env.config())?;
        println!(
            "{:>5} {:>10.3} {:>8.3} {:>12.3} {:>10.3}",
            k,
            p.omega_rabi,
            p.phi,
            env.config().omega - p.delta,
            p.omega_rabi * p.t_pulse / std::f64::consts::PI
        );
    }
    Ok(())
}
