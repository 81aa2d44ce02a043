//! Simulation and reinforcement-learning toolkit for a pulsed spin-j
//! magnetometer.
//!
//! The crate is organized in layers:
//!
//! - [`spin`]: angular-momentum operators and density matrices,
//! - [`dynamics`]: GKSL master-equation integration over control pulses with
//!   a co-evolved parameter-sensitivity matrix,
//! - [`metrology`]: symmetric logarithmic derivative, quantum Fisher
//!   information, and control-free upper bounds,
//! - [`baselines`]: reference pulse strategies (optimal probe state and the
//!   single resonant pi/2-pulse),
//! - [`neural`]: a small fully-connected network stack with explicit
//!   backpropagation, Adam, squashed-Gaussian sampling, and a replay buffer,
//! - [`sac`]: the soft actor-critic trainer,
//! - [`env`]: the episodic pulse-control environment with QFI-difference
//!   rewards,
//! - [`experiments`]: training/evaluation harness, sweeps, statistics, and
//!   file formats, exposed through the `spinmag` CLI.

pub mod baselines;
pub mod checkpoint;
pub mod dynamics;
pub mod env;
pub mod experiments;
pub mod metrology;
pub mod neural;
pub mod sac;
pub mod spin;
