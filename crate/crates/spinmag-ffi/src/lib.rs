//! C ABI over the spin-magnetometer environment.
//!
//! Other languages drive the simulator through an opaque [`SpinmagEnv`]
//! handle: create it from a [`SpinmagEnvParams`] value, `reset`, then `step`
//! with raw actions in [-1, 1]^3, reading back observations, rewards, and
//! the done flag. Every fallible call returns a [`SpinmagStatus`] code and
//! leaves a human-readable message retrievable with [`spinmag_last_error`].
//!
//! All functions are panic-safe: a panic inside the library is caught at
//! the boundary and surfaced as `SPINMAG_STATUS_INTERNAL_PANIC`.

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use spinmag::baselines::{optimal_probe_baseline, pi_half_baseline};
use spinmag::dynamics::LindbladModel;
use spinmag::env::{Action, EnvConfig, EnvError, SpinEnv};
use spinmag::spin::SpinJ;

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

/// Result codes returned by every fallible `spinmag_*` call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpinmagStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Parameters or actions were out of their documented ranges.
    InvalidArgument = 2,
    /// `step` was called on a finished episode.
    EpisodeDone = 3,
    /// The master-equation integrator or the QFI evaluation failed.
    SimulationFailure = 4,
    /// A caller-provided buffer is too small.
    BufferTooSmall = 5,
    /// A panic was caught at the FFI boundary.
    InternalPanic = 6,
}

/// Plain-old-data environment parameters.
///
/// `two_j` is twice the spin quantum number (1 for j = 1/2, 2 for j = 1, ...).
/// Non-finite or non-positive `omega`/`t_pulse`, negative `gamma`, or zero
/// `n_pulses` select the reference working point for that field.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct SpinmagEnvParams {
    pub two_j: u32,
    pub omega: f64,
    pub gamma: f64,
    pub n_pulses: u32,
    pub t_pulse: f64,
    /// Nonzero: append normalized episode time to the observation.
    pub include_time_obs: i32,
    /// Nonzero: divide rewards by the ideal ceiling 4 j^2 T^2.
    pub normalize_reward: i32,
}

/// Opaque environment handle; create with [`spinmag_env_new`], destroy with
/// [`spinmag_env_free`].
pub struct SpinmagEnv {
    inner: SpinEnv,
}

fn env_config_from_params(params: &SpinmagEnvParams) -> Result<EnvConfig, String> {
    let spin = SpinJ::from_two_j(params.two_j).map_err(|e| e.to_string())?;
    let mut cfg = EnvConfig::paper_standard(spin);
    if params.omega.is_finite() && params.omega > 0.0 {
        cfg.omega = params.omega;
        cfg.delta_bounds = (0.99 * params.omega, 1.01 * params.omega);
    }
    if params.gamma.is_finite() && params.gamma >= 0.0 {
        cfg.gamma = params.gamma;
    }
    if params.n_pulses > 0 {
        cfg.n_pulses = params.n_pulses as usize;
    }
    if params.t_pulse.is_finite() && params.t_pulse > 0.0 {
        cfg.t_pulse = params.t_pulse;
    }
    cfg.include_time_obs = params.include_time_obs != 0;
    cfg.normalize_reward = params.normalize_reward != 0;
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn status_for_env_error(err: &EnvError) -> SpinmagStatus {
    match err {
        EnvError::EpisodeDone => SpinmagStatus::EpisodeDone,
        EnvError::ActionOutOfRange { .. }
        | EnvError::ActionDimension(_)
        | EnvError::UnorderedBounds { .. }
        | EnvError::NoPulses
        | EnvError::InitialStateDimension { .. } => SpinmagStatus::InvalidArgument,
        _ => SpinmagStatus::SimulationFailure,
    }
}

fn guarded(f: impl FnOnce() -> SpinmagStatus) -> SpinmagStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            SpinmagStatus::InternalPanic
        }
    }
}

/// Fills `out` with the reference parameters for the given spin.
///
/// # Safety
/// `out` must be a valid pointer to a `SpinmagEnvParams`.
#[no_mangle]
pub unsafe extern "C" fn spinmag_env_params_default(
    two_j: u32,
    out: *mut SpinmagEnvParams,
) -> SpinmagStatus {
    guarded(|| {
        if out.is_null() {
            set_error("out is null");
            return SpinmagStatus::NullPointer;
        }
        let spin = match SpinJ::from_two_j(two_j) {
            Ok(s) => s,
            Err(e) => {
                set_error(e.to_string());
                return SpinmagStatus::InvalidArgument;
            }
        };
        let cfg = EnvConfig::paper_standard(spin);
        unsafe {
            *out = SpinmagEnvParams {
                two_j,
                omega: cfg.omega,
                gamma: cfg.gamma,
                n_pulses: cfg.n_pulses as u32,
                t_pulse: cfg.t_pulse,
                include_time_obs: i32::from(cfg.include_time_obs),
                normalize_reward: i32::from(cfg.normalize_reward),
            };
        }
        SpinmagStatus::Ok
    })
}

/// Creates an environment; on success `*out` owns the handle.
///
/// # Safety
/// `params` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn spinmag_env_new(
    params: *const SpinmagEnvParams,
    out: *mut *mut SpinmagEnv,
) -> SpinmagStatus {
    guarded(|| {
        if params.is_null() || out.is_null() {
            set_error("params or out is null");
            return SpinmagStatus::NullPointer;
        }
        let cfg = match env_config_from_params(unsafe { &*params }) {
            Ok(c) => c,
            Err(msg) => {
                set_error(msg);
                return SpinmagStatus::InvalidArgument;
            }
        };
        match SpinEnv::new(cfg) {
            Ok(env) => {
                unsafe { *out = Box::into_raw(Box::new(SpinmagEnv { inner: env })) };
                SpinmagStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                status_for_env_error(&e)
            }
        }
    })
}

/// Destroys a handle created by [`spinmag_env_new`]. Null is a no-op.
///
/// # Safety
/// `env` must be null or a pointer returned by [`spinmag_env_new`] that has
/// not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn spinmag_env_free(env: *mut SpinmagEnv) {
    if !env.is_null() {
        drop(unsafe { Box::from_raw(env) });
    }
}

/// Observation length for this environment (2 d^2, plus 1 with the time
/// entry). Returns 0 for a null handle.
///
/// # Safety
/// `env` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn spinmag_env_observation_len(env: *const SpinmagEnv) -> usize {
    if env.is_null() {
        return 0;
    }
    unsafe { &*env }.inner.config().obs_dim()
}

fn write_obs(obs: &[f64], obs_out: *mut f64, obs_cap: usize) -> SpinmagStatus {
    if obs_out.is_null() {
        set_error("obs_out is null");
        return SpinmagStatus::NullPointer;
    }
    if obs_cap < obs.len() {
        set_error(format!("observation buffer holds {obs_cap}, need {}", obs.len()));
        return SpinmagStatus::BufferTooSmall;
    }
    unsafe { std::ptr::copy_nonoverlapping(obs.as_ptr(), obs_out, obs.len()) };
    SpinmagStatus::Ok
}

/// Starts a fresh episode and writes the initial observation.
///
/// # Safety
/// `env` must be a live handle; `obs_out` must point to at least `obs_cap`
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn spinmag_env_reset(
    env: *mut SpinmagEnv,
    obs_out: *mut f64,
    obs_cap: usize,
) -> SpinmagStatus {
    guarded(|| {
        if env.is_null() {
            set_error("env is null");
            return SpinmagStatus::NullPointer;
        }
        let obs = unsafe { &mut *env }.inner.reset();
        write_obs(&obs, obs_out, obs_cap)
    })
}

/// Applies one pulse from a raw action in [-1, 1]^3, writing the next
/// observation, the reward, and the done flag.
///
/// # Safety
/// `env` must be a live handle; `action` must point to 3 doubles; `obs_out`
/// must point to at least `obs_cap` doubles; `reward_out` and `done_out`
/// must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn spinmag_env_step(
    env: *mut SpinmagEnv,
    action: *const f64,
    obs_out: *mut f64,
    obs_cap: usize,
    reward_out: *mut f64,
    done_out: *mut i32,
) -> SpinmagStatus {
    guarded(|| {
        if env.is_null() || action.is_null() || reward_out.is_null() || done_out.is_null() {
            set_error("null argument");
            return SpinmagStatus::NullPointer;
        }
        let raw = unsafe { std::slice::from_raw_parts(action, 3) };
        let handle = unsafe { &mut *env };
        match handle.inner.step(Action([raw[0], raw[1], raw[2]])) {
            Ok((obs, reward, done)) => {
                let status = write_obs(&obs, obs_out, obs_cap);
                if status != SpinmagStatus::Ok {
                    return status;
                }
                unsafe {
                    *reward_out = reward;
                    *done_out = i32::from(done);
                }
                SpinmagStatus::Ok
            }
            Err(e) => {
                set_error(e.to_string());
                status_for_env_error(&e)
            }
        }
    })
}

/// Quantum Fisher information of the current state.
///
/// # Safety
/// `env` must be a live handle and `q_out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn spinmag_env_qfi(env: *const SpinmagEnv, q_out: *mut f64) -> SpinmagStatus {
    guarded(|| {
        if env.is_null() || q_out.is_null() {
            set_error("null argument");
            return SpinmagStatus::NullPointer;
        }
        unsafe { *q_out = (*env).inner.current_qfi() };
        SpinmagStatus::Ok
    })
}

fn baseline_qfi(
    params: *const SpinmagEnvParams,
    q_out: *mut f64,
    pi_half: bool,
) -> SpinmagStatus {
    if params.is_null() || q_out.is_null() {
        set_error("null argument");
        return SpinmagStatus::NullPointer;
    }
    let cfg = match env_config_from_params(unsafe { &*params }) {
        Ok(c) => c,
        Err(msg) => {
            set_error(msg);
            return SpinmagStatus::InvalidArgument;
        }
    };
    let model = match LindbladModel::new(cfg.spin, cfg.omega, cfg.gamma) {
        Ok(m) => m,
        Err(e) => {
            set_error(e.to_string());
            return SpinmagStatus::InvalidArgument;
        }
    };
    let result = if pi_half {
        pi_half_baseline(&model, cfg.t_pulse, cfg.n_pulses)
    } else {
        optimal_probe_baseline(&model, cfg.total_time(), cfg.n_pulses)
    };
    match result {
        Ok(r) => {
            unsafe { *q_out = r.final_q.value() };
            SpinmagStatus::Ok
        }
        Err(e) => {
            set_error(e.to_string());
            SpinmagStatus::SimulationFailure
        }
    }
}

/// Final QFI of the freely evolved optimal probe state for these parameters.
///
/// # Safety
/// `params` and `q_out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn spinmag_optimal_probe_qfi(
    params: *const SpinmagEnvParams,
    q_out: *mut f64,
) -> SpinmagStatus {
    guarded(|| baseline_qfi(params, q_out, false))
}

/// Final QFI of the single resonant pi/2-pulse strategy for these parameters.
///
/// # Safety
/// `params` and `q_out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn spinmag_pi_half_qfi(
    params: *const SpinmagEnvParams,
    q_out: *mut f64,
) -> SpinmagStatus {
    guarded(|| baseline_qfi(params, q_out, true))
}

/// Copies the last error message (UTF-8, NUL-terminated) for the calling
/// thread into `buf` and returns the full message length in bytes; the
/// message is truncated when `cap` is too small. A zero return means no
/// error has been recorded.
///
/// # Safety
/// `buf` must be null or point to at least `cap` bytes.
#[no_mangle]
pub unsafe extern "C" fn spinmag_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if buf.is_null() || cap == 0 {
            return msg.len();
        }
        let n = msg.len().min(cap - 1);
        unsafe {
            std::ptr::copy_nonoverlapping(msg.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}
