//! C ABI over the provisioning environment.
//!
//! Every function returns an [`RmbsaStatus`]; on failure the message is
//! available from [`rmbsa_last_error`] on the same thread. Handles are
//! created by `rmbsa_env_new` and must be released with `rmbsa_env_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use rmbsa::config::ExperimentConfig;
use rmbsa::env::{blocking_probability, Environment};
use rmbsa::experiment::build_scenario;
use rmbsa::heuristics::{HeuristicKind, HeuristicPolicy, Policy};
use rmbsa::Error;

/// Status code returned by every entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RmbsaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    EpisodeDone = 4,
    ActionOutOfRange = 5,
    BufferTooSmall = 6,
    Internal = 7,
}

/// Values accepted by `rmbsa_env_heuristic_action`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RmbsaHeuristic {
    FirstBandFirstFit = 0,
    DistanceAdaptiveFirstFit = 1,
    BitRateAdaptiveFirstFit = 2,
}

/// Opaque environment handle.
pub struct RmbsaEnv {
    env: Environment,
    band_order: Vec<usize>,
    observation: Vec<f64>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

fn status_of(e: &Error) -> RmbsaStatus {
    match e {
        Error::EpisodeDone => RmbsaStatus::EpisodeDone,
        Error::ActionOutOfRange { .. } => RmbsaStatus::ActionOutOfRange,
        Error::InvalidArgument(_) => RmbsaStatus::InvalidArgument,
        e if e.is_config_error() => RmbsaStatus::Config,
        _ => RmbsaStatus::Internal,
    }
}

struct Fail(RmbsaStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> RmbsaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            RmbsaStatus::Ok
        }
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(_) => {
            set_error("internal panic");
            RmbsaStatus::Internal
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(RmbsaStatus::NullPointer, format!("{what} is null"))
}

unsafe fn handle<'a>(env: *mut RmbsaEnv) -> Result<&'a mut RmbsaEnv, Fail> {
    env.as_mut().ok_or_else(|| null("environment handle"))
}

unsafe fn copy_out<T: Copy>(src: &[T], dst: *mut T, len: usize) -> Result<(), Fail> {
    if dst.is_null() {
        return Err(null("output buffer"));
    }
    if len < src.len() {
        return Err(Fail(
            RmbsaStatus::BufferTooSmall,
            format!("buffer holds {len} entries, need {}", src.len()),
        ));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), dst, src.len());
    Ok(())
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn rmbsa_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rmbsa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates an environment from a TOML experiment config (NULL for the
/// built-in defaults) at offered load `load_erlang`; a non-positive load
/// selects the first load of the config. Relative paths in the config are
/// taken relative to the working directory.
///
/// # Safety
/// `config_toml` must be NULL or a valid NUL-terminated string; `out` must
/// be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rmbsa_env_new(config_toml: *const c_char, load_erlang: f64, out: *mut *mut RmbsaEnv) -> RmbsaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("output handle"));
        }
        *out = ptr::null_mut();
        let cfg = if config_toml.is_null() {
            ExperimentConfig::default()
        } else {
            let text = CStr::from_ptr(config_toml)
                .to_str()
                .map_err(|_| Fail(RmbsaStatus::InvalidArgument, "config is not UTF-8".into()))?;
            ExperimentConfig::from_toml(text)?
        };
        cfg.validate()?;
        let load = if load_erlang > 0.0 { load_erlang } else { cfg.traffic.loads[0] };
        let scenario = build_scenario(&cfg)?;
        let band_order = cfg.band_order(&scenario.plan)?;
        let env = Environment::new(scenario, cfg.env_config(load))?;
        *out = Box::into_raw(Box::new(RmbsaEnv {
            env,
            band_order,
            observation: Vec::new(),
        }));
        Ok(())
    })
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `env` must be NULL or a handle from `rmbsa_env_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rmbsa_env_free(env: *mut RmbsaEnv) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

/// Observation length K x (|E| + 5B); 0 for a NULL handle.
///
/// # Safety
/// `env` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rmbsa_env_observation_len(env: *const RmbsaEnv) -> usize {
    env.as_ref().map_or(0, |h| h.env.observation_len())
}

/// Number of actions K x B + 1 (the last one rejects); 0 for a NULL handle.
///
/// # Safety
/// `env` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rmbsa_env_num_actions(env: *const RmbsaEnv) -> usize {
    env.as_ref().map_or(0, |h| h.env.num_actions())
}

/// Starts an episode and writes the first observation into `obs`.
///
/// # Safety
/// `env` must be a live handle and `obs` must hold `obs_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn rmbsa_env_reset(env: *mut RmbsaEnv, seed: u64, obs: *mut f64, obs_len: usize) -> RmbsaStatus {
    guard(|| {
        let h = handle(env)?;
        let need = h.env.observation_len();
        if obs.is_null() {
            return Err(null("output buffer"));
        }
        if obs_len < need {
            return Err(Fail(
                RmbsaStatus::BufferTooSmall,
                format!("buffer holds {obs_len} entries, need {need}"),
            ));
        }
        h.observation = h.env.reset(seed)?;
        copy_out(&h.observation, obs, obs_len)
    })
}

/// Applies `action`; writes the next observation, the reward (+1 or -1) and
/// whether the episode ended. `reward` and `done` may be NULL.
///
/// # Safety
/// `env` must be a live handle, `obs` must hold `obs_len` doubles, and
/// `reward` / `done` must be NULL or valid.
#[no_mangle]
pub unsafe extern "C" fn rmbsa_env_step(
    env: *mut RmbsaEnv,
    action: usize,
    obs: *mut f64,
    obs_len: usize,
    reward: *mut f64,
    done: *mut bool,
) -> RmbsaStatus {
    guard(|| {
        let h = handle(env)?;
        if obs.is_null() {
            return Err(null("output buffer"));
        }
        // checked before stepping so a short buffer leaves the episode untouched
        let need = h.env.observation_len();
        if obs_len < need {
            return Err(Fail(
                RmbsaStatus::BufferTooSmall,
                format!("buffer holds {obs_len} entries, need {need}"),
            ));
        }
        let out = h.env.step(action)?;
        h.observation = out.observation;
        copy_out(&h.observation, obs, obs_len)?;
        if let Some(r) = reward.as_mut() {
            *r = out.reward;
        }
        if let Some(d) = done.as_mut() {
            *d = out.done;
        }
        Ok(())
    })
}

/// Writes the action mask (1 = valid) for the pending request.
///
/// # Safety
/// `env` must be a live handle and `mask` must hold `mask_len` bytes.
#[no_mangle]
pub unsafe extern "C" fn rmbsa_env_action_mask(env: *mut RmbsaEnv, mask: *mut u8, mask_len: usize) -> RmbsaStatus {
    guard(|| {
        let h = handle(env)?;
        if h.env.is_done() {
            return Err(Error::EpisodeDone.into());
        }
        let m: Vec<u8> = h.env.action_mask().0.iter().map(|&v| u8::from(v)).collect();
        copy_out(&m, mask, mask_len)
    })
}

/// Action a baseline heuristic would take for the pending request; `kind`
/// is one of the `RmbsaHeuristic` values.
///
/// # Safety
/// `env` must be a live handle and `action` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rmbsa_env_heuristic_action(env: *mut RmbsaEnv, kind: u32, action: *mut usize) -> RmbsaStatus {
    guard(|| {
        let h = handle(env)?;
        if action.is_null() {
            return Err(null("action"));
        }
        let kind = match kind {
            k if k == RmbsaHeuristic::FirstBandFirstFit as u32 => HeuristicKind::FirstBand,
            k if k == RmbsaHeuristic::DistanceAdaptiveFirstFit as u32 => HeuristicKind::DistanceAdaptive,
            k if k == RmbsaHeuristic::BitRateAdaptiveFirstFit as u32 => HeuristicKind::BitRateAdaptive,
            other => return Err(Fail(RmbsaStatus::InvalidArgument, format!("unknown heuristic {other}"))),
        };
        let scenario = h.env.scenario();
        let mut policy = HeuristicPolicy::new(kind, h.band_order.clone(), &scenario.qdb, &scenario.plan);
        let ctx = h.env.context().ok_or(Error::EpisodeDone)?;
        let mask = ctx.mask();
        *action = policy.select(&ctx, &h.observation, &mask);
        Ok(())
    })
}

/// Blocking probability of the steps taken so far in the current episode.
///
/// # Safety
/// `env` must be a live handle and `bp` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn rmbsa_env_blocking_probability(env: *mut RmbsaEnv, bp: *mut f64) -> RmbsaStatus {
    guard(|| {
        let h = handle(env)?;
        if bp.is_null() {
            return Err(null("output"));
        }
        *bp = blocking_probability(h.env.log()).map_err(|e| Fail(RmbsaStatus::InvalidArgument, e.to_string()))?;
        Ok(())
    })
}
