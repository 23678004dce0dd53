//! C ABI for the range-Doppler toolkit: opaque handles, integer status
//! codes, and a thread-local error message.
//!
//! Every function returns `RdnetStatus`; output handles are written through
//! out-pointers and must be released with the matching `_free` call. All
//! functions are panic-safe (panics map to `RDNET_STATUS_INTERNAL`).

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use rdnet::map::RdMap;
use rdnet::model::{load_model, predict, RdNet};
use rdnet::periodogram::{periodogram_2d, PeriodogramSpec, Window};
use rdnet::sim::{
    add_awgn, synthesize_channel, ChannelEstimate, RadarConfig, Target, TargetScene,
};

/// Status codes returned by every FFI entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RdnetStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    Io = 3,
    Format = 4,
    Internal = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(err: &rdnet::Error) -> RdnetStatus {
    match err {
        rdnet::Error::Io(_) => RdnetStatus::Io,
        rdnet::Error::Format(_) => RdnetStatus::Format,
        _ => RdnetStatus::InvalidArgument,
    }
}

fn fail(err: rdnet::Error) -> RdnetStatus {
    let status = status_of(&err);
    set_error(err.to_string());
    status
}

fn guarded<F: FnOnce() -> RdnetStatus>(f: F) -> RdnetStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            RdnetStatus::Internal
        }
    }
}

/// Opaque channel-estimate handle.
pub struct RdnetChannel(ChannelEstimate);
/// Opaque range-Doppler map handle.
pub struct RdnetMap(RdMap);
/// Opaque trained-model handle.
pub struct RdnetModel(RdNet<f32>);

/// Copies the last error message for this thread into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length in
/// bytes, excluding the terminator.
#[no_mangle]
pub extern "C" fn rdnet_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            unsafe {
                std::ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
                *buf.add(n) = 0;
            }
        }
        msg.len()
    })
}

/// Synthesizes an N x M channel estimate for `n_targets` targets given as
/// parallel arrays (amplitude, normalized delay f1, normalized Doppler f2)
/// plus a common phase. `snr_db` = INFINITY means noise free; otherwise
/// AWGN is drawn from `noise_seed`.
///
/// # Safety
/// `b`, `f1`, `f2` must point to `n_targets` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn rdnet_channel_synthesize(
    n: usize,
    m: usize,
    n_targets: usize,
    b: *const f64,
    f1: *const f64,
    f2: *const f64,
    phi: f64,
    snr_db: f64,
    noise_seed: u64,
    out: *mut *mut RdnetChannel,
) -> RdnetStatus {
    guarded(|| {
        if out.is_null() || (n_targets > 0 && (b.is_null() || f1.is_null() || f2.is_null())) {
            set_error("null pointer argument");
            return RdnetStatus::NullArgument;
        }
        let cfg = RadarConfig { n, m, ..RadarConfig::default() };
        if let Err(e) = cfg.validate() {
            return fail(e);
        }
        let bs = std::slice::from_raw_parts(b, n_targets);
        let f1s = std::slice::from_raw_parts(f1, n_targets);
        let f2s = std::slice::from_raw_parts(f2, n_targets);
        let scene = TargetScene {
            targets: (0..n_targets)
                .map(|i| Target { b: bs[i], f1: f1s[i], f2: f2s[i] })
                .collect(),
            phi,
        };
        let clean = match synthesize_channel(&scene, &cfg) {
            Ok(c) => c,
            Err(e) => return fail(e),
        };
        let channel = if snr_db.is_finite() {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(noise_seed);
            match add_awgn(&clean, snr_db, &mut rng) {
                Ok(c) => c,
                Err(e) => return fail(e),
            }
        } else {
            clean
        };
        *out = Box::into_raw(Box::new(RdnetChannel(channel)));
        RdnetStatus::Ok
    })
}

/// Frees a channel handle; a null pointer is a no-op.
///
/// # Safety
/// `handle` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn rdnet_channel_free(handle: *mut RdnetChannel) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Row count (N) of a channel.
///
/// # Safety
/// `handle` must be a live channel handle.
#[no_mangle]
pub unsafe extern "C" fn rdnet_channel_rows(handle: *const RdnetChannel) -> usize {
    if handle.is_null() {
        return 0;
    }
    (*handle).0.n()
}

/// Column count (M) of a channel.
///
/// # Safety
/// `handle` must be a live channel handle.
#[no_mangle]
pub unsafe extern "C" fn rdnet_channel_cols(handle: *const RdnetChannel) -> usize {
    if handle.is_null() {
        return 0;
    }
    (*handle).0.m()
}

/// Copies the I and Q planes (row-major, N*M doubles each) out of a
/// channel handle. Either destination may be null to skip it.
///
/// # Safety
/// Non-null destinations must hold at least N*M doubles.
#[no_mangle]
pub unsafe extern "C" fn rdnet_channel_planes(
    handle: *const RdnetChannel,
    i_out: *mut f64,
    q_out: *mut f64,
) -> RdnetStatus {
    guarded(|| {
        if handle.is_null() {
            set_error("null channel handle");
            return RdnetStatus::NullArgument;
        }
        let ch = &(*handle).0;
        let len = ch.n() * ch.m();
        if !i_out.is_null() {
            std::ptr::copy_nonoverlapping(ch.i_plane().as_ptr(), i_out, len);
        }
        if !q_out.is_null() {
            std::ptr::copy_nonoverlapping(ch.q_plane().as_ptr(), q_out, len);
        }
        RdnetStatus::Ok
    })
}

/// Computes the 2D periodogram of a channel. `window`: 0 = rectangular,
/// 1 = Hann. Output map has zp_k*N rows and zp_l*M columns.
///
/// # Safety
/// `channel` must be live; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn rdnet_periodogram(
    channel: *const RdnetChannel,
    zp_k: usize,
    zp_l: usize,
    window: u32,
    out: *mut *mut RdnetMap,
) -> RdnetStatus {
    guarded(|| {
        if channel.is_null() || out.is_null() {
            set_error("null pointer argument");
            return RdnetStatus::NullArgument;
        }
        let window = match window {
            0 => Window::None,
            1 => Window::Hann,
            other => {
                set_error(format!("unknown window code {other}"));
                return RdnetStatus::InvalidArgument;
            }
        };
        let spec = PeriodogramSpec { zp_k, zp_l, window };
        match periodogram_2d(&(*channel).0, &spec) {
            Ok(map) => {
                *out = Box::into_raw(Box::new(RdnetMap(map)));
                RdnetStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Frees a map handle; a null pointer is a no-op.
///
/// # Safety
/// `handle` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn rdnet_map_free(handle: *mut RdnetMap) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Row count of a map.
///
/// # Safety
/// `handle` must be a live map handle.
#[no_mangle]
pub unsafe extern "C" fn rdnet_map_rows(handle: *const RdnetMap) -> usize {
    if handle.is_null() {
        return 0;
    }
    (*handle).0.n()
}

/// Column count of a map.
///
/// # Safety
/// `handle` must be a live map handle.
#[no_mangle]
pub unsafe extern "C" fn rdnet_map_cols(handle: *const RdnetMap) -> usize {
    if handle.is_null() {
        return 0;
    }
    (*handle).0.m()
}

/// Copies map values (row-major doubles) into `values_out`.
///
/// # Safety
/// `values_out` must hold at least rows*cols doubles.
#[no_mangle]
pub unsafe extern "C" fn rdnet_map_values(
    handle: *const RdnetMap,
    values_out: *mut f64,
) -> RdnetStatus {
    guarded(|| {
        if handle.is_null() || values_out.is_null() {
            set_error("null pointer argument");
            return RdnetStatus::NullArgument;
        }
        let map = &(*handle).0;
        std::ptr::copy_nonoverlapping(map.values().as_ptr(), values_out, map.values().len());
        RdnetStatus::Ok
    })
}

/// Loads a trained model checkpoint from a NUL-terminated UTF-8 path.
///
/// # Safety
/// `path` must be a valid C string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn rdnet_model_load(
    path: *const c_char,
    out: *mut *mut RdnetModel,
) -> RdnetStatus {
    guarded(|| {
        if path.is_null() || out.is_null() {
            set_error("null pointer argument");
            return RdnetStatus::NullArgument;
        }
        let path = match CStr::from_ptr(path).to_str() {
            Ok(p) => p,
            Err(_) => {
                set_error("path is not valid UTF-8");
                return RdnetStatus::InvalidArgument;
            }
        };
        match load_model::<f32>(Path::new(path)) {
            Ok(net) => {
                *out = Box::into_raw(Box::new(RdnetModel(net)));
                RdnetStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Frees a model handle; a null pointer is a no-op.
///
/// # Safety
/// `handle` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn rdnet_model_free(handle: *mut RdnetModel) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Runs the model on a channel estimate; fails when the channel geometry
/// does not match the model.
///
/// # Safety
/// `model` and `channel` must be live handles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn rdnet_model_predict(
    model: *mut RdnetModel,
    channel: *const RdnetChannel,
    out: *mut *mut RdnetMap,
) -> RdnetStatus {
    guarded(|| {
        if model.is_null() || channel.is_null() || out.is_null() {
            set_error("null pointer argument");
            return RdnetStatus::NullArgument;
        }
        let net = &mut (*model).0;
        let ch = &(*channel).0;
        if ch.n() != net.config().n || ch.m() != net.config().m {
            set_error(format!(
                "channel is {}x{} but the model expects {}x{}",
                ch.n(),
                ch.m(),
                net.config().n,
                net.config().m
            ));
            return RdnetStatus::InvalidArgument;
        }
        let map = predict(net, ch);
        *out = Box::into_raw(Box::new(RdnetMap(map)));
        RdnetStatus::Ok
    })
}
