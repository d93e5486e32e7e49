//! C ABI over `kslab`.
//!
//! Objects are opaque handles created by `kslab_*_new`/`kslab_*_compute`
//! style functions and released with the matching `kslab_*_free`. Every
//! fallible call returns a [`KslabStatus`]; on failure a message is kept per
//! thread and can be read with [`kslab_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use kslab::core_model::{ks_core, CoreResult, RemovalPolicy};
use kslab::exploration::{explore, ChainTrajectory, RecordMode};
use kslab::fluid::{integrate, theta_param, FluidTrajectory, Regime, StepControl};
use kslab::graph::{sample_configuration, DegreeSequence, PairedGraph};
use kslab::limit_law::{sample_hitting_times, VarthetaConfig};
use kslab::seed::rng_from_seed;
use kslab::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KslabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidSequence = 2,
    InvalidGraph = 3,
    NotSimplex = 4,
    NoLeaf = 5,
    Domain = 6,
    Solver = 7,
    Parse = 8,
    Io = 9,
    Internal = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KslabPolicy {
    FirstIndex = 0,
    UniformRandom = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KslabRegime {
    Subcritical = -1,
    Critical = 0,
    Supercritical = 1,
}

/// Chain state: step index and half-edge counts by unmatched degree.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct KslabChainState {
    pub k: u64,
    pub x: u64,
    pub y: u64,
    pub z: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct KslabFluidState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

pub struct KslabGraph(PairedGraph);
pub struct KslabCore(CoreResult);
pub struct KslabTrajectory(ChainTrajectory);
pub struct KslabFluid(FluidTrajectory);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> KslabStatus {
    match e {
        Error::InvalidSequence(_) => KslabStatus::InvalidSequence,
        Error::InvalidGraph(_) | Error::Mismatch(_) => KslabStatus::InvalidGraph,
        Error::NotSimplex(..) => KslabStatus::NotSimplex,
        Error::NoLeaf | Error::NoStep => KslabStatus::NoLeaf,
        Error::Domain(_) | Error::Empty(_) | Error::Singular => KslabStatus::Domain,
        Error::Solver(_) | Error::Runaway { .. } => KslabStatus::Solver,
        Error::Parse { .. } | Error::Json(_) => KslabStatus::Parse,
        Error::Io(_) => KslabStatus::Io,
    }
}

/// Runs `f`, recording errors and panics.
fn guard(f: impl FnOnce() -> Result<(), KslabStatus>) -> KslabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => KslabStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into());
            KslabStatus::Internal
        }
    }
}

fn fail(e: Error) -> KslabStatus {
    let s = status_of(&e);
    set_error(e.to_string());
    s
}

fn null() -> KslabStatus {
    set_error("null pointer argument".into());
    KslabStatus::NullPointer
}

fn emit<T>(out: *mut *mut T, value: T) -> Result<(), KslabStatus> {
    if out.is_null() {
        return Err(null());
    }
    unsafe { *out = Box::into_raw(Box::new(value)) };
    Ok(())
}

unsafe fn as_ref<'a, T>(p: *const T) -> Result<&'a T, KslabStatus> {
    unsafe { p.as_ref() }.ok_or_else(null)
}

unsafe fn write<T>(p: *mut T, v: T) -> Result<(), KslabStatus> {
    if p.is_null() {
        return Err(null());
    }
    unsafe { *p = v };
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn kslab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn kslab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Samples a configuration-model graph with `d1`, `d2`, `d3` vertices of
/// degree 1, 2, 3.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn kslab_graph_sample(
    d1: u64,
    d2: u64,
    d3: u64,
    seed: u64,
    out: *mut *mut KslabGraph,
) -> KslabStatus {
    guard(|| {
        let seq = DegreeSequence::new(d1, d2, d3).map_err(fail)?;
        let g = sample_configuration(&seq, &mut rng_from_seed(seed)).map_err(fail)?;
        emit(out, KslabGraph(g))
    })
}

/// Builds a graph from `num_edges` vertex pairs stored flat in `edges`
/// (`2 * num_edges` entries). Loops are `u u`.
///
/// # Safety
/// `edges` must point to `2 * num_edges` readable values (or be NULL when
/// `num_edges` is 0); `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn kslab_graph_from_edges(
    num_vertices: usize,
    edges: *const u32,
    num_edges: usize,
    out: *mut *mut KslabGraph,
) -> KslabStatus {
    guard(|| {
        let flat: &[u32] = match num_edges {
            0 => &[],
            _ if edges.is_null() => return Err(null()),
            m => unsafe { std::slice::from_raw_parts(edges, 2 * m) },
        };
        let pairs: Vec<(u32, u32)> = flat.chunks_exact(2).map(|c| (c[0], c[1])).collect();
        let g = PairedGraph::from_edges(num_vertices, &pairs).map_err(fail)?;
        emit(out, KslabGraph(g))
    })
}

/// # Safety
/// `g` must be a live graph handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn kslab_graph_num_vertices(g: *const KslabGraph) -> usize {
    unsafe { g.as_ref() }.map_or(0, |g| g.0.num_vertices())
}

/// # Safety
/// `g` must be a live graph handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn kslab_graph_num_half_edges(g: *const KslabGraph) -> usize {
    unsafe { g.as_ref() }.map_or(0, |g| g.0.num_half_edges())
}

/// # Safety
/// `g` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn kslab_graph_free(g: *mut KslabGraph) {
    if !g.is_null() {
        drop(unsafe { Box::from_raw(g) });
    }
}

/// Karp–Sipser core of `g`. `seed` is used only by the uniform policy.
///
/// # Safety
/// `g` must be a live graph handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn kslab_core_compute(
    g: *const KslabGraph,
    policy: KslabPolicy,
    seed: u64,
    out: *mut *mut KslabCore,
) -> KslabStatus {
    guard(|| {
        let g = unsafe { as_ref(g) }?;
        let policy = match policy {
            KslabPolicy::FirstIndex => RemovalPolicy::FirstIndex,
            KslabPolicy::UniformRandom => RemovalPolicy::UniformRandom(seed),
        };
        emit(out, KslabCore(ks_core(&g.0, policy)))
    })
}

/// Core size in half-edges.
///
/// # Safety
/// `c` must be a live core handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn kslab_core_size(c: *const KslabCore) -> u64 {
    unsafe { c.as_ref() }.map_or(0, |c| c.0.core_size)
}

/// # Safety
/// `c` must be a live core handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn kslab_core_independent_set_size(c: *const KslabCore) -> u64 {
    unsafe { c.as_ref() }.map_or(0, |c| c.0.independent_set.len() as u64)
}

/// Writes the core vertex counts by degree 1, 2, 3 into `vertices[0..3]`.
///
/// # Safety
/// `c` must be a live core handle; `vertices` must hold 3 writable values.
#[no_mangle]
pub unsafe extern "C" fn kslab_core_histogram(c: *const KslabCore, vertices: *mut u64) -> KslabStatus {
    guard(|| {
        let c = unsafe { as_ref(c) }?;
        if vertices.is_null() {
            return Err(null());
        }
        let h = c.0.histogram();
        unsafe { ptr::copy_nonoverlapping(h.vertices.as_ptr(), vertices, 3) };
        Ok(())
    })
}

/// # Safety
/// `c` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn kslab_core_free(c: *mut KslabCore) {
    if !c.is_null() {
        drop(unsafe { Box::from_raw(c) });
    }
}

/// Runs the exploration chain on a fresh configuration model. `stride` 0
/// records endpoints only, 1 every state, K every K-th state.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn kslab_explore(
    d1: u64,
    d2: u64,
    d3: u64,
    seed: u64,
    stride: u64,
    out: *mut *mut KslabTrajectory,
) -> KslabStatus {
    guard(|| {
        let seq = DegreeSequence::new(d1, d2, d3).map_err(fail)?;
        let mode = match stride {
            0 => RecordMode::EndpointsOnly,
            1 => RecordMode::Full,
            k => RecordMode::Subsample(k),
        };
        emit(out, KslabTrajectory(explore(&seq, seed, mode).map_err(fail)?))
    })
}

/// Number of recorded states.
///
/// # Safety
/// `t` must be a live trajectory handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn kslab_trajectory_len(t: *const KslabTrajectory) -> usize {
    unsafe { t.as_ref() }.map_or(0, |t| t.0.states.len())
}

/// # Safety
/// `t` must be a live trajectory handle; `state` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn kslab_trajectory_state(
    t: *const KslabTrajectory,
    index: usize,
    state: *mut KslabChainState,
) -> KslabStatus {
    guard(|| {
        let t = unsafe { as_ref(t) }?;
        let s = t.0.states.get(index).ok_or_else(|| {
            set_error(format!("state index {index} out of range"));
            KslabStatus::Domain
        })?;
        unsafe { write(state, KslabChainState { k: s.k, x: s.x, y: s.y, z: s.z }) }
    })
}

/// Stopping step θ and the degree-2 / degree-3 half-edge counts there.
///
/// # Safety
/// `t` must be a live trajectory handle; the outputs must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn kslab_trajectory_endpoints(
    t: *const KslabTrajectory,
    theta: *mut u64,
    d2: *mut u64,
    d3: *mut u64,
) -> KslabStatus {
    guard(|| {
        let t = unsafe { as_ref(t) }?;
        unsafe {
            write(theta, t.0.theta)?;
            write(d2, t.0.d2)?;
            write(d3, t.0.d3)
        }
    })
}

/// # Safety
/// `t` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn kslab_trajectory_free(t: *mut KslabTrajectory) {
    if !t.is_null() {
        drop(unsafe { Box::from_raw(t) });
    }
}

/// Θ and regime of half-edge proportions.
///
/// # Safety
/// `theta` and `regime` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn kslab_phase(
    p1: f64,
    p2: f64,
    p3: f64,
    theta: *mut f64,
    regime: *mut KslabRegime,
) -> KslabStatus {
    guard(|| {
        let th = theta_param(p1, p2, p3).map_err(fail)?;
        let r = match Regime::classify(th) {
            Regime::Subcritical => KslabRegime::Subcritical,
            Regime::Critical => KslabRegime::Critical,
            Regime::Supercritical => KslabRegime::Supercritical,
        };
        unsafe {
            write(theta, th)?;
            write(regime, r)
        }
    })
}

/// Integrates the fluid limit from `(p1, p2, p3)` to extinction.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn kslab_fluid_integrate(p1: f64, p2: f64, p3: f64, out: *mut *mut KslabFluid) -> KslabStatus {
    guard(|| {
        let tr = integrate(p1, p2, p3, &StepControl::default()).map_err(fail)?;
        emit(out, KslabFluid(tr))
    })
}

/// Extinction time, or NaN for a NULL handle.
///
/// # Safety
/// `f` must be a live fluid handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn kslab_fluid_t_ext(f: *const KslabFluid) -> f64 {
    unsafe { f.as_ref() }.map_or(f64::NAN, |f| f.0.t_ext)
}

/// State at time `t` (clamped to `[0, t_ext]`).
///
/// # Safety
/// `f` must be a live fluid handle; `state` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn kslab_fluid_eval(f: *const KslabFluid, t: f64, state: *mut KslabFluidState) -> KslabStatus {
    guard(|| {
        let f = unsafe { as_ref(f) }?;
        let s = f.0.eval(t);
        unsafe { write(state, KslabFluidState { x: s.x, y: s.y, z: s.z }) }
    })
}

/// # Safety
/// `f` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn kslab_fluid_free(f: *mut KslabFluid) {
    if !f.is_null() {
        drop(unsafe { Box::from_raw(f) });
    }
}

/// Fills `out[0..count]` with samples of ϑ, the first time a standard
/// Brownian motion hits the curve t ↦ t^-2.
///
/// # Safety
/// `out` must hold `count` writable values.
#[no_mangle]
pub unsafe extern "C" fn kslab_vartheta_sample(count: usize, seed: u64, dt: f64, t0: f64, out: *mut f64) -> KslabStatus {
    guard(|| {
        if out.is_null() && count > 0 {
            return Err(null());
        }
        let cfg = VarthetaConfig { dt, t0, ..VarthetaConfig::default() };
        let samples = sample_hitting_times(count, seed, &cfg).map_err(fail)?;
        for (i, s) in samples.iter().enumerate() {
            unsafe { *out.add(i) = s.value };
        }
        Ok(())
    })
}
