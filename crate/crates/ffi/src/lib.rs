//! C ABI over the `dynit` model.
//!
//! Conventions:
//! * every function returns a [`DynitStatus`]; results go through out-pointers;
//! * a failing call stores a message retrievable with [`dynit_last_error_message`]
//!   on the same thread;
//! * models are opaque heap handles created by [`dynit_model_new`] and released with
//!   [`dynit_model_free`];
//! * panics never cross the boundary; they are reported as `DYNIT_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use dynit::analytic::{self, Model, Regime};
use dynit::distributions::{psi_cdf, psi_pdf, MixtureExp, Scenario};
use dynit::montecarlo::{simulate, SimConfig, SimRegime, DEFAULT_PARTITIONS};
use dynit::specfun;
use dynit::Error;

pub const DYNIT_REGIME_GENERAL: u32 = 0;
pub const DYNIT_REGIME_HIGH_POWER: u32 = 1;
/// Simulation only: constant threshold, passed separately.
pub const DYNIT_REGIME_FIXED_IT: u32 = 2;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DynitStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    InvalidScenario = 3,
    Truncation = 4,
    Conditioning = 5,
    Quadrature = 6,
    Config = 7,
    Io = 8,
    Table = 9,
    Panic = 10,
}

/// Channel and demand parameters; rates are reciprocals of mean gains.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynitScenario {
    pub lambda_p: f64,
    pub lambda_pp: f64,
    pub lambda_sp: f64,
    pub lambda_ss: f64,
    pub lambda_ps: f64,
    pub sigma2: f64,
    /// Peak transmit power, linear.
    pub p_peak: f64,
}

impl From<&Scenario> for DynitScenario {
    fn from(s: &Scenario) -> Self {
        DynitScenario {
            lambda_p: s.lambda_p,
            lambda_pp: s.lambda_pp,
            lambda_sp: s.lambda_sp,
            lambda_ss: s.lambda_ss,
            lambda_ps: s.lambda_ps,
            sigma2: s.sigma2,
            p_peak: s.p_peak,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DynitCapacity {
    pub mean_capacity: f64,
    pub closed_term: f64,
    pub i4_value: f64,
    pub quad_abs_err: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DynitSimSummary {
    pub n_samples: u64,
    pub mean_capacity: f64,
    /// Fraction of draws transmitting at peak power.
    pub peak_fraction: f64,
    pub constraint_violations: u64,
}

/// Opaque model handle.
pub struct DynitModel {
    model: Model,
    mixture: MixtureExp,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_last_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> DynitStatus {
    match e {
        Error::Domain { .. } => DynitStatus::Domain,
        Error::InvalidScenario(_) => DynitStatus::InvalidScenario,
        Error::TruncationCap { .. } => DynitStatus::Truncation,
        Error::Conditioning { .. } => DynitStatus::Conditioning,
        Error::Quadrature { .. } => DynitStatus::Quadrature,
        Error::Config(_) => DynitStatus::Config,
        Error::Io { .. } => DynitStatus::Io,
        Error::Table(_) => DynitStatus::Table,
        Error::Context { source, .. } => status_of(source),
    }
}

enum Failure {
    Null(&'static str),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

/// Runs `f`, translating errors and panics into a status code.
fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> DynitStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DynitStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_last_error(format!("null pointer: {what}"));
            DynitStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_last_error(e.to_string());
            status_of(&e)
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            DynitStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn write<T>(p: *mut T, value: T, what: &'static str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    p.write(value);
    Ok(())
}

fn regime_of(code: u32) -> Result<Regime, Failure> {
    match code {
        DYNIT_REGIME_GENERAL => Ok(Regime::General),
        DYNIT_REGIME_HIGH_POWER => Ok(Regime::HighPower),
        _ => Err(Error::Config(format!("unknown regime code {code}")).into()),
    }
}

/// Static description of a status code. Never NULL.
#[no_mangle]
pub extern "C" fn dynit_status_string(status: DynitStatus) -> *const c_char {
    let s: &'static CStr = match status {
        DynitStatus::Ok => c"ok",
        DynitStatus::NullPointer => c"null pointer argument",
        DynitStatus::Domain => c"argument outside domain",
        DynitStatus::InvalidScenario => c"invalid scenario",
        DynitStatus::Truncation => c"series truncation cap exceeded",
        DynitStatus::Conditioning => c"numerical conditioning failure",
        DynitStatus::Quadrature => c"quadrature did not converge",
        DynitStatus::Config => c"invalid configuration",
        DynitStatus::Io => c"i/o error",
        DynitStatus::Table => c"malformed table",
        DynitStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}

#[no_mangle]
pub extern "C" fn dynit_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (NUL terminated,
/// truncated to `len`). Returns the full message length excluding the NUL.
///
/// # Safety
/// `buf` must be NULL or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn dynit_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Fills `out` with the reference channel set at the given demand rate and peak
/// power in dB.
///
/// # Safety
/// `out` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dynit_scenario_reference(
    lambda_p: f64,
    p_db: f64,
    out: *mut DynitScenario,
) -> DynitStatus {
    guard(|| {
        write(
            out,
            DynitScenario::from(&Scenario::reference(lambda_p, p_db)),
            "out",
        )
    })
}

/// Builds a model. `tail_tol <= 0` selects the default truncation tolerance.
///
/// # Safety
/// `scenario` must be NULL or point to a valid `DynitScenario`; `out` must be NULL
/// or valid for writes. On success `*out` owns a handle to release with
/// `dynit_model_free`.
#[no_mangle]
pub unsafe extern "C" fn dynit_model_new(
    scenario: *const DynitScenario,
    tail_tol: f64,
    out: *mut *mut DynitModel,
) -> DynitStatus {
    guard(|| {
        let s = deref(scenario, "scenario")?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let scn = Scenario::new(
            s.lambda_p,
            s.lambda_pp,
            s.lambda_sp,
            s.lambda_ss,
            s.lambda_ps,
            s.sigma2,
            s.p_peak,
        )?;
        let tol = if tail_tol > 0.0 {
            tail_tol
        } else {
            dynit::distributions::DEFAULT_TAIL_TOL
        };
        let model = Model::new(scn, tol)?;
        let mixture = MixtureExp::from_series(&model.series, &model.scenario);
        out.write(Box::into_raw(Box::new(DynitModel { model, mixture })));
        Ok(())
    })
}

/// Releases a model. NULL is ignored.
///
/// # Safety
/// `model` must be NULL or a handle from `dynit_model_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dynit_model_free(model: *mut DynitModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Scenario the model was built from (after clamping).
///
/// # Safety
/// `model` must be NULL or a live handle; `out` NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dynit_model_scenario(
    model: *const DynitModel,
    out: *mut DynitScenario,
) -> DynitStatus {
    guard(|| {
        let m = deref(model, "model")?;
        write(out, DynitScenario::from(&m.model.scenario), "out")
    })
}

/// Number of demand terms kept after truncation.
///
/// # Safety
/// `model` must be NULL or a live handle; `out` NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dynit_model_k_max(
    model: *const DynitModel,
    out: *mut usize,
) -> DynitStatus {
    guard(|| {
        let m = deref(model, "model")?;
        write(out, m.model.series.k_max(), "out")
    })
}

/// Outage probability at SINR threshold `x` for `regime` (`DYNIT_REGIME_GENERAL` or
/// `DYNIT_REGIME_HIGH_POWER`).
///
/// # Safety
/// `model` must be NULL or a live handle; `out` NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dynit_outage(
    model: *const DynitModel,
    regime: u32,
    x: f64,
    out: *mut f64,
) -> DynitStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let v = m.model.outage(regime_of(regime)?, x)?;
        write(out, v, "out")
    })
}

/// Outage probability on `n` thresholds.
///
/// # Safety
/// `xs` must point to `n` readable doubles and `out` to `n` writable doubles
/// (either may be NULL only when `n == 0`).
#[no_mangle]
pub unsafe extern "C" fn dynit_outage_curve(
    model: *const DynitModel,
    regime: u32,
    xs: *const f64,
    n: usize,
    out: *mut f64,
) -> DynitStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let regime = regime_of(regime)?;
        if n == 0 {
            return Ok(());
        }
        if xs.is_null() {
            return Err(Failure::Null("xs"));
        }
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let xs = std::slice::from_raw_parts(xs, n);
        let out = std::slice::from_raw_parts_mut(out, n);
        for (o, &x) in out.iter_mut().zip(xs) {
            *o = m.model.outage(regime, x)?;
        }
        Ok(())
    })
}

/// Outage probability with a constant threshold `psi_fixed` (linear power).
///
/// # Safety
/// `model` must be NULL or a live handle; `out` NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dynit_outage_fixed_it(
    model: *const DynitModel,
    x: f64,
    psi_fixed: f64,
    out: *mut f64,
) -> DynitStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let v = analytic::outage_fixed_it(x, psi_fixed, &m.model.scenario)?;
        write(out, v, "out")
    })
}

/// CDF of the interference-plus-noise threshold.
///
/// # Safety
/// `model` must be NULL or a live handle; `out` NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dynit_psi_cdf(
    model: *const DynitModel,
    x: f64,
    out: *mut f64,
) -> DynitStatus {
    guard(|| {
        let m = deref(model, "model")?;
        write(out, psi_cdf(x, &m.mixture), "out")
    })
}

/// Density of the interference-plus-noise threshold, `x > 0`.
///
/// # Safety
/// `model` must be NULL or a live handle; `out` NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dynit_psi_pdf(
    model: *const DynitModel,
    x: f64,
    out: *mut f64,
) -> DynitStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let v = psi_pdf(x, &m.mixture)?;
        write(out, v, "out")
    })
}

/// CDFs of the unclipped transmit power `t = ψ/g_sp` (`which = 0`), the clipped
/// transmit power (`1`) and the received power (`2`).
///
/// # Safety
/// `model` must be NULL or a live handle; `out` NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dynit_power_cdf(
    model: *const DynitModel,
    which: u32,
    x: f64,
    out: *mut f64,
) -> DynitStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let (s, scn) = (&m.model.series, &m.model.scenario);
        let v = match which {
            0 => analytic::cdf_t(x, s, scn),
            1 => analytic::cdf_ptx(x, s, scn),
            2 => analytic::cdf_prx(x, s, scn),
            _ => return Err(Error::Config(format!("unknown power law {which}")).into()),
        };
        write(out, v, "out")
    })
}

/// Mean capacity in nats/s/Hz. `quad_tol` must lie in (0, 1e-4].
///
/// # Safety
/// `model` must be NULL or a live handle; `out` NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dynit_mean_capacity(
    model: *const DynitModel,
    regime: u32,
    quad_tol: f64,
    out: *mut DynitCapacity,
) -> DynitStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let r = m.model.mean_capacity(regime_of(regime)?, quad_tol)?;
        write(
            out,
            DynitCapacity {
                mean_capacity: r.mean_capacity,
                closed_term: r.closed_term,
                i4_value: r.i4_value,
                quad_abs_err: r.quad_abs_err,
            },
            "out",
        )
    })
}

/// Mean capacity with a constant threshold `psi_fixed` (linear power).
///
/// # Safety
/// `model` must be NULL or a live handle; `out` NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dynit_capacity_fixed_it(
    model: *const DynitModel,
    psi_fixed: f64,
    quad_tol: f64,
    out: *mut DynitCapacity,
) -> DynitStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let r = analytic::capacity_fixed_it(psi_fixed, &m.model.scenario, quad_tol)?;
        write(
            out,
            DynitCapacity {
                mean_capacity: r.mean_capacity,
                closed_term: r.closed_term,
                i4_value: r.i4_value,
                quad_abs_err: r.quad_abs_err,
            },
            "out",
        )
    })
}

/// Monte Carlo summary over `n_samples` draws. `psi_fixed` is read only for
/// `DYNIT_REGIME_FIXED_IT`.
///
/// # Safety
/// `model` must be NULL or a live handle; `out` NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dynit_simulate(
    model: *const DynitModel,
    regime: u32,
    psi_fixed: f64,
    n_samples: u64,
    seed: u64,
    out: *mut DynitSimSummary,
) -> DynitStatus {
    guard(|| {
        let m = deref(model, "model")?;
        let regime = match regime {
            DYNIT_REGIME_GENERAL => SimRegime::General,
            DYNIT_REGIME_HIGH_POWER => SimRegime::HighPower,
            DYNIT_REGIME_FIXED_IT => SimRegime::FixedIt(psi_fixed),
            _ => return Err(Error::Config(format!("unknown regime code {regime}")).into()),
        };
        let n = usize::try_from(n_samples)
            .map_err(|_| Error::Config(format!("n_samples {n_samples} too large")))?;
        let cfg = SimConfig {
            n_samples: n,
            seed,
            n_partitions: DEFAULT_PARTITIONS,
            regime,
        };
        let sim = simulate(&m.model.scenario, &cfg)?;
        write(
            out,
            DynitSimSummary {
                n_samples,
                mean_capacity: sim.capacity.mean(),
                peak_fraction: sim.atom_count as f64 / n as f64,
                constraint_violations: sim.constraint_violations as u64,
            },
            "out",
        )
    })
}

/// `Γ(0, x)` for `x > 0`.
///
/// # Safety
/// `out` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dynit_upper_gamma0(x: f64, out: *mut f64) -> DynitStatus {
    guard(|| {
        let v = specfun::upper_gamma0(x)?;
        write(out, v, "out")
    })
}

/// `eˣ·Γ(0, x)` for `x > 0`.
///
/// # Safety
/// `out` must be NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn dynit_exp_scaled_gamma0(x: f64, out: *mut f64) -> DynitStatus {
    guard(|| {
        let v = specfun::exp_scaled_gamma0(x)?;
        write(out, v, "out")
    })
}
