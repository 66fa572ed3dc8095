//! C ABI over `procura`.
//!
//! Every fallible function returns a [`ProcuraStatus`]; on failure the message
//! is available from [`procura_last_error`] on the same thread. Objects are
//! opaque handles created by `*_from_json`, generator or design functions and
//! released with the matching `*_free`. Strings returned through `char **`
//! are owned by the caller and released with [`procura_string_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use procura::cost_model::{conjugate_cost, CostFunction, SurrogateSpec};
use procura::harness::{run_experiment, ExperimentConfig};
use procura::instances::{gen_adversarial_gradient, gen_adversarial_scalar, gen_random_linear};
use procura::offline::{solve_offline, Instance};
use procura::online::{run_sequential, run_simultaneous, RunRecord};
use procura::surrogate::{alpha_ratio, design_chan, design_poly, design_quasiconvex};
use procura::{Error, GridSpec, SolverConfig, Variant};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProcuraStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Domain = 4,
    Unbounded = 5,
    NonConvergence = 6,
    Infeasible = 7,
    BufferTooSmall = 8,
    Parse = 9,
    Io = 10,
    Panic = 11,
}

/// Analyzed engine variants.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProcuraVariant {
    Sim = 0,
    Seq0 = 1,
    Seq1 = 2,
}

impl From<ProcuraVariant> for Variant {
    fn from(v: ProcuraVariant) -> Self {
        match v {
            ProcuraVariant::Sim => Variant::Sim,
            ProcuraVariant::Seq0 => Variant::Seq0,
            ProcuraVariant::Seq1 => Variant::Seq1,
        }
    }
}

/// Opaque cost function.
pub struct ProcuraCost(CostFunction);

/// Opaque arrival instance.
pub struct ProcuraInstance(Instance);

/// Opaque surrogate design.
pub struct ProcuraSurrogate(SurrogateSpec);

/// Opaque online run trace.
pub struct ProcuraRun(RunRecord);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(ProcuraStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn status_of(e: &Error) -> ProcuraStatus {
    match e {
        Error::DimensionMismatch { .. } => ProcuraStatus::DimensionMismatch,
        Error::Domain(_) | Error::NegativeInput { .. } => ProcuraStatus::Domain,
        Error::ConjugateInfinite { .. } => ProcuraStatus::Unbounded,
        Error::NonConvergence { .. } => ProcuraStatus::NonConvergence,
        Error::AlphaUpperInfeasible { .. } => ProcuraStatus::Infeasible,
        Error::Step { source, .. } => status_of(source),
        Error::Io(_) => ProcuraStatus::Io,
        Error::Json(_) => ProcuraStatus::Parse,
        _ => ProcuraStatus::InvalidArgument,
    }
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> ProcuraStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            ProcuraStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            ProcuraStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(ProcuraStatus::NullPointer, format!("{what} is null"))
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn as_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(ProcuraStatus::Parse, format!("{what} is not valid UTF-8")))
}

unsafe fn as_slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn put<T>(out: *mut T, v: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

unsafe fn put_handle<T>(out: *mut *mut T, v: T) -> Result<(), Failure> {
    put(out, Box::into_raw(Box::new(v)), "out")
}

unsafe fn copy_out(src: &[f64], out: *mut f64, out_len: usize) -> Result<(), Failure> {
    if out_len < src.len() {
        return Err(Failure(
            ProcuraStatus::BufferTooSmall,
            format!("buffer holds {out_len} values, {} needed", src.len()),
        ));
    }
    if out.is_null() {
        return Err(null("out"));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), out, src.len());
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    let c = CString::new(s).map_err(|_| Failure(ProcuraStatus::Parse, "string contains NUL".into()))?;
    put(out, c.into_raw(), "out")
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn procura_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn procura_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub unsafe extern "C" fn procura_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

// Cost functions.

/// Parses `{"dimension", "terms", "basis"?}`.
#[no_mangle]
pub unsafe extern "C" fn procura_cost_from_json(json: *const c_char, out: *mut *mut ProcuraCost) -> ProcuraStatus {
    guard(|| {
        let f = CostFunction::from_json(as_str(json, "json")?)?;
        put_handle(out, ProcuraCost(f))
    })
}

#[no_mangle]
pub unsafe extern "C" fn procura_cost_free(cost: *mut ProcuraCost) {
    if !cost.is_null() {
        drop(Box::from_raw(cost));
    }
}

/// Dimension `D`, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn procura_cost_dimension(cost: *const ProcuraCost) -> usize {
    cost.as_ref().map_or(0, |c| c.0.dimension())
}

#[no_mangle]
pub unsafe extern "C" fn procura_cost_eval(
    cost: *const ProcuraCost,
    u: *const f64,
    len: usize,
    out: *mut f64,
) -> ProcuraStatus {
    guard(|| {
        let f = &as_ref(cost, "cost")?.0;
        put(out, f.eval(as_slice(u, len, "u")?)?, "out")
    })
}

/// Writes `D` gradient entries into `out`.
#[no_mangle]
pub unsafe extern "C" fn procura_cost_gradient(
    cost: *const ProcuraCost,
    u: *const f64,
    len: usize,
    out: *mut f64,
    out_len: usize,
) -> ProcuraStatus {
    guard(|| {
        let f = &as_ref(cost, "cost")?.0;
        copy_out(&f.gradient(as_slice(u, len, "u")?)?, out, out_len)
    })
}

/// Convex conjugate `f*(lambda)` under default solver settings.
#[no_mangle]
pub unsafe extern "C" fn procura_cost_conjugate(
    cost: *const ProcuraCost,
    lambda: *const f64,
    len: usize,
    out: *mut f64,
) -> ProcuraStatus {
    guard(|| {
        let f = &as_ref(cost, "cost")?.0;
        let c = conjugate_cost(f, as_slice(lambda, len, "lambda")?, &SolverConfig::default())?;
        put(out, c.value, "out")
    })
}

// Instances.

/// Parses `{"D", "T", "valuations"}`.
#[no_mangle]
pub unsafe extern "C" fn procura_instance_from_json(
    json: *const c_char,
    out: *mut *mut ProcuraInstance,
) -> ProcuraStatus {
    guard(|| {
        let i = Instance::from_json(as_str(json, "json")?)?;
        put_handle(out, ProcuraInstance(i))
    })
}

#[no_mangle]
pub unsafe extern "C" fn procura_instance_to_json(
    inst: *const ProcuraInstance,
    out: *mut *mut c_char,
) -> ProcuraStatus {
    guard(|| put_string(out, as_ref(inst, "instance")?.0.to_json()))
}

#[no_mangle]
pub unsafe extern "C" fn procura_instance_free(inst: *mut ProcuraInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

#[no_mangle]
pub unsafe extern "C" fn procura_instance_horizon(inst: *const ProcuraInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.0.horizon())
}

#[no_mangle]
pub unsafe extern "C" fn procura_instance_dimension(inst: *const ProcuraInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.0.dimension())
}

/// Scalar instance `c_t = 2t`; `horizon` must be even.
#[no_mangle]
pub unsafe extern "C" fn procura_instance_adversarial_scalar(
    horizon: usize,
    out: *mut *mut ProcuraInstance,
) -> ProcuraStatus {
    guard(|| put_handle(out, ProcuraInstance(gen_adversarial_scalar(horizon)?)))
}

#[no_mangle]
pub unsafe extern "C" fn procura_instance_adversarial_gradient(
    cost: *const ProcuraCost,
    horizon: usize,
    out: *mut *mut ProcuraInstance,
) -> ProcuraStatus {
    guard(|| {
        let f = &as_ref(cost, "cost")?.0;
        put_handle(out, ProcuraInstance(gen_adversarial_gradient(f, horizon)?))
    })
}

#[no_mangle]
pub unsafe extern "C" fn procura_instance_random_linear(
    horizon: usize,
    dimension: usize,
    lo: f64,
    hi: f64,
    seed: u64,
    out: *mut *mut ProcuraInstance,
) -> ProcuraStatus {
    guard(|| {
        put_handle(
            out,
            ProcuraInstance(gen_random_linear(horizon, dimension, (lo, hi), seed)?),
        )
    })
}

// Surrogates.

#[no_mangle]
pub unsafe extern "C" fn procura_surrogate_identity(
    cost: *const ProcuraCost,
    out: *mut *mut ProcuraSurrogate,
) -> ProcuraStatus {
    guard(|| {
        let f = &as_ref(cost, "cost")?.0;
        put_handle(out, ProcuraSurrogate(SurrogateSpec::identity(f.clone())))
    })
}

/// Scaled design for the largest degree; `bound` may be null.
#[no_mangle]
pub unsafe extern "C" fn procura_surrogate_poly(
    cost: *const ProcuraCost,
    out: *mut *mut ProcuraSurrogate,
    bound: *mut f64,
) -> ProcuraStatus {
    guard(|| {
        let d = design_poly(&as_ref(cost, "cost")?.0)?;
        if !bound.is_null() {
            bound.write(d.bound);
        }
        put_handle(out, ProcuraSurrogate(d.spec))
    })
}

/// Scaled design for the smallest degree.
#[no_mangle]
pub unsafe extern "C" fn procura_surrogate_chan(
    cost: *const ProcuraCost,
    out: *mut *mut ProcuraSurrogate,
) -> ProcuraStatus {
    guard(|| {
        let s = design_chan(&as_ref(cost, "cost")?.0)?;
        put_handle(out, ProcuraSurrogate(s))
    })
}

/// Weight design by bisection on the grid `{0, step, ..}` up to the variant's
/// region for `horizon`. A NaN `alpha_upper` selects the default. `bound` may
/// be null.
#[no_mangle]
pub unsafe extern "C" fn procura_surrogate_quasiconvex(
    cost: *const ProcuraCost,
    variant: ProcuraVariant,
    horizon: usize,
    grid_step: f64,
    epsilon: f64,
    alpha_upper: f64,
    out: *mut *mut ProcuraSurrogate,
    bound: *mut f64,
) -> ProcuraStatus {
    guard(|| {
        let f = &as_ref(cost, "cost")?.0;
        let v = Variant::from(variant);
        let grid = GridSpec::for_variant(v, horizon, f.dimension(), grid_step)?;
        let upper = if alpha_upper.is_nan() { None } else { Some(alpha_upper) };
        let r = design_quasiconvex(f, v, &grid, epsilon, upper, &SolverConfig::default())?;
        if !bound.is_null() {
            bound.write(r.bound);
        }
        put_handle(out, ProcuraSurrogate(r.design))
    })
}

/// Parses `{"base": <cost>, "mode": ...}`.
#[no_mangle]
pub unsafe extern "C" fn procura_surrogate_from_json(
    json: *const c_char,
    out: *mut *mut ProcuraSurrogate,
) -> ProcuraStatus {
    guard(|| {
        let s: SurrogateSpec =
            serde_json::from_str(as_str(json, "json")?).map_err(|e| Failure::from(Error::from(e)))?;
        put_handle(out, ProcuraSurrogate(s))
    })
}

#[no_mangle]
pub unsafe extern "C" fn procura_surrogate_to_json(
    surrogate: *const ProcuraSurrogate,
    out: *mut *mut c_char,
) -> ProcuraStatus {
    guard(|| {
        let s = &as_ref(surrogate, "surrogate")?.0;
        let text = serde_json::to_string(s).map_err(|e| Failure::from(Error::from(e)))?;
        put_string(out, text)
    })
}

/// The expanded surrogate cost as a new cost handle.
#[no_mangle]
pub unsafe extern "C" fn procura_surrogate_expand(
    surrogate: *const ProcuraSurrogate,
    out: *mut *mut ProcuraCost,
) -> ProcuraStatus {
    guard(|| put_handle(out, ProcuraCost(as_ref(surrogate, "surrogate")?.0.expand())))
}

#[no_mangle]
pub unsafe extern "C" fn procura_surrogate_free(surrogate: *mut ProcuraSurrogate) {
    if !surrogate.is_null() {
        drop(Box::from_raw(surrogate));
    }
}

/// Grid ratio `alpha` of the surrogate against its base cost; infinite
/// values are reported as `INFINITY`.
#[no_mangle]
pub unsafe extern "C" fn procura_alpha_ratio(
    surrogate: *const ProcuraSurrogate,
    variant: ProcuraVariant,
    horizon: usize,
    grid_step: f64,
    out: *mut f64,
) -> ProcuraStatus {
    guard(|| {
        let s = &as_ref(surrogate, "surrogate")?.0;
        let v = Variant::from(variant);
        let grid = GridSpec::for_variant(v, horizon, s.base().dimension(), grid_step)?;
        let a = alpha_ratio(s.base(), &s.expand(), v, &grid, &SolverConfig::default())?;
        put(out, a, "out")
    })
}

// Engines.

/// Simultaneous engine driven by the surrogate; objective measured with its base cost.
#[no_mangle]
pub unsafe extern "C" fn procura_run_simultaneous(
    inst: *const ProcuraInstance,
    surrogate: *const ProcuraSurrogate,
    out: *mut *mut ProcuraRun,
) -> ProcuraStatus {
    guard(|| {
        let i = &as_ref(inst, "instance")?.0;
        let s = &as_ref(surrogate, "surrogate")?.0;
        let r = run_simultaneous(i, &s.expand(), s.base(), &SolverConfig::default())?;
        put_handle(out, ProcuraRun(r))
    })
}

/// Posted-pricing engine with the same offset in every coordinate.
#[no_mangle]
pub unsafe extern "C" fn procura_run_sequential(
    inst: *const ProcuraInstance,
    surrogate: *const ProcuraSurrogate,
    offset: f64,
    out: *mut *mut ProcuraRun,
) -> ProcuraStatus {
    guard(|| {
        let i = &as_ref(inst, "instance")?.0;
        let s = &as_ref(surrogate, "surrogate")?.0;
        let r = run_sequential(
            i,
            &s.expand(),
            s.base(),
            &vec![offset; i.dimension()],
            &SolverConfig::default(),
        )?;
        put_handle(out, ProcuraRun(r))
    })
}

#[no_mangle]
pub unsafe extern "C" fn procura_run_free(run: *mut ProcuraRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// Number of steps, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn procura_run_horizon(run: *const ProcuraRun) -> usize {
    run.as_ref().map_or(0, |r| r.0.steps.len())
}

/// `sum_t v_t(x_t) - f(sum_t x_t)`; NaN for a null handle.
#[no_mangle]
pub unsafe extern "C" fn procura_run_objective(run: *const ProcuraRun) -> f64 {
    run.as_ref().map_or(f64::NAN, |r| r.0.objective)
}

fn step_of(r: &RunRecord, t: usize) -> Result<&procura::online::StepRecord, Failure> {
    t.checked_sub(1).and_then(|i| r.steps.get(i)).ok_or_else(|| {
        Failure(
            ProcuraStatus::InvalidArgument,
            format!("step {t} outside 1..={}", r.steps.len()),
        )
    })
}

/// Allocation `x_t`, `t` counted from 1.
#[no_mangle]
pub unsafe extern "C" fn procura_run_allocation(
    run: *const ProcuraRun,
    t: usize,
    out: *mut f64,
    out_len: usize,
) -> ProcuraStatus {
    guard(|| copy_out(&step_of(&as_ref(run, "run")?.0, t)?.allocation, out, out_len))
}

/// Price seen at step `t`, counted from 1.
#[no_mangle]
pub unsafe extern "C" fn procura_run_price(
    run: *const ProcuraRun,
    t: usize,
    out: *mut f64,
    out_len: usize,
) -> ProcuraStatus {
    guard(|| copy_out(&step_of(&as_ref(run, "run")?.0, t)?.price, out, out_len))
}

/// Per-step table `t, x_*, lambda_*, cumulative_objective` as CSV.
#[no_mangle]
pub unsafe extern "C" fn procura_run_to_csv(run: *const ProcuraRun, out: *mut *mut c_char) -> ProcuraStatus {
    guard(|| {
        let bytes = as_ref(run, "run")?.0.to_csv()?;
        put_string(out, String::from_utf8_lossy(&bytes).into_owned())
    })
}

// Offline and experiments.

/// Offline optimum; when `allocations` is non-null it receives `T * D`
/// values, row-major by step.
#[no_mangle]
pub unsafe extern "C" fn procura_offline(
    inst: *const ProcuraInstance,
    cost: *const ProcuraCost,
    objective: *mut f64,
    allocations: *mut f64,
    allocations_len: usize,
) -> ProcuraStatus {
    guard(|| {
        let i = &as_ref(inst, "instance")?.0;
        let f = &as_ref(cost, "cost")?.0;
        let sol = solve_offline(i, f, &SolverConfig::default())?;
        if !allocations.is_null() {
            let flat: Vec<f64> = sol.allocations.concat();
            copy_out(&flat, allocations, allocations_len)?;
        }
        put(objective, sol.objective, "objective")
    })
}

/// Runs an experiment config given as JSON. `report_json` receives the full
/// report; `all_passed` (may be null) whether every strategy passed.
#[no_mangle]
pub unsafe extern "C" fn procura_experiment_run(
    config_json: *const c_char,
    report_json: *mut *mut c_char,
    all_passed: *mut bool,
) -> ProcuraStatus {
    guard(|| {
        let cfg = ExperimentConfig::from_json(as_str(config_json, "config_json")?)?;
        let report = run_experiment(&cfg)?;
        if !all_passed.is_null() {
            all_passed.write(report.all_passed());
        }
        put_string(report_json, report.to_json())
    })
}
