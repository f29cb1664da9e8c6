//! C ABI for the dcopf library: opaque handles, integer status codes, and
//! plain buffers. The header is generated into `include/dcopf.h` at build
//! time.
//!
//! Conventions: every function that can fail returns [`DcopfStatusCode`];
//! on failure a message is stored thread-locally and can be fetched with
//! [`dcopf_last_error`]. Strings returned by this library are freed with
//! [`dcopf_string_free`], handles with their matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use dcopf::case::{merge_colocated_generators, GridCase};
use dcopf::formulation::{
    build_opf, build_sced, recover, DispatchResult, FormulationKind, ScedConfig,
};
use dcopf::ipm::{solve_qp, IpmOptions, IpmStatus};
use dcopf::network::{build_network, compute_ptdf};
use dcopf::report::sparsity_report;

/// Status codes mirroring the CLI exit conventions.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcopfStatusCode {
    Ok = 0,
    InvalidArgument = 1,
    ParseError = 2,
    SolveError = 3,
}

/// The three security-constraint formulations.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DcopfFormulation {
    Ptdf = 0,
    PureTheta = 1,
    Mixed = 2,
}

impl From<DcopfFormulation> for FormulationKind {
    fn from(k: DcopfFormulation) -> Self {
        match k {
            DcopfFormulation::Ptdf => FormulationKind::Ptdf,
            DcopfFormulation::PureTheta => FormulationKind::PureTheta,
            DcopfFormulation::Mixed => FormulationKind::Mixed,
        }
    }
}

/// Opaque parsed grid case.
pub struct DcopfCase {
    inner: GridCase,
}

/// Opaque solved dispatch.
pub struct DcopfDispatch {
    result: DispatchResult,
    n_gen: usize,
    n_branch: usize,
}

/// Solver options; obtain defaults from [`dcopf_default_options`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DcopfSolveOptions {
    /// Scaled-residual convergence tolerance.
    pub tol: f64,
    pub max_iter: u32,
    /// Merge colocated generators before building (required by the pure
    /// voltage angle formulation when a bus hosts several units).
    pub merge_generators: bool,
    /// 1 solves a single-period OPF; larger values solve a SCED with this
    /// many hourly periods.
    pub periods: u32,
    /// Seed for the SCED load-scaling draws.
    pub seed: u64,
    /// Default generator ramp as a fraction of pmax, MW/h.
    pub ramp_frac: f64,
}

/// Structural sparsity summary of one built formulation.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DcopfSparsity {
    pub n_vars: usize,
    pub n_cons: usize,
    pub nnz_a: usize,
    pub density_a: f64,
    pub nnz_aat_lower: usize,
    pub factor_ops: u64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg).unwrap_or_else(|_| CString::new("invalid error text").unwrap());
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Last error message for this thread, or NULL when the previous call
/// succeeded. Free with [`dcopf_string_free`].
#[no_mangle]
pub extern "C" fn dcopf_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        Some(c) => c.clone().into_raw(),
        None => std::ptr::null_mut(),
    })
}

/// Free a string returned by this library.
///
/// # Safety
/// `s` must be a pointer previously returned by a dcopf function and not
/// yet freed; NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn dcopf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

/// Library version string (static storage; do not free).
#[no_mangle]
pub extern "C" fn dcopf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Default solver options: tol 1e-8, 100 iterations, generator merging on,
/// single period.
#[no_mangle]
pub extern "C" fn dcopf_default_options() -> DcopfSolveOptions {
    DcopfSolveOptions {
        tol: 1e-8,
        max_iter: 100,
        merge_generators: true,
        periods: 1,
        seed: 0,
        ramp_frac: 0.3,
    }
}

fn parse_text(text: &str) -> Result<GridCase, String> {
    let case = GridCase::parse(text).map_err(|e| e.to_string())?;
    let diags = dcopf::case::validate(&case);
    if !dcopf::case::is_valid(&diags) {
        let msgs: Vec<String> = diags
            .iter()
            .filter(|d| d.severity == dcopf::case::Severity::Error)
            .map(|d| d.message.clone())
            .collect();
        return Err(msgs.join("; "));
    }
    Ok(case)
}

/// Parse a case from MATPOWER-subset text or the JSON mirror.
///
/// # Safety
/// `text` must be a valid NUL-terminated string; `out` must be a valid
/// pointer to receive the handle.
#[no_mangle]
pub unsafe extern "C" fn dcopf_case_parse(
    text: *const c_char,
    out: *mut *mut DcopfCase,
) -> DcopfStatusCode {
    clear_error();
    if text.is_null() || out.is_null() {
        set_error("null argument".into());
        return DcopfStatusCode::InvalidArgument;
    }
    let text = match unsafe { CStr::from_ptr(text) }.to_str() {
        Ok(t) => t,
        Err(_) => {
            set_error("case text is not valid UTF-8".into());
            return DcopfStatusCode::InvalidArgument;
        }
    };
    match parse_text(text) {
        Ok(case) => {
            unsafe { *out = Box::into_raw(Box::new(DcopfCase { inner: case })) };
            DcopfStatusCode::Ok
        }
        Err(e) => {
            set_error(e);
            DcopfStatusCode::ParseError
        }
    }
}

/// Parse a case file from disk.
///
/// # Safety
/// `path` must be a valid NUL-terminated string; `out` must be a valid
/// pointer to receive the handle.
#[no_mangle]
pub unsafe extern "C" fn dcopf_case_parse_file(
    path: *const c_char,
    out: *mut *mut DcopfCase,
) -> DcopfStatusCode {
    clear_error();
    if path.is_null() || out.is_null() {
        set_error("null argument".into());
        return DcopfStatusCode::InvalidArgument;
    }
    let path = match unsafe { CStr::from_ptr(path) }.to_str() {
        Ok(p) => p,
        Err(_) => {
            set_error("path is not valid UTF-8".into());
            return DcopfStatusCode::InvalidArgument;
        }
    };
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            set_error(format!("cannot read {path}: {e}"));
            return DcopfStatusCode::ParseError;
        }
    };
    match parse_text(&text) {
        Ok(case) => {
            unsafe { *out = Box::into_raw(Box::new(DcopfCase { inner: case })) };
            DcopfStatusCode::Ok
        }
        Err(e) => {
            set_error(e);
            DcopfStatusCode::ParseError
        }
    }
}

/// Free a case handle (NULL is ignored).
///
/// # Safety
/// `case` must come from a dcopf parse function and not be used afterward.
#[no_mangle]
pub unsafe extern "C" fn dcopf_case_free(case: *mut DcopfCase) {
    if !case.is_null() {
        drop(unsafe { Box::from_raw(case) });
    }
}

/// Element counts of a parsed case.
///
/// # Safety
/// All pointers must be valid; `case` must be a live case handle.
#[no_mangle]
pub unsafe extern "C" fn dcopf_case_counts(
    case: *const DcopfCase,
    buses: *mut usize,
    branches: *mut usize,
    generators: *mut usize,
) -> DcopfStatusCode {
    clear_error();
    if case.is_null() || buses.is_null() || branches.is_null() || generators.is_null() {
        set_error("null argument".into());
        return DcopfStatusCode::InvalidArgument;
    }
    let c = unsafe { &(*case).inner };
    unsafe {
        *buses = c.buses.len();
        *branches = c.branches.len();
        *generators = c.generators.len();
    }
    DcopfStatusCode::Ok
}

/// JSON mirror of a parsed case; free with [`dcopf_string_free`].
///
/// # Safety
/// `case` must be a live case handle.
#[no_mangle]
pub unsafe extern "C" fn dcopf_case_to_json(case: *const DcopfCase) -> *mut c_char {
    if case.is_null() {
        return std::ptr::null_mut();
    }
    let json = unsafe { &(*case).inner }.to_json();
    CString::new(json).map(CString::into_raw).unwrap_or(std::ptr::null_mut())
}

fn solve_impl(
    case: &GridCase,
    kind: FormulationKind,
    opts: &DcopfSolveOptions,
) -> Result<(DispatchResult, usize, usize), String> {
    let stripped = case.strip_out_of_service();
    let prepared = if opts.merge_generators {
        merge_colocated_generators(&stripped).map_err(|e| e.to_string())?
    } else {
        stripped
    };
    let net = build_network(&prepared).map_err(|e| e.to_string())?;
    let ptdf = compute_ptdf(&net).map_err(|e| e.to_string())?;
    let ipm = IpmOptions {
        tol: opts.tol,
        max_iter: opts.max_iter as usize,
        ..Default::default()
    };
    let bundle = if opts.periods <= 1 {
        build_opf(&prepared, &net, Some(&ptdf), kind)
    } else {
        let cfg = ScedConfig {
            periods: opts.periods as usize,
            seed: opts.seed,
            ramp_frac: opts.ramp_frac,
            ..Default::default()
        };
        build_sced(&prepared, &net, Some(&ptdf), kind, &cfg)
    }
    .map_err(|e| e.to_string())?;
    let sol = solve_qp(&bundle.qp, &ipm).map_err(|e| e.to_string())?;
    if sol.status != IpmStatus::Optimal {
        return Err(format!("solver finished with status {:?}", sol.status));
    }
    let dispatch = recover(&bundle, &sol, &net).map_err(|e| e.to_string())?;
    Ok((dispatch, prepared.generators.len(), prepared.branches.len()))
}

/// Build and solve one formulation; on success `out` receives a dispatch
/// handle.
///
/// # Safety
/// `case` must be a live case handle; `out` must be valid; `opts` may be
/// NULL for defaults.
#[no_mangle]
pub unsafe extern "C" fn dcopf_solve(
    case: *const DcopfCase,
    kind: DcopfFormulation,
    opts: *const DcopfSolveOptions,
    out: *mut *mut DcopfDispatch,
) -> DcopfStatusCode {
    clear_error();
    if case.is_null() || out.is_null() {
        set_error("null argument".into());
        return DcopfStatusCode::InvalidArgument;
    }
    let opts = if opts.is_null() { dcopf_default_options() } else { unsafe { *opts } };
    let inner = unsafe { &(*case).inner };
    let solved = catch_unwind(AssertUnwindSafe(|| solve_impl(inner, kind.into(), &opts)));
    match solved {
        Ok(Ok((result, n_gen, n_branch))) => {
            let handle = DcopfDispatch { result, n_gen, n_branch };
            unsafe { *out = Box::into_raw(Box::new(handle)) };
            DcopfStatusCode::Ok
        }
        Ok(Err(e)) => {
            set_error(e);
            DcopfStatusCode::SolveError
        }
        Err(_) => {
            set_error("internal panic during solve".into());
            DcopfStatusCode::SolveError
        }
    }
}

/// Free a dispatch handle (NULL is ignored).
///
/// # Safety
/// `d` must come from [`dcopf_solve`] and not be used afterward.
#[no_mangle]
pub unsafe extern "C" fn dcopf_dispatch_free(d: *mut DcopfDispatch) {
    if !d.is_null() {
        drop(unsafe { Box::from_raw(d) });
    }
}

/// Total dispatch cost in $ (objective plus constant cost terms).
///
/// # Safety
/// `d` must be a live dispatch handle.
#[no_mangle]
pub unsafe extern "C" fn dcopf_dispatch_objective(d: *const DcopfDispatch) -> f64 {
    if d.is_null() {
        return f64::NAN;
    }
    unsafe { &*d }.result.objective
}

/// Number of periods in the dispatch.
///
/// # Safety
/// `d` must be a live dispatch handle.
#[no_mangle]
pub unsafe extern "C" fn dcopf_dispatch_periods(d: *const DcopfDispatch) -> usize {
    if d.is_null() {
        return 0;
    }
    unsafe { &*d }.result.p_g.len()
}

/// Number of generators per period.
///
/// # Safety
/// `d` must be a live dispatch handle.
#[no_mangle]
pub unsafe extern "C" fn dcopf_dispatch_generators(d: *const DcopfDispatch) -> usize {
    if d.is_null() {
        return 0;
    }
    unsafe { &*d }.n_gen
}

/// Number of branches per period.
///
/// # Safety
/// `d` must be a live dispatch handle.
#[no_mangle]
pub unsafe extern "C" fn dcopf_dispatch_branches(d: *const DcopfDispatch) -> usize {
    if d.is_null() {
        return 0;
    }
    unsafe { &*d }.n_branch
}

/// Copy generator MW for one period into `buf` (length `len` ≥ generator
/// count).
///
/// # Safety
/// `d` must be a live dispatch handle and `buf` must point to at least
/// `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn dcopf_dispatch_generation(
    d: *const DcopfDispatch,
    period: usize,
    buf: *mut f64,
    len: usize,
) -> DcopfStatusCode {
    clear_error();
    if d.is_null() || buf.is_null() {
        set_error("null argument".into());
        return DcopfStatusCode::InvalidArgument;
    }
    let h = unsafe { &*d };
    let Some(row) = h.result.p_g.get(period) else {
        set_error(format!("period {period} out of range"));
        return DcopfStatusCode::InvalidArgument;
    };
    if len < row.len() {
        set_error(format!("buffer holds {len}, need {}", row.len()));
        return DcopfStatusCode::InvalidArgument;
    }
    unsafe { std::ptr::copy_nonoverlapping(row.as_ptr(), buf, row.len()) };
    DcopfStatusCode::Ok
}

/// Copy branch MW flows for one period into `buf` (length `len` ≥ branch
/// count).
///
/// # Safety
/// `d` must be a live dispatch handle and `buf` must point to at least
/// `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn dcopf_dispatch_flows(
    d: *const DcopfDispatch,
    period: usize,
    buf: *mut f64,
    len: usize,
) -> DcopfStatusCode {
    clear_error();
    if d.is_null() || buf.is_null() {
        set_error("null argument".into());
        return DcopfStatusCode::InvalidArgument;
    }
    let h = unsafe { &*d };
    let Some(row) = h.result.flows.get(period) else {
        set_error(format!("period {period} out of range"));
        return DcopfStatusCode::InvalidArgument;
    };
    if len < row.len() {
        set_error(format!("buffer holds {len}, need {}", row.len()));
        return DcopfStatusCode::InvalidArgument;
    }
    unsafe { std::ptr::copy_nonoverlapping(row.as_ptr(), buf, row.len()) };
    DcopfStatusCode::Ok
}

/// Structural sparsity summary of one built (single-period) formulation.
///
/// # Safety
/// `case` must be a live case handle; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dcopf_sparsity(
    case: *const DcopfCase,
    kind: DcopfFormulation,
    merge_generators: bool,
    out: *mut DcopfSparsity,
) -> DcopfStatusCode {
    clear_error();
    if case.is_null() || out.is_null() {
        set_error("null argument".into());
        return DcopfStatusCode::InvalidArgument;
    }
    let inner = unsafe { &(*case).inner };
    let build = || -> Result<DcopfSparsity, String> {
        let stripped = inner.strip_out_of_service();
        let prepared = if merge_generators {
            merge_colocated_generators(&stripped).map_err(|e| e.to_string())?
        } else {
            stripped
        };
        let net = build_network(&prepared).map_err(|e| e.to_string())?;
        let ptdf = compute_ptdf(&net).map_err(|e| e.to_string())?;
        let bundle =
            build_opf(&prepared, &net, Some(&ptdf), kind.into()).map_err(|e| e.to_string())?;
        let r = sparsity_report(&bundle, "");
        Ok(DcopfSparsity {
            n_vars: r.n_vars,
            n_cons: r.n_cons,
            nnz_a: r.nnz_a,
            density_a: r.density_a,
            nnz_aat_lower: r.nnz_aat_lower,
            factor_ops: r.factor_ops,
        })
    };
    match catch_unwind(AssertUnwindSafe(build)) {
        Ok(Ok(s)) => {
            unsafe { *out = s };
            DcopfStatusCode::Ok
        }
        Ok(Err(e)) => {
            set_error(e);
            DcopfStatusCode::SolveError
        }
        Err(_) => {
            set_error("internal panic".into());
            DcopfStatusCode::SolveError
        }
    }
}
