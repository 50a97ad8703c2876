//! C ABI for `gsp-discrim`.
//!
//! Objects cross the boundary as opaque handles created by `*_new` /
//! `*_generate` / `*_from_text` functions and released with the matching
//! `*_free`. Every fallible call returns a [`GspStatus`]; on failure the
//! message is available from [`gsp_last_error_message`] on the same thread.
//! Strings returned by the library must be released with [`gsp_string_free`].
//!
//! Matrices are passed row-major. Vectors are passed as pointer plus length.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gsp_discrim::discrim::pair_in_d_phi;
use gsp_discrim::gnn::{model_from_text, model_to_text};
use gsp_discrim::suites::{run_suite, Suite};
use gsp_discrim::training::gradient_check;
use gsp_discrim::{
    apply_fir, bank_il_constant, generate_geometric_graph, gft, gnn_forward, igft, laplacian, normalize_support,
    readout_apply, split_subspace, Bank, Error, FilterBank, FirFilter, GeometricGraph, GraphOperator, Matrix,
    Nonlinearity, Readout, SingleLayerGnn,
};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GspStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ShapeMismatch = 3,
    Numerical = 4,
    Parse = 5,
    Io = 6,
    Internal = 7,
    Panic = 8,
}

/// Pointwise activation of a model.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GspActivation {
    Identity = 0,
    Tanh = 1,
    /// Uses the `leaky_slope` argument.
    LeakyRectifier = 2,
}

/// Randomized check suites runnable through [`gsp_verify_suite`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GspSuite {
    ZeroHighTanh = 0,
    IdentityAgreement = 1,
    PositivePairs = 2,
    TanhDiscrimination = 3,
    ZeroHighBankAgreement = 4,
    StrictInclusion = 5,
}

/// Random geometric graph.
pub struct GspGraph(GeometricGraph);

/// Normalized Laplacian of a graph with its eigendecomposition.
pub struct GspOperator(GraphOperator);

/// Filter bank, activation and readout.
pub struct GspModel {
    bank: FilterBank,
    readout: Readout,
    sigma: Nonlinearity,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> GspStatus {
    match e {
        Error::InvalidConfig(_) | Error::InvalidInput(_) | Error::Degenerate(_) | Error::DegenerateProjection(_) => {
            GspStatus::InvalidArgument
        }
        Error::Shape { .. } => GspStatus::ShapeMismatch,
        Error::Numerical(_) => GspStatus::Numerical,
        Error::Parse { .. } => GspStatus::Parse,
        Error::Io(_) => GspStatus::Io,
        Error::Inconsistent(_) => GspStatus::Internal,
        Error::Replicate { source, .. } => status_of(source),
    }
}

struct Fail(GspStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(GspStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(GspStatus::InvalidArgument, msg.into())
}

/// Runs `f`, converting errors and panics into a status and last-error message.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> GspStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            GspStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("panic inside gsp-discrim".into());
            GspStatus::Panic
        }
    }
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null("text"));
    }
    CStr::from_ptr(p).to_str().map_err(|_| invalid("text is not valid UTF-8"))
}

fn export_string(s: String) -> Result<*mut c_char, Fail> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| Fail(GspStatus::Internal, "string contains NUL".into()))
}

fn write_out(dst: &mut [f64], src: &[f64]) -> Result<(), Fail> {
    if dst.len() != src.len() {
        return Err(Fail(
            GspStatus::ShapeMismatch,
            format!("output buffer holds {} values, result has {}", dst.len(), src.len()),
        ));
    }
    dst.copy_from_slice(src);
    Ok(())
}

fn activation(kind: i32, leaky_slope: f64) -> Result<Nonlinearity, Fail> {
    Ok(match kind {
        k if k == GspActivation::Identity as i32 => Nonlinearity::Identity,
        k if k == GspActivation::Tanh as i32 => Nonlinearity::Tanh,
        k if k == GspActivation::LeakyRectifier as i32 => Nonlinearity::leaky_rectifier(leaky_slope)?,
        k => return Err(invalid(format!("unknown activation {k}"))),
    })
}

fn suite_of(code: i32) -> Result<Suite, Fail> {
    const TABLE: [(GspSuite, Suite); 6] = [
        (GspSuite::ZeroHighTanh, Suite::Theorem1),
        (GspSuite::IdentityAgreement, Suite::Theorem2Identity),
        (GspSuite::PositivePairs, Suite::Theorem2Positive),
        (GspSuite::TanhDiscrimination, Suite::Theorem2Tanh),
        (GspSuite::ZeroHighBankAgreement, Suite::Corollary1),
        (GspSuite::StrictInclusion, Suite::Corollary2),
    ];
    TABLE
        .iter()
        .find(|(g, _)| *g as i32 == code)
        .map(|&(_, s)| s)
        .ok_or_else(|| invalid(format!("unknown suite {code}")))
}

/// Message of the last failed call on this thread, or NULL if the last call
/// succeeded. Valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn gsp_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gsp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Releases a string returned by the library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn gsp_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

// ----------------------------------------------------------------- graphs

/// Random geometric kNN graph on `n` nodes.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gsp_graph_generate(n: usize, k_neighbors: usize, seed: u64, out: *mut *mut GspGraph) -> GspStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = Box::into_raw(Box::new(GspGraph(generate_geometric_graph(n, k_neighbors, seed)?)));
        Ok(())
    })
}

/// Parses a graph from its text form.
///
/// # Safety
/// `s` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gsp_graph_from_text(s: *const c_char, out: *mut *mut GspGraph) -> GspStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = Box::into_raw(Box::new(GspGraph(GeometricGraph::from_text(text(s)?)?)));
        Ok(())
    })
}

/// Text form of a graph; release with [`gsp_string_free`].
///
/// # Safety
/// `g` must be a live graph handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gsp_graph_to_text(g: *const GspGraph, out: *mut *mut c_char) -> GspStatus {
    guard(|| {
        let g = handle(g, "graph")?;
        *out_ptr(out, "out")? = export_string(g.0.to_text())?;
        Ok(())
    })
}

/// Number of nodes, or 0 for NULL.
///
/// # Safety
/// `g` must be NULL or a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn gsp_graph_node_count(g: *const GspGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.n())
}

/// Edge weights as a row-major `n × n` matrix.
///
/// # Safety
/// `g` must be a live graph handle and `out` hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn gsp_graph_weights(g: *const GspGraph, out: *mut f64, len: usize) -> GspStatus {
    guard(|| {
        let g = handle(g, "graph")?;
        write_out(slice_mut(out, len, "out")?, g.0.weights().as_slice())
    })
}

/// Releases a graph. NULL is ignored.
///
/// # Safety
/// `g` must be NULL or a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn gsp_graph_free(g: *mut GspGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

// -------------------------------------------------------------- operators

/// Normalized Laplacian of `g` and its eigendecomposition.
///
/// # Safety
/// `g` must be a live graph handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gsp_operator_from_graph(g: *const GspGraph, out: *mut *mut GspOperator) -> GspStatus {
    guard(|| {
        let g = handle(g, "graph")?;
        let out = out_ptr(out, "out")?;
        let op = GraphOperator::new(normalize_support(&laplacian(&g.0))?)?;
        *out = Box::into_raw(Box::new(GspOperator(op)));
        Ok(())
    })
}

/// Number of nodes, or 0 for NULL.
///
/// # Safety
/// `op` must be NULL or a live operator handle.
#[no_mangle]
pub unsafe extern "C" fn gsp_operator_size(op: *const GspOperator) -> usize {
    op.as_ref().map_or(0, |op| op.0.n())
}

/// Eigenvalues in ascending magnitude.
///
/// # Safety
/// `op` must be a live operator handle and `out` hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn gsp_operator_eigenvalues(op: *const GspOperator, out: *mut f64, len: usize) -> GspStatus {
    guard(|| {
        let op = handle(op, "operator")?;
        write_out(slice_mut(out, len, "out")?, op.0.spectrum().eigenvalues())
    })
}

/// Graph Fourier transform of `x`.
///
/// # Safety
/// `op` must be a live operator handle; `x` and `out` hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn gsp_operator_gft(op: *const GspOperator, x: *const f64, out: *mut f64, len: usize) -> GspStatus {
    guard(|| {
        let op = handle(op, "operator")?;
        let r = gft(op.0.spectrum(), slice(x, len, "x")?)?;
        write_out(slice_mut(out, len, "out")?, &r)
    })
}

/// Inverse graph Fourier transform of `xt`.
///
/// # Safety
/// `op` must be a live operator handle; `xt` and `out` hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn gsp_operator_igft(op: *const GspOperator, xt: *const f64, out: *mut f64, len: usize) -> GspStatus {
    guard(|| {
        let op = handle(op, "operator")?;
        let r = igft(op.0.spectrum(), slice(xt, len, "xt")?)?;
        write_out(slice_mut(out, len, "out")?, &r)
    })
}

/// Applies the FIR filter `Σ taps[k] S^k` to `x`.
///
/// # Safety
/// `op` must be a live operator handle; `taps` holds `n_taps` values, `x`
/// and `out` hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn gsp_operator_apply_fir(
    op: *const GspOperator,
    taps: *const f64,
    n_taps: usize,
    x: *const f64,
    out: *mut f64,
    len: usize,
) -> GspStatus {
    guard(|| {
        let op = handle(op, "operator")?;
        let f = FirFilter::new(slice(taps, n_taps, "taps")?.to_vec())?;
        let r = apply_fir(&f, op.0.support(), slice(x, len, "x")?)?;
        write_out(slice_mut(out, len, "out")?, &r)
    })
}

/// Releases an operator. NULL is ignored.
///
/// # Safety
/// `op` must be NULL or a live operator handle.
#[no_mangle]
pub unsafe extern "C" fn gsp_operator_free(op: *mut GspOperator) {
    if !op.is_null() {
        drop(Box::from_raw(op));
    }
}

// ----------------------------------------------------------------- models

/// Model with `features` FIR filters of `n_taps` taps (`taps` is row-major
/// `features × n_taps`), an activation (a [`GspActivation`] value in `kind`) and
/// `features` readout weights.
///
/// # Safety
/// Buffers must hold the stated number of values and `out` be valid.
#[no_mangle]
pub unsafe extern "C" fn gsp_model_new(
    taps: *const f64,
    features: usize,
    n_taps: usize,
    readout: *const f64,
    kind: i32,
    leaky_slope: f64,
    out: *mut *mut GspModel,
) -> GspStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        if features == 0 || n_taps == 0 {
            return Err(invalid("a model needs at least one filter and one tap"));
        }
        let t = slice(taps, features * n_taps, "taps")?;
        let bank = FilterBank::from_taps(&Matrix::from_fn(features, n_taps, |f, k| t[f * n_taps + k]))?;
        let readout = Readout::new(slice(readout, features, "readout")?.to_vec())?;
        let sigma = activation(kind, leaky_slope)?;
        *out = Box::into_raw(Box::new(GspModel { bank, readout, sigma }));
        Ok(())
    })
}

/// Parses a model from its text form.
///
/// # Safety
/// `s` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gsp_model_from_text(s: *const c_char, out: *mut *mut GspModel) -> GspStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let (bank, readout, sigma) = model_from_text(text(s)?)?;
        *out = Box::into_raw(Box::new(GspModel { bank, readout, sigma }));
        Ok(())
    })
}

/// Text form of a model; release with [`gsp_string_free`].
///
/// # Safety
/// `m` must be a live model handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gsp_model_to_text(m: *const GspModel, out: *mut *mut c_char) -> GspStatus {
    guard(|| {
        let m = handle(m, "model")?;
        *out_ptr(out, "out")? = export_string(model_to_text(&m.bank, &m.readout, m.sigma)?)?;
        Ok(())
    })
}

/// Number of filters in the model, or 0 for NULL.
///
/// # Safety
/// `m` must be NULL or a live model handle.
#[no_mangle]
pub unsafe extern "C" fn gsp_model_features(m: *const GspModel) -> usize {
    m.as_ref().map_or(0, |m| m.bank.len())
}

/// Integral Lipschitz constant of the model's bank over `[0, lam_max]`.
///
/// # Safety
/// `m` must be a live model handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gsp_model_il_constant(m: *const GspModel, lam_max: f64, out: *mut f64) -> GspStatus {
    guard(|| {
        let m = handle(m, "model")?;
        if lam_max.is_nan() || lam_max <= 0.0 {
            return Err(invalid("lam_max must be positive"));
        }
        *out_ptr(out, "out")? = bank_il_constant(&m.bank, lam_max);
        Ok(())
    })
}

/// Prediction `Σ_f c_f σ(H_f(S) x)` on the operator's graph.
///
/// # Safety
/// Handles must be live; `x` and `out` hold `len` values.
#[no_mangle]
pub unsafe extern "C" fn gsp_model_predict(
    m: *const GspModel,
    op: *const GspOperator,
    x: *const f64,
    out: *mut f64,
    len: usize,
) -> GspStatus {
    guard(|| {
        let m = handle(m, "model")?;
        let op = handle(op, "operator")?;
        let gnn = SingleLayerGnn::new(Bank::Fir(m.bank.clone()), m.sigma)?;
        let feats = gnn_forward(&gnn, &op.0, slice(x, len, "x")?)?;
        let r = readout_apply(&m.readout, &feats)?;
        write_out(slice_mut(out, len, "out")?, &r)
    })
}

/// Whether the pair `(x, y)` is nondiscriminable by the model's linear bank
/// (`in_d_h`) and by bank plus activation (`in_d_phi`), using the `k`
/// smallest-magnitude frequencies as the low band.
///
/// # Safety
/// Handles must be live; `x` and `y` hold `len` values; outputs are valid.
#[no_mangle]
pub unsafe extern "C" fn gsp_model_pair_verdict(
    m: *const GspModel,
    op: *const GspOperator,
    k: usize,
    x: *const f64,
    y: *const f64,
    len: usize,
    tol: f64,
    in_d_h: *mut bool,
    in_d_phi: *mut bool,
) -> GspStatus {
    guard(|| {
        let m = handle(m, "model")?;
        let op = handle(op, "operator")?;
        let in_d_h = out_ptr(in_d_h, "in_d_h")?;
        let in_d_phi = out_ptr(in_d_phi, "in_d_phi")?;
        if tol.is_nan() || tol <= 0.0 {
            return Err(invalid("tol must be positive"));
        }
        let split = split_subspace(op.0.spectrum(), k)?;
        let gnn = SingleLayerGnn::new(Bank::Fir(m.bank.clone()), m.sigma)?;
        let v = pair_in_d_phi(&split, &gnn, &op.0, slice(x, len, "x")?, slice(y, len, "y")?, tol)?;
        *in_d_h = v.in_d_h;
        *in_d_phi = v.in_d_phi;
        Ok(())
    })
}

/// Releases a model. NULL is ignored.
///
/// # Safety
/// `m` must be NULL or a live model handle.
#[no_mangle]
pub unsafe extern "C" fn gsp_model_free(m: *mut GspModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

// ----------------------------------------------------------------- checks

/// Runs one randomized check suite (a [`GspSuite`] value); `passed`
/// receives the verdict.
///
/// # Safety
/// `passed` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gsp_verify_suite(suite: i32, trials: usize, seed: u64, passed: *mut bool) -> GspStatus {
    guard(|| {
        let passed = out_ptr(passed, "passed")?;
        *passed = run_suite(suite_of(suite)?, trials, seed)?.passed;
        Ok(())
    })
}

/// Finite-difference gradient check over `configs` random configurations.
///
/// # Safety
/// Outputs must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn gsp_gradient_check(configs: usize, seed: u64, max_rel_error: *mut f64, passed: *mut bool) -> GspStatus {
    guard(|| {
        let max_rel_error = out_ptr(max_rel_error, "max_rel_error")?;
        let passed = out_ptr(passed, "passed")?;
        let r = gradient_check(configs, seed)?;
        *max_rel_error = r.max_rel_error();
        *passed = r.all_passed();
        Ok(())
    })
}
