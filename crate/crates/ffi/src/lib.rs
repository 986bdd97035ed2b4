//! C ABI over `nclab`: opaque handles, status codes and a per-thread last
//! error message. Every entry point catches panics.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nclab::algebra::{FamilyKind, Filtration, Martingale, Operator, C64};
use nclab::decompositions::{Decomposition, DecompositionMethod};
use nclab::functionals::{hardy_norm, lp_norm, HardyKind};
use nclab::harness::{generate::standard_filtration, verify};
use nclab::io::{decompose_instance, DecomposeOptions, DecompositionJson, InstanceJson};
use nclab::NclabError;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NclabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidOperator = 3,
    InvalidFiltration = 4,
    InvalidMartingale = 5,
    InvalidAtom = 6,
    UnknownSuite = 7,
    Serialization = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NclabFamily {
    TensorDyadic = 0,
    BlockPinching = 1,
    CommutativePartition = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NclabHardyKind {
    ConditionedColumn = 0,
    ConditionedRow = 1,
    Diagonal = 2,
    Column = 3,
    Row = 4,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NclabMethod {
    Algebraic = 0,
    WeakAtomic = 1,
    CrudeSlice = 2,
    PInfty = 3,
}

pub struct NclabFiltration(Filtration);

pub struct NclabMartingale(Martingale);

pub struct NclabDecomposition {
    decomposition: Decomposition,
    input: Operator,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &NclabError) -> NclabStatus {
    match err {
        NclabError::InvalidParameter(_) | NclabError::LevelOutOfRange { .. } | NclabError::DimensionMismatch { .. } => {
            NclabStatus::InvalidArgument
        }
        NclabError::NotHermitian { .. }
        | NclabError::NotProjection { .. }
        | NclabError::NotInSubalgebra { .. }
        | NclabError::NonFinite
        | NclabError::UndefinedFunction { .. } => NclabStatus::InvalidOperator,
        NclabError::InvalidFiltration(_) => NclabStatus::InvalidFiltration,
        NclabError::InvalidMartingale(_) => NclabStatus::InvalidMartingale,
        NclabError::InvalidAtom(_) => NclabStatus::InvalidAtom,
        NclabError::UnknownSuite(_) => NclabStatus::UnknownSuite,
        NclabError::Io(_) | NclabError::Json(_) | NclabError::Csv(_) => NclabStatus::Serialization,
    }
}

enum Failure {
    Null(&'static str),
    Lib(NclabError),
}

impl From<NclabError> for Failure {
    fn from(e: NclabError) -> Self {
        Failure::Lib(e)
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Lib(e.into())
    }
}

/// Runs `body`, recording failures and panics in the last error slot.
fn guard(body: impl FnOnce() -> Result<(), Failure>) -> NclabStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => NclabStatus::Ok,
        Ok(Err(Failure::Null(name))) => {
            set_error(format!("null pointer argument `{name}`"));
            NclabStatus::NullPointer
        }
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            NclabStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(name))
}

unsafe fn out_ref<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(name))
}

unsafe fn c_str<'a>(p: *const c_char, name: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Lib(NclabError::InvalidParameter(format!("`{name}` is not UTF-8"))))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s).map_or(ptr::null_mut(), CString::into_raw)
}

fn family_kind(f: NclabFamily) -> FamilyKind {
    match f {
        NclabFamily::TensorDyadic => FamilyKind::TensorDyadic,
        NclabFamily::BlockPinching => FamilyKind::BlockPinching,
        NclabFamily::CommutativePartition => FamilyKind::CommutativePartition,
    }
}

fn hardy_kind(k: NclabHardyKind) -> HardyKind {
    match k {
        NclabHardyKind::ConditionedColumn => HardyKind::ConditionedColumn,
        NclabHardyKind::ConditionedRow => HardyKind::ConditionedRow,
        NclabHardyKind::Diagonal => HardyKind::Diagonal,
        NclabHardyKind::Column => HardyKind::Column,
        NclabHardyKind::Row => HardyKind::Row,
    }
}

fn method(m: NclabMethod) -> DecompositionMethod {
    match m {
        NclabMethod::Algebraic => DecompositionMethod::Algebraic,
        NclabMethod::WeakAtomic => DecompositionMethod::WeakAtomic,
        NclabMethod::CrudeSlice => DecompositionMethod::CrudeSlice,
        NclabMethod::PInfty => DecompositionMethod::PInfty,
    }
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn nclab_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Frees a string returned by this library.
///
/// # Safety
/// `s` is NULL or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nclab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// The standard filtration of `family` at depth `levels` (`d = 2^levels`).
///
/// # Safety
/// `out` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nclab_filtration_new(family: NclabFamily, levels: usize, out: *mut *mut NclabFiltration) -> NclabStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let f = standard_filtration(family_kind(family), levels)?;
        *out = Box::into_raw(Box::new(NclabFiltration(f)));
        Ok(())
    })
}

/// # Safety
/// `f` is a valid filtration handle.
#[no_mangle]
pub unsafe extern "C" fn nclab_filtration_dim(f: *const NclabFiltration) -> usize {
    f.as_ref().map_or(0, |f| f.0.dim())
}

/// # Safety
/// `f` is a valid filtration handle.
#[no_mangle]
pub unsafe extern "C" fn nclab_filtration_levels(f: *const NclabFiltration) -> usize {
    f.as_ref().map_or(0, |f| f.0.levels())
}

/// # Safety
/// `f` is NULL or a handle from [`nclab_filtration_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nclab_filtration_free(f: *mut NclabFiltration) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// The martingale of `x ∈ M_N` given as row-major `dim * dim` arrays; `im`
/// may be NULL for a real operator.
///
/// # Safety
/// `f` is a valid handle, `re` (and `im` unless NULL) point to `dim * dim`
/// doubles, and `out` is a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nclab_martingale_from_operator(
    f: *const NclabFiltration,
    re: *const f64,
    im: *const f64,
    dim: usize,
    out: *mut *mut NclabMartingale,
) -> NclabStatus {
    guard(|| {
        let f = deref(f, "filtration")?;
        let out = out_ref(out, "out")?;
        if re.is_null() {
            return Err(Failure::Null("re"));
        }
        if dim != f.0.dim() {
            return Err(NclabError::DimensionMismatch { expected: f.0.dim(), got: dim }.into());
        }
        let n = dim * dim;
        let re = std::slice::from_raw_parts(re, n);
        let im = if im.is_null() { None } else { Some(std::slice::from_raw_parts(im, n)) };
        let data = (0..n).map(|k| C64::new(re[k], im.map_or(0.0, |v| v[k]))).collect();
        let x = Operator::new(dim, data)?;
        let m = Martingale::from_operator(f.0.clone(), &x)?;
        *out = Box::into_raw(Box::new(NclabMartingale(m)));
        Ok(())
    })
}

/// Parses and validates an instance JSON.
///
/// # Safety
/// `json` is a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nclab_martingale_from_json(json: *const c_char, out: *mut *mut NclabMartingale) -> NclabStatus {
    guard(|| {
        let text = c_str(json, "json")?;
        let out = out_ref(out, "out")?;
        let inst: InstanceJson = serde_json::from_str(text)?;
        *out = Box::into_raw(Box::new(NclabMartingale(inst.to_martingale()?)));
        Ok(())
    })
}

/// Instance JSON of a martingale; free with [`nclab_string_free`].
///
/// # Safety
/// `m` is a valid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nclab_martingale_to_json(m: *const NclabMartingale, out: *mut *mut c_char) -> NclabStatus {
    guard(|| {
        let m = deref(m, "martingale")?;
        let out = out_ref(out, "out")?;
        *out = into_c_string(serde_json::to_string(&InstanceJson::from_martingale(&m.0))?);
        Ok(())
    })
}

/// # Safety
/// `m` is a valid handle.
#[no_mangle]
pub unsafe extern "C" fn nclab_martingale_levels(m: *const NclabMartingale) -> usize {
    m.as_ref().map_or(0, |m| m.0.levels())
}

/// # Safety
/// `m` is NULL or a martingale handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nclab_martingale_free(m: *mut NclabMartingale) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Hardy (quasi)norm of kind `kind`; `p` may be `INFINITY`.
///
/// # Safety
/// `m` is a valid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nclab_hardy_norm(m: *const NclabMartingale, kind: NclabHardyKind, p: f64, out: *mut f64) -> NclabStatus {
    guard(|| {
        let m = deref(m, "martingale")?;
        let out = out_ref(out, "out")?;
        *out = hardy_norm(&m.0, hardy_kind(kind), p)?;
        Ok(())
    })
}

/// `||x||_p` of the terminal value.
///
/// # Safety
/// `m` is a valid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nclab_lp_norm(m: *const NclabMartingale, p: f64, out: *mut f64) -> NclabStatus {
    guard(|| {
        let m = deref(m, "martingale")?;
        let out = out_ref(out, "out")?;
        *out = lp_norm(&m.0.terminal(), p)?;
        Ok(())
    })
}

/// Decomposes the terminal value with the algebraic or weak method.
///
/// # Safety
/// `m` is a valid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nclab_decompose(
    m: *const NclabMartingale,
    kind: NclabMethod,
    p: f64,
    beta: f64,
    out: *mut *mut NclabDecomposition,
) -> NclabStatus {
    guard(|| {
        let m = deref(m, "martingale")?;
        let out = out_ref(out, "out")?;
        if !matches!(kind, NclabMethod::Algebraic | NclabMethod::WeakAtomic) {
            return Err(NclabError::InvalidParameter("atom methods need an instance with an atom object; use nclab_decompose_json".into()).into());
        }
        let inst = InstanceJson::from_martingale(&m.0);
        let options = DecomposeOptions { beta, ..DecomposeOptions::new(method(kind), p) };
        let (decomposition, input) = decompose_instance(&inst, &options)?;
        *out = Box::into_raw(Box::new(NclabDecomposition { decomposition, input }));
        Ok(())
    })
}

/// Decomposes an instance JSON with any method; atom methods read the
/// instance's `atom` object. `lambda <= 0`, `depth == 0` and `tol <= 0`
/// select the defaults.
///
/// # Safety
/// `json` is a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nclab_decompose_json(
    json: *const c_char,
    kind: NclabMethod,
    p: f64,
    beta: f64,
    lambda: f64,
    depth: usize,
    tol: f64,
    out: *mut *mut NclabDecomposition,
) -> NclabStatus {
    guard(|| {
        let text = c_str(json, "json")?;
        let out = out_ref(out, "out")?;
        let inst: InstanceJson = serde_json::from_str(text)?;
        let options = DecomposeOptions {
            method: method(kind),
            p,
            beta,
            lambda: (lambda > 0.0).then_some(lambda),
            depth: (depth > 0).then_some(depth),
            tol: (tol > 0.0).then_some(tol),
        };
        let (decomposition, input) = decompose_instance(&inst, &options)?;
        *out = Box::into_raw(Box::new(NclabDecomposition { decomposition, input }));
        Ok(())
    })
}

/// The coefficient bound `lhs <= rhs` of a decomposition.
///
/// # Safety
/// `d` is a valid handle; `lhs` and `rhs` are valid pointers.
#[no_mangle]
pub unsafe extern "C" fn nclab_decomposition_bound(d: *const NclabDecomposition, lhs: *mut f64, rhs: *mut f64) -> NclabStatus {
    guard(|| {
        let d = deref(d, "decomposition")?;
        *out_ref(lhs, "lhs")? = d.decomposition.bound_lhs;
        *out_ref(rhs, "rhs")? = d.decomposition.bound_rhs;
        Ok(())
    })
}

/// # Safety
/// `d` is a valid handle.
#[no_mangle]
pub unsafe extern "C" fn nclab_decomposition_coefficient_count(d: *const NclabDecomposition) -> usize {
    d.as_ref().map_or(0, |d| d.decomposition.coefficients.len())
}

/// Copies up to `len` coefficients into `buf`; returns the number copied.
///
/// # Safety
/// `d` is a valid handle and `buf` points to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn nclab_decomposition_coefficients(d: *const NclabDecomposition, buf: *mut f64, len: usize) -> usize {
    let (Some(d), false) = (d.as_ref(), buf.is_null()) else { return 0 };
    let c = &d.decomposition.coefficients;
    let n = c.len().min(len);
    ptr::copy_nonoverlapping(c.as_ptr(), buf, n);
    n
}

/// `||input - x_1 - sum c_k a_k - residual||_2`.
///
/// # Safety
/// `d` is a valid handle.
#[no_mangle]
pub unsafe extern "C" fn nclab_decomposition_reconstruction_error(d: *const NclabDecomposition) -> f64 {
    d.as_ref().map_or(f64::NAN, |d| d.decomposition.reconstruction_error(&d.input))
}

/// Whether every atom certificate is valid.
///
/// # Safety
/// `d` is a valid handle.
#[no_mangle]
pub unsafe extern "C" fn nclab_decomposition_certificates_valid(d: *const NclabDecomposition) -> bool {
    d.as_ref().is_some_and(|d| d.decomposition.all_certificates_valid())
}

/// The decomposition JSON written by `nclab decompose`; free with
/// [`nclab_string_free`].
///
/// # Safety
/// `d` is a valid handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nclab_decomposition_to_json(d: *const NclabDecomposition, out: *mut *mut c_char) -> NclabStatus {
    guard(|| {
        let d = deref(d, "decomposition")?;
        let out = out_ref(out, "out")?;
        *out = into_c_string(serde_json::to_string(&DecompositionJson::new(&d.decomposition, &d.input)?)?);
        Ok(())
    })
}

/// # Safety
/// `d` is NULL or a decomposition handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nclab_decomposition_free(d: *mut NclabDecomposition) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Runs a suite (or `"all"`) on one family, or on all when `family` is
/// NULL; `trials == 0` uses the suite defaults. Counts rows by outcome.
///
/// # Safety
/// `suite` is a NUL-terminated string, `family` NULL or one, and `passed`,
/// `failed` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn nclab_verify_suite(
    suite: *const c_char,
    family: *const c_char,
    trials: usize,
    seed: u64,
    passed: *mut usize,
    failed: *mut usize,
) -> NclabStatus {
    guard(|| {
        let suite = c_str(suite, "suite")?;
        let families = if family.is_null() { FamilyKind::ALL.to_vec() } else { vec![FamilyKind::parse(c_str(family, "family")?)?] };
        let passed = out_ref(passed, "passed")?;
        let failed = out_ref(failed, "failed")?;
        let report = verify(&[suite.to_string()], &families, (trials > 0).then_some(trials), seed)?;
        *passed = report.aggregate.passed;
        *failed = report.aggregate.failed;
        Ok(())
    })
}
