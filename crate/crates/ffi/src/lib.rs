//! C ABI over the `shapesr` engine.
//!
//! Objects cross the boundary as opaque handles that the caller releases
//! with the matching `*_free` function. Every fallible call returns a
//! [`ShapesrStatus`]; on failure the message is available from
//! [`shapesr_last_error`] until the next failing call on the same thread.
//! Strings returned by the library are owned by the caller and must be
//! released with [`shapesr_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use shapesr::bench::{self, Dataset, ProblemInstance, Split};
use shapesr::experiment::{self, RunResult};
use shapesr::genetics::GpConfig;
use shapesr::interval::ia_eval;
use shapesr::moea::{Algorithm, MoeaConfig};
use shapesr::objectives::{self, Evaluator};
use shapesr::{Expr, Interval, VariableBox};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapesrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    UnknownInstance = 4,
    InvalidArgument = 5,
    BufferTooSmall = 6,
    RunFailed = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapesrAlgorithm {
    Nsga2 = 0,
    Nsga3 = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapesrSplit {
    Train = 0,
    Test = 1,
}

/// Parsed expression tree.
pub struct ShapesrExpr(Expr);

/// Benchmark instance from the built-in catalog.
pub struct ShapesrInstance(ProblemInstance);

/// Generated train/test data of one instance.
pub struct ShapesrDataset(Dataset);

/// Summary of one finished search.
pub struct ShapesrRunResult(RunResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(ShapesrStatus, String);

impl Failure {
    fn new(status: ShapesrStatus, message: impl ToString) -> Self {
        Failure(status, message.to_string())
    }
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> ShapesrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ShapesrStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(&message);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            ShapesrStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure::new(ShapesrStatus::NullPointer, "null handle"))
}

unsafe fn out_ptr<'a, T>(p: *mut T) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| Failure::new(ShapesrStatus::NullPointer, "null output pointer"))
}

unsafe fn read_str<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::new(ShapesrStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(p).to_str().map_err(|e| Failure::new(ShapesrStatus::InvalidUtf8, e))
}

unsafe fn read_slice<'a>(p: *const f64, len: usize) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::new(ShapesrStatus::NullPointer, "null array"));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn write_slice<'a>(p: *mut f64, len: usize) -> Result<&'a mut [f64], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(Failure::new(ShapesrStatus::NullPointer, "null array"));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

fn boxed<T>(value: T) -> *mut T {
    Box::into_raw(Box::new(value))
}

fn to_c_string(s: &str) -> *mut c_char {
    CString::new(s).map_or(ptr::null_mut(), CString::into_raw)
}

fn split_of(split: ShapesrSplit) -> Split {
    match split {
        ShapesrSplit::Train => Split::Train,
        ShapesrSplit::Test => Split::Test,
    }
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn shapesr_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn shapesr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses the canonical prefix form, e.g. `(mul x0 (sin x1))`.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shapesr_expr_parse(text: *const c_char, out: *mut *mut ShapesrExpr) -> ShapesrStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let expr: Expr = read_str(text)?.parse().map_err(|e| Failure::new(ShapesrStatus::Parse, e))?;
        *out = boxed(ShapesrExpr(expr));
        Ok(())
    })
}

/// # Safety
/// `expr` must be NULL or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn shapesr_expr_free(expr: *mut ShapesrExpr) {
    if !expr.is_null() {
        drop(Box::from_raw(expr));
    }
}

/// Canonical prefix form. Release with `shapesr_string_free`.
///
/// # Safety
/// `expr` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shapesr_expr_to_string(expr: *const ShapesrExpr, out: *mut *mut c_char) -> ShapesrStatus {
    guard(|| {
        let e = borrow(expr)?;
        *out_ptr(out)? = to_c_string(&e.0.to_string());
        Ok(())
    })
}

/// Number of nodes.
///
/// # Safety
/// `expr` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shapesr_expr_size(expr: *const ShapesrExpr, out: *mut usize) -> ShapesrStatus {
    guard(|| {
        *out_ptr(out)? = borrow(expr)?.0.size();
        Ok(())
    })
}

/// Evaluates at one point of `len` coordinates. Undefined results are NaN.
///
/// # Safety
/// `point` must hold `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shapesr_expr_eval(
    expr: *const ShapesrExpr,
    point: *const f64,
    len: usize,
    out: *mut f64,
) -> ShapesrStatus {
    guard(|| {
        let e = borrow(expr)?;
        let point = read_slice(point, len)?;
        if e.0.arity() > len {
            return Err(Failure::new(
                ShapesrStatus::InvalidArgument,
                format!("expression uses {} variables, point has {len}", e.0.arity()),
            ));
        }
        *out_ptr(out)? = e.0.eval(point);
        Ok(())
    })
}

/// Enclosure of the expression's range over the box `[lo[i], hi[i]]`.
/// An empty result is reported as NaN bounds.
///
/// # Safety
/// `lo` and `hi` must hold `len` doubles; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn shapesr_expr_eval_interval(
    expr: *const ShapesrExpr,
    lo: *const f64,
    hi: *const f64,
    len: usize,
    out_lo: *mut f64,
    out_hi: *mut f64,
) -> ShapesrStatus {
    guard(|| {
        let e = borrow(expr)?;
        let (lo, hi) = (read_slice(lo, len)?, read_slice(hi, len)?);
        let bounds = lo.iter().zip(hi).map(|(&a, &b)| Interval::new(a, b)).collect();
        let domain = VariableBox::new(bounds).map_err(|e| Failure::new(ShapesrStatus::InvalidArgument, e))?;
        let r = ia_eval(&e.0, &domain);
        let (out_lo, out_hi) = (out_ptr(out_lo)?, out_ptr(out_hi)?);
        *out_lo = r.lo();
        *out_hi = r.hi();
        Ok(())
    })
}

/// Simplified symbolic partial derivative with respect to `x{var}`.
///
/// # Safety
/// `expr` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shapesr_expr_derivative(
    expr: *const ShapesrExpr,
    var: usize,
    out: *mut *mut ShapesrExpr,
) -> ShapesrStatus {
    guard(|| {
        let d = borrow(expr)?.0.differentiate(var).simplified();
        *out_ptr(out)? = boxed(ShapesrExpr(d));
        Ok(())
    })
}

/// # Safety
/// `expr` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shapesr_expr_simplify(expr: *const ShapesrExpr, out: *mut *mut ShapesrExpr) -> ShapesrStatus {
    guard(|| {
        let s = borrow(expr)?.0.simplified();
        *out_ptr(out)? = boxed(ShapesrExpr(s));
        Ok(())
    })
}

/// NMSE in percent, normalized by the population variance of `y`.
///
/// # Safety
/// `y` and `yhat` must hold `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shapesr_nmse(y: *const f64, yhat: *const f64, len: usize, out: *mut f64) -> ShapesrStatus {
    guard(|| {
        let v = objectives::nmse(read_slice(y, len)?, read_slice(yhat, len)?)
            .map_err(|e| Failure::new(ShapesrStatus::InvalidArgument, e))?;
        *out_ptr(out)? = v;
        Ok(())
    })
}

/// Number of built-in benchmark instances.
#[no_mangle]
pub extern "C" fn shapesr_catalog_len() -> usize {
    bench::catalog().len()
}

/// Name of the `index`-th catalog instance. Release with `shapesr_string_free`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shapesr_catalog_name(index: usize, out: *mut *mut c_char) -> ShapesrStatus {
    guard(|| {
        let catalog = bench::catalog();
        let inst = catalog.get(index).ok_or_else(|| {
            Failure::new(ShapesrStatus::InvalidArgument, format!("index {index} out of range"))
        })?;
        *out_ptr(out)? = to_c_string(&inst.name);
        Ok(())
    })
}

/// Looks up an instance by name, case-insensitively.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shapesr_instance_get(name: *const c_char, out: *mut *mut ShapesrInstance) -> ShapesrStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let inst = bench::instance(read_str(name)?).map_err(|e| Failure::new(ShapesrStatus::UnknownInstance, e))?;
        *out = boxed(ShapesrInstance(inst));
        Ok(())
    })
}

/// # Safety
/// `instance` must be NULL or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn shapesr_instance_free(instance: *mut ShapesrInstance) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

/// Number of input variables.
///
/// # Safety
/// `instance` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shapesr_instance_arity(instance: *const ShapesrInstance, out: *mut usize) -> ShapesrStatus {
    guard(|| {
        *out_ptr(out)? = borrow(instance)?.0.arity();
        Ok(())
    })
}

/// Objective count: one data term plus one per constraint.
///
/// # Safety
/// `instance` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shapesr_instance_num_objectives(
    instance: *const ShapesrInstance,
    out: *mut usize,
) -> ShapesrStatus {
    guard(|| {
        *out_ptr(out)? = borrow(instance)?.0.num_objectives();
        Ok(())
    })
}

/// Copy of the instance's ground-truth expression.
///
/// # Safety
/// `instance` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shapesr_instance_ground_truth(
    instance: *const ShapesrInstance,
    out: *mut *mut ShapesrExpr,
) -> ShapesrStatus {
    guard(|| {
        let e = borrow(instance)?.0.ground_truth.clone();
        *out_ptr(out)? = boxed(ShapesrExpr(e));
        Ok(())
    })
}

/// Generates the seeded train/test dataset of an instance.
///
/// # Safety
/// `instance` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shapesr_dataset_generate(
    instance: *const ShapesrInstance,
    seed: u64,
    out: *mut *mut ShapesrDataset,
) -> ShapesrStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let data = bench::generate_dataset(&borrow(instance)?.0, seed)
            .map_err(|e| Failure::new(ShapesrStatus::InvalidArgument, e))?;
        *out = boxed(ShapesrDataset(data));
        Ok(())
    })
}

/// # Safety
/// `dataset` must be NULL or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn shapesr_dataset_free(dataset: *mut ShapesrDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Number of rows in `split`.
///
/// # Safety
/// `dataset` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shapesr_dataset_rows(
    dataset: *const ShapesrDataset,
    split: ShapesrSplit,
    out: *mut usize,
) -> ShapesrStatus {
    guard(|| {
        *out_ptr(out)? = borrow(dataset)?.0.count(split_of(split));
        Ok(())
    })
}

/// Copies the rows of `split`: inputs row-major into `inputs`
/// (`rows * arity` doubles) and targets into `targets` (`rows` doubles).
/// `capacity` is the number of rows the buffers can hold.
///
/// # Safety
/// `inputs` must hold `capacity * arity` doubles and `targets` `capacity`.
#[no_mangle]
pub unsafe extern "C" fn shapesr_dataset_copy(
    dataset: *const ShapesrDataset,
    split: ShapesrSplit,
    inputs: *mut f64,
    targets: *mut f64,
    capacity: usize,
) -> ShapesrStatus {
    guard(|| {
        let data = &borrow(dataset)?.0;
        let which = split_of(split);
        let rows = data.count(which);
        if rows > capacity {
            return Err(Failure::new(
                ShapesrStatus::BufferTooSmall,
                format!("{rows} rows do not fit in {capacity}"),
            ));
        }
        let arity = data.inputs.first().map_or(0, Vec::len);
        let inputs = write_slice(inputs, rows * arity)?;
        let targets = write_slice(targets, rows)?;
        let selected = data.inputs.iter().zip(&data.targets).zip(&data.split).filter(|(_, s)| **s == which);
        for (k, ((row, y), _)) in selected.enumerate() {
            inputs[k * arity..(k + 1) * arity].copy_from_slice(row);
            targets[k] = *y;
        }
        Ok(())
    })
}

/// Objective vector of `expr` on the training rows: NMSE followed by one
/// penalty per constraint. `written` receives the objective count.
///
/// # Safety
/// Handles must be live; `out` must hold `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn shapesr_evaluate(
    expr: *const ShapesrExpr,
    instance: *const ShapesrInstance,
    dataset: *const ShapesrDataset,
    out: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> ShapesrStatus {
    guard(|| {
        let (e, inst, data) = (borrow(expr)?, borrow(instance)?, borrow(dataset)?);
        let evaluator = Evaluator::new(&inst.0, &data.0).map_err(|e| Failure::new(ShapesrStatus::InvalidArgument, e))?;
        let v = evaluator.evaluate(&e.0);
        if v.len() > capacity {
            return Err(Failure::new(
                ShapesrStatus::BufferTooSmall,
                format!("{} objectives do not fit in {capacity}", v.len()),
            ));
        }
        write_slice(out, v.len())?.copy_from_slice(v.values());
        *out_ptr(written)? = v.len();
        Ok(())
    })
}

/// Runs one seeded search with default GP settings. `threads == 0` uses
/// all cores.
///
/// # Safety
/// `instance` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shapesr_run(
    instance: *const ShapesrInstance,
    algorithm: ShapesrAlgorithm,
    seed: u64,
    population_size: usize,
    max_evaluations: usize,
    threads: usize,
    out: *mut *mut ShapesrRunResult,
) -> ShapesrStatus {
    guard(|| {
        let inst = borrow(instance)?;
        let out = out_ptr(out)?;
        let algorithm = match algorithm {
            ShapesrAlgorithm::Nsga2 => Algorithm::Nsga2,
            ShapesrAlgorithm::Nsga3 => Algorithm::Nsga3,
        };
        let config = MoeaConfig { population_size, max_evaluations, threads, ..MoeaConfig::default() };
        let (result, _) = experiment::run_single(&inst.0, algorithm, seed, &GpConfig::default(), &config)
            .map_err(|e| Failure::new(ShapesrStatus::RunFailed, e))?;
        *out = boxed(ShapesrRunResult(result));
        Ok(())
    })
}

/// # Safety
/// `result` must be NULL or a live handle from this library.
#[no_mangle]
pub unsafe extern "C" fn shapesr_run_result_free(result: *mut ShapesrRunResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Training and test NMSE of the reported model.
///
/// # Safety
/// `result` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn shapesr_run_result_nmse(
    result: *const ShapesrRunResult,
    train: *mut f64,
    test: *mut f64,
) -> ShapesrStatus {
    guard(|| {
        let r = &borrow(result)?.0;
        *out_ptr(train)? = r.train_nmse;
        *out_ptr(test)? = r.test_nmse;
        Ok(())
    })
}

/// Feasibility flag, evaluations used and wall-clock seconds.
///
/// # Safety
/// `result` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn shapesr_run_result_stats(
    result: *const ShapesrRunResult,
    feasible: *mut bool,
    evaluations: *mut usize,
    runtime_s: *mut f64,
) -> ShapesrStatus {
    guard(|| {
        let r = &borrow(result)?.0;
        *out_ptr(feasible)? = r.feasible;
        *out_ptr(evaluations)? = r.evaluations;
        *out_ptr(runtime_s)? = r.runtime_s;
        Ok(())
    })
}

/// Copies the constraint penalties of the reported model.
///
/// # Safety
/// `out` must hold `capacity` doubles; `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shapesr_run_result_penalties(
    result: *const ShapesrRunResult,
    out: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> ShapesrStatus {
    guard(|| {
        let p = &borrow(result)?.0.penalties;
        if p.len() > capacity {
            return Err(Failure::new(ShapesrStatus::BufferTooSmall, format!("{} penalties", p.len())));
        }
        write_slice(out, p.len())?.copy_from_slice(p);
        *out_ptr(written)? = p.len();
        Ok(())
    })
}

/// The reported model as a parsed expression handle.
///
/// # Safety
/// `result` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn shapesr_run_result_model(
    result: *const ShapesrRunResult,
    out: *mut *mut ShapesrExpr,
) -> ShapesrStatus {
    guard(|| {
        let expr: Expr = borrow(result)?.0.model.parse().map_err(|e| Failure::new(ShapesrStatus::Parse, e))?;
        *out_ptr(out)? = boxed(ShapesrExpr(expr));
        Ok(())
    })
}
