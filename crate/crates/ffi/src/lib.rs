//! C ABI over `paretocl`.
//!
//! Every fallible function returns a [`PclStatus`]; on failure the message is
//! available from [`pcl_last_error_message`] on the same thread. Handles are
//! opaque and must be released with their `_free` function. Panics never
//! cross the boundary; they surface as `PCL_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use paretocl::contrastive::{loss_neg, loss_pos, ClassBlock, ClassBlockedBatch};
use paretocl::moo::{self, EpoMode, ObjectivePoint, PreferenceVector};
use paretocl::paretolab::{self, Solver, SolverTrace, ToyProblem, ToyRun};
use paretocl::trainer::Model;
use paretocl::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PclStatus {
    Ok = 0,
    NullPointer = 1,
    /// A value failed validation (bad preference, τ ≤ 0, malformed text, ...).
    InvalidArgument = 2,
    Contract = 3,
    Numeric = 4,
    DegenerateEmbedding = 5,
    BatchShape = 6,
    OnOrigin = 7,
    Io = 8,
    Format = 9,
    Data = 10,
    OutOfRange = 11,
    Panic = 12,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PclMode {
    Balance = 0,
    Descent = 1,
    Ls = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PclSolver {
    Ls = 0,
    Epo = 1,
}

/// One step of a toy-lab trace. `mu` is NaN when undefined.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PclToyStep {
    pub step: usize,
    pub f1: f64,
    pub f2: f64,
    pub mu: f64,
    pub ray_gap: f64,
    pub beta: [f64; 2],
    pub mode: PclMode,
}

/// Opaque toy-lab trace.
pub struct PclToyTrace {
    trace: SolverTrace,
}

/// Opaque trained model loaded from a checkpoint.
pub struct PclModel {
    model: Model,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> PclStatus {
    match e {
        Error::Config(_) | Error::Validation { .. } | Error::Usage(_) | Error::Schema(_) => PclStatus::InvalidArgument,
        Error::Contract(_) => PclStatus::Contract,
        Error::Numeric { .. } | Error::Divergence { .. } => PclStatus::Numeric,
        Error::DegenerateEmbedding { .. } => PclStatus::DegenerateEmbedding,
        Error::BatchShape(_) => PclStatus::BatchShape,
        Error::OnOrigin => PclStatus::OnOrigin,
        Error::Io { .. } => PclStatus::Io,
        Error::Format(_) => PclStatus::Format,
        Error::Data(_) => PclStatus::Data,
    }
}

enum Failure {
    Null(&'static str),
    Range(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type Outcome = Result<(), Failure>;

/// Run `body`, converting errors and panics into a status code.
fn guard(body: impl FnOnce() -> Outcome) -> PclStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => PclStatus::Ok,
        Ok(Err(Failure::Null(name))) => {
            set_error(format!("`{name}` is a null pointer"));
            PclStatus::NullPointer
        }
        Ok(Err(Failure::Range(msg))) => {
            set_error(msg);
            PclStatus::OutOfRange
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            PclStatus::Panic
        }
    }
}

unsafe fn slice<'a>(ptr: *const f64, len: usize, name: &'static str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if ptr.is_null() {
        return Err(Failure::Null(name));
    }
    Ok(std::slice::from_raw_parts(ptr, len))
}

unsafe fn slice_mut<'a>(ptr: *mut f64, len: usize, name: &'static str) -> Result<&'a mut [f64], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if ptr.is_null() {
        return Err(Failure::Null(name));
    }
    Ok(std::slice::from_raw_parts_mut(ptr, len))
}

unsafe fn out<'a, T>(ptr: *mut T, name: &'static str) -> Result<&'a mut T, Failure> {
    ptr.as_mut().ok_or(Failure::Null(name))
}

unsafe fn text<'a>(ptr: *const c_char, name: &'static str) -> Result<&'a str, Failure> {
    if ptr.is_null() {
        return Err(Failure::Null(name));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| Failure::Core(Error::validation(name, "not valid UTF-8")))
}

/// Message of the last failure on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pcl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pcl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Non-uniformity μ of losses `l` under preference `r`, both of length `m`.
///
/// # Safety
/// `l` and `r` must point to `m` readable doubles; `out_mu` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pcl_non_uniformity(l: *const f64, r: *const f64, m: usize, out_mu: *mut f64) -> PclStatus {
    guard(|| {
        let point = ObjectivePoint::new(slice(l, m, "l")?.to_vec())?;
        let pref = PreferenceVector::new(slice(r, m, "r")?.to_vec())?;
        *out(out_mu, "out_mu")? = moo::non_uniformity(&point, &pref)?.mu;
        Ok(())
    })
}

/// Writes 1 to `out_flag` when `a` Pareto-dominates `b` (both of length `m`), else 0.
///
/// # Safety
/// `a` and `b` must point to `m` readable doubles; `out_flag` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pcl_dominates(a: *const f64, b: *const f64, m: usize, out_flag: *mut i32) -> PclStatus {
    guard(|| {
        let (a, b) = (slice(a, m, "a")?, slice(b, m, "b")?);
        *out(out_flag, "out_flag")? = i32::from(moo::dominates(a, b));
        Ok(())
    })
}

/// Weights `(t, 1−t)` of the min-norm point between gradients of length `n`.
///
/// # Safety
/// `g1` and `g2` must point to `n` readable doubles; `out_beta` to 2 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn pcl_min_norm_weights(g1: *const f64, g2: *const f64, n: usize, out_beta: *mut f64) -> PclStatus {
    guard(|| {
        let w = moo::min_norm_weights(slice(g1, n, "g1")?, slice(g2, n, "g2")?)?;
        slice_mut(out_beta, 2, "out_beta")?.copy_from_slice(&w.beta);
        Ok(())
    })
}

/// EPO combination weights for two non-negative losses `l[2]`, gradients of
/// length `n` and preference `r[2]`.
///
/// # Safety
/// `l`, `r` and `out_beta` must point to 2 doubles, `g1`/`g2` to `n` doubles,
/// and `out_mode` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pcl_epo_weights(
    l: *const f64,
    g1: *const f64,
    g2: *const f64,
    n: usize,
    r: *const f64,
    eps_balance: f64,
    out_beta: *mut f64,
    out_mode: *mut PclMode,
) -> PclStatus {
    guard(|| {
        let point = ObjectivePoint::new(slice(l, 2, "l")?.to_vec())?;
        let pref = PreferenceVector::new(slice(r, 2, "r")?.to_vec())?;
        let w = moo::epo_weights(&point, slice(g1, n, "g1")?, slice(g2, n, "g2")?, &pref, eps_balance)?;
        slice_mut(out_beta, 2, "out_beta")?.copy_from_slice(&w.beta);
        *out(out_mode, "out_mode")? = match w.mode {
            EpoMode::Balance => PclMode::Balance,
            EpoMode::Descent => PclMode::Descent,
        };
        Ok(())
    })
}

/// Positive and negative contrastive losses of `rows` unit-norm embeddings
/// (row-major, `dim` columns) with class `labels`. Rows are grouped by label
/// in ascending label order. When non-NULL, `grad_pos`/`grad_neg` receive the
/// `rows × dim` gradients in the input row order.
///
/// # Safety
/// `embeddings` must hold `rows·dim` doubles and `labels` `rows` entries;
/// non-NULL gradient buffers must hold `rows·dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn pcl_contrastive_losses(
    embeddings: *const f64,
    labels: *const u32,
    rows: usize,
    dim: usize,
    tau: f64,
    out_pos: *mut f64,
    out_neg: *mut f64,
    grad_pos: *mut f64,
    grad_neg: *mut f64,
) -> PclStatus {
    guard(|| {
        let values = slice(embeddings, rows * dim, "embeddings")?;
        if rows > 0 && labels.is_null() {
            return Err(Failure::Null("labels"));
        }
        let labels: &[u32] = if rows == 0 { &[] } else { std::slice::from_raw_parts(labels, rows) };
        let mut classes: Vec<u32> = labels.to_vec();
        classes.sort_unstable();
        classes.dedup();
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); classes.len()];
        for (i, l) in labels.iter().enumerate() {
            members[classes.binary_search(l).unwrap()].push(i);
        }
        let blocks = classes
            .iter()
            .zip(&members)
            .map(|(&c, ids)| ClassBlock::new(c as usize, ids.iter().map(|&i| values[i * dim..(i + 1) * dim].to_vec()).collect()))
            .collect();
        let batch = ClassBlockedBatch::new(blocks, tau)?;
        let pos = loss_pos(&batch)?;
        let neg = loss_neg(&batch)?;
        *out(out_pos, "out_pos")? = pos.value;
        *out(out_neg, "out_neg")? = neg.value;
        for (ptr, grad) in [(grad_pos, &pos.grad), (grad_neg, &neg.grad)] {
            if ptr.is_null() {
                continue;
            }
            let dst = slice_mut(ptr, rows * dim, "grad")?;
            for (k, ids) in members.iter().enumerate() {
                for (j, &i) in ids.iter().enumerate() {
                    dst[i * dim..(i + 1) * dim].copy_from_slice(&grad[k][j]);
                }
            }
        }
        Ok(())
    })
}

/// Run LS or EPO on the `dim`-dimensional toy problem from a seeded random
/// start of norm at most `max_radius`, with preference `(r1, 1−r1)`.
///
/// # Safety
/// `out_trace` must be writable; the handle is released with [`pcl_toy_trace_free`].
#[no_mangle]
pub unsafe extern "C" fn pcl_toy_run(
    dim: usize,
    solver: PclSolver,
    r1: f64,
    steps: usize,
    step_size: f64,
    eps_balance: f64,
    init_seed: u64,
    max_radius: f64,
    out_trace: *mut *mut PclToyTrace,
) -> PclStatus {
    guard(|| {
        let slot = out(out_trace, "out_trace")?;
        let problem = ToyProblem::new(dim)?;
        let run = ToyRun {
            solver: match solver {
                PclSolver::Ls => Solver::Ls,
                PclSolver::Epo => Solver::Epo,
            },
            r: PreferenceVector::pair(r1)?,
            steps,
            step_size,
            eps_balance,
        };
        let theta0 = paretolab::random_start(dim, max_radius, init_seed);
        let trace = paretolab::run_toy(&problem, &run, &theta0)?;
        *slot = Box::into_raw(Box::new(PclToyTrace { trace }));
        Ok(())
    })
}

/// Number of recorded steps, or 0 for NULL.
///
/// # Safety
/// `trace` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pcl_toy_trace_len(trace: *const PclToyTrace) -> usize {
    trace.as_ref().map_or(0, |t| t.trace.steps.len())
}

/// # Safety
/// `trace` must be a live handle and `out_step` writable.
#[no_mangle]
pub unsafe extern "C" fn pcl_toy_trace_step(trace: *const PclToyTrace, index: usize, out_step: *mut PclToyStep) -> PclStatus {
    guard(|| {
        let t = trace.as_ref().ok_or(Failure::Null("trace"))?;
        let s = t
            .trace
            .steps
            .get(index)
            .ok_or_else(|| Failure::Range(format!("step {index} of {}", t.trace.steps.len())))?;
        *out(out_step, "out_step")? = PclToyStep {
            step: s.step,
            f1: s.f1,
            f2: s.f2,
            mu: s.mu.unwrap_or(f64::NAN),
            ray_gap: s.ray_gap,
            beta: s.beta,
            mode: match s.mode.as_str() {
                "balance" => PclMode::Balance,
                "descent" => PclMode::Descent,
                _ => PclMode::Ls,
            },
        };
        Ok(())
    })
}

/// Objective values after the last step.
///
/// # Safety
/// `trace` must be a live handle and `out_point` must hold 2 doubles.
#[no_mangle]
pub unsafe extern "C" fn pcl_toy_trace_final_point(trace: *const PclToyTrace, out_point: *mut f64) -> PclStatus {
    guard(|| {
        let t = trace.as_ref().ok_or(Failure::Null("trace"))?;
        slice_mut(out_point, 2, "out_point")?.copy_from_slice(&t.trace.final_point);
        Ok(())
    })
}

/// # Safety
/// `trace` must be NULL or a handle from [`pcl_toy_run`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pcl_toy_trace_free(trace: *mut PclToyTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Load a checkpoint written by `paretocl train`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out_model` writable; the
/// handle is released with [`pcl_model_free`].
#[no_mangle]
pub unsafe extern "C" fn pcl_model_load(path: *const c_char, out_model: *mut *mut PclModel) -> PclStatus {
    guard(|| {
        let slot = out(out_model, "out_model")?;
        let model = Model::load(Path::new(text(path, "path")?))?;
        *slot = Box::into_raw(Box::new(PclModel { model }));
        Ok(())
    })
}

/// Embedding dimension, or 0 for NULL.
///
/// # Safety
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pcl_model_embed_dim(model: *const PclModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.encoder.architecture().embed_dim)
}

/// Number of classes, or 0 for NULL.
///
/// # Safety
/// `model` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pcl_model_num_classes(model: *const PclModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.encoder.architecture().classes)
}

unsafe fn infer(model: *const PclModel, text1: *const c_char, text2: *const c_char) -> Result<(Vec<f64>, Vec<f64>), Failure> {
    let m = model.as_ref().ok_or(Failure::Null("model"))?;
    let t1 = text(text1, "text")?;
    let t2 = if text2.is_null() { None } else { Some(text(text2, "text2")?) };
    Ok(m.model.infer(t1, t2)?)
}

/// Unit-norm embedding of `text` (and optional `text2`, may be NULL) into
/// `out`, which must hold exactly the embedding dimension.
///
/// # Safety
/// `model` must be a live handle, strings NUL-terminated, `out` writable for `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pcl_model_embed(
    model: *const PclModel,
    text1: *const c_char,
    text2: *const c_char,
    out_embedding: *mut f64,
    out_len: usize,
) -> PclStatus {
    guard(|| {
        let (e, _) = infer(model, text1, text2)?;
        if out_len != e.len() {
            return Err(Failure::Range(format!("buffer holds {out_len} values, embedding has {}", e.len())));
        }
        slice_mut(out_embedding, out_len, "out_embedding")?.copy_from_slice(&e);
        Ok(())
    })
}

/// Predicted class (ties to the smaller id). When `out_logits` is non-NULL it
/// receives the logits and `logits_len` must equal the class count.
///
/// # Safety
/// `model` must be a live handle, strings NUL-terminated, `out_class` writable,
/// and a non-NULL `out_logits` writable for `logits_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pcl_model_predict(
    model: *const PclModel,
    text1: *const c_char,
    text2: *const c_char,
    out_class: *mut usize,
    out_logits: *mut f64,
    logits_len: usize,
) -> PclStatus {
    guard(|| {
        let (_, logits) = infer(model, text1, text2)?;
        let slot = out(out_class, "out_class")?;
        if !out_logits.is_null() {
            if logits_len != logits.len() {
                return Err(Failure::Range(format!("buffer holds {logits_len} values, model has {} classes", logits.len())));
            }
            slice_mut(out_logits, logits_len, "out_logits")?.copy_from_slice(&logits);
        }
        let mut best = 0;
        for (k, &v) in logits.iter().enumerate() {
            if v > logits[best] {
                best = k;
            }
        }
        *slot = best;
        Ok(())
    })
}

/// # Safety
/// `model` must be NULL or a handle from [`pcl_model_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pcl_model_free(model: *mut PclModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
