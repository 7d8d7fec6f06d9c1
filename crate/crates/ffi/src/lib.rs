//! C ABI for `steinlab`.
//!
//! Every fallible call returns a [`SteinlabStatus`] and writes its result
//! through an out-pointer. On failure a message is available from
//! [`steinlab_last_error`] on the calling thread. Handles are opaque and
//! must be released with the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use steinlab::classify::{classify, Admissibility};
use steinlab::dominate::{sure, DominatorConstruction};
use steinlab::estimator::{GeneralizedBayes, ShrinkageEstimator};
use steinlab::risk::risk_point;
use steinlab::{Error, MarginalEvaluator, MixingParams};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SteinlabStatus {
    Ok = 0,
    InvalidParams = 1,
    Numerical = 2,
    Divergent = 3,
    NullPointer = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SteinlabAdmissibility {
    Inadmissible = 0,
    Admissible = 1,
    AdmissibleBoundary = 2,
    AdmissibleBrownOnly = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SteinlabEstimatorKind {
    Identity = 0,
    JamesStein = 1,
    /// Proper Bayes rule `g/(g+1) x`; the scale is the `g` argument.
    PointPrior = 2,
    GeneralizedBayes = 3,
    ImprovedAverage = 4,
    ImprovedCompanion = 5,
    PositivePartAverage = 6,
}

impl SteinlabEstimatorKind {
    fn from_raw(v: i32) -> Option<Self> {
        use SteinlabEstimatorKind::*;
        [
            Identity,
            JamesStein,
            PointPrior,
            GeneralizedBayes,
            ImprovedAverage,
            ImprovedCompanion,
            PositivePartAverage,
        ]
        .into_iter()
        .find(|k| *k as i32 == v)
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SteinlabVerdict {
    pub admissibility: i32,
    pub minimax: bool,
    pub integral_diverges: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SteinlabRiskPoint {
    pub risk: f64,
    pub se: f64,
    pub mean_sure: f64,
    /// Standard error of the paired difference between loss and SURE.
    pub diff_se: f64,
}

/// Quadrature-backed marginal evaluator.
pub struct SteinlabMarginal {
    ev: MarginalEvaluator,
}

/// Radial shrinkage estimator.
pub struct SteinlabEstimator {
    est: ShrinkageEstimator,
    d: u32,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SteinlabStatus {
    match e {
        Error::InvalidParams(_) | Error::Domain(_) | Error::Config(_) => {
            SteinlabStatus::InvalidParams
        }
        Error::Divergent(_) => SteinlabStatus::Divergent,
        Error::Quadrature { .. } | Error::Singular(_) | Error::ImproperPrior(_) => {
            SteinlabStatus::Numerical
        }
    }
}

/// Runs `f`, recording errors and panics for [`steinlab_last_error`].
fn guard<F: FnOnce() -> Result<(), Error>>(f: F) -> SteinlabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SteinlabStatus::Ok,
        Ok(Err(e)) => {
            set_last_error(&e.to_string());
            status_of(&e)
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(&format!("internal panic: {msg}"));
            SteinlabStatus::Panic
        }
    }
}

macro_rules! require {
    ($($p:expr),+) => {
        if $($p.is_null())||+ {
            set_last_error("null pointer argument");
            return SteinlabStatus::NullPointer;
        }
    };
}

/// Message for the most recent failure on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn steinlab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Creates a marginal evaluator for `π(g; a, b, c)` in dimension `d`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn steinlab_marginal_new(
    d: u32,
    a: f64,
    b: f64,
    c: f64,
    out: *mut *mut SteinlabMarginal,
) -> SteinlabStatus {
    require!(out);
    guard(|| {
        let ev = MarginalEvaluator::with_defaults(MixingParams::new(d, a, b, c)?);
        // SAFETY: checked non-null above; the caller guarantees validity.
        unsafe { *out = Box::into_raw(Box::new(SteinlabMarginal { ev })) };
        Ok(())
    })
}

/// `M_k(w) = ∫ (g+1)^{-d/2-k} exp(-w/(2(g+1))) π(g) dg`.
///
/// # Safety
/// `m` must come from [`steinlab_marginal_new`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn steinlab_marginal_eval(
    m: *const SteinlabMarginal,
    w: f64,
    k: u32,
    out: *mut f64,
) -> SteinlabStatus {
    require!(m, out);
    guard(|| {
        // SAFETY: non-null handle from steinlab_marginal_new.
        let v = unsafe { &*m }.ev.weighted_marginal(w, k)?;
        unsafe { *out = v };
        Ok(())
    })
}

/// `t^{d/2-1} m(t)/π(t)`.
///
/// # Safety
/// As for [`steinlab_marginal_eval`].
#[no_mangle]
pub unsafe extern "C" fn steinlab_marginal_tauberian_ratio(
    m: *const SteinlabMarginal,
    t: f64,
    out: *mut f64,
) -> SteinlabStatus {
    require!(m, out);
    guard(|| {
        let v = unsafe { &*m }.ev.tauberian_ratio(t)?;
        unsafe { *out = v };
        Ok(())
    })
}

/// # Safety
/// `m` must be NULL or a handle from [`steinlab_marginal_new`] that has not
/// been freed.
#[no_mangle]
pub unsafe extern "C" fn steinlab_marginal_free(m: *mut SteinlabMarginal) {
    if !m.is_null() {
        drop(unsafe { Box::from_raw(m) });
    }
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn steinlab_classify(
    d: u32,
    a: f64,
    b: f64,
    c: f64,
    out: *mut SteinlabVerdict,
) -> SteinlabStatus {
    require!(out);
    guard(|| {
        let v = classify(&MixingParams::new(d, a, b, c)?);
        let admissibility = match v.admissibility {
            Admissibility::Inadmissible => SteinlabAdmissibility::Inadmissible,
            Admissibility::Admissible => SteinlabAdmissibility::Admissible,
            Admissibility::AdmissibleBoundary => SteinlabAdmissibility::AdmissibleBoundary,
            Admissibility::AdmissibleBrownOnly => SteinlabAdmissibility::AdmissibleBrownOnly,
        };
        unsafe {
            *out = SteinlabVerdict {
                admissibility: admissibility as i32,
                minimax: v.minimax,
                integral_diverges: v.integral_diverges,
            }
        };
        Ok(())
    })
}

fn build(
    kind: SteinlabEstimatorKind,
    p: MixingParams,
    g: f64,
) -> Result<ShrinkageEstimator, Error> {
    let gb = || -> Result<Arc<GeneralizedBayes>, Error> {
        Ok(Arc::new(GeneralizedBayes::new(
            MarginalEvaluator::with_defaults(p),
        )?))
    };
    let dc = || -> Result<Arc<DominatorConstruction>, Error> {
        Ok(Arc::new(DominatorConstruction::new(gb()?)?))
    };
    Ok(match kind {
        SteinlabEstimatorKind::Identity => ShrinkageEstimator::Identity,
        SteinlabEstimatorKind::JamesStein => ShrinkageEstimator::JamesStein { d: p.d() },
        SteinlabEstimatorKind::PointPrior => ShrinkageEstimator::point_prior(g)?,
        SteinlabEstimatorKind::GeneralizedBayes => ShrinkageEstimator::GeneralizedBayes(gb()?),
        SteinlabEstimatorKind::ImprovedAverage => ShrinkageEstimator::ImprovedAverage(dc()?),
        SteinlabEstimatorKind::ImprovedCompanion => ShrinkageEstimator::ImprovedCompanion(dc()?),
        SteinlabEstimatorKind::PositivePartAverage => {
            ShrinkageEstimator::ImprovedAverage(dc()?).positive_part()
        }
    })
}

/// Creates an estimator. `kind` is a [`SteinlabEstimatorKind`] value; `g`
/// is used only by the point-prior kind.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn steinlab_estimator_new(
    kind: i32,
    d: u32,
    a: f64,
    b: f64,
    c: f64,
    g: f64,
    out: *mut *mut SteinlabEstimator,
) -> SteinlabStatus {
    require!(out);
    guard(|| {
        let kind = SteinlabEstimatorKind::from_raw(kind)
            .ok_or_else(|| Error::InvalidParams(format!("unknown estimator kind {kind}")))?;
        let p = MixingParams::new(d, a, b, c)?;
        let est = build(kind, p, g)?;
        unsafe { *out = Box::into_raw(Box::new(SteinlabEstimator { est, d })) };
        Ok(())
    })
}

/// Shrinkage multiplier `φ(w)` with `δ(x) = φ(‖x‖²) x`.
///
/// # Safety
/// `e` must come from [`steinlab_estimator_new`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn steinlab_estimator_multiplier(
    e: *const SteinlabEstimator,
    w: f64,
    out: *mut f64,
) -> SteinlabStatus {
    require!(e, out);
    guard(|| {
        let v = unsafe { &*e }.est.multiplier(w)?;
        unsafe { *out = v };
        Ok(())
    })
}

/// Writes `δ(x)` for the `len`-vector `x` into `out`.
///
/// # Safety
/// `x` and `out` must each point to `len` doubles; they may alias.
#[no_mangle]
pub unsafe extern "C" fn steinlab_estimator_apply(
    e: *const SteinlabEstimator,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> SteinlabStatus {
    require!(e, x, out);
    guard(|| {
        let input = unsafe { std::slice::from_raw_parts(x, len) }.to_vec();
        let v = unsafe { &*e }.est.estimate(&input)?;
        unsafe { ptr::copy_nonoverlapping(v.as_ptr(), out, len) };
        Ok(())
    })
}

/// Pointwise SURE at `w`; `at_kink` is set for a positive-part multiplier
/// that is exactly zero.
///
/// # Safety
/// `e` must come from [`steinlab_estimator_new`]; `out` and `at_kink` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn steinlab_estimator_sure(
    e: *const SteinlabEstimator,
    w: f64,
    out: *mut f64,
    at_kink: *mut bool,
) -> SteinlabStatus {
    require!(e, out, at_kink);
    guard(|| {
        let h = unsafe { &*e };
        let s = sure(&h.est, w, h.d)?;
        unsafe {
            *out = s.value;
            *at_kink = s.at_kink;
        }
        Ok(())
    })
}

/// Monte Carlo risk at `‖μ‖ = mu_norm` with `n ≥ 1000` draws.
///
/// # Safety
/// `e` must come from [`steinlab_estimator_new`]; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn steinlab_mc_risk(
    e: *const SteinlabEstimator,
    mu_norm: f64,
    n: usize,
    seed: u64,
    out: *mut SteinlabRiskPoint,
) -> SteinlabStatus {
    require!(e, out);
    guard(|| {
        let h = unsafe { &*e };
        let p = risk_point(&h.est, mu_norm, h.d, n, seed)?;
        unsafe {
            *out = SteinlabRiskPoint {
                risk: p.risk,
                se: p.se,
                mean_sure: p.mean_sure,
                diff_se: p.diff_se,
            }
        };
        Ok(())
    })
}

/// # Safety
/// `e` must be NULL or a handle from [`steinlab_estimator_new`] that has not
/// been freed.
#[no_mangle]
pub unsafe extern "C" fn steinlab_estimator_free(e: *mut SteinlabEstimator) {
    if !e.is_null() {
        drop(unsafe { Box::from_raw(e) });
    }
}
